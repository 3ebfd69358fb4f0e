//! Quasiregular maps that interpolate between power maps of increasing degree
//! on a nested sequence of annuli, with tools to check their distortion,
//! singular data and wandering-domain dynamics numerically.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod folding;
pub mod globalmap;
pub mod logpoint;
pub mod scalar;
pub mod sequences;

pub use error::{Error, Result};
pub use logpoint::LogPoint;
pub use scalar::Real;

pub type LogPoint64 = LogPoint<f64>;
pub type LogPoint32 = LogPoint<f32>;
pub type Params64 = sequences::Params<f64>;
pub type Params32 = sequences::Params<f32>;
