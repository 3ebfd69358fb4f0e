//! The global map `h`: power maps `c_j z^{M_j}` on the power annuli, glued by
//! the interpolations `g_{M_j, M_{j+1}, r_j, c_j}` on the annuli
//! `r_j <= |z| <= r_j exp(pi/M_j)`.
//!
//! Only the materialized prefix `j = 1..=J` is evaluated. With `J` degrees and
//! `J` radii there are `J - 1` interpolation annuli; the last power annulus is
//! closed at `r_J` and everything beyond it is [`RegionKind::BeyondTruncation`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::folding::{branched_data, AnnulusMap, FoldPiece};
use crate::logpoint::LogPoint;
use crate::scalar::{int, Real};
use crate::sequences::{Mode, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionKind {
    /// `|z| <= r_n` for a truncated map `h_n`.
    InnerDisk,
    PowerAnnulus(usize),
    InterpAnnulus(usize),
    BeyondTruncation,
    OutsideDisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegionTag {
    pub kind: RegionKind,
    /// 1-based sector, interpolation annuli only.
    pub sector: Option<usize>,
    pub in_fold_support: Option<bool>,
}

impl RegionTag {
    fn plain(kind: RegionKind) -> Self {
        Self {
            kind,
            sector: None,
            in_fold_support: None,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            RegionKind::InnerDisk => "inner-disk".into(),
            RegionKind::PowerAnnulus(j) => format!("power-{j}"),
            RegionKind::InterpAnnulus(j) => format!("interp-{j}"),
            RegionKind::BeyondTruncation => "beyond-truncation".into(),
            RegionKind::OutsideDisk => "outside-disk".into(),
        }
    }
}

/// Region of `z` by modulus alone.
///
/// `|z| = r_j` belongs to `InterpAnnulus(j)`, `|z| = r_j exp(pi/M_j)` to
/// `PowerAnnulus(j+1)`, and `|z| = r_J` to `PowerAnnulus(J)`.
pub fn classify<T: Real>(z: LogPoint<T>, p: &Params<T>) -> RegionKind {
    let l = z.log_mod;
    if let Mode::Disk { log_r_inf } = p.mode() {
        if l > log_r_inf {
            return RegionKind::OutsideDisk;
        }
    }
    let depth = p.depth();
    if l > p.log_radius(depth) || l.is_nan() {
        return RegionKind::BeyondTruncation;
    }
    for j in 1..depth {
        if l < p.log_radius(j) {
            return RegionKind::PowerAnnulus(j);
        }
        if l < p.log_outer_radius(j) {
            return RegionKind::InterpAnnulus(j);
        }
    }
    RegionKind::PowerAnnulus(depth)
}

/// A critical point of `h` in annulus `j`, with the indices of its slit vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint<T> {
    pub annulus: usize,
    pub k: u64,
    pub l: u64,
    pub point: LogPoint<T>,
    /// Sign of the critical value `+-c_j r_j^{M_j}` it is sent to.
    pub sign: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero<T> {
    /// `0` for the origin.
    pub annulus: usize,
    pub k: u64,
    pub l: u64,
    pub point: LogPoint<T>,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue<T> {
    pub annulus: usize,
    pub plus: LogPoint<T>,
    pub minus: LogPoint<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularData<T> {
    pub critical_points: Vec<CriticalPoint<T>>,
    pub critical_values: Vec<CriticalValue<T>>,
    pub zeros: Vec<Zero<T>>,
}

impl<T: Real> SingularData<T> {
    pub fn critical_points_in(&self, j: usize) -> impl Iterator<Item = &CriticalPoint<T>> {
        self.critical_points.iter().filter(move |c| c.annulus == j)
    }
}

/// Evaluated `h` with the region and, inside an interpolation annulus, the
/// smooth piece of the folding construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation<T> {
    pub value: LogPoint<T>,
    pub tag: RegionTag,
    pub piece: Option<FoldPiece>,
}

/// `h` for a fixed parameter set, with one precomputed interpolation per annulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalMap<T> {
    params: Params<T>,
    annuli: Vec<AnnulusMap<T>>,
}

impl<T: Real> GlobalMap<T> {
    pub fn new(params: Params<T>) -> Result<Self> {
        let annuli = (1..params.depth())
            .map(|j| {
                AnnulusMap::new(
                    params.degree(j),
                    params.degree(j + 1),
                    params.log_radius(j),
                    params.scaling_constant(j),
                )
            })
            .collect::<Result<_>>()?;
        Ok(Self { params, annuli })
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    /// Interpolation of annulus `j`, `1 <= j < J`.
    pub fn annulus(&self, j: usize) -> &AnnulusMap<T> {
        &self.annuli[j - 1]
    }

    pub fn annuli(&self) -> &[AnnulusMap<T>] {
        &self.annuli
    }

    /// `c_j z^{M_j}`.
    pub fn power(&self, j: usize, z: LogPoint<T>) -> LogPoint<T> {
        self.params.scaling_constant(j) * z.powu(self.params.degree(j))
    }

    pub fn classify(&self, z: LogPoint<T>) -> RegionKind {
        classify(z, &self.params)
    }

    /// Full tag, including sector and fold-support membership.
    pub fn tag(&self, z: LogPoint<T>) -> RegionTag {
        match self.evaluate(z) {
            Ok(e) => e.tag,
            Err(_) => RegionTag::plain(self.classify(z)),
        }
    }

    pub fn h(&self, z: LogPoint<T>) -> Result<LogPoint<T>> {
        self.evaluate(z).map(|e| e.value)
    }

    pub fn evaluate(&self, z: LogPoint<T>) -> Result<Evaluation<T>> {
        let kind = self.classify(z);
        match kind {
            RegionKind::PowerAnnulus(j) => Ok(Evaluation {
                value: self.power(j, z),
                tag: RegionTag::plain(kind),
                piece: None,
            }),
            RegionKind::InterpAnnulus(j) => {
                let g = self.annulus(j);
                let value = g.eval(z, None)?;
                let trace = g.trace(z, Some(crate::folding::Side::Below))?;
                Ok(Evaluation {
                    value,
                    tag: RegionTag {
                        kind,
                        sector: Some(trace.sector),
                        in_fold_support: Some(trace.in_fold_support),
                    },
                    piece: Some(trace.piece),
                })
            }
            _ => Err(Error::OutsideDomain { tag: RegionTag::plain(kind).label() }),
        }
    }

    /// The truncated model `h_n`: `c_n z^{M_n}` on `|z| <= r_n`, `h` elsewhere.
    pub fn h_truncated(&self, z: LogPoint<T>, n_cut: usize) -> Result<LogPoint<T>> {
        self.evaluate_truncated(z, n_cut).map(|e| e.value)
    }

    pub fn evaluate_truncated(&self, z: LogPoint<T>, n_cut: usize) -> Result<Evaluation<T>> {
        if n_cut > self.params.depth() {
            return Err(Error::InvalidParameter(format!(
                "truncation index {n_cut} exceeds depth {}",
                self.params.depth()
            )));
        }
        if n_cut > 0 && (z.is_origin() || z.log_mod < self.params.log_radius(n_cut)) {
            return Ok(Evaluation {
                value: self.power(n_cut, z),
                tag: RegionTag::plain(RegionKind::InnerDisk),
                piece: None,
            });
        }
        self.evaluate(z)
    }

    /// `log r_inf` in disk mode.
    pub fn disk_mode_domain(&self) -> Result<T> {
        disk_mode_domain(&self.params)
    }

    pub fn singular_data(&self) -> Result<SingularData<T>> {
        singular_data(&self.params)
    }
}

pub fn disk_mode_domain<T: Real>(p: &Params<T>) -> Result<T> {
    match p.mode() {
        Mode::Disk { log_r_inf } => Ok(log_r_inf),
        Mode::Plane => Err(Error::ModeMismatch),
    }
}

/// Critical points, critical values and zeros of `h` on the materialized
/// annuli; annulus `j` interpolates `M_j` to `M_{j+1}` at `r_j`.
pub fn singular_data<T: Real>(p: &Params<T>) -> Result<SingularData<T>> {
    let mut out = SingularData {
        critical_points: Vec::new(),
        critical_values: Vec::new(),
        zeros: vec![Zero {
            annulus: 0,
            k: 0,
            l: 0,
            point: LogPoint::origin(),
            multiplicity: p.degree(1),
        }],
    };
    for j in 1..p.depth() {
        let d = branched_data(
            p.degree(j),
            p.degree(j + 1),
            p.log_radius(j),
            p.scaling_constant(j),
        )?;
        out.critical_points.extend(d.branched_points.iter().map(|v| CriticalPoint {
            annulus: j,
            k: v.k,
            l: v.l,
            point: v.point,
            sign: v.sign,
        }));
        out.zeros.extend(d.zeros.iter().map(|v| Zero {
            annulus: j,
            k: v.k,
            l: v.l,
            point: v.point,
            multiplicity: 1,
        }));
        out.critical_values.push(CriticalValue {
            annulus: j,
            plus: d.branched_values.0,
            minus: d.branched_values.1,
        });
    }
    Ok(out)
}

/// `log |c_j r_j^{M_j}|`, the modulus of the critical values of annulus `j`.
pub fn critical_value_log_mod<T: Real>(p: &Params<T>, j: usize) -> T {
    p.scaling_constant(j).log_mod + int::<T>(p.degree(j)) * p.log_radius(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::generate_standard_family;
    use num_complex::Complex;
    use std::f64::consts::PI;

    fn standard(depth: usize) -> GlobalMap<f64> {
        GlobalMap::new(generate_standard_family(2, 2, depth, LogPoint::one()).unwrap()).unwrap()
    }

    #[test]
    fn classify_examples() {
        let g = standard(3);
        let p = g.params();
        assert_eq!(g.classify(LogPoint::one()), RegionKind::PowerAnnulus(1));
        assert_eq!(g.classify(LogPoint::origin()), RegionKind::PowerAnnulus(1));
        assert_eq!(g.classify(LogPoint::new(PI, 0.0)), RegionKind::InterpAnnulus(1));
        assert_eq!(
            g.classify(LogPoint::new(p.log_outer_radius(1), 0.0)),
            RegionKind::PowerAnnulus(2)
        );
        assert_eq!(g.classify(LogPoint::new(6.0 * PI, 0.0)), RegionKind::PowerAnnulus(3));
        assert_eq!(
            g.classify(LogPoint::new(6.0 * PI + PI / 8.0 + 0.1, 0.0)),
            RegionKind::BeyondTruncation
        );
    }

    #[test]
    fn h_examples() {
        let g = standard(3);
        assert_eq!(g.params().log_radii(), &[PI, 2.0 * PI, 6.0 * PI]);
        assert!(g.h(LogPoint::one()).unwrap().log_distance(&LogPoint::one()) < 1e-15);
        assert!(g.h(LogPoint::origin()).unwrap().is_origin());
        let v = g.h(LogPoint::new(PI, 0.0)).unwrap();
        assert!((v.log_mod - 2.0 * PI).abs() < 1e-12 && v.arg.abs() < 1e-12);
        assert!(matches!(
            g.h(LogPoint::new(100.0, 0.0)),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn outer_boundary_matches_next_power() {
        let g = standard(4);
        for j in 1..4 {
            let lo = g.params().log_outer_radius(j);
            for k in 0..1000 {
                let z = LogPoint::new(lo, -PI + 2.0 * PI * (k as f64 + 0.5) / 1000.0);
                let via_g = g.annulus(j).eval(z, None).unwrap();
                assert!(via_g.log_distance(&g.power(j + 1, z)) < 1e-9);
            }
        }
    }

    #[test]
    fn truncated_examples() {
        let g = standard(3);
        let z = LogPoint::new(1.0, 0.4);
        assert_eq!(g.h_truncated(z, 0).unwrap(), g.h(z).unwrap());
        let v = g.h_truncated(z, 2).unwrap();
        assert!(v.log_distance(&g.power(2, z)) < 1e-15);
        for k in 0..1000 {
            let z = LogPoint::new(2.0 * PI, -PI + 2.0 * PI * k as f64 / 1000.0);
            let inside = g.power(2, z);
            assert!(inside.log_distance(&g.h_truncated(z, 2).unwrap()) < 1e-9);
        }
        assert!(g.h_truncated(z, 9).is_err());
    }

    #[test]
    fn singular_data_standard_family() {
        let g = standard(3);
        let s = g.singular_data().unwrap();
        let first: Vec<_> = s.critical_points_in(1).collect();
        assert_eq!(first.len(), 2);
        assert!(first[0].point.log_distance(&LogPoint::new(PI, PI / 2.0)) < 1e-14);
        assert!(first[1].point.log_distance(&LogPoint::new(PI, -PI / 2.0)) < 1e-14);
        assert_eq!(s.critical_points_in(2).count(), 4);
        let cv = s.critical_values[0];
        assert!(cv.plus.log_distance(&LogPoint::new(2.0 * PI, 0.0)) < 1e-14);
        assert!(cv.minus.log_distance(&LogPoint::new(2.0 * PI, PI)) < 1e-14);
        assert_eq!(s.zeros[0].multiplicity, 2);
        assert!(s.zeros[0].point.is_origin());
        for c in &s.critical_points {
            let v = g.h(c.point).unwrap();
            let target = if c.sign > 0 {
                s.critical_values[c.annulus - 1].plus
            } else {
                s.critical_values[c.annulus - 1].minus
            };
            assert!(v.log_distance(&target) < 1e-8, "{c:?} -> {v:?}");
        }
    }

    #[test]
    fn disk_mode() {
        let radii: Vec<f64> = (1..=4).map(|j| 2.0 - 0.5f64.powi(j)).collect();
        let p = Params::from_plain(
            vec![32, 64, 128, 256],
            &radii,
            Complex::new(1.0, 0.0),
            Mode::Disk { log_r_inf: 2f64.ln() },
        )
        .unwrap();
        let g = GlobalMap::new(p).unwrap();
        assert!((g.disk_mode_domain().unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(g.classify(LogPoint::new(3f64.ln(), 0.0)), RegionKind::OutsideDisk);
        assert_eq!(standard(2).disk_mode_domain(), Err(Error::ModeMismatch));
    }
}
