//! Numerical distortion analysis: Beltrami coefficients by finite differences,
//! sampled dilatation reports, the summability bound and winding numbers.
//!
//! Every estimate here is a sampled lower bound or a floating point
//! certificate, not a rigorous enclosure.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::folding::{
    build_cell, in_fold_support, mobius, sigma, AnnulusMap, CellMap, FoldPiece, StripPiece,
};
use crate::globalmap::{GlobalMap, RegionKind, RegionTag};
use crate::logpoint::LogPoint;
use crate::scalar::{exp_m1_complex, int, lit, normalize_angle, to_f64, Real};
use crate::sequences::{GrowthRule, Params, Summability};

/// Identifies the smooth piece of a piecewise-defined map containing a point.
///
/// Two points with equal ids are joined by a region where the map has a
/// single smooth formula (up to the sampling resolution).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PieceId {
    pub region: Option<RegionKind>,
    pub fold: Option<FoldPiece>,
    pub strip: Option<StripPiece>,
    pub branch: i8,
}

impl PieceId {
    fn region(kind: RegionKind) -> Self {
        Self {
            region: Some(kind),
            fold: None,
            strip: None,
            branch: 0,
        }
    }
}

/// A map that can be evaluated and probed for its smooth pieces.
pub trait Map<T: Real>: Sync {
    fn eval(&self, z: LogPoint<T>) -> Result<LogPoint<T>>;

    /// `None` when `z` sits on a seam or outside the domain.
    fn piece(&self, z: LogPoint<T>) -> Option<PieceId>;

    fn tag(&self, _z: LogPoint<T>) -> Option<RegionTag> {
        None
    }
}

impl<T: Real> Map<T> for GlobalMap<T> {
    fn eval(&self, z: LogPoint<T>) -> Result<LogPoint<T>> {
        self.h(z)
    }

    fn piece(&self, z: LogPoint<T>) -> Option<PieceId> {
        let e = self.evaluate(z).ok()?;
        Some(PieceId {
            region: Some(e.tag.kind),
            fold: e.piece,
            strip: None,
            branch: 0,
        })
    }

    fn tag(&self, z: LogPoint<T>) -> Option<RegionTag> {
        Some(GlobalMap::tag(self, z))
    }
}

/// `h_n` as a [`Map`].
pub struct Truncated<'a, T> {
    pub map: &'a GlobalMap<T>,
    pub n_cut: usize,
}

impl<T: Real> Map<T> for Truncated<'_, T> {
    fn eval(&self, z: LogPoint<T>) -> Result<LogPoint<T>> {
        self.map.h_truncated(z, self.n_cut)
    }

    fn piece(&self, z: LogPoint<T>) -> Option<PieceId> {
        let e = self.map.evaluate_truncated(z, self.n_cut).ok()?;
        Some(PieceId {
            region: Some(e.tag.kind),
            fold: e.piece,
            strip: None,
            branch: 0,
        })
    }

    fn tag(&self, z: LogPoint<T>) -> Option<RegionTag> {
        self.map.evaluate_truncated(z, self.n_cut).ok().map(|e| e.tag)
    }
}

/// The single-annulus interpolation, extended by its power maps.
impl<T: Real> Map<T> for AnnulusMap<T> {
    fn eval(&self, z: LogPoint<T>) -> Result<LogPoint<T>> {
        self.eval_extended(z)
    }

    fn piece(&self, z: LogPoint<T>) -> Option<PieceId> {
        if z.is_origin() || z.log_mod < self.log_r() {
            return Some(PieceId::region(RegionKind::PowerAnnulus(1)));
        }
        if z.log_mod > self.log_outer() {
            return Some(PieceId::region(RegionKind::PowerAnnulus(2)));
        }
        let t = self.trace(z, None).ok()?;
        Some(PieceId {
            region: Some(RegionKind::InterpAnnulus(1)),
            fold: Some(t.piece),
            strip: None,
            branch: 0,
        })
    }
}

/// `z -> c z^n`.
pub struct Power<T> {
    pub c: LogPoint<T>,
    pub n: u64,
}

impl<T: Real> Map<T> for Power<T> {
    fn eval(&self, z: LogPoint<T>) -> Result<LogPoint<T>> {
        Ok(self.c * z.powu(self.n))
    }

    fn piece(&self, _z: LogPoint<T>) -> Option<PieceId> {
        Some(PieceId::region(RegionKind::PowerAnnulus(1)))
    }
}

/// The fold map on `|z| >= 1`.
pub struct Sigma;

impl<T: Real> Map<T> for Sigma {
    fn eval(&self, z: LogPoint<T>) -> Result<LogPoint<T>> {
        sigma(z.to_complex()).map(LogPoint::from_complex)
    }

    fn piece(&self, z: LogPoint<T>) -> Option<PieceId> {
        if z.log_mod <= T::zero() {
            return None;
        }
        let phi = mobius(z.to_complex()).arg();
        let branch = if phi.abs() <= T::FRAC_PI_4() {
            0
        } else if phi > T::zero() {
            1
        } else {
            -1
        };
        Some(PieceId {
            region: None,
            fold: None,
            strip: None,
            branch,
        })
    }
}

/// The unfolding `psi_m` acting on the strip in plain coordinates.
pub struct Psi<T> {
    pub cell: CellMap<T>,
}

impl<T: Real> Psi<T> {
    pub fn new(m: u64) -> Result<Self> {
        Ok(Self {
            cell: build_cell(m)?,
        })
    }
}

impl<T: Real> Map<T> for Psi<T> {
    fn eval(&self, z: LogPoint<T>) -> Result<LogPoint<T>> {
        self.cell
            .psi(z.to_complex(), None)
            .map(LogPoint::from_complex)
    }

    fn piece(&self, z: LogPoint<T>) -> Option<PieceId> {
        let (_, strip) = self.cell.psi_traced(z.to_complex(), None).ok()?;
        Some(PieceId {
            region: None,
            fold: None,
            strip: Some(strip),
            branch: 0,
        })
    }
}

/// `eta_{n,m}` on `1 <= |z| <= exp(pi/n)`.
pub struct Eta<T> {
    pub n: u64,
    pub cell: CellMap<T>,
}

impl<T: Real> Eta<T> {
    pub fn new(n: u64, m: u64) -> Result<Self> {
        Ok(Self {
            n,
            cell: build_cell(m)?,
        })
    }

    fn unfold(&self, z: LogPoint<T>) -> Complex<T> {
        let s = int::<T>(self.n) / T::PI();
        Complex::new(z.log_mod * s, crate::scalar::angle_0_2pi(z.arg) * s)
    }
}

impl<T: Real> Map<T> for Eta<T> {
    fn eval(&self, z: LogPoint<T>) -> Result<LogPoint<T>> {
        let zeta = self.cell.psi(self.unfold(z), None)?;
        let scale = T::PI() / int::<T>(self.n);
        Ok(LogPoint::new(zeta.re * scale, zeta.im * scale))
    }

    fn piece(&self, z: LogPoint<T>) -> Option<PieceId> {
        let (_, strip) = self.cell.psi_traced(self.unfold(z), None).ok()?;
        Some(PieceId {
            region: None,
            fold: None,
            strip: Some(strip),
            branch: 0,
        })
    }
}

/// Finite-difference estimate of the Beltrami coefficient at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeltramiSample<T> {
    pub point: LogPoint<T>,
    pub mu: Complex<T>,
    pub k_local: T,
    /// Step relative to `|z|`.
    pub step: T,
    pub tag: Option<RegionTag>,
}

/// `z (1 + u e^{-i arg z})`: the flat chart `z + |z| u` around `z`.
fn chart_point<T: Real>(z: LogPoint<T>, u: Complex<T>) -> LogPoint<T> {
    let rot = Complex::from_polar(T::one(), -z.arg);
    let w = Complex::new(T::one(), T::zero()) + u * rot;
    z * LogPoint::from_complex(w)
}

/// Central-difference Wirtinger derivatives in the chart `z + |z| u`, applied
/// to `f / f(z) - 1`. The relative `step` must keep the stencil (and a
/// margin of `2 step`) inside a single smooth piece.
pub fn beltrami_estimate<T: Real, M: Map<T> + ?Sized>(
    map: &M,
    z: LogPoint<T>,
    step: T,
) -> Result<BeltramiSample<T>> {
    if z.is_origin() {
        return Err(Error::DegenerateDerivative);
    }
    let f0 = map.eval(z)?;
    if f0.is_origin() || !f0.log_mod.is_finite() {
        return Err(Error::DegenerateDerivative);
    }
    let here = map.piece(z).ok_or(Error::TooCloseToBoundary)?;
    let two: T = lit(2.0);
    for k in 0..8 {
        let th = T::FRAC_PI_4() * int::<T>(k);
        let probe = chart_point(z, Complex::from_polar(two * step, th));
        if map.piece(probe) != Some(here) {
            return Err(Error::TooCloseToBoundary);
        }
    }
    let rel = |u: Complex<T>| -> Result<Complex<T>> {
        let f = map
            .eval(chart_point(z, u))
            .map_err(|_| Error::TooCloseToBoundary)?;
        Ok(exp_m1_complex(
            f.log_mod - f0.log_mod,
            normalize_angle(f.arg - f0.arg),
        ))
    };
    let zero = T::zero();
    let fx = (rel(Complex::new(step, zero))? - rel(Complex::new(-step, zero))?) / (two * step);
    let fy = (rel(Complex::new(zero, step))? - rel(Complex::new(zero, -step))?) / (two * step);
    let i = Complex::new(zero, T::one());
    let fz = (fx - i * fy) / two;
    let fzb = (fx + i * fy) / two;
    if fz.norm() < lit(1e-14) {
        return Err(Error::DegenerateDerivative);
    }
    let mu = fzb / fz;
    let a = mu.norm();
    Ok(BeltramiSample {
        point: z,
        mu,
        k_local: (T::one() + a) / (T::one() - a),
        step,
        tag: map.tag(z),
    })
}

/// Maximum sampled dilatation on one annulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusDilatation<T> {
    pub kind: RegionKind,
    pub n: u64,
    pub big_m: u64,
    pub max_k: T,
    pub samples: usize,
    pub discards: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilatationReport<T> {
    pub annuli: Vec<AnnulusDilatation<T>>,
    /// Sampled lower bound for the essential supremum of the dilatation.
    pub k_hat: T,
}

impl<T: Real> DilatationReport<T> {
    pub fn interp(&self) -> impl Iterator<Item = &AnnulusDilatation<T>> {
        self.annuli
            .iter()
            .filter(|a| matches!(a.kind, RegionKind::InterpAnnulus(_)))
    }
}

fn grid_side(samples: usize) -> usize {
    (((samples.max(2) as f64) / 2.0).sqrt().ceil() as usize).max(1)
}

/// Tries the step, then two smaller ones; `None` discards the sample.
fn shrinking_estimate<T: Real>(map: &GlobalMap<T>, z: LogPoint<T>, step: T) -> Option<T> {
    let mut s = step;
    for _ in 0..3 {
        match beltrami_estimate(map, z, s) {
            Ok(b) if b.k_local.is_finite() => return Some(b.k_local),
            Ok(_) | Err(Error::DegenerateDerivative) => return None,
            Err(_) => s = s / lit(10.0),
        }
    }
    None
}

fn max_over<T: Real>(map: &GlobalMap<T>, points: Vec<LogPoint<T>>, step: T) -> (T, usize, usize) {
    let ks: Vec<Option<T>> = points
        .par_iter()
        .map(|&z| shrinking_estimate(map, z, step))
        .collect();
    let discards = ks.iter().filter(|k| k.is_none()).count();
    let max_k = ks.iter().flatten().fold(T::one(), |a, &b| a.max(b));
    (max_k, ks.len(), discards)
}

/// Per-annulus sampled dilatation.
///
/// Each interpolation annulus is sampled on the same local grid in unfolding
/// coordinates in every sector: `s x 2s` cell midpoints with
/// `s = ceil(sqrt(samples_per_annulus / 2))`, so annuli of equal shape
/// `(M_j, M_{j+1})` up to scale see identical sample sets, and tripling
/// `s` yields a superset. Power annuli use the same grid in `(log |z|, arg)`.
pub fn dilatation_report<T: Real>(p: &Params<T>, samples_per_annulus: usize) -> Result<DilatationReport<T>> {
    let map = GlobalMap::new(p.clone())?;
    let s = grid_side(samples_per_annulus);
    let mid = |i: usize, count: usize| (int::<T>(i as u64) + lit(0.5)) / int::<T>(count as u64);
    let base_step: T = lit(1e-5);
    let mut annuli = Vec::new();

    for j in 1..=p.depth() {
        let n = p.degree(j);
        let lo = if j == 1 {
            p.log_radius(1) - T::one()
        } else {
            p.log_outer_radius(j - 1)
        };
        let hi = p.log_radius(j);
        let mut pts = Vec::with_capacity(2 * s * s);
        for a in 0..s {
            for b in 0..2 * s {
                let l = lo + (hi - lo) * mid(a, s);
                let th = -T::PI() + T::TAU() * mid(b, 2 * s);
                pts.push(LogPoint::new(l, th));
            }
        }
        let (max_k, samples, discards) = max_over(&map, pts, base_step);
        annuli.push(AnnulusDilatation {
            kind: RegionKind::PowerAnnulus(j),
            n,
            big_m: n,
            max_k,
            samples,
            discards,
        });

        if j < p.depth() {
            let big_m = p.degree(j + 1);
            let width = T::PI() / int::<T>(n);
            let mut pts = Vec::with_capacity(2 * s * s * n as usize);
            for k in 0..n {
                for a in 0..s {
                    for b in 0..2 * s {
                        let x = mid(a, s);
                        let y = int::<T>(2 * k) + lit::<T>(2.0) * mid(b, 2 * s);
                        pts.push(LogPoint::new(p.log_radius(j) + width * x, width * y));
                    }
                }
            }
            // uniform step in unfolding coordinates
            let (max_k, samples, discards) = max_over(&map, pts, base_step * width);
            annuli.push(AnnulusDilatation {
                kind: RegionKind::InterpAnnulus(j),
                n,
                big_m,
                max_k,
                samples,
                discards,
            });
        }
    }
    let k_hat = annuli.iter().fold(T::one(), |a, r| a.max(r.max_k));
    Ok(DilatationReport { annuli, k_hat })
}

/// Outcome of a sweep of `|mu|` over a log-polar grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationScan<T> {
    pub samples: usize,
    pub discards: usize,
    /// Samples with `|mu| > threshold`.
    pub distorted: usize,
    /// Distorted samples outside every interpolation annulus.
    pub misplaced: Vec<LogPoint<T>>,
    pub max_mu: T,
}

/// Samples `|mu|` of `h` on an `nx x ny` grid of `(log |z|, arg)` over
/// `[log_lo, log_hi] x (-pi, pi]`.
pub fn localization_scan<T: Real>(
    map: &GlobalMap<T>,
    nx: usize,
    ny: usize,
    log_lo: T,
    log_hi: T,
    threshold: T,
) -> LocalizationScan<T> {
    let pts: Vec<LogPoint<T>> = (0..nx)
        .flat_map(|a| (0..ny).map(move |b| (a, b)))
        .map(|(a, b)| {
            let fa = (int::<T>(a as u64) + lit(0.5)) / int::<T>(nx as u64);
            let fb = (int::<T>(b as u64) + lit(0.5)) / int::<T>(ny as u64);
            LogPoint::new(log_lo + (log_hi - log_lo) * fa, -T::PI() + T::TAU() * fb)
        })
        .collect();
    let res: Vec<Option<BeltramiSample<T>>> = pts
        .par_iter()
        .map(|&z| beltrami_estimate(map, z, lit(1e-5)).ok())
        .collect();
    let mut scan = LocalizationScan {
        samples: res.len(),
        discards: res.iter().filter(|r| r.is_none()).count(),
        distorted: 0,
        misplaced: Vec::new(),
        max_mu: T::zero(),
    };
    for b in res.iter().flatten() {
        let a = b.mu.norm();
        scan.max_mu = scan.max_mu.max(a);
        if a > threshold {
            scan.distorted += 1;
            if !matches!(b.tag.map(|t| t.kind), Some(RegionKind::InterpAnnulus(_))) {
                scan.misplaced.push(b.point);
            }
        }
    }
    scan
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralBound<T> {
    /// `(K - 1)/2 * sum_{j <= J} (exp(2 pi/M_j) - 1)`.
    pub truncated: T,
    pub terms: Vec<T>,
    pub verdict: Summability<T>,
}

impl<T: Real> IntegralBound<T> {
    /// Truncated sum plus the certified tail, when convergent.
    pub fn total(&self) -> Option<T> {
        match self.verdict {
            Summability::Convergent { tail_bound } => Some(self.truncated + tail_bound),
            _ => None,
        }
    }
}

/// Bound on the distortion integral at the origin. A geometric rule
/// `M_{j+1} = rho M_j` certifies the tail by
/// `sum_{i>J} (e^{x_i} - 1) <= x_{J+1} e^{x_{J+1}} rho/(rho - 1)` with
/// `x_i = 2 pi / M_i`.
pub fn integral_bound<T: Real>(p: &Params<T>, k_hat: T, hint: Option<GrowthRule<T>>) -> Result<IntegralBound<T>> {
    if !(k_hat >= T::one()) {
        return Err(Error::InvalidParameter(format!("K = {} is below 1", to_f64(k_hat))));
    }
    let factor = (k_hat - T::one()) / lit(2.0);
    let terms: Vec<T> = p
        .degrees()
        .iter()
        .map(|&m| (T::TAU() / int::<T>(m)).exp_m1())
        .collect();
    let truncated = factor * terms.iter().fold(T::zero(), |a, &b| a + b);
    let last: T = int(*p.degrees().last().expect("nonempty"));
    let verdict = match hint.or(p.rule()) {
        Some(GrowthRule::Geometric { ratio }) if ratio > T::one() => {
            let x = T::TAU() / (last * ratio);
            Summability::Convergent {
                tail_bound: factor * x * x.exp() * ratio / (ratio - T::one()),
            }
        }
        Some(_) => Summability::Divergent,
        None => Summability::FinitePrefixOnly,
    };
    Ok(IntegralBound {
        truncated,
        terms,
        verdict,
    })
}

/// Point `t` of the circle of radius `exp(radius_log)` about `center`.
fn circle_point<T: Real>(center: LogPoint<T>, radius_log: T, t: T) -> LogPoint<T> {
    if center.is_origin() {
        return LogPoint::new(radius_log, t);
    }
    let rel = (radius_log - center.log_mod).exp();
    let w = Complex::new(T::one(), T::zero()) + Complex::from_polar(rel, t);
    center * LogPoint::from_complex(w)
}

const MAX_WINDING_SAMPLES: usize = 1 << 22;

/// Winding number of `map` about `0` along the circle `|z - center| = exp(radius_log)`.
pub fn winding_number<T: Real, M: Map<T> + ?Sized>(
    map: &M,
    center: LogPoint<T>,
    radius_log: T,
    samples: usize,
) -> Result<i64> {
    winding_impl(map, center, radius_log, samples, None)
}

/// Winding number of `map - value` along the circle, computed from
/// `map/value - 1` so that large moduli cancel exactly in log space.
pub fn winding_number_about<T: Real, M: Map<T> + ?Sized>(
    map: &M,
    center: LogPoint<T>,
    radius_log: T,
    samples: usize,
    value: LogPoint<T>,
) -> Result<i64> {
    winding_impl(map, center, radius_log, samples, Some(value))
}

fn winding_impl<T: Real, M: Map<T> + ?Sized>(
    map: &M,
    center: LogPoint<T>,
    radius_log: T,
    samples: usize,
    value: Option<LogPoint<T>>,
) -> Result<i64> {
    let mut n = samples.max(1 << 10);
    let mut last_turns = 0.0;
    while n <= MAX_WINDING_SAMPLES {
        let phases: Vec<Result<(T, T)>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let t = T::TAU() * int::<T>(k as u64) / int::<T>(n as u64);
                let f = map.eval(circle_point(center, radius_log, t))?;
                match value {
                    None => Ok((f.log_mod, f.arg)),
                    Some(v) => {
                        let w = exp_m1_complex(f.log_mod - v.log_mod, normalize_angle(f.arg - v.arg));
                        let lw = LogPoint::from_complex(w);
                        Ok((lw.log_mod, lw.arg))
                    }
                }
            })
            .collect();
        let phases = phases.into_iter().collect::<Result<Vec<_>>>()?;
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        for &(l, _) in &phases {
            if !l.is_finite() {
                return Err(Error::ZeroOnContour);
            }
            lo = lo.min(l);
            hi = hi.max(l);
        }
        // a sampled modulus 1e-12 of the largest signals a zero on the contour
        if hi - lo > lit(27.6) {
            return Err(Error::ZeroOnContour);
        }
        let mut total = T::zero();
        let mut max_jump = T::zero();
        for k in 0..n {
            let d = normalize_angle(phases[(k + 1) % n].1 - phases[k].1);
            max_jump = max_jump.max(d.abs());
            total = total + d;
        }
        let turns = to_f64(total / T::TAU());
        last_turns = turns;
        if (turns - turns.round()).abs() < 0.05 && max_jump < lit(1.0) {
            return Ok(turns.round() as i64);
        }
        n *= 2;
    }
    Err(Error::NonIntegralWinding { turns: last_turns })
}

/// `K` of the angle-tripling branch of the fold map, estimated at `z`.
pub fn sigma_local_k<T: Real>(z: Complex<T>, step: T) -> Result<T> {
    if !in_fold_support(z) {
        return Err(Error::InvalidParameter("point is not in the fold support".into()));
    }
    beltrami_estimate(&Sigma, LogPoint::from_complex(z), step).map(|b| b.k_local)
}

/// Exact affine dilatation of the cell triangle containing a strip point.
pub fn exact_cell_dilatation<T: Real>(cell: &CellMap<T>, z: Complex<T>) -> T {
    cell.pieces()[cell.locate(z)].dilatation
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{generate_standard_family, Mode};
    use std::f64::consts::PI;

    fn standard(depth: usize) -> GlobalMap<f64> {
        GlobalMap::new(generate_standard_family(2, 2, depth, LogPoint::one()).unwrap()).unwrap()
    }

    #[test]
    fn power_region_is_conformal() {
        let g = standard(3);
        let b = beltrami_estimate(&g, LogPoint::new(2.0 * PI + 1.0, 0.7), 1e-5).unwrap();
        assert!(b.mu.norm() < 1e-6);
        assert!((b.k_local - 1.0).abs() < 1e-5);
    }

    #[test]
    fn sigma_tripling_sector_has_k_three() {
        for z in [Complex::new(0.1f64, 1.2), Complex::new(-0.3, -1.1), Complex::new(0.0, 1.5)] {
            let k = sigma_local_k(z, 1e-5).unwrap();
            assert!((k - 3.0).abs() < 1e-3, "{z} {k}");
        }
        let b = beltrami_estimate(&Sigma, LogPoint::from_complex(Complex::new(5.0, 0.5)), 1e-5).unwrap();
        assert!(b.mu.norm() < 1e-6);
    }

    #[test]
    fn psi_matches_exact_triangle_dilatation() {
        for m in [2u64, 3, 5] {
            let map = Psi::<f64>::new(m).unwrap();
            for piece in map.cell.pieces() {
                let c = piece.domain.centroid();
                let b = beltrami_estimate(&map, LogPoint::from_complex(c), 1e-6).unwrap();
                assert!((b.k_local - piece.dilatation).abs() < 1e-6, "m={m}");
                assert!((exact_cell_dilatation(&map.cell, c) - piece.dilatation).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn near_seam_is_rejected() {
        let map = Psi::<f64>::new(2).unwrap();
        // edge from 0 to the apex 1 + i/2
        let z = LogPoint::from_complex(Complex::new(0.5, 0.25 + 1e-7));
        assert_eq!(beltrami_estimate(&map, z, 1e-5), Err(Error::TooCloseToBoundary));
    }

    #[test]
    fn quadratic_convergence() {
        let g = standard(3);
        // interior points of the first interpolation annulus, off the seams
        let pts = [
            LogPoint::new(PI + 0.6, 0.35),
            LogPoint::new(PI + 1.1, 2.2),
            LogPoint::new(PI + 0.2, -0.9),
        ];
        for z in pts {
            let steps = [4e-3, 2e-3, 1e-3];
            let mus: Vec<Complex<f64>> = steps
                .iter()
                .map(|&s| beltrami_estimate(&g, z, s).unwrap().mu)
                .collect();
            let e1 = (mus[0] - mus[1]).norm();
            let e2 = (mus[1] - mus[2]).norm();
            if e2 < 1e-13 {
                continue;
            }
            let ratio = e1 / e2;
            assert!((3.0..=5.0).contains(&ratio), "{z:?} ratio {ratio}");
        }
    }

    #[test]
    fn pure_power_report() {
        let p: Params<f64> = Params::from_plain(vec![3], &[2.0], Complex::new(1.0, 0.0), Mode::Plane).unwrap();
        let r = dilatation_report(&p, 200).unwrap();
        assert!((r.k_hat - 1.0).abs() < 1e-6);
    }

    #[test]
    fn integral_bound_examples() {
        let p = generate_standard_family::<f64>(2, 2, 5, LogPoint::one()).unwrap();
        let b = integral_bound(&p, 1.0, None).unwrap();
        assert_eq!(b.truncated, 0.0);
        let b = integral_bound(&p, 3.0, None).unwrap();
        let direct: f64 = [2.0f64, 4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|m| (2.0 * PI / m).exp() - 1.0)
            .sum();
        assert!((b.truncated - direct).abs() < 1e-12);
        assert!(b.total().is_some());
        assert!(integral_bound(&p, 0.5, None).is_err());
    }

    #[test]
    fn winding_of_powers_and_branch_points() {
        let g = standard(3);
        assert_eq!(winding_number(&g, LogPoint::origin(), 1.0, 1024).unwrap(), 2);
        assert_eq!(winding_number(&g, LogPoint::origin(), 1.75 * PI, 1024).unwrap(), 4);
        let s = g.singular_data().unwrap();
        for c in &s.critical_points {
            let target = if c.sign > 0 {
                s.critical_values[c.annulus - 1].plus
            } else {
                s.critical_values[c.annulus - 1].minus
            };
            let rl = c.point.log_mod + (1e-4f64).ln();
            assert_eq!(winding_number_about(&g, c.point, rl, 1024, target).unwrap(), 2);
        }
        for z in s.zeros.iter().skip(1) {
            let rl = z.point.log_mod + (1e-4f64).ln();
            assert_eq!(winding_number(&g, z.point, rl, 1024).unwrap(), 1);
        }
    }

    #[test]
    fn zero_on_contour_is_detected() {
        let p = Power { c: LogPoint::<f64>::one(), n: 2 };
        // circle through the origin
        let r = winding_number(&p, LogPoint::one(), 0.0, 1024);
        assert_eq!(r, Err(Error::ZeroOnContour));
    }
}
