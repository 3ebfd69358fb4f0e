//! Orbits of `h` in log space and the wandering-annulus inclusion
//! `h(A_j) subset A_{j+1}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::globalmap::{GlobalMap, RegionKind, RegionTag};
use crate::logpoint::LogPoint;
use crate::scalar::{int, lit, to_f64, Real};
use crate::sequences::Params;

/// How `alpha` shrinks the power annulus
/// `r_{j-1} exp(pi/M_{j-1}) < |z| < r_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnnulusMode {
    /// `alpha^{-1} r_{j-1} exp(pi/M_{j-1}) < |z| < alpha r_j`, meant for `alpha <= 1`.
    Literal,
    /// `alpha r_{j-1} exp(pi/M_{j-1}) < |z| < alpha^{-1} r_j`, meant for `alpha >= 1`.
    Shrink,
}

/// `(log inner, log outer)` of `A_j^alpha`; the inner bound of `A_1` is `-inf`.
pub fn annulus_a<T: Real>(j: usize, alpha: T, p: &Params<T>, mode: AnnulusMode) -> Result<(T, T)> {
    if j == 0 || j > p.depth() {
        return Err(Error::InvalidParameter(format!("annulus index {j} out of 1..={}", p.depth())));
    }
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::InvalidParameter("alpha must be positive".into()));
    }
    let la = alpha.ln();
    let la = match mode {
        AnnulusMode::Literal => -la,
        AnnulusMode::Shrink => la,
    };
    let inner = if j == 1 {
        T::neg_infinity()
    } else {
        p.log_outer_radius(j - 1) + la
    };
    let outer = p.log_radius(j) - la;
    if !(inner < outer) {
        return Err(Error::EmptyAnnulus {
            j,
            alpha: to_f64(alpha),
        });
    }
    Ok((inner, outer))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitStatus {
    Escaped(usize),
    LeftTruncation(usize),
    Completed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace<T> {
    pub points: Vec<LogPoint<T>>,
    pub tags: Vec<RegionTag>,
    pub status: OrbitStatus,
}

impl<T: Real> OrbitTrace<T> {
    /// `(step, log-modulus, arg, region label)` per point.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64, String)> + '_ {
        self.points
            .iter()
            .zip(&self.tags)
            .enumerate()
            .map(|(k, (z, t))| (k, to_f64(z.log_mod), to_f64(z.arg), t.label()))
    }
}

fn plain_tag(kind: RegionKind) -> RegionTag {
    RegionTag {
        kind,
        sector: None,
        in_fold_support: None,
    }
}

/// Iterates `h_{n_cut}` (`n_cut = 0` is `h`) from `z0`.
///
/// Stops with `Escaped` once the log-modulus exceeds `escape` (default
/// `log r_J`), with `LeftTruncation` outside the materialized domain, or
/// after `max_steps` applications.
pub fn orbit_truncated<T: Real>(
    map: &GlobalMap<T>,
    z0: LogPoint<T>,
    n_cut: usize,
    max_steps: usize,
    escape: Option<T>,
) -> Result<OrbitTrace<T>> {
    let p = map.params();
    let escape = escape.unwrap_or_else(|| p.log_radius(p.depth()));
    let mut points = vec![z0];
    let mut tags = Vec::new();
    let mut z = z0;
    for step in 0..=max_steps {
        let evaluated = map.evaluate_truncated(z, n_cut);
        let tag = match &evaluated {
            Ok(e) => e.tag,
            Err(_) => plain_tag(map.classify(z)),
        };
        tags.push(tag);
        if z.log_mod > escape {
            return Ok(OrbitTrace {
                points,
                tags,
                status: OrbitStatus::Escaped(step),
            });
        }
        if matches!(tag.kind, RegionKind::BeyondTruncation | RegionKind::OutsideDisk) {
            return Ok(OrbitTrace {
                points,
                tags,
                status: OrbitStatus::LeftTruncation(step),
            });
        }
        if step == max_steps {
            break;
        }
        z = evaluated
            .map_err(|e| Error::AtStep {
                step,
                source: Box::new(e),
            })?
            .value;
        points.push(z);
    }
    Ok(OrbitTrace {
        points,
        tags,
        status: OrbitStatus::Completed(max_steps),
    })
}

pub fn orbit<T: Real>(map: &GlobalMap<T>, z0: LogPoint<T>, max_steps: usize, escape: Option<T>) -> Result<OrbitTrace<T>> {
    orbit_truncated(map, z0, 0, max_steps, escape)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionRecord<T> {
    pub j: usize,
    pub source: (T, T),
    pub target: (T, T),
    pub samples: usize,
    pub failures: usize,
    /// Smallest log-distance from an image to the boundary of the target;
    /// negative when some image falls outside.
    pub min_margin: T,
    pub first_failure: Option<LogPoint<T>>,
    /// `max |log |h(r_j e^{it})| - log r_{j+1}|` over the sampled circle.
    pub ladder_residual: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WanderingReport<T> {
    pub alpha: T,
    pub mode: AnnulusMode,
    /// Largest residual of `r_{j+1} = c_j r_j^{M_j}`.
    pub rule_residual: T,
    /// Index `j` of the largest residual.
    pub rule_worst_j: usize,
    pub hypothesis_holds: bool,
    pub records: Vec<InclusionRecord<T>>,
}

impl<T: Real> WanderingReport<T> {
    pub fn inclusions_hold(&self) -> bool {
        self.records.iter().all(|r| r.failures == 0)
    }

    pub fn ladder_holds(&self, tol: T) -> bool {
        self.records.iter().all(|r| r.ladder_residual < tol)
    }

    /// `Err` with the hypothesis flag first, then the first failed inclusion.
    pub fn check(&self) -> Result<()> {
        if !self.hypothesis_holds {
            return Err(Error::HypothesisViolated {
                j: self.rule_worst_j,
                residual: to_f64(self.rule_residual),
            });
        }
        for r in &self.records {
            if let Some(z) = r.first_failure {
                return Err(Error::InclusionFailure {
                    j: r.j,
                    log_mod: to_f64(z.log_mod),
                    arg: to_f64(z.arg),
                });
            }
        }
        Ok(())
    }
}

pub const RULE_TOLERANCE: f64 = 1e-10;
const LADDER_ANGLES: usize = 1000;

/// Jittered stratified samples of `A_j`: area-uniform on the punctured disk
/// `A_1`, uniform in `(log |z|, arg)` otherwise.
fn sample_annulus<T: Real>(inner: T, outer: T, count: usize, rng: &mut ChaCha8Rng) -> Vec<LogPoint<T>> {
    let rows = ((count as f64).sqrt().ceil() as usize).max(1);
    let cols = count.div_ceil(rows);
    let mut out = Vec::with_capacity(count);
    'grid: for a in 0..rows {
        for b in 0..cols {
            if out.len() == count {
                break 'grid;
            }
            let u = (a as f64 + rng.random::<f64>()) / rows as f64;
            let v = (b as f64 + rng.random::<f64>()) / cols as f64;
            let l = if inner == T::neg_infinity() {
                // |z| = R sqrt(u); u stays in (0, 1)
                outer + lit::<T>(0.5 * u.max(f64::MIN_POSITIVE).ln())
            } else {
                inner + (outer - inner) * lit(u)
            };
            // keep samples strictly inside the open annulus
            if !(l > inner && l < outer) {
                continue;
            }
            out.push(LogPoint::new(l, -T::PI() + T::TAU() * lit(v)));
        }
    }
    out
}

/// Samples `A_j^alpha` for each `j` and checks that `h` maps every sample into
/// `A_{j+1}^alpha`, plus the circle ladder `|h(r_j e^{it})| = r_{j+1}`.
///
/// Sampling draws from a ChaCha stream seeded per `j`; evaluation is
/// parallel but collected in sample order, so reports do not depend on the
/// worker count.
pub fn verify_wandering<T: Real>(
    map: &GlobalMap<T>,
    alpha: T,
    mode: AnnulusMode,
    js: std::ops::RangeInclusive<usize>,
    samples_per_annulus: usize,
    seed: u64,
) -> Result<WanderingReport<T>> {
    let p = map.params();
    let (rule_worst_j, rule_residual) = p
        .radius_rule_residuals()
        .into_iter()
        .enumerate()
        .fold((1, T::zero()), |(bj, b), (k, r)| if r > b { (k + 1, r) } else { (bj, b) });
    let hypothesis_holds = rule_residual < lit(RULE_TOLERANCE);
    let mut records = Vec::new();
    for j in js {
        if j + 1 > p.depth() {
            return Err(Error::Precondition(format!(
                "A_{} is not materialized (depth {})",
                j + 1,
                p.depth()
            )));
        }
        let source = annulus_a(j, alpha, p, mode)?;
        let target = annulus_a(j + 1, alpha, p, mode)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let pts = sample_annulus(source.0, source.1, samples_per_annulus, &mut rng);
        let images: Vec<Result<LogPoint<T>>> = pts.par_iter().map(|&z| map.h(z)).collect();
        let mut rec = InclusionRecord {
            j,
            source,
            target,
            samples: pts.len(),
            failures: 0,
            min_margin: T::infinity(),
            first_failure: None,
            ladder_residual: T::zero(),
        };
        for (z, w) in pts.iter().zip(images) {
            let w = w?;
            let margin = if w.is_origin() {
                T::neg_infinity()
            } else {
                (w.log_mod - target.0).min(target.1 - w.log_mod)
            };
            rec.min_margin = rec.min_margin.min(margin);
            if !(margin > T::zero()) {
                rec.failures += 1;
                rec.first_failure.get_or_insert(*z);
            }
        }
        let lr = p.log_radius(j);
        let next = p.log_radius(j + 1);
        let residuals: Vec<Result<T>> = (0..LADDER_ANGLES)
            .into_par_iter()
            .map(|k| {
                let th = -T::PI() + T::TAU() * int::<T>(k as u64) / int::<T>(LADDER_ANGLES as u64);
                map.h(LogPoint::new(lr, th)).map(|w| (w.log_mod - next).abs())
            })
            .collect();
        for r in residuals {
            rec.ladder_residual = rec.ladder_residual.max(r?);
        }
        records.push(rec);
    }
    Ok(WanderingReport {
        alpha,
        mode,
        rule_residual,
        rule_worst_j,
        hypothesis_holds,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedComparison<T> {
    pub full: OrbitTrace<T>,
    pub truncated: OrbitTrace<T>,
    /// First step whose iterate lies below `r_n`.
    pub first_dip: Option<usize>,
    /// First step at which the two traces differ bit for bit.
    pub first_divergence: Option<usize>,
}

impl<T: Real> TruncatedComparison<T> {
    pub fn identical(&self) -> bool {
        self.first_divergence.is_none()
    }
}

/// Runs the orbits of `h` and `h_n` side by side from `|z0| >= r_n`.
pub fn truncated_orbit_compare<T: Real>(
    map: &GlobalMap<T>,
    z0: LogPoint<T>,
    n_cut: usize,
    steps: usize,
) -> Result<TruncatedComparison<T>> {
    let p = map.params();
    if n_cut > p.depth() {
        return Err(Error::Precondition(format!("truncation index {n_cut} exceeds depth {}", p.depth())));
    }
    if n_cut > 0 && (z0.is_origin() || z0.log_mod < p.log_radius(n_cut)) {
        return Err(Error::Precondition(format!(
            "start point lies inside r_{n_cut}"
        )));
    }
    let full = orbit_truncated(map, z0, 0, steps, None)?;
    let truncated = orbit_truncated(map, z0, n_cut, steps, None)?;
    let first_dip = if n_cut == 0 {
        None
    } else {
        full.points
            .iter()
            .position(|z| z.is_origin() || z.log_mod < p.log_radius(n_cut))
    };
    let len = full.points.len().max(truncated.points.len());
    let first_divergence = (0..len).find(|&k| {
        match (full.points.get(k), truncated.points.get(k)) {
            (Some(a), Some(b)) => {
                // f32 -> f64 is exact, so this compares the stored bits
                to_f64(a.log_mod).to_bits() != to_f64(b.log_mod).to_bits()
                    || to_f64(a.arg).to_bits() != to_f64(b.arg).to_bits()
            }
            _ => true,
        }
    });
    let first_divergence = first_divergence.or_else(|| (full.status != truncated.status).then_some(len));
    Ok(TruncatedComparison {
        full,
        truncated,
        first_dip,
        first_divergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::generate_standard_family;
    use std::f64::consts::PI;

    fn standard(depth: usize) -> GlobalMap<f64> {
        GlobalMap::new(generate_standard_family(2, 2, depth, LogPoint::one()).unwrap()).unwrap()
    }

    #[test]
    fn annulus_examples() {
        let g = standard(4);
        let p = g.params();
        let (lo, hi) = annulus_a(2, 1.0, p, AnnulusMode::Shrink).unwrap();
        assert_eq!((lo, hi), (p.log_outer_radius(1), p.log_radius(2)));
        let (lo, hi) = annulus_a(2, 1.0001, p, AnnulusMode::Shrink).unwrap();
        assert!(hi - lo > 0.0 && (hi - lo - (PI / 2.0 - 2.0 * 1.0001f64.ln())).abs() < 1e-12);
        assert!(matches!(
            annulus_a(2, 1e6, p, AnnulusMode::Shrink),
            Err(Error::EmptyAnnulus { j: 2, .. })
        ));
        let lit = annulus_a(2, 0.9, p, AnnulusMode::Literal).unwrap();
        let shr = annulus_a(2, 1.0 / 0.9, p, AnnulusMode::Shrink).unwrap();
        assert!((lit.0 - shr.0).abs() < 1e-12 && (lit.1 - shr.1).abs() < 1e-12);
        assert_eq!(annulus_a(1, 1.1, p, AnnulusMode::Shrink).unwrap().0, f64::NEG_INFINITY);
    }

    #[test]
    fn orbit_examples() {
        let g = standard(4);
        let o = orbit(&g, LogPoint::one(), 5, None).unwrap();
        assert_eq!(o.status, OrbitStatus::Completed(5));
        assert!(o.points.iter().all(|z| z.log_distance(&LogPoint::one()) < 1e-15));
        let o = orbit(&g, LogPoint::origin(), 5, None).unwrap();
        assert!(o.points.iter().all(|z| z.is_origin()));
        let o = orbit(&g, LogPoint::new(PI + PI / 4.0, 0.0), 50, None).unwrap();
        assert!(matches!(o.status, OrbitStatus::Escaped(_)));
        for w in o.points.windows(2) {
            assert!(w[1].log_mod > w[0].log_mod);
        }
        assert_eq!(o.points.len(), o.tags.len());
    }

    #[test]
    fn wandering_inclusion_from_second_annulus() {
        let g = standard(4);
        let r = verify_wandering(&g, 1.1, AnnulusMode::Shrink, 2..=3, 500, 7).unwrap();
        assert!(r.hypothesis_holds);
        assert!(r.inclusions_hold(), "{:?}", r.records);
        assert!(r.ladder_holds(1e-9));
        assert!(r.records.iter().all(|x| x.min_margin > 0.0));
        assert!(r.check().is_ok());
    }

    #[test]
    fn punctured_first_annulus_cannot_map_inside_second() {
        // h(0) = 0, so images of points near the origin stay near the origin
        let g = standard(4);
        let r = verify_wandering(&g, 1.1, AnnulusMode::Shrink, 1..=1, 500, 7).unwrap();
        assert!(r.records[0].failures > 0);
        assert!(matches!(r.check(), Err(Error::InclusionFailure { j: 1, .. })));
    }

    #[test]
    fn perturbed_rule_flags_hypothesis() {
        let p = generate_standard_family::<f64>(2, 2, 4, LogPoint::one()).unwrap();
        let q = p.with_log_radius(3, p.log_radius(3) + 1e-3).unwrap();
        let g = GlobalMap::new(q).unwrap();
        let r = verify_wandering(&g, 1.1, AnnulusMode::Shrink, 2..=3, 100, 1).unwrap();
        assert!(!r.hypothesis_holds);
        assert!(matches!(r.check(), Err(Error::HypothesisViolated { .. })));
    }

    #[test]
    fn truncated_comparison() {
        let g = standard(4);
        let z0 = LogPoint::new(2.0 * PI + 1.0, 0.3);
        for n in 0..=2 {
            let c = truncated_orbit_compare(&g, z0, n, 20).unwrap();
            assert!(c.identical());
            assert_eq!(c.first_dip, None);
        }
        assert!(matches!(
            truncated_orbit_compare(&g, LogPoint::new(1.0, 0.0), 2, 5),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn sampling_is_reproducible() {
        let g = standard(4);
        let a = verify_wandering(&g, 1.1, AnnulusMode::Shrink, 2..=3, 300, 42).unwrap();
        let b = verify_wandering(&g, 1.1, AnnulusMode::Shrink, 2..=3, 300, 42).unwrap();
        assert_eq!(a, b);
    }
}
