//! Degree/radius sequences and the scaling constants `c_j`.
//!
//! Radii and constants are held in log space from ingestion onward. The
//! implicit conventions `M_0 = 1` and `r_0 = 0` are never stored; the
//! accessors [`Params::degree`] and [`Params::log_radius`] supply them.
//! Everything is asserted per materialized annulus only: an infinite family
//! is represented by its finite prefix plus an optional [`GrowthRule`].

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logpoint::LogPoint;
use crate::scalar::{int, snap_tol, to_f64, Real};

/// Whether the radii are meant to tend to infinity or to a finite radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode<T> {
    Plane,
    /// Radii accumulate at `exp(log_r_inf)`.
    Disk { log_r_inf: T },
}

/// Continuation of a degree sequence past its materialized prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GrowthRule<T> {
    /// `M_{j+1} = ratio * M_j` for `j >= J`.
    Geometric { ratio: T },
    /// `M_{j+1} = M_j + step` for `j >= J`.
    Arithmetic { step: T },
}

/// Outcome of the summability test `sum 1/M_j < inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Summability<T> {
    /// The full series converges; `tail_bound` bounds the terms past the prefix.
    Convergent { tail_bound: T },
    Divergent,
    /// No generator rule available, only the prefix is known.
    FinitePrefixOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport<T> {
    pub partial_sum: T,
    pub verdict: Summability<T>,
}

impl<T: Real> SummabilityReport<T> {
    pub fn is_strongly_permissible(&self) -> bool {
        matches!(self.verdict, Summability::Convergent { .. })
    }
}

/// A validated, immutable parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params<T> {
    degrees: Vec<u64>,
    log_radii: Vec<T>,
    base: LogPoint<T>,
    scaling: Vec<LogPoint<T>>,
    mode: Mode<T>,
    ratio_bound: T,
    growth_slack: Vec<T>,
    rule: Option<GrowthRule<T>>,
}

impl<T: Real> Params<T> {
    /// Validates degrees `M_1 < ... < M_J`, log-radii `log r_1 < ...`, and the
    /// base constant, then populates the scaling constants.
    pub fn validate(
        degrees: Vec<u64>,
        log_radii: Vec<T>,
        c: LogPoint<T>,
        mode: Mode<T>,
    ) -> Result<Self> {
        if degrees.is_empty() || log_radii.is_empty() {
            return Err(Error::EmptySequence);
        }
        if degrees.len() != log_radii.len() {
            return Err(Error::LengthMismatch {
                degrees: degrees.len(),
                radii: log_radii.len(),
            });
        }
        if degrees.contains(&0) {
            return Err(Error::ZeroDegree);
        }
        for j in 1..degrees.len() {
            if degrees[j] <= degrees[j - 1] {
                return Err(Error::NonIncreasingDegrees { index: j });
            }
        }
        for (j, lr) in log_radii.iter().enumerate() {
            if !lr.is_finite() {
                return Err(Error::NonPositiveRadius { index: j + 1 });
            }
        }
        if c.is_origin() || !c.log_mod.is_finite() {
            return Err(Error::ZeroBaseConstant);
        }

        let mut growth_slack = Vec::with_capacity(degrees.len().saturating_sub(1));
        for j in 0..degrees.len() - 1 {
            let need = T::PI() / int::<T>(degrees[j]);
            let slack = log_radii[j + 1] - log_radii[j] - need;
            let tol = snap_tol::<T>() * (T::one() + log_radii[j + 1].abs());
            if slack < -tol {
                return Err(Error::GrowthViolation {
                    index: j + 1,
                    slack: to_f64(slack),
                });
            }
            growth_slack.push(slack);
        }

        if let Mode::Disk { log_r_inf } = mode {
            if !log_r_inf.is_finite() {
                return Err(Error::InvalidParameter("r_inf must be finite and positive".into()));
            }
            if let Some(j) = log_radii.iter().position(|&lr| lr >= log_r_inf) {
                return Err(Error::DiskRadiusViolation { index: j + 1 });
            }
        }

        let ratio_bound = degrees
            .windows(2)
            .map(|w| int::<T>(w[1]) / int::<T>(w[0]))
            .fold(T::one(), T::max);

        let scaling = recursive_scaling(&degrees, &log_radii, c);
        Ok(Self {
            degrees,
            log_radii,
            base: c,
            scaling,
            mode,
            ratio_bound,
            growth_slack,
            rule: None,
        })
    }

    /// Same as [`Params::validate`] with plain radii and a plain complex constant.
    pub fn from_plain(degrees: Vec<u64>, radii: &[T], c: Complex<T>, mode: Mode<T>) -> Result<Self> {
        let mut logs = Vec::with_capacity(radii.len());
        for (j, &r) in radii.iter().enumerate() {
            if !(r > T::zero()) || !r.is_finite() {
                return Err(Error::NonPositiveRadius { index: j + 1 });
            }
            logs.push(r.ln());
        }
        Params::validate(degrees, logs, LogPoint::from_complex(c), mode)
    }

    /// Attaches a generator rule describing the sequence past the prefix.
    pub fn with_rule(mut self, rule: GrowthRule<T>) -> Self {
        self.rule = Some(rule);
        self
    }

    pub fn rule(&self) -> Option<GrowthRule<T>> {
        self.rule
    }

    /// Truncation depth `J`.
    pub fn depth(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn log_radii(&self) -> &[T] {
        &self.log_radii
    }

    /// `M_j` for `0 <= j <= J`, with `M_0 = 1`.
    pub fn degree(&self, j: usize) -> u64 {
        if j == 0 {
            1
        } else {
            self.degrees[j - 1]
        }
    }

    /// `log r_j` for `0 <= j <= J`, with `log r_0 = -inf`.
    pub fn log_radius(&self, j: usize) -> T {
        if j == 0 {
            T::neg_infinity()
        } else {
            self.log_radii[j - 1]
        }
    }

    /// Log of the outer radius `r_j exp(pi/M_j)` of the `j`-th interpolation annulus.
    pub fn log_outer_radius(&self, j: usize) -> T {
        self.log_radius(j) + T::PI() / int::<T>(self.degree(j))
    }

    /// The base constant `c`.
    pub fn base(&self) -> LogPoint<T> {
        self.base
    }

    /// `c_j` for `1 <= j <= J`.
    pub fn scaling_constant(&self, j: usize) -> LogPoint<T> {
        self.scaling[j - 1]
    }

    /// `(log |c_j|, arg c_j)` for `j = 1..=J`, from the one-step recursion.
    pub fn scaling_constants(&self) -> &[LogPoint<T>] {
        &self.scaling
    }

    pub fn mode(&self) -> Mode<T> {
        self.mode
    }

    /// `max_j M_{j+1}/M_j` over the materialized prefix (1 for a single degree).
    pub fn ratio_bound(&self) -> T {
        self.ratio_bound
    }

    /// `log r_{j+1} - log r_j - pi/M_j` for each consecutive pair.
    pub fn growth_slack(&self) -> &[T] {
        &self.growth_slack
    }

    /// `|log c_j + M_j log r_j - log r_{j+1}|` for `j = 1..J-1`: the
    /// residual of the radius rule `r_{j+1} = c_j r_j^{M_j}`.
    pub fn radius_rule_residuals(&self) -> Vec<T> {
        (1..self.depth())
            .map(|j| {
                let pred = self.scaling_constant(j).log_mod
                    + int::<T>(self.degree(j)) * self.log_radius(j);
                (pred - self.log_radius(j + 1)).abs()
            })
            .collect()
    }

    /// Summability of `sum_j 1/M_j`, certified when a rule is given.
    pub fn is_strongly_permissible(&self, hint: Option<GrowthRule<T>>) -> SummabilityReport<T> {
        let partial_sum = self
            .degrees
            .iter()
            .fold(T::zero(), |acc, &m| acc + T::one() / int::<T>(m));
        let last: T = int(*self.degrees.last().expect("nonempty"));
        let verdict = match hint.or(self.rule) {
            None => Summability::FinitePrefixOnly,
            Some(GrowthRule::Geometric { ratio }) if ratio > T::one() => {
                // sum_{k>=1} 1/(M_J rho^k) = 1/(M_J (rho - 1))
                Summability::Convergent {
                    tail_bound: T::one() / (last * (ratio - T::one())),
                }
            }
            Some(_) => Summability::Divergent,
        };
        SummabilityReport {
            partial_sum,
            verdict,
        }
    }

    /// Sets a radius in place; used by tests and tooling that perturb a family.
    pub fn with_log_radius(&self, j: usize, log_r: T) -> Result<Self> {
        let mut radii = self.log_radii.clone();
        radii[j - 1] = log_r;
        let p = Params::validate(self.degrees.clone(), radii, self.base, self.mode)?;
        Ok(match self.rule {
            Some(rule) => p.with_rule(rule),
            None => p,
        })
    }
}

/// `log c_j = log c_{j-1} + (M_{j-1} - M_j) log r_{j-1}`; `arg c_j = arg c`.
fn recursive_scaling<T: Real>(degrees: &[u64], log_radii: &[T], c: LogPoint<T>) -> Vec<LogPoint<T>> {
    let mut out = Vec::with_capacity(degrees.len());
    out.push(c);
    for j in 1..degrees.len() {
        let prev = out[j - 1];
        let dm: T = int::<T>(degrees[j - 1]) - int::<T>(degrees[j]);
        out.push(LogPoint::new(prev.log_mod + dm * log_radii[j - 1], c.arg));
    }
    out
}

/// Closed-form product `c_j = c * prod_{k=2}^{j} r_{k-1}^{M_{k-1} - M_k}`.
///
/// Independent of [`Params::scaling_constants`]; the two must agree.
pub fn scaling_constants_closed_form<T: Real>(p: &Params<T>) -> Vec<LogPoint<T>> {
    (1..=p.depth())
        .map(|j| {
            let sum = (2..=j).fold(T::zero(), |acc, k| {
                let dm: T = int::<T>(p.degree(k - 1)) - int::<T>(p.degree(k));
                acc + dm * p.log_radius(k - 1)
            });
            LogPoint::new(p.base().log_mod + sum, p.base().arg)
        })
        .collect()
}

/// Radii from `r_1 = e^pi` and `log r_{j+1} = log c_j + M_j log r_j`.
pub fn radius_rule_log_radii<T: Real>(degrees: &[u64], c: LogPoint<T>) -> Result<Vec<T>> {
    let depth = degrees.len();
    if depth == 0 {
        return Err(Error::EmptySequence);
    }
    let mut log_radii = Vec::with_capacity(depth);
    let mut log_c = c.log_mod;
    log_radii.push(T::PI());
    for j in 1..depth {
        let lr_prev = log_radii[j - 1];
        let next = log_c + int::<T>(degrees[j - 1]) * lr_prev;
        if !next.is_finite() {
            return Err(Error::Overflow { depth: j + 1 });
        }
        log_radii.push(next);
        log_c = log_c + (int::<T>(degrees[j - 1]) - int::<T>(degrees[j])) * lr_prev;
        if !log_c.is_finite() {
            return Err(Error::Overflow { depth: j + 1 });
        }
    }
    Ok(log_radii)
}

/// The wandering-domain family: `M_j = M_1 ratio^{j-1}`, `r_1 = e^pi`,
/// `log r_{j+1} = log c_j + M_j log r_j`.
pub fn generate_standard_family<T: Real>(
    first_degree: u64,
    ratio: u64,
    depth: usize,
    c: LogPoint<T>,
) -> Result<Params<T>> {
    if first_degree < 2 || ratio < 2 {
        return Err(Error::InvalidParameter(
            "standard family needs first degree >= 2 and ratio >= 2".into(),
        ));
    }
    if depth == 0 {
        return Err(Error::EmptySequence);
    }
    if c.is_origin() {
        return Err(Error::ZeroBaseConstant);
    }
    let mut degrees = Vec::with_capacity(depth);
    let mut m = first_degree;
    for j in 0..depth {
        if j > 0 {
            m = m.checked_mul(ratio).ok_or(Error::Overflow { depth: j + 1 })?;
            // integer degrees must also be exact in the scalar type
            if T::from_u64(m).and_then(|x| x.to_u64()) != Some(m) {
                return Err(Error::Overflow { depth: j + 1 });
            }
        }
        degrees.push(m);
    }
    let log_radii = radius_rule_log_radii(&degrees, c)?;
    Ok(Params::validate(degrees, log_radii, c, Mode::Plane)?.with_rule(GrowthRule::Geometric {
        ratio: int(ratio),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn one() -> LogPoint<f64> {
        LogPoint::one()
    }

    #[test]
    fn two_degree_example() {
        let p = Params::validate(vec![2, 4], vec![PI, 2.0 * PI], one(), Mode::Plane).unwrap();
        assert_eq!(p.ratio_bound(), 2.0);
        assert!((p.scaling_constant(2).log_mod + 2.0 * PI).abs() < 1e-15);
        assert_eq!(p.scaling_constant(1), one());
    }

    #[test]
    fn growth_violation_names_first_index() {
        let err = Params::validate(vec![2, 4], vec![PI, PI + 1.0001f64.ln()], one(), Mode::Plane)
            .unwrap_err();
        assert!(matches!(err, Error::GrowthViolation { index: 1, .. }));
    }

    #[test]
    fn non_increasing_degrees() {
        let err = Params::validate(vec![2, 3, 2], vec![1.0, 5.0, 9.0], one(), Mode::Plane)
            .unwrap_err();
        assert_eq!(err, Error::NonIncreasingDegrees { index: 2 });
    }

    #[test]
    fn zero_constant_and_shape_errors() {
        let zero = LogPoint::<f64>::origin();
        assert_eq!(
            Params::validate(vec![2], vec![1.0], zero, Mode::Plane).unwrap_err(),
            Error::ZeroBaseConstant
        );
        assert_eq!(
            Params::<f64>::validate(vec![], vec![], one(), Mode::Plane).unwrap_err(),
            Error::EmptySequence
        );
        assert!(matches!(
            Params::validate(vec![2, 4], vec![1.0], one(), Mode::Plane).unwrap_err(),
            Error::LengthMismatch { .. }
        ));
        assert!(matches!(
            Params::from_plain(vec![2], &[-1.0], Complex::new(1.0, 0.0), Mode::Plane).unwrap_err(),
            Error::NonPositiveRadius { index: 1 }
        ));
    }

    #[test]
    fn disk_radius_violation() {
        let err = Params::validate(
            vec![32, 64],
            vec![1.5f64.ln(), 2.5f64.ln()],
            one(),
            Mode::Disk { log_r_inf: 2f64.ln() },
        )
        .unwrap_err();
        assert_eq!(err, Error::DiskRadiusViolation { index: 2 });
    }

    #[test]
    fn scaling_constant_examples() {
        let p: Params<f64> = Params::from_plain(vec![2, 4], &[10.0, 1000.0], Complex::new(1.0, 0.0), Mode::Plane)
            .unwrap();
        let c2 = p.scaling_constant(2).to_complex();
        assert!((c2.re - 1e-2).abs() < 1e-15 && c2.im.abs() < 1e-18);

        let q: Params<f64> = Params::from_plain(vec![3, 5], &[2.0, 9.0], Complex::new(0.0, 2.0), Mode::Plane)
            .unwrap();
        let c1 = q.scaling_constant(1).to_complex();
        assert!((c1.re).abs() < 1e-15 && (c1.im - 2.0).abs() < 1e-15);
    }

    #[test]
    fn three_degree_scaling_matches_product_form() {
        // closed-form product as the oracle: log c_3 = (2-4)pi + (4-8)2pi = -10pi
        let p = Params::validate(
            vec![2, 4, 8],
            vec![PI, 2.0 * PI, 6.0 * PI],
            one(),
            Mode::Plane,
        )
        .unwrap();
        let closed = scaling_constants_closed_form(&p);
        assert!((closed[2].log_mod + 10.0 * PI).abs() < 1e-12);
        assert!((p.scaling_constant(3).log_mod + 10.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn standard_family_examples() {
        let p = generate_standard_family::<f64>(2, 2, 3, one()).unwrap();
        assert_eq!(p.degrees(), &[2, 4, 8]);
        let expect = [PI, 2.0 * PI, 6.0 * PI];
        for (a, b) in p.log_radii().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let single = generate_standard_family::<f64>(2, 2, 1, one()).unwrap();
        assert_eq!(single.depth(), 1);
        assert_eq!(single.log_radius(1), PI);
        assert!(single.is_strongly_permissible(None).is_strongly_permissible());
    }

    #[test]
    fn standard_family_overflow_is_reported() {
        let err = generate_standard_family::<f64>(2, 2, 60, one()).unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
    }

    #[test]
    fn summability_verdicts() {
        let degrees: Vec<u64> = (1..=20).map(|j| 1u64 << j).collect();
        let radii: Vec<f64> = (0..20).map(|j| 10.0 * (j as f64 + 1.0)).collect();
        let p = Params::validate(degrees, radii, one(), Mode::Plane).unwrap();
        let v = p.is_strongly_permissible(Some(GrowthRule::Geometric { ratio: 2.0 }));
        assert!(v.partial_sum < 1.0);
        assert!(v.is_strongly_permissible());

        let lin: Vec<u64> = (1..=6).map(|j| j + 1).collect();
        let radii: Vec<f64> = (0..6).map(|j| 10.0 * (j as f64 + 1.0)).collect();
        let q = Params::validate(lin, radii, one(), Mode::Plane).unwrap();
        let v = q.is_strongly_permissible(Some(GrowthRule::Arithmetic { step: 1.0 }));
        assert_eq!(v.verdict, Summability::Divergent);

        let short = Params::validate(
            vec![2, 4, 8, 16, 32],
            vec![1.0, 5.0, 9.0, 13.0, 17.0],
            one(),
            Mode::Plane,
        )
        .unwrap();
        let v = short.is_strongly_permissible(None);
        assert_eq!(v.verdict, Summability::FinitePrefixOnly);
        assert!((v.partial_sum - (0.5 + 0.25 + 0.125 + 0.0625 + 0.03125)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn recursion_agrees_with_product(m1 in 2u64..5, ratio in 2u64..4, depth in 1usize..6,
                                         lc in -2.0f64..2.0, ac in -3.0f64..3.0) {
            if let Ok(p) = generate_standard_family(m1, ratio, depth, LogPoint::new(lc, ac)) {
                let closed = scaling_constants_closed_form(&p);
                for (a, b) in p.scaling_constants().iter().zip(&closed) {
                    let scale = 1.0 + b.log_mod.abs();
                    prop_assert!((a.log_mod - b.log_mod).abs() <= 1e-12 * scale);
                    prop_assert!((a.arg - b.arg).abs() <= 1e-12);
                }
                for r in p.radius_rule_residuals() {
                    prop_assert!(r < 1e-12 * (1.0 + p.log_radius(p.depth()).abs()));
                }
                for (j, s) in p.growth_slack().iter().enumerate() {
                    prop_assert!(*s >= 0.0, "slack at {} is {}", j, s);
                }
            }
        }

        #[test]
        fn random_permissible_prefixes_validate(degs in proptest::collection::vec(1u64..5, 1..8),
                                                gaps in proptest::collection::vec(0.0f64..3.0, 8)) {
            let mut degrees = Vec::new();
            let mut acc = 1;
            for d in &degs { acc += d; degrees.push(acc); }
            let mut radii = vec![0.5];
            for j in 1..degrees.len() {
                let prev = radii[j - 1];
                radii.push(prev + PI / degrees[j - 1] as f64 + gaps[j]);
            }
            let p = Params::validate(degrees.clone(), radii, LogPoint::one(), Mode::Plane).unwrap();
            for s in p.growth_slack() { prop_assert!(*s >= -1e-12); }
            let closed = scaling_constants_closed_form(&p);
            for (a, b) in p.scaling_constants().iter().zip(&closed) {
                prop_assert!((a.log_mod - b.log_mod).abs() <= 1e-12 * (1.0 + b.log_mod.abs()));
            }
        }
    }
}
