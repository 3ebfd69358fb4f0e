//! Subcommand bodies. Each returns a JSON report; failures carry the first
//! failing assertion.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex;
use powerfold::analysis::{
    dilatation_report, integral_bound, localization_scan, sigma_local_k, winding_number, winding_number_about,
};
use powerfold::dynamics::{orbit_truncated, verify_wandering, AnnulusMode};
use powerfold::folding::{branched_data, build_cell, cell_svg, AnnulusMap, Side};
use powerfold::globalmap::GlobalMap;
use powerfold::sequences::{Mode, Params, Summability};
use powerfold::LogPoint;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Config, VerifySettings};
use crate::error::{io_error, CliError};
use crate::render::{render, RenderSpec};

pub const BOUNDARY_TOL: f64 = 1e-9;
pub const SLIT_TOL: f64 = 1e-8;
pub const LADDER_TOL: f64 = 1e-9;
pub const MU_THRESHOLD: f64 = 1e-3;
pub const RATIO_TOL: f64 = 1e-4;
pub const TRIPLING_TOL: f64 = 1e-3;
const WINDING_SAMPLES: usize = 1 << 10;

/// One named assertion with its measured value and bound.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Default, Serialize)]
pub struct Checks(pub Vec<Check>);

impl Checks {
    fn below(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.0.push(Check {
            name: name.into(),
            value,
            bound,
            pass: value < bound,
        });
    }

    fn equal(&mut self, name: impl Into<String>, value: f64, expected: f64) {
        self.0.push(Check {
            name: name.into(),
            value,
            bound: expected,
            pass: value == expected,
        });
    }

    fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.0.push(Check {
            name: name.into(),
            value: ok as u8 as f64,
            bound: 1.0,
            pass: ok,
        });
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.0.iter().find(|c| !c.pass)
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| io_error(path, e))
}

pub fn validate(cfg: &Config) -> Value {
    let p = &cfg.params;
    let summ = p.is_strongly_permissible(None);
    let verdict = match summ.verdict {
        Summability::Convergent { tail_bound } => json!({ "convergent": { "tail_bound": tail_bound } }),
        Summability::Divergent => json!("divergent"),
        Summability::FinitePrefixOnly => json!("finite-prefix-only"),
    };
    json!({
        "status": "valid",
        "depth": p.depth(),
        "degrees": p.degrees(),
        "log_radii": p.log_radii(),
        "mode": match p.mode() { Mode::Plane => json!("plane"), Mode::Disk { log_r_inf } => json!({ "disk": { "log_r_inf": log_r_inf } }) },
        "scaling_constants": p.scaling_constants().iter().map(|c| [c.log_mod, c.arg]).collect::<Vec<_>>(),
        "growth_slack": p.growth_slack(),
        "ratio_bound": p.ratio_bound(),
        "strongly_permissible": summ.is_strongly_permissible(),
        "partial_sum": summ.partial_sum,
        "summability": verdict,
    })
}

/// Angles `2 pi (k + 1/2)/count - pi`.
fn angles(count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |k| -PI + 2.0 * PI * (k as f64 + 0.5) / count as f64)
}

/// Max log-space residual of `g` against its power maps on both boundary circles.
pub fn annulus_boundary_residuals(g: &AnnulusMap<f64>, count: usize) -> Result<(f64, f64), CliError> {
    let res: Vec<Result<(f64, f64), powerfold::Error>> = angles(count)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&t| {
            let zi = LogPoint::new(g.log_r(), t);
            let zo = LogPoint::new(g.log_outer(), t);
            Ok((
                g.eval(zi, None)?.log_distance(&g.inner_power(zi)),
                g.eval(zo, None)?.log_distance(&g.outer_power(zo)),
            ))
        })
        .collect();
    let mut worst = (0.0f64, 0.0f64);
    for r in res {
        let (a, b) = r?;
        worst = (worst.0.max(a), worst.1.max(b));
    }
    Ok(worst)
}

/// Max two-sided gap `|g_below - g_above| / |c r^n|` over `count` radii on
/// every slit.
pub fn slit_gap(g: &AnnulusMap<f64>, count: usize) -> Result<f64, CliError> {
    let n = g.n();
    if g.region().is_none() {
        return Ok(0.0);
    }
    let scale = g.c().scale_log(n as f64 * g.log_r()).inv();
    let pts: Vec<LogPoint<f64>> = (1..=n)
        .flat_map(|k| {
            let arg = PI * (2 * k - 1) as f64 / n as f64;
            (0..count).map(move |i| {
                let l = g.log_r() + PI / (2.0 * n as f64) * (i as f64 + 0.5) / count as f64;
                LogPoint::new(l, arg)
            })
        })
        .collect();
    let gaps: Vec<Result<f64, powerfold::Error>> = pts
        .par_iter()
        .map(|&z| {
            let a = (g.eval(z, Some(Side::Below))? * scale).to_complex();
            let b = (g.eval(z, Some(Side::Above))? * scale).to_complex();
            Ok((a - b).norm())
        })
        .collect();
    let mut worst = 0.0f64;
    for r in gaps {
        worst = worst.max(r?);
    }
    Ok(worst)
}

/// Max residual between the two formulas meeting on each region boundary of `h`.
pub fn global_boundary_residuals(map: &GlobalMap<f64>, count: usize) -> Result<Vec<(String, f64)>, CliError> {
    let mut out = Vec::new();
    for (i, g) in map.annuli().iter().enumerate() {
        let j = i + 1;
        let ts: Vec<f64> = angles(count).collect();
        let res: Vec<Result<(f64, f64), powerfold::Error>> = ts
            .par_iter()
            .map(|&t| {
                let zi = LogPoint::new(g.log_r(), t);
                let zo = LogPoint::new(g.log_outer(), t);
                Ok((
                    map.power(j, zi).log_distance(&g.eval(zi, None)?),
                    g.eval(zo, None)?.log_distance(&map.power(j + 1, zo)),
                ))
            })
            .collect();
        let mut worst = (0.0f64, 0.0f64);
        for r in res {
            let (a, b) = r?;
            worst = (worst.0.max(a), worst.1.max(b));
        }
        out.push((format!("|z| = r_{j}"), worst.0));
        out.push((format!("|z| = r_{j} exp(pi/M_{j})"), worst.1));
    }
    Ok(out)
}

/// `log` of a radius in the middle of power annulus `j`.
pub fn mid_power_log_radius(p: &Params<f64>, j: usize) -> f64 {
    let hi = p.log_radius(j);
    if j == 1 {
        hi - 1.0
    } else {
        0.5 * (p.log_outer_radius(j - 1) + hi)
    }
}

pub fn boundaries(cfg: &Config) -> Result<(Value, Checks), CliError> {
    let map = GlobalMap::new(cfg.params.clone())?;
    let count = cfg.verify.samples.max(1);
    let mut checks = Checks::default();
    let mut annuli = Vec::new();
    for (i, g) in map.annuli().iter().enumerate() {
        let (inner, outer) = annulus_boundary_residuals(g, count)?;
        let gap = slit_gap(g, 100)?;
        checks.below(format!("annulus {} inner circle", i + 1), inner, BOUNDARY_TOL);
        checks.below(format!("annulus {} outer circle", i + 1), outer, BOUNDARY_TOL);
        checks.below(format!("annulus {} slit gap", i + 1), gap, SLIT_TOL);
        annuli.push(json!({ "j": i + 1, "n": g.n(), "M": g.big_m(), "inner": inner, "outer": outer, "slit_gap": gap }));
    }
    let global = global_boundary_residuals(&map, count)?;
    for (name, r) in &global {
        checks.below(format!("h continuity at {name}"), *r, BOUNDARY_TOL);
    }
    let mut windings = Vec::new();
    for j in 1..=cfg.params.depth() {
        let w = winding_number(&map, LogPoint::origin(), mid_power_log_radius(&cfg.params, j), WINDING_SAMPLES)?;
        checks.equal(format!("winding at mid-power radius {j}"), w as f64, cfg.params.degree(j) as f64);
        windings.push(json!({ "j": j, "winding": w, "expected": cfg.params.degree(j) }));
    }
    let worst = checks.0.iter().filter(|c| c.bound == BOUNDARY_TOL).map(|c| c.value).fold(0.0, f64::max);
    Ok((
        json!({
            "max_residual": worst,
            "annuli": annuli,
            "continuity": global.iter().map(|(n, r)| json!({ "boundary": n, "residual": r })).collect::<Vec<_>>(),
            "power_windings": windings,
        }),
        checks,
    ))
}

pub fn singular(cfg: &Config) -> Result<(Value, Checks), CliError> {
    let p = &cfg.params;
    let map = GlobalMap::new(p.clone())?;
    let mut checks = Checks::default();
    let mut annuli = Vec::new();
    for (i, g) in map.annuli().iter().enumerate() {
        let j = i + 1;
        let data = branched_data(g.n(), g.big_m(), g.log_r(), g.c())?;
        let expected = (g.big_m() - g.n()) as f64;
        checks.equal(format!("annulus {j} critical point count"), data.branched_points.len() as f64, expected);
        checks.equal(format!("annulus {j} zero count"), data.zeros.len() as f64, expected);
        let (plus, minus) = data.branched_values;
        let target = g.c().scale_log(g.n() as f64 * g.log_r());
        let value_err = plus.log_distance(&target).max(minus.log_distance(&(target * LogPoint::new(0.0, PI))));
        checks.below(format!("annulus {j} critical values"), value_err, SLIT_TOL);

        let crit: Vec<Result<i64, powerfold::Error>> = data
            .branched_points
            .par_iter()
            .map(|v| {
                let value = if v.sign > 0 { plus } else { minus };
                winding_number_about(&map, v.point, v.point.log_mod + 1e-4f64.ln(), WINDING_SAMPLES, value)
            })
            .collect();
        let zeros: Vec<Result<i64, powerfold::Error>> = data
            .zeros
            .par_iter()
            .map(|v| winding_number(&map, v.point, v.point.log_mod + 1e-4f64.ln(), WINDING_SAMPLES))
            .collect();
        let mut records = Vec::new();
        for (v, w) in data.branched_points.iter().zip(crit) {
            let w = w?;
            checks.equal(format!("critical point ({j},{},{}) winding", v.k, v.l), w as f64, 2.0);
            records.push(json!({ "k": v.k, "l": v.l, "log_mod": v.point.log_mod, "arg": v.point.arg, "sign": v.sign, "winding": w }));
        }
        let mut zero_records = Vec::new();
        for (v, w) in data.zeros.iter().zip(zeros) {
            let w = w?;
            checks.equal(format!("zero ({j},{},{}) winding", v.k, v.l), w as f64, 1.0);
            zero_records.push(json!({ "k": v.k, "l": v.l, "log_mod": v.point.log_mod, "arg": v.point.arg, "winding": w }));
        }
        annuli.push(json!({
            "j": j,
            "n": g.n(),
            "M": g.big_m(),
            "critical_points": records,
            "zeros": zero_records,
            "critical_values": { "plus": [plus.log_mod, plus.arg], "minus": [minus.log_mod, minus.arg], "error": value_err },
        }));
    }
    let origin = winding_number(&map, LogPoint::origin(), p.log_radius(1) - 1.0, WINDING_SAMPLES)?;
    checks.equal("origin multiplicity", origin as f64, p.degree(1) as f64);
    Ok((json!({ "annuli": annuli, "origin_winding": origin }), checks))
}

pub fn dilatation(cfg: &Config) -> Result<(Value, Checks), CliError> {
    let p = &cfg.params;
    let map = GlobalMap::new(p.clone())?;
    let mut checks = Checks::default();
    let report = dilatation_report(p, cfg.verify.dilatation_samples)?;
    checks.holds("sampled K is finite", report.k_hat.is_finite());

    // annuli with the same degree ratio are scaled copies of each other
    let interp: Vec<_> = report.interp().collect();
    let mut ratio_spread = 0.0f64;
    for (a, x) in interp.iter().enumerate() {
        for y in &interp[a + 1..] {
            if x.big_m * y.n == y.big_m * x.n {
                ratio_spread = ratio_spread.max((x.max_k - y.max_k).abs());
            }
        }
    }
    checks.below("equal-ratio K agreement", ratio_spread, RATIO_TOL);

    let grid = cfg.verify.grid.max(1);
    let lo = p.log_radius(1) - 1.0;
    let hi = p.log_radius(p.depth());
    let scan = localization_scan(&map, grid, grid, lo, hi, MU_THRESHOLD);
    checks.equal("distorted samples outside interpolation annuli", scan.misplaced.len() as f64, 0.0);

    let tripling: f64 = sigma_local_k(Complex::new(0.0, 2.0), 1e-5)?;
    checks.below("fold tripling K", (tripling - 3.0).abs(), TRIPLING_TOL);

    let bound = integral_bound(p, report.k_hat, None)?;
    let verdict = match bound.verdict {
        Summability::Convergent { tail_bound } => json!({ "convergent": { "tail_bound": tail_bound } }),
        Summability::Divergent => json!("divergent"),
        Summability::FinitePrefixOnly => json!("finite-prefix-only"),
    };
    Ok((
        json!({
            "k_hat": report.k_hat,
            "annuli": report.annuli.iter().map(|a| json!({
                "region": format!("{:?}", a.kind),
                "n": a.n,
                "M": a.big_m,
                "max_k": a.max_k,
                "samples": a.samples,
                "discards": a.discards,
            })).collect::<Vec<_>>(),
            "equal_ratio_spread": ratio_spread,
            "localization": {
                "grid": grid,
                "samples": scan.samples,
                "discards": scan.discards,
                "distorted": scan.distorted,
                "misplaced": scan.misplaced.iter().map(|z| [z.log_mod, z.arg]).collect::<Vec<_>>(),
                "max_mu": scan.max_mu,
            },
            "tripling_k": tripling,
            "integral_bound": { "truncated": bound.truncated, "terms": bound.terms, "total": bound.total(), "verdict": verdict },
        }),
        checks,
    ))
}

/// Default annulus range `2..=J-1`: `A_1` contains the fixed point `0`.
pub fn wandering_range(p: &Params<f64>, v: &VerifySettings) -> std::ops::RangeInclusive<usize> {
    match v.js {
        Some((a, b)) => a..=b,
        None => 2..=p.depth().saturating_sub(1),
    }
}

/// `Err(Hypothesis)` when the radii do not follow the wandering rule.
pub fn wandering(cfg: &Config) -> Result<(Value, Checks), CliError> {
    let map = GlobalMap::new(cfg.params.clone())?;
    let v = &cfg.verify;
    let rep = verify_wandering(&map, v.alpha, v.mode, wandering_range(&cfg.params, v), v.samples, cfg.seed)?;
    if !rep.hypothesis_holds {
        return Err(CliError::Hypothesis(format!(
            "radius rule fails at j = {} (residual {:e})",
            rep.rule_worst_j, rep.rule_residual
        )));
    }
    let mut checks = Checks::default();
    for r in &rep.records {
        checks.equal(format!("A_{} images outside A_{}", r.j, r.j + 1), r.failures as f64, 0.0);
        checks.holds(format!("A_{} margin positive", r.j), r.min_margin > 0.0);
        checks.below(format!("circle ladder at r_{}", r.j), r.ladder_residual, LADDER_TOL);
    }
    let mode = match rep.mode {
        AnnulusMode::Literal => "literal",
        AnnulusMode::Shrink => "shrink",
    };
    Ok((
        json!({
            "alpha": rep.alpha,
            "mode": mode,
            "seed": cfg.seed,
            "rule_residual": rep.rule_residual,
            "records": rep.records.iter().map(|r| json!({
                "j": r.j,
                "source": [r.source.0, r.source.1],
                "target": [r.target.0, r.target.1],
                "samples": r.samples,
                "failures": r.failures,
                "min_margin": r.min_margin,
                "first_failure": r.first_failure.map(|z| [z.log_mod, z.arg]),
                "ladder_residual": r.ladder_residual,
            })).collect::<Vec<_>>(),
        }),
        checks,
    ))
}

pub const SUITES: [&str; 4] = ["boundaries", "singular", "dilatation", "wandering"];

/// Runs the named suite (or all). The report lists every check; the error,
/// if any, is the first failing assertion or the violated hypothesis.
pub fn verify(cfg: &Config, suite: &str) -> Result<(Value, Option<CliError>), CliError> {
    let names: Vec<&str> = match suite {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        other => {
            return Err(CliError::Parse {
                line: None,
                key: Some("--suite".into()),
                message: format!("unknown suite '{other}'"),
            })
        }
    };
    let mut sections = serde_json::Map::new();
    let mut failure: Option<CliError> = None;
    let mut hypothesis: Option<CliError> = None;
    for name in names {
        let outcome = match name {
            "boundaries" => boundaries(cfg),
            "singular" => singular(cfg),
            "dilatation" => dilatation(cfg),
            _ => wandering(cfg),
        };
        match outcome {
            Ok((details, checks)) => {
                let pass = checks.first_failure().is_none();
                if let (Some(c), None) = (checks.first_failure(), &failure) {
                    failure = Some(CliError::Failed {
                        suite: name.into(),
                        message: format!("{}: {:e} (bound {:e})", c.name, c.value, c.bound),
                    });
                }
                sections.insert(name.into(), json!({ "pass": pass, "checks": checks, "details": details }));
            }
            Err(e @ CliError::Hypothesis(_)) => {
                sections.insert(name.into(), json!({ "pass": false, "hypothesis_violated": e.to_string() }));
                hypothesis.get_or_insert(e);
            }
            Err(e) => {
                sections.insert(name.into(), json!({ "pass": false, "error": e.to_string() }));
                if failure.is_none() {
                    failure = Some(CliError::Failed {
                        suite: name.into(),
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    let err = failure.or(hypothesis);
    let report = json!({
        "command": "verify",
        "suite": suite,
        "status": if err.is_none() { "pass" } else { "fail" },
        "suites": sections,
    });
    Ok((report, err))
}

pub fn render_image(cfg: &Config, spec: &RenderSpec, output: &Path) -> Result<Value, CliError> {
    let (image, report) = render(&cfg.params, spec)?;
    write(output, &image.to_ppm())?;
    let mut v = serde_json::to_value(&report).expect("serializable");
    v["output"] = json!(output.display().to_string());
    Ok(v)
}

pub fn render_cell(m: u64, output: &Path) -> Result<Value, CliError> {
    let cell = build_cell::<f64>(m)?;
    write(output, cell_svg(&cell).as_bytes())?;
    Ok(json!({
        "m": m,
        "triangles": cell.pieces().len(),
        "max_dilatation": cell.max_dilatation(),
        "output": output.display().to_string(),
    }))
}

/// Singular data as CSV: one row per critical point, zero and critical value.
pub fn report_csv(cfg: &Config) -> Result<Vec<u8>, CliError> {
    let data = GlobalMap::new(cfg.params.clone())?.singular_data()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    };
    w.write_record(["kind", "annulus", "k", "l", "log_mod", "arg", "sign", "multiplicity"])
        .map_err(csv_err)?;
    for c in &data.critical_points {
        w.serialize(("critical", c.annulus, c.k, c.l, c.point.log_mod, c.point.arg, c.sign, 2u64))
            .map_err(csv_err)?;
    }
    for z in &data.zeros {
        w.serialize(("zero", z.annulus, z.k, z.l, z.point.log_mod, z.point.arg, 0i8, z.multiplicity))
            .map_err(csv_err)?;
    }
    for v in &data.critical_values {
        w.serialize(("critical-value", v.annulus, 0u64, 0u64, v.plus.log_mod, v.plus.arg, 1i8, 0u64))
            .map_err(csv_err)?;
        w.serialize(("critical-value", v.annulus, 0u64, 0u64, v.minus.log_mod, v.minus.arg, -1i8, 0u64))
            .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    })
}

/// Orbit of `h_n` as CSV `step,log_mod,arg,tag`, plus the stopping status.
pub fn orbit_csv(
    cfg: &Config,
    z0: LogPoint<f64>,
    steps: usize,
    escape: Option<f64>,
    n_cut: usize,
) -> Result<(Vec<u8>, Value), CliError> {
    let map = GlobalMap::new(cfg.params.clone())?;
    let trace = orbit_truncated(&map, z0, n_cut, steps, escape)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    };
    w.write_record(["step", "log_mod", "arg", "tag"]).map_err(csv_err)?;
    for row in trace.rows() {
        w.serialize(row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    })?;
    Ok((bytes, json!({ "status": format!("{:?}", trace.status), "points": trace.points.len() })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse;

    fn standard() -> Config {
        let mut cfg = parse("M = { first = 2, ratio = 2 }\ndepth = 4\n").unwrap();
        cfg.verify.samples = 200;
        cfg
    }

    #[test]
    fn boundaries_pass_on_standard_family() {
        let (v, checks) = boundaries(&standard()).unwrap();
        assert!(checks.first_failure().is_none(), "{:?}", checks.first_failure());
        assert!(v["max_residual"].as_f64().unwrap() < BOUNDARY_TOL);
    }

    #[test]
    fn perturbed_radii_violate_hypothesis() {
        let mut cfg = standard();
        let lr = cfg.params.log_radius(3) + 0.25;
        cfg.params = cfg.params.with_log_radius(3, lr).unwrap();
        assert!(matches!(wandering(&cfg), Err(CliError::Hypothesis(_))));
    }

    #[test]
    fn report_has_header_and_rows() {
        let csv = String::from_utf8(report_csv(&standard()).unwrap()).unwrap();
        assert!(csv.starts_with("kind,annulus,k,l,log_mod,arg,sign,multiplicity\n"));
        // 2 + 4 + 8 critical points, as many zeros plus the origin, 3 value pairs
        assert_eq!(csv.lines().count(), 1 + 14 + 15 + 6);
    }
}
