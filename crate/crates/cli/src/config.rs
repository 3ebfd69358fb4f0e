//! TOML run configuration.
//!
//! ```toml
//! mode = "plane"            # or "disk", with r_inf
//! c = { re = 1.0, im = 0.0 } # or { logmod = 0.0, arg = 0.0 }
//! M = { first = 2, ratio = 2 }
//! depth = 4
//! r = "wandering-rule"      # or [r_1, ...] or { log = [...] }
//! seed = 7
//!
//! [verify]
//! samples = 1000
//! alpha = 1.1
//! mode = "shrink"
//! j = [2, 3]
//! ```

use num_complex::Complex;
use powerfold::dynamics::AnnulusMode;
use powerfold::sequences::{radius_rule_log_radii, GrowthRule, Mode, Params};
use powerfold::LogPoint;
use serde::Deserialize;
use toml::Spanned;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Spanned<String>>,
    r_inf: Option<f64>,
    c: Option<Spanned<RawConstant>>,
    #[serde(rename = "M")]
    degrees: Spanned<RawDegrees>,
    depth: Option<Spanned<usize>>,
    r: Option<Spanned<RawRadii>>,
    seed: Option<u64>,
    verify: Option<RawVerify>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawConstant {
    Cartesian { re: f64, im: f64 },
    Polar { logmod: f64, arg: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawDegrees {
    List(Vec<u64>),
    Geometric { first: u64, ratio: u64 },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawRadii {
    Plain(Vec<f64>),
    Log { log: Vec<f64> },
    Rule(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    samples: Option<usize>,
    alpha: Option<f64>,
    mode: Option<Spanned<String>>,
    j: Option<Spanned<Vec<usize>>>,
    dilatation_samples: Option<usize>,
    grid: Option<usize>,
}

/// Sample counts and wandering parameters for `verify`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub samples: usize,
    pub alpha: f64,
    pub mode: AnnulusMode,
    /// Inclusive range of annuli for the wandering suite; `None` means
    /// `2..=J-1`.
    pub js: Option<(usize, usize)>,
    pub dilatation_samples: usize,
    /// Side of the global `|mu|` localization grid.
    pub grid: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            samples: 1000,
            alpha: 1.1,
            mode: AnnulusMode::Shrink,
            js: None,
            dilatation_samples: 400,
            grid: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub params: Params<f64>,
    pub seed: u64,
    pub verify: VerifySettings,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn parse_error<T>(src: &str, span: std::ops::Range<usize>, key: &str, message: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Parse {
        line: Some(line_of(src, span.start)),
        key: Some(key.to_string()),
        message: message.into(),
    })
}

pub fn parse_mode(s: &str) -> Option<AnnulusMode> {
    match s {
        "literal" => Some(AnnulusMode::Literal),
        "shrink" => Some(AnnulusMode::Shrink),
        _ => None,
    }
}

/// Parses a configuration; syntax and shape problems are [`CliError::Parse`],
/// parameter-validation failures are [`CliError::Invalid`].
pub fn parse(src: &str) -> Result<Config, CliError> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| CliError::Parse {
        line: e.span().map(|s| line_of(src, s.start)),
        key: None,
        message: e.message().to_string(),
    })?;

    let c = match raw.c.as_ref().map(|c| c.get_ref()) {
        None => LogPoint::one(),
        Some(RawConstant::Cartesian { re, im }) => LogPoint::from_complex(Complex::new(*re, *im)),
        Some(RawConstant::Polar { logmod, arg }) => LogPoint::new(*logmod, *arg),
    };

    let mode = match raw.mode.as_ref() {
        None => Mode::Plane,
        Some(m) => match (m.get_ref().as_str(), raw.r_inf) {
            ("plane", _) => Mode::Plane,
            ("disk", Some(r)) if r > 0.0 => Mode::Disk { log_r_inf: r.ln() },
            ("disk", _) => return parse_error(src, m.span(), "r_inf", "disk mode needs a positive r_inf"),
            (other, _) => return parse_error(src, m.span(), "mode", format!("unknown mode '{other}'")),
        },
    };

    let depth = raw.depth.as_ref().map(|d| *d.get_ref());
    let (degrees, rule) = match raw.degrees.get_ref() {
        RawDegrees::List(v) => {
            if let (Some(d), Some(span)) = (depth, raw.depth.as_ref().map(|d| d.span())) {
                if d != v.len() {
                    return parse_error(src, span, "depth", format!("depth {d} but {} degrees", v.len()));
                }
            }
            (v.clone(), None)
        }
        RawDegrees::Geometric { first, ratio } => {
            let Some(d) = depth else {
                return parse_error(src, raw.degrees.span(), "M", "a geometric degree rule needs 'depth'");
            };
            let mut v = Vec::with_capacity(d);
            let mut m = *first;
            for k in 0..d {
                if k > 0 {
                    m = m.checked_mul(*ratio).ok_or(CliError::Invalid(powerfold::Error::Overflow { depth: k + 1 }))?;
                }
                v.push(m);
            }
            (v, Some(GrowthRule::Geometric { ratio: *ratio as f64 }))
        }
    };

    let log_radii = match raw.r.as_ref().map(|r| (r.get_ref(), r.span())) {
        None => radius_rule_log_radii(&degrees, c)?,
        Some((RawRadii::Rule(s), span)) => {
            if s != "wandering-rule" {
                return parse_error(src, span, "r", format!("unknown radius rule '{s}'"));
            }
            radius_rule_log_radii(&degrees, c)?
        }
        Some((RawRadii::Log { log }, _)) => log.clone(),
        Some((RawRadii::Plain(v), _)) => {
            let mut out = Vec::with_capacity(v.len());
            for (j, &r) in v.iter().enumerate() {
                if !(r > 0.0) || !r.is_finite() {
                    return Err(CliError::Invalid(powerfold::Error::NonPositiveRadius { index: j + 1 }));
                }
                out.push(r.ln());
            }
            out
        }
    };

    let mut params = Params::validate(degrees, log_radii, c, mode)?;
    if let Some(rule) = rule {
        params = params.with_rule(rule);
    }

    let mut verify = VerifySettings::default();
    if let Some(v) = raw.verify {
        if let Some(s) = v.samples {
            verify.samples = s;
        }
        if let Some(a) = v.alpha {
            verify.alpha = a;
        }
        if let Some(m) = v.mode {
            verify.mode = match parse_mode(m.get_ref()) {
                Some(mode) => mode,
                None => return parse_error(src, m.span(), "verify.mode", format!("unknown mode '{}'", m.get_ref())),
            };
        }
        if let Some(j) = v.j {
            match j.get_ref().as_slice() {
                [a, b] if a <= b && *a >= 1 => verify.js = Some((*a, *b)),
                _ => return parse_error(src, j.span(), "verify.j", "expected [first, last] with 1 <= first <= last"),
            }
        }
        if let Some(s) = v.dilatation_samples {
            verify.dilatation_samples = s;
        }
        if let Some(g) = v.grid {
            verify.grid = g;
        }
    }

    Ok(Config {
        params,
        seed: raw.seed.unwrap_or(0),
        verify,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wandering_rule_config() {
        let cfg = parse("M = { first = 2, ratio = 2 }\ndepth = 4\nr = \"wandering-rule\"\n").unwrap();
        assert_eq!(cfg.params.degrees(), &[2, 4, 8, 16]);
        assert_eq!(cfg.params.log_radii()[..3], [PI, 2.0 * PI, 6.0 * PI]);
        assert!(cfg.params.rule().is_some());
    }

    #[test]
    fn explicit_lists_and_constants() {
        let cfg = parse("M = [2, 4]\nr = { log = [1.0, 3.0] }\nc = { logmod = 0.5, arg = 1.0 }\n").unwrap();
        assert_eq!(cfg.params.log_radii(), &[1.0, 3.0]);
        assert_eq!(cfg.params.base(), LogPoint::new(0.5, 1.0));
        let cfg = parse("M = [2, 4]\nr = [10.0, 1000.0]\nc = { re = 0.0, im = 2.0 }\n").unwrap();
        assert!((cfg.params.base().arg - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_reports_line() {
        match parse("M = [2, 4]\nr = [10.0, 1000.0]\nbogus = 3\n") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn growth_violation_is_invalid_not_parse() {
        match parse("M = [2, 4]\nr = [1.0, 1.1]\n") {
            Err(CliError::Invalid(powerfold::Error::GrowthViolation { index: 1, .. })) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_mode_names_key() {
        match parse("M = [2]\nr = [2.0]\n\n[verify]\nmode = \"sideways\"\n") {
            Err(CliError::Parse { line: Some(5), key: Some(k), .. }) => assert_eq!(k, "verify.mode"),
            other => panic!("{other:?}"),
        }
    }
}
