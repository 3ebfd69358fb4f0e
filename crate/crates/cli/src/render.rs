//! Raster output: binary PPM images of region tags, `log |h|`, escape steps
//! and the fold support.

use std::collections::HashMap;

use num_complex::Complex;
use powerfold::dynamics::{orbit, OrbitStatus};
use powerfold::folding::AnnulusMap;
use powerfold::globalmap::{GlobalMap, RegionKind};
use powerfold::sequences::Params;
use powerfold::LogPoint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::CliError;

/// Reserved color of pixels whose evaluation failed.
pub const SENTINEL: [u8; 3] = [255, 0, 255];
pub const MAX_SIDE: usize = 16384;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Window {
    LogPolar { log_mod: [f64; 2], arg: [f64; 2] },
    Cartesian { re: [f64; 2], im: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coloring {
    RegionTag,
    LogModulus,
    EscapeStep,
    FoldSupportMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub coloring: Coloring,
    pub output: Option<String>,
    /// Orbit length for `escape-step`.
    pub max_steps: usize,
    /// `(n, M)` of a standalone interpolation for `fold-support-mask`;
    /// defaults to the first annulus of the configuration.
    pub annulus: Option<(u64, u64)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    window: Spanned<Window>,
    width: usize,
    height: usize,
    coloring: Coloring,
    output: Option<String>,
    max_steps: Option<usize>,
    annulus: Option<Spanned<Vec<u64>>>,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

pub fn parse_spec(src: &str) -> Result<RenderSpec, CliError> {
    let raw: RawSpec = toml::from_str(src).map_err(|e| CliError::Parse {
        line: e.span().map(|s| line_of(src, s.start)),
        key: None,
        message: e.message().to_string(),
    })?;
    let bad = |span: std::ops::Range<usize>, key: &str, msg: &str| CliError::Parse {
        line: Some(line_of(src, span.start)),
        key: Some(key.into()),
        message: msg.into(),
    };
    let window = *raw.window.get_ref();
    let nonempty = match window {
        Window::LogPolar { log_mod, arg } => log_mod[0] < log_mod[1] && arg[0] < arg[1],
        Window::Cartesian { re, im } => re[0] < re[1] && im[0] < im[1],
    };
    if !nonempty {
        return Err(bad(raw.window.span(), "window", "window must be a nonempty rectangle"));
    }
    if raw.width == 0 || raw.height == 0 || raw.width > MAX_SIDE || raw.height > MAX_SIDE {
        return Err(CliError::Parse {
            line: None,
            key: Some("width/height".into()),
            message: format!("resolution must be between 1 and {MAX_SIDE} per side"),
        });
    }
    let annulus = match raw.annulus {
        None => None,
        Some(a) => match a.get_ref().as_slice() {
            [n, m] if *n >= 1 && m > n => Some((*n, *m)),
            _ => return Err(bad(a.span(), "annulus", "expected [n, M] with M > n >= 1")),
        },
    };
    Ok(RenderSpec {
        window,
        width: raw.width,
        height: raw.height,
        coloring: raw.coloring,
        output: raw.output,
        max_steps: raw.max_steps.unwrap_or(64),
        annulus,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
    /// Per-pixel piece labels (fold-support mask only).
    labels: Vec<Option<(usize, i64)>>,
}

impl Image {
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn sentinel_count(&self) -> usize {
        self.pixels.iter().filter(|p| **p == SENTINEL).count()
    }

    /// 4-connected components of labelled pixels; neighbors join only when
    /// their labels agree, so the slits act as barriers.
    pub fn labelled_components(&self) -> usize {
        let (w, h) = (self.width, self.height);
        let mut seen = vec![false; w * h];
        let mut count = 0;
        for start in 0..w * h {
            let Some(label) = self.labels[start] else { continue };
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(k) = stack.pop() {
                let (x, y) = (k % w, k / w);
                let mut nb = Vec::with_capacity(4);
                if x > 0 {
                    nb.push(k - 1);
                }
                if x + 1 < w {
                    nb.push(k + 1);
                }
                if y > 0 {
                    nb.push(k - w);
                }
                if y + 1 < h {
                    nb.push(k + w);
                }
                for q in nb {
                    if !seen[q] && self.labels[q] == Some(label) {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderReport {
    pub width: usize,
    pub height: usize,
    pub coloring: Coloring,
    pub error_pixels: usize,
    /// Distinct colors per region kind, in first-seen order.
    pub regions: Vec<String>,
    pub fold_components: Option<usize>,
}

fn pixel_point(spec: &RenderSpec, i: usize, row: usize) -> LogPoint<f64> {
    let fx = (i as f64 + 0.5) / spec.width as f64;
    let fy = 1.0 - (row as f64 + 0.5) / spec.height as f64;
    match spec.window {
        Window::LogPolar { log_mod, arg } => LogPoint::new(
            log_mod[0] + fx * (log_mod[1] - log_mod[0]),
            arg[0] + fy * (arg[1] - arg[0]),
        ),
        Window::Cartesian { re, im } => LogPoint::from_complex(Complex::new(
            re[0] + fx * (re[1] - re[0]),
            im[0] + fy * (im[1] - im[0]),
        )),
    }
}

const POWER: [[u8; 3]; 6] = [
    [38, 70, 140],
    [46, 120, 90],
    [150, 110, 40],
    [110, 50, 120],
    [40, 120, 140],
    [140, 60, 50],
];
const INTERP: [[u8; 3]; 6] = [
    [120, 160, 230],
    [130, 210, 160],
    [240, 200, 120],
    [200, 150, 220],
    [130, 210, 230],
    [230, 150, 140],
];

fn shade(c: [u8; 3], f: f64) -> [u8; 3] {
    c.map(|v| (v as f64 * f).round().clamp(0.0, 255.0) as u8)
}

fn region_color(map: &GlobalMap<f64>, z: LogPoint<f64>) -> ([u8; 3], String) {
    let tag = map.tag(z);
    let color = match tag.kind {
        RegionKind::InnerDisk => [20, 20, 20],
        RegionKind::PowerAnnulus(j) => POWER[(j - 1) % POWER.len()],
        RegionKind::InterpAnnulus(j) => {
            let base = INTERP[(j - 1) % INTERP.len()];
            let base = if tag.sector.unwrap_or(1) % 2 == 0 { shade(base, 0.85) } else { base };
            if tag.in_fold_support == Some(true) {
                shade(base, 0.6)
            } else {
                base
            }
        }
        RegionKind::BeyondTruncation => [128, 128, 128],
        RegionKind::OutsideDisk => [48, 48, 48],
    };
    (color, tag.label())
}

fn hue(arg: f64, brightness: f64) -> [u8; 3] {
    let third = 2.0 * std::f64::consts::PI / 3.0;
    let ch = |phase: f64| 255.0 * brightness * (0.5 + 0.5 * (arg - phase).cos());
    [ch(0.0), ch(third), ch(2.0 * third)].map(|v| v.round().clamp(0.0, 254.0) as u8)
}

fn escape_color(status: OrbitStatus, max_steps: usize) -> [u8; 3] {
    match status {
        OrbitStatus::Completed(_) => [0, 0, 0],
        OrbitStatus::Escaped(k) => {
            let t = 1.0 - k as f64 / (max_steps.max(1) + 1) as f64;
            [(255.0 * t) as u8, (200.0 * t * t) as u8, (80.0 + 100.0 * t) as u8]
        }
        OrbitStatus::LeftTruncation(k) => {
            let t = 1.0 - k as f64 / (max_steps.max(1) + 1) as f64;
            [30, (90.0 * t) as u8, (160.0 + 90.0 * t) as u8]
        }
    }
}

/// Evaluates the coloring per pixel; rows are computed in parallel and
/// assembled in order, so the image does not depend on the worker count.
pub fn render(params: &Params<f64>, spec: &RenderSpec) -> Result<(Image, RenderReport), CliError> {
    let map = GlobalMap::new(params.clone())?;
    let fold = match spec.coloring {
        Coloring::FoldSupportMask => Some(match spec.annulus {
            Some((n, m)) => AnnulusMap::new(n, m, 0.0, LogPoint::one())?,
            None => map
                .annuli()
                .first()
                .cloned()
                .ok_or_else(|| CliError::Invalid(powerfold::Error::InvalidParameter(
                    "fold-support mask needs an interpolation annulus".into(),
                )))?,
        }),
        _ => None,
    };

    type Px = ([u8; 3], Option<String>, Option<(usize, i64)>);
    let rows: Vec<Vec<Px>> = (0..spec.height)
        .into_par_iter()
        .map(|row| {
            (0..spec.width)
                .map(|i| {
                    let z = pixel_point(spec, i, row);
                    match spec.coloring {
                        Coloring::RegionTag => {
                            let (c, label) = region_color(&map, z);
                            (c, Some(label), None)
                        }
                        Coloring::LogModulus => match map.h(z) {
                            Ok(w) if w.is_origin() => ([0, 0, 0], None, None),
                            Ok(w) => {
                                let band = (w.log_mod / std::f64::consts::PI).rem_euclid(1.0);
                                (hue(w.arg, 0.35 + 0.65 * band), None, None)
                            }
                            Err(_) => (SENTINEL, None, None),
                        },
                        Coloring::EscapeStep => match orbit(&map, z, spec.max_steps, None) {
                            Ok(o) => (escape_color(o.status, spec.max_steps), None, None),
                            Err(_) => (SENTINEL, None, None),
                        },
                        Coloring::FoldSupportMask => {
                            let g = fold.as_ref().expect("annulus present");
                            if z.is_origin() || z.log_mod < g.log_r() || z.log_mod > g.log_outer() {
                                return ([0, 0, 0], None, None);
                            }
                            match g.trace(z, Some(powerfold::folding::Side::Below)) {
                                Ok(t) if t.in_fold_support => {
                                    ([255, 255, 255], None, Some((t.sector, t.piece.component)))
                                }
                                Ok(_) => ([64, 64, 64], None, None),
                                Err(_) => (SENTINEL, None, None),
                            }
                        }
                    }
                })
                .collect()
        })
        .collect();

    let mut pixels = Vec::with_capacity(spec.width * spec.height);
    let mut labels = Vec::with_capacity(spec.width * spec.height);
    let mut regions: Vec<String> = Vec::new();
    let mut index: HashMap<String, ()> = HashMap::new();
    for row in rows {
        for (c, region, label) in row {
            pixels.push(c);
            labels.push(label);
            if let Some(r) = region {
                if index.insert(r.clone(), ()).is_none() {
                    regions.push(r);
                }
            }
        }
    }
    let image = Image {
        width: spec.width,
        height: spec.height,
        pixels,
        labels,
    };
    let report = RenderReport {
        width: spec.width,
        height: spec.height,
        coloring: spec.coloring,
        error_pixels: image.sentinel_count(),
        regions,
        fold_components: fold.as_ref().map(|_| image.labelled_components()),
    };
    Ok((image, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use powerfold::sequences::generate_standard_family;

    #[test]
    fn spec_parsing() {
        let s = parse_spec(
            "window = { re = [-2.0, 2.0], im = [-2.0, 2.0] }\nwidth = 8\nheight = 4\ncoloring = \"fold-support-mask\"\nannulus = [2, 6]\n",
        )
        .unwrap();
        assert_eq!(s.annulus, Some((2, 6)));
        assert!(matches!(
            parse_spec("window = { re = [2.0, -2.0], im = [-2.0, 2.0] }\nwidth = 8\nheight = 4\ncoloring = \"region-tag\"\n"),
            Err(CliError::Parse { line: Some(1), .. })
        ));
        assert!(parse_spec("window = { re = [-2.0, 2.0], im = [-2.0, 2.0] }\nwidth = 0\nheight = 4\ncoloring = \"region-tag\"\n").is_err());
    }

    #[test]
    fn fold_mask_has_eight_components() {
        let p = generate_standard_family::<f64>(2, 2, 2, LogPoint::one()).unwrap();
        let r = 1.6f64.exp();
        let spec = RenderSpec {
            window: Window::Cartesian { re: [-r, r], im: [-r, r] },
            width: 240,
            height: 240,
            coloring: Coloring::FoldSupportMask,
            output: None,
            max_steps: 0,
            annulus: Some((2, 6)),
        };
        let (img, rep) = render(&p, &spec).unwrap();
        assert_eq!(rep.fold_components, Some(8));
        assert_eq!(img.sentinel_count(), 0);
        let ppm = img.to_ppm();
        assert!(ppm.starts_with(b"P6\n240 240\n255\n"));
        assert_eq!(ppm.len(), 15 + 240 * 240 * 3);
    }
}
