//! Annulus interpolation between `z^n` and `z^M`.
//!
//! The pipeline for a point of the annulus `r <= |z| <= r exp(pi/n)`:
//!
//! 1. pass to unfolding coordinates `w = (n/pi)(log z - log r)`, a point of the
//!    strip `0 <= Re w <= 1` slit along `{Im w odd, Re w < 1/2}`;
//! 2. open the slits with the piecewise-linear map [`CellMap::psi`], sector by
//!    sector with cell parameter `m` or `m + 1`;
//! 3. apply the circle reparametrization [`tau`] (radially interpolated with the
//!    identity) and the power `z^M`;
//! 4. on the lens components adjacent to the slits, identify the two slit
//!    sides with the fold map [`sigma`];
//! 5. rescale by `c r^n`.
//!
//! Steps 1-3 collapse into a closed form in unfolded coordinates
//! `zeta = x + iy`: the power-map image has log-modulus `pi M x / n` and
//! argument `pi y (x M/n + (1 - x) m')`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logpoint::LogPoint;
use crate::scalar::{angle_0_2pi, int, lit, snap_tol, sint, to_f64, Real};

/// Checkerboard color of a triangulation vertex; black vertices end up at
/// `+1`, white ones at `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexColor {
    Black,
    White,
    Uncolored,
}

/// Which side of a slit a point on the slit is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Smaller argument (smaller imaginary part in unfolding coordinates).
    Below,
    /// Larger argument.
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle<T> {
    pub vertices: [Complex<T>; 3],
    pub colors: [VertexColor; 3],
}

impl<T: Real> Triangle<T> {
    /// Barycentric coordinates of `z`.
    pub fn barycentric(&self, z: Complex<T>) -> [T; 3] {
        let [a, b, c] = self.vertices;
        let det = (b.re - a.re) * (c.im - a.im) - (c.re - a.re) * (b.im - a.im);
        let l1 = ((b.re - z.re) * (c.im - z.im) - (c.re - z.re) * (b.im - z.im)) / det;
        let l2 = ((c.re - z.re) * (a.im - z.im) - (a.re - z.re) * (c.im - z.im)) / det;
        [l1, l2, T::one() - l1 - l2]
    }

    pub fn signed_area(&self) -> T {
        let [a, b, c] = self.vertices;
        ((b.re - a.re) * (c.im - a.im) - (c.re - a.re) * (b.im - a.im)) / lit(2.0)
    }

    pub fn centroid(&self) -> Complex<T> {
        let [a, b, c] = self.vertices;
        (a + b + c) / lit::<T>(3.0)
    }
}

/// Real-linear map `(x, y) -> (a x + b y, c x + d y) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine<T> {
    pub matrix: [[T; 2]; 2],
    pub offset: Complex<T>,
}

impl<T: Real> Affine<T> {
    /// The unique affine map carrying `from` onto `to` vertex by vertex.
    pub fn between(from: &Triangle<T>, to: &Triangle<T>) -> Self {
        let [d0, d1, d2] = from.vertices;
        let [i0, i1, i2] = to.vertices;
        let (p, q) = (d1 - d0, d2 - d0);
        let (u, v) = (i1 - i0, i2 - i0);
        let det = p.re * q.im - q.re * p.im;
        // inverse of [[p.re, q.re], [p.im, q.im]]
        let inv = [[q.im / det, -q.re / det], [-p.im / det, p.re / det]];
        let a = u.re * inv[0][0] + v.re * inv[1][0];
        let b = u.re * inv[0][1] + v.re * inv[1][1];
        let c = u.im * inv[0][0] + v.im * inv[1][0];
        let d = u.im * inv[0][1] + v.im * inv[1][1];
        let lin = Self {
            matrix: [[a, b], [c, d]],
            offset: Complex::new(T::zero(), T::zero()),
        };
        let offset = i0 - lin.apply(d0);
        Self { offset, ..lin }
    }

    pub fn apply(&self, z: Complex<T>) -> Complex<T> {
        let [[a, b], [c, d]] = self.matrix;
        Complex::new(a * z.re + b * z.im, c * z.re + d * z.im) + self.offset
    }

    /// Wirtinger coefficients `(f_z, f_zbar)` of the linear part.
    pub fn wirtinger(&self) -> (Complex<T>, Complex<T>) {
        let [[a, b], [c, d]] = self.matrix;
        let two: T = lit(2.0);
        (
            Complex::new((a + d) / two, (c - b) / two),
            Complex::new((a - d) / two, (c + b) / two),
        )
    }

    /// `(|f_z| + |f_zbar|) / (|f_z| - |f_zbar|)`: ratio of the singular values.
    pub fn dilatation(&self) -> T {
        let (fz, fzb) = self.wirtinger();
        (fz.norm() + fzb.norm()) / (fz.norm() - fzb.norm())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPiece<T> {
    pub domain: Triangle<T>,
    pub image: Triangle<T>,
    pub affine: Affine<T>,
    pub dilatation: T,
}

/// The piecewise-linear unfolding on the fundamental square: `m + 2` matched
/// triangles, fanned from the apex `1 + i(m-1)/m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMap<T> {
    m: u64,
    pieces: Vec<CellPiece<T>>,
}

fn checker(j: u64, even: VertexColor) -> VertexColor {
    let odd = match even {
        VertexColor::Black => VertexColor::White,
        VertexColor::White => VertexColor::Black,
        VertexColor::Uncolored => VertexColor::Uncolored,
    };
    if j % 2 == 0 {
        even
    } else {
        odd
    }
}

/// Builds the matched triangulations for cell parameter `m >= 2`.
pub fn build_cell<T: Real>(m: u64) -> Result<CellMap<T>> {
    if m < 2 {
        return Err(Error::DegenerateCell { m });
    }
    let mt: T = int(m);
    let c = |re: T, im: T| Complex::new(re, im);
    let zero = T::zero();
    let one = T::one();
    let half: T = lit(0.5);
    let apex = c(one, int::<T>(m - 1) / mt);
    let apex_color = checker(m - 1, VertexColor::Black);
    let right = |j: u64| checker(j, VertexColor::Black);
    let slit_pt = |j: u64| c(int::<T>(j) / int::<T>(2 * m - 2), one);
    let slit_color = |j: u64| checker(j, VertexColor::White);
    let left_pt = |j: u64| c(zero, int::<T>(j) / mt);
    let left_color = |j: u64| checker(j, VertexColor::Black);

    let tri = |v: [Complex<T>; 3], k: [VertexColor; 3]| Triangle {
        vertices: v,
        colors: k,
    };
    let mut pairs = Vec::with_capacity(m as usize + 2);
    // identity triangle; the right-edge vertices 1 + ij/m, j < m-1, lie on its edge
    pairs.push((
        tri([c(zero, zero), c(one, zero), apex], [VertexColor::Black, right(0), apex_color]),
        tri([c(zero, zero), c(one, zero), apex], [VertexColor::Black, right(0), apex_color]),
    ));
    // left triangle (0, A, i) -> (0, A, i/m)
    pairs.push((
        tri([c(zero, zero), apex, slit_pt(0)], [VertexColor::Black, apex_color, slit_color(0)]),
        tri([c(zero, zero), apex, left_pt(1)], [VertexColor::Black, apex_color, left_color(1)]),
    ));
    // slit triangles (s_j, A, s_{j+1}) -> (i(j+1)/m, A, i(j+2)/m)
    for j in 0..m - 1 {
        pairs.push((
            tri([slit_pt(j), apex, slit_pt(j + 1)], [slit_color(j), apex_color, slit_color(j + 1)]),
            tri(
                [left_pt(j + 1), apex, left_pt(j + 2)],
                [left_color(j + 1), apex_color, left_color(j + 2)],
            ),
        ));
    }
    // top triangle (A, 1+i, i+1/2) -> (A, 1+i, i)
    pairs.push((
        tri([apex, c(one, one), c(half, one)], [apex_color, right(m), slit_color(m - 1)]),
        tri([apex, c(one, one), c(zero, one)], [apex_color, right(m), left_color(m)]),
    ));

    let pieces = pairs
        .into_iter()
        .map(|(domain, image)| {
            let affine = Affine::between(&domain, &image);
            CellPiece {
                dilatation: affine.dilatation(),
                domain,
                image,
                affine,
            }
        })
        .collect();
    Ok(CellMap { m, pieces })
}

/// Location of a strip point relative to the reflected cell structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StripPiece {
    /// `floor(Im / 2)`.
    pub period: i64,
    /// Whether the point sits in the upper, reflected half of its period.
    pub reflected: bool,
    /// Index into [`CellMap::pieces`].
    pub triangle: usize,
}

impl<T: Real> CellMap<T> {
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn pieces(&self) -> &[CellPiece<T>] {
        &self.pieces
    }

    pub fn max_dilatation(&self) -> T {
        self.pieces
            .iter()
            .fold(T::one(), |acc, p| acc.max(p.dilatation))
    }

    /// Index of the domain triangle containing a point of the closed unit square.
    pub fn locate(&self, z: Complex<T>) -> usize {
        let mut best = 0;
        let mut best_min = T::neg_infinity();
        for (k, piece) in self.pieces.iter().enumerate() {
            let b = piece.domain.barycentric(z);
            let lo = b[0].min(b[1]).min(b[2]);
            if lo > best_min {
                best_min = lo;
                best = k;
            }
            if lo >= -snap_tol::<T>() {
                return k;
            }
        }
        best
    }

    /// Evaluates the unfolding on the strip `0 <= Re z <= 1`, extended from the
    /// fundamental square by reflection in the lines `Im z = k`.
    pub fn psi(&self, z: Complex<T>, side: Option<Side>) -> Result<Complex<T>> {
        self.psi_traced(z, side).map(|(w, _)| w)
    }

    pub fn psi_traced(&self, z: Complex<T>, side: Option<Side>) -> Result<(Complex<T>, StripPiece)> {
        let tol = snap_tol::<T>();
        let (x, y) = (z.re, z.im);
        if !(x >= -tol && x <= T::one() + tol) || !y.is_finite() {
            return Err(Error::OutsideStrip {
                re: to_f64(x),
                im: to_f64(y),
            });
        }
        let x = x.max(T::zero()).min(T::one());
        let two: T = lit(2.0);
        let mut period = (y / two).floor();
        let mut y0 = y - two * period;
        if y0 > two - tol {
            y0 = T::zero();
            period = period + T::one();
        }
        if (y0 - T::one()).abs() <= tol {
            y0 = T::one();
        }
        let on_slit = y0 == T::one() && x < lit::<T>(0.5) - tol;
        let reflected = if y0 < T::one() {
            false
        } else if y0 == T::one() {
            match (on_slit, side) {
                (false, _) => false,
                (true, None) => return Err(Error::OnSlitWithoutSide),
                (true, Some(Side::Below)) => false,
                (true, Some(Side::Above)) => true,
            }
        } else {
            true
        };
        let local = Complex::new(x, if reflected { two - y0 } else { y0 });
        let triangle = self.locate(local);
        let mut w = self.pieces[triangle].affine.apply(local);
        if reflected {
            w.im = two - w.im;
        }
        w.im = w.im + two * period;
        let piece = StripPiece {
            period: period.to_i64().unwrap_or(i64::MAX),
            reflected,
            triangle,
        };
        Ok((w, piece))
    }
}

/// `psi_m` at a single point; `m = 1` is the identity (no slit).
pub fn psi<T: Real>(z: Complex<T>, m: u64, side: Option<Side>) -> Result<Complex<T>> {
    if m == 1 {
        let tol = snap_tol::<T>();
        if !(z.re >= -tol && z.re <= T::one() + tol) {
            return Err(Error::OutsideStrip {
                re: to_f64(z.re),
                im: to_f64(z.im),
            });
        }
        return Ok(z);
    }
    build_cell::<T>(m)?.psi(z, side)
}

/// Unfolding coordinates of a point of `1 <= |z| <= exp(pi/n)`, with the
/// argument lifted into `[0, 2pi)`.
fn unfold_coords<T: Real>(z: LogPoint<T>, n: u64) -> Result<Complex<T>> {
    let nt: T = int(n);
    let tol = snap_tol::<T>();
    let x = z.log_mod * nt / T::PI();
    if z.is_origin() || !(x >= -tol && x <= T::one() + tol) {
        return Err(Error::OutsideAnnulus {
            log_mod: to_f64(z.log_mod),
            lo: 0.0,
            hi: to_f64(T::PI() / nt),
        });
    }
    let mut y = angle_0_2pi(z.arg) * nt / T::PI();
    if y >= lit::<T>(2.0) * nt - tol {
        y = T::zero();
    }
    Ok(Complex::new(x.max(T::zero()).min(T::one()), y))
}

/// `eta_{n,m}`: opens the `n` radial slits of `1 <= |z| <= exp(pi/n)`.
pub fn eta<T: Real>(z: LogPoint<T>, n: u64, m: u64, side: Option<Side>) -> Result<LogPoint<T>> {
    let w = unfold_coords(z, n)?;
    let zeta = psi(w, m, side)?;
    let scale = T::PI() / int::<T>(n);
    Ok(LogPoint::new(zeta.re * scale, zeta.im * scale))
}

/// Mobius involution `(z + 1)/(z - 1)` taking `|z| > 1` onto the right half-plane.
pub fn mobius<T: Real>(z: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    (z + one) / (z - one)
}

/// Fold map: identity off the two lenses `X`, triples angles of the
/// Mobius image inside them. Maps `|z| >= 1` onto `C \ (-1, 1)` with `+-i -> 0`.
pub fn sigma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    let modulus = z.norm();
    if modulus < T::one() - snap_tol::<T>() {
        return Err(Error::InsideDisk {
            modulus: to_f64(modulus),
        });
    }
    let one = Complex::new(T::one(), T::zero());
    if z == one {
        return Ok(one);
    }
    let q = mobius(z);
    if !q.re.is_finite() || !q.im.is_finite() {
        return Ok(one);
    }
    let quarter = T::FRAC_PI_4();
    let phi = q.arg().max(-T::FRAC_PI_2()).min(T::FRAC_PI_2());
    if phi.abs() <= quarter {
        return Ok(z);
    }
    let tripled = phi.signum() * (lit::<T>(3.0) * phi.abs() - T::FRAC_PI_2());
    let q = Complex::from_polar(q.norm(), tripled);
    Ok(mobius(q))
}

/// Membership in the open support `X` of the fold map's Beltrami coefficient.
pub fn in_fold_support<T: Real>(z: Complex<T>) -> bool {
    if !(z.norm() > T::one()) {
        return false;
    }
    let phi = mobius(z).arg().abs();
    phi > T::FRAC_PI_4() && phi < T::FRAC_PI_2()
}

/// Largest modulus reached by `X`: `cot(pi/8) = 1 + sqrt 2`.
pub fn fold_support_radius<T: Real>() -> T {
    T::one() + T::SQRT_2()
}

fn split_degrees(n: u64, big_m: u64) -> Result<(u64, u64)> {
    if n == 0 || big_m <= n {
        return Err(Error::DegenerateDegrees { n, big_m });
    }
    let m = big_m / n;
    let p = n - big_m % n;
    Ok((m, p))
}

/// Circle reparametrization sending the `M` marked points to the `M`-th roots
/// of unity: slope `nm/M` on `[0, 2p pi/n]` and `(m+1)n/M` on
/// `[-2pi(n-p)/n, 0]`.
pub fn tau<T: Real>(theta: T, n: u64, big_m: u64) -> Result<T> {
    let (m, p) = split_degrees(n, big_m)?;
    Ok(tau_lifted(lift_for_tau(theta, n, p), n, big_m, m))
}

fn lift_for_tau<T: Real>(theta: T, n: u64, p: u64) -> T {
    let nt: T = int(n);
    let hi = T::TAU() * int::<T>(p) / nt;
    let lo = hi - T::TAU();
    let mut t = theta - T::TAU() * ((theta - lo) / T::TAU()).floor();
    if t <= lo {
        t = t + T::TAU();
    }
    if t > hi {
        t = t - T::TAU();
    }
    t
}

fn tau_lifted<T: Real>(t: T, n: u64, big_m: u64, m: u64) -> T {
    let (nt, mt): (T, T) = (int(n), int(big_m));
    if t >= T::zero() {
        nt * int::<T>(m) / mt * t
    } else {
        int::<T>(m + 1) * nt / mt * t
    }
}

/// [`tau`] extended to the annulus `1 <= |z| <= exp(pi/n)`: the angle is
/// interpolated linearly in `log |z|` between `tau` on the inner circle and the
/// identity on the outer circle; the modulus is kept.
pub fn tau_annulus<T: Real>(z: LogPoint<T>, n: u64, big_m: u64) -> Result<LogPoint<T>> {
    let (m, p) = split_degrees(n, big_m)?;
    let s = (z.log_mod * int::<T>(n) / T::PI()).max(T::zero()).min(T::one());
    let t = lift_for_tau(z.arg, n, p);
    let tt = tau_lifted(t, n, big_m, m);
    Ok(LogPoint::new(z.log_mod, s * t + (T::one() - s) * tt))
}

/// Sector bookkeeping for interpolating `z^n` to `z^M`, `m = floor(M/n)`,
/// `p = n - M + nm`: sectors `1..=p` unfold with cell `m`, the rest with `m+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRegion<T> {
    n: u64,
    big_m: u64,
    m: u64,
    p: u64,
    sector_cells: Vec<u64>,
    slit_arcs: Vec<(T, T)>,
    cell_m: Option<CellMap<T>>,
    cell_m1: CellMap<T>,
}

pub fn build_fold_region<T: Real>(n: u64, big_m: u64) -> Result<FoldRegion<T>> {
    let (m, p) = split_degrees(n, big_m)?;
    let nt: T = int(n);
    let sector_cells: Vec<u64> = (0..n).map(|k| if k < p { m } else { m + 1 }).collect();
    let slit_arcs = sector_cells
        .iter()
        .enumerate()
        .map(|(k, &mc)| {
            let base: T = sint(sector_base(k as u64, n, p));
            let inv = T::one() / int::<T>(mc);
            let scale = T::PI() / nt;
            (scale * (base + inv), scale * (base + lit::<T>(2.0) - inv))
        })
        .collect();
    Ok(FoldRegion {
        n,
        big_m,
        m,
        p,
        sector_cells,
        slit_arcs,
        cell_m: if m >= 2 { Some(build_cell(m)?) } else { None },
        cell_m1: build_cell(m + 1)?,
    })
}

/// Lifted lower edge (in unfolding `Im` units) of 0-based sector `k`.
fn sector_base(k: u64, n: u64, p: u64) -> i64 {
    if k < p {
        2 * k as i64
    } else {
        2 * k as i64 - 2 * n as i64
    }
}

impl<T: Real> FoldRegion<T> {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn big_m(&self) -> u64 {
        self.big_m
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Cell parameter used in each sector (index 0 is sector 1).
    pub fn sector_cells(&self) -> &[u64] {
        &self.sector_cells
    }

    /// Angular interval, in the lifted argument of `eta(z)`, onto which the two
    /// sides of each sector's slit unfold.
    pub fn slit_arcs(&self) -> &[(T, T)] {
        &self.slit_arcs
    }

    fn cell(&self, mc: u64) -> Option<&CellMap<T>> {
        if mc == self.m {
            self.cell_m.as_ref()
        } else {
            Some(&self.cell_m1)
        }
    }

    /// Normalizes a lens-component index (`floor(arg / pi)` of the power-map
    /// image in the lifted branch) into `[2pm - 2M, 2pm)`.
    fn normalize_component(&self, j: i64) -> i64 {
        let period = 2 * self.big_m as i64;
        let lo = 2 * (self.p * self.m) as i64 - period;
        lo + (j - lo).rem_euclid(period)
    }

    /// Sector (0-based) whose inner-circle arc carries the base of component `j`,
    /// and the base interval in lifted unfolding `Im` units as a rational
    /// `(num, num + 1) / den`.
    pub fn component_base(&self, j: i64) -> (usize, i64, i64) {
        let j = self.normalize_component(j);
        if j >= 0 {
            let den = self.m as i64;
            ((j / (2 * den)) as usize, j, den)
        } else {
            let den = self.m as i64 + 1;
            let lo = 2 * (self.p * self.m) as i64 - 2 * self.big_m as i64;
            (self.p as usize + ((j - lo) / (2 * den)) as usize, j, den)
        }
    }

    /// Whether lens component `j` is one of the `2(M - n)` components
    /// bordering a slit, i.e. its base lies inside its sector's slit arc.
    pub fn component_is_slit_adjacent(&self, j: i64) -> bool {
        let (k, num, den) = self.component_base(j);
        let base = sector_base(k as u64, self.n, self.p);
        // (num/den, (num+1)/den) inside [base + 1/den, base + 2 - 1/den]
        num > base * den && num + 2 <= (base + 2) * den
    }

    pub fn slit_adjacent_component_count(&self) -> usize {
        let lo = 2 * (self.p * self.m) as i64 - 2 * self.big_m as i64;
        (lo..lo + 2 * self.big_m as i64)
            .filter(|&j| self.component_is_slit_adjacent(j))
            .count()
    }
}

/// Which smooth piece of the interpolation a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FoldPiece {
    pub sector: usize,
    pub strip: Option<StripPiece>,
    pub component: i64,
    pub folded: bool,
    /// Sign of the Mobius argument when the angle-tripling branch is active.
    pub tripled: i8,
}

/// Full record of one annulus evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusTrace<T> {
    pub value: LogPoint<T>,
    /// Unfolded coordinates after the cell map.
    pub unfolded: Complex<T>,
    /// Power-map image before the fold, as `(log-modulus, lifted argument)`.
    pub pre_fold: LogPoint<T>,
    /// 1-based sector.
    pub sector: usize,
    pub cell: u64,
    /// Whether the point lies in the slit-adjacent lens set `U`.
    pub in_u: bool,
    pub in_fold_support: bool,
    pub piece: FoldPiece,
}

/// The interpolating map on `r <= |z| <= r exp(pi/n)`, extended by `c z^n`
/// inside and `c z^M / r^(M-n)` outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusMap<T> {
    n: u64,
    big_m: u64,
    log_r: T,
    c: LogPoint<T>,
    region: Option<FoldRegion<T>>,
}

impl<T: Real> AnnulusMap<T> {
    /// `M = n` gives the pure power map.
    pub fn new(n: u64, big_m: u64, log_r: T, c: LogPoint<T>) -> Result<Self> {
        if n == 0 || big_m < n {
            return Err(Error::DegenerateDegrees { n, big_m });
        }
        let region = if big_m > n {
            Some(build_fold_region(n, big_m)?)
        } else {
            None
        };
        Ok(Self {
            n,
            big_m,
            log_r,
            c,
            region,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn big_m(&self) -> u64 {
        self.big_m
    }

    pub fn log_r(&self) -> T {
        self.log_r
    }

    pub fn c(&self) -> LogPoint<T> {
        self.c
    }

    pub fn region(&self) -> Option<&FoldRegion<T>> {
        self.region.as_ref()
    }

    pub fn log_outer(&self) -> T {
        self.log_r + T::PI() / int::<T>(self.n)
    }

    /// `c z^n`.
    pub fn inner_power(&self, z: LogPoint<T>) -> LogPoint<T> {
        self.c * z.powu(self.n)
    }

    /// `c z^M / r^(M-n)`.
    pub fn outer_power(&self, z: LogPoint<T>) -> LogPoint<T> {
        let shift = int::<T>(self.big_m - self.n) * self.log_r;
        (self.c * z.powu(self.big_m)).scale_log(-shift)
    }

    /// Evaluates on the closed annulus. Points on a slit without a side are
    /// evaluated from both sides, which must agree.
    pub fn eval(&self, z: LogPoint<T>, side: Option<Side>) -> Result<LogPoint<T>> {
        match (side, self.trace(z, Some(Side::Below))) {
            (Some(_), _) => self.trace(z, side).map(|t| t.value),
            (None, Ok(below)) => {
                if !self.on_slit(z) {
                    return Ok(below.value);
                }
                let above = self.trace(z, Some(Side::Above))?;
                let gap = below.value.log_distance(&above.value);
                // both sides approach a zero of g at zeros on the slit
                let both_tiny = below.value.log_mod < self.c.log_mod + int::<T>(self.n) * self.log_r - lit(30.0)
                    && above.value.log_mod < self.c.log_mod + int::<T>(self.n) * self.log_r - lit(30.0);
                if gap > lit(1e-8) && !both_tiny {
                    return Err(Error::ContinuityFailure {
                        log_mod: to_f64(z.log_mod),
                        arg: to_f64(z.arg),
                        gap: to_f64(gap),
                    });
                }
                Ok(below.value)
            }
            (None, Err(e)) => Err(e),
        }
    }

    /// Evaluates on the whole plane: the power maps outside the annulus.
    pub fn eval_extended(&self, z: LogPoint<T>) -> Result<LogPoint<T>> {
        if z.is_origin() || z.log_mod < self.log_r {
            Ok(self.inner_power(z))
        } else if z.log_mod > self.log_outer() {
            Ok(self.outer_power(z))
        } else {
            self.eval(z, None)
        }
    }

    /// Whether `z` sits on one of the radial slits (strictly inside it).
    pub fn on_slit(&self, z: LogPoint<T>) -> bool {
        if self.region.is_none() {
            return false;
        }
        let local = z.scale_log(-self.log_r);
        match unfold_coords(local, self.n) {
            Ok(w) => {
                let two: T = lit(2.0);
                let y0 = w.im - two * (w.im / two).floor();
                (y0 - T::one()).abs() <= snap_tol::<T>() && w.re < lit::<T>(0.5) - snap_tol::<T>()
            }
            Err(_) => false,
        }
    }

    /// Evaluates and records every intermediate stage.
    pub fn trace(&self, z: LogPoint<T>, side: Option<Side>) -> Result<AnnulusTrace<T>> {
        let nt: T = int(self.n);
        let mt: T = int(self.big_m);
        let local = z.scale_log(-self.log_r);
        let w = unfold_coords(local, self.n).map_err(|_| Error::OutsideAnnulus {
            log_mod: to_f64(z.log_mod),
            lo: to_f64(self.log_r),
            hi: to_f64(self.log_outer()),
        })?;
        let rescale = |v: LogPoint<T>| {
            LogPoint::new(v.log_mod + self.c.log_mod + nt * self.log_r, v.arg + self.c.arg)
        };
        let Some(region) = self.region.as_ref() else {
            let value = self.inner_power(z);
            let pre = LogPoint::new(nt * local.log_mod, nt * local.arg);
            return Ok(AnnulusTrace {
                value,
                unfolded: w,
                pre_fold: pre,
                sector: 1,
                cell: 1,
                in_u: false,
                in_fold_support: false,
                piece: FoldPiece {
                    sector: 0,
                    strip: None,
                    component: 0,
                    folded: false,
                    tripled: 0,
                },
            });
        };

        let two: T = lit(2.0);
        let k = ((w.im / two).floor().to_u64().unwrap_or(0)).min(self.n - 1) as usize;
        let mc = region.sector_cells[k];
        let lifted = if (k as u64) < region.p {
            w
        } else {
            Complex::new(w.re, w.im - two * nt)
        };
        let (zeta, strip) = match region.cell(mc) {
            Some(cell) => {
                let (zeta, piece) = cell.psi_traced(lifted, side)?;
                (zeta, Some(piece))
            }
            None => (lifted, None),
        };
        let s = zeta.re.max(T::zero()).min(T::one());
        let factor = s * mt / nt + (T::one() - s) * int::<T>(mc);
        let turns = zeta.im * factor;
        let phi = T::PI() * turns;
        let log_w = T::PI() * mt * s / nt;
        let component = turns.floor().to_i64().unwrap_or(0);
        let in_u = region.component_is_slit_adjacent(component);

        let mut tripled = 0i8;
        let mut in_support = false;
        let folded_value = if in_u && log_w <= fold_support_radius::<T>().ln() + lit(0.5) {
            let wc = Complex::from_polar(log_w.exp(), phi);
            in_support = in_fold_support(wc);
            let arg_mu = mobius(wc).arg();
            if wc.norm() >= T::one() - snap_tol::<T>() && arg_mu.abs() > T::FRAC_PI_4() {
                tripled = if arg_mu > T::zero() { 1 } else { -1 };
                Some(LogPoint::from_complex(sigma(wc)?))
            } else {
                None
            }
        } else {
            None
        };
        let pre_fold = LogPoint {
            log_mod: log_w,
            arg: phi,
        };
        let unit_value = folded_value.unwrap_or_else(|| LogPoint::new(log_w, phi));
        Ok(AnnulusTrace {
            value: rescale(unit_value),
            unfolded: zeta,
            pre_fold,
            sector: k + 1,
            cell: mc,
            in_u,
            in_fold_support: in_support,
            piece: FoldPiece {
                sector: k,
                strip,
                component,
                folded: folded_value.is_some(),
                tripled,
            },
        })
    }
}

/// One-shot evaluation of the interpolation `g_{n,M,r,c}`.
pub fn g_annulus<T: Real>(
    z: LogPoint<T>,
    n: u64,
    big_m: u64,
    log_r: T,
    c: LogPoint<T>,
) -> Result<LogPoint<T>> {
    AnnulusMap::new(n, big_m, log_r, c)?.eval(z, None)
}

/// A non-zero branched point (or zero) on a slit, with its indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitVertex<T> {
    pub point: LogPoint<T>,
    /// 1-based sector.
    pub k: u64,
    /// Vertex index along the slit (zeros sit at `l + 1/2`).
    pub l: u64,
    /// `+1` or `-1`: which branched value the vertex is sent to.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchedData<T> {
    pub branched_points: Vec<SlitVertex<T>>,
    /// `(+c r^n, -c r^n)`.
    pub branched_values: (LogPoint<T>, LogPoint<T>),
    /// Simple zeros on the slits; the origin (multiplicity `n`) is implicit.
    pub zeros: Vec<SlitVertex<T>>,
    pub origin_multiplicity: u64,
}

/// Branched points, branched values and zeros of `g_{n,M,r,c}`.
pub fn branched_data<T: Real>(n: u64, big_m: u64, log_r: T, c: LogPoint<T>) -> Result<BranchedData<T>> {
    let (m, p) = split_degrees(n, big_m)?;
    let nt: T = int(n);
    let mut points = Vec::new();
    let mut zeros = Vec::new();
    for k in 1..=n {
        let mc = if k <= p { m } else { m + 1 };
        if mc < 2 {
            continue;
        }
        let den: T = int(2 * mc - 2);
        let arg = T::PI() * int::<T>(2 * k - 1) / nt;
        for l in 0..=mc - 2 {
            let lt: T = int(l);
            let sign = if l % 2 == 0 { -1 } else { 1 };
            points.push(SlitVertex {
                point: LogPoint::new(log_r + T::PI() / nt * lt / den, arg),
                k,
                l,
                sign,
            });
            zeros.push(SlitVertex {
                point: LogPoint::new(log_r + T::PI() / nt * (lt + lit(0.5)) / den, arg),
                k,
                l,
                sign: 0,
            });
        }
    }
    let crn = c.scale_log(nt * log_r);
    let minus = crn * LogPoint::new(T::zero(), T::PI());
    Ok(BranchedData {
        branched_points: points,
        branched_values: (crn, minus),
        zeros,
        origin_multiplicity: n,
    })
}

/// Side-by-side SVG of the domain and image triangulations of a cell.
pub fn cell_svg<T: Real>(cell: &CellMap<T>) -> String {
    use std::fmt::Write;
    let size = 360.0;
    let pad = 30.0;
    let gap = 80.0;
    let width = 2.0 * size + 2.0 * pad + gap;
    let height = size + 2.0 * pad + 30.0;
    let px = |z: Complex<T>, panel: usize| {
        let x0 = pad + panel as f64 * (size + gap);
        (x0 + to_f64(z.re) * size, pad + 30.0 + (1.0 - to_f64(z.im)) * size)
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (panel, title) in ["domain", "image"].iter().enumerate() {
        let (x, _) = px(Complex::new(T::zero(), T::zero()), panel);
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="16">{title} (m = {})</text>"#,
            pad,
            cell.m()
        );
    }
    for piece in cell.pieces() {
        for (panel, tri) in [(0usize, &piece.domain), (1, &piece.image)] {
            let pts: Vec<String> = tri
                .vertices
                .iter()
                .map(|&v| {
                    let (x, y) = px(v, panel);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polygon class="triangle" points="{}" fill="none" stroke="black" stroke-width="1"/>"#,
                pts.join(" ")
            );
        }
    }
    let (x1, y1) = px(Complex::new(T::zero(), T::one()), 0);
    let (x2, y2) = px(Complex::new(lit(0.5), T::one()), 0);
    let _ = writeln!(
        s,
        r#"<line class="slit" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="red" stroke-width="3"/>"#
    );
    let mut seen: Vec<(usize, Complex<T>)> = Vec::new();
    for piece in cell.pieces() {
        for (panel, tri) in [(0usize, &piece.domain), (1, &piece.image)] {
            for (v, color) in tri.vertices.iter().zip(tri.colors) {
                if seen.iter().any(|(p, w)| *p == panel && (*w - v).norm() < lit(1e-9)) {
                    continue;
                }
                seen.push((panel, *v));
                let (x, y) = px(*v, panel);
                let fill = match color {
                    VertexColor::Black => "black",
                    VertexColor::White => "white",
                    VertexColor::Uncolored => "gray",
                };
                let _ = writeln!(
                    s,
                    r#"<circle class="vertex {fill}" cx="{x:.3}" cy="{y:.3}" r="5" fill="{fill}" stroke="black" stroke-width="1.5"/>"#
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}
