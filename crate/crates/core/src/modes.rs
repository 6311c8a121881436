//! Transverse mode profiles on a 1D grid, the flipped-mode construction and
//! the half-plane interference integrals of the split detector.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{domain, usage, Error, Result};
use crate::grid::{Grid, SPLIT_ORIGIN};

/// Largest truncated-norm deficit accepted when sampling a closed-form mode.
pub const MAX_NORM_DEFICIT: f64 = 1e-6;
/// Candidates whose residual after projection falls below this are dropped.
pub const GRAM_SCHMIDT_RESIDUAL: f64 = 1e-10;
/// Tolerance of the orthonormality check on basis and seed modes.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Closed-form description of a profile, kept so that displaced copies can be
/// evaluated exactly instead of interpolated.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Gaussian { w0: f64, center: f64 },
    HermiteGauss { order: usize, w0: f64, center: f64 },
    /// `base` with its sign inverted for `x < at`, optionally ramped linearly
    /// over `transition_width`.
    Flipped { base: Box<Shape>, at: f64, transition_width: f64 },
}

impl Shape {
    /// Unnormalized amplitude at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Shape::Gaussian { w0, center } => gaussian_amplitude(*w0, x - center),
            Shape::HermiteGauss { order, w0, center } => hermite_gauss_amplitude(*order, *w0, x - center),
            Shape::Flipped { base, at, transition_width } => flip_sign(x - at, *transition_width) * base.eval(x),
        }
    }

    pub fn shifted(&self, d: f64) -> Shape {
        match self {
            Shape::Gaussian { w0, center } => Shape::Gaussian { w0: *w0, center: center + d },
            Shape::HermiteGauss { order, w0, center } => Shape::HermiteGauss {
                order: *order,
                w0: *w0,
                center: center + d,
            },
            Shape::Flipped { base, at, transition_width } => Shape::Flipped {
                base: Box::new(base.shifted(d)),
                at: at + d,
                transition_width: *transition_width,
            },
        }
    }
}

fn flip_sign(offset: f64, transition_width: f64) -> f64 {
    if transition_width > 0.0 {
        (2.0 * offset / transition_width).clamp(-1.0, 1.0)
    } else if offset < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `(2/(π w0²))^{1/4} exp(-x²/w0²)`
pub fn gaussian_amplitude(w0: f64, x: f64) -> f64 {
    (2.0 / (PI * w0 * w0)).powf(0.25) * (-(x * x) / (w0 * w0)).exp()
}

/// Normalized Hermite-Gauss mode of the given order (order 0 is the Gaussian).
pub fn hermite_gauss_amplitude(order: usize, w0: f64, x: f64) -> f64 {
    let y = std::f64::consts::SQRT_2 * x / w0;
    // h_n = H_n(y) / sqrt(2^n n!)
    let mut prev = 0.0;
    let mut cur = 1.0;
    for n in 0..order {
        let n = n as f64;
        let next = (2.0 / (n + 1.0)).sqrt() * y * cur - (n / (n + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur * gaussian_amplitude(w0, x)
}

/// Complex field amplitude sampled on a grid, normalized to unit L2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProfile {
    grid: Grid,
    amplitude: Vec<Complex64>,
    shape: Option<Shape>,
}

impl ModeProfile {
    /// Normalizes arbitrary samples. Fails on length mismatch or zero norm.
    pub fn from_samples(grid: Grid, amplitude: Vec<Complex64>) -> Result<Self> {
        if amplitude.len() != grid.n_points() {
            return Err(usage(format!(
                "{} samples for a grid of {} points",
                amplitude.len(),
                grid.n_points()
            )));
        }
        let mut p = Self { grid, amplitude, shape: None };
        let norm = p.norm_sqr();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(domain("profile has zero or non-finite norm"));
        }
        p.scale(1.0 / norm.sqrt());
        Ok(p)
    }

    /// Samples a closed-form shape and renormalizes it. Fails when the grid
    /// captures less than `1 - MAX_NORM_DEFICIT` of the analytic norm.
    pub fn from_shape(grid: Grid, shape: Shape) -> Result<Self> {
        let amplitude: Vec<Complex64> = grid.points().map(|x| Complex64::new(shape.eval(x), 0.0)).collect();
        let mut p = Self { grid, amplitude, shape: Some(shape) };
        let norm = p.norm_sqr();
        let deficit = 1.0 - norm;
        if !(norm.is_finite()) || deficit > MAX_NORM_DEFICIT {
            return Err(domain(format!(
                "grid [{}, {}] truncates the mode: norm deficit {deficit:.3e}",
                grid.x_min(),
                grid.x_max()
            )));
        }
        p.scale(1.0 / norm.sqrt());
        Ok(p)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn shape(&self) -> Option<&Shape> {
        self.shape.as_ref()
    }

    fn scale(&mut self, s: f64) {
        for a in &mut self.amplitude {
            *a *= s;
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        let w = self.grid.weights();
        Grid::integrate(&w, self.amplitude.iter().map(|a| a.norm_sqr()))
    }

    /// `⟨self|other⟩ = ∫ self*(x) other(x) dx`
    pub fn inner(&self, other: &ModeProfile) -> Result<Complex64> {
        self.check_grid(other)?;
        Ok(weighted_overlap(&self.grid.weights(), self, other))
    }

    fn check_grid(&self, other: &ModeProfile) -> Result<()> {
        if self.grid != other.grid {
            return Err(usage("profiles are sampled on different grids"));
        }
        Ok(())
    }

    /// Photon density `|u(x)|²` at an arbitrary point by four-point Lagrange
    /// interpolation of the sampled density.
    pub fn density_at(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x < g.x_min() || x > g.x_max() {
            return 0.0;
        }
        let h = g.spacing();
        let n = g.n_points();
        let t = (x - g.x_min()) / h;
        let base = (t.floor() as isize - 1).clamp(0, n.saturating_sub(4) as isize) as usize;
        let m = 4.min(n);
        let mut sum = 0.0;
        for i in 0..m {
            let xi = base + i;
            let mut li = 1.0;
            for j in 0..m {
                if j != i {
                    let xj = (base + j) as f64;
                    li *= (t - xj) / (xi as f64 - xj);
                }
            }
            sum += li * self.amplitude[xi].norm_sqr();
        }
        sum
    }

    /// Linear interpolation of the complex amplitude, zero outside the grid.
    fn sample_linear(&self, x: f64) -> Complex64 {
        let g = &self.grid;
        if x < g.x_min() || x > g.x_max() {
            return Complex64::new(0.0, 0.0);
        }
        let t = (x - g.x_min()) / g.spacing();
        let k = (t.floor() as usize).min(g.n_points() - 2);
        let f = t - k as f64;
        self.amplitude[k] * (1.0 - f) + self.amplitude[k + 1] * f
    }

    /// `x, re, im` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,re,im\n");
        for (x, a) in self.grid.points().zip(&self.amplitude) {
            let _ = writeln!(out, "{x},{},{}", a.re, a.im);
        }
        out
    }

    /// Reads `x, re, im` rows. The abscissae must be uniformly spaced; the
    /// profile is renormalized.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols != ["x", "re", "im"] {
            return Err(Error::Parse(format!("expected header x,re,im, got {}", cols.join(","))));
        }
        let mut xs = Vec::new();
        let mut amp = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let field = |i: usize| -> Result<f64> {
                let s = rec.get(i).ok_or_else(|| Error::Parse(format!("row {}: missing column {i}", line + 1)))?;
                let v: f64 = s
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}: `{s}` is not a number", line + 1)))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Parse(format!("row {}: non-finite value", line + 1)))
                }
            };
            xs.push(field(0)?);
            amp.push(Complex64::new(field(1)?, field(2)?));
        }
        if xs.len() < 2 {
            return Err(Error::Parse("profile needs at least two rows".into()));
        }
        let grid = Grid::new(xs[0], xs[xs.len() - 1], xs.len()).map_err(|e| Error::Parse(e.to_string()))?;
        let h = grid.spacing();
        for (k, &x) in xs.iter().enumerate() {
            if (x - grid.x(k)).abs() > 1e-6 * h {
                return Err(Error::Parse(format!("row {}: abscissa {x} breaks uniform spacing", k + 1)));
            }
        }
        ModeProfile::from_samples(grid, amp)
    }
}

fn weighted_overlap(w: &[f64], a: &ModeProfile, b: &ModeProfile) -> Complex64 {
    w.iter()
        .zip(a.amplitude.iter().zip(&b.amplitude))
        .map(|(wk, (ai, bj))| ai.conj() * bj * *wk)
        .sum()
}

/// Gaussian beam `(2/(π w0²))^{1/4} exp(-x²/w0²)` renormalized on `grid`.
pub fn make_gaussian_mode(w0: f64, grid: Grid) -> Result<ModeProfile> {
    if !(w0 > 0.0 && w0.is_finite()) {
        return Err(domain(format!("beam radius must be positive, got {w0}")));
    }
    ModeProfile::from_shape(grid, Shape::Gaussian { w0, center: 0.0 })
}

pub fn make_hermite_gauss_mode(order: usize, w0: f64, grid: Grid) -> Result<ModeProfile> {
    if !(w0 > 0.0 && w0.is_finite()) {
        return Err(domain(format!("beam radius must be positive, got {w0}")));
    }
    ModeProfile::from_shape(grid, Shape::HermiteGauss { order, w0, center: 0.0 })
}

/// Flipped mode with an ideal sign step at `x = 0`.
pub fn make_flipped_mode(u0: &ModeProfile) -> ModeProfile {
    make_flipped_mode_with_transition(u0, 0.0).expect("zero transition width is always valid")
}

/// `-u0` on `x < 0` and `+u0` on `x >= 0`, with the sign ramped linearly
/// over `transition_width` when it is positive.
pub fn make_flipped_mode_with_transition(u0: &ModeProfile, transition_width: f64) -> Result<ModeProfile> {
    if !(transition_width >= 0.0 && transition_width.is_finite()) {
        return Err(domain(format!("transition width must be >= 0, got {transition_width}")));
    }
    let amplitude: Vec<Complex64> = u0
        .grid
        .points()
        .zip(&u0.amplitude)
        .map(|(x, a)| a * flip_sign(x - SPLIT_ORIGIN, transition_width))
        .collect();
    let shape = u0.shape.as_ref().map(|s| Shape::Flipped {
        base: Box::new(s.clone()),
        at: SPLIT_ORIGIN,
        transition_width,
    });
    let mut p = ModeProfile { grid: u0.grid, amplitude, shape };
    if transition_width > 0.0 {
        let n = p.norm_sqr();
        p.scale(1.0 / n.sqrt());
    }
    Ok(p)
}

/// Interference integrals of two modes over the two detector halves.
///
/// `i_diff` is the right-half minus left-half integral, matching the sign of
/// the difference current `n_right - n_left`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfOverlaps {
    pub i_left: Complex64,
    pub i_right: Complex64,
    pub i_sum: Complex64,
    pub i_diff: Complex64,
}

impl HalfOverlaps {
    fn new(i_left: Complex64, i_right: Complex64) -> Self {
        Self {
            i_left,
            i_right,
            i_sum: i_left + i_right,
            i_diff: i_right - i_left,
        }
    }
}

/// Half-plane overlaps `∫_{x<0} u_i* u_j` and `∫_{x>0} u_i* u_j`.
pub fn half_overlaps(u_i: &ModeProfile, u_j: &ModeProfile) -> Result<HalfOverlaps> {
    u_i.check_grid(u_j)?;
    let g = u_i.grid;
    let left = g.interval_weights(f64::NEG_INFINITY, SPLIT_ORIGIN);
    let right = g.interval_weights(SPLIT_ORIGIN, f64::INFINITY);
    Ok(HalfOverlaps::new(
        weighted_overlap(&left, u_i, u_j),
        weighted_overlap(&right, u_i, u_j),
    ))
}

/// Ordered orthonormal set of profiles sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    modes: Vec<ModeProfile>,
}

impl ModeBasis {
    pub fn new(modes: Vec<ModeProfile>) -> Result<Self> {
        check_orthonormal(&modes)?;
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[ModeProfile] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&ModeProfile> {
        self.modes.get(i)
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.modes.first().map(|m| m.grid())
    }

    pub fn gram(&self) -> Vec<Vec<Complex64>> {
        let w = self.grid().map(|g| g.weights()).unwrap_or_default();
        self.modes
            .iter()
            .map(|a| self.modes.iter().map(|b| weighted_overlap(&w, a, b)).collect())
            .collect()
    }
}

fn check_orthonormal(modes: &[ModeProfile]) -> Result<()> {
    let Some(first) = modes.first() else {
        return Ok(());
    };
    if modes.iter().any(|m| m.grid != first.grid) {
        return Err(usage("basis modes are sampled on different grids"));
    }
    let w = first.grid.weights();
    for (i, a) in modes.iter().enumerate() {
        for (j, b) in modes.iter().enumerate().skip(i) {
            let g = weighted_overlap(&w, a, b);
            let target = if i == j { 1.0 } else { 0.0 };
            if (g - target).norm() >= ORTHONORMAL_TOL {
                return Err(usage(format!("modes {i} and {j} are not orthonormal: ⟨u{i}|u{j}⟩ = {g}")));
            }
        }
    }
    Ok(())
}

/// Appends the orthonormalized `candidates` to `seed` using modified
/// Gram-Schmidt with one re-orthogonalization pass. Candidates that are
/// (numerically) linear combinations of earlier modes are skipped.
pub fn gram_schmidt_extend(seed: &[ModeProfile], candidates: &[ModeProfile]) -> Result<ModeBasis> {
    check_orthonormal(seed)?;
    let mut modes: Vec<ModeProfile> = seed.to_vec();
    let grid = match seed.first().or(candidates.first()) {
        Some(m) => m.grid,
        None => return Ok(ModeBasis { modes }),
    };
    let w = grid.weights();
    for cand in candidates {
        if cand.grid != grid {
            return Err(usage("candidate mode is sampled on a different grid"));
        }
        let mut v = cand.amplitude.clone();
        let n0 = norm_of(&w, &v);
        if n0 == 0.0 || !n0.is_finite() {
            continue;
        }
        for a in &mut v {
            *a /= n0;
        }
        for _pass in 0..2 {
            for m in &modes {
                let c: Complex64 = w
                    .iter()
                    .zip(m.amplitude.iter().zip(&v))
                    .map(|(wk, (mi, vi))| mi.conj() * vi * *wk)
                    .sum();
                for (vi, mi) in v.iter_mut().zip(&m.amplitude) {
                    *vi -= c * mi;
                }
            }
        }
        let residual = norm_of(&w, &v);
        if residual < GRAM_SCHMIDT_RESIDUAL {
            continue;
        }
        for a in &mut v {
            *a /= residual;
        }
        modes.push(ModeProfile { grid, amplitude: v, shape: None });
    }
    Ok(ModeBasis { modes })
}

fn norm_of(w: &[f64], v: &[Complex64]) -> f64 {
    Grid::integrate(w, v.iter().map(|a| a.norm_sqr())).sqrt()
}

/// Returns `u(x - d)`, exactly for closed-form shapes and by linear
/// interpolation otherwise, renormalized on the grid.
pub fn displace_profile(u: &ModeProfile, d: f64) -> Result<ModeProfile> {
    if !d.is_finite() || d.abs() >= 0.1 * u.grid.extent() {
        return Err(domain(format!(
            "displacement {d} is not small against the grid extent {}",
            u.grid.extent()
        )));
    }
    if d == 0.0 {
        return Ok(u.clone());
    }
    match &u.shape {
        Some(shape) => {
            let shifted = shape.shifted(d);
            let amplitude: Vec<Complex64> = u.grid.points().map(|x| Complex64::new(shifted.eval(x), 0.0)).collect();
            let mut p = ModeProfile {
                grid: u.grid,
                amplitude,
                shape: Some(shifted),
            };
            let n = p.norm_sqr();
            p.scale(1.0 / n.sqrt());
            Ok(p)
        }
        None => {
            let amplitude = u.grid.points().map(|x| u.sample_linear(x - d)).collect();
            ModeProfile::from_samples(u.grid, amplitude)
        }
    }
}

/// Coefficients of a profile in a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub coefficients: Vec<Complex64>,
    /// `1 - Σ|c_i|²`, the weight outside the span of the basis.
    pub residual: f64,
}

pub fn decompose(u: &ModeProfile, basis: &ModeBasis) -> Result<Decomposition> {
    let coefficients = basis.modes.iter().map(|m| m.inner(u)).collect::<Result<Vec<_>>>()?;
    let captured: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    Ok(Decomposition {
        coefficients,
        residual: 1.0 - captured,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::symmetric(6.0, 4096).unwrap()
    }

    fn u0() -> ModeProfile {
        make_gaussian_mode(1.0, grid()).unwrap()
    }

    #[test]
    fn gaussian_is_normalized() {
        assert!((u0().norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_peak_value() {
        // closed form at the origin: (2/π)^{1/4}
        let expected = (2.0 / PI).powf(0.25);
        assert!((expected - 0.893_243).abs() < 1e-6);
        assert!((gaussian_amplitude(1.0, 0.0) - expected).abs() < 1e-15);
        let u = u0();
        assert!((u.density_at(0.0).sqrt() - expected).abs() < 1e-9);
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let g = Grid::symmetric(0.5, 4096).unwrap();
        assert!(matches!(make_gaussian_mode(1.0, g), Err(Error::Domain(_))));
    }

    #[test]
    fn flipped_mode_is_orthogonal_and_fully_interferes() {
        let u0 = u0();
        let u1 = make_flipped_mode(&u0);
        assert!(u1.inner(&u0).unwrap().norm() < 1e-8);
        let h = half_overlaps(&u0, &u1).unwrap();
        assert!((h.i_diff - 1.0).norm() < 1e-8);
        assert!(h.i_sum.norm() < 1e-8);
    }

    #[test]
    fn flipping_twice_is_identity() {
        let u0 = u0();
        let back = make_flipped_mode(&make_flipped_mode(&u0));
        assert_eq!(back.amplitude(), u0.amplitude());
    }

    #[test]
    fn flip_sign_convention() {
        let u0 = u0();
        let u1 = make_flipped_mode(&u0);
        for (k, x) in grid().points().enumerate() {
            let s = if x < 0.0 { -1.0 } else { 1.0 };
            assert_eq!(u1.amplitude()[k], u0.amplitude()[k] * s);
        }
    }

    #[test]
    fn flipped_with_ramp_stays_normalized_and_orthogonal() {
        let u0 = u0();
        let u1 = make_flipped_mode_with_transition(&u0, 0.2).unwrap();
        assert!((u1.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(u1.inner(&u0).unwrap().norm() < 1e-12);
        let h = half_overlaps(&u0, &u1).unwrap();
        assert!(h.i_diff.re < 1.0 && h.i_diff.re > 0.9);
        assert!(make_flipped_mode_with_transition(&u0, -1.0).is_err());
    }

    #[test]
    fn self_overlap_halves() {
        let u0 = u0();
        let h = half_overlaps(&u0, &u0).unwrap();
        assert!((h.i_left - 0.5).norm() < 1e-8);
        assert!((h.i_right - 0.5).norm() < 1e-8);
        assert_eq!(h.i_sum, h.i_left + h.i_right);
        assert_eq!(h.i_diff, h.i_right - h.i_left);
    }

    #[test]
    fn mismatched_grids_are_a_usage_error() {
        let a = u0();
        let b = make_gaussian_mode(1.0, Grid::symmetric(6.0, 2048).unwrap()).unwrap();
        assert!(matches!(half_overlaps(&a, &b), Err(Error::Usage(_))));
        assert!(matches!(a.inner(&b), Err(Error::Usage(_))));
    }

    #[test]
    fn gram_schmidt_skips_dependent_candidates() {
        let u0 = u0();
        let u1 = make_flipped_mode(&u0);
        let b = gram_schmidt_extend(&[u0.clone(), u1.clone()], std::slice::from_ref(&u0)).unwrap();
        assert_eq!(b.len(), 2);
        let b = gram_schmidt_extend(&[u0.clone(), u1.clone()], &[]).unwrap();
        assert_eq!(b.modes(), &[u0, u1]);
    }

    #[test]
    fn gram_schmidt_rejects_non_orthonormal_seed() {
        let u0 = u0();
        let wide = make_gaussian_mode(1.3, grid()).unwrap();
        assert!(matches!(gram_schmidt_extend(&[u0, wide], &[]), Err(Error::Usage(_))));
    }

    #[test]
    fn hermite_gauss_extension_is_orthonormal() {
        let u0 = u0();
        let u1 = make_flipped_mode(&u0);
        let cands: Vec<_> = (1..=6).map(|n| make_hermite_gauss_mode(n, 1.0, grid()).unwrap()).collect();
        let b = gram_schmidt_extend(&[u0, u1], &cands).unwrap();
        assert_eq!(b.len(), 8);
        for (i, row) in b.gram().iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((g - t).norm() < 1e-8, "G[{i}][{j}] = {g}");
            }
        }
    }

    #[test]
    fn displacement_identity_and_guard() {
        let u = u0();
        assert_eq!(displace_profile(&u, 0.0).unwrap(), u);
        assert!(matches!(displace_profile(&u, 6.0), Err(Error::Domain(_))));
        assert!(displace_profile(&u, f64::NAN).is_err());
    }

    #[test]
    fn sampled_displacement_tracks_closed_form() {
        let u = u0();
        let sampled = ModeProfile::from_samples(*u.grid(), u.amplitude().to_vec()).unwrap();
        let d = 0.05;
        let exact = displace_profile(&u, d).unwrap();
        let interp = displace_profile(&sampled, d).unwrap();
        let ov = exact.inner(&interp).unwrap();
        assert!((ov.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn decompose_examples() {
        let u0 = u0();
        let u1 = make_flipped_mode(&u0);
        let basis = ModeBasis::new(vec![u0.clone(), u1.clone()]).unwrap();
        let d = decompose(&u0, &basis).unwrap();
        assert!((d.coefficients[0] - 1.0).norm() < 1e-8);
        assert!(d.coefficients[1].norm() < 1e-8);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mix: Vec<_> = u0.amplitude().iter().zip(u1.amplitude()).map(|(a, b)| (a + b) * s).collect();
        let mix = ModeProfile::from_samples(*u0.grid(), mix).unwrap();
        let d = decompose(&mix, &basis).unwrap();
        assert!((d.coefficients[0] - s).norm() < 1e-8);
        assert!((d.coefficients[1] - s).norm() < 1e-8);
        assert!(d.residual.abs() < 1e-8);
    }

    #[test]
    fn csv_round_trip() {
        let u = u0();
        let back = ModeProfile::from_csv(&u.to_csv()).unwrap();
        assert_eq!(back.grid().n_points(), u.grid().n_points());
        assert!((back.inner(&u).unwrap().norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(ModeProfile::from_csv("").is_err());
        assert!(ModeProfile::from_csv("x,re,im\n0,1,0\n").is_err());
        assert!(ModeProfile::from_csv("x,re,im\n0,1,0\n1,abc,0\n").is_err());
        assert!(ModeProfile::from_csv("x,re,im\n0,1,0\n1,1,0\n5,1,0\n").is_err());
        assert!(ModeProfile::from_csv("a,b,c\n0,1,0\n1,1,0\n").is_err());
        assert!(ModeProfile::from_csv("x,re,im\n0,0,0\n1,0,0\n").is_err());
    }
}
