//! Multimode Gaussian states in shot-noise units.
//!
//! Quadratures are ordered `X1, Y1, X2, Y2, ...` with `X = a + a†` and
//! `Y = -i(a - a†)`, so the vacuum covariance is the identity and a coherent
//! amplitude `α` has mean `(2 Re α, 2 Im α)`.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Error, Result};

/// Smallest eigenvalue of `cov + iΩ` accepted as physical.
pub const PHYSICALITY_TOL: f64 = 1e-9;
/// Largest asymmetry `|cov - covᵀ|` accepted.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Squeezing parameter and orientation of the squeezed quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezerSpec {
    pub r: f64,
    pub theta: f64,
}

impl SqueezerSpec {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite() && theta.is_finite()) {
            return Err(domain(format!("squeezing needs r >= 0 and finite angle, got r = {r}")));
        }
        Ok(Self { r, theta })
    }

    /// Squeezing expressed as noise reduction in dB below shot noise.
    pub fn from_db(squeezing_db: f64, theta: f64) -> Result<Self> {
        if !(squeezing_db >= 0.0 && squeezing_db.is_finite()) {
            return Err(domain(format!("squeezing must be >= 0 dB, got {squeezing_db}")));
        }
        Self::new(squeezing_db * std::f64::consts::LN_10 / 20.0, theta)
    }

    /// `-10 log10(e^{-2r})`
    pub fn squeezing_db(&self) -> f64 {
        20.0 * self.r / std::f64::consts::LN_10
    }

    pub fn squeezed_variance(&self) -> f64 {
        (-2.0 * self.r).exp()
    }
}

/// `10 log10(V)` for a shot-noise-normalized variance.
pub fn db(variance: f64) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(domain(format!("variance must be positive, got {variance}")));
    }
    Ok(10.0 * variance.log10())
}

pub fn variance_from_db(decibels: f64) -> f64 {
    10f64.powf(decibels / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    flux: f64,
}

/// Plain serialized layout: `n_modes`, `mean`, row-major `cov`, `flux`.
#[derive(Debug, Serialize, Deserialize)]
struct StateRecord {
    n_modes: usize,
    mean: Vec<f64>,
    cov: Vec<f64>,
    flux: f64,
}

impl GaussianState {
    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(domain("a state needs at least one mode"));
        }
        Ok(Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
            flux: 0.0,
        })
    }

    /// Builds a state from raw moments, checking symmetry and physicality.
    pub fn from_moments(mean: DVector<f64>, cov: DMatrix<f64>, flux: f64) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(domain(format!("mean vector length {dim} is not 2 n_modes")));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(domain(format!("covariance is {}x{}, expected {dim}x{dim}", cov.nrows(), cov.ncols())));
        }
        if !(flux >= 0.0 && flux.is_finite()) {
            return Err(domain(format!("flux must be finite and >= 0, got {flux}")));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(domain("moments contain non-finite entries"));
        }
        let s = Self { mean, cov, flux };
        if s.asymmetry() > SYMMETRY_TOL {
            return Err(domain("covariance is not symmetric"));
        }
        if !s.is_physical() {
            return Err(domain(format!(
                "covariance violates the uncertainty principle (min eigenvalue {:.3e})",
                s.physicality_margin()
            )));
        }
        Ok(s)
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Photons per measurement window per unit `|α|²`.
    pub fn flux(&self) -> f64 {
        self.flux
    }

    fn check_mode(&self, i: usize) -> Result<()> {
        if i >= self.n_modes() {
            return Err(usage(format!("mode {i} out of range for {} modes", self.n_modes())));
        }
        Ok(())
    }

    pub fn mode_cov(&self, i: usize) -> Result<Matrix2<f64>> {
        self.check_mode(i)?;
        Ok(self.cov.fixed_view::<2, 2>(2 * i, 2 * i).into_owned())
    }

    /// Complex amplitude `α = (⟨X⟩ + i⟨Y⟩) / 2` of a mode.
    pub fn amplitude(&self, i: usize) -> Result<Complex64> {
        self.check_mode(i)?;
        Ok(Complex64::new(self.mean[2 * i], self.mean[2 * i + 1]) * 0.5)
    }

    /// Mean photon number `|α|² + (Vxx + Vyy - 2)/4` in units of the flux scale
    /// for the coherent part.
    pub fn mean_photons(&self, i: usize) -> Result<f64> {
        let a = self.amplitude(i)?;
        let v = self.mode_cov(i)?;
        Ok(self.flux * a.norm_sqr() + (v[(0, 0)] + v[(1, 1)] - 2.0) / 4.0)
    }

    /// Sets a coherent amplitude on `mode`: mean `(2 Re α, 2 Im α)`, photon
    /// count `flux |α|²` per window. A zero flux leaves the mode at vacuum mean.
    pub fn set_coherent(&self, mode: usize, amplitude: Complex64, flux: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(flux >= 0.0 && flux.is_finite()) || !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
            return Err(domain(format!("coherent excitation needs finite amplitude and flux >= 0, got {flux}")));
        }
        let mut s = self.clone();
        let (re, im) = if flux > 0.0 { (amplitude.re, amplitude.im) } else { (0.0, 0.0) };
        s.mean[2 * mode] = 2.0 * re;
        s.mean[2 * mode + 1] = 2.0 * im;
        s.flux = flux;
        Ok(s)
    }

    /// Replaces the mode with squeezed vacuum: covariance block
    /// `R(θ) diag(e^{-2r}, e^{2r}) R(θ)ᵀ`, correlations with other modes cleared.
    pub fn set_squeezed_vacuum(&self, mode: usize, spec: SqueezerSpec) -> Result<Self> {
        self.check_mode(mode)?;
        let (c, s) = (spec.theta.cos(), spec.theta.sin());
        let rot = Matrix2::new(c, -s, s, c);
        let diag = Matrix2::new((-2.0 * spec.r).exp(), 0.0, 0.0, (2.0 * spec.r).exp());
        let block = rot * diag * rot.transpose();
        let mut out = self.clone();
        let k = 2 * mode;
        for j in 0..out.cov.ncols() {
            out.cov[(k, j)] = 0.0;
            out.cov[(k + 1, j)] = 0.0;
            out.cov[(j, k)] = 0.0;
            out.cov[(j, k + 1)] = 0.0;
        }
        out.cov.fixed_view_mut::<2, 2>(k, k).copy_from(&block);
        Ok(out)
    }

    /// Applies a passive two-mode unitary `a' = U a` on modes `i`, `j`.
    pub fn apply_two_mode_unitary(&self, i: usize, j: usize, u: [[Complex64; 2]; 2]) -> Result<Self> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(usage("two-mode operation needs distinct modes"));
        }
        let dim = 2 * self.n_modes();
        let mut s = DMatrix::<f64>::identity(dim, dim);
        let idx = [i, j];
        for (r, &mr) in idx.iter().enumerate() {
            for (c, &mc) in idx.iter().enumerate() {
                let z = u[r][c];
                s[(2 * mr, 2 * mc)] = z.re;
                s[(2 * mr, 2 * mc + 1)] = -z.im;
                s[(2 * mr + 1, 2 * mc)] = z.im;
                s[(2 * mr + 1, 2 * mc + 1)] = z.re;
            }
        }
        Ok(self.transformed(&s))
    }

    fn transformed(&self, s: &DMatrix<f64>) -> Self {
        let cov = s * &self.cov * s.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        Self {
            mean: s * &self.mean,
            cov,
            flux: self.flux,
        }
    }

    /// Beamsplitter with power reflectivity `R`: mode `j` receives `√R` of
    /// mode `i` and `√(1-R)` of itself. `R = 1` swaps the modes up to phase.
    pub fn apply_beamsplitter(&self, i: usize, j: usize, reflectivity: f64, phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&reflectivity) || !phase.is_finite() {
            return Err(domain(format!("reflectivity must lie in [0, 1], got {reflectivity}")));
        }
        let t = (1.0 - reflectivity).sqrt();
        let r = reflectivity.sqrt();
        let e = Complex64::from_polar(1.0, phase);
        let u = [
            [Complex64::new(t, 0.0), r * e],
            [-r * e.conj(), Complex64::new(t, 0.0)],
        ];
        self.apply_two_mode_unitary(i, j, u)
    }

    /// Pure loss with transmission `η`: block `η V + (1-η) I`, mean `√η`,
    /// cross-correlations `√η`.
    pub fn apply_loss(&self, mode: usize, efficiency: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(domain(format!("efficiency must lie in [0, 1], got {efficiency}")));
        }
        let g = efficiency.sqrt();
        let mut out = self.clone();
        let k = 2 * mode;
        for q in [k, k + 1] {
            out.mean[q] *= g;
            for j in 0..out.cov.ncols() {
                out.cov[(q, j)] *= g;
            }
            for j in 0..out.cov.nrows() {
                out.cov[(j, q)] *= g;
            }
        }
        out.cov[(k, k)] += 1.0 - efficiency;
        out.cov[(k + 1, k + 1)] += 1.0 - efficiency;
        Ok(out)
    }

    /// Same state with `extra` vacuum modes appended.
    pub fn with_vacuum_modes(&self, extra: usize) -> Self {
        let dim = self.cov.nrows();
        let total = dim + 2 * extra;
        let mut mean = DVector::zeros(total);
        mean.rows_mut(0, dim).copy_from(&self.mean);
        let mut cov = DMatrix::identity(total, total);
        cov.view_mut((0, 0), (dim, dim)).copy_from(&self.cov);
        Self { mean, cov, flux: self.flux }
    }

    /// Reduced state on a subset of modes, in the given order.
    pub fn select_modes(&self, modes: &[usize]) -> Result<Self> {
        if modes.is_empty() {
            return Err(usage("cannot reduce to zero modes"));
        }
        for &m in modes {
            self.check_mode(m)?;
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&q| self.mean[q]));
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.cov[(idx[r], idx[c])]);
        Ok(Self { mean, cov, flux: self.flux })
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.cov - self.cov.transpose()).amax()
    }

    /// Smallest eigenvalue of the Hermitian matrix `cov + iΩ`; the state is
    /// physical when it is non-negative.
    pub fn physicality_margin(&self) -> f64 {
        let dim = self.cov.nrows();
        // embed A + iB as [[A, -B], [B, A]]
        let mut big = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
        big.view_mut((0, 0), (dim, dim)).copy_from(&self.cov);
        big.view_mut((dim, dim), (dim, dim)).copy_from(&self.cov);
        for m in 0..dim / 2 {
            let (x, y) = (2 * m, 2 * m + 1);
            // Ω = [[0, 1], [-1, 0]] per mode
            big[(x, dim + y)] = -1.0;
            big[(y, dim + x)] = 1.0;
            big[(dim + x, y)] = 1.0;
            big[(dim + y, x)] = -1.0;
        }
        SymmetricEigen::new(big).eigenvalues.min()
    }

    pub fn is_physical(&self) -> bool {
        self.asymmetry() <= SYMMETRY_TOL && self.physicality_margin() >= -PHYSICALITY_TOL
    }

    /// Variance of the quadrature `cos φ X + sin φ Y` of one mode.
    pub fn quadrature_variance(&self, mode: usize, phi: f64) -> Result<f64> {
        let v = self.mode_cov(mode)?;
        let (c, s) = (phi.cos(), phi.sin());
        Ok(c * c * v[(0, 0)] + 2.0 * c * s * v[(0, 1)] + s * s * v[(1, 1)])
    }

    pub fn to_json(&self) -> String {
        let rec = StateRecord {
            n_modes: self.n_modes(),
            mean: self.mean.iter().copied().collect(),
            cov: (0..self.cov.nrows())
                .flat_map(|r| (0..self.cov.ncols()).map(move |c| (r, c)))
                .map(|(r, c)| self.cov[(r, c)])
                .collect(),
            flux: self.flux,
        };
        serde_json::to_string_pretty(&rec).expect("state record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: StateRecord = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let dim = rec
            .n_modes
            .checked_mul(2)
            .filter(|&d| d > 0 && d <= 512)
            .ok_or_else(|| Error::Parse(format!("unsupported n_modes {}", rec.n_modes)))?;
        if rec.mean.len() != dim || rec.cov.len() != dim * dim {
            return Err(Error::Parse(format!(
                "n_modes {} needs {dim} means and {} covariances, got {} and {}",
                rec.n_modes,
                dim * dim,
                rec.mean.len(),
                rec.cov.len()
            )));
        }
        let mean = DVector::from_vec(rec.mean);
        let cov = DMatrix::from_row_slice(dim, dim, &rec.cov);
        Self::from_moments(mean, cov, rec.flux).map_err(|e| Error::Parse(e.to_string()))
    }
}
