//! Independent checks of the analytic noise formulas: Monte Carlo sampling of
//! the Gaussian quadratures and a truncated number-state computation.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::detection::{linearize, Channel, DetectorGeometry};
use crate::error::{domain, Error, Result};
use crate::modes::ModeBasis;
use crate::state::GaussianState;

pub const MIN_SAMPLES: usize = 10_000;

/// Samples per independently seeded chunk. Fixed, so the result does not
/// depend on how many threads process the chunks.
pub const CHUNK: usize = 1 << 16;

pub const MIN_CUTOFF: usize = 10;
pub const MAX_FOCK_R: f64 = 1.5;
pub const FOCK_TRUNCATION_LIMIT: f64 = 1e-6;

const CHOLESKY_JITTER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub analytic: f64,
    pub empirical: f64,
    /// Number of samples, or the number-state cutoff.
    pub n: usize,
    pub rel_error: f64,
    pub seed: u64,
}

impl OracleReport {
    pub fn new(analytic: f64, empirical: f64, n: usize, seed: u64) -> Self {
        Self {
            analytic,
            empirical,
            n,
            rel_error: (empirical - analytic).abs() / analytic.abs().max(1e-12),
            seed,
        }
    }
}

/// Running mean and second central moment.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, y: f64) {
        self.n += 1.0;
        let d = y - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (y - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }

    fn variance(&self) -> f64 {
        self.m2 / (self.n - 1.0)
    }
}

fn cholesky_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(c) = Cholesky::new(cov.clone()) {
        return Ok(c.l());
    }
    let jittered = cov + DMatrix::identity(cov.nrows(), cov.ncols()) * CHOLESKY_JITTER;
    Cholesky::new(jittered)
        .map(|c| c.l())
        .ok_or_else(|| domain("covariance is not positive semidefinite"))
}

/// Empirical variance of one linearized photocurrent combination, normalized
/// to its shot noise, against [`ChannelCoupling::normalized_variance`].
///
/// [`ChannelCoupling::normalized_variance`]: crate::detection::ChannelCoupling::normalized_variance
pub fn mc_variance(
    state: &GaussianState,
    basis: &ModeBasis,
    geometry: &DetectorGeometry,
    channel: Channel,
    n_samples: usize,
    seed: u64,
) -> Result<OracleReport> {
    if n_samples < MIN_SAMPLES {
        return Err(domain(format!("need at least {MIN_SAMPLES} samples, got {n_samples}")));
    }
    if !state.is_physical() {
        return Err(domain("state covariance violates the uncertainty principle"));
    }
    let lin = linearize(state, basis, geometry)?;
    let coupling = lin.coupling(channel);
    let analytic = coupling.normalized_variance(state);

    // y = g·(L z) + √rest z' ; only the projection h = Lᵀ g is needed
    let l = cholesky_factor(state.cov())?;
    let h: DVector<f64> = l.transpose() * &coupling.gain;
    let rest = coupling.vacuum_remainder().sqrt();
    let dim = h.len();

    let n_chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = CHUNK.min(n_samples - chunk * CHUNK);
            let mut m = Moments::default();
            for _ in 0..count {
                let mut y = 0.0;
                for k in 0..dim {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    y += h[k] * z;
                }
                let z: f64 = StandardNormal.sample(&mut rng);
                y += rest * z;
                m.push(y);
            }
            m
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let empirical = total.variance() / coupling.shot;
    Ok(OracleReport::new(analytic, empirical, n_samples, seed))
}

/// Squeezed-vacuum number-state amplitudes on `|2n⟩`, `n = 0..=pairs`.
fn squeezed_vacuum_coefficients(r: f64, pairs: usize) -> Vec<f64> {
    let t = -r.tanh();
    let mut c = Vec::with_capacity(pairs + 1);
    let mut cur = 1.0 / r.cosh().sqrt();
    c.push(cur);
    for n in 1..=pairs {
        // √((2n)!)/(2^n n!) grows by √((2n)(2n-1))/(2n)
        let nf = n as f64;
        cur *= t * ((2.0 * nf) * (2.0 * nf - 1.0)).sqrt() / (2.0 * nf);
        c.push(cur);
    }
    c
}

/// `‖X ψ‖²` with `X = a + a†` for the truncated expansion.
fn x_second_moment(coeffs: &[f64]) -> f64 {
    let dim = 2 * coeffs.len();
    let mut out = vec![0.0; dim + 1];
    for (n, &c) in coeffs.iter().enumerate() {
        let m = 2 * n;
        if m > 0 {
            out[m - 1] += (m as f64).sqrt() * c;
        }
        out[m + 1] += ((m + 1) as f64).sqrt() * c;
    }
    out.iter().map(|v| v * v).sum()
}

/// `⟨X²⟩` of a squeezed vacuum truncated after `cutoff` photon pairs,
/// compared with `e^{-2r}`.
pub fn fock_squeezed_variance(r: f64, cutoff: usize) -> Result<OracleReport> {
    if cutoff < MIN_CUTOFF {
        return Err(domain(format!("cutoff must be at least {MIN_CUTOFF}, got {cutoff}")));
    }
    if !(0.0..=MAX_FOCK_R).contains(&r) {
        return Err(domain(format!("squeezing parameter must lie in [0, {MAX_FOCK_R}], got {r}")));
    }
    let coeffs = squeezed_vacuum_coefficients(r, cutoff);
    let v = |k: usize| x_second_moment(&coeffs[..=k]);
    let (v0, v1, v2) = (v(cutoff - 2), v(cutoff - 1), v(cutoff));
    let (d1, d2) = (v1 - v0, v2 - v1);

    // geometric tail of the remaining increments
    let estimate = if d2.abs() < 1e-15 {
        d2.abs()
    } else {
        let q = d2 / d1;
        if q > 0.0 && q < 1.0 {
            d2.abs() * q / (1.0 - q)
        } else {
            f64::INFINITY
        }
    };
    if estimate > FOCK_TRUNCATION_LIMIT {
        return Err(Error::CutoffInsufficient {
            cutoff,
            estimate,
            limit: FOCK_TRUNCATION_LIMIT,
        });
    }
    Ok(OracleReport::new((-2.0 * r).exp(), v2, cutoff, 0))
}
