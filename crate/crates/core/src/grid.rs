//! Uniform transverse grid and the quadrature rules used for every overlap
//! integral in the crate.
//!
//! Integrals are split at `x = 0`, where the flipped mode changes sign, and
//! at every region boundary. Each piece is integrated by the composite
//! trapezoidal rule with second-order Gregory end corrections, plus an
//! extrapolated partial cell when the boundary falls between two samples.
//! Samples of one side never contribute to the other side, so the left and
//! right half-plane rules add up to the full-line rule exactly.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Location of the half-plane boundary shared by the flipped mode and the
/// default split detector.
pub const SPLIT_ORIGIN: f64 = 0.0;

/// Minimum number of samples in a piece before the corrected rule is used.
const MIN_CORRECTED: usize = 6;

/// Partial cells wider than this fraction of the spacing are extrapolated
/// linearly, which keeps every weight non-negative.
const QUADRATIC_TAU_MAX: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(domain("grid bounds must be finite"));
        }
        if x_min >= x_max {
            return Err(domain(format!("grid requires x_min < x_max, got [{x_min}, {x_max}]")));
        }
        if n_points < 2 {
            return Err(domain(format!("grid needs at least 2 points, got {n_points}")));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    /// Default grid for a beam of radius `w0`: `[-6 w0, 6 w0]` with 4096 points.
    pub fn for_beam(w0: f64) -> Result<Self> {
        if !(w0 > 0.0 && w0.is_finite()) {
            return Err(domain(format!("beam radius must be positive, got {w0}")));
        }
        Self::symmetric(6.0 * w0, 4096)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn extent(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, k: usize) -> f64 {
        if k + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + k as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.x(k))
    }

    /// Full-line quadrature weights (the inner product of the grid).
    pub fn weights(&self) -> Vec<f64> {
        self.interval_weights(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Quadrature weights for the half-open region `[a, b)` clipped to the
    /// grid. The last grid sample belongs to any region reaching `x_max`.
    pub fn interval_weights(&self, a: f64, b: f64) -> Vec<f64> {
        let mut w = vec![0.0; self.n_points];
        let lo = a.max(self.x_min);
        let hi = b.min(self.x_max);
        if lo >= hi {
            return w;
        }
        if lo < SPLIT_ORIGIN && SPLIT_ORIGIN < hi {
            self.accumulate_piece(lo, SPLIT_ORIGIN, false, &mut w);
            self.accumulate_piece(SPLIT_ORIGIN, hi, b >= self.x_max, &mut w);
        } else {
            self.accumulate_piece(lo, hi, b >= self.x_max, &mut w);
        }
        w
    }

    /// Index of the first sample with `x >= a` (samples within a rounding
    /// distance of `a` count as lying on it).
    fn first_at_or_after(&self, a: f64) -> usize {
        let h = self.spacing();
        let t = (a - self.x_min) / h;
        let k = (t - 1e-9).ceil();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.n_points)
        }
    }

    fn accumulate_piece(&self, a: f64, b: f64, closed_at_end: bool, w: &mut [f64]) {
        let n = self.n_points;
        let h = self.spacing();
        let k_lo = self.first_at_or_after(a);
        let k_hi_excl = if closed_at_end { n } else { self.first_at_or_after(b) };
        if k_lo >= k_hi_excl {
            self.accumulate_linear(a, b, w);
            return;
        }
        let k_hi = k_hi_excl - 1;
        let m = k_hi - k_lo + 1;
        if m < MIN_CORRECTED {
            self.accumulate_linear(a, b, w);
            return;
        }
        let tau_lo = ((self.x(k_lo) - a) / h).clamp(0.0, 1.0);
        let tau_hi = if closed_at_end {
            0.0
        } else {
            ((b - self.x(k_hi)) / h).clamp(0.0, 1.0)
        };

        // composite trapezoid over [x_lo, x_hi]
        for wk in w.iter_mut().take(k_hi + 1).skip(k_lo) {
            *wk += h;
        }
        w[k_lo] -= 0.5 * h;
        w[k_hi] -= 0.5 * h;

        // Gregory corrections (first and second differences)
        let greg = [-3.0 / 24.0, 4.0 / 24.0, -1.0 / 24.0];
        for (j, c) in greg.iter().enumerate() {
            w[k_lo + j] += c * h;
            w[k_hi - j] += c * h;
        }

        for (edge, tau, dir) in [(k_lo, tau_lo, 1isize), (k_hi, tau_hi, -1isize)] {
            if tau <= 0.0 {
                continue;
            }
            let coeffs = partial_cell(tau);
            for (j, c) in coeffs.iter().enumerate() {
                let k = (edge as isize + dir * j as isize) as usize;
                w[k] += c * h;
            }
        }
    }

    /// Exact integral of the piecewise-linear interpolant over `[a, b]`.
    fn accumulate_linear(&self, a: f64, b: f64, w: &mut [f64]) {
        let h = self.spacing();
        let lo = a.max(self.x_min);
        let hi = b.min(self.x_max);
        if hi <= lo {
            return;
        }
        let first_cell = (((lo - self.x_min) / h).floor() as usize).min(self.n_points - 2);
        for k in first_cell..self.n_points - 1 {
            let x0 = self.x(k);
            if x0 >= hi {
                break;
            }
            let s = ((lo - x0) / h).clamp(0.0, 1.0);
            let t = ((hi - x0) / h).clamp(0.0, 1.0);
            if t <= s {
                continue;
            }
            let q = 0.5 * (t * t - s * s);
            w[k] += h * ((t - s) - q);
            w[k + 1] += h * q;
        }
    }

    /// Sum of `weights[k] * values[k]`.
    pub fn integrate(weights: &[f64], values: impl IntoIterator<Item = f64>) -> f64 {
        weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Weights (in units of the spacing) on the edge sample and its two inward
/// neighbours for a partial cell of width `tau * h` beyond the edge sample.
fn partial_cell(tau: f64) -> [f64; 3] {
    let t2 = tau * tau;
    if tau <= QUADRATIC_TAU_MAX {
        // integral over [-tau, 0] of the forward Newton quadratic through t = 0, 1, 2
        let c2 = 0.5 * (tau * t2 / 3.0 + t2 / 2.0);
        [tau + 0.5 * t2 + c2, -0.5 * t2 - 2.0 * c2, c2]
    } else {
        [tau + 0.5 * t2, -0.5 * t2, 0.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(x: f64) -> f64 {
        (-x * x).exp()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1.0, 1.0, 10).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        assert!(Grid::new(f64::NAN, 1.0, 10).is_err());
        assert!(Grid::for_beam(0.0).is_err());
    }

    #[test]
    fn full_line_integral_of_gaussian() {
        let g = Grid::symmetric(6.0, 4096).unwrap();
        let w = g.weights();
        let v = Grid::integrate(&w, g.points().map(gaussian));
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn halves_add_to_full_line() {
        let g = Grid::symmetric(6.0, 4096).unwrap();
        let full = g.weights();
        let left = g.interval_weights(f64::NEG_INFINITY, 0.0);
        let right = g.interval_weights(0.0, f64::INFINITY);
        for k in 0..g.n_points() {
            assert!((full[k] - left[k] - right[k]).abs() < 1e-18);
            assert!(left[k] == 0.0 || right[k] == 0.0);
        }
    }

    #[test]
    fn odd_polynomial_half_line_is_high_order() {
        // x e^{-x^2} on [0, inf) = 1/2; the integrand has a kink-free but
        // nonzero slope at the boundary, which plain trapezoid gets wrong at O(h^2).
        let g = Grid::symmetric(6.0, 4096).unwrap();
        let right = g.interval_weights(0.0, f64::INFINITY);
        let v = Grid::integrate(&right, g.points().map(|x| x * gaussian(x)));
        assert!((v - 0.5).abs() < 1e-10, "{}", v - 0.5);
    }

    #[test]
    fn arbitrary_interval_matches_closed_form() {
        // ∫_a^b 2x dx = b^2 - a^2 with a boundary that is not on a sample
        let g = Grid::symmetric(1.0, 1001).unwrap();
        for (a, b) in [(0.1234, 0.789), (-0.77, -0.0123), (-0.5, 0.3), (0.0, 1.0)] {
            let w = g.interval_weights(a, b);
            let v = Grid::integrate(&w, g.points().map(|x| 2.0 * x));
            assert!((v - (b * b - a * a)).abs() < 1e-12, "[{a}, {b}] -> {v}");
        }
    }

    #[test]
    fn weights_are_never_negative() {
        let g = Grid::symmetric(1.0, 200).unwrap();
        for i in 0..500 {
            let a = -0.9 + i as f64 * 0.0031;
            let w = g.interval_weights(a, a + 0.4);
            assert!(w.iter().all(|&x| x >= 0.0), "a = {a}");
        }
    }

    #[test]
    fn tiny_interval_inside_one_cell() {
        let g = Grid::symmetric(1.0, 11).unwrap();
        let w = g.interval_weights(0.01, 0.03);
        let v = Grid::integrate(&w, g.points().map(|_| 1.0));
        assert!((v - 0.02).abs() < 1e-15);
    }
}
