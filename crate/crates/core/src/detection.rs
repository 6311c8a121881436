//! Split-detector photocurrent statistics in the linearized (bright mean
//! field) regime.
//!
//! With one bright mode `b` carrying `N` photons per window, the fluctuation
//! of a photocurrent combination with signed region weights `s_k W_k(x)` is
//!
//! ```text
//! δn / √N = Σ_i g_iᵀ δq_i + (vacuum entering through gaps and unused modes)
//! k_i     = ∫ Σ_k s_k W_k(x) u_b*(x) u_i(x) dx
//! g_i     = (Re(e^{-iφ_b} k_i), -Im(e^{-iφ_b} k_i))
//! ```
//!
//! and its shot-noise-normalized variance is `1 + gᵀ(Σ - I)g / S`, where
//! `S = ∫ Σ_k W_k |u_b|²` is the detected fraction of the bright mode.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::grid::Grid;
use crate::modes::{ModeBasis, ModeProfile};
use crate::state::{db, GaussianState};

/// Modes whose mean amplitude is below this are treated as dark.
const BRIGHT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorGeometry {
    pub split_position: f64,
    pub pixel_width: f64,
    pub dead_zone: f64,
    pub quantum_efficiency: f64,
}

impl DetectorGeometry {
    pub fn new(split_position: f64, pixel_width: f64, dead_zone: f64, quantum_efficiency: f64) -> Result<Self> {
        if ![split_position, pixel_width, dead_zone, quantum_efficiency]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(domain("detector geometry must be finite"));
        }
        if dead_zone < 0.0 {
            return Err(domain(format!("dead zone must be >= 0, got {dead_zone}")));
        }
        if pixel_width <= dead_zone / 2.0 {
            return Err(domain(format!(
                "pixel width {pixel_width} must exceed half the dead zone {dead_zone}"
            )));
        }
        if !(0.0..=1.0).contains(&quantum_efficiency) {
            return Err(domain(format!("quantum efficiency must lie in [0, 1], got {quantum_efficiency}")));
        }
        Ok(Self {
            split_position,
            pixel_width,
            dead_zone,
            quantum_efficiency,
        })
    }

    /// Unit efficiency, no gap, split at the origin, pixels covering the grid.
    pub fn ideal(grid: &Grid) -> Self {
        Self {
            split_position: 0.0,
            pixel_width: grid.x_max().max(-grid.x_min()),
            dead_zone: 0.0,
            quantum_efficiency: 1.0,
        }
    }

    pub fn left_region(&self) -> (f64, f64) {
        (self.split_position - self.pixel_width, self.split_position - self.dead_zone / 2.0)
    }

    pub fn right_region(&self) -> (f64, f64) {
        (self.split_position + self.dead_zone / 2.0, self.split_position + self.pixel_width)
    }
}

/// Per-sample integration weights of each pixel, efficiency included.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorMask {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl DetectorMask {
    /// Most negative (or non-finite) weight; zero for a physical mask.
    pub fn weight_violation(&self) -> f64 {
        self.left
            .iter()
            .chain(&self.right)
            .map(|&w| if w.is_finite() { (-w).max(0.0) } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }
}

pub fn detector_mask(geometry: &DetectorGeometry, grid: &Grid) -> Result<DetectorMask> {
    let (l0, l1) = geometry.left_region();
    let (r0, r1) = geometry.right_region();
    let tol = 1e-9 * grid.spacing();
    if l0 < grid.x_min() - tol || r1 > grid.x_max() + tol {
        return Err(domain(format!(
            "detector [{l0}, {r1}] exceeds the grid [{}, {}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    let qe = geometry.quantum_efficiency;
    let scale = |w: Vec<f64>| w.into_iter().map(|v| v * qe).collect::<Vec<_>>();
    let right_end = if r1 >= grid.x_max() - tol { f64::INFINITY } else { r1 };
    Ok(DetectorMask {
        left: scale(grid.interval_weights(l0, l1)),
        right: scale(grid.interval_weights(r0, right_end)),
    })
}

/// Photocurrent combinations reported by the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Sum,
    Diff,
    Left,
    Right,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Sum, Channel::Diff, Channel::Left, Channel::Right];

    pub fn name(&self) -> &'static str {
        match self {
            Channel::Sum => "sum",
            Channel::Diff => "diff",
            Channel::Left => "left",
            Channel::Right => "right",
        }
    }

    /// Signs applied to the (left, right) pixel currents.
    fn signs(&self) -> (f64, f64) {
        match self {
            Channel::Sum => (1.0, 1.0),
            Channel::Diff => (-1.0, 1.0),
            Channel::Left => (1.0, 0.0),
            Channel::Right => (0.0, 1.0),
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Channel::Sum),
            "diff" => Ok(Channel::Diff),
            "left" => Ok(Channel::Left),
            "right" => Ok(Channel::Right),
            other => Err(Error::Usage(format!("unknown channel `{other}`"))),
        }
    }
}

/// Linear response of one photocurrent combination to the quadrature
/// fluctuations, per unit bright-mode photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCoupling {
    pub channel: Channel,
    /// Coefficients on `δX_1, δY_1, δX_2, ...` (length `2 n_modes`).
    pub gain: DVector<f64>,
    /// Detected shot-noise level `S` (variance of `δn/√N` for a coherent beam).
    pub shot: f64,
    /// Mean current per bright photon.
    pub mean: f64,
}

impl ChannelCoupling {
    /// `Σ|k_i|²`, the part of the shot noise carried by the basis modes.
    pub fn captured(&self) -> f64 {
        self.gain.norm_squared()
    }

    /// Vacuum variance entering through gaps, efficiency and modes outside
    /// the basis.
    pub fn vacuum_remainder(&self) -> f64 {
        (self.shot - self.captured()).max(0.0)
    }

    pub fn normalized_variance(&self, state: &GaussianState) -> f64 {
        let g = &self.gain;
        let quad = (g.transpose() * state.cov() * g)[(0, 0)];
        1.0 + (quad - self.captured()) / self.shot
    }
}

/// Everything the noise algebra needs about one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedDetection {
    pub bright_mode: usize,
    /// Photons per window in the bright mode before detection.
    pub photons: f64,
    pub couplings: Vec<ChannelCoupling>,
}

impl LinearizedDetection {
    pub fn coupling(&self, channel: Channel) -> &ChannelCoupling {
        self.couplings
            .iter()
            .find(|c| c.channel == channel)
            .expect("all channels are linearized")
    }
}

pub fn linearize(state: &GaussianState, basis: &ModeBasis, geometry: &DetectorGeometry) -> Result<LinearizedDetection> {
    let mask = match basis.grid() {
        Some(g) => detector_mask(geometry, g)?,
        None => return Err(Error::Usage("empty mode basis".into())),
    };
    linearize_with_mask(state, basis, &mask)
}

/// Same as [`linearize`] with an explicit mask, used to probe faulty masks.
pub fn linearize_with_mask(state: &GaussianState, basis: &ModeBasis, mask: &DetectorMask) -> Result<LinearizedDetection> {
    if state.n_modes() != basis.len() {
        return Err(Error::Usage(format!(
            "state has {} modes but the basis has {}",
            state.n_modes(),
            basis.len()
        )));
    }
    let grid = *basis.grid().expect("basis is non-empty");
    if mask.left.len() != grid.n_points() || mask.right.len() != grid.n_points() {
        return Err(Error::Usage("mask does not match the basis grid".into()));
    }
    let bright: Vec<usize> = (0..state.n_modes())
        .filter(|&i| state.amplitude(i).map(|a| a.norm() > BRIGHT_THRESHOLD).unwrap_or(false))
        .collect();
    let bright_mode = match bright.as_slice() {
        [b] => *b,
        [] => return Err(Error::Degenerate("no mode carries a mean field".into())),
        _ => {
            return Err(Error::Unsupported(format!(
                "{} bright modes; the linearized model needs exactly one",
                bright.len()
            )))
        }
    };
    let alpha = state.amplitude(bright_mode)?;
    let photons = state.flux() * alpha.norm_sqr();
    if !(photons > 0.0) {
        return Err(Error::Degenerate("bright mode carries zero flux".into()));
    }
    let phase = Complex64::from_polar(1.0, -alpha.arg());
    let ub: &ModeProfile = &basis.modes()[bright_mode];

    let couplings = Channel::ALL
        .iter()
        .map(|&channel| {
            let (sl, sr) = channel.signs();
            let f: Vec<f64> = mask.left.iter().zip(&mask.right).map(|(l, r)| sl * l + sr * r).collect();
            let h: Vec<f64> = mask
                .left
                .iter()
                .zip(&mask.right)
                .map(|(l, r)| sl * sl * l + sr * sr * r)
                .collect();
            let dens: Vec<f64> = ub.amplitude().iter().map(|a| a.norm_sqr()).collect();
            let shot = Grid::integrate(&h, dens.iter().copied());
            let mean = Grid::integrate(&f, dens.iter().copied());
            let mut gain = DVector::zeros(2 * basis.len());
            for (i, ui) in basis.modes().iter().enumerate() {
                let k: Complex64 = f
                    .iter()
                    .zip(ub.amplitude().iter().zip(ui.amplitude()))
                    .map(|(w, (b, u))| b.conj() * u * *w)
                    .sum();
                let kk = phase * k;
                gain[2 * i] = kk.re;
                gain[2 * i + 1] = -kk.im;
            }
            ChannelCoupling { channel, gain, shot, mean }
        })
        .collect();
    Ok(LinearizedDetection {
        bright_mode,
        photons,
        couplings,
    })
}

/// Mean currents and shot-noise-normalized variances of the split detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementStats {
    pub mean_sum: f64,
    pub mean_diff: f64,
    pub var_sum: f64,
    pub var_diff: f64,
    pub var_left: f64,
    pub var_right: f64,
    pub db_sum: f64,
    pub db_diff: f64,
    pub db_half: f64,
}

impl MeasurementStats {
    pub const CSV_HEADER: &'static str = "mean_sum,mean_diff,var_sum,var_diff,var_left,var_right,db_sum,db_diff,db_half";

    pub fn variance(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Sum => self.var_sum,
            Channel::Diff => self.var_diff,
            Channel::Left => self.var_left,
            Channel::Right => self.var_right,
        }
    }

    pub fn csv_row(&self) -> String {
        [
            self.mean_sum,
            self.mean_diff,
            self.var_sum,
            self.var_diff,
            self.var_left,
            self.var_right,
            self.db_sum,
            self.db_diff,
            self.db_half,
        ]
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }
}

pub fn split_statistics(state: &GaussianState, basis: &ModeBasis, geometry: &DetectorGeometry) -> Result<MeasurementStats> {
    stats_from_linearization(state, &linearize(state, basis, geometry)?)
}

pub fn stats_from_linearization(state: &GaussianState, lin: &LinearizedDetection) -> Result<MeasurementStats> {
    let var = |c: Channel| -> Result<f64> {
        let cp = lin.coupling(c);
        if !(cp.shot > 0.0) {
            return Err(Error::Degenerate(format!("no light reaches the {} channel", c.name())));
        }
        Ok(cp.normalized_variance(state))
    };
    let var_sum = var(Channel::Sum)?;
    let var_diff = var(Channel::Diff)?;
    let var_left = var(Channel::Left)?;
    let var_right = var(Channel::Right)?;
    Ok(MeasurementStats {
        mean_sum: lin.photons * lin.coupling(Channel::Sum).mean,
        mean_diff: lin.photons * lin.coupling(Channel::Diff).mean,
        var_sum,
        var_diff,
        var_left,
        var_right,
        db_sum: db(var_sum)?,
        db_diff: db(var_diff)?,
        db_half: db(0.5 * (var_left + var_right))?,
    })
}

/// One element of a detection loss chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainFactor {
    Efficiency(f64),
    /// Mode-matching visibility `v`, acting as efficiency `v²`.
    Visibility(f64),
}

impl ChainFactor {
    pub fn efficiency(&self) -> f64 {
        match *self {
            ChainFactor::Efficiency(e) => e,
            ChainFactor::Visibility(v) => v * v,
        }
    }

    fn raw(&self) -> f64 {
        match *self {
            ChainFactor::Efficiency(e) | ChainFactor::Visibility(e) => e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    pub source_variance: f64,
    pub total_efficiency: f64,
    pub var_diff: f64,
    pub db_diff: f64,
}

/// Propagates a squeezed source through a chain of losses: each factor maps
/// `V -> η V + 1 - η`.
pub fn noise_budget(squeezing_db_source: f64, chain: &[ChainFactor]) -> Result<NoiseBudget> {
    if !(squeezing_db_source >= 0.0 && squeezing_db_source.is_finite()) {
        return Err(domain(format!("source squeezing must be >= 0 dB, got {squeezing_db_source}")));
    }
    if let Some(bad) = chain.iter().find(|f| !(0.0..=1.0).contains(&f.raw())) {
        return Err(domain(format!("chain factor {bad:?} outside [0, 1]")));
    }
    let source_variance = 10f64.powf(-squeezing_db_source / 10.0);
    let total_efficiency: f64 = chain.iter().map(ChainFactor::efficiency).product();
    let var_diff = chain
        .iter()
        .fold(source_variance, |v, f| f.efficiency() * v + 1.0 - f.efficiency());
    Ok(NoiseBudget {
        source_variance,
        total_efficiency,
        var_diff,
        db_diff: db(var_diff)?,
    })
}

/// Efficiency `η = (1 - V_target) / (1 - V_source)` that turns a source
/// squeezing into the target noise reduction (both in dB below shot noise).
pub fn back_solve_efficiency(squeezing_db_source: f64, reduction_db_target: f64) -> Result<f64> {
    if !(squeezing_db_source > 0.0) || !(reduction_db_target >= 0.0) || reduction_db_target > squeezing_db_source {
        return Err(domain(format!(
            "cannot reach {reduction_db_target} dB from a {squeezing_db_source} dB source"
        )));
    }
    let vs = 10f64.powf(-squeezing_db_source / 10.0);
    let vt = 10f64.powf(-reduction_db_target / 10.0);
    Ok((1.0 - vt) / (1.0 - vs))
}
