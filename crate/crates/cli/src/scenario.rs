//! Builds the two-mode state, basis and detector of one configured run.
//!
//! Mode 0 holds the TEM00 profile carrying the squeezed vacuum, mode 1 the
//! flipped profile carrying the coherent beam.

use splitbeam_core::detection::{detector_mask, split_statistics, Channel, DetectorGeometry, MeasurementStats};
use splitbeam_core::grid::Grid;
use splitbeam_core::metrology::{displacement_signal, snr_from_signal, solve_flux};
use splitbeam_core::modes::{make_flipped_mode, make_gaussian_mode, ModeBasis, ModeProfile};
use splitbeam_core::num_complex::Complex64;
use splitbeam_core::state::{db, GaussianState, SqueezerSpec};
use splitbeam_core::{Error, Result};

use crate::config::{ChainModel, Flux, ScenarioConfig};

pub const SQUEEZED: usize = 0;
pub const BRIGHT: usize = 1;

/// Placeholder photon number for noise-only runs; normalized variances do
/// not depend on it.
const NOISE_ONLY_FLUX: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub basis: ModeBasis,
    pub state: GaussianState,
    pub geometry: DetectorGeometry,
    /// Efficiency applied to the squeezed mode before the detector.
    pub transfer_efficiency: f64,
}

impl Scenario {
    pub fn bright_profile(&self) -> &ModeProfile {
        &self.basis.modes()[BRIGHT]
    }

    pub fn stats(&self) -> Result<MeasurementStats> {
        split_statistics(&self.state, &self.basis, &self.geometry)
    }
}

pub fn grid_for(cfg: &ScenarioConfig) -> Result<Grid> {
    Grid::symmetric(cfg.grid.half_width * cfg.beam.w0, cfg.grid.n_points)
}

pub fn geometry_for(cfg: &ScenarioConfig, grid: &Grid) -> Result<DetectorGeometry> {
    match cfg.chain.model {
        ChainModel::Fitted => Ok(DetectorGeometry::ideal(grid)),
        ChainModel::Components => DetectorGeometry::new(
            cfg.detector.split_position,
            cfg.detector.pixel_width,
            cfg.detector.dead_zone,
            cfg.chain.quantum_efficiency,
        ),
    }
}

/// Scenario with the configured source replaced by `squeezing_db` and the
/// mode-matching visibility by `visibility`.
pub fn build_with(cfg: &ScenarioConfig, squeezing_db: f64, visibility: f64) -> Result<Scenario> {
    let grid = grid_for(cfg)?;
    let u0 = make_gaussian_mode(cfg.beam.w0, grid)?;
    let u1 = make_flipped_mode(&u0);
    let basis = ModeBasis::new(vec![u0, u1])?;
    let geometry = geometry_for(cfg, &grid)?;
    // sanity check of the pixel layout against the grid
    detector_mask(&geometry, &grid)?;

    let flux = match cfg.operating_point.flux_n {
        Flux::Photons(n) => n,
        Flux::Solve => NOISE_ONLY_FLUX,
    };
    let v2 = visibility * visibility;
    let mut state = GaussianState::vacuum(2)?.set_coherent(BRIGHT, Complex64::new(1.0, 0.0), flux)?;
    if squeezing_db > 0.0 {
        let spec = SqueezerSpec::from_db(squeezing_db, cfg.source.relative_phase)?;
        state = state.set_squeezed_vacuum(SQUEEZED, spec)?;
    }
    let transfer_efficiency = match cfg.chain.model {
        ChainModel::Fitted => {
            state = state.apply_loss(SQUEEZED, cfg.chain.efficiency * v2)?;
            cfg.chain.efficiency * v2
        }
        ChainModel::Components => {
            // squeezed beam reflected off the combining beamsplitter; the
            // other output port is discarded
            let wide = state.with_vacuum_modes(1);
            let mixed = wide.apply_beamsplitter(SQUEEZED, 2, cfg.chain.beamsplitter_r, 0.0)?;
            state = mixed.select_modes(&[2, BRIGHT])?;
            state = state.apply_loss(SQUEEZED, v2)?;
            cfg.chain.beamsplitter_r * v2
        }
    };
    Ok(Scenario {
        basis,
        state,
        geometry,
        transfer_efficiency,
    })
}

pub fn build(cfg: &ScenarioConfig) -> Result<Scenario> {
    build_with(cfg, cfg.source.squeezing_db, cfg.chain.mode_match_visibility)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Photons per window at the reference bandwidth.
    pub n_reference: f64,
    /// Photons per window at the configured bandwidth.
    pub n_measurement: f64,
    pub solved: bool,
}

/// Photon number per window. With `flux_N = "solve"`, it is chosen so the
/// coherent (vacuum-seeded) run reaches `snr_coherent` at the reference
/// displacement and bandwidth; the photon rate is then held fixed, so the
/// window at `rbw` holds `N_ref · rbw_ref / rbw`.
pub fn operating_point(cfg: &ScenarioConfig) -> Result<OperatingPoint> {
    let op = &cfg.operating_point;
    let (n_reference, solved) = match op.flux_n {
        Flux::Photons(n) => (n, false),
        Flux::Solve => {
            let coherent = build_with(cfg, 0.0, cfg.chain.mode_match_visibility)?;
            let var = coherent.stats()?.var_diff;
            let n = solve_flux(op.snr_coherent, op.reference_displacement, coherent.bright_profile(), &coherent.geometry, var)?;
            (n, true)
        }
    };
    Ok(OperatingPoint {
        n_reference,
        n_measurement: n_reference * op.reference_rbw / cfg.signal.rbw,
        solved,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPair {
    pub snr_coherent: f64,
    pub snr_squeezed: f64,
    pub var_coherent: f64,
    pub var_squeezed: f64,
    pub db_coherent: f64,
    pub db_squeezed: f64,
    pub improvement: f64,
    pub point: OperatingPoint,
}

fn scenario_snr(s: &Scenario, d: f64, n: f64) -> Result<(f64, f64)> {
    let stats = s.stats()?;
    let lin = splitbeam_core::detection::linearize(&s.state, &s.basis, &s.geometry)?;
    let shot = lin.coupling(Channel::Diff).shot * n;
    let signal = displacement_signal(s.bright_profile(), &s.geometry, d, n)?;
    Ok((snr_from_signal(signal.exact, shot, stats.var_diff, d)?.snr, stats.var_diff))
}

/// SNR of the configured displacement with vacuum and with squeezed light
/// in the TEM00 mode.
pub fn snr_pair(cfg: &ScenarioConfig) -> Result<SnrPair> {
    let point = operating_point(cfg)?;
    let d = cfg.signal.displacement_amplitude;
    let n = point.n_measurement;
    let (snr_coherent, var_coherent) = scenario_snr(&build_with(cfg, 0.0, cfg.chain.mode_match_visibility)?, d, n)?;
    let (snr_squeezed, var_squeezed) = scenario_snr(&build(cfg)?, d, n)?;
    let improvement = if snr_coherent > 0.0 {
        snr_squeezed / snr_coherent
    } else {
        var_coherent / var_squeezed
    };
    Ok(SnrPair {
        snr_coherent,
        snr_squeezed,
        var_coherent,
        var_squeezed,
        db_coherent: db(var_coherent)?,
        db_squeezed: db(var_squeezed)?,
        improvement,
        point,
    })
}

/// Visibility at which the difference noise equals `target_db`, by
/// bisection over `[0, 1]`; `None` if even perfect matching cannot reach it.
pub fn visibility_for(cfg: &ScenarioConfig, target_db: f64) -> Result<Option<f64>> {
    let level = |v: f64| -> Result<f64> { Ok(build_with(cfg, cfg.source.squeezing_db, v)?.stats()?.db_diff) };
    let (mut lo, mut hi) = (0.0, 1.0);
    let (at_lo, at_hi) = (level(lo)?, level(hi)?);
    // the noise falls monotonically with visibility
    if !(at_hi <= target_db && target_db <= at_lo) {
        return Ok(None);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if level(mid)? > target_db {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

pub fn is_unsolvable(e: &Error) -> bool {
    matches!(e, Error::Degenerate(_))
}
