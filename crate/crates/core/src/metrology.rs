//! Standard quantum limit of split-detector displacement sensing and the
//! signal-to-noise ratio of a displacement measurement.

use std::f64::consts::PI;

use crate::detection::{detector_mask, DetectorGeometry};
use crate::error::{domain, Error, Result};
use crate::grid::Grid;
use crate::modes::{displace_profile, ModeProfile};

/// Relative deviation between exact and first-order signal above which a
/// displacement is flagged as outside the linear regime.
pub const LINEAR_REGIME_TOL: f64 = 0.05;

/// Parallel displacement per volt of the tilted electro-optic modulator.
pub const EOM_METERS_PER_VOLT: f64 = 3e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqlResult {
    pub d_sql: f64,
    pub n: f64,
    /// Photon density at the split (photons per unit length per window).
    pub i0: f64,
}

/// `d_SQL = √N / (2 I(0))` with `I(0) = N |u(split)|²` read from the sampled profile.
pub fn sql_general(n: f64, profile: &ModeProfile, split_position: f64) -> Result<SqlResult> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(domain(format!("photon number must be positive, got {n}")));
    }
    let density = profile.density_at(split_position);
    let i0 = n * density;
    let scale = profile.amplitude().iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    if !(density > 1e-12 * scale) || !i0.is_finite() {
        return Err(Error::Degenerate(format!(
            "no light at the split position {split_position}; the limit diverges"
        )));
    }
    Ok(SqlResult {
        d_sql: n.sqrt() / (2.0 * i0),
        n,
        i0,
    })
}

/// `√(π/8) w0 / √N` for a TEM00 beam centred on the split.
pub fn sql_gaussian(n: f64, w0: f64) -> Result<f64> {
    if !(n > 0.0 && n.is_finite()) || !(w0 > 0.0 && w0.is_finite()) {
        return Err(domain(format!("need N > 0 and w0 > 0, got N = {n}, w0 = {w0}")));
    }
    Ok((PI / 8.0).sqrt() * w0 / n.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementSignal {
    /// Mean difference current from quadrature of the displaced profile.
    pub exact: f64,
    /// First-order prediction from the densities at the pixel edges.
    pub linear: f64,
    /// Set when exact and linear differ by more than [`LINEAR_REGIME_TOL`].
    pub nonlinear: bool,
}

/// Change of the mean difference current (right minus left, photons per
/// window) when the bright profile is displaced by `d`; a static offset of
/// an off-centre beam carries no modulation and is removed.
pub fn displacement_signal(profile: &ModeProfile, geometry: &DetectorGeometry, d: f64, n: f64) -> Result<DisplacementSignal> {
    if !(n >= 0.0 && n.is_finite()) {
        return Err(domain(format!("photon number must be >= 0, got {n}")));
    }
    let grid = *profile.grid();
    let mask = detector_mask(geometry, &grid)?;
    let shifted = displace_profile(profile, d)?;
    let diff: Vec<f64> = mask.left.iter().zip(&mask.right).map(|(l, r)| r - l).collect();
    let current = |p: &ModeProfile| Grid::integrate(&diff, p.amplitude().iter().map(|a| a.norm_sqr()));
    let exact = n * (current(&shifted) - current(profile));

    // d/dd ∫_a^b |u(x-d)|² dx = |u(a)|² - |u(b)|²
    let (l0, l1) = geometry.left_region();
    let (r0, r1) = geometry.right_region();
    let rho = |x: f64| profile.density_at(x);
    let slope = geometry.quantum_efficiency * ((rho(r0) - rho(r1)) - (rho(l0) - rho(l1)));
    let linear = n * slope * d;
    let nonlinear = if linear == 0.0 {
        exact != 0.0
    } else {
        ((exact - linear) / linear).abs() > LINEAR_REGIME_TOL
    };
    Ok(DisplacementSignal { exact, linear, nonlinear })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrResult {
    pub snr: f64,
    pub d: f64,
    pub var_diff: f64,
}

/// Power SNR in one measurement window: `mean_diff(d)² / (shot · var_diff)`
/// where `shot` is the detected photon number.
pub fn snr_from_signal(mean_diff: f64, shot_photons: f64, var_diff: f64, d: f64) -> Result<SnrResult> {
    if !(shot_photons > 0.0) || !(var_diff > 0.0) {
        return Err(domain(format!(
            "SNR needs positive shot noise and variance, got {shot_photons} and {var_diff}"
        )));
    }
    Ok(SnrResult {
        snr: mean_diff * mean_diff / (shot_photons * var_diff),
        d,
        var_diff,
    })
}

/// SNR of displacement `d` with an ideal split detector.
pub fn snr(d: f64, n: f64, profile: &ModeProfile, var_diff: f64) -> Result<SnrResult> {
    if !(n > 0.0) {
        return Err(domain(format!("photon number must be positive, got {n}")));
    }
    let geo = DetectorGeometry::ideal(profile.grid());
    let sig = displacement_signal(profile, &geo, d, n)?;
    snr_from_signal(sig.exact, n, var_diff, d)
}

/// Photon number per window giving `target_snr` at displacement `d` with
/// detector noise `var_diff`; the SNR is proportional to `N`.
pub fn solve_flux(target_snr: f64, d: f64, profile: &ModeProfile, geometry: &DetectorGeometry, var_diff: f64) -> Result<f64> {
    if !(target_snr > 0.0 && target_snr.is_finite()) {
        return Err(Error::Degenerate(format!("target SNR must be positive, got {target_snr}")));
    }
    let mask = detector_mask(geometry, profile.grid())?;
    let detected: Vec<f64> = mask.left.iter().zip(&mask.right).map(|(l, r)| l + r).collect();
    let shot = Grid::integrate(&detected, profile.amplitude().iter().map(|a| a.norm_sqr()));
    let per_photon = displacement_signal(profile, geometry, d, 1.0)?.exact;
    if per_photon == 0.0 || !(shot > 0.0) {
        return Err(Error::Degenerate("displacement produces no signal; flux cannot be solved".into()));
    }
    let n = target_snr * shot * var_diff / (per_photon * per_photon);
    if !n.is_finite() {
        return Err(Error::Degenerate("solved flux is not finite".into()));
    }
    Ok(n)
}

pub fn eom_displacement(voltage: f64) -> f64 {
    eom_displacement_with(voltage, EOM_METERS_PER_VOLT)
}

pub fn eom_displacement_with(voltage: f64, meters_per_volt: f64) -> f64 {
    voltage * meters_per_volt
}
