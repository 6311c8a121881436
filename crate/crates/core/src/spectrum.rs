//! Synthetic spectrum-analyzer traces of the difference photocurrent.
//!
//! Each bin of an averaging analyzer is the mean of `n_avg` exponentially
//! distributed power readings, i.e. chi-squared with `2 n_avg` degrees of
//! freedom scaled to the local level.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::detection::MeasurementStats;
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSettings {
    pub center_hz: f64,
    pub span_hz: f64,
    pub rbw_hz: f64,
    /// Number of frequency bins; forced odd so one bin sits on the centre.
    pub n_points: usize,
    /// Traces averaged per bin.
    pub n_avg: usize,
}

impl SpectrumSettings {
    pub const DEFAULT_POINTS: usize = 401;
    pub const DEFAULT_AVERAGES: usize = 10;

    pub fn new(center_hz: f64, span_hz: f64, rbw_hz: f64) -> Result<Self> {
        let s = Self {
            center_hz,
            span_hz,
            rbw_hz,
            n_points: Self::DEFAULT_POINTS,
            n_avg: Self::DEFAULT_AVERAGES,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rbw_hz > 0.0 && self.rbw_hz.is_finite()) {
            return Err(domain(format!("rbw must be positive, got {}", self.rbw_hz)));
        }
        if !(self.span_hz > self.rbw_hz && self.span_hz.is_finite()) {
            return Err(domain(format!(
                "span {} must exceed the rbw {}",
                self.span_hz, self.rbw_hz
            )));
        }
        if !self.center_hz.is_finite() {
            return Err(domain("centre frequency must be finite"));
        }
        if self.n_points < 3 || self.n_avg == 0 {
            return Err(domain("need at least 3 bins and one average"));
        }
        Ok(())
    }

    fn bins(&self) -> usize {
        self.n_points | 1
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.bins();
        let half = (n / 2) as f64;
        let df = self.span_hz / (n - 1) as f64;
        (0..n).map(|k| self.center_hz + (k as f64 - half) * df).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    pub frequency_hz: Vec<f64>,
    /// Sampled power relative to shot noise.
    pub power_db: Vec<f64>,
    /// Noise-free level the samples scatter around.
    pub expected_db: Vec<f64>,
}

impl SpectrumTrace {
    pub const CSV_HEADER: &'static str = "frequency_hz,power_db";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (f, p) in self.frequency_hz.iter().zip(&self.power_db) {
            out.push_str(&format!("{f:.1},{p:.6}\n"));
        }
        out
    }

    /// Index of the bin nearest `f`.
    pub fn bin_of(&self, f: f64) -> usize {
        let mut best = 0;
        for (k, x) in self.frequency_hz.iter().enumerate() {
            if (x - f).abs() < (self.frequency_hz[best] - f).abs() {
                best = k;
            }
        }
        best
    }
}

/// Power above the floor at the signal bin: `10 log10(1 + snr)`.
pub fn peak_height_db(snr: f64) -> f64 {
    10.0 * (1.0 + snr).log10()
}

fn averaged_exponential(rng: &mut ChaCha8Rng, n_avg: usize) -> f64 {
    let s: f64 = (0..n_avg).map(|_| -> f64 { Exp1.sample(rng) }).sum();
    s / n_avg as f64
}

/// Noise spectrum around the modulation frequency with the floor at
/// `stats.db_diff` and a peak of the analyzer's filter shape.
pub fn spectrum_synthesis(stats: &MeasurementStats, signal_snr: f64, settings: &SpectrumSettings, seed: u64) -> Result<SpectrumTrace> {
    spectrum_at_level(stats.db_diff, signal_snr, settings, seed)
}

/// [`spectrum_synthesis`] with an explicit floor level in dB.
pub fn spectrum_at_level(floor_db: f64, signal_snr: f64, settings: &SpectrumSettings, seed: u64) -> Result<SpectrumTrace> {
    settings.validate()?;
    if !(signal_snr >= 0.0 && signal_snr.is_finite()) || !floor_db.is_finite() {
        return Err(domain(format!("need snr >= 0 and a finite floor, got {signal_snr}, {floor_db}")));
    }
    let floor = 10f64.powf(floor_db / 10.0);
    let frequency_hz = settings.frequencies();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut power_db = Vec::with_capacity(frequency_hz.len());
    let mut expected_db = Vec::with_capacity(frequency_hz.len());
    for &f in &frequency_hz {
        let x = (f - settings.center_hz) / settings.rbw_hz;
        let shape = (-4.0 * std::f64::consts::LN_2 * x * x).exp();
        let level = floor * (1.0 + signal_snr * shape);
        expected_db.push(10.0 * level.log10());
        power_db.push(10.0 * (level * averaged_exponential(&mut rng, settings.n_avg)).log10());
    }
    Ok(SpectrumTrace {
        frequency_hz,
        power_db,
        expected_db,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub time_s: Vec<f64>,
    pub power_db: Vec<f64>,
    pub level_db: f64,
}

/// Zero-span analyzer trace: the power at one frequency sampled over time.
pub fn time_trace(level_db: f64, sweep_s: f64, n_points: usize, n_avg: usize, seed: u64) -> Result<TimeTrace> {
    if !(sweep_s > 0.0) || n_points < 2 || n_avg == 0 || !level_db.is_finite() {
        return Err(domain("time trace needs a positive sweep, two points and one average"));
    }
    let level = 10f64.powf(level_db / 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = sweep_s / (n_points - 1) as f64;
    let time_s = (0..n_points).map(|k| k as f64 * dt).collect();
    let power_db = (0..n_points)
        .map(|_| 10.0 * (level * averaged_exponential(&mut rng, n_avg)).log10())
        .collect();
    Ok(TimeTrace { time_s, power_db, level_db })
}
