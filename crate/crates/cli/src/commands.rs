use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splitbeam_core::detection::{detector_mask, split_statistics, Channel, DetectorGeometry};
use splitbeam_core::metrology::{sql_gaussian, sql_general};
use splitbeam_core::modes::{gram_schmidt_extend, half_overlaps, make_flipped_mode, make_gaussian_mode, make_hermite_gauss_mode, ModeBasis, ModeProfile};
use splitbeam_core::num_complex::Complex64;
use splitbeam_core::oracle::{fock_squeezed_variance, mc_variance};
use splitbeam_core::spectrum::{spectrum_at_level, time_trace, SpectrumSettings, SpectrumTrace};
use splitbeam_core::state::{GaussianState, SqueezerSpec};
use splitbeam_core::Error;

use crate::config::{ChainModel, ConfigError, Flux, Inject, ScenarioConfig};
use crate::output::{num, write_atomic};
use crate::plot::Plot;
use crate::scenario::{build, grid_for, is_unsolvable, snr_pair, visibility_for, BRIGHT, SQUEEZED};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("model error: {0}")]
    Model(#[from] Error),
    #[error("unsolvable operating point: {0}")]
    Unsolvable(String),
    #[error("validation failed: {}", .0.join(", "))]
    Validation(Vec<String>),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) | CliError::Model(_) | CliError::Io(_) => 2,
            CliError::Unsolvable(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

impl Report {
    fn write(&mut self, dir: &Path, name: &str, contents: &str) -> io::Result<()> {
        self.files.push(write_atomic(dir, name, contents)?);
        Ok(())
    }
}

pub const COMPARISON_HEADER: &str = "quantity,value,uncertainty,tag";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Predicted,
    PaperMeasured,
    Fitted,
}

impl Tag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tag::Predicted => "predicted",
            Tag::PaperMeasured => "paper-measured",
            Tag::Fitted => "fitted",
        }
    }
}

#[derive(Debug, Default)]
struct Table {
    rows: Vec<(String, f64, Option<f64>, Tag)>,
}

impl Table {
    fn push(&mut self, q: &str, v: f64, tag: Tag) {
        self.rows.push((q.into(), v, None, tag));
    }

    fn measured(&mut self, q: &str, m: Option<[f64; 2]>) {
        // an uncertainty of 0 means none was stated
        if let Some([v, u]) = m {
            self.rows.push((q.into(), v, (u > 0.0).then_some(u), Tag::PaperMeasured));
        }
    }

    fn to_csv(&self) -> String {
        let mut s = format!("{COMPARISON_HEADER}\n");
        for (q, v, u, t) in &self.rows {
            let _ = writeln!(s, "{q},{},{},{}", num(*v), u.map(num).unwrap_or_default(), t.as_str());
        }
        s
    }

    fn to_text(&self) -> String {
        let mut s = String::new();
        for (q, v, u, t) in &self.rows {
            let unc = u.map(|u| format!(" ± {u}")).unwrap_or_default();
            let _ = writeln!(s, "  {q:<32} {:>14}{unc:<8} [{}]", num(*v), t.as_str());
        }
        s
    }
}

fn derived_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 step, so neighbouring seeds give unrelated streams
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn cmd_noise(cfg: &ScenarioConfig, out: &Path) -> Result<Report, CliError> {
    let scenario = build(cfg)?;
    let st = scenario.stats()?;
    let mut report = Report::default();

    let mut t = Table::default();
    t.push("source_squeezing_db", cfg.source.squeezing_db, Tag::PaperMeasured);
    match cfg.chain.model {
        ChainModel::Fitted => t.push("chain_efficiency", cfg.chain.efficiency, Tag::Fitted),
        ChainModel::Components => t.push("transfer_efficiency", scenario.transfer_efficiency, Tag::Predicted),
    }
    t.push("db_sum", st.db_sum, Tag::Predicted);
    t.measured("db_sum", cfg.measured.db_sum);
    t.push("db_diff", st.db_diff, Tag::Predicted);
    t.measured("db_diff", cfg.measured.db_diff);
    t.push("db_half", st.db_half, Tag::Predicted);
    t.measured("db_half", cfg.measured.db_half);
    let [vlo, vhi] = cfg.chain.visibility_range;
    let at = |v: f64| -> Result<f64, CliError> {
        Ok(crate::scenario::build_with(cfg, cfg.source.squeezing_db, v)?.stats()?.db_diff)
    };
    t.push("db_diff_at_visibility_min", at(vlo)?, Tag::Predicted);
    t.push("db_diff_at_visibility_max", at(vhi)?, Tag::Predicted);
    if let Some([target, _]) = cfg.measured.db_diff {
        if let Some(v) = visibility_for(cfg, target)? {
            t.push("visibility_for_measured_db_diff", v, Tag::Fitted);
        }
    }

    report.write(out, "noise.csv", &st.to_csv())?;
    report.write(out, "noise_comparison.csv", &t.to_csv())?;

    let n = 501;
    let sweep = cfg.signal.sweep_time;
    let avg = cfg.signal.averages;
    let seed = cfg.run.seed;
    let sum = time_trace(st.db_sum, sweep, n, avg, derived_seed(seed, 1))?;
    let diff = time_trace(st.db_diff, sweep, n, avg, derived_seed(seed, 2))?;
    let half = time_trace(st.db_half, sweep, n, avg, derived_seed(seed, 3))?;
    let mut csv = String::from("time_s,sum_db,diff_db,half_db\n");
    for k in 0..n {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            num(sum.time_s[k]),
            num(sum.power_db[k]),
            num(diff.power_db[k]),
            num(half.power_db[k])
        );
    }
    report.write(out, "noise_traces.csv", &csv)?;
    let pts = |v: &[f64]| sum.time_s.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    let svg = Plot::new(
        &format!("Noise at {:.2} MHz relative to shot noise", cfg.signal.frequency / 1e6),
        "time (s)",
        "noise power (dB)",
    )
    .line("sum", pts(&sum.power_db))
    .line("difference", pts(&diff.power_db))
    .line("one pixel", pts(&half.power_db))
    .line("shot noise", vec![(0.0, 0.0), (sweep, 0.0)])
    .to_svg();
    report.write(out, "noise_traces.svg", &svg)?;

    report.summary = format!(
        "db_sum = {:.2} dB, db_diff = {:.2} dB, db_half = {:.2} dB\n{}",
        st.db_sum,
        st.db_diff,
        st.db_half,
        t.to_text()
    );
    Ok(report)
}

pub const SQL_HEADER: &str = "n,w0,d_sql_analytic,d_sql_numeric,rel_diff";

pub fn sql_rows(cfg: &ScenarioConfig) -> Result<Vec<[f64; 5]>, Error> {
    let mut rows = Vec::new();
    for &w0 in &cfg.sql.w0_values {
        let grid = splitbeam_core::grid::Grid::symmetric(cfg.grid.half_width * w0, cfg.grid.n_points)?;
        let u = make_gaussian_mode(w0, grid)?;
        for &n in &cfg.sql.n_values {
            let a = sql_gaussian(n, w0)?;
            let b = sql_general(n, &u, 0.0)?.d_sql;
            rows.push([n, w0, a, b, ((b - a) / a).abs()]);
        }
    }
    Ok(rows)
}

pub fn cmd_sql(cfg: &ScenarioConfig, out: &Path) -> Result<Report, CliError> {
    let rows = sql_rows(cfg)?;
    let mut csv = format!("{SQL_HEADER}\n");
    for r in &rows {
        let _ = writeln!(csv, "{}", r.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
    }
    let mut report = Report::default();
    report.write(out, "sql.csv", &csv)?;
    let mut plot = Plot::new("Standard quantum limit of displacement", "photons per window N", "d_SQL (m)")
        .log_x()
        .log_y();
    for &w0 in &cfg.sql.w0_values {
        let pts = rows.iter().filter(|r| r[1] == w0).map(|r| (r[0], r[3])).collect();
        plot = plot.line(&format!("w0 = {:.0} um", w0 * 1e6), pts);
    }
    report.write(out, "sql.svg", &plot.to_svg())?;
    let worst = rows.iter().map(|r| r[4]).fold(0.0, f64::max);
    report.summary = format!("{} rows, largest analytic/numeric relative difference {:.2e}\n", rows.len(), worst);
    Ok(report)
}

pub fn cmd_spectrum(cfg: &ScenarioConfig, out: &Path) -> Result<Report, CliError> {
    let pair = snr_pair(cfg).map_err(|e| {
        if is_unsolvable(&e) {
            CliError::Unsolvable(e.to_string())
        } else {
            CliError::Model(e)
        }
    })?;
    let settings = SpectrumSettings {
        center_hz: cfg.signal.frequency,
        span_hz: cfg.signal.span,
        rbw_hz: cfg.signal.rbw,
        n_points: cfg.signal.points,
        n_avg: cfg.signal.averages,
    };
    let seed = cfg.run.seed;
    let coherent = spectrum_at_level(pair.db_coherent, pair.snr_coherent, &settings, derived_seed(seed, 11))?;
    let squeezed = spectrum_at_level(pair.db_squeezed, pair.snr_squeezed, &settings, derived_seed(seed, 12))?;

    let mut t = Table::default();
    let flux_tag = if pair.point.solved { Tag::Fitted } else { Tag::Predicted };
    t.push("photons_per_window_reference", pair.point.n_reference, flux_tag);
    t.push("photons_per_window", pair.point.n_measurement, flux_tag);
    t.push("snr_coherent", pair.snr_coherent, Tag::Predicted);
    t.measured("snr_coherent", cfg.measured.snr_coherent);
    t.push("snr_squeezed", pair.snr_squeezed, Tag::Predicted);
    t.measured("snr_squeezed", cfg.measured.snr_squeezed);
    t.push("improvement", pair.improvement, Tag::Predicted);
    t.measured("improvement", cfg.measured.improvement);
    t.push("floor_coherent_db", pair.db_coherent, Tag::Predicted);
    t.push("floor_squeezed_db", pair.db_squeezed, Tag::Predicted);

    let mut report = Report::default();
    report.write(out, "spectrum_coherent.csv", &trace_csv(&coherent))?;
    report.write(out, "spectrum_squeezed.csv", &trace_csv(&squeezed))?;
    report.write(out, "spectrum_summary.csv", &t.to_csv())?;
    let mhz = |tr: &SpectrumTrace| tr.frequency_hz.iter().map(|f| f / 1e6).zip(tr.power_db.iter().copied()).collect();
    let svg = Plot::new(
        &format!("Difference-current spectrum, RBW {} kHz", cfg.signal.rbw / 1e3),
        "frequency (MHz)",
        "noise power (dB rel. shot noise)",
    )
    .line("coherent", mhz(&coherent))
    .line("squeezed", mhz(&squeezed))
    .to_svg();
    report.write(out, "spectrum.svg", &svg)?;
    report.summary = format!(
        "snr_coherent = {:.3}, snr_squeezed = {:.3}, improvement = {:.3}\n{}",
        pair.snr_coherent,
        pair.snr_squeezed,
        pair.improvement,
        t.to_text()
    );
    Ok(report)
}

fn trace_csv(t: &SpectrumTrace) -> String {
    let mut s = format!("{}\n", SpectrumTrace::CSV_HEADER);
    for (f, p) in t.frequency_hz.iter().zip(&t.power_db) {
        let _ = writeln!(s, "{},{}", num(*f), num(*p));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// True when `value` must stay at or above `limit`.
    pub at_least: bool,
}

impl Check {
    fn below(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, at_least: false }
    }

    fn above(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, at_least: true }
    }

    pub fn passed(&self) -> bool {
        if self.at_least {
            self.value >= self.limit
        } else {
            self.value <= self.limit
        }
    }
}

pub const VALIDATE_HEADER: &str = "check,value,relation,limit,verdict";

fn extended_basis(cfg: &ScenarioConfig) -> Result<ModeBasis, Error> {
    let grid = grid_for(cfg)?;
    let u0 = make_gaussian_mode(cfg.beam.w0, grid)?;
    let u1 = make_flipped_mode(&u0);
    let hg: Vec<ModeProfile> = (1..=6)
        .map(|n| make_hermite_gauss_mode(n, cfg.beam.w0, grid))
        .collect::<Result<_, _>>()?;
    gram_schmidt_extend(&[u0, u1], &hg)
}

fn bright(n_modes: usize) -> Result<GaussianState, Error> {
    GaussianState::vacuum(n_modes)?.set_coherent(BRIGHT, Complex64::new(1.0, 0.0), 1e12)
}

/// Runs every consistency check; the order and formatting are fixed.
pub fn validation_checks(cfg: &ScenarioConfig) -> Result<Vec<Check>, Error> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);

    let basis = extended_basis(cfg)?;
    let (u0, u1) = (&basis.modes()[0], &basis.modes()[1]);
    let mut identity: f64 = 0.0;
    let mut leak: f64 = 0.0;
    for (i, ui) in basis.modes().iter().enumerate() {
        let diff = half_overlaps(ui, u0)?.i_diff;
        identity = identity.max((half_overlaps(ui, u1)?.i_sum - diff).norm());
        if i >= 2 {
            leak = leak.max(diff.norm());
        }
    }
    checks.push(Check::below("eq5_identity", identity, 1e-8));
    checks.push(Check::below("mode_reduction_overlap", leak, 1e-8));

    // extra squeezed modes beyond the flipped mode leave the difference unchanged
    let geo = DetectorGeometry::ideal(basis.grid().expect("non-empty basis"));
    let two = ModeBasis::new(basis.modes()[..2].to_vec())?;
    let mut reduction: f64 = 0.0;
    let mut interchange: f64 = 0.0;
    for _ in 0..5 {
        let r = rng.random_range(0.0..1.2);
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        let sq = SqueezerSpec::new(r, theta)?;
        let small = bright(2)?.set_squeezed_vacuum(SQUEEZED, sq)?;
        let mut big = bright(basis.len())?.set_squeezed_vacuum(SQUEEZED, sq)?;
        for m in 2..basis.len() {
            big = big.set_squeezed_vacuum(m, SqueezerSpec::new(rng.random_range(0.0..1.0), rng.random_range(0.0..6.3))?)?;
        }
        let a = split_statistics(&small, &two, &geo)?.var_diff;
        let b = split_statistics(&big, &basis, &geo)?.var_diff;
        reduction = reduction.max((a - b).abs());
        let swapped = ModeBasis::new(vec![basis.modes()[1].clone(), basis.modes()[0].clone()])?;
        let c = split_statistics(&small, &swapped, &geo)?.var_diff;
        interchange = interchange.max((a - c).abs());
    }
    checks.push(Check::below("mode_reduction_variance", reduction, 1e-9));
    checks.push(Check::below("interchange_symmetry", interchange, 1e-9));

    let sql = sql_rows(cfg)?.iter().map(|r| r[4]).fold(0.0, f64::max);
    checks.push(Check::below("sql_closed_form", sql, 1e-6));

    let scenario = build(cfg)?;
    let samples = cfg.validate.mc_samples;
    for (name, ch) in [("mc_var_diff", Channel::Diff), ("mc_var_sum", Channel::Sum), ("mc_var_left", Channel::Left)] {
        let rep = mc_variance(&scenario.state, &scenario.basis, &scenario.geometry, ch, samples, derived_seed(cfg.run.seed, 100))?;
        checks.push(Check::below(name, rep.rel_error, 0.01));
    }
    let mut worst: f64 = 0.0;
    for k in 0..cfg.validate.random_scenarios {
        let mut c = cfg.clone();
        c.source.squeezing_db = rng.random_range(0.0..8.0);
        c.source.relative_phase = rng.random_range(0.0..std::f64::consts::PI);
        c.chain.efficiency = rng.random_range(0.3..1.0);
        c.chain.mode_match_visibility = rng.random_range(0.8..1.0);
        c.chain.quantum_efficiency = rng.random_range(0.6..1.0);
        c.chain.beamsplitter_r = rng.random_range(0.5..1.0);
        c.detector.dead_zone = rng.random_range(0.0..0.3) * c.beam.w0;
        c.chain.model = if rng.random_bool(0.5) { ChainModel::Components } else { ChainModel::Fitted };
        c.operating_point.flux_n = Flux::Photons(1e12);
        let s = build(&c)?;
        for ch in [Channel::Diff, Channel::Sum, Channel::Left] {
            let rep = mc_variance(&s.state, &s.basis, &s.geometry, ch, samples, derived_seed(cfg.run.seed, 200 + k as u64))?;
            worst = worst.max(rep.rel_error);
        }
    }
    checks.push(Check::below("mc_random_scenarios", worst, 0.01));

    let mut fock: f64 = 0.0;
    for r in [0.1, 0.4029, 1.0] {
        let rep = fock_squeezed_variance(r, cfg.validate.fock_cutoff)?;
        fock = fock.max((rep.empirical - rep.analytic).abs());
    }
    checks.push(Check::below("fock_oracle", fock, 1e-6));
    let guarded = matches!(fock_squeezed_variance(1.4, 12), Err(Error::CutoffInsufficient { .. }));
    checks.push(Check::above("fock_cutoff_guard", if guarded { 1.0 } else { 0.0 }, 1.0));

    let mut composition: f64 = 0.0;
    for _ in 0..100 {
        let s = bright(2)?.set_squeezed_vacuum(SQUEEZED, SqueezerSpec::new(rng.random_range(0.0..2.0), rng.random_range(0.0..6.3))?)?;
        let (e1, e2) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        let a = s.apply_loss(SQUEEZED, e1)?.apply_loss(SQUEEZED, e2)?;
        let b = s.apply_loss(SQUEEZED, e1 * e2)?;
        composition = composition.max((a.cov() - b.cov()).amax()).max((a.mean() - b.mean()).amax());
    }
    checks.push(Check::below("loss_composition", composition, 1e-12));

    let mut margin = f64::INFINITY;
    for _ in 0..100 {
        let n = rng.random_range(2..=4usize);
        let mut s = bright(n)?;
        for m in (0..n).filter(|&m| m != BRIGHT) {
            s = s.set_squeezed_vacuum(m, SqueezerSpec::new(rng.random_range(0.0..1.5), rng.random_range(0.0..6.3))?)?;
        }
        for _ in 0..rng.random_range(1..=10) {
            let i = rng.random_range(0..n);
            let j = (i + rng.random_range(1..n)) % n;
            s = s.apply_beamsplitter(i, j, rng.random_range(0.0..=1.0), rng.random_range(0.0..6.3))?;
            s = s.apply_loss(rng.random_range(0..n), rng.random_range(0.0..=1.0))?;
            margin = margin.min(s.physicality_margin()).min(-s.asymmetry());
        }
    }
    checks.push(Check::above("state_physicality", margin, -1e-9));

    let grid = grid_for(cfg)?;
    let real = DetectorGeometry::new(
        cfg.detector.split_position,
        cfg.detector.pixel_width,
        cfg.detector.dead_zone,
        cfg.chain.quantum_efficiency,
    )?;
    let mut violation: f64 = 0.0;
    for g in [DetectorGeometry::ideal(&grid), real] {
        let mut mask = detector_mask(&g, &grid)?;
        if cfg.validate.inject == Inject::NegativeMaskWeight {
            let k = grid.n_points() / 2 + 3;
            mask.right[k] = -mask.right[k].abs().max(grid.spacing());
        }
        violation = violation.max(mask.weight_violation());
    }
    checks.push(Check::below("mask_physicality", violation, 0.0));
    Ok(checks)
}

pub fn cmd_validate(cfg: &ScenarioConfig, out: &Path) -> Result<Report, CliError> {
    let checks = validation_checks(cfg)?;
    let mut csv = format!("{VALIDATE_HEADER}\n");
    let mut text = String::new();
    for c in &checks {
        let verdict = if c.passed() { "pass" } else { "FAIL" };
        let rel = if c.at_least { ">=" } else { "<=" };
        let _ = writeln!(csv, "{},{},{rel},{},{verdict}", c.name, num(c.value), num(c.limit));
        let _ = writeln!(text, "  {verdict:<4} {:<26} {:>14} {rel} {}", c.name, num(c.value), num(c.limit));
    }
    let mut report = Report::default();
    report.write(out, "validate.csv", &csv)?;
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.clone()).collect();
    if !failed.is_empty() {
        eprint!("{text}");
        return Err(CliError::Validation(failed));
    }
    report.summary = format!("{} checks passed\n{text}", checks.len());
    Ok(report)
}
