use std::path::PathBuf;

use splitbeam::config::apply_override;
use splitbeam::ScenarioConfig;
use splitbeam_core::{GaussianState, ModeProfile};

fn corpus(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus {target}");
    files.into_iter().map(|p| (p.clone(), std::fs::read_to_string(&p).unwrap())).collect()
}

#[test]
fn scenario_seeds_parse() {
    for (p, text) in corpus("scenario_config") {
        let cfg = ScenarioConfig::parse(&text, "seed", &[]).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert!(cfg.validate().is_ok());
    }
}

#[test]
fn override_seeds_apply() {
    for (p, text) in corpus("set_override") {
        let mut table = toml::Table::new();
        for line in text.lines() {
            apply_override(&mut table, line).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
    }
}

#[test]
fn state_seeds_round_trip() {
    for (p, text) in corpus("gaussian_state_json") {
        let s = GaussianState::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(GaussianState::from_json(&s.to_json()).unwrap().n_modes(), s.n_modes());
    }
}

#[test]
fn profile_seeds_parse() {
    for (p, text) in corpus("profile_csv") {
        ModeProfile::from_csv(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}
