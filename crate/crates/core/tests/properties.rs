use num_complex::Complex64;
use proptest::prelude::*;
use splitbeam_core::detection::{split_statistics, DetectorGeometry};
use splitbeam_core::grid::Grid;
use splitbeam_core::metrology::{snr, sql_gaussian, sql_general};
use splitbeam_core::modes::{
    gram_schmidt_extend, half_overlaps, make_flipped_mode, make_gaussian_mode, make_hermite_gauss_mode, ModeBasis,
    ModeProfile,
};
use splitbeam_core::oracle::{fock_squeezed_variance, mc_variance};
use splitbeam_core::state::{GaussianState, SqueezerSpec};
use splitbeam_core::Channel;

fn extended_basis(w0: f64, n_points: usize) -> ModeBasis {
    let grid = Grid::symmetric(6.0 * w0, n_points).unwrap();
    let u0 = make_gaussian_mode(w0, grid).unwrap();
    let u1 = make_flipped_mode(&u0);
    let hg: Vec<ModeProfile> = (1..=6).map(|n| make_hermite_gauss_mode(n, w0, grid).unwrap()).collect();
    gram_schmidt_extend(&[u0, u1], &hg).unwrap()
}

fn bright_state(n_modes: usize, squeezed: &[(usize, f64, f64)]) -> GaussianState {
    let mut s = GaussianState::vacuum(n_modes).unwrap();
    s = s.set_coherent(0, Complex64::new(1.0, 0.0), 1e12).unwrap();
    for &(m, r, theta) in squeezed {
        s = s.set_squeezed_vacuum(m, SqueezerSpec::new(r, theta).unwrap()).unwrap();
    }
    s
}

#[test]
fn eight_mode_basis_obeys_identity() {
    let b = extended_basis(1.0, 4096);
    assert_eq!(b.len(), 8);
    let (u0, u1) = (&b.modes()[0], &b.modes()[1]);
    for (i, ui) in b.modes().iter().enumerate() {
        let a = half_overlaps(ui, u1).unwrap().i_sum;
        let c = half_overlaps(ui, u0).unwrap().i_diff;
        assert!((a - c).norm() < 1e-8, "mode {i}");
        if i >= 2 {
            assert!(c.norm() < 1e-8, "mode {i} couples: {c}");
        }
    }
}

#[test]
fn overlaps_converge_with_grid_refinement() {
    let coarse = extended_basis(1.0, 4096);
    let fine = extended_basis(1.0, 8192);
    let hg = |b: &ModeBasis, n| make_hermite_gauss_mode(n, 1.0, *b.grid().unwrap()).unwrap();
    for n in 1..=6 {
        for k in 0..2 {
            let a = half_overlaps(&hg(&coarse, n), &coarse.modes()[k]).unwrap();
            let b = half_overlaps(&hg(&fine, n), &fine.modes()[k]).unwrap();
            for (x, y) in [(a.i_left, b.i_left), (a.i_right, b.i_right), (a.i_diff, b.i_diff)] {
                assert!((x - y).norm() < 1e-7, "HG{n} vs u{k}: {x} {y}");
            }
        }
    }
}

#[test]
fn mc_error_scales_as_inverse_root_n() {
    let b = extended_basis(1.0, 1024);
    let b2 = ModeBasis::new(b.modes()[..2].to_vec()).unwrap();
    let s = bright_state(2, &[(1, 0.4, 0.0)]);
    let geo = DetectorGeometry::ideal(b2.grid().unwrap());
    // median over 20 seeds at each size; fit the log-log slope so that one
    // unlucky median cannot decide the outcome
    let median = |n: usize, base: u64| {
        let mut e: Vec<f64> = (0..20u64)
            .map(|k| mc_variance(&s, &b2, &geo, Channel::Diff, n, base + k).unwrap().rel_error)
            .collect();
        e.sort_by(f64::total_cmp);
        0.5 * (e[9] + e[10])
    };
    let pts: Vec<(f64, f64)> = (0..5)
        .map(|j| {
            let n = 10_000usize << (2 * j);
            ((n as f64).ln(), median(n, 1000 * j as u64).ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 5.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 5.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let per_quadrupling = 4f64.powf(-slope);
    assert!((1.5..2.7).contains(&per_quadrupling), "slope {slope}");
}

#[test]
fn fock_oracle_matches_at_cutoff_thirty() {
    for r in [0.1, 0.4029, 1.0] {
        let rep = fock_squeezed_variance(r, 30).unwrap();
        assert!((rep.empirical - (-2.0 * r).exp()).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identity_holds_for_any_beam(w0 in 1e-5f64..1e-2, half in 2usize..=3) {
        let b = extended_basis(w0, 1024 * half);
        let (u0, u1) = (&b.modes()[0], &b.modes()[1]);
        for ui in b.modes() {
            let d = half_overlaps(ui, u1).unwrap().i_sum - half_overlaps(ui, u0).unwrap().i_diff;
            prop_assert!(d.norm() < 1e-8);
        }
    }

    #[test]
    fn extra_modes_drop_out_of_the_difference(
        r in 0.0f64..1.2,
        theta in 0.0f64..std::f64::consts::PI,
        extra in prop::collection::vec((0.0f64..1.0, 0.0f64..6.3), 6),
    ) {
        let b8 = extended_basis(1.0, 2048);
        let b2 = ModeBasis::new(b8.modes()[..2].to_vec()).unwrap();
        let geo = DetectorGeometry::ideal(b2.grid().unwrap());
        let small = split_statistics(&bright_state(2, &[(1, r, theta)]), &b2, &geo).unwrap();
        let mut sq = vec![(1, r, theta)];
        sq.extend(extra.iter().enumerate().map(|(k, &(rr, th))| (k + 2, rr, th)));
        let big = split_statistics(&bright_state(8, &sq), &b8, &geo).unwrap();
        prop_assert!((small.var_diff - big.var_diff).abs() < 1e-9);
        prop_assert!((small.var_sum - big.var_sum).abs() < 1e-9);
    }

    #[test]
    fn interchanging_profiles_keeps_the_difference(r in 0.0f64..1.2, eta in 0.3f64..1.0) {
        let g = Grid::symmetric(6.0, 2048).unwrap();
        let u0 = make_gaussian_mode(1.0, g).unwrap();
        let u1 = make_flipped_mode(&u0);
        let geo = DetectorGeometry::ideal(&g);
        let s = bright_state(2, &[(1, r, 0.0)]).apply_loss(1, eta).unwrap();
        let a = split_statistics(&s, &ModeBasis::new(vec![u0.clone(), u1.clone()]).unwrap(), &geo).unwrap();
        let b = split_statistics(&s, &ModeBasis::new(vec![u1, u0]).unwrap(), &geo).unwrap();
        prop_assert!((a.var_diff - b.var_diff).abs() < 1e-9);
    }

    #[test]
    fn half_detector_is_mean_of_sum_and_difference(db in 0.0f64..10.0, eta in 0.1f64..1.0) {
        let g = Grid::symmetric(6.0, 2048).unwrap();
        let u0 = make_gaussian_mode(1.0, g).unwrap();
        let b = ModeBasis::new(vec![u0.clone(), make_flipped_mode(&u0)]).unwrap();
        let s = bright_state(2, &[]).set_squeezed_vacuum(1, SqueezerSpec::from_db(db, 0.0).unwrap()).unwrap();
        let s = s.apply_loss(1, eta).unwrap();
        let st = split_statistics(&s, &b, &DetectorGeometry::ideal(&g)).unwrap();
        prop_assert!((st.var_left - (1.0 + st.var_diff) / 2.0).abs() < 1e-9);
        prop_assert!((st.var_right - st.var_left).abs() < 1e-9);
        prop_assert!(st.var_left + st.var_right >= 0.5 * st.var_sum);
    }

    #[test]
    fn loss_composes(e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0, r in 0.0f64..2.0, th in 0.0f64..3.2) {
        let s = bright_state(2, &[(1, r, th)]);
        let a = s.apply_loss(1, e1).unwrap().apply_loss(1, e2).unwrap();
        let b = s.apply_loss(1, e1 * e2).unwrap();
        prop_assert!((a.cov() - b.cov()).amax() < 1e-12);
        prop_assert!((a.mean() - b.mean()).amax() < 1e-12);
    }

    #[test]
    fn random_circuits_stay_physical(
        ops in prop::collection::vec((0usize..3, 0usize..3, 0.0f64..=1.0, 0.0f64..6.3, 0.0f64..=1.0), 1..12),
        r in 0.0f64..1.5,
    ) {
        let mut s = bright_state(3, &[(1, r, 0.3), (2, 0.5 * r, 1.1)]);
        for (i, j, refl, phase, eta) in ops {
            if i != j {
                let n_before = s.mean_photons(i).unwrap() + s.mean_photons(j).unwrap();
                s = s.apply_beamsplitter(i, j, refl, phase).unwrap();
                let n_after = s.mean_photons(i).unwrap() + s.mean_photons(j).unwrap();
                prop_assert!((n_before - n_after).abs() < 1e-12 * n_before.max(1.0));
            }
            s = s.apply_loss(j, eta).unwrap();
            prop_assert!(s.is_physical());
        }
    }

    #[test]
    fn sampled_limit_matches_closed_form(log_n in 3.0f64..15.0, log_w in -6.0f64..-3.0) {
        let (n, w0) = (10f64.powf(log_n), 10f64.powf(log_w));
        let u = make_gaussian_mode(w0, Grid::for_beam(w0).unwrap()).unwrap();
        let a = sql_general(n, &u, 0.0).unwrap().d_sql;
        let c = sql_gaussian(n, w0).unwrap();
        prop_assert!(((a - c) / c).abs() < 1e-6);
    }

    #[test]
    fn snr_is_scale_free(k in 0.1f64..10.0, var in 0.2f64..2.0) {
        let w0 = 200e-6;
        let d = 2.9e-10;
        let n = 1e11;
        let u = make_gaussian_mode(w0, Grid::for_beam(w0).unwrap()).unwrap();
        let v = make_gaussian_mode(k * w0, Grid::for_beam(k * w0).unwrap()).unwrap();
        let a = snr(d, n, &u, var).unwrap().snr;
        let b = snr(k * d, n, &v, var).unwrap().snr;
        prop_assert!(((a - b) / a).abs() < 1e-9);
        let c = snr(d, n, &u, 1.0).unwrap().snr;
        prop_assert!((c / a - var).abs() < 1e-9 * var);
    }

    #[test]
    fn profile_csv_never_panics(text in "\\PC{0,400}") {
        let _ = ModeProfile::from_csv(&text);
    }

    #[test]
    fn profile_csv_rows_never_panic(rows in prop::collection::vec((-10.0f64..10.0, any::<f64>(), any::<f64>()), 0..40)) {
        let mut text = String::from("x,re,im\n");
        for (x, a, b) in rows {
            text.push_str(&format!("{x},{a},{b}\n"));
        }
        let _ = ModeProfile::from_csv(&text);
    }

    #[test]
    fn state_json_never_panics(text in "\\PC{0,400}") {
        let _ = GaussianState::from_json(&text);
    }

    #[test]
    fn state_json_shapes_never_panic(n in 0usize..4, mean in prop::collection::vec(any::<f64>(), 0..10), cov in prop::collection::vec(-3.0f64..3.0, 0..70), flux in any::<f64>()) {
        let text = format!(
            "{{\"n_modes\":{n},\"mean\":{:?},\"cov\":{:?},\"flux\":{}}}",
            mean.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect::<Vec<_>>(),
            cov,
            if flux.is_finite() { flux } else { 1.0 }
        );
        let _ = GaussianState::from_json(&text);
    }
}
