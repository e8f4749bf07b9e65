use cvloop_core::fock::{apply_loss, rotate, squeeze, wigner_origin_parity, FockState};
use cvloop_core::gaussian::{program_channel, GaussianChannel};
use cvloop_core::optimize::{nelder_mead, NelderMeadOptions};
use cvloop_core::scalability::GaussianMixture;
use cvloop_core::scheduler::{compile_schedule, ROUND_TRIP_NS};
use cvloop_core::sources::make_cat;
use cvloop_core::tomography::{ellipse_from_variances, mle_reconstruct, sample_quadratures, MleOptions};
use cvloop_core::{CatSpec, GateProgram, LossScenario};
use num_complex::Complex64;
use proptest::prelude::*;

const CUTOFF: usize = 8;

fn mixed_state() -> impl Strategy<Value = FockState> {
    (prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2 * CUTOFF), 0.0..1.0f64).prop_filter_map("zero ket", |(amps, w)| {
        let ket = |part: &[(f64, f64)]| -> Option<FockState> {
            let v: Vec<Complex64> = part.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
            let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-3 {
                return None;
            }
            let v: Vec<Complex64> = v.iter().map(|c| c / norm).collect();
            FockState::from_ket(vec![CUTOFF], &v).ok()
        };
        let (a, b) = (ket(&amps[..CUTOFF])?, ket(&amps[CUTOFF..])?);
        let m = a.matrix() * Complex64::new(w, 0.0) + b.matrix() * Complex64::new(1.0 - w, 0.0);
        FockState::from_matrix(vec![CUTOFF], m).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn loss_is_trace_preserving_and_positive(state in mixed_state(), eta in 0.0..=1.0f64) {
        let out = apply_loss(&state, 0, eta).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
        prop_assert!(out.min_eigenvalue() > -1e-12);
        prop_assert!(out.hermiticity_error() < 1e-12);
    }

    #[test]
    fn rotation_keeps_parity(state in mixed_state(), theta in -3.2..3.2f64) {
        let a = wigner_origin_parity(&state).unwrap();
        let b = wigner_origin_parity(&rotate(&state, theta).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn ellipse_fit_is_exact_on_model_variances(
        vx in 0.05..3.0f64, vp in 0.05..3.0f64, c in -0.9..0.9f64, n in 3usize..13
    ) {
        let cxp = c * (vx * vp).sqrt();
        let points: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let phi = core::f64::consts::PI * k as f64 / n as f64;
                let (s, co) = phi.sin_cos();
                (phi, vx * co * co + vp * s * s + 2.0 * cxp * s * co)
            })
            .collect();
        let fit = ellipse_from_variances(&points).unwrap();
        prop_assert!((fit.covariance[0][0] - vx).abs() < 1e-9);
        prop_assert!((fit.covariance[1][1] - vp).abs() < 1e-9);
        prop_assert!((fit.covariance[0][1] - cxp).abs() < 1e-9);
        prop_assert!(fit.residual < 1e-9);
        prop_assert!(fit.angle_degrees > -90.0 && fit.angle_degrees <= 90.0);
    }

    #[test]
    fn nelder_mead_stays_in_the_box(
        cx in -5.0..5.0f64, cy in -5.0..5.0f64, x0 in -1.0..1.0f64, y0 in -1.0..1.0f64
    ) {
        let mut inside = true;
        let m = nelder_mead(
            |x: &[f64]| {
                inside &= x.iter().all(|v| (-1.0..=1.0).contains(v));
                (x[0] - cx).powi(2) + 3.0 * (x[1] - cy).powi(2)
            },
            &[x0, y0], &[0.4, 0.4], &[-1.0, -1.0], &[1.0, 1.0], &NelderMeadOptions::default(),
        );
        prop_assert!(inside);
        prop_assert!((m.x[0] - cx.clamp(-1.0, 1.0)).abs() < 1e-5);
        prop_assert!((m.x[1] - cy.clamp(-1.0, 1.0)).abs() < 1e-5);
    }

    #[test]
    fn schedules_have_one_bin_per_step_plus_two(rs in prop::collection::vec(0.02..0.6f64, 1..10)) {
        let s = LossScenario::current();
        let program = GateProgram::from_squeezing(&rs, &s).unwrap();
        let sched = compile_schedule(&program, ROUND_TRIP_NS).unwrap();
        prop_assert_eq!(sched.entries.len(), rs.len() + 2);
        let vbs = sched.vbs_sequence();
        prop_assert_eq!(vbs[0], 0.0);
        prop_assert_eq!(vbs[rs.len() + 1], 0.0);
        prop_assert!(vbs[1..=rs.len()].iter().all(|&r| r > 0.0 && r < 1.0));
    }

    #[test]
    fn mixture_tracks_the_fock_cat_through_loss(r0 in 0.1..0.7f64, tap in 0.01..0.2f64, eta in 0.3..1.0f64) {
        let spec = CatSpec { source_squeezing_r: r0, tap_reflectivity: tap, preparation_loss: 0.0, ..CatSpec::default() };
        let (cat, _) = make_cat(&spec, 40).unwrap();
        let mix = GaussianMixture::from_cat(&spec).unwrap().through(&GaussianChannel::loss(eta));
        let want = wigner_origin_parity(&apply_loss(&cat, 0, eta).unwrap()).unwrap();
        prop_assert!((mix.wigner_origin() - want).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ideal_squeezing_keeps_the_origin_value(r in -0.9..0.9f64) {
        let (cat, _) = make_cat(&CatSpec::default(), 20).unwrap();
        let big = cat.with_cutoff(120).unwrap();
        let a = wigner_origin_parity(&cat).unwrap();
        let b = wigner_origin_parity(&squeeze(&big, r).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
    }

    #[test]
    fn gaussian_program_channel_is_physical(mags in prop::collection::vec(0.01..0.5f64, 1..6), negative: bool) {
        let rs: Vec<f64> = mags.iter().map(|&r| if negative { -r } else { r }).collect();
        let ch = program_channel(&GateProgram::from_squeezing(&rs, &LossScenario::current()).unwrap()).unwrap();
        // N + (i/2)(Ω − A Ω Aᵀ) ⪰ 0 reduces to det N ≥ (1 − det A)²/4 for one mode.
        let det_a = ch.a.determinant();
        prop_assert!(ch.noise.determinant() >= (1.0 - det_a).powi(2) / 4.0 - 1e-12);
        prop_assert!(ch.noise[(0, 0)] > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn likelihood_never_decreases(seed in 0u64..1000, r in 0.0..0.5f64) {
        let state = squeeze(&FockState::vacuum(1, 30).unwrap(), r).unwrap();
        let phases: Vec<f64> = (0..6).map(|k| core::f64::consts::PI * k as f64 / 6.0).collect();
        let data = sample_quadratures(&state, &phases, 300, seed).unwrap();
        let res = mle_reconstruct(&data, &MleOptions { cutoff: 10, max_iters: 200, ..MleOptions::default() }).unwrap();
        prop_assert!(res.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }
}
