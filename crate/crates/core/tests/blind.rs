use fbmc_mimo::blind::{
    blind_update, combiner_outputs, godard_cost, godard_gradient, track, BlindConfig, BlindInit,
};
use fbmc_mimo::channel::PowerDelayProfile;
use fbmc_mimo::combining::{mf_combiner, ChannelEstimate};
use fbmc_mimo::error::Error;
use fbmc_mimo::experiments::{run_blind_tracking, Scenario};
use fbmc_mimo::filterbank::{FbmcConfig, Modem, PamOrder};
use fbmc_mimo::link::{holdout_packet, simulate_uplink};
use fbmc_mimo::metrics::slot_sinr_db;
use fbmc_mimo::rng::{self, Purpose};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex_vec(len: usize, var: f64, seed: u64, trial: u64) -> Vec<Complex64> {
    let mut rng = rng::stream(seed, trial, Purpose::Data);
    (0..len).map(|_| rng::complex_gaussian(&mut rng, var)).collect()
}

fn numeric_gradient(w: &[Complex64], block: &[Complex64], r: f64) -> Vec<Complex64> {
    let cost = |w: &[Complex64]| godard_cost(&combiner_outputs(w, block), r).unwrap();
    let h = 1e-6;
    (0..w.len())
        .map(|i| {
            let part = |d: Complex64| {
                let (mut plus, mut minus) = (w.to_vec(), w.to_vec());
                plus[i] += d;
                minus[i] -= d;
                (cost(&plus) - cost(&minus)) / (2.0 * h)
            };
            Complex64::new(part(Complex64::new(h, 0.0)), part(Complex64::new(0.0, h)))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_differences(
        seed in any::<u64>(),
        m in 1usize..12,
        count in 2usize..48,
        r in 0.5f64..2.5,
    ) {
        let w = complex_vec(m, 1.0 / m as f64, seed, 0);
        let block = complex_vec(m * count, 1.0, seed, 1);
        let analytic = godard_gradient(&w, &block, r).unwrap();
        let numeric = numeric_gradient(&w, &block, r);
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let scale: f64 = analytic.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt().max(1e-9);
        prop_assert!(diff / scale < 1e-5, "relative error {}", diff / scale);
    }

    #[test]
    fn update_commutes_with_sign_flip(seed in any::<u64>(), m in 1usize..8) {
        let w = complex_vec(m, 1.0, seed, 0);
        let block = complex_vec(m * 16, 1.0, seed, 1);
        let cfg = BlindConfig::for_alphabet(PamOrder::Pam2);
        let up = blind_update(&w, &block, &cfg, 1.0).unwrap();
        let neg: Vec<Complex64> = w.iter().map(|v| -v).collect();
        let up_neg = blind_update(&neg, &block, &cfg, 1.0).unwrap();
        for (a, b) in up.iter().zip(&up_neg) {
            prop_assert!((a + b).norm() < 1e-12);
        }
    }

    #[test]
    fn sinr_ignores_output_sign(z in proptest::collection::vec(-3.0f64..3.0, 8), seed in any::<u64>()) {
        let mut rng = rng::stream(seed, 0, Purpose::Data);
        let s: Vec<f64> = (0..8).map(|_| PamOrder::Pam2.draw(&mut rng)).collect();
        let flipped: Vec<f64> = z.iter().map(|v| -v).collect();
        prop_assert_eq!(slot_sinr_db(&z, &s).unwrap(), slot_sinr_db(&flipped, &s).unwrap());
    }
}

#[test]
fn converged_start_stays_near_clean_mf() {
    // one cell, perfect CSI: the matched filter is already the operating point
    let cfg = FbmcConfig::new(64, 4, 1024, PamOrder::Pam2).unwrap();
    let modem = Modem::designed(cfg).unwrap();
    let pdp = PowerDelayProfile::exponential(8, 4.0).unwrap();
    for t in 0..3 {
        let up = simulate_uplink(&modem, &pdp, 16, &[1.0], 0.0, 21, t).unwrap();
        let held = holdout_packet(&modem, &pdp, &up, 0.0, 21, t).unwrap();
        let est = ChannelEstimate::perfect(up.response.clone());
        let blind = BlindConfig::for_alphabet(PamOrder::Pam2);
        let trace = track(&up, &held, &est, 1, cfg.steady_state(), &blind).unwrap();
        let b = trace.baselines;
        assert_eq!(b.mf_noisy, b.mf_clean);
        for (i, v) in trace.sinr_db_per_iteration.iter().enumerate() {
            assert!((v - b.mf_clean).abs() <= 0.5, "trial {t} iteration {i}: {v} vs {}", b.mf_clean);
        }
    }
}

#[test]
fn negated_start_gives_the_same_trace() {
    let cfg = FbmcConfig::new(16, 4, 48, PamOrder::Pam2).unwrap();
    let modem = Modem::designed(cfg).unwrap();
    let pdp = PowerDelayProfile::exponential(4, 1.5).unwrap();
    let up = simulate_uplink(&modem, &pdp, 8, &[1.0, 0.5], 5.0, 4, 0).unwrap();
    let held = holdout_packet(&modem, &pdp, &up, 5.0, 4, 0).unwrap();
    let est = ChannelEstimate::perfect(up.response.select_users(&[0]));
    let start = mf_combiner(&est).unwrap();
    let run = |w: BlindInit| {
        let blind = BlindConfig {
            iterations: 20,
            init: w,
            ..BlindConfig::for_alphabet(PamOrder::Pam2)
        };
        track(&up, &held, &est, 1, cfg.steady_state(), &blind).unwrap()
    };
    let a = run(BlindInit::Custom(start.clone()));
    let b = run(BlindInit::Custom(start.negated()));
    for (x, y) in a.sinr_db_per_iteration.iter().zip(&b.sinr_db_per_iteration) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn holdout_must_share_channels() {
    let cfg = FbmcConfig::new(16, 4, 24, PamOrder::Pam2).unwrap();
    let modem = Modem::designed(cfg).unwrap();
    let pdp = PowerDelayProfile::flat();
    let up = simulate_uplink(&modem, &pdp, 2, &[1.0], 0.0, 1, 0).unwrap();
    let other = simulate_uplink(&modem, &pdp, 2, &[1.0], 0.0, 1, 1).unwrap();
    let est = ChannelEstimate::perfect(up.response.clone());
    let blind = BlindConfig::for_alphabet(PamOrder::Pam2);
    assert!(track(&up, &other, &est, 1, cfg.steady_state(), &blind).is_err());
}

#[test]
fn huge_step_is_reported_as_divergence() {
    let mut s = Scenario {
        trials: 2,
        num_antennas: 16,
        ..Scenario::blind_tracking_default()
    };
    let blind = s.blind.as_mut().unwrap();
    blind.step_size *= 1000.0;
    match run_blind_tracking(&s) {
        Err(Error::Divergence { growth, .. }) => assert!(growth > 1e6 || !growth.is_finite()),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn scaled_scenario_beats_clean_mf_with_rising_trend() {
    let r = run_blind_tracking(&Scenario::blind_tracking_default()).unwrap();
    assert!(r.final_sinr() > r.baselines.mf_clean);
    let smooth: Vec<f64> = r.median_trace.windows(3).map(|w| w.iter().sum::<f64>() / 3.0).collect();
    for (i, w) in smooth.windows(2).enumerate() {
        assert!(w[1] >= w[0], "smoothed trace drops at window {i}: {} -> {}", w[0], w[1]);
    }
}
