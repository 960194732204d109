use fbmc_mimo::channel::{draw_channels, frequency_response, noise_variance, FrequencyResponse, PowerDelayProfile};
use fbmc_mimo::combining::{
    combine, estimate_channels, mf_combiner, mmse_combiner, ChannelEstimate, ContaminationConfig, PilotPlan,
};
use fbmc_mimo::experiments::{run_self_equalization, PdpSpec, Scenario};
use fbmc_mimo::filterbank::{ComplexGrid, FbmcConfig, PamOrder};
use fbmc_mimo::rng::{self, Purpose};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn random_estimate(m: usize, k: usize, l: usize, seed: u64) -> ChannelEstimate {
    let mut rng = rng::stream(seed, 0, Purpose::Channel);
    let mut g = FrequencyResponse::zeros(m, k, l);
    for mi in 0..m {
        for ki in 0..k {
            for li in 0..l {
                g.set(mi, ki, li, rng::complex_gaussian(&mut rng, 1.0));
            }
        }
    }
    ChannelEstimate::perfect(g)
}

fn dot(w: &[Complex64], h: &[Complex64]) -> Complex64 {
    w.iter().zip(h).map(|(a, b)| a * b).sum()
}

#[test]
fn matched_filter_is_scaled_conjugate() {
    let est = random_estimate(6, 3, 8, 1);
    let w = mf_combiner(&est).unwrap();
    for k in 0..3 {
        for l in 0..8 {
            let h = est.gains.column(k, l);
            let energy: f64 = h.iter().map(|v| v.norm_sqr()).sum();
            for (wm, hm) in w.get(k, l).iter().zip(&h) {
                assert!((wm - hm.conj() / energy).norm() < 1e-12);
            }
            assert!((dot(w.get(k, l), &h) - 1.0).norm() < 1e-12);
        }
    }
}

#[test]
fn mmse_matches_normal_equations() {
    let (m, k, l) = (4, 2, 5);
    let est = random_estimate(m, k, l, 2);
    let sigma2 = 0.37;
    let w = mmse_combiner(&est, sigma2).unwrap();
    for li in 0..l {
        let h = DMatrix::from_fn(m, k, |mi, ki| est.gains.get(mi, ki, li));
        let hh = h.adjoint();
        let a = &hh * &h + DMatrix::identity(k, k) * Complex64::new(sigma2, 0.0);
        let want = a.try_inverse().unwrap() * hh;
        for ki in 0..k {
            for mi in 0..m {
                assert!((w.get(ki, li)[mi] - want[(ki, mi)]).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn mmse_tends_to_matched_filter_direction_at_high_noise() {
    let est = random_estimate(8, 3, 4, 3);
    let mf = mf_combiner(&est).unwrap();
    let cosine = |sigma2: f64| {
        let mmse = mmse_combiner(&est, sigma2).unwrap();
        let mut worst: f64 = 1.0;
        for k in 0..3 {
            for l in 0..4 {
                let a = mmse.get(k, l);
                let b = mf.get(k, l);
                let inner: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
                let na: f64 = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                let nb: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                worst = worst.min(inner.norm() / (na * nb));
            }
        }
        worst
    };
    let (c1, c2, c3) = (cosine(1.0), cosine(1e3), cosine(1e6));
    assert!(c2 >= c1 - 1e-12 && c3 >= c2 - 1e-12);
    assert!(1.0 - c3 < 1e-6, "{c3}");
}

#[test]
fn mmse_rejects_bad_noise() {
    let est = random_estimate(2, 1, 2, 4);
    for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(mmse_combiner(&est, bad).is_err());
    }
}

#[test]
fn least_squares_error_matches_noise() {
    let (m, l) = (16, 64);
    let pdp = PowerDelayProfile::exponential(4, 2.0).unwrap();
    let ch = draw_channels(&pdp, m, 1, &[1.0], 5).unwrap();
    let net = frequency_response(&ch, l).unwrap();
    let plan = PilotPlan::orthogonal(1, l, &mut rng::stream(5, 0, Purpose::Pilots));
    let snr = 10.0;
    let mut total = 0.0;
    let mut want = 0.0;
    let mut count = 0usize;
    for seed in 0..10u64 {
        let est = estimate_channels(&plan, &net, &ContaminationConfig::none(), snr, seed).unwrap();
        for mi in 0..m {
            for li in 0..l {
                total += (est.gains.get(mi, 0, li) - net.get(mi, 0, li)).norm_sqr();
                want += noise_variance(snr) / plan.pilot(0)[li].powi(2);
                count += 1;
            }
        }
    }
    assert!(count >= 10_000);
    let ratio = total / want;
    assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
}

#[test]
fn two_equal_antennas_give_three_db() {
    let base = Scenario {
        fbmc: FbmcConfig::new(16, 4, 64, PamOrder::Pam2).unwrap(),
        pdp: PdpSpec::Flat,
        num_users: 1,
        snr_in_db: 0.0,
        trials: 100,
        seed: 11,
        ..Scenario::self_equalization_default()
    };
    let avg = |m: usize| {
        let r = run_self_equalization(&Scenario {
            num_antennas: m,
            ..base.clone()
        })
        .unwrap();
        r.mf.mean_db.iter().sum::<f64>() / r.mf.mean_db.len() as f64
    };
    let gain = avg(2) - avg(1);
    assert!((gain - 3.0103).abs() <= 0.2, "{gain}");
}

#[test]
fn single_antenna_passes_through() {
    let mut g = FrequencyResponse::zeros(1, 1, 3);
    for l in 0..3 {
        g.set(0, 0, l, Complex64::new(1.0, 0.0));
    }
    let w = mf_combiner(&ChannelEstimate::perfect(g)).unwrap();
    let mut y = ComplexGrid::zeros(3, 4);
    for l in 0..3 {
        for n in 0..4 {
            y.set(l, n, Complex64::new((l * 4 + n) as f64 - 5.0, 0.25));
        }
    }
    let out = combine(&[y.clone()], &w).unwrap();
    assert_eq!(out.len(), 1);
    for l in 0..3 {
        for n in 0..4 {
            assert_eq!(out[0].get(l, n), y.get(l, n).re);
        }
    }
}

#[test]
fn combine_checks_shapes() {
    let w = mf_combiner(&random_estimate(2, 1, 3, 6)).unwrap();
    assert!(combine(&[ComplexGrid::zeros(3, 2)], &w).is_err());
    assert!(combine(&[ComplexGrid::zeros(3, 2), ComplexGrid::zeros(4, 2)], &w).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mf_intended_gain_is_unity(seed in any::<u64>(), m in 1usize..9, k in 1usize..4) {
        let est = random_estimate(m, k, 3, seed);
        let w = mf_combiner(&est).unwrap();
        for ki in 0..k {
            for l in 0..3 {
                prop_assert!((dot(w.get(ki, l), &est.gains.column(ki, l)) - 1.0).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn mmse_solves_its_system(seed in any::<u64>(), m in 1usize..7, k in 1usize..4, sigma2 in 1e-3f64..10.0) {
        let est = random_estimate(m, k, 2, seed);
        let w = mmse_combiner(&est, sigma2).unwrap();
        for l in 0..2 {
            let h = DMatrix::from_fn(m, k, |mi, ki| est.gains.get(mi, ki, l));
            let wm = DMatrix::from_fn(k, m, |ki, mi| w.get(ki, l)[mi]);
            // W (H H^H + σ² I) = H^H
            let lhs = &wm * (&h * h.adjoint() + DMatrix::identity(m, m) * Complex64::new(sigma2, 0.0));
            let err = (lhs - h.adjoint()).norm();
            prop_assert!(err < 1e-9, "{}", err);
        }
    }

    #[test]
    fn combining_is_linear(seed in any::<u64>(), a in -3.0f64..3.0) {
        let est = random_estimate(3, 2, 2, seed);
        let w = mmse_combiner(&est, 0.5).unwrap();
        let mut rng = rng::stream(seed, 1, Purpose::Data);
        let grids: Vec<ComplexGrid> = (0..3)
            .map(|_| {
                let mut g = ComplexGrid::zeros(2, 5);
                for l in 0..2 {
                    for n in 0..5 {
                        g.set(l, n, rng::complex_gaussian(&mut rng, 1.0));
                    }
                }
                g
            })
            .collect();
        let scaled: Vec<ComplexGrid> = grids.iter().map(|g| { let mut g = g.clone(); g.scale(a); g }).collect();
        let base = combine(&grids, &w).unwrap();
        let out = combine(&scaled, &w).unwrap();
        for (b, o) in base.iter().zip(&out) {
            for (x, y) in b.values().iter().zip(o.values()) {
                prop_assert!((a * x - y).abs() < 1e-12);
            }
        }
    }
}
