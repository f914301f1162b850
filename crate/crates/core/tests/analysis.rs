use balloc_core::analysis::{
    beta_schedule, empirical_tail, left_layer_fractions, nu_fractions, two_phase_experiment,
    two_phase_trials, GapSample, DEFAULT_C_PRIME,
};
use balloc_core::process::run;
use balloc_core::{ProcessSpec, RngContract};
use proptest::prelude::*;
use rayon::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn red_balls_cover_every_level(seed in any::<u64>(), n in 4usize..80, t in 0u64..20, l in 1u64..10, d in 1u32..4) {
        let spec = ProcessSpec::greedy(d as f64).unwrap();
        let r = two_phase_experiment(&spec, n, t, l, &mut RngContract::new(seed).stream(0)).unwrap();
        if r.applicable {
            prop_assert!(r.violations.is_empty(), "{:?}", r);
        }
        prop_assert!(r.nu.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(r.mu.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(r.nu.len(), r.mu.len());
    }

    #[test]
    fn left_process_also_satisfies_the_identity(seed in any::<u64>(), t in 0u64..10, l in 1u64..6) {
        let spec = ProcessSpec::left(4).unwrap();
        let r = two_phase_experiment(&spec, 32, t, l, &mut RngContract::new(seed).stream(0)).unwrap();
        prop_assert!(!r.violated());
    }

    #[test]
    fn nu_and_gap_agree(seed in any::<u64>(), n in 1usize..60, m in 0u64..3000, d in 1u32..4) {
        let spec = ProcessSpec::greedy(d as f64).unwrap();
        let state = run(&spec, n, m, &mut RngContract::new(seed).stream(0)).unwrap();
        let nu = nu_fractions(&state);
        let gap = state.gap();
        for i in 0..nu.len() + 2 {
            let positive = nu.get(i).copied().unwrap_or(0.0) > 0.0;
            prop_assert_eq!(gap >= i as f64, positive, "i = {}", i);
        }
        prop_assert!(nu.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn left_layers_are_monotone(seed in any::<u64>(), groups in 2usize..5, per in 1usize..20, m in 0u64..2000) {
        let spec = ProcessSpec::left(groups).unwrap();
        let state = run(&spec, groups * per, m, &mut RngContract::new(seed).stream(0)).unwrap();
        let layers = left_layer_fractions(&state, &spec).unwrap();
        for k in 0..groups {
            prop_assert!(layers.levels.windows(2).all(|w| w[0][k] >= w[1][k]));
            prop_assert_eq!(layers.levels[0][k], 1.0 / groups as f64);
        }
    }

    #[test]
    fn two_choice_closed_form(l in 1.0f64..30.0, c in 0.01f64..10.0) {
        let b = beta_schedule(l, 1, c, 1 << 24, 2.0).unwrap();
        let ln2l = (2.0 * l).ln();
        for k in 0..b.unsnapped_len() {
            let p = 2f64.powi(k as i32);
            let expected = ln2l * (-3.0 * p + (p - 1.0));
            let got = b.unfloored[k].ln();
            if b.unfloored[k] > 0.0 {
                prop_assert!(((got - expected) / expected).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn induction_identity_at_sixty_four_bins() {
    let spec = ProcessSpec::greedy(2.0).unwrap();
    let s = two_phase_trials(&spec, 64, 16, 8, 1000, RngContract::new(201)).unwrap();
    assert_eq!(s.violating, 0);
    assert!(s.applicable > 900, "{}", s.applicable);
}

#[test]
fn log_gap_tail_at_1024_bins() {
    let spec = ProcessSpec::greedy(2.0).unwrap();
    let contract = RngContract::new(202);
    let samples: Vec<GapSample> = (0..1000u64)
        .into_par_iter()
        .map(|trial| GapSample {
            trial,
            checkpoint: 64 * 1024,
            gap: run(&spec, 1024, 64 * 1024, &mut contract.stream(trial))
                .unwrap()
                .gap(),
            gamma_per_n: None,
        })
        .collect();
    let tail = empirical_tail(&samples, 10.0).unwrap();
    assert!(tail.upper < 0.01, "{tail:?}");
    assert_eq!(empirical_tail(&samples, 0.0).unwrap().estimate, 1.0);
}

#[test]
fn schedule_with_default_constant_floors_out() {
    let b = beta_schedule(3.0, 2, DEFAULT_C_PRIME, 1 << 20, 2.0).unwrap();
    assert_eq!(b.beta[0], 1.0 / (8.0 * 27.0));
    assert!(b.reaches_floor());
    assert_eq!(b.i_high - b.i_low, 4);
}
