use mcvd_core::detection::{
    ber_given_threshold, map_detect, optimal_ber, optimal_threshold, Threshold,
};
use mcvd_core::montecarlo::{simulate, SimConfig};
use mcvd_core::optimizer::IntegerAllocation;
use mcvd_core::scenario::default_scenario;
use mcvd_core::statistics::GaussianMoments;
use mcvd_core::system::{siso_ber, ReceiverWeights};
use mcvd_oracles::dense_grid_min;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arb_moments() -> impl Strategy<Value = GaussianMoments> {
    (0.0f64..200.0, 0.01f64..400.0, 0.0f64..300.0, 0.01f64..600.0).prop_map(|(a0, b0, gap, b1)| {
        GaussianMoments {
            a0,
            b0,
            a1: a0 + gap,
            b1,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn threshold_beats_random_probes(m in arb_moments(), seed in any::<u64>()) {
        let (tau, best) = optimal_ber(&m).unwrap();
        let lo = m.a0 - 8.0 * m.b0.sqrt();
        let hi = m.a1 + 8.0 * m.b1.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let t = lo + (hi - lo) * rng.random::<f64>();
            let e = ber_given_threshold(&m, Threshold(t));
            prop_assert!(best <= e + 1e-12, "tau {} ber {} > {} at {}", tau.0, best, e, t);
        }
    }

    #[test]
    fn ber_is_a_probability(m in arb_moments(), t in -1e3f64..1e3) {
        let e = ber_given_threshold(&m, Threshold(t));
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&e));
    }
}

#[test]
fn near_deterministic_zero_hypothesis() {
    let m = GaussianMoments {
        a0: 0.0,
        b0: 1e-8,
        a1: 12.0,
        b1: 12.0,
    };
    let (tau, ber) = optimal_ber(&m).unwrap();
    assert!(tau.0 > 0.0 && tau.0 < 1.0, "{}", tau.0);
    let (_, grid) = dense_grid_min(
        |t| ber_given_threshold(&m, Threshold(t)),
        -1.0,
        13.0,
        1_400_001,
    );
    assert!(ber <= grid * (1.0 + 1e-6), "{ber} vs {grid}");
    // Limit: half the bit-1 mass below zero.
    let limit = 0.25 * mcvd_core::special::erfc(12.0 / (2.0f64 * 12.0).sqrt());
    assert!((ber - limit).abs() / limit < 1e-3);
}

#[test]
fn optimal_ber_never_rises_with_dosage() {
    let siso = default_scenario().siso().unwrap();
    let slot = siso.slot_config();
    let mut prev = 0.5;
    for g in [10.0, 100.0, 1000.0, 10000.0] {
        let b = siso_ber(&siso.topology, g, &slot).unwrap().aggregate;
        assert!(b <= prev, "g={g}: {b} > {prev}");
        prev = b;
    }
}

#[test]
fn detector_applied_to_simulated_counts() {
    // Default SISO link, g = 1000, t = 10 s: analytic BER far below 1e-6.
    let siso = default_scenario().siso().unwrap();
    let slot = siso.slot_config();
    let rep = siso_ber(&siso.topology, 1000.0, &slot).unwrap();
    let alloc = IntegerAllocation::new(1, 1, vec![1000]).unwrap();
    let cfg = SimConfig {
        warmup_slots: 10,
        ..SimConfig::new(1_000_000, 21)
    };
    let sim = simulate(
        &siso.topology,
        &alloc,
        &slot,
        &ReceiverWeights::uniform(1),
        cfg,
    )
    .unwrap();
    let p = rep.aggregate;
    let se = (p * (1.0 - p) / 1e6).sqrt();
    assert!(
        (sim.aggregate_ber - p).abs() <= 3.0 * se,
        "{} vs {p}",
        sim.aggregate_ber
    );
    assert_eq!(
        sim.receivers[0].threshold,
        optimal_threshold(&rep.moments[0]).unwrap()
    );
    assert_eq!(map_detect(rep.thresholds[0].0, rep.thresholds[0]), 1);
}
