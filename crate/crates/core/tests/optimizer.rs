use mcvd_core::channel::MoleculeSpec;
use mcvd_core::optimizer::{
    brute_force_allocation, optimize_allocation, project_to_budget, quantize_allocation,
    AllocationMatrix, AllocationProblem, OptimizerConfig, QuantizeMode,
};
use mcvd_core::scenario::{default_scenario, um};
use mcvd_core::system::{Point3, Receiver, ReceiverWeights, SlotConfig, Topology};
use mcvd_core::Error;
use mcvd_oracles::project_by_bisection;
use proptest::prelude::*;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn projection_matches_bisection(v in prop::collection::vec(-50.0f64..50.0, 1..12), budget in 0.1f64..100.0) {
        let p = project_to_budget(&v, budget);
        let q = project_by_bisection(&v, budget);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-9 * budget.max(1.0));
        }
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - budget).abs() <= 1e-9 * budget);
        let again = project_to_budget(&p, budget);
        for (a, b) in p.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-12 * budget.max(1.0));
        }
    }

    #[test]
    fn projection_is_non_expansive(
        pair in (1usize..10).prop_flat_map(|n| (prop::collection::vec(-20.0f64..20.0, n), prop::collection::vec(-20.0f64..20.0, n))),
        budget in 0.1f64..50.0,
    ) {
        let (x, y) = pair;
        let px = project_to_budget(&x, budget);
        let py = project_to_budget(&y, budget);
        let d_in: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let d_out: Vec<f64> = px.iter().zip(&py).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&d_out) <= norm(&d_in) + 1e-9);
    }

    #[test]
    fn quantization_respects_budget(entries in prop::collection::vec(0.0f64..1.0, 6)) {
        let budget = 37.0;
        let rows: Vec<f64> = entries.chunks(3).flat_map(|c| {
            let s: f64 = c.iter().sum::<f64>().max(1e-9);
            c.iter().map(move |x| x / s * budget).collect::<Vec<_>>()
        }).collect();
        let Ok(g) = AllocationMatrix::with_budget(2, 3, rows, budget) else { return Ok(()) };
        let exact = quantize_allocation(&g, QuantizeMode::BudgetExact);
        prop_assert!(exact.row_sums().iter().all(|&s| s == 37));
        for (q, x) in exact.entries().iter().zip(g.entries()) {
            prop_assert!((*q as f64 - x).abs() < 1.0 + 1e-9);
        }
    }
}

fn ring_topology(n_tx: usize, radii_um: &[f64], d: f64) -> Topology {
    let receivers = radii_um
        .iter()
        .enumerate()
        .map(|(k, &dist)| {
            let angle = k as f64 * 2.0 * std::f64::consts::PI / radii_um.len() as f64;
            Receiver {
                center: Point3::new(um(dist) * angle.cos(), um(dist) * angle.sin(), 0.0),
                radius: um(7.0),
                molecule: MoleculeSpec::new(format!("type{k}"), d).unwrap(),
            }
        })
        .collect();
    Topology::new(vec![Point3::default(); n_tx], receivers).unwrap()
}

fn slot() -> SlotConfig {
    SlotConfig::new(1.0, 10).unwrap()
}

#[test]
fn symmetric_problem_settles_on_uniform() {
    let topo = ring_topology(2, &[32.0; 3], 1e-9);
    let w = ReceiverWeights::uniform(3);
    let budget = 60.0;
    let init = AllocationMatrix::with_budget(2, 3, vec![40.0, 15.0, 5.0, 10.0, 20.0, 30.0], budget)
        .unwrap();
    let res = optimize_allocation(
        &topo,
        &slot(),
        &w,
        budget,
        Some(&init),
        &OptimizerConfig::default(),
    )
    .unwrap();
    assert!(res.converged);
    // Only column sums matter here, so check those.
    for k in 0..3 {
        let col = res.real.get(0, k) + res.real.get(1, k);
        assert!((col - 40.0).abs() < 0.05, "column {k}: {col}");
    }
    assert!((res.ber_real - res.ber_uniform).abs() <= 1e-9 * res.ber_uniform);
}

#[test]
fn single_type_is_the_budget() {
    let topo = ring_topology(3, &[32.0], 1e-9);
    let res = optimize_allocation(
        &topo,
        &slot(),
        &ReceiverWeights::uniform(1),
        80.0,
        None,
        &OptimizerConfig::default(),
    )
    .unwrap();
    for s in 0..3 {
        assert_eq!(res.real.row(s), &[80.0]);
        assert_eq!(res.integer_exact.row(s), &[80]);
    }
}

#[test]
fn farther_receiver_gets_more() {
    let topo = ring_topology(1, &[32.0, 40.0], 1e-9);
    let w = ReceiverWeights::uniform(2);
    let budget = 200.0;
    let res = optimize_allocation(
        &topo,
        &slot(),
        &w,
        budget,
        None,
        &OptimizerConfig::default(),
    )
    .unwrap();
    assert!(
        res.real.get(0, 1) > res.real.get(0, 0),
        "{:?}",
        res.real.entries()
    );
    let grid = brute_force_allocation(&topo, &slot(), &w, budget, 1.0).unwrap();
    assert!((res.real.get(0, 1) - grid.allocation.get(0, 1)).abs() <= 1.0);
    assert!(res.ber_real <= grid.ber * (1.0 + 1e-9));
    assert!(res.ber_real < res.ber_uniform);
}

#[test]
fn matches_exhaustive_search_on_small_grid() {
    let s = default_scenario();
    let topo = s.topology.restrict(&[0, 1], &[0, 1]).unwrap();
    let w = ReceiverWeights::uniform(2);
    let slot = SlotConfig::new(1.0, 10).unwrap();
    let budget = 100.0;
    let cfg = OptimizerConfig {
        multistart: 4,
        ..OptimizerConfig::default()
    };
    let res = optimize_allocation(&topo, &slot, &w, budget, None, &cfg).unwrap();
    let grid = brute_force_allocation(&topo, &slot, &w, budget, 1.0).unwrap();
    assert_eq!(grid.points, 101 * 101);
    // The integer grid contains a point within one molecule of the optimum.
    assert!(
        res.ber_real <= grid.ber * (1.0 + 1e-9),
        "{} vs {}",
        res.ber_real,
        grid.ber
    );
    assert!(res.ber_int_exact >= grid.ber * (1.0 - 1e-12));
}

#[test]
fn refuses_huge_grids() {
    let s = default_scenario();
    let err =
        brute_force_allocation(&s.topology, &s.slot_config(), &s.weights, 1000.0, 1.0).unwrap_err();
    assert!(matches!(err, Error::GridTooLarge { .. }));
}

#[test]
fn descent_trace_is_monotone_and_beats_uniform() {
    let s = default_scenario();
    let slot = SlotConfig::new(2.0, 10).unwrap();
    let w = ReceiverWeights::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    let res = optimize_allocation(
        &s.topology,
        &slot,
        &w,
        40.0,
        None,
        &OptimizerConfig::default(),
    )
    .unwrap();
    assert!(res.trace.windows(2).all(|p| p[1] <= p[0]));
    assert_eq!(res.trace[0], res.ber_uniform);
    assert!(res.ber_real <= res.ber_uniform);
    for sum in res.real.row_sums() {
        assert!((sum - 40.0).abs() <= 1e-9 * 40.0);
    }
    assert!(res.real.entries().iter().all(|&x| x >= 0.0));
}

#[test]
fn finite_difference_gradient_is_stable() {
    let s = default_scenario();
    let slot = SlotConfig::new(2.0, 10).unwrap();
    let w = ReceiverWeights::uniform(4);
    let budget = 40.0;
    let p = AllocationProblem::new(&s.topology, &slot, &w, budget).unwrap();
    let entries: Vec<f64> = (0..16).map(|i| 6.0 + (i % 5) as f64).collect();
    let g1 = p.gradient(&entries, 1e-3 * budget).unwrap();
    let g2 = p.gradient(&entries, 1e-4 * budget).unwrap();
    let dot: f64 = g1.iter().zip(&g2).map(|(a, b)| a * b).sum();
    let cos = dot / (norm(&g1) * norm(&g2));
    assert!(cos > 0.99, "cosine {cos}");
}
