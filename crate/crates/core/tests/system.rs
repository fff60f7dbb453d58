use mcvd_core::channel::MoleculeSpec;
use mcvd_core::optimizer::AllocationMatrix;
use mcvd_core::scenario::{default_scenario, um};
use mcvd_core::system::{
    mimo_mtmr_ber, miso_ber, simo_ber, siso_ber, Point3, Receiver, ReceiverWeights, SlotConfig,
    Topology,
};

fn short_slot() -> SlotConfig {
    // Short slots keep the BER in a range where differences are visible.
    SlotConfig::new(1.0, 10).unwrap()
}

#[test]
fn degeneracy_chain_is_exact() {
    let s = default_scenario().siso().unwrap();
    let slot = short_slot();
    let g = 120.0;
    let siso = siso_ber(&s.topology, g, &slot).unwrap().aggregate;
    let simo = simo_ber(&s.topology, &[g], &slot, &ReceiverWeights::uniform(1))
        .unwrap()
        .aggregate;
    let miso = miso_ber(&s.topology, &[g], &slot).unwrap().aggregate;
    let alloc = AllocationMatrix::from_rows(1, 1, vec![g]).unwrap();
    let mimo = mimo_mtmr_ber(&s.topology, &alloc, &slot, &ReceiverWeights::uniform(1))
        .unwrap()
        .aggregate;
    assert!(siso > 1e-6);
    assert_eq!(siso, simo);
    assert_eq!(siso, miso);
    assert_eq!(siso, mimo);
}

#[test]
fn one_transmitter_mimo_is_simo() {
    let s = default_scenario().simo().unwrap();
    let slot = short_slot();
    let row = [100.0, 250.0, 400.0, 250.0];
    let simo = simo_ber(&s.topology, &row, &slot, &s.weights).unwrap();
    let alloc = AllocationMatrix::from_rows(1, 4, row.to_vec()).unwrap();
    let mimo = mimo_mtmr_ber(&s.topology, &alloc, &slot, &s.weights).unwrap();
    assert_eq!(simo.per_receiver, mimo.per_receiver);
    assert_eq!(simo.aggregate, mimo.aggregate);
    assert_eq!(simo.bit_rate, 4.0);
}

#[test]
fn symmetric_simo_equals_single_link() {
    // Receivers on a circle around one transmitter, same D for every type.
    let receivers: Vec<Receiver> = (0..3)
        .map(|k| {
            let angle = k as f64 * 2.0 * std::f64::consts::PI / 3.0;
            Receiver {
                center: Point3::new(um(32.0) * angle.cos(), um(32.0) * angle.sin(), 0.0),
                radius: um(7.0),
                molecule: MoleculeSpec::new(format!("m{k}"), 1e-9).unwrap(),
            }
        })
        .collect();
    let topo = Topology::new(vec![Point3::default()], receivers).unwrap();
    let slot = short_slot();
    let rep = simo_ber(&topo, &[60.0; 3], &slot, &ReceiverWeights::uniform(3)).unwrap();
    let single = siso_ber(&topo.restrict(&[0], &[1]).unwrap(), 60.0, &slot)
        .unwrap()
        .aggregate;
    assert!((rep.aggregate - single).abs() < 1e-14 * single.max(1e-300));
}

#[test]
fn colocated_transmitters_merge() {
    let base = default_scenario().siso().unwrap();
    let rx = base.topology.receivers().to_vec();
    let three = Topology::new(vec![Point3::default(); 3], rx.clone()).unwrap();
    let one = Topology::new(vec![Point3::default()], rx).unwrap();
    let slot = short_slot();
    let a = miso_ber(&three, &[40.0; 3], &slot).unwrap();
    let b = siso_ber(&one, 120.0, &slot).unwrap();
    assert!((a.moments[0].b0 - b.moments[0].b0).abs() < 1e-9);
    assert!((a.aggregate - b.aggregate).abs() < 1e-12);
}

#[test]
fn receiver_permutation_invariance() {
    let s = default_scenario();
    let slot = short_slot();
    let weights = ReceiverWeights::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let entries: Vec<f64> = (0..16).map(|i| 40.0 + 7.0 * i as f64).collect();
    let alloc = AllocationMatrix::from_rows(4, 4, entries.clone()).unwrap();
    let base = mimo_mtmr_ber(&s.topology, &alloc, &slot, &weights)
        .unwrap()
        .aggregate;

    let perm = [2, 0, 3, 1];
    let topo = s.topology.restrict(&[0, 1, 2, 3], &perm).unwrap();
    let pw = ReceiverWeights::new(perm.iter().map(|&k| weights.as_slice()[k]).collect()).unwrap();
    let mut pe = vec![0.0; 16];
    for tx in 0..4 {
        for (new_k, &old_k) in perm.iter().enumerate() {
            pe[tx * 4 + new_k] = entries[tx * 4 + old_k];
        }
    }
    let palloc = AllocationMatrix::from_rows(4, 4, pe).unwrap();
    let permuted = mimo_mtmr_ber(&topo, &palloc, &slot, &pw).unwrap().aggregate;
    assert!(
        (base - permuted).abs() <= 1e-15 * base.max(1e-300) + 1e-300,
        "{base} vs {permuted}"
    );
}

#[test]
fn idle_transmitter_changes_nothing() {
    let s = default_scenario();
    let slot = short_slot();
    let three = s.topology.restrict(&[0, 1, 2], &[0, 1, 2, 3]).unwrap();
    let a3 = AllocationMatrix::uniform(3, 4, 400.0).unwrap();
    let mut e4 = a3.entries().to_vec();
    e4.extend([0.0; 4]);
    let a4 = AllocationMatrix::from_rows(4, 4, e4).unwrap();
    let r3 = mimo_mtmr_ber(&three, &a3, &slot, &s.weights).unwrap();
    let r4 = mimo_mtmr_ber(&s.topology, &a4, &slot, &s.weights).unwrap();
    for (x, y) in r3.per_receiver.iter().zip(&r4.per_receiver) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn longer_slots_do_not_hurt() {
    let s = default_scenario();
    let siso = s.siso().unwrap();
    let mut t = 0.25;
    let mut prev = siso_ber(&siso.topology, 300.0, &SlotConfig::new(t, 10).unwrap())
        .unwrap()
        .aggregate;
    while t < 16.0 {
        t *= 2.0;
        let b = siso_ber(&siso.topology, 300.0, &SlotConfig::new(t, 10).unwrap())
            .unwrap()
            .aggregate;
        assert!(b <= prev, "t={t}: {b} > {prev}");
        prev = b;
    }
}

#[test]
fn aggregates_stay_in_range() {
    let s = default_scenario();
    for t in [0.1, 0.5, 1.0, 5.0, 10.0] {
        let slot = SlotConfig::new(t, 10).unwrap();
        for budget in [4.0, 50.0, 1000.0] {
            let alloc = AllocationMatrix::uniform(4, 4, budget).unwrap();
            let rep = mimo_mtmr_ber(&s.topology, &alloc, &slot, &s.weights).unwrap();
            assert!(
                (0.0..=0.5).contains(&rep.aggregate),
                "t={t} budget={budget}: {}",
                rep.aggregate
            );
            let sum: f64 = rep.per_receiver.iter().map(|b| b * 0.25).sum();
            assert!((sum - rep.aggregate).abs() < 1e-15);
        }
    }
}
