//! Seeded arrival simulator: the empirical oracle for the analytic BER.
//!
//! Every slot, each receiver's bit is drawn with `P(1) = prior1`; when it
//! is 1, every transmitter releases its allocation of that receiver's
//! molecule type. Each molecule gets an exact first-passage time and is
//! credited to the slot it lands in, up to `horizon` slots later (by
//! default the ISI depth `J` of the analytic model; later arrivals are
//! dropped). Counts are compared against the analytic optimal threshold.
//!
//! Work is split into fixed-size streams. Stream `i` owns the ChaCha8
//! stream `i` of the master seed and simulates its own warm-up, so results
//! do not depend on how streams are scheduled. All tallies are integers and
//! merge exactly.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{FirstPassageSampler, LinkGeometry, MoleculeSpec, SlotEdges};
use crate::detection::{map_detect, optimal_threshold, Threshold};
use crate::error::positive;
use crate::optimizer::IntegerAllocation;
use crate::system::{LinkTable, ReceiverWeights, SlotConfig, Topology};
use crate::{Error, Result};

/// Scored slots per stream.
pub const STREAM_SLOTS: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    /// Scored slots in total.
    pub n_slots: u64,
    pub seed: u64,
    /// Unscored slots each stream runs first to fill the ISI pipeline.
    pub warmup_slots: u64,
    pub record_moments: bool,
    /// Arrival horizon in slots after the release slot; `None` uses `J`.
    pub horizon: Option<usize>,
}

impl SimConfig {
    pub fn new(n_slots: u64, seed: u64) -> Self {
        Self {
            n_slots,
            seed,
            warmup_slots: 0,
            record_moments: true,
            horizon: None,
        }
    }

    fn check(&self, isi_depth: usize) -> Result<usize> {
        let horizon = self.horizon.unwrap_or(isi_depth);
        if self.warmup_slots < horizon as u64 {
            return Err(Error::Invalid {
                path: "warmup_slots".into(),
                message: alloc::format!(
                    "{} is shorter than the arrival horizon {horizon}",
                    self.warmup_slots
                ),
            });
        }
        if self.n_slots <= self.warmup_slots {
            return Err(Error::Invalid {
                path: "n_slots".into(),
                message: alloc::format!(
                    "{} must exceed warmup_slots {}",
                    self.n_slots,
                    self.warmup_slots
                ),
            });
        }
        Ok(horizon)
    }
}

/// Integer tallies for one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReceiverTally {
    pub errors: u64,
    pub slots: u64,
    /// Indexed by the transmitted bit.
    pub bit_slots: [u64; 2],
    pub count_sum: [u64; 2],
    pub count_sq_sum: [u128; 2],
}

impl ReceiverTally {
    pub fn merge(&mut self, other: &ReceiverTally) {
        self.errors += other.errors;
        self.slots += other.slots;
        for b in 0..2 {
            self.bit_slots[b] += other.bit_slots[b];
            self.count_sum[b] += other.count_sum[b];
            self.count_sq_sum[b] += other.count_sq_sum[b];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tally {
    pub receivers: Vec<ReceiverTally>,
}

impl Tally {
    pub fn merge(&mut self, other: &Tally) {
        if self.receivers.len() < other.receivers.len() {
            self.receivers
                .resize(other.receivers.len(), ReceiverTally::default());
        }
        for (a, b) in self.receivers.iter_mut().zip(&other.receivers) {
            a.merge(b);
        }
    }
}

/// Sample moments of the slot count given the transmitted bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountMoments {
    pub mean0: f64,
    pub var0: f64,
    pub n0: u64,
    pub mean1: f64,
    pub var1: f64,
    pub n1: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverStats {
    pub ber: f64,
    /// `sqrt(ber (1 - ber) / slots)`.
    pub std_error: f64,
    pub errors: u64,
    pub slots: u64,
    pub threshold: Threshold,
    pub moments: Option<CountMoments>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub receivers: Vec<ReceiverStats>,
    /// Weighted BER over receivers and its standard error.
    pub aggregate_ber: f64,
    pub aggregate_std_error: f64,
    /// Scored slots.
    pub slots: u64,
}

struct Source {
    sampler: FirstPassageSampler,
    edges: SlotEdges,
    molecules: u64,
}

struct ReceiverPlan {
    sources: Vec<Source>,
    threshold: Threshold,
}

/// A fully prepared simulation; run streams in any order and [`finish`](Self::finish).
pub struct Simulation {
    receivers: Vec<ReceiverPlan>,
    weights: Vec<f64>,
    horizon: usize,
    prior1: f64,
    cfg: SimConfig,
}

impl Simulation {
    /// Simulation of `topo` under integer allocation `alloc`, detected at
    /// the analytic optimal thresholds.
    pub fn new(
        topo: &Topology,
        alloc: &IntegerAllocation,
        slot: &SlotConfig,
        weights: &ReceiverWeights,
        cfg: SimConfig,
    ) -> Result<Self> {
        topo.check_distinct_types()?;
        if alloc.n_tx() != topo.n_tx() || alloc.n_types() != topo.n_rx() {
            return Err(Error::Shape {
                what: "allocation size",
                expected: topo.n_tx() * topo.n_rx(),
                found: alloc.n_tx() * alloc.n_types(),
            });
        }
        if weights.len() != topo.n_rx() {
            return Err(Error::Shape {
                what: "receiver weights",
                expected: topo.n_rx(),
                found: weights.len(),
            });
        }
        let horizon = cfg.check(slot.isi_depth)?;
        let table = LinkTable::new(topo, slot)?;
        let mut receivers = Vec::with_capacity(topo.n_rx());
        let mut column = vec![0.0; topo.n_tx()];
        for (k, rx) in topo.receivers().iter().enumerate() {
            for (s, g) in column.iter_mut().enumerate() {
                *g = alloc.get(s, k) as f64;
            }
            let threshold = optimal_threshold(&table.receiver_moments(k, &column)?)?;
            let sources = (0..topo.n_tx())
                .map(|s| {
                    source(
                        &rx.molecule,
                        &topo.geometry(s, k),
                        alloc.get(s, k),
                        slot.duration,
                        horizon,
                    )
                })
                .collect();
            receivers.push(ReceiverPlan { sources, threshold });
        }
        Ok(Self {
            receivers,
            weights: weights.as_slice().to_vec(),
            horizon,
            prior1: slot.prior1,
            cfg,
        })
    }

    pub fn thresholds(&self) -> Vec<Threshold> {
        self.receivers.iter().map(|r| r.threshold).collect()
    }

    pub fn stream_count(&self) -> u64 {
        self.cfg.n_slots.div_ceil(STREAM_SLOTS)
    }

    pub fn run_stream(&self, index: u64) -> Tally {
        let scored = STREAM_SLOTS.min(self.cfg.n_slots - index * STREAM_SLOTS);
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(index);
        let width = self.horizon + 1;
        let mut rings: Vec<Vec<u64>> = vec![vec![0; width]; self.receivers.len()];
        let mut tally = Tally {
            receivers: vec![ReceiverTally::default(); self.receivers.len()],
        };
        let warmup = self.cfg.warmup_slots;
        for m in 0..warmup + scored {
            let pos = (m % width as u64) as usize;
            for (k, plan) in self.receivers.iter().enumerate() {
                let ring = &mut rings[k];
                let bit = rng.random::<f64>() < self.prior1;
                if bit {
                    for src in &plan.sources {
                        for _ in 0..src.molecules {
                            if let Some(bin) = src.sampler.sample_slot(&mut rng, &src.edges) {
                                ring[(pos + bin) % width] += 1;
                            }
                        }
                    }
                }
                let count = core::mem::take(&mut ring[pos]);
                if m < warmup {
                    continue;
                }
                let t = &mut tally.receivers[k];
                let b = usize::from(bit);
                t.slots += 1;
                t.errors += u64::from(map_detect(count as f64, plan.threshold) != b as u8);
                t.bit_slots[b] += 1;
                t.count_sum[b] += count;
                t.count_sq_sum[b] += u128::from(count) * u128::from(count);
            }
        }
        tally
    }

    /// Runs every stream in order on the calling thread.
    pub fn run(&self) -> SimResult {
        let mut total = Tally::default();
        for i in 0..self.stream_count() {
            total.merge(&self.run_stream(i));
        }
        self.finish(&total)
    }

    pub fn finish(&self, total: &Tally) -> SimResult {
        let receivers: Vec<ReceiverStats> = self
            .receivers
            .iter()
            .enumerate()
            .map(|(k, plan)| {
                let t = total.receivers.get(k).copied().unwrap_or_default();
                let ber = if t.slots > 0 {
                    t.errors as f64 / t.slots as f64
                } else {
                    0.0
                };
                ReceiverStats {
                    ber,
                    std_error: if t.slots > 0 {
                        libm::sqrt(ber * (1.0 - ber) / t.slots as f64)
                    } else {
                        0.0
                    },
                    errors: t.errors,
                    slots: t.slots,
                    threshold: plan.threshold,
                    moments: self.cfg.record_moments.then(|| count_moments(&t)),
                }
            })
            .collect();
        let aggregate_ber = receivers
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * r.ber)
            .sum();
        let aggregate_var: f64 = receivers
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * w * r.std_error * r.std_error)
            .sum();
        SimResult {
            receivers,
            aggregate_ber,
            aggregate_std_error: libm::sqrt(aggregate_var),
            slots: self.cfg.n_slots,
        }
    }
}

fn source(
    mol: &MoleculeSpec,
    geo: &LinkGeometry,
    molecules: u64,
    slot: f64,
    horizon: usize,
) -> Source {
    let sampler = FirstPassageSampler::new(mol, geo);
    Source {
        edges: sampler.slot_edges(slot, horizon + 1),
        sampler,
        molecules,
    }
}

fn count_moments(t: &ReceiverTally) -> CountMoments {
    let stats = |b: usize| {
        let n = t.bit_slots[b];
        if n == 0 {
            return (0.0, 0.0);
        }
        let mean = t.count_sum[b] as f64 / n as f64;
        if n < 2 {
            return (mean, 0.0);
        }
        // Exact integer numerator: n Σx² - (Σx)².
        let num =
            (n as u128) * t.count_sq_sum[b] - (t.count_sum[b] as u128) * (t.count_sum[b] as u128);
        (mean, num as f64 / (n as f64 * (n - 1) as f64))
    };
    let (mean0, var0) = stats(0);
    let (mean1, var1) = stats(1);
    CountMoments {
        mean0,
        var0,
        n0: t.bit_slots[0],
        mean1,
        var1,
        n1: t.bit_slots[1],
    }
}

/// Convenience wrapper: build and run a [`Simulation`] sequentially.
pub fn simulate(
    topo: &Topology,
    alloc: &IntegerAllocation,
    slot: &SlotConfig,
    weights: &ReceiverWeights,
    cfg: SimConfig,
) -> Result<SimResult> {
    Ok(Simulation::new(topo, alloc, slot, weights, cfg)?.run())
}

/// One transmitter, one receiver: conditional sample moments of the count.
pub fn empirical_moments(
    cfg: SimConfig,
    mol: &MoleculeSpec,
    geo: &LinkGeometry,
    molecules: u64,
    slot: &SlotConfig,
) -> Result<CountMoments> {
    let topo = Topology::new(
        alloc::vec![crate::system::Point3::default()],
        alloc::vec![crate::system::Receiver {
            center: crate::system::Point3::new(geo.distance() + geo.rx_radius(), 0.0, 0.0),
            radius: geo.rx_radius(),
            molecule: mol.clone(),
        }],
    )?;
    let alloc = IntegerAllocation::new(1, 1, alloc::vec![molecules])?;
    let cfg = SimConfig {
        record_moments: true,
        ..cfg
    };
    let result = simulate(&topo, &alloc, slot, &ReceiverWeights::uniform(1), cfg)?;
    Ok(result.receivers[0].moments.expect("moments recorded"))
}

/// Fraction of `emissions * molecules` released molecules landing in each
/// of the slots `0..=horizon` after release.
pub fn arrival_fractions<R: Rng + ?Sized>(
    mol: &MoleculeSpec,
    geo: &LinkGeometry,
    slot: f64,
    horizon: usize,
    molecules: u64,
    emissions: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let slot = positive("slot duration", slot)?;
    let sampler = FirstPassageSampler::new(mol, geo);
    let edges = sampler.slot_edges(slot, horizon + 1);
    let mut hist = vec![0u64; horizon + 1];
    for _ in 0..emissions * molecules {
        if let Some(bin) = sampler.sample_slot(rng, &edges) {
            hist[bin] += 1;
        }
    }
    let total = (emissions * molecules).max(1) as f64;
    Ok(hist.into_iter().map(|h| h as f64 / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::um;

    fn link() -> (MoleculeSpec, LinkGeometry) {
        (
            MoleculeSpec::new("Glycine", 10.40e-10).unwrap(),
            LinkGeometry::new(um(25.0), um(7.0)).unwrap(),
        )
    }

    #[test]
    fn config_invariants() {
        let (m, g) = link();
        let slot = SlotConfig::new(1.0, 3).unwrap();
        let short_warmup = SimConfig {
            warmup_slots: 2,
            ..SimConfig::new(1000, 1)
        };
        assert!(empirical_moments(short_warmup, &m, &g, 10, &slot).is_err());
        let too_few = SimConfig {
            warmup_slots: 5,
            ..SimConfig::new(5, 1)
        };
        assert!(empirical_moments(too_few, &m, &g, 10, &slot).is_err());
    }

    #[test]
    fn single_molecule_mean_matches_hit_probability() {
        let (m, g) = link();
        let slot = SlotConfig::new(1.0, 0).unwrap();
        let cfg = SimConfig {
            warmup_slots: 1,
            ..SimConfig::new(400_000, 11)
        };
        let mom = empirical_moments(cfg, &m, &g, 1, &slot).unwrap();
        let p = crate::channel::hit_probability(&m, &g, 1.0).unwrap();
        let se = libm::sqrt(p * (1.0 - p) / mom.n1 as f64);
        assert!((mom.mean1 - p).abs() < 4.0 * se, "{} vs {p}", mom.mean1);
        assert_eq!(mom.mean0, 0.0);
    }

    #[test]
    fn streams_partition_the_slots() {
        let (m, g) = link();
        let slot = SlotConfig::new(1.0, 2).unwrap();
        let cfg = SimConfig {
            warmup_slots: 2,
            ..SimConfig::new(3 * STREAM_SLOTS + 17, 5)
        };
        let topo = Topology::new(
            alloc::vec![crate::system::Point3::default()],
            alloc::vec![crate::system::Receiver {
                center: crate::system::Point3::new(um(32.0), 0.0, 0.0),
                radius: um(7.0),
                molecule: m,
            }],
        )
        .unwrap();
        let _ = g;
        let alloc = IntegerAllocation::new(1, 1, alloc::vec![5]).unwrap();
        let sim = Simulation::new(&topo, &alloc, &slot, &ReceiverWeights::uniform(1), cfg).unwrap();
        assert_eq!(sim.stream_count(), 4);
        let mut reversed = Tally::default();
        for i in (0..4).rev() {
            reversed.merge(&sim.run_stream(i));
        }
        let forward = sim.run();
        assert_eq!(forward, sim.finish(&reversed));
        assert_eq!(forward.receivers[0].slots, 3 * STREAM_SLOTS + 17);
    }
}
