//! Topology-level BER for SISO, SIMO, MISO and MIMO-MTMR layouts.
//!
//! Every receiver `k` listens for one molecule type `θ_k`. Column `k` of the
//! allocation matrix is the number of `θ_k` molecules each transmitter
//! releases when bit `k` is 1; all transmitters send the same bits in the
//! same slot. Links with different types never mix, so each receiver is
//! detected independently and the aggregate BER is the weighted mean.

use alloc::vec::Vec;

use crate::channel::{slot_probabilities, LinkGeometry, MoleculeSpec};
use crate::detection::{optimal_ber, Threshold};
use crate::error::{nonnegative, positive, probability};
use crate::optimizer::AllocationMatrix;
use crate::statistics::{cooperative_moments, GaussianMoments, LinkProbabilities};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        libm::sqrt(dx * dx + dy * dy + dz * dz)
    }
}

/// A fully absorbing sphere sensitive to one molecule type.
#[derive(Debug, Clone, PartialEq)]
pub struct Receiver {
    pub center: Point3,
    pub radius: f64,
    pub molecule: MoleculeSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    transmitters: Vec<Point3>,
    receivers: Vec<Receiver>,
}

impl Topology {
    /// Checks radii and that no transmitter sits on or inside a receiver.
    pub fn new(transmitters: Vec<Point3>, receivers: Vec<Receiver>) -> Result<Self> {
        if transmitters.is_empty() {
            return Err(Error::EmptyInput("transmitter list"));
        }
        if receivers.is_empty() {
            return Err(Error::EmptyInput("receiver list"));
        }
        for (k, rx) in receivers.iter().enumerate() {
            if !(rx.radius > 0.0 && rx.radius.is_finite()) {
                return Err(Error::Invalid {
                    path: alloc::format!("receivers[{k}].radius"),
                    message: alloc::format!("must be positive, got {}", rx.radius),
                });
            }
            for (s, tx) in transmitters.iter().enumerate() {
                let gap = tx.distance(&rx.center) - rx.radius;
                if !(gap > 0.0) {
                    return Err(Error::Invalid {
                        path: alloc::format!("transmitters[{s}]"),
                        message: alloc::format!(
                            "lies inside receiver {k} (surface distance {gap} m)"
                        ),
                    });
                }
            }
        }
        Ok(Self {
            transmitters,
            receivers,
        })
    }

    pub fn transmitters(&self) -> &[Point3] {
        &self.transmitters
    }

    pub fn receivers(&self) -> &[Receiver] {
        &self.receivers
    }

    pub fn n_tx(&self) -> usize {
        self.transmitters.len()
    }

    pub fn n_rx(&self) -> usize {
        self.receivers.len()
    }

    /// Geometry of the link from transmitter `s` to receiver `k`.
    pub fn geometry(&self, s: usize, k: usize) -> LinkGeometry {
        let rx = &self.receivers[k];
        let d = self.transmitters[s].distance(&rx.center) - rx.radius;
        LinkGeometry::new(d, rx.radius).expect("validated at construction")
    }

    /// Sub-topology keeping the listed transmitters and receivers, in order.
    pub fn restrict(&self, tx: &[usize], rx: &[usize]) -> Result<Topology> {
        let pick_tx = tx
            .iter()
            .map(|&s| {
                self.transmitters.get(s).copied().ok_or(index_error(
                    "transmitter index (count)",
                    s,
                    self.n_tx(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let pick_rx = rx
            .iter()
            .map(|&k| {
                self.receivers.get(k).cloned().ok_or(index_error(
                    "receiver index (count)",
                    k,
                    self.n_rx(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Topology::new(pick_tx, pick_rx)
    }

    /// Receivers must listen for pairwise distinct molecule types.
    pub fn check_distinct_types(&self) -> Result<()> {
        for (k, rx) in self.receivers.iter().enumerate() {
            if self.receivers[..k]
                .iter()
                .any(|o| o.molecule.name() == rx.molecule.name())
            {
                return Err(Error::DuplicateMoleculeType(rx.molecule.name().into()));
            }
        }
        Ok(())
    }
}

fn index_error(what: &'static str, index: usize, len: usize) -> Error {
    Error::Shape {
        what,
        expected: len,
        found: index,
    }
}

/// Prior weights of the per-receiver bit streams.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverWeights(Vec<f64>);

impl ReceiverWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyInput("receiver weights"));
        }
        for &w in &weights {
            nonnegative("receiver weight", w)?;
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain {
                what: "receiver weight sum",
                value: total,
            });
        }
        Ok(Self(weights))
    }

    pub fn uniform(r: usize) -> Self {
        Self(alloc::vec![1.0 / r as f64; r])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Slot duration, ISI depth `J` and the prior of a 1 in earlier slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotConfig {
    pub duration: f64,
    pub isi_depth: usize,
    pub prior1: f64,
}

impl SlotConfig {
    pub fn new(duration: f64, isi_depth: usize) -> Result<Self> {
        Self::with_prior(duration, isi_depth, 0.5)
    }

    pub fn with_prior(duration: f64, isi_depth: usize, prior1: f64) -> Result<Self> {
        Ok(Self {
            duration: positive("slot duration", duration)?,
            isi_depth,
            prior1: probability("bit prior", prior1)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    Siso,
    Simo,
    Miso,
    MimoMtmr,
}

impl Layout {
    pub fn label(self) -> &'static str {
        match self {
            Layout::Siso => "siso",
            Layout::Simo => "simo",
            Layout::Miso => "miso",
            Layout::MimoMtmr => "mimo-mtmr",
        }
    }

    /// Checks the topology shape this layout needs.
    pub fn check(self, topo: &Topology) -> Result<()> {
        let (n, r) = (topo.n_tx(), topo.n_rx());
        let (ok, expected) = match self {
            Layout::Siso => (n == 1 && r == 1, "1 transmitter x 1 receiver"),
            Layout::Simo => (n == 1, "1 transmitter"),
            Layout::Miso => (r == 1, "1 receiver"),
            Layout::MimoMtmr => (true, "any"),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Arity {
                operation: self.label(),
                expected,
                transmitters: n,
                receivers: r,
            })
        }
    }
}

/// Per-link arrival probabilities for a topology at one slot setting.
#[derive(Debug, Clone)]
pub struct LinkTable {
    n_tx: usize,
    n_rx: usize,
    prior1: f64,
    /// Row-major by (tx, rx).
    links: Vec<LinkProbabilities>,
}

impl LinkTable {
    pub fn new(topo: &Topology, slot: &SlotConfig) -> Result<Self> {
        let mut links = Vec::with_capacity(topo.n_tx() * topo.n_rx());
        for s in 0..topo.n_tx() {
            for (k, rx) in topo.receivers().iter().enumerate() {
                links.push(slot_probabilities(
                    &rx.molecule,
                    &topo.geometry(s, k),
                    slot.duration,
                    slot.isi_depth,
                )?);
            }
        }
        Ok(Self {
            n_tx: topo.n_tx(),
            n_rx: topo.n_rx(),
            prior1: slot.prior1,
            links,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn link(&self, s: usize, k: usize) -> &LinkProbabilities {
        &self.links[s * self.n_rx + k]
    }

    /// Moments at receiver `k` when transmitter `s` releases `column[s]`.
    pub fn receiver_moments(&self, k: usize, column: &[f64]) -> Result<GaussianMoments> {
        if column.len() != self.n_tx {
            return Err(Error::Shape {
                what: "allocation column",
                expected: self.n_tx,
                found: column.len(),
            });
        }
        cooperative_moments(
            column
                .iter()
                .enumerate()
                .map(|(s, &g)| (g, self.link(s, k))),
            self.prior1,
        )
    }

    /// BER at receiver `k` under its optimal threshold.
    pub fn receiver_ber(
        &self,
        k: usize,
        column: &[f64],
    ) -> Result<(Threshold, f64, GaussianMoments)> {
        let m = self.receiver_moments(k, column)?;
        let (tau, ber) = optimal_ber(&m)?;
        Ok((tau, ber, m))
    }

    /// Weighted BER over all receivers for allocation `alloc`.
    pub fn aggregate_ber(
        &self,
        alloc: &AllocationMatrix,
        weights: &ReceiverWeights,
    ) -> Result<f64> {
        self.check_shapes(alloc, weights)?;
        let mut column = alloc::vec![0.0; self.n_tx];
        let mut total = 0.0;
        for (k, &w) in weights.as_slice().iter().enumerate() {
            alloc.column_into(k, &mut column);
            total += w * self.receiver_ber(k, &column)?.1;
        }
        Ok(total)
    }

    fn check_shapes(&self, alloc: &AllocationMatrix, weights: &ReceiverWeights) -> Result<()> {
        if alloc.n_tx() != self.n_tx {
            return Err(Error::Shape {
                what: "allocation rows",
                expected: self.n_tx,
                found: alloc.n_tx(),
            });
        }
        if alloc.n_types() != self.n_rx {
            return Err(Error::Shape {
                what: "allocation columns",
                expected: self.n_rx,
                found: alloc.n_types(),
            });
        }
        if weights.len() != self.n_rx {
            return Err(Error::Shape {
                what: "receiver weights",
                expected: self.n_rx,
                found: weights.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerReport {
    pub layout: Layout,
    pub per_receiver: Vec<f64>,
    pub thresholds: Vec<Threshold>,
    pub moments: Vec<GaussianMoments>,
    pub aggregate: f64,
    /// Bits per second, `r / t`.
    pub bit_rate: f64,
    pub slot: f64,
    pub allocation: AllocationMatrix,
}

fn assemble(
    layout: Layout,
    topo: &Topology,
    alloc: &AllocationMatrix,
    slot: &SlotConfig,
    weights: &ReceiverWeights,
) -> Result<BerReport> {
    layout.check(topo)?;
    topo.check_distinct_types()?;
    let table = LinkTable::new(topo, slot)?;
    table.check_shapes(alloc, weights)?;
    let r = topo.n_rx();
    let mut per_receiver = Vec::with_capacity(r);
    let mut thresholds = Vec::with_capacity(r);
    let mut moments = Vec::with_capacity(r);
    let mut column = alloc::vec![0.0; topo.n_tx()];
    for k in 0..r {
        alloc.column_into(k, &mut column);
        let (tau, ber, m) = table.receiver_ber(k, &column)?;
        per_receiver.push(ber);
        thresholds.push(tau);
        moments.push(m);
    }
    let aggregate = per_receiver
        .iter()
        .zip(weights.as_slice())
        .map(|(b, w)| b * w)
        .sum();
    Ok(BerReport {
        layout,
        per_receiver,
        thresholds,
        moments,
        aggregate,
        bit_rate: r as f64 / slot.duration,
        slot: slot.duration,
        allocation: alloc.clone(),
    })
}

/// One transmitter, one receiver, `g` molecules per 1-bit.
pub fn siso_ber(topo: &Topology, g: f64, slot: &SlotConfig) -> Result<BerReport> {
    Layout::Siso.check(topo)?;
    let alloc = AllocationMatrix::from_rows(1, 1, alloc::vec![g])?;
    assemble(
        Layout::Siso,
        topo,
        &alloc,
        slot,
        &ReceiverWeights::uniform(1),
    )
}

/// One transmitter releasing `row[k]` molecules of type `θ_k` for bit `k`.
pub fn simo_ber(
    topo: &Topology,
    row: &[f64],
    slot: &SlotConfig,
    weights: &ReceiverWeights,
) -> Result<BerReport> {
    Layout::Simo.check(topo)?;
    let alloc = AllocationMatrix::from_rows(1, topo.n_rx(), row.to_vec())?;
    assemble(Layout::Simo, topo, &alloc, slot, weights)
}

/// Several transmitters cooperating on one bit stream to one receiver.
pub fn miso_ber(topo: &Topology, per_tx: &[f64], slot: &SlotConfig) -> Result<BerReport> {
    Layout::Miso.check(topo)?;
    let alloc = AllocationMatrix::from_rows(topo.n_tx(), 1, per_tx.to_vec())?;
    assemble(
        Layout::Miso,
        topo,
        &alloc,
        slot,
        &ReceiverWeights::uniform(1),
    )
}

pub fn mimo_mtmr_ber(
    topo: &Topology,
    alloc: &AllocationMatrix,
    slot: &SlotConfig,
    weights: &ReceiverWeights,
) -> Result<BerReport> {
    assemble(Layout::MimoMtmr, topo, alloc, slot, weights)
}

/// Dispatches on `layout` with a full allocation matrix.
pub fn layout_ber(
    layout: Layout,
    topo: &Topology,
    alloc: &AllocationMatrix,
    slot: &SlotConfig,
    weights: &ReceiverWeights,
) -> Result<BerReport> {
    assemble(layout, topo, alloc, slot, weights)
}
