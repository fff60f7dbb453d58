//! Scenario description and the reference four-amino-acid configuration.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::channel::MoleculeSpec;
use crate::system::{Point3, Receiver, ReceiverWeights, SlotConfig, Topology};
use crate::{Error, Result};

/// Micrometers to meters. Division keeps decimal inputs correctly rounded.
#[inline]
pub fn um(x: f64) -> f64 {
    x / 1e6
}

/// Meters to micrometers.
#[inline]
pub fn to_um(x: f64) -> f64 {
    x * 1e6
}

/// Diffusion coefficients in water, m²/s.
pub const AMINO_ACIDS: [(&str, f64); 4] = [
    ("Glycine", 10.40e-10),
    ("L-Alanine", 9.04e-10),
    ("beta-Alanine", 9.36e-10),
    ("L-Serine", 9.16e-10),
];

pub const DEFAULT_SPACING_UM: f64 = 2.0;
pub const DEFAULT_DISTANCE_UM: f64 = 25.0;
pub const DEFAULT_RADIUS_UM: f64 = 7.0;
pub const DEFAULT_ISI_DEPTH: usize = 10;
pub const DEFAULT_SLOT_S: f64 = 10.0;
pub const DEFAULT_BUDGET: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub molecules: Vec<MoleculeSpec>,
    pub topology: Topology,
    /// Slot duration, seconds.
    pub slot: f64,
    pub isi_depth: usize,
    pub weights: ReceiverWeights,
    /// Molecules per transmitter per slot, all types together.
    pub budget: f64,
    pub prior1: f64,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

impl Scenario {
    /// Checks the cross-field invariants the individual types cannot.
    pub fn validate(&self) -> Result<()> {
        if !(self.slot > 0.0 && self.slot.is_finite()) {
            return Err(invalid(
                "slot_s",
                format!("must be positive, got {}", self.slot),
            ));
        }
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(invalid(
                "budget",
                format!("must be positive, got {}", self.budget),
            ));
        }
        if !(0.0..=1.0).contains(&self.prior1) {
            return Err(invalid(
                "prior1",
                format!("must lie in [0, 1], got {}", self.prior1),
            ));
        }
        if self.molecules.len() < self.topology.n_rx() {
            return Err(invalid(
                "molecules",
                format!(
                    "{} molecule type(s) for {} receiver(s)",
                    self.molecules.len(),
                    self.topology.n_rx()
                ),
            ));
        }
        for (i, m) in self.molecules.iter().enumerate() {
            if self.molecules[..i].iter().any(|o| o.name() == m.name()) {
                return Err(invalid(
                    format!("molecules[{i}].name"),
                    format!("duplicate `{}`", m.name()),
                ));
            }
        }
        for (k, rx) in self.topology.receivers().iter().enumerate() {
            if !self.molecules.iter().any(|m| m == &rx.molecule) {
                return Err(invalid(
                    format!("receivers[{k}].molecule"),
                    format!("`{}` is not in the molecule list", rx.molecule.name()),
                ));
            }
        }
        self.topology
            .check_distinct_types()
            .map_err(|e| invalid("receivers", e.to_string()))?;
        if self.weights.len() != self.topology.n_rx() {
            return Err(invalid(
                "weights",
                format!(
                    "{} weight(s) for {} receiver(s)",
                    self.weights.len(),
                    self.topology.n_rx()
                ),
            ));
        }
        Ok(())
    }

    pub fn slot_config(&self) -> SlotConfig {
        SlotConfig {
            duration: self.slot,
            isi_depth: self.isi_depth,
            prior1: self.prior1,
        }
    }

    pub fn with_slot(&self, slot: f64) -> Scenario {
        Scenario {
            slot,
            ..self.clone()
        }
    }

    /// Keeps the listed transmitters and receivers; weights are renormalized
    /// over the kept receivers.
    pub fn restrict(&self, tx: &[usize], rx: &[usize]) -> Result<Scenario> {
        let topology = self.topology.restrict(tx, rx)?;
        let kept: Vec<f64> = rx.iter().map(|&k| self.weights.as_slice()[k]).collect();
        let total: f64 = kept.iter().sum();
        let weights = if total > 0.0 {
            ReceiverWeights::new(kept.iter().map(|w| w / total).collect())?
        } else {
            ReceiverWeights::uniform(rx.len())
        };
        Ok(Scenario {
            topology,
            weights,
            ..self.clone()
        })
    }

    /// First transmitter to first receiver.
    pub fn siso(&self) -> Result<Scenario> {
        self.restrict(&[0], &[0])
    }

    /// First transmitter to every receiver.
    pub fn simo(&self) -> Result<Scenario> {
        let rx: Vec<usize> = (0..self.topology.n_rx()).collect();
        self.restrict(&[0], &rx)
    }

    /// Every transmitter to the first receiver.
    pub fn miso(&self) -> Result<Scenario> {
        let tx: Vec<usize> = (0..self.topology.n_tx()).collect();
        self.restrict(&tx, &[0])
    }
}

/// Molecule catalog, column geometry and timing used throughout the
/// numerical results: four transmitters on a column with 2 µm spacing, four
/// 7 µm receivers on a parallel column, each aligned pair 25 µm apart
/// surface-to-source, `J = 10`, equal priors, uniform weights.
pub fn default_scenario() -> Scenario {
    let molecules: Vec<MoleculeSpec> = AMINO_ACIDS
        .iter()
        .map(|&(name, d)| MoleculeSpec::new(name, d).expect("positive constant"))
        .collect();
    let column_x = um(DEFAULT_DISTANCE_UM + DEFAULT_RADIUS_UM);
    let transmitters: Vec<Point3> = (0..4)
        .map(|s| Point3::new(0.0, um(DEFAULT_SPACING_UM * s as f64), 0.0))
        .collect();
    let receivers: Vec<Receiver> = molecules
        .iter()
        .enumerate()
        .map(|(k, m)| Receiver {
            center: Point3::new(column_x, um(DEFAULT_SPACING_UM * k as f64), 0.0),
            radius: um(DEFAULT_RADIUS_UM),
            molecule: m.clone(),
        })
        .collect();
    Scenario {
        topology: Topology::new(transmitters, receivers)
            .expect("transmitters lie outside the receivers"),
        weights: ReceiverWeights::uniform(molecules.len()),
        molecules,
        slot: DEFAULT_SLOT_S,
        isi_depth: DEFAULT_ISI_DEPTH,
        budget: DEFAULT_BUDGET,
        prior1: 0.5,
    }
}
