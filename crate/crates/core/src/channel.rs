//! First-passage physics of a point source and a fully absorbing sphere in
//! unbounded 3D diffusion.
//!
//! All quantities are SI: meters, seconds, m²/s. Release happens at `t = 0`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::distr::Open01;
use rand::Rng;

use crate::error::{nonnegative, positive};
use crate::special::{erfc, erfc_inv};
use crate::statistics::LinkProbabilities;
use crate::Result;

/// A messenger molecule type and its diffusion coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeSpec {
    name: String,
    diffusion: f64,
}

impl MoleculeSpec {
    pub fn new(name: impl Into<String>, diffusion: f64) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            diffusion: positive("diffusion coefficient", diffusion)?,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Diffusion coefficient in m²/s.
    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }
}

/// Transmitter-to-receiver-surface distance and receiver radius, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    distance: f64,
    rx_radius: f64,
}

impl LinkGeometry {
    pub fn new(distance: f64, rx_radius: f64) -> Result<Self> {
        Ok(Self {
            distance: positive("surface distance", distance)?,
            rx_radius: positive("receiver radius", rx_radius)?,
        })
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn rx_radius(&self) -> f64 {
        self.rx_radius
    }

    /// Probability that a molecule is ever absorbed, `r / (d + r)`.
    pub fn absorption_probability(&self) -> f64 {
        self.rx_radius / (self.distance + self.rx_radius)
    }
}

/// Density of the absorption time at `t` seconds after release (1/s):
/// `r d / ((d + r) sqrt(4 π D t³)) exp(-d² / (4 D t))`, the derivative of
/// [`hit_probability`].
pub fn first_passage_pdf(mol: &MoleculeSpec, geo: &LinkGeometry, t: f64) -> Result<f64> {
    let t = positive("time", t)?;
    let (d, r, diff) = (geo.distance, geo.rx_radius, mol.diffusion);
    let norm = r * d / ((d + r) * libm::sqrt(4.0 * PI * diff * t * t * t));
    Ok(norm * libm::exp(-d * d / (4.0 * diff * t)))
}

/// Probability that a molecule has been absorbed within `t` seconds of release.
pub fn hit_probability(mol: &MoleculeSpec, geo: &LinkGeometry, t: f64) -> Result<f64> {
    let t = nonnegative("time", t)?;
    Ok(hit_probability_unchecked(mol.diffusion, geo, t))
}

#[inline]
fn hit_probability_unchecked(diffusion: f64, geo: &LinkGeometry, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    geo.absorption_probability() * erfc(geo.distance / libm::sqrt(4.0 * diffusion * t))
}

/// Arrival probabilities for a molecule released at the start of a slot:
/// `p` for the slot itself and `q_j` for the `j`-th following slot,
/// `j = 1..=isi_depth`.
pub fn slot_probabilities(
    mol: &MoleculeSpec,
    geo: &LinkGeometry,
    slot: f64,
    isi_depth: usize,
) -> Result<LinkProbabilities> {
    let slot = positive("slot duration", slot)?;
    let hit = |k: usize| hit_probability_unchecked(mol.diffusion, geo, k as f64 * slot);
    let current = hit(1);
    let mut isi = Vec::with_capacity(isi_depth);
    let mut prev = current;
    for j in 1..=isi_depth {
        let next = hit(j + 1);
        isi.push((next - prev).max(0.0));
        prev = next;
    }
    LinkProbabilities::new(current, isi)
}

/// Exact sampler of the absorption time by inversion of the hitting CDF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstPassageSampler {
    absorption: f64,
    /// `d² / (4 D)`, seconds.
    time_scale: f64,
}

impl FirstPassageSampler {
    pub fn new(mol: &MoleculeSpec, geo: &LinkGeometry) -> Self {
        Self {
            absorption: geo.absorption_probability(),
            time_scale: geo.distance * geo.distance / (4.0 * mol.diffusion),
        }
    }

    pub fn absorption_probability(&self) -> f64 {
        self.absorption
    }

    /// Draws one absorption time; `None` means the molecule escapes forever.
    ///
    /// One uniform `u` on (0, 1) decides both: the molecule escapes when
    /// `u >= r / (d + r)`, otherwise `v = u (d + r) / r` is uniform on (0, 1)
    /// and inverts the conditional CDF, `T = d² / (4 D erfc⁻¹(v)²)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        let u: f64 = rng.sample(Open01);
        if u >= self.absorption {
            return None;
        }
        let x = erfc_inv(u / self.absorption);
        Some(self.time_scale / (x * x))
    }

    /// Unconditional CDF values at the ends of the first `bins` slots.
    pub fn slot_edges(&self, slot: f64, bins: usize) -> SlotEdges {
        let cdf = (1..=bins)
            .map(|k| self.absorption * erfc(libm::sqrt(self.time_scale / (k as f64 * slot))))
            .collect();
        SlotEdges { cdf }
    }

    /// Same draw as [`sample`](Self::sample), reduced to the slot index
    /// `floor(T / slot)`. Arrivals after the last edge come back as `None`,
    /// like escapes.
    ///
    /// The inverse CDF is monotone, so comparing `u` against the CDF at the
    /// slot edges selects the same bin without evaluating `erfc⁻¹`.
    #[inline]
    pub fn sample_slot<R: Rng + ?Sized>(&self, rng: &mut R, edges: &SlotEdges) -> Option<usize> {
        let u: f64 = rng.sample(Open01);
        edges.cdf.iter().position(|&c| u <= c)
    }
}

/// Precomputed slot boundaries for [`FirstPassageSampler::sample_slot`].
#[derive(Debug, Clone, PartialEq)]
pub struct SlotEdges {
    cdf: Vec<f64>,
}

impl SlotEdges {
    pub fn bins(&self) -> usize {
        self.cdf.len()
    }
}

/// Draws one absorption time for a single link.
pub fn sample_first_passage<R: Rng + ?Sized>(
    mol: &MoleculeSpec,
    geo: &LinkGeometry,
    rng: &mut R,
) -> Option<f64> {
    FirstPassageSampler::new(mol, geo).sample(rng)
}
