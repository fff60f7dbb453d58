//! Moments of the per-slot arrival count.
//!
//! A transmitter releasing `g` molecules for a 1 contributes a binomial
//! count to the current slot and to each of the next `J` slots. Earlier bits
//! are unknown to the receiver and modeled as independent Bernoulli draws
//! with `P(1) = prior1`, so the conditional count distribution given the
//! current bit is a mixture; its first two moments follow from the laws of
//! total expectation and total variance. Downstream, the count is treated as
//! an untruncated Gaussian with those moments.

use alloc::vec::Vec;

use crate::error::{nonnegative, probability, Error};
use crate::Result;

const SUM_SLACK: f64 = 1e-12;

/// Arrival probability in the release slot and the ISI increments after it.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkProbabilities {
    current: f64,
    isi: Vec<f64>,
}

impl LinkProbabilities {
    pub fn new(current: f64, isi: Vec<f64>) -> Result<Self> {
        probability("current-slot probability", current)?;
        for &q in &isi {
            probability("ISI probability", q)?;
        }
        let total = current + isi.iter().sum::<f64>();
        if total > 1.0 + SUM_SLACK {
            return Err(Error::Domain {
                what: "total arrival probability",
                value: total,
            });
        }
        Ok(Self { current, isi })
    }

    /// `p`: probability of arriving within the release slot.
    pub fn current(&self) -> f64 {
        self.current
    }

    /// `q_1..q_J`.
    pub fn isi(&self) -> &[f64] {
        &self.isi
    }

    pub fn isi_depth(&self) -> usize {
        self.isi.len()
    }
}

/// Conditional mean and variance of the slot count given the current bit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GaussianMoments {
    pub a0: f64,
    pub b0: f64,
    pub a1: f64,
    pub b1: f64,
}

impl GaussianMoments {
    pub const ZERO: Self = Self {
        a0: 0.0,
        b0: 0.0,
        a1: 0.0,
        b1: 0.0,
    };
}

impl core::ops::Add for GaussianMoments {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            a0: self.a0 + rhs.a0,
            b0: self.b0 + rhs.b0,
            a1: self.a1 + rhs.a1,
            b1: self.b1 + rhs.b1,
        }
    }
}

/// ISI moment coefficients of one link, per molecule released.
///
/// With `g` molecules: ISI mean `g * mean`, ISI variance
/// `g * binomial_variance + g² * mixing_variance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsiTerms {
    pub mean: f64,
    pub binomial_variance: f64,
    pub mixing_variance: f64,
}

pub fn isi_terms(probs: &LinkProbabilities, prior1: f64) -> Result<IsiTerms> {
    let prior1 = probability("bit prior", prior1)?;
    let mut terms = IsiTerms {
        mean: 0.0,
        binomial_variance: 0.0,
        mixing_variance: 0.0,
    };
    for &q in &probs.isi {
        terms.mean += prior1 * q;
        terms.binomial_variance += prior1 * q * (1.0 - q);
        terms.mixing_variance += prior1 * (1.0 - prior1) * q * q;
    }
    Ok(terms)
}

/// Moments of a single link carrying `g` molecules per 1-bit.
pub fn link_moments(g: f64, probs: &LinkProbabilities, prior1: f64) -> Result<GaussianMoments> {
    let g = nonnegative("molecule count", g)?;
    let isi = isi_terms(probs, prior1)?;
    let p = probs.current;
    let a0 = g * isi.mean;
    let b0 = g * isi.binomial_variance + g * g * isi.mixing_variance;
    Ok(GaussianMoments {
        a0,
        b0,
        a1: g * p + a0,
        b1: g * p * (1.0 - p) + b0,
    })
}

/// Sum of moments of independently driven links.
pub fn superpose(moments: &[GaussianMoments]) -> Result<GaussianMoments> {
    if moments.is_empty() {
        return Err(Error::EmptyInput("moment list"));
    }
    Ok(moments
        .iter()
        .copied()
        .fold(GaussianMoments::ZERO, |acc, m| acc + m))
}

/// Moments at one receiver fed by several transmitters that all send the
/// same bit sequence.
///
/// Binomial terms add across transmitters as in [`superpose`], but the
/// previous bits are shared, so the Bernoulli mixing term is taken over the
/// combined ISI mean of each slot: `prior1 (1 - prior1) (Σ_s g_s q_sj)²`.
/// For a single source this is exactly [`link_moments`].
pub fn cooperative_moments<'a, I>(sources: I, prior1: f64) -> Result<GaussianMoments>
where
    I: IntoIterator<Item = (f64, &'a LinkProbabilities)>,
{
    let prior1 = probability("bit prior", prior1)?;
    let mut combined_isi: Vec<f64> = Vec::new();
    let mut current_mean = 0.0;
    let mut current_var = 0.0;
    let mut isi_var = 0.0;
    let mut any = false;
    for (g, probs) in sources {
        any = true;
        let g = nonnegative("molecule count", g)?;
        let p = probs.current;
        current_mean += g * p;
        current_var += g * p * (1.0 - p);
        if combined_isi.len() < probs.isi.len() {
            combined_isi.resize(probs.isi.len(), 0.0);
        }
        for (acc, &q) in combined_isi.iter_mut().zip(&probs.isi) {
            *acc += g * q;
            isi_var += prior1 * g * q * (1.0 - q);
        }
    }
    if !any {
        return Err(Error::EmptyInput("source list"));
    }
    let a0: f64 = combined_isi.iter().map(|c| prior1 * c).sum();
    let mixing: f64 = combined_isi.iter().map(|c| c * c).sum::<f64>() * prior1 * (1.0 - prior1);
    let b0 = isi_var + mixing;
    Ok(GaussianMoments {
        a0,
        b0,
        a1: current_mean + a0,
        b1: current_var + b0,
    })
}
