//! Threshold detection of on-off keyed bits and its error probability.
//!
//! Equal bit priors throughout. With Gaussian counts the BER at threshold
//! `tau` is
//!
//! ```text
//! 1/2 + 1/4 [erf((tau - a1) / sqrt(2 b1)) - erf((tau - a0) / sqrt(2 b0))]
//! ```
//!
//! which is evaluated in the algebraically identical form
//! `1/4 erfc((tau - a0) / sqrt(2 b0)) + 1/4 erfc((a1 - tau) / sqrt(2 b1))`
//! so that tiny error rates do not cancel against `1/2`.

use crate::special::{erf, erfc};
use crate::statistics::GaussianMoments;
use crate::{Error, Result};

/// Decision threshold on the received count.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold(pub f64);

impl Threshold {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Declares a 1 when the count reaches the threshold.
#[inline]
pub fn map_detect(count: f64, tau: Threshold) -> u8 {
    u8::from(count >= tau.0)
}

/// `P(count >= tau | bit 0)`.
fn false_alarm(m: &GaussianMoments, tau: f64) -> f64 {
    if m.b0 > 0.0 {
        0.5 * erfc((tau - m.a0) / libm::sqrt(2.0 * m.b0))
    } else if m.a0 >= tau {
        1.0
    } else {
        0.0
    }
}

/// `P(count < tau | bit 1)`.
fn miss(m: &GaussianMoments, tau: f64) -> f64 {
    if m.b1 > 0.0 {
        0.5 * erfc((m.a1 - tau) / libm::sqrt(2.0 * m.b1))
    } else if m.a1 < tau {
        1.0
    } else {
        0.0
    }
}

/// Bit-error probability at threshold `tau`.
///
/// A zero variance is read as a deterministic count at the mean, so the
/// corresponding Gaussian tail becomes a step.
pub fn ber_given_threshold(m: &GaussianMoments, tau: Threshold) -> f64 {
    let tau = tau.0;
    if tau.is_infinite() {
        return 0.5;
    }
    (0.5 * (false_alarm(m, tau) + miss(m, tau))).clamp(0.0, 1.0)
}

/// The erf form as written, for comparison with the stable evaluation.
pub fn ber_erf_form(m: &GaussianMoments, tau: Threshold) -> f64 {
    let t = tau.0;
    0.5 + 0.25
        * (erf((t - m.a1) / libm::sqrt(2.0 * m.b1)) - erf((t - m.a0) / libm::sqrt(2.0 * m.b0)))
}

/// The BER-minimizing threshold.
///
/// Where both hypotheses have spread, the stationary points of the BER are
/// the crossings of the two Gaussian densities; the crossing between the
/// means is taken when it exists. Otherwise a grid scan over
/// `[a0 - 6 sqrt(b0), a1 + 6 sqrt(b1)]` is refined by golden-section search.
/// Ties go to the smaller threshold.
pub fn optimal_threshold(m: &GaussianMoments) -> Result<Threshold> {
    let GaussianMoments { a0, b0, a1, b1 } = *m;
    if !(a0.is_finite() && a1.is_finite() && b0 >= 0.0 && b1 >= 0.0) {
        return Err(Error::Domain {
            what: "moments",
            value: f64::NAN,
        });
    }
    if a1 < a0 {
        return Err(Error::MisorderedMeans { a0, a1 });
    }
    if b0 == 0.0 {
        // Deterministic bit-0 count: the infimum sits just above a0.
        return Ok(Threshold(next_up(a0)));
    }
    if b1 == 0.0 {
        return Ok(Threshold(a1));
    }

    let ber = |t: f64| ber_given_threshold(m, Threshold(t));
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |t: f64| {
        let e = ber(t);
        match best {
            Some((bt, be)) if e > be || (e == be && t >= bt) => {}
            _ => best = Some((t, e)),
        }
    };
    let mut found = false;
    for root in density_crossings(m).into_iter().flatten() {
        if (a0..=a1).contains(&root) {
            consider(root);
            found = true;
        }
    }
    if !found {
        let lo = a0 - 6.0 * libm::sqrt(b0);
        let hi = a1 + 6.0 * libm::sqrt(b1);
        consider(grid_golden(&ber, lo, hi));
    }
    Ok(Threshold(best.map(|(t, _)| t).unwrap_or(0.5 * (a0 + a1))))
}

/// Real roots of `N(t; a0, b0) = N(t; a1, b1)`, i.e. of
/// `(b1 - b0) t² - 2 (b1 a0 - b0 a1) t + b1 a0² - b0 a1² + b0 b1 ln(b0 / b1) = 0`.
fn density_crossings(m: &GaussianMoments) -> [Option<f64>; 2] {
    let GaussianMoments { a0, b0, a1, b1 } = *m;
    let qa = b1 - b0;
    let qb = -2.0 * (b1 * a0 - b0 * a1);
    let qc = b1 * a0 * a0 - b0 * a1 * a1 + b0 * b1 * libm::log(b0 / b1);
    let scale = b0.max(b1);
    if qa.abs() <= 1e-12 * scale {
        // Equal variances: the crossing is the midpoint.
        return if qb != 0.0 {
            [Some(-qc / qb), None]
        } else {
            [None, None]
        };
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return [None, None];
    }
    let sq = libm::sqrt(disc);
    let q = -0.5 * (qb + libm::copysign(sq, qb));
    let r1 = q / qa;
    let r2 = if q != 0.0 { qc / q } else { r1 };
    [Some(r1), Some(r2)]
}

fn grid_golden(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const POINTS: usize = 2001;
    if !(hi > lo) {
        return lo;
    }
    let h = (hi - lo) / (POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..POINTS {
        let v = f(lo + h * i as f64);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut a = lo + h * best_i.saturating_sub(1) as f64;
    let mut b = (lo + h * (best_i + 1) as f64).min(hi);
    let inv_phi = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a) <= 1e-12 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let grid_best = lo + h * best_i as f64;
    if f(grid_best) < f(mid) {
        grid_best
    } else {
        mid
    }
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

/// BER at the optimal threshold, with the threshold.
pub fn optimal_ber(m: &GaussianMoments) -> Result<(Threshold, f64)> {
    let tau = optimal_threshold(m)?;
    Ok((tau, ber_given_threshold(m, tau)))
}
