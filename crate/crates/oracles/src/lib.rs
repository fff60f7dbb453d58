//! Reference computations that share no code path with `mcvd-core`.
//!
//! Used only from tests: adaptive quadrature of the first-passage density,
//! direct binomial simulation of slot counts, a bisection simplex
//! projection, dense grid minimization and a Kolmogorov–Smirnov statistic.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

/// First-passage density written out independently, `1/s`.
pub fn first_passage_density(diffusion: f64, distance: f64, radius: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    radius * distance
        / ((distance + radius) * (4.0 * std::f64::consts::PI * diffusion * t.powi(3)).sqrt())
        * (-(distance * distance) / (4.0 * diffusion * t)).exp()
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_KRONROD: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_GAUSS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_KRONROD[7] * fc;
    let mut gauss = GK_GAUSS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let pair = f(c - x) + f(c + x);
        kronrod += GK_KRONROD[i] * pair;
        if i % 2 == 1 {
            gauss += GK_GAUSS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gauss_kronrod_15(f, a, b);
        if err <= tol || depth >= 60 {
            return value;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    recurse(&f, a, b, tol, 0)
}

/// `∫₀ᵗ` of the first-passage density by adaptive quadrature.
pub fn hit_probability_by_quadrature(
    diffusion: f64,
    distance: f64,
    radius: f64,
    t: f64,
    tol: f64,
) -> f64 {
    integrate(
        |u| first_passage_density(diffusion, distance, radius, u),
        0.0,
        t,
        tol,
    )
}

/// Sample mean and unbiased variance with their standard errors.
#[derive(Debug, Clone, Copy)]
pub struct Summary {
    pub n: u64,
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
}

/// Streaming accumulator for [`Summary`] (shifted sums up to 4th order).
#[derive(Debug, Clone, Default)]
pub struct Accumulator {
    n: u64,
    shift: Option<f64>,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        let c = *self.shift.get_or_insert(x);
        let d = x - c;
        self.n += 1;
        self.s1 += d;
        self.s2 += d * d;
        self.s3 += d * d * d;
        self.s4 += d * d * d * d;
    }

    pub fn summary(&self) -> Summary {
        let n = self.n as f64;
        let c = self.shift.unwrap_or(0.0);
        let m1 = self.s1 / n;
        let raw2 = self.s2 / n;
        let raw3 = self.s3 / n;
        let raw4 = self.s4 / n;
        let mu2 = raw2 - m1 * m1;
        let mu4 = raw4 - 4.0 * m1 * raw3 + 6.0 * m1 * m1 * raw2 - 3.0 * m1.powi(4);
        let var = mu2 * n / (n - 1.0);
        Summary {
            n: self.n,
            mean: c + m1,
            var,
            se_mean: (var / n).sqrt(),
            se_var: ((mu4 - mu2 * mu2).max(0.0) / n).sqrt(),
        }
    }
}

/// One link to simulate directly: molecules per 1-bit, current-slot
/// probability, ISI increments.
#[derive(Debug, Clone)]
pub struct DirectLink {
    pub molecules: u64,
    pub current: f64,
    pub isi: Vec<f64>,
}

/// Binomial(n, p) sampled from its exact pmf through an alias table; much
/// cheaper per draw than a rejection sampler when millions are needed.
pub struct BinomialTable {
    table: WeightedAliasIndex<f64>,
}

impl BinomialTable {
    pub fn new(n: u64, p: f64) -> Self {
        assert!(n > 0 && p > 0.0 && p < 1.0);
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        let mut log_choose = 0.0;
        let mut weights = Vec::with_capacity(n as usize + 1);
        for k in 0..=n {
            if k > 0 {
                log_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
            }
            weights.push((log_choose + k as f64 * lp + (n - k) as f64 * lq).exp());
        }
        Self {
            table: WeightedAliasIndex::new(weights).expect("pmf has positive mass"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.table.sample(rng) as u64
    }
}

fn binomial(n: u64, p: f64) -> Option<BinomialTable> {
    (n > 0 && p > 0.0).then(|| BinomialTable::new(n, p))
}

/// Conditional count summaries `(given bit 0, given bit 1)` from `trials`
/// independent slots. ISI bits are Bernoulli(`prior1`); with `shared_bits`
/// every link sees the same bit history (cooperating transmitters),
/// otherwise each link draws its own.
pub fn direct_slot_counts<R: Rng>(
    links: &[DirectLink],
    prior1: f64,
    trials: u64,
    shared_bits: bool,
    rng: &mut R,
) -> (Summary, Summary) {
    let depth = links.iter().map(|l| l.isi.len()).max().unwrap_or(0);
    let current: Vec<Option<BinomialTable>> = links
        .iter()
        .map(|l| binomial(l.molecules, l.current))
        .collect();
    let isi: Vec<Vec<Option<BinomialTable>>> = links
        .iter()
        .map(|l| l.isi.iter().map(|&q| binomial(l.molecules, q)).collect())
        .collect();
    let mut bits = vec![false; depth];
    let mut zero = Accumulator::default();
    let mut one = Accumulator::default();
    for _ in 0..trials {
        if shared_bits {
            bits.iter_mut()
                .for_each(|b| *b = rng.random::<f64>() < prior1);
        }
        let mut isi_count = 0u64;
        let mut current_count = 0u64;
        for (l, dists) in isi.iter().enumerate() {
            if !shared_bits {
                bits.iter_mut()
                    .for_each(|b| *b = rng.random::<f64>() < prior1);
            }
            for (dist, &bit) in dists.iter().zip(&bits) {
                if let (true, Some(d)) = (bit, dist) {
                    isi_count += d.sample(rng);
                }
            }
            if let Some(d) = &current[l] {
                current_count += d.sample(rng);
            }
        }
        zero.push(isi_count as f64);
        one.push((isi_count + current_count) as f64);
    }
    (zero.summary(), one.summary())
}

/// Euclidean projection onto `{x >= 0, Σx = budget}` by bisection on the
/// KKT multiplier.
pub fn project_by_bisection(v: &[f64], budget: f64) -> Vec<f64> {
    let total = |theta: f64| v.iter().map(|x| (x - theta).max(0.0)).sum::<f64>();
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - budget;
    let mut hi = max;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Minimum of `f` on an evenly spaced grid, `(argmin, min)`.
pub fn dense_grid_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let mut best = (lo, f(lo));
    for i in 1..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let y = f(x);
        if y < best.1 {
            best = (x, y);
        }
    }
    best
}

/// Two-sided Kolmogorov–Smirnov distance of `samples` from `cdf`.
pub fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS distance for `n` samples.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_61 / (n as f64).sqrt()
}
