use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Hypergeometric};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::consistency::OverlapCounts;
use crate::error::{Error, Result};
use crate::types::Kappa;

/// How two independent observers are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingPath {
    /// Draw the two correct-counts from binomials, then the jointly-correct
    /// count from the hypergeometric distribution conditioned on them.
    #[default]
    CountLevel,
    /// Draw every trial of both observers as a Bernoulli variable.
    PerTrial,
}

impl SamplingPath {
    pub fn name(self) -> &'static str {
        match self {
            SamplingPath::CountLevel => "count-level",
            SamplingPath::PerTrial => "per-trial",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "count-level" => Some(SamplingPath::CountLevel),
            "per-trial" => Some(SamplingPath::PerTrial),
            _ => None,
        }
    }
}

/// One simulated experiment of two independent observers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulatedSample {
    pub p_i_true: f64,
    pub p_j_true: f64,
    pub p_i_hat: f64,
    pub p_j_hat: f64,
    pub c_exp_hat: f64,
    pub c_obs_hat: f64,
    pub kappa_hat: Kappa<f64>,
    pub counts: OverlapCounts,
}

fn check_accuracy(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(what, p, "[0, 1]"))
    }
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    match p {
        0.0 => 0,
        1.0 => n,
        _ => Binomial::new(n, p).expect("valid binomial").sample(rng),
    }
}

fn jointly_correct<R: Rng + ?Sized>(n: u64, ki: u64, kj: u64, rng: &mut R) -> u64 {
    if ki == 0 || kj == 0 {
        0
    } else if ki == n {
        kj
    } else if kj == n {
        ki
    } else {
        match Hypergeometric::new(n, ki, kj) {
            Ok(h) => h.sample(rng),
            // rand_distr overflows while setting up some valid small-mode
            // parameter sets (from n ≈ 1000 on)
            Err(_) => hypergeometric_inverse(n, ki, kj, rng),
        }
    }
}

/// Inverse-transform hypergeometric draw: successes among `k` draws without
/// replacement from `n` items of which `feature` are marked. Probabilities
/// start from the log-space mass at the lowest support point.
fn hypergeometric_inverse<R: Rng + ?Sized>(n: u64, feature: u64, k: u64, rng: &mut R) -> u64 {
    let lo = (k + feature).saturating_sub(n);
    let hi = k.min(feature);
    let ln_choose = |a: u64, b: u64| ln_factorial(a) - ln_factorial(b) - ln_factorial(a - b);
    let mut p = (ln_choose(feature, lo) + ln_choose(n - feature, k - lo) - ln_choose(n, k)).exp();
    let u: f64 = rng.random();
    let mut cum = p;
    let mut x = lo;
    while u >= cum && x < hi {
        p *= ((feature - x) * (k - x)) as f64 / ((x + 1) * (n + x + 1 - feature - k)) as f64;
        x += 1;
        cum += p;
    }
    x
}

/// Draws the overlap counts of two independent observers over `n` trials.
pub fn draw_counts<R: Rng + ?Sized>(
    p_i: f64,
    p_j: f64,
    n: usize,
    path: SamplingPath,
    rng: &mut R,
) -> OverlapCounts {
    match path {
        SamplingPath::CountLevel => {
            let n64 = n as u64;
            let ki = binomial(n64, p_i, rng);
            let kj = binomial(n64, p_j, rng);
            let both = jointly_correct(n64, ki, kj, rng);
            OverlapCounts {
                n,
                correct_i: ki as usize,
                correct_j: kj as usize,
                // neither correct: n − ki − kj + both
                equal: (n64 + 2 * both - ki - kj) as usize,
            }
        }
        SamplingPath::PerTrial => {
            let mut counts = OverlapCounts {
                n,
                correct_i: 0,
                correct_j: 0,
                equal: 0,
            };
            for _ in 0..n {
                let a = rng.random_bool(p_i);
                let b = rng.random_bool(p_j);
                counts.correct_i += a as usize;
                counts.correct_j += b as usize;
                counts.equal += (a == b) as usize;
            }
            counts
        }
    }
}

/// Simulates one experiment and derives every statistic from the simulated
/// outcomes, including c_exp from the estimated accuracies.
pub fn simulate_pair<R: Rng + ?Sized>(
    p_i: f64,
    p_j: f64,
    n: usize,
    path: SamplingPath,
    rng: &mut R,
) -> Result<SimulatedSample> {
    check_accuracy("p_i", p_i)?;
    check_accuracy("p_j", p_j)?;
    if n == 0 {
        return Err(Error::EmptyInput("zero trials"));
    }
    let counts = draw_counts(p_i, p_j, n, path, rng);
    let stats = counts.statistics::<f64>()?;
    Ok(SimulatedSample {
        p_i_true: p_i,
        p_j_true: p_j,
        p_i_hat: stats.p_i,
        p_j_hat: stats.p_j,
        c_exp_hat: stats.c_exp,
        c_obs_hat: stats.c_obs,
        kappa_hat: stats.kappa,
        counts,
    })
}

/// Counter-based random streams keyed by (seed, cell, repetition).
///
/// Each cell gets its own ChaCha stream and each repetition starts at a fixed
/// word offset inside it, so a sample's randomness never depends on which
/// thread draws it or in what order.
#[derive(Clone, Debug)]
pub struct SampleStreams {
    base: ChaCha8Rng,
}

/// Words reserved per repetition inside a cell stream.
const REP_STRIDE_BITS: u32 = 40;

impl SampleStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn stream(&self, cell: u64, rep: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(cell);
        rng.set_word_pos((rep as u128) << REP_STRIDE_BITS);
        rng
    }
}
