//! Seeded simulation of exponential order statistics and the statistical
//! gates that compare it against exact values.

mod ks;

pub use ks::{kolmogorov_survival, ks_statistic, ks_two_sample, KsResult, MIN_KS_SAMPLES};

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_arith::Rational;
use crate::identities::{eval_basic_rhs, tail_prob_exact, IdentityError};

/// Minimum number of draws for an estimate.
pub const MIN_ESTIMATE_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("n must be at least 1")]
    NRequired,
    #[error("m must be at least 1")]
    InvalidM,
    #[error("rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("{samples} samples requested, at least {min} required")]
    InsufficientSamples { samples: u64, min: u64 },
    #[error("two-sample test needs at least {min} draws per side, got {n1} and {n2}")]
    TooFewSamples { n1: usize, n2: usize, min: usize },
    #[error("sample contains NaN")]
    NanSample,
    #[error(transparent)]
    Exact(#[from] IdentityError),
}

pub type Result<T, E = MonteCarloError> = std::result::Result<T, E>;

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngConfig {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngConfig {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngConfig { master_seed, stream_id }
    }

    /// ChaCha8 keyed by the master seed, on the ChaCha stream `stream_id`.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    pub fn with_stream(&self, stream_id: u64) -> Self {
        RngConfig { stream_id, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub exact_reference: Option<Rational>,
}

impl MonteCarloEstimate {
    /// `|estimate - exact| / std_error`, or `None` without a reference.
    /// A zero standard error gives 0 on an exact hit and infinity otherwise.
    pub fn z_score(&self) -> Option<f64> {
        let exact = self.exact_reference.as_ref()?.to_f64();
        let gap = (self.estimate - exact).abs();
        Some(if gap == 0.0 {
            0.0
        } else if self.std_error == 0.0 {
            f64::INFINITY
        } else {
            gap / self.std_error
        })
    }

    pub fn within_sigmas(&self, k: f64) -> Option<bool> {
        self.z_score().map(|z| z <= k)
    }
}

/// Inverse-CDF transform `-ln(u) / rate`.
pub fn exp_from_uniform(u: f64, rate: f64) -> f64 {
    -u.ln() / rate
}

fn check_rate(rate: f64) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(MonteCarloError::InvalidRate(rate))
    }
}

/// One draw from `Exp(rate)`. The uniform is drawn from the open interval
/// `(0, 1)`, so the result is finite and strictly positive.
pub fn exp_sample<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64> {
    check_rate(rate)?;
    let u: f64 = rng.sample(Open01);
    Ok(exp_from_uniform(u, rate))
}

/// Maximum of `n` independent unit exponentials.
pub fn sample_max_exp<R: Rng + ?Sized>(n: u64, rng: &mut R) -> Result<f64> {
    if n == 0 {
        return Err(MonteCarloError::NRequired);
    }
    let mut max = 0.0f64;
    for _ in 0..n {
        max = max.max(exp_sample(1.0, rng)?);
    }
    Ok(max)
}

/// `Y_1 + ... + Y_n` with independent `Y_j ~ Exp(j)`.
pub fn sample_sum_exp<R: Rng + ?Sized>(n: u64, rng: &mut R) -> Result<f64> {
    if n == 0 {
        return Err(MonteCarloError::NRequired);
    }
    let mut sum = 0.0;
    for j in 1..=n {
        sum += exp_sample(j as f64, rng)?;
    }
    Ok(sum)
}

/// Gamma with integer shape `m` and rate `s`, as a sum of `m` exponentials.
pub fn sample_gamma_integer<R: Rng + ?Sized>(m: u64, s: f64, rng: &mut R) -> Result<f64> {
    if m == 0 {
        return Err(MonteCarloError::InvalidM);
    }
    check_rate(s)?;
    let mut sum = 0.0;
    for _ in 0..m {
        sum += exp_sample(s, rng)?;
    }
    Ok(sum)
}

/// `count` draws of a sampler from the stream described by `cfg`.
pub fn draw_samples(
    count: usize,
    cfg: RngConfig,
    mut sampler: impl FnMut(&mut ChaCha8Rng) -> Result<f64>,
) -> Result<Vec<f64>> {
    let mut rng = cfg.rng();
    (0..count).map(|_| sampler(&mut rng)).collect()
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < MIN_ESTIMATE_SAMPLES {
        Err(MonteCarloError::InsufficientSamples {
            samples,
            min: MIN_ESTIMATE_SAMPLES,
        })
    } else {
        Ok(())
    }
}

fn rate_of(s: &Rational) -> Result<f64> {
    let rate = s.to_f64();
    check_rate(rate)?;
    Ok(rate)
}

/// Fraction of paired draws with `T_m > X_(n)`, `T_m ~ Gamma(m, s)`.
pub fn estimate_tail_prob(m: u64, s: &Rational, n: u64, samples: u64, cfg: RngConfig) -> Result<MonteCarloEstimate> {
    if m == 0 {
        return Err(MonteCarloError::InvalidM);
    }
    if n == 0 {
        return Err(MonteCarloError::NRequired);
    }
    check_samples(samples)?;
    let rate = rate_of(s)?;
    let exact = tail_prob_exact(m, s, n)?;
    let mut rng = cfg.rng();
    let mut hits = 0u64;
    for _ in 0..samples {
        let t = sample_gamma_integer(m, rate, &mut rng)?;
        let x = sample_max_exp(n, &mut rng)?;
        if t > x {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(MonteCarloEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        exact_reference: Some(exact),
    })
}

/// Sample mean of `exp(-s X_(n))`.
pub fn empirical_laplace(s: &Rational, n: u64, samples: u64, cfg: RngConfig) -> Result<MonteCarloEstimate> {
    if n == 0 {
        return Err(MonteCarloError::NRequired);
    }
    check_samples(samples)?;
    let rate = rate_of(s)?;
    let exact = eval_basic_rhs(s, n)?;
    let mut rng = cfg.rng();
    let mut moments = RunningMoments::default();
    for _ in 0..samples {
        let x = sample_max_exp(n, &mut rng)?;
        moments.push((-rate * x).exp());
    }
    Ok(MonteCarloEstimate {
        estimate: moments.mean(),
        std_error: moments.std_error(),
        samples,
        exact_reference: Some(exact),
    })
}
