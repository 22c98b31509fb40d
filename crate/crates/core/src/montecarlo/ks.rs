//! Two-sample Kolmogorov-Smirnov test.

use std::cmp::Ordering;

use super::MonteCarloError;

/// Minimum size of each sample.
pub const MIN_KS_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>, MonteCarloError> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(MonteCarloError::NanSample);
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(v)
}

/// Supremum distance between the two empirical CDFs.
///
/// Walks the merged order statistics, consuming every copy of the current
/// value from both samples before comparing, so ties never open a spurious gap.
pub fn ks_statistic(xs: &[f64], ys: &[f64]) -> Result<f64, MonteCarloError> {
    let xs = sorted(xs)?;
    let ys = sorted(ys)?;
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            j += 1;
        }
        sup = sup.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    Ok(sup)
}

/// Asymptotic survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`.
///
/// For small `lambda` the alternating series converges slowly, so the
/// equivalent theta-function form of the CDF is used there instead.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    const TERM_CUTOFF: f64 = 1e-12;
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // P(K <= lambda) = sqrt(2 pi)/lambda * sum_{k odd} exp(-k^2 pi^2 / (8 lambda^2))
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        let mut k = 1.0f64;
        loop {
            let term = (-k * k * c).exp();
            cdf += term;
            if term < TERM_CUTOFF {
                break;
            }
            k += 2.0;
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut k = 1.0f64;
    loop {
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += sign * term;
        if term < TERM_CUTOFF {
            break;
        }
        sign = -sign;
        k += 1.0;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsResult, MonteCarloError> {
    let (n1, n2) = (xs.len(), ys.len());
    if n1 < MIN_KS_SAMPLES || n2 < MIN_KS_SAMPLES {
        return Err(MonteCarloError::TooFewSamples {
            n1,
            n2,
            min: MIN_KS_SAMPLES,
        });
    }
    let statistic = ks_statistic(xs, ys)?;
    let effective = (n1 as f64 * n2 as f64) / (n1 + n2) as f64;
    let p_value = kolmogorov_survival(effective.sqrt() * statistic);
    Ok(KsResult {
        statistic,
        p_value,
        n1,
        n2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// O(n1 * n2) oracle: evaluate both ECDFs at every sample point.
    fn brute_force_statistic(xs: &[f64], ys: &[f64]) -> f64 {
        let ecdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
        xs.iter()
            .chain(ys)
            .map(|&t| (ecdf(xs, t) - ecdf(ys, t)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identical_samples() {
        let xs: Vec<f64> = (0..200).map(|i| (i as f64).sin()).collect();
        let r = ks_two_sample(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn statistic_matches_brute_force_with_ties() {
        let xs: Vec<f64> = (0..150).map(|i| ((i * 7) % 13) as f64).collect();
        let ys: Vec<f64> = (0..170).map(|i| ((i * 5) % 11) as f64 + 0.5 * (i % 2) as f64).collect();
        let fast = ks_statistic(&xs, &ys).unwrap();
        assert!((fast - brute_force_statistic(&xs, &ys)).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples() {
        let xs = vec![1.0; 99];
        let ys = vec![1.0; 500];
        assert!(matches!(
            ks_two_sample(&xs, &ys),
            Err(MonteCarloError::TooFewSamples { n1: 99, .. })
        ));
    }

    #[test]
    fn kolmogorov_tail_values() {
        // Published critical values: Q(1.3581) = 0.05, Q(1.6276) = 0.01.
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        // both branches agree where they meet
        let below = kolmogorov_survival(1.0 - 1e-12);
        let above = kolmogorov_survival(1.0);
        assert!((below - above).abs() < 1e-10);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(10.0) < 1e-80);
    }
}
