//! Empirical VaR/TVaR, the Gaussian VaR baseline and a peaks-over-threshold
//! generalized Pareto fit on peg losses.
//!
//! Losses are `−deviation`, i.e. `1.00 − peg` when the input is `peg − 1.00`,
//! so de-pegs sit in the right tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{normal_quantile, sf, Distribution};
use crate::series::{descriptive_stats, mean, quantile_sorted, sample_variance, sorted, TimeSeries};

pub const MIN_OBSERVATIONS: usize = 250;
pub const MIN_EXCEEDANCES: usize = 30;
pub const DEFAULT_THRESHOLD_QUANTILE: f64 = 0.90;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdFit {
    /// ξ.
    pub shape: f64,
    /// σ > 0.
    pub scale: f64,
    pub threshold: f64,
    pub exceedance_count: usize,
    /// Fraction of the sample above the threshold.
    pub exceedance_rate: f64,
}

impl GpdFit {
    /// P(loss > level) implied by the tail fit, for levels above the threshold.
    pub fn exceedance_probability(&self, level: f64) -> f64 {
        if level <= self.threshold {
            return self.exceedance_rate;
        }
        let y = level - self.threshold;
        let tail = if self.shape.abs() < 1e-12 {
            (-y / self.scale).exp()
        } else {
            let base = 1.0 + self.shape * y / self.scale;
            if base <= 0.0 {
                0.0
            } else {
                base.powf(-1.0 / self.shape)
            }
        };
        self.exceedance_rate * tail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub confidence: f64,
    pub var_empirical: f64,
    pub tvar_empirical: f64,
    pub var_gaussian: f64,
    /// tvar_empirical / var_gaussian; absent when the Gaussian VaR is not positive.
    pub tail_ratio: Option<f64>,
    pub threshold_quantile: f64,
    pub threshold: f64,
    pub exceedance_count: usize,
    /// Absent when fewer than `MIN_EXCEEDANCES` losses exceed the threshold.
    pub gpd: Option<GpdFit>,
    /// ξ > 0 alongside non-positive excess kurtosis is suspicious.
    pub kurtosis_consistent: bool,
}

/// Probability-weighted-moment GPD estimates for exceedances `y > 0`.
pub fn fit_gpd_pwm(exceedances: &[f64]) -> Result<(f64, f64)> {
    let n = exceedances.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            what: "GPD fit",
            needed: 2,
            got: n,
        });
    }
    let y = sorted(exceedances);
    let a0 = mean(&y);
    let a1 = y
        .iter()
        .enumerate()
        .map(|(i, v)| (n - 1 - i) as f64 / (n - 1) as f64 * v)
        .sum::<f64>()
        / n as f64;
    let denom = a0 - 2.0 * a1;
    if !(denom > 0.0) || !(a0 > 0.0) {
        return Err(Error::Degenerate("GPD moments are degenerate".into()));
    }
    let k = a0 / denom - 2.0;
    let scale = 2.0 * a0 * a1 / denom;
    Ok((-k, scale))
}

pub fn tail_report(deviations: &TimeSeries, confidence: f64, threshold_quantile: f64) -> Result<TailReport> {
    let n = deviations.len();
    if n < MIN_OBSERVATIONS {
        return Err(Error::InsufficientData {
            what: "tail report",
            needed: MIN_OBSERVATIONS,
            got: n,
        });
    }
    if !(confidence > 0.9 && confidence < 0.9999) {
        return Err(Error::invalid(format!("confidence {confidence} must be in (0.9, 0.9999)")));
    }
    if !(threshold_quantile > 0.0 && threshold_quantile < 1.0) {
        return Err(Error::invalid("threshold quantile must be in (0, 1)"));
    }
    let losses: Vec<f64> = deviations.values().iter().map(|d| -d).collect();
    let variance = sample_variance(&losses);
    if !(variance > 0.0) {
        return Err(Error::Degenerate("loss sample has zero variance".into()));
    }
    let s = sorted(&losses);
    let var_empirical = quantile_sorted(&s, confidence);
    let beyond: Vec<f64> = s.iter().copied().filter(|l| *l > var_empirical).collect();
    let tvar_empirical = if beyond.is_empty() {
        var_empirical
    } else {
        mean(&beyond).max(var_empirical)
    };
    let var_gaussian = mean(&losses) + normal_quantile(confidence) * variance.sqrt();
    let tail_ratio = (var_gaussian > 0.0).then(|| tvar_empirical / var_gaussian);

    let threshold = quantile_sorted(&s, threshold_quantile);
    let exceed: Vec<f64> = s.iter().filter(|l| **l > threshold).map(|l| l - threshold).collect();
    let exceedance_count = exceed.len();
    let gpd = if exceedance_count >= MIN_EXCEEDANCES {
        fit_gpd_pwm(&exceed).ok().map(|(shape, scale)| GpdFit {
            shape,
            scale,
            threshold,
            exceedance_count,
            exceedance_rate: exceedance_count as f64 / n as f64,
        })
    } else {
        None
    };
    let kurt = descriptive_stats(deviations)?.excess_kurtosis;
    let kurtosis_consistent = gpd.is_none_or(|g| g.shape <= 0.0 || kurt > 0.0);

    Ok(TailReport {
        confidence,
        var_empirical,
        tvar_empirical,
        var_gaussian,
        tail_ratio,
        threshold_quantile,
        threshold,
        exceedance_count,
        gpd,
        kurtosis_consistent,
    })
}

/// Normal upper-tail probability P(X > threshold).
pub fn gaussian_tail_probability(sample_mean: f64, sample_sd: f64, threshold: f64) -> Result<f64> {
    if !(sample_sd > 0.0) {
        return Err(Error::invalid("standard deviation must be positive"));
    }
    sf(Distribution::Normal, (threshold - sample_mean) / sample_sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::daily_dates;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution as _, Exp, StandardNormal};

    fn ts(values: Vec<f64>) -> TimeSeries {
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        TimeSeries::new(daily_dates(start, values.len()), values).unwrap()
    }

    #[test]
    fn gaussian_tail_probability_examples() {
        assert!((gaussian_tail_probability(1.0, 2.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let p = gaussian_tail_probability(0.0, 1.0, 2.326).unwrap();
        assert!((p - 0.01).abs() < 1e-4);
        let mut prev = 1.0;
        for i in -50..50 {
            let p = gaussian_tail_probability(0.0, 1.0, i as f64 * 0.1).unwrap();
            assert!(p <= prev);
            prev = p;
        }
        assert!(gaussian_tail_probability(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn pwm_recovers_exponential_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = Exp::new(0.5).unwrap();
        let y: Vec<f64> = (0..20_000).map(|_| e.sample(&mut rng)).collect();
        let (xi, sigma) = fit_gpd_pwm(&y).unwrap();
        assert!(xi.abs() < 0.05, "{xi}");
        assert!((sigma - 2.0).abs() < 0.1, "{sigma}");
    }

    #[test]
    fn errors_and_flags() {
        assert!(tail_report(&ts(vec![0.0; 300]), 0.99, 0.9).is_err());
        assert!(tail_report(&ts(vec![0.1; 100]), 0.99, 0.9).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(tail_report(&ts(v.clone()), 0.5, 0.9).is_err());
        // 300 × 0.05 = 15 exceedances: GPD withheld.
        let r = tail_report(&ts(v), 0.99, 0.95).unwrap();
        assert!(r.gpd.is_none());
        assert!(r.exceedance_count < MIN_EXCEEDANCES);
    }

    #[test]
    fn shift_moves_var_and_tvar() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let a = tail_report(&ts(v.clone()), 0.99, 0.9).unwrap();
        let b = tail_report(&ts(v.iter().map(|x| x + 0.25).collect()), 0.99, 0.9).unwrap();
        assert!((a.var_empirical - 0.25 - b.var_empirical).abs() < 1e-12);
        assert!((a.tvar_empirical - 0.25 - b.tvar_empirical).abs() < 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn tvar_dominates_var_and_var_is_monotone(
                v in prop::collection::vec(-5.0f64..5.0, 250..600)
            ) {
                let s = ts(v);
                let mut prev = f64::NEG_INFINITY;
                for c in [0.91, 0.95, 0.975, 0.99, 0.999] {
                    let r = tail_report(&s, c, 0.9).unwrap();
                    prop_assert!(r.tvar_empirical >= r.var_empirical);
                    prop_assert!(r.var_empirical >= prev);
                    prev = r.var_empirical;
                }
            }
        }
    }
}
