//! Johansen trace test for the bivariate system with the intercept restricted
//! to the cointegrating relation.
//!
//! Δy_t and [y_{t−1}; 1] are regressed on the lagged differences
//! Δy_{t−1}..Δy_{t−p+1}; the residual product moments S00, S01, S11 define
//! the eigenproblem |λ·S11 − S10·S00⁻¹·S01| = 0.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{generalized_symmetric_eigen, ols, spd_inverse, Matrix};
use crate::series::{daily_dates, BivariateSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Significance {
    #[serde(rename = "90")]
    P90,
    #[serde(rename = "95")]
    P95,
    #[serde(rename = "99")]
    P99,
}

impl Significance {
    pub const ALL: [Significance; 3] = [Significance::P90, Significance::P95, Significance::P99];

    pub fn from_percent(p: u32) -> Result<Self> {
        match p {
            90 => Ok(Self::P90),
            95 => Ok(Self::P95),
            99 => Ok(Self::P99),
            _ => Err(Error::invalid(format!("significance must be 90, 95 or 99, got {p}"))),
        }
    }

    pub fn quantile(self) -> f64 {
        match self {
            Self::P90 => 0.90,
            Self::P95 => 0.95,
            Self::P99 => 0.99,
        }
    }

    fn index(self) -> usize {
        match self {
            Self::P90 => 0,
            Self::P95 => 1,
            Self::P99 => 2,
        }
    }
}

/// Trace critical values, rows by null rank (0, 1), columns 90/95/99%.
///
/// Generated by `cargo run --release --example critical_values` (seed
/// 20240101, 10 000 replications of bivariate random walks, T = 1000, p = 1).
pub const TRACE_CRITICAL_VALUES: [[f64; 3]; 2] = [
    [17.85, 20.10, 24.83],
    [7.59, 9.15, 12.47],
];

/// Reproduction settings for `TRACE_CRITICAL_VALUES`.
pub const CRITICAL_VALUE_SEED: u64 = 20240101;
pub const CRITICAL_VALUE_REPLICATIONS: usize = 10_000;
pub const CRITICAL_VALUE_SAMPLE: usize = 1000;

pub fn trace_critical_value(null_rank: usize, significance: Significance) -> Result<f64> {
    TRACE_CRITICAL_VALUES
        .get(null_rank)
        .map(|row| row[significance.index()])
        .ok_or_else(|| Error::invalid(format!("no trace critical value for null rank {null_rank}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohansenResult {
    /// Two largest eigenvalues, descending, each in [0, 1).
    pub eigenvalues: Vec<f64>,
    /// Trace statistic for null ranks 0 and 1.
    pub trace_stats: Vec<f64>,
    /// Per null rank: critical values at 90/95/99%.
    pub critical_values: Vec<[f64; 3]>,
    pub significance: Significance,
    pub selected_rank: usize,
    /// [1, −γ].
    pub beta: [f64; 2],
    /// c in peg − γ·green − c, the restricted intercept.
    pub long_run_constant: f64,
    pub alpha: [f64; 2],
    pub lag_order: usize,
    /// Effective sample size T.
    pub sample_size: usize,
}

impl JohansenResult {
    pub fn gamma(&self) -> f64 {
        -self.beta[1]
    }

    /// Π = α·β*' with β* = [1, −γ, −c].
    pub fn pi(&self) -> [[f64; 3]; 2] {
        let b = [self.beta[0], self.beta[1], -self.long_run_constant];
        [
            [self.alpha[0] * b[0], self.alpha[0] * b[1], self.alpha[0] * b[2]],
            [self.alpha[1] * b[0], self.alpha[1] * b[1], self.alpha[1] * b[2]],
        ]
    }
}

/// Minimum length for a test at `lag_order`.
pub fn min_length(lag_order: usize) -> usize {
    10 * lag_order + 21
}

/// Product-moment matrices after partialling out the lagged differences.
pub(crate) struct ProductMoments {
    pub s00: Matrix,
    pub s01: Matrix,
    pub s11: Matrix,
    pub t: usize,
}

pub(crate) fn product_moments(pair: &BivariateSeries, lag_order: usize) -> Result<ProductMoments> {
    let n = pair.len();
    let p = lag_order;
    let (peg, green) = (pair.peg(), pair.green());
    let t_eff = n - p;
    let mut z0 = Matrix::zeros(t_eff, 2);
    let mut z1 = Matrix::zeros(t_eff, 3);
    let mut z2 = Matrix::zeros(t_eff, 2 * (p - 1));
    for (r, t) in (p..n).enumerate() {
        z0[(r, 0)] = peg[t] - peg[t - 1];
        z0[(r, 1)] = green[t] - green[t - 1];
        z1[(r, 0)] = peg[t - 1];
        z1[(r, 1)] = green[t - 1];
        z1[(r, 2)] = 1.0;
        for i in 1..p {
            z2[(r, 2 * (i - 1))] = peg[t - i] - peg[t - i - 1];
            z2[(r, 2 * (i - 1) + 1)] = green[t - i] - green[t - i - 1];
        }
    }
    let (r0, r1) = if p > 1 {
        (ols(&z2, &z0)?.residuals, ols(&z2, &z1)?.residuals)
    } else {
        (z0, z1)
    };
    let tf = t_eff as f64;
    Ok(ProductMoments {
        s00: r0.t_matmul(&r0).scale(1.0 / tf),
        s01: r0.t_matmul(&r1).scale(1.0 / tf),
        s11: r1.t_matmul(&r1).scale(1.0 / tf),
        t: t_eff,
    })
}

pub fn johansen_test(
    pair: &BivariateSeries,
    lag_order: usize,
    significance: Significance,
) -> Result<JohansenResult> {
    if lag_order == 0 {
        return Err(Error::invalid("lag order must be positive"));
    }
    let needed = min_length(lag_order);
    if pair.len() < needed {
        return Err(Error::InsufficientData {
            what: "Johansen test",
            needed,
            got: pair.len(),
        });
    }
    let pm = product_moments(pair, lag_order)?;
    let s00_inv = spd_inverse(&pm.s00)
        .map_err(|_| Error::RankDeficient("S00 is singular".into()))?;
    let s10 = pm.s01.transpose();
    let a = s10.matmul(&s00_inv).matmul(&pm.s01);
    let a = (&a + &a.transpose()).scale(0.5);
    let eig = generalized_symmetric_eigen(&a, &pm.s11)
        .map_err(|_| Error::RankDeficient("S11 is singular".into()))?;

    let mut eigenvalues: Vec<f64> = eig.eigenvalues[..2].iter().map(|l| l.max(0.0)).collect();
    if eigenvalues[0] >= 1.0 {
        return Err(Error::RankDeficient(format!(
            "eigenvalue {} is not below 1",
            eigenvalues[0]
        )));
    }
    eigenvalues.iter_mut().for_each(|l| *l = l.min(1.0));
    let tf = pm.t as f64;
    let ln1 = |l: f64| (1.0 - l).ln();
    let trace_stats = vec![
        -tf * (ln1(eigenvalues[0]) + ln1(eigenvalues[1])),
        -tf * ln1(eigenvalues[1]),
    ];
    let critical_values = vec![TRACE_CRITICAL_VALUES[0], TRACE_CRITICAL_VALUES[1]];
    let selected_rank = (0..2)
        .find(|&r| trace_stats[r] < critical_values[r][significance.index()])
        .unwrap_or(2);

    let v = eig.eigenvectors.col(0);
    if v[0].abs() < 1e-300 {
        return Err(Error::RankDeficient("cointegrating vector has zero peg loading".into()));
    }
    let b = [1.0, v[1] / v[0], v[2] / v[0]];
    // α = S01·β*·(β*'·S11·β*)⁻¹
    let bcol = Matrix::column(&b);
    let denom = bcol.t_matmul(&pm.s11.matmul(&bcol))[(0, 0)];
    let s01b = pm.s01.matmul(&bcol);
    let alpha = [s01b[(0, 0)] / denom, s01b[(1, 0)] / denom];

    Ok(JohansenResult {
        eigenvalues,
        trace_stats,
        critical_values,
        significance,
        selected_rank,
        beta: [1.0, b[1]],
        long_run_constant: -b[2],
        alpha,
        lag_order,
        sample_size: pm.t,
    })
}

/// Trace statistics under the null of no cointegration: independent driftless
/// random walks of length `t`, tested at lag order 1. Returns one
/// `[trace(0), trace(1)]` pair per replication, in replication order.
pub fn simulate_null_trace(replications: usize, t: usize, seed: u64) -> Vec<[f64; 2]> {
    let start = chrono::NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    let dates = daily_dates(start, t);
    (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64);
            let mut walk = |_: ()| {
                let mut x = 0.0;
                (0..t)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        x += z;
                        x
                    })
                    .collect::<Vec<f64>>()
            };
            let a = walk(());
            let b = walk(());
            let pair = BivariateSeries::new(dates.clone(), a, b).expect("finite walk");
            let r = johansen_test(&pair, 1, Significance::P95).expect("null replication");
            [r.trace_stats[0], r.trace_stats[1]]
        })
        .collect()
}

/// Trace critical values from a null simulation: rows by null rank, columns 90/95/99%.
///
/// The rank-1 statistic under the rank-0 null of two random walks has the
/// distribution of the one-dimensional case (one common trend removed is the
/// same as one walk tested alone), so it is taken from univariate walks.
pub fn critical_values_from_simulation(replications: usize, t: usize, seed: u64) -> [[f64; 3]; 2] {
    let sims = simulate_null_trace(replications, t, seed);
    let mut r0: Vec<f64> = sims.iter().map(|s| s[0]).collect();
    let mut r1 = simulate_univariate_null(replications, t, seed ^ 0x5eed);
    r0.sort_by(f64::total_cmp);
    r1.sort_by(f64::total_cmp);
    let q = |v: &[f64], p: f64| crate::series::quantile_sorted(v, p);
    [
        [q(&r0, 0.90), q(&r0, 0.95), q(&r0, 0.99)],
        [q(&r1, 0.90), q(&r1, 0.95), q(&r1, 0.99)],
    ]
}

/// Univariate restricted-constant trace statistic: one random walk, rank 0 vs 1.
pub fn simulate_univariate_null(replications: usize, t: usize, seed: u64) -> Vec<f64> {
    (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64);
            let mut x = 0.0;
            let y: Vec<f64> = (0..t)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x += z;
                    x
                })
                .collect();
            univariate_trace(&y)
        })
        .collect()
}

fn univariate_trace(y: &[f64]) -> f64 {
    // R0 = Δy_t, R1 = [y_{t−1}, 1]; λ = S01 S11⁻¹ S10 / S00.
    let n = y.len();
    let tf = (n - 1) as f64;
    let (mut s00, mut s01a, mut s01b, mut s11aa, mut s11ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in 1..n {
        let d = y[t] - y[t - 1];
        s00 += d * d;
        s01a += d * y[t - 1];
        s01b += d;
        s11aa += y[t - 1] * y[t - 1];
        s11ab += y[t - 1];
    }
    let s11bb = tf;
    let det = s11aa * s11bb - s11ab * s11ab;
    let quad = (s01a * s01a * s11bb - 2.0 * s01a * s01b * s11ab + s01b * s01b * s11aa) / det;
    let lambda = quad / s00;
    -tf * (1.0 - lambda).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn cointegrated(seed: u64, n: usize, gamma: f64, alpha_peg: f64) -> BivariateSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut peg = vec![0.0; n];
        let mut green = vec![0.0; n];
        peg[0] = 1.0;
        green[0] = 10.0;
        let c = peg[0] - gamma * green[0];
        for t in 1..n {
            let e1: f64 = StandardNormal.sample(&mut rng);
            let e2: f64 = StandardNormal.sample(&mut rng);
            let ec = peg[t - 1] - gamma * green[t - 1] - c;
            peg[t] = peg[t - 1] + alpha_peg * ec + 0.5 * e1;
            green[t] = green[t - 1] + e2;
        }
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        BivariateSeries::new(daily_dates(start, n), peg, green).unwrap()
    }

    #[test]
    fn critical_values_are_ordered() {
        for r in 0..2 {
            let v: Vec<f64> = Significance::ALL
                .iter()
                .map(|s| trace_critical_value(r, *s).unwrap())
                .collect();
            assert!(v[0] < v[1] && v[1] < v[2]);
        }
        assert!(trace_critical_value(2, Significance::P95).is_err());
    }

    #[test]
    fn recovers_rank_one_and_slope() {
        let r = johansen_test(&cointegrated(1, 2000, 0.5, -0.3), 2, Significance::P95).unwrap();
        assert_eq!(r.selected_rank, 1);
        assert!((r.gamma() - 0.5).abs() < 0.025, "{r:?}");
        assert!(r.alpha[0] < -0.1);
        assert_eq!(r.beta[0], 1.0);
    }

    #[test]
    fn trace_identities() {
        let r = johansen_test(&cointegrated(2, 600, 0.5, -0.2), 2, Significance::P95).unwrap();
        let t = r.sample_size as f64;
        let lead = -t * (1.0 - r.eigenvalues[0]).ln();
        assert!((lead - (r.trace_stats[0] - r.trace_stats[1])).abs() < 1e-9);
        assert!(r.trace_stats[0] >= r.trace_stats[1] && r.trace_stats[1] >= 0.0);
        assert!(r.eigenvalues.iter().all(|l| (0.0..1.0).contains(l)));
    }

    #[test]
    fn scale_invariant_eigenvalues() {
        let pair = cointegrated(3, 500, 0.5, -0.2);
        let a = johansen_test(&pair, 2, Significance::P95).unwrap();
        let b = johansen_test(&pair.scaled(37.5).unwrap(), 2, Significance::P95).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_is_monotone_in_significance() {
        for seed in 0..20 {
            let pair = cointegrated(100 + seed, 300, 0.5, -0.03);
            let ranks: Vec<usize> = [Significance::P99, Significance::P95, Significance::P90]
                .iter()
                .map(|s| johansen_test(&pair, 2, *s).unwrap().selected_rank)
                .collect();
            assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "{ranks:?}");
        }
    }

    #[test]
    fn short_series_is_rejected() {
        let pair = cointegrated(4, 30, 0.5, -0.3);
        assert!(matches!(
            johansen_test(&pair, 2, Significance::P95),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn constant_series_is_rank_deficient() {
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let pair = BivariateSeries::new(daily_dates(start, 100), vec![1.0; 100], vec![2.0; 100]).unwrap();
        assert!(johansen_test(&pair, 2, Significance::P95).is_err());
    }
}
