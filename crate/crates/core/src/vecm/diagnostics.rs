use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cdf, ols, sf, Distribution, Matrix};
use crate::series::{sample_variance, BivariateSeries, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrangerDirection {
    GreenToPeg,
    PegToGreen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrangerResult {
    pub direction: GrangerDirection,
    pub f: f64,
    pub p_value: f64,
    pub df1: usize,
    pub df2: usize,
}

/// F-test on first differences: does adding `lag_order` lags of the cause
/// improve the target's autoregression (with intercept)?
pub fn granger_causality(
    pair: &BivariateSeries,
    lag_order: usize,
    direction: GrangerDirection,
) -> Result<GrangerResult> {
    let p = lag_order;
    if p == 0 {
        return Err(Error::invalid("Granger lag order must be positive"));
    }
    let needed = 10 * p + 21;
    if pair.len() < needed {
        return Err(Error::InsufficientData {
            what: "Granger causality",
            needed,
            got: pair.len(),
        });
    }
    let diff = |v: &[f64]| -> Vec<f64> { v.windows(2).map(|w| w[1] - w[0]).collect() };
    let (target, cause) = match direction {
        GrangerDirection::GreenToPeg => (diff(pair.peg()), diff(pair.green())),
        GrangerDirection::PegToGreen => (diff(pair.green()), diff(pair.peg())),
    };
    let m = target.len();
    let rows = m - p;
    let mut unrestricted = Matrix::zeros(rows, 1 + 2 * p);
    let mut restricted = Matrix::zeros(rows, 1 + p);
    let mut y = Matrix::zeros(rows, 1);
    for (r, t) in (p..m).enumerate() {
        y[(r, 0)] = target[t];
        unrestricted[(r, 0)] = 1.0;
        restricted[(r, 0)] = 1.0;
        for i in 1..=p {
            unrestricted[(r, i)] = target[t - i];
            restricted[(r, i)] = target[t - i];
            unrestricted[(r, p + i)] = cause[t - i];
        }
    }
    let rss_u = ols(&unrestricted, &y)?.rss(0);
    let rss_r = ols(&restricted, &y)?.rss(0);
    let df1 = p;
    let df2 = rows - (1 + 2 * p);
    if !(rss_u > 0.0) {
        return Err(Error::Degenerate("unrestricted Granger regression fits exactly".into()));
    }
    let f = ((rss_r - rss_u).max(0.0) / df1 as f64) / (rss_u / df2 as f64);
    let p_value = sf(
        Distribution::F {
            df1: df1 as f64,
            df2: df2 as f64,
        },
        f,
    )?;
    Ok(GrangerResult {
        direction,
        f,
        p_value,
        df1,
        df2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceBreak {
    pub break_date: NaiveDate,
    /// s²_post / s²_pre.
    pub f: f64,
    /// Two-sided p-value against F(n_post − 1, n_pre − 1).
    pub p_value: f64,
    pub variance_ratio: f64,
    pub n_pre: usize,
    pub n_post: usize,
}

/// Minimum observations on each side of a variance break.
pub const MIN_SEGMENT: usize = 30;

/// Two-sample variance F-test; the break date opens the post segment.
pub fn variance_break_test(residuals: &TimeSeries, break_date: NaiveDate) -> Result<VarianceBreak> {
    let split = residuals.dates().partition_point(|d| *d < break_date);
    variance_break_at(residuals, split)
}

fn variance_break_at(residuals: &TimeSeries, split: usize) -> Result<VarianceBreak> {
    let v = residuals.values();
    let (pre, post) = v.split_at(split);
    if pre.len() < MIN_SEGMENT || post.len() < MIN_SEGMENT {
        return Err(Error::InsufficientData {
            what: "variance break segment",
            needed: MIN_SEGMENT,
            got: pre.len().min(post.len()),
        });
    }
    let s_pre = sample_variance(pre);
    let s_post = sample_variance(post);
    if !(s_pre > 0.0) {
        return Err(Error::Degenerate("pre-break segment has zero variance".into()));
    }
    let f = s_post / s_pre;
    let dist = Distribution::F {
        df1: (post.len() - 1) as f64,
        df2: (pre.len() - 1) as f64,
    };
    let lower = cdf(dist, f)?;
    let upper = sf(dist, f)?;
    Ok(VarianceBreak {
        break_date: residuals.dates()[split],
        f,
        p_value: (2.0 * lower.min(upper)).min(1.0),
        variance_ratio: f,
        n_pre: pre.len(),
        n_post: post.len(),
    })
}

/// Break date maximizing the F statistic over the interior, trimming
/// `trim` of the sample at each end.
pub fn find_variance_break(residuals: &TimeSeries, trim: f64) -> Result<VarianceBreak> {
    let n = residuals.len();
    let lo = ((n as f64 * trim).ceil() as usize).max(MIN_SEGMENT);
    let hi = (n - (n as f64 * trim).ceil() as usize).min(n.saturating_sub(MIN_SEGMENT));
    if lo > hi {
        return Err(Error::InsufficientData {
            what: "variance break search",
            needed: 2 * MIN_SEGMENT,
            got: n,
        });
    }
    let mut best: Option<VarianceBreak> = None;
    for split in lo..=hi {
        let b = variance_break_at(residuals, split)?;
        if best.as_ref().is_none_or(|cur| b.f > cur.f) {
            best = Some(b);
        }
    }
    Ok(best.expect("non-empty search grid"))
}
