//! Date-indexed series and the descriptive statistics used throughout the
//! pipeline: differencing, rolling correlation and volatility, ACF/CCF,
//! Ljung-Box, kernel density, normal Q-Q and sample moments.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{normal_quantile, sf, Distribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

fn check_dates(dates: &[NaiveDate]) -> Result<()> {
    if let Some(i) = dates.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "dates must be strictly increasing: {} followed by {}",
            dates[i],
            dates[i + 1]
        )));
    }
    Ok(())
}

impl TimeSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::invalid("dates and values differ in length"));
        }
        if values.is_empty() {
            return Err(Error::invalid("a series needs at least one observation"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("value at {}", dates[i])));
        }
        check_dates(&dates)?;
        Ok(Self { dates, values })
    }

    /// Consecutive daily dates starting at `start`.
    pub fn daily(start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        let dates = daily_dates(start, values.len());
        Self::new(dates, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sub-series over an index range.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        Self::new(self.dates[range.clone()].to_vec(), self.values[range].to_vec())
    }

    /// Applies `f` to every value, keeping the date axis.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.dates.clone(), self.values.iter().map(|v| f(*v)).collect())
    }
}

pub fn daily_dates(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    start.iter_days().take(n).collect()
}

/// Peg and reserve-index observations on a shared date axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateSeries {
    dates: Vec<NaiveDate>,
    peg: Vec<f64>,
    green: Vec<f64>,
}

impl BivariateSeries {
    pub fn new(dates: Vec<NaiveDate>, peg: Vec<f64>, green: Vec<f64>) -> Result<Self> {
        if dates.len() != peg.len() || dates.len() != green.len() {
            return Err(Error::invalid("bivariate components differ in length"));
        }
        if dates.len() < 2 {
            return Err(Error::InsufficientData {
                what: "bivariate series",
                needed: 2,
                got: dates.len(),
            });
        }
        if peg.iter().chain(&green).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("bivariate observation".into()));
        }
        check_dates(&dates)?;
        Ok(Self { dates, peg, green })
    }

    /// Aligns two series; their date axes must be identical.
    pub fn from_series(peg: &TimeSeries, green: &TimeSeries) -> Result<Self> {
        if peg.dates() != green.dates() {
            return Err(Error::invalid("peg and green series have different date axes"));
        }
        Self::new(peg.dates.clone(), peg.values.clone(), green.values.clone())
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn peg(&self) -> &[f64] {
        &self.peg
    }

    pub fn green(&self) -> &[f64] {
        &self.green
    }

    pub fn peg_series(&self) -> TimeSeries {
        TimeSeries {
            dates: self.dates.clone(),
            values: self.peg.clone(),
        }
    }

    pub fn green_series(&self) -> TimeSeries {
        TimeSeries {
            dates: self.dates.clone(),
            values: self.green.clone(),
        }
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        Self::new(
            self.dates[range.clone()].to_vec(),
            self.peg[range.clone()].to_vec(),
            self.green[range].to_vec(),
        )
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(
            self.dates.clone(),
            self.peg.iter().map(|v| v * k).collect(),
            self.green.iter().map(|v| v * k).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub n: usize,
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the n − 1 denominator.
pub(crate) fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Pearson correlation, `None` when either input has zero dispersion.
pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Linear-interpolated empirical quantile (type 7) of an ascending slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub(crate) fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Δ^order applied to the values; dates are the trailing date of each window.
pub fn difference(series: &TimeSeries, order: usize) -> Result<TimeSeries> {
    if order == 0 {
        return Err(Error::invalid("difference order must be positive"));
    }
    if order >= series.len() {
        return Err(Error::invalid(format!(
            "difference order {order} must be below series length {}",
            series.len()
        )));
    }
    let mut values = series.values.clone();
    for _ in 0..order {
        values = values.windows(2).map(|w| w[1] - w[0]).collect();
    }
    TimeSeries::new(series.dates[order..].to_vec(), values)
}

/// Rolling statistic whose windows may be undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingCorrelation {
    pub dates: Vec<NaiveDate>,
    /// `None` marks a window where either component was constant.
    pub values: Vec<Option<f64>>,
}

impl RollingCorrelation {
    pub fn undefined_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }
}

/// Trailing-window Pearson correlation between the two components.
pub fn rolling_correlation(pair: &BivariateSeries, window: usize) -> Result<RollingCorrelation> {
    if window < 3 || window > pair.len() {
        return Err(Error::invalid(format!(
            "rolling correlation window {window} must be in [3, {}]",
            pair.len()
        )));
    }
    let n = pair.len();
    let values = (window..=n)
        .map(|end| pearson(&pair.peg[end - window..end], &pair.green[end - window..end]))
        .collect();
    Ok(RollingCorrelation {
        dates: pair.dates[window - 1..].to_vec(),
        values,
    })
}

/// Trailing-window sample standard deviation. The caller differences first.
pub fn rolling_volatility(series: &TimeSeries, window: usize) -> Result<TimeSeries> {
    if window < 2 {
        return Err(Error::invalid("rolling volatility window must be at least 2"));
    }
    if window > series.len() {
        return Err(Error::invalid(format!(
            "rolling volatility window {window} exceeds series length {}",
            series.len()
        )));
    }
    let values = series
        .values
        .windows(window)
        .map(|w| sample_variance(w).max(0.0).sqrt())
        .collect();
    TimeSeries::new(series.dates[window - 1..].to_vec(), values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acf {
    /// Correlations for lags 0..=max_lag.
    pub values: Vec<f64>,
    /// 1.96/√n.
    pub band: f64,
}

impl Acf {
    pub fn outside_band(&self) -> usize {
        self.values[1..].iter().filter(|r| r.abs() > self.band).count()
    }
}

fn autocorrelations(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let m = mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let c0: f64 = d.iter().map(|v| v * v).sum();
    if c0 <= 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                d[k..].iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / c0
            }
        })
        .collect())
}

pub fn acf(series: &TimeSeries, max_lag: usize) -> Result<Acf> {
    let n = series.len();
    if max_lag == 0 || 2 * max_lag >= n {
        return Err(Error::invalid(format!(
            "acf max_lag {max_lag} must be positive and below n/2 = {}",
            n / 2
        )));
    }
    Ok(Acf {
        values: autocorrelations(&series.values, max_lag)?,
        band: 1.96 / (n as f64).sqrt(),
    })
}

/// Cross-correlation with lags in `-max_lag..=max_lag`.
///
/// Lag `k` pairs `x[t + k]` with `y[t]`, so a peak at a negative lag means
/// `x` leads `y`.
pub fn ccf(x: &TimeSeries, y: &TimeSeries, max_lag: usize) -> Result<Vec<(i64, f64)>> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::invalid("ccf inputs differ in length"));
    }
    if max_lag == 0 || 2 * max_lag >= n {
        return Err(Error::invalid(format!(
            "ccf max_lag {max_lag} must be positive and below n/2"
        )));
    }
    let mx = mean(&x.values);
    let my = mean(&y.values);
    let dx: Vec<f64> = x.values.iter().map(|v| v - mx).collect();
    let dy: Vec<f64> = y.values.iter().map(|v| v - my).collect();
    let sxx: f64 = dx.iter().map(|v| v * v).sum();
    let syy: f64 = dy.iter().map(|v| v * v).sum();
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    let norm = (sxx * syy).sqrt();
    let m = max_lag as i64;
    Ok((-m..=m)
        .map(|k| {
            let s: f64 = if k >= 0 {
                let k = k as usize;
                dx[k..].iter().zip(&dy[..n - k]).map(|(a, b)| a * b).sum()
            } else {
                let k = (-k) as usize;
                dx[..n - k].iter().zip(&dy[k..]).map(|(a, b)| a * b).sum()
            };
            (k, s / norm)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LjungBox {
    pub q: f64,
    pub p_value: f64,
    pub lags: usize,
    pub df: usize,
}

/// Q = n(n+2) Σ ρ_k²/(n−k), referred to χ²(lags − fitted_params).
pub fn ljung_box(series: &TimeSeries, lags: usize, fitted_params: usize) -> Result<LjungBox> {
    if lags <= fitted_params {
        return Err(Error::invalid(format!(
            "ljung-box needs lags ({lags}) > fitted parameters ({fitted_params})"
        )));
    }
    let n = series.len();
    if 2 * lags >= n {
        return Err(Error::invalid(format!("ljung-box lags {lags} must be below n/2")));
    }
    let rho = autocorrelations(&series.values, lags)?;
    let nf = n as f64;
    let q = nf * (nf + 2.0)
        * (1..=lags)
            .map(|k| rho[k] * rho[k] / (nf - k as f64))
            .sum::<f64>();
    let df = lags - fitted_params;
    let p_value = sf(Distribution::ChiSquare { df: df as f64 }, q)?;
    Ok(LjungBox { q, p_value, lags, df })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDensity {
    pub bandwidth: f64,
    pub points: Vec<(f64, f64)>,
}

impl KernelDensity {
    pub fn trapezoid_integral(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum()
    }
}

/// Silverman's rule: 0.9·min(σ, IQR/1.34)·n^(−1/5); falls back to σ when IQR is 0.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    let n = values.len();
    let sd = sample_variance(values).max(0.0).sqrt();
    if sd <= 0.0 {
        return Err(Error::Degenerate("kernel density of a constant series".into()));
    }
    let s = sorted(values);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// Minimum grid size giving spacing no coarser than the bandwidth.
pub fn density_grid_points(series: &TimeSeries) -> Result<usize> {
    let h = silverman_bandwidth(&series.values)?;
    let (lo, hi) = min_max(&series.values);
    Ok(((hi - lo + 6.0 * h) / h).ceil() as usize + 1)
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}

/// Gaussian kernel density on an even grid over [min − 3h, max + 3h].
///
/// The grid must be at least as fine as the bandwidth, which keeps the
/// trapezoid integral within 1% of one; coarser grids are rejected.
pub fn kernel_density(series: &TimeSeries, grid_points: usize) -> Result<KernelDensity> {
    let n = series.len();
    if n < 10 {
        return Err(Error::InsufficientData {
            what: "kernel density",
            needed: 10,
            got: n,
        });
    }
    let h = silverman_bandwidth(&series.values)?;
    let (lo, hi) = min_max(&series.values);
    let a = lo - 3.0 * h;
    let b = hi + 3.0 * h;
    if grid_points < 2 {
        return Err(Error::invalid("kernel density needs at least 2 grid points"));
    }
    let step = (b - a) / (grid_points - 1) as f64;
    if step > h {
        return Err(Error::invalid(format!(
            "grid of {grid_points} points is coarser than the bandwidth; need at least {}",
            ((b - a) / h).ceil() as usize + 1
        )));
    }
    let norm = 1.0 / (n as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let cutoff = 8.0 * h;
    let s = sorted(&series.values);
    let points = (0..grid_points)
        .map(|i| {
            let x = if i == grid_points - 1 { b } else { a + i as f64 * step };
            let start = s.partition_point(|v| *v < x - cutoff);
            let end = s.partition_point(|v| *v <= x + cutoff);
            let d: f64 = s[start..end]
                .iter()
                .map(|v| {
                    let u = (x - v) / h;
                    (-0.5 * u * u).exp()
                })
                .sum();
            (x, d * norm)
        })
        .collect();
    Ok(KernelDensity { bandwidth: h, points })
}

/// Normal Q-Q pairs `(theoretical, empirical)`.
///
/// Empirical quantiles are the sorted values centred on the sample mean and
/// scaled by the least-squares slope of the centred order statistics on the
/// theoretical quantiles, so an exact normal-quantile sample maps onto the
/// 45-degree line. Theoretical quantiles use plotting positions (i − 0.5)/n.
pub fn qq_normal(series: &TimeSeries) -> Result<Vec<(f64, f64)>> {
    let n = series.len();
    if n < 10 {
        return Err(Error::InsufficientData {
            what: "normal Q-Q",
            needed: 10,
            got: n,
        });
    }
    if sample_variance(&series.values) <= 0.0 {
        return Err(Error::Degenerate("Q-Q plot of a zero-variance series".into()));
    }
    let m = mean(&series.values);
    let s = sorted(&series.values);
    let theo: Vec<f64> = (1..=n)
        .map(|i| normal_quantile((i as f64 - 0.5) / n as f64))
        .collect();
    let num: f64 = s.iter().zip(&theo).map(|(x, q)| (x - m) * q).sum();
    let den: f64 = theo.iter().map(|q| q * q).sum();
    let scale = num / den;
    if scale <= 0.0 {
        return Err(Error::Degenerate("non-positive Q-Q scale".into()));
    }
    Ok(theo
        .into_iter()
        .zip(s)
        .map(|(q, x)| (q, (x - m) / scale))
        .collect())
}

/// Sample moments; skewness and kurtosis use the biased ratios m3/m2^1.5 and m4/m2².
pub fn descriptive_stats(series: &TimeSeries) -> Result<DescriptiveStats> {
    let n = series.len();
    if n < 4 {
        return Err(Error::InsufficientData {
            what: "descriptive statistics",
            needed: 4,
            got: n,
        });
    }
    let x = &series.values;
    let m = mean(x);
    let nf = n as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let variance = m2 / (nf - 1.0);
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok(DescriptiveStats {
        mean: m,
        variance,
        skewness,
        excess_kurtosis,
        n,
    })
}

/// Observations more than `k_sd` standard deviations from the mean of an
/// estimation window (`estimation` index range). Returns flagged indices.
pub fn flag_anomalies(
    series: &TimeSeries,
    estimation: std::ops::Range<usize>,
    k_sd: f64,
) -> Result<Vec<usize>> {
    if estimation.end > series.len() || estimation.len() < 2 {
        return Err(Error::invalid("anomaly estimation window out of range"));
    }
    let w = &series.values[estimation];
    let m = mean(w);
    let sd = sample_variance(w).sqrt();
    if sd <= 0.0 {
        return Err(Error::Degenerate("anomaly window has zero variance".into()));
    }
    Ok(series
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| (*v - m).abs() > k_sd * sd)
        .map(|(i, _)| i)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution as _, StandardNormal, StudentT};

    fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 1, 1).unwrap()
    }

    fn ts(values: Vec<f64>) -> TimeSeries {
        TimeSeries::daily(start(), values).unwrap()
    }

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn construction_rejects_bad_input() {
        let d = daily_dates(start(), 2);
        assert!(TimeSeries::new(d.clone(), vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeries::new(vec![d[0], d[0]], vec![1.0, 2.0]).is_err());
        assert!(TimeSeries::new(vec![d[1], d[0]], vec![1.0, 2.0]).is_err());
        assert!(TimeSeries::new(vec![], vec![]).is_err());
        assert!(BivariateSeries::new(vec![d[0]], vec![1.0], vec![1.0]).is_err());
        let a = ts(vec![1.0, 2.0]);
        let b = TimeSeries::daily(d[1], vec![1.0, 2.0]).unwrap();
        assert!(BivariateSeries::from_series(&a, &b).is_err());
    }

    #[test]
    fn difference_examples() {
        assert_eq!(difference(&ts(vec![1.0; 4]), 1).unwrap().values(), &[0.0; 3]);
        let s = ts(vec![1.0, 2.0, 4.0, 7.0]);
        assert_eq!(difference(&s, 1).unwrap().values(), &[1.0, 2.0, 3.0]);
        let d2 = difference(&s, 2).unwrap();
        assert_eq!(d2.values(), &[1.0, 1.0]);
        assert_eq!(d2.dates(), &s.dates()[2..]);
        assert!(difference(&s, 4).is_err());
    }

    #[test]
    fn rolling_correlation_identity_and_sign() {
        let x = normals(1, 100);
        let d = daily_dates(start(), 100);
        let same = BivariateSeries::new(d.clone(), x.clone(), x.clone()).unwrap();
        let rc = rolling_correlation(&same, 20).unwrap();
        assert_eq!(rc.values.len(), 81);
        assert!(rc.defined().all(|r| (r - 1.0).abs() < 1e-12));
        let neg = BivariateSeries::new(d, x.clone(), x.iter().map(|v| -v).collect()).unwrap();
        let rc = rolling_correlation(&neg, 20).unwrap();
        assert!(rc.defined().all(|r| (r + 1.0).abs() < 1e-12));
    }

    #[test]
    fn rolling_correlation_flags_constant_windows() {
        let d = daily_dates(start(), 10);
        let mut peg = vec![1.0; 10];
        peg[8] = 0.99;
        let green: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let rc = rolling_correlation(&BivariateSeries::new(d, peg, green).unwrap(), 5).unwrap();
        assert_eq!(rc.values[..4], [None, None, None, None]);
        assert!(rc.values[4].is_some());
        assert_eq!(rc.undefined_count(), 4);
    }

    #[test]
    fn rolling_volatility_examples() {
        let v = rolling_volatility(&ts(vec![0.3; 10]), 4).unwrap();
        assert!(v.values().iter().all(|x| *x == 0.0));
        let alt: Vec<f64> = (0..12).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let v = rolling_volatility(&ts(alt), 4).unwrap();
        assert!(v.values().iter().all(|x| (x - 1.154_700_538_379_251_5).abs() < 1e-12));
        assert!(rolling_volatility(&ts(vec![1.0; 3]), 4).is_err());
    }

    #[test]
    fn acf_lag_zero_and_ar1() {
        let a = acf(&ts(normals(2, 100)), 10).unwrap();
        assert_eq!(a.values[0], 1.0);
        assert!((a.band - 0.196).abs() < 1e-12);
        let e = normals(3, 5000);
        let mut x = vec![0.0; 5000];
        for t in 1..5000 {
            x[t] = 0.9 * x[t - 1] + e[t];
        }
        let a = acf(&ts(x), 5).unwrap();
        assert!((a.values[1] - 0.9).abs() < 0.05);
        assert!(matches!(acf(&ts(vec![2.0; 50]), 5), Err(Error::UndefinedCorrelation)));
    }

    #[test]
    fn ccf_identity_and_shift_convention() {
        let x = normals(4, 500);
        let c = ccf(&ts(x.clone()), &ts(x.clone()), 5).unwrap();
        let (lag, r) = c.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert_eq!(lag, 0);
        assert!((r - 1.0).abs() < 1e-12);
        // y[t] = x[t-2]: x leads y by two.
        let noise = normals(5, 500);
        let y: Vec<f64> = (0..500)
            .map(|t| if t >= 2 { x[t - 2] } else { 0.0 } + 0.1 * noise[t])
            .collect();
        let c = ccf(&ts(x), &ts(y), 5).unwrap();
        let (lag, _) = c.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert_eq!(lag, -2);
    }

    #[test]
    fn ljung_box_zero_autocorrelation_and_errors() {
        // 1,1,-1,-1 repeated has ρ_1 = 0 and ρ_2 = -(n-2)/n; use a sequence
        // with all sample autocorrelations zero instead: a single spike.
        let mut v = vec![0.0; 40];
        v[0] = 1.0;
        v[39] = -1.0;
        let lb = ljung_box(&ts(v.clone()), 5, 0).unwrap();
        assert!(lb.q >= 0.0);
        assert!(ljung_box(&ts(v.clone()), 3, 3).is_err());
        assert!(ljung_box(&ts(v), 25, 0).is_err());
    }

    #[test]
    fn ljung_box_detects_ar1() {
        let e = normals(6, 500);
        let mut x = vec![0.0; 500];
        for t in 1..500 {
            x[t] = 0.5 * x[t - 1] + e[t];
        }
        let lb = ljung_box(&ts(x), 10, 0).unwrap();
        assert!(lb.p_value < 0.01);
    }

    #[test]
    fn kernel_density_normal_peak_and_integral() {
        let s = ts(normals(7, 10_000));
        let kd = kernel_density(&s, density_grid_points(&s).unwrap().max(512)).unwrap();
        let at_zero = kd
            .points
            .iter()
            .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
            .unwrap()
            .1;
        assert!((at_zero - 0.398_942).abs() < 0.03, "{at_zero}");
        assert!((kd.trapezoid_integral() - 1.0).abs() < 0.01);
        assert!(kd.points.iter().all(|p| p.1 >= 0.0));
        let lo = s.values().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((kd.points[0].0 - (lo - 3.0 * kd.bandwidth)).abs() < 1e-12);
    }

    #[test]
    fn kernel_density_symmetric_input() {
        let half = normals(8, 200);
        let v: Vec<f64> = half.iter().chain(half.iter()).enumerate()
            .map(|(i, x)| if i < 200 { *x } else { -x })
            .collect();
        let kd = kernel_density(&ts(v), 801).unwrap();
        let n = kd.points.len();
        for i in 0..n {
            assert!((kd.points[i].1 - kd.points[n - 1 - i].1).abs() < 0.01);
        }
    }

    #[test]
    fn kernel_density_errors() {
        assert!(matches!(kernel_density(&ts(vec![1.0; 20]), 100), Err(Error::Degenerate(_))));
        assert!(kernel_density(&ts(vec![1.0, 2.0]), 100).is_err());
        assert!(kernel_density(&ts(normals(9, 50)), 3).is_err());
    }

    #[test]
    fn qq_exact_quantiles_lie_on_the_line() {
        let n = 200;
        let q: Vec<f64> = (1..=n)
            .map(|i| normal_quantile((i as f64 - 0.5) / n as f64))
            .collect();
        let pairs = qq_normal(&ts(q)).unwrap();
        for (t, e) in pairs {
            assert!((t - e).abs() < 1e-9);
        }
    }

    #[test]
    fn qq_monotone_for_ascending_integers() {
        let pairs = qq_normal(&ts((1..=10).map(f64::from).collect())).unwrap();
        assert!(pairs.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1));
        assert!(qq_normal(&ts(vec![3.0; 12])).is_err());
    }

    #[test]
    fn qq_heavy_tail_falls_below_the_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t3 = StudentT::new(3.0).unwrap();
        let v: Vec<f64> = (0..5000).map(|_| t3.sample(&mut rng)).collect();
        let pairs = qq_normal(&ts(v)).unwrap();
        let decile = &pairs[..500];
        let mean_dev: f64 = decile.iter().map(|(t, e)| e - t).sum::<f64>() / 500.0;
        assert!(mean_dev < 0.0, "{mean_dev}");
        assert!(pairs[..50].iter().all(|(t, e)| e < t));
    }

    #[test]
    fn descriptive_stats_examples() {
        let s = descriptive_stats(&ts(normals(11, 50_000))).unwrap();
        assert!(s.skewness.abs() < 0.05 && s.excess_kurtosis.abs() < 0.1);
        let two: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        assert_eq!(descriptive_stats(&ts(two)).unwrap().skewness, 0.0);
        // Spike: n = 100 zeros plus one 1. Moment oracle: m2 = 100/101²,
        // m4 ≈ 100⁴/101⁵ + ..., kurtosis ≈ 98 > 0.
        let mut spike = vec![0.0; 100];
        spike.push(1.0);
        let k = descriptive_stats(&ts(spike)).unwrap().excess_kurtosis;
        let n = 101.0f64;
        let m = 1.0 / n;
        let m2 = (100.0 * m * m + (1.0 - m).powi(2)) / n;
        let m4 = (100.0 * m.powi(4) + (1.0 - m).powi(4)) / n;
        assert!((k - (m4 / (m2 * m2) - 3.0)).abs() < 1e-9);
        assert!(k > 0.0);
    }

    #[test]
    fn anomaly_flags() {
        let mut v = normals(12, 300);
        v[250] = -12.0;
        let flagged = flag_anomalies(&ts(v), 0..200, 3.0).unwrap();
        assert!(flagged.contains(&250));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn values() -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(-100.0f64..100.0, 30..120)
        }

        proptest! {
            #[test]
            fn double_difference_composes(v in values()) {
                let s = ts(v);
                let a = difference(&difference(&s, 1).unwrap(), 1).unwrap();
                let b = difference(&s, 2).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn ccf_is_antisymmetric_in_lag(x in values(), seed in 0u64..1000) {
                let y = normals(seed, x.len());
                let (sx, sy) = (ts(x), ts(y));
                let xy = ccf(&sx, &sy, 5).unwrap();
                let yx = ccf(&sy, &sx, 5).unwrap();
                for (k, r) in &xy {
                    let (_, r2) = yx.iter().find(|(l, _)| *l == -k).unwrap();
                    prop_assert!((r - r2).abs() < 1e-12);
                    prop_assert!(r.abs() <= 1.0 + 1e-12);
                }
            }

            #[test]
            fn ljung_box_monotone_in_lags(v in values()) {
                let s = ts(v);
                let mut prev = 0.0;
                for lags in 1..(s.len() / 2 - 1).min(12) {
                    let lb = ljung_box(&s, lags, 0).unwrap();
                    prop_assert!(lb.q >= prev);
                    prev = lb.q;
                }
            }

            #[test]
            fn density_normalizes(v in values()) {
                let s = ts(v);
                let kd = kernel_density(&s, density_grid_points(&s).unwrap().max(256)).unwrap();
                prop_assert!((kd.trapezoid_integral() - 1.0).abs() < 0.01);
            }

            #[test]
            fn rolling_correlation_bounded(v in values(), seed in 0u64..1000) {
                let y = normals(seed, v.len());
                let pair = BivariateSeries::new(daily_dates(start(), v.len()), v, y).unwrap();
                let rc = rolling_correlation(&pair, 10).unwrap();
                prop_assert!(rc.defined().all(|r| (-1.0..=1.0).contains(&r)));
            }
        }
    }
}
