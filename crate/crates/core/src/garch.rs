//! GARCH(1,1) quasi-maximum-likelihood estimation and variance forecasting.
//!
//! σ²_t = ω + a·ε²_{t−1} + b·σ²_{t−1}, with σ²_1 set to the sample variance of
//! the residuals. The optimizer works on residuals scaled to unit variance
//! and on (ω, a + b, a/(a + b)), so the persistence ceiling is a plain box
//! bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::minimize_default;
use crate::series::{mean, sample_variance, TimeSeries};

/// Upper bound on a + b during estimation.
pub const PERSISTENCE_CEILING: f64 = 0.9999;
pub const MIN_OBSERVATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub a: f64,
    pub b: f64,
}

impl GarchParams {
    pub fn persistence(&self) -> f64 {
        self.a + self.b
    }

    pub fn unconditional_variance(&self) -> Option<f64> {
        let p = self.persistence();
        (p < 1.0).then(|| self.omega / (1.0 - p))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !(self.a >= 0.0) || !(self.b >= 0.0) {
            return Err(Error::invalid(format!(
                "GARCH parameters need ω > 0 and a, b ≥ 0: {self:?}"
            )));
        }
        Ok(())
    }

    /// One step of the variance recursion.
    pub fn next_variance(&self, prev_residual: f64, prev_variance: f64) -> f64 {
        self.omega + self.a * prev_residual * prev_residual + self.b * prev_variance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchModel {
    pub omega: f64,
    pub a: f64,
    pub b: f64,
    pub persistence: f64,
    pub log_likelihood: f64,
    /// Log-likelihood of the constant-variance model (sample variance, 0, 0).
    pub null_log_likelihood: f64,
    pub conditional_variance: TimeSeries,
    pub unconditional_variance: Option<f64>,
    /// σ²_{T+1}, the first out-of-sample variance.
    pub next_variance: f64,
    pub converged: bool,
    /// Persistence pinned at the estimation ceiling.
    pub at_ceiling: bool,
}

impl GarchModel {
    pub fn params(&self) -> GarchParams {
        GarchParams {
            omega: self.omega,
            a: self.a,
            b: self.b,
        }
    }

    /// Builds a model from fixed parameters by running the recursion over `residuals`.
    pub fn from_params(params: GarchParams, residuals: &TimeSeries) -> Result<Self> {
        params.validate()?;
        let eps = residuals.values();
        if eps.len() < 2 {
            return Err(Error::InsufficientData {
                what: "GARCH recursion",
                needed: 2,
                got: eps.len(),
            });
        }
        let init = sample_variance(eps);
        let init = if init > 0.0 { init } else { params.omega };
        let path = variance_path(params, eps, init);
        let last = *path.last().unwrap();
        let next_variance = params.next_variance(*eps.last().unwrap(), last);
        let log_likelihood = log_likelihood(eps, &path);
        let null_log_likelihood = log_likelihood_constant(eps, init);
        Ok(Self {
            omega: params.omega,
            a: params.a,
            b: params.b,
            persistence: params.persistence(),
            log_likelihood,
            null_log_likelihood,
            conditional_variance: TimeSeries::new(residuals.dates().to_vec(), path)?,
            unconditional_variance: params.unconditional_variance(),
            next_variance,
            converged: true,
            at_ceiling: params.persistence() >= PERSISTENCE_CEILING - 1e-9,
        })
    }
}

/// σ²_t path for t = 1..n starting from `initial`.
pub fn variance_path(params: GarchParams, residuals: &[f64], initial: f64) -> Vec<f64> {
    let mut path = Vec::with_capacity(residuals.len());
    let mut v = initial;
    path.push(v);
    for e in &residuals[..residuals.len() - 1] {
        v = params.next_variance(*e, v);
        path.push(v);
    }
    path
}

/// Gaussian log-likelihood without the 2π constant: −½Σ(ln σ²_t + ε²_t/σ²_t).
pub fn log_likelihood(residuals: &[f64], variances: &[f64]) -> f64 {
    -0.5 * residuals
        .iter()
        .zip(variances)
        .map(|(e, v)| v.ln() + e * e / v)
        .sum::<f64>()
}

fn log_likelihood_constant(residuals: &[f64], variance: f64) -> f64 {
    -0.5 * residuals
        .iter()
        .map(|e| variance.ln() + e * e / variance)
        .sum::<f64>()
}

fn scaled_negative_log_likelihood(theta: &[f64], z: &[f64]) -> f64 {
    let (omega, p, s) = (theta[0], theta[1], theta[2]);
    let a = p * s;
    let b = p * (1.0 - s);
    let mut v = 1.0;
    let mut nll = 0.0;
    for (t, e) in z.iter().enumerate() {
        if t > 0 {
            let prev = z[t - 1];
            v = omega + a * prev * prev + b * v;
        }
        if !(v > 0.0) {
            return f64::INFINITY;
        }
        nll += v.ln() + e * e / v;
    }
    0.5 * nll
}

/// Fits GARCH(1,1) to mean-centred residuals.
pub fn fit_garch(residuals: &TimeSeries) -> Result<GarchModel> {
    let eps = residuals.values();
    let n = eps.len();
    if n < MIN_OBSERVATIONS {
        return Err(Error::InsufficientData {
            what: "GARCH fit",
            needed: MIN_OBSERVATIONS,
            got: n,
        });
    }
    let var = sample_variance(eps);
    if !(var > 0.0) {
        return Err(Error::Degenerate("GARCH fit on constant residuals".into()));
    }
    let sd = var.sqrt();
    if mean(eps).abs() > 0.1 * sd {
        return Err(Error::invalid(format!(
            "residuals must be mean-centred: mean {} exceeds 0.1 sd ({})",
            mean(eps),
            0.1 * sd
        )));
    }
    let z: Vec<f64> = eps.iter().map(|e| e / sd).collect();
    let objective = |theta: &[f64]| scaled_negative_log_likelihood(theta, &z);
    let lower = [1e-8, 0.0, 0.0];
    let upper = [10.0, PERSISTENCE_CEILING, 1.0];

    let starts: [[f64; 3]; 3] = [[0.05, 0.95, 0.1], [0.2, 0.8, 0.25], [0.5, 0.5, 0.5]];
    let mut best = None;
    for start in &starts {
        let m = minimize_default(objective, start, &lower, &upper)?;
        if best.as_ref().is_none_or(|b: &crate::numerics::Minimum| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    let (omega_z, p, s) = (best.argmin[0], best.argmin[1], best.argmin[2]);

    let fitted = GarchParams {
        omega: omega_z * var,
        a: p * s,
        b: p * (1.0 - s),
    };
    let null = GarchParams {
        omega: var,
        a: 0.0,
        b: 0.0,
    };
    let mut model = GarchModel::from_params(fitted, residuals)?;
    model.converged = best.converged;
    // The constant-variance model is always admissible; never report worse.
    if model.log_likelihood < model.null_log_likelihood {
        let converged = model.converged;
        model = GarchModel::from_params(null, residuals)?;
        model.converged = converged;
    }
    Ok(model)
}

/// √σ²_t aligned to the residual dates.
pub fn conditional_volatility(model: &GarchModel) -> TimeSeries {
    model
        .conditional_variance
        .map(f64::sqrt)
        .expect("variance path is positive and finite")
}

/// σ²_{T+h} for h = 1..=H: v₁ = σ²_{T+1}, v_h = ω + (a + b)·v_{h−1}.
pub fn forecast_variance(model: &GarchModel, horizon_days: usize) -> Vec<f64> {
    let p = model.persistence;
    let mut out = Vec::with_capacity(horizon_days);
    let mut v = model.next_variance;
    for h in 0..horizon_days {
        if h > 0 {
            v = model.omega + p * v;
        }
        out.push(v);
    }
    out
}

/// Draws a GARCH(1,1) sample path of length `n` from standard normal shocks.
pub fn simulate_garch(params: GarchParams, shocks: &[f64]) -> Vec<f64> {
    let mut v = params
        .unconditional_variance()
        .unwrap_or(params.omega / (1.0 - PERSISTENCE_CEILING));
    let mut out = Vec::with_capacity(shocks.len());
    for z in shocks {
        let e = v.sqrt() * z;
        out.push(e);
        v = params.next_variance(e, v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::daily_dates;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn ts(values: Vec<f64>) -> TimeSeries {
        let start = NaiveDate::from_ymd_opt(2025, 1, 1).unwrap();
        TimeSeries::new(daily_dates(start, values.len()), values).unwrap()
    }

    fn shocks(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn centred(mut v: Vec<f64>) -> Vec<f64> {
        let m = mean(&v);
        v.iter_mut().for_each(|x| *x -= m);
        v
    }

    #[test]
    fn recursion_step() {
        let p = GarchParams { omega: 0.1, a: 0.2, b: 0.7 };
        assert!((p.next_variance(1.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn forecast_hand_iterated() {
        let r = ts(centred(shocks(1, 200)));
        let mut m = GarchModel::from_params(GarchParams { omega: 0.05, a: 0.10, b: 0.85 }, &r).unwrap();
        m.next_variance = 2.0;
        let f = forecast_variance(&m, 3);
        assert_eq!(f[0], 2.0);
        assert!((f[1] - 1.95).abs() < 1e-12);
        assert!((f[2] - 1.9025).abs() < 1e-12);
    }

    #[test]
    fn memoryless_forecast_is_omega() {
        let r = ts(centred(shocks(2, 200)));
        let m = GarchModel::from_params(GarchParams { omega: 0.3, a: 0.0, b: 0.0 }, &r).unwrap();
        assert!(forecast_variance(&m, 10).iter().all(|v| *v == 0.3));
        let vol = conditional_volatility(&m);
        assert!(vol.values()[1..].iter().all(|s| *s == 0.3f64.sqrt()));
    }

    #[test]
    fn forecast_decreases_from_above() {
        let r = ts(centred(shocks(3, 200)));
        let mut m = GarchModel::from_params(GarchParams { omega: 0.02, a: 0.08, b: 0.90 }, &r).unwrap();
        m.next_variance = 5.0;
        let f = forecast_variance(&m, 50);
        let target = 0.02 / 0.02;
        assert!(f.windows(2).all(|w| w[1] < w[0] && w[1] > target));
    }

    #[test]
    fn volatility_path_is_reproducible() {
        let r = ts(centred(shocks(4, 300)));
        let m = GarchModel::from_params(GarchParams { omega: 0.05, a: 0.1, b: 0.85 }, &r).unwrap();
        let again = variance_path(m.params(), r.values(), sample_variance(r.values()));
        assert_eq!(again, m.conditional_variance.values());
    }

    #[test]
    fn large_shock_raises_volatility() {
        let p = GarchParams { omega: 0.05, a: 0.1, b: 0.85 };
        let mut z = shocks(5, 400);
        for i in [100, 200, 300] {
            z[i] = 8.0;
        }
        let e = centred(simulate_garch(p, &z));
        let m = GarchModel::from_params(p, &ts(e.clone())).unwrap();
        let v = m.conditional_variance.values();
        for t in 1..e.len() - 1 {
            // σ²_{t+1} − σ²_t = ω + a ε²_t − (1 − b) σ²_t
            let boundary = v[t] * (1.0 - p.b) / p.a - p.omega / p.a;
            if e[t] * e[t] > boundary {
                assert!(v[t + 1] > v[t]);
            }
        }
        assert!(v[101] > v[100] && v[201] > v[200] && v[301] > v[300]);
    }

    #[test]
    fn recovers_persistence() {
        let p = GarchParams { omega: 0.05, a: 0.10, b: 0.85 };
        let e = centred(simulate_garch(p, &shocks(6, 5000)));
        let m = fit_garch(&ts(e)).unwrap();
        assert!((m.persistence - 0.95).abs() < 0.05, "{m:?}");
        assert!(m.log_likelihood >= m.null_log_likelihood);
        assert!(m.persistence <= PERSISTENCE_CEILING);
    }

    #[test]
    fn sign_flip_gives_identical_fit() {
        let p = GarchParams { omega: 0.05, a: 0.10, b: 0.85 };
        let e = centred(simulate_garch(p, &shocks(7, 1500)));
        let neg: Vec<f64> = e.iter().map(|x| -x).collect();
        let m1 = fit_garch(&ts(e)).unwrap();
        let m2 = fit_garch(&ts(neg)).unwrap();
        assert_eq!((m1.omega, m1.a, m1.b), (m2.omega, m2.a, m2.b));
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit_garch(&ts(vec![0.0; 200])), Err(Error::Degenerate(_))));
        assert!(fit_garch(&ts(shocks(8, 50))).is_err());
        let shifted: Vec<f64> = shocks(9, 300).iter().map(|x| x + 5.0).collect();
        assert!(fit_garch(&ts(shifted)).is_err());
    }
}
