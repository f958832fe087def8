use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{VecmModel, GREEN, PEG};
use crate::error::{Error, Result};
use crate::garch::{forecast_variance, GarchModel};
use crate::series::{pearson, quantile_sorted};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSettings {
    pub horizon_days: usize,
    pub paths: usize,
    pub thresholds: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub seed: u64,
}

impl Default for ForecastSettings {
    fn default() -> Self {
        Self {
            horizon_days: 10,
            paths: 10_000,
            thresholds: vec![0.995],
            quantiles: vec![0.05, 0.25, 0.5, 0.75, 0.95],
            seed: 0,
        }
    }
}

pub const MIN_PATHS: usize = 1000;

/// Monte-Carlo fan of the peg level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastFan {
    /// 1..=H.
    pub horizons: Vec<usize>,
    /// Mean peg level across paths.
    pub point: Vec<f64>,
    pub quantiles: Vec<f64>,
    /// `quantile_bands[q][h]`.
    pub quantile_bands: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
    /// `prob_below[k][h]`: fraction of paths strictly below `thresholds[k]`.
    pub prob_below: Vec<Vec<f64>>,
    /// Residual correlation used to couple the two equations.
    pub innovation_correlation: f64,
    pub paths: usize,
    pub seed: u64,
}

/// Noise-free iteration of the fitted VECM from the end of the sample.
pub fn deterministic_path(model: &VecmModel, horizon_days: usize) -> Vec<[f64; 2]> {
    simulate_path(model, horizon_days, |_| [0.0, 0.0])
}

fn simulate_path(
    model: &VecmModel,
    horizon_days: usize,
    mut innovation: impl FnMut(usize) -> [f64; 2],
) -> Vec<[f64; 2]> {
    let p = model.lag_order;
    let mut levels: Vec<[f64; 2]> = model.final_levels.clone();
    let mut out = Vec::with_capacity(horizon_days);
    for h in 0..horizon_days {
        let n = levels.len();
        let y_prev = levels[n - 1];
        // Δy_{t−1}..Δy_{t−p+1}, most recent first.
        let lagged: Vec<[f64; 2]> = (1..p)
            .map(|i| {
                let a = levels[n - i];
                let b = levels[n - i - 1];
                [a[0] - b[0], a[1] - b[1]]
            })
            .collect();
        let mut dy = model.expected_change(y_prev, &lagged);
        let e = innovation(h);
        dy[PEG] += e[PEG];
        dy[GREEN] += e[GREEN];
        let next = [y_prev[PEG] + dy[PEG], y_prev[GREEN] + dy[GREEN]];
        levels.push(next);
        out.push(next);
    }
    out
}

/// Mean that is exact when all inputs are equal.
fn stable_mean(x: &[f64]) -> f64 {
    let first = x[0];
    first + x.iter().map(|v| v - first).sum::<f64>() / x.len() as f64
}

/// Simulates `paths` trajectories with GARCH-forecast innovation variances
/// coupled through the standardized residual correlation. Each path draws
/// from its own ChaCha stream of `seed`, so output does not depend on thread
/// scheduling.
pub fn forecast(
    model: &VecmModel,
    peg_garch: &GarchModel,
    green_garch: &GarchModel,
    settings: &ForecastSettings,
) -> Result<ForecastFan> {
    let h_max = settings.horizon_days;
    if h_max == 0 {
        return Err(Error::invalid("forecast horizon must be at least 1"));
    }
    if settings.paths < MIN_PATHS {
        return Err(Error::invalid(format!(
            "forecast needs at least {MIN_PATHS} paths, got {}",
            settings.paths
        )));
    }
    if settings.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::invalid("quantiles must lie in [0, 1]"));
    }
    for g in [peg_garch, green_garch] {
        if !(g.omega > 0.0) {
            return Err(Error::Degenerate(format!("GARCH ω = {} is not positive", g.omega)));
        }
    }
    let n_res = model.residuals.len();
    if peg_garch.conditional_variance.len() != n_res || green_garch.conditional_variance.len() != n_res {
        return Err(Error::invalid("GARCH models were not fitted on the VECM residual sample"));
    }

    let sd_peg = peg_garch.conditional_variance.values().iter().map(|v| v.sqrt());
    let z_peg: Vec<f64> = model.residuals.peg().iter().zip(sd_peg).map(|(e, s)| e / s).collect();
    let sd_green = green_garch.conditional_variance.values().iter().map(|v| v.sqrt());
    let z_green: Vec<f64> = model.residuals.green().iter().zip(sd_green).map(|(e, s)| e / s).collect();
    let rho = pearson(&z_peg, &z_green).ok_or(Error::UndefinedCorrelation)?;
    let rho_c = (1.0 - rho * rho).max(0.0).sqrt();

    let vol_peg: Vec<f64> = forecast_variance(peg_garch, h_max).iter().map(|v| v.sqrt()).collect();
    let vol_green: Vec<f64> = forecast_variance(green_garch, h_max).iter().map(|v| v.sqrt()).collect();

    let peg_paths: Vec<Vec<f64>> = (0..settings.paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(path as u64);
            simulate_path(model, h_max, |h| {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                // Green ordered first, peg loads on it through ρ.
                [vol_peg[h] * (rho * z1 + rho_c * z2), vol_green[h] * z1]
            })
            .into_iter()
            .map(|y| y[PEG])
            .collect()
        })
        .collect();

    let mut point = Vec::with_capacity(h_max);
    let mut quantile_bands = vec![Vec::with_capacity(h_max); settings.quantiles.len()];
    let mut prob_below = vec![Vec::with_capacity(h_max); settings.thresholds.len()];
    let mut column = vec![0.0; settings.paths];
    for h in 0..h_max {
        for (c, path) in column.iter_mut().zip(&peg_paths) {
            *c = path[h];
        }
        point.push(stable_mean(&column));
        column.sort_by(f64::total_cmp);
        for (band, q) in quantile_bands.iter_mut().zip(&settings.quantiles) {
            band.push(quantile_sorted(&column, *q));
        }
        for (pb, thr) in prob_below.iter_mut().zip(&settings.thresholds) {
            let below = column.partition_point(|v| v < thr);
            pb.push(below as f64 / settings.paths as f64);
        }
    }

    Ok(ForecastFan {
        horizons: (1..=h_max).collect(),
        point,
        quantiles: settings.quantiles.clone(),
        quantile_bands,
        thresholds: settings.thresholds.clone(),
        prob_below,
        innovation_correlation: rho,
        paths: settings.paths,
        seed: settings.seed,
    })
}
