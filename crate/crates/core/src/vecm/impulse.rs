use serde::{Deserialize, Serialize};

use super::{VecmModel, GREEN, PEG};
use crate::error::{Error, Result};
use crate::numerics::{spectral_radius, Matrix, STABILITY_MARGIN};

/// Size of the reserve-index shock in residual standard deviations; negative
/// is a drop.
pub const GREEN_SHOCK: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfLife {
    Days(f64),
    NotRecovered,
    /// Zero initial response.
    Undefined,
}

impl HalfLife {
    pub fn days(self) -> Option<f64> {
        match self {
            HalfLife::Days(d) => Some(d),
            HalfLife::NotRecovered | HalfLife::Undefined => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfResult {
    /// 0..=H.
    pub horizons: Vec<usize>,
    /// Peg level response to the orthogonalized green shock.
    pub response: Vec<f64>,
    /// Running prefix sums of `response`.
    pub cumulative: Vec<f64>,
    pub cumulative_impact: f64,
    pub half_life: HalfLife,
    /// Shock size in green residual units.
    pub shock_size: f64,
    pub spectral_radius: f64,
    /// False when the level-VAR companion matrix has an explosive root.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FevdResult {
    /// 1..=H.
    pub horizons: Vec<usize>,
    pub share_green: Vec<f64>,
    pub share_own: Vec<f64>,
    pub spectral_radius: f64,
    pub converged: bool,
}

/// Level-VAR coefficients A_1..A_p implied by the VECM.
fn level_var(model: &VecmModel) -> Vec<Matrix> {
    let p = model.lag_order;
    let pi = model.pi();
    let g = |i: usize| -> Matrix {
        let m = model.gamma_matrices[i - 1];
        Matrix::from_rows(&[&m[0], &m[1]]).expect("finite")
    };
    let mut a = Vec::with_capacity(p);
    let mut a1 = Matrix::identity(2);
    for r in 0..2 {
        for c in 0..2 {
            a1[(r, c)] += pi[r][c];
        }
    }
    if p > 1 {
        a1 = &a1 + &g(1);
    }
    a.push(a1);
    for i in 2..p {
        a.push(&g(i) - &g(i - 1));
    }
    if p > 1 {
        a.push(g(p - 1).scale(-1.0));
    }
    a
}

/// 2p × 2p companion matrix of the level VAR.
pub fn companion_matrix(model: &VecmModel) -> Matrix {
    let a = level_var(model);
    let p = a.len();
    let mut c = Matrix::zeros(2 * p, 2 * p);
    for (j, aj) in a.iter().enumerate() {
        for r in 0..2 {
            for col in 0..2 {
                c[(r, 2 * j + col)] = aj[(r, col)];
            }
        }
    }
    for i in 2..2 * p {
        c[(i, i - 2)] = 1.0;
    }
    c
}

/// Ψ_0..Ψ_H of the level MA representation: Ψ_h = Σ_j A_j·Ψ_{h−j}.
pub fn ma_coefficients(model: &VecmModel, horizon: usize) -> Vec<Matrix> {
    let a = level_var(model);
    let mut psi: Vec<Matrix> = vec![Matrix::identity(2)];
    for h in 1..=horizon {
        let mut next = Matrix::zeros(2, 2);
        for (j, aj) in a.iter().enumerate() {
            if j < h {
                next = &next + &aj.matmul(&psi[h - 1 - j]);
            }
        }
        psi.push(next);
    }
    psi
}

/// Impact vectors of the orthogonalized shocks with green ordered first:
/// (green-shock column, peg-shock column), each indexed [peg, green].
fn impact_columns(model: &VecmModel) -> Result<([f64; 2], [f64; 2])> {
    let s = model.residual_covariance;
    let s_gg = s[GREEN][GREEN];
    let s_pg = s[PEG][GREEN];
    let s_pp = s[PEG][PEG];
    if !(s_gg > 0.0) {
        return Err(Error::NotPositiveDefinite { index: 0, pivot: s_gg });
    }
    let l_gg = s_gg.sqrt();
    let l_pg = s_pg / l_gg;
    let d = s_pp - l_pg * l_pg;
    if !(d > 0.0) {
        return Err(Error::NotPositiveDefinite { index: 1, pivot: d });
    }
    Ok(([l_pg, l_gg], [d.sqrt(), 0.0]))
}

fn stability(model: &VecmModel) -> (f64, bool) {
    let rho = spectral_radius(&companion_matrix(model));
    (rho, rho <= 1.0 + STABILITY_MARGIN)
}

/// Peg response to a one-standard-deviation negative green shock, horizons 0..=H.
pub fn irf(model: &VecmModel, horizon_days: usize) -> Result<IrfResult> {
    irf_with_shock(model, horizon_days, GREEN_SHOCK)
}

/// As [`irf`] with the shock size in green residual standard deviations.
pub fn irf_with_shock(model: &VecmModel, horizon_days: usize, shock_sd: f64) -> Result<IrfResult> {
    if horizon_days == 0 {
        return Err(Error::invalid("IRF horizon must be at least 1"));
    }
    let (green_col, _) = impact_columns(model)?;
    let psi = ma_coefficients(model, horizon_days);
    let response: Vec<f64> = psi
        .iter()
        .map(|m| shock_sd * (m[(PEG, PEG)] * green_col[PEG] + m[(PEG, GREEN)] * green_col[GREEN]))
        .collect();
    let mut cumulative = Vec::with_capacity(response.len());
    let mut acc = 0.0;
    for r in &response {
        acc += r;
        cumulative.push(acc);
    }
    let half_life = if response[0] == 0.0 {
        HalfLife::Undefined
    } else {
        half_life(&response)?
    };
    let (spectral_radius, converged) = stability(model);
    Ok(IrfResult {
        horizons: (0..=horizon_days).collect(),
        cumulative_impact: acc,
        response,
        cumulative,
        half_life,
        shock_size: shock_sd * model.residual_covariance[GREEN][GREEN].sqrt(),
        spectral_radius,
        converged,
    })
}

/// First horizon, linearly interpolated, after which |response| stays at or
/// below half its initial magnitude through the last sampled horizon.
pub fn half_life(response: &[f64]) -> Result<HalfLife> {
    let r0 = response.first().copied().unwrap_or(0.0).abs();
    if r0 == 0.0 || !r0.is_finite() {
        return Err(Error::invalid("half-life undefined for a zero initial response"));
    }
    let target = 0.5 * r0;
    let last_above = response
        .iter()
        .rposition(|r| r.abs() > target)
        .expect("initial response exceeds half of itself");
    if last_above + 1 >= response.len() {
        return Ok(HalfLife::NotRecovered);
    }
    let hi = response[last_above].abs();
    let lo = response[last_above + 1].abs();
    Ok(HalfLife::Days(last_above as f64 + (hi - target) / (hi - lo)))
}

/// Share of the peg's h-step forecast-error variance due to green shocks.
pub fn fevd(model: &VecmModel, horizon_days: usize) -> Result<FevdResult> {
    if horizon_days == 0 {
        return Err(Error::invalid("FEVD horizon must be at least 1"));
    }
    let (green_col, peg_col) = impact_columns(model)?;
    let psi = ma_coefficients(model, horizon_days - 1);
    let mut from_green = 0.0;
    let mut from_peg = 0.0;
    let mut share_green = Vec::with_capacity(horizon_days);
    let mut share_own = Vec::with_capacity(horizon_days);
    for m in &psi {
        let g = m[(PEG, PEG)] * green_col[PEG] + m[(PEG, GREEN)] * green_col[GREEN];
        let o = m[(PEG, PEG)] * peg_col[PEG] + m[(PEG, GREEN)] * peg_col[GREEN];
        from_green += g * g;
        from_peg += o * o;
        let total = from_green + from_peg;
        share_green.push(from_green / total);
        share_own.push(from_peg / total);
    }
    let (spectral_radius, converged) = stability(model);
    Ok(FevdResult {
        horizons: (1..=horizon_days).collect(),
        share_green,
        share_own,
        spectral_radius,
        converged,
    })
}
