//! Rank-one VECM for y_t = [peg, green]':
//!
//! Δy_t = α·(peg_{t−1} − γ·green_{t−1} − c) + Σ_{i=1}^{p−1} Γ_i·Δy_{t−i} + ε_t
//!
//! β = [1, −γ] comes from the Johansen eigenvector (or is fixed by the
//! caller); α and Γ_i are then least squares on the error-correction term and
//! lagged differences.

mod diagnostics;
mod forecast;
mod impulse;

pub use diagnostics::{
    find_variance_break, granger_causality, variance_break_test, GrangerDirection, GrangerResult,
    VarianceBreak,
};
pub use forecast::{deterministic_path, forecast, ForecastFan, ForecastSettings};
pub use impulse::{
    companion_matrix, fevd, half_life, irf, ma_coefficients, FevdResult, HalfLife, IrfResult,
    GREEN_SHOCK,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::johansen::{johansen_test, min_length, JohansenResult, Significance};
use crate::numerics::{cholesky, covariance, ols, Matrix};
use crate::series::BivariateSeries;

pub type Mat2 = [[f64; 2]; 2];

/// Index of each variable in y_t.
pub const PEG: usize = 0;
pub const GREEN: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VecmModel {
    /// Adjustment speeds [α_peg, α_green], per day.
    pub alpha: [f64; 2],
    pub alpha_se: [f64; 2],
    /// [1, −γ].
    pub beta: [f64; 2],
    /// c in the equilibrium peg = c + γ·green.
    pub long_run_constant: f64,
    /// Γ_1..Γ_{p−1}; row = equation, column = lagged variable.
    pub gamma_matrices: Vec<Mat2>,
    pub gamma_se: Vec<Mat2>,
    pub residual_covariance: Mat2,
    pub residuals: BivariateSeries,
    pub lag_order: usize,
    /// |1 + α_peg| < 1.
    pub stable: bool,
    /// Rank chosen by the trace test, when β was estimated.
    pub johansen_rank: Option<usize>,
    pub beta_fixed: bool,
    /// Last `lag_order` levels of the sample, oldest first.
    pub final_levels: Vec<[f64; 2]>,
}

impl VecmModel {
    pub fn gamma(&self) -> f64 {
        -self.beta[1]
    }

    /// Π = α·β'.
    pub fn pi(&self) -> Mat2 {
        [
            [self.alpha[0] * self.beta[0], self.alpha[0] * self.beta[1]],
            [self.alpha[1] * self.beta[0], self.alpha[1] * self.beta[1]],
        ]
    }

    pub fn error_correction(&self, y: [f64; 2]) -> f64 {
        self.beta[0] * y[PEG] + self.beta[1] * y[GREEN] - self.long_run_constant
    }

    /// Deterministic part of Δy_t given y_{t−1} and Δy_{t−1}..Δy_{t−p+1}.
    pub fn expected_change(&self, y_prev: [f64; 2], lagged_changes: &[[f64; 2]]) -> [f64; 2] {
        let ec = self.error_correction(y_prev);
        let mut dy = [self.alpha[0] * ec, self.alpha[1] * ec];
        for (g, d) in self.gamma_matrices.iter().zip(lagged_changes) {
            for eq in 0..2 {
                dy[eq] += g[eq][0] * d[0] + g[eq][1] * d[1];
            }
        }
        dy
    }

    pub fn sigma_matrix(&self) -> Matrix {
        let s = self.residual_covariance;
        Matrix::from_rows(&[&s[0], &s[1]]).expect("finite covariance")
    }

    /// Builds a model directly from parameters; residuals are only used for dates.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        alpha: [f64; 2],
        gamma: f64,
        long_run_constant: f64,
        gamma_matrices: Vec<Mat2>,
        residual_covariance: Mat2,
        residuals: BivariateSeries,
        final_levels: Vec<[f64; 2]>,
    ) -> Result<Self> {
        let lag_order = gamma_matrices.len() + 1;
        if final_levels.len() != lag_order {
            return Err(Error::invalid("final_levels must hold lag_order observations"));
        }
        let model = Self {
            alpha,
            alpha_se: [0.0; 2],
            beta: [1.0, -gamma],
            long_run_constant,
            gamma_se: vec![[[0.0; 2]; 2]; gamma_matrices.len()],
            gamma_matrices,
            residual_covariance,
            residuals,
            lag_order,
            stable: (1.0 + alpha[0]).abs() < 1.0,
            johansen_rank: None,
            beta_fixed: true,
            final_levels,
        };
        cholesky(&model.sigma_matrix())?;
        Ok(model)
    }
}

/// Fits the rank-one VECM, estimating β by Johansen at the 95% level unless
/// `beta_input` fixes it.
pub fn fit_vecm(
    pair: &BivariateSeries,
    lag_order: usize,
    beta_input: Option<[f64; 2]>,
) -> Result<VecmModel> {
    fit_vecm_with(pair, lag_order, beta_input, Significance::P95).map(|(m, _)| m)
}

/// As [`fit_vecm`], also returning the Johansen result when β was estimated.
pub fn fit_vecm_with(
    pair: &BivariateSeries,
    lag_order: usize,
    beta_input: Option<[f64; 2]>,
    significance: Significance,
) -> Result<(VecmModel, Option<JohansenResult>)> {
    if lag_order == 0 {
        return Err(Error::invalid("lag order must be positive"));
    }
    let needed = min_length(lag_order);
    if pair.len() < needed {
        return Err(Error::InsufficientData {
            what: "VECM fit",
            needed,
            got: pair.len(),
        });
    }
    let (peg, green) = (pair.peg(), pair.green());
    let n = pair.len();
    let p = lag_order;

    let (gamma, constant, johansen) = match beta_input {
        Some(b) => {
            if b[0] == 0.0 || !b.iter().all(|v| v.is_finite()) {
                return Err(Error::invalid("fixed cointegrating vector needs a nonzero finite peg weight"));
            }
            let gamma = -b[1] / b[0];
            let c = (p - 1..n - 1).map(|t| peg[t] - gamma * green[t]).sum::<f64>() / (n - p) as f64;
            (gamma, c, None)
        }
        None => {
            let j = johansen_test(pair, p, significance)?;
            if j.selected_rank == 0 {
                return Err(Error::NoCointegration);
            }
            (j.gamma(), j.long_run_constant, Some(j))
        }
    };

    let t_eff = n - p;
    let k = 1 + 2 * (p - 1);
    let mut x = Matrix::zeros(t_eff, k);
    let mut y = Matrix::zeros(t_eff, 2);
    for (r, t) in (p..n).enumerate() {
        y[(r, PEG)] = peg[t] - peg[t - 1];
        y[(r, GREEN)] = green[t] - green[t - 1];
        x[(r, 0)] = peg[t - 1] - gamma * green[t - 1] - constant;
        for i in 1..p {
            x[(r, 1 + 2 * (i - 1))] = peg[t - i] - peg[t - i - 1];
            x[(r, 2 + 2 * (i - 1))] = green[t - i] - green[t - i - 1];
        }
    }
    let fit = ols(&x, &y)?;
    let se = [fit.standard_errors(PEG), fit.standard_errors(GREEN)];
    let coef = &fit.coefficients;

    let alpha = [coef[(0, PEG)], coef[(0, GREEN)]];
    let alpha_se = [se[PEG][0], se[GREEN][0]];
    let mut gamma_matrices = Vec::with_capacity(p - 1);
    let mut gamma_se = Vec::with_capacity(p - 1);
    for i in 1..p {
        let (cp, cg) = (1 + 2 * (i - 1), 2 + 2 * (i - 1));
        gamma_matrices.push([
            [coef[(cp, PEG)], coef[(cg, PEG)]],
            [coef[(cp, GREEN)], coef[(cg, GREEN)]],
        ]);
        gamma_se.push([[se[PEG][cp], se[PEG][cg]], [se[GREEN][cp], se[GREEN][cg]]]);
    }

    let cov = covariance(&fit.residuals)?;
    cholesky(&cov).map_err(|_| Error::RankDeficient("residual covariance is singular".into()))?;
    let residual_covariance = [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]];
    let residuals = BivariateSeries::new(
        pair.dates()[p..].to_vec(),
        fit.residuals.col(PEG),
        fit.residuals.col(GREEN),
    )?;
    let final_levels = (n - p..n).map(|t| [peg[t], green[t]]).collect();

    let model = VecmModel {
        alpha,
        alpha_se,
        beta: [1.0, -gamma],
        long_run_constant: constant,
        gamma_matrices,
        gamma_se,
        residual_covariance,
        residuals,
        lag_order: p,
        stable: (1.0 + alpha[0]).abs() < 1.0,
        johansen_rank: johansen.as_ref().map(|j| j.selected_rank),
        beta_fixed: beta_input.is_some(),
        final_levels,
    };
    Ok((model, johansen))
}
