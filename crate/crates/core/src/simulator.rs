//! Ground-truth generator: a bivariate VECM with GARCH(1,1) innovations, an
//! optional structural break with a one-time reserve-index jump, and optional
//! sign-dependent peg adjustment.
//!
//! The recursion mirrors the estimated model:
//!
//! Δy_t = μ + α·(peg_{t−1} − γ·green_{t−1} − c) + Σ Γ_i·Δy_{t−i} + ε_t
//!
//! with c = peg_anchor − γ·green_start so day one sits in equilibrium, and
//! μ = [γ·drift, drift] so the equilibrium tracks the green drift.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garch::GarchParams;
use crate::series::{daily_dates, BivariateSeries};
use crate::vecm::{Mat2, GREEN, PEG};

pub const SCHEMA_VERSION: u32 = 1;
pub const BUILTIN_NAMES: [&str; 2] = ["treasury-2024", "genius-2025"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    /// [α_peg, α_green].
    pub alpha: [f64; 2],
    /// Γ_1..Γ_k; row = equation, column = lagged variable, both [peg, green].
    pub gamma_matrices: Vec<Mat2>,
    /// Index points per day.
    pub green_drift: f64,
    pub garch_peg: GarchParams,
    pub garch_green: GarchParams,
    pub innovation_correlation: f64,
}

/// Sign-dependent peg adjustment: `alpha_peg_down` applies while the peg is
/// below equilibrium, `alpha_peg_up` while above. Overrides `alpha[0]` in both
/// regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymmetry {
    pub alpha_peg_down: f64,
    pub alpha_peg_up: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub version: String,
    pub n_days: usize,
    /// Day index (0-based) on which the post regime and the jump take effect.
    pub break_day: Option<usize>,
    pub pre_regime: Regime,
    pub post_regime: Regime,
    /// γ in peg = c + γ·green.
    pub beta_gamma: f64,
    /// Signed one-time green innovation on `break_day`, in index points. The
    /// peg receives `ρ·(σ_peg/σ_green)` of it on the same day.
    pub green_jump: f64,
    pub asymmetry: Option<Asymmetry>,
    pub peg_anchor: f64,
    pub green_start: f64,
    pub start_date: NaiveDate,
    pub seed: u64,
}

/// Everything needed to check an estimator against the generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub scenario: Scenario,
    pub seed: u64,
    pub long_run_constant: f64,
    pub break_date: Option<NaiveDate>,
    /// Realized ε_t including the jump, [peg, green]; day 0 is zero.
    pub innovations: Vec<[f64; 2]>,
    /// Conditional variances σ²_t, [peg, green].
    pub conditional_variances: Vec<[f64; 2]>,
}

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl Regime {
    fn validate(&self, label: &str) -> Result<()> {
        let finite = self.alpha.iter().all(|v| v.is_finite())
            && self.green_drift.is_finite()
            && self
                .gamma_matrices
                .iter()
                .all(|g| g.iter().flatten().all(|v| v.is_finite()));
        if !finite {
            return Err(config(format!("{label} regime has non-finite parameters")));
        }
        for (which, g) in [("peg", &self.garch_peg), ("green", &self.garch_green)] {
            g.validate()
                .map_err(|e| config(format!("{label} {which} GARCH: {e}")))?;
            if !(g.persistence() < 1.0) {
                return Err(config(format!("{label} {which} GARCH needs a + b < 1")));
            }
        }
        if !(self.innovation_correlation.abs() < 1.0) {
            return Err(config(format!(
                "{label} innovation correlation {} must lie in (−1, 1)",
                self.innovation_correlation
            )));
        }
        Ok(())
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_days < 3 {
            return Err(config("n_days must be at least 3"));
        }
        if let Some(b) = self.break_day {
            if !(b > 1 && b < self.n_days) {
                return Err(config(format!("break_day {b} must satisfy 1 < break_day < n_days")));
            }
        }
        self.pre_regime.validate("pre")?;
        self.post_regime.validate("post")?;
        let pre_alpha = self.asymmetry.map_or(vec![self.pre_regime.alpha[PEG]], |a| {
            vec![a.alpha_peg_down, a.alpha_peg_up]
        });
        if pre_alpha.iter().any(|a| !((1.0 + a).abs() < 1.0)) {
            return Err(config("pre-regime peg adjustment needs |1 + α_peg| < 1"));
        }
        let scalars = [self.beta_gamma, self.green_jump, self.peg_anchor, self.green_start];
        if !scalars.iter().all(|v| v.is_finite()) {
            return Err(config("non-finite scalar parameter"));
        }
        if !(self.peg_anchor > 0.0) {
            return Err(config("peg_anchor must be positive"));
        }
        Ok(())
    }

    pub fn long_run_constant(&self) -> f64 {
        self.peg_anchor - self.beta_gamma * self.green_start
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }
}

/// Runs the scenario. `seed_override` replaces the scenario's own seed.
pub fn simulate(scenario: &Scenario, seed_override: Option<u64>) -> Result<(BivariateSeries, GroundTruthRecord)> {
    scenario.validate()?;
    let seed = seed_override.unwrap_or(scenario.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = scenario.n_days;
    let gamma = scenario.beta_gamma;
    let c = scenario.long_run_constant();

    let pre = &scenario.pre_regime;
    let unconditional = |g: &GarchParams| g.unconditional_variance().expect("validated a + b < 1");
    let mut var = [unconditional(&pre.garch_peg), unconditional(&pre.garch_green)];
    let mut eps = [0.0, 0.0];

    let mut peg = Vec::with_capacity(n);
    let mut green = Vec::with_capacity(n);
    let mut diffs: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut innovations = Vec::with_capacity(n);
    let mut variances = Vec::with_capacity(n);
    peg.push(scenario.peg_anchor);
    green.push(scenario.green_start);
    diffs.push([0.0, 0.0]);
    innovations.push([0.0, 0.0]);
    variances.push(var);

    for t in 1..n {
        let post = scenario.break_day.is_some_and(|b| t >= b);
        let regime = if post { &scenario.post_regime } else { pre };
        if t > 1 {
            var = [
                regime.garch_peg.next_variance(eps[PEG], var[PEG]),
                regime.garch_green.next_variance(eps[GREEN], var[GREEN]),
            ];
        }
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let rho = regime.innovation_correlation;
        eps = [
            var[PEG].sqrt() * (rho * z1 + (1.0 - rho * rho).sqrt() * z2),
            var[GREEN].sqrt() * z1,
        ];
        // The jump arrives as a green innovation, so the peg takes its
        // contemporaneous share through the innovation correlation. It does
        // not feed the variance recursion.
        let shock = if scenario.break_day == Some(t) {
            let j = scenario.green_jump;
            [j * rho * (var[PEG] / var[GREEN]).sqrt(), j]
        } else {
            [0.0, 0.0]
        };

        let ec = peg[t - 1] - gamma * green[t - 1] - c;
        let alpha_peg = match scenario.asymmetry {
            Some(a) if ec < 0.0 => a.alpha_peg_down,
            Some(a) => a.alpha_peg_up,
            None => regime.alpha[PEG],
        };
        let mut dy = [
            gamma * regime.green_drift + alpha_peg * ec,
            regime.green_drift + regime.alpha[GREEN] * ec,
        ];
        for (i, g) in regime.gamma_matrices.iter().enumerate() {
            let Some(d) = t.checked_sub(i + 1).map(|s| diffs[s]) else {
                break;
            };
            for (eq, row) in g.iter().enumerate() {
                dy[eq] += row[PEG] * d[PEG] + row[GREEN] * d[GREEN];
            }
        }
        dy[PEG] += eps[PEG] + shock[PEG];
        dy[GREEN] += eps[GREEN] + shock[GREEN];
        peg.push(peg[t - 1] + dy[PEG]);
        green.push(green[t - 1] + dy[GREEN]);
        diffs.push(dy);
        innovations.push([eps[PEG] + shock[PEG], eps[GREEN] + shock[GREEN]]);
        variances.push(var);
    }

    if let Some(t) = peg.iter().chain(&green).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("simulated path diverged at step {}", t % n)));
    }
    let dates = daily_dates(scenario.start_date, n);
    let break_date = scenario.break_day.map(|b| dates[b]);
    let pair = BivariateSeries::new(dates, peg, green)?;
    let truth = GroundTruthRecord {
        scenario: scenario.clone(),
        seed,
        long_run_constant: c,
        break_date,
        innovations,
        conditional_variances: variances,
    };
    Ok((pair, truth))
}

fn garch(omega: f64, a: f64, b: f64) -> GarchParams {
    GarchParams { omega, a, b }
}

fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date")
}

/// GARCH(1,1) with the given unconditional standard deviation.
fn garch_with_sd(sd: f64, a: f64, b: f64) -> GarchParams {
    garch(sd * sd * (1.0 - a - b), a, b)
}

/// Calm regime: quick peg repair, a quiet reserve index and no lead-lag.
fn treasury_regime() -> Regime {
    Regime {
        alpha: [-0.45, 0.0],
        gamma_matrices: vec![],
        green_drift: 0.0,
        garch_peg: garch_with_sd(6.3e-4, 0.05, 0.85),
        garch_green: garch_with_sd(0.07, 0.05, 0.85),
        innovation_correlation: 0.3,
    }
}

/// Before the break the peg still repairs fast and barely tracks the index.
fn genius_pre_regime() -> Regime {
    Regime {
        alpha: [-0.5325, 0.0],
        gamma_matrices: vec![],
        green_drift: 0.0,
        garch_peg: garch_with_sd(4.968e-4, 0.05, 0.85),
        garch_green: garch_with_sd(0.3493, 0.05, 0.85),
        innovation_correlation: 0.05797,
    }
}

/// After the break: slow repair, peg momentum, a one- and two-day lead from
/// the index and persistent volatility.
fn genius_post_regime() -> Regime {
    Regime {
        alpha: [-0.1791, 0.0],
        gamma_matrices: vec![[[0.5995, 2.558e-4], [0.0, 0.0]], [[0.0, 1.985e-4], [0.0, 0.0]]],
        green_drift: 0.0,
        garch_peg: garch_with_sd(3.417e-3, 0.10, 0.88),
        garch_green: garch_with_sd(2.279, 0.10, 0.88),
        innovation_correlation: 0.1766,
    }
}

/// The frozen shipped scenarios.
pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    let base = Scenario {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        version: "1.0.0".to_string(),
        n_days: 1000,
        break_day: None,
        pre_regime: treasury_regime(),
        post_regime: treasury_regime(),
        beta_gamma: 5.124e-5,
        green_jump: 0.0,
        asymmetry: None,
        peg_anchor: 1.0,
        green_start: 100.0,
        start_date: start_date(),
        seed: 42,
    };
    match name {
        "treasury-2024" => Ok(base),
        "genius-2025" => Ok(Scenario {
            break_day: Some(970),
            pre_regime: genius_pre_regime(),
            post_regime: genius_post_regime(),
            green_jump: -38.43,
            ..base
        }),
        other => Err(Error::invalid(format!(
            "unknown scenario {other:?}; expected one of {BUILTIN_NAMES:?}"
        ))),
    }
}
