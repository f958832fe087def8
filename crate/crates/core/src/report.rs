//! The full analysis pipeline, its serialized report and the plot-ready CSVs.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garch::{conditional_volatility, fit_garch, GarchModel};
use crate::io::write_atomic;
use crate::johansen::{JohansenResult, Significance};
use crate::series::{
    acf, ccf, density_grid_points, difference, kernel_density, ljung_box, qq_normal,
    rolling_correlation, rolling_volatility, BivariateSeries, LjungBox, TimeSeries,
};
use crate::simulator::Scenario;
use crate::tailrisk::{tail_report, TailReport, DEFAULT_THRESHOLD_QUANTILE};
use crate::vecm::{
    fevd, find_variance_break, fit_vecm_with, forecast, granger_causality, irf,
    variance_break_test, FevdResult, ForecastFan, ForecastSettings, GrangerDirection,
    GrangerResult, IrfResult, Mat2, VarianceBreak, VecmModel,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Peg par value; deviations and losses are measured from it.
pub const PAR: f64 = 1.0;
pub const DEFAULT_LAGS: usize = 2;
pub const DEFAULT_IRF_HORIZON: usize = 120;
pub const DEFAULT_HORIZON: usize = 10;
pub const DEFAULT_CONFIDENCE: f64 = 0.99;
pub const DEFAULT_PEG_THRESHOLD: f64 = 0.995;
pub const DEFAULT_PATHS: usize = 10_000;
pub const ROLLING_CORRELATION_WINDOW: usize = 60;
pub const ROLLING_VOLATILITY_WINDOW: usize = 30;
pub const ACF_LAGS: usize = 20;
pub const LJUNG_BOX_LAGS: usize = 10;
pub const CCF_LAGS: usize = 10;
/// Fraction trimmed from each end when searching for the variance break.
pub const BREAK_SEARCH_TRIM: f64 = 0.15;

pub const PLOT_FILES: [&str; 13] = [
    "diffseries.csv",
    "rollcorr.csv",
    "eigen.csv",
    "residuals.csv",
    "irf.csv",
    "fevd.csv",
    "density.csv",
    "qq.csv",
    "condvol.csv",
    "acf.csv",
    "rollvol.csv",
    "ccf.csv",
    "forecast.csv",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub lags: usize,
    pub irf_horizon: usize,
    /// FEVD and forecast horizon.
    pub horizon: usize,
    pub confidence: f64,
    pub threshold_quantile: f64,
    /// Peg level whose undershoot probability the forecast reports.
    pub peg_threshold: f64,
    pub paths: usize,
    pub seed: u64,
    /// Variance-break date; searched for when absent.
    pub break_date: Option<NaiveDate>,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            lags: DEFAULT_LAGS,
            irf_horizon: DEFAULT_IRF_HORIZON,
            horizon: DEFAULT_HORIZON,
            confidence: DEFAULT_CONFIDENCE,
            threshold_quantile: DEFAULT_THRESHOLD_QUANTILE,
            peg_threshold: DEFAULT_PEG_THRESHOLD,
            paths: DEFAULT_PATHS,
            seed: 0,
            break_date: None,
        }
    }
}

impl AnalysisSettings {
    pub fn forecast_settings(&self) -> ForecastSettings {
        ForecastSettings {
            horizon_days: self.horizon,
            paths: self.paths,
            thresholds: vec![self.peg_threshold],
            seed: self.seed,
            ..ForecastSettings::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub n: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub source: String,
}

impl InputSummary {
    pub fn new(pair: &BivariateSeries, source: impl Into<String>) -> Self {
        Self {
            n: pair.len(),
            start_date: pair.dates()[0],
            end_date: pair.dates()[pair.len() - 1],
            source: source.into(),
        }
    }
}

/// The fitted VECM without its residual series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VecmSummary {
    pub alpha: [f64; 2],
    pub alpha_se: [f64; 2],
    pub beta: [f64; 2],
    pub gamma: f64,
    pub long_run_constant: f64,
    pub gamma_matrices: Vec<Mat2>,
    pub gamma_se: Vec<Mat2>,
    pub residual_covariance: Mat2,
    pub lag_order: usize,
    pub stable: bool,
    pub johansen_rank: Option<usize>,
    pub beta_fixed: bool,
}

impl From<&VecmModel> for VecmSummary {
    fn from(m: &VecmModel) -> Self {
        Self {
            alpha: m.alpha,
            alpha_se: m.alpha_se,
            beta: m.beta,
            gamma: m.gamma(),
            long_run_constant: m.long_run_constant,
            gamma_matrices: m.gamma_matrices.clone(),
            gamma_se: m.gamma_se.clone(),
            residual_covariance: m.residual_covariance,
            lag_order: m.lag_order,
            stable: m.stable,
            johansen_rank: m.johansen_rank,
            beta_fixed: m.beta_fixed,
        }
    }
}

/// A fitted GARCH model without its variance path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchSummary {
    pub omega: f64,
    pub a: f64,
    pub b: f64,
    pub persistence: f64,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub unconditional_variance: Option<f64>,
    pub next_variance: f64,
    pub converged: bool,
    pub at_ceiling: bool,
}

impl From<&GarchModel> for GarchSummary {
    fn from(g: &GarchModel) -> Self {
        Self {
            omega: g.omega,
            a: g.a,
            b: g.b,
            persistence: g.persistence,
            log_likelihood: g.log_likelihood,
            null_log_likelihood: g.null_log_likelihood,
            unconditional_variance: g.unconditional_variance,
            next_variance: g.next_variance,
            converged: g.converged,
            at_ceiling: g.at_ceiling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub ljung_box_peg: LjungBox,
    pub ljung_box_green: LjungBox,
    pub granger_green_to_peg: GrangerResult,
    pub granger_peg_to_green: GrangerResult,
    /// Test on the peg-equation residuals.
    pub variance_break: VarianceBreak,
    /// True when the break date was searched for rather than supplied.
    pub break_date_estimated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRef {
    pub name: String,
    pub version: String,
    pub schema_version: u32,
    pub seed: u64,
}

impl ScenarioRef {
    pub fn new(scenario: &Scenario, seed: u64) -> Self {
        Self {
            name: scenario.name.clone(),
            version: scenario.version.clone(),
            schema_version: scenario.schema_version,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub settings: AnalysisSettings,
    /// Present when the input was simulated in the same run.
    pub scenario: Option<ScenarioRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub input_summary: InputSummary,
    pub johansen: JohansenResult,
    pub vecm: VecmSummary,
    pub garch_peg: GarchSummary,
    pub garch_green: GarchSummary,
    pub irf: IrfResult,
    pub fevd: FevdResult,
    pub tail: TailReport,
    pub diagnostics: Diagnostics,
    pub forecast: ForecastFan,
    pub provenance: Provenance,
}

/// The report together with the fitted objects the plot data is drawn from.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub pair: BivariateSeries,
    pub model: VecmModel,
    pub garch_peg: GarchModel,
    pub garch_green: GarchModel,
}

/// Johansen → VECM → GARCH per equation.
pub fn fit_models(
    pair: &BivariateSeries,
    lags: usize,
) -> Result<(JohansenResult, VecmModel, GarchModel, GarchModel)> {
    let (model, johansen) = fit_vecm_with(pair, lags, None, Significance::P95)?;
    let johansen = johansen.expect("β is estimated when no vector is supplied");
    let garch_peg = fit_garch(&model.residuals.peg_series())?;
    let garch_green = fit_garch(&model.residuals.green_series())?;
    Ok((johansen, model, garch_peg, garch_green))
}

pub fn peg_deviations(pair: &BivariateSeries) -> Result<TimeSeries> {
    pair.peg_series().map(|p| p - PAR)
}

pub fn diagnostics(
    pair: &BivariateSeries,
    model: &VecmModel,
    break_date: Option<NaiveDate>,
) -> Result<Diagnostics> {
    let fitted = model.lag_order - 1;
    let res_peg = model.residuals.peg_series();
    let res_green = model.residuals.green_series();
    let variance_break = match break_date {
        Some(d) => variance_break_test(&res_peg, d)?,
        None => find_variance_break(&res_peg, BREAK_SEARCH_TRIM)?,
    };
    Ok(Diagnostics {
        ljung_box_peg: ljung_box(&res_peg, LJUNG_BOX_LAGS, fitted)?,
        ljung_box_green: ljung_box(&res_green, LJUNG_BOX_LAGS, fitted)?,
        granger_green_to_peg: granger_causality(pair, model.lag_order, GrangerDirection::GreenToPeg)?,
        granger_peg_to_green: granger_causality(pair, model.lag_order, GrangerDirection::PegToGreen)?,
        variance_break,
        break_date_estimated: break_date.is_none(),
    })
}

/// Runs every stage on `pair`.
pub fn analyze(
    pair: &BivariateSeries,
    source: impl Into<String>,
    settings: &AnalysisSettings,
    scenario: Option<ScenarioRef>,
) -> Result<Analysis> {
    let (johansen, model, garch_peg, garch_green) = fit_models(pair, settings.lags)?;
    let irf = irf(&model, settings.irf_horizon)?;
    let fevd = fevd(&model, settings.horizon)?;
    let diagnostics = diagnostics(pair, &model, settings.break_date)?;
    let tail = tail_report(&peg_deviations(pair)?, settings.confidence, settings.threshold_quantile)?;
    let forecast = forecast(&model, &garch_peg, &garch_green, &settings.forecast_settings())?;
    let report = AnalysisReport {
        input_summary: InputSummary::new(pair, source),
        johansen,
        vecm: VecmSummary::from(&model),
        garch_peg: GarchSummary::from(&garch_peg),
        garch_green: GarchSummary::from(&garch_green),
        irf,
        fevd,
        tail,
        diagnostics,
        forecast,
        provenance: Provenance {
            tool_version: TOOL_VERSION.to_string(),
            settings: settings.clone(),
            scenario,
        },
    };
    Ok(Analysis {
        report,
        pair: pair.clone(),
        model,
        garch_peg,
        garch_green,
    })
}

/// Pretty JSON, checked to parse back to the same value and re-serialize to
/// the same bytes. A NaN would serialize as `null` and fail the parse.
pub fn to_json_checked<T>(value: &T) -> Result<String>
where
    T: Serialize + serde::de::DeserializeOwned + PartialEq,
{
    let mut text = serde_json::to_string_pretty(value)?;
    let back: T = serde_json::from_str(&text)
        .map_err(|e| Error::NonFinite(format!("output does not round-trip: {e}")))?;
    if back != *value || serde_json::to_string_pretty(&back)? != text {
        return Err(Error::NonFinite("output does not round-trip losslessly".into()));
    }
    text.push('\n');
    Ok(text)
}

pub fn write_report(report: &AnalysisReport, path: &Path) -> Result<()> {
    write_atomic(path, to_json_checked(report)?.as_bytes())
}

fn num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv(header.join(",") + "\n")
    }

    fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        let cells: Vec<String> = cells.into_iter().collect();
        let _ = writeln!(self.0, "{}", cells.join(","));
    }
}

/// File name and contents of each plot CSV, in [`PLOT_FILES`] order.
pub fn plot_tables(analysis: &Analysis) -> Result<Vec<(&'static str, String)>> {
    let Analysis { report, pair, model, garch_peg, garch_green } = analysis;
    let mut tables = Vec::with_capacity(PLOT_FILES.len());

    let mut t = Csv::new(&["date", "peg", "green", "d_peg", "d_green"]);
    for i in 0..pair.len() {
        let (p, g) = (pair.peg()[i], pair.green()[i]);
        let (dp, dg) = if i == 0 {
            (String::new(), String::new())
        } else {
            (num(p - pair.peg()[i - 1]), num(g - pair.green()[i - 1]))
        };
        t.row([pair.dates()[i].to_string(), num(p), num(g), dp, dg]);
    }
    tables.push(("diffseries.csv", t.0));

    let mut t = Csv::new(&["date", "correlation"]);
    let rc = rolling_correlation(pair, ROLLING_CORRELATION_WINDOW.min(pair.len()))?;
    for (d, v) in rc.dates.iter().zip(&rc.values) {
        t.row([d.to_string(), opt(*v)]);
    }
    tables.push(("rollcorr.csv", t.0));

    let j = &report.johansen;
    let mut t = Csv::new(&["null_rank", "eigenvalue", "trace_stat", "cv90", "cv95", "cv99"]);
    for r in 0..j.trace_stats.len() {
        let cv = j.critical_values[r];
        t.row([r.to_string(), num(j.eigenvalues[r]), num(j.trace_stats[r]), num(cv[0]), num(cv[1]), num(cv[2])]);
    }
    tables.push(("eigen.csv", t.0));

    let res = &model.residuals;
    let mut t = Csv::new(&["date", "peg", "green"]);
    for ((d, p), g) in res.dates().iter().zip(res.peg()).zip(res.green()) {
        t.row([d.to_string(), num(*p), num(*g)]);
    }
    tables.push(("residuals.csv", t.0));

    let mut t = Csv::new(&["horizon", "response", "cumulative"]);
    let ir = &report.irf;
    for ((h, r), c) in ir.horizons.iter().zip(&ir.response).zip(&ir.cumulative) {
        t.row([h.to_string(), num(*r), num(*c)]);
    }
    tables.push(("irf.csv", t.0));

    let mut t = Csv::new(&["horizon", "share_green", "share_own"]);
    let fe = &report.fevd;
    for ((h, g), o) in fe.horizons.iter().zip(&fe.share_green).zip(&fe.share_own) {
        t.row([h.to_string(), num(*g), num(*o)]);
    }
    tables.push(("fevd.csv", t.0));

    let dev = peg_deviations(pair)?;
    let kd = kernel_density(&dev, density_grid_points(&dev)?.max(512))?;
    let mut t = Csv::new(&["deviation", "density"]);
    for (x, y) in &kd.points {
        t.row([num(*x), num(*y)]);
    }
    tables.push(("density.csv", t.0));

    let mut t = Csv::new(&["theoretical", "sample"]);
    for (q, x) in qq_normal(&res.peg_series())? {
        t.row([num(q), num(x)]);
    }
    tables.push(("qq.csv", t.0));

    let mut t = Csv::new(&["date", "peg", "green"]);
    let (vp, vg) = (conditional_volatility(garch_peg), conditional_volatility(garch_green));
    for ((d, p), g) in vp.dates().iter().zip(vp.values()).zip(vg.values()) {
        t.row([d.to_string(), num(*p), num(*g)]);
    }
    tables.push(("condvol.csv", t.0));

    let (ap, ag) = (acf(&res.peg_series(), ACF_LAGS)?, acf(&res.green_series(), ACF_LAGS)?);
    let mut t = Csv::new(&["lag", "peg", "green", "band"]);
    for (k, (p, g)) in ap.values.iter().zip(&ag.values).enumerate() {
        t.row([k.to_string(), num(*p), num(*g), num(ap.band)]);
    }
    tables.push(("acf.csv", t.0));

    let dp = difference(&pair.peg_series(), 1)?;
    let dg = difference(&pair.green_series(), 1)?;
    let window = ROLLING_VOLATILITY_WINDOW.min(dp.len());
    let (rp, rg) = (rolling_volatility(&dp, window)?, rolling_volatility(&dg, window)?);
    let mut t = Csv::new(&["date", "peg", "green"]);
    for ((d, p), g) in rp.dates().iter().zip(rp.values()).zip(rg.values()) {
        t.row([d.to_string(), num(*p), num(*g)]);
    }
    tables.push(("rollvol.csv", t.0));

    let mut t = Csv::new(&["lag", "correlation"]);
    for (k, r) in ccf(&dg, &dp, CCF_LAGS)? {
        t.row([k.to_string(), num(r)]);
    }
    tables.push(("ccf.csv", t.0));

    let fan = &report.forecast;
    let mut header = vec!["horizon".to_string(), "point".to_string()];
    header.extend(fan.quantiles.iter().map(|q| format!("q{q}")));
    header.extend(fan.thresholds.iter().map(|x| format!("below_{x}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Csv::new(&header);
    for (i, h) in fan.horizons.iter().enumerate() {
        let mut cells = vec![h.to_string(), num(fan.point[i])];
        cells.extend(fan.quantile_bands.iter().map(|b| num(b[i])));
        cells.extend(fan.prob_below.iter().map(|b| num(b[i])));
        t.row(cells);
    }
    tables.push(("forecast.csv", t.0));

    debug_assert_eq!(tables.iter().map(|t| t.0).collect::<Vec<_>>(), PLOT_FILES);
    Ok(tables)
}

/// Writes every plot CSV into `dir`, creating it if needed. All tables are
/// built before the first file is written.
pub fn write_plotdata(analysis: &Analysis, dir: &Path) -> Result<()> {
    let tables = plot_tables(analysis)?;
    std::fs::create_dir_all(dir)?;
    for (name, body) in tables {
        write_atomic(&dir.join(name), body.as_bytes())?;
    }
    Ok(())
}
