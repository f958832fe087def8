use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use peg_nexus::io::{read_csv, write_atomic, write_csv};
use peg_nexus::johansen::JohansenResult;
use peg_nexus::report::{
    analyze, diagnostics, fit_models, peg_deviations, to_json_checked, write_plotdata,
    AnalysisSettings, Diagnostics, GarchSummary, InputSummary, ScenarioRef,
    VecmSummary, DEFAULT_CONFIDENCE, DEFAULT_HORIZON, DEFAULT_IRF_HORIZON, DEFAULT_LAGS,
    DEFAULT_PATHS, DEFAULT_PEG_THRESHOLD,
};
use peg_nexus::series::BivariateSeries;
use peg_nexus::simulator::{builtin_scenario, simulate, Scenario};
use peg_nexus::tailrisk::{tail_report, DEFAULT_THRESHOLD_QUANTILE};
use peg_nexus::vecm::{fevd, forecast, irf};

#[derive(Parser)]
#[command(name = "peg-nexus", version, about = "VECM-GARCH analysis of a stablecoin peg against a reserve index")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic data set from a scenario.
    Simulate {
        /// Built-in scenario name or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Johansen test, VECM and GARCH fits.
    Fit(Common),
    /// Peg response to a one-standard-deviation drop in the reserve index.
    Irf(Common),
    /// Forecast-error variance decomposition of the peg.
    Fevd(Common),
    /// Monte-Carlo fan of the peg level.
    Forecast(Common),
    /// VaR, TVaR and tail fit of peg losses.
    Tail(Common),
    /// Ljung-Box, Granger and variance-break tests.
    Diagnose(Common),
    /// Run every stage and write the full report.
    Report {
        #[command(flatten)]
        common: Common,
        /// Directory for the plot CSVs.
        #[arg(long)]
        plots: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// CSV with header date,peg,green.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Simulate the input from a built-in scenario or scenario file.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Args)]
struct Common {
    #[command(flatten)]
    source: Source,
    /// Seed for every random draw, including the simulated input.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_LAGS, value_parser = count_at_least(1))]
    lags: usize,
    /// Days ahead for the IRF, FEVD or forecast.
    #[arg(long, value_parser = count_at_least(1))]
    horizon: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE, value_parser = parse_confidence)]
    confidence: f64,
    /// Peg level for the forecast's undershoot probability.
    #[arg(long, default_value_t = DEFAULT_PEG_THRESHOLD, value_parser = parse_positive)]
    threshold: f64,
    /// First day of the post-break segment (YYYY-MM-DD).
    #[arg(long)]
    break_date: Option<NaiveDate>,
    #[arg(long, default_value_t = DEFAULT_PATHS, value_parser = count_at_least(1000))]
    paths: usize,
}

fn count_at_least(min: usize) -> impl Fn(&str) -> Result<usize, String> + Clone + Send + Sync + 'static {
    move |s: &str| match s.parse::<usize>() {
        Ok(v) if v >= min => Ok(v),
        _ => Err(format!("expected an integer of at least {min}")),
    }
}

fn parse_confidence(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.9 && v < 0.9999 {
        Ok(v)
    } else {
        Err("confidence must lie in (0.9, 0.9999)".into())
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("{s:?} is not a positive number")),
    }
}

type CliResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn load_scenario(name: &str) -> CliResult<Scenario> {
    if Path::new(name).is_file() {
        return Ok(Scenario::from_json(&std::fs::read_to_string(name)?)?);
    }
    Ok(builtin_scenario(name)?)
}

struct Loaded {
    pair: BivariateSeries,
    source: String,
    scenario: Option<ScenarioRef>,
    seed: u64,
}

fn load(common: &Common) -> CliResult<Loaded> {
    if let Some(path) = &common.source.input {
        return Ok(Loaded {
            pair: read_csv(path)?,
            source: path.display().to_string(),
            scenario: None,
            seed: common.seed.unwrap_or(0),
        });
    }
    let name = common.source.scenario.as_deref().expect("clap enforces one input source");
    let scenario = load_scenario(name)?;
    let seed = common.seed.unwrap_or(scenario.seed);
    let (pair, _) = simulate(&scenario, Some(seed))?;
    Ok(Loaded {
        pair,
        source: format!("scenario:{}", scenario.name),
        scenario: Some(ScenarioRef::new(&scenario, seed)),
        seed,
    })
}

impl Common {
    fn settings(&self, seed: u64, horizon_default: usize) -> AnalysisSettings {
        let horizon = self.horizon.unwrap_or(horizon_default);
        AnalysisSettings {
            lags: self.lags,
            irf_horizon: DEFAULT_IRF_HORIZON.max(horizon),
            horizon,
            confidence: self.confidence,
            threshold_quantile: DEFAULT_THRESHOLD_QUANTILE,
            peg_threshold: self.threshold,
            paths: self.paths,
            seed,
            break_date: self.break_date,
        }
    }
}

fn emit<T>(value: &T, out: Option<&Path>) -> CliResult<()>
where
    T: Serialize + serde::de::DeserializeOwned + PartialEq,
{
    let text = to_json_checked(value)?;
    match out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize, Deserialize, PartialEq)]
struct FitOutput {
    input_summary: InputSummary,
    johansen: JohansenResult,
    vecm: VecmSummary,
    garch_peg: GarchSummary,
    garch_green: GarchSummary,
    scenario: Option<ScenarioRef>,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct DiagnoseOutput {
    input_summary: InputSummary,
    diagnostics: Diagnostics,
    scenario: Option<ScenarioRef>,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { scenario, seed, out } => {
            let scenario = load_scenario(&scenario)?;
            let (pair, _) = simulate(&scenario, seed)?;
            write_csv(&pair, &out)?;
            log::info!("wrote {} days of {} to {}", pair.len(), scenario.name, out.display());
        }
        Command::Fit(c) => {
            let l = load(&c)?;
            let (johansen, model, gp, gg) = fit_models(&l.pair, c.lags)?;
            let output = FitOutput {
                input_summary: InputSummary::new(&l.pair, l.source),
                johansen,
                vecm: VecmSummary::from(&model),
                garch_peg: GarchSummary::from(&gp),
                garch_green: GarchSummary::from(&gg),
                scenario: l.scenario,
            };
            emit(&output, c.out.as_deref())?;
        }
        Command::Irf(c) => {
            let l = load(&c)?;
            let (_, model, _, _) = fit_models(&l.pair, c.lags)?;
            emit(&irf(&model, c.horizon.unwrap_or(DEFAULT_IRF_HORIZON))?, c.out.as_deref())?;
        }
        Command::Fevd(c) => {
            let l = load(&c)?;
            let (_, model, _, _) = fit_models(&l.pair, c.lags)?;
            emit(&fevd(&model, c.horizon.unwrap_or(DEFAULT_HORIZON))?, c.out.as_deref())?;
        }
        Command::Forecast(c) => {
            let l = load(&c)?;
            let settings = c.settings(l.seed, DEFAULT_HORIZON);
            let (_, model, gp, gg) = fit_models(&l.pair, c.lags)?;
            emit(&forecast(&model, &gp, &gg, &settings.forecast_settings())?, c.out.as_deref())?;
        }
        Command::Tail(c) => {
            let l = load(&c)?;
            let report = tail_report(&peg_deviations(&l.pair)?, c.confidence, DEFAULT_THRESHOLD_QUANTILE)?;
            emit(&report, c.out.as_deref())?;
        }
        Command::Diagnose(c) => {
            let l = load(&c)?;
            let (_, model, _, _) = fit_models(&l.pair, c.lags)?;
            let output = DiagnoseOutput {
                input_summary: InputSummary::new(&l.pair, l.source),
                diagnostics: diagnostics(&l.pair, &model, c.break_date)?,
                scenario: l.scenario,
            };
            emit(&output, c.out.as_deref())?;
        }
        Command::Report { common: c, plots } => {
            let l = load(&c)?;
            let settings = c.settings(l.seed, DEFAULT_HORIZON);
            let analysis = analyze(&l.pair, l.source, &settings, l.scenario)?;
            let text = to_json_checked(&analysis.report)?;
            if let Some(dir) = &plots {
                write_plotdata(&analysis, dir)?;
            }
            match &c.out {
                Some(path) => write_atomic(path, text.as_bytes())?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
