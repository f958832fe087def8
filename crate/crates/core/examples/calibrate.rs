//! Prints the calibration metrics of a scenario over a range of seeds.
//!
//! cargo run --release --example calibrate -- genius-2025 20
//! cargo run --release --example calibrate -- path/to/scenario.json 20

use peg_nexus::garch::fit_garch;
use peg_nexus::series::{ccf, difference, rolling_correlation};
use peg_nexus::simulator::{builtin_scenario, simulate, Scenario};
use peg_nexus::tailrisk::tail_report;
use peg_nexus::vecm::{
    fevd, fit_vecm, forecast, granger_causality, irf, ForecastSettings, GrangerDirection,
};


fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(String::as_str).unwrap_or("genius-2025");
    let seeds: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let scenario: Scenario = match builtin_scenario(name) {
        Ok(s) => s,
        Err(_) => Scenario::from_json(&std::fs::read_to_string(name).expect("scenario file"))
            .expect("valid scenario"),
    };

    let lags: usize = std::env::var("LAGS").ok().and_then(|s| s.parse().ok()).unwrap_or(2);
    let mut half_lives = Vec::new();
    println!("seed  rank  alpha_peg  gamma     hl      fevd10  corr_pre corr_post min_peg tail  pb995  granger_p ccf_lag");
    for seed in 0..seeds {
        let seed = if seeds == 1 { scenario.seed } else { seed };
        let (pair, _) = simulate(&scenario, Some(seed)).expect("simulate");
        let model = match fit_vecm(&pair, lags, None) {
            Ok(m) => m,
            Err(e) => {
                println!("{seed:4}  fit failed: {e}");
                continue;
            }
        };
        let ir = irf(&model, 120).expect("irf");
        let hl = ir.half_life.days().unwrap_or(f64::INFINITY);
        half_lives.push(hl);
        let fe = fevd(&model, 10).expect("fevd");

        let rc = rolling_correlation(&pair, 60).expect("rollcorr");
        let brk = scenario.break_day.unwrap_or(pair.len());
        // Window ending on index `i + 59`.
        let (mut pre, mut post) = (Vec::new(), Vec::new());
        for (i, v) in rc.values.iter().enumerate() {
            if let Some(v) = v {
                if i + 59 < brk {
                    pre.push(*v)
                } else {
                    post.push(*v)
                }
            }
        }
        let post_max = post.iter().copied().fold(f64::NAN, f64::max);

        let min_peg = pair.peg().iter().copied().fold(f64::INFINITY, f64::min);
        let dev = pair.peg_series().map(|p| p - 1.0).expect("deviation");
        let tail = tail_report(&dev, 0.99, 0.9).expect("tail");

        let pg = fit_garch(&model.residuals.peg_series()).expect("garch peg");
        let gg = fit_garch(&model.residuals.green_series()).expect("garch green");
        let settings = ForecastSettings {
            seed,
            ..ForecastSettings::default()
        };
        let fan = forecast(&model, &pg, &gg, &settings).expect("forecast");

        let granger = granger_causality(&pair, lags, GrangerDirection::GreenToPeg).expect("granger");
        let dg = difference(&pair.green_series(), 1).unwrap();
        let dp = difference(&pair.peg_series(), 1).unwrap();
        let cc = ccf(&dg, &dp, 10).unwrap();
        let lag = cc.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;

        println!(
            "{seed:4}  {:?}  {:9.5} {:9.6} {:7.2} {:7.3} {:8.3} {:8.3} {:7.4} {:5.2} {:6.3} {:9.2e} {:4}   pers {:.3}/{:.3}",
            model.johansen_rank,
            model.alpha[0],
            model.gamma(),
            hl,
            fe.share_green[9],
            median(pre),
            post_max,
            min_peg,
            tail.tail_ratio.unwrap_or(f64::NAN),
            fan.prob_below[0][9],
            granger.p_value,
            lag,
            pg.persistence,
            gg.persistence,
        );
    }
    println!("median half-life {:.3}", median(half_lives));
}
