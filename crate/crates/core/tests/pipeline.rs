use std::path::Path;

use peg_nexus::report::{analyze, plot_tables, to_json_checked, AnalysisReport, AnalysisSettings, ScenarioRef, BREAK_SEARCH_TRIM};
use peg_nexus::simulator::{builtin_scenario, simulate, Scenario, BUILTIN_NAMES};

fn genius() -> peg_nexus::report::Analysis {
    let s = builtin_scenario("genius-2025").unwrap();
    let (pair, _) = simulate(&s, None).unwrap();
    let settings = AnalysisSettings {
        paths: 2000,
        seed: 11,
        ..AnalysisSettings::default()
    };
    analyze(&pair, "scenario:genius-2025", &settings, Some(ScenarioRef::new(&s, s.seed))).unwrap()
}

#[test]
fn shipped_scenario_files_match_builtins() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for name in BUILTIN_NAMES {
        let text = std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
        assert_eq!(Scenario::from_json(&text).unwrap(), builtin_scenario(name).unwrap(), "{name}");
    }
}

#[test]
fn report_round_trips_byte_for_byte() {
    let a = genius();
    let text = to_json_checked(&a.report).unwrap();
    let back: AnalysisReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, a.report);
    assert_eq!(to_json_checked(&back).unwrap(), text);
    let scenario = a.report.provenance.scenario.as_ref().unwrap();
    assert_eq!((scenario.name.as_str(), scenario.seed), ("genius-2025", 42));
}

#[test]
fn late_break_is_pinned_to_the_trim_edge() {
    // The scenario breaks at day 970, inside the trimmed tail of the search,
    // so the estimate sits at the last admissible day and stays significant.
    let a = genius();
    let d = &a.report.diagnostics;
    assert!(d.break_date_estimated);
    let n = a.pair.len();
    let last = n - (BREAK_SEARCH_TRIM * n as f64).ceil() as usize;
    let gap = (a.pair.dates()[last] - d.variance_break.break_date).num_days().abs();
    assert!(gap <= 1, "{}", d.variance_break.break_date);
    assert!(d.variance_break.p_value < 1e-6);
}

fn parse_rows(body: &str) -> Vec<Vec<f64>> {
    body.lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn plot_tables_respect_inherited_invariants() {
    let a = genius();
    let tables = plot_tables(&a).unwrap();
    let get = |name: &str| &tables.iter().find(|t| t.0 == name).unwrap().1;

    for row in parse_rows(get("fevd.csv")) {
        assert!((row[1] + row[2] - 1.0).abs() <= 1e-9);
    }
    let fc = get("forecast.csv");
    assert!(fc.starts_with("horizon,point,q0.05,q0.25,q0.5,q0.75,q0.95,below_0.995\n"));
    for row in parse_rows(fc) {
        assert!(row[2..7].windows(2).all(|w| w[0] <= w[1]), "{row:?}");
    }
    let irf = parse_rows(get("irf.csv"));
    assert_eq!(irf.len(), a.report.irf.horizons.len());
    assert_eq!(irf[0][1], a.report.irf.response[0]);

    let density = parse_rows(get("density.csv"));
    let area: f64 = density.windows(2).map(|w| 0.5 * (w[1][0] - w[0][0]) * (w[0][1] + w[1][1])).sum();
    assert!((area - 1.0).abs() < 0.01, "{area}");

    for (_, body) in &tables {
        assert!(!body.contains("NaN") && !body.contains("inf"));
        assert!(body.ends_with('\n') && !body.contains('\r'));
    }
}
