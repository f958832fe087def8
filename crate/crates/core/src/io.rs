//! Input CSV (`date,peg,green`) and atomic file output.

use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::series::BivariateSeries;

pub const CSV_HEADER: [&str; 3] = ["date", "peg", "green"];

fn parse_error(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_number(field: &str, name: &str, source: &str, line: usize) -> Result<f64> {
    let bad = || parse_error(source, line, format!("{name} value {field:?} is not a decimal number"));
    // Rust's float parser also accepts "inf", "NaN" and friends.
    if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b)) {
        return Err(bad());
    }
    let v: f64 = field.parse().map_err(|_| bad())?;
    if !v.is_finite() {
        return Err(bad());
    }
    Ok(v)
}

/// Parses CSV text; `source` names the input in error messages.
pub fn parse_csv(text: &str, source: &str) -> Result<BivariateSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r.map_err(|e| parse_error(source, 1, e.to_string()))?,
        None => return Err(parse_error(source, 1, "empty file; expected header date,peg,green")),
    };
    if header.iter().ne(CSV_HEADER) {
        let got: Vec<&str> = header.iter().collect();
        return Err(parse_error(
            source,
            1,
            format!("header must be exactly date,peg,green, got {}", got.join(",")),
        ));
    }

    let (mut dates, mut peg, mut green) = (Vec::new(), Vec::new(), Vec::new());
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(source, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(parse_error(
                source,
                line,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .ok()
            .filter(|d| d.format("%Y-%m-%d").to_string() == record[0])
            .ok_or_else(|| parse_error(source, line, format!("date {:?} is not YYYY-MM-DD", &record[0])))?;
        if let Some(prev) = dates.last() {
            if date == *prev {
                return Err(parse_error(source, line, format!("duplicate date {date}")));
            }
            if date < *prev {
                return Err(parse_error(source, line, format!("date {date} is earlier than {prev}")));
            }
        }
        dates.push(date);
        peg.push(parse_number(&record[1], "peg", source, line)?);
        green.push(parse_number(&record[2], "green", source, line)?);
    }
    if dates.is_empty() {
        return Err(parse_error(source, 2, "no data rows"));
    }
    let pair = BivariateSeries::new(dates, peg, green)?;
    log::info!(
        "read {} rows from {source} ({} to {})",
        pair.len(),
        pair.dates()[0],
        pair.dates()[pair.len() - 1]
    );
    Ok(pair)
}

pub fn read_csv(path: &Path) -> Result<BivariateSeries> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, &path.display().to_string())
}

/// Canonical CSV text: LF endings and shortest round-trip decimals.
pub fn format_csv(pair: &BivariateSeries) -> String {
    let mut out = String::with_capacity(32 * (pair.len() + 1));
    out.push_str("date,peg,green\n");
    for ((d, p), g) in pair.dates().iter().zip(pair.peg()).zip(pair.green()) {
        out.push_str(&format!("{},{},{}\n", d.format("%Y-%m-%d"), p, g));
    }
    out
}

pub fn write_csv(pair: &BivariateSeries, path: &Path) -> Result<()> {
    write_atomic(path, format_csv(pair).as_bytes())
}

/// Writes through a temporary file in the target directory, then renames,
/// so a failure never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "date,peg,green\n2025-06-01,1,100\n2025-06-02,0.9998,99.5\n2025-06-03,1.0001,101.25\n";

    #[test]
    fn reads_well_formed_file() {
        let pair = parse_csv(GOOD, "good.csv").unwrap();
        assert_eq!(pair.len(), 3);
        assert_eq!(pair.peg()[1], 0.9998);
        assert_eq!(pair.green()[2], 101.25);
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let pair = parse_csv(GOOD, "good.csv").unwrap();
        assert_eq!(format_csv(&pair), GOOD);
    }

    fn line_of(err: Error) -> usize {
        match err {
            Error::Parse { line, .. } => line,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn duplicate_date_names_its_line() {
        let text = "date,peg,green\n2025-05-31,1,100\n2025-06-01,1,100\n2025-06-01,1,100\n";
        let err = parse_csv(text, "dup.csv").unwrap_err();
        assert!(err.to_string().contains("duplicate date 2025-06-01"), "{err}");
        assert_eq!(line_of(err), 4);
    }

    #[test]
    fn rejects_malformed_input() {
        let cases = [
            ("", 1),
            ("date,peg\n2025-06-01,1\n", 1),
            ("Date,peg,green\n", 1),
            ("date,peg,green\n", 2),
            ("date,peg,green\n2025-06-01,1\n", 2),
            ("date,peg,green\n2025-06-01,1,100\n2025-6-2,1,100\n", 3),
            ("date,peg,green\n2025-06-01,1,100\n2025-06-02,1,1,000\n", 3),
            ("date,peg,green\n2025-06-01,\"1,5\",100\n", 2),
            ("date,peg,green\n2025-06-01,1,NaN\n", 2),
            ("date,peg,green\n2025-06-01,1,inf\n", 2),
            ("date,peg,green\n2025-06-01,1,\n", 2),
            ("date,peg,green\n2025-06-02,1,100\n2025-06-01,1,100\n", 3),
        ];
        for (text, line) in cases {
            let err = parse_csv(text, "bad.csv").unwrap_err();
            assert_eq!(line_of(err), line, "{text:?}");
        }
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, "stale").unwrap();
        let pair = parse_csv(GOOD, "good.csv").unwrap();
        write_csv(&pair, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), pair);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_csv(&pair, &dir.path().join("missing/data.csv")).is_err());
    }

    mod properties {
        use super::*;
        use crate::series::daily_dates;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn generated_files_round_trip(
                rows in prop::collection::vec((0.5f64..1.5, 1.0f64..500.0), 2..60),
                day in 0u32..3000,
            ) {
                let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(day as u64);
                let (peg, green): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
                let pair = BivariateSeries::new(daily_dates(start, peg.len()), peg, green).unwrap();
                let text = format_csv(&pair);
                let back = parse_csv(&text, "gen.csv").unwrap();
                prop_assert_eq!(&back, &pair);
                prop_assert_eq!(format_csv(&back), text);
            }
        }
    }
}
