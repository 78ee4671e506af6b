//! Price CSV ingestion and log-loss transformation.

use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{CoriskError, Result};
use crate::matrix::Matrix;

/// Usable loss rows required by the CLI.
pub const MIN_LOSS_ROWS: usize = 200;

/// Log-losses `X_t = −100·ln(p_t / p_{t−1})` indexed by the later date.
#[derive(Debug, Clone, PartialEq)]
pub struct LossData {
    pub assets: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub losses: Matrix,
    pub stats: IngestStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub price_rows: usize,
    pub dropped_rows: usize,
    pub loss_rows: usize,
    pub first_date: String,
    pub last_date: String,
}

fn input(msg: impl Into<String>) -> CoriskError {
    CoriskError::Input(msg.into())
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d);
    }
    if let Ok(d) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Ok(d.date());
    }
    if let Ok(d) = DateTime::parse_from_rfc3339(s) {
        return Ok(d.date_naive());
    }
    Err(input(format!("unparseable ISO-8601 date {s:?}")))
}

fn parse_price(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0)
}

/// Reads a price CSV with a header row. The date column is the one named `date` or
/// `time` (case-insensitive), else the first. `columns` picks price columns in order;
/// empty means every other column.
pub fn ingest_prices(path: &Path, columns: &[String], min_rows: usize) -> Result<LossData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| input(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let date_col = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("date") || h.eq_ignore_ascii_case("time"))
        .unwrap_or(0);
    let price_cols: Vec<usize> = if columns.is_empty() {
        (0..headers.len()).filter(|&c| c != date_col).collect()
    } else {
        columns
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .filter(|&c| c != date_col)
                    .ok_or_else(|| input(format!("column {name:?} not found in {}", path.display())))
            })
            .collect::<Result<_>>()?
    };
    if price_cols.len() < 2 {
        return Err(input(format!("{} needs at least two price columns", path.display())));
    }
    let assets: Vec<String> = price_cols.iter().map(|&c| headers[c].clone()).collect();

    let mut rows: Vec<(NaiveDate, Option<Vec<f64>>)> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| input(format!("{} line {}: {e}", path.display(), line + 2)))?;
        let date = parse_date(rec.get(date_col).unwrap_or(""))
            .map_err(|e| input(format!("{} line {}: {e}", path.display(), line + 2)))?;
        let prices: Option<Vec<f64>> = price_cols.iter().map(|&c| rec.get(c).and_then(parse_price)).collect();
        rows.push((date, prices));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(input(format!("duplicate date {} in {}", w[0].0, path.display())));
    }
    let price_rows = rows.len();
    let usable: Vec<(NaiveDate, Vec<f64>)> = rows.into_iter().filter_map(|(d, p)| p.map(|p| (d, p))).collect();
    let dropped_rows = price_rows - usable.len();

    let n = assets.len();
    let mut dates = Vec::with_capacity(usable.len().saturating_sub(1));
    let mut data = Vec::with_capacity(usable.len().saturating_sub(1) * n);
    for w in usable.windows(2) {
        dates.push(w[1].0);
        data.extend(w[0].1.iter().zip(&w[1].1).map(|(a, b)| -100.0 * (b / a).ln()));
    }
    if dates.len() < min_rows {
        return Err(input(format!("{} has {} usable loss rows, need at least {min_rows}", path.display(), dates.len())));
    }
    let stats = IngestStats {
        price_rows,
        dropped_rows,
        loss_rows: dates.len(),
        first_date: dates.first().map(ToString::to_string).unwrap_or_default(),
        last_date: dates.last().map(ToString::to_string).unwrap_or_default(),
    };
    Ok(LossData { assets, losses: Matrix::from_vec(dates.len(), n, data)?, dates, stats })
}

pub fn write_losses(path: &Path, data: &LossData) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| input(format!("cannot write {}: {e}", path.display())))?;
    let io = |e: csv::Error| input(format!("cannot write {}: {e}", path.display()));
    let mut header = vec!["date".to_string()];
    header.extend(data.assets.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for (i, d) in data.dates.iter().enumerate() {
        let mut rec = vec![d.to_string()];
        rec.extend(data.losses.row(i).iter().map(|v| format!("{v}")));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| input(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, text: &str) -> std::path::PathBuf {
        let p = dir.join("p.csv");
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn hand_computed_losses() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "date,A,B\n2020-01-03,101,50\n2020-01-01,100,50\n2020-01-02,101,50\n");
        let d = ingest_prices(&p, &[], 1).unwrap();
        assert_eq!(d.assets, vec!["A", "B"]);
        assert_eq!(d.losses.nrows(), 2);
        assert!((d.losses.get(0, 0) + 100.0 * 1.01f64.ln()).abs() < 1e-12);
        assert!((d.losses.get(0, 0) + 0.9950330853).abs() < 1e-9);
        assert_eq!(d.losses.get(1, 0), 0.0);
        assert_eq!(d.losses.get(0, 1), 0.0);
        assert_eq!(d.dates[1], NaiveDate::from_ymd_opt(2020, 1, 3).unwrap());
    }

    #[test]
    fn drops_bad_rows_and_selects_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "x,time,B,C\n1,2020-01-01,1,4\n2,2020-01-02,,4\n3,2020-01-03,2,0\n4,2020-01-04,2,8\n");
        let d = ingest_prices(&p, &["C".into(), "B".into()], 1).unwrap();
        assert_eq!(d.stats.dropped_rows, 2);
        assert_eq!(d.losses.nrows(), 1);
        assert!((d.losses.get(0, 0) + 100.0 * 2f64.ln()).abs() < 1e-12);
        assert!(ingest_prices(&p, &["Z".into(), "B".into()], 1).is_err());
    }

    #[test]
    fn rejects_duplicates_short_files_and_bad_dates() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "date,A,B\n2020-01-01,1,1\n2020-01-01,1,1\n");
        assert!(matches!(ingest_prices(&p, &[], 1), Err(CoriskError::Input(_))));
        let p = write(dir.path(), "date,A,B\n2020-01-01,1,1\n2020-01-02,1,1\n");
        assert!(ingest_prices(&p, &[], MIN_LOSS_ROWS).is_err());
        let p = write(dir.path(), "date,A,B\n01/02/2020,1,1\n");
        assert!(ingest_prices(&p, &[], 0).is_err());
        assert_eq!(parse_date("2021-05-06T00:00:00Z").unwrap(), NaiveDate::from_ymd_opt(2021, 5, 6).unwrap());
    }
}
