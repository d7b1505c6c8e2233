//! Daily closing-price files.
//!
//! Input is a CSV with a header row. Date and close columns are located by
//! name; dates are ISO-8601 unless a `strftime` format is given. Rows with
//! an unparseable date or price, or a nonpositive close, are skipped and
//! counted as gaps.

use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::measures::{ReturnSeries, Source};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub date_column: String,
    pub close_column: String,
    /// `strftime` pattern such as `%m/%d/%Y`; `None` means `%Y-%m-%d`.
    pub date_format: Option<String>,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self {
            date_column: "Date".into(),
            close_column: "Close".into(),
            date_format: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub symbol: String,
    pub dates: Vec<NaiveDate>,
    pub closes: Vec<f64>,
    pub gaps: usize,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }
}

pub fn parse_prices(path: &Path, spec: &ColumnSpec) -> Result<PriceSeries> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let file = std::fs::File::open(path)?;
    let symbol = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match parse_prices_from(file, &symbol, spec) {
        Err(Error::NoValidRows(_)) => Err(Error::NoValidRows(path.to_path_buf())),
        other => other,
    }
}

pub fn parse_prices_from<R: Read>(input: R, symbol: &str, spec: &ColumnSpec) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let date_idx = column(&spec.date_column)?;
    let close_idx = column(&spec.close_column)?;
    let format = spec.date_format.as_deref().unwrap_or("%Y-%m-%d");

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    let mut gaps = 0;
    for record in reader.records() {
        let Ok(record) = record else {
            gaps += 1;
            continue;
        };
        let date = record
            .get(date_idx)
            .and_then(|d| NaiveDate::parse_from_str(d, format).ok());
        let close = record.get(close_idx).and_then(|c| c.parse::<f64>().ok());
        match (date, close) {
            (Some(d), Some(c)) if c > 0.0 && c.is_finite() => rows.push((d, c)),
            _ => gaps += 1,
        }
    }
    if rows.is_empty() {
        return Err(Error::NoValidRows(symbol.into()));
    }
    rows.sort_by_key(|&(d, _)| d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate(w[0].0.to_string()));
    }
    let (dates, closes) = rows.into_iter().unzip();
    Ok(PriceSeries {
        symbol: symbol.to_owned(),
        dates,
        closes,
        gaps,
    })
}

/// Daily log-returns `ln close(t) - ln close(t - 1)` over consecutive
/// observations; calendar gaps are not filled.
pub fn price_log_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    if p.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: p.len(),
        });
    }
    let values = p.closes.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    Ok(ReturnSeries::new(values, Source::MarketData))
}
