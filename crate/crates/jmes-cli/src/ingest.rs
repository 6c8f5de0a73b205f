//! Reading price or loss series and aligning two markets day by day.
//!
//! Two layouts are accepted:
//!
//! * `date,close` price files with strict ISO-8601 dates (`YYYY-MM-DD`),
//!   strictly increasing. An empty close, `NA` or `null` marks a closed day.
//! * single-column loss files, used as given.
//!
//! A non-numeric first row is taken as a header.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use jmes::pot::log_losses;

use crate::error::{CliError, Result};

/// A market series as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    /// Closing prices by trading day; closed days are absent.
    Prices { dates: Vec<NaiveDate>, close: Vec<f64>, closed_days: usize },
    /// Losses with no dates.
    Losses(Vec<f64>),
}

/// Loss pairs ready for fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Date of each `y` loss when the inputs carry dates.
    pub dates: Option<Vec<NaiveDate>>,
    /// Rows of each input dropped because the other market had no close
    /// that day (closed days within a file included).
    pub misaligned_x: usize,
    pub misaligned_y: usize,
}

impl Aligned {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

fn invalid(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}:{line}: {msg}", path.display()))
}

/// `YYYY-MM-DD` with exactly that width.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return None;
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

fn is_missing(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") || s.eq_ignore_ascii_case("null")
}

fn parse_number(path: &Path, line: usize, s: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(invalid(path, line, format!("cannot parse number '{s}'"))),
    }
}

pub fn read_series(path: &Path) -> Result<Series> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_series(path, &text)
}

/// Parses the contents of a series file; `path` is used in messages.
pub fn parse_series(path: &Path, text: &str) -> Result<Series> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| invalid(path, i + 1, e))?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, rec.iter().map(str::to_string).collect::<Vec<_>>()));
    }
    if rows.is_empty() {
        return Err(CliError::Validation(format!("{}: no data rows", path.display())));
    }
    let width = rows[0].1.len();
    if !(width == 1 || width == 2) {
        return Err(invalid(path, rows[0].0, format!("expected 1 or 2 columns, found {width}")));
    }
    let value_col = width - 1;
    let first = &rows[0].1;
    let header = if width == 2 { parse_date(&first[0]).is_none() } else { first[0].parse::<f64>().is_err() };
    let body = if header { &rows[1..] } else { &rows[..] };
    if let Some((line, r)) = body.iter().find(|(_, r)| r.len() != width) {
        return Err(invalid(path, *line, format!("expected {width} columns, found {}", r.len())));
    }
    if width == 1 {
        let values = body.iter().map(|(line, r)| parse_number(path, *line, &r[value_col])).collect::<Result<_>>()?;
        return Ok(Series::Losses(values));
    }
    let (mut dates, mut close, mut closed_days) = (Vec::new(), Vec::new(), 0);
    let mut last: Option<NaiveDate> = None;
    for (line, r) in body {
        let d = parse_date(&r[0])
            .ok_or_else(|| invalid(path, *line, format!("invalid date '{}' (expected YYYY-MM-DD)", r[0])))?;
        if let Some(prev) = last {
            if d <= prev {
                return Err(invalid(path, *line, format!("date {d} does not follow {prev}")));
            }
        }
        last = Some(d);
        if is_missing(&r[1]) {
            closed_days += 1;
            continue;
        }
        let p = parse_number(path, *line, &r[1])?;
        if p <= 0.0 {
            return Err(invalid(path, *line, format!("non-positive price {p}")));
        }
        dates.push(d);
        close.push(p);
    }
    Ok(Series::Prices { dates, close, closed_days })
}

/// Aligns two series and turns prices into daily losses.
///
/// Price series are joined on common trading days, so a day on which
/// either market is closed is dropped from both, and losses are then taken
/// between consecutive common days. Loss series without dates must have
/// equal length. With `lag_x = 1`, `y` on common day `k` is paired with
/// `x` on common day `k − 1`.
pub fn align(x: &Series, y: &Series, lag_x: u32) -> Result<Aligned> {
    let (mut xl, mut yl, dates, misaligned_x, misaligned_y) = match (x, y) {
        (
            Series::Prices { dates: dx, close: cx, closed_days: kx },
            Series::Prices { dates: dy, close: cy, closed_days: ky },
        ) => {
            let ymap: BTreeMap<NaiveDate, f64> = dy.iter().copied().zip(cy.iter().copied()).collect();
            let mut common = Vec::new();
            let (mut px, mut py) = (Vec::new(), Vec::new());
            for (d, p) in dx.iter().zip(cx) {
                if let Some(q) = ymap.get(d) {
                    common.push(*d);
                    px.push(*p);
                    py.push(*q);
                }
            }
            if common.len() < 2 {
                return Err(CliError::Validation("fewer than two common trading days".into()));
            }
            let mx = dx.len() - common.len() + kx;
            let my = dy.len() - common.len() + ky;
            let lx = log_losses(&px).map_err(|e| CliError::library("x prices", e))?;
            let ly = log_losses(&py).map_err(|e| CliError::library("y prices", e))?;
            (lx, ly, Some(common[1..].to_vec()), mx, my)
        }
        (Series::Losses(lx), Series::Losses(ly)) => {
            if lx.len() != ly.len() {
                return Err(CliError::Validation(format!(
                    "undated loss series differ in length ({} vs {}) and cannot be aligned",
                    lx.len(),
                    ly.len()
                )));
            }
            (lx.clone(), ly.clone(), None, 0, 0)
        }
        _ => return Err(CliError::Validation("cannot align a price series with an undated loss series".into())),
    };
    let mut dates = dates;
    match lag_x {
        0 => {}
        1 => {
            if xl.len() < 2 {
                return Err(CliError::Validation("too few observations to apply lag_x = 1".into()));
            }
            xl.pop();
            yl.remove(0);
            if let Some(d) = dates.as_mut() {
                d.remove(0);
            }
        }
        other => return Err(CliError::Validation(format!("lag_x must be 0 or 1, got {other}"))),
    }
    Ok(Aligned { x: xl, y: yl, dates, misaligned_x, misaligned_y })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Series> {
        parse_series(Path::new("test.csv"), text)
    }

    fn d(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    #[test]
    fn strict_dates() {
        assert!(parse_date("2020-01-05").is_some());
        for bad in ["2020-1-5", "05/01/2020", "2020-02-30", "2020-01-05T00:00", " 2020-01-05x"] {
            assert!(parse_date(bad).is_none(), "{bad}");
        }
        let err = parse("date,close\n2020-01-02,100\n2020-1-3,101\n").unwrap_err();
        assert!(err.to_string().contains("test.csv:3"), "{err}");
    }

    #[test]
    fn price_file_with_header_and_closed_day() {
        let s = parse("date,close\n2020-01-02,100\n2020-01-03,NA\n2020-01-06,101.5\n").unwrap();
        assert_eq!(
            s,
            Series::Prices { dates: vec![d("2020-01-02"), d("2020-01-06")], close: vec![100.0, 101.5], closed_days: 1 }
        );
    }

    #[test]
    fn loss_file_without_header() {
        assert_eq!(parse("1.5\n-0.25\n\n3\n").unwrap(), Series::Losses(vec![1.5, -0.25, 3.0]));
        assert_eq!(parse("loss\n1.5\n").unwrap(), Series::Losses(vec![1.5]));
    }

    #[test]
    fn malformed_files_are_rejected() {
        for text in [
            "",
            "a,b,c\n1,2,3\n",
            "2020-01-02,100\n2020-01-02,101\n",
            "2020-01-03,100\n2020-01-02,101\n",
            "2020-01-02,-5\n",
            "2020-01-02,abc\n",
            "1.0\nx\n",
            "2020-01-02,100\n2020-01-03\n",
        ] {
            assert!(parse(text).is_err(), "{text:?}");
        }
    }

    #[test]
    fn alignment_drops_days_when_either_market_is_closed() {
        let x = parse("2020-01-02,100\n2020-01-03,99\n2020-01-06,98\n2020-01-07,97\n").unwrap();
        // y closed on 2020-01-06 and trading on 2020-01-08 when x is closed
        let y = parse("2020-01-02,10\n2020-01-03,11\n2020-01-07,12\n2020-01-08,13\n").unwrap();
        let a = align(&x, &y, 0).unwrap();
        assert_eq!(a.dates, Some(vec![d("2020-01-03"), d("2020-01-07")]));
        assert_eq!((a.misaligned_x, a.misaligned_y), (1, 1));
        assert!((a.x[1] - -100.0 * (97.0f64 / 99.0).ln()).abs() < 1e-12);
        assert!((a.y[1] - -100.0 * (12.0f64 / 11.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn lag_pairs_previous_x_with_current_y() {
        let x = Series::Losses(vec![1.0, 2.0, 3.0, 4.0]);
        let y = Series::Losses(vec![10.0, 20.0, 30.0, 40.0]);
        let a = align(&x, &y, 1).unwrap();
        assert_eq!(a.x, vec![1.0, 2.0, 3.0]);
        assert_eq!(a.y, vec![20.0, 30.0, 40.0]);
        assert!(align(&x, &Series::Losses(vec![1.0]), 0).is_err());
        assert!(align(&x, &y, 2).is_err());
    }
}
