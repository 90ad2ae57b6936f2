//! Daily series ingestion, weekly maxima, seasonal filtering and
//! L-shaped exceedance sets.

use std::io::Read;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::sample::Sample;

/// Dated multivariate series; one value column per site.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSeries {
    pub dates: Vec<NaiveDate>,
    /// Row-major values, `values[i][j]` for date `i` and site `j`.
    pub values: Vec<Vec<f64>>,
    pub site_labels: Vec<String>,
}

/// Counts of rows altered while loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_dropped_missing: usize,
    pub out_of_order: usize,
}

impl BivariateSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.site_labels.iter().position(|l| l == label)
    }

    /// Keeps the named columns in the given order.
    pub fn select(&self, labels: &[&str]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| {
                self.column_index(l)
                    .ok_or_else(|| Error::Domain(format!("unknown column {l:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dates: self.dates.clone(),
            values: self
                .values
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
            site_labels: labels.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// The two columns as a [`Sample`].
    pub fn to_sample(&self) -> Result<Sample> {
        if self.site_labels.len() != 2 {
            return domain(format!(
                "expected exactly 2 value columns, got {}",
                self.site_labels.len()
            ));
        }
        Ok(Sample::new(self.values.iter().map(|r| [r[0], r[1]]).collect()))
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "NaN" | "nan" | "na")
}

/// Reads a headered CSV with an ISO-8601 date column and numeric value
/// columns. Rows with a missing value are dropped; out-of-order rows are
/// sorted; duplicate dates are an error.
pub fn read_series<R: Read>(
    reader: R,
    label: &Path,
    date_column: &str,
    value_columns: &[&str],
) -> Result<(BivariateSeries, LoadReport)> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: label.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("column {name:?} not found")))
    };
    let date_idx = find(date_column)?;
    let value_idx = value_columns.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;

    let mut report = LoadReport::default();
    let mut rows: Vec<(NaiveDate, Vec<f64>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        report.rows_read += 1;
        let date_cell = rec.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_cell, "%Y-%m-%d")
            .map_err(|e| parse_err(line, format!("bad date {date_cell:?}: {e}")))?;
        let mut vals = Vec::with_capacity(value_idx.len());
        let mut missing = false;
        for (&j, name) in value_idx.iter().zip(value_columns) {
            let cell = rec.get(j).unwrap_or("");
            if is_missing(cell) {
                missing = true;
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(line, format!("column {name:?}: non-numeric value {cell:?}"))
            })?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {name:?}: non-finite value")));
            }
            vals.push(v);
        }
        if missing {
            report.rows_dropped_missing += 1;
            continue;
        }
        if let Some((prev, _)) = rows.last() {
            if date < *prev {
                report.out_of_order += 1;
            }
        }
        rows.push((date, vals));
    }
    if report.out_of_order > 0 {
        warn!("{}: {} rows out of date order were sorted", label.display(), report.out_of_order);
        rows.sort_by_key(|r| r.0);
    }
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(parse_err(0, format!("duplicate date {}", w[0].0)));
    }
    if report.rows_dropped_missing > 0 {
        warn!(
            "{}: dropped {} rows with missing values",
            label.display(),
            report.rows_dropped_missing
        );
    }
    let (dates, values) = rows.into_iter().unzip();
    Ok((
        BivariateSeries {
            dates,
            values,
            site_labels: value_columns.iter().map(|s| s.to_string()).collect(),
        },
        report,
    ))
}

pub fn load_csv(
    path: &Path,
    date_column: &str,
    value_columns: &[&str],
) -> Result<(BivariateSeries, LoadReport)> {
    let f = std::fs::File::open(path)?;
    read_series(f, path, date_column, value_columns)
}

/// Column names of a CSV file, in order.
pub fn csv_headers(path: &Path) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    Ok(rdr.headers()?.iter().map(|s| s.to_string()).collect())
}

/// Maxima over consecutive 7-day blocks starting at the first date; each
/// block is dated by its first day. Blocks with a missing day are dropped.
pub fn weekly_maxima(series: &BivariateSeries) -> BivariateSeries {
    let k = series.site_labels.len();
    let mut out = BivariateSeries {
        dates: Vec::new(),
        values: Vec::new(),
        site_labels: series.site_labels.clone(),
    };
    let Some(&start) = series.dates.first() else {
        warn!("weekly maxima of an empty series");
        return out;
    };
    let last = *series.dates.last().expect("non-empty");
    if (last - start).num_days() < 6 {
        warn!("series spans fewer than 7 days; no weekly blocks");
    }
    let mut i = 0;
    let mut block_start = start;
    while block_start + Duration::days(6) <= last {
        let block_end = block_start + Duration::days(6);
        while i < series.len() && series.dates[i] < block_start {
            i += 1;
        }
        let mut days = 0;
        let mut maxima = vec![f64::NEG_INFINITY; k];
        let mut j = i;
        while j < series.len() && series.dates[j] <= block_end {
            days += 1;
            for (m, v) in maxima.iter_mut().zip(&series.values[j]) {
                *m = m.max(*v);
            }
            j += 1;
        }
        if days == 7 {
            out.dates.push(block_start);
            out.values.push(maxima);
        }
        i = j;
        block_start += Duration::days(7);
    }
    out
}

/// Month-day bound of a season.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MonthDay {
    pub month: u32,
    pub day: u32,
}

impl MonthDay {
    pub fn new(month: u32, day: u32) -> Result<Self> {
        // 2000 is a leap year, so 02-29 is accepted.
        if NaiveDate::from_ymd_opt(2000, month, day).is_none() {
            return domain(format!("invalid month-day {month:02}-{day:02}"));
        }
        Ok(Self { month, day })
    }

    /// Parses `MM-DD`.
    pub fn parse(s: &str) -> Result<Self> {
        let (m, d) = s
            .split_once('-')
            .ok_or_else(|| Error::Domain(format!("expected MM-DD, got {s:?}")))?;
        let m = m.parse().map_err(|_| Error::Domain(format!("bad month in {s:?}")))?;
        let d = d.parse().map_err(|_| Error::Domain(format!("bad day in {s:?}")))?;
        Self::new(m, d)
    }

    fn of(date: NaiveDate) -> Self {
        Self {
            month: date.month(),
            day: date.day(),
        }
    }
}

/// Parses `MM-DD:MM-DD`.
pub fn parse_season(s: &str) -> Result<(MonthDay, MonthDay)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Domain(format!("expected MM-DD:MM-DD, got {s:?}")))?;
    Ok((MonthDay::parse(a)?, MonthDay::parse(b)?))
}

/// Keeps rows dated within `[start, end]` of any year, inclusive; a start
/// after the end wraps over the new year.
pub fn season_filter(series: &BivariateSeries, start: MonthDay, end: MonthDay) -> BivariateSeries {
    let keep = |d: NaiveDate| {
        let md = MonthDay::of(d);
        if start <= end {
            start <= md && md <= end
        } else {
            md >= start || md <= end
        }
    };
    let mut out = BivariateSeries {
        dates: Vec::new(),
        values: Vec::new(),
        site_labels: series.site_labels.clone(),
    };
    for (d, v) in series.dates.iter().zip(&series.values) {
        if keep(*d) {
            out.dates.push(*d);
            out.values.push(v.clone());
        }
    }
    out
}

/// Rows in the L-shaped region above the marginal thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceSet {
    pub threshold_level: f64,
    pub thresholds: [f64; 2],
    pub dates: Vec<NaiveDate>,
    /// Retained observations on the original scale.
    pub rows: Sample,
    pub total_n: usize,
}

/// Threshold metadata written next to an exceedance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInfo {
    pub level: f64,
    pub u1: f64,
    pub u2: f64,
    pub total_n: usize,
    pub retained: usize,
}

impl ExceedanceSet {
    /// Retained rows minus the thresholds, the scale the models are fitted on.
    pub fn excesses(&self) -> Sample {
        let [u1, u2] = self.thresholds;
        Sample::new(self.rows.rows().iter().map(|r| [r[0] - u1, r[1] - u2]).collect())
    }

    pub fn info(&self) -> ThresholdInfo {
        ThresholdInfo {
            level: self.threshold_level,
            u1: self.thresholds[0],
            u2: self.thresholds[1],
            total_n: self.total_n,
            retained: self.rows.len(),
        }
    }
}

/// Order statistic at position `⌈n·level⌉` (1-based).
pub fn empirical_threshold(values: &[f64], level: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = ((v.len() as f64 * level).ceil() as usize).clamp(1, v.len());
    v[pos - 1]
}

pub fn exceedance_set(series: &BivariateSeries, level: f64) -> Result<ExceedanceSet> {
    if !(level > 0.0 && level < 1.0) {
        return domain(format!("threshold level must lie in (0, 1), got {level}"));
    }
    let sample = series.to_sample()?;
    let n = sample.len();
    if n < 10 {
        return domain(format!("exceedance set needs at least 10 rows, got {n}"));
    }
    let mut u = [0.0; 2];
    for (j, uj) in u.iter_mut().enumerate() {
        let col = sample.column(j);
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if lo == hi {
            return domain(format!("column {:?} is constant", series.site_labels[j]));
        }
        *uj = empirical_threshold(&col, level);
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&i| {
            let r = sample.rows()[i];
            r[0] > u[0] || r[1] > u[1]
        })
        .collect();
    Ok(ExceedanceSet {
        threshold_level: level,
        thresholds: u,
        dates: keep.iter().map(|&i| series.dates[i]).collect(),
        rows: sample.select(&keep),
        total_n: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    fn series_from(dates: &[&str], values: Vec<Vec<f64>>) -> BivariateSeries {
        BivariateSeries {
            dates: dates
                .iter()
                .map(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").unwrap())
                .collect(),
            values,
            site_labels: vec!["a".into(), "b".into()],
        }
    }

    fn daily(start: &str, values: &[f64]) -> BivariateSeries {
        let s = NaiveDate::parse_from_str(start, "%Y-%m-%d").unwrap();
        BivariateSeries {
            dates: (0..values.len()).map(|i| s + Duration::days(i as i64)).collect(),
            values: values.iter().map(|&v| vec![v, v]).collect(),
            site_labels: vec!["a".into(), "b".into()],
        }
    }

    fn read(text: &str) -> Result<(BivariateSeries, LoadReport)> {
        read_series(text.as_bytes(), Path::new("mem.csv"), "date", &["a", "b"])
    }

    #[test]
    fn load_well_formed() {
        let (s, r) = read("date,a,b,c\n2020-01-01,1,2,x\n2020-01-02,3,4,y\n2020-01-03,5,6,z\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.values[2], vec![5.0, 6.0]);
        assert_eq!(r.rows_dropped_missing, 0);
    }

    #[test]
    fn load_errors_name_row_and_column() {
        let e = read("date,a,b\n2020-01-01,1,2\n2020-01-02,oops,4\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains(":3:") && msg.contains("\"a\""), "{msg}");
        let e = read("date,a,b\n2020-01-01,1,2\n2020-01-01,3,4\n").unwrap_err();
        assert!(e.to_string().contains("duplicate"));
        assert!(read("day,a,b\n").is_err());
    }

    #[test]
    fn load_sorts_and_drops() {
        let (s, r) = read("date,a,b\n2020-01-03,1,2\n2020-01-01,3,NA\n2020-01-02,5,6\n2020-01-01,7,8\n").unwrap();
        assert_eq!(r.out_of_order, 2);
        assert_eq!(r.rows_dropped_missing, 1);
        assert_eq!(s.len(), 3);
        assert!(s.dates.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.values[0], vec![7.0, 8.0]);
    }

    #[test]
    fn weekly_examples() {
        let w = weekly_maxima(&daily("2020-01-01", &[1.0; 14]));
        assert_eq!(w.values, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let w = weekly_maxima(&daily("2020-01-01", &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]));
        assert_eq!(w.values, vec![vec![7.0, 7.0]]);
        let w = weekly_maxima(&daily("2020-01-01", &[1.0; 10]));
        assert_eq!(w.len(), 1);
        assert!(weekly_maxima(&daily("2020-01-01", &[1.0; 6])).is_empty());
    }

    #[test]
    fn weekly_drops_incomplete_blocks() {
        let mut s = daily("2020-01-01", &(0..21).map(|i| i as f64).collect::<Vec<_>>());
        s.dates.remove(9);
        s.values.remove(9);
        let w = weekly_maxima(&s);
        assert_eq!(w.len(), 2);
        assert_eq!(w.values[1][0], 20.0);
        assert_eq!(w.dates[1], NaiveDate::from_ymd_opt(2020, 1, 15).unwrap());
    }

    #[test]
    fn season_examples() {
        let s = series_from(
            &["2020-10-01", "2021-01-05", "2020-09-21", "2020-12-21", "2020-12-22", "2020-09-20"],
            vec![vec![0.0, 0.0]; 6],
        );
        let (a, b) = parse_season("09-21:12-21").unwrap();
        let f = season_filter(&s, a, b);
        let kept: Vec<String> = f.dates.iter().map(|d| d.to_string()).collect();
        assert_eq!(kept, ["2020-10-01", "2020-09-21", "2020-12-21"]);
        let (a, b) = parse_season("12-01:01-31").unwrap();
        assert_eq!(season_filter(&s, a, b).dates.len(), 3);
        assert!(parse_season("13-01:01-01").is_err());
    }

    #[test]
    fn comonotone_exceedance_count() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 1.7).cos() * 10.0).collect();
        let dates: Vec<String> = (0..100)
            .map(|i| (NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + Duration::days(7 * i)).to_string())
            .collect();
        let refs: Vec<&str> = dates.iter().map(|s| s.as_str()).collect();
        let s = series_from(&refs, x.iter().map(|&v| vec![v, 2.0 * v + 1.0]).collect());
        let e = exceedance_set(&s, 0.7).unwrap();
        assert_eq!(e.rows.len(), 100 - 70);
        assert!(e.rows.rows().iter().all(|r| r[0] > e.thresholds[0] || r[1] > e.thresholds[1]));
        assert!(e.excesses().rows().iter().all(|r| r[0].max(r[1]) > 0.0));
    }

    #[test]
    fn independent_exceedance_fraction() {
        let mut rng = RngState::seed_from_u64(1);
        let n = 100_000;
        let d0 = NaiveDate::from_ymd_opt(1800, 1, 1).unwrap();
        let s = BivariateSeries {
            dates: (0..n).map(|i| d0 + Duration::days(i as i64)).collect(),
            values: (0..n).map(|_| vec![rng.open01(), rng.open01()]).collect(),
            site_labels: vec!["a".into(), "b".into()],
        };
        let q: f64 = 0.7;
        let e = exceedance_set(&s, q).unwrap();
        let frac = e.rows.len() as f64 / n as f64;
        let expect = 1.0 - q * q;
        assert!((frac - expect).abs() < 4.0 * (expect * (1.0 - expect) / n as f64).sqrt());
        assert!(frac >= 1.0 - q);
    }

    #[test]
    fn exceedance_errors() {
        let s = daily("2020-01-01", &[1.0; 20]);
        assert!(exceedance_set(&s, 0.7).is_err());
        let s = daily("2020-01-01", &[1.0, 2.0, 3.0]);
        assert!(exceedance_set(&s, 0.7).is_err());
        assert!(exceedance_set(&s, 1.0).is_err());
    }
}
