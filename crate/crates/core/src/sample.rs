use std::io::{Read, Write};
use std::path::Path;

use crate::error::{domain, Error, Result};

/// `n × 2` matrix of bivariate observations; rows are replicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sample {
    rows: Vec<[f64; 2]>,
}

impl Sample {
    pub fn new(rows: Vec<[f64; 2]>) -> Self {
        Self { rows }
    }

    pub fn from_columns(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return domain(format!("column lengths differ: {} vs {}", a.len(), b.len()));
        }
        Ok(Self::new(a.iter().zip(b).map(|(&x, &y)| [x, y]).collect()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().all(|r| r[0].is_finite() && r[1].is_finite())
    }

    /// Applies `f` to every entry of column `j`.
    pub fn map_column(&self, j: usize, f: impl Fn(f64) -> f64) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut r = *r;
                r[j] = f(r[j]);
                r
            })
            .collect();
        Self { rows }
    }

    /// Rows picked by index, with repetition allowed.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            rows: idx.iter().map(|&i| self.rows[i]).collect(),
        }
    }

    /// Writes the `y1,y2` CSV schema.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["y1", "y2"])?;
        for r in &self.rows {
            wtr.write_record([format_f64(r[0]), format_f64(r[1])])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads a two-column CSV with a header row. Column names are not
    /// checked, so exceedance files with site labels load as well.
    pub fn read_csv<R: Read>(r: R, label: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse {
                    path: label.to_path_buf(),
                    line,
                    message: format!("expected 2 columns, found {}", rec.len()),
                });
            }
            let mut row = [0.0; 2];
            for (j, cell) in rec.iter().enumerate() {
                row[j] = cell.trim().parse().map_err(|_| Error::Parse {
                    path: label.to_path_buf(),
                    line,
                    message: format!("column {}: not a number: {cell:?}", j + 1),
                })?;
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, path)
    }
}

/// Shortest decimal that round-trips.
pub(crate) fn format_f64(x: f64) -> String {
    format!("{x:?}")
}
