use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::DyadicGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// Parameter/solution pairs, one sample per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `p x N` parameters.
    pub inputs: DMatrix<f64>,
    /// `N_h x N` nodal values.
    pub targets: DMatrix<f64>,
    pub grid: DyadicGrid,
    pub split: Split,
}

impl Dataset {
    pub fn new(inputs: DMatrix<f64>, targets: DMatrix<f64>, grid: DyadicGrid, split: Split) -> Result<Self> {
        if inputs.ncols() != targets.ncols() {
            return Err(Error::Shape(format!(
                "{} parameter columns but {} solution columns",
                inputs.ncols(),
                targets.ncols()
            )));
        }
        if targets.nrows() != grid.len() {
            return Err(Error::Shape(format!(
                "solutions have {} rows, grid has {} nodes",
                targets.nrows(),
                grid.len()
            )));
        }
        Ok(Self { inputs, targets, grid, split })
    }

    /// Build from `(mu, u)` pairs.
    pub fn from_pairs(pairs: &[(Vec<f64>, Vec<f64>)], p: usize, grid: DyadicGrid, split: Split) -> Result<Self> {
        let n = pairs.len();
        let mut inputs = DMatrix::zeros(p, n);
        let mut targets = DMatrix::zeros(grid.len(), n);
        for (i, (mu, u)) in pairs.iter().enumerate() {
            if mu.len() != p || u.len() != grid.len() {
                return Err(Error::Shape(format!(
                    "sample {i}: expected {p} parameters and {} values, got {} and {}",
                    grid.len(),
                    mu.len(),
                    u.len()
                )));
            }
            inputs.column_mut(i).copy_from_slice(mu);
            targets.column_mut(i).copy_from_slice(u);
        }
        Self::new(inputs, targets, grid, split)
    }

    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.nrows()
    }

    /// Write `mu_1..mu_p,u_1..u_{N_h}` rows with 17 significant digits.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = (1..=self.input_dim())
            .map(|i| format!("mu_{i}"))
            .chain((1..=self.grid.len()).map(|j| format!("u_{j}")));
        w.write_record(header).map_err(|e| csv_error(path, e))?;
        for i in 0..self.len() {
            let row = self.inputs.column(i).iter().chain(self.targets.column(i).iter()).map(|v| format!("{v:.16e}")).collect::<Vec<_>>();
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`Dataset::save`]; the grid level is inferred from the header.
    pub fn load(path: &Path, split: Split) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path).map_err(|e| csv_error(path, e))?;
        let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
        let p = header.iter().take_while(|h| h.starts_with("mu_")).count();
        let n_h = header.len() - p;
        if header.iter().skip(p).any(|h| !h.starts_with("u_")) {
            return Err(parse_error(path, 1, "header must be mu_1..mu_p followed by u_1..u_N"));
        }
        let level = (n_h.saturating_sub(1)).trailing_zeros();
        if n_h < 3 || (n_h - 1) != 1 << level {
            return Err(parse_error(path, 1, &format!("{n_h} value columns is not 2^k+1")));
        }
        let grid = DyadicGrid::new(level)?;

        let mut pairs = Vec::new();
        for (i, record) in r.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| csv_error(path, e))?;
            if record.len() != header.len() {
                return Err(parse_error(
                    path,
                    line,
                    &format!("expected {} columns, found {}", header.len(), record.len()),
                ));
            }
            let values = record
                .iter()
                .map(|field| {
                    field.trim().parse::<f64>().map_err(|_| parse_error(path, line, &format!("bad number {field:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            pairs.push((values[..p].to_vec(), values[p..].to_vec()));
        }
        Self::from_pairs(&pairs, p, grid, split)
    }
}

fn parse_error(path: &Path, line: usize, msg: &str) -> Error {
    Error::Parse { path: path.display().to_string(), line, msg: msg.to_string() }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_error(path, line, &format!("{other:?}")),
    }
}
