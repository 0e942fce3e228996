//! Trajectory CSV.
//!
//! Columns are `t,R,B,x,y,mu`, then `a,b` for systems with time-varying
//! coefficients (the current `alpha(t), beta(t)`), then `envelope` for the
//! perturbed corridor. Share and ratio systems report `R = x`, `B = 1 - x`
//! on a unit total. `y` is empty when `B = 0`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{IoError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub r: f64,
    pub b: f64,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub mu: Option<f64>,
    pub coefficients: Option<(f64, f64)>,
    pub envelope: Option<f64>,
}

impl TrajectoryRow {
    /// Row from absolute populations under coefficients `(alpha, beta)`.
    pub fn from_populations(t: f64, r: f64, b: f64, alpha: f64, beta: f64) -> Self {
        let n = r + b;
        let defined = n > 0.0;
        Self {
            t,
            r,
            b,
            x: defined.then(|| r / n),
            y: (b != 0.0).then(|| r / b),
            mu: defined.then(|| (alpha * r + beta * b) / n),
            coefficients: None,
            envelope: None,
        }
    }

    pub fn from_share(t: f64, x: f64, alpha: f64, beta: f64) -> Self {
        let w = 1.0 - x;
        Self {
            t,
            r: x,
            b: w,
            x: Some(x),
            y: (w != 0.0).then(|| x / w),
            mu: Some(alpha * x + beta * w),
            coefficients: None,
            envelope: None,
        }
    }

    pub fn from_ratio(t: f64, y: f64, alpha: f64, beta: f64) -> Self {
        let x = y / (1.0 + y);
        let w = 1.0 / (1.0 + y);
        Self {
            t,
            r: x,
            b: w,
            x: Some(x),
            y: Some(y),
            mu: Some(alpha * x + beta * w),
            coefficients: None,
            envelope: None,
        }
    }

    pub fn with_coefficients(mut self, alpha: f64, beta: f64) -> Self {
        self.coefficients = Some((alpha, beta));
        self
    }

    pub fn with_envelope(mut self, envelope: f64) -> Self {
        self.envelope = Some(envelope);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub coefficients: bool,
    pub envelope: bool,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryTable {
    pub fn new(coefficients: bool, envelope: bool) -> Self {
        Self {
            coefficients,
            envelope,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: TrajectoryRow) {
        self.rows.push(row);
    }

    pub fn columns(&self) -> Vec<&'static str> {
        let mut c = vec!["t", "R", "B", "x", "y", "mu"];
        if self.coefficients {
            c.extend(["a", "b"]);
        }
        if self.envelope {
            c.push("envelope");
        }
        c
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.columns().join(",");
        out.push('\n');
        for row in &self.rows {
            let mut cells = vec![Some(row.t), Some(row.r), Some(row.b), row.x, row.y, row.mu];
            if self.coefficients {
                let (a, b) = row.coefficients.unzip();
                cells.extend([a, b]);
            }
            if self.envelope {
                cells.push(row.envelope);
            }
            for (i, cell) in cells.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if let Some(v) = cell {
                    push_number(&mut out, *v);
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }
}

/// 17 significant digits; round-trips every finite double.
pub fn push_number(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

pub fn format_number(v: f64) -> String {
    let mut s = String::new();
    push_number(&mut s, v);
    s
}

pub fn write_trajectory(table: &TrajectoryTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, table.to_csv_string()).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads back a table written by [`write_trajectory`].
pub fn read_trajectory(reader: impl BufRead) -> Result<TrajectoryTable> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| IoError::Parse("empty trajectory file".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    let coefficients = cols.contains(&"a");
    let envelope = cols.contains(&"envelope");
    let mut table = TrajectoryTable::new(coefficients, envelope);
    if cols != table.columns() {
        return Err(IoError::Parse(format!("unexpected header {header:?}")));
    }
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let cells: Vec<Option<f64>> = line
            .split(',')
            .map(|c| {
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse::<f64>()
                        .map(Some)
                        .map_err(|e| IoError::Parse(format!("line {}: {e}", lineno + 2)))
                }
            })
            .collect::<Result<_>>()?;
        if cells.len() != cols.len() {
            return Err(IoError::Parse(format!("line {}: expected {} cells", lineno + 2, cols.len())));
        }
        let req = |i: usize| cells[i].ok_or_else(|| IoError::Parse(format!("line {}: empty required cell", lineno + 2)));
        let mut row = TrajectoryRow {
            t: req(0)?,
            r: req(1)?,
            b: req(2)?,
            x: cells[3],
            y: cells[4],
            mu: cells[5],
            coefficients: None,
            envelope: None,
        };
        let mut i = 6;
        if coefficients {
            row.coefficients = cells[i].zip(cells[i + 1]);
            i += 2;
        }
        if envelope {
            row.envelope = cells[i];
        }
        table.push(row);
    }
    Ok(table)
}
