//! Plain numeric CSV tables: trajectories, solver output and reports.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::dynamics::JointState;
use crate::error::{Error, Result, SchemaError};

/// A header and rows of finite numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| SchemaError::MissingColumn(name.into()).into())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv().as_bytes()).map_err(|e| Error::Io {
            path: "<writer>".into(),
            source: e,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(r);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| SchemaError::MalformedHeader(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().any(String::is_empty) {
            return Err(SchemaError::MalformedHeader("empty column name".into()).into());
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| SchemaError::MalformedHeader(e.to_string()))?;
            if rec.len() != header.len() {
                return Err(SchemaError::RaggedRow {
                    line,
                    expected: header.len(),
                    got: rec.len(),
                }
                .into());
            }
            let mut row = Vec::with_capacity(header.len());
            for (cell, name) in rec.iter().zip(&header) {
                let x: f64 = cell.parse().map_err(|_| SchemaError::BadNumber {
                    line,
                    column: name.clone(),
                    value: cell.into(),
                })?;
                if !x.is_finite() {
                    return Err(SchemaError::NonFinite { line, column: name.clone() }.into());
                }
                row.push(x);
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::read_from(f)
    }
}

/// `prefix1..prefixn`.
pub fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("{prefix}{j}")).collect()
}

/// Trajectory table `t,q1..qn,qd1..qdn,qdd1..qddn`.
pub fn trajectory_table(t: &[f64], states: &[JointState]) -> Table {
    let n = states.first().map_or(0, JointState::dof);
    let mut header = vec!["t".to_string()];
    for p in ["q", "qd", "qdd"] {
        header.extend(numbered(p, n));
    }
    let mut table = Table::new(header);
    for (tk, s) in t.iter().zip(states) {
        let mut row = vec![*tk];
        row.extend(s.q.iter().chain(s.qd.iter()).chain(s.qdd.iter()));
        table.rows.push(row);
    }
    table
}

/// Inverse of [`trajectory_table`].
pub fn trajectory_from_table(table: &Table) -> Result<(Vec<f64>, Vec<JointState>)> {
    let n = table
        .header
        .iter()
        .filter(|h| h.len() > 1 && h.starts_with('q') && h[1..].chars().all(|c| c.is_ascii_digit()))
        .count();
    if n == 0 {
        return Err(SchemaError::MalformedHeader("no position columns q1..qn".into()).into());
    }
    let ti = table.column("t")?;
    let idx = |p: &str| -> Result<Vec<usize>> { numbered(p, n).iter().map(|c| table.column(c)).collect() };
    let (qi, qdi, qddi) = (idx("q")?, idx("qd")?, idx("qdd")?);
    let pick = |row: &[f64], cols: &[usize]| DVector::from_iterator(n, cols.iter().map(|&c| row[c]));
    let t = table.rows.iter().map(|r| r[ti]).collect();
    let states = table
        .rows
        .iter()
        .map(|r| JointState {
            q: pick(r, &qi),
            qd: pick(r, &qdi),
            qdd: pick(r, &qddi),
        })
        .collect();
    Ok((t, states))
}
