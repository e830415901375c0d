//! CSV ingestion and the CSV writers used by the CLI and the experiment
//! runners.
//!
//! Input files have a header row. When the value column is not the first
//! column, the first column is kept as observation labels (dates).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MsError, Result};
use crate::types::{argmax_rows, MembershipMatrix, ProbabilityPaths, StatePath, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    None,
    /// Annualized quarterly growth in percent, `400 ln(x_t / x_{t-1})`.
    Growth,
}

impl std::str::FromStr for Transform {
    type Err = MsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Transform::None),
            "growth" => Ok(Transform::Growth),
            other => Err(MsError::InvalidArgument(format!("unknown transform `{other}`"))),
        }
    }
}

pub fn growth_rates(y: &TimeSeries) -> Result<TimeSeries> {
    let v = y.values();
    if v.len() < 2 {
        return Err(MsError::InsufficientData { needed: 2, got: v.len() });
    }
    if let Some(t) = v.iter().position(|&x| x <= 0.0) {
        return Err(MsError::InvalidSeries(format!(
            "growth transform needs positive levels, got {} at {}",
            v[t],
            y.label(t)
        )));
    }
    let g = v.windows(2).map(|w| 400.0 * (w[1] / w[0]).ln()).collect();
    TimeSeries::with_labels(g, y.labels().map(|l| l[1..].to_vec()))
}

/// Reads one numeric column. `column = None` selects the last column.
pub fn load_csv(path: &Path, column: Option<&str>, transform: Transform) -> Result<TimeSeries> {
    let file = fs::File::open(path).map_err(|e| MsError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(MsError::EmptySeries);
    }
    let idx = match column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| MsError::ColumnNotFound(name.to_string()))?,
        None => headers.len() - 1,
    };
    let name = headers[idx].to_string();
    let with_labels = idx != 0;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let row = i + 2;
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let cell = record.get(idx).unwrap_or("");
        if cell.is_empty() {
            return Err(MsError::ParseError {
                row,
                column: name,
                message: "missing value".into(),
            });
        }
        let v: f64 = cell.parse().map_err(|_| MsError::ParseError {
            row,
            column: name.clone(),
            message: format!("`{cell}` is not a number"),
        })?;
        if !v.is_finite() {
            return Err(MsError::ParseError {
                row,
                column: name,
                message: format!("`{cell}` is not finite"),
            });
        }
        values.push(v);
        if with_labels {
            labels.push(record.get(0).unwrap_or("").to_string());
        }
    }
    if values.is_empty() {
        return Err(MsError::EmptySeries);
    }
    let series = TimeSeries::with_labels(values, with_labels.then_some(labels))?;
    match transform {
        Transform::None => Ok(series),
        Transform::Growth => growth_rates(&series),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| MsError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| MsError::io(path, e))
}

fn label_cell(y: &TimeSeries, t: usize) -> String {
    let l = y.label(t);
    if l.contains([',', '"', '\n']) {
        format!("\"{}\"", l.replace('"', "\"\""))
    } else {
        l
    }
}

fn weights_csv(y: &TimeSeries, u: &MembershipMatrix, prefix: &str, last: &str) -> String {
    let k = u.k();
    let mut out = String::from("t,label,y");
    for j in 1..=k {
        let _ = write!(out, ",{prefix}{j}");
    }
    let _ = writeln!(out, ",{last}");
    let states = argmax_rows(u.weights());
    for t in 0..u.n_obs() {
        let _ = write!(out, "{},{},{}", t + 1, label_cell(y, t), y.values()[t]);
        for j in 0..k {
            let _ = write!(out, ",{}", u.get(t, j));
        }
        let _ = writeln!(out, ",{}", states[t] + 1);
    }
    out
}

/// `t,label,y,p1..pk,state` from smoothed probabilities; states are 1-based.
pub fn smoothed_paths_csv(y: &TimeSeries, paths: &ProbabilityPaths) -> String {
    weights_csv(y, &paths.smoothed_membership(), "p", "state")
}

/// `t,label,y,u1..uk,cluster`; clusters are 1-based.
pub fn membership_csv(y: &TimeSeries, u: &MembershipMatrix) -> String {
    weights_csv(y, u, "u", "cluster")
}

/// `t,y,state` for a simulated series; states are 1-based.
pub fn simulation_csv(y: &TimeSeries, states: &StatePath) -> String {
    let mut out = String::from("t,y,state\n");
    for (t, (v, s)) in y.values().iter().zip(states.states()).enumerate() {
        let _ = writeln!(out, "{},{},{}", t + 1, v, s + 1);
    }
    out
}

pub fn density_csv(grid: &[f64], density: &[f64]) -> String {
    let mut out = String::from("x,density\n");
    for (x, d) in grid.iter().zip(density) {
        let _ = writeln!(out, "{x},{d}");
    }
    out
}
