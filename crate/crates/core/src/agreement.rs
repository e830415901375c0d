//! Partition agreement (plain Rand index), five-number summaries and the
//! centered moving average used for robustness checks.

use serde::Serialize;

use crate::error::{MsError, Result};
use crate::stats::quantile_sorted;
use crate::types::{StatePath, TimeSeries};

/// Cross-tabulation of two labelings of the same observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    total: u64,
}

impl ContingencyTable {
    pub fn new(a: &StatePath, b: &StatePath) -> Result<Self> {
        if a.len() != b.len() {
            return Err(MsError::LengthMismatch(a.len(), b.len()));
        }
        let mut counts = vec![vec![0u64; b.k()]; a.k()];
        for (&i, &j) in a.states().iter().zip(b.states()) {
            counts[i][j] += 1;
        }
        Ok(ContingencyTable {
            counts,
            total: a.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let cols = self.counts.first().map_or(0, Vec::len);
        (0..cols).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }
}

/// Plain Rand index from the contingency table:
/// `[C(T,2) - (sum a_i^2 + sum b_j^2)/2 + sum n_ij^2] / C(T,2)`.
/// Integer arithmetic keeps it exact until the final division.
pub fn rand_index(a: &StatePath, b: &StatePath) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    let n = table.total();
    if n < 2 {
        return Err(MsError::InsufficientData { needed: 2, got: n as usize });
    }
    let sq = |v: u64| (v as u128) * (v as u128);
    let pairs = (n as u128) * (n as u128 - 1) / 2;
    let margins: u128 = table.row_sums().into_iter().chain(table.col_sums()).map(sq).sum();
    let cells: u128 = table.counts().iter().flatten().map(|&v| sq(v)).sum();
    // margins and 2*cells have the same parity, so the halving is exact
    let agree = pairs + cells - margins / 2;
    Ok(agree as f64 / pairs as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumberSummary {
    pub fn as_array(&self) -> [f64; 5] {
        [self.min, self.q1, self.median, self.q3, self.max]
    }
}

/// Min, quartiles (linear interpolation) and max. NaNs are ignored.
pub fn rand_summary(values: &[f64]) -> Result<FiveNumberSummary> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return Err(MsError::EmptySeries);
    }
    v.sort_by(f64::total_cmp);
    Ok(FiveNumberSummary {
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    })
}

/// Centered equal-weight moving average over an odd window. The output has
/// `T - window + 1` values; labels lose `window / 2` entries on each side.
pub fn moving_average(y: &TimeSeries, window: usize) -> Result<TimeSeries> {
    if window == 0 || window % 2 == 0 || window > y.len() {
        return Err(MsError::WindowTooLarge { window, len: y.len() });
    }
    let values: Vec<f64> = y
        .values()
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect();
    let half = window / 2;
    let labels = y.labels().map(|l| l[half..y.len() - half].to_vec());
    TimeSeries::with_labels(values, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(s: &[usize], k: usize) -> StatePath {
        StatePath::new(s.to_vec(), k).unwrap()
    }

    #[test]
    fn rand_examples() {
        let a = path(&[0, 0, 1, 1], 2);
        let b = path(&[0, 1, 0, 1], 2);
        assert!((rand_index(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rand_index(&a, &a).unwrap(), 1.0);
        // relabeled copy is a perfect match
        assert_eq!(rand_index(&a, &path(&[1, 1, 0, 0], 2)).unwrap(), 1.0);
        assert!(matches!(
            rand_index(&a, &path(&[0, 1, 0], 2)),
            Err(MsError::LengthMismatch(4, 3))
        ));
        assert!(rand_index(&path(&[0], 1), &path(&[0], 1)).is_err());
    }

    #[test]
    fn table_margins() {
        let t = ContingencyTable::new(&path(&[0, 0, 1, 2], 3), &path(&[1, 0, 1, 1], 2)).unwrap();
        assert_eq!(t.row_sums(), vec![2, 1, 1]);
        assert_eq!(t.col_sums(), vec![1, 3]);
        assert_eq!(t.total(), 4);
    }

    #[test]
    fn summaries() {
        let s = rand_summary(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.as_array(), [1.0; 5]);
        let s = rand_summary(&[4.0, 0.0, 2.0, 3.0, 1.0]).unwrap();
        assert_eq!(s.as_array(), [0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(rand_summary(&[]).is_err());
    }

    #[test]
    fn moving_average_cases() {
        let y = TimeSeries::with_labels(
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            Some(["a", "b", "c", "d", "e"].map(String::from).to_vec()),
        )
        .unwrap();
        assert_eq!(moving_average(&y, 1).unwrap(), y);
        let m = moving_average(&y, 3).unwrap();
        assert_eq!(m.values(), &[2.0, 3.0, 4.0]);
        assert_eq!(m.labels().unwrap(), &["b", "c", "d"]);
        assert!(matches!(moving_average(&y, 7), Err(MsError::WindowTooLarge { .. })));
        assert!(moving_average(&y, 2).is_err());
    }
}
