//! Cluster validity indices (PC, PE, MPC, ASW, ASWF, XB), selection of the
//! number of clusters by scanning `k`, and the homogeneity test against a
//! clusterless Normal null.
//!
//! Distances in ASW, ASWF and XB are squared Euclidean, the same geometry the
//! fuzzy k-means objective uses.

use std::fmt::Write as _;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MsError, Result};
use crate::fuzzy::{fuzzy_kmeans, FuzzyConfig, FuzzyResult, DEFAULT_FUZZINESS};
use crate::rng::stream_rng;
use crate::types::{hard_assign, MembershipMatrix, StatePath, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ValidityIndex {
    Pc,
    Pe,
    Mpc,
    Asw,
    Aswf,
    Xb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

impl ValidityIndex {
    pub const ALL: [ValidityIndex; 6] = [
        ValidityIndex::Pc,
        ValidityIndex::Pe,
        ValidityIndex::Mpc,
        ValidityIndex::Asw,
        ValidityIndex::Aswf,
        ValidityIndex::Xb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ValidityIndex::Pc => "PC",
            ValidityIndex::Pe => "PE",
            ValidityIndex::Mpc => "MPC",
            ValidityIndex::Asw => "ASW",
            ValidityIndex::Aswf => "ASWF",
            ValidityIndex::Xb => "XB",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            ValidityIndex::Pe | ValidityIndex::Xb => Direction::Minimize,
            _ => Direction::Maximize,
        }
    }

    /// Whether `a` is at least as favorable as `b`.
    pub fn at_least_as_good(self, a: f64, b: f64) -> bool {
        match self.direction() {
            Direction::Maximize => a >= b,
            Direction::Minimize => a <= b,
        }
    }

    fn strictly_better(self, a: f64, b: f64) -> bool {
        match self.direction() {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }
}

/// Partition coefficient `sum u^2 / T`, in `[1/k, 1]`.
pub fn pc(u: &MembershipMatrix) -> f64 {
    u.weights().iter().map(|v| v * v).sum::<f64>() / u.n_obs() as f64
}

/// Partition entropy `-sum u ln u / T` with `0 ln 0 = 0`, in `[0, ln k]`.
pub fn pe(u: &MembershipMatrix) -> f64 {
    -u.weights()
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v * v.ln())
        .sum::<f64>()
        / u.n_obs() as f64
}

/// Modified partition coefficient `1 - k/(k-1) (1 - PC)`, in `[0, 1]`.
pub fn mpc(u: &MembershipMatrix) -> Result<f64> {
    let k = u.k();
    if k < 2 {
        return Err(MsError::UndefinedForSingleCluster);
    }
    let k = k as f64;
    Ok(1.0 - k / (k - 1.0) * (1.0 - pc(u)))
}

/// Per-observation silhouettes; observations in singleton clusters get 0.
pub fn silhouettes(y: &[f64], partition: &StatePath) -> Result<Vec<f64>> {
    if y.len() != partition.len() {
        return Err(MsError::LengthMismatch(y.len(), partition.len()));
    }
    let k = partition.k();
    let labels = partition.states();
    let mut sizes = vec![0usize; k];
    for &s in labels {
        sizes[s] += 1;
    }
    if sizes.iter().filter(|&&n| n > 0).count() < 2 {
        return Err(MsError::SingleClusterPartition);
    }
    let mut sums = vec![0.0; k];
    Ok(y.iter()
        .zip(labels)
        .map(|(&yt, &own)| {
            if sizes[own] == 1 {
                return 0.0;
            }
            sums.iter_mut().for_each(|s| *s = 0.0);
            for (&ys, &c) in y.iter().zip(labels) {
                sums[c] += (yt - ys).powi(2);
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect())
}

/// Average silhouette width, in `[-1, 1]`.
pub fn asw(y: &[f64], partition: &StatePath) -> Result<f64> {
    let s = silhouettes(y, partition)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Fuzzy silhouette: silhouettes of the hard partition weighted by
/// `(u_(1) - u_(2))^lambda`, the gap between the two largest memberships.
pub fn aswf(y: &[f64], u: &MembershipMatrix, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(MsError::InvalidArgument(format!("lambda = {lambda} must be >= 0")));
    }
    if u.k() < 2 {
        return Err(MsError::SingleClusterPartition);
    }
    let weights: Vec<f64> = (0..u.n_obs())
        .map(|t| {
            let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for j in 0..u.k() {
                let v = u.get(t, j);
                if v > first {
                    second = first;
                    first = v;
                } else if v > second {
                    second = v;
                }
            }
            (first - second).powf(lambda)
        })
        .collect();
    let den: f64 = weights.iter().sum();
    if den <= 0.0 {
        return Err(MsError::AllWeightsZero);
    }
    let s = silhouettes(y, &hard_assign(u))?;
    Ok(weights.iter().zip(&s).map(|(w, st)| w * st).sum::<f64>() / den)
}

/// Xie-Beni: fuzzy within-cluster dispersion over `T` times the smallest
/// squared centroid separation.
pub fn xb(y: &[f64], u: &MembershipMatrix, centroids: &[f64]) -> Result<f64> {
    let k = centroids.len();
    if k < 2 {
        return Err(MsError::UndefinedForSingleCluster);
    }
    if u.k() != k || u.n_obs() != y.len() {
        return Err(MsError::InvalidArgument("membership shape does not match data".into()));
    }
    let mut min_sep = f64::INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            min_sep = min_sep.min((centroids[i] - centroids[j]).abs());
        }
    }
    if min_sep < 1e-12 {
        return Err(MsError::CoincidentCentroids);
    }
    let mut num = 0.0;
    for (t, &yt) in y.iter().enumerate() {
        for (j, &c) in centroids.iter().enumerate() {
            num += u.get(t, j).powi(2) * (yt - c).powi(2);
        }
    }
    Ok(num / (y.len() as f64 * min_sep * min_sep))
}

/// All six indices for one clustering; undefined values are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexValues {
    pub pc: f64,
    pub pe: f64,
    pub mpc: f64,
    pub asw: f64,
    pub aswf: f64,
    pub xb: f64,
}

impl IndexValues {
    pub fn get(&self, index: ValidityIndex) -> f64 {
        match index {
            ValidityIndex::Pc => self.pc,
            ValidityIndex::Pe => self.pe,
            ValidityIndex::Mpc => self.mpc,
            ValidityIndex::Asw => self.asw,
            ValidityIndex::Aswf => self.aswf,
            ValidityIndex::Xb => self.xb,
        }
    }

    pub fn from_fn(mut f: impl FnMut(ValidityIndex) -> f64) -> Self {
        IndexValues {
            pc: f(ValidityIndex::Pc),
            pe: f(ValidityIndex::Pe),
            mpc: f(ValidityIndex::Mpc),
            asw: f(ValidityIndex::Asw),
            aswf: f(ValidityIndex::Aswf),
            xb: f(ValidityIndex::Xb),
        }
    }
}

pub fn evaluate_indices(y: &[f64], fuzzy: &FuzzyResult, lambda: f64) -> IndexValues {
    let u = &fuzzy.membership;
    let partition = hard_assign(u);
    IndexValues {
        pc: pc(u),
        pe: pe(u),
        mpc: mpc(u).unwrap_or(f64::NAN),
        asw: asw(y, &partition).unwrap_or(f64::NAN),
        aswf: aswf(y, u, lambda).unwrap_or(f64::NAN),
        xb: xb(y, u, &fuzzy.centroids).unwrap_or(f64::NAN),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectConfig {
    pub k_max: usize,
    pub fuzziness: f64,
    /// Exponent of the ASWF weights.
    pub lambda: f64,
    pub fuzzy: FuzzyConfig,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            k_max: 6,
            fuzziness: DEFAULT_FUZZINESS,
            lambda: 1.0,
            fuzzy: FuzzyConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanEntry {
    pub k: usize,
    pub fuzzy: FuzzyResult,
    pub values: IndexValues,
}

/// Fuzzy k-means and all indices for `k = 2..=k_max`.
pub fn scan_k(y: &[f64], cfg: &SelectConfig) -> Result<Vec<ScanEntry>> {
    if cfg.k_max < 2 {
        return Err(MsError::InvalidArgument("k_max must be at least 2".into()));
    }
    if y.len() < cfg.k_max {
        return Err(MsError::InsufficientData {
            needed: cfg.k_max,
            got: y.len(),
        });
    }
    (2..=cfg.k_max)
        .map(|k| {
            let fuzzy = fuzzy_kmeans(y, k, cfg.fuzziness, &cfg.fuzzy)?;
            let values = evaluate_indices(y, &fuzzy, cfg.lambda);
            Ok(ScanEntry { k, fuzzy, values })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct IndexReport {
    pub rows: Vec<(usize, IndexValues)>,
    /// Optimal `k` per index (first optimum on ties); `None` if undefined
    /// for every `k`.
    pub selected: Vec<(ValidityIndex, Option<usize>)>,
}

impl IndexReport {
    pub fn from_rows(rows: Vec<(usize, IndexValues)>) -> Self {
        let selected = ValidityIndex::ALL
            .iter()
            .map(|&ix| {
                let mut best: Option<(usize, f64)> = None;
                for (k, v) in &rows {
                    let x = v.get(ix);
                    if x.is_nan() {
                        continue;
                    }
                    if best.is_none_or(|(_, b)| ix.strictly_better(x, b)) {
                        best = Some((*k, x));
                    }
                }
                (ix, best.map(|(k, _)| k))
            })
            .collect();
        IndexReport { rows, selected }
    }

    pub fn selected_k(&self, index: ValidityIndex) -> Option<usize> {
        self.selected.iter().find(|(ix, _)| *ix == index).and_then(|(_, k)| *k)
    }

    /// Index values at each index's own optimum.
    pub fn best_values(&self) -> IndexValues {
        IndexValues::from_fn(|ix| match self.selected_k(ix) {
            Some(k) => self.rows.iter().find(|(kk, _)| *kk == k).map_or(f64::NAN, |(_, v)| v.get(ix)),
            None => f64::NAN,
        })
    }

    /// `k,PC,PE,MPC,ASW,ASWF,XB` rows plus a `selected` summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,PC,PE,MPC,ASW,ASWF,XB\n");
        for (k, v) in &self.rows {
            let _ = write!(out, "{k}");
            for ix in ValidityIndex::ALL {
                let _ = write!(out, ",{}", v.get(ix));
            }
            out.push('\n');
        }
        out.push_str("selected");
        for ix in ValidityIndex::ALL {
            match self.selected_k(ix) {
                Some(k) => {
                    let _ = write!(out, ",{k}");
                }
                None => out.push_str(",NA"),
            }
        }
        out.push('\n');
        out
    }
}

pub fn select_k(y: &[f64], cfg: &SelectConfig) -> Result<IndexReport> {
    let scan = scan_k(y, cfg)?;
    Ok(IndexReport::from_rows(scan.into_iter().map(|e| (e.k, e.values)).collect()))
}

/// `(1 + #{null at least as favorable as observed}) / (n + 1)`.
pub fn p_value(index: ValidityIndex, observed: f64, null: &[f64]) -> f64 {
    let hits = null
        .iter()
        .filter(|&&v| !v.is_nan() && index.at_least_as_good(v, observed))
        .count();
    (hits + 1) as f64 / (null.len() + 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HomogeneityConfig {
    pub n_sim: usize,
    pub seed: u64,
    pub select: SelectConfig,
}

impl Default for HomogeneityConfig {
    fn default() -> Self {
        HomogeneityConfig {
            n_sim: 2000,
            seed: 0,
            select: SelectConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HomogeneityResult {
    pub observed: IndexValues,
    pub p_values: IndexValues,
    /// Best value of each index over `k` for every null series.
    pub null_best: Vec<IndexValues>,
}

/// Monte Carlo test of the no-cluster null: `n_sim` i.i.d. Normal series with
/// the sample mean and variance of `y`, each scanned like the data.
/// Simulations run on the current rayon pool; results do not depend on it.
pub fn homogeneity_test(
    y: &TimeSeries,
    observed: &IndexValues,
    cfg: &HomogeneityConfig,
) -> Result<HomogeneityResult> {
    if cfg.n_sim < 100 {
        return Err(MsError::InvalidArgument("n_sim must be at least 100".into()));
    }
    let sd = y.variance().sqrt();
    let null_dist = Normal::new(y.mean(), sd).map_err(|e| MsError::InvalidSeries(e.to_string()))?;
    let len = y.len();
    let null_best = (0..cfg.n_sim)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, i as u64);
            let sim: Vec<f64> = (0..len).map(|_| null_dist.sample(&mut rng)).collect();
            Ok(select_k(&sim, &cfg.select)?.best_values())
        })
        .collect::<Result<Vec<_>>>()?;
    let p_values = IndexValues::from_fn(|ix| {
        let draws: Vec<f64> = null_best.iter().map(|v| v.get(ix)).collect();
        p_value(ix, observed.get(ix), &draws)
    });
    Ok(HomogeneityResult {
        observed: *observed,
        p_values,
        null_best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hard(rows: &[usize], k: usize) -> MembershipMatrix {
        MembershipMatrix::from_rows(
            &rows
                .iter()
                .map(|&s| (0..k).map(|j| if j == s { 1.0 } else { 0.0 }).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    fn uniform(t: usize, k: usize) -> MembershipMatrix {
        MembershipMatrix::from_rows(&vec![vec![1.0 / k as f64; k]; t]).unwrap()
    }

    #[test]
    fn crisp_and_uniform_extremes() {
        let h = hard(&[0, 1, 2, 1], 3);
        assert!((pc(&h) - 1.0).abs() < 1e-15);
        assert_eq!(pe(&h), 0.0);
        assert!((mpc(&h).unwrap() - 1.0).abs() < 1e-15);

        let u = uniform(5, 4);
        assert!((pc(&u) - 0.25).abs() < 1e-15);
        assert!((pe(&u) - 4f64.ln()).abs() < 1e-15);
        assert!(mpc(&u).unwrap().abs() < 1e-15);

        assert!(matches!(mpc(&uniform(3, 1)), Err(MsError::UndefinedForSingleCluster)));
    }

    #[test]
    fn silhouettes_of_separated_blobs() {
        let y = [0.0, 0.01, 10.0, 10.01];
        let part = StatePath::new(vec![0, 0, 1, 1], 2).unwrap();
        assert!(asw(&y, &part).unwrap() > 0.9);
        let u = hard(&[0, 0, 1, 1], 2);
        assert!(xb(&y, &u, &[0.005, 10.005]).unwrap() < 0.01);
    }

    #[test]
    fn silhouette_edge_cases() {
        let y = [1.0, 1.0, 1.0, 1.0];
        let part = StatePath::new(vec![0, 1, 0, 1], 2).unwrap();
        assert_eq!(asw(&y, &part).unwrap(), 0.0);

        let one = StatePath::new(vec![0, 0, 0], 2).unwrap();
        assert!(matches!(asw(&[1.0, 2.0, 3.0], &one), Err(MsError::SingleClusterPartition)));

        // singleton cluster contributes 0
        let s = silhouettes(&[0.0, 0.1, 5.0], &StatePath::new(vec![0, 0, 1], 2).unwrap()).unwrap();
        assert_eq!(s[2], 0.0);
    }

    #[test]
    fn aswf_weights() {
        let y = [0.0, 0.2, 0.9, 3.0, 3.3, 4.1];
        let u = MembershipMatrix::from_rows(&[
            vec![0.9, 0.1],
            vec![0.8, 0.2],
            vec![0.6, 0.4],
            vec![0.3, 0.7],
            vec![0.1, 0.9],
            vec![0.2, 0.8],
        ])
        .unwrap();
        let plain = asw(&y, &hard_assign(&u)).unwrap();
        assert!((aswf(&y, &u, 0.0).unwrap() - plain).abs() < 1e-12);
        let crisp = hard(&[0, 0, 0, 1, 1, 1], 2);
        assert!((aswf(&y, &crisp, 2.5).unwrap() - plain).abs() < 1e-12);

        let tied = uniform(6, 2);
        assert!(matches!(aswf(&y, &tied, 1.0), Err(MsError::AllWeightsZero)));
    }

    #[test]
    fn xb_is_scale_invariant_and_guards_centroids() {
        let y = [0.1, -0.2, 3.9, 4.3, 0.05];
        let u = MembershipMatrix::from_rows(&[
            vec![0.1, 0.9],
            vec![0.05, 0.95],
            vec![0.97, 0.03],
            vec![0.9, 0.1],
            vec![0.2, 0.8],
        ])
        .unwrap();
        let c = [4.1, 0.0];
        let base = xb(&y, &u, &c).unwrap();
        let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        let scaled = xb(&y2, &u, &[8.2, 0.0]).unwrap();
        assert!((base - scaled).abs() < 1e-12);
        assert!(matches!(xb(&y, &u, &[1.0, 1.0]), Err(MsError::CoincidentCentroids)));
    }

    #[test]
    fn selection_picks_optimum_per_direction() {
        let mk = |pc, pe| IndexValues {
            pc,
            pe,
            mpc: f64::NAN,
            asw: 0.5,
            aswf: 0.5,
            xb: 0.2,
        };
        let report = IndexReport::from_rows(vec![(2, mk(0.8, 0.4)), (3, mk(0.9, 0.2)), (4, mk(0.7, 0.1))]);
        assert_eq!(report.selected_k(ValidityIndex::Pc), Some(3));
        assert_eq!(report.selected_k(ValidityIndex::Pe), Some(4));
        assert_eq!(report.selected_k(ValidityIndex::Mpc), None);
        // ties keep the smallest k
        assert_eq!(report.selected_k(ValidityIndex::Asw), Some(2));
        assert_eq!(report.best_values().pc, 0.9);
        let csv = report.to_csv();
        assert!(csv.starts_with("k,PC,PE,MPC,ASW,ASWF,XB\n2,0.8,0.4,NaN"));
        assert!(csv.ends_with("selected,3,4,NA,2,2,2\n"));
    }

    #[test]
    fn p_values_use_direction_and_correction() {
        let null = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(p_value(ValidityIndex::Pc, 0.35, &null), 2.0 / 5.0);
        assert_eq!(p_value(ValidityIndex::Xb, 0.35, &null), 4.0 / 5.0);
        assert_eq!(p_value(ValidityIndex::Pc, 1.0, &null), 1.0 / 5.0);
    }

    #[test]
    fn scan_requires_reasonable_k_max() {
        assert!(select_k(&[1.0, 2.0, 3.0], &SelectConfig { k_max: 1, ..Default::default() }).is_err());
        assert!(select_k(&[1.0, 2.0, 3.0], &SelectConfig::default()).is_err());
    }
}
