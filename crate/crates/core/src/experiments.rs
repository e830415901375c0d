//! Monte Carlo harness over the DGP catalog, the GDP case study and density
//! grids. Every runner writes plain CSV plus a JSON manifest.
//!
//! Replication `r` of catalog entry `i` draws from stream `(i, r)` of the run
//! seed, and results are aggregated in replication order, so outputs are
//! byte-identical for any worker count.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::agreement::{moving_average, rand_index, rand_summary, FiveNumberSummary};
use crate::error::{MsError, Result};
use crate::estimate::{fit_ms, EstimationConfig, MSEstimate, StdErrors};
use crate::fuzzy::{fuzzy_kmeans, FuzzyConfig, DEFAULT_FUZZINESS};
use crate::indices::{
    homogeneity_test, scan_k, HomogeneityConfig, HomogeneityResult, IndexReport, SelectConfig,
    ValidityIndex,
};
use crate::io::{density_csv, membership_csv, smoothed_paths_csv, write_text};
use crate::markov::{ergodic_mixture_density, find_dgp, mean_duration, mixture_support};
use crate::rng::{stream_id, stream_rng};
use crate::types::{argmax_rows, hard_assign, StatePath, TimeSeries};

pub const DEFAULT_REPS: usize = 200;
pub const DEFAULT_LENGTH: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloConfig {
    pub labels: Vec<String>,
    pub n_reps: usize,
    pub length: usize,
    pub seed: u64,
    /// Worker threads; does not affect results.
    #[serde(skip)]
    pub jobs: usize,
    pub k_max: usize,
    pub fuzziness: f64,
    pub lambda: f64,
    pub fuzzy: FuzzyConfig,
    pub estimation: EstimationConfig,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            labels: Vec::new(),
            n_reps: DEFAULT_REPS,
            length: DEFAULT_LENGTH,
            seed: 0,
            jobs: 1,
            k_max: 6,
            fuzziness: DEFAULT_FUZZINESS,
            lambda: 1.0,
            fuzzy: FuzzyConfig::default(),
            estimation: EstimationConfig::default(),
        }
    }
}

/// The three partition comparisons recorded per replication.
pub const COMPARISONS: [&str; 3] = ["MS-vs-True", "Fuzzy-vs-True", "Fuzzy-vs-MS"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub dgp: String,
    pub rep: usize,
    pub fit_ok: bool,
    /// Rand index per comparison; NaN when the MS fit failed.
    pub rand: [f64; 3],
    /// Selected `k` per index in `ValidityIndex::ALL` order.
    pub selected: [Option<usize>; 6],
}

#[derive(Debug, Clone, Serialize)]
pub struct DgpReport {
    pub label: String,
    pub k: usize,
    pub order: usize,
    pub n_reps: usize,
    pub n_failed: usize,
    /// One summary per comparison over successful replications.
    pub rand: [Option<FiveNumberSummary>; 3],
    /// Percent of replications selecting the true `k`, per index.
    pub success_rates: [f64; 6],
    /// Per index, counts for `k = 2..=k_max` followed by the undefined count.
    pub histograms: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: MonteCarloConfig,
    pub dgps: Vec<DgpReport>,
    pub replications: Vec<ReplicationRecord>,
}

fn run_replication(
    index: usize,
    label: &str,
    rep: usize,
    spec: &crate::types::MSModelSpec,
    cfg: &MonteCarloConfig,
) -> Result<ReplicationRecord> {
    let mut rng = stream_rng(cfg.seed, stream_id(index as u32, rep as u32));
    let (y, truth) = crate::markov::simulate_ms(spec, cfg.length, &mut rng)?;
    let sub_seed: u64 = rng.random();
    let k = spec.k();

    let select = SelectConfig {
        k_max: cfg.k_max,
        fuzziness: cfg.fuzziness,
        lambda: cfg.lambda,
        fuzzy: FuzzyConfig {
            seed: sub_seed,
            ..cfg.fuzzy
        },
    };
    let scan = scan_k(y.values(), &select)?;
    let report = IndexReport::from_rows(scan.iter().map(|e| (e.k, e.values)).collect());
    let selected = ValidityIndex::ALL.map(|ix| report.selected_k(ix));
    let fuzzy_part = match scan.iter().find(|e| e.k == k) {
        Some(e) => hard_assign(&e.fuzzy.membership),
        None => hard_assign(&fuzzy_kmeans(y.values(), k, cfg.fuzziness, &select.fuzzy)?.membership),
    };

    let est_cfg = EstimationConfig {
        seed: sub_seed,
        std_errors: false,
        ..cfg.estimation.clone()
    };
    let (fit_ok, rand) = match fit_ms(&y, k, spec.order(), &est_cfg) {
        Ok(est) => {
            let ms_part = StatePath::new(argmax_rows(&est.paths.smoothed), k)?;
            (
                true,
                [
                    rand_index(&ms_part, &truth)?,
                    rand_index(&fuzzy_part, &truth)?,
                    rand_index(&fuzzy_part, &ms_part)?,
                ],
            )
        }
        Err(_) => (false, [f64::NAN; 3]),
    };
    Ok(ReplicationRecord {
        dgp: label.to_string(),
        rep,
        fit_ok,
        rand,
        selected,
    })
}

fn summarize(label: &str, spec_k: usize, order: usize, recs: &[ReplicationRecord], k_max: usize) -> DgpReport {
    let ok: Vec<&ReplicationRecord> = recs.iter().filter(|r| r.fit_ok).collect();
    let rand = std::array::from_fn(|c| {
        let v: Vec<f64> = ok.iter().map(|r| r.rand[c]).collect();
        rand_summary(&v).ok()
    });
    let histograms: Vec<Vec<usize>> = (0..6)
        .map(|i| {
            let mut h = vec![0usize; k_max];
            for r in recs {
                match r.selected[i] {
                    Some(k) if (2..=k_max).contains(&k) => h[k - 2] += 1,
                    _ => h[k_max - 1] += 1,
                }
            }
            h
        })
        .collect();
    let success_rates = std::array::from_fn(|i| {
        let hits = recs.iter().filter(|r| r.selected[i] == Some(spec_k)).count();
        100.0 * hits as f64 / recs.len() as f64
    });
    DgpReport {
        label: label.to_string(),
        k: spec_k,
        order,
        n_reps: recs.len(),
        n_failed: recs.len() - ok.len(),
        rand,
        success_rates,
        histograms,
    }
}

pub fn run_monte_carlo(cfg: &MonteCarloConfig) -> Result<ExperimentReport> {
    if cfg.n_reps == 0 {
        return Err(MsError::InvalidArgument("n_reps must be at least 1".into()));
    }
    if cfg.labels.is_empty() {
        return Err(MsError::InvalidArgument("no DGP labels given".into()));
    }
    if cfg.k_max < 2 {
        return Err(MsError::InvalidArgument("k_max must be at least 2".into()));
    }
    let entries = cfg
        .labels
        .iter()
        .map(|l| find_dgp(l))
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize)> = (0..entries.len())
        .flat_map(|d| (0..cfg.n_reps).map(move |r| (d, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| MsError::InvalidArgument(e.to_string()))?;
    let replications = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(d, r)| {
                let (index, entry) = &entries[d];
                run_replication(*index, &entry.label, r, &entry.spec, cfg)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let dgps = entries
        .iter()
        .enumerate()
        .map(|(d, (_, e))| {
            let recs = &replications[d * cfg.n_reps..(d + 1) * cfg.n_reps];
            summarize(&e.label, e.k(), e.order(), recs, cfg.k_max)
        })
        .collect();
    Ok(ExperimentReport {
        config: cfg.clone(),
        dgps,
        replications,
    })
}

fn opt_k(k: Option<usize>) -> String {
    k.map_or_else(|| "NA".to_string(), |k| k.to_string())
}

impl ExperimentReport {
    pub fn dgp(&self, label: &str) -> Option<&DgpReport> {
        let (_, wanted) = find_dgp(label).ok()?;
        self.dgps.iter().find(|d| d.label == wanted.label)
    }

    pub fn rand_summary_csv(&self) -> String {
        let mut out = String::from("dgp,comparison,n,min,q1,median,q3,max\n");
        for d in &self.dgps {
            for (c, name) in COMPARISONS.iter().enumerate() {
                let _ = write!(out, "{},{},{}", d.label, name, d.n_reps - d.n_failed);
                match &d.rand[c] {
                    Some(s) => s.as_array().iter().for_each(|v| {
                        let _ = write!(out, ",{v}");
                    }),
                    None => out.push_str(",NA,NA,NA,NA,NA"),
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn success_rates_csv(&self) -> String {
        let mut out = String::from("dgp,true_k,PC,PE,MPC,ASW,ASWF,XB\n");
        for d in &self.dgps {
            let _ = write!(out, "{},{}", d.label, d.k);
            for r in d.success_rates {
                let _ = write!(out, ",{r}");
            }
            out.push('\n');
        }
        out
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("dgp,index,k,count\n");
        for d in &self.dgps {
            for (i, ix) in ValidityIndex::ALL.iter().enumerate() {
                for (b, count) in d.histograms[i].iter().enumerate() {
                    let k = if b + 1 == d.histograms[i].len() { "NA".to_string() } else { (b + 2).to_string() };
                    let _ = writeln!(out, "{},{},{},{}", d.label, ix.name(), k, count);
                }
            }
        }
        out
    }

    pub fn replications_csv(&self) -> String {
        let mut out = String::from("dgp,rep,fit_ok,rand_ms_true,rand_fuzzy_true,rand_fuzzy_ms");
        for ix in ValidityIndex::ALL {
            let _ = write!(out, ",k_{}", ix.name());
        }
        out.push('\n');
        for r in &self.replications {
            let _ = write!(out, "{},{},{}", r.dgp, r.rep + 1, r.fit_ok);
            for v in r.rand {
                let _ = write!(out, ",{v}");
            }
            for k in r.selected {
                let _ = write!(out, ",{}", opt_k(k));
            }
            out.push('\n');
        }
        out
    }

    pub fn manifest_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            tool: &'static str,
            version: &'static str,
            config: &'a MonteCarloConfig,
            failures: Vec<(&'a str, usize)>,
        }
        let m = Manifest {
            tool: "msfuzzy montecarlo",
            version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            failures: self.dgps.iter().map(|d| (d.label.as_str(), d.n_failed)).collect(),
        };
        Ok(serde_json::to_string_pretty(&m)? + "\n")
    }

    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        write_text(&dir.join("rand_summary.csv"), &self.rand_summary_csv())?;
        write_text(&dir.join("success_rates.csv"), &self.success_rates_csv())?;
        write_text(&dir.join("selected_k_histogram.csv"), &self.histogram_csv())?;
        write_text(&dir.join("replications.csv"), &self.replications_csv())?;
        write_text(&dir.join("manifest.json"), &self.manifest_json()?)
    }
}

#[derive(Debug, Clone)]
pub struct GdpConfig {
    pub seed: u64,
    pub select: SelectConfig,
    pub n_sim: usize,
    pub estimation: EstimationConfig,
    /// State counts of the fitted MS models.
    pub fit_k: Vec<usize>,
    /// `k` of the fuzzy partition compared with the MS inference.
    pub compare_k: usize,
    pub windows: Vec<usize>,
}

impl Default for GdpConfig {
    fn default() -> Self {
        GdpConfig {
            seed: 0,
            select: SelectConfig::default(),
            n_sim: 2000,
            estimation: EstimationConfig {
                std_errors: true,
                ..Default::default()
            },
            fit_k: vec![2, 3],
            compare_k: 3,
            windows: vec![3, 5],
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub k: usize,
    pub estimate: MSEstimate,
    /// Expected duration `1 / (1 - p_ii)` per state; infinite if absorbing.
    pub durations: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GdpReport {
    pub series: TimeSeries,
    pub index_report: IndexReport,
    pub homogeneity: HomogeneityResult,
    pub fits: Vec<FittedModel>,
    /// `(window, Rand)`; window 1 is the raw series.
    pub rand: Vec<(usize, f64)>,
}

impl GdpReport {
    pub fn fit(&self, k: usize) -> Option<&FittedModel> {
        self.fits.iter().find(|f| f.k == k)
    }

    pub fn rand_for_window(&self, window: usize) -> Option<f64> {
        self.rand.iter().find(|(w, _)| *w == window).map(|(_, r)| *r)
    }
}

/// Index scan, homogeneity test, MS fits and Rand comparisons of the MS
/// inference with fuzzy partitions of the raw and moving-averaged series.
pub fn run_gdp_case_study(y: &TimeSeries, cfg: &GdpConfig) -> Result<GdpReport> {
    let select = SelectConfig {
        fuzzy: FuzzyConfig {
            seed: cfg.seed,
            ..cfg.select.fuzzy
        },
        ..cfg.select
    };
    let scan = scan_k(y.values(), &select)?;
    let index_report = IndexReport::from_rows(scan.iter().map(|e| (e.k, e.values)).collect());
    let homogeneity = homogeneity_test(
        y,
        &index_report.best_values(),
        &HomogeneityConfig {
            n_sim: cfg.n_sim,
            seed: cfg.seed,
            select,
        },
    )?;

    let est_cfg = EstimationConfig {
        seed: cfg.seed,
        ..cfg.estimation.clone()
    };
    let fits = cfg
        .fit_k
        .iter()
        .map(|&k| {
            let estimate = fit_ms(y, k, 0, &est_cfg)?;
            let durations = (0..k)
                .map(|i| mean_duration(estimate.spec.transition.get(i, i)).unwrap_or(f64::INFINITY))
                .collect();
            Ok(FittedModel { k, estimate, durations })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rand = Vec::new();
    let kc = cfg.compare_k;
    let ms_part = match fits.iter().find(|f| f.k == kc) {
        Some(f) => StatePath::new(argmax_rows(&f.estimate.paths.smoothed), kc)?,
        None => {
            let e = fit_ms(y, kc, 0, &est_cfg)?;
            StatePath::new(argmax_rows(&e.paths.smoothed), kc)?
        }
    };
    for w in std::iter::once(1).chain(cfg.windows.iter().copied()) {
        let smoothed = moving_average(y, w)?;
        let fuzzy = fuzzy_kmeans(smoothed.values(), kc, select.fuzziness, &select.fuzzy)?;
        let half = w / 2;
        let span = ms_part.slice(half, y.len() - half);
        rand.push((w, rand_index(&hard_assign(&fuzzy.membership), &span)?));
    }

    Ok(GdpReport {
        series: y.clone(),
        index_report,
        homogeneity,
        fits,
        rand,
    })
}

fn estimate_rows(out: &mut String, f: &FittedModel) {
    let e = &f.estimate;
    let se = e.std_errors.as_ref();
    let se_or = |pick: &dyn Fn(&StdErrors) -> f64| se.map_or("NA".to_string(), |s| pick(s).to_string());
    let k = f.k;
    for j in 0..k {
        let _ = writeln!(out, "{k},mu_{},{},{}", j + 1, e.spec.means[j], se_or(&|s| s.means[j]));
    }
    for (i, phi) in e.spec.ar_coeffs.iter().enumerate() {
        let _ = writeln!(out, "{k},phi_{},{},{}", i + 1, phi, se_or(&|s| s.ar_coeffs[i]));
    }
    let _ = writeln!(out, "{k},sigma,{},{}", e.spec.sigma, se_or(&|s| s.sigma));
    for i in 0..k {
        for j in 0..k {
            let _ = writeln!(
                out,
                "{k},p_{}{},{},{}",
                i + 1,
                j + 1,
                e.spec.transition.get(i, j),
                se_or(&|s| s.transition[i][j])
            );
        }
    }
    for (i, d) in f.durations.iter().enumerate() {
        let _ = writeln!(out, "{k},duration_{},{d},NA", i + 1);
    }
    let _ = writeln!(out, "{k},loglik,{},NA", e.loglik);
    let _ = writeln!(out, "{k},AIC,{},NA", e.aic);
    let _ = writeln!(out, "{k},BIC,{},NA", e.bic);
}

impl GdpReport {
    pub fn estimates_csv(&self) -> String {
        let mut out = String::from("k,parameter,estimate,std_error\n");
        for f in &self.fits {
            estimate_rows(&mut out, f);
        }
        out
    }

    pub fn homogeneity_csv(&self) -> String {
        let mut out = String::from("index,observed,p_value\n");
        for ix in ValidityIndex::ALL {
            let _ = writeln!(
                out,
                "{},{},{}",
                ix.name(),
                self.homogeneity.observed.get(ix),
                self.homogeneity.p_values.get(ix)
            );
        }
        out
    }

    pub fn rand_csv(&self) -> String {
        let mut out = String::from("window,rand\n");
        for (w, r) in &self.rand {
            let _ = writeln!(out, "{w},{r}");
        }
        out
    }

    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        write_text(&dir.join("indices.csv"), &self.index_report.to_csv())?;
        write_text(&dir.join("homogeneity.csv"), &self.homogeneity_csv())?;
        write_text(&dir.join("estimates.csv"), &self.estimates_csv())?;
        write_text(&dir.join("rand.csv"), &self.rand_csv())?;
        for f in &self.fits {
            write_text(
                &dir.join(format!("smoothed_k{}.csv", f.k)),
                &smoothed_paths_csv(&self.series, &f.estimate.paths),
            )?;
        }
        Ok(())
    }
}

/// Writes the fuzzy membership matrix for `k` clusters next to the MS paths.
pub fn membership_report(y: &TimeSeries, k: usize, m: f64, cfg: &FuzzyConfig) -> Result<String> {
    let r = fuzzy_kmeans(y.values(), k, m, cfg)?;
    Ok(membership_csv(y, &r.membership))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_points: usize,
    /// Explicit `[lo, hi]`; defaults to the component means +- `width` sd.
    pub range: Option<(f64, f64)>,
    pub width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_points: 501,
            range: None,
            width: 6.0,
        }
    }
}

/// Ergodic mixture density of a catalog DGP on an equally spaced grid.
pub fn emit_density_grid(label: &str, grid: &GridSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, entry) = find_dgp(label)?;
    if grid.n_points < 2 {
        return Err(MsError::InvalidArgument("grid needs at least 2 points".into()));
    }
    let (lo, hi) = match grid.range {
        Some(r) => r,
        None => mixture_support(&entry.spec, grid.width)?,
    };
    if !(hi > lo) {
        return Err(MsError::InvalidArgument(format!("empty grid range [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (grid.n_points - 1) as f64;
    let xs: Vec<f64> = (0..grid.n_points).map(|i| lo + i as f64 * step).collect();
    let density = ergodic_mixture_density(&entry.spec, &xs)?;
    Ok((xs, density))
}

pub fn density_grid_csv(label: &str, grid: &GridSpec) -> Result<String> {
    let (xs, d) = emit_density_grid(label, grid)?;
    Ok(density_csv(&xs, &d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(labels: &[&str], reps: usize, jobs: usize) -> MonteCarloConfig {
        MonteCarloConfig {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            n_reps: reps,
            length: 60,
            seed: 11,
            jobs,
            k_max: 4,
            fuzzy: FuzzyConfig {
                n_starts: 3,
                ..Default::default()
            },
            estimation: EstimationConfig {
                n_restarts: 2,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn monte_carlo_is_thread_count_invariant() {
        let a = run_monte_carlo(&small_config(&["MS2--8", "MS3--4"], 3, 1)).unwrap();
        let b = run_monte_carlo(&small_config(&["MS2--8", "MS3--4"], 3, 3)).unwrap();
        assert_eq!(a.replications, b.replications);
        assert_eq!(a.rand_summary_csv(), b.rand_summary_csv());
        assert_eq!(a.manifest_json().unwrap(), b.manifest_json().unwrap());
        for d in &a.dgps {
            for (h, rate) in d.histograms.iter().zip(d.success_rates) {
                assert_eq!(h.iter().sum::<usize>(), 3);
                assert!((0.0..=100.0).contains(&rate));
            }
        }
        for r in &a.replications {
            assert!(r.rand.iter().all(|v| v.is_nan() || (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn monte_carlo_rejects_bad_input() {
        assert!(matches!(
            run_monte_carlo(&small_config(&["MS9--1"], 1, 1)),
            Err(MsError::UnknownLabel(_))
        ));
        assert!(run_monte_carlo(&small_config(&["MS2--1"], 0, 1)).is_err());
    }

    #[test]
    fn density_grid_integrates_to_one() {
        let (xs, d) = emit_density_grid("MS2--1", &GridSpec::default()).unwrap();
        let h = xs[1] - xs[0];
        let integral: f64 = d.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum();
        assert!((integral - 1.0).abs() < 1e-6);
        assert!(matches!(
            emit_density_grid("nope", &GridSpec::default()),
            Err(MsError::UnknownLabel(_))
        ));
    }
}
