use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msfuzzy::estimate::{fit_ms, EstimationConfig, MSEstimate};
use msfuzzy::experiments::{
    density_grid_csv, run_gdp_case_study, run_monte_carlo, GdpConfig, GridSpec, MonteCarloConfig,
    DEFAULT_LENGTH, DEFAULT_REPS,
};
use msfuzzy::indices::{homogeneity_test, select_k, HomogeneityConfig, SelectConfig, ValidityIndex};
use msfuzzy::io::{load_csv, membership_csv, simulation_csv, smoothed_paths_csv, write_text, Transform};
use msfuzzy::markov::{catalog_json, dgp_catalog, find_dgp, mean_duration, simulate_ms};
use msfuzzy::rng::rng_from_seed;
use msfuzzy::{fuzzy_kmeans, ErrorKind, FuzzyConfig, MsError, TimeSeries};

#[derive(Parser)]
#[command(name = "msfuzzy", version, about = "Markov-switching inference and fuzzy state-count detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// CSV file with a header row; an optional first column holds dates.
    #[arg(long)]
    input: PathBuf,
    /// Value column (default: last column).
    #[arg(long)]
    column: Option<String>,
    /// `none` or `growth` (400 * log-difference).
    #[arg(long, default_value = "none")]
    transform: Transform,
}

impl Input {
    fn load(&self) -> msfuzzy::Result<TimeSeries> {
        load_csv(&self.input, self.column.as_deref(), self.transform)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a catalog DGP.
    Simulate {
        #[arg(long)]
        dgp: String,
        #[arg(long = "T", default_value_t = DEFAULT_LENGTH)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an MS(k) or MS(k)-AR(1) model by maximum likelihood.
    Estimate {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        ar: u8,
        /// TOML file with estimation settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also compute robust standard errors.
        #[arg(long)]
        se: bool,
        /// Write smoothed probabilities here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fuzzy k-means memberships.
    Fuzzy {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write memberships here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validity indices for k = 2..kmax and the selected k per index.
    SelectK {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Test the indices against a clusterless Normal null.
    Homogeneity {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 2000)]
        nsim: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Monte Carlo study over catalog DGPs.
    Montecarlo {
        /// Comma-separated labels or `all`.
        #[arg(long)]
        dgps: String,
        #[arg(long, default_value_t = DEFAULT_REPS)]
        reps: usize,
        #[arg(long = "T", default_value_t = DEFAULT_LENGTH)]
        length: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
        /// Estimation restarts per replication.
        #[arg(long, default_value_t = 20)]
        restarts: usize,
    },
    /// Full case study on a GDP file.
    Gdp {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        nsim: usize,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Ergodic mixture density of a catalog DGP on a grid.
    Density {
        #[arg(long)]
        dgp: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 501)]
        points: usize,
    },
    /// Print the DGP catalog as JSON.
    Catalog,
}

fn format_estimate(e: &MSEstimate) -> String {
    let mut s = String::new();
    let k = e.spec.k();
    let se = e.std_errors.as_ref();
    let fmt_se = |v: Option<f64>| v.map_or(String::new(), |v| format!("  ({v:.4})"));
    let _ = writeln!(s, "k = {k}, AR order = {}", e.spec.order());
    for j in 0..k {
        let _ = writeln!(s, "mu_{}     {:10.4}{}", j + 1, e.spec.means[j], fmt_se(se.map(|x| x.means[j])));
    }
    for (i, phi) in e.spec.ar_coeffs.iter().enumerate() {
        let _ = writeln!(s, "phi_{}    {:10.4}{}", i + 1, phi, fmt_se(se.map(|x| x.ar_coeffs[i])));
    }
    let _ = writeln!(s, "sigma     {:10.4}{}", e.spec.sigma, fmt_se(se.map(|x| x.sigma)));
    for i in 0..k {
        for j in 0..k {
            let _ = writeln!(
                s,
                "p_{}{}      {:10.4}{}",
                i + 1,
                j + 1,
                e.spec.transition.get(i, j),
                fmt_se(se.map(|x| x.transition[i][j]))
            );
        }
    }
    for i in 0..k {
        let d = mean_duration(e.spec.transition.get(i, i)).unwrap_or(f64::INFINITY);
        let _ = writeln!(s, "duration_{} {:9.2}", i + 1, d);
    }
    let _ = writeln!(s, "loglik    {:10.4}", e.loglik);
    let _ = writeln!(s, "AIC       {:10.4}", e.aic);
    let _ = writeln!(s, "BIC       {:10.4}", e.bic);
    let _ = writeln!(s, "converged {}", e.converged);
    s
}

fn parse_labels(dgps: &str) -> msfuzzy::Result<Vec<String>> {
    if dgps.trim().eq_ignore_ascii_case("all") {
        return Ok(dgp_catalog().into_iter().map(|e| e.label).collect());
    }
    dgps.split(',')
        .map(|l| find_dgp(l).map(|(_, e)| e.label))
        .collect()
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> msfuzzy::Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    let pool = b.build().map_err(|e| MsError::InvalidArgument(e.to_string()))?;
    Ok(pool.install(f))
}

fn write_or_print(out: Option<&Path>, text: &str) -> msfuzzy::Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cmd: Command) -> msfuzzy::Result<()> {
    match cmd {
        Command::Simulate { dgp, length, seed, out } => {
            let (_, entry) = find_dgp(&dgp)?;
            let (y, states) = simulate_ms(&entry.spec, length, &mut rng_from_seed(seed))?;
            write_text(&out, &simulation_csv(&y, &states))
        }
        Command::Estimate { input, k, ar, config, se, out } => {
            let y = input.load()?;
            let mut cfg = match config {
                Some(p) => EstimationConfig::from_file(&p)?,
                None => EstimationConfig::default(),
            };
            cfg.std_errors |= se;
            let e = fit_ms(&y, k, ar as usize, &cfg)?;
            print!("{}", format_estimate(&e));
            if let Some(p) = out {
                write_text(&p, &smoothed_paths_csv(&y, &e.paths))?;
            }
            Ok(())
        }
        Command::Fuzzy { input, k, m, seed, out } => {
            let y = input.load()?;
            let r = fuzzy_kmeans(y.values(), k, m, &FuzzyConfig::with_seed(seed))?;
            eprintln!(
                "centroids: {:?}\nobjective: {}\nconverged: {}",
                r.centroids, r.objective, r.converged
            );
            write_or_print(out.as_deref(), &membership_csv(&y, &r.membership))
        }
        Command::SelectK { input, kmax, m, lambda, seed } => {
            let y = input.load()?;
            let cfg = SelectConfig {
                k_max: kmax,
                fuzziness: m,
                lambda,
                fuzzy: FuzzyConfig::with_seed(seed),
            };
            print!("{}", select_k(y.values(), &cfg)?.to_csv());
            Ok(())
        }
        Command::Homogeneity { input, nsim, seed, kmax, jobs } => {
            let y = input.load()?;
            let select = SelectConfig {
                k_max: kmax,
                fuzzy: FuzzyConfig::with_seed(seed),
                ..Default::default()
            };
            let observed = select_k(y.values(), &select)?.best_values();
            let cfg = HomogeneityConfig { n_sim: nsim, seed, select };
            let res = in_pool(jobs, || homogeneity_test(&y, &observed, &cfg))??;
            println!("index,observed,p_value");
            for ix in ValidityIndex::ALL {
                println!("{},{},{}", ix.name(), observed.get(ix), res.p_values.get(ix));
            }
            Ok(())
        }
        Command::Montecarlo { dgps, reps, length, seed, out, jobs, kmax, restarts } => {
            let cfg = MonteCarloConfig {
                labels: parse_labels(&dgps)?,
                n_reps: reps,
                length,
                seed,
                jobs,
                k_max: kmax,
                estimation: EstimationConfig {
                    n_restarts: restarts,
                    ..Default::default()
                },
                ..Default::default()
            };
            let report = run_monte_carlo(&cfg)?;
            report.write_to_dir(&out)?;
            print!("{}", report.rand_summary_csv());
            Ok(())
        }
        Command::Gdp { input, out, seed, nsim, jobs } => {
            let y = input.load()?;
            let cfg = GdpConfig {
                seed,
                n_sim: nsim,
                ..Default::default()
            };
            let report = in_pool(jobs, || run_gdp_case_study(&y, &cfg))??;
            report.write_to_dir(&out)?;
            print!("{}", report.index_report.to_csv());
            print!("{}", report.homogeneity_csv());
            for f in &report.fits {
                print!("{}", format_estimate(&f.estimate));
            }
            print!("{}", report.rand_csv());
            Ok(())
        }
        Command::Density { dgp, out, points } => {
            let grid = GridSpec {
                n_points: points,
                ..Default::default()
            };
            write_text(&out, &density_grid_csv(&dgp, &grid)?)
        }
        Command::Catalog => {
            println!("{}", catalog_json()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numerical => 3,
            })
        }
    }
}
