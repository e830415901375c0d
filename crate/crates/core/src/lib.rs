//! Markov-switching regime inference and nonparametric detection of the
//! number of regimes.
//!
//! The parametric side simulates, filters, smooths and estimates MS and
//! MS-AR(1) models. The nonparametric side clusters observations with fuzzy
//! k-means and picks the number of clusters with validity indices. The
//! [`agreement`] and [`experiments`] modules compare the two.

pub mod agreement;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod filter;
pub mod fuzzy;
pub mod indices;
pub mod io;
pub mod markov;
pub mod optim;
pub mod rng;
pub mod stats;
pub mod types;

pub use agreement::{moving_average, rand_index, rand_summary, ContingencyTable, FiveNumberSummary};
pub use error::{ErrorKind, MsError, Result};
pub use estimate::{fit_ms, robust_std_errors, EstimationConfig, MSEstimate, StdErrors};
pub use filter::{filter_and_smooth, hamilton_filter, infer_states, kim_smoother, log_likelihood, FilterOutput};
pub use fuzzy::{fuzzy_kmeans, FuzzyConfig, FuzzyResult};
pub use indices::{homogeneity_test, select_k, IndexReport, IndexValues, SelectConfig, ValidityIndex};
pub use io::{load_csv, Transform};
pub use markov::{dgp_catalog, ergodic_probabilities, find_dgp, mean_duration, simulate_ms, DgpCatalogEntry};
pub use types::{
    MSModelSpec, MembershipMatrix, PermuteStates, ProbabilityPaths, StatePath, TimeSeries, TransitionMatrix,
};
