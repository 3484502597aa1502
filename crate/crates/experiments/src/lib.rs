//! Experiment drivers: scheme comparison by KL divergence, EDP sample-size
//! sweeps, and classification with elicited priors.
//!
//! Every random choice is derived from an experiment seed with
//! [`derive_seed`](cptforge_core::sampling::derive_seed) and one of the
//! [`tags`], so a config plus its seed list fixes every report byte.

pub mod classification;
pub mod config;
pub mod kl_eval;
pub mod report;
pub mod setup;
pub mod sweep;

use thiserror::Error;

pub use classification::{run_classification, synthetic_nb, ClassMethod, ClassRow};
pub use config::{AlphaPolicy, ExperimentConfig, Method, ProviderConfig, SamplingMode};
pub use kl_eval::{run_kl_eval, KlEvalRow};
pub use sweep::{run_edp_sweep, PriorKind, SweepRow};

/// Seed-stream tags, in the order each consumer draws from
/// `derive_seed(experiment_seed, [tag, ...])`.
pub mod tags {
    /// Random ground-truth network `i`: `[NETWORK, i]`.
    pub const NETWORK: u64 = 0;
    /// Mock provider noise for network `i`: `[MOCK, i]`.
    pub const MOCK: u64 = 1;
    /// Random-prior baseline for network `i`: `[RANDOM_PRIOR, i]`.
    pub const RANDOM_PRIOR: u64 = 2;
    /// Name permutation of the scrambled baseline: `[SCRAMBLE, i]`.
    pub const SCRAMBLE: u64 = 3;
    /// Sweep data for network `i` at size `n`: `[DATA, i, n]`.
    pub const DATA: u64 = 4;
    /// Train/test split of a classification dataset: `[SPLIT]`.
    pub const SPLIT: u64 = 5;
    /// Low-data training subsample `r` of size `k`: `[RUN, k, r]`.
    pub const RUN: u64 = 6;
    /// Synthetic classification network and rows: `[SYNTHETIC]`.
    pub const SYNTHETIC: u64 = 7;
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Network(#[from] cptforge_core::bn::NetworkError),
    #[error(transparent)]
    Dataset(#[from] cptforge_core::dataset::DatasetError),
    #[error(transparent)]
    Estimation(#[from] cptforge_core::estimation::EstimationError),
    #[error(transparent)]
    Metrics(#[from] cptforge_core::metrics::MetricsError),
    #[error(transparent)]
    Classify(#[from] cptforge_core::classify::ClassifyError),
    #[error(transparent)]
    Elicit(#[from] cptforge_elicit::ElicitError),
    #[error("report output: {0}")]
    Report(String),
}
