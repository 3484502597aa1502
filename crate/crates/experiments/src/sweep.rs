//! EDP sample-size sweeps: elicited prior, uniform prior and MLE fused with
//! the same data at each size.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use cptforge_core::bn::Network;
use cptforge_core::dataset::{count_dataset, CountTable};
use cptforge_core::estimation::{parameterize, EdpConfig, Prior};
use cptforge_core::metrics::{bn_kl, summarize, KlConfig, Summary};
use cptforge_core::prior::PriorTable;
use cptforge_core::sampling::{derive_seed, forward_sample, per_row_sample};
use cptforge_elicit::PromptStyle;

use crate::config::{ExperimentConfig, SamplingMode};
use crate::report::{write_csv, write_json};
use crate::setup::{contexts_for, ground_truths, make_provider, open_cache, par_map, Elicitor};
use crate::{tags, ExperimentError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    /// Elicited prior fused with the counts.
    Edp,
    /// Uniform prior fused with the counts at the same alpha.
    Uniform,
    /// Relative frequencies, uniform on unseen configurations.
    Mle,
}

impl PriorKind {
    pub const ALL: [PriorKind; 3] = [PriorKind::Edp, PriorKind::Uniform, PriorKind::Mle];

    pub fn as_str(&self) -> &'static str {
        match self {
            PriorKind::Edp => "edp",
            PriorKind::Uniform => "uniform",
            PriorKind::Mle => "mle",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub network: String,
    pub prior: PriorKind,
    pub size: usize,
    pub alpha: f64,
    pub bn_kl: f64,
}

/// Counts for sample size `n` drawn from `truth`.
pub fn draw_counts(truth: &Network<f64>, mode: SamplingMode, n: usize, seed: u64) -> CountTable {
    match mode {
        SamplingMode::Forward => {
            let ds = forward_sample(truth, n, seed);
            count_dataset(truth.structure(), &ds).expect("sampled columns match the structure")
        }
        SamplingMode::PerRow => per_row_sample(truth, n as u64, false, seed),
        SamplingMode::PerRowScaled => per_row_sample(truth, n as u64, true, seed),
    }
}

/// The three estimates of one sweep point, scored against `truth`.
pub fn sweep_point(
    truth: &Network<f64>,
    prior: &PriorTable<f64>,
    counts: &CountTable,
    alpha: f64,
    kl: &KlConfig,
) -> Result<[(PriorKind, f64); 3], ExperimentError> {
    let s = truth.structure();
    let name = truth.name();
    let edp_cfg = EdpConfig::new(alpha)?;
    let score = |net: Network<f64>| bn_kl(truth, &net, kl);
    let edp = parameterize(name, s, Prior::Table(prior), Some(counts), &edp_cfg)?;
    let uniform = parameterize(name, s, Prior::Uniform, Some(counts), &edp_cfg)?;
    let mle = parameterize(name, s, Prior::None, Some(counts), &EdpConfig::new(0.0)?)?;
    Ok([
        (PriorKind::Edp, score(edp)?),
        (PriorKind::Uniform, score(uniform)?),
        (PriorKind::Mle, score(mle)?),
    ])
}

/// Every network, size and seed. The prior is elicited once per network
/// and seed with the configured scheme; each size draws fresh data.
pub fn run_edp_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    cfg.validate()?;
    let kl = KlConfig::new(cfg.epsilon)?;
    let cache = open_cache(cfg)?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let truths = ground_truths(cfg, seed)?;
        let per_net = par_map(cfg.workers, &truths, |i, truth| {
            let provider = make_provider(cfg, Some(truth), derive_seed(seed, &[tags::MOCK, i as u64]))?;
            let elicitor = Elicitor {
                cfg,
                provider: provider.as_ref(),
                cache: &cache,
            };
            let ctx = contexts_for(cfg, truth.name(), truth.structure())?;
            let prior = elicitor.prior(
                truth.name(),
                truth.structure(),
                &ctx,
                cfg.prior_scheme,
                PromptStyle::Described,
            )?;
            let mut out = Vec::new();
            for &n in &cfg.sample_sizes {
                let counts = draw_counts(
                    truth,
                    cfg.sampling,
                    n,
                    derive_seed(seed, &[tags::DATA, i as u64, n as u64]),
                );
                let alpha = cfg.alpha.alpha(n);
                for (prior_kind, v) in sweep_point(truth, &prior, &counts, alpha, &kl)? {
                    out.push(SweepRow {
                        seed,
                        network: truth.name().to_string(),
                        prior: prior_kind,
                        size: n,
                        alpha: if prior_kind == PriorKind::Mle { 0.0 } else { alpha },
                        bn_kl: v,
                    });
                }
            }
            Ok(out)
        })?;
        rows.extend(per_net.into_iter().flatten());
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummaryRow {
    pub seed: u64,
    pub prior: PriorKind,
    pub size: usize,
    pub bn_kl: Summary,
}

/// Boxplot statistics of `bn_kl` across networks, per seed, prior and size.
pub fn summarize_sweep(rows: &[SweepRow]) -> Vec<SweepSummaryRow> {
    let mut groups: BTreeMap<(u64, PriorKind, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.seed, r.prior, r.size)).or_default().push(r.bn_kl);
    }
    groups
        .into_iter()
        .filter_map(|((seed, prior, size), v)| {
            Some(SweepSummaryRow {
                seed,
                prior,
                size,
                bn_kl: summarize(&v)?,
            })
        })
        .collect()
}

/// Writes `sweep.csv` and `sweep_summary.json` under `dir`.
pub fn write_sweep_report(dir: &Path, rows: &[SweepRow]) -> Result<(), ExperimentError> {
    write_csv(&dir.join("sweep.csv"), rows)?;
    write_json(&dir.join("sweep_summary.json"), &summarize_sweep(rows))
}
