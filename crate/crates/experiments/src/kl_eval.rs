//! Scheme comparison: every method's parameters scored against the ground
//! truth by BN KL and CPT KL.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use cptforge_core::bn::Network;
use cptforge_core::metrics::{bn_kl, cpt_kl, summarize, KlConfig, Summary};
use cptforge_core::prior::{PriorTable, Scheme};
use cptforge_core::sampling::derive_seed;
use cptforge_elicit::{baseline_priors, scramble_names, ContextSet, PromptStyle};

use crate::config::{ExperimentConfig, Method};
use crate::report::{write_csv, write_json};
use crate::setup::{contexts_for, ground_truths, make_provider, open_cache, par_map, Elicitor};
use crate::{tags, ExperimentError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlEvalRow {
    pub seed: u64,
    pub network: String,
    pub method: Method,
    pub bn_kl: f64,
    pub cpt_kl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub bn_kl: Summary,
    pub cpt_kl: Summary,
}

/// The prior table `method` produces for network `index` under `seed`.
pub fn method_prior(
    cfg: &ExperimentConfig,
    elicitor: &Elicitor<'_>,
    truth: &Network<f64>,
    contexts: &ContextSet,
    method: Method,
    index: usize,
    seed: u64,
) -> Result<PriorTable<f64>, ExperimentError> {
    let s = truth.structure();
    let name = truth.name();
    let described = |scheme| elicitor.prior(name, s, contexts, scheme, PromptStyle::Described);
    match method {
        Method::SepState => described(Scheme::SepState),
        Method::FullDist => described(Scheme::FullDist),
        Method::TokenProb => described(Scheme::TokenProb),
        Method::Uniform => Ok(baseline_priors(Scheme::Uniform, name, s, 0)?),
        Method::Random => Ok(baseline_priors(
            Scheme::Random,
            name,
            s,
            derive_seed(seed, &[tags::RANDOM_PRIOR, index as u64]),
        )?),
        Method::Scrambled => {
            let names: Vec<String> = s.variables().iter().map(|v| v.name.clone()).collect();
            let map = scramble_names(&names, derive_seed(seed, &[tags::SCRAMBLE, index as u64]))?;
            elicitor.prior(name, s, contexts, cfg.prior_scheme, PromptStyle::Scrambled(map))
        }
        Method::NoContext => elicitor.prior(name, s, contexts, cfg.prior_scheme, PromptStyle::NoContext),
    }
}

/// All configured methods on every ground truth, for every seed.
pub fn run_kl_eval(cfg: &ExperimentConfig) -> Result<Vec<KlEvalRow>, ExperimentError> {
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
            let mut out = Vec::with_capacity(cfg.methods.len());
            for &method in &cfg.methods {
                let prior = method_prior(cfg, &elicitor, truth, &ctx, method, i, seed)?;
                let est = prior.to_network(truth.name(), truth.structure())?;
                out.push(KlEvalRow {
                    seed,
                    network: truth.name().to_string(),
                    method,
                    bn_kl: bn_kl(truth, &est, &kl)?,
                    cpt_kl: cpt_kl(truth, &est, &kl)?,
                });
            }
            Ok(out)
        })?;
        rows.extend(per_net.into_iter().flatten());
    }
    Ok(rows)
}

/// Boxplot statistics per method over all networks and seeds.
pub fn summarize_kl(rows: &[KlEvalRow]) -> BTreeMap<String, MethodSummary> {
    let mut groups: BTreeMap<Method, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let g = groups.entry(r.method).or_default();
        g.0.push(r.bn_kl);
        g.1.push(r.cpt_kl);
    }
    groups
        .into_iter()
        .filter_map(|(m, (b, c))| {
            Some((
                m.as_str().to_string(),
                MethodSummary {
                    bn_kl: summarize(&b)?,
                    cpt_kl: summarize(&c)?,
                },
            ))
        })
        .collect()
}

/// Writes `kl.csv` and `kl_summary.json` under `dir`.
pub fn write_kl_report(dir: &Path, rows: &[KlEvalRow]) -> Result<(), ExperimentError> {
    write_csv(&dir.join("kl.csv"), rows)?;
    write_json(&dir.join("kl_summary.json"), &summarize_kl(rows))
}
