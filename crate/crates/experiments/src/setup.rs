//! Ground truths, contexts, providers and prior elicitation shared by the
//! drivers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cptforge_core::bn::{Network, Structure};
use cptforge_core::prior::{PriorTable, Scheme};
use cptforge_core::random::random_network;
use cptforge_core::sampling::derive_seed;
use cptforge_elicit::{
    elicit_cpts, ContextSet, ElicitConfig, HttpProvider, MockProvider, PromptStyle, Provider, ResponseCache,
};

use crate::config::{ExperimentConfig, ProviderConfig};
use crate::{tags, ExperimentError};

/// Configured networks followed by `random_networks.count` random ones
/// (named `rand-000`, ...) drawn for `seed`.
pub fn ground_truths(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Network<f64>>, ExperimentError> {
    let mut nets = Vec::new();
    for path in &cfg.networks {
        nets.push(Network::load(path)?);
    }
    if let Some(r) = &cfg.random_networks {
        for i in 0..r.count {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[tags::NETWORK, i as u64]));
            nets.push(random_network(
                &mut rng,
                &format!("rand-{i:03}"),
                r.min_variables..=r.max_variables,
                r.min_states..=r.max_states,
                r.max_parents,
            ));
        }
    }
    if nets.is_empty() {
        return Err(ExperimentError::Config("no networks configured".into()));
    }
    Ok(nets)
}

/// `<contexts_dir>/<name>.json` when present, otherwise generic
/// descriptions built from the variable names.
pub fn contexts_for(cfg: &ExperimentConfig, name: &str, structure: &Structure) -> Result<ContextSet, ExperimentError> {
    if let Some(dir) = &cfg.contexts_dir {
        let path = dir.join(format!("{name}.json"));
        if path.exists() {
            return Ok(ContextSet::load(path)?);
        }
    }
    log::debug!("{name}: no context file, using generic descriptions");
    Ok(ContextSet::generic(structure))
}

/// The configured provider; the mock answers from `truth` with noise
/// seeded by `seed`.
pub fn make_provider(
    cfg: &ExperimentConfig,
    truth: Option<&Network<f64>>,
    seed: u64,
) -> Result<Box<dyn Provider>, ExperimentError> {
    Ok(match &cfg.provider {
        ProviderConfig::Mock { kappa } => {
            let truth = truth
                .ok_or_else(|| ExperimentError::Config("the mock provider needs a ground-truth network".into()))?;
            Box::new(MockProvider::oracle(truth.clone(), *kappa, seed))
        }
        ProviderConfig::Http(h) => Box::new(HttpProvider::new(h.clone())?),
    })
}

pub fn open_cache(cfg: &ExperimentConfig) -> Result<ResponseCache, ExperimentError> {
    Ok(match &cfg.elicitation.cache {
        Some(p) => ResponseCache::open(p)?,
        None => ResponseCache::in_memory(),
    })
}

pub fn elicit_config(cfg: &ExperimentConfig, scheme: Scheme, style: PromptStyle) -> ElicitConfig {
    let e = &cfg.elicitation;
    ElicitConfig {
        scheme,
        style,
        temperature: e.temperature,
        max_retries: e.max_retries,
        workers: e.workers,
        rate_limit: e.rate_limit,
    }
}

pub struct Elicitor<'a> {
    pub cfg: &'a ExperimentConfig,
    pub provider: &'a dyn Provider,
    pub cache: &'a ResponseCache,
}

impl Elicitor<'_> {
    pub fn prior(
        &self,
        name: &str,
        structure: &Structure,
        contexts: &ContextSet,
        scheme: Scheme,
        style: PromptStyle,
    ) -> Result<PriorTable<f64>, ExperimentError> {
        let ec = elicit_config(self.cfg, scheme, style);
        Ok(elicit_cpts(name, structure, contexts, self.provider, self.cache, &ec)?)
    }
}

/// Maps `f` over `items` on at most `workers` threads, keeping input order.
pub fn par_map<I: Sync, O: Send>(
    workers: usize,
    items: &[I],
    f: impl Fn(usize, &I) -> Result<O, ExperimentError> + Sync + Send,
) -> Result<Vec<O>, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    pool.install(|| items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect())
}
