//! Row-by-row elicitation of a whole prior table, plus the non-model
//! baselines.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cptforge_core::bn::{Distribution, Structure};
use cptforge_core::estimation::{normalize_raw, RawElicitation};
use cptforge_core::prior::{PriorRow, PriorTable, Provenance, Scheme};

use crate::cache::{cache_key, CacheRecord, ResponseCache};
use crate::context::ContextSet;
use crate::parse::{parse_distribution, parse_probability, token_scores_to_distribution};
use crate::prompt::{
    build_fulldist_prompt, build_sepstate_prompt, build_tokenprob_prompt, retry_suffix, PromptStyle, RetryKind,
};
use crate::provider::{Answer, Provider, ProviderRequest, ProviderResponse, RateLimiter, RowQuery};
use crate::ElicitError;

#[derive(Clone, Debug)]
pub struct ElicitConfig {
    pub scheme: Scheme,
    pub style: PromptStyle,
    pub temperature: f64,
    /// Extra attempts after an unparseable reply; the row falls back to
    /// uniform once they are used up.
    pub max_retries: u32,
    /// Concurrent requests in flight.
    pub workers: usize,
    /// Requests per second, unlimited when `None`.
    pub rate_limit: Option<f64>,
}

impl Default for ElicitConfig {
    fn default() -> Self {
        ElicitConfig {
            scheme: Scheme::SepState,
            style: PromptStyle::Described,
            temperature: 0.1,
            max_retries: 3,
            workers: 4,
            rate_limit: None,
        }
    }
}

struct Asked<R> {
    value: Option<R>,
    raw: Vec<String>,
    retries: u32,
    timestamp: Option<String>,
}

struct Session<'a> {
    structure: &'a Structure,
    contexts: &'a ContextSet,
    provider: &'a dyn Provider,
    provider_id: String,
    cache: &'a ResponseCache,
    cfg: &'a ElicitConfig,
    limiter: Option<RateLimiter>,
}

impl Session<'_> {
    fn fetch(&self, prompt: &str, want_scores: bool, query: &RowQuery) -> Result<CacheRecord, ElicitError> {
        let key = cache_key(&self.provider_id, self.cfg.temperature, want_scores, prompt);
        if let Some(rec) = self.cache.get(&key) {
            return Ok(rec);
        }
        if let Some(l) = &self.limiter {
            l.acquire();
        }
        let mut req = ProviderRequest::new(prompt, self.cfg.temperature)?;
        req.want_token_scores = want_scores;
        req.query = Some(query.clone());
        let resp: ProviderResponse = self.provider.complete(&req)?;
        self.cache.put(CacheRecord {
            key,
            prompt: prompt.to_string(),
            response: resp.text,
            scores: resp.token_scores,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }

    fn ask<R>(
        &self,
        base: &str,
        retry: RetryKind<'_>,
        query: &RowQuery,
        parse: impl Fn(&CacheRecord) -> Result<R, ElicitError>,
    ) -> Result<Asked<R>, ElicitError> {
        let want_scores = query.want == Answer::StateName;
        let mut out = Asked {
            value: None,
            raw: Vec::new(),
            retries: 0,
            timestamp: None,
        };
        for attempt in 0..=self.cfg.max_retries {
            let prompt = if attempt == 0 {
                base.to_string()
            } else {
                format!("{base}{}", retry_suffix(retry, attempt))
            };
            let rec = self.fetch(&prompt, want_scores, query)?;
            out.raw.push(rec.response.clone());
            out.timestamp = Some(rec.timestamp.clone());
            out.retries = attempt;
            match parse(&rec) {
                Ok(v) => {
                    out.value = Some(v);
                    break;
                }
                Err(e) => log::debug!("{}: unusable reply ({e})", query.variable),
            }
        }
        Ok(out)
    }

    fn row(&self, var: usize, row: usize) -> Result<PriorRow<f64>, ElicitError> {
        let s = self.structure;
        let v = s.variable(var);
        let pc = s.parent_config(var, row);
        let m = v.cardinality();
        let informed = matches!(self.cfg.style, PromptStyle::Described);
        let query = |want, state| RowQuery {
            variable: v.name.clone(),
            parents: pc.assignments().to_vec(),
            state,
            want,
            informed,
        };
        let mut provenance = Provenance {
            scheme: Some(self.cfg.scheme),
            context: self.cfg.style.mode(),
            provider: self.provider_id.clone(),
            ..Provenance::default()
        };
        let probs: Option<Distribution<f64>> = match self.cfg.scheme {
            Scheme::SepState => {
                let mut values = Vec::with_capacity(m);
                for state in 0..m {
                    let base = build_sepstate_prompt(s, &v.name, &pc, state, self.contexts, &self.cfg.style)?;
                    let a = self.ask(
                        &base,
                        RetryKind::Probability,
                        &query(Answer::Probability, Some(state)),
                        |r| parse_probability(&r.response),
                    )?;
                    provenance.raw.extend(a.raw);
                    provenance.retries += a.retries;
                    provenance.timestamp = a.timestamp;
                    match a.value {
                        Some(p) => values.push(p),
                        None => break,
                    }
                }
                if values.len() == m {
                    normalize_raw(&RawElicitation::new(values)).ok()
                } else {
                    None
                }
            }
            Scheme::FullDist => {
                let base = build_fulldist_prompt(s, &v.name, &pc, self.contexts, &self.cfg.style)?;
                let a = self.ask(&base, RetryKind::Tuple(m), &query(Answer::Tuple, None), |r| {
                    let raw = parse_distribution(&r.response, m)?;
                    normalize_raw(&raw).map_err(|e| ElicitError::Parse(e.to_string()))
                })?;
                provenance.raw = a.raw;
                provenance.retries = a.retries;
                provenance.timestamp = a.timestamp;
                a.value
            }
            Scheme::TokenProb => {
                let base = build_tokenprob_prompt(s, &v.name, &pc, self.contexts, &self.cfg.style)?;
                let a = self.ask(
                    &base,
                    RetryKind::StateName(&v.states),
                    &query(Answer::StateName, None),
                    |r| {
                        let scores = r
                            .scores
                            .as_deref()
                            .ok_or_else(|| ElicitError::Parse("reply carries no token scores".into()))?;
                        token_scores_to_distribution(scores, &v.states)
                    },
                )?;
                provenance.raw = a.raw;
                provenance.retries = a.retries;
                provenance.timestamp = a.timestamp;
                a.value
            }
            other => return Err(ElicitError::UnsupportedScheme(other.as_str().to_string())),
        };
        let probs = probs.unwrap_or_else(|| {
            log::warn!("{} row {row}: no usable answer, using uniform", v.name);
            provenance.fallback = true;
            Distribution::uniform(m)
        });
        Ok(PriorRow { probs, provenance })
    }
}

/// Queries `provider` (through `cache`) for every CPT row of `structure`.
///
/// Rows are handed to `cfg.workers` threads; the result does not depend on
/// the order in which they finish. Every reply is cached before it is
/// parsed, so a complete cache replays without touching the provider.
pub fn elicit_cpts(
    name: &str,
    structure: &Structure,
    contexts: &ContextSet,
    provider: &dyn Provider,
    cache: &ResponseCache,
    cfg: &ElicitConfig,
) -> Result<PriorTable<f64>, ElicitError> {
    if !matches!(cfg.scheme, Scheme::SepState | Scheme::FullDist | Scheme::TokenProb) {
        return Err(ElicitError::UnsupportedScheme(cfg.scheme.as_str().to_string()));
    }
    if cfg.style == PromptStyle::Described {
        contexts.check_covers(structure)?;
    }
    let session = Session {
        structure,
        contexts,
        provider,
        provider_id: provider.id(),
        cache,
        cfg,
        limiter: cfg.rate_limit.map(|r| RateLimiter::new(r, cfg.workers)),
    };
    let jobs: Vec<(usize, usize)> = (0..structure.len())
        .flat_map(|v| (0..structure.row_count(v)).map(move |r| (v, r)))
        .collect();
    let results: Mutex<Vec<Option<PriorRow<f64>>>> = Mutex::new(vec![None; jobs.len()]);
    let failure: Mutex<Option<ElicitError>> = Mutex::new(None);
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    std::thread::scope(|scope| {
        for _ in 0..cfg.workers.clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() || stop.load(Ordering::Relaxed) {
                    break;
                }
                match session.row(jobs[i].0, jobs[i].1) {
                    Ok(r) => results.lock().expect("results lock")[i] = Some(r),
                    Err(e) => {
                        stop.store(true, Ordering::Relaxed);
                        failure.lock().expect("failure lock").get_or_insert(e);
                        break;
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().expect("failure lock") {
        return Err(e);
    }
    let mut rows = results.into_inner().expect("results lock").into_iter();
    let mut table = PriorTable::new(name);
    for v in structure.variables() {
        let n = structure.row_count(structure.id(&v.name)?);
        let var_rows = rows.by_ref().take(n).map(|r| r.expect("every job finished")).collect();
        table.variables.insert(v.name.clone(), var_rows);
    }
    Ok(table)
}

/// Uniform rows, or rows of i.i.d. uniform(0, 1) values normalized, drawn
/// in declaration order from one seeded stream.
pub fn baseline_priors(
    kind: Scheme,
    name: &str,
    structure: &Structure,
    seed: u64,
) -> Result<PriorTable<f64>, ElicitError> {
    match kind {
        Scheme::Uniform => Ok(PriorTable::uniform(name, structure)),
        Scheme::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut table = PriorTable::new(name);
            for id in 0..structure.len() {
                let m = structure.cardinality(id);
                let rows = (0..structure.row_count(id))
                    .map(|_| {
                        let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
                        PriorRow {
                            probs: normalize_raw(&RawElicitation::new(raw))
                                .unwrap_or_else(|_| Distribution::uniform(m)),
                            provenance: Provenance {
                                scheme: Some(Scheme::Random),
                                ..Provenance::default()
                            },
                        }
                    })
                    .collect();
                table.variables.insert(structure.name(id).to_string(), rows);
            }
            Ok(table)
        }
        other => Err(ElicitError::UnsupportedScheme(other.as_str().to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::{MockMode, MockProvider};
    use cptforge_core::bn::{Network, Variable};

    fn truth() -> Network<f64> {
        let s = Structure::new(vec![
            Variable::new("A", ["t", "f"], Vec::<String>::new()),
            Variable::new("B", ["x", "y", "z"], ["A"]),
            Variable::new("C", ["on", "off"], ["A", "B"]),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        cptforge_core::random::random_parameters(&mut rng, "truth", s)
    }

    fn close(a: &PriorTable<f64>, b: &Network<f64>) -> bool {
        let s = b.structure();
        (0..s.len()).all(|id| {
            a.rows(s.name(id))
                .unwrap()
                .iter()
                .zip(&b.cpt(id).rows)
                .all(|(r, t)| r.probs.max_abs_diff(t) < 1e-12)
        })
    }

    #[test]
    fn exact_oracle_reproduces_truth_for_every_scheme() {
        let t = truth();
        let ctx = ContextSet::generic(t.structure());
        let p = MockProvider::oracle(t.clone(), None, 0);
        for scheme in [Scheme::SepState, Scheme::FullDist, Scheme::TokenProb] {
            let cfg = ElicitConfig {
                scheme,
                ..ElicitConfig::default()
            };
            let table = elicit_cpts("t", t.structure(), &ctx, &p, &ResponseCache::in_memory(), &cfg).unwrap();
            assert!(close(&table, &t), "{scheme:?}");
            assert_eq!(table.fallback_rows(), 0);
        }
    }

    #[test]
    fn garbage_falls_back_to_uniform_everywhere() {
        let t = truth();
        let ctx = ContextSet::generic(t.structure());
        let p = MockProvider::new(t.clone(), MockMode::Garbage, 0);
        for scheme in [Scheme::SepState, Scheme::FullDist, Scheme::TokenProb] {
            let cfg = ElicitConfig {
                scheme,
                ..ElicitConfig::default()
            };
            let table = elicit_cpts("t", t.structure(), &ctx, &p, &ResponseCache::in_memory(), &cfg).unwrap();
            assert_eq!(table.fallback_rows(), table.row_total());
            for rows in table.variables.values() {
                for r in rows {
                    let m = r.probs.len();
                    assert!(r.probs.probs().iter().all(|&x| x == 1.0 / m as f64));
                    assert_eq!(r.provenance.retries, 3);
                    assert_eq!(r.provenance.raw.len(), 4);
                }
            }
        }
    }

    #[test]
    fn offline_provider_is_a_transport_error() {
        let t = truth();
        let ctx = ContextSet::generic(t.structure());
        let p = MockProvider::new(t.clone(), MockMode::Offline, 0);
        let r = elicit_cpts(
            "t",
            t.structure(),
            &ctx,
            &p,
            &ResponseCache::in_memory(),
            &ElicitConfig::default(),
        );
        assert!(matches!(r, Err(ElicitError::Transport(_))));
    }

    #[test]
    fn scaling_raw_answers_keeps_normalized_rows() {
        let raw = vec![0.3, 0.1, 0.6];
        let a = normalize_raw(&RawElicitation::new(raw.clone())).unwrap();
        for k in [0.5, 2.0, 100.0] {
            let b = normalize_raw(&RawElicitation::new(raw.iter().map(|x| x * k).collect())).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-15);
        }
    }

    #[test]
    fn baselines() {
        let t = truth();
        let u = baseline_priors(Scheme::Uniform, "u", t.structure(), 0).unwrap();
        assert_eq!(u.row("B", 0).unwrap().probs(), &[1.0 / 3.0; 3]);
        let r = baseline_priors(Scheme::Random, "r", t.structure(), 9).unwrap();
        assert!(r.check_fits(t.structure()).is_ok());
        for row in r.variables.values().flatten() {
            assert!((row.probs.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(r, baseline_priors(Scheme::Random, "r", t.structure(), 9).unwrap());
        assert_ne!(r, baseline_priors(Scheme::Random, "r", t.structure(), 10).unwrap());
        assert!(baseline_priors(Scheme::SepState, "x", t.structure(), 0).is_err());
    }
}
