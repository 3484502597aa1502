use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use cptforge_core::bn::Network;
use cptforge_core::prior::Scheme;
use cptforge_core::random::random_network;
use cptforge_elicit::{
    elicit_cpts, parse_distribution, parse_probability, ContextSet, ElicitConfig, ElicitError, MockMode, MockProvider,
    Provider, ProviderRequest, ProviderResponse, ResponseCache,
};

#[derive(Deserialize)]
struct Case {
    kind: String,
    text: String,
    #[serde(default)]
    m: usize,
    expect: Option<Vec<f64>>,
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn truth(seed: u64) -> Network<f64> {
    random_network(&mut ChaCha8Rng::seed_from_u64(seed), "net", 5..=6, 2..=3, 2)
}

/// Forwards to an inner provider and counts calls; optionally refuses them.
struct Counting<P> {
    inner: P,
    calls: AtomicUsize,
    refuse: bool,
}

impl<P: Provider> Provider for Counting<P> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn complete(&self, req: &ProviderRequest) -> Result<ProviderResponse, ElicitError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if self.refuse {
            return Err(ElicitError::Transport("replay must not reach the provider".into()));
        }
        self.inner.complete(req)
    }
}

#[test]
fn response_fixtures_parse_as_expected() {
    let cases: Vec<Case> =
        serde_json::from_str(&std::fs::read_to_string(fixtures().join("responses.json")).unwrap()).unwrap();
    assert!(cases.len() >= 20);
    for c in &cases {
        let got = match c.kind.as_str() {
            "probability" => parse_probability(&c.text).map(|p| vec![p]),
            "distribution" => parse_distribution(&c.text, c.m).map(|r| r.values),
            k => panic!("unknown kind {k}"),
        };
        match (&c.expect, got) {
            (Some(want), Ok(got)) => {
                assert_eq!(want.len(), got.len(), "{}", c.text);
                for (w, g) in want.iter().zip(&got) {
                    assert!((w - g).abs() < 1e-12, "{}: {got:?}", c.text);
                }
            }
            (None, Err(_)) => {}
            (want, got) => panic!("{}: expected {want:?}, got {got:?}", c.text),
        }
    }
}

#[test]
fn full_cache_replay_is_byte_identical() {
    let t = truth(11);
    let ctx = ContextSet::generic(t.structure());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.jsonl");
    for scheme in [Scheme::SepState, Scheme::FullDist, Scheme::TokenProb] {
        let cfg = ElicitConfig {
            scheme,
            workers: 3,
            ..ElicitConfig::default()
        };
        let live = Counting {
            inner: MockProvider::oracle(t.clone(), Some(20.0), 5),
            calls: AtomicUsize::new(0),
            refuse: false,
        };
        let first = elicit_cpts(
            "net",
            t.structure(),
            &ctx,
            &live,
            &ResponseCache::open(&path).unwrap(),
            &cfg,
        )
        .unwrap()
        .to_json();
        assert!(live.calls.load(Ordering::SeqCst) > 0);
        let replay = Counting {
            inner: MockProvider::oracle(t.clone(), Some(20.0), 5),
            calls: AtomicUsize::new(0),
            refuse: true,
        };
        let second = elicit_cpts(
            "net",
            t.structure(),
            &ctx,
            &replay,
            &ResponseCache::open(&path).unwrap(),
            &cfg,
        )
        .unwrap()
        .to_json();
        assert_eq!(replay.calls.load(Ordering::SeqCst), 0);
        assert_eq!(first, second, "{scheme:?}");
    }
}

#[test]
fn garbage_provider_yields_uniform_fallback_rows() {
    let t = truth(12);
    let ctx = ContextSet::generic(t.structure());
    let p = MockProvider::new(t.clone(), MockMode::Garbage, 0);
    let table = elicit_cpts(
        "net",
        t.structure(),
        &ctx,
        &p,
        &ResponseCache::in_memory(),
        &ElicitConfig::default(),
    )
    .unwrap();
    assert_eq!(table.fallback_rows(), table.row_total());
    for row in table.variables.values().flatten() {
        let m = row.probs.len() as f64;
        assert!(row.probs.probs().iter().all(|&p| p == 1.0 / m));
        assert!(row.provenance.fallback);
    }
}

#[test]
fn missing_context_is_an_error_for_described_prompts() {
    let t = truth(13);
    let mut ctx = ContextSet::generic(t.structure());
    let first = t.structure().name(0).to_string();
    ctx.nodes.remove(&first);
    let p = MockProvider::oracle(t.clone(), None, 0);
    let r = elicit_cpts(
        "net",
        t.structure(),
        &ctx,
        &p,
        &ResponseCache::in_memory(),
        &ElicitConfig::default(),
    );
    assert!(matches!(r, Err(ElicitError::MissingContext(_))));
}
