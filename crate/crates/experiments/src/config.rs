//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cptforge_core::estimation::inverse_size_alpha;
use cptforge_core::prior::Scheme;
use cptforge_elicit::HttpConfig;

use crate::ExperimentError;

/// One parameterization method of the scheme comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SepState,
    FullDist,
    TokenProb,
    Uniform,
    Random,
    /// The configured prior scheme with names and descriptions permuted.
    Scrambled,
    /// The configured prior scheme with names and state labels only.
    NoContext,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::SepState,
        Method::FullDist,
        Method::TokenProb,
        Method::Uniform,
        Method::Random,
        Method::Scrambled,
        Method::NoContext,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::SepState => "sep-state",
            Method::FullDist => "full-dist",
            Method::TokenProb => "token-prob",
            Method::Uniform => "uniform",
            Method::Random => "random",
            Method::Scrambled => "scrambled",
            Method::NoContext => "no-context",
        }
    }
}

/// Pseudocount mass for a sweep point with `n` samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlphaPolicy {
    Fixed {
        value: f64,
    },
    /// `scale / n`.
    InverseSize {
        scale: f64,
    },
}

impl AlphaPolicy {
    pub fn alpha(&self, n: usize) -> f64 {
        match *self {
            AlphaPolicy::Fixed { value } => value,
            AlphaPolicy::InverseSize { scale } => inverse_size_alpha(n, scale),
        }
    }
}

impl Default for AlphaPolicy {
    fn default() -> Self {
        AlphaPolicy::InverseSize {
            scale: DEFAULT_ALPHA_SCALE,
        }
    }
}

/// Scale of the default inverse-size alpha policy.
pub const DEFAULT_ALPHA_SCALE: f64 = 150.0;

/// How sweep data is drawn for a sample size `n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// `n` complete rows by ancestral sampling.
    #[default]
    Forward,
    /// `n` draws from every CPT row.
    PerRow,
    /// `n * m` draws from every CPT row of an `m`-state variable.
    PerRowScaled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProviderConfig {
    /// Simulated model answering from the ground truth; `kappa` is the
    /// Dirichlet concentration of its noise, absent for exact answers.
    Mock {
        #[serde(default)]
        kappa: Option<f64>,
    },
    Http(HttpConfig),
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig::Mock { kappa: Some(50.0) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElicitationSettings {
    pub temperature: f64,
    pub max_retries: u32,
    pub workers: usize,
    pub rate_limit: Option<f64>,
    /// JSON Lines response cache; in memory when absent.
    pub cache: Option<PathBuf>,
}

impl Default for ElicitationSettings {
    fn default() -> Self {
        ElicitationSettings {
            temperature: 0.1,
            max_retries: 3,
            workers: 4,
            rate_limit: None,
            cache: None,
        }
    }
}

/// Ground-truth networks drawn at random for each experiment seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomNetworks {
    pub count: usize,
    pub min_variables: usize,
    pub max_variables: usize,
    pub min_states: usize,
    pub max_states: usize,
    pub max_parents: usize,
}

impl Default for RandomNetworks {
    fn default() -> Self {
        RandomNetworks {
            count: 30,
            min_variables: 5,
            max_variables: 10,
            min_states: 2,
            max_states: 4,
            max_parents: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    /// CSV with a header row; states are inferred per column.
    pub path: PathBuf,
    pub target: String,
    /// Network the mock provider answers from.
    #[serde(default)]
    pub truth: Option<PathBuf>,
    /// Node contexts for described prompts.
    #[serde(default)]
    pub contexts: Option<PathBuf>,
}

/// Data generated from a random naive Bayes network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticNb {
    pub name: String,
    pub features: usize,
    pub feature_states: usize,
    pub classes: usize,
    pub rows: usize,
}

impl Default for SyntheticNb {
    fn default() -> Self {
        SyntheticNb {
            name: "synthetic-nb".into(),
            features: 6,
            feature_states: 2,
            classes: 2,
            rows: 500,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureKind {
    HillClimb,
    NaiveBayes,
}

impl StructureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StructureKind::HillClimb => "hill-climb",
            StructureKind::NaiveBayes => "naive-bayes",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassificationConfig {
    pub datasets: Vec<DatasetSpec>,
    pub synthetic: Option<SyntheticNb>,
    pub structures: Vec<StructureKind>,
    /// Training-set sizes of the low-data regimes.
    pub low_sizes: Vec<usize>,
    /// Repetitions per low-data regime.
    pub runs: usize,
    pub test_fraction: f64,
    pub max_parents: usize,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        ClassificationConfig {
            datasets: Vec::new(),
            synthetic: None,
            structures: vec![StructureKind::HillClimb, StructureKind::NaiveBayes],
            low_sizes: vec![20, 10],
            runs: 5,
            test_fraction: 0.2,
            max_parents: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Ground-truth networks, native JSON or BIF by extension.
    pub networks: Vec<PathBuf>,
    pub random_networks: Option<RandomNetworks>,
    /// Directory of `<network name>.json` context files. Networks without
    /// one get generic descriptions built from their names.
    pub contexts_dir: Option<PathBuf>,
    pub methods: Vec<Method>,
    /// Scheme for the sweep and classification priors and for the
    /// scrambled and no-context baselines.
    pub prior_scheme: Scheme,
    pub provider: ProviderConfig,
    pub elicitation: ElicitationSettings,
    pub sample_sizes: Vec<usize>,
    pub alpha: AlphaPolicy,
    pub sampling: SamplingMode,
    pub seeds: Vec<u64>,
    /// Networks processed in parallel.
    pub workers: usize,
    pub epsilon: f64,
    pub out_dir: PathBuf,
    pub classification: ClassificationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            networks: Vec::new(),
            random_networks: None,
            contexts_dir: None,
            methods: Method::ALL.to_vec(),
            prior_scheme: Scheme::SepState,
            provider: ProviderConfig::default(),
            elicitation: ElicitationSettings::default(),
            sample_sizes: vec![3, 10, 30, 100, 1000, 10000],
            alpha: AlphaPolicy::default(),
            sampling: SamplingMode::Forward,
            seeds: vec![0],
            workers: 4,
            epsilon: 1e-8,
            out_dir: PathBuf::from("out"),
            classification: ClassificationConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Makes relative paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.networks.iter_mut().for_each(fix);
        self.contexts_dir.as_mut().map(fix);
        self.elicitation.cache.as_mut().map(fix);
        fix(&mut self.out_dir);
        for d in &mut self.classification.datasets {
            fix(&mut d.path);
            d.truth.as_mut().map(fix);
            d.contexts.as_mut().map(fix);
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty");
        }
        if self.sample_sizes.contains(&0) {
            return bad("sample sizes must be positive");
        }
        if !matches!(
            self.prior_scheme,
            Scheme::SepState | Scheme::FullDist | Scheme::TokenProb
        ) {
            return bad("prior_scheme must be sep-state, full-dist or token-prob");
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        match self.alpha {
            AlphaPolicy::Fixed { value } | AlphaPolicy::InverseSize { scale: value }
                if !value.is_finite() || value < 0.0 =>
            {
                return bad("alpha must be finite and non-negative");
            }
            _ => {}
        }
        if let ProviderConfig::Mock { kappa: Some(k) } = self.provider {
            if k.is_nan() || k <= 0.0 {
                return bad("mock kappa must be positive");
            }
        }
        if let Some(r) = &self.random_networks {
            if r.min_variables == 0
                || r.min_variables > r.max_variables
                || r.min_states < 2
                || r.min_states > r.max_states
            {
                return bad("random_networks ranges are empty");
            }
        }
        let c = &self.classification;
        if !(0.0..1.0).contains(&c.test_fraction) {
            return bad("test_fraction must lie in [0, 1)");
        }
        if c.low_sizes.contains(&0) || c.runs == 0 {
            return bad("low_sizes and runs must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg.sample_sizes, vec![3, 10, 30, 100, 1000, 10000]);
        assert_eq!(cfg.methods.len(), 7);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn parses_a_full_config() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            seeds = [1, 2]
            sample_sizes = [3, 10]
            methods = ["sep-state", "uniform", "no-context"]
            prior_scheme = "full-dist"
            sampling = "per-row-scaled"
            alpha = { kind = "fixed", value = 10.0 }
            provider = { kind = "http", model = "gpt-4o-mini", api_key_env = "MY_KEY" }
            [random_networks]
            count = 3
            [classification]
            low_sizes = [10]
            [classification.synthetic]
            rows = 200
            "#,
        )
        .unwrap();
        assert_eq!(cfg.alpha.alpha(7), 10.0);
        assert_eq!(cfg.sampling, SamplingMode::PerRowScaled);
        assert_eq!(cfg.methods[2], Method::NoContext);
        assert_eq!(cfg.random_networks.unwrap().count, 3);
        match cfg.provider {
            ProviderConfig::Http(h) => {
                assert_eq!(h.model, "gpt-4o-mini");
                assert_eq!(h.top_logprobs, 20);
            }
            p => panic!("{p:?}"),
        }
        assert_eq!(cfg.classification.synthetic.unwrap().features, 6);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "seeds = []",
            "sample_sizes = [0, 3]",
            "prior_scheme = \"uniform\"",
            "alpha = { kind = \"fixed\", value = -1.0 }",
            "provider = { kind = \"mock\", kappa = 0.0 }",
            "unknown_key = 1",
            "[classification]\ntest_fraction = 1.5",
        ] {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn method_labels_round_trip() {
        for m in Method::ALL {
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
            assert_eq!(serde_json::from_str::<Method>(&json).unwrap(), m);
        }
        assert_eq!(AlphaPolicy::InverseSize { scale: 100.0 }.alpha(4), 25.0);
    }
}
