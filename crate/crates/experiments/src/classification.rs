//! Classification with elicited priors: prior-only, MLE and EDP networks on
//! hill-climbed and naive Bayes structures, with full and low-data
//! training regimes.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use cptforge_core::bn::{Network, Structure, Variable};
use cptforge_core::classify::{
    hill_climb_structure, naive_bayes_structure, predict, stratified_split, subsample_indices, LabeledDataset,
};
use cptforge_core::dataset::{count_dataset, Dataset};
use cptforge_core::estimation::{parameterize, select_alpha, EdpConfig, Prior, Regime};
use cptforge_core::metrics::macro_f1;
use cptforge_core::prior::PriorTable;
use cptforge_core::random::random_parameters;
use cptforge_core::sampling::{derive_seed, forward_sample};
use cptforge_elicit::{ContextSet, PromptStyle};

use crate::config::{ExperimentConfig, StructureKind, SyntheticNb};
use crate::report::write_csv;
use crate::setup::{make_provider, open_cache, Elicitor};
use crate::{tags, ExperimentError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassMethod {
    /// Elicited parameters with no data.
    PriorOnly,
    Mle,
    Edp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub dataset: String,
    pub structure: StructureKind,
    /// `full` or `low-<k>`.
    pub regime: String,
    pub method: ClassMethod,
    /// Mean over runs.
    pub macro_f1: f64,
    /// Sample standard deviation over runs, 0 for a single run.
    pub std: f64,
    pub runs: usize,
}

/// A dataset with the pieces needed to elicit priors for it.
pub struct Task {
    pub name: String,
    pub data: LabeledDataset,
    /// What the mock provider answers from.
    pub truth: Option<Network<f64>>,
    pub contexts: Option<ContextSet>,
}

/// Naive Bayes ground truth (`Class` with children `F1..Fk`, Dirichlet(1)
/// rows) and `spec.rows` rows sampled from it.
pub fn synthetic_nb(spec: &SyntheticNb, seed: u64) -> Result<(Network<f64>, LabeledDataset), ExperimentError> {
    let base = derive_seed(seed, &[tags::SYNTHETIC]);
    let mut vars = vec![Variable::new(
        "Class",
        (0..spec.classes).map(|c| format!("c{c}")),
        Vec::<String>::new(),
    )];
    for f in 1..=spec.features {
        vars.push(Variable::new(
            format!("F{f}"),
            (0..spec.feature_states).map(|s| format!("v{s}")),
            ["Class"],
        ));
    }
    let structure = Structure::new(vars)?;
    let net = random_parameters(&mut ChaCha8Rng::seed_from_u64(base), &spec.name, structure);
    let ds = forward_sample(&net, spec.rows, derive_seed(base, &[1]));
    Ok((net, LabeledDataset::new(ds, "Class")?))
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Macro-F1 of `net`'s argmax-posterior predictions on `ds`.
pub fn score(net: &Network<f64>, ds: &Dataset, target: &str) -> Result<f64, ExperimentError> {
    let labeled = LabeledDataset::new(ds.clone(), target)?;
    let preds = predict(net, ds, target)?;
    let classes: Vec<usize> = (0..labeled.classes()).collect();
    Ok(macro_f1(&preds, &labeled.labels(), &classes)?)
}

fn fit(
    structure: &Structure,
    prior: Prior<'_, f64>,
    data: &Dataset,
    alpha: f64,
) -> Result<Network<f64>, ExperimentError> {
    let counts = count_dataset(structure, data)?;
    Ok(parameterize(
        "fit",
        structure,
        prior,
        Some(&counts),
        &EdpConfig::new(alpha)?,
    )?)
}

/// Evaluates one task under every configured structure and regime.
pub fn classify_task(
    cfg: &ExperimentConfig,
    task: &Task,
    seed: u64,
    elicitor: &Elicitor<'_>,
) -> Result<Vec<ClassRow>, ExperimentError> {
    let c = &cfg.classification;
    let target = task.data.target.clone();
    let (train, test) = stratified_split(&task.data, c.test_fraction, derive_seed(seed, &[tags::SPLIT]))?;
    let mut rows = Vec::new();
    for &kind in &c.structures {
        let structure = match kind {
            StructureKind::HillClimb => hill_climb_structure(&train, c.max_parents)?,
            StructureKind::NaiveBayes => naive_bayes_structure(&train.variables(), &target)?,
        };
        let contexts = task.contexts.clone().unwrap_or_else(|| ContextSet::generic(&structure));
        let prior: PriorTable<f64> = elicitor.prior(
            &task.name,
            &structure,
            &contexts,
            cfg.prior_scheme,
            PromptStyle::Described,
        )?;
        let prior_net = parameterize("prior", &structure, Prior::Table(&prior), None, &EdpConfig::new(0.0)?)?;
        let prior_f1 = score(&prior_net, &test, &target)?;
        let row = |regime: &str, method, f1s: &[f64]| {
            let (m, s) = mean_std(f1s);
            ClassRow {
                dataset: task.name.clone(),
                structure: kind,
                regime: regime.to_string(),
                method,
                macro_f1: m,
                std: s,
                runs: f1s.len(),
            }
        };

        let alpha = select_alpha(train.len(), Regime::Full, |_| 0.0);
        let mle = score(&fit(&structure, Prior::None, &train, 0.0)?, &test, &target)?;
        let edp = score(&fit(&structure, Prior::Table(&prior), &train, alpha)?, &test, &target)?;
        rows.push(row("full", ClassMethod::PriorOnly, &[prior_f1]));
        rows.push(row("full", ClassMethod::Mle, &[mle]));
        rows.push(row("full", ClassMethod::Edp, &[edp]));

        for &k in &c.low_sizes {
            let (mut mles, mut edps) = (Vec::new(), Vec::new());
            for r in 0..c.runs {
                let keep = subsample_indices(train.len(), k, derive_seed(seed, &[tags::RUN, k as u64, r as u64]));
                let sub = train.select(&keep);
                let rest: Vec<usize> = (0..train.len()).filter(|i| keep.binary_search(i).is_err()).collect();
                let dev = train.select(&rest);
                let mut failure = None;
                let alpha = select_alpha(sub.len(), Regime::Low, |a| {
                    if dev.is_empty() {
                        return 0.0;
                    }
                    match fit(&structure, Prior::Table(&prior), &sub, a).and_then(|n| score(&n, &dev, &target)) {
                        Ok(f) => f,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NEG_INFINITY
                        }
                    }
                });
                if let Some(e) = failure {
                    return Err(e);
                }
                mles.push(score(&fit(&structure, Prior::None, &sub, 0.0)?, &test, &target)?);
                edps.push(score(
                    &fit(&structure, Prior::Table(&prior), &sub, alpha)?,
                    &test,
                    &target,
                )?);
            }
            let regime = format!("low-{k}");
            rows.push(row(&regime, ClassMethod::PriorOnly, &[prior_f1]));
            rows.push(row(&regime, ClassMethod::Mle, &mles));
            rows.push(row(&regime, ClassMethod::Edp, &edps));
        }
    }
    Ok(rows)
}

fn load_task(spec: &crate::config::DatasetSpec) -> Result<Task, ExperimentError> {
    let data = Dataset::read_csv_infer(std::fs::File::open(&spec.path)?)?;
    let truth = spec.truth.as_ref().map(Network::load).transpose()?;
    if let Some(t) = &truth {
        for col in data.variables() {
            let id = t.structure().id(&col.name)?;
            if t.structure().variable(id).states != col.states {
                return Err(ExperimentError::Config(format!(
                    "{}: column `{}` states {:?} differ from the truth network's {:?}",
                    spec.name,
                    col.name,
                    col.states,
                    t.structure().variable(id).states
                )));
            }
        }
    }
    let contexts = spec.contexts.as_ref().map(ContextSet::load).transpose()?;
    Ok(Task {
        name: spec.name.clone(),
        data: LabeledDataset::new(data, spec.target.clone())?,
        truth,
        contexts,
    })
}

/// Configured CSV datasets followed by the synthetic one, evaluated with
/// the first experiment seed.
pub fn run_classification(cfg: &ExperimentConfig) -> Result<Vec<ClassRow>, ExperimentError> {
    cfg.validate()?;
    let seed = cfg.seeds[0];
    let cache = open_cache(cfg)?;
    let mut tasks = Vec::new();
    for spec in &cfg.classification.datasets {
        tasks.push(load_task(spec)?);
    }
    if let Some(spec) = &cfg.classification.synthetic {
        let (net, data) = synthetic_nb(spec, seed)?;
        tasks.push(Task {
            name: spec.name.clone(),
            data,
            truth: Some(net),
            contexts: None,
        });
    }
    if tasks.is_empty() {
        return Err(ExperimentError::Config("no classification datasets configured".into()));
    }
    let mut rows = Vec::new();
    for (i, task) in tasks.iter().enumerate() {
        let provider = make_provider(cfg, task.truth.as_ref(), derive_seed(seed, &[tags::MOCK, i as u64]))?;
        let elicitor = Elicitor {
            cfg,
            provider: provider.as_ref(),
            cache: &cache,
        };
        rows.extend(classify_task(cfg, task, seed, &elicitor)?);
    }
    Ok(rows)
}

pub fn write_classification_report(dir: &Path, rows: &[ClassRow]) -> Result<(), ExperimentError> {
    write_csv(&dir.join("classification.csv"), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProviderConfig;

    fn cfg(kappa: Option<f64>) -> ExperimentConfig {
        let mut c = ExperimentConfig {
            provider: ProviderConfig::Mock { kappa },
            seeds: vec![3],
            ..ExperimentConfig::default()
        };
        c.classification.synthetic = Some(SyntheticNb {
            rows: 200,
            features: 4,
            ..SyntheticNb::default()
        });
        c.classification.runs = 3;
        c
    }

    #[test]
    fn synthetic_data_is_reproducible() {
        let (a, da) = synthetic_nb(&SyntheticNb::default(), 1).unwrap();
        let (b, db) = synthetic_nb(&SyntheticNb::default(), 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(da, db);
        assert_eq!(da.data.len(), 500);
        assert_eq!(da.data.columns().len(), 7);
    }

    #[test]
    fn report_has_every_cell_and_is_deterministic() {
        let c = cfg(Some(50.0));
        let rows = run_classification(&c).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 3);
        assert_eq!(rows, run_classification(&c).unwrap());
        for r in &rows {
            assert!((0.0..=1.0).contains(&r.macro_f1));
            let expect = if r.regime == "full" || r.method == ClassMethod::PriorOnly {
                1
            } else {
                3
            };
            assert_eq!(r.runs, expect);
        }
    }

    #[test]
    fn exact_prior_on_naive_bayes_matches_the_truth() {
        let spec = SyntheticNb::default();
        let (truth, data) = synthetic_nb(&spec, 9).unwrap();
        let mut c = cfg(None);
        c.classification.structures = vec![StructureKind::NaiveBayes];
        let cache = cptforge_elicit::ResponseCache::in_memory();
        let provider = make_provider(&c, Some(&truth), 0).unwrap();
        let e = Elicitor {
            cfg: &c,
            provider: provider.as_ref(),
            cache: &cache,
        };
        let task = Task {
            name: "nb".into(),
            data: data.clone(),
            truth: Some(truth.clone()),
            contexts: None,
        };
        let rows = classify_task(&c, &task, 9, &e).unwrap();
        let (_, test) = stratified_split(&data, 0.2, derive_seed(9, &[tags::SPLIT])).unwrap();
        let bayes = score(&truth, &test, "Class").unwrap();
        let prior_only = rows.iter().find(|r| r.method == ClassMethod::PriorOnly).unwrap();
        assert_eq!(prior_only.macro_f1, bayes);
    }

    #[test]
    fn mean_and_sample_std() {
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
