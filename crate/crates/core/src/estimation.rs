//! Parameter estimation: normalization of elicited values, maximum
//! likelihood, and pseudocount fusion of priors with counts (EDP).
//!
//! EDP treats a prior row `q` as `alpha * q` virtual observations:
//!
//! ```text
//! p_i = (alpha * q_i + c_i) / (alpha + sum_j c_j)
//! ```

use thiserror::Error;

use crate::bn::{Distribution, Network, NetworkError, Structure};
use crate::dataset::CountTable;
use crate::prior::PriorTable;
use crate::scalar::Prob;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("degenerate elicitation: every value is zero")]
    Degenerate,
    #[error("elicited value {0} is negative or not finite")]
    BadValue(f64),
    #[error("alpha must be finite and non-negative, got {0}")]
    BadAlpha(f64),
    #[error("alpha and total count are both zero")]
    Undefined,
    #[error("prior has {prior} entries, counts have {counts}")]
    Arity { prior: usize, counts: usize },
    #[error("need at least two states, got {0}")]
    TooFewStates(usize),
    #[error("neither a prior nor counts were given")]
    NothingToEstimate,
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Unnormalized per-state values returned by an elicitation.
#[derive(Clone, Debug, PartialEq)]
pub struct RawElicitation<T> {
    pub values: Vec<T>,
}

impl<T: Prob> RawElicitation<T> {
    pub fn new(values: Vec<T>) -> Self {
        RawElicitation { values }
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }
}

/// Divides each value by the total, keeping the proportions.
pub fn normalize_raw<T: Prob>(raw: &RawElicitation<T>) -> Result<Distribution<T>, EstimationError> {
    if let Some(v) = raw.values.iter().find(|v| !v.is_finite() || **v < T::zero()) {
        return Err(EstimationError::BadValue(v.as_f64()));
    }
    let total = raw.sum();
    if total.is_nan() || total <= T::zero() {
        return Err(EstimationError::Degenerate);
    }
    Ok(Distribution::from_normalized(
        raw.values.iter().map(|&v| v / total).collect(),
    ))
}

/// Relative frequencies, or `fallback` when there are no observations.
pub fn mle_from_counts<T: Prob>(counts: &[u64], fallback: &Distribution<T>) -> Distribution<T> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return fallback.clone();
    }
    let n = T::from_count(total);
    Distribution::from_normalized(counts.iter().map(|&c| T::from_count(c) / n).collect())
}

pub fn uniform_prior<T: Prob>(m: usize) -> Result<Distribution<T>, EstimationError> {
    if m < 2 {
        return Err(EstimationError::TooFewStates(m));
    }
    Ok(Distribution::uniform(m))
}

/// Pseudocount mass given to the prior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdpConfig<T> {
    alpha: T,
}

impl<T: Prob> EdpConfig<T> {
    pub fn new(alpha: T) -> Result<Self, EstimationError> {
        if !alpha.is_finite() || alpha < T::zero() {
            return Err(EstimationError::BadAlpha(alpha.as_f64()));
        }
        Ok(EdpConfig { alpha })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
}

/// Fuses a prior row with observed counts.
///
/// With no counts the prior comes back unchanged; with `alpha == 0` the
/// result is the maximum likelihood estimate, bit for bit.
pub fn edp_fuse<T: Prob>(
    q: &Distribution<T>,
    counts: &[u64],
    cfg: &EdpConfig<T>,
) -> Result<Distribution<T>, EstimationError> {
    if q.len() != counts.len() {
        return Err(EstimationError::Arity {
            prior: q.len(),
            counts: counts.len(),
        });
    }
    let total: u64 = counts.iter().sum();
    let alpha = cfg.alpha;
    if total == 0 {
        if alpha == T::zero() {
            return Err(EstimationError::Undefined);
        }
        return Ok(q.clone());
    }
    if alpha == T::zero() {
        return Ok(mle_from_counts(counts, q));
    }
    let denom = alpha + T::from_count(total);
    Ok(Distribution::from_normalized(
        q.probs()
            .iter()
            .zip(counts)
            .map(|(&qi, &ci)| (alpha * qi + T::from_count(ci)) / denom)
            .collect(),
    ))
}

/// Where CPT rows take their prior from.
#[derive(Clone, Copy, Debug)]
pub enum Prior<'a, T> {
    None,
    Uniform,
    Table(&'a PriorTable<T>),
}

/// Fills every CPT row of `structure`.
///
/// * prior only: the prior row;
/// * counts only: MLE with a uniform fallback for unseen configurations;
/// * both: [`edp_fuse`]; with `alpha == 0` this is the MLE, including its
///   uniform fallback on unseen configurations.
pub fn parameterize<T: Prob>(
    name: &str,
    structure: &Structure,
    prior: Prior<'_, T>,
    counts: Option<&CountTable>,
    cfg: &EdpConfig<T>,
) -> Result<Network<T>, EstimationError> {
    if let Prior::Table(t) = prior {
        t.check_fits(structure)?;
    }
    if let Some(c) = counts {
        if !c.fits(structure) {
            return Err(NetworkError::StructureMismatch("count table does not match the structure".into()).into());
        }
    }
    let mut rows = Vec::with_capacity(structure.len());
    for id in 0..structure.len() {
        let m = structure.cardinality(id);
        let uniform = Distribution::uniform(m);
        let mut var_rows = Vec::with_capacity(structure.row_count(id));
        for r in 0..structure.row_count(id) {
            let q = match prior {
                Prior::None => None,
                Prior::Uniform => Some(&uniform),
                Prior::Table(t) => t.row(structure.name(id), r),
            };
            let row = match (q, counts) {
                (None, None) => return Err(EstimationError::NothingToEstimate),
                (None, Some(c)) => mle_from_counts(c.row(id, r), &uniform),
                (Some(q), None) => q.clone(),
                (Some(_), Some(c)) if cfg.alpha == T::zero() => mle_from_counts(c.row(id, r), &uniform),
                (Some(q), Some(c)) => edp_fuse(q, c.row(id, r), cfg)?,
            };
            var_rows.push(row);
        }
        rows.push(var_rows);
    }
    Ok(Network::new(name, structure.clone(), rows)?)
}

/// Data regime for choosing alpha in classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Full,
    Low,
}

/// Alpha for a training set of `n_train` rows.
///
/// Full data: `0.5 * N`. Low data: the candidate among `0.5N, N, 2N` with
/// the best dev-set score from `evaluate`, smaller alpha on ties.
pub fn select_alpha<T: Prob>(n_train: usize, regime: Regime, mut evaluate: impl FnMut(T) -> f64) -> T {
    let n = T::from_usize(n_train).expect("count fits");
    let half = T::lit(0.5) * n;
    match regime {
        Regime::Full => half,
        Regime::Low => {
            let mut best = (half, evaluate(half));
            for alpha in [n, T::lit(2.0) * n] {
                let score = evaluate(alpha);
                if score > best.1 {
                    best = (alpha, score);
                }
            }
            best.0
        }
    }
}

/// Alpha inversely proportional to the sample size: `scale / n`.
pub fn inverse_size_alpha(n: usize, scale: f64) -> f64 {
    if n == 0 {
        scale
    } else {
        scale / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::Variable;
    use crate::dataset::CountTable;
    use crate::metrics::{kl_divergence, KlConfig};
    use crate::random::dirichlet;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d(v: &[f64]) -> Distribution<f64> {
        Distribution::new(v.to_vec()).unwrap()
    }

    fn cfg(alpha: f64) -> EdpConfig<f64> {
        EdpConfig::new(alpha).unwrap()
    }

    /// Posterior mean of Dirichlet(alpha * q + c).
    fn dirichlet_posterior_mean(q: &[f64], c: &[u64], alpha: f64) -> Vec<f64> {
        let pseudo: Vec<f64> = q.iter().zip(c).map(|(qi, &ci)| alpha * qi + ci as f64).collect();
        let total: f64 = pseudo.iter().sum();
        pseudo.iter().map(|p| p / total).collect()
    }

    #[test]
    fn normalize_examples() {
        let n = |v: &[f64]| normalize_raw(&RawElicitation::new(v.to_vec())).unwrap();
        assert_eq!(n(&[0.75, 0.25]).probs(), &[0.75, 0.25]);
        let p = n(&[70.0, 20.0, 10.0]);
        for (a, b) in p.probs().iter().zip([0.7, 0.2, 0.1]) {
            assert!((a - b).abs() < 1e-15);
        }
        let p = n(&[0.75, 0.20]);
        assert!((p[0] - 0.789474).abs() < 5e-7);
        assert!((p[1] - 0.210526).abs() < 5e-7);
        assert!(matches!(
            normalize_raw(&RawElicitation::new(vec![0.0, 0.0])),
            Err(EstimationError::Degenerate)
        ));
        assert!(matches!(
            normalize_raw(&RawElicitation::new(vec![-1.0, 2.0])),
            Err(EstimationError::BadValue(_))
        ));
    }

    #[test]
    fn mle_examples() {
        let u: Distribution<f64> = Distribution::uniform(2);
        assert_eq!(mle_from_counts(&[2, 6], &u).probs(), &[0.25, 0.75]);
        assert_eq!(mle_from_counts(&[0, 0], &u).probs(), &[0.5, 0.5]);
        let u3: Distribution<f64> = Distribution::uniform(3);
        assert_eq!(mle_from_counts(&[1, 0, 3], &u3).probs(), &[0.25, 0.0, 0.75]);
    }

    #[test]
    fn edp_examples() {
        let q = d(&[0.75, 0.25]);
        assert_eq!(edp_fuse(&q, &[0, 0], &cfg(2.0)).unwrap(), q);
        let p = edp_fuse(&q, &[1, 3], &cfg(2.0)).unwrap();
        let oracle = dirichlet_posterior_mean(&[0.75, 0.25], &[1, 3], 2.0);
        assert!((p[0] - 0.416667).abs() < 5e-7);
        assert!((p[1] - 0.583333).abs() < 5e-7);
        for (a, b) in p.probs().iter().zip(oracle) {
            assert!((a - b).abs() < 1e-15);
        }
        let u = Distribution::uniform(2);
        assert_eq!(edp_fuse(&q, &[2, 6], &cfg(0.0)).unwrap(), mle_from_counts(&[2, 6], &u));
        assert!(matches!(
            edp_fuse(&q, &[0, 0], &cfg(0.0)),
            Err(EstimationError::Undefined)
        ));
        assert!(matches!(
            edp_fuse(&q, &[1, 1, 1], &cfg(1.0)),
            Err(EstimationError::Arity { .. })
        ));
        assert!(EdpConfig::new(-1.0).is_err());
    }

    #[test]
    fn uniform_prior_examples() {
        assert_eq!(uniform_prior::<f64>(2).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(uniform_prior::<f64>(4).unwrap().probs(), &[0.25; 4]);
        assert_eq!(uniform_prior::<f64>(3).unwrap().probs(), &[1.0 / 3.0; 3]);
        assert!(uniform_prior::<f64>(1).is_err());
    }

    fn two_node() -> Structure {
        Structure::new(vec![
            Variable::new("A", ["t", "f"], Vec::<String>::new()),
            Variable::new("B", ["t", "f"], ["A"]),
        ])
        .unwrap()
    }

    #[test]
    fn parameterize_cases() {
        let s = two_node();
        let truth = Network::new(
            "truth",
            s.clone(),
            vec![vec![d(&[0.3, 0.7])], vec![d(&[0.9, 0.1]), d(&[0.2, 0.8])]],
        )
        .unwrap();
        let table = PriorTable::from_network(&truth, crate::prior::Scheme::Truth);

        let prior_only = parameterize("p", &s, Prior::Table(&table), None, &cfg(3.0)).unwrap();
        assert_eq!(prior_only.cpts(), truth.cpts());

        let zero = CountTable::zeros(&s);
        let uni = parameterize("u", &s, Prior::Uniform, Some(&zero), &cfg(3.0)).unwrap();
        assert!(uni.cpts().iter().flat_map(|c| &c.rows).all(|r| r.probs() == [0.5, 0.5]));

        let mut counts = CountTable::zeros(&s);
        counts.add(0, 0, 0, 2);
        counts.add(0, 0, 1, 2);
        counts.add(1, 0, 0, 1);
        counts.add(1, 0, 1, 1);
        counts.add(1, 1, 1, 2);
        let fused = parameterize("f", &s, Prior::Table(&table), Some(&counts), &cfg(3.0)).unwrap();
        let want = [
            dirichlet_posterior_mean(&[0.3, 0.7], &[2, 2], 3.0),
            dirichlet_posterior_mean(&[0.9, 0.1], &[1, 1], 3.0),
            dirichlet_posterior_mean(&[0.2, 0.8], &[0, 2], 3.0),
        ];
        let got = [fused.row(0, 0), fused.row(1, 0), fused.row(1, 1)];
        for (g, w) in got.iter().zip(&want) {
            for (a, b) in g.probs().iter().zip(w) {
                assert!((a - b).abs() < 1e-15);
            }
        }

        let mle = parameterize("m", &s, Prior::None, Some(&counts), &cfg(0.0)).unwrap();
        assert_eq!(mle.row(1, 1).probs(), &[0.0, 1.0]);
        assert!(matches!(
            parameterize::<f64>("x", &s, Prior::None, None, &cfg(1.0)),
            Err(EstimationError::NothingToEstimate)
        ));

        let mut short = table.clone();
        short.variables.get_mut("B").unwrap().pop();
        assert!(parameterize("x", &s, Prior::Table(&short), None, &cfg(1.0)).is_err());
    }

    #[test]
    fn alpha_selection() {
        assert_eq!(select_alpha::<f64>(100, Regime::Full, |_| unreachable!()), 50.0);
        let scores = |a: f64| match a as u64 {
            10 => 0.6,
            20 => 0.7,
            40 => 0.7,
            _ => unreachable!(),
        };
        assert_eq!(select_alpha(20, Regime::Low, scores), 20.0);
        let scores = |a: f64| if a == 5.0 { 0.9 } else { 0.1 };
        assert_eq!(select_alpha(10, Regime::Low, scores), 5.0);
        assert_eq!(inverse_size_alpha(4, 100.0), 25.0);
    }

    #[test]
    fn uniform_beats_random_prior_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let kl = KlConfig::default();
        for m in [2usize, 3, 5] {
            let (mut to_uniform, mut to_random) = (0.0, 0.0);
            for _ in 0..1000 {
                let target = d(&dirichlet(&mut rng, &vec![1.0; m]));
                let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
                let random = normalize_raw(&RawElicitation::new(raw)).unwrap();
                to_uniform += kl_divergence(&target, &Distribution::uniform(m), &kl).unwrap();
                to_random += kl_divergence(&target, &random, &kl).unwrap();
            }
            assert!(to_uniform < to_random, "m={m}");
        }
    }

    fn row_and_counts() -> impl Strategy<Value = (Vec<f64>, Vec<u64>)> {
        (2usize..6).prop_flat_map(|m| {
            (
                proptest::collection::vec(0.01f64..1.0, m),
                proptest::collection::vec(0u64..50, m),
            )
        })
    }

    proptest! {
        #[test]
        fn fused_rows_are_distributions_between_prior_and_data(
            (raw, counts) in row_and_counts(),
            alpha in 0.0f64..100.0,
        ) {
            let q = normalize_raw(&RawElicitation::new(raw)).unwrap();
            let total: u64 = counts.iter().sum();
            prop_assume!(alpha > 0.0 || total > 0);
            let p = edp_fuse(&q, &counts, &cfg(alpha)).unwrap();
            let s: f64 = p.probs().iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            if total > 0 {
                for i in 0..q.len() {
                    let f = counts[i] as f64 / total as f64;
                    let (lo, hi) = (q[i].min(f), q[i].max(f));
                    prop_assert!(p[i] >= lo - 1e-12 && p[i] <= hi + 1e-12);
                }
            } else {
                prop_assert_eq!(&p, &q);
            }
        }

        #[test]
        fn large_counts_converge_to_frequencies(
            (raw, weights) in row_and_counts(),
            alpha in 0.0f64..50.0,
        ) {
            prop_assume!(weights.iter().sum::<u64>() > 0);
            let q = normalize_raw(&RawElicitation::new(raw)).unwrap();
            let wsum: u64 = weights.iter().sum();
            let mut counts: Vec<u64> = weights.iter().map(|w| w * 100_000 / wsum).collect();
            let short = 100_000 - counts.iter().sum::<u64>();
            counts[0] += short;
            let p = edp_fuse(&q, &counts, &cfg(alpha)).unwrap();
            for i in 0..q.len() {
                let f = counts[i] as f64 / 100_000.0;
                prop_assert!((p[i] - f).abs() <= alpha / (alpha + 1e5) + 1e-9);
            }
        }
    }
}
