//! Bayesian-network classifiers: structures, BIC, hill climbing, prediction
//! and train/test splitting.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bn::{Network, NetworkError, Structure, Variable};
use crate::dataset::{count_dataset, Dataset, DatasetError};
use crate::inference::{posterior, Evidence, InferenceError};
use crate::scalar::Prob;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("target `{0}` is not a column")]
    UnknownTarget(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("test fraction must lie in [0, 1], got {0}")]
    BadFraction(f64),
    #[error("column `{0}` has different states in the data and the network")]
    StateMismatch(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

/// A dataset with one designated class column.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub data: Dataset,
    pub target: String,
}

impl LabeledDataset {
    pub fn new(data: Dataset, target: impl Into<String>) -> Result<Self, ClassifyError> {
        let target = target.into();
        if data.column_index(&target).is_none() {
            return Err(ClassifyError::UnknownTarget(target));
        }
        Ok(LabeledDataset { data, target })
    }

    pub fn target_index(&self) -> usize {
        self.data.column_index(&self.target).expect("checked in new")
    }

    pub fn labels(&self) -> Vec<usize> {
        let t = self.target_index();
        self.data.rows().iter().map(|r| r[t]).collect()
    }

    pub fn classes(&self) -> usize {
        self.data.columns()[self.target_index()].states.len()
    }
}

/// Target as the only parent of every other variable.
pub fn naive_bayes_structure(variables: &[Variable], target: &str) -> Result<Structure, ClassifyError> {
    if !variables.iter().any(|v| v.name == target) {
        return Err(ClassifyError::UnknownTarget(target.to_string()));
    }
    let vars = variables
        .iter()
        .map(|v| {
            let parents: Vec<String> = if v.name == target {
                Vec::new()
            } else {
                vec![target.to_string()]
            };
            Variable::new(v.name.clone(), v.states.clone(), parents)
        })
        .collect();
    Ok(Structure::new(vars)?)
}

fn ll_term(counts: &[u64], m: usize) -> f64 {
    let mut ll = 0.0;
    for row in counts.chunks(m) {
        let n: u64 = row.iter().sum();
        if n == 0 {
            continue;
        }
        for &c in row.iter().filter(|&&c| c > 0) {
            ll += c as f64 * (c as f64 / n as f64).ln();
        }
    }
    ll
}

/// Log-likelihood under MLE parameters minus `(k / 2) ln N`, natural log,
/// `k = sum_i (m_i - 1) q_i`.
pub fn bic_score(ds: &Dataset, structure: &Structure) -> Result<f64, ClassifyError> {
    if ds.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    let counts = count_dataset(structure, ds)?;
    let ln_n = (ds.len() as f64).ln();
    let mut score = 0.0;
    for (id, v) in counts.variables.iter().enumerate() {
        let m = structure.cardinality(id);
        let k = (m - 1) * structure.row_count(id);
        score += ll_term(&v.counts, m) - 0.5 * k as f64 * ln_n;
    }
    Ok(score)
}

/// Local BIC terms over the dataset's columns, memoized by family.
struct LocalScores<'a> {
    ds: &'a Dataset,
    cards: Vec<usize>,
    ln_n: f64,
    cache: HashMap<(usize, Vec<usize>), f64>,
}

impl<'a> LocalScores<'a> {
    fn new(ds: &'a Dataset) -> Self {
        LocalScores {
            ds,
            cards: ds.columns().iter().map(|c| c.states.len()).collect(),
            ln_n: (ds.len() as f64).ln(),
            cache: HashMap::new(),
        }
    }

    fn score(&mut self, child: usize, parents: &[usize]) -> f64 {
        let key = (child, parents.to_vec());
        if let Some(&s) = self.cache.get(&key) {
            return s;
        }
        let m = self.cards[child];
        let q: usize = parents.iter().map(|&p| self.cards[p]).product();
        let mut counts = vec![0u64; q * m];
        for row in self.ds.rows() {
            let r = parents.iter().fold(0, |acc, &p| acc * self.cards[p] + row[p]);
            counts[r * m + row[child]] += 1;
        }
        let s = ll_term(&counts, m) - 0.5 * ((m - 1) * q) as f64 * self.ln_n;
        self.cache.insert(key, s);
        s
    }
}

/// True when a directed path `from -> ... -> to` exists.
fn reaches(parents: &[Vec<usize>], from: usize, to: usize) -> bool {
    let mut stack = vec![to];
    let mut seen = vec![false; parents.len()];
    while let Some(v) = stack.pop() {
        if v == from {
            return true;
        }
        if !seen[v] {
            seen[v] = true;
            stack.extend(parents[v].iter().copied());
        }
    }
    false
}

#[derive(Clone, Copy, Debug)]
enum Move {
    Add(usize, usize),
    Delete(usize, usize),
    Reverse(usize, usize),
}

fn with_parent(ps: &[usize], p: usize) -> Vec<usize> {
    let mut v = ps.to_vec();
    v.push(p);
    v.sort_unstable();
    v
}

fn without_parent(ps: &[usize], p: usize) -> Vec<usize> {
    ps.iter().copied().filter(|&x| x != p).collect()
}

/// Greedy single-edge search over add, delete and reverse moves, starting
/// from the empty graph.
///
/// Moves are scanned for every ordered pair `(i, j)` of columns; the best
/// strictly improving move is applied, the first one found on ties. The
/// search is deterministic.
pub fn hill_climb_structure(ds: &Dataset, max_parents: usize) -> Result<Structure, ClassifyError> {
    if ds.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    let n = ds.columns().len();
    let mut local = LocalScores::new(ds);
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    loop {
        let mut best: Option<(f64, Move)> = None;
        let mut consider = |delta: f64, mv: Move| {
            if delta > 1e-10 && best.is_none_or(|(b, _)| delta > b) {
                best = Some((delta, mv));
            }
        };
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if parents[j].contains(&i) {
                    let old_j = local.score(j, &parents[j]);
                    let new_j = local.score(j, &without_parent(&parents[j], i));
                    consider(new_j - old_j, Move::Delete(i, j));

                    if parents[i].len() < max_parents {
                        let mut trial = parents.clone();
                        trial[j] = without_parent(&parents[j], i);
                        if !reaches(&trial, i, j) {
                            let old_i = local.score(i, &parents[i]);
                            let new_i = local.score(i, &with_parent(&parents[i], j));
                            consider(new_j - old_j + new_i - old_i, Move::Reverse(i, j));
                        }
                    }
                } else if !parents[i].contains(&j) && parents[j].len() < max_parents && !reaches(&parents, j, i) {
                    let old_j = local.score(j, &parents[j]);
                    let new_j = local.score(j, &with_parent(&parents[j], i));
                    consider(new_j - old_j, Move::Add(i, j));
                }
            }
        }
        match best {
            None => break,
            Some((_, Move::Add(i, j))) => parents[j] = with_parent(&parents[j], i),
            Some((_, Move::Delete(i, j))) => parents[j] = without_parent(&parents[j], i),
            Some((_, Move::Reverse(i, j))) => {
                parents[j] = without_parent(&parents[j], i);
                parents[i] = with_parent(&parents[i], j);
            }
        }
    }
    let cols = ds.columns();
    let vars = cols
        .iter()
        .zip(&parents)
        .map(|(c, ps)| {
            Variable::new(
                c.name.clone(),
                c.states.clone(),
                ps.iter().map(|&p| cols[p].name.clone()),
            )
        })
        .collect();
    Ok(Structure::new(vars)?)
}

/// Argmax of `p(target | other columns)` per row, first state on ties.
///
/// Columns absent from the network are ignored. A row whose evidence has
/// zero probability under the network gets the argmax of the target's
/// marginal.
pub fn predict<T: Prob>(net: &Network<T>, ds: &Dataset, target: &str) -> Result<Vec<usize>, ClassifyError> {
    let s = net.structure();
    s.id(target)?;
    let mut used = Vec::new();
    for (c, col) in ds.columns().iter().enumerate() {
        if col.name == target {
            continue;
        }
        if let Some(id) = s.index_of(&col.name) {
            if s.variable(id).states != col.states {
                return Err(ClassifyError::StateMismatch(col.name.clone()));
            }
            used.push(c);
        }
    }
    let mut fallback = None;
    let mut memo: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut out = Vec::with_capacity(ds.len());
    for row in ds.rows() {
        let key: Vec<usize> = used.iter().map(|&c| row[c]).collect();
        if let Some(&label) = memo.get(&key) {
            out.push(label);
            continue;
        }
        let mut ev = Evidence::new();
        for &c in &used {
            ev.insert(ds.columns()[c].name.clone(), row[c]);
        }
        let label = match posterior(net, target, &ev) {
            Ok(p) => p.argmax(),
            Err(InferenceError::ImpossibleEvidence) => match fallback {
                Some(l) => l,
                None => {
                    let l = posterior(net, target, &Evidence::new())?.argmax();
                    fallback = Some(l);
                    l
                }
            },
            Err(e) => return Err(e.into()),
        };
        memo.insert(key, label);
        out.push(label);
    }
    Ok(out)
}

/// Per-class shuffle, `round(n_c * test_fraction)` rows of each class to
/// test. Both halves keep the original row order.
pub fn stratified_split(
    ds: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), ClassifyError> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(ClassifyError::BadFraction(test_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = ds.labels();
    let mut test = Vec::new();
    for class in 0..ds.classes() {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let k = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..k]);
    }
    test.sort_unstable();
    let mut is_test = vec![false; labels.len()];
    for &i in &test {
        is_test[i] = true;
    }
    let train: Vec<usize> = (0..labels.len()).filter(|&i| !is_test[i]).collect();
    Ok((ds.data.select(&train), ds.data.select(&test)))
}

/// `k` rows drawn without replacement, original order kept.
pub fn subsample_train(ds: &Dataset, k: usize, seed: u64) -> Dataset {
    if k >= ds.len() {
        return ds.clone();
    }
    ds.select(&subsample_indices(ds.len(), k, seed))
}

/// Sorted indices of the rows [`subsample_train`] keeps for the same
/// arguments.
pub fn subsample_indices(n: usize, k: usize, seed: u64) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}
