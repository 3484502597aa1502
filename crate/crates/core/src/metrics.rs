//! Divergences and classification scores.
//!
//! KL values are in bits. Both arguments are smoothed before the log:
//! `r~(x) = (r(x) + eps) / sum(r + eps)`, which keeps every value finite.

use std::collections::HashMap;
use std::hash::Hash;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn::{Distribution, Network, NetworkError};
use crate::inference::{joint_table, parent_marginal, InferenceError};
use crate::scalar::Prob;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KlConfig {
    epsilon: f64,
}

impl KlConfig {
    pub fn new(epsilon: f64) -> Result<Self, MetricsError> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(MetricsError::BadEpsilon(epsilon));
        }
        Ok(KlConfig { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Default for KlConfig {
    fn default() -> Self {
        KlConfig { epsilon: 1e-8 }
    }
}

fn smoothed<T: Prob>(r: &[T], eps: f64) -> Vec<f64> {
    let total: f64 = r.iter().map(|v| v.as_f64() + eps).sum();
    r.iter().map(|v| (v.as_f64() + eps) / total).collect()
}

fn kl_slices<T: Prob>(p: &[T], q: &[T], cfg: &KlConfig) -> Result<f64, MetricsError> {
    if p.len() != q.len() {
        return Err(MetricsError::Length(p.len(), q.len()));
    }
    let ps = smoothed(p, cfg.epsilon);
    let qs = smoothed(q, cfg.epsilon);
    Ok(ps.iter().zip(&qs).map(|(a, b)| a * (a / b).log2()).sum())
}

/// Smoothed `KL(p || q)` in bits.
pub fn kl_divergence<T: Prob>(p: &Distribution<T>, q: &Distribution<T>, cfg: &KlConfig) -> Result<f64, MetricsError> {
    kl_slices(p.probs(), q.probs(), cfg)
}

fn row_kls<T: Prob>(p: &Network<T>, q: &Network<T>, cfg: &KlConfig) -> Result<Vec<Vec<f64>>, MetricsError> {
    p.check_same_structure(q)?;
    p.cpts()
        .iter()
        .zip(q.cpts())
        .map(|(a, b)| {
            a.rows
                .iter()
                .zip(&b.rows)
                .map(|(ra, rb)| kl_divergence(ra, rb, cfg))
                .collect()
        })
        .collect()
}

/// KL between the joints of two networks with the same structure, as the
/// sum of row divergences weighted by parent-configuration probabilities
/// under `p`.
pub fn bn_kl<T: Prob>(p: &Network<T>, q: &Network<T>, cfg: &KlConfig) -> Result<f64, MetricsError> {
    let kls = row_kls(p, q, cfg)?;
    let s = p.structure();
    let mut total = 0.0;
    for (id, rows) in kls.iter().enumerate() {
        let weights = parent_marginal(p, s.name(id))?;
        for (w, kl) in weights.probs().iter().zip(rows) {
            total += w.as_f64() * kl;
        }
    }
    Ok(total)
}

/// Unweighted mean of the row divergences.
pub fn cpt_kl<T: Prob>(p: &Network<T>, q: &Network<T>, cfg: &KlConfig) -> Result<f64, MetricsError> {
    let kls = row_kls(p, q, cfg)?;
    let n: usize = kls.iter().map(Vec::len).sum();
    Ok(kls.iter().flatten().sum::<f64>() / n as f64)
}

/// KL over the enumerated joint tables, smoothing the joint vectors.
pub fn brute_joint_kl<T: Prob>(
    p: &Network<T>,
    q: &Network<T>,
    cfg: &KlConfig,
    cap: usize,
) -> Result<f64, MetricsError> {
    p.check_same_structure(q)?;
    let jp = joint_table(p, cap)?;
    let jq = joint_table(q, cap)?;
    kl_slices(jp.values(), jq.values(), cfg)
}

/// Mean per-class F1 over `classes`. Zero denominators give 0.
pub fn macro_f1<L: Eq + Hash>(predictions: &[L], truth: &[L], classes: &[L]) -> Result<f64, MetricsError> {
    if predictions.len() != truth.len() {
        return Err(MetricsError::Length(predictions.len(), truth.len()));
    }
    if predictions.is_empty() || classes.is_empty() {
        return Err(MetricsError::Empty);
    }
    let index: HashMap<&L, usize> = classes.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let k = classes.len();
    let (mut tp, mut fp, mut fneg) = (vec![0u64; k], vec![0u64; k], vec![0u64; k]);
    for (p, t) in predictions.iter().zip(truth) {
        let (pi, ti) = (index.get(p), index.get(t));
        if let (Some(&i), Some(&j)) = (pi, ti) {
            if i == j {
                tp[i] += 1;
                continue;
            }
        }
        if let Some(&i) = pi {
            fp[i] += 1;
        }
        if let Some(&i) = ti {
            fneg[i] += 1;
        }
    }
    let f1 = |i: usize| {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp[i], tp[i] + fp[i]);
        let recall = ratio(tp[i], tp[i] + fneg[i]);
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    };
    Ok((0..k).map(f1).sum::<f64>() / k as f64)
}

/// Boxplot summary; quartiles by linear interpolation between order statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(Summary {
        n: v.len(),
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlRow {
    pub network: String,
    pub method: String,
    pub bn_kl: f64,
    pub cpt_kl: f64,
}

pub fn write_kl_csv<W: Write>(writer: W, rows: &[KlRow]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
