//! Deterministic stand-in for a language model, answering from a known
//! network.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use cptforge_core::bn::{Distribution, Network};
use cptforge_core::inference::{posterior, Evidence, InferenceError};
use cptforge_core::random::dirichlet;
use cptforge_core::sampling::derive_seed;

use crate::provider::{Answer, Provider, ProviderRequest, ProviderResponse, RowQuery};
use crate::ElicitError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MockMode {
    /// Answers from `Dirichlet(kappa * true_row)`, one draw per row; `None`
    /// answers with the true row itself.
    Oracle { kappa: Option<f64> },
    /// Replies that never contain a usable answer.
    Garbage,
    /// Every call fails as a transport error.
    Offline,
}

pub struct MockProvider {
    truth: Network<f64>,
    /// Digest of the serialized truth, so cache entries never cross networks.
    fingerprint: String,
    mode: MockMode,
    seed: u64,
    rows: Mutex<HashMap<RowKey, Vec<f64>>>,
}

type RowKey = (String, Vec<(String, usize)>, bool);

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

impl MockProvider {
    pub fn new(truth: Network<f64>, mode: MockMode, seed: u64) -> Self {
        let digest = Sha256::digest(cptforge_core::bn::serialize_native(&truth).as_bytes());
        MockProvider {
            fingerprint: hex::encode(&digest[..8]),
            truth,
            mode,
            seed,
            rows: Mutex::new(HashMap::new()),
        }
    }

    pub fn oracle(truth: Network<f64>, kappa: Option<f64>, seed: u64) -> Self {
        Self::new(truth, MockMode::Oracle { kappa }, seed)
    }

    fn row_seed(&self, q: &RowQuery, salt: u64) -> u64 {
        let mut tags = vec![fnv1a(&q.variable), salt];
        for (name, s) in &q.parents {
            tags.push(fnv1a(name));
            tags.push(*s as u64);
        }
        derive_seed(self.seed, &tags)
    }

    /// `p(variable | parents)` under the truth, by lookup when the parent
    /// sets agree and by inference otherwise. Zero-probability
    /// configurations give the uniform row.
    fn true_row(&self, q: &RowQuery) -> Result<Distribution<f64>, ElicitError> {
        let s = self.truth.structure();
        let id = s.id(&q.variable)?;
        let same = s.parents(id).len() == q.parents.len()
            && s.parents(id).iter().zip(&q.parents).all(|(&p, (n, _))| s.name(p) == n);
        if same {
            let full: Vec<usize> = {
                let mut a = vec![0; s.len()];
                for (n, st) in &q.parents {
                    a[s.id(n)?] = *st;
                }
                a
            };
            return Ok(self.truth.row(id, s.row_index(id, &full)).clone());
        }
        let mut ev = Evidence::new();
        for (n, st) in &q.parents {
            ev.insert(n.clone(), *st);
        }
        match posterior(&self.truth, &q.variable, &ev) {
            Ok(d) => Ok(d),
            Err(InferenceError::ImpossibleEvidence) => Ok(Distribution::uniform(s.cardinality(id))),
            Err(e) => Err(ElicitError::Format(e.to_string())),
        }
    }

    fn answer_row(&self, q: &RowQuery) -> Result<Vec<f64>, ElicitError> {
        let key = (q.variable.clone(), q.parents.clone(), q.informed);
        if let Some(r) = self.rows.lock().expect("mock lock").get(&key) {
            return Ok(r.clone());
        }
        let row = if q.informed {
            let truth = self.true_row(q)?;
            match self.mode {
                MockMode::Oracle { kappa: Some(k) } => {
                    let alpha: Vec<f64> = truth.probs().iter().map(|p| k * p).collect();
                    dirichlet(&mut ChaCha8Rng::seed_from_u64(self.row_seed(q, 0)), &alpha)
                }
                _ => truth.into_vec(),
            }
        } else {
            // Without the real names the mock knows nothing about the row.
            let m = self
                .truth
                .structure()
                .variable(self.truth.structure().id(&q.variable)?)
                .cardinality();
            let mut rng = ChaCha8Rng::seed_from_u64(self.row_seed(q, 1));
            (0..m).map(|_| rng.random::<f64>()).collect()
        };
        self.rows.lock().expect("mock lock").insert(key, row.clone());
        Ok(row)
    }
}

impl Provider for MockProvider {
    fn id(&self) -> String {
        match self.mode {
            MockMode::Oracle { kappa: Some(k) } => format!("mock:oracle:{}:k{k}:s{}", self.fingerprint, self.seed),
            MockMode::Oracle { kappa: None } => format!("mock:oracle:{}:exact", self.fingerprint),
            MockMode::Garbage => "mock:garbage".into(),
            MockMode::Offline => "mock:offline".into(),
        }
    }

    fn complete(&self, req: &ProviderRequest) -> Result<ProviderResponse, ElicitError> {
        match self.mode {
            MockMode::Offline => return Err(ElicitError::Transport("mock provider is offline".into())),
            MockMode::Garbage => {
                return Ok(ProviderResponse {
                    text: "I am not able to give a number for that.".into(),
                    token_scores: Some(vec![("Maybe".into(), 0.9)]),
                })
            }
            MockMode::Oracle { .. } => {}
        }
        let q = req
            .query
            .as_ref()
            .ok_or_else(|| ElicitError::Format("mock provider needs row metadata".into()))?;
        let row = self.answer_row(q)?;
        let states = &self
            .truth
            .structure()
            .variable(self.truth.structure().id(&q.variable)?)
            .states;
        Ok(match q.want {
            Answer::Probability => {
                let p = row[q.state.unwrap_or(0)];
                ProviderResponse {
                    text: format!("Considering the parents, my final answer is {p}"),
                    token_scores: None,
                }
            }
            Answer::Tuple => {
                let parts: Vec<String> = row.iter().map(|p| p.to_string()).collect();
                ProviderResponse {
                    text: format!("The distribution is ({})", parts.join(", ")),
                    token_scores: None,
                }
            }
            Answer::StateName => {
                let total: f64 = row.iter().sum();
                let mut scores: Vec<(String, f64)> = states
                    .iter()
                    .zip(&row)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(s, p)| (s.clone(), p / total))
                    .collect();
                scores.sort_by(|a, b| b.1.total_cmp(&a.1));
                scores.truncate(20);
                ProviderResponse {
                    text: scores.first().map(|s| s.0.clone()).unwrap_or_default(),
                    token_scores: Some(scores),
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cptforge_core::bn::{Structure, Variable};

    fn truth() -> Network<f64> {
        let s = Structure::new(vec![
            Variable::new("A", ["t", "f"], Vec::<String>::new()),
            Variable::new("B", ["x", "y", "z"], ["A"]),
        ])
        .unwrap();
        let d = |v: &[f64]| Distribution::new(v.to_vec()).unwrap();
        Network::new(
            "t",
            s,
            vec![vec![d(&[0.3, 0.7])], vec![d(&[0.2, 0.5, 0.3]), d(&[0.6, 0.3, 0.1])]],
        )
        .unwrap()
    }

    fn request(want: Answer, parents: Vec<(String, usize)>, state: Option<usize>) -> ProviderRequest {
        let mut r = ProviderRequest::new("prompt", 0.1).unwrap();
        r.query = Some(RowQuery {
            variable: "B".into(),
            parents,
            state,
            want,
            informed: true,
        });
        r
    }

    #[test]
    fn exact_oracle_answers_truth() {
        let m = MockProvider::oracle(truth(), None, 0);
        let r = m
            .complete(&request(Answer::Tuple, vec![("A".into(), 1)], None))
            .unwrap();
        let got = crate::parse::parse_distribution(&r.text, 3).unwrap().values;
        for (g, t) in got.iter().zip([0.6, 0.3, 0.1]) {
            assert!((g - t).abs() < 1e-12);
        }
        let r = m
            .complete(&request(Answer::Probability, vec![("A".into(), 0)], Some(1)))
            .unwrap();
        assert!(r.text.ends_with("0.5"));
        // Root-level question about B: marginal by inference.
        let r = m.complete(&request(Answer::StateName, vec![], None)).unwrap();
        let scores = r.token_scores.unwrap();
        assert_eq!(r.text, "x");
        assert!((scores[0].1 - (0.3 * 0.2 + 0.7 * 0.6)).abs() < 1e-12);
    }

    #[test]
    fn noisy_oracle_is_centered_on_truth() {
        let mut mean = [0.0; 3];
        for seed in 0..1000 {
            let m = MockProvider::oracle(truth(), Some(50.0), seed);
            let r = m
                .complete(&request(Answer::Tuple, vec![("A".into(), 0)], None))
                .unwrap();
            let raw = crate::parse::parse_distribution(&r.text, 3).unwrap().values;
            for i in 0..3 {
                mean[i] += raw[i] / 1000.0;
            }
        }
        for (m, t) in mean.iter().zip([0.2, 0.5, 0.3]) {
            assert!((m - t).abs() < 0.05, "{m} vs {t}");
        }
    }

    #[test]
    fn noisy_oracle_is_deterministic_per_seed() {
        let a = MockProvider::oracle(truth(), Some(50.0), 7);
        let b = MockProvider::oracle(truth(), Some(50.0), 7);
        let req = request(Answer::Tuple, vec![("A".into(), 0)], None);
        assert_eq!(a.complete(&req).unwrap(), b.complete(&req).unwrap());
        assert_eq!(a.complete(&req).unwrap(), a.complete(&req).unwrap());
    }

    #[test]
    fn garbage_and_offline() {
        let g = MockProvider::new(truth(), MockMode::Garbage, 0);
        let r = g.complete(&request(Answer::Probability, vec![], Some(0))).unwrap();
        assert!(crate::parse::parse_probability(&r.text).is_err());
        let o = MockProvider::new(truth(), MockMode::Offline, 0);
        assert!(o.complete(&request(Answer::Tuple, vec![], None)).is_err());
    }
}
