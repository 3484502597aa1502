//! Elicited prior tables with provenance, and their JSON file form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bn::{Distribution, Network, NetworkError, Structure};
use crate::scalar::Prob;

/// How a prior row was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    SepState,
    FullDist,
    TokenProb,
    Uniform,
    Random,
    Truth,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::SepState => "sepstate",
            Scheme::FullDist => "fulldist",
            Scheme::TokenProb => "tokenprob",
            Scheme::Uniform => "uniform",
            Scheme::Random => "random",
            Scheme::Truth => "truth",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sepstate" | "sep-state" => Ok(Scheme::SepState),
            "fulldist" | "full-dist" => Ok(Scheme::FullDist),
            "tokenprob" | "token-prob" => Ok(Scheme::TokenProb),
            "uniform" => Ok(Scheme::Uniform),
            "random" => Ok(Scheme::Random),
            "truth" => Ok(Scheme::Truth),
            other => Err(format!("unknown scheme `{other}`")),
        }
    }
}

/// What the prompt told the model about the variables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextMode {
    #[default]
    Described,
    NoContext,
    Scrambled,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scheme: Option<Scheme>,
    #[serde(default)]
    pub context: ContextMode,
    /// Every raw response received for this row, retries included.
    #[serde(default)]
    pub raw: Vec<String>,
    #[serde(default)]
    pub retries: u32,
    #[serde(default)]
    pub provider: String,
    #[serde(default)]
    pub timestamp: Option<String>,
    /// Set when every attempt failed to parse and the row fell back to uniform.
    #[serde(default)]
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Prob")]
pub struct PriorRow<T> {
    pub probs: Distribution<T>,
    #[serde(flatten)]
    pub provenance: Provenance,
}

/// One prior distribution per CPT row, keyed by variable name, rows in
/// canonical parent-configuration order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Prob")]
pub struct PriorTable<T> {
    pub network: String,
    pub variables: BTreeMap<String, Vec<PriorRow<T>>>,
}

impl<T: Prob> PriorTable<T> {
    pub fn new(network: impl Into<String>) -> Self {
        PriorTable {
            network: network.into(),
            variables: BTreeMap::new(),
        }
    }

    /// Rows copied from a network's CPTs.
    pub fn from_network(net: &Network<T>, scheme: Scheme) -> Self {
        let s = net.structure();
        let mut t = PriorTable::new(net.name());
        for id in 0..s.len() {
            let rows = net
                .cpt(id)
                .rows
                .iter()
                .map(|d| PriorRow {
                    probs: d.clone(),
                    provenance: Provenance {
                        scheme: Some(scheme),
                        ..Provenance::default()
                    },
                })
                .collect();
            t.variables.insert(s.name(id).to_string(), rows);
        }
        t
    }

    pub fn uniform(name: &str, structure: &Structure) -> Self {
        let mut t = PriorTable::new(name);
        for id in 0..structure.len() {
            let rows = (0..structure.row_count(id))
                .map(|_| PriorRow {
                    probs: Distribution::uniform(structure.cardinality(id)),
                    provenance: Provenance {
                        scheme: Some(Scheme::Uniform),
                        ..Provenance::default()
                    },
                })
                .collect();
            t.variables.insert(structure.name(id).to_string(), rows);
        }
        t
    }

    pub fn rows(&self, variable: &str) -> Option<&[PriorRow<T>]> {
        self.variables.get(variable).map(Vec::as_slice)
    }

    pub fn row(&self, variable: &str, row: usize) -> Option<&Distribution<T>> {
        self.variables.get(variable)?.get(row).map(|r| &r.probs)
    }

    /// Checks one row per parent configuration with the right arity.
    pub fn check_fits(&self, structure: &Structure) -> Result<(), NetworkError> {
        for id in 0..structure.len() {
            let name = structure.name(id);
            let rows = self
                .rows(name)
                .ok_or_else(|| NetworkError::StructureMismatch(format!("prior table has no rows for `{name}`")))?;
            if rows.len() != structure.row_count(id) {
                return Err(NetworkError::StructureMismatch(format!(
                    "prior table has {} rows for `{name}`, expected {}",
                    rows.len(),
                    structure.row_count(id)
                )));
            }
            if let Some(r) = rows.iter().position(|r| r.probs.len() != structure.cardinality(id)) {
                return Err(NetworkError::StructureMismatch(format!(
                    "prior row {r} of `{name}` has {} entries, expected {}",
                    rows[r].probs.len(),
                    structure.cardinality(id)
                )));
            }
        }
        Ok(())
    }

    /// The prior-only network.
    pub fn to_network(&self, name: &str, structure: &Structure) -> Result<Network<T>, NetworkError> {
        self.check_fits(structure)?;
        let rows = (0..structure.len())
            .map(|id| {
                self.variables[structure.name(id)]
                    .iter()
                    .map(|r| r.probs.clone())
                    .collect()
            })
            .collect();
        Network::new(name, structure.clone(), rows)
    }

    pub fn row_total(&self) -> usize {
        self.variables.values().map(Vec::len).sum()
    }

    pub fn fallback_rows(&self) -> usize {
        self.variables
            .values()
            .flatten()
            .filter(|r| r.provenance.fallback)
            .count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("prior table serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let t: PriorTable<T> = serde_json::from_str(text).map_err(|e| NetworkError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::Variable;

    #[test]
    fn json_round_trip_and_fit_check() {
        let s = Structure::new(vec![
            Variable::new("A", ["t", "f"], Vec::<String>::new()),
            Variable::new("B", ["x", "y", "z"], ["A"]),
        ])
        .unwrap();
        let mut t: PriorTable<f64> = PriorTable::uniform("n", &s);
        t.variables.get_mut("B").unwrap()[1].provenance = Provenance {
            scheme: Some(Scheme::SepState),
            context: ContextMode::Scrambled,
            raw: vec!["0.2".into(), "garbage".into()],
            retries: 1,
            provider: "mock".into(),
            timestamp: Some("2025-01-01T00:00:00Z".into()),
            fallback: false,
        };
        let text = t.to_json();
        assert!(text.contains("\"scheme\": \"sep-state\""));
        let back = PriorTable::<f64>::from_json(&text).unwrap();
        assert_eq!(back, t);
        assert!(back.check_fits(&s).is_ok());

        t.variables.get_mut("B").unwrap().pop();
        assert!(t.check_fits(&s).is_err());
    }
}
