//! Natural-language descriptions of variables and their states.
//!
//! File form, keyed by variable name:
//!
//! ```json
//! { "Smoking": { "description": "...", "states": { "True": "...", "False": "..." } } }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use cptforge_core::bn::Structure;

use crate::ElicitError;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeContext {
    pub description: String,
    #[serde(default)]
    pub states: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContextSet {
    pub nodes: BTreeMap<String, NodeContext>,
}

impl ContextSet {
    pub fn from_json(text: &str) -> Result<Self, ElicitError> {
        serde_json::from_str(text).map_err(|e| ElicitError::Format(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ElicitError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, variable: &str) -> Option<&NodeContext> {
        self.nodes.get(variable)
    }

    /// Every variable of `structure` has a description and every one of its
    /// states has a glossary entry.
    pub fn check_covers(&self, structure: &Structure) -> Result<(), ElicitError> {
        for v in structure.variables() {
            let ctx = self
                .get(&v.name)
                .ok_or_else(|| ElicitError::MissingContext(v.name.clone()))?;
            if let Some(s) = v.states.iter().find(|s| !ctx.states.contains_key(*s)) {
                return Err(ElicitError::MissingContext(format!("{}={s}", v.name)));
            }
        }
        Ok(())
    }

    /// Placeholder descriptions naming the variable and listing its states.
    pub fn generic(structure: &Structure) -> Self {
        let nodes = structure
            .variables()
            .iter()
            .map(|v| {
                let ctx = NodeContext {
                    description: format!("The variable {} can take the values {}.", v.name, v.states.join(", ")),
                    states: v
                        .states
                        .iter()
                        .map(|s| (s.clone(), format!("{} is {s}", v.name)))
                        .collect(),
                };
                (v.name.clone(), ctx)
            })
            .collect();
        ContextSet { nodes }
    }
}

/// Which name and description a variable is shown under in prompts.
pub type NameMap = BTreeMap<String, String>;

/// Cyclic permutation of `names` (Sattolo's algorithm): a bijection in
/// which no name maps to itself.
pub fn scramble_names(names: &[String], seed: u64) -> Result<NameMap, ElicitError> {
    if names.len() < 2 {
        return Err(ElicitError::TooFewVariables(names.len()));
    }
    let mut sorted = names.to_vec();
    sorted.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..sorted.len()).collect();
    for i in (1..perm.len()).rev() {
        let j = rng.random_range(0..i);
        perm.swap(i, j);
    }
    // `perm` is a single cycle; map each name to the next one along it.
    let mut map = NameMap::new();
    for w in 0..perm.len() {
        let from = perm[w];
        let to = perm[(w + 1) % perm.len()];
        map.insert(sorted[from].clone(), sorted[to].clone());
    }
    Ok(map)
}
