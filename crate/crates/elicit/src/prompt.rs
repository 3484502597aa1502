//! Prompt templates.
//!
//! Every prompt has three blocks separated by blank lines: the variable
//! descriptions (the queried variable first, then its parents in CPT
//! order), the question for one parent configuration, and the answer
//! instruction. The wording is frozen; golden copies live under
//! `tests/fixtures`.

use cptforge_core::bn::{ParentConfig, Structure};
use cptforge_core::prior::ContextMode;

use crate::context::{ContextSet, NameMap};
use crate::ElicitError;

/// How variables are presented to the model.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum PromptStyle {
    #[default]
    Described,
    /// Names and state labels only.
    NoContext,
    /// Every variable is shown under another variable's name and
    /// description.
    Scrambled(NameMap),
}

impl PromptStyle {
    pub fn mode(&self) -> ContextMode {
        match self {
            PromptStyle::Described => ContextMode::Described,
            PromptStyle::NoContext => ContextMode::NoContext,
            PromptStyle::Scrambled(_) => ContextMode::Scrambled,
        }
    }

    fn shown<'a>(&'a self, name: &'a str) -> &'a str {
        match self {
            PromptStyle::Scrambled(map) => map.get(name).map(String::as_str).unwrap_or(name),
            _ => name,
        }
    }
}

const HEADER: &str = "You are given the following variables of a Bayesian network.";
const SEPSTATE_INSTRUCTION: &str = "Explain your reasoning step by step, then give your final answer on the last line as a single probability between 0 and 1.";
const TOKEN_INSTRUCTION: &str = "Answer with the state name alone and nothing else.";

struct Query<'a> {
    structure: &'a Structure,
    var: usize,
    config: &'a ParentConfig,
    contexts: &'a ContextSet,
    style: &'a PromptStyle,
}

impl<'a> Query<'a> {
    fn new(
        structure: &'a Structure,
        var: &str,
        config: &'a ParentConfig,
        contexts: &'a ContextSet,
        style: &'a PromptStyle,
    ) -> Result<Self, ElicitError> {
        let var = structure.id(var)?;
        let parents = structure.parents(var);
        if config.assignments().len() != parents.len()
            || parents
                .iter()
                .zip(config.assignments())
                .any(|(&p, (name, state))| structure.name(p) != name || *state >= structure.cardinality(p))
        {
            return Err(ElicitError::BadConfig(structure.name(var).to_string()));
        }
        Ok(Query {
            structure,
            var,
            config,
            contexts,
            style,
        })
    }

    fn name(&self, id: usize) -> &str {
        self.style.shown(self.structure.name(id))
    }

    fn state(&self, id: usize, s: usize) -> &str {
        &self.structure.variable(id).states[s]
    }

    fn describe(&self, id: usize) -> Result<String, ElicitError> {
        let v = self.structure.variable(id);
        let shown = self.name(id);
        match self.style {
            PromptStyle::NoContext => Ok(format!("- {shown}: States: {}.", v.states.join(", "))),
            PromptStyle::Scrambled(_) => {
                let ctx = self
                    .contexts
                    .get(shown)
                    .ok_or_else(|| ElicitError::MissingContext(shown.to_string()))?;
                Ok(format!(
                    "- {shown}: {} States: {}.",
                    ctx.description.trim(),
                    v.states.join(", ")
                ))
            }
            PromptStyle::Described => {
                let ctx = self
                    .contexts
                    .get(&v.name)
                    .ok_or_else(|| ElicitError::MissingContext(v.name.clone()))?;
                let mut glossary = Vec::with_capacity(v.states.len());
                for s in &v.states {
                    let d = ctx
                        .states
                        .get(s)
                        .ok_or_else(|| ElicitError::MissingContext(format!("{}={s}", v.name)))?;
                    glossary.push(format!("{s} ({})", d.trim()));
                }
                Ok(format!(
                    "- {shown}: {} States: {}.",
                    ctx.description.trim(),
                    glossary.join("; ")
                ))
            }
        }
    }

    fn descriptions(&self) -> Result<String, ElicitError> {
        let mut lines = vec![HEADER.to_string(), self.describe(self.var)?];
        for &p in self.structure.parents(self.var) {
            lines.push(self.describe(p)?);
        }
        Ok(lines.join("\n"))
    }

    /// `" given that P1 is a and P2 is b"`, empty for roots.
    fn condition(&self) -> String {
        let parents = self.structure.parents(self.var);
        if parents.is_empty() {
            return String::new();
        }
        let parts: Vec<String> = parents
            .iter()
            .zip(self.config.assignments())
            .map(|(&p, (_, s))| format!("{} is {}", self.name(p), self.state(p, *s)))
            .collect();
        format!(" given that {}", parts.join(" and "))
    }

    fn states(&self) -> String {
        self.structure.variable(self.var).states.join(", ")
    }
}

fn assemble(blocks: [String; 3]) -> String {
    blocks.join("\n\n")
}

/// One question per state: the probability that `var` takes `state`.
pub fn build_sepstate_prompt(
    structure: &Structure,
    var: &str,
    config: &ParentConfig,
    state: usize,
    contexts: &ContextSet,
    style: &PromptStyle,
) -> Result<String, ElicitError> {
    let q = Query::new(structure, var, config, contexts, style)?;
    if state >= structure.cardinality(q.var) {
        return Err(ElicitError::BadConfig(format!("{var} state {state}")));
    }
    let question = format!(
        "Question: What is the probability that {} is {}{}?",
        q.name(q.var),
        q.state(q.var, state),
        q.condition()
    );
    Ok(assemble([
        q.descriptions()?,
        question,
        SEPSTATE_INSTRUCTION.to_string(),
    ]))
}

/// The whole row as one tuple in declared state order.
pub fn build_fulldist_prompt(
    structure: &Structure,
    var: &str,
    config: &ParentConfig,
    contexts: &ContextSet,
    style: &PromptStyle,
) -> Result<String, ElicitError> {
    let q = Query::new(structure, var, config, contexts, style)?;
    let question = format!(
        "Question: What is the probability distribution of {}{}?\nGive the probabilities in this state order: {}.",
        q.name(q.var),
        q.condition(),
        q.states()
    );
    let instruction = format!(
        "Explain your reasoning step by step, then end your answer with the distribution as a tuple of {} numbers in the order above, for example (0.70, 0.20, 0.10).",
        structure.cardinality(q.var)
    );
    Ok(assemble([q.descriptions()?, question, instruction]))
}

/// Asks for the single most likely state name; the distribution comes from
/// the provider's token scores.
pub fn build_tokenprob_prompt(
    structure: &Structure,
    var: &str,
    config: &ParentConfig,
    contexts: &ContextSet,
    style: &PromptStyle,
) -> Result<String, ElicitError> {
    let q = Query::new(structure, var, config, contexts, style)?;
    let question = format!(
        "Question: Which state of {} is the most probable{}? Possible states: {}.",
        q.name(q.var),
        q.condition(),
        q.states()
    );
    Ok(assemble([q.descriptions()?, question, TOKEN_INSTRUCTION.to_string()]))
}

/// Reminder appended to a prompt whose answer could not be parsed.
pub fn retry_suffix(kind: RetryKind<'_>, attempt: u32) -> String {
    let body = match kind {
        RetryKind::Probability => {
            "Your previous reply did not end with a probability. End your answer with a single number between 0 and 1.".to_string()
        }
        RetryKind::Tuple(m) => format!(
            "Your previous reply did not contain a tuple of {m} numbers. End your answer with a tuple such as (0.70, 0.20, 0.10)."
        ),
        RetryKind::StateName(states) => {
            format!("Reply with exactly one of: {}.", states.join(", "))
        }
    };
    format!("\n\n{body} (retry {attempt})")
}

#[derive(Clone, Copy, Debug)]
pub enum RetryKind<'a> {
    Probability,
    Tuple(usize),
    StateName(&'a [String]),
}

#[cfg(test)]
mod tests {
    use super::*;
    use cptforge_core::bn::Variable;

    fn fixture() -> (Structure, ContextSet) {
        let s = Structure::new(vec![
            Variable::new("Smoking", ["True", "False"], Vec::<String>::new()),
            Variable::new("Lung Cancer", ["True", "False"], ["Smoking"]),
        ])
        .unwrap();
        (s.clone(), ContextSet::generic(&s))
    }

    #[test]
    fn root_has_no_condition() {
        let (s, c) = fixture();
        let p = build_sepstate_prompt(&s, "Smoking", &ParentConfig::default(), 0, &c, &PromptStyle::Described).unwrap();
        assert!(p.contains("Question: What is the probability that Smoking is True?"));
        assert!(!p.contains("given that"));
    }

    #[test]
    fn conditioned_question_and_determinism() {
        let (s, c) = fixture();
        let pc = s.parent_config(1, 1);
        let a = build_sepstate_prompt(&s, "Lung Cancer", &pc, 0, &c, &PromptStyle::Described).unwrap();
        let b = build_sepstate_prompt(&s, "Lung Cancer", &pc, 0, &c, &PromptStyle::Described).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("What is the probability that Lung Cancer is True given that Smoking is False?"));
        assert_eq!(a.split("\n\n").count(), 3);
    }

    #[test]
    fn no_context_prompt_has_no_description_text() {
        let (s, _) = fixture();
        let c = ContextSet::from_json(
            r#"{"Smoking": {"description": "Whether the patient smokes tobacco.",
                            "states": {"True": "a current smoker", "False": "never smoked"}},
                "Lung Cancer": {"description": "Diagnosis of lung cancer.",
                                "states": {"True": "cancer present", "False": "cancer absent"}}}"#,
        )
        .unwrap();
        let pc = s.parent_config(1, 0);
        for p in [
            build_sepstate_prompt(&s, "Lung Cancer", &pc, 1, &c, &PromptStyle::NoContext).unwrap(),
            build_fulldist_prompt(&s, "Lung Cancer", &pc, &c, &PromptStyle::NoContext).unwrap(),
            build_tokenprob_prompt(&s, "Lung Cancer", &pc, &c, &PromptStyle::NoContext).unwrap(),
        ] {
            for ctx in c.nodes.values() {
                assert!(!p.contains(ctx.description.as_str()));
                for d in ctx.states.values() {
                    assert!(!p.contains(d.as_str()));
                }
            }
        }
    }

    #[test]
    fn scrambled_prompt_uses_other_names() {
        let (s, c) = fixture();
        let map = crate::context::scramble_names(&["Smoking".into(), "Lung Cancer".into()], 1).unwrap();
        let pc = s.parent_config(1, 0);
        let p = build_fulldist_prompt(&s, "Lung Cancer", &pc, &c, &PromptStyle::Scrambled(map)).unwrap();
        assert!(p.contains("What is the probability distribution of Smoking given that Lung Cancer is True?"));
    }

    #[test]
    fn mismatched_config_is_rejected() {
        let (s, c) = fixture();
        let bad = ParentConfig::new(vec![("Smoking".into(), 5)]);
        assert!(build_fulldist_prompt(&s, "Lung Cancer", &bad, &c, &PromptStyle::Described).is_err());
        assert!(build_fulldist_prompt(&s, "Nope", &bad, &c, &PromptStyle::Described).is_err());
        let empty = ContextSet::default();
        let pc = s.parent_config(1, 0);
        assert!(matches!(
            build_fulldist_prompt(&s, "Lung Cancer", &pc, &empty, &PromptStyle::Described),
            Err(ElicitError::MissingContext(_))
        ));
    }
}
