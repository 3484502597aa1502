//! Eliciting conditional probability tables from language models.
//!
//! [`elicit_cpts`] walks every CPT row of a structure, builds a prompt per
//! row (or per state), asks a [`Provider`] through a [`ResponseCache`], and
//! parses the replies into a [`PriorTable`](cptforge_core::prior::PriorTable).

pub mod cache;
pub mod context;
pub mod mock;
pub mod parse;
pub mod pipeline;
pub mod prompt;
pub mod provider;

use thiserror::Error;

pub use cache::{cache_key, CacheRecord, ResponseCache};
pub use context::{scramble_names, ContextSet, NameMap, NodeContext};
pub use mock::{MockMode, MockProvider};
pub use parse::{parse_distribution, parse_probability, token_scores_to_distribution};
pub use pipeline::{baseline_priors, elicit_cpts, ElicitConfig};
pub use prompt::{build_fulldist_prompt, build_sepstate_prompt, build_tokenprob_prompt, PromptStyle};
pub use provider::{HttpConfig, HttpProvider, Provider, ProviderRequest, ProviderResponse};

#[derive(Debug, Error)]
pub enum ElicitError {
    #[error("could not parse reply: {0}")]
    Parse(String),
    #[error("no numeric tuple in reply")]
    NoTuple,
    #[error("expected a tuple of {expected} numbers, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("degenerate elicitation: no state received any probability")]
    Degenerate,
    #[error("no context for `{0}`")]
    MissingContext(String),
    #[error("parent configuration does not fit `{0}`")]
    BadConfig(String),
    #[error("need at least two variables to scramble, got {0}")]
    TooFewVariables(usize),
    #[error("environment variable `{0}` with the API key is not set")]
    MissingApiKey(String),
    #[error("provider transport failure: {0}")]
    Transport(String),
    #[error("scheme `{0}` is not elicited from a model")]
    UnsupportedScheme(String),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Network(#[from] cptforge_core::bn::NetworkError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
