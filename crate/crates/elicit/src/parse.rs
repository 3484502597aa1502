//! Reading numbers out of free-text model replies.

use std::sync::LazyLock;

use regex::Regex;

use cptforge_core::bn::Distribution;
use cptforge_core::estimation::{normalize_raw, EstimationError, RawElicitation};

use crate::ElicitError;

const NUMBER: &str = r"[-+]?(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][-+]?\d+)?";

static NUMERAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(&format!(r"({NUMBER})\s*(%)?")).unwrap());

static BRACKETED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[(\[]([^()\[\]]*)[)\]]").unwrap());

static BARE_LIST: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"{NUMBER}\s*%?(?:\s*[,;]\s*{NUMBER}\s*%?)+")).unwrap());

/// The last number in `text` as a probability.
///
/// `N%` reads as `N / 100`. A bare number in `[0, 1]` is taken as is and one
/// in `(1, 100]` is read as a percentage.
pub fn parse_probability(text: &str) -> Result<f64, ElicitError> {
    let caps = NUMERAL
        .captures_iter(text)
        .last()
        .ok_or_else(|| ElicitError::Parse("no number in reply".into()))?;
    let value: f64 = caps[1]
        .parse()
        .map_err(|_| ElicitError::Parse(format!("bad number `{}`", &caps[1])))?;
    let percent = caps.get(2).is_some();
    let p = if percent || value > 1.0 { value / 100.0 } else { value };
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(ElicitError::Parse(format!("`{}` is not a probability", caps[0].trim())));
    }
    Ok(p)
}

fn numbers(list: &str) -> Option<Vec<f64>> {
    let mut out = Vec::new();
    for item in list.split([',', ';']) {
        let item = item.trim().trim_end_matches('%').trim_end();
        if item.is_empty() {
            return None;
        }
        out.push(item.parse::<f64>().ok()?);
    }
    Some(out)
}

/// The last numeric tuple of arity `m`: parenthesized or bracketed first,
/// then bare comma-separated lists. Values are returned unnormalized.
pub fn parse_distribution(text: &str, m: usize) -> Result<RawElicitation<f64>, ElicitError> {
    if m < 2 {
        return Err(ElicitError::Parse(format!("arity {m} is below 2")));
    }
    let mut tuples: Vec<Vec<f64>> = BRACKETED
        .captures_iter(text)
        .filter_map(|c| numbers(&c[1]))
        .filter(|v| v.len() >= 2)
        .collect();
    if tuples.is_empty() {
        tuples = BARE_LIST
            .find_iter(text)
            .filter_map(|mt| numbers(mt.as_str()))
            .collect();
    }
    if tuples.is_empty() {
        return Err(ElicitError::NoTuple);
    }
    let values = tuples.iter().rev().find(|t| t.len() == m).ok_or(ElicitError::Arity {
        expected: m,
        found: tuples.last().map_or(0, Vec::len),
    })?;
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(ElicitError::Parse("negative entry in tuple".into()));
    }
    Ok(RawElicitation::new(values.clone()))
}

/// States matched by trimmed, case-insensitive label equality against the
/// candidate strings; candidates for the same state add up and unmatched
/// states get zero before renormalization.
pub fn token_scores_to_distribution(
    scores: &[(String, f64)],
    states: &[String],
) -> Result<Distribution<f64>, ElicitError> {
    let mut raw = vec![0.0; states.len()];
    for (candidate, p) in scores {
        if !(0.0..=1.0).contains(p) {
            return Err(ElicitError::Parse(format!("token score {p} outside [0, 1]")));
        }
        let c = candidate.trim();
        if let Some(i) = states.iter().position(|s| s.trim().eq_ignore_ascii_case(c)) {
            raw[i] += p;
        }
    }
    normalize_raw(&RawElicitation::new(raw)).map_err(|e| match e {
        EstimationError::Degenerate => ElicitError::Degenerate,
        other => ElicitError::Parse(other.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_examples() {
        assert_eq!(parse_probability("...I estimate the probability is 0.2").unwrap(), 0.2);
        assert_eq!(parse_probability("roughly 20%").unwrap(), 0.2);
        assert_eq!(parse_probability("say 35").unwrap(), 0.35);
        assert_eq!(parse_probability("Step 1: 3 factors. Final: 0.05.").unwrap(), 0.05);
        assert!(parse_probability("I cannot answer").is_err());
        assert!(parse_probability("about 250").is_err());
        assert!(parse_probability("-0.3").is_err());
    }

    #[test]
    fn distribution_examples() {
        assert_eq!(
            parse_distribution("(0.70, 0.20, 0.10)", 3).unwrap().values,
            vec![0.7, 0.2, 0.1]
        );
        let raw = parse_distribution("(30, 70)", 2).unwrap();
        assert_eq!(raw.values, vec![30.0, 70.0]);
        let p = normalize_raw(&raw).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-15 && (p[1] - 0.7).abs() < 1e-15);
        assert!(matches!(
            parse_distribution("(0.5, 0.5)", 3),
            Err(ElicitError::Arity { expected: 3, found: 2 })
        ));
        assert!(matches!(parse_distribution("no idea", 2), Err(ElicitError::NoTuple)));
        assert_eq!(
            parse_distribution("first (0.1, 0.9), revised (0.3, 0.7)", 2)
                .unwrap()
                .values,
            vec![0.3, 0.7]
        );
        assert_eq!(
            parse_distribution("so 0.6, 0.3, 0.1 overall", 3).unwrap().values,
            vec![0.6, 0.3, 0.1]
        );
        assert_eq!(parse_distribution("[60%, 40%]", 2).unwrap().values, vec![60.0, 40.0]);
    }

    #[test]
    fn token_score_examples() {
        let states = vec!["True".to_string(), "False".to_string()];
        let p = token_scores_to_distribution(&[("True".into(), 0.6), ("False".into(), 0.39)], &states).unwrap();
        assert!((p[0] - 0.6 / 0.99).abs() < 1e-12);
        assert!((p[0] - 0.606061).abs() < 5e-7 && (p[1] - 0.393939).abs() < 5e-7);
        let p = token_scores_to_distribution(&[("True".into(), 1.0)], &states).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0]);
        assert!(matches!(
            token_scores_to_distribution(&[("Yes".into(), 0.9)], &states),
            Err(ElicitError::Degenerate)
        ));
        let p = token_scores_to_distribution(
            &[(" true".into(), 0.3), ("TRUE".into(), 0.2), ("False".into(), 0.5)],
            &states,
        )
        .unwrap();
        assert_eq!(p.probs(), &[0.5, 0.5]);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn tuple_round_trips(values in prop::collection::vec(0.0f64..1.0, 2..8), lead in "[a-z ]{0,20}") {
            let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            let text = format!("{lead} 1. Reasoning... so ({})", parts.join(", "));
            let got = parse_distribution(&text, values.len()).unwrap();
            prop_assert_eq!(got.values, values);
        }

        #[test]
        fn probability_round_trips(p in 0.0f64..=1.0) {
            let text = format!("Considering 3 factors, the answer is {p}");
            prop_assert_eq!(parse_probability(&text).unwrap(), p);
        }
    }
}
