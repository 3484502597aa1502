//! Native JSON network format.
//!
//! Canonical form: keys sorted, two-space indentation, one CPT row per line,
//! probabilities printed with at most 12 significant digits.

use std::fmt::Write;

use super::{Network, NetworkError, RawNetwork};
use crate::scalar::Prob;

pub fn parse_native<T: Prob>(text: &str) -> Result<Network<T>, NetworkError> {
    let raw: RawNetwork<T> = serde_json::from_str(text).map_err(|e| NetworkError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Network::from_raw(raw)
}

pub fn serialize_native<T: Prob>(net: &Network<T>) -> String {
    let raw = net.to_raw();
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"name\": {},", quote(&raw.name));
    out.push_str("  \"variables\": [");
    for (i, v) in raw.variables.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str("    {\n      \"cpt\": [\n");
        for (r, row) in v.cpt.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|p| format_prob(p.as_f64())).collect();
            let sep = if r + 1 == v.cpt.len() { "" } else { "," };
            let _ = writeln!(out, "        [{}]{sep}", cells.join(", "));
        }
        out.push_str("      ],\n");
        let _ = writeln!(out, "      \"name\": {},", quote(&v.name));
        let _ = writeln!(out, "      \"parents\": {},", string_list(&v.parents));
        let _ = writeln!(out, "      \"states\": {}", string_list(&v.states));
        out.push_str("    }");
    }
    if raw.variables.is_empty() {
        out.push_str("]\n}\n");
    } else {
        out.push_str("\n  ]\n}\n");
    }
    out
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn string_list(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| quote(s)).collect();
    format!("[{}]", quoted.join(", "))
}

/// Formats a probability with at most 12 significant digits, shortest form.
///
/// Values in `[1e-6, 1e12)` are positional (`0.75`, `1.0`); smaller ones use
/// an exponent (`2.5e-9`). Zero prints as `0.0`.
pub fn format_prob(v: f64) -> String {
    if v == 0.0 {
        return "0.0".to_string();
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let sign = if negative { "-" } else { "" };

    if !(-6..12).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        return if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        };
    }
    if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        return format!("{sign}0.{zeros}{digits}");
    }
    let int_len = exp as usize + 1;
    if digits.len() <= int_len {
        let pad = "0".repeat(int_len - digits.len());
        format!("{sign}{digits}{pad}.0")
    } else {
        let (int, frac) = digits.split_at(int_len);
        format!("{sign}{int}.{frac}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CHAIN: &str = r#"{
  "name": "chain",
  "variables": [
    {
      "cpt": [
        [0.3, 0.7]
      ],
      "name": "A",
      "parents": [],
      "states": ["t", "f"]
    },
    {
      "cpt": [
        [0.9, 0.1],
        [0.2, 0.8]
      ],
      "name": "B",
      "parents": ["A"],
      "states": ["t", "f"]
    }
  ]
}
"#;

    #[test]
    fn formats_probabilities() {
        assert_eq!(format_prob(0.75), "0.75");
        assert_eq!(format_prob(1.0), "1.0");
        assert_eq!(format_prob(0.0), "0.0");
        assert_eq!(format_prob(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_prob(2.5e-9), "2.5e-9");
        assert_eq!(format_prob(1e-6), "0.000001");
        assert_eq!(format_prob(120.0), "120.0");
        assert_eq!(format_prob(0.1 + 0.2), "0.3");
    }

    #[test]
    fn canonical_text_round_trips() {
        let net: Network<f64> = parse_native(CHAIN).unwrap();
        assert_eq!(serialize_native(&net), CHAIN);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_native::<f64>("{\n  \"name\": \"x\",\n  oops\n}").unwrap_err();
        match err {
            NetworkError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_row_is_row_count_mismatch() {
        let text = CHAIN.replace("        [0.9, 0.1],\n", "");
        let err = parse_native::<f64>(&text).unwrap_err();
        assert!(err.to_string().contains("row count mismatch"), "{err}");
    }

    proptest! {
        #[test]
        fn formatted_value_reparses_to_same_text(v in 0.0f64..1.0) {
            let s = format_prob(v);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(format_prob(back), s.clone());
            prop_assert!((back - v).abs() <= 1e-11 * v.max(1e-300) + 1e-300);
        }
    }
}
