//! Plain-text sequence files.
//!
//! ```text
//! # comment
//! name=Ideal6
//! tau_us=5
//! y x x y -x -x
//! ```
//!
//! Header lines (`key=value`) precede the tokens; `tau_us` is required.
//! `#` starts a comment anywhere on a line.

use super::{Action, PulseSequence};
use crate::error::{Error, Result};

const TOKENS_PER_LINE: usize = 12;

pub fn parse_sequence_file(text: &str) -> Result<PulseSequence> {
    let mut tau_us: Option<f64> = None;
    let mut name: Option<String> = None;
    let mut actions = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            if !actions.is_empty() {
                return Err(parse_err(line_no, "header line after action tokens"));
            }
            let value = value.trim();
            match key.trim() {
                "tau_us" => {
                    let v: f64 = value.parse().map_err(|_| parse_err(line_no, format!("bad tau_us '{value}'")))?;
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(parse_err(line_no, format!("tau_us must be positive, got {value}")));
                    }
                    tau_us = Some(v);
                }
                "name" => name = Some(value.to_string()),
                other => return Err(parse_err(line_no, format!("unknown header key '{other}'"))),
            }
            continue;
        }
        for token in line.split_whitespace() {
            let action: Action = token.parse().map_err(|_| parse_err(line_no, format!("unknown token '{token}'")))?;
            actions.push(action);
        }
    }
    let tau_us = tau_us.ok_or_else(|| parse_err(0, "missing tau_us header"))?;
    if actions.is_empty() {
        return Err(parse_err(0, "no actions"));
    }
    let seq = PulseSequence::new(actions, tau_us / 1e6)?;
    Ok(match name {
        Some(n) => seq.named(n),
        None => seq,
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

pub fn emit_sequence_file(seq: &PulseSequence) -> String {
    let mut out = String::new();
    if let Some(name) = seq.name() {
        out.push_str(&format!("name={name}\n"));
    }
    out.push_str(&format!("tau_us={}\n", seq.tau() * 1e6));
    for chunk in seq.actions().chunks(TOKENS_PER_LINE) {
        let line: Vec<_> = chunk.iter().map(|a| a.token()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Canonical form of a sequence file: comments dropped, tokens re-wrapped.
pub fn normalize_sequence_file(text: &str) -> Result<String> {
    Ok(emit_sequence_file(&parse_sequence_file(text)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_minimal() {
        let s = parse_sequence_file("tau_us=5\ny x x y -x -x").unwrap();
        assert_eq!(s.tokens(), "y x x y -x -x");
        assert_eq!(s.tau(), 5e-6);
        assert_eq!(s.name(), None);
    }

    #[test]
    fn parse_comments_and_delay() {
        let s = parse_sequence_file("# c\nname=w\ntau_us=2.5 # half\nd x\n  -y d  # mid\ny -x\n").unwrap();
        assert_eq!(s.tokens(), "d x -y d y -x");
        assert_eq!(s.name(), Some("w"));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_sequence_file("y x x"), Err(Error::Parse { .. })));
        assert!(matches!(parse_sequence_file("tau_us=1\ny z"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_sequence_file("tau_us=0\ny").is_err());
        assert!(parse_sequence_file("tau_us=1\n").is_err());
        assert!(parse_sequence_file("tau_us=1\nx\ntau_us=2").is_err());
        assert!(parse_sequence_file("speed=1\ntau_us=1\nx").is_err());
    }

    #[test]
    fn emit_wraps_lines() {
        let s = PulseSequence::from_tokens(&["x"; 13].join(" "), 1e-6).unwrap().named("t");
        let text = emit_sequence_file(&s);
        assert_eq!(text, format!("name=t\ntau_us=1\n{}\nx\n", ["x"; 12].join(" ")));
        assert_eq!(normalize_sequence_file(&text).unwrap(), text);
    }

    proptest! {
        #[test]
        fn roundtrip(ix in prop::collection::vec(0usize..5, 1..40), tau_us in 0.01f64..100.0) {
            let actions = ix.into_iter().map(|i| Action::ALL[i]).collect();
            let s = PulseSequence::new(actions, tau_us / 1e6).unwrap();
            let text = emit_sequence_file(&s);
            let back = parse_sequence_file(&text).unwrap();
            prop_assert_eq!(back.actions(), s.actions());
            prop_assert!((back.tau() - s.tau()).abs() <= 1e-15 * s.tau());
            prop_assert_eq!(emit_sequence_file(&back), text);
        }
    }
}
