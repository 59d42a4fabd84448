//! The golden scenario corpus, embedded at build time.

use std::path::PathBuf;

use super::{parse_scenario, Diagnostic, Scenario};

/// Directory holding `NAME.scn` files that override the embedded copies.
pub const CORPUS_ENV: &str = "PROMISE_INFO_CORPUS";

macro_rules! embed {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../corpus/", $name, ".scn")))),*]
    };
}

const EMBEDDED: &[(&str, &str)] = embed!(
    "case1",
    "case1_observed",
    "case2_full_overlap",
    "case2_partial_overlap",
    "case2_ack",
    "case2_bsc",
    "case3_clean",
    "case3_env",
    "case3_barrier",
    "matroid",
    "observer_undersampled",
);

/// Names of the embedded scenarios, in corpus order.
pub fn corpus_names() -> Vec<&'static str> {
    EMBEDDED.iter().map(|(n, _)| *n).collect()
}

/// Text of a corpus scenario, read from [`CORPUS_ENV`] when set and the
/// file exists there, otherwise the embedded copy.
pub fn corpus(name: &str) -> Option<String> {
    if let Some(dir) = std::env::var_os(CORPUS_ENV) {
        let path = PathBuf::from(dir).join(format!("{name}.scn"));
        if let Ok(text) = std::fs::read_to_string(path) {
            return Some(text);
        }
    }
    EMBEDDED.iter().find(|(n, _)| *n == name).map(|(_, t)| t.to_string())
}

/// Parses a corpus scenario by name.
pub fn load_corpus(name: &str) -> Result<Scenario, Vec<Diagnostic>> {
    let text = corpus(name).ok_or_else(|| {
        vec![Diagnostic {
            line: None,
            kind: super::DiagnosticKind::Parse,
            message: format!("no corpus scenario named {name}"),
        }]
    })?;
    parse_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_embedded_scenario_parses() {
        for name in corpus_names() {
            let s = load_corpus(name).unwrap_or_else(|d| panic!("{name}: {d:?}"));
            assert_eq!(s.name, name);
        }
    }

    #[test]
    fn unknown_name_is_a_diagnostic() {
        assert!(load_corpus("nope").is_err());
    }
}
