//! JSON serialization of models.
//!
//! Format:
//! ```json
//! {
//!   "states": 3,
//!   "actions": 2,
//!   "transitions": [[0, 0, [[1, 0.5], [2, 0.5]]], [1, 0, [[1, 1.0]]], ...],
//!   "initial": [[0, 1.0]]
//! }
//! ```
//! The loader validates every structural invariant and reports the first
//! violation with its indices; rows whose sums are within 1e-9 of 1 are
//! renormalized, larger deviations are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::SparseDist;
use crate::error::MdpError;
use crate::model::{dist_error_for_row, Mdp};

#[derive(Serialize, Deserialize)]
struct RawMdp {
    states: usize,
    actions: usize,
    transitions: Vec<(usize, usize, Vec<(usize, f64)>)>,
    initial: Vec<(usize, f64)>,
}

/// Parses a model from its JSON text.
pub fn mdp_from_json(text: &str) -> Result<Mdp, MdpError> {
    let raw: RawMdp = serde_json::from_str(text).map_err(|e| MdpError::InvalidModel {
        detail: format!("malformed JSON: {e}"),
    })?;
    let mut transitions = Vec::with_capacity(raw.transitions.len());
    for (state, action, entries) in raw.transitions {
        let dist = SparseDist::new(entries).map_err(|e| dist_error_for_row(state, action, e))?;
        transitions.push((state, action, dist));
    }
    let initial = SparseDist::new(raw.initial).map_err(|e| MdpError::InvalidModel {
        detail: format!("initial distribution: {e}"),
    })?;
    Mdp::new(raw.states, raw.actions, transitions, initial)
}

/// Renders a model to JSON text. Rows appear sorted by (state, action) and
/// entries sorted by destination, so output is deterministic.
pub fn mdp_to_json(mdp: &Mdp) -> String {
    let transitions = (0..mdp.n_states())
        .flat_map(|s| {
            mdp.enabled_rows(s)
                .iter()
                .map(move |(a, dist)| (s, *a, dist.entries().to_vec()))
        })
        .collect();
    let raw = RawMdp {
        states: mdp.n_states(),
        actions: mdp.n_actions(),
        transitions,
        initial: mdp.initial().entries().to_vec(),
    };
    serde_json::to_string_pretty(&raw).expect("model serialization cannot fail")
}

/// Loads a model from a JSON file.
pub fn load_mdp(path: impl AsRef<Path>) -> Result<Mdp, MdpError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| MdpError::InvalidModel {
        detail: format!("cannot read {}: {e}", path.as_ref().display()),
    })?;
    mdp_from_json(&text)
}

/// Saves a model to a JSON file.
pub fn save_mdp(path: impl AsRef<Path>, mdp: &Mdp) -> Result<(), MdpError> {
    std::fs::write(path.as_ref(), mdp_to_json(mdp)).map_err(|e| MdpError::InvalidModel {
        detail: format!("cannot write {}: {e}", path.as_ref().display()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "states": 3,
        "actions": 2,
        "transitions": [
            [0, 0, [[1, 0.5], [2, 0.5]]],
            [0, 1, [[0, 1.0]]],
            [1, 0, [[1, 1.0]]],
            [2, 0, [[0, 1.0]]]
        ],
        "initial": [[0, 1.0]]
    }"#;

    #[test]
    fn round_trips() {
        let mdp = mdp_from_json(SAMPLE).unwrap();
        let text = mdp_to_json(&mdp);
        let again = mdp_from_json(&text).unwrap();
        assert_eq!(mdp.n_states(), again.n_states());
        assert_eq!(mdp.n_actions(), again.n_actions());
        for s in 0..mdp.n_states() {
            let a: Vec<_> = mdp.enabled_rows(s).to_vec();
            let b: Vec<_> = again.enabled_rows(s).to_vec();
            assert_eq!(a, b);
        }
        // Serialization is deterministic byte for byte.
        assert_eq!(text, mdp_to_json(&again));
    }

    #[test]
    fn rejects_rows_off_by_too_much() {
        let text = SAMPLE.replace("[[1, 0.5], [2, 0.5]]", "[[1, 0.5], [2, 0.4]]");
        let err = mdp_from_json(&text).unwrap_err();
        match err {
            MdpError::NonStochasticRow { state, action, .. } => {
                assert_eq!((state, action), (0, 0));
            }
            other => panic!("expected NonStochasticRow, got {other}"),
        }
    }

    #[test]
    fn renormalizes_rows_within_tolerance() {
        let text = SAMPLE.replace("[[1, 0.5], [2, 0.5]]", "[[1, 0.5000000001], [2, 0.5]]");
        let mdp = mdp_from_json(&text).unwrap();
        let sum: f64 = mdp.row(0, 0).unwrap().entries().iter().map(|&(_, p)| p).sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_duplicate_rows() {
        let text = SAMPLE.replace(
            "[0, 1, [[0, 1.0]]]",
            "[0, 0, [[1, 0.5], [2, 0.5]]]",
        );
        let err = mdp_from_json(&text).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn rejects_out_of_range_destinations() {
        let text = SAMPLE.replace("[1, 0, [[1, 1.0]]]", "[1, 0, [[9, 1.0]]]");
        let err = mdp_from_json(&text).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn rejects_negative_probabilities() {
        let text = SAMPLE.replace("[[1, 0.5], [2, 0.5]]", "[[1, 1.5], [2, -0.5]]");
        let err = mdp_from_json(&text).unwrap_err();
        assert!(err.to_string().contains("negative"), "{err}");
    }
}
