//! Sparse finite MDPs with per-state action sets.

use crate::dist::{DistError, SparseDist};
use crate::error::MdpError;

/// Dense state index.
pub type StateId = usize;
/// Dense action index into the global action alphabet.
pub type ActionId = usize;

/// A finite MDP with dense state and action indices and sparse transition
/// rows.
///
/// Each state carries its own non-empty set of enabled actions (a subset of
/// the global alphabet); `row(s, a)` is defined exactly for enabled actions.
/// Values of this type are immutable after construction and safe to share
/// across threads.
#[derive(Clone, Debug)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    /// Per-state rows, sorted by action index.
    rows: Vec<Vec<(ActionId, SparseDist)>>,
    initial: SparseDist,
}

impl Mdp {
    /// Builds an MDP from `(state, action, row)` triples.
    ///
    /// Validates that all indices are in range, no `(state, action)` pair is
    /// duplicated, every state has at least one action, and the initial
    /// distribution is supported on valid states.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<(StateId, ActionId, SparseDist)>,
        initial: SparseDist,
    ) -> Result<Self, MdpError> {
        if n_states == 0 {
            return Err(MdpError::InvalidModel {
                detail: "model must have at least one state".into(),
            });
        }
        let mut rows: Vec<Vec<(ActionId, SparseDist)>> = vec![Vec::new(); n_states];
        for (state, action, dist) in transitions {
            if state >= n_states {
                return Err(MdpError::InvalidModel {
                    detail: format!("transition source state {state} out of range (n={n_states})"),
                });
            }
            if action >= n_actions {
                return Err(MdpError::InvalidModel {
                    detail: format!(
                        "action {action} at state {state} out of range (m={n_actions})"
                    ),
                });
            }
            if dist.max_index() >= n_states {
                return Err(MdpError::InvalidModel {
                    detail: format!(
                        "transition from state {state}, action {action} targets state {} out of range (n={n_states})",
                        dist.max_index()
                    ),
                });
            }
            rows[state].push((action, dist));
        }
        for (state, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(a, _)| a);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(MdpError::InvalidModel {
                    detail: format!("duplicate transition row for state {state}"),
                });
            }
            if row.is_empty() {
                return Err(MdpError::InvalidModel {
                    detail: format!("state {state} has no enabled action"),
                });
            }
        }
        if initial.max_index() >= n_states {
            return Err(MdpError::InvalidModel {
                detail: format!(
                    "initial distribution targets state {} out of range (n={n_states})",
                    initial.max_index()
                ),
            });
        }
        Ok(Self {
            n_states,
            n_actions,
            rows,
            initial,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn initial(&self) -> &SparseDist {
        &self.initial
    }

    /// Enabled actions at `state` with their rows, sorted by action index.
    pub fn enabled_rows(&self, state: StateId) -> &[(ActionId, SparseDist)] {
        &self.rows[state]
    }

    /// Enabled action indices at `state`, ascending.
    pub fn enabled_actions(&self, state: StateId) -> impl Iterator<Item = ActionId> + '_ {
        self.rows[state].iter().map(|&(a, _)| a)
    }

    /// Lowest enabled action index at `state`.
    pub fn first_enabled(&self, state: StateId) -> ActionId {
        self.rows[state][0].0
    }

    /// The transition row for `(state, action)`, if the action is enabled.
    pub fn row(&self, state: StateId, action: ActionId) -> Option<&SparseDist> {
        self.rows[state]
            .binary_search_by_key(&action, |&(a, _)| a)
            .ok()
            .map(|pos| &self.rows[state][pos].1)
    }

    /// Checks a state index, for operations addressing states directly.
    pub fn check_state(&self, state: StateId) -> Result<(), MdpError> {
        if state >= self.n_states {
            return Err(MdpError::UnknownState {
                state,
                n_states: self.n_states,
            });
        }
        Ok(())
    }

    /// Re-checks the row-sum invariant, reporting the first offending row.
    ///
    /// Constructed models always satisfy it; this exists so solvers can
    /// surface a precise error if handed a model built through unsafe means
    /// (e.g. deserialized through a future format change).
    pub fn verify_stochastic(&self, tol: f64) -> Result<(), MdpError> {
        for (state, row) in self.rows.iter().enumerate() {
            for (action, dist) in row {
                let sum: f64 = dist.entries().iter().map(|&(_, p)| p).sum();
                if (sum - 1.0).abs() > tol {
                    return Err(MdpError::NonStochasticRow {
                        state,
                        action: *action,
                        sum,
                        tol,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Maps a distribution-construction error into a model error carrying the
/// offending row's coordinates.
pub fn dist_error_for_row(state: StateId, action: ActionId, err: DistError) -> MdpError {
    match err {
        DistError::BadSum { sum, tol } => MdpError::NonStochasticRow {
            state,
            action,
            sum,
            tol,
        },
        other => MdpError::InvalidModel {
            detail: format!("row for state {state}, action {action}: {other}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirac(i: usize) -> SparseDist {
        SparseDist::dirac(i)
    }

    #[test]
    fn builds_a_minimal_model() {
        let mdp = Mdp::new(2, 1, vec![(0, 0, dirac(1)), (1, 0, dirac(1))], dirac(0)).unwrap();
        assert_eq!(mdp.n_states(), 2);
        assert_eq!(mdp.row(0, 0).unwrap().entries(), &[(1, 1.0)]);
        assert!(mdp.row(0, 1).is_none());
    }

    #[test]
    fn rejects_duplicate_rows() {
        let err = Mdp::new(
            1,
            1,
            vec![(0, 0, dirac(0)), (0, 0, dirac(0))],
            dirac(0),
        )
        .unwrap_err();
        assert!(matches!(err, MdpError::InvalidModel { .. }));
    }

    #[test]
    fn rejects_states_without_actions() {
        let err = Mdp::new(2, 1, vec![(0, 0, dirac(0))], dirac(0)).unwrap_err();
        assert!(err.to_string().contains("state 1 has no enabled action"));
    }

    #[test]
    fn rejects_out_of_range_targets() {
        let err = Mdp::new(1, 1, vec![(0, 0, dirac(3))], dirac(0)).unwrap_err();
        assert!(matches!(err, MdpError::InvalidModel { .. }));
    }

    #[test]
    fn per_state_action_sets_may_differ() {
        let mdp = Mdp::new(
            2,
            3,
            vec![(0, 2, dirac(1)), (1, 0, dirac(0)), (1, 1, dirac(1))],
            dirac(0),
        )
        .unwrap();
        assert_eq!(mdp.enabled_actions(0).collect::<Vec<_>>(), vec![2]);
        assert_eq!(mdp.enabled_actions(1).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(mdp.first_enabled(1), 0);
    }
}
