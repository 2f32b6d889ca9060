//! Discounted reach-avoid objectives and solved value vectors.

use crate::dist::SparseDist;
use crate::error::MdpError;
use crate::model::StateId;

/// Which Bellman case a state falls in. Avoid wins over target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateCase {
    Avoid,
    Target,
    Interior,
}

/// A discounted reach-avoid objective: the value of a state is the expected
/// discount accumulated up to the first visit of `target`, provided `avoid`
/// is never entered first. States in both sets count as avoid.
#[derive(Clone, Debug)]
pub struct ReachAvoidObjective {
    target: Vec<bool>,
    avoid: Vec<bool>,
    gamma: f64,
}

impl ReachAvoidObjective {
    /// Builds an objective over `n_states` states. `gamma` must lie strictly
    /// inside (0, 1); target and avoid may intersect (avoid wins).
    pub fn new(
        n_states: usize,
        target: &[StateId],
        avoid: &[StateId],
        gamma: f64,
    ) -> Result<Self, MdpError> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(MdpError::InvalidModel {
                detail: format!("discount factor must lie strictly in (0, 1), got {gamma}"),
            });
        }
        let mut t = vec![false; n_states];
        let mut b = vec![false; n_states];
        for &s in target {
            if s >= n_states {
                return Err(MdpError::UnknownState { state: s, n_states });
            }
            t[s] = true;
        }
        for &s in avoid {
            if s >= n_states {
                return Err(MdpError::UnknownState { state: s, n_states });
            }
            b[s] = true;
        }
        Ok(Self {
            target: t,
            avoid: b,
            gamma,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_states(&self) -> usize {
        self.target.len()
    }

    pub fn in_target(&self, state: StateId) -> bool {
        self.target[state]
    }

    pub fn in_avoid(&self, state: StateId) -> bool {
        self.avoid[state]
    }

    /// The Bellman case of `state`: avoid if in the avoid set, else target if
    /// in the target set, else interior.
    pub fn case(&self, state: StateId) -> StateCase {
        if self.avoid[state] {
            StateCase::Avoid
        } else if self.target[state] {
            StateCase::Target
        } else {
            StateCase::Interior
        }
    }
}

/// Per-state reach-avoid values plus solver metadata.
#[derive(Clone, Debug)]
pub struct ValueVector {
    /// One value per state, each in [0, 1]; 0 on avoid states, 1 on
    /// target-minus-avoid states.
    pub values: Vec<f64>,
    pub gamma: f64,
    pub tol: f64,
    pub iterations: usize,
}

impl ValueVector {
    /// The value of the initial condition: the expectation of the state
    /// values under an initial distribution.
    pub fn initial_value(&self, initial: &SparseDist) -> f64 {
        initial.expect(|s| self.values[s])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn avoid_wins_over_target() {
        let obj = ReachAvoidObjective::new(3, &[1, 2], &[2], 0.9).unwrap();
        assert_eq!(obj.case(0), StateCase::Interior);
        assert_eq!(obj.case(1), StateCase::Target);
        assert_eq!(obj.case(2), StateCase::Avoid);
    }

    #[test]
    fn rejects_boundary_discounts() {
        assert!(ReachAvoidObjective::new(1, &[], &[], 0.0).is_err());
        assert!(ReachAvoidObjective::new(1, &[], &[], 1.0).is_err());
        assert!(ReachAvoidObjective::new(1, &[], &[], 0.5).is_ok());
    }

    #[test]
    fn rejects_out_of_range_states() {
        assert!(matches!(
            ReachAvoidObjective::new(2, &[5], &[], 0.5),
            Err(MdpError::UnknownState { state: 5, .. })
        ));
    }
}
