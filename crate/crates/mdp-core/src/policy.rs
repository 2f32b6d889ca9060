//! Stationary policies over sparse MDPs.

use rand::Rng;

use crate::dist::SparseDist;
use crate::error::MdpError;
use crate::model::{ActionId, Mdp, StateId};

/// A stationary policy: one action per state, or a distribution over enabled
/// actions per state. Immutable and safe to share across threads.
#[derive(Clone, Debug, PartialEq)]
pub enum Policy {
    Deterministic(Vec<ActionId>),
    Stochastic(Vec<SparseDist>),
}

impl Policy {
    /// The uniform-random policy over each state's enabled actions.
    pub fn uniform(mdp: &Mdp) -> Policy {
        let dists = (0..mdp.n_states())
            .map(|s| {
                let actions: Vec<ActionId> = mdp.enabled_actions(s).collect();
                SparseDist::uniform(&actions).expect("every state has an enabled action")
            })
            .collect();
        Policy::Stochastic(dists)
    }

    /// A deterministic policy choosing uniformly at random among enabled
    /// actions, drawn once per state. Used by ergodicity probes.
    pub fn random_deterministic<R: Rng + ?Sized>(mdp: &Mdp, rng: &mut R) -> Policy {
        let choices = (0..mdp.n_states())
            .map(|s| {
                let actions: Vec<ActionId> = mdp.enabled_actions(s).collect();
                actions[rng.random_range(0..actions.len())]
            })
            .collect();
        Policy::Deterministic(choices)
    }

    /// Number of states the policy is defined on.
    pub fn n_states(&self) -> usize {
        match self {
            Policy::Deterministic(v) => v.len(),
            Policy::Stochastic(v) => v.len(),
        }
    }

    /// Checks the policy covers every state of `mdp` and only uses enabled
    /// actions.
    pub fn validate_for(&self, mdp: &Mdp) -> Result<(), MdpError> {
        if self.n_states() != mdp.n_states() {
            return Err(MdpError::InvalidPolicy {
                detail: format!(
                    "policy covers {} states, model has {}",
                    self.n_states(),
                    mdp.n_states()
                ),
            });
        }
        for s in 0..mdp.n_states() {
            for (a, _) in self.action_probs(s) {
                if mdp.row(s, a).is_none() {
                    return Err(MdpError::InvalidPolicy {
                        detail: format!("policy uses action {a} at state {s}, which is not enabled"),
                    });
                }
            }
        }
        Ok(())
    }

    /// `(action, probability)` pairs at `state`.
    pub fn action_probs(&self, state: StateId) -> ActionProbs<'_> {
        match self {
            Policy::Deterministic(v) => ActionProbs::Det(Some(v[state])),
            Policy::Stochastic(v) => ActionProbs::Stoch(v[state].entries().iter()),
        }
    }

    /// Samples an action at `state`.
    pub fn sample_action<R: Rng + ?Sized>(&self, state: StateId, rng: &mut R) -> ActionId {
        match self {
            Policy::Deterministic(v) => v[state],
            Policy::Stochastic(v) => v[state].sample(rng),
        }
    }
}

/// Iterator over a state's `(action, probability)` pairs.
pub enum ActionProbs<'a> {
    Det(Option<ActionId>),
    Stoch(std::slice::Iter<'a, (usize, f64)>),
}

impl Iterator for ActionProbs<'_> {
    type Item = (ActionId, f64);

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            ActionProbs::Det(slot) => slot.take().map(|a| (a, 1.0)),
            ActionProbs::Stoch(iter) => iter.next().map(|&(a, p)| (a, p)),
        }
    }
}
