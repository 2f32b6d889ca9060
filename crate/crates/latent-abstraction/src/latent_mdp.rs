use mdp_core::{
    check_episodic, value_reach_avoid, EpisodicReport, Mdp, MdpError, Policy,
    ReachAvoidObjective, StateId, ValueVector,
};

use crate::error::LatentError;

/// A latent model: a finite MDP over latent states together with its
/// designated reset state and its target/bad labeling.
///
/// The latent model is expected to be episodic with respect to its reset —
/// every action row at the reset state should reproduce the initial
/// distribution. Construction does not enforce this (empirically estimated
/// models may violate it slightly); [`LatentMdp::check_episodic`] performs
/// the check on demand.
#[derive(Clone, Debug)]
pub struct LatentMdp {
    mdp: Mdp,
    reset: StateId,
    targets: Vec<StateId>,
    bad: Vec<StateId>,
    is_target: Vec<bool>,
    is_bad: Vec<bool>,
}

impl LatentMdp {
    /// Wraps an MDP over latent states with its reset state and labeling.
    /// Targets and bad states are deduplicated and kept sorted.
    pub fn new(
        mdp: Mdp,
        reset: StateId,
        mut targets: Vec<StateId>,
        mut bad: Vec<StateId>,
    ) -> Result<Self, LatentError> {
        let n = mdp.n_states();
        let check = |name: &str, s: StateId| -> Result<(), LatentError> {
            if s >= n {
                return Err(LatentError::Mdp(MdpError::InvalidModel {
                    detail: format!("latent {name} state {s} is out of range (model has {n})"),
                }));
            }
            Ok(())
        };
        check("reset", reset)?;
        for &s in &targets {
            check("target", s)?;
        }
        for &s in &bad {
            check("bad", s)?;
        }
        targets.sort_unstable();
        targets.dedup();
        bad.sort_unstable();
        bad.dedup();
        let mut is_target = vec![false; n];
        let mut is_bad = vec![false; n];
        for &s in &targets {
            is_target[s] = true;
        }
        for &s in &bad {
            is_bad[s] = true;
        }
        Ok(Self {
            mdp,
            reset,
            targets,
            bad,
            is_target,
            is_bad,
        })
    }

    pub fn mdp(&self) -> &Mdp {
        &self.mdp
    }

    pub fn n_states(&self) -> usize {
        self.mdp.n_states()
    }

    pub fn reset(&self) -> StateId {
        self.reset
    }

    pub fn targets(&self) -> &[StateId] {
        &self.targets
    }

    pub fn bad(&self) -> &[StateId] {
        &self.bad
    }

    pub fn is_target(&self, l: StateId) -> bool {
        self.is_target[l]
    }

    pub fn is_bad(&self, l: StateId) -> bool {
        self.is_bad[l]
    }

    /// The reach-avoid objective of this model (reach a target while
    /// avoiding bad states) at discount `gamma`.
    pub fn objective(&self, gamma: f64) -> Result<ReachAvoidObjective, LatentError> {
        ReachAvoidObjective::new(self.n_states(), &self.targets, &self.bad, gamma)
            .map_err(LatentError::Mdp)
    }

    /// Evaluates `policy` on this model's reach-avoid objective.
    pub fn value(
        &self,
        policy: &Policy,
        gamma: f64,
        tol: f64,
    ) -> Result<ValueVector, LatentError> {
        let obj = self.objective(gamma)?;
        value_reach_avoid(&self.mdp, policy, &obj, tol).map_err(LatentError::Mdp)
    }

    /// Checks that the model behaves episodically around its reset state.
    pub fn check_episodic(&self) -> Result<EpisodicReport, LatentError> {
        check_episodic(&self.mdp, self.reset).map_err(LatentError::Mdp)
    }
}
