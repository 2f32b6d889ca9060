//! Seeded path sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::MdpError;
use crate::model::{ActionId, Mdp, StateId};
use crate::policy::Policy;

/// One sampled transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub from: StateId,
    pub action: ActionId,
    pub to: StateId,
}

/// When to stop sampling.
pub enum StopRule<'a> {
    /// Stop after exactly this many transitions.
    Steps(usize),
    /// Stop upon first being in a state satisfying the predicate. The initial
    /// state is checked too: if it already satisfies the predicate the path is
    /// empty. The caller is responsible for predicates that are eventually
    /// satisfied.
    When(&'a dyn Fn(StateId) -> bool),
}

/// Samples a path under `policy`, starting from the initial distribution.
/// Identical seeds produce identical paths.
pub fn simulate(
    mdp: &Mdp,
    policy: &Policy,
    seed: u64,
    stop: StopRule,
) -> Result<Vec<Step>, MdpError> {
    policy.validate_for(mdp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = mdp.initial().sample(&mut rng);
    let mut path = Vec::new();
    loop {
        match &stop {
            StopRule::Steps(n) => {
                if path.len() == *n {
                    return Ok(path);
                }
            }
            StopRule::When(pred) => {
                if pred(state) {
                    return Ok(path);
                }
            }
        }
        let action = policy.sample_action(state, &mut rng);
        let row = mdp.row(state, action).expect("policy validated against model");
        let next = row.sample(&mut rng);
        path.push(Step {
            from: state,
            action,
            to: next,
        });
        state = next;
    }
}
