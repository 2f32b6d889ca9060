use mdp_core::Policy;

use crate::embedding::Embedding;
use crate::error::LatentError;

/// Runs a latent policy on the ground model: the lifted policy plays, at
/// ground state `s`, whatever the latent policy plays at `φ(s)`.
///
/// The result covers every ground state. Whether its actions are enabled in
/// a particular ground model is that model's concern; validate with
/// [`mdp_core::Policy::validate_for`] before use.
pub fn lift_policy(phi: &Embedding, latent_policy: &Policy) -> Result<Policy, LatentError> {
    if latent_policy.n_states() != phi.n_latent() {
        return Err(LatentError::DomainMismatch {
            detail: format!(
                "latent policy covers {} states, embedding has {} latent states",
                latent_policy.n_states(),
                phi.n_latent()
            ),
        });
    }
    let lifted = match latent_policy {
        Policy::Deterministic(choices) => {
            Policy::Deterministic((0..phi.n_ground()).map(|s| choices[phi.apply(s)]).collect())
        }
        Policy::Stochastic(dists) => {
            Policy::Stochastic((0..phi.n_ground()).map(|s| dists[phi.apply(s)].clone()).collect())
        }
    };
    Ok(lifted)
}
