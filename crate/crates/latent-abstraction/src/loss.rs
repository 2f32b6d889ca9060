use mdp_core::{ActionId, Mdp, Policy, StateId};

use crate::embedding::Embedding;
use crate::error::LatentError;
use crate::latent_mdp::LatentMdp;

/// The transition loss of a latent abstraction, computed by exact summation:
/// the expected total-variation distance, over ground states drawn from `xi`
/// and actions drawn from the latent policy at the state's image, between
/// the pushforward of the ground row and the latent row.
///
/// `xi` is a dense distribution over ground states — typically the
/// stationary distribution of the ground model under the lifted policy.
pub fn transition_loss_exact(
    ground: &Mdp,
    latent: &LatentMdp,
    phi: &Embedding,
    latent_policy: &Policy,
    xi: &[f64],
) -> Result<f64, LatentError> {
    check_spaces(ground, latent, phi, latent_policy)?;
    validate_weights(xi, ground.n_states())?;
    let mut loss = 0.0;
    for (s, &weight) in xi.iter().enumerate() {
        if weight == 0.0 {
            continue;
        }
        let l = phi.apply(s);
        for (a, p_a) in latent_policy.action_probs(l) {
            if p_a == 0.0 {
                continue;
            }
            let ground_row = ground.row(s, a).ok_or_else(|| LatentError::DomainMismatch {
                detail: format!(
                    "latent policy plays action {a} at latent state {l}, \
                     but ground state {s} does not enable it"
                ),
            })?;
            let latent_row = latent.mdp().row(l, a).ok_or_else(|| {
                LatentError::DomainMismatch {
                    detail: format!(
                        "latent policy plays action {a} at latent state {l}, \
                         but the latent model does not enable it"
                    ),
                }
            })?;
            let tv = phi.pushforward(ground_row).total_variation(latent_row);
            loss += weight * p_a * tv;
        }
    }
    Ok(loss)
}

/// Estimates the transition loss and the reset mass from simulated
/// transitions: the loss estimate is one minus the average latent
/// probability of reproducing each observed step, and the reset-mass
/// estimate is the fraction of source states equal to `reset`.
///
/// The samples must be drawn from the stationary regime of the ground model
/// under the lifted policy; this function is purely arithmetic and does not
/// check how they were produced.
pub fn transition_loss_estimate(
    samples: &[(StateId, ActionId, StateId)],
    latent: &LatentMdp,
    phi: &Embedding,
    reset: StateId,
) -> Result<(f64, f64), LatentError> {
    if samples.is_empty() {
        return Err(LatentError::EmptySample);
    }
    let mut agreement = 0.0;
    let mut reset_hits = 0u64;
    for &(s, a, s_next) in samples {
        agreement += step_agreement(latent, phi, s, a, s_next)?;
        if s == reset {
            reset_hits += 1;
        }
    }
    let t = samples.len() as f64;
    Ok((1.0 - agreement / t, reset_hits as f64 / t))
}

/// The latent probability of reproducing one observed ground step: the
/// "reward" each sample adds to the loss estimator's running mean.
pub(crate) fn step_agreement(
    latent: &LatentMdp,
    phi: &Embedding,
    s: StateId,
    a: ActionId,
    s_next: StateId,
) -> Result<f64, LatentError> {
    if s >= phi.n_ground() || s_next >= phi.n_ground() {
        return Err(LatentError::DomainMismatch {
            detail: format!(
                "sample ({s}, {a}, {s_next}) mentions a state outside the ground space"
            ),
        });
    }
    let l = phi.apply(s);
    let row = latent.mdp().row(l, a).ok_or_else(|| LatentError::DomainMismatch {
        detail: format!(
            "sample plays action {a} at latent state {l}, \
             but the latent model does not enable it"
        ),
    })?;
    Ok(row.prob(phi.apply(s_next)))
}

fn check_spaces(
    ground: &Mdp,
    latent: &LatentMdp,
    phi: &Embedding,
    latent_policy: &Policy,
) -> Result<(), LatentError> {
    if phi.n_ground() != ground.n_states() {
        return Err(LatentError::DomainMismatch {
            detail: format!(
                "embedding covers {} ground states, model has {}",
                phi.n_ground(),
                ground.n_states()
            ),
        });
    }
    if phi.n_latent() != latent.n_states() {
        return Err(LatentError::DomainMismatch {
            detail: format!(
                "embedding has {} latent states, latent model has {}",
                phi.n_latent(),
                latent.n_states()
            ),
        });
    }
    if latent_policy.n_states() != latent.n_states() {
        return Err(LatentError::DomainMismatch {
            detail: format!(
                "latent policy covers {} states, latent model has {}",
                latent_policy.n_states(),
                latent.n_states()
            ),
        });
    }
    Ok(())
}

fn validate_weights(xi: &[f64], n_states: usize) -> Result<(), LatentError> {
    if xi.len() != n_states {
        return Err(LatentError::InvalidDistribution {
            detail: format!("weight vector has {} entries, model has {n_states}", xi.len()),
        });
    }
    let mut sum = 0.0;
    for (s, &w) in xi.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(LatentError::InvalidDistribution {
                detail: format!("weight of state {s} is {w}"),
            });
        }
        sum += w;
    }
    if (sum - 1.0).abs() > mdp_core::tolerances::ROW_RENORMALIZE {
        return Err(LatentError::InvalidDistribution {
            detail: format!("weights sum to {sum}, expected 1"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use mdp_core::SparseDist;

    /// A four-state ground chain whose states collapse pairwise into a
    /// two-state latent model.
    fn pair_setup(latent_rows: Vec<(StateId, ActionId, SparseDist)>) -> (Mdp, LatentMdp, Embedding) {
        let ground = Mdp::new(
            4,
            1,
            vec![
                (0, 0, SparseDist::new(vec![(2, 0.5), (3, 0.5)]).unwrap()),
                (1, 0, SparseDist::new(vec![(2, 0.5), (3, 0.5)]).unwrap()),
                (2, 0, SparseDist::dirac(0)),
                (3, 0, SparseDist::dirac(1)),
            ],
            SparseDist::dirac(0),
        )
        .unwrap();
        let latent = LatentMdp::new(
            Mdp::new(2, 1, latent_rows, SparseDist::dirac(0)).unwrap(),
            0,
            vec![],
            vec![],
        )
        .unwrap();
        let phi = Embedding::new(vec![0, 0, 1, 1], 2).unwrap();
        (ground, latent, phi)
    }

    #[test]
    fn exact_quotient_has_zero_loss() {
        // Both blocks behave identically through the embedding: states 0, 1
        // push forward to Dirac on latent 1, states 2, 3 to Dirac on latent
        // 0. The latent rows copy those pushforwards, so every total-
        // variation term vanishes regardless of the weights.
        let (ground, latent, phi) = pair_setup(vec![
            (0, 0, SparseDist::dirac(1)),
            (1, 0, SparseDist::dirac(0)),
        ]);
        let pol = Policy::Deterministic(vec![0, 0]);
        let xi = vec![0.25, 0.25, 0.25, 0.25];
        let loss = transition_loss_exact(&ground, &latent, &phi, &pol, &xi).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn single_state_mismatch_is_the_half_l1_distance() {
        // Pushforward of the ground row at state 0 is Dirac on latent 1;
        // the latent row puts only 0.7 there, so the distance is 0.3.
        let (ground, latent, phi) = pair_setup(vec![
            (0, 0, SparseDist::new(vec![(0, 0.3), (1, 0.7)]).unwrap()),
            (1, 0, SparseDist::new(vec![(0, 0.5), (1, 0.5)]).unwrap()),
        ]);
        let pol = Policy::Deterministic(vec![0, 0]);
        let xi = vec![1.0, 0.0, 0.0, 0.0];
        let loss = transition_loss_exact(&ground, &latent, &phi, &pol, &xi).unwrap();
        assert!((loss - 0.3).abs() < 1e-15);
    }

    #[test]
    fn weights_outside_the_mismatch_hide_it() {
        // The latent row at 0 contradicts the pushforward from states 0 and
        // 1 (Dirac on the wrong side), while the row at 1 copies the
        // pushforward from states 2 and 3. Weights concentrated on the
        // agreeing block give zero loss despite the mismatch elsewhere.
        let (ground, latent, phi) = pair_setup(vec![
            (0, 0, SparseDist::dirac(0)),
            (1, 0, SparseDist::dirac(0)),
        ]);
        let pol = Policy::Deterministic(vec![0, 0]);
        let xi = vec![0.0, 0.0, 0.5, 0.5];
        let loss = transition_loss_exact(&ground, &latent, &phi, &pol, &xi).unwrap();
        assert_eq!(loss, 0.0);
        // The same instance with the weights moved onto the disagreeing
        // block exposes the full distance.
        let loss = transition_loss_exact(&ground, &latent, &phi, &pol, &[0.5, 0.5, 0.0, 0.0])
            .unwrap();
        assert_eq!(loss, 1.0);
    }

    #[test]
    fn rejects_unnormalized_weights() {
        let (ground, latent, phi) = pair_setup(vec![
            (0, 0, SparseDist::dirac(0)),
            (1, 0, SparseDist::dirac(1)),
        ]);
        let pol = Policy::Deterministic(vec![0, 0]);
        let err =
            transition_loss_exact(&ground, &latent, &phi, &pol, &[0.5, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, LatentError::InvalidDistribution { .. }));
    }

    #[test]
    fn single_sample_estimate_is_one_minus_its_probability() {
        let (_, latent, phi) = pair_setup(vec![
            (0, 0, SparseDist::new(vec![(0, 0.3), (1, 0.7)]).unwrap()),
            (1, 0, SparseDist::dirac(0)),
        ]);
        // One step from ground state 0 to ground state 2: latent 0 -> 1 with
        // probability 0.7 under the latent model.
        let (l_hat, xi_hat) = transition_loss_estimate(&[(0, 0, 2)], &latent, &phi, 0).unwrap();
        assert!((l_hat - 0.3).abs() < 1e-15);
        assert_eq!(xi_hat, 1.0);
    }

    #[test]
    fn certain_transitions_estimate_zero_loss() {
        let (_, latent, phi) = pair_setup(vec![
            (0, 0, SparseDist::dirac(1)),
            (1, 0, SparseDist::dirac(0)),
        ]);
        // Every sampled step is reproduced with latent probability one.
        let samples = [(0, 0, 2), (1, 0, 3), (2, 0, 0), (3, 0, 1)];
        let (l_hat, xi_hat) = transition_loss_estimate(&samples, &latent, &phi, 0).unwrap();
        assert_eq!(l_hat, 0.0);
        assert_eq!(xi_hat, 0.25);
    }

    #[test]
    fn empty_sample_set_is_rejected() {
        let (_, latent, phi) = pair_setup(vec![
            (0, 0, SparseDist::dirac(0)),
            (1, 0, SparseDist::dirac(1)),
        ]);
        let err = transition_loss_estimate(&[], &latent, &phi, 0).unwrap_err();
        assert!(matches!(err, LatentError::EmptySample));
    }
}
