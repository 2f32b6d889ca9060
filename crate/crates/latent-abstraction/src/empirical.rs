use mdp_core::{ActionId, Mdp, SparseDist, StateId};

use crate::embedding::Embedding;
use crate::error::LatentError;
use crate::latent_mdp::LatentMdp;

/// The labeling an empirical latent model is built with: its reset state and
/// target/bad sets, all in latent indices.
#[derive(Clone, Debug)]
pub struct LatentLabels {
    pub reset: StateId,
    pub targets: Vec<StateId>,
    pub bad: Vec<StateId>,
}

/// Builds a latent model by counting: each transition row is the maximum-
/// likelihood estimate from the embedded samples, optionally smoothed by a
/// symmetric pseudocount.
///
/// With `smoothing = 0` every latent `(state, action)` pair must appear in
/// the samples, since an unobserved pair leaves its row undefined. A
/// positive pseudocount fills unobserved rows with the uniform distribution
/// (and biases observed rows toward it, which is why it is opt-in).
///
/// The latent initial distribution is supplied by the caller — it is
/// typically estimated separately — as is the labeling.
pub fn empirical_latent_mdp(
    samples: &[(StateId, ActionId, StateId)],
    phi: &Embedding,
    n_actions: usize,
    smoothing: f64,
    labels: &LatentLabels,
    initial: SparseDist,
) -> Result<LatentMdp, LatentError> {
    if n_actions == 0 {
        return Err(LatentError::InvalidParameter {
            name: "n_actions",
            value: 0.0,
            range: "at least 1",
        });
    }
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(LatentError::InvalidParameter {
            name: "smoothing",
            value: smoothing,
            range: "[0, inf)",
        });
    }
    let n_latent = phi.n_latent();
    let mut counts = vec![vec![0u64; n_latent]; n_latent * n_actions];
    let mut totals = vec![0u64; n_latent * n_actions];
    for &(s, a, s_next) in samples {
        if s >= phi.n_ground() || s_next >= phi.n_ground() {
            return Err(LatentError::DomainMismatch {
                detail: format!(
                    "sample ({s}, {a}, {s_next}) mentions a state outside the ground space"
                ),
            });
        }
        if a >= n_actions {
            return Err(LatentError::DomainMismatch {
                detail: format!("sample plays action {a}, but only {n_actions} actions exist"),
            });
        }
        let pair = phi.apply(s) * n_actions + a;
        counts[pair][phi.apply(s_next)] += 1;
        totals[pair] += 1;
    }

    let mut transitions = Vec::with_capacity(n_latent * n_actions);
    for l in 0..n_latent {
        for a in 0..n_actions {
            let pair = l * n_actions + a;
            if totals[pair] == 0 && smoothing == 0.0 {
                return Err(LatentError::UnseenPairWithoutSmoothing {
                    latent_state: l,
                    action: a,
                });
            }
            let denom = totals[pair] as f64 + smoothing * n_latent as f64;
            let entries: Vec<(usize, f64)> = (0..n_latent)
                .filter_map(|l_next| {
                    let mass = counts[pair][l_next] as f64 + smoothing;
                    (mass > 0.0).then(|| (l_next, mass / denom))
                })
                .collect();
            let row = SparseDist::new(entries).map_err(|e| LatentError::InvalidDistribution {
                detail: format!("estimated row for latent state {l}, action {a}: {e}"),
            })?;
            transitions.push((l, a, row));
        }
    }
    let mdp = Mdp::new(n_latent, n_actions, transitions, initial)?;
    LatentMdp::new(mdp, labels.reset, labels.targets.clone(), labels.bad.clone())
}
