use mdp_core::{SparseDist, StateId};

use crate::error::LatentError;
use crate::latent_mdp::LatentMdp;

/// Index of a latent state.
pub type LatentId = usize;

/// A total map from ground states to latent states.
///
/// The map is stored densely: entry `s` is the latent image of ground state
/// `s`, so totality holds by construction. Surjectivity is not required —
/// latent states may be unused.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    map: Vec<LatentId>,
    n_latent: usize,
}

impl Embedding {
    /// Builds an embedding of `map.len()` ground states into `n_latent`
    /// latent states. Every image must lie below `n_latent`.
    pub fn new(map: Vec<LatentId>, n_latent: usize) -> Result<Self, LatentError> {
        if map.is_empty() {
            return Err(LatentError::DomainMismatch {
                detail: "embedding must cover at least one ground state".to_string(),
            });
        }
        if n_latent == 0 {
            return Err(LatentError::DomainMismatch {
                detail: "embedding needs at least one latent state".to_string(),
            });
        }
        if let Some((s, &l)) = map.iter().enumerate().find(|&(_, &l)| l >= n_latent) {
            return Err(LatentError::DomainMismatch {
                detail: format!(
                    "ground state {s} maps to latent state {l}, but only {n_latent} latent states exist"
                ),
            });
        }
        Ok(Self { map, n_latent })
    }

    /// The latent image of ground state `s`.
    pub fn apply(&self, s: StateId) -> LatentId {
        self.map[s]
    }

    /// Number of ground states the embedding is defined on.
    pub fn n_ground(&self) -> usize {
        self.map.len()
    }

    /// Number of latent states.
    pub fn n_latent(&self) -> usize {
        self.n_latent
    }

    /// The dense ground-to-latent map.
    pub fn map(&self) -> &[LatentId] {
        &self.map
    }

    /// Pushes a distribution over ground states forward through the
    /// embedding, merging states that share an image.
    pub fn pushforward(&self, dist: &SparseDist) -> SparseDist {
        dist.map_indices(|s| self.map[s])
    }

    /// Checks that the embedding preserves the target and bad labels: a
    /// ground state is a target (resp. bad) exactly when its image is.
    pub fn check_labels(
        &self,
        ground_targets: &[StateId],
        ground_bad: &[StateId],
        latent: &LatentMdp,
    ) -> Result<(), LatentError> {
        if latent.n_states() != self.n_latent {
            return Err(LatentError::DomainMismatch {
                detail: format!(
                    "embedding has {} latent states, latent model has {}",
                    self.n_latent,
                    latent.n_states()
                ),
            });
        }
        let mut in_t = vec![false; self.map.len()];
        let mut in_b = vec![false; self.map.len()];
        for &s in ground_targets {
            if s >= self.map.len() {
                return Err(LatentError::DomainMismatch {
                    detail: format!("target state {s} is outside the ground space"),
                });
            }
            in_t[s] = true;
        }
        for &s in ground_bad {
            if s >= self.map.len() {
                return Err(LatentError::DomainMismatch {
                    detail: format!("bad state {s} is outside the ground space"),
                });
            }
            in_b[s] = true;
        }
        for (s, &l) in self.map.iter().enumerate() {
            if in_t[s] != latent.is_target(l) {
                return Err(LatentError::LabelMismatch {
                    state: s,
                    detail: format!(
                        "state is {}a target but its image {l} is {}one",
                        if in_t[s] { "" } else { "not " },
                        if latent.is_target(l) { "" } else { "not " },
                    ),
                });
            }
            if in_b[s] != latent.is_bad(l) {
                return Err(LatentError::LabelMismatch {
                    state: s,
                    detail: format!(
                        "state is {}bad but its image {l} is {}bad",
                        if in_b[s] { "" } else { "not " },
                        if latent.is_bad(l) { "" } else { "not " },
                    ),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_images() {
        let err = Embedding::new(vec![0, 2], 2).unwrap_err();
        assert!(matches!(err, LatentError::DomainMismatch { .. }));
    }

    #[test]
    fn pushforward_merges_collapsed_states() {
        let phi = Embedding::new(vec![0, 0, 1], 2).unwrap();
        let ground = SparseDist::new(vec![(0, 0.25), (1, 0.25), (2, 0.5)]).unwrap();
        let latent = phi.pushforward(&ground);
        assert_eq!(latent.entries(), &[(0, 0.5), (1, 0.5)]);
    }
}
