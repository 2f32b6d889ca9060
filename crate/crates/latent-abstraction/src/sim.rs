use mdp_core::{ActionId, InducedChain, Mdp, Policy, StateId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::LatentError;

/// Successive occupancy distributions must move by less than this (in L1)
/// for the chain to count as mixed.
pub const MIXING_STABILITY_TOL: f64 = 1e-3;

/// The burn-in is this many times the mixing proxy.
pub const BURN_IN_FACTOR: usize = 10;

/// Upper limit on the mixing-proxy search; chains that never stabilize
/// (periodic ones, say) get the cap as their proxy.
const MIXING_PROXY_CAP: usize = 100_000;

/// A source of `(state, action, successor)` transitions, assumed to come
/// from the stationary regime of a Markov chain.
pub trait SampleSource {
    fn next_triple(&mut self) -> Result<(StateId, ActionId, StateId), LatentError>;
}

/// Draws transitions from a single long trajectory of an MDP under a fixed
/// policy, after a burn-in long enough for the occupancy distribution to
/// stabilize. Consecutive transitions are returned without thinning — the
/// Hoeffding-style estimators downstream average over the trajectory, so a
/// long run suffices.
pub struct StationarySimulator<'a> {
    mdp: &'a Mdp,
    policy: &'a Policy,
    rng: ChaCha8Rng,
    state: StateId,
    burn_in: usize,
}

impl<'a> StationarySimulator<'a> {
    /// Validates the policy, measures a mixing proxy, and advances a fresh
    /// seeded trajectory past the burn-in.
    pub fn new(mdp: &'a Mdp, policy: &'a Policy, seed: u64) -> Result<Self, LatentError> {
        policy.validate_for(mdp)?;
        let burn_in = BURN_IN_FACTOR * mixing_proxy(mdp, policy)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = mdp.initial().sample(&mut rng);
        let mut sim = Self {
            mdp,
            policy,
            rng,
            state,
            burn_in,
        };
        for _ in 0..burn_in {
            sim.advance();
        }
        Ok(sim)
    }

    /// How many initial steps were discarded.
    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    fn advance(&mut self) -> (ActionId, StateId) {
        let a = self.policy.sample_action(self.state, &mut self.rng);
        let next = self
            .mdp
            .row(self.state, a)
            .expect("validated policy plays enabled actions")
            .sample(&mut self.rng);
        self.state = next;
        (a, next)
    }
}

impl SampleSource for StationarySimulator<'_> {
    fn next_triple(&mut self) -> Result<(StateId, ActionId, StateId), LatentError> {
        let s = self.state;
        let (a, next) = self.advance();
        Ok((s, a, next))
    }
}

/// Number of steps for the occupancy distribution, iterated from the
/// model's initial distribution, to stabilize within
/// [`MIXING_STABILITY_TOL`] in L1. Used as a crude mixing-time stand-in to
/// size the burn-in.
pub fn mixing_proxy(mdp: &Mdp, policy: &Policy) -> Result<usize, LatentError> {
    let chain = InducedChain::new(mdp, policy)?;
    let n = mdp.n_states();
    let mut x = vec![0.0; n];
    for &(s, p) in mdp.initial().entries() {
        x[s] = p;
    }
    let mut y = vec![0.0; n];
    for iteration in 1..=MIXING_PROXY_CAP {
        chain.step(&x, &mut y);
        let moved: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut y);
        if moved < MIXING_STABILITY_TOL {
            return Ok(iteration);
        }
    }
    Ok(MIXING_PROXY_CAP)
}
