//! Rolling out a two-level controller on the stitched model.
//!
//! Episodes walk the composite system directly — a room state paired with
//! the current vertex — without materializing the stitched MDP. Inside a
//! room the committed policy steers; the moment an exit state is reached
//! the crossing through that exit's door is forced, the Mealy planner
//! observes which crossing actually happened (a slip through the wrong
//! door crosses like any other) and re-commits, and the walk resumes from
//! the entered room's entrance distribution.
//!
//! An episode succeeds the moment it enters a target vertex — including at
//! time zero, and regardless of where the entrance drops it. It fails when
//! it lands on a bad state or on the room's reset state (the composite
//! system treats a reset as an absorbing failure), or when the step budget
//! runs out. The discounted statistic is `gamma^t` at the first target
//! entry and 0 otherwise, counting in-room steps and crossings alike.
//!
//! Every episode draws from its own counter-mode RNG stream derived from
//! the seed, so statistics are reproducible and independent of how episodes
//! are scheduled: with the `parallel` feature the episodes run on the rayon
//! pool and the results are reduced in episode order, bitwise identical to
//! the sequential path.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use two_level_model::{ModelError, Room, TwoLevelModel, VertexId};

use crate::catalog::{RoomPolicies, TwoLevelController};
use crate::error::SynthesisError;

/// Aggregate statistics over a batch of controller rollouts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutStats {
    pub episodes: usize,
    /// Episodes that entered a target vertex within the step budget.
    pub successes: usize,
    pub success_rate: f64,
    /// Mean of `gamma^t` at first target entry (0 for failed episodes).
    pub mean_discounted: f64,
    /// Standard error of `mean_discounted` (sample standard deviation over
    /// the square root of the episode count).
    pub std_error: f64,
    /// Mean episode length in steps, terminal episodes and timeouts alike.
    pub mean_steps: f64,
    /// Total number of times each vertex was entered, across all episodes;
    /// the starting vertex counts once per episode.
    pub visit_counts: Vec<u64>,
    pub horizon: usize,
    pub seed: u64,
}

struct Episode {
    success: bool,
    discounted: f64,
    steps: u64,
    visits: Vec<u64>,
}

enum Arrival {
    Success,
    Failure,
    Continue,
}

/// Classifies the state just arrived at. Target vertices win outright —
/// entering one succeeds even on a bad or reset entrance state, matching
/// the composite objective's tie-break.
fn arrival(h: &TwoLevelModel, room: &Room, v: VertexId, s: usize) -> Arrival {
    if h.is_target(v) {
        Arrival::Success
    } else if room.is_bad(s) || s == room.reset() {
        Arrival::Failure
    } else {
        Arrival::Continue
    }
}

fn run_episode(
    h: &TwoLevelModel,
    ctrl: &TwoLevelController,
    policies: &RoomPolicies,
    gamma: f64,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Episode, SynthesisError> {
    let mut visits = vec![0u64; h.map().n_vertices()];
    let mut v = h.v0();
    let mut q = ctrl.planner.q0();
    let mut commitment = ctrl.planner.commit(v, q);
    let mut room = h.room_of(v);
    let mut s = h.initial_entrance()?.sample(rng);
    let mut steps: u64 = 0;
    let mut discount = 1.0;
    visits[v] += 1;

    match arrival(h, room, v, s) {
        Arrival::Success => {
            return Ok(Episode {
                success: true,
                discounted: 1.0,
                steps,
                visits,
            })
        }
        Arrival::Failure => {
            return Ok(Episode {
                success: false,
                discounted: 0.0,
                steps,
                visits,
            })
        }
        Arrival::Continue => {}
    }

    while (steps as usize) < horizon {
        if let Some(dir) = room.exit_direction_of(s) {
            // Exit states have exactly one behavior: cross through their
            // own door. The planner watches the crossing and re-commits.
            let (_, u) = h.half_edge_for(v, dir).ok_or_else(|| {
                SynthesisError::Model(ModelError::InvalidModel {
                    detail: format!(
                        "vertex {} has no door for direction {}",
                        h.map().name(v),
                        room.direction_name(dir)
                    ),
                })
            })?;
            let entrance = h.entrance_for_crossing(v, u)?;
            q = ctrl.planner.observe(v, q, u).ok_or_else(|| {
                SynthesisError::PlannerInvariant {
                    detail: format!(
                        "planner does not recognize the crossing ({}, {})",
                        h.map().name(v),
                        h.map().name(u)
                    ),
                }
            })?;
            v = u;
            room = h.room_of(v);
            s = entrance.sample(rng);
            commitment = ctrl.planner.commit(v, q);
            visits[v] += 1;
        } else {
            let r = h.room_id_of(v);
            let dir = h.direction_at(v, commitment.1).ok_or_else(|| {
                SynthesisError::PlannerInvariant {
                    detail: format!(
                        "commitment ({}, {}) does not leave vertex {}",
                        h.map().name(commitment.0),
                        h.map().name(commitment.1),
                        h.map().name(v)
                    ),
                }
            })?;
            let policy =
                policies.require(r, dir, h.room_name(r), room.direction_name(dir))?;
            let a = policy.sample_action(s, rng);
            let row = room.row(s, a).ok_or_else(|| SynthesisError::CatalogMismatch {
                detail: format!(
                    "policy for room {}, direction {} plays disabled action {a} at state {s}",
                    h.room_name(r),
                    room.direction_name(dir)
                ),
            })?;
            s = row.sample(rng);
        }
        steps += 1;
        discount *= gamma;
        match arrival(h, room, v, s) {
            Arrival::Success => {
                return Ok(Episode {
                    success: true,
                    discounted: discount,
                    steps,
                    visits,
                })
            }
            Arrival::Failure => {
                return Ok(Episode {
                    success: false,
                    discounted: 0.0,
                    steps,
                    visits,
                })
            }
            Arrival::Continue => {}
        }
    }
    Ok(Episode {
        success: false,
        discounted: 0.0,
        steps,
        visits,
    })
}

/// Runs `episodes` independent rollouts of the controller on the composite
/// system and aggregates them.
///
/// Episode `i` draws from stream `i` of a counter-mode generator seeded
/// with `seed`, so results are a pure function of `(h, ctrl, gamma, seed,
/// episodes, horizon)` and identical whether episodes run sequentially or
/// on the rayon pool. `horizon` caps the number of steps per episode; an
/// episode that has not entered a target vertex by then counts as a
/// failure with `horizon` steps.
pub fn execute_controller(
    h: &TwoLevelModel,
    ctrl: &TwoLevelController,
    gamma: f64,
    seed: u64,
    episodes: usize,
    horizon: usize,
) -> Result<RolloutStats, SynthesisError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(SynthesisError::CatalogMismatch {
            detail: format!("discount {gamma} must lie strictly inside (0, 1)"),
        });
    }
    ctrl.validate(h)?;
    let policies = ctrl.lifted_policies(h)?;

    let run = |ep: usize| -> Result<Episode, SynthesisError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ep as u64);
        run_episode(h, ctrl, &policies, gamma, horizon, &mut rng)
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Episode> = (0..episodes)
        .into_par_iter()
        .map(run)
        .collect::<Result<_, _>>()?;
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Episode> = (0..episodes).map(run).collect::<Result<_, _>>()?;

    let mut successes = 0usize;
    let mut sum_discounted = 0.0;
    let mut sum_steps = 0u64;
    let mut visit_counts = vec![0u64; h.map().n_vertices()];
    for ep in &outcomes {
        successes += ep.success as usize;
        sum_discounted += ep.discounted;
        sum_steps += ep.steps;
        for (total, &n) in visit_counts.iter_mut().zip(&ep.visits) {
            *total += n;
        }
    }
    let n = episodes as f64;
    let mean_discounted = if episodes > 0 { sum_discounted / n } else { 0.0 };
    let std_error = if episodes > 1 {
        let ss: f64 = outcomes
            .iter()
            .map(|ep| (ep.discounted - mean_discounted).powi(2))
            .sum();
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok(RolloutStats {
        episodes,
        successes,
        success_rate: if episodes > 0 { successes as f64 / n } else { 0.0 },
        mean_discounted,
        std_error,
        mean_steps: if episodes > 0 { sum_steps as f64 / n } else { 0.0 },
        visit_counts,
        horizon,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{build_mdp_plan, plan_value};
    use crate::planner::{plan_policy_to_planner, planner_to_plan_policy};
    use crate::test_fixtures::{forward_catalog, two_room_model};
    use mdp_core::{Policy, SparseDist};
    use two_level_model::MapGraph;

    const GAMMA: f64 = 0.9;

    fn corridor_controller(h: &TwoLevelModel) -> TwoLevelController {
        let catalog = forward_catalog(h);
        let plan = build_mdp_plan(h, &catalog).unwrap();
        let policy = Policy::Deterministic(vec![2, 1, 2, 2, 0, 2, 2, 2]);
        let planner = plan_policy_to_planner(&plan, h, &policy).unwrap();
        let rooms: Vec<Room> = (0..h.n_rooms()).map(|r| h.room(r).clone()).collect();
        TwoLevelController::ground(planner, catalog, &rooms).unwrap()
    }

    #[test]
    fn deterministic_corridor_succeeds_every_episode() {
        let h = two_room_model();
        let ctrl = corridor_controller(&h);
        let stats = execute_controller(&h, &ctrl, GAMMA, 7, 200, 50).unwrap();
        assert_eq!(stats.episodes, 200);
        assert_eq!(stats.successes, 200);
        assert_eq!(stats.success_rate, 1.0);
        // Two steps per episode: one in-room move onto the exit, one
        // crossing into the target room.
        assert!((stats.mean_discounted - GAMMA * GAMMA).abs() < 1e-13);
        // Identical outcomes: any spread is float accumulation in the mean.
        assert!(stats.std_error < 1e-13);
        assert_eq!(stats.mean_steps, 2.0);
        assert_eq!(stats.visit_counts, vec![200, 200]);
    }

    #[test]
    fn a_too_short_step_budget_fails_the_episode() {
        let h = two_room_model();
        let ctrl = corridor_controller(&h);
        let stats = execute_controller(&h, &ctrl, GAMMA, 7, 10, 1).unwrap();
        assert_eq!(stats.successes, 0);
        assert_eq!(stats.mean_discounted, 0.0);
        assert_eq!(stats.mean_steps, 1.0);
        assert_eq!(stats.visit_counts, vec![10, 0]);
    }

    #[test]
    fn identical_seeds_reproduce_statistics_exactly() {
        let h = leaky_model();
        let ctrl = leaky_controller(&h);
        let a = execute_controller(&h, &ctrl, GAMMA, 42, 500, 200).unwrap();
        let b = execute_controller(&h, &ctrl, GAMMA, 42, 500, 200).unwrap();
        assert_eq!(a, b);
        let c = execute_controller(&h, &ctrl, GAMMA, 43, 500, 200).unwrap();
        assert_ne!(a.mean_discounted, c.mean_discounted);
    }

    #[test]
    fn starting_on_a_target_vertex_succeeds_immediately() {
        let map = MapGraph::new(vec!["a".into(), "b".into()], vec![(0, 1)]).unwrap();
        let room = crate::test_fixtures::corridor_room();
        let h = TwoLevelModel::new(
            map,
            vec![("corridor".into(), room)],
            vec![0, 0],
            vec![vec![0], vec![0]],
            0,
            (0, 1),
            (0, 1),
            vec![0, 1],
        )
        .unwrap();
        let ctrl = corridor_controller(&h);
        let stats = execute_controller(&h, &ctrl, GAMMA, 3, 50, 10).unwrap();
        assert_eq!(stats.success_rate, 1.0);
        assert_eq!(stats.mean_discounted, 1.0);
        assert_eq!(stats.mean_steps, 0.0);
        assert_eq!(stats.visit_counts, vec![50, 0]);
    }

    /// A stochastic room: state 0 loops, exits, or falls to the reset.
    fn leaky_room(stay: f64, leak: f64) -> Room {
        Room::new(
            3,
            1,
            vec![
                (
                    0,
                    0,
                    SparseDist::new(vec![(0, stay), (1, 1.0 - stay - leak), (2, leak)]).unwrap(),
                ),
                (1, 0, SparseDist::dirac(0)),
                (2, 0, SparseDist::dirac(0)),
            ],
            vec!["door".into()],
            vec![(0, SparseDist::dirac(0))],
            vec![(0, vec![1])],
            vec![],
            2,
        )
        .unwrap()
    }

    fn leaky_model() -> TwoLevelModel {
        let map = MapGraph::new(vec!["start".into(), "goal".into()], vec![(0, 1)]).unwrap();
        TwoLevelModel::new(
            map,
            vec![
                ("a".into(), leaky_room(0.3, 0.2)),
                ("b".into(), leaky_room(0.4, 0.1)),
            ],
            vec![0, 1],
            vec![vec![0], vec![0]],
            0,
            (0, 1),
            (0, 1),
            vec![1],
        )
        .unwrap()
    }

    fn leaky_controller(h: &TwoLevelModel) -> TwoLevelController {
        let mut catalog = RoomPolicies::new();
        catalog.insert(0, 0, Policy::Deterministic(vec![0; 3]));
        catalog.insert(1, 0, Policy::Deterministic(vec![0; 3]));
        let plan = build_mdp_plan(h, &catalog).unwrap();
        let policy = Policy::Deterministic(vec![2, 1, 2, 2, 0, 2, 2, 2]);
        let planner = plan_policy_to_planner(&plan, h, &policy).unwrap();
        let rooms: Vec<Room> = (0..h.n_rooms()).map(|r| h.room(r).clone()).collect();
        TwoLevelController::ground(planner, catalog, &rooms).unwrap()
    }

    #[test]
    fn rollout_mean_matches_the_exact_value_within_three_standard_errors() {
        let h = leaky_model();
        let ctrl = leaky_controller(&h);
        let catalog = ctrl.lifted_policies(&h).unwrap();
        let plan = build_mdp_plan(&h, &catalog).unwrap();
        let expanded = planner_to_plan_policy(&ctrl.planner, &plan).unwrap();
        let exact = plan_value(&plan, &expanded, GAMMA, 1e-12).unwrap();

        let stats = execute_controller(&h, &ctrl, GAMMA, 2024, 10_000, 2_000).unwrap();
        assert!(stats.successes > 0 && stats.successes < stats.episodes);
        assert!(stats.std_error > 0.0);
        assert!(
            (stats.mean_discounted - exact).abs() <= 3.0 * stats.std_error,
            "empirical mean {} is more than 3 standard errors ({}) from the exact value {}",
            stats.mean_discounted,
            stats.std_error,
            exact
        );
    }

    #[test]
    fn rollouts_reject_a_degenerate_discount() {
        let h = two_room_model();
        let ctrl = corridor_controller(&h);
        assert!(execute_controller(&h, &ctrl, 1.0, 0, 1, 1).is_err());
        assert!(execute_controller(&h, &ctrl, 0.0, 0, 1, 1).is_err());
    }
}
