//! Lifting per-room abstraction certificates to a value bound on the
//! stitched model.
//!
//! Each (room, direction) policy is certified on its *training room*: the
//! room run episodically from a chosen initial distribution, restarting
//! whenever an exit of the target direction is hit. Inside the stitched
//! model the same policy sees a different state distribution, because rooms
//! are entered through whatever doors the planner routes traffic through
//! rather than the training initial distribution. This module quantifies
//! that shift and combines the per-room transition losses with the
//! entrance-function loss into a single bound on the gap between the
//! stitched model's value and the value the latent succinct model predicts.
//!
//! The ingredients, all computed exactly from stationary distributions:
//!
//! * the *plan-induced entrance* of each vertex — the stationary mixture of
//!   door entrances weighted by how much mass actually crosses in;
//! * a per-room *concentration constant* comparing the training entrance
//!   with the plan-induced one, either in closed form (a worst-case entrance
//!   ratio raised to the room size) or as an exact stationary-mass ratio;
//! * the per-room *continue mass* — how much of the room's episodic
//!   stationary measure is not spent restarting — whose worst case
//!   rescales the per-room losses;
//! * the stitched chain's reset mass and the discount, which convert the
//!   accumulated transition loss into a value gap.

use std::collections::BTreeMap;

use latent_abstraction::{lift_policy, transition_loss_exact, Embedding, LatentMdp};
use mdp_core::{stationary_distribution, Mdp, Policy, SparseDist};
use two_level_model::{DirectionId, HalfEdge, ModelError, Room, RoomId, TwoLevelModel, VertexId};

use crate::catalog::RoomPolicies;
use crate::error::SynthesisError;
use crate::plan::{MdpPlan, PlanStateKind};

/// The episodic MDP a (room, direction) policy runs on when the room is
/// taken by itself: the raw room dynamics, except that every exit state of
/// the target direction jumps to the reset state and the reset state
/// restarts from `reset_row`. The initial distribution is `reset_row` too,
/// so the chain starts where every episode starts.
///
/// Passing the training initial distribution gives the room as certified;
/// passing a plan-induced entrance gives the room as the stitched model
/// actually enters it.
pub fn training_room_mdp(
    room: &Room,
    direction: DirectionId,
    reset_row: &SparseDist,
) -> Result<Mdp, SynthesisError> {
    if direction >= room.n_directions() {
        return Err(SynthesisError::CatalogMismatch {
            detail: format!(
                "direction {direction} out of range for a room with {} directions",
                room.n_directions()
            ),
        });
    }
    if reset_row.max_index() >= room.n_states() {
        return Err(SynthesisError::CatalogMismatch {
            detail: format!(
                "restart distribution reaches state {} but the room has {} states",
                reset_row.max_index(),
                room.n_states()
            ),
        });
    }
    let reset = room.reset();
    let mut transitions = Vec::new();
    for s in 0..room.n_states() {
        let surgery = if s == reset {
            Some(reset_row.clone())
        } else if room.exit_direction_of(s) == Some(direction) {
            Some(SparseDist::dirac(reset))
        } else {
            None
        };
        for (a, dist) in room.enabled_rows(s) {
            transitions.push((s, *a, surgery.clone().unwrap_or_else(|| dist.clone())));
        }
    }
    Ok(Mdp::new(
        room.n_states(),
        room.n_actions(),
        transitions,
        reset_row.clone(),
    )?)
}

/// Raw stationary mass entering each vertex, split by door: committed exit
/// states about to cross in, plus the shared reset's restart counted as an
/// entry into the start vertex through the initial door.
struct EntryWeights {
    by_door: Vec<BTreeMap<DirectionId, f64>>,
    reset_mass: f64,
}

fn entry_weights(
    h: &TwoLevelModel,
    plan: &MdpPlan,
    xi: &[f64],
) -> Result<EntryWeights, SynthesisError> {
    if xi.len() != plan.n_states() {
        return Err(SynthesisError::CatalogMismatch {
            detail: format!(
                "stationary distribution covers {} states, plan has {}",
                xi.len(),
                plan.n_states()
            ),
        });
    }
    let edges = plan.edges();
    let mut by_door: Vec<BTreeMap<DirectionId, f64>> =
        vec![BTreeMap::new(); h.map().n_vertices()];
    for i in 0..edges.n() {
        let (v, u) = edges.edge(i);
        let mass: f64 = plan
            .block_range(i)
            .filter(|&x| plan.kind(x) == PlanStateKind::CommittedExit)
            .map(|x| xi[x])
            .sum();
        if mass > 0.0 {
            let door = h.direction_at(u, v).ok_or_else(|| {
                SynthesisError::Model(ModelError::InvalidModel {
                    detail: format!(
                        "({}, {}) indexes a block but is not an edge of the map",
                        h.map().name(v),
                        h.map().name(u)
                    ),
                })
            })?;
            *by_door[u].entry(door).or_insert(0.0) += mass;
        }
    }
    let reset_mass = xi[plan.reset_state()];
    if reset_mass > 0.0 {
        let (v, w) = h.d0();
        let door = h.direction_at(v, w).ok_or_else(|| {
            SynthesisError::Model(ModelError::InitialDirectionInvalid {
                which: "d0".to_string(),
                detail: format!(
                    "({}, {}) is not an edge of the map",
                    h.map().name(v),
                    h.map().name(w)
                ),
            })
        })?;
        *by_door[v].entry(door).or_insert(0.0) += reset_mass;
    }
    Ok(EntryWeights {
        by_door,
        reset_mass,
    })
}

/// The plan-induced entrance of every vertex: the stationary mixture of the
/// room's door entrances, weighted by the mass entering through each door.
/// Vertices the stitched chain never enters map to `None`.
pub fn plan_entrances(
    h: &TwoLevelModel,
    plan: &MdpPlan,
    xi: &[f64],
) -> Result<Vec<Option<SparseDist>>, SynthesisError> {
    let weights = entry_weights(h, plan, xi)?;
    let mut out = Vec::with_capacity(h.map().n_vertices());
    for (v, doors) in weights.by_door.iter().enumerate() {
        let total: f64 = doors.values().sum();
        if total <= 0.0 {
            out.push(None);
            continue;
        }
        let room = h.room_of(v);
        let mut buf = vec![0.0; room.n_states()];
        for (&door, &w) in doors {
            let entrance = room.entrance(door).ok_or_else(|| {
                SynthesisError::Model(ModelError::MissingEntrance {
                    vertex: h.map().name(v).to_string(),
                    direction: room.direction_name(door).to_string(),
                })
            })?;
            for &(s, p) in entrance.entries() {
                buf[s] += w / total * p;
            }
        }
        let entries: Vec<(usize, f64)> = buf
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
            .collect();
        let mixture = SparseDist::new(entries).map_err(|e| SynthesisError::CatalogMismatch {
            detail: format!("entry mixture for vertex {}: {e}", h.map().name(v)),
        })?;
        out.push(Some(mixture));
    }
    Ok(out)
}

/// One (vertex, door) term of the entrance loss.
#[derive(Clone, Debug)]
pub struct EntranceTerm {
    pub vertex: VertexId,
    pub door: DirectionId,
    /// Raw stationary mass entering through this door.
    pub weight: f64,
    /// Total variation between the embedded ground entrance and the latent
    /// entrance for this door.
    pub divergence: f64,
}

/// The entrance loss and its per-door breakdown.
#[derive(Clone, Debug)]
pub struct EntranceLossReport {
    /// Stationary expectation of the per-crossing divergence.
    pub loss: f64,
    pub terms: Vec<EntranceTerm>,
}

/// How far the latent entrance functions are from where the doors actually
/// drop the agent: for every (vertex, door) the stitched chain crosses, the
/// total variation between the ground entrance pushed through the room's
/// embedding and the latent entrance, weighted by the raw stationary mass
/// of the crossing (committed exits about to cross, plus the shared reset
/// mass for the initial door). The weights are not renormalized, so the
/// result is the exact stationary expectation of the divergence.
///
/// `embeddings` and `latent_rooms` are indexed by room id; the latent
/// room's entrance table is the latent entrance function.
pub fn entrance_loss(
    h: &TwoLevelModel,
    plan: &MdpPlan,
    xi: &[f64],
    embeddings: &[Embedding],
    latent_rooms: &[Room],
) -> Result<EntranceLossReport, SynthesisError> {
    if embeddings.len() != h.n_rooms() || latent_rooms.len() != h.n_rooms() {
        return Err(SynthesisError::CatalogMismatch {
            detail: format!(
                "expected one embedding and one latent room per room id ({} rooms, \
                 {} embeddings, {} latent rooms)",
                h.n_rooms(),
                embeddings.len(),
                latent_rooms.len()
            ),
        });
    }
    let weights = entry_weights(h, plan, xi)?;
    let mut loss = 0.0;
    let mut terms = Vec::new();
    for (v, doors) in weights.by_door.iter().enumerate() {
        let r = h.room_id_of(v);
        let room = h.room(r);
        let phi = &embeddings[r];
        let latent = &latent_rooms[r];
        if phi.n_ground() != room.n_states() || phi.n_latent() != latent.n_states() {
            return Err(SynthesisError::CatalogMismatch {
                detail: format!(
                    "embedding for room {} maps {} -> {} states, but the rooms have {} and {}",
                    h.room_name(r),
                    phi.n_ground(),
                    phi.n_latent(),
                    room.n_states(),
                    latent.n_states()
                ),
            });
        }
        for (&door, &weight) in doors {
            let ground = room.entrance(door).ok_or_else(|| {
                SynthesisError::Model(ModelError::MissingEntrance {
                    vertex: h.map().name(v).to_string(),
                    direction: room.direction_name(door).to_string(),
                })
            })?;
            let latent_entrance = latent.entrance(door).ok_or_else(|| {
                SynthesisError::CatalogMismatch {
                    detail: format!(
                        "latent room {} has no entrance for direction {}",
                        h.room_name(r),
                        room.direction_name(door)
                    ),
                }
            })?;
            let divergence = phi.pushforward(ground).total_variation(latent_entrance);
            loss += weight * divergence;
            terms.push(EntranceTerm {
                vertex: v,
                door,
                weight,
                divergence,
            });
        }
    }
    Ok(EntranceLossReport { loss, terms })
}

/// The exact transition loss of one (room, direction) abstraction on its
/// training room: the stationary expectation, over the training room run
/// under the lifted policy, of the total variation between the embedded
/// ground row and the latent row.
///
/// Both rooms get the same episodic surgery (exits of `direction` jump to
/// the reset, the reset restarts from the given initial distribution), so
/// states whose behavior the stitching overrides compare like for like:
/// their rows agree exactly whenever the embedding maps exits to exits and
/// `latent_init` is the image of `training_init`.
pub fn room_transition_loss_exact(
    room: &Room,
    latent_room: &Room,
    phi: &Embedding,
    direction: DirectionId,
    training_init: &SparseDist,
    latent_init: &SparseDist,
    latent_policy: &Policy,
    tol: f64,
) -> Result<f64, SynthesisError> {
    if phi.n_ground() != room.n_states() || phi.n_latent() != latent_room.n_states() {
        return Err(SynthesisError::CatalogMismatch {
            detail: format!(
                "embedding maps {} -> {} states, but the rooms have {} and {}",
                phi.n_ground(),
                phi.n_latent(),
                room.n_states(),
                latent_room.n_states()
            ),
        });
    }
    if phi.apply(room.reset()) != latent_room.reset() {
        return Err(SynthesisError::CatalogMismatch {
            detail: format!(
                "embedding maps the reset state {} to {}, not to the latent reset {}",
                room.reset(),
                phi.apply(room.reset()),
                latent_room.reset()
            ),
        });
    }
    for &s in room.exit_states(direction) {
        if latent_room.exit_direction_of(phi.apply(s)) != Some(direction) {
            return Err(SynthesisError::CatalogMismatch {
                detail: format!(
                    "exit state {s} maps to latent state {}, which is not an exit \
                     of direction {direction}",
                    phi.apply(s)
                ),
            });
        }
    }
    let ground = training_room_mdp(room, direction, training_init)?;
    let latent_mdp = training_room_mdp(latent_room, direction, latent_init)?;
    let latent =
        LatentMdp::new(latent_mdp, latent_room.reset(), vec![], vec![]).map_err(|e| {
            SynthesisError::CatalogMismatch {
                detail: format!("latent training room: {e}"),
            }
        })?;
    let lifted = lift_policy(phi, latent_policy).map_err(|e| SynthesisError::CatalogMismatch {
        detail: format!("lifting the room policy: {e}"),
    })?;
    let xi = stationary_distribution(&ground, &lifted, tol)?;
    transition_loss_exact(&ground, &latent, phi, latent_policy, &xi).map_err(|e| {
        SynthesisError::CatalogMismatch {
            detail: format!("transition loss: {e}"),
        }
    })
}

/// How the per-room concentration constants are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KappaMode {
    /// Closed form when the training and plan-induced entrances share a
    /// support; exact stationary-mass ratio otherwise.
    ExactWithFallback,
    /// Closed form only: entrances with different supports are an error.
    ClosedFormOnly,
}

/// Diagnostics for one half-edge the stitched chain actually visits.
#[derive(Clone, Debug)]
pub struct PairReport {
    pub edge: HalfEdge,
    pub room: RoomId,
    pub direction: DirectionId,
    /// Raw stationary mass of the half-edge's block.
    pub weight: f64,
    /// Certified transition loss for this (room, direction).
    pub loss: f64,
    /// Concentration constant for this pair.
    pub kappa: f64,
    /// Whether `kappa` is the closed-form constant rather than the exact
    /// stationary-mass ratio.
    pub closed_form: bool,
    /// Stationary mass the room-by-itself chain spends restarting when
    /// entered the way the plan enters it; the continue mass is one minus
    /// this.
    pub individual_reset_mass: f64,
}

/// The lifted certificate: a bound on the absolute gap between the stitched
/// model's value and the latent prediction, with the constants that built it.
#[derive(Clone, Debug)]
pub struct LiftedBound {
    pub bound: f64,
    /// Worst-case concentration constant over the visited pairs.
    pub kappa: f64,
    /// Worst-case continue mass over the visited pairs.
    pub xi_continue_min: f64,
    /// Stationary mass of the shared reset.
    pub reset_mass: f64,
    /// Entrance loss fed into the bound.
    pub entrance_loss: f64,
    /// Stationary expectation of the per-room losses under the raw block
    /// weights.
    pub expected_transition_loss: f64,
    /// True when the bound says nothing: it exceeds the trivial gap of 1,
    /// or is infinite because the chain never resets or some room may never
    /// hand control back.
    pub vacuous: bool,
    pub pairs: Vec<PairReport>,
}

/// Combines per-room certificates into a bound on the value gap of the
/// stitched model.
///
/// `xi` is the stationary distribution of the plan under the expanded
/// planner policy. `policies` are the committed room policies *over room
/// states* — compose latent policies with their embeddings first (see
/// [`crate::TwoLevelController::lifted_policies`]). `training_inits` gives,
/// per room id, the initial distribution the room was certified from, and
/// `room_losses` the certified transition loss per (room, direction).
/// `entrance_loss` is the output of [`entrance_loss`] (or an upper bound on
/// it).
///
/// For every half-edge block carrying stationary mass, the room's episodic
/// chain is solved twice — once from the training initial distribution,
/// once from the plan-induced entrance — to check that the plan only visits
/// states the certificate covers and to compute the pair's concentration
/// constant and continue mass. The bound is
///
/// ```text
/// (entrance_loss + kappa / xi_continue_min * sum_i weight_i * loss_i)
///   / (reset_mass * (1 - gamma))
/// ```
///
/// and is infinite when the chain never resets, or when some room may stop
/// handing control back (`xi_continue_min <= 0`) while losses are positive.
#[allow(clippy::too_many_arguments)]
pub fn lifted_bound(
    h: &TwoLevelModel,
    plan: &MdpPlan,
    xi: &[f64],
    policies: &RoomPolicies,
    training_inits: &[SparseDist],
    room_losses: &BTreeMap<(RoomId, DirectionId), f64>,
    entrance_loss: f64,
    gamma: f64,
    tol: f64,
    mode: KappaMode,
) -> Result<LiftedBound, SynthesisError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(SynthesisError::CatalogMismatch {
            detail: format!("discount {gamma} must lie strictly inside (0, 1)"),
        });
    }
    if !(entrance_loss >= 0.0) || !entrance_loss.is_finite() {
        return Err(SynthesisError::CatalogMismatch {
            detail: format!("entrance loss {entrance_loss} must be finite and nonnegative"),
        });
    }
    if training_inits.len() != h.n_rooms() {
        return Err(SynthesisError::CatalogMismatch {
            detail: format!(
                "expected one training initial distribution per room id \
                 ({} rooms, {} given)",
                h.n_rooms(),
                training_inits.len()
            ),
        });
    }
    let entrances = plan_entrances(h, plan, xi)?;
    let edges = plan.edges();
    let mut training_stationary: BTreeMap<(RoomId, DirectionId), Vec<f64>> = BTreeMap::new();
    let mut pairs = Vec::new();
    for i in 0..edges.n() {
        let weight: f64 = plan.block_range(i).map(|x| xi[x]).sum();
        if weight <= 0.0 {
            continue;
        }
        let (v, u) = edges.edge(i);
        let r = h.room_id_of(v);
        let room = h.room(r);
        let direction = h
            .direction_at(v, u)
            .expect("blocks are indexed by edges of the map");
        let room_label = h.room_name(r);
        let direction_label = room.direction_name(direction);
        let policy = policies.require(r, direction, room_label, direction_label)?;
        let &loss = room_losses.get(&(r, direction)).ok_or_else(|| {
            SynthesisError::CatalogMismatch {
                detail: format!(
                    "no transition loss for room {room_label}, direction {direction_label}"
                ),
            }
        })?;
        if !(loss >= 0.0) || !loss.is_finite() {
            return Err(SynthesisError::CatalogMismatch {
                detail: format!(
                    "transition loss {loss} for room {room_label}, direction \
                     {direction_label} must be finite and nonnegative"
                ),
            });
        }
        let training_init = &training_inits[r];
        if !training_stationary.contains_key(&(r, direction)) {
            let training = training_room_mdp(room, direction, training_init)?;
            training_stationary.insert(
                (r, direction),
                stationary_distribution(&training, policy, tol)?,
            );
        }
        let xi_training = &training_stationary[&(r, direction)];
        let entered = entrances[v].as_ref().ok_or_else(|| {
            SynthesisError::CatalogMismatch {
                detail: format!(
                    "vertex {} carries stationary mass but receives no entry mass",
                    h.map().name(v)
                ),
            }
        })?;
        let individual = training_room_mdp(room, direction, entered)?;
        let xi_individual = stationary_distribution(&individual, policy, tol)?;

        // The certificate only speaks for states the training chain
        // recurs on: everything the stitched chain visits in this block,
        // and everything the room-by-itself chain visits, must lie in the
        // training chain's recurrent class.
        let start = plan.block_range(i).start;
        for x in plan.block_range(i) {
            if xi[x] > 0.0 && xi_training[x - start] <= 0.0 {
                return Err(SynthesisError::BsccConditionViolated {
                    room: room_label.to_string(),
                    direction: direction_label.to_string(),
                    state: x - start,
                });
            }
        }
        for (s, &mass) in xi_individual.iter().enumerate() {
            if mass > 0.0 && xi_training[s] <= 0.0 {
                return Err(SynthesisError::BsccConditionViolated {
                    room: room_label.to_string(),
                    direction: direction_label.to_string(),
                    state: s,
                });
            }
        }

        let same_support = training_init.entries().len() == entered.entries().len()
            && training_init
                .support()
                .zip(entered.support())
                .all(|(a, b)| a == b);
        let (kappa, closed_form) = if same_support {
            let mut ratio = 1.0f64;
            for &(s, p) in training_init.entries() {
                let q = entered.prob(s);
                ratio = ratio.max((q / p).max(p / q));
            }
            (ratio.powi(room.n_states() as i32), true)
        } else {
            match mode {
                KappaMode::ClosedFormOnly => {
                    return Err(SynthesisError::SupportMismatch {
                        room: room_label.to_string(),
                    });
                }
                KappaMode::ExactWithFallback => {
                    let mut ratio = 0.0f64;
                    for (s, &mass) in xi_training.iter().enumerate() {
                        if mass > 0.0 {
                            ratio = ratio.max(xi_individual[s] / mass);
                        }
                    }
                    (ratio, false)
                }
            }
        };
        pairs.push(PairReport {
            edge: (v, u),
            room: r,
            direction,
            weight,
            loss,
            kappa,
            closed_form,
            individual_reset_mass: xi_individual[room.reset()],
        });
    }

    let kappa = pairs.iter().map(|p| p.kappa).fold(1.0f64, f64::max);
    let worst_stop = pairs
        .iter()
        .map(|p| p.individual_reset_mass)
        .fold(0.0f64, f64::max);
    let xi_continue_min = 1.0 - worst_stop;
    let expected_transition_loss: f64 = pairs.iter().map(|p| p.weight * p.loss).sum();
    let reset_mass = xi[plan.reset_state()];

    let numerator = if expected_transition_loss == 0.0 {
        entrance_loss
    } else if xi_continue_min > 0.0 {
        entrance_loss + kappa / xi_continue_min * expected_transition_loss
    } else {
        f64::INFINITY
    };
    let bound = if reset_mass > 0.0 {
        numerator / (reset_mass * (1.0 - gamma))
    } else {
        f64::INFINITY
    };
    let vacuous = !(bound <= 1.0);
    Ok(LiftedBound {
        bound,
        kappa,
        xi_continue_min,
        reset_mass,
        entrance_loss,
        expected_transition_loss,
        vacuous,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::RoomPolicies;
    use crate::oracle::CatalogOracle;
    use crate::plan::{build_mdp_plan, plan_value};
    use crate::planner::plan_policy_to_planner;
    use crate::solve::evaluate_planner;
    use crate::succinct::build_succinct;
    use mdp_core::Policy;
    use two_level_model::MapGraph;

    const GAMMA: f64 = 0.9;
    const TOL: f64 = 1e-12;

    /// A 3-state room with one door: state 0 loops with probability `stay`,
    /// exits with the remainder, and falls to the reset with probability
    /// `leak`. State 1 is the door-0 exit, state 2 the reset.
    fn leaky_room(stay: f64, leak: f64) -> Room {
        let exit = 1.0 - stay - leak;
        let mut row = vec![(1, exit)];
        if stay > 0.0 {
            row.push((0, stay));
        }
        if leak > 0.0 {
            row.push((2, leak));
        }
        Room::new(
            3,
            1,
            vec![
                (0, 0, SparseDist::new(row).unwrap()),
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

    /// Two vertices joined by one edge, each with its own leaky room.
    /// Start at vertex 0, first commitment into vertex 1, target vertex 1.
    fn leaky_model(room_a: Room, room_b: Room) -> TwoLevelModel {
        let map = MapGraph::new(vec!["start".into(), "goal".into()], vec![(0, 1)]).unwrap();
        TwoLevelModel::new(
            map,
            vec![("a".into(), room_a), ("b".into(), room_b)],
            vec![0, 1],
            vec![vec![0], vec![0]],
            0,
            (0, 1),
            (0, 1),
            vec![1],
        )
        .unwrap()
    }

    fn one_action_catalog() -> RoomPolicies {
        let mut catalog = RoomPolicies::new();
        catalog.insert(0, 0, Policy::Deterministic(vec![0; 3]));
        catalog.insert(1, 0, Policy::Deterministic(vec![0; 3]));
        catalog
    }

    /// Interior states follow the room policy; the committed exits chain
    /// the two crossings into a shuttle.
    fn shuttle_policy() -> Policy {
        Policy::Deterministic(vec![2, 1, 2, 2, 0, 2, 2, 2])
    }

    fn identity(n: usize) -> Embedding {
        Embedding::new((0..n).collect(), n).unwrap()
    }

    fn stationary_of(h: &TwoLevelModel) -> (MdpPlan, Vec<f64>) {
        let plan = build_mdp_plan(h, &one_action_catalog()).unwrap();
        let xi = stationary_distribution(plan.mdp(), &shuttle_policy(), TOL).unwrap();
        (plan, xi)
    }

    #[test]
    fn training_room_redirects_exits_and_restarts() {
        let room = leaky_room(0.3, 0.2);
        let init = SparseDist::dirac(0);
        let mdp = training_room_mdp(&room, 0, &init).unwrap();
        assert_eq!(mdp.row(1, 0), Some(&SparseDist::dirac(2)));
        assert_eq!(mdp.row(2, 0), Some(&init));
        assert_eq!(mdp.row(0, 0), room.row(0, 0));
        assert_eq!(mdp.initial(), &init);
    }

    #[test]
    fn identity_abstraction_gives_kappa_one_and_bound_zero() {
        let h = leaky_model(leaky_room(0.3, 0.2), leaky_room(0.4, 0.1));
        let (plan, xi) = stationary_of(&h);
        let embeddings = vec![identity(3), identity(3)];
        let latent_rooms = vec![h.room(0).clone(), h.room(1).clone()];
        let inits = vec![SparseDist::dirac(0), SparseDist::dirac(0)];

        let report = entrance_loss(&h, &plan, &xi, &embeddings, &latent_rooms).unwrap();
        assert_eq!(report.loss, 0.0);

        let mut losses = BTreeMap::new();
        for r in 0..2 {
            let loss = room_transition_loss_exact(
                h.room(r),
                &latent_rooms[r],
                &embeddings[r],
                0,
                &inits[r],
                &embeddings[r].pushforward(&inits[r]),
                &Policy::Deterministic(vec![0; 3]),
                TOL,
            )
            .unwrap();
            assert_eq!(loss, 0.0);
            losses.insert((r, 0), loss);
        }

        let out = lifted_bound(
            &h,
            &plan,
            &xi,
            &one_action_catalog(),
            &inits,
            &losses,
            report.loss,
            GAMMA,
            TOL,
            KappaMode::ClosedFormOnly,
        )
        .unwrap();
        assert_eq!(out.bound, 0.0);
        assert_eq!(out.kappa, 1.0);
        assert!(!out.vacuous);
        assert!(out.reset_mass > 0.0);
        assert!(out.xi_continue_min > 0.0 && out.xi_continue_min < 1.0);
        assert_eq!(out.pairs.len(), 2);
        for pair in &out.pairs {
            assert!(pair.closed_form);
            assert_eq!(pair.kappa, 1.0);
            assert!(pair.individual_reset_mass > 0.0);
            assert!(pair.weight > 0.0);
        }
    }

    #[test]
    fn entrance_loss_weights_divergences_by_crossing_mass() {
        let h = leaky_model(leaky_room(0.3, 0.2), leaky_room(0.4, 0.1));
        let (plan, xi) = stationary_of(&h);
        let embeddings = vec![identity(3), identity(3)];
        // The latent entrance of room b disagrees with door 0 by 0.2 in
        // total variation; room a's matches exactly.
        let latent_b = Room::new(
            3,
            1,
            vec![
                (0, 0, h.room(1).row(0, 0).unwrap().clone()),
                (1, 0, SparseDist::dirac(0)),
                (2, 0, SparseDist::dirac(0)),
            ],
            vec!["door".into()],
            vec![(0, SparseDist::new(vec![(0, 0.8), (1, 0.2)]).unwrap())],
            vec![(0, vec![1])],
            vec![],
            2,
        )
        .unwrap();
        let latent_rooms = vec![h.room(0).clone(), latent_b];

        let report = entrance_loss(&h, &plan, &xi, &embeddings, &latent_rooms).unwrap();
        // The only crossing into vertex 1 is the committed exit of the
        // (start, goal) block, plan state 1.
        let expected = 0.2 * xi[1];
        assert!((report.loss - expected).abs() < 1e-15);
        assert_eq!(report.terms.len(), 2);
        let into_start = &report.terms[0];
        assert_eq!((into_start.vertex, into_start.door), (0, 0));
        assert_eq!(into_start.divergence, 0.0);
        // Vertex 0 is entered by the other block's committed exit (plan
        // state 4) and by every restart.
        assert!((into_start.weight - (xi[4] + xi[plan.reset_state()])).abs() < 1e-15);
        let into_goal = &report.terms[1];
        assert_eq!((into_goal.vertex, into_goal.door), (1, 0));
        assert!((into_goal.divergence - 0.2).abs() < 1e-15);
        assert!((into_goal.weight - xi[1]).abs() < 1e-15);
    }

    #[test]
    fn perturbed_dynamics_stay_inside_the_bound() {
        let ground_a = leaky_room(0.3, 0.2);
        let ground_b = leaky_room(0.4, 0.1);
        let h = leaky_model(ground_a.clone(), ground_b.clone());
        let (plan, xi) = stationary_of(&h);
        let embeddings = vec![identity(3), identity(3)];
        // The latent model believes room a loops slightly more than it does.
        let latent_a = leaky_room(0.302, 0.198);
        let latent_rooms = vec![latent_a.clone(), ground_b.clone()];
        let inits = vec![SparseDist::dirac(0), SparseDist::dirac(0)];
        let policy = Policy::Deterministic(vec![0; 3]);

        let report = entrance_loss(&h, &plan, &xi, &embeddings, &latent_rooms).unwrap();
        let mut losses = BTreeMap::new();
        for r in 0..2 {
            let loss = room_transition_loss_exact(
                h.room(r),
                &latent_rooms[r],
                &embeddings[r],
                0,
                &inits[r],
                &embeddings[r].pushforward(&inits[r]),
                &policy,
                TOL,
            )
            .unwrap();
            losses.insert((r, 0), loss);
        }
        assert!(losses[&(0, 0)] > 0.0);
        assert_eq!(losses[&(1, 0)], 0.0);

        let out = lifted_bound(
            &h,
            &plan,
            &xi,
            &one_action_catalog(),
            &inits,
            &losses,
            report.loss,
            GAMMA,
            TOL,
            KappaMode::ClosedFormOnly,
        )
        .unwrap();
        assert!(out.bound.is_finite());
        assert!(!out.vacuous, "bound {} should be informative", out.bound);

        // The latent prediction: solve the latent two-level model exactly
        // under the same planner.
        let latent_h = leaky_model(latent_a, ground_b);
        let planner = plan_policy_to_planner(&plan, &h, &shuttle_policy()).unwrap();
        let oracle = CatalogOracle::new(&latent_h, &one_action_catalog(), GAMMA, TOL).unwrap();
        let succinct = build_succinct(&latent_h, &oracle, GAMMA).unwrap();
        let (latent_value, _) = evaluate_planner(&succinct, &planner, TOL).unwrap();
        let ground_value = plan_value(&plan, &shuttle_policy(), GAMMA, TOL).unwrap();

        assert!(
            (ground_value - latent_value).abs() <= out.bound + 1e-12,
            "gap {} exceeds bound {}",
            (ground_value - latent_value).abs(),
            out.bound
        );
    }

    #[test]
    fn support_mismatch_errors_in_closed_form_and_falls_back_in_exact_mode() {
        let h = leaky_model(leaky_room(0.3, 0.2), leaky_room(0.4, 0.1));
        let (plan, xi) = stationary_of(&h);
        // Room a was certified from a broader initial distribution than the
        // single entrance the plan uses.
        let inits = vec![
            SparseDist::new(vec![(0, 0.5), (1, 0.5)]).unwrap(),
            SparseDist::dirac(0),
        ];
        let mut losses = BTreeMap::new();
        losses.insert((0, 0), 0.01);
        losses.insert((1, 0), 0.01);

        let err = lifted_bound(
            &h,
            &plan,
            &xi,
            &one_action_catalog(),
            &inits,
            &losses,
            0.0,
            GAMMA,
            TOL,
            KappaMode::ClosedFormOnly,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            SynthesisError::SupportMismatch { ref room } if room == "a"
        ));

        let out = lifted_bound(
            &h,
            &plan,
            &xi,
            &one_action_catalog(),
            &inits,
            &losses,
            0.0,
            GAMMA,
            TOL,
            KappaMode::ExactWithFallback,
        )
        .unwrap();
        let pair_a = out
            .pairs
            .iter()
            .find(|p| p.room == 0)
            .expect("room a carries mass");
        assert!(!pair_a.closed_form);
        assert!(pair_a.kappa >= 1.0 && pair_a.kappa.is_finite());
        let pair_b = out
            .pairs
            .iter()
            .find(|p| p.room == 1)
            .expect("room b carries mass");
        assert!(pair_b.closed_form);
    }

    #[test]
    fn plan_states_outside_the_training_recurrent_class_are_rejected() {
        let h = leaky_model(leaky_room(0.3, 0.2), leaky_room(0.4, 0.1));
        let (plan, xi) = stationary_of(&h);
        // Certifying room a from a restart distribution that pins the chain
        // at the reset: the training chain never visits state 0, which the
        // plan does.
        let inits = vec![SparseDist::dirac(2), SparseDist::dirac(0)];
        let mut losses = BTreeMap::new();
        losses.insert((0, 0), 0.0);
        losses.insert((1, 0), 0.0);

        let err = lifted_bound(
            &h,
            &plan,
            &xi,
            &one_action_catalog(),
            &inits,
            &losses,
            0.0,
            GAMMA,
            TOL,
            KappaMode::ExactWithFallback,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            SynthesisError::BsccConditionViolated { ref room, state: 0, .. } if room == "a"
        ));
    }

    #[test]
    fn a_chain_that_never_resets_has_no_finite_bound() {
        let h = leaky_model(leaky_room(0.3, 0.0), leaky_room(0.4, 0.0));
        let (plan, xi) = stationary_of(&h);
        assert_eq!(xi[plan.reset_state()], 0.0);
        let inits = vec![SparseDist::dirac(0), SparseDist::dirac(0)];
        let mut losses = BTreeMap::new();
        losses.insert((0, 0), 0.0);
        losses.insert((1, 0), 0.0);

        let out = lifted_bound(
            &h,
            &plan,
            &xi,
            &one_action_catalog(),
            &inits,
            &losses,
            0.0,
            GAMMA,
            TOL,
            KappaMode::ClosedFormOnly,
        )
        .unwrap();
        assert!(out.bound.is_infinite());
        assert!(out.vacuous);
        assert_eq!(out.reset_mass, 0.0);
    }
}
