//! The composite planning MDP over (room state, vertex, committed crossing)
//! triples.
//!
//! Each directed half-edge `(v, u)` owns a full copy of room `ℓ(v)`'s state
//! space — "in room v, committed to crossing into u". Two distinguished
//! states close the construction: a shared `reset` that restarts the whole
//! model at the initial entrance, and an absorbing sink `⊥` reached by
//! undefined (state, action) combinations. Actions are the half-edges (pick
//! a new crossing, only meaningful at committed exit states) plus `*`
//! (follow the in-room policy, only meaningful elsewhere); the superfluous
//! combinations all lead to `⊥`, so improper choices are representable but
//! worthless.

use mdp_core::{
    value_reach_avoid, ActionId, Mdp, Policy, ReachAvoidObjective, SparseDist, StateId,
};
use two_level_model::TwoLevelModel;

use crate::catalog::{validate_policy_for_room, RoomPolicies};
use crate::edges::EdgeIndex;
use crate::error::SynthesisError;

/// Tolerance for deciding that a room's reset rows agree across actions.
const RESET_ROW_TOL: f64 = 1e-12;

/// What a plan state is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanStateKind {
    /// A room state steered by the in-room policy (includes exit states for
    /// directions other than the committed one).
    Interior,
    /// An exit state of the committed direction: the crossing happens now
    /// and the action picks the next commitment.
    CommittedExit,
    /// The block's copy of the room's own reset state. Unreachable: every
    /// transition that would land here is redirected to the shared reset.
    ResetCopy,
    /// The shared reset state; restarts at the initial entrance.
    Reset,
    /// The absorbing sink for undefined combinations.
    Sink,
}

/// A decoded plan state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanState {
    InBlock { edge: usize, room_state: usize },
    Reset,
    Sink,
}

/// The composite MDP plus the bookkeeping to address its states by
/// (half-edge, room state).
#[derive(Clone, Debug)]
pub struct MdpPlan {
    mdp: Mdp,
    edges: EdgeIndex,
    /// Block start per half-edge index, plus the end of the last block.
    offsets: Vec<usize>,
    reset: StateId,
    sink: StateId,
    kind: Vec<PlanStateKind>,
    /// Sorted target states: every state of a block whose vertex is a
    /// target.
    targets: Vec<StateId>,
    /// Sorted avoid states: bad room states and reset copies of non-target
    /// blocks, the shared reset, and the sink. Target membership wins on
    /// what would otherwise be both (entering a target room at a bad state
    /// still counts as arriving).
    avoid: Vec<StateId>,
}

impl MdpPlan {
    pub fn mdp(&self) -> &Mdp {
        &self.mdp
    }

    pub fn edges(&self) -> &EdgeIndex {
        &self.edges
    }

    pub fn n_states(&self) -> usize {
        self.mdp.n_states()
    }

    /// Half-edge actions plus `*`.
    pub fn n_actions(&self) -> usize {
        self.edges.n() + 1
    }

    /// The `*` action: keep following the in-room policy.
    pub fn star_action(&self) -> ActionId {
        self.edges.n()
    }

    pub fn reset_state(&self) -> StateId {
        self.reset
    }

    pub fn sink_state(&self) -> StateId {
        self.sink
    }

    pub fn kind(&self, s: StateId) -> PlanStateKind {
        self.kind[s]
    }

    /// The states `⟨s, v, u⟩` of one half-edge's block, in room-state order.
    pub fn block_range(&self, edge: usize) -> std::ops::Range<StateId> {
        self.offsets[edge]..self.offsets[edge + 1]
    }

    pub fn encode(&self, edge: usize, room_state: usize) -> StateId {
        debug_assert!(room_state < self.offsets[edge + 1] - self.offsets[edge]);
        self.offsets[edge] + room_state
    }

    pub fn decode(&self, s: StateId) -> PlanState {
        if s == self.reset {
            PlanState::Reset
        } else if s == self.sink {
            PlanState::Sink
        } else {
            let edge = self.offsets.partition_point(|&o| o <= s) - 1;
            PlanState::InBlock {
                edge,
                room_state: s - self.offsets[edge],
            }
        }
    }

    pub fn target_states(&self) -> &[StateId] {
        &self.targets
    }

    pub fn avoid_states(&self) -> &[StateId] {
        &self.avoid
    }

    /// The reach-avoid objective: reach a target-vertex block before the
    /// avoid set.
    pub fn objective(&self, gamma: f64) -> Result<ReachAvoidObjective, SynthesisError> {
        Ok(ReachAvoidObjective::new(
            self.n_states(),
            &self.targets,
            &self.avoid,
            gamma,
        )?)
    }
}

/// Builds the composite plan for `h` under the in-room policy catalog.
///
/// Transition rows, per state kind and action:
/// - interior under `*`: the room row averaged under the committed policy,
///   with room-reset mass redirected to the shared reset;
/// - committed exit under a crossing `(u, t)` out of the entered vertex:
///   the entered room's entrance for the crossing, lifted into the block of
///   `(u, t)`, again with room-reset mass redirected;
/// - the shared reset, under every action: the initial entrance lifted into
///   the block of the initial commitment;
/// - every other combination: Dirac at the sink, which is absorbing.
pub fn build_mdp_plan(
    h: &TwoLevelModel,
    policies: &RoomPolicies,
) -> Result<MdpPlan, SynthesisError> {
    h.validate()?;
    let map = h.map();
    let edges = EdgeIndex::new(map);
    let n_edges = edges.n();
    let n_actions = n_edges + 1;
    let star = n_edges;

    // Every room in use must be episodic (its reset rows must agree across
    // actions) and every (room, direction) pair must have a policy of the
    // right shape.
    let mut checked = vec![false; h.n_rooms()];
    for v in 0..map.n_vertices() {
        let r = h.room_id_of(v);
        if checked[r] {
            continue;
        }
        checked[r] = true;
        let room = h.room(r);
        let reset_rows = room.enabled_rows(room.reset());
        if let Some(((a0, first), rest)) = reset_rows.split_first().map(|(f, r)| ((f.0, &f.1), r))
        {
            for (a, row) in rest {
                if !first.approx_eq(row, RESET_ROW_TOL) {
                    return Err(SynthesisError::NonEpisodicRoom {
                        room: h.room_name(r).to_string(),
                        detail: format!(
                            "actions {a0} and {a} disagree at the reset state, so the room \
                             has no well-defined restart distribution"
                        ),
                    });
                }
            }
        }
        for d in 0..room.n_directions() {
            let policy = policies.require(r, d, h.room_name(r), room.direction_name(d))?;
            validate_policy_for_room(policy, room, h.room_name(r), room.direction_name(d))?;
        }
    }

    // Layout: one block of |S_ℓ(v)| states per half-edge (v, u), then the
    // shared reset, then the sink.
    let mut offsets = Vec::with_capacity(n_edges + 1);
    let mut total = 0;
    for i in 0..n_edges {
        offsets.push(total);
        total += h.room_of(edges.edge(i).0).n_states();
    }
    offsets.push(total);
    let reset = total;
    let sink = total + 1;
    let n_states = total + 2;

    // The initial distribution: the initial entrance lifted into the block
    // of the initial commitment, room-reset mass going to the shared reset.
    let d1_block = edges
        .index_of(h.d1())
        .expect("validated model: d1 is an edge");
    let entry_room_reset = h.room_of(h.d1().0).reset();
    let lift = |entr: &SparseDist, block: usize, room_reset: usize| -> SparseDist {
        let entries = entr
            .entries()
            .iter()
            .map(|&(s, p)| {
                if s == room_reset {
                    (reset, p)
                } else {
                    (offsets[block] + s, p)
                }
            })
            .collect();
        SparseDist::new(entries).expect("entrance entries are a distribution")
    };
    let initial = lift(h.initial_entrance()?, d1_block, entry_room_reset);

    let mut kind = vec![PlanStateKind::Interior; n_states];
    kind[reset] = PlanStateKind::Reset;
    kind[sink] = PlanStateKind::Sink;
    let mut transitions: Vec<(StateId, ActionId, SparseDist)> =
        Vec::with_capacity(n_states * n_actions);

    for i in 0..n_edges {
        let (v, u) = edges.edge(i);
        let r = h.room_id_of(v);
        let room = h.room(r);
        let d = h
            .direction_at(v, u)
            .expect("validated model: (v, u) is an edge");
        let policy = policies
            .get(r, d)
            .expect("checked above: catalog covers every pair");
        for s in 0..room.n_states() {
            let x = offsets[i] + s;
            if s == room.reset() {
                kind[x] = PlanStateKind::ResetCopy;
                for a in 0..n_actions {
                    transitions.push((x, a, SparseDist::dirac(reset)));
                }
            } else if room.exit_direction_of(s) == Some(d) {
                kind[x] = PlanStateKind::CommittedExit;
                let entr = h.entrance_for_crossing(v, u)?;
                let entered_reset = h.room_of(u).reset();
                for a in 0..n_actions {
                    let row = if a < n_edges && edges.edge(a).0 == u {
                        lift(entr, a, entered_reset)
                    } else {
                        SparseDist::dirac(sink)
                    };
                    transitions.push((x, a, row));
                }
            } else {
                // Interior, including exit states of other directions: the
                // committed policy keeps acting on the raw room dynamics.
                let mut mix: Vec<(usize, f64)> = Vec::new();
                for (a, pa) in policy.action_probs(s) {
                    if pa == 0.0 {
                        continue;
                    }
                    let row = room
                        .row(s, a)
                        .expect("policy validated: only enabled actions");
                    for &(t, p) in row.entries() {
                        let target = if t == room.reset() {
                            reset
                        } else {
                            offsets[i] + t
                        };
                        mix.push((target, pa * p));
                    }
                }
                let composite =
                    SparseDist::new(mix).expect("convex mixture of stochastic rows");
                for a in 0..n_actions {
                    let row = if a == star {
                        composite.clone()
                    } else {
                        SparseDist::dirac(sink)
                    };
                    transitions.push((x, a, row));
                }
            }
        }
    }
    for a in 0..n_actions {
        transitions.push((reset, a, initial.clone()));
        transitions.push((sink, a, SparseDist::dirac(sink)));
    }

    let mdp = Mdp::new(n_states, n_actions, transitions, initial)?;

    let mut targets = Vec::new();
    let mut avoid = Vec::new();
    for i in 0..n_edges {
        let (v, _) = edges.edge(i);
        let room = h.room_of(v);
        if h.is_target(v) {
            targets.extend(offsets[i]..offsets[i] + room.n_states());
        } else {
            for s in 0..room.n_states() {
                if room.is_bad(s) || s == room.reset() {
                    avoid.push(offsets[i] + s);
                }
            }
        }
    }
    avoid.push(reset);
    avoid.push(sink);

    Ok(MdpPlan {
        mdp,
        edges,
        offsets,
        reset,
        sink,
        kind,
        targets,
        avoid,
    })
}

/// Whether the sink is unreachable from every non-sink state under `policy`
/// (exact graph reachability on the support).
pub fn is_proper(plan: &MdpPlan, policy: &Policy) -> Result<bool, SynthesisError> {
    Ok(improper_witness(plan, policy)?.is_none())
}

/// The smallest non-sink state from which the sink is reachable under
/// `policy`, if any.
pub fn improper_witness(
    plan: &MdpPlan,
    policy: &Policy,
) -> Result<Option<StateId>, SynthesisError> {
    let mdp = plan.mdp();
    policy.validate_for(mdp)?;
    let n = mdp.n_states();
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for s in 0..n {
        for (a, p) in policy.action_probs(s) {
            if p == 0.0 {
                continue;
            }
            let row = mdp.row(s, a).expect("policy validated");
            for &(t, _) in row.entries() {
                preds[t].push(s);
            }
        }
    }
    let mut reaches_sink = vec![false; n];
    reaches_sink[plan.sink_state()] = true;
    let mut stack = vec![plan.sink_state()];
    while let Some(t) = stack.pop() {
        for &s in &preds[t] {
            if !reaches_sink[s] {
                reaches_sink[s] = true;
                stack.push(s);
            }
        }
    }
    Ok(reaches_sink
        .iter()
        .enumerate()
        .find(|&(s, &r)| r && s != plan.sink_state())
        .map(|(s, _)| s))
}

/// The plan's value under `policy`: the expected discount accumulated until
/// a target-vertex block is entered, provided no bad state, reset, or sink
/// is hit first, from the initial entrance.
pub fn plan_value(
    plan: &MdpPlan,
    policy: &Policy,
    gamma: f64,
    tol: f64,
) -> Result<f64, SynthesisError> {
    let obj = plan.objective(gamma)?;
    let values = value_reach_avoid(plan.mdp(), policy, &obj, tol)?;
    Ok(values.initial_value(plan.mdp().initial()))
}

/// As `plan_value`, but also returns the per-state values.
pub fn plan_values(
    plan: &MdpPlan,
    policy: &Policy,
    gamma: f64,
    tol: f64,
) -> Result<(f64, Vec<f64>), SynthesisError> {
    let obj = plan.objective(gamma)?;
    let values = value_reach_avoid(plan.mdp(), policy, &obj, tol)?;
    let at_initial = values.initial_value(plan.mdp().initial());
    Ok((at_initial, values.values))
}
