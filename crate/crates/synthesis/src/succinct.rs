//! The crossing-level abstraction: one state per half-edge of the map, one
//! action per (re)commitment, and a single failure state soaking up all
//! mass a room traversal loses.

use mdp_core::{ActionId, Mdp, SparseDist, StateId};
use two_level_model::{DirectionId, HalfEdge, RoomId, TwoLevelModel};

use crate::edges::EdgeIndex;
use crate::error::SynthesisError;
use crate::oracle::RoomValueOracle;

/// Provenance of one crossing-level transition: which room was walked,
/// through which doors, and what it cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Traversal {
    /// The state the transition leaves: the crossing that was just taken.
    pub from: HalfEdge,
    /// The committed next crossing (also the successor state on success).
    pub action: HalfEdge,
    /// The room being walked: the label of the vertex both share.
    pub room: RoomId,
    /// Door the room was entered through.
    pub entry: DirectionId,
    /// Door the commitment exits through.
    pub exit: DirectionId,
    /// Success probability of the traversal (the oracle value, clamped
    /// into `[0, gamma]`); the remaining mass leaks to the failure state.
    pub value: f64,
}

/// The succinct model over crossings.
///
/// State `i < n_edges` is the `i`-th half-edge `(v, u)` in [`EdgeIndex`]
/// order and means "just crossed from `v` into `u`"; the last state is the
/// failure state. Action `j` commits to taking half-edge `j` next: when it
/// leaves the current vertex, the transition succeeds with the room's
/// traversal value and fails into the failure state otherwise; commitments
/// that do not leave the current vertex fail outright.
#[derive(Debug)]
pub struct SuccinctMdp {
    mdp: Mdp,
    edges: EdgeIndex,
    init_state: StateId,
    d1_action: ActionId,
    targets: Vec<StateId>,
    target_mask: Vec<bool>,
    bottom: StateId,
    provenance: Vec<Traversal>,
    max_jump: f64,
    gamma: f64,
}

impl SuccinctMdp {
    pub fn mdp(&self) -> &Mdp {
        &self.mdp
    }

    pub fn edges(&self) -> &EdgeIndex {
        &self.edges
    }

    pub fn n_states(&self) -> usize {
        self.edges.n() + 1
    }

    pub fn n_actions(&self) -> usize {
        self.edges.n()
    }

    /// Where runs start: the reversed first crossing, i.e. standing at the
    /// initial vertex as if it had just been entered through its declared
    /// entry door.
    pub fn init_state(&self) -> StateId {
        self.init_state
    }

    /// The hard-wired first commitment.
    pub fn d1_action(&self) -> ActionId {
        self.d1_action
    }

    /// States whose crossing enters a target vertex, ascending.
    pub fn targets(&self) -> &[StateId] {
        &self.targets
    }

    pub fn is_target(&self, s: StateId) -> bool {
        self.target_mask[s]
    }

    /// The absorbing failure state.
    pub fn bottom(&self) -> StateId {
        self.bottom
    }

    /// One record per meaningful (state, action) pair, in state-major,
    /// action-ascending order.
    pub fn provenance(&self) -> &[Traversal] {
        &self.provenance
    }

    /// The largest transition probability — the contraction factor of
    /// undiscounted value iteration on this model. At most `gamma`.
    pub fn max_jump(&self) -> f64 {
        self.max_jump
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Builds the succinct model by querying the oracle once per (crossing,
/// commitment) pair that shares a vertex.
///
/// Values outside `[0, gamma]` by more than 1e-9 are errors; values inside
/// the tolerance band are clamped, so stored probabilities never exceed
/// `gamma`.
pub fn build_succinct(
    h: &TwoLevelModel,
    oracle: &dyn RoomValueOracle,
    gamma: f64,
) -> Result<SuccinctMdp, SynthesisError> {
    h.validate()?;
    if (oracle.gamma() - gamma).abs() > 1e-12 {
        return Err(SynthesisError::CatalogMismatch {
            detail: format!(
                "oracle computed at discount {}, synthesis requested {gamma}",
                oracle.gamma()
            ),
        });
    }
    let edges = EdgeIndex::new(h.map());
    let n_edges = edges.n();
    let bottom = n_edges;
    let n_actions = n_edges;

    let mut transitions: Vec<(StateId, ActionId, SparseDist)> = Vec::new();
    let mut provenance: Vec<Traversal> = Vec::new();
    let mut max_jump: f64 = 0.0;
    for i in 0..n_edges {
        let (v, u) = edges.edge(i);
        let room = h.room_id_of(u);
        let entry = h
            .direction_at(u, v)
            .expect("validated model: (u, v) is an edge");
        for a in 0..n_actions {
            let (from, to) = edges.edge(a);
            if from != u {
                transitions.push((i, a, SparseDist::dirac(bottom)));
                continue;
            }
            let exit = h
                .direction_at(u, to)
                .expect("validated model: (u, to) is an edge");
            let raw = oracle.traversal_value(room, entry, exit)?;
            if !(-1e-9..=gamma + 1e-9).contains(&raw) {
                return Err(SynthesisError::OracleOutOfRange {
                    room: h.room_name(room).to_string(),
                    entry: h.room(room).direction_name(entry).to_string(),
                    exit: h.room(room).direction_name(exit).to_string(),
                    value: raw,
                    gamma,
                });
            }
            let p = raw.clamp(0.0, gamma);
            max_jump = max_jump.max(p);
            let row = if p > 0.0 {
                SparseDist::new(vec![(a, p), (bottom, 1.0 - p)])
                    .expect("two nonnegative entries summing to one")
            } else {
                SparseDist::dirac(bottom)
            };
            transitions.push((i, a, row));
            provenance.push(Traversal {
                from: (v, u),
                action: (from, to),
                room,
                entry,
                exit,
                value: p,
            });
        }
    }
    for a in 0..n_actions {
        transitions.push((bottom, a, SparseDist::dirac(bottom)));
    }

    let (v0, w) = h.d0();
    let init_state = edges.index_of((w, v0)).expect("maps are undirected");
    let d1_action = edges.index_of(h.d1()).expect("d1 validated as an edge");

    let mut targets = Vec::new();
    let mut target_mask = vec![false; n_edges + 1];
    for i in 0..n_edges {
        let (_, u) = edges.edge(i);
        if h.is_target(u) {
            targets.push(i);
            target_mask[i] = true;
        }
    }

    let mdp = Mdp::new(
        n_edges + 1,
        n_actions,
        transitions,
        SparseDist::dirac(init_state),
    )?;
    Ok(SuccinctMdp {
        mdp,
        edges,
        init_state,
        d1_action,
        targets,
        target_mask,
        bottom,
        provenance,
        max_jump,
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{CatalogOracle, TableOracle};
    use crate::test_fixtures::{forward_catalog, star_model, two_room_model};

    #[test]
    fn states_are_half_edges_plus_the_failure_state() {
        let h = two_room_model();
        let catalog = forward_catalog(&h);
        let oracle = CatalogOracle::new(&h, &catalog, 0.9, 1e-13).unwrap();
        let s = build_succinct(&h, &oracle, 0.9).unwrap();
        assert_eq!(s.n_states(), 3);
        assert_eq!(s.n_actions(), 2);
        assert_eq!(s.bottom(), 2);
        // d0 = (0, 1), so runs start on the reversed crossing (1, 0).
        assert_eq!(s.init_state(), 1);
        assert_eq!(s.d1_action(), 0);
        // Edge (0, 1) enters the target vertex 1.
        assert_eq!(s.targets(), &[0]);
        assert!(s.is_target(0) && !s.is_target(1));
    }

    #[test]
    fn success_mass_follows_the_oracle_and_the_rest_leaks() {
        let h = two_room_model();
        let catalog = forward_catalog(&h);
        let oracle = CatalogOracle::new(&h, &catalog, 0.9, 1e-13).unwrap();
        let s = build_succinct(&h, &oracle, 0.9).unwrap();
        // From (1, 0) committing (0, 1): walk the corridor at vertex 0,
        // worth 0.81; the remaining 0.19 fails.
        let row = s.mdp().row(1, 0).unwrap();
        assert!((row.prob(0) - 0.81).abs() < 1e-10);
        assert!((row.prob(2) - 0.19).abs() < 1e-10);
        // Commitments that do not leave the current vertex fail outright:
        // from (1, 0) the agent stands at 0, so committing (1, 0) is junk.
        assert_eq!(s.mdp().row(1, 1).unwrap(), &SparseDist::dirac(2));
        assert!((s.max_jump() - 0.81).abs() < 1e-10);
    }

    #[test]
    fn provenance_names_the_room_and_doors_of_each_traversal() {
        let h = star_model(0.3);
        let catalog = forward_catalog(&h);
        let oracle = CatalogOracle::new(&h, &catalog, 0.9, 1e-13).unwrap();
        let s = build_succinct(&h, &oracle, 0.9).unwrap();
        // Edges: 0 = (0,1), 1 = (0,2), 2 = (1,0), 3 = (2,0).
        // From (1, 0) the agent walks the hub fork entered through its
        // "left" door (the door facing vertex 1).
        let t = s
            .provenance()
            .iter()
            .find(|t| t.from == (1, 0) && t.action == (0, 2))
            .unwrap();
        assert_eq!(t.room, 0);
        assert_eq!(t.entry, 0);
        assert_eq!(t.exit, 1);
        let expected = 0.81 * 0.7 / (1.0 - 0.81 * 0.3);
        assert!((t.value - expected).abs() < 1e-10);
        assert_eq!(s.mdp().row(2, 1).unwrap().prob(1), t.value);
    }

    #[test]
    fn out_of_range_oracle_values_are_rejected() {
        let h = two_room_model();
        let mut table = TableOracle::new(0.9);
        table.insert(0, 0, 0, 0.95); // above gamma
        let err = build_succinct(&h, &table, 0.9).unwrap_err();
        match err {
            SynthesisError::OracleOutOfRange { value, gamma, .. } => {
                assert_eq!(value, 0.95);
                assert_eq!(gamma, 0.9);
            }
            other => panic!("expected OracleOutOfRange, got {other}"),
        }
    }

    #[test]
    fn values_within_tolerance_are_clamped() {
        let h = two_room_model();
        let mut table = TableOracle::new(0.9);
        table.insert(0, 0, 0, 0.9 + 0.5e-9);
        let s = build_succinct(&h, &table, 0.9).unwrap();
        assert_eq!(s.mdp().row(1, 0).unwrap().prob(0), 0.9);
        assert!(s.max_jump() <= 0.9);
    }

    #[test]
    fn mismatched_oracle_discount_is_rejected() {
        let h = two_room_model();
        let table = TableOracle::new(0.8);
        let err = build_succinct(&h, &table, 0.9).unwrap_err();
        assert!(matches!(err, SynthesisError::CatalogMismatch { .. }));
    }
}
