//! Finite-memory planners over the map graph.
//!
//! A planner is a Mealy machine with one memory state per vertex. On
//! entering vertex `v` with memory `q` it commits to the crossing
//! `alpha(v, q)`; when a crossing `(v, u)` is observed (committed or not, a
//! slip through another door still crosses), the memory advances to
//! `update(v, q, (v, u))`. Identifying memory states with vertices is
//! canonical: the synthesized machines remember exactly the vertex they are
//! trying to reach next.

use mdp_core::Policy;
use serde_json::{json, Value};
use two_level_model::{HalfEdge, TwoLevelModel, VertexId};

use crate::edges::EdgeIndex;
use crate::error::SynthesisError;
use crate::plan::{improper_witness, MdpPlan, PlanStateKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Planner {
    q0: VertexId,
    /// `alpha[v][q]`: the crossing committed on entering `v` with memory `q`.
    alpha: Vec<Vec<HalfEdge>>,
    /// `update[v][q][i]`: the next memory after observing the `i`-th
    /// out-edge of `v` (ascending neighbor order) with memory `q`.
    update: Vec<Vec<Vec<VertexId>>>,
    /// Sorted neighbor lists, copied from the map so the machine can
    /// interpret observed crossings on its own.
    neighbors: Vec<Vec<VertexId>>,
}

impl Planner {
    /// Validates the tables against the model: square `alpha` and `update`
    /// over vertices, commitments that leave their vertex, memory states in
    /// range, and the hard-wired first commitment `alpha(v0, q0) = d1`.
    pub fn new(
        h: &TwoLevelModel,
        q0: VertexId,
        alpha: Vec<Vec<HalfEdge>>,
        update: Vec<Vec<Vec<VertexId>>>,
    ) -> Result<Self, SynthesisError> {
        let map = h.map();
        let n = map.n_vertices();
        let fail = |detail: String| Err(SynthesisError::PlannerInvariant { detail });
        if q0 >= n {
            return fail(format!("initial memory {q0} out of range ({n} vertices)"));
        }
        if alpha.len() != n || update.len() != n {
            return fail(format!(
                "tables cover {} / {} vertices, map has {n}",
                alpha.len(),
                update.len()
            ));
        }
        for v in 0..n {
            if alpha[v].len() != n || update[v].len() != n {
                return fail(format!(
                    "vertex {}: tables cover {} / {} memory states, expected {n}",
                    map.name(v),
                    alpha[v].len(),
                    update[v].len()
                ));
            }
            for q in 0..n {
                let (src, dst) = alpha[v][q];
                if src != v || !map.is_edge(v, dst) {
                    return fail(format!(
                        "alpha({}, {}) = ({src}, {dst}) is not an out-edge of {}",
                        map.name(v),
                        q,
                        map.name(v)
                    ));
                }
                if update[v][q].len() != map.degree(v) {
                    return fail(format!(
                        "update({}, {q}) covers {} crossings, vertex has degree {}",
                        map.name(v),
                        update[v][q].len(),
                        map.degree(v)
                    ));
                }
                for &next in &update[v][q] {
                    if next >= n {
                        return fail(format!(
                            "update({}, {q}) targets memory {next}, out of range",
                            map.name(v)
                        ));
                    }
                }
            }
        }
        let (v0, _) = h.d1();
        if alpha[v0][q0] != h.d1() {
            return fail(format!(
                "alpha(v0, q0) = {:?} must equal the initial commitment {:?}",
                alpha[v0][q0],
                h.d1()
            ));
        }
        let neighbors = (0..n).map(|v| map.neighbors(v).to_vec()).collect();
        Ok(Self {
            q0,
            alpha,
            update,
            neighbors,
        })
    }

    pub fn q0(&self) -> VertexId {
        self.q0
    }

    pub fn n_vertices(&self) -> usize {
        self.alpha.len()
    }

    /// The crossing committed on entering `v` with memory `q`.
    pub fn commit(&self, v: VertexId, q: VertexId) -> HalfEdge {
        self.alpha[v][q]
    }

    /// The memory after observing the crossing `(v, to)` with memory `q`,
    /// or `None` if `(v, to)` is not an edge.
    pub fn observe(&self, v: VertexId, q: VertexId, to: VertexId) -> Option<VertexId> {
        let pos = self.neighbors[v].binary_search(&to).ok()?;
        Some(self.update[v][q][pos])
    }

    /// Serializes the machine as a flat table listing:
    /// `{"q0": q, "alpha": [[v, q, [v, u]], ...], "update": [[v, q, [v, u], q'], ...]}`.
    pub fn to_json(&self) -> Value {
        let n = self.n_vertices();
        let mut alpha = Vec::new();
        let mut update = Vec::new();
        for v in 0..n {
            for q in 0..n {
                let (src, dst) = self.alpha[v][q];
                alpha.push(json!([v, q, [src, dst]]));
                for (pos, &u) in self.neighbors[v].iter().enumerate() {
                    update.push(json!([v, q, [v, u], self.update[v][q][pos]]));
                }
            }
        }
        json!({ "q0": self.q0, "alpha": alpha, "update": update })
    }

    /// Parses the `to_json` table listing and re-validates it against `h`.
    pub fn from_json(h: &TwoLevelModel, value: &Value) -> Result<Self, SynthesisError> {
        let bad = |detail: String| SynthesisError::Json { detail };
        let n = h.map().n_vertices();
        let obj = value
            .as_object()
            .ok_or_else(|| bad("planner must be a JSON object".into()))?;
        let q0 = obj
            .get("q0")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing or non-integer q0".into()))? as usize;

        let usize_at = |row: &[Value], i: usize, what: &str| -> Result<usize, SynthesisError> {
            row.get(i)
                .and_then(Value::as_u64)
                .map(|x| x as usize)
                .ok_or_else(|| bad(format!("{what}: expected integer at position {i}")))
        };
        let edge_at = |row: &[Value], i: usize, what: &str| -> Result<HalfEdge, SynthesisError> {
            let pair = row
                .get(i)
                .and_then(Value::as_array)
                .filter(|p| p.len() == 2)
                .ok_or_else(|| bad(format!("{what}: expected [v, u] at position {i}")))?;
            Ok((usize_at(pair, 0, what)?, usize_at(pair, 1, what)?))
        };
        let rows = |key: &str| -> Result<Vec<Vec<Value>>, SynthesisError> {
            obj.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| bad(format!("missing {key} array")))?
                .iter()
                .map(|r| {
                    r.as_array()
                        .cloned()
                        .ok_or_else(|| bad(format!("{key}: expected array rows")))
                })
                .collect()
        };

        let mut alpha = vec![vec![None; n]; n];
        for row in rows("alpha")? {
            if row.len() != 3 {
                return Err(bad("alpha rows must be [v, q, [v, u]]".into()));
            }
            let v = usize_at(&row, 0, "alpha")?;
            let q = usize_at(&row, 1, "alpha")?;
            let e = edge_at(&row, 2, "alpha")?;
            if v >= n || q >= n {
                return Err(bad(format!("alpha entry ({v}, {q}) out of range")));
            }
            alpha[v][q] = Some(e);
        }
        let mut update: Vec<Vec<Vec<Option<VertexId>>>> = (0..n)
            .map(|v| vec![vec![None; h.map().degree(v)]; n])
            .collect();
        for row in rows("update")? {
            if row.len() != 4 {
                return Err(bad("update rows must be [v, q, [v, u], q']".into()));
            }
            let v = usize_at(&row, 0, "update")?;
            let q = usize_at(&row, 1, "update")?;
            let (src, dst) = edge_at(&row, 2, "update")?;
            let next = usize_at(&row, 3, "update")?;
            if v >= n || q >= n || src != v {
                return Err(bad(format!("update entry ({v}, {q}) out of range")));
            }
            let pos = h.map().neighbors(v).binary_search(&dst).map_err(|_| {
                bad(format!("update entry ({v}, {q}): ({src}, {dst}) is not an edge"))
            })?;
            update[v][q][pos] = Some(next);
        }

        let alpha = alpha
            .into_iter()
            .enumerate()
            .map(|(v, per_q)| {
                per_q
                    .into_iter()
                    .enumerate()
                    .map(|(q, e)| e.ok_or_else(|| bad(format!("alpha({v}, {q}) missing"))))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let update = update
            .into_iter()
            .enumerate()
            .map(|(v, per_q)| {
                per_q
                    .into_iter()
                    .enumerate()
                    .map(|(q, per_e)| {
                        per_e
                            .into_iter()
                            .enumerate()
                            .map(|(pos, x)| {
                                x.ok_or_else(|| {
                                    bad(format!("update({v}, {q}) missing crossing #{pos}"))
                                })
                            })
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Planner::new(h, q0, alpha, update)
    }
}

/// Expands a planner into a policy on the composite plan: the crossing
/// `alpha(u, update(v, q, (v, u)))` at each committed exit, `*` everywhere
/// else.
///
/// Memory states are identified with committed vertices, so a state in the
/// block of crossing `(v, u)` is interpreted as "at `v` with memory `u`".
pub fn planner_to_plan_policy(
    planner: &Planner,
    plan: &MdpPlan,
) -> Result<Policy, SynthesisError> {
    let edges = plan.edges();
    if planner.n_vertices() != edges.n_vertices() {
        return Err(SynthesisError::PlannerInvariant {
            detail: format!(
                "planner covers {} vertices, plan covers {}",
                planner.n_vertices(),
                edges.n_vertices()
            ),
        });
    }
    let star = plan.star_action();
    let mut actions = vec![star; plan.n_states()];
    for i in 0..edges.n() {
        let (v, u) = edges.edge(i);
        let q_next = planner.observe(v, u, u).ok_or_else(|| {
            SynthesisError::PlannerInvariant {
                detail: format!("planner does not recognize the crossing ({v}, {u})"),
            }
        })?;
        let next = planner.commit(u, q_next);
        let a = edges.index_of(next).ok_or_else(|| {
            SynthesisError::PlannerInvariant {
                detail: format!(
                    "planner commits to ({}, {}), which is not a map edge",
                    next.0, next.1
                ),
            }
        })?;
        for s in plan.block_range(i) {
            if plan.kind(s) == PlanStateKind::CommittedExit {
                actions[s] = a;
            }
        }
    }
    Ok(Policy::Deterministic(actions))
}

/// Reads a planner back off a deterministic proper plan policy.
///
/// Every committed exit of a block must pick the same next crossing; that
/// crossing becomes the memory written when the block's crossing is
/// observed, independent of the memory it was observed with. Blocks whose
/// committed direction has no exit states never cross, so their update
/// entry is filled with the lowest out-neighbor.
pub fn plan_policy_to_planner(
    plan: &MdpPlan,
    h: &TwoLevelModel,
    policy: &Policy,
) -> Result<Planner, SynthesisError> {
    if let Some(state) = improper_witness(plan, policy)? {
        return Err(SynthesisError::ImproperPolicy { state });
    }
    let edges = plan.edges();
    let not_planner = |detail: String| SynthesisError::NotPlannerRepresentable { detail };
    let chosen = |s: usize| -> Result<usize, SynthesisError> {
        match policy {
            Policy::Deterministic(actions) => Ok(actions[s]),
            Policy::Stochastic(rows) => {
                let entries = rows[s].entries();
                if entries.len() == 1 {
                    Ok(entries[0].0)
                } else {
                    Err(not_planner(format!(
                        "state {s} randomizes over {} actions",
                        entries.len()
                    )))
                }
            }
        }
    };

    // One next crossing per block, agreed on by all of its committed exits.
    let mut next_target: Vec<Option<VertexId>> = vec![None; edges.n()];
    for i in 0..edges.n() {
        let (v, u) = edges.edge(i);
        let mut agreed: Option<usize> = None;
        for s in plan.block_range(i) {
            if plan.kind(s) != PlanStateKind::CommittedExit {
                continue;
            }
            let a = chosen(s)?;
            match agreed {
                None => agreed = Some(a),
                Some(prev) if prev == a => {}
                Some(prev) => {
                    return Err(not_planner(format!(
                        "exits of the ({v}, {u}) block disagree: \
                         crossings {prev} and {a}"
                    )));
                }
            }
        }
        if let Some(a) = agreed {
            // Proper policies can only pick re-entry rows here, which exist
            // exactly for the crossings leaving `u`.
            let (from, to) = edges
                .edge_checked(a)
                .ok_or_else(|| not_planner(format!("block ({v}, {u}) picks `*` at an exit")))?;
            if from != u {
                return Err(not_planner(format!(
                    "block ({v}, {u}) commits to ({from}, {to}), \
                     which does not leave {u}"
                )));
            }
            next_target[i] = Some(to);
        }
    }

    let lowest_out = |v: VertexId| edges.edge(edges.out_range(v).start);
    let next: Vec<VertexId> = next_target
        .iter()
        .enumerate()
        .map(|(i, t)| t.unwrap_or_else(|| lowest_out(edges.edge(i).1).1))
        .collect();
    normal_form_planner(h, edges, &next)
}

/// Assembles the canonical planner committing `(u, next_target[i])` after
/// each observed crossing `i = (v, u)`: memory is the committed vertex, the
/// update ignores the previous memory, and `alpha` commits to the memory
/// vertex whenever it is a neighbor (falling back to the lowest crossing on
/// the off-diagonal entries that can never be reached).
pub(crate) fn normal_form_planner(
    h: &TwoLevelModel,
    edges: &EdgeIndex,
    next_target: &[VertexId],
) -> Result<Planner, SynthesisError> {
    let map = h.map();
    let n = map.n_vertices();
    let lowest_out = |v: VertexId| edges.edge(edges.out_range(v).start);
    let alpha: Vec<Vec<HalfEdge>> = (0..n)
        .map(|v| {
            (0..n)
                .map(|q| if map.is_edge(v, q) { (v, q) } else { lowest_out(v) })
                .collect()
        })
        .collect();
    let update: Vec<Vec<Vec<VertexId>>> = (0..n)
        .map(|v| {
            let row: Vec<VertexId> = edges.out_range(v).map(|i| next_target[i]).collect();
            (0..n).map(|_| row.clone()).collect()
        })
        .collect();
    Planner::new(h, h.d1().1, alpha, update)
}
