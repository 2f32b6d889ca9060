use crate::error::ModelError;

/// Index of a vertex in a [`MapGraph`].
pub type VertexId = usize;

/// A directed half-edge `(source, target)` of the undirected map graph.
///
/// Every undirected edge `{v, u}` is visible as the two half-edges `(v, u)`
/// and `(u, v)`; entrances, exits, and planner choices are all
/// direction-sensitive, so the half-edge is the unit the rest of the model
/// works with.
pub type HalfEdge = (VertexId, VertexId);

/// Undirected map graph over named vertices.
///
/// Construction rejects structurally unusable input (unknown endpoints,
/// duplicate vertex names). Semantic invariants — no self-loops, no duplicate
/// edges, minimum degree 1 — are reported by [`crate::TwoLevelModel::validate`]
/// so that a loaded model can name its first violation.
#[derive(Debug, Clone)]
pub struct MapGraph {
    names: Vec<String>,
    /// Sorted neighbor lists, one per vertex, as implied by `edges`.
    adjacency: Vec<Vec<VertexId>>,
    /// Edges exactly as supplied (used for deterministic serialization and
    /// for validation of self-loops / duplicates).
    edges: Vec<(VertexId, VertexId)>,
}

impl MapGraph {
    pub fn new(names: Vec<String>, edges: Vec<(VertexId, VertexId)>) -> Result<Self, ModelError> {
        let n = names.len();
        if n == 0 {
            return Err(ModelError::InvalidModel {
                detail: "map has no vertices".to_string(),
            });
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(ModelError::InvalidModel {
                    detail: format!("duplicate vertex name {name}"),
                });
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(v, u) in &edges {
            if v >= n || u >= n {
                return Err(ModelError::InvalidModel {
                    detail: format!("edge ({v}, {u}) references a vertex out of range (|V| = {n})"),
                });
            }
            if v != u {
                adjacency[v].push(u);
                adjacency[u].push(v);
            } else {
                // Representable so that validate() can report the self-loop;
                // stored once to keep neighbor lists free of duplicates.
                adjacency[v].push(u);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(MapGraph {
            names,
            adjacency,
            edges,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<VertexId> {
        self.names.iter().position(|n| n == name)
    }

    /// Neighbors of `v` in ascending order.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    pub fn is_edge(&self, v: VertexId, u: VertexId) -> bool {
        self.adjacency[v].binary_search(&u).is_ok()
    }

    /// Outgoing half-edges of `v`, ordered by target vertex.
    pub fn out(&self, v: VertexId) -> impl Iterator<Item = HalfEdge> + '_ {
        self.adjacency[v].iter().map(move |&u| (v, u))
    }

    /// The edge list exactly as supplied at construction.
    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    /// Vertices reachable from `source` along edges.
    pub fn reachable_from(&self, source: VertexId) -> Vec<bool> {
        let mut seen = vec![false; self.n_vertices()];
        let mut stack = vec![source];
        seen[source] = true;
        while let Some(v) = stack.pop() {
            for &u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}
