//! Canonical indexing of directed half-edges.
//!
//! Plans, succinct models, and planners all address crossings by one shared
//! scheme: half-edges are enumerated vertex by vertex in ascending order,
//! and within a vertex by ascending neighbor. The index of a half-edge
//! doubles as its action id, so conversions between the three layers never
//! translate indices.

use std::ops::Range;

use two_level_model::{HalfEdge, MapGraph, VertexId};

/// Dense index over the directed half-edges of a map, in canonical order.
#[derive(Clone, Debug)]
pub struct EdgeIndex {
    edges: Vec<HalfEdge>,
    /// Start of each vertex's out-edges in `edges`; one extra entry at the
    /// end so `offsets[v]..offsets[v + 1]` is always valid.
    offsets: Vec<usize>,
}

impl EdgeIndex {
    pub fn new(map: &MapGraph) -> Self {
        let n = map.n_vertices();
        let mut edges = Vec::new();
        let mut offsets = Vec::with_capacity(n + 1);
        for v in 0..n {
            offsets.push(edges.len());
            edges.extend(map.out(v));
        }
        offsets.push(edges.len());
        Self { edges, offsets }
    }

    /// Number of half-edges (twice the undirected edge count).
    pub fn n(&self) -> usize {
        self.edges.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge(&self, i: usize) -> HalfEdge {
        self.edges[i]
    }

    /// As `edge`, but `None` for out-of-range indices (e.g. the `*` action
    /// of a plan sharing this index space).
    pub fn edge_checked(&self, i: usize) -> Option<HalfEdge> {
        self.edges.get(i).copied()
    }

    pub fn edges(&self) -> &[HalfEdge] {
        &self.edges
    }

    /// Index of `(v, u)`, if `u` is a neighbor of `v`.
    pub fn index_of(&self, (v, u): HalfEdge) -> Option<usize> {
        if v >= self.n_vertices() {
            return None;
        }
        let range = self.out_range(v);
        self.edges[range.clone()]
            .binary_search_by_key(&u, |&(_, t)| t)
            .ok()
            .map(|pos| range.start + pos)
    }

    /// Indices of the half-edges leaving `v`, contiguous by construction.
    pub fn out_range(&self, v: VertexId) -> Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    /// Position of `(v, u)` among the out-edges of `v`.
    pub fn out_position(&self, e: HalfEdge) -> Option<usize> {
        self.index_of(e).map(|i| i - self.offsets[e.0])
    }
}
