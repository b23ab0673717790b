//! Finite simple connected labelled graphs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::label::Label;

pub type VertexId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(VertexId, VertexId),
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph is empty")]
    Empty,
    #[error("labelling has {got} entries for {expected} vertices")]
    LabellingSize { expected: usize, got: usize },
}

/// A finite simple graph with a label on every vertex and every edge.
///
/// Vertex ids are the dense range `0..order()`. Adjacency lists are kept
/// sorted, so every traversal is deterministic. Edge labels are always
/// [`Label`]; the vertex label type is generic so the engine can store typed
/// states directly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelledGraph<V = Label> {
    labels: Vec<V>,
    adj: Vec<Vec<VertexId>>,
    edges: BTreeMap<(VertexId, VertexId), Label>,
}

fn key(u: VertexId, v: VertexId) -> (VertexId, VertexId) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Radius-1 rule support: the center and its neighbours, with center-incident
/// edges only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Star<V = Label> {
    pub center: VertexId,
    pub leaves: Vec<VertexId>,
    pub center_label: V,
    pub leaf_labels: Vec<V>,
    pub edge_labels: Vec<Label>,
}

/// An induced ball together with the original id of each of its vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ball<V = Label> {
    pub graph: LabelledGraph<V>,
    /// `origin[i]` is the id in the parent graph of ball vertex `i`.
    pub origin: Vec<VertexId>,
    /// Ball-local id of the center.
    pub center: VertexId,
}

/// Result of quotienting a graph by a vertex labelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quotient<V, W> {
    /// The distinct labelling values, in ascending order; quotient vertex `i`
    /// stands for `classes[i]`.
    pub classes: Vec<W>,
    /// Quotient graph carrying the original vertex and edge labels.
    pub graph: LabelledGraph<V>,
    pub projection: Vec<VertexId>,
    /// Two adjacent vertices share a class.
    pub self_loop: bool,
    /// A class mixes original vertex labels, or parallel edges disagree on
    /// their label.
    pub label_conflict: bool,
}

impl<V: Clone> LabelledGraph<V> {
    /// Edgeless graph with the given vertex labels.
    pub fn with_labels(labels: Vec<V>) -> Self {
        let n = labels.len();
        LabelledGraph {
            labels,
            adj: vec![Vec::new(); n],
            edges: BTreeMap::new(),
        }
    }

    /// Builds and validates a connected simple graph.
    pub fn from_edges(
        labels: Vec<V>,
        edges: impl IntoIterator<Item = (VertexId, VertexId, Label)>,
    ) -> Result<Self, GraphError> {
        let mut g = Self::with_labels(labels);
        for (u, v, l) in edges {
            g.add_edge(u, v, l)?;
        }
        g.check_connected()?;
        Ok(g)
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId, label: Label) -> Result<(), GraphError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if self.edges.contains_key(&key(u, v)) {
            return Err(GraphError::DuplicateEdge(u.min(v), u.max(v)));
        }
        self.edges.insert(key(u, v), label);
        let pos = self.adj[u].binary_search(&v).unwrap_err();
        self.adj[u].insert(pos, v);
        let pos = self.adj[v].binary_search(&u).unwrap_err();
        self.adj[v].insert(pos, u);
        Ok(())
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if v < self.labels.len() {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(v))
        }
    }

    pub fn check_connected(&self) -> Result<(), GraphError> {
        if self.labels.is_empty() {
            return Err(GraphError::Empty);
        }
        if self.distances(0).iter().all(Option::is_some) {
            Ok(())
        } else {
            Err(GraphError::Disconnected)
        }
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.labels.len()
    }

    pub fn label(&self, v: VertexId) -> &V {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[V] {
        &self.labels
    }

    pub fn set_label(&mut self, v: VertexId, label: V) {
        self.labels[v] = label;
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.edges.contains_key(&key(u, v))
    }

    pub fn edge_label(&self, u: VertexId, v: VertexId) -> Option<&Label> {
        self.edges.get(&key(u, v))
    }

    /// Edges as `(u, v, label)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, &Label)> + '_ {
        self.edges.iter().map(|(&(u, v), l)| (u, v, l))
    }

    pub fn map_labels<W: Clone>(&self, mut f: impl FnMut(VertexId, &V) -> W) -> LabelledGraph<W> {
        LabelledGraph {
            labels: self.labels.iter().enumerate().map(|(v, l)| f(v, l)).collect(),
            adj: self.adj.clone(),
            edges: self.edges.clone(),
        }
    }

    /// Same structure with new vertex labels.
    pub fn relabelled<W: Clone>(&self, labels: Vec<W>) -> Result<LabelledGraph<W>, GraphError> {
        if labels.len() != self.order() {
            return Err(GraphError::LabellingSize {
                expected: self.order(),
                got: labels.len(),
            });
        }
        Ok(LabelledGraph {
            labels,
            adj: self.adj.clone(),
            edges: self.edges.clone(),
        })
    }

    /// Breadth-first distances from `v`; `None` for unreachable vertices.
    pub fn distances(&self, v: VertexId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.order()];
        let mut queue = VecDeque::new();
        dist[v] = Some(0);
        queue.push_back(v);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &w in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn distance(&self, u: VertexId, v: VertexId) -> Option<usize> {
        self.distances(u)[v]
    }

    pub fn eccentricity(&self, v: VertexId) -> usize {
        self.distances(v).into_iter().flatten().max().unwrap_or(0)
    }

    pub fn diameter(&self) -> usize {
        self.vertices().map(|v| self.eccentricity(v)).max().unwrap_or(0)
    }

    /// Induced subgraph on the vertices at distance at most `r` from `v`.
    /// Ball vertices are numbered in ascending order of their original ids.
    pub fn ball(&self, v: VertexId, r: usize) -> Result<Ball<V>, GraphError> {
        self.check_vertex(v)?;
        let dist = self.distances(v);
        let origin: Vec<VertexId> = self
            .vertices()
            .filter(|&u| matches!(dist[u], Some(d) if d <= r))
            .collect();
        Ok(self.induced(origin, v))
    }

    fn induced(&self, origin: Vec<VertexId>, center: VertexId) -> Ball<V> {
        let mut local = vec![usize::MAX; self.order()];
        for (i, &u) in origin.iter().enumerate() {
            local[u] = i;
        }
        let mut graph = LabelledGraph::with_labels(origin.iter().map(|&u| self.labels[u].clone()).collect());
        for (u, w, l) in self.edges() {
            if local[u] != usize::MAX && local[w] != usize::MAX {
                graph
                    .add_edge(local[u], local[w], l.clone())
                    .expect("induced edges are simple");
            }
        }
        Ball {
            center: local[center],
            graph,
            origin,
        }
    }

    pub fn star(&self, v: VertexId) -> Result<Star<V>, GraphError> {
        self.check_vertex(v)?;
        let leaves = self.adj[v].clone();
        Ok(Star {
            center: v,
            center_label: self.labels[v].clone(),
            leaf_labels: leaves.iter().map(|&u| self.labels[u].clone()).collect(),
            edge_labels: leaves.iter().map(|&u| self.edge_label(v, u).unwrap().clone()).collect(),
            leaves,
        })
    }
}

impl<V: Clone + Ord> LabelledGraph<V> {
    /// Quotient by the vertex labelling `ell`.
    pub fn quotient<W: Clone + Ord>(&self, ell: &[W]) -> Result<Quotient<V, W>, GraphError> {
        if ell.len() != self.order() {
            return Err(GraphError::LabellingSize {
                expected: self.order(),
                got: ell.len(),
            });
        }
        let classes: Vec<W> = ell.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let projection: Vec<VertexId> = ell.iter().map(|w| classes.binary_search(w).unwrap()).collect();
        let mut label_conflict = false;
        let mut labels: Vec<Option<V>> = vec![None; classes.len()];
        for v in self.vertices() {
            match &labels[projection[v]] {
                None => labels[projection[v]] = Some(self.labels[v].clone()),
                Some(l) if *l != self.labels[v] => label_conflict = true,
                Some(_) => {}
            }
        }
        let mut graph = LabelledGraph::with_labels(labels.into_iter().map(Option::unwrap).collect());
        let mut self_loop = false;
        for (u, v, l) in self.edges() {
            let (a, b) = (projection[u], projection[v]);
            if a == b {
                self_loop = true;
                continue;
            }
            match graph.edge_label(a, b) {
                None => graph.add_edge(a, b, l.clone()).unwrap(),
                Some(existing) if existing != l => label_conflict = true,
                Some(_) => {}
            }
        }
        Ok(Quotient {
            classes,
            graph,
            projection,
            self_loop,
            label_conflict,
        })
    }

    /// Whether `ell` is injective on every star and equal values have
    /// isomorphic labelled stars.
    pub fn is_locally_bijective<W: Clone + Ord>(&self, ell: &[W]) -> bool {
        if ell.len() != self.order() {
            return false;
        }
        type StarSig<'a, V, W> = (&'a V, BTreeSet<(&'a W, &'a V, &'a Label)>);
        let mut seen: BTreeMap<&W, StarSig<'_, V, W>> = BTreeMap::new();
        for v in self.vertices() {
            let mut sig = BTreeSet::new();
            let mut values = BTreeSet::new();
            values.insert(&ell[v]);
            for &u in &self.adj[v] {
                if !values.insert(&ell[u]) {
                    return false;
                }
                sig.insert((&ell[u], &self.labels[u], self.edge_label(v, u).unwrap()));
            }
            let entry = (&self.labels[v], sig);
            match seen.get(&ell[v]) {
                Some(prev) if *prev != entry => return false,
                Some(_) => {}
                None => {
                    seen.insert(&ell[v], entry);
                }
            }
        }
        true
    }

    /// Canonical representative of the isomorphism class: the minimum, under
    /// the derived order, over all relabellings produced by
    /// individualisation and colour refinement.
    pub fn canonical_form(&self) -> LabelledGraph<V> {
        self.canonical_with_permutation().0
    }

    /// Canonical form plus `perm`, where `perm[v]` is the canonical id of `v`.
    pub fn canonical_with_permutation(&self) -> (LabelledGraph<V>, Vec<VertexId>) {
        let n = self.order();
        let sorted: Vec<&V> = self.labels.iter().collect::<BTreeSet<_>>().into_iter().collect();
        let colours: Vec<usize> = self.labels.iter().map(|l| sorted.binary_search(&l).unwrap()).collect();
        let colours = self.refine(colours);
        let mut best: Option<(LabelledGraph<V>, Vec<VertexId>)> = None;
        self.search(colours, &mut best);
        best.unwrap_or_else(|| (self.clone(), (0..n).collect()))
    }

    fn refine(&self, mut colours: Vec<usize>) -> Vec<usize> {
        loop {
            let sigs: Vec<(usize, Vec<(usize, &Label)>)> = self
                .vertices()
                .map(|v| {
                    let mut nb: Vec<(usize, &Label)> = self.adj[v]
                        .iter()
                        .map(|&u| (colours[u], self.edge_label(v, u).unwrap()))
                        .collect();
                    nb.sort();
                    (colours[v], nb)
                })
                .collect();
            let distinct: Vec<&(usize, Vec<(usize, &Label)>)> =
                sigs.iter().collect::<BTreeSet<_>>().into_iter().collect();
            let next: Vec<usize> = sigs.iter().map(|s| distinct.binary_search(&s).unwrap()).collect();
            let before = colours.iter().collect::<BTreeSet<_>>().len();
            colours = next;
            if distinct.len() == before {
                return colours;
            }
        }
    }

    fn search(&self, colours: Vec<usize>, best: &mut Option<(LabelledGraph<V>, Vec<VertexId>)>) {
        let n = self.order();
        let mut counts = vec![0usize; n];
        for &c in &colours {
            counts[c] += 1;
        }
        let Some(cell) = (0..n).find(|&c| counts[c] > 1) else {
            let candidate = self.permuted(&colours);
            if best.as_ref().is_none_or(|(b, _)| candidate < *b) {
                *best = Some((candidate, colours));
            }
            return;
        };
        for v in self.vertices().filter(|&v| colours[v] == cell) {
            let split: Vec<usize> = self
                .vertices()
                .map(|u| {
                    let c = colours[u] * 2;
                    if colours[u] > cell || (colours[u] == cell && u != v) {
                        c + 1
                    } else {
                        c
                    }
                })
                .collect();
            let ranks: Vec<usize> = split.iter().collect::<BTreeSet<_>>().into_iter().copied().collect();
            let split = split.iter().map(|c| ranks.binary_search(c).unwrap()).collect();
            self.search(self.refine(split), best);
        }
    }

    /// Graph with vertex `v` renamed to `perm[v]`; `perm` must be a bijection.
    pub fn permuted(&self, perm: &[VertexId]) -> LabelledGraph<V> {
        let mut labels: Vec<Option<V>> = vec![None; self.order()];
        for v in self.vertices() {
            labels[perm[v]] = Some(self.labels[v].clone());
        }
        let mut g = LabelledGraph::with_labels(labels.into_iter().map(Option::unwrap).collect());
        for (u, v, l) in self.edges() {
            g.add_edge(perm[u], perm[v], l.clone()).unwrap();
        }
        g
    }

    pub fn is_isomorphic(&self, other: &LabelledGraph<V>) -> bool {
        self.order() == other.order() && self.size() == other.size() && self.canonical_form() == other.canonical_form()
    }

    /// An isomorphism `self -> other` as a vertex map, if one exists.
    pub fn isomorphism_to(&self, other: &LabelledGraph<V>) -> Option<Vec<VertexId>> {
        if self.order() != other.order() || self.size() != other.size() {
            return None;
        }
        let (ca, pa) = self.canonical_with_permutation();
        let (cb, pb) = other.canonical_with_permutation();
        if ca != cb {
            return None;
        }
        let mut inv_b = vec![0; pb.len()];
        for (v, &c) in pb.iter().enumerate() {
            inv_b[c] = v;
        }
        Some(pa.iter().map(|&c| inv_b[c]).collect())
    }
}
