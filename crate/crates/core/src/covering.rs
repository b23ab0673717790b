//! Coverings, quasi-coverings and their constructions.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{GraphError, LabelledGraph, VertexId};
use crate::label::Label;

/// Largest graph accepted by the exhaustive quotient search.
pub const SEARCH_BOUND: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoveringError {
    #[error("graph has {0} vertices, above the search bound of {SEARCH_BOUND}")]
    TooLarge(usize),
    #[error("map has {got} entries for a source with {expected} vertices")]
    MapSize { expected: usize, got: usize },
    #[error("map is undefined at vertex {0} inside the ball")]
    UndefinedInBall(VertexId),
    #[error("map sends vertex {0} outside the target")]
    OutOfRange(VertexId),
    #[error("edge {{{0}, {1}}} is not a spanning-tree edge of the base graph")]
    NotATreeEdge(VertexId, VertexId),
    #[error("the given edge set is not a spanning tree")]
    NotSpanningTree,
    #[error("no permutation given for cotree edge {{{0}, {1}}}")]
    MissingPermutation(VertexId, VertexId),
    #[error("invalid permutation on edge {{{0}, {1}}}")]
    BadPermutation(VertexId, VertexId),
    #[error("the construction yields a disconnected graph")]
    Disconnected,
    #[error("quasi-lifting needs radius at least 2, got {0}")]
    RadiusTooSmall(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A possibly partial vertex map between two labelled graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism<V = Label> {
    pub source: LabelledGraph<V>,
    pub target: LabelledGraph<V>,
    pub map: Vec<Option<VertexId>>,
}

impl<V: Clone + Eq> Morphism<V> {
    pub fn total(
        source: LabelledGraph<V>,
        target: LabelledGraph<V>,
        map: Vec<VertexId>,
    ) -> Result<Self, CoveringError> {
        Self::partial(source, target, map.into_iter().map(Some).collect())
    }

    pub fn partial(
        source: LabelledGraph<V>,
        target: LabelledGraph<V>,
        map: Vec<Option<VertexId>>,
    ) -> Result<Self, CoveringError> {
        if map.len() != source.order() {
            return Err(CoveringError::MapSize {
                expected: source.order(),
                got: map.len(),
            });
        }
        if let Some(v) = (0..map.len()).find(|&v| matches!(map[v], Some(t) if t >= target.order())) {
            return Err(CoveringError::OutOfRange(v));
        }
        Ok(Morphism { source, target, map })
    }

    pub fn image(&self, v: VertexId) -> Option<VertexId> {
        self.map[v]
    }

    /// Preimages of target vertex `t`, ascending.
    pub fn preimages(&self, t: VertexId) -> Vec<VertexId> {
        (0..self.map.len()).filter(|&v| self.map[v] == Some(t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringVerdict {
    pub is_covering: bool,
    pub sheets: Option<usize>,
    /// A source vertex at which the covering condition fails.
    pub witness: Option<VertexId>,
    pub reason: Option<String>,
}

impl CoveringVerdict {
    fn fail(witness: Option<VertexId>, reason: impl Into<String>) -> Self {
        CoveringVerdict {
            is_covering: false,
            sheets: None,
            witness,
            reason: Some(reason.into()),
        }
    }
}

/// Checks that `γ(v)` has the label of `v` and that `γ` restricted to the
/// star of `v` is a label-preserving bijection onto the star of `γ(v)`.
fn star_bijective<V: Clone + Eq>(m: &Morphism<V>, v: VertexId) -> Result<(), String> {
    let Some(t) = m.map[v] else {
        return Err(format!("undefined at {v}"));
    };
    if m.source.label(v) != m.target.label(t) {
        return Err(format!("vertex label differs at {v}"));
    }
    if m.source.degree(v) != m.target.degree(t) {
        return Err(format!("degree of {v} differs from degree of its image {t}"));
    }
    let mut hit = BTreeSet::new();
    for &w in m.source.neighbors(v) {
        let Some(tw) = m.map[w] else {
            return Err(format!("undefined at neighbour {w} of {v}"));
        };
        if m.target.edge_label(t, tw) != m.source.edge_label(v, w) {
            return Err(format!("edge {{{v}, {w}}} is not mapped onto an equally labelled edge"));
        }
        if !hit.insert(tw) {
            return Err(format!("two neighbours of {v} share the image {tw}"));
        }
    }
    Ok(())
}

pub fn is_covering<V: Clone + Eq>(m: &Morphism<V>) -> CoveringVerdict {
    if let Some(v) = (0..m.map.len()).find(|&v| m.map[v].is_none()) {
        return CoveringVerdict::fail(Some(v), format!("map undefined at {v}"));
    }
    let mut fibres = vec![0usize; m.target.order()];
    for t in m.map.iter().flatten() {
        fibres[*t] += 1;
    }
    if let Some(t) = fibres.iter().position(|&c| c == 0) {
        return CoveringVerdict::fail(None, format!("target vertex {t} has no preimage"));
    }
    for v in m.source.vertices() {
        if let Err(reason) = star_bijective(m, v) {
            return CoveringVerdict::fail(Some(v), reason);
        }
    }
    if fibres.iter().any(|&c| c != fibres[0]) {
        return CoveringVerdict::fail(None, "fibres have different sizes");
    }
    CoveringVerdict {
        is_covering: true,
        sheets: Some(fibres[0]),
        witness: None,
        reason: None,
    }
}

/// A map that looks like a covering within `radius` of `center`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiCoveringSpec<V = Label> {
    pub center: VertexId,
    pub radius: usize,
    pub morphism: Morphism<V>,
}

impl<V: Clone + Eq> QuasiCoveringSpec<V> {
    /// Whether the ball of radius `radius - 1` misses part of the source.
    pub fn is_strict(&self) -> bool {
        let dist = self.morphism.source.distances(self.center);
        dist.iter().flatten().any(|&d| d + 1 > self.radius)
    }
}

/// Quasi-covering test on the induced ball of radius `r` around the center:
/// label-preserving homomorphism on the ball, bijective on the star of every
/// vertex at distance at most `r - 1`, injective on the in-ball neighbours of
/// every vertex at distance exactly `r`.
pub fn is_quasi_covering<V: Clone + Eq>(spec: &QuasiCoveringSpec<V>) -> Result<bool, CoveringError> {
    let m = &spec.morphism;
    m.source.check_vertex(spec.center)?;
    let r = spec.radius;
    let dist = m.source.distances(spec.center);
    let in_ball = |v: VertexId| matches!(dist[v], Some(d) if d <= r);
    for v in m.source.vertices().filter(|&v| in_ball(v)) {
        if m.map[v].is_none() {
            return Err(CoveringError::UndefinedInBall(v));
        }
    }
    for v in m.source.vertices().filter(|&v| in_ball(v)) {
        let t = m.map[v].unwrap();
        if m.source.label(v) != m.target.label(t) {
            return Ok(false);
        }
        let d = dist[v].unwrap();
        if d < r {
            if star_bijective(m, v).is_err() {
                return Ok(false);
            }
            continue;
        }
        let mut hit = BTreeSet::new();
        for &w in m.source.neighbors(v).iter().filter(|&&w| in_ball(w)) {
            let tw = m.map[w].unwrap();
            if m.target.edge_label(t, tw) != m.source.edge_label(v, w) || !hit.insert(tw) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Minimum over target vertices of the number of preimages whose whole star
/// lies inside the ball and whose degree matches the target degree.
pub fn quasi_sheets<V: Clone + Eq>(spec: &QuasiCoveringSpec<V>) -> Result<usize, CoveringError> {
    is_quasi_covering(spec)?;
    let m = &spec.morphism;
    let dist = m.source.distances(spec.center);
    let in_ball = |v: VertexId| matches!(dist[v], Some(d) if d <= spec.radius);
    let mut counts = vec![0usize; m.target.order()];
    for v in m.source.vertices().filter(|&v| in_ball(v)) {
        let t = m.map[v].unwrap();
        if m.source.neighbors(v).iter().all(|&w| in_ball(w)) && m.source.degree(v) == m.target.degree(t) {
            counts[t] += 1;
        }
    }
    Ok(counts.into_iter().min().unwrap_or(0))
}

/// The graph `H_{T,Σ}`: vertex `(x, i)` gets id `x * q + i`. Permutations act
/// on `0..q`; `sigma[(x, y)]` is used for the orientation `x -> y`, and the
/// opposite orientation uses its inverse unless given explicitly.
pub fn reidemeister_build<V: Clone + Eq>(
    h: &LabelledGraph<V>,
    tree: &[(VertexId, VertexId)],
    q: usize,
    sigma: &BTreeMap<(VertexId, VertexId), Vec<usize>>,
) -> Result<Morphism<V>, CoveringError> {
    let tree_set: BTreeSet<(VertexId, VertexId)> = tree.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    for &(u, v) in &tree_set {
        if !h.has_edge(u, v) {
            return Err(CoveringError::NotATreeEdge(u, v));
        }
    }
    if tree_set.len() + 1 != h.order() {
        return Err(CoveringError::NotSpanningTree);
    }
    let mut t = LabelledGraph::with_labels(vec![(); h.order()]);
    for &(u, v) in &tree_set {
        t.add_edge(u, v, Label::Bot)?;
    }
    if t.check_connected().is_err() {
        return Err(CoveringError::NotSpanningTree);
    }
    let mut g = LabelledGraph::with_labels((0..h.order() * q).map(|id| h.label(id / q).clone()).collect());
    for (x, y, l) in h.edges() {
        let perm: Vec<usize> = if tree_set.contains(&(x, y)) {
            (0..q).collect()
        } else if let Some(p) = sigma.get(&(x, y)) {
            p.clone()
        } else if let Some(p) = sigma.get(&(y, x)) {
            let mut inv = vec![usize::MAX; p.len()];
            for (i, &j) in p.iter().enumerate() {
                if j < inv.len() {
                    inv[j] = i;
                }
            }
            inv
        } else {
            return Err(CoveringError::MissingPermutation(x, y));
        };
        let valid = perm.len() == q && perm.iter().collect::<BTreeSet<_>>().len() == q && perm.iter().all(|&j| j < q);
        if !valid {
            return Err(CoveringError::BadPermutation(x, y));
        }
        if let (Some(p), Some(back)) = (sigma.get(&(x, y)), sigma.get(&(y, x))) {
            if (0..q).any(|i| back.get(p[i]) != Some(&i)) {
                return Err(CoveringError::BadPermutation(x, y));
            }
        }
        for i in 0..q {
            g.add_edge(x * q + i, y * q + perm[i], l.clone())?;
        }
    }
    if g.check_connected().is_err() {
        return Err(CoveringError::Disconnected);
    }
    let map = (0..h.order() * q).map(|id| id / q).collect();
    Morphism::total(g, h.clone(), map)
}

/// Truncation at depth `r` of the universal covering: the tree of
/// non-stuttering walks of length at most `r` from `v`, projected onto walk
/// endpoints. Vertex 0 is the empty walk; ids follow breadth-first order.
pub fn universal_cover_ball<V: Clone + Eq>(
    g: &LabelledGraph<V>,
    v: VertexId,
    r: usize,
) -> Result<QuasiCoveringSpec<V>, CoveringError> {
    g.check_vertex(v)?;
    // (endpoint, previous endpoint)
    let mut walks: Vec<(VertexId, Option<VertexId>)> = vec![(v, None)];
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    for _ in 0..r {
        let mut next = Vec::new();
        for &w in &frontier {
            let (end, prev) = walks[w];
            for &u in g.neighbors(end) {
                if Some(u) == prev {
                    continue;
                }
                let id = walks.len();
                walks.push((u, Some(end)));
                edges.push((w, id, g.edge_label(end, u).unwrap().clone()));
                next.push(id);
            }
        }
        frontier = next;
    }
    let tree = LabelledGraph::from_edges(walks.iter().map(|&(e, _)| g.label(e).clone()).collect(), edges)?;
    let map = walks.iter().map(|&(e, _)| e).collect();
    Ok(QuasiCoveringSpec {
        center: 0,
        radius: r,
        morphism: Morphism::total(tree, g.clone(), map)?,
    })
}

/// Searches for a quasi-covering of `target` by `source` of radius `r` that
/// sends `center` to `target_center`.
pub fn find_quasi_covering<V: Clone + Eq>(
    source: &LabelledGraph<V>,
    center: VertexId,
    target: &LabelledGraph<V>,
    target_center: VertexId,
    r: usize,
) -> Option<QuasiCoveringSpec<V>> {
    if source.label(center) != target.label(target_center) {
        return None;
    }
    let dist = source.distances(center);
    let mut interior: Vec<VertexId> = source
        .vertices()
        .filter(|&v| matches!(dist[v], Some(d) if d < r))
        .collect();
    interior.sort_by_key(|&v| (dist[v], v));
    let mut map: Vec<Option<VertexId>> = vec![None; source.order()];
    map[center] = Some(target_center);
    let mut found = None;
    extend_quasi(source, target, &interior, 0, &mut map, &mut |map| {
        let spec = QuasiCoveringSpec {
            center,
            radius: r,
            morphism: Morphism {
                source: source.clone(),
                target: target.clone(),
                map: map.to_vec(),
            },
        };
        if is_quasi_covering(&spec) == Ok(true) {
            found = Some(spec);
            true
        } else {
            false
        }
    });
    found
}

/// Assigns the neighbours of `interior[idx..]` one star at a time; `done`
/// returns true to stop the search.
fn extend_quasi<V: Clone + Eq>(
    source: &LabelledGraph<V>,
    target: &LabelledGraph<V>,
    interior: &[VertexId],
    idx: usize,
    map: &mut Vec<Option<VertexId>>,
    done: &mut dyn FnMut(&[Option<VertexId>]) -> bool,
) -> bool {
    let Some(&x) = interior.get(idx) else {
        return done(map);
    };
    let tx = map[x].expect("interior vertices are reached from the center");
    if source.degree(x) != target.degree(tx) {
        return false;
    }
    let mut used = BTreeSet::new();
    let mut open = Vec::new();
    for &w in source.neighbors(x) {
        match map[w] {
            Some(tw) => {
                if !target.has_edge(tx, tw) || target.edge_label(tx, tw) != source.edge_label(x, w) || !used.insert(tw)
                {
                    return false;
                }
            }
            None => open.push(w),
        }
    }
    let free: Vec<VertexId> = target
        .neighbors(tx)
        .iter()
        .copied()
        .filter(|t| !used.contains(t))
        .collect();
    assign_open(
        source,
        target,
        interior,
        idx,
        x,
        tx,
        &open,
        0,
        &free,
        &mut vec![false; free.len()],
        map,
        done,
    )
}

#[allow(clippy::too_many_arguments)]
fn assign_open<V: Clone + Eq>(
    source: &LabelledGraph<V>,
    target: &LabelledGraph<V>,
    interior: &[VertexId],
    idx: usize,
    x: VertexId,
    tx: VertexId,
    open: &[VertexId],
    k: usize,
    free: &[VertexId],
    taken: &mut Vec<bool>,
    map: &mut Vec<Option<VertexId>>,
    done: &mut dyn FnMut(&[Option<VertexId>]) -> bool,
) -> bool {
    if k == open.len() {
        return extend_quasi(source, target, interior, idx + 1, map, done);
    }
    let w = open[k];
    for (j, &t) in free.iter().enumerate() {
        if taken[j] || source.label(w) != target.label(t) || source.edge_label(x, w) != target.edge_label(tx, t) {
            continue;
        }
        taken[j] = true;
        map[w] = Some(t);
        if assign_open(
            source,
            target,
            interior,
            idx,
            x,
            tx,
            open,
            k + 1,
            free,
            taken,
            map,
            done,
        ) {
            return true;
        }
        map[w] = None;
        taken[j] = false;
    }
    false
}

/// All proper quotients of `g` up to isomorphism, each with its projection.
/// Candidate fibres have equal size, a common label and degree, and pairwise
/// distance at least 3; every candidate is confirmed with [`is_covering`].
pub fn find_proper_quotients<V: Clone + Ord>(g: &LabelledGraph<V>) -> Result<Vec<Morphism<V>>, CoveringError> {
    let n = g.order();
    if n > SEARCH_BOUND {
        return Err(CoveringError::TooLarge(n));
    }
    let dist: Vec<Vec<Option<usize>>> = g.vertices().map(|v| g.distances(v)).collect();
    let compatible = |u: VertexId, v: VertexId| {
        g.label(u) == g.label(v) && g.degree(u) == g.degree(v) && dist[u][v].is_some_and(|d| d >= 3)
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for q in (2..=n).filter(|q| n.is_multiple_of(*q)) {
        let classes = n / q;
        let mut class_of = vec![usize::MAX; n];
        let mut members: Vec<Vec<VertexId>> = Vec::new();
        partitions(
            0,
            q,
            classes,
            &compatible,
            &mut class_of,
            &mut members,
            &mut |class_of| {
                let q = g.quotient(class_of).expect("labelling is total");
                if q.self_loop || q.label_conflict {
                    return;
                }
                let m = Morphism::total(g.clone(), q.graph.clone(), q.projection.clone()).unwrap();
                if is_covering(&m).is_covering && seen.insert(q.graph.canonical_form()) {
                    out.push(m);
                }
            },
        );
    }
    Ok(out)
}

fn partitions(
    v: VertexId,
    q: usize,
    classes: usize,
    compatible: &dyn Fn(VertexId, VertexId) -> bool,
    class_of: &mut Vec<usize>,
    members: &mut Vec<Vec<VertexId>>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if v == class_of.len() {
        visit(class_of);
        return;
    }
    for c in 0..members.len() {
        if members[c].len() < q && members[c].iter().all(|&u| compatible(u, v)) {
            members[c].push(v);
            class_of[v] = c;
            partitions(v + 1, q, classes, compatible, class_of, members, visit);
            members[c].pop();
        }
    }
    if members.len() < classes {
        members.push(vec![v]);
        class_of[v] = members.len() - 1;
        partitions(v + 1, q, classes, compatible, class_of, members, visit);
        members.pop();
    }
    class_of[v] = usize::MAX;
}

pub fn covering_minimal<V: Clone + Ord>(g: &LabelledGraph<V>) -> Result<bool, CoveringError> {
    Ok(find_proper_quotients(g)?.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete, path, ring, star};

    fn mod_map(n: usize, k: usize) -> Morphism {
        Morphism::total(ring(n), ring(k), (0..n).map(|i| i % k).collect()).unwrap()
    }

    #[test]
    fn ring_coverings() {
        let v = is_covering(&mod_map(6, 3));
        assert!(v.is_covering);
        assert_eq!(v.sheets, Some(2));
        let id = Morphism::total(complete(4), complete(4), (0..4).collect()).unwrap();
        assert_eq!(is_covering(&id).sheets, Some(1));
        let constant = Morphism::total(ring(6), ring(3), vec![0; 6]).unwrap();
        assert!(!is_covering(&constant).is_covering);
    }

    #[test]
    fn quotient_search() {
        let qs = find_proper_quotients(&ring(6)).unwrap();
        assert!(qs.iter().any(|m| m.target.is_isomorphic(&ring(3))));
        assert!(covering_minimal(&ring(5)).unwrap());
        assert!(covering_minimal(&ring(7)).unwrap());
        assert!(!covering_minimal(&ring(6)).unwrap());
        assert!(covering_minimal(&complete(4)).unwrap());
        assert!(covering_minimal(&path(6)).unwrap());
        assert!(covering_minimal(&star(3)).unwrap());
        assert_eq!(find_proper_quotients(&ring(13)), Err(CoveringError::TooLarge(13)));
    }

    #[test]
    fn reidemeister_ring() {
        let h = ring(3);
        let tree = [(0, 1), (1, 2)];
        let mut sigma = BTreeMap::new();
        sigma.insert((0, 2), vec![1, 0]);
        let m = reidemeister_build(&h, &tree, 2, &sigma).unwrap();
        assert!(m.source.is_isomorphic(&ring(6)));
        assert_eq!(is_covering(&m).sheets, Some(2));

        sigma.insert((0, 2), vec![0, 1]);
        assert_eq!(
            reidemeister_build(&h, &tree, 2, &sigma),
            Err(CoveringError::Disconnected)
        );

        let m = reidemeister_build(&h, &tree, 1, &BTreeMap::from([((2, 0), vec![0])])).unwrap();
        assert!(m.source.is_isomorphic(&h));

        assert_eq!(
            reidemeister_build(&h, &tree, 2, &BTreeMap::new()),
            Err(CoveringError::MissingPermutation(0, 2))
        );
        assert_eq!(
            reidemeister_build(&h, &[(0, 1)], 2, &sigma),
            Err(CoveringError::NotSpanningTree)
        );
    }

    #[test]
    fn universal_truncations() {
        let spec = universal_cover_ball(&ring(3), 0, 2).unwrap();
        assert!(spec.morphism.source.is_isomorphic(&path(5)));
        assert_eq!(is_quasi_covering(&spec), Ok(true));
        assert_eq!(quasi_sheets(&spec), Ok(1));
        let zero = universal_cover_ball(&ring(3), 1, 0).unwrap();
        assert_eq!(zero.morphism.source.order(), 1);
        assert_eq!(zero.morphism.map, vec![Some(1)]);
        assert_eq!(quasi_sheets(&zero), Ok(0));
        assert_eq!(
            universal_cover_ball(&complete(4), 0, 2)
                .unwrap()
                .morphism
                .source
                .order(),
            10
        );
    }

    #[test]
    fn quasi_coverings_from_coverings() {
        let m = mod_map(6, 3);
        for z in 0..6 {
            for r in 0..=6 {
                let spec = QuasiCoveringSpec {
                    center: z,
                    radius: r,
                    morphism: m.clone(),
                };
                assert_eq!(is_quasi_covering(&spec), Ok(true));
            }
        }
        let spec = QuasiCoveringSpec {
            center: 0,
            radius: 6,
            morphism: m,
        };
        assert_eq!(quasi_sheets(&spec), Ok(2));
    }

    #[test]
    fn path_over_triangle() {
        // path 0-1-2-3-4 walking around the triangle, centered at 2
        let m = Morphism::total(path(5), ring(3), vec![1, 2, 0, 1, 2]).unwrap();
        let spec = |r| QuasiCoveringSpec {
            center: 2,
            radius: r,
            morphism: m.clone(),
        };
        assert_eq!(is_quasi_covering(&spec(2)), Ok(true));
        assert_eq!(is_quasi_covering(&spec(3)), Ok(false));
        let partial = Morphism::partial(path(5), ring(3), vec![None, Some(2), Some(0), Some(1), None]).unwrap();
        let spec = QuasiCoveringSpec {
            center: 2,
            radius: 2,
            morphism: partial,
        };
        assert_eq!(is_quasi_covering(&spec), Err(CoveringError::UndefinedInBall(0)));
    }

    #[test]
    fn quasi_covering_search() {
        assert!(find_quasi_covering(&ring(6), 0, &ring(3), 0, 6).is_some());
        assert!(find_quasi_covering(&path(5), 2, &ring(3), 1, 2).is_some());
        assert!(find_quasi_covering(&path(5), 2, &ring(3), 1, 3).is_none());
        assert!(find_quasi_covering(&ring(5), 0, &ring(4), 0, 2).is_none());
    }
}
