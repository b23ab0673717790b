//! Finite graph families and the covering-closure test χ.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Mutex;

use locomp_core::covering::find_quasi_covering;
use locomp_core::generators::ring;
use locomp_core::{Label, LabelledGraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chi {
    Yes,
    Bot,
}

/// A finite family of connected graphs, enumerated by increasing diameter.
pub struct FamilySpec {
    pub name: String,
    /// Canonical forms sorted by (diameter, order, form).
    members: Vec<LabelledGraph>,
    diameters: Vec<usize>,
    /// Least diameter of a member covering a given graph.
    cache: Mutex<HashMap<LabelledGraph, Option<usize>>>,
}

impl fmt::Debug for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FamilySpec({}, {} members)", self.name, self.members.len())
    }
}

impl FamilySpec {
    pub fn new(name: &str, graphs: impl IntoIterator<Item = LabelledGraph>) -> Self {
        let set: BTreeSet<(usize, usize, LabelledGraph)> = graphs
            .into_iter()
            .map(|g| {
                let c = g.canonical_form();
                (c.diameter(), c.order(), c)
            })
            .collect();
        let diameters = set.iter().map(|(d, _, _)| *d).collect();
        FamilySpec {
            name: name.to_string(),
            members: set.into_iter().map(|(_, _, g)| g).collect(),
            diameters,
            cache: Mutex::default(),
        }
    }

    /// Rings `R_3 .. R_max`.
    pub fn rings(max: usize) -> Self {
        Self::new(&format!("rings{max}"), (3..=max).map(ring))
    }

    /// Rings of prime size up to `max`.
    pub fn prime_rings(max: usize) -> Self {
        let prime = |n: usize| n >= 2 && (2..n).all(|d| !n.is_multiple_of(d));
        Self::new(&format!("prime-rings{max}"), (3..=max).filter(|&n| prime(n)).map(ring))
    }

    /// All trees with at most `max` vertices (at least two).
    pub fn trees(max: usize) -> Self {
        let mut layer: BTreeSet<LabelledGraph> =
            [LabelledGraph::from_edges(vec![Label::Bot; 2], vec![(0, 1, Label::Bot)])
                .expect("edge is connected")
                .canonical_form()]
            .into();
        let mut all: Vec<LabelledGraph> = layer.iter().cloned().collect();
        for _ in 3..=max {
            let mut next = BTreeSet::new();
            for t in &layer {
                for v in t.vertices() {
                    let mut g = LabelledGraph::with_labels(vec![Label::Bot; t.order() + 1]);
                    for (a, b, l) in t.edges() {
                        g.add_edge(a, b, l.clone()).unwrap();
                    }
                    g.add_edge(v, t.order(), Label::Bot).unwrap();
                    next.insert(g.canonical_form());
                }
            }
            all.extend(next.iter().cloned());
            layer = next;
        }
        Self::new(&format!("trees{max}"), all)
    }

    /// Families known to the command line: `rings6`, `prime-rings7`,
    /// `trees8`, or the same names with another bound.
    pub fn by_name(name: &str) -> Option<Self> {
        let split = name.find(|c: char| c.is_ascii_digit())?;
        let bound: usize = name[split..].parse().ok()?;
        match &name[..split] {
            "rings" if bound >= 3 => Some(Self::rings(bound)),
            "prime-rings" if bound >= 3 => Some(Self::prime_rings(bound)),
            "trees" if bound >= 2 => Some(Self::trees(bound)),
            _ => None,
        }
    }

    pub fn members(&self) -> &[LabelledGraph] {
        &self.members
    }

    pub fn contains(&self, g: &LabelledGraph) -> bool {
        let c = g.canonical_form();
        self.members
            .binary_search_by(|m| (m.diameter(), m.order(), m).cmp(&(c.diameter(), c.order(), &c)))
            .is_ok()
    }

    /// Radius beyond which no member strictly quasi-covers anything.
    pub fn r_bound(&self) -> usize {
        self.diameters.iter().copied().max().unwrap_or(0)
    }

    /// Least diameter of a member that covers `h`.
    pub fn least_cover_diameter(&self, h: &LabelledGraph) -> Option<usize> {
        if let Some(d) = self.cache.lock().unwrap().get(h) {
            return *d;
        }
        let found = self
            .members
            .iter()
            .zip(&self.diameters)
            .find(|(k, _)| covers(k, h))
            .map(|(_, &d)| d);
        self.cache.lock().unwrap().insert(h.clone(), found);
        found
    }

    /// `Yes` when a member of diameter below `r` covers `h`. The center `u`
    /// does not affect the answer: a covering reaches every vertex.
    pub fn chi(&self, h: &LabelledGraph, u: VertexId, r: Option<usize>) -> Chi {
        debug_assert!(u < h.order());
        match (r, self.least_cover_diameter(h)) {
            (Some(r), Some(d)) if d < r => Chi::Yes,
            _ => Chi::Bot,
        }
    }
}

/// Whether some covering maps `k` onto `h`.
fn covers(k: &LabelledGraph, h: &LabelledGraph) -> bool {
    if k.order() % h.order() != 0 || k.size() * h.order() != h.size() * k.order() {
        return false;
    }
    let degrees = |g: &LabelledGraph| {
        let mut d: Vec<usize> = g.vertices().map(|v| g.degree(v)).collect();
        d.sort();
        d
    };
    let q = k.order() / h.order();
    let hd: Vec<usize> = degrees(h).into_iter().flat_map(|d| std::iter::repeat_n(d, q)).collect();
    if degrees(k) != hd {
        return false;
    }
    let r = k.diameter() + 1;
    h.vertices().any(|t| find_quasi_covering(k, 0, h, t, r).is_some())
}
