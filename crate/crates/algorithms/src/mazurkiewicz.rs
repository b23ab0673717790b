//! Mazurkiewicz' enumeration algorithm and the interpretation of mailboxes.
//!
//! Each vertex carries its input label, a number, a local view (the numbers,
//! labels and edge labels of its numbered neighbours) and a mailbox of
//! `(label, number, view)` triples. Two rules: diffusion merges the mailboxes
//! of a star, renaming gives the center a fresh number when it is unnumbered
//! or when the mailbox shows a stronger vertex with the same number.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

use locomp_core::covering::{is_quasi_covering, Morphism, QuasiCoveringSpec};
use locomp_core::engine::{Rule, StarUpdate, StarView, System, Trace};
use locomp_core::{Label, LabelError, LabelledGraph, RunOutcome, State, VertexId};
use thiserror::Error;

/// One neighbour as seen in a local view.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ViewEntry {
    pub number: u32,
    pub vlabel: Label,
    pub elabel: Label,
}

/// Local view: entries sorted by decreasing number, then label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LocalView(Arc<[ViewEntry]>);

impl LocalView {
    pub fn new(mut entries: Vec<ViewEntry>) -> Self {
        entries.sort_by(|a, b| b.cmp(a));
        LocalView(entries.into())
    }

    pub fn entries(&self) -> &[ViewEntry] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn to_label(&self) -> Label {
        Label::tuple(
            self.0
                .iter()
                .map(|e| Label::tuple([Label::int(e.number as i64), e.vlabel.clone(), e.elabel.clone()])),
        )
    }

    fn from_label(l: &Label) -> Result<Self, LabelError> {
        let items = l.as_tuple().ok_or_else(|| LabelError::shape("view tuple", l))?;
        let mut entries = Vec::with_capacity(items.len());
        for item in items {
            match item.as_tuple() {
                Some([n, vl, el]) => entries.push(ViewEntry {
                    number: number_from(n)?,
                    vlabel: vl.clone(),
                    elabel: el.clone(),
                }),
                _ => return Err(LabelError::shape("(number, label, edge label)", item)),
            }
        }
        Ok(LocalView::new(entries))
    }
}

fn number_from(l: &Label) -> Result<u32, LabelError> {
    l.as_int()
        .and_then(|n| u32::try_from(n).ok())
        .ok_or_else(|| LabelError::shape("non-negative number", l))
}

/// The total order on local views: numbers over the common prefix, then
/// length, then vertex labels, then edge labels. The empty view is least.
pub fn compare_views(a: &LocalView, b: &LocalView) -> Ordering {
    let (x, y) = (a.entries(), b.entries());
    match (x.is_empty(), y.is_empty()) {
        (true, true) => return Ordering::Equal,
        (true, false) => return Ordering::Less,
        (false, true) => return Ordering::Greater,
        _ => {}
    }
    let k = x.len().min(y.len());
    x[..k]
        .iter()
        .zip(&y[..k])
        .map(|(p, q)| p.number.cmp(&q.number))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| x.len().cmp(&y.len()))
        .then_with(|| x.iter().map(|e| &e.vlabel).cmp(y.iter().map(|e| &e.vlabel)))
        .then_with(|| x.iter().map(|e| &e.elabel).cmp(y.iter().map(|e| &e.elabel)))
}

impl PartialOrd for LocalView {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LocalView {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_views(self, other)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MailEntry {
    pub label: Label,
    pub number: u32,
    pub view: LocalView,
}

impl MailEntry {
    /// Whether `self` is beaten by `other` (same number, larger label, or
    /// same label and stronger view).
    fn weaker_than(&self, other: &MailEntry) -> bool {
        self.number == other.number
            && (other.label > self.label || (other.label == self.label && self.view < other.view))
    }
}

pub type Mailbox = Arc<BTreeSet<MailEntry>>;

/// The graph of strongest vertices of a mailbox, with vertex `i` carrying
/// number `numbers[i]` (ascending).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Snapshot {
    pub graph: LabelledGraph,
    pub numbers: Vec<u32>,
}

impl Snapshot {
    pub fn index_of(&self, number: u32) -> Option<VertexId> {
        self.numbers.binary_search(&number).ok()
    }
}

/// Vertex state of the algorithm.
#[derive(Clone)]
pub struct MazurState {
    pub label: Label,
    pub number: u32,
    pub view: LocalView,
    pub mailbox: Mailbox,
    h: Arc<OnceLock<Option<Arc<Snapshot>>>>,
}

impl MazurState {
    pub fn new(label: Label, number: u32, view: LocalView, mailbox: Mailbox) -> Self {
        MazurState {
            label,
            number,
            view,
            mailbox,
            h: Arc::default(),
        }
    }

    pub fn initial(label: Label) -> Self {
        Self::new(label, 0, LocalView::default(), Mailbox::default())
    }

    pub fn triple(&self) -> MailEntry {
        MailEntry {
            label: self.label.clone(),
            number: self.number,
            view: self.view.clone(),
        }
    }

    /// The graph this vertex reconstructs from its mailbox, when the mailbox
    /// is well formed and the vertex's own triple is among the strongest.
    pub fn h(&self) -> Option<&Arc<Snapshot>> {
        self.h
            .get_or_init(|| {
                let own = self.triple();
                (self.number > 0 && self.mailbox.contains(&own) && is_strong(&own, &self.mailbox))
                    .then(|| reconstruct(&self.mailbox))
                    .flatten()
                    .map(Arc::new)
            })
            .as_ref()
    }

    fn key(&self) -> (&Label, u32, &LocalView, &Mailbox) {
        (&self.label, self.number, &self.view, &self.mailbox)
    }
}

impl fmt::Debug for MazurState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_label())
    }
}

impl PartialEq for MazurState {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for MazurState {}

impl PartialOrd for MazurState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MazurState {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl Hash for MazurState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl State for MazurState {
    fn to_label(&self) -> Label {
        Label::tagged(
            "mz",
            [
                self.label.clone(),
                Label::int(self.number as i64),
                self.view.to_label(),
                Label::set(
                    self.mailbox
                        .iter()
                        .map(|e| Label::tuple([e.label.clone(), Label::int(e.number as i64), e.view.to_label()])),
                ),
            ],
        )
    }

    fn from_label(l: &Label) -> Result<Self, LabelError> {
        let [label, n, view, mb] = l.expect_tagged("mz", 4)? else {
            unreachable!()
        };
        let set = mb.as_set().ok_or_else(|| LabelError::shape("mailbox set", mb))?;
        let mut mailbox = BTreeSet::new();
        for e in set {
            match e.as_tuple() {
                Some([el, en, ev]) => {
                    mailbox.insert(MailEntry {
                        label: el.clone(),
                        number: number_from(en)?,
                        view: LocalView::from_label(ev)?,
                    });
                }
                _ => return Err(LabelError::shape("(label, number, view)", e)),
            }
        }
        Ok(MazurState::new(
            label.clone(),
            number_from(n)?,
            LocalView::from_label(view)?,
            Arc::new(mailbox),
        ))
    }
}

/// Whether no entry of `m` beats `e`.
pub fn is_strong(e: &MailEntry, m: &BTreeSet<MailEntry>) -> bool {
    !m.iter().any(|o| e.weaker_than(o))
}

/// The strongest entry for every number occurring in `m`, by number.
pub fn strongest(m: &BTreeSet<MailEntry>) -> BTreeMap<u32, MailEntry> {
    let mut best: BTreeMap<u32, MailEntry> = BTreeMap::new();
    for e in m {
        match best.get(&e.number) {
            Some(b) if !b.weaker_than(e) => {}
            _ => {
                best.insert(e.number, e.clone());
            }
        }
    }
    best
}

/// The graph of strongest vertices of `m`, if it is a well formed connected
/// simple graph: views list distinct numbers present in the mailbox with
/// their strongest labels, and adjacency is symmetric with matching edge
/// labels.
pub fn reconstruct(m: &BTreeSet<MailEntry>) -> Option<Snapshot> {
    let best = strongest(m);
    if best.is_empty() || best.contains_key(&0) {
        return None;
    }
    let numbers: Vec<u32> = best.keys().copied().collect();
    let index = |n: u32| numbers.binary_search(&n).ok();
    let mut edges = Vec::new();
    for (i, e) in best.values().enumerate() {
        let mut seen = BTreeSet::new();
        for ve in e.view.entries() {
            let j = index(ve.number)?;
            let other = &best[&ve.number];
            if j == i || !seen.insert(ve.number) || other.label != ve.vlabel {
                return None;
            }
            let back = other
                .view
                .entries()
                .iter()
                .filter(|b| b.number == e.number)
                .collect::<Vec<_>>();
            if back.len() != 1 || back[0].vlabel != e.label || back[0].elabel != ve.elabel {
                return None;
            }
            if i < j {
                edges.push((i, j, ve.elabel.clone()));
            }
        }
    }
    let labels = best.values().map(|e| e.label.clone()).collect();
    let graph = LabelledGraph::from_edges(labels, edges).ok()?;
    Some(Snapshot { graph, numbers })
}

fn diffusion(view: &StarView<'_, MazurState>) -> Vec<StarUpdate<MazurState>> {
    let m0 = &view.center.mailbox;
    if view.leaves.iter().all(|l| l.mailbox == *m0) {
        return vec![];
    }
    let mut union: BTreeSet<MailEntry> = (**m0).clone();
    for l in &view.leaves {
        union.extend(l.mailbox.iter().cloned());
    }
    let union = Arc::new(union);
    let with = |s: &MazurState| MazurState::new(s.label.clone(), s.number, s.view.clone(), union.clone());
    vec![StarUpdate {
        center: with(view.center),
        leaves: view.leaves.iter().map(|s| with(s)).collect(),
    }]
}

fn renaming(view: &StarView<'_, MazurState>) -> Vec<StarUpdate<MazurState>> {
    let c = view.center;
    let m0 = &c.mailbox;
    if view.leaves.iter().any(|l| l.mailbox != *m0) {
        return vec![];
    }
    let own = c.triple();
    if c.number > 0 && !m0.iter().any(|e| own.weaker_than(e)) {
        return vec![];
    }
    let fresh = 1 + m0.iter().map(|e| e.number).max().unwrap_or(0);
    // Leaf views: the entry for the center gets the fresh number.
    let leaf_views: Vec<LocalView> = view
        .leaves
        .iter()
        .zip(&view.edges)
        .map(|(l, &e)| {
            let mut entries = l.view.entries().to_vec();
            let old = ViewEntry {
                number: c.number,
                vlabel: c.label.clone(),
                elabel: e.clone(),
            };
            let new = ViewEntry {
                number: fresh,
                ..old.clone()
            };
            match entries.iter().position(|x| *x == old) {
                Some(p) if c.number > 0 => entries[p] = new,
                _ => entries.push(new),
            }
            LocalView::new(entries)
        })
        .collect();
    let center_view = LocalView::new(
        view.leaves
            .iter()
            .zip(&view.edges)
            .filter(|(l, _)| l.number > 0)
            .map(|(l, &e)| ViewEntry {
                number: l.number,
                vlabel: l.label.clone(),
                elabel: e.clone(),
            })
            .collect(),
    );
    let mut mailbox: BTreeSet<MailEntry> = (**m0).clone();
    mailbox.insert(MailEntry {
        label: c.label.clone(),
        number: fresh,
        view: center_view.clone(),
    });
    for (l, v) in view.leaves.iter().zip(&leaf_views) {
        if l.number > 0 {
            mailbox.insert(MailEntry {
                label: l.label.clone(),
                number: l.number,
                view: v.clone(),
            });
        }
    }
    let mailbox = Arc::new(mailbox);
    vec![StarUpdate {
        center: MazurState::new(c.label.clone(), fresh, center_view, mailbox.clone()),
        leaves: view
            .leaves
            .iter()
            .zip(leaf_views)
            .map(|(l, v)| MazurState::new(l.label.clone(), l.number, v, mailbox.clone()))
            .collect(),
    }]
}

pub fn mazur_system() -> System<MazurState> {
    System::new(
        "mazurkiewicz",
        vec![Rule::new("diffusion", diffusion), Rule::new("renaming", renaming)],
    )
}

pub fn initial_state(g: &LabelledGraph) -> LabelledGraph<MazurState> {
    g.map_labels(|_, l| MazurState::initial(l.clone()))
}

/// Input labels of a configuration.
pub fn input_graph(g: &LabelledGraph<MazurState>) -> LabelledGraph {
    g.map_labels(|_, s| s.label.clone())
}

/// Numbers of a configuration, by vertex.
pub fn numbers(g: &LabelledGraph<MazurState>) -> Vec<u32> {
    g.labels().iter().map(|s| s.number).collect()
}

/// The six properties of a final configuration, in order: numbers are
/// `1..=m` without gaps; mailboxes agree; every vertex triple is in every
/// mailbox; mailbox entries realised by a vertex are exactly the strong ones;
/// equal numbers have equal labels and views; numbers are locally bijective.
pub const FINAL_PROPERTIES: [&str; 6] = [
    "numbers cover 1..=m",
    "mailboxes are equal",
    "every vertex triple is in every mailbox",
    "realised entries are exactly the strong entries",
    "equal numbers have equal labels and views",
    "numbering is locally bijective",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalReport {
    /// Indices into [`FINAL_PROPERTIES`] that fail.
    pub failures: Vec<usize>,
}

impl FinalReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("run did not reach a normal form ({0})")]
    Incomplete(RunOutcome),
}

pub fn verify_final(trace: &Trace<MazurState>) -> Result<FinalReport, VerifyError> {
    if trace.outcome != RunOutcome::NormalForm {
        return Err(VerifyError::Incomplete(trace.outcome));
    }
    Ok(verify_final_state(&trace.final_graph))
}

pub fn verify_final_state(g: &LabelledGraph<MazurState>) -> FinalReport {
    let s = g.labels();
    let mut failures = Vec::new();
    let nums = numbers(g);
    let m = nums.iter().copied().max().unwrap_or(0);
    let present: BTreeSet<u32> = nums.iter().copied().collect();
    if present != (1..=m).collect() {
        failures.push(0);
    }
    if s.iter().any(|x| x.mailbox != s[0].mailbox) {
        failures.push(1);
    }
    let triples: BTreeSet<MailEntry> = s.iter().map(MazurState::triple).collect();
    if s.iter().any(|x| !triples.is_subset(&x.mailbox)) {
        failures.push(2);
    }
    if s.iter().any(|x| {
        x.mailbox
            .iter()
            .any(|e| triples.contains(e) != is_strong(e, &x.mailbox))
    }) {
        failures.push(3);
    }
    let mut by_number: BTreeMap<u32, (&Label, &LocalView)> = BTreeMap::new();
    if s.iter()
        .any(|x| *by_number.entry(x.number).or_insert((&x.label, &x.view)) != (&x.label, &x.view))
    {
        failures.push(4);
    }
    if !input_graph(g).is_locally_bijective(&nums) {
        failures.push(5);
    }
    FinalReport { failures }
}

/// Largest radius, at most the diameter, within which every vertex
/// reconstructs the same graph as `v`; `None` when `v` reconstructs nothing.
pub fn r_agree(g: &LabelledGraph<MazurState>, v: VertexId) -> Option<usize> {
    let h = g.label(v).h()?;
    let dist = g.distances(v);
    let mut r = g.diameter();
    for w in g.vertices() {
        if g.label(w).h() != Some(h) {
            r = r.min(dist[w].unwrap() - 1);
        }
    }
    Some(r)
}

/// Checks that the configuration quasi-covers `H(v)` around `v` with radius
/// `r_agree(v)`, through the map sending a vertex to its number.
pub fn agree_quasi_covering(g: &LabelledGraph<MazurState>, v: VertexId) -> Option<bool> {
    let r = r_agree(g, v)?;
    let h = g.label(v).h()?;
    let dist = g.distances(v);
    let mut map = vec![None; g.order()];
    for w in g.vertices().filter(|&w| dist[w].unwrap() <= r) {
        match h.index_of(g.label(w).number) {
            Some(t) => map[w] = Some(t),
            None => return Some(false),
        }
    }
    let morphism = Morphism::partial(input_graph(g), h.graph.clone(), map).ok()?;
    Some(
        is_quasi_covering(&QuasiCoveringSpec {
            center: v,
            radius: r,
            morphism,
        })
        .unwrap_or(false),
    )
}
