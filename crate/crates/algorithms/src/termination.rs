//! Termination detection: classification of runs, tasks, the universal
//! constructions over cartography, and the impossibility demonstrations.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use locomp_core::covering::{
    find_proper_quotients, find_quasi_covering, reidemeister_build, universal_cover_ball, QuasiCoveringSpec,
};
use locomp_core::engine::{run, Rule, Scheduler, StarUpdate, StarView, System, Trace};
use locomp_core::lift::{lift_run, quasi_lift_step, LiftError, LiftedRun};
use locomp_core::{Label, LabelError, LabelledGraph, State, VertexId};

use crate::carto::carto_same;
use crate::catalog::{
    elect, election_complete, election_initial, non_elect, recruit, subtree_done, term_from, term_label, word, HasTree,
    Node,
};
use crate::family::{Chi, FamilySpec};
use crate::gssp::{counted, gssp_wrap, project_rule, Counted, SameValue};
use crate::mazurkiewicz::{mazur_system, MazurState, Snapshot};

/// What a classifier reads from a vertex state.
pub trait Observed {
    fn out(&self) -> &Label;
    fn term(&self) -> bool;
}

impl Observed for Node {
    fn out(&self) -> &Label {
        &self.out
    }
    fn term(&self) -> bool {
        self.term
    }
}

/// Strongest termination claim a run satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    /// Some vertex set `Term` and later changed its output or dropped `Term`.
    Broken,
    /// No vertex ever sets `Term`.
    Implicit,
    /// Every vertex's output is final once it shows `Term`.
    Ltd,
    /// Every output is final once any vertex shows `Term`.
    Otd,
    /// A single `Term`, set by the final event.
    Gtd,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Broken => "broken",
            Mode::Implicit => "implicit",
            Mode::Ltd => "LTD",
            Mode::Otd => "OTD",
            Mode::Gtd => "GTD",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub mode: Mode,
    /// Event that rules out the next stronger mode, if any.
    pub witness: Option<usize>,
}

pub fn classify<S: State + Observed>(trace: &Trace<S>) -> Classification {
    let g0 = &trace.initial;
    let mut termed: Vec<bool> = g0.labels().iter().map(|s| s.term()).collect();
    let mut first_term: Option<usize> = None;
    let mut local_break = None;
    let mut global_break = None;
    let mut term_count = termed.iter().filter(|&&t| t).count();
    for (k, e) in trace.events.iter().enumerate() {
        let any_before = first_term.is_some() || termed.iter().any(|&t| t);
        for ((v, before), (_, after)) in e.before.iter().zip(&e.after) {
            let changed = before.out() != after.out();
            if termed[*v] && (changed || !after.term()) {
                local_break.get_or_insert(k);
            }
            if any_before && (changed || (before.term() && !after.term())) {
                global_break.get_or_insert(k);
            }
            if after.term() && !termed[*v] {
                termed[*v] = true;
                term_count += 1;
                first_term.get_or_insert(k);
            }
        }
    }
    if term_count == 0 {
        return Classification {
            mode: Mode::Implicit,
            witness: None,
        };
    }
    if let Some(k) = local_break {
        return Classification {
            mode: Mode::Broken,
            witness: Some(k),
        };
    }
    if let Some(k) = global_break {
        return Classification {
            mode: Mode::Ltd,
            witness: Some(k),
        };
    }
    let last = trace.events.len().checked_sub(1);
    if term_count == 1 && first_term == last && first_term.is_some() {
        Classification {
            mode: Mode::Gtd,
            witness: None,
        }
    } else {
        Classification {
            mode: Mode::Otd,
            witness: first_term
                .map(|k| k + 1)
                .filter(|&k| k < trace.events.len())
                .or(first_term),
        }
    }
}

/// A task: admissible outputs on a graph, and a validity check for final
/// outputs on an input graph.
#[derive(Clone)]
pub struct Task {
    pub name: String,
    pub outputs: Arc<dyn Fn(&LabelledGraph) -> Vec<Vec<Label>> + Send + Sync>,
    pub valid: Arc<dyn Fn(&LabelledGraph, &[Label]) -> bool + Send + Sync>,
}

impl fmt::Debug for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Task({})", self.name)
    }
}

impl Task {
    pub fn by_name(name: &str) -> Option<Task> {
        match name {
            "election" => Some(election_task()),
            _ => {
                let k: i64 = name.strip_prefix("colo")?.parse().ok()?;
                (k >= 1).then(|| colouring_task(k))
            }
        }
    }
}

/// Exactly one vertex outputs `Elect`, all others `Non-Elect`. On a graph
/// the vertex with index 0 (number 1 for reconstructed graphs) is elected.
pub fn election_task() -> Task {
    Task {
        name: "election".into(),
        outputs: Arc::new(|h| {
            vec![(0..h.order())
                .map(|v| if v == 0 { elect() } else { non_elect() })
                .collect()]
        }),
        valid: Arc::new(|_, outs| {
            outs.iter().filter(|o| **o == elect()).count() == 1
                && outs.iter().all(|o| *o == elect() || *o == non_elect())
        }),
    }
}

/// Proper colourings with colours `1..=d + 1`, in lexicographic order.
pub fn colouring_task(d: i64) -> Task {
    let valid = move |g: &LabelledGraph, outs: &[Label]| {
        outs.iter()
            .all(|o| matches!(o.as_int(), Some(c) if (1..=d + 1).contains(&c)))
            && g.edges().all(|(a, b, _)| outs[a] != outs[b])
    };
    Task {
        name: format!("colo{d}"),
        outputs: Arc::new(move |h| {
            let mut all = Vec::new();
            let mut cur = vec![0i64; h.order()];
            colourings(h, d + 1, 0, &mut cur, &mut all);
            all
        }),
        valid: Arc::new(valid),
    }
}

fn colourings(h: &LabelledGraph, k: i64, v: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<Label>>) {
    if v == h.order() {
        out.push(cur.iter().map(|&c| Label::int(c)).collect());
        return;
    }
    for c in 1..=k {
        if h.neighbors(v).iter().all(|&w| w >= v || cur[w] != c) {
            cur[v] = c;
            colourings(h, k, v + 1, cur, out);
        }
    }
    cur[v] = 0;
}

pub fn check_task<S: Clone + Observed>(task: &Task, g: &LabelledGraph<S>) -> bool {
    let input = g.map_labels(|_, _| Label::Bot);
    let outs: Vec<Label> = g.labels().iter().map(|s| s.out().clone()).collect();
    (task.valid)(&input, &outs)
}

/// An output picked for a reconstructed graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chosen {
    pub h: LabelledGraph,
    pub numbers: Vec<u32>,
    pub outputs: Vec<Label>,
}

impl Chosen {
    fn output_for(&self, number: u32) -> Option<&Label> {
        self.numbers.binary_search(&number).ok().map(|i| &self.outputs[i])
    }

    fn matches(&self, h: &Snapshot) -> bool {
        self.h == h.graph && self.numbers == h.numbers
    }
}

/// State of the universal constructions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UniState {
    pub mz: MazurState,
    pub chosen: Option<Arc<Chosen>>,
    pub out: Label,
    pub term: bool,
    /// Spanning tree word (global termination only).
    pub tree: Label,
}

impl UniState {
    pub fn initial(label: Label) -> Self {
        UniState {
            mz: MazurState::initial(label),
            chosen: None,
            out: Label::Bot,
            term: false,
            tree: Label::Bot,
        }
    }
}

fn graph_to_label(g: &LabelledGraph) -> Label {
    Label::tagged(
        "graph",
        [
            Label::tuple(g.labels().iter().cloned()),
            Label::tuple(
                g.edges()
                    .map(|(a, b, l)| Label::tuple([Label::int(a as i64), Label::int(b as i64), l.clone()])),
            ),
        ],
    )
}

fn graph_from_label(l: &Label) -> Result<LabelledGraph, LabelError> {
    let [labels, edges] = l.expect_tagged("graph", 2)? else {
        unreachable!()
    };
    let labels = labels
        .as_tuple()
        .ok_or_else(|| LabelError::shape("tuple", labels))?
        .to_vec();
    let mut es = Vec::new();
    for e in edges.as_tuple().ok_or_else(|| LabelError::shape("tuple", edges))? {
        match e.as_tuple() {
            Some([a, b, el]) => es.push((a.expect_int()? as usize, b.expect_int()? as usize, el.clone())),
            _ => return Err(LabelError::shape("(u, v, label)", e)),
        }
    }
    LabelledGraph::from_edges(labels, es).map_err(|err| LabelError::shape(err.to_string(), l))
}

impl State for UniState {
    fn to_label(&self) -> Label {
        let chosen = self.chosen.as_ref().map_or(Label::Bot, |c| {
            Label::tuple([
                graph_to_label(&c.h),
                Label::tuple(c.numbers.iter().map(|&n| Label::int(n as i64))),
                Label::tuple(c.outputs.iter().cloned()),
            ])
        });
        Label::tagged(
            "uni",
            [
                self.mz.to_label(),
                chosen,
                self.out.clone(),
                term_label(self.term),
                self.tree.clone(),
            ],
        )
    }

    fn from_label(l: &Label) -> Result<Self, LabelError> {
        let [mz, chosen, out, term, tree] = l.expect_tagged("uni", 5)? else {
            unreachable!()
        };
        let chosen = match chosen {
            Label::Bot => None,
            c => match c.as_tuple() {
                Some([h, numbers, outputs]) => Some(Arc::new(Chosen {
                    h: graph_from_label(h)?,
                    numbers: numbers
                        .as_tuple()
                        .ok_or_else(|| LabelError::shape("tuple", numbers))?
                        .iter()
                        .map(|n| n.expect_int().map(|n| n as u32))
                        .collect::<Result<_, _>>()?,
                    outputs: outputs
                        .as_tuple()
                        .ok_or_else(|| LabelError::shape("tuple", outputs))?
                        .to_vec(),
                })),
                _ => return Err(LabelError::shape("(graph, numbers, outputs)", c)),
            },
        };
        Ok(UniState {
            mz: MazurState::from_label(mz)?,
            chosen,
            out: out.clone(),
            term: term_from(term)?,
            tree: tree.clone(),
        })
    }
}

pub type UniCounted = Counted<UniState>;

impl Observed for UniCounted {
    fn out(&self) -> &Label {
        &self.base.out
    }
    fn term(&self) -> bool {
        self.base.term
    }
}

impl HasTree for UniCounted {
    fn tree(&self) -> &Label {
        &self.base.tree
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniMode {
    Implicit,
    Otd,
    Gtd,
}

impl UniMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "itd" | "i" => Some(Self::Implicit),
            "otd" => Some(Self::Otd),
            "gtd" => Some(Self::Gtd),
            _ => None,
        }
    }
}

fn chi_uni(family: &FamilySpec, s: &UniCounted) -> Chi {
    crate::carto::chi_at(
        family,
        &Counted {
            base: s.base.mz.clone(),
            a: s.a,
        },
    )
}

/// Whether the counter has passed the family bound on a defined graph.
fn done(family: &FamilySpec, s: &UniCounted) -> bool {
    s.base.mz.h().is_some() && matches!(s.trust(), Some(r) if r > family.r_bound())
}

fn out_is_chosen(s: &UniState) -> bool {
    match (&s.chosen, s.mz.h()) {
        (Some(c), Some(h)) => c.matches(h) && c.output_for(s.mz.number) == Some(&s.out),
        _ => false,
    }
}

/// The universal construction for `task` over `family`: cartography, an
/// output picked once χ confirms the reconstructed graph, unification of
/// picks towards the least, and the requested termination detection.
pub fn universal(mode: UniMode, task: Arc<Task>, family: Arc<FamilySpec>) -> System<UniCounted> {
    let put = Arc::new(|s: &UniCounted, mz: MazurState| {
        let mut base = s.base.clone();
        if base.mz.mailbox != mz.mailbox {
            base.chosen = None;
        }
        base.mz = mz;
        Counted { base, a: s.a }
    });
    let mut rules: Vec<Rule<UniCounted>> = mazur_system()
        .rules
        .into_iter()
        .map(|r| project_rule(r, |s: &UniCounted| &s.base.mz, put.clone()))
        .collect();

    let fam = family.clone();
    rules.push(Rule::new("pick", move |v: &StarView<'_, UniCounted>| {
        let c = v.center;
        if c.base.chosen.is_some() || chi_uni(&fam, c) != Chi::Yes {
            return vec![];
        }
        let h = c.base.mz.h().expect("χ is Yes only on a defined graph");
        (task.outputs)(&h.graph)
            .into_iter()
            .map(|outputs| {
                let mut n = c.clone();
                n.base.chosen = Some(Arc::new(Chosen {
                    h: h.graph.clone(),
                    numbers: h.numbers.clone(),
                    outputs,
                }));
                StarUpdate::center(v, n)
            })
            .collect()
    }));

    rules.push(Rule::new("unify", |v: &StarView<'_, UniCounted>| {
        let c = &v.center.base;
        let (Some(ch), Some(h)) = (&c.chosen, c.mz.h()) else {
            return vec![];
        };
        if !ch.matches(h) {
            return vec![];
        }
        let star = || std::iter::once(v.center).chain(v.leaves.iter().copied());
        let agree =
            star().all(|s| s.base.mz.mailbox == c.mz.mailbox && s.base.chosen.as_ref().is_none_or(|o| **ch <= **o));
        if !agree {
            return vec![];
        }
        let set = |s: &UniCounted| {
            let out = ch.output_for(s.base.mz.number)?.clone();
            let mut n = s.clone();
            n.base.chosen = Some(ch.clone());
            n.base.out = out;
            Some(n)
        };
        let Some(center) = set(v.center) else { return vec![] };
        let Some(leaves) = v.leaves.iter().map(|s| set(s)).collect::<Option<Vec<_>>>() else {
            return vec![];
        };
        vec![StarUpdate { center, leaves }]
    }));

    match mode {
        UniMode::Implicit => {}
        UniMode::Otd => {
            let fam = family.clone();
            rules.push(Rule::center_rule(
                "termination-detection",
                move |v: &StarView<'_, UniCounted>| {
                    (!v.center.base.term && done(&fam, v.center)).then(|| {
                        let mut n = v.center.clone();
                        n.base.term = true;
                        n
                    })
                },
            ));
        }
        UniMode::Gtd => {
            let fam = family.clone();
            rules.push(Rule::center_rule("root", move |v: &StarView<'_, UniCounted>| {
                let b = &v.center.base;
                (b.tree.is_bot() && b.mz.number == 1 && done(&fam, v.center)).then(|| {
                    let mut n = v.center.clone();
                    n.base.tree = Label::tuple([]);
                    n
                })
            }));
            let fam = family.clone();
            rules.push(Rule::new("spanning-vertices", move |v: &StarView<'_, UniCounted>| {
                let Some(w) = word(&v.center.base.tree) else {
                    return vec![];
                };
                let fresh: Vec<usize> = (0..v.degree())
                    .filter(|&i| v.leaves[i].base.tree.is_bot() && done(&fam, v.leaves[i]))
                    .collect();
                if fresh.is_empty() {
                    return vec![];
                }
                let mut words = recruit(w, fresh.len()).into_iter();
                let mut u = StarUpdate::center(v, v.center.clone());
                for i in fresh {
                    u.leaves[i].base.tree = words.next().unwrap();
                }
                vec![u]
            }));
            rules.push(Rule::center_rule("acknowledgement", |v: &StarView<'_, UniCounted>| {
                let w = word(&v.center.base.tree).filter(|w| !w.is_empty())?;
                subtree_done(v, w).then(|| {
                    let mut n = v.center.clone();
                    n.base.tree = Label::tagged("ack", [n.base.tree.clone()]);
                    n
                })
            }));
            rules.push(Rule::center_rule(
                "global-termination",
                |v: &StarView<'_, UniCounted>| {
                    let w = word(&v.center.base.tree).filter(|w| w.is_empty())?;
                    (!v.center.base.term && subtree_done(v, w)).then(|| {
                        let mut n = v.center.clone();
                        n.base.term = true;
                        n
                    })
                },
            ));
        }
    }

    let same: SameValue<UniState> = match mode {
        UniMode::Implicit => {
            let m = carto_same();
            Arc::new(move |a: &UniState, b: &UniState| m(&a.mz, &b.mz))
        }
        _ => {
            let m = carto_same();
            Arc::new(move |a: &UniState, b: &UniState| m(&a.mz, &b.mz) && a.chosen == b.chosen)
        }
    };
    let fam = family.clone();
    let guard = Arc::new(move |v: &StarView<'_, UniCounted>| {
        let c = v.center;
        chi_uni(&fam, c) != Chi::Yes
            || (mode != UniMode::Implicit && c.trust().is_none_or(|r| r <= fam.r_bound()) && out_is_chosen(&c.base))
    });
    let name = match mode {
        UniMode::Implicit => "universal-itd",
        UniMode::Otd => "universal-otd",
        UniMode::Gtd => "universal-gtd",
    };
    gssp_wrap(name, rules, same, guard)
}

pub fn universal_initial(g: &LabelledGraph) -> LabelledGraph<UniCounted> {
    counted(&g.map_labels(|_, l| UniState::initial(l.clone())))
}

/// Election by the universal construction with global termination.
pub fn election_universal(family: Arc<FamilySpec>) -> System<UniCounted> {
    universal(UniMode::Gtd, Arc::new(election_task()), family)
}

/// Counts of each output in a configuration.
pub fn output_counts<S: Clone + Observed>(g: &LabelledGraph<S>) -> BTreeMap<Label, usize> {
    let mut m = BTreeMap::new();
    for s in g.labels() {
        *m.entry(s.out().clone()).or_insert(0) += 1;
    }
    m
}

pub fn elect_count<S: Clone + Observed>(g: &LabelledGraph<S>) -> usize {
    g.labels().iter().filter(|s| *s.out() == elect()).count()
}

/// A run of complete-graph election on `K_3` lifted to the ring on
/// `3 * sheets` vertices through a Reidemeister covering: every sheet elects.
pub fn demo_lifted_election(sheets: usize, seed: u64) -> Result<(Trace<Node>, LiftedRun<Node>), LiftError> {
    let k3 = locomp_core::generators::complete(3);
    let sys = election_complete();
    let trace = run(&sys, &election_initial(&k3), &Scheduler::Random(seed), 1000);
    let shift: Vec<usize> = (0..sheets).map(|i| (i + 1) % sheets).collect();
    let sigma = BTreeMap::from([((2, 0), shift)]);
    let cover = reidemeister_build(&k3, &[(0, 1), (1, 2)], sheets, &sigma)?;
    let lifted = lift_run(&sys, &trace, &cover)?;
    Ok((trace, lifted))
}

/// A run of the universal OTD construction for colouring on `R_3`, cut at
/// the first `Term`, transported onto a strict quasi-covering of radius
/// `2l + 1` (a truncated universal cover one layer deeper), where `l` is the
/// number of steps.
#[derive(Debug, Clone)]
pub struct QuasiLiftDemo {
    pub steps: usize,
    pub initial: QuasiCoveringSpec<UniCounted>,
    pub last: QuasiCoveringSpec<UniCounted>,
    /// Source vertex showing `Term` after the last step.
    pub term_vertex: VertexId,
    /// Source vertices beyond the initial radius that kept their initial
    /// state.
    pub untouched_fringe: Vec<VertexId>,
}

pub fn demo_quasi_lifted_otd(seed: u64) -> Result<QuasiLiftDemo, LiftError> {
    let family = Arc::new(FamilySpec::rings(6));
    let sys = universal(UniMode::Otd, Arc::new(colouring_task(2)), family);
    let r3 = universal_initial(&locomp_core::generators::ring(3));
    let trace = run(&sys, &r3, &Scheduler::Random(seed), 100_000);
    let first = trace
        .events
        .iter()
        .position(|e| e.after.iter().any(|(_, s)| s.base.term))
        .expect("the OTD construction terminates on R3");
    let l = first + 1;
    let center = trace.events[first].center;
    // One extra layer beyond the quasi-covering radius: no lifted step
    // reaches it.
    let mut initial = universal_cover_ball(&trace.initial, center, 2 * l + 2)?;
    initial.radius = 2 * l + 1;
    let mut spec = initial.clone();
    for e in &trace.events[..l] {
        spec = quasi_lift_step(&sys, &spec, e)?.spec;
    }
    let src = &spec.morphism.source;
    let term_vertex = src
        .vertices()
        .find(|&v| src.label(v).base.term)
        .expect("the center repeats every step");
    let dist = initial.morphism.source.distances(initial.center);
    let untouched_fringe = src
        .vertices()
        .filter(|&v| dist[v] == Some(initial.radius + 1) && src.label(v) == initial.morphism.source.label(v))
        .collect();
    Ok(QuasiLiftDemo {
        steps: l,
        initial,
        last: spec,
        term_vertex,
        untouched_fringe,
    })
}

/// Looks for two members that quasi-cover a common graph at radius
/// `family.r_bound()` but get different task values. The common graphs
/// tried are the members and their proper quotients.
pub fn ltd_closure_counterexample(
    family: &FamilySpec,
    f: &dyn Fn(&LabelledGraph) -> Label,
) -> Option<(LabelledGraph, LabelledGraph, LabelledGraph)> {
    let r = family.r_bound();
    let mut targets: Vec<LabelledGraph> = family.members().to_vec();
    for k in family.members() {
        if let Ok(qs) = find_proper_quotients(k) {
            targets.extend(qs.into_iter().map(|m| m.target.canonical_form()));
        }
    }
    targets.sort();
    targets.dedup();
    let quasi = |k: &LabelledGraph, h: &LabelledGraph| {
        k.vertices()
            .any(|c| h.vertices().any(|t| find_quasi_covering(k, c, h, t, r).is_some()))
    };
    for h in &targets {
        let over: Vec<&LabelledGraph> = family.members().iter().filter(|k| quasi(k, h)).collect();
        for (i, a) in over.iter().enumerate() {
            for b in &over[i + 1..] {
                if f(a) != f(b) {
                    return Some(((*a).clone(), (*b).clone(), h.clone()));
                }
            }
        }
    }
    None
}
