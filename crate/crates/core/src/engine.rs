//! Execution of graph relabelling systems on stars.
//!
//! A [`Rule`] sees a [`StarView`]: the center state, the leaf states and the
//! center-incident edge labels, with leaves in ascending vertex order. Vertex
//! ids are hidden, so every rule is invariant under isomorphism. The rule
//! returns candidate relabellings of the star; candidates that change nothing
//! are discarded, and a rule with no remaining candidate is not enabled.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{LabelledGraph, VertexId};
use crate::label::{Label, State};

pub struct StarView<'a, S> {
    pub center: &'a S,
    pub leaves: Vec<&'a S>,
    pub edges: Vec<&'a Label>,
}

impl<'a, S> StarView<'a, S> {
    pub fn degree(&self) -> usize {
        self.leaves.len()
    }
}

/// New states for the center and for each leaf, in view order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarUpdate<S> {
    pub center: S,
    pub leaves: Vec<S>,
}

impl<S: Clone> StarUpdate<S> {
    /// Relabels only the center.
    pub fn center(view: &StarView<'_, S>, center: S) -> Self {
        StarUpdate {
            center,
            leaves: view.leaves.iter().map(|&s| s.clone()).collect(),
        }
    }
}

impl<S: PartialEq> StarUpdate<S> {
    fn changes(&self, view: &StarView<'_, S>) -> bool {
        self.center != *view.center || self.leaves.iter().zip(&view.leaves).any(|(a, b)| a != *b)
    }
}

pub type RuleFn<S> = dyn Fn(&StarView<'_, S>) -> Vec<StarUpdate<S>> + Send + Sync;

#[derive(Clone)]
pub struct Rule<S> {
    pub id: Arc<str>,
    apply: Arc<RuleFn<S>>,
}

impl<S> fmt::Debug for Rule<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rule({})", self.id)
    }
}

impl<S: State> Rule<S> {
    pub fn new(id: &str, apply: impl Fn(&StarView<'_, S>) -> Vec<StarUpdate<S>> + Send + Sync + 'static) -> Self {
        Rule {
            id: Arc::from(id),
            apply: Arc::new(apply),
        }
    }

    /// A rule relabelling only the center, with at most one outcome.
    pub fn center_rule(id: &str, f: impl Fn(&StarView<'_, S>) -> Option<S> + Send + Sync + 'static) -> Self {
        Self::new(id, move |view| {
            f(view).map(|c| vec![StarUpdate::center(view, c)]).unwrap_or_default()
        })
    }

    /// Candidate relabellings that change at least one state.
    pub fn candidates(&self, view: &StarView<'_, S>) -> Vec<StarUpdate<S>> {
        let mut out = (self.apply)(view);
        out.retain(|u| u.leaves.len() == view.leaves.len() && u.changes(view));
        out
    }
}

#[derive(Clone, Debug)]
pub struct System<S> {
    pub name: String,
    pub rules: Vec<Rule<S>>,
}

impl<S: State> System<S> {
    pub fn new(name: &str, rules: Vec<Rule<S>>) -> Self {
        System {
            name: name.to_string(),
            rules,
        }
    }

    pub fn rule_index(&self, id: &str) -> Option<usize> {
        self.rules.iter().position(|r| &*r.id == id)
    }
}

/// Builds the view of the star of `center` with leaves in the given order.
pub fn star_view<'a, S>(g: &'a LabelledGraph<S>, center: VertexId, leaves: &[VertexId]) -> StarView<'a, S>
where
    S: Clone,
{
    StarView {
        center: g.label(center),
        leaves: leaves.iter().map(|&u| g.label(u)).collect(),
        edges: leaves
            .iter()
            .map(|&u| g.edge_label(center, u).expect("leaf is adjacent"))
            .collect(),
    }
}

/// A rule application: rule, star center and the index of the chosen
/// candidate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occurrence {
    pub rule: Arc<str>,
    pub center: VertexId,
    pub alt: usize,
}

impl Occurrence {
    pub fn new(rule: &str, center: VertexId, alt: usize) -> Self {
        Occurrence {
            rule: Arc::from(rule),
            center,
            alt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<S> {
    pub step: usize,
    pub rule: Arc<str>,
    pub center: VertexId,
    pub alt: usize,
    /// Star states before the step: center first, then leaves ascending.
    pub before: Vec<(VertexId, S)>,
    pub after: Vec<(VertexId, S)>,
}

impl<S> Event<S> {
    pub fn occurrence(&self) -> Occurrence {
        Occurrence {
            rule: self.rule.clone(),
            center: self.center,
            alt: self.alt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    /// No occurrence is enabled.
    NormalForm,
    BudgetExhausted,
    /// A scripted scheduler ran out of entries before the normal form.
    ScriptEnded,
    /// Script entry at this index was not enabled.
    ScriptRejected(usize),
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunOutcome::NormalForm => f.write_str("normal-form"),
            RunOutcome::BudgetExhausted => f.write_str("budget-exhausted"),
            RunOutcome::ScriptEnded => f.write_str("script-ended"),
            RunOutcome::ScriptRejected(i) => write!(f, "script-rejected {i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace<S> {
    pub system: String,
    pub scheduler: String,
    pub seed: Option<u64>,
    pub initial: LabelledGraph<S>,
    pub events: Vec<Event<S>>,
    pub final_graph: LabelledGraph<S>,
    pub outcome: RunOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("occurrence ({rule}, {center}, {alt}) is not enabled")]
    NotEnabled { rule: String, center: VertexId, alt: usize },
    #[error("stars of {0} and {1} overlap")]
    Overlap(VertexId, VertexId),
    #[error("replay diverges at step {step}: {reason}")]
    Replay { step: usize, reason: String },
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

pub type GuideFn<S> = dyn Fn(&LabelledGraph<S>, &[Occurrence]) -> Option<usize> + Send + Sync;

/// Chooses the next occurrence among the enabled ones.
#[derive(Clone)]
pub enum Scheduler<S> {
    /// Uniform choice over the enabled occurrences, seeded.
    Random(u64),
    /// Cycles through vertices, taking the first occurrence at the next
    /// vertex that has one.
    RoundRobin,
    /// Fixed sequence of occurrences.
    Scripted(Vec<Occurrence>),
    /// Arbitrary deterministic policy; returning `None` stops the run.
    Guided(Arc<GuideFn<S>>),
}

impl<S> Scheduler<S> {
    pub fn kind(&self) -> &'static str {
        match self {
            Scheduler::Random(_) => "random",
            Scheduler::RoundRobin => "round-robin",
            Scheduler::Scripted(_) => "scripted",
            Scheduler::Guided(_) => "guided",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Scheduler::Random(s) => Some(*s),
            _ => None,
        }
    }
}

/// A running configuration with incrementally maintained enabled sets.
pub struct Engine<'a, S> {
    system: &'a System<S>,
    graph: LabelledGraph<S>,
    /// Per vertex: (rule index, candidate) for every candidate at that center.
    enabled: Vec<Vec<(usize, StarUpdate<S>)>>,
    /// Vertices within distance 2, whose stars meet the star of the vertex.
    near: Vec<Vec<VertexId>>,
    steps: usize,
}

impl<'a, S: State> Engine<'a, S> {
    pub fn new(system: &'a System<S>, graph: LabelledGraph<S>) -> Self {
        let near = graph
            .vertices()
            .map(|v| {
                let dist = graph.distances(v);
                graph
                    .vertices()
                    .filter(|&u| matches!(dist[u], Some(d) if d <= 2))
                    .collect()
            })
            .collect();
        let mut engine = Engine {
            system,
            enabled: vec![Vec::new(); graph.order()],
            graph,
            near,
            steps: 0,
        };
        for v in engine.graph.vertices() {
            engine.refresh(v);
        }
        engine
    }

    fn refresh(&mut self, v: VertexId) {
        let view = star_view(&self.graph, v, self.graph.neighbors(v));
        let mut list = Vec::new();
        for (i, rule) in self.system.rules.iter().enumerate() {
            for u in rule.candidates(&view) {
                list.push((i, u));
            }
        }
        self.enabled[v] = list;
    }

    pub fn graph(&self) -> &LabelledGraph<S> {
        &self.graph
    }

    pub fn into_graph(self) -> LabelledGraph<S> {
        self.graph
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_irreducible(&self) -> bool {
        self.enabled.iter().all(Vec::is_empty)
    }

    /// Enabled occurrences ordered by center, rule order, then candidate.
    pub fn enabled(&self) -> Vec<Occurrence> {
        let mut out = Vec::new();
        for (v, list) in self.enabled.iter().enumerate() {
            let mut alt = 0;
            let mut last = usize::MAX;
            for (rule, _) in list {
                if *rule != last {
                    alt = 0;
                    last = *rule;
                }
                out.push(Occurrence {
                    rule: self.system.rules[*rule].id.clone(),
                    center: v,
                    alt,
                });
                alt += 1;
            }
        }
        out
    }

    pub fn enabled_count(&self) -> usize {
        self.enabled.iter().map(Vec::len).sum()
    }

    fn locate(&self, occ: &Occurrence) -> Option<usize> {
        let rule = self.system.rule_index(&occ.rule)?;
        let list = self.enabled.get(occ.center)?;
        let first = list.iter().position(|(r, _)| *r == rule)?;
        let idx = first + occ.alt;
        (idx < list.len() && list[idx].0 == rule).then_some(idx)
    }

    /// Enabled occurrences at `v` with the star states they would produce
    /// (center first, then leaves ascending).
    pub fn candidates_at(&self, v: VertexId) -> Vec<(Occurrence, &StarUpdate<S>)> {
        let list = &self.enabled[v];
        list.iter()
            .enumerate()
            .map(|(i, (rule, u))| {
                let first = list.iter().position(|(r, _)| r == rule).unwrap();
                let occ = Occurrence {
                    rule: self.system.rules[*rule].id.clone(),
                    center: v,
                    alt: i - first,
                };
                (occ, u)
            })
            .collect()
    }

    pub fn is_enabled(&self, occ: &Occurrence) -> bool {
        self.locate(occ).is_some()
    }

    /// Applies an enabled occurrence and returns its event.
    pub fn step(&mut self, occ: &Occurrence) -> Result<Event<S>, EngineError> {
        if self.system.rule_index(&occ.rule).is_none() {
            return Err(EngineError::UnknownRule(occ.rule.to_string()));
        }
        let idx = self.locate(occ).ok_or_else(|| EngineError::NotEnabled {
            rule: occ.rule.to_string(),
            center: occ.center,
            alt: occ.alt,
        })?;
        Ok(self.apply_index(occ.center, idx))
    }

    fn apply_index(&mut self, c: VertexId, idx: usize) -> Event<S> {
        let (rule, update) = self.enabled[c][idx].clone();
        let alt = idx - self.enabled[c].iter().position(|(r, _)| *r == rule).unwrap();
        let leaves = self.graph.neighbors(c).to_vec();
        let mut before = vec![(c, self.graph.label(c).clone())];
        before.extend(leaves.iter().map(|&u| (u, self.graph.label(u).clone())));
        self.graph.set_label(c, update.center.clone());
        for (&u, s) in leaves.iter().zip(update.leaves) {
            self.graph.set_label(u, s);
        }
        let mut after = vec![(c, self.graph.label(c).clone())];
        after.extend(leaves.iter().map(|&u| (u, self.graph.label(u).clone())));
        for u in self.near[c].clone() {
            self.refresh(u);
        }
        self.steps += 1;
        Event {
            step: self.steps - 1,
            rule: self.system.rules[rule].id.clone(),
            center: c,
            alt,
            before,
            after,
        }
    }

    /// Applies the `k`-th occurrence in [`Engine::enabled`] order.
    fn apply_nth(&mut self, mut k: usize) -> Event<S> {
        for v in self.graph.vertices() {
            if k < self.enabled[v].len() {
                return self.apply_index(v, k);
            }
            k -= self.enabled[v].len();
        }
        unreachable!("occurrence index out of range")
    }
}

pub fn enabled<S: State>(system: &System<S>, g: &LabelledGraph<S>) -> Vec<Occurrence> {
    Engine::new(system, g.clone()).enabled()
}

pub fn step<S: State>(
    system: &System<S>,
    g: &LabelledGraph<S>,
    occ: &Occurrence,
) -> Result<LabelledGraph<S>, EngineError> {
    let mut engine = Engine::new(system, g.clone());
    engine.step(occ)?;
    Ok(engine.into_graph())
}

/// Runs until the normal form, the step budget, or the end of the script.
pub fn run<S: State>(system: &System<S>, g: &LabelledGraph<S>, scheduler: &Scheduler<S>, max_steps: usize) -> Trace<S> {
    let mut engine = Engine::new(system, g.clone());
    let mut events = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(scheduler.seed().unwrap_or(0));
    let mut cursor = 0usize;
    let n = g.order();
    let outcome = loop {
        if engine.is_irreducible() {
            break RunOutcome::NormalForm;
        }
        if events.len() >= max_steps {
            break RunOutcome::BudgetExhausted;
        }
        let event = match scheduler {
            Scheduler::Random(_) => {
                let k = rng.gen_range(0..engine.enabled_count());
                engine.apply_nth(k)
            }
            Scheduler::RoundRobin => {
                let v = (0..n)
                    .map(|i| (cursor + i) % n)
                    .find(|&v| !engine.enabled[v].is_empty())
                    .unwrap();
                cursor = (v + 1) % n;
                engine.apply_index(v, 0)
            }
            Scheduler::Scripted(script) => {
                let Some(occ) = script.get(events.len()) else {
                    break RunOutcome::ScriptEnded;
                };
                match engine.step(occ) {
                    Ok(e) => e,
                    Err(_) => break RunOutcome::ScriptRejected(events.len()),
                }
            }
            Scheduler::Guided(guide) => {
                let list = engine.enabled();
                match guide(engine.graph(), &list) {
                    Some(k) if k < list.len() => engine.step(&list[k]).expect("listed occurrence is enabled"),
                    _ => break RunOutcome::ScriptEnded,
                }
            }
        };
        events.push(event);
    };
    Trace {
        system: system.name.clone(),
        scheduler: scheduler.kind().to_string(),
        seed: scheduler.seed(),
        initial: g.clone(),
        events,
        final_graph: engine.into_graph(),
        outcome,
    }
}

/// Applies two occurrences with disjoint stars in both orders and compares.
pub fn commute_check<S: State>(
    system: &System<S>,
    g: &LabelledGraph<S>,
    a: &Occurrence,
    b: &Occurrence,
) -> Result<bool, EngineError> {
    let star = |v: VertexId| {
        let mut s = g.neighbors(v).to_vec();
        s.push(v);
        s
    };
    let (sa, sb) = (star(a.center), star(b.center));
    if sa.iter().any(|v| sb.contains(v)) {
        return Err(EngineError::Overlap(a.center, b.center));
    }
    let ab = step(system, &step(system, g, a)?, b)?;
    let ba = step(system, &step(system, g, b)?, a)?;
    Ok(ab == ba)
}

impl<S: State> Trace<S> {
    /// Graphs after each prefix of the event list, starting with the initial
    /// graph.
    pub fn graphs(&self) -> Vec<LabelledGraph<S>> {
        let mut g = self.initial.clone();
        let mut out = Vec::with_capacity(self.events.len() + 1);
        out.push(g.clone());
        for e in &self.events {
            for (v, s) in &e.after {
                g.set_label(*v, s.clone());
            }
            out.push(g.clone());
        }
        out
    }

    /// Replays the recorded star states and checks the final graph.
    pub fn replay(&self) -> Result<LabelledGraph<S>, EngineError> {
        let mut g = self.initial.clone();
        for e in &self.events {
            for (v, s) in &e.before {
                g.check_vertex(*v)?;
                if g.label(*v) != s {
                    return Err(EngineError::Replay {
                        step: e.step,
                        reason: format!("state of vertex {v} differs from the recorded one"),
                    });
                }
            }
            for (v, s) in &e.after {
                g.set_label(*v, s.clone());
            }
        }
        if g != self.final_graph {
            return Err(EngineError::Replay {
                step: self.events.len(),
                reason: "final graph differs".into(),
            });
        }
        Ok(g)
    }

    /// Replays through the engine: every event must be an enabled occurrence
    /// producing exactly the recorded states.
    pub fn replay_with(&self, system: &System<S>) -> Result<LabelledGraph<S>, EngineError> {
        let mut engine = Engine::new(system, self.initial.clone());
        for e in &self.events {
            let got = engine.step(&e.occurrence()).map_err(|err| EngineError::Replay {
                step: e.step,
                reason: err.to_string(),
            })?;
            if got.before != e.before || got.after != e.after {
                return Err(EngineError::Replay {
                    step: e.step,
                    reason: "star states differ from the recorded ones".into(),
                });
            }
        }
        let g = engine.into_graph();
        if g != self.final_graph {
            return Err(EngineError::Replay {
                step: self.events.len(),
                reason: "final graph differs".into(),
            });
        }
        Ok(g)
    }

    /// The same trace with every state written as a label.
    pub fn to_labels(&self) -> Trace<Label> {
        let conv = |g: &LabelledGraph<S>| g.map_labels(|_, s| s.to_label());
        Trace {
            system: self.system.clone(),
            scheduler: self.scheduler.clone(),
            seed: self.seed,
            initial: conv(&self.initial),
            events: self
                .events
                .iter()
                .map(|e| Event {
                    step: e.step,
                    rule: e.rule.clone(),
                    center: e.center,
                    alt: e.alt,
                    before: e.before.iter().map(|(v, s)| (*v, s.to_label())).collect(),
                    after: e.after.iter().map(|(v, s)| (*v, s.to_label())).collect(),
                })
                .collect(),
            final_graph: conv(&self.final_graph),
            outcome: self.outcome,
        }
    }

    pub fn script(&self) -> Vec<Occurrence> {
        self.events.iter().map(Event::occurrence).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{cube, path, ring};

    /// Colours a 0-vertex with the least colour in 1..=d+1 absent from its
    /// neighbours.
    fn colo(d: i64) -> System<i64> {
        System::new(
            "colo",
            vec![Rule::center_rule("colour", move |v| {
                (*v.center == 0).then(|| (1..=d + 1).find(|c| v.leaves.iter().all(|l| **l != *c)).unwrap())
            })],
        )
    }

    fn zeros(g: &LabelledGraph) -> LabelledGraph<i64> {
        g.map_labels(|_, _| 0)
    }

    #[test]
    fn all_cube_vertices_start_enabled() {
        let occ = enabled(&colo(3), &zeros(&cube()));
        assert_eq!(occ.len(), 8);
        assert!(occ.iter().all(|o| o.alt == 0));
    }

    #[test]
    fn step_and_not_enabled() {
        let g = zeros(&path(3)).relabelled(vec![1, 0, 0]).unwrap();
        let g2 = step(&colo(2), &g, &Occurrence::new("colour", 1, 0)).unwrap();
        assert_eq!(*g2.label(1), 2);
        assert!(matches!(
            step(&colo(2), &g2, &Occurrence::new("colour", 1, 0)),
            Err(EngineError::NotEnabled { .. })
        ));
        assert!(matches!(
            step(&colo(2), &g2, &Occurrence::new("nope", 1, 0)),
            Err(EngineError::UnknownRule(_))
        ));
    }

    #[test]
    fn runs_reach_proper_colourings() {
        let g = zeros(&cube());
        for seed in 0..20 {
            let t = run(&colo(3), &g, &Scheduler::Random(seed), 1000);
            assert_eq!(t.outcome, RunOutcome::NormalForm);
            for (u, v, _) in t.final_graph.edges() {
                assert_ne!(t.final_graph.label(u), t.final_graph.label(v));
            }
            assert!(t.final_graph.labels().iter().all(|c| (1..=4).contains(c)));
            assert_eq!(t.replay().unwrap(), t.final_graph);
            assert_eq!(t.replay_with(&colo(3)).unwrap(), t.final_graph);
            assert_eq!(run(&colo(3), &g, &Scheduler::Random(seed), 1000), t);
        }
        let rr = run(&colo(3), &g, &Scheduler::RoundRobin, 1000);
        assert_eq!(rr.events.len(), 8);
        let scripted = run(&colo(3), &g, &Scheduler::Scripted(rr.script()), 1000);
        assert_eq!(scripted.final_graph, rr.final_graph);
    }

    #[test]
    fn empty_system_and_budget() {
        let empty: System<i64> = System::new("empty", vec![]);
        let t = run(&empty, &zeros(&ring(4)), &Scheduler::Random(0), 10);
        assert!(t.events.is_empty());
        assert_eq!(t.outcome, RunOutcome::NormalForm);
        let t = run(&colo(2), &zeros(&ring(6)), &Scheduler::Random(0), 2);
        assert_eq!(t.outcome, RunOutcome::BudgetExhausted);
        assert_eq!(t.events.len(), 2);
    }

    #[test]
    fn disjoint_steps_commute() {
        let g = zeros(&cube());
        let a = Occurrence::new("colour", 0, 0);
        let b = Occurrence::new("colour", 7, 0);
        assert_eq!(commute_check(&colo(3), &g, &a, &b), Ok(true));
        assert_eq!(commute_check(&colo(3), &g, &a, &a), Err(EngineError::Overlap(0, 0)));
    }

    #[test]
    fn corrupted_trace_fails_replay() {
        let t = run(&colo(2), &zeros(&ring(5)), &Scheduler::Random(3), 100);
        let mut bad = t.clone();
        bad.events[1].before[0].1 = 9;
        assert!(matches!(bad.replay(), Err(EngineError::Replay { step: 1, .. })));
    }
}
