//! Stable-property detection: the counter layer added on top of a base
//! system, and trace checkers for its guarantees.
//!
//! Every vertex carries a counter `a`. A base rule that changes the value
//! `P(v)` of a star vertex resets that vertex's counter to -1. The counter
//! rule raises `a(v0)` to one more than the least counter of the closed star
//! when the whole star shows the same value and a guard holds at the center.
//! A vertex trusts its value up to radius `a / 3`.

use std::sync::Arc;

use locomp_core::engine::{Rule, StarUpdate, StarView, System, Trace};
use locomp_core::{Label, LabelError, LabelledGraph, State, VertexId};

/// A base state with a counter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Counted<B> {
    pub base: B,
    pub a: i64,
}

impl<B> Counted<B> {
    pub fn fresh(base: B) -> Self {
        Counted { base, a: -1 }
    }

    pub fn trust(&self) -> Option<usize> {
        trust_radius(self.a)
    }
}

impl<B: State> State for Counted<B> {
    fn to_label(&self) -> Label {
        Label::tagged("gssp", [self.base.to_label(), Label::int(self.a)])
    }

    fn from_label(l: &Label) -> Result<Self, LabelError> {
        let [base, a] = l.expect_tagged("gssp", 2)? else {
            unreachable!()
        };
        Ok(Counted {
            base: B::from_label(base)?,
            a: a.expect_int()?,
        })
    }
}

/// Radius up to which a counter value is trusted.
pub fn trust_radius(a: i64) -> Option<usize> {
    (a >= 0).then_some((a / 3) as usize)
}

pub fn counted<B: Clone>(g: &LabelledGraph<B>) -> LabelledGraph<Counted<B>> {
    g.map_labels(|_, b| Counted::fresh(b.clone()))
}

/// Whether two base states carry the same value.
pub type SameValue<B> = Arc<dyn Fn(&B, &B) -> bool + Send + Sync>;
/// Extra condition for the counter rule, evaluated on the star.
pub type Guard<S> = Arc<dyn Fn(&StarView<'_, S>) -> bool + Send + Sync>;

/// Runs `rule` on a projection of the states and writes results back with
/// `put(old, new_part)`.
pub fn project_rule<B: State, S: State>(
    rule: Rule<B>,
    get: fn(&S) -> &B,
    put: Arc<dyn Fn(&S, B) -> S + Send + Sync>,
) -> Rule<S> {
    let id = rule.id.clone();
    Rule::new(&id, move |view: &StarView<'_, S>| {
        let inner = StarView {
            center: get(view.center),
            leaves: view.leaves.iter().map(|s| get(s)).collect(),
            edges: view.edges.clone(),
        };
        rule.candidates(&inner)
            .into_iter()
            .map(|u| StarUpdate {
                center: put(view.center, u.center),
                leaves: view.leaves.iter().zip(u.leaves).map(|(s, b)| put(s, b)).collect(),
            })
            .collect()
    })
}

/// A rule on the base part of a counted state; counters are kept.
pub fn lift_base<B: State>(rule: Rule<B>) -> Rule<Counted<B>> {
    project_rule(
        rule,
        |s: &Counted<B>| &s.base,
        Arc::new(|s: &Counted<B>, b| Counted { base: b, a: s.a }),
    )
}

/// The modified form of a rule: counters in its result are those of the
/// star before the step, except that a vertex whose value changes gets -1.
pub fn modified_rule<B: State>(rule: Rule<Counted<B>>, same: SameValue<B>) -> Rule<Counted<B>> {
    let id = rule.id.clone();
    Rule::new(&id, move |view: &StarView<'_, Counted<B>>| {
        let fix = |old: &Counted<B>, new: Counted<B>| {
            let a = if same(&old.base, &new.base) { old.a } else { -1 };
            Counted { base: new.base, a }
        };
        rule.candidates(view)
            .into_iter()
            .map(|u| StarUpdate {
                center: fix(view.center, u.center),
                leaves: view.leaves.iter().zip(u.leaves).map(|(o, n)| fix(o, n)).collect(),
            })
            .collect()
    })
}

fn raised<B: Clone>(view: &StarView<'_, Counted<B>>) -> Counted<B> {
    let min = view.leaves.iter().map(|s| s.a).fold(view.center.a, i64::min);
    Counted {
        base: view.center.base.clone(),
        a: min + 1,
    }
}

/// The counter layer over `rules` with value equality `same` and guard.
pub fn gssp_wrap<B: State>(
    name: &str,
    rules: Vec<Rule<Counted<B>>>,
    same: SameValue<B>,
    guard: Guard<Counted<B>>,
) -> System<Counted<B>> {
    let mut out: Vec<Rule<Counted<B>>> = rules.into_iter().map(|r| modified_rule(r, same.clone())).collect();
    out.push(Rule::center_rule("gssp", move |view: &StarView<'_, Counted<B>>| {
        let c = &view.center.base;
        (view.leaves.iter().all(|l| same(c, &l.base)) && guard(view)).then(|| raised(view))
    }));
    System::new(name, out)
}

/// The boolean variant: the counter runs at vertices where `p` holds, whatever
/// the neighbours show, while `guard` holds.
pub fn ssp_system<B: State>(
    name: &str,
    rules: Vec<Rule<Counted<B>>>,
    p: Arc<dyn Fn(&B) -> bool + Send + Sync>,
    guard: Guard<Counted<B>>,
) -> System<Counted<B>> {
    let pp = p.clone();
    let same: SameValue<B> = Arc::new(move |x, y| pp(x) == pp(y));
    let mut out: Vec<Rule<Counted<B>>> = rules.into_iter().map(|r| modified_rule(r, same.clone())).collect();
    out.push(Rule::center_rule("ssp", move |view: &StarView<'_, Counted<B>>| {
        (p(&view.center.base) && guard(view)).then(|| raised(view))
    }));
    System::new(name, out)
}

/// A vertex at a step whose trusted ball never showed its value at a single
/// earlier instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaViolation {
    /// Index of the configuration (0 is the initial one).
    pub step: usize,
    pub vertex: VertexId,
    pub radius: usize,
}

/// Per-vertex state history: (first configuration index, state).
fn histories<S: Clone + PartialEq>(trace: &Trace<S>) -> Vec<Vec<(usize, S)>> {
    let mut h: Vec<Vec<(usize, S)>> = trace.initial.labels().iter().map(|s| vec![(0, s.clone())]).collect();
    for (k, e) in trace.events.iter().enumerate() {
        for (v, s) in &e.after {
            let last = &h[*v].last().unwrap().1;
            if last != s {
                h[*v].push((k + 1, s.clone()));
            }
        }
    }
    h
}

fn state_at<S>(h: &[(usize, S)], j: usize) -> &S {
    let k = h.partition_point(|(t, _)| *t <= j) - 1;
    &h[k].1
}

fn intersect(a: &[(usize, usize)], b: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo <= hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Checks that whenever `v` has counter `a` at step `j`, some step `i <= j`
/// shows every vertex of `B(v, radius(a))` with the value of `v` at `j`.
/// Only steps where `v` changes are examined: between changes the set of
/// admissible `i` can only grow.
pub fn check_third_lemma<B: State>(
    trace: &Trace<Counted<B>>,
    same: &dyn Fn(&B, &B) -> bool,
    radius: &dyn Fn(i64) -> Option<usize>,
) -> Vec<LemmaViolation> {
    let g = &trace.initial;
    let hist = histories(trace);
    let dist: Vec<Vec<Option<usize>>> = g.vertices().map(|v| g.distances(v)).collect();
    let mut out = Vec::new();
    for v in g.vertices() {
        for (j, s) in &hist[v] {
            let Some(r) = radius(s.a) else { continue };
            let mut ok: Vec<(usize, usize)> = vec![(0, *j)];
            for w in g.vertices().filter(|&w| matches!(dist[v][w], Some(d) if d <= r)) {
                let hw = &hist[w];
                let mine: Vec<(usize, usize)> = hw
                    .iter()
                    .enumerate()
                    .filter(|(_, (t, sw))| *t <= *j && same(&sw.base, &s.base))
                    .map(|(k, (t, _))| (*t, hw.get(k + 1).map_or(usize::MAX, |n| n.0 - 1)))
                    .collect();
                ok = intersect(&ok, &mine);
                if ok.is_empty() {
                    break;
                }
            }
            if ok.is_empty() {
                out.push(LemmaViolation {
                    step: *j,
                    vertex: v,
                    radius: r,
                });
            }
        }
    }
    out
}

/// Checks the iterated counter property: for `w` within distance `a_j(v)` of
/// `v`, some `i <= j` has `a_i(w) >= a_j(v) - d(v, w)` and the value of `w`
/// at `i` equal to that of `v` at `j`.
pub fn check_iterated_counters<B: State>(
    trace: &Trace<Counted<B>>,
    same: &dyn Fn(&B, &B) -> bool,
) -> Vec<LemmaViolation> {
    let g = &trace.initial;
    let hist = histories(trace);
    let mut out = Vec::new();
    for v in g.vertices() {
        let dist = g.distances(v);
        for (j, s) in &hist[v] {
            if s.a < 0 {
                continue;
            }
            let bad = g.vertices().any(|w| {
                let Some(d) = dist[w].filter(|&d| d as i64 <= s.a) else {
                    return false;
                };
                !hist[w]
                    .iter()
                    .take_while(|(t, _)| t <= j)
                    .any(|(_, sw)| sw.a >= s.a - d as i64 && same(&sw.base, &s.base))
            });
            if bad {
                out.push(LemmaViolation {
                    step: *j,
                    vertex: v,
                    radius: s.a as usize,
                });
            }
        }
    }
    out
}

/// Vertices whose value leaves and later returns.
pub fn value_convexity_violations<B: State>(trace: &Trace<Counted<B>>, same: &dyn Fn(&B, &B) -> bool) -> Vec<VertexId> {
    histories(trace)
        .iter()
        .enumerate()
        .filter(|(_, h)| {
            let mut segments: Vec<&B> = Vec::new();
            for (_, s) in h.iter() {
                if segments.last().is_none_or(|l| !same(l, &s.base)) {
                    segments.push(&s.base);
                }
            }
            (0..segments.len()).any(|i| (i + 1..segments.len()).any(|k| same(segments[i], segments[k])))
        })
        .map(|(v, _)| v)
        .collect()
}

/// Counter values over time: for every configuration, the counters by vertex.
pub fn counters_at<B: State>(trace: &Trace<Counted<B>>, j: usize) -> Vec<i64> {
    histories(trace).iter().map(|h| state_at(h, j).a).collect()
}

/// Base state for the adversarial schedule: a value and a pending value that
/// replaces it once.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tick {
    pub value: i64,
    pub pending: Option<i64>,
}

impl State for Tick {
    fn to_label(&self) -> Label {
        Label::tagged(
            "tick",
            [Label::int(self.value), self.pending.map_or(Label::Bot, Label::int)],
        )
    }

    fn from_label(l: &Label) -> Result<Self, LabelError> {
        let [v, p] = l.expect_tagged("tick", 2)? else {
            unreachable!()
        };
        Ok(Tick {
            value: v.expect_int()?,
            pending: if p.is_bot() { None } else { Some(p.expect_int()?) },
        })
    }
}

pub fn tick_same() -> SameValue<Tick> {
    Arc::new(|a: &Tick, b: &Tick| a.value == b.value)
}

/// Counter layer over the one-shot value change, with counters capped.
pub fn tick_system(cap: i64) -> System<Counted<Tick>> {
    let tick = Rule::center_rule("tick", |v: &StarView<'_, Tick>| {
        v.center.pending.map(|p| Tick {
            value: p,
            pending: None,
        })
    });
    gssp_wrap(
        "tick-gssp",
        vec![lift_base(tick)],
        tick_same(),
        Arc::new(move |v: &StarView<'_, Counted<Tick>>| v.center.a < cap),
    )
}

/// The adversarial schedule on the path `0 - 1 - ... - 5`.
///
/// Vertex 1 leaves the common value early and vertex 5 joins it late, both
/// at distance 2 from vertex 3. Counters are first raised as far as possible
/// on the left, then 1 changes, then 5 changes, then counters are raised
/// everywhere. Vertex 3 reaches counter 2 although no single instant shows
/// the common value on its ball of radius 2.
pub fn third_lemma_witness() -> (System<Counted<Tick>>, Trace<Counted<Tick>>) {
    use locomp_core::engine::{run, Engine, Scheduler};
    use locomp_core::generators::path;

    let sys = tick_system(12);
    let g = counted(&path(6).map_labels(|v, _| match v {
        1 => Tick {
            value: 1,
            pending: Some(2),
        },
        5 => Tick {
            value: 0,
            pending: Some(1),
        },
        _ => Tick {
            value: 1,
            pending: None,
        },
    }));
    let mut engine = Engine::new(&sys, g.clone());
    let mut script = Vec::new();
    let mut drive = |engine: &mut Engine<'_, Counted<Tick>>, pick: &dyn Fn(&locomp_core::Occurrence) -> bool| loop {
        let Some(occ) = engine.enabled().into_iter().find(|o| pick(o)) else {
            break;
        };
        engine.step(&occ).expect("listed occurrence is enabled");
        script.push(occ);
    };
    drive(&mut engine, &|o| &*o.rule == "gssp" && o.center <= 3);
    drive(&mut engine, &|o| &*o.rule == "tick" && o.center == 1);
    drive(&mut engine, &|o| &*o.rule == "tick" && o.center == 5);
    drive(&mut engine, &|o| &*o.rule == "gssp");
    let trace = run(&sys, &g, &Scheduler::Scripted(script), usize::MAX);
    (sys, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use locomp_core::engine::{run, Scheduler};
    use locomp_core::generators::{path, ring};

    /// Values spread upwards: a vertex adopts the largest neighbour value.
    fn spread() -> Rule<i64> {
        Rule::center_rule("spread", |v| {
            let m = v.leaves.iter().map(|l| **l).max().unwrap_or(*v.center);
            (m > *v.center).then_some(m)
        })
    }

    fn capped(cap: i64) -> Guard<Counted<i64>> {
        Arc::new(move |v| v.center.a < cap)
    }

    fn same() -> SameValue<i64> {
        Arc::new(|a, b| a == b)
    }

    fn system(cap: i64) -> System<Counted<i64>> {
        gssp_wrap("spread", vec![lift_base(spread())], same(), capped(cap))
    }

    fn start(g: &LabelledGraph, seed: u64) -> LabelledGraph<Counted<i64>> {
        counted(&g.map_labels(|v, _| ((v as u64 * 7 + seed) % 5) as i64))
    }

    #[test]
    fn counters_reach_the_cap_after_agreement() {
        let sys = system(9);
        let t = run(&sys, &start(&ring(5), 1), &Scheduler::Random(3), 10_000);
        assert!(t.final_graph.labels().iter().all(|s| s.a == 9 && s.base == 4));
    }

    #[test]
    fn value_change_resets_counter() {
        let sys = system(9);
        let mut g = counted(&path(2).map_labels(|v, _| v as i64));
        g.set_label(0, Counted { base: 0, a: 5 });
        let t = run(
            &sys,
            &g,
            &Scheduler::Scripted(vec![locomp_core::Occurrence::new("spread", 0, 0)]),
            1,
        );
        assert_eq!(t.final_graph.label(0), &Counted { base: 1, a: -1 });
    }

    #[test]
    fn third_lemma_holds_on_random_runs() {
        let sys = system(12);
        for seed in 0..20 {
            let t = run(&sys, &start(&path(6), seed), &Scheduler::Random(seed), 10_000);
            let same = |a: &i64, b: &i64| a == b;
            assert!(check_third_lemma(&t, &same, &trust_radius).is_empty());
            assert!(check_iterated_counters(&t, &same).is_empty());
            assert!(value_convexity_violations(&t, &same).is_empty());
        }
    }

    #[test]
    fn counted_label_round_trip() {
        let s = Counted { base: 4i64, a: -1 };
        assert_eq!(Counted::<i64>::from_label(&s.to_label()).unwrap(), s);
    }

    #[test]
    fn ssp_counts_only_where_p_holds() {
        let sys = ssp_system("ssp", vec![], Arc::new(|b: &i64| *b > 0), capped(6));
        let g = counted(&path(3).map_labels(|v, _| (v != 1) as i64));
        let t = run(&sys, &g, &Scheduler::Random(0), 1000);
        let a: Vec<i64> = t.final_graph.labels().iter().map(|s| s.a).collect();
        assert_eq!(a, vec![0, -1, 0]);
    }

    #[test]
    fn witness_breaks_two_above_trust_radius() {
        let (_, t) = third_lemma_witness();
        let same = |a: &Tick, b: &Tick| a.value == b.value;
        assert!(value_convexity_violations(&t, &same).is_empty());
        assert!(check_third_lemma(&t, &same, &trust_radius).is_empty());
        let two_above = check_third_lemma(&t, &same, &|a| trust_radius(a).map(|r| r + 2));
        assert!(two_above.iter().any(|v| v.vertex == 3 && v.radius == 2));
    }
}
