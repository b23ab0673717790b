//! Transport of relabelling steps along coverings and quasi-coverings.
//!
//! A step at `c` on the target is reproduced at preimages of `c` whose stars
//! are mapped bijectively onto the star of `c`. The source step must be an
//! enabled occurrence of the same rule producing the transported states;
//! anything else is reported as an error.

use thiserror::Error;

use crate::covering::{is_covering, is_quasi_covering, CoveringError, Morphism, QuasiCoveringSpec};
use crate::engine::{Engine, EngineError, Event, RunOutcome, System, Trace};
use crate::graph::{LabelledGraph, VertexId};
use crate::label::State;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiftError {
    #[error("the map is not a covering: {0}")]
    NotCovering(String),
    #[error("the map is not a quasi-covering")]
    NotQuasiCovering,
    #[error("target step {step} has no matching occurrence at source vertex {vertex}")]
    NotApplicable { step: usize, vertex: VertexId },
    #[error("target step {step} does not match the target configuration")]
    TargetMismatch { step: usize },
    #[error(transparent)]
    Covering(#[from] CoveringError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone)]
pub struct LiftedRun<S> {
    pub trace: Trace<S>,
    /// Source events per target event.
    pub sheets: usize,
}

/// Source states obtained by pulling target states back along `map`.
fn pull_back<S: State>(
    structure: &LabelledGraph<S>,
    map: &[Option<VertexId>],
    target: &LabelledGraph<S>,
) -> LabelledGraph<S> {
    structure.map_labels(|v, s| match map[v] {
        Some(t) => target.label(t).clone(),
        None => s.clone(),
    })
}

/// Applies at `u` the occurrence of `rule` whose result on the star of `u`
/// equals the target states transported through `map`.
fn apply_matching<S: State>(
    engine: &mut Engine<'_, S>,
    u: VertexId,
    rule: &str,
    after: &LabelledGraph<S>,
    map: &[Option<VertexId>],
    step: usize,
) -> Result<Event<S>, LiftError> {
    let leaves = engine.graph().neighbors(u).to_vec();
    let wanted = |v: VertexId| map[v].map(|t| after.label(t));
    let occ = engine
        .candidates_at(u)
        .into_iter()
        .find(|(occ, upd)| {
            &*occ.rule == rule
                && Some(&upd.center) == wanted(u)
                && leaves.iter().zip(&upd.leaves).all(|(&w, s)| Some(s) == wanted(w))
        })
        .map(|(occ, _)| occ)
        .ok_or(LiftError::NotApplicable { step, vertex: u })?;
    Ok(engine.step(&occ)?)
}

fn target_after<S: State>(target: &LabelledGraph<S>, event: &Event<S>) -> Result<LabelledGraph<S>, LiftError> {
    let mut g = target.clone();
    for (v, s) in &event.before {
        if g.check_vertex(*v).is_err() || g.label(*v) != s {
            return Err(LiftError::TargetMismatch { step: event.step });
        }
    }
    for (v, s) in &event.after {
        g.set_label(*v, s.clone());
    }
    Ok(g)
}

/// Lifts a run on the target of a covering to its source.
///
/// `covering` supplies the structure of the source and the map; the source
/// starts in the pull-back of the trace's initial configuration, which must
/// make `covering` a covering of it.
pub fn lift_run<S: State, V: Clone + Eq>(
    system: &System<S>,
    trace: &Trace<S>,
    covering: &Morphism<V>,
) -> Result<LiftedRun<S>, LiftError> {
    let structure = covering.source.map_labels(|_, _| trace.initial.label(0).clone());
    let initial = pull_back(&structure, &covering.map, &trace.initial);
    let check = Morphism::partial(initial.clone(), trace.initial.clone(), covering.map.clone())?;
    let verdict = is_covering(&check);
    if !verdict.is_covering {
        return Err(LiftError::NotCovering(verdict.reason.unwrap_or_default()));
    }
    let sheets = verdict.sheets.unwrap();
    let mut engine = Engine::new(system, initial.clone());
    let mut target = trace.initial.clone();
    let mut events = Vec::new();
    for e in &trace.events {
        let after = target_after(&target, e)?;
        for u in check.preimages(e.center) {
            events.push(apply_matching(&mut engine, u, &e.rule, &after, &covering.map, e.step)?);
        }
        target = after;
    }
    let outcome = match trace.outcome {
        RunOutcome::NormalForm if engine.is_irreducible() => RunOutcome::NormalForm,
        RunOutcome::NormalForm => RunOutcome::ScriptEnded,
        other => other,
    };
    Ok(LiftedRun {
        trace: Trace {
            system: trace.system.clone(),
            scheduler: format!("lifted-{}", trace.scheduler),
            seed: trace.seed,
            initial,
            events,
            final_graph: engine.into_graph(),
            outcome,
        },
        sheets,
    })
}

#[derive(Debug, Clone)]
pub struct QuasiLift<S> {
    /// Quasi-covering of the relabelled target by the relabelled source, of
    /// radius two less.
    pub spec: QuasiCoveringSpec<S>,
    pub events: Vec<Event<S>>,
}

/// Applies one target step at every preimage of its center lying at distance
/// at most `r - 1` from the quasi-covering center.
pub fn quasi_lift_step<S: State>(
    system: &System<S>,
    spec: &QuasiCoveringSpec<S>,
    event: &Event<S>,
) -> Result<QuasiLift<S>, LiftError> {
    let r = spec.radius;
    if r < 2 {
        return Err(CoveringError::RadiusTooSmall(r).into());
    }
    if !is_quasi_covering(spec)? {
        return Err(LiftError::NotQuasiCovering);
    }
    let m = &spec.morphism;
    let after = target_after(&m.target, event)?;
    let dist = m.source.distances(spec.center);
    let mut engine = Engine::new(system, m.source.clone());
    let mut events = Vec::new();
    for u in m.preimages(event.center) {
        if matches!(dist[u], Some(d) if d < r) {
            events.push(apply_matching(&mut engine, u, &event.rule, &after, &m.map, event.step)?);
        }
    }
    Ok(QuasiLift {
        spec: QuasiCoveringSpec {
            center: spec.center,
            radius: r - 2,
            morphism: Morphism {
                source: engine.into_graph(),
                target: after,
                map: m.map.clone(),
            },
        },
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::universal_cover_ball;
    use crate::engine::{run, Rule, Scheduler};
    use crate::generators::ring;

    fn colo(d: i64) -> System<i64> {
        System::new(
            "colo",
            vec![Rule::center_rule("colour", move |v| {
                (*v.center == 0).then(|| (1..=d + 1).find(|c| v.leaves.iter().all(|l| **l != *c)).unwrap())
            })],
        )
    }

    #[test]
    fn empty_trace_lifts_to_empty_trace() {
        let h = ring(3).map_labels(|_, _| 0i64);
        let t = run(&colo(2), &h, &Scheduler::Scripted(vec![]), 10);
        let cov = Morphism::total(ring(6), ring(3), (0..6).map(|i| i % 3).collect()).unwrap();
        let lifted = lift_run(&colo(2), &t, &cov).unwrap();
        assert!(lifted.trace.events.is_empty());
        assert_eq!(lifted.sheets, 2);
    }

    #[test]
    fn one_step_lifts_to_two() {
        let h = ring(3).map_labels(|_, _| 0i64);
        let t = run(&colo(2), &h, &Scheduler::Random(1), 1);
        let cov = Morphism::total(ring(6), ring(3), (0..6).map(|i| i % 3).collect()).unwrap();
        let lifted = lift_run(&colo(2), &t, &cov).unwrap();
        assert_eq!(lifted.trace.events.len(), 2);
        for v in 0..6 {
            assert_eq!(lifted.trace.final_graph.label(v), t.final_graph.label(v % 3));
        }
        assert!(lifted.trace.replay_with(&colo(2)).is_ok());
    }

    #[test]
    fn quasi_lift_drops_radius_by_two() {
        let h = ring(3).map_labels(|_, _| 0i64);
        let spec = universal_cover_ball(&h, 0, 4).unwrap();
        let t = run(&colo(2), &h, &Scheduler::Random(4), 1);
        let q = quasi_lift_step(&colo(2), &spec, &t.events[0]).unwrap();
        assert_eq!(q.spec.radius, 2);
        assert_eq!(is_quasi_covering(&q.spec), Ok(true));
        let small = QuasiCoveringSpec { radius: 1, ..spec };
        assert!(matches!(
            quasi_lift_step(&colo(2), &small, &t.events[0]),
            Err(LiftError::Covering(CoveringError::RadiusTooSmall(1)))
        ));
    }
}
