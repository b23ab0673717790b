//! Runs systems by name and erases their state types, for the command line
//! and for batch classification.

use std::sync::Arc;

use locomp_core::engine::{run, RunOutcome, Scheduler, System, Trace};
use locomp_core::{Label, LabelledGraph, State};
use thiserror::Error;

use crate::carto::{carto_footer, carto_initial, carto_system};
use crate::catalog::{
    colo, colo_initial, election_complete, election_initial, election_tree, spanning_initial, spanning_tree, treesize,
    treesize_initial, Node, TreeSizeVariant,
};
use crate::family::FamilySpec;
use crate::mazurkiewicz::{initial_state, mazur_system, verify_final_state};
use crate::termination::{
    check_task, classify, colouring_task, election_task, universal, universal_initial, Mode, Observed, Task, UniMode,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunnerError {
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("system `{0}` needs --family")]
    FamilyRequired(String),
}

pub const SYSTEM_NAMES: &[&str] = &[
    "colo<d>",
    "treesize-i",
    "treesize-ltd",
    "treesize-otd",
    "treesize-gtd",
    "spanning-tree",
    "election-tree",
    "election-complete",
    "election-universal",
    "mazurkiewicz",
    "carto",
    "universal-itd:<task>",
    "universal-otd:<task>",
    "universal-gtd:<task>",
];

#[derive(Debug, Clone)]
pub struct RunReport {
    pub trace: Trace<Label>,
    pub footer: Vec<String>,
    /// Termination mode, for systems exposing outputs.
    pub mode: Option<Mode>,
    /// Witness event for the mode.
    pub witness: Option<usize>,
    /// Whether the final configuration solves the system's task, if it has one.
    pub task_ok: Option<bool>,
}

impl RunReport {
    pub fn outcome(&self) -> RunOutcome {
        self.trace.outcome
    }
}

fn family(name: Option<&str>, system: &str, default: Option<&str>) -> Result<Arc<FamilySpec>, RunnerError> {
    let name = name
        .or(default)
        .ok_or_else(|| RunnerError::FamilyRequired(system.to_string()))?;
    FamilySpec::by_name(name)
        .map(Arc::new)
        .ok_or_else(|| RunnerError::UnknownFamily(name.to_string()))
}

fn observed<S: State + Observed>(
    sys: &System<S>,
    g0: LabelledGraph<S>,
    sched: &Scheduler<S>,
    max: usize,
    task: Option<&dyn Fn(&LabelledGraph<S>) -> bool>,
) -> RunReport {
    let t = run(sys, &g0, sched, max);
    let c = classify(&t);
    let mut footer = vec!["vertex out term".to_string()];
    for v in t.final_graph.vertices() {
        let s = t.final_graph.label(v);
        footer.push(format!("{v} {} {}", s.out(), if s.term() { "Term" } else { "_" }));
    }
    RunReport {
        task_ok: task.map(|f| f(&t.final_graph)),
        footer,
        mode: Some(c.mode),
        witness: c.witness,
        trace: t.to_labels(),
    }
}

fn sched<S>(seed: Option<u64>) -> Scheduler<S> {
    match seed {
        Some(s) => Scheduler::Random(s),
        None => Scheduler::RoundRobin,
    }
}

fn all_out(n: i64) -> impl Fn(&LabelledGraph<Node>) -> bool {
    move |g| g.labels().iter().all(|s| s.out == Label::int(n))
}

/// Runs `system` on `g` with a seeded random scheduler, or round-robin when
/// `seed` is `None`.
pub fn run_named(
    system: &str,
    family_name: Option<&str>,
    g: &LabelledGraph,
    seed: Option<u64>,
    max_steps: usize,
) -> Result<RunReport, RunnerError> {
    let elect_ok = |g: &LabelledGraph<Node>| check_task(&election_task(), g);
    let n = g.order() as i64;
    if let Some(variant) = system.strip_prefix("treesize-").and_then(TreeSizeVariant::parse) {
        return Ok(observed(
            &treesize(variant),
            treesize_initial(g),
            &sched(seed),
            max_steps,
            Some(&all_out(n)),
        ));
    }
    if let Some(d) = system.strip_prefix("colo").and_then(|d| d.parse::<i64>().ok()) {
        let task = colouring_task(d);
        let ok = move |g: &LabelledGraph<Node>| check_task(&task, g);
        return Ok(observed(&colo(d), colo_initial(g), &sched(seed), max_steps, Some(&ok)));
    }
    if let Some((mode, task)) = system.strip_prefix("universal-").and_then(|r| r.split_once(':')) {
        let mode = UniMode::parse(mode).ok_or_else(|| RunnerError::UnknownSystem(system.to_string()))?;
        let task = Task::by_name(task).ok_or_else(|| RunnerError::UnknownSystem(system.to_string()))?;
        let fam = family(family_name, system, None)?;
        let check = task.clone();
        let ok = move |g: &LabelledGraph<_>| check_task(&check, g);
        let sys = universal(mode, Arc::new(task), fam);
        return Ok(observed(&sys, universal_initial(g), &sched(seed), max_steps, Some(&ok)));
    }
    match system {
        "spanning-tree" => Ok(observed(
            &spanning_tree(),
            spanning_initial(g, 0),
            &sched(seed),
            max_steps,
            None,
        )),
        "election-tree" => Ok(observed(
            &election_tree(),
            election_initial(g),
            &sched(seed),
            max_steps,
            Some(&elect_ok),
        )),
        "election-complete" => Ok(observed(
            &election_complete(),
            election_initial(g),
            &sched(seed),
            max_steps,
            Some(&elect_ok),
        )),
        "election-universal" => {
            let fam = family(family_name, system, Some("prime-rings7"))?;
            let sys = universal(UniMode::Gtd, Arc::new(election_task()), fam);
            let ok = |g: &LabelledGraph<_>| check_task(&election_task(), g);
            Ok(observed(&sys, universal_initial(g), &sched(seed), max_steps, Some(&ok)))
        }
        "mazurkiewicz" => {
            let t = run(&mazur_system(), &initial_state(g), &sched(seed), max_steps);
            let report = verify_final_state(&t.final_graph);
            let mut footer = vec!["vertex number".to_string()];
            footer.extend(
                t.final_graph
                    .vertices()
                    .map(|v| format!("{v} {}", t.final_graph.label(v).number)),
            );
            footer.extend(
                report
                    .failures
                    .iter()
                    .map(|f| format!("failed {}", crate::mazurkiewicz::FINAL_PROPERTIES[*f])),
            );
            Ok(RunReport {
                task_ok: Some(t.outcome == RunOutcome::NormalForm && report.passed()),
                footer,
                mode: None,
                witness: None,
                trace: t.to_labels(),
            })
        }
        "carto" => {
            let fam = family(family_name, system, None)?;
            let t = run(&carto_system(fam), &carto_initial(g), &sched(seed), max_steps);
            Ok(RunReport {
                footer: carto_footer(&t.final_graph),
                task_ok: None,
                mode: None,
                witness: None,
                trace: t.to_labels(),
            })
        }
        _ => Err(RunnerError::UnknownSystem(system.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use locomp_core::generators::{ring, star};

    #[test]
    fn named_systems_run() {
        let r = run_named("treesize-gtd", None, &star(4), Some(1), 10_000).unwrap();
        assert_eq!(r.mode, Some(Mode::Gtd));
        assert_eq!(r.task_ok, Some(true));
        let r = run_named("colo2", None, &ring(5), None, 10_000).unwrap();
        assert_eq!(r.task_ok, Some(true));
        let r = run_named("mazurkiewicz", None, &ring(3), Some(0), 10_000).unwrap();
        assert_eq!(r.task_ok, Some(true));
        assert!(matches!(
            run_named("carto", None, &ring(3), Some(0), 10),
            Err(RunnerError::FamilyRequired(_))
        ));
        assert!(run_named("nope", None, &ring(3), Some(0), 10).is_err());
    }

    #[test]
    fn same_seed_same_trace() {
        let a = run_named("election-universal", None, &ring(3), Some(4), 100_000).unwrap();
        let b = run_named("election-universal", None, &ring(3), Some(4), 100_000).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.task_ok, Some(true));
    }
}
