//! Cartography: the enumeration algorithm with a counter that stops once the
//! reconstructed graph is known to be covered by a family member within the
//! trusted radius.

use std::sync::Arc;

use locomp_core::engine::{StarView, System};
use locomp_core::io::graph_hash;
use locomp_core::LabelledGraph;

use crate::family::{Chi, FamilySpec};
use crate::gssp::{counted, gssp_wrap, lift_base, Counted, SameValue};
use crate::mazurkiewicz::{initial_state, mazur_system, MazurState};

pub type CartoState = Counted<MazurState>;

/// Value used by the counter: the mailbox, and whether the vertex
/// reconstructs a graph from it.
pub fn carto_same() -> SameValue<MazurState> {
    Arc::new(|a: &MazurState, b: &MazurState| a.mailbox == b.mailbox && a.h().is_some() == b.h().is_some())
}

/// χ evaluated at a vertex on its reconstructed graph, number and trust
/// radius.
pub fn chi_at(family: &FamilySpec, s: &CartoState) -> Chi {
    match s.base.h() {
        Some(h) => {
            let u = h.index_of(s.base.number).expect("own number is a vertex of H");
            family.chi(&h.graph, u, s.trust())
        }
        None => Chi::Bot,
    }
}

pub fn carto_system(family: Arc<FamilySpec>) -> System<CartoState> {
    let rules = mazur_system().rules.into_iter().map(lift_base).collect();
    gssp_wrap(
        "carto",
        rules,
        carto_same(),
        Arc::new(move |v: &StarView<'_, CartoState>| chi_at(&family, v.center) != Chi::Yes),
    )
}

pub fn carto_initial(g: &LabelledGraph) -> LabelledGraph<CartoState> {
    counted(&initial_state(g))
}

/// One line per vertex: vertex, number, hash of the reconstructed graph and
/// trust radius (`_` when undefined).
pub fn carto_footer(g: &LabelledGraph<CartoState>) -> Vec<String> {
    let mut out = vec!["vertex number H-hash r^t".to_string()];
    for v in g.vertices() {
        let s = g.label(v);
        let h = s
            .base
            .h()
            .map_or("_".to_string(), |h| graph_hash(&h.graph)[..16].to_string());
        let r = s.trust().map_or("_".to_string(), |r| r.to_string());
        out.push(format!("{v} {} {h} {r}", s.base.number));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use locomp_core::engine::{run, Scheduler};
    use locomp_core::generators::{path, ring};
    use locomp_core::RunOutcome;

    fn halts_with(family: FamilySpec, g: &LabelledGraph, seed: u64) -> LabelledGraph<CartoState> {
        let family = Arc::new(family);
        let sys = carto_system(family.clone());
        let t = run(&sys, &carto_initial(g), &Scheduler::Random(seed), 200_000);
        assert_eq!(t.outcome, RunOutcome::NormalForm);
        for s in t.final_graph.labels() {
            assert_eq!(chi_at(&family, s), Chi::Yes);
            assert_eq!(s.base.h(), t.final_graph.label(0).base.h());
        }
        t.final_graph
    }

    #[test]
    fn r5_in_prime_rings() {
        for seed in 0..5 {
            let g = halts_with(FamilySpec::prime_rings(7), &ring(5), seed);
            assert!(g.label(0).base.h().unwrap().graph.is_isomorphic(&ring(5)));
        }
    }

    #[test]
    fn r6_in_rings() {
        for seed in 0..5 {
            let g = halts_with(FamilySpec::rings(6), &ring(6), seed);
            let h = &g.label(0).base.h().unwrap().graph;
            assert!(h.is_isomorphic(&ring(3)) || h.is_isomorphic(&ring(6)));
        }
    }

    #[test]
    fn p4_in_trees() {
        let g = halts_with(FamilySpec::trees(8), &path(4), 1);
        assert!(g.label(0).base.h().unwrap().graph.is_isomorphic(&path(4)));
        assert_eq!(carto_footer(&g).len(), 5);
    }
}
