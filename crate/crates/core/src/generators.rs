//! Built-in graph families, addressable by name from the command line.
//!
//! Generated graphs carry `_` on every vertex and edge.

use rand::Rng;
use thiserror::Error;

use crate::graph::LabelledGraph;
use crate::label::Label;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("unknown graph name `{0}`")]
    UnknownName(String),
    #[error("bad parameters for `{0}`")]
    BadParameters(String),
}

fn build(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> LabelledGraph {
    LabelledGraph::from_edges(vec![Label::Bot; n], edges.into_iter().map(|(u, v)| (u, v, Label::Bot)))
        .expect("generator output is a connected simple graph")
}

/// Cycle on `n ≥ 3` vertices, `i` adjacent to `i ± 1 mod n`.
pub fn ring(n: usize) -> LabelledGraph {
    assert!(n >= 3, "rings need at least 3 vertices");
    build(n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// Path on `n ≥ 1` vertices.
pub fn path(n: usize) -> LabelledGraph {
    assert!(n >= 1);
    build(n, (1..n).map(|i| (i - 1, i)))
}

pub fn complete(n: usize) -> LabelledGraph {
    assert!(n >= 1);
    build(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
}

/// Star with center 0 and `leaves` leaves.
pub fn star(leaves: usize) -> LabelledGraph {
    build(leaves + 1, (1..=leaves).map(|i| (0, i)))
}

/// Hypercube of dimension `d` (the cube is `d = 3`).
pub fn hypercube(d: u32) -> LabelledGraph {
    let n = 1usize << d;
    build(
        n,
        (0..n).flat_map(|u| (0..d).map(move |b| (u, u ^ (1 << b))).filter(|&(u, v)| u < v)),
    )
}

pub fn cube() -> LabelledGraph {
    hypercube(3)
}

/// Tree decoded from a Prüfer sequence over `0..seq.len() + 2`.
pub fn tree_from_prufer(seq: &[usize]) -> LabelledGraph {
    let n = seq.len() + 2;
    assert!(seq.iter().all(|&x| x < n), "Prüfer entries out of range");
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    build(n, edges)
}

/// The `index`-th tree on `n` vertices in Prüfer order (`index < n^(n-2)`).
pub fn tree_by_index(n: usize, mut index: u64) -> Option<LabelledGraph> {
    match n {
        0 => return None,
        1 => return (index == 0).then(|| path(1)),
        2 => return (index == 0).then(|| path(2)),
        _ => {}
    }
    let mut seq = vec![0; n - 2];
    for slot in seq.iter_mut().rev() {
        *slot = (index % n as u64) as usize;
        index /= n as u64;
    }
    (index == 0).then(|| tree_from_prufer(&seq))
}

/// Uniform random labelled tree on `n` vertices.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> LabelledGraph {
    if n <= 2 {
        return path(n.max(1));
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    tree_from_prufer(&seq)
}

/// Random connected graph: a random tree plus each other pair with
/// probability `p`.
pub fn random_connected<R: Rng>(n: usize, p: f64, rng: &mut R) -> LabelledGraph {
    let mut g = random_tree(n, rng);
    for u in 0..n {
        for v in u + 1..n {
            if !g.has_edge(u, v) && rng.gen_bool(p) {
                g.add_edge(u, v, Label::Bot).unwrap();
            }
        }
    }
    g
}

/// Resolves names such as `r6`, `p5`, `k4`, `s4`, `cube`, `q4`, `tree7-123`.
pub fn by_name(name: &str) -> Result<LabelledGraph, GeneratorError> {
    let bad = || GeneratorError::BadParameters(name.to_string());
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
    let lower = name.to_ascii_lowercase();
    if lower == "cube" {
        return Ok(cube());
    }
    if let Some(rest) = lower.strip_prefix("tree") {
        let (n, idx) = rest.split_once('-').ok_or_else(bad)?;
        let idx = idx.parse::<u64>().map_err(|_| bad())?;
        return tree_by_index(num(n)?, idx).ok_or_else(bad);
    }
    let (head, tail) = lower.split_at(1.min(lower.len()));
    match head {
        "r" => num(tail).and_then(|n| if n >= 3 { Ok(ring(n)) } else { Err(bad()) }),
        "p" => num(tail).and_then(|n| if n >= 1 { Ok(path(n)) } else { Err(bad()) }),
        "k" => num(tail).and_then(|n| if n >= 1 { Ok(complete(n)) } else { Err(bad()) }),
        "s" => num(tail).map(star),
        "q" => num(tail).and_then(|d| {
            if (1..=6).contains(&d) {
                Ok(hypercube(d as u32))
            } else {
                Err(bad())
            }
        }),
        _ => Err(GeneratorError::UnknownName(name.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn named_graphs() {
        assert_eq!(by_name("r6").unwrap().size(), 6);
        assert_eq!(by_name("p5").unwrap().size(), 4);
        assert_eq!(by_name("k4").unwrap().size(), 6);
        assert_eq!(by_name("s4").unwrap().order(), 5);
        assert_eq!(by_name("cube").unwrap().size(), 12);
        assert!(by_name("r2").is_err());
        assert!(by_name("x3").is_err());
        assert_eq!(by_name("tree5-0").unwrap().size(), 4);
    }

    #[test]
    fn prufer_decoding_gives_trees() {
        for idx in 0..625 {
            let t = tree_by_index(6, idx).unwrap();
            assert_eq!(t.size(), 5);
        }
        assert!(tree_by_index(6, 1296).is_none());
    }

    #[test]
    fn random_graphs_are_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..10 {
            let g = random_connected(n, 0.3, &mut rng);
            assert!(g.check_connected().is_ok());
        }
    }
}
