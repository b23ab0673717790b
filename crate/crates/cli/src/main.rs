use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use locomp_algorithms::catalog::TreeSizeVariant;
use locomp_algorithms::family::FamilySpec;
use locomp_algorithms::runner::{run_named, RunReport, SYSTEM_NAMES};
use locomp_algorithms::termination::{demo_lifted_election, demo_quasi_lifted_otd, elect_count, Mode};
use locomp_core::covering::{is_covering, is_quasi_covering, quasi_sheets, reidemeister_build, universal_cover_ball};
use locomp_core::io::{graph_hash, parse_graph, write_graph_with_map, write_trace};
use locomp_core::{generators, LabelledGraph, Morphism, QuasiCoveringSpec, RunOutcome, VertexId};

#[derive(Parser)]
#[command(
    name = "locomp",
    version,
    about = "Local computations on graphs: simulation and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named system and write its trace.
    Run {
        #[arg(long)]
        system: String,
        /// Graph file or generator name (r6, p5, k4, s4, cube, q4, tree7-123).
        #[arg(long)]
        graph: String,
        #[arg(long)]
        family: Option<String>,
        /// Seed of the random scheduler; round-robin when absent.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check whether a vertex map is a covering (or a quasi-covering).
    CheckCover {
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
        /// `mod<k>`, a comma-separated image list, or `file` to read the map
        /// stored in the source graph file.
        #[arg(long)]
        map: String,
        /// Check a quasi-covering around this source vertex instead.
        #[arg(long, requires = "radius")]
        center: Option<VertexId>,
        #[arg(long)]
        radius: Option<usize>,
    },
    /// Build a Reidemeister covering or a truncated universal cover.
    BuildCover {
        #[arg(long, value_enum)]
        kind: CoverKind,
        #[arg(long)]
        base: String,
        /// Sheets of a Reidemeister covering.
        #[arg(long, default_value_t = 2)]
        sheets: usize,
        /// Every non-tree edge permutes the sheets by this shift.
        #[arg(long, default_value_t = 1)]
        shift: usize,
        #[arg(long, default_value_t = 0)]
        center: VertexId,
        #[arg(long, default_value_t = 2)]
        radius: usize,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run cartography and print the per-vertex table.
    Carto {
        #[arg(long)]
        family: String,
        #[arg(long)]
        graph: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an election algorithm.
    Elect {
        /// Family for the universal construction.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        graph: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = ElectAlgo::Universal)]
        algorithm: ElectAlgo,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a TreeSize variant and verify its output and termination mode.
    Treesize {
        #[arg(long)]
        variant: String,
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify the termination mode of a system over many seeds.
    Classify {
        #[arg(long)]
        system: String,
        /// Family whose members are the inputs (and the universal family).
        #[arg(long)]
        family: String,
        /// Inputs instead of the family members.
        #[arg(long)]
        graph: Vec<String>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: usize,
    },
    /// Demonstrations.
    Demo {
        #[command(subcommand)]
        demo: Demo,
    },
}

#[derive(Subcommand)]
enum Demo {
    /// Lifting and quasi-lifting arguments, and the TreeSize hierarchy.
    Impossibility {
        #[arg(long, value_enum, default_value_t = ElectAlgo::Complete)]
        election: ElectAlgo,
        #[arg(long, default_value_t = 2)]
        sheets: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the lifted election run here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CoverKind {
    Reidemeister,
    Universal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ElectAlgo {
    Universal,
    Tree,
    Complete,
}

fn load_graph(spec: &str) -> Result<LabelledGraph> {
    Ok(load_graph_file(spec)?.0)
}

fn load_graph_file(spec: &str) -> Result<(LabelledGraph, Option<Vec<Option<VertexId>>>)> {
    if Path::new(spec).is_file() {
        let text = fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
        let f = parse_graph(&text).with_context(|| format!("parsing {spec}"))?;
        return Ok((f.graph, f.map));
    }
    generators::by_name(spec)
        .map(|g| (g, None))
        .with_context(|| format!("`{spec}` is neither a graph file nor a generator name"))
}

fn save(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn save_trace(out: Option<&Path>, r: &RunReport) -> Result<()> {
    match out {
        Some(p) => save(p, &write_trace(&r.trace, &r.footer)),
        None => Ok(()),
    }
}

fn ensure_normal_form(r: &RunReport) -> Result<()> {
    if r.outcome() != RunOutcome::NormalForm {
        bail!("run stopped before a normal form ({})", r.outcome());
    }
    Ok(())
}

fn parse_map(
    map: &str,
    source: &LabelledGraph,
    stored: Option<Vec<Option<VertexId>>>,
) -> Result<Vec<Option<VertexId>>> {
    if map == "file" {
        return stored.ok_or_else(|| anyhow!("the source graph file has no map"));
    }
    if let Some(k) = map.strip_prefix("mod") {
        let k: usize = k.parse().context("mod<k> needs a number")?;
        if k == 0 {
            bail!("mod0 is not a map");
        }
        return Ok(source.vertices().map(|v| Some(v % k)).collect());
    }
    map.split(',')
        .map(|s| match s.trim() {
            "_" => Ok(None),
            t => t.parse().map(Some).with_context(|| format!("bad image `{t}`")),
        })
        .collect()
}

/// Breadth-first spanning tree edges of `g` from vertex 0.
fn bfs_tree(g: &LabelledGraph) -> Vec<(VertexId, VertexId)> {
    let mut seen = vec![false; g.order()];
    let mut tree = Vec::new();
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                tree.push((v, w));
                queue.push_back(w);
            }
        }
    }
    tree
}

fn graph_name(g: &LabelledGraph) -> String {
    format!("n{}-{}", g.order(), &graph_hash(g)[..8])
}

fn cmd_check_cover(
    source: &str,
    target: &str,
    map: &str,
    center: Option<VertexId>,
    radius: Option<usize>,
) -> Result<bool> {
    let (src, stored) = load_graph_file(source)?;
    let tgt = load_graph(target)?;
    let map = parse_map(map, &src, stored)?;
    let m = Morphism::partial(src, tgt, map)?;
    if let (Some(center), Some(radius)) = (center, radius) {
        let spec = QuasiCoveringSpec {
            center,
            radius,
            morphism: m,
        };
        if is_quasi_covering(&spec)? {
            println!("quasi-covering of radius {radius}, {} sheets", quasi_sheets(&spec)?);
            return Ok(true);
        }
        println!("not a quasi-covering of radius {radius}");
        return Ok(false);
    }
    let v = is_covering(&m);
    if v.is_covering {
        println!("covering, {} sheets", v.sheets.unwrap_or(0));
    } else {
        let at = v.witness.map(|w| format!(" (vertex {w})")).unwrap_or_default();
        println!("not a covering: {}{at}", v.reason.unwrap_or_default());
    }
    Ok(v.is_covering)
}

fn cmd_build_cover(
    kind: CoverKind,
    base: &str,
    sheets: usize,
    shift: usize,
    center: VertexId,
    radius: usize,
    out: Option<&Path>,
) -> Result<()> {
    let h = load_graph(base)?;
    let (graph, map, summary) = match kind {
        CoverKind::Reidemeister => {
            if sheets == 0 {
                bail!("a covering needs at least one sheet");
            }
            let tree = bfs_tree(&h);
            let perm: Vec<usize> = (0..sheets).map(|i| (i + shift) % sheets).collect();
            let sigma: BTreeMap<_, _> = h
                .edges()
                .map(|(a, b, _)| (a.min(b), a.max(b)))
                .filter(|e| !tree.contains(e) && !tree.contains(&(e.1, e.0)))
                .map(|e| (e, perm.clone()))
                .collect();
            let m = reidemeister_build(&h, &tree, sheets, &sigma)?;
            let v = is_covering(&m);
            let summary = format!(
                "covering, {} sheets, {} vertices",
                v.sheets.unwrap_or(0),
                m.source.order()
            );
            (m.source, m.map, summary)
        }
        CoverKind::Universal => {
            let spec = universal_cover_ball(&h, center, radius)?;
            let summary = format!(
                "quasi-covering of radius {radius}, {} vertices, {} sheets",
                spec.morphism.source.order(),
                quasi_sheets(&spec)?
            );
            (spec.morphism.source, spec.morphism.map, summary)
        }
    };
    let text = write_graph_with_map(&graph, &map);
    match out {
        Some(p) => {
            save(p, &text)?;
            println!("{summary}");
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_elect(
    family: Option<&str>,
    graph: &str,
    seed: Option<u64>,
    algorithm: ElectAlgo,
    max_steps: usize,
    out: Option<&Path>,
) -> Result<bool> {
    let g = load_graph(graph)?;
    let system = match algorithm {
        ElectAlgo::Universal => "election-universal",
        ElectAlgo::Tree => "election-tree",
        ElectAlgo::Complete => "election-complete",
    };
    let r = run_named(system, family, &g, seed, max_steps)?;
    save_trace(out, &r)?;
    ensure_normal_form(&r)?;
    let elected: Vec<&str> = r.footer[1..]
        .iter()
        .filter(|l| l.split(' ').nth(1) == Some("Elect"))
        .map(|l| l.split(' ').next().unwrap_or(""))
        .collect();
    let mode = r.mode.map_or("-".to_string(), |m| m.to_string());
    if elected.len() == 1 {
        println!(
            "elected vertex {} ({mode}, {} events)",
            elected[0],
            r.trace.events.len()
        );
        Ok(true)
    } else {
        println!("{} Elect vertices ({mode})", elected.len());
        Ok(false)
    }
}

fn cmd_treesize(variant: &str, graph: &str, seed: u64, out: Option<&Path>) -> Result<bool> {
    let v = TreeSizeVariant::parse(variant).ok_or_else(|| anyhow!("variant must be one of i, ltd, otd, gtd"))?;
    let g = load_graph(graph)?;
    let r = run_named(&format!("treesize-{}", v.name()), None, &g, Some(seed), 1_000_000)?;
    save_trace(out, &r)?;
    ensure_normal_form(&r)?;
    let expected = match v {
        TreeSizeVariant::Implicit => Mode::Implicit,
        TreeSizeVariant::Ltd => Mode::Ltd,
        TreeSizeVariant::Otd => Mode::Otd,
        TreeSizeVariant::Gtd => Mode::Gtd,
    };
    let mode = r.mode.expect("TreeSize exposes outputs");
    let outs = if r.task_ok == Some(true) {
        format!("out={} at all vertices", g.order())
    } else {
        "outputs differ from the tree size".to_string()
    };
    if r.task_ok == Some(true) && mode == expected {
        println!("{outs}; {mode} verified");
        Ok(true)
    } else {
        println!("{outs}; expected {expected}, observed {mode}");
        Ok(false)
    }
}

fn cmd_classify(system: &str, family: &str, graphs: &[String], seeds: u64, max_steps: usize) -> Result<bool> {
    let inputs: Vec<LabelledGraph> = if graphs.is_empty() {
        FamilySpec::by_name(family)
            .ok_or_else(|| anyhow!("unknown family `{family}`"))?
            .members()
            .to_vec()
    } else {
        graphs.iter().map(|g| load_graph(g)).collect::<Result<_>>()?
    };
    let mut all_ok = true;
    let mut weakest = None::<Mode>;
    println!("{:<16} {:<9} {:<8} witness", "graph", "mode", "verdict");
    for (i, g) in inputs.iter().enumerate() {
        let name = graphs.get(i).cloned().unwrap_or_else(|| graph_name(g));
        let mut low: Option<(Mode, u64, Option<usize>)> = None;
        let mut failed = None;
        for seed in 0..seeds {
            let r = run_named(system, Some(family), g, Some(seed), max_steps)?;
            if r.outcome() != RunOutcome::NormalForm || r.task_ok == Some(false) {
                failed.get_or_insert(seed);
            }
            let mode = r
                .mode
                .ok_or_else(|| anyhow!("system `{system}` exposes no outputs to classify"))?;
            if low.is_none_or(|(m, _, _)| mode < m) {
                low = Some((mode, seed, r.witness));
            }
        }
        let Some((mode, seed, witness)) = low else { continue };
        weakest = Some(weakest.map_or(mode, |w| w.min(mode)));
        let verdict = if failed.is_none() { "ok" } else { "fail" };
        all_ok &= failed.is_none();
        let witness = match (failed, witness) {
            (Some(s), _) => format!("seed {s} fails the task"),
            (None, Some(e)) => format!("seed {seed} event {e}"),
            (None, None) => "-".to_string(),
        };
        println!("{name:<16} {:<9} {verdict:<8} {witness}", mode.to_string());
    }
    match weakest {
        Some(m) => println!("signature: {m}"),
        None => println!("signature: -"),
    }
    Ok(all_ok && weakest != Some(Mode::Broken))
}

fn cmd_demo_impossibility(election: ElectAlgo, sheets: usize, seed: u64, out: Option<&Path>) -> Result<bool> {
    if election != ElectAlgo::Complete {
        bail!("the lifting demonstration uses --election complete");
    }
    if sheets < 2 {
        bail!("a lifting demonstration needs at least 2 sheets");
    }
    let mut ok = true;

    let (base, lifted) = demo_lifted_election(sheets, seed)?;
    let base_elect = elect_count(&base.final_graph);
    let lifted_elect = elect_count(&lifted.trace.final_graph);
    println!(
        "(a) election-complete on K3, seed {seed}: {base_elect} Elect vertex, {} events",
        base.events.len()
    );
    println!(
        "    lifted to R{} over a {}-sheeted covering: {lifted_elect} Elect vertices",
        3 * sheets,
        lifted.sheets
    );
    ok &= base_elect == 1 && lifted_elect == sheets;
    if let Some(p) = out {
        save(p, &write_trace(&lifted.trace.to_labels(), &[]))?;
    }

    let q = demo_quasi_lifted_otd(seed)?;
    println!(
        "(b) universal-otd:colo2 over rings6 on R3: first Term after {} events",
        q.steps
    );
    println!(
        "    quasi-lifted onto a path of {} vertices (radius {}): Term at vertex {}, {} fringe vertices keep their initial label",
        q.last.morphism.source.order(),
        q.initial.radius,
        q.term_vertex,
        q.untouched_fringe.len()
    );
    ok &= !q.untouched_fringe.is_empty();

    println!("(c) TreeSize hierarchy on tree7-123, 20 seeds each:");
    let g = generators::by_name("tree7-123")?;
    for v in ["i", "ltd", "otd", "gtd"] {
        let mut modes = Vec::new();
        for s in 0..20 {
            let r = run_named(&format!("treesize-{v}"), None, &g, Some(s), 1_000_000)?;
            ok &= r.task_ok == Some(true);
            modes.push(r.mode.expect("TreeSize exposes outputs"));
        }
        let (lo, hi) = (modes.iter().min().unwrap(), modes.iter().max().unwrap());
        println!("    treesize-{v:<4} weakest {lo}, strongest {hi}");
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            system,
            graph,
            family,
            seed,
            max_steps,
            out,
        } => (|| {
            let g = load_graph(&graph)?;
            let r = run_named(&system, family.as_deref(), &g, seed, max_steps)
                .map_err(|e| anyhow!("{e}; known systems: {}", SYSTEM_NAMES.join(", ")))?;
            save_trace(Some(&out), &r)?;
            let mode = r.mode.map_or(String::new(), |m| format!(", mode {m}"));
            let task = match r.task_ok {
                Some(true) => ", task solved",
                Some(false) => ", task NOT solved",
                None => "",
            };
            println!(
                "{}: {} events, {}{mode}{task}",
                system,
                r.trace.events.len(),
                r.outcome()
            );
            Ok(r.outcome() == RunOutcome::NormalForm && r.task_ok != Some(false))
        })(),
        Command::CheckCover {
            source,
            target,
            map,
            center,
            radius,
        } => cmd_check_cover(&source, &target, &map, center, radius),
        Command::BuildCover {
            kind,
            base,
            sheets,
            shift,
            center,
            radius,
            out,
        } => cmd_build_cover(kind, &base, sheets, shift, center, radius, out.as_deref()).map(|_| true),
        Command::Carto {
            family,
            graph,
            seed,
            max_steps,
            out,
        } => (|| {
            let g = load_graph(&graph)?;
            let r = run_named("carto", Some(&family), &g, seed, max_steps)?;
            save_trace(out.as_deref(), &r)?;
            ensure_normal_form(&r)?;
            println!("carto over {family}: {} events", r.trace.events.len());
            for l in &r.footer {
                println!("{l}");
            }
            Ok(true)
        })(),
        Command::Elect {
            family,
            graph,
            seed,
            algorithm,
            max_steps,
            out,
        } => cmd_elect(family.as_deref(), &graph, seed, algorithm, max_steps, out.as_deref()),
        Command::Treesize {
            variant,
            graph,
            seed,
            out,
        } => cmd_treesize(&variant, &graph, seed, out.as_deref()),
        Command::Classify {
            system,
            family,
            graph,
            seeds,
            max_steps,
        } => cmd_classify(&system, &family, &graph, seeds, max_steps),
        Command::Demo {
            demo:
                Demo::Impossibility {
                    election,
                    sheets,
                    seed,
                    out,
                },
        } => cmd_demo_impossibility(election, sheets, seed, out.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
