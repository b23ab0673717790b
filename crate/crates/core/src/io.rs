//! Text formats for graphs, morphisms and traces.
//!
//! Graph file:
//!
//! ```text
//! vertices 3
//! 0 a
//! 1 b
//! 2 (c, 1)
//! edges 2
//! 0 1 _
//! 1 2 _
//! map 3
//! 0 0
//! 1 1
//! 2 0
//! ```
//!
//! The `map` section is optional and gives a vertex map to some other graph.
//! Lines starting with `#` and blank lines are ignored. Writing then reading
//! is the identity, and reading then writing reproduces canonical text.
//!
//! Trace file: a header (`system`, `scheduler`, `seed`, `graph-hash`), the
//! initial graph, one `event(...)` line per step, the final vertex labels,
//! the outcome, and optional free-form footer lines.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{Event, RunOutcome, Trace};
use crate::graph::{GraphError, LabelledGraph, VertexId};
use crate::label::{Label, LabelError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Label { line: usize, source: LabelError },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("graph hash mismatch: header says {expected}, content hashes to {actual}")]
    HashMismatch { expected: String, actual: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphFile {
    pub graph: LabelledGraph,
    pub map: Option<Vec<Option<VertexId>>>,
}

pub fn write_graph(g: &LabelledGraph) -> String {
    let mut out = String::new();
    write_graph_into(&mut out, g);
    out
}

fn write_graph_into(out: &mut String, g: &LabelledGraph) {
    writeln!(out, "vertices {}", g.order()).unwrap();
    for v in g.vertices() {
        writeln!(out, "{v} {}", g.label(v)).unwrap();
    }
    writeln!(out, "edges {}", g.size()).unwrap();
    for (u, v, l) in g.edges() {
        writeln!(out, "{u} {v} {l}").unwrap();
    }
}

pub fn write_graph_with_map(g: &LabelledGraph, map: &[Option<VertexId>]) -> String {
    let mut out = write_graph(g);
    let defined: Vec<(usize, usize)> = map.iter().enumerate().filter_map(|(v, t)| t.map(|t| (v, t))).collect();
    writeln!(out, "map {}", defined.len()).unwrap();
    for (v, t) in defined {
        writeln!(out, "{v} {t}").unwrap();
    }
    out
}

/// SHA-256 of the canonical graph text, in hex.
pub fn graph_hash(g: &LabelledGraph) -> String {
    hex::encode(Sha256::digest(write_graph(g).as_bytes()))
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate().peekable(),
        }
    }

    fn skip_blank(&mut self) {
        while let Some((_, l)) = self.inner.peek() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                self.inner.next();
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        self.skip_blank();
        self.inner.next().map(|(i, l)| (i + 1, l.trim()))
    }

    fn peek_keyword(&mut self) -> Option<&'a str> {
        self.skip_blank();
        self.inner
            .peek()
            .map(|(_, l)| l.split_whitespace().next().unwrap_or(""))
    }

    fn line_no(&mut self) -> usize {
        self.inner.peek().map_or(0, |(i, _)| i + 1)
    }

    /// Reads `keyword <count>`.
    fn header(&mut self, keyword: &str) -> Result<(usize, String), FormatError> {
        let line = self.line_no();
        let Some((line, text)) = self.next() else {
            return Err(syntax(line, format!("expected `{keyword}`, found end of input")));
        };
        let (kw, rest) = split_word(text);
        if kw != keyword {
            return Err(syntax(line, format!("expected `{keyword}`, found `{kw}`")));
        }
        Ok((line, rest.to_string()))
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

fn split_word(s: &str) -> (&str, &str) {
    let s = s.trim();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim()),
        None => (s, ""),
    }
}

fn parse_usize(line: usize, s: &str) -> Result<usize, FormatError> {
    s.parse()
        .map_err(|_| syntax(line, format!("expected a non-negative integer, found `{s}`")))
}

fn parse_label(line: usize, s: &str) -> Result<Label, FormatError> {
    s.parse().map_err(|source| FormatError::Label { line, source })
}

fn count_section(lines: &mut Lines<'_>, keyword: &str) -> Result<usize, FormatError> {
    let (line, rest) = lines.header(keyword)?;
    parse_usize(line, rest.trim())
}

fn read_vertex_labels(lines: &mut Lines<'_>, keyword: &str) -> Result<Vec<Label>, FormatError> {
    let n = count_section(lines, keyword)?;
    let mut labels = Vec::with_capacity(n);
    for expected in 0..n {
        let line = lines.line_no();
        let (line, text) = lines.next().ok_or_else(|| syntax(line, "missing vertex line"))?;
        let (id, label) = split_word(text);
        if parse_usize(line, id)? != expected {
            return Err(syntax(line, format!("expected vertex {expected}")));
        }
        labels.push(parse_label(line, label)?);
    }
    Ok(labels)
}

fn read_graph(lines: &mut Lines<'_>) -> Result<LabelledGraph, FormatError> {
    let labels = read_vertex_labels(lines, "vertices")?;
    let m = count_section(lines, "edges")?;
    let mut g = LabelledGraph::with_labels(labels);
    for _ in 0..m {
        let line = lines.line_no();
        let (line, text) = lines.next().ok_or_else(|| syntax(line, "missing edge line"))?;
        let (u, rest) = split_word(text);
        let (v, label) = split_word(rest);
        g.add_edge(parse_usize(line, u)?, parse_usize(line, v)?, parse_label(line, label)?)?;
    }
    g.check_connected()?;
    Ok(g)
}

pub fn parse_graph(text: &str) -> Result<GraphFile, FormatError> {
    let mut lines = Lines::new(text);
    let graph = read_graph(&mut lines)?;
    let mut map = None;
    if lines.peek_keyword() == Some("map") {
        let k = count_section(&mut lines, "map")?;
        let mut m = vec![None; graph.order()];
        for _ in 0..k {
            let line = lines.line_no();
            let (line, text) = lines.next().ok_or_else(|| syntax(line, "missing map line"))?;
            let (v, t) = split_word(text);
            let v = parse_usize(line, v)?;
            if v >= m.len() || m[v].is_some() {
                return Err(syntax(line, format!("bad or repeated map entry for vertex {v}")));
            }
            m[v] = Some(parse_usize(line, t)?);
        }
        map = Some(m);
    }
    if let Some((line, text)) = lines.next() {
        return Err(syntax(line, format!("unexpected content `{text}`")));
    }
    Ok(GraphFile { graph, map })
}

fn pairs(items: &[(VertexId, Label)]) -> Label {
    Label::tuple(
        items
            .iter()
            .map(|(v, l)| Label::tuple([Label::int(*v as i64), l.clone()])),
    )
}

fn event_label(e: &Event<Label>) -> Label {
    Label::tagged(
        "event",
        [
            Label::int(e.step as i64),
            Label::sym(&e.rule),
            Label::int(e.center as i64),
            Label::int(e.alt as i64),
            pairs(&e.before),
            pairs(&e.after),
        ],
    )
}

fn parse_pairs(line: usize, l: &Label) -> Result<Vec<(VertexId, Label)>, FormatError> {
    let bad = || syntax(line, "malformed star states");
    l.as_tuple()
        .ok_or_else(bad)?
        .iter()
        .map(|p| match p.as_tuple() {
            Some([Label::Int(v), s]) if *v >= 0 => Ok((*v as usize, s.clone())),
            _ => Err(bad()),
        })
        .collect()
}

fn parse_event(line: usize, text: &str) -> Result<Event<Label>, FormatError> {
    let l = parse_label(line, text)?;
    let bad = || syntax(line, "malformed event");
    let items = l.as_tagged("event").filter(|i| i.len() == 6).ok_or_else(bad)?;
    let num = |x: &Label| x.as_int().filter(|v| *v >= 0).map(|v| v as usize).ok_or_else(bad);
    Ok(Event {
        step: num(&items[0])?,
        rule: items[1].as_sym().ok_or_else(bad)?.into(),
        center: num(&items[2])?,
        alt: num(&items[3])?,
        before: parse_pairs(line, &items[4])?,
        after: parse_pairs(line, &items[5])?,
    })
}

pub fn write_trace(t: &Trace<Label>, footer: &[String]) -> String {
    let mut out = String::new();
    writeln!(out, "system {}", Label::sym(&t.system)).unwrap();
    writeln!(out, "scheduler {}", t.scheduler).unwrap();
    match t.seed {
        Some(s) => writeln!(out, "seed {s}").unwrap(),
        None => writeln!(out, "seed _").unwrap(),
    }
    writeln!(out, "graph-hash {}", graph_hash(&t.initial)).unwrap();
    write_graph_into(&mut out, &t.initial);
    writeln!(out, "events {}", t.events.len()).unwrap();
    for e in &t.events {
        writeln!(out, "{}", event_label(e)).unwrap();
    }
    writeln!(out, "final {}", t.final_graph.order()).unwrap();
    for v in t.final_graph.vertices() {
        writeln!(out, "{v} {}", t.final_graph.label(v)).unwrap();
    }
    writeln!(out, "outcome {}", t.outcome).unwrap();
    writeln!(out, "footer {}", footer.len()).unwrap();
    for l in footer {
        writeln!(out, "{l}").unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceFile {
    pub trace: Trace<Label>,
    pub footer: Vec<String>,
}

pub fn parse_trace(text: &str) -> Result<TraceFile, FormatError> {
    let mut lines = Lines::new(text);
    let (line, system) = lines.header("system")?;
    let system = parse_label(line, &system)?
        .as_sym()
        .ok_or_else(|| syntax(line, "system name must be a symbol"))?
        .to_string();
    let (_, scheduler) = lines.header("scheduler")?;
    let (line, seed) = lines.header("seed")?;
    let seed = match seed.as_str() {
        "_" => None,
        s => Some(s.parse::<u64>().map_err(|_| syntax(line, "bad seed"))?),
    };
    let (_, hash) = lines.header("graph-hash")?;
    let initial = read_graph(&mut lines)?;
    let actual = graph_hash(&initial);
    if actual != hash {
        return Err(FormatError::HashMismatch { expected: hash, actual });
    }
    let k = count_section(&mut lines, "events")?;
    let mut events = Vec::with_capacity(k);
    for _ in 0..k {
        let line = lines.line_no();
        let (line, text) = lines.next().ok_or_else(|| syntax(line, "missing event line"))?;
        events.push(parse_event(line, text)?);
    }
    let finals = read_vertex_labels(&mut lines, "final")?;
    let final_graph = initial.relabelled(finals)?;
    let (line, outcome) = lines.header("outcome")?;
    let outcome = match outcome.as_str() {
        "normal-form" => RunOutcome::NormalForm,
        "budget-exhausted" => RunOutcome::BudgetExhausted,
        "script-ended" => RunOutcome::ScriptEnded,
        s => match s.strip_prefix("script-rejected ") {
            Some(i) => RunOutcome::ScriptRejected(parse_usize(line, i)?),
            None => return Err(syntax(line, format!("unknown outcome `{s}`"))),
        },
    };
    let n = count_section(&mut lines, "footer")?;
    let mut footer = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.line_no();
        let (_, text) = lines.next().ok_or_else(|| syntax(line, "missing footer line"))?;
        footer.push(text.to_string());
    }
    Ok(TraceFile {
        trace: Trace {
            system,
            scheduler,
            seed,
            initial,
            events,
            final_graph,
            outcome,
        },
        footer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, Rule, Scheduler, System};
    use crate::generators::ring;
    use crate::label::State;

    #[test]
    fn graph_round_trip() {
        let mut g = ring(4)
            .relabelled(vec![
                Label::sym("a"),
                Label::tuple([Label::int(1), Label::sym("x y")]),
                Label::Bot,
                Label::set([Label::int(2)]),
            ])
            .unwrap();
        g = g.map_labels(|_, l| l.clone());
        let text = write_graph(&g);
        let back = parse_graph(&text).unwrap();
        assert_eq!(back.graph, g);
        assert_eq!(back.map, None);
        assert_eq!(write_graph(&back.graph), text);

        let with_map = write_graph_with_map(&g, &[Some(0), Some(1), Some(0), None]);
        let back = parse_graph(&with_map).unwrap();
        assert_eq!(back.map, Some(vec![Some(0), Some(1), Some(0), None]));
        assert_eq!(write_graph_with_map(&back.graph, back.map.as_ref().unwrap()), with_map);
    }

    #[test]
    fn graph_errors() {
        assert!(matches!(
            parse_graph("vertices 2\n0 a\n1 b\nedges 0\n"),
            Err(FormatError::Graph(GraphError::Disconnected))
        ));
        assert!(matches!(
            parse_graph("vertices 1\n0 (a\nedges 0\n"),
            Err(FormatError::Label { line: 2, .. })
        ));
        assert!(matches!(
            parse_graph("vertices 1\n1 a\nedges 0\n"),
            Err(FormatError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn trace_round_trip() {
        let sys: System<i64> = System::new(
            "colo",
            vec![Rule::center_rule("colour", |v| {
                (*v.center == 0).then(|| (1..=3).find(|c| v.leaves.iter().all(|l| **l != *c)).unwrap())
            })],
        );
        let g = ring(5).map_labels(|_, _| 0i64);
        let t = run(&sys, &g, &Scheduler::Random(11), 100).to_labels();
        let footer = vec!["vertex number".to_string()];
        let text = write_trace(&t, &footer);
        let back = parse_trace(&text).unwrap();
        assert_eq!(back.trace, t);
        assert_eq!(back.footer, footer);
        assert_eq!(write_trace(&back.trace, &back.footer), text);
        assert!(back.trace.replay().is_ok());
        let typed = back.trace.initial.map_labels(|_, l| i64::from_label(l).unwrap());
        assert_eq!(typed, g);

        let tampered = text.replacen("0 0\n", "0 1\n", 1);
        assert!(matches!(parse_trace(&tampered), Err(FormatError::HashMismatch { .. })));
    }
}
