//! Concrete relabelling systems over a uniform node state `(mem, out, term)`.

use locomp_core::engine::{Rule, StarUpdate, StarView, System};
use locomp_core::{Label, LabelError, LabelledGraph, State};

/// Node state: working memory, output and termination flag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node {
    pub mem: Label,
    pub out: Label,
    pub term: bool,
}

impl Node {
    pub fn new(mem: Label) -> Self {
        Node {
            mem,
            out: Label::Bot,
            term: false,
        }
    }
}

pub fn term_label(term: bool) -> Label {
    if term {
        Label::sym("Term")
    } else {
        Label::Bot
    }
}

pub fn term_from(l: &Label) -> Result<bool, LabelError> {
    match l {
        Label::Bot => Ok(false),
        Label::Sym(s) if &**s == "Term" => Ok(true),
        _ => Err(LabelError::shape("Term or _", l)),
    }
}

impl State for Node {
    fn to_label(&self) -> Label {
        Label::tagged("norm", [self.mem.clone(), self.out.clone(), term_label(self.term)])
    }

    fn from_label(l: &Label) -> Result<Self, LabelError> {
        let [mem, out, term] = l.expect_tagged("norm", 3)? else {
            unreachable!()
        };
        Ok(Node {
            mem: mem.clone(),
            out: out.clone(),
            term: term_from(term)?,
        })
    }
}

pub fn uniform(g: &LabelledGraph, mem: Label) -> LabelledGraph<Node> {
    g.map_labels(|_, _| Node::new(mem.clone()))
}

pub fn elect() -> Label {
    Label::sym("Elect")
}

pub fn non_elect() -> Label {
    Label::sym("Non-Elect")
}

fn sym_is(l: &Label, s: &str) -> bool {
    l.as_sym() == Some(s)
}

/// Colouring with `d + 1` colours: an uncoloured vertex takes the least
/// colour absent from its neighbours.
pub fn colo(d: i64) -> System<Node> {
    System::new(
        &format!("colo{d}"),
        vec![Rule::center_rule("colour", move |v: &StarView<'_, Node>| {
            if v.center.mem != Label::int(0) {
                return None;
            }
            let c = (1..=d + 1)
                .find(|c| v.leaves.iter().all(|l| l.mem != Label::int(*c)))
                .expect("degree at most d");
            Some(Node {
                mem: Label::int(c),
                out: Label::int(c),
                term: false,
            })
        })],
    )
}

pub fn colo_initial(g: &LabelledGraph) -> LabelledGraph<Node> {
    uniform(g, Label::int(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeSizeVariant {
    Implicit,
    Ltd,
    Otd,
    Gtd,
}

impl TreeSizeVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "i" => Some(Self::Implicit),
            "ltd" => Some(Self::Ltd),
            "otd" => Some(Self::Otd),
            "gtd" => Some(Self::Gtd),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Implicit => "i",
            Self::Ltd => "ltd",
            Self::Otd => "otd",
            Self::Gtd => "gtd",
        }
    }
}

fn is_zero(n: &Node) -> bool {
    n.mem == Label::int(0)
}

fn mem_is(n: &Node, s: &str) -> bool {
    sym_is(&n.mem, s)
}

fn subtree_sum(v: &StarView<'_, Node>) -> i64 {
    1 + v.leaves.iter().filter_map(|l| l.mem.as_int()).sum::<i64>()
}

fn max_out<'a>(items: impl Iterator<Item = &'a Node>) -> Label {
    items.map(|n| n.out.clone()).max().unwrap_or(Label::Bot)
}

/// Tree size computation with the requested kind of termination.
///
/// Pruning from the leaves sums subtree sizes; the last pruned vertex knows
/// the size. The detecting variants broadcast it, convergecast
/// acknowledgements and detect the end at the last vertex to be
/// acknowledged. A vertex acknowledges once every neighbour knows the size
/// and all but one have acknowledged.
pub fn treesize(variant: TreeSizeVariant) -> System<Node> {
    use TreeSizeVariant::*;
    let zeros = |v: &StarView<'_, Node>| v.leaves.iter().filter(|l| is_zero(l)).count();
    let mut rules = Vec::new();
    if variant == Implicit {
        rules.push(Rule::center_rule("pruning", move |v: &StarView<'_, Node>| {
            let z = zeros(v);
            (is_zero(v.center) && z <= 1).then(|| {
                let s = Label::int(subtree_sum(v));
                Node {
                    mem: s.clone(),
                    out: s,
                    term: false,
                }
            })
        }));
        rules.push(Rule::center_rule("fast-broadcast", |v: &StarView<'_, Node>| {
            (v.leaves.iter().all(|l| !is_zero(l))).then(|| Node {
                out: max_out(v.leaves.iter().copied().chain([v.center])),
                ..v.center.clone()
            })
        }));
        return System::new("treesize-i", rules);
    }
    rules.push(Rule::center_rule("pruning", move |v: &StarView<'_, Node>| {
        (is_zero(v.center) && zeros(v) == 1).then(|| Node {
            mem: Label::int(subtree_sum(v)),
            ..v.center.clone()
        })
    }));
    rules.push(Rule::center_rule("size-computed", move |v: &StarView<'_, Node>| {
        (is_zero(v.center) && zeros(v) == 0).then(|| Node {
            mem: Label::sym("Size"),
            out: Label::int(subtree_sum(v)),
            term: variant == Ltd,
        })
    }));
    rules.push(Rule::center_rule("broadcast-size", move |v: &StarView<'_, Node>| {
        let sized = v.leaves.iter().filter(|l| mem_is(l, "Size")).copied();
        let out = max_out(sized.clone());
        (v.center.mem.as_int().is_some() && sized.count() > 0).then(|| Node {
            mem: Label::sym("Size"),
            out,
            term: variant == Ltd,
        })
    }));
    if variant == Ltd {
        return System::new("treesize-ltd", rules);
    }
    let non_ack = |v: &StarView<'_, Node>| v.leaves.iter().filter(|l| !mem_is(l, "Ack")).count();
    rules.push(Rule::center_rule("acknowledgement", move |v: &StarView<'_, Node>| {
        let informed = v.leaves.iter().all(|l| l.mem.as_int().is_none());
        (mem_is(v.center, "Size") && informed && non_ack(v) == 1).then(|| Node {
            mem: Label::sym("Ack"),
            ..v.center.clone()
        })
    }));
    rules.push(Rule::center_rule(
        "termination-detection",
        move |v: &StarView<'_, Node>| {
            (mem_is(v.center, "Size") && non_ack(v) == 0).then(|| Node {
                mem: if variant == Otd {
                    Label::sym("Term")
                } else {
                    v.center.mem.clone()
                },
                term: true,
                ..v.center.clone()
            })
        },
    ));
    if variant == Otd {
        rules.push(Rule::center_rule("broadcast-termination", |v: &StarView<'_, Node>| {
            (!mem_is(v.center, "Term") && v.leaves.iter().any(|l| mem_is(l, "Term"))).then(|| Node {
                mem: Label::sym("Term"),
                term: true,
                ..v.center.clone()
            })
        }));
    }
    System::new(&format!("treesize-{}", variant.name()), rules)
}

pub fn treesize_initial(g: &LabelledGraph) -> LabelledGraph<Node> {
    uniform(g, Label::int(0))
}

/// Words of the spanning tree: `_` (not reached), a tuple of integers, or
/// `ack(word)` once the subtree below has acknowledged.
pub fn word(l: &Label) -> Option<&[Label]> {
    l.as_tuple()
}

pub fn acked(l: &Label) -> bool {
    l.as_tagged("ack").is_some()
}

pub fn is_child_word(child: &Label, parent: &[Label]) -> bool {
    let w = child
        .as_tuple()
        .or_else(|| child.as_tagged("ack").and_then(|a| a.first()?.as_tuple()));
    matches!(w, Some(w) if w.len() == parent.len() + 1 && w[..parent.len()] == *parent)
}

/// Recruits the listed leaves with fresh child words of `parent`, numbered
/// in leaf order.
pub fn recruit(parent: &[Label], count: usize) -> Vec<Label> {
    (1..=count as i64)
        .map(|k| Label::tuple(parent.iter().cloned().chain([Label::int(k)])))
        .collect()
}

/// Spanning tree with global termination detection from a root whose `mem`
/// is the empty word.
pub fn spanning_tree() -> System<Node> {
    System::new(
        "spanning-tree",
        vec![
            Rule::new("spanning-vertices", |v: &StarView<'_, Node>| {
                let Some(w) = word(&v.center.mem) else { return vec![] };
                let fresh: Vec<usize> = (0..v.degree()).filter(|&i| v.leaves[i].mem.is_bot()).collect();
                if fresh.is_empty() {
                    return vec![];
                }
                let mut words = recruit(w, fresh.len()).into_iter();
                let mut u = StarUpdate::center(v, v.center.clone());
                for i in fresh {
                    u.leaves[i].mem = words.next().unwrap();
                }
                vec![u]
            }),
            Rule::center_rule("acknowledgement", |v: &StarView<'_, Node>| {
                let w = word(&v.center.mem).filter(|w| !w.is_empty())?;
                subtree_done(v, w).then(|| Node {
                    mem: Label::tagged("ack", [v.center.mem.clone()]),
                    ..v.center.clone()
                })
            }),
            Rule::center_rule("global-termination", |v: &StarView<'_, Node>| {
                let w = word(&v.center.mem).filter(|w| w.is_empty())?;
                subtree_done(v, w).then(|| Node {
                    term: true,
                    ..v.center.clone()
                })
            }),
        ],
    )
}

/// No neighbour is unreached and every child has acknowledged.
pub fn subtree_done<S>(v: &StarView<'_, S>, w: &[Label]) -> bool
where
    S: HasTree,
{
    v.leaves.iter().all(|l| {
        let m = l.tree();
        !m.is_bot() && (!is_child_word(m, w) || acked(m))
    })
}

pub trait HasTree {
    fn tree(&self) -> &Label;
}

impl HasTree for Node {
    fn tree(&self) -> &Label {
        &self.mem
    }
}

pub fn spanning_initial(g: &LabelledGraph, root: usize) -> LabelledGraph<Node> {
    g.map_labels(|v, _| Node::new(if v == root { Label::tuple([]) } else { Label::Bot }))
}

/// Election on trees: pruned leaves lose, the last vertex wins.
pub fn election_tree() -> System<Node> {
    let n = |x: &Node| x.mem == Label::sym("N");
    System::new(
        "election-tree",
        vec![
            Rule::center_rule("pruning", move |v: &StarView<'_, Node>| {
                (n(v.center) && v.leaves.iter().filter(|l| n(l)).count() == 1).then(|| Node {
                    mem: non_elect(),
                    out: non_elect(),
                    term: false,
                })
            }),
            Rule::center_rule("election", move |v: &StarView<'_, Node>| {
                (n(v.center) && !v.leaves.iter().any(|l| n(l))).then(|| Node {
                    mem: elect(),
                    out: elect(),
                    term: false,
                })
            }),
        ],
    )
}

/// Election on complete graphs: a vertex erases itself when it sees another
/// candidate; the last candidate wins.
pub fn election_complete() -> System<Node> {
    let n = |x: &Node| x.mem == Label::sym("N");
    System::new(
        "election-complete",
        vec![
            Rule::center_rule("erasing", move |v: &StarView<'_, Node>| {
                (n(v.center) && v.leaves.iter().any(|l| n(l))).then(|| Node {
                    mem: non_elect(),
                    out: non_elect(),
                    term: false,
                })
            }),
            Rule::center_rule("election", move |v: &StarView<'_, Node>| {
                (n(v.center) && !v.leaves.iter().any(|l| n(l))).then(|| Node {
                    mem: elect(),
                    out: elect(),
                    term: false,
                })
            }),
        ],
    )
}

pub fn election_initial(g: &LabelledGraph) -> LabelledGraph<Node> {
    uniform(g, Label::sym("N"))
}
