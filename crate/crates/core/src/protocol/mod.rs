//! Strategies as protocol graphs.
//!
//! A node is a canonical position with one move: a leaf plays the zero-bit
//! strategy, a split node lets its sender announce a bit, and a scale node
//! continues play at a multiple of its position (same distribution, different
//! lattice resolution). Merging equal positions can create cycles; their value
//! is the solution of the node equations, which is unique when every cycle
//! contracts.

mod simulate;

use std::collections::{BTreeMap, VecDeque};

use num_traits::{One, Signed, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::builtin::{self, Action, Step};
use crate::error::{Error, Result};
use crate::lp::sparse::{solve_blocks, SparseRow};
use crate::position::{Position, Symmetry};
use crate::scalar::{rational_string, parse_rational, Rational};
use crate::search::{UpdateOp, ValueTable};
use crate::split::{classify_split, is_allowed_split, SplitKind};

pub use simulate::{
    check_branch_probabilities, check_posteriors, simulate, AnalyticCheck, LeafHit, SimulationOptions, SimulationReport,
};

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Leaf,
    /// `left + right` (at most) the node's position, in the node's frame; the
    /// children are the canonical forms `left.apply(left_sym)` and so on.
    Split {
        left: Position<Rational>,
        right: Position<Rational>,
        sender: usize,
        left_node: usize,
        right_node: usize,
        left_sym: Symmetry,
        right_sym: Symmetry,
        relaxed: bool,
    },
    /// Value of the node is the value of `target = factor * position` over `factor`.
    Scale { factor: Rational, target: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub position: Position<Rational>,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolGraph {
    pub name: String,
    pub nodes: Vec<Node>,
    pub root: usize,
}

/// Move chosen for a canonical position, in that position's frame.
enum Move {
    Split { left: Position<Rational>, right: Position<Rational>, sender: usize, relaxed: bool },
    Scale { factor: Rational },
}

impl ProtocolGraph {
    /// Breadth-first expansion from `root`; `choose` returns the move of a
    /// canonical position, `None` for a leaf.
    fn expand(name: &str, root: &Position<Rational>, mut choose: impl FnMut(&Position<Rational>) -> Result<Option<Move>>) -> Result<Self> {
        let mut ids: BTreeMap<Position<Rational>, usize> = BTreeMap::new();
        let mut nodes: Vec<Node> = Vec::new();
        let mut queue = VecDeque::new();
        let mut intern = |p: Position<Rational>, nodes: &mut Vec<Node>, queue: &mut VecDeque<usize>| -> usize {
            *ids.entry(p.clone()).or_insert_with(|| {
                nodes.push(Node { position: p, kind: NodeKind::Leaf });
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            })
        };
        let root_id = intern(root.canonical(), &mut nodes, &mut queue);
        while let Some(id) = queue.pop_front() {
            let position = nodes[id].position.clone();
            let kind = match choose(&position)? {
                None => NodeKind::Leaf,
                Some(Move::Split { left, right, sender, relaxed }) => {
                    let (left_canon, left_sym) = left.canonicalize();
                    let (right_canon, right_sym) = right.canonicalize();
                    let left_node = intern(left_canon, &mut nodes, &mut queue);
                    let right_node = intern(right_canon, &mut nodes, &mut queue);
                    NodeKind::Split { left, right, sender, left_node, right_node, left_sym, right_sym, relaxed }
                }
                Some(Move::Scale { factor }) => {
                    if !factor.is_positive() {
                        return Err(Error::InvalidGraph(format!("scale factor {factor} at {position:?}")));
                    }
                    let target = intern(position.scale(&factor).canonical(), &mut nodes, &mut queue);
                    NodeKind::Scale { factor, target }
                }
            };
            nodes[id].kind = kind;
        }
        let graph = ProtocolGraph { name: name.to_string(), nodes, root: root_id };
        graph.validate()?;
        Ok(graph)
    }

    /// Graph of hand-written steps rooted at `root`. Steps are keyed by the
    /// canonical form of their parent; positions without a step are leaves.
    pub fn from_steps(name: &str, root: &Position<Rational>, steps: &[Step]) -> Result<Self> {
        let mut by_parent: BTreeMap<Position<Rational>, Move> = BTreeMap::new();
        for step in steps {
            let (canon, g) = step.parent.canonicalize();
            let mv = match &step.action {
                Action::Split { left, right, player } => Move::Split {
                    left: left.apply(g),
                    right: right.apply(g),
                    sender: g.apply_pair(0, *player).1,
                    relaxed: false,
                },
                Action::Scale { factor } => Move::Scale { factor: Rational::from_integer((*factor).into()) },
            };
            by_parent.insert(canon, mv);
        }
        Self::expand(name, root, |p| {
            Ok(by_parent.get(p).map(|mv| match mv {
                Move::Split { left, right, sender, relaxed } => {
                    Move::Split { left: left.clone(), right: right.clone(), sender: *sender, relaxed: *relaxed }
                }
                Move::Scale { factor } => Move::Scale { factor: factor.clone() },
            }))
        })
    }

    /// Built-in protocols: `twobit` at (3,3,3,3) and the cyclic strategy at
    /// (12,12,12,12) (`cyclic`, alias `thm29`), with exact splits only.
    pub fn builtin(name: &str) -> Option<Self> {
        let (steps, root) = match name {
            "twobit" => (builtin::twobit_steps(), crate::lattice(3, 3, 3, 3)),
            "cyclic" | "thm29" => (builtin::cyclic_steps(true), crate::lattice(12, 12, 12, 12)),
            _ => return None,
        };
        Some(Self::from_steps(name, &root.to_rational(), &steps).expect("built-in steps form a valid graph"))
    }

    /// The strategy behind the final values of a search table: each position
    /// follows the move of its last update.
    pub fn from_provenance<V: crate::scalar::Scalar>(table: &ValueTable<V>, root: &Position<u32>) -> Result<Self> {
        let name = format!("search-t{}", table.resolution());
        Self::expand(&name, &root.to_rational(), |p| {
            let lattice = to_lattice(p)?;
            let Some(record) = table.history(&lattice).and_then(|h| h.last()) else {
                return Ok(None);
            };
            Ok(Some(match record.op {
                UpdateOp::Split { .. } => {
                    let split = record.op.as_split(&lattice).expect("split op");
                    Move::Split {
                        left: split.left.to_rational(),
                        right: split.right.to_rational(),
                        sender: split.player,
                        relaxed: matches!(split.kind, SplitKind::Relaxed { .. }),
                    }
                }
                UpdateOp::Scale { factor } => Move::Scale { factor: Rational::from_integer(factor.into()) },
                UpdateOp::ScaleUp { factor } => Move::Scale { factor: Rational::new(1.into(), factor.into()) },
            }))
        })
    }

    pub fn root_position(&self) -> &Position<Rational> {
        &self.nodes[self.root].position
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_relaxed_splits(&self) -> bool {
        self.nodes.iter().any(|n| matches!(n.kind, NodeKind::Split { relaxed: true, .. }))
    }

    fn successors(&self, id: usize) -> Vec<usize> {
        match &self.nodes[id].kind {
            NodeKind::Leaf => vec![],
            NodeKind::Split { left_node, right_node, .. } => vec![*left_node, *right_node],
            NodeKind::Scale { target, .. } => vec![*target],
        }
    }

    /// Structural checks: canonical nodes, valid moves, and contraction on
    /// every cycle.
    pub fn validate(&self) -> Result<()> {
        let bad = |id: usize, why: String| Error::InvalidGraph(format!("node {id} {:?}: {why}", self.nodes[id].position));
        if self.root >= self.nodes.len() {
            return Err(Error::InvalidGraph("root out of range".into()));
        }
        for (id, node) in self.nodes.iter().enumerate() {
            let p = &node.position;
            if !p.is_nonnegative() || p.canonical() != *p {
                return Err(bad(id, "position is not canonical".into()));
            }
            match &node.kind {
                NodeKind::Leaf => {}
                NodeKind::Split { left, right, sender, left_node, right_node, left_sym, right_sym, relaxed } => {
                    let (l, r) = (*left_node, *right_node);
                    if l >= self.nodes.len() || r >= self.nodes.len() {
                        return Err(bad(id, "child out of range".into()));
                    }
                    if left.apply(*left_sym) != self.nodes[l].position || right.apply(*right_sym) != self.nodes[r].position {
                        return Err(bad(id, "child does not match its node".into()));
                    }
                    let ok = if *relaxed {
                        matches!(classify_split(p, left, right, *sender), Some(SplitKind::Relaxed { .. }))
                    } else {
                        is_allowed_split(p, left, right, *sender)
                    };
                    if !ok {
                        return Err(bad(id, format!("{left:?} + {right:?} is not a valid split for sender {}", sender + 1)));
                    }
                }
                NodeKind::Scale { factor, target } => {
                    if *target >= self.nodes.len() || self.nodes[*target].position != p.scale(factor).canonical() {
                        return Err(bad(id, "scale target mismatch".into()));
                    }
                }
            }
        }
        self.check_contraction()
    }

    /// Node equations `v - sum(coef * v_child) = constant`.
    fn equations(&self) -> (Vec<SparseRow>, Vec<Rational>) {
        let mut rows = Vec::with_capacity(self.nodes.len());
        let mut rhs = Vec::with_capacity(self.nodes.len());
        for (id, node) in self.nodes.iter().enumerate() {
            let mut row: SparseRow = vec![(id, Rational::one())];
            let mut b = Rational::zero();
            match &node.kind {
                NodeKind::Leaf => b = node.position.succ_zero(),
                NodeKind::Split { left_node, right_node, .. } => {
                    row.push((*left_node, -Rational::one()));
                    row.push((*right_node, -Rational::one()));
                }
                NodeKind::Scale { factor, target } => row.push((*target, -factor.recip())),
            }
            rows.push(merge_terms(row));
            rhs.push(b);
        }
        (rows, rhs)
    }

    /// Every strongly connected part of the graph must shrink values: with `M`
    /// its (nonnegative) coefficient matrix, `(I - M) x = 1` must have a
    /// positive solution, which holds iff the spectral radius of `M` is below 1.
    fn check_contraction(&self) -> Result<()> {
        let mut graph = DiGraph::<(), ()>::new();
        let ids: Vec<_> = (0..self.nodes.len()).map(|_| graph.add_node(())).collect();
        for id in 0..self.nodes.len() {
            for s in self.successors(id) {
                graph.add_edge(ids[id], ids[s], ());
            }
        }
        let (rows, _) = self.equations();
        for block in tarjan_scc(&graph) {
            let members: Vec<usize> = block.iter().map(|v| v.index()).collect();
            let cyclic = members.len() > 1 || self.successors(members[0]).contains(&members[0]);
            if !cyclic {
                continue;
            }
            if !members.iter().any(|&m| matches!(self.nodes[m].kind, NodeKind::Scale { .. })) {
                return Err(Error::InvalidGraph(format!(
                    "cycle through {:?} has no scale node",
                    self.nodes[members[0]].position
                )));
            }
            let local: BTreeMap<usize, usize> = members.iter().enumerate().map(|(i, &m)| (m, i)).collect();
            let sub: Vec<SparseRow> = members
                .iter()
                .map(|m| rows[*m].iter().filter_map(|(j, a)| local.get(j).map(|&l| (l, a.clone()))).collect())
                .collect();
            let ones = vec![Rational::one(); members.len()];
            let contracting = solve_blocks(&sub, &ones).is_ok_and(|x| x.iter().all(|v| v.is_positive()));
            if !contracting {
                return Err(Error::InvalidGraph(format!(
                    "cycle through {:?} does not contract",
                    self.nodes[members[0]].position
                )));
            }
        }
        Ok(())
    }

    /// Exact value of every node.
    pub fn node_values(&self) -> Result<Vec<Rational>> {
        let (rows, rhs) = self.equations();
        solve_blocks(&rows, &rhs)
    }

    /// Exact value of the root (unnormalized).
    pub fn value(&self) -> Result<Rational> {
        Ok(self.node_values()?.swap_remove(self.root))
    }

    /// Root value divided by the root mass, i.e. the success probability.
    pub fn normalized_value(&self) -> Result<Rational> {
        Ok(self.value()? / self.root_position().norm1())
    }

    /// Cycle heads: targets of back edges of a depth-first search from the
    /// root. Cutting the edges into them leaves the reachable graph acyclic.
    pub fn cycle_heads(&self) -> Vec<bool> {
        let n = self.nodes.len();
        let mut head = vec![false; n];
        let mut state = vec![0u8; n]; // 0 new, 1 on stack, 2 done
        let mut stack = vec![(self.root, 0usize)];
        state[self.root] = 1;
        while let Some((id, next)) = stack.pop() {
            let succ = self.successors(id);
            if next < succ.len() {
                stack.push((id, next + 1));
                let s = succ[next];
                match state[s] {
                    0 => {
                        state[s] = 1;
                        stack.push((s, 0));
                    }
                    1 => head[s] = true,
                    _ => {}
                }
            } else {
                state[id] = 2;
            }
        }
        head
    }

    /// Value of the finite protocol that follows the graph but plays the
    /// zero-bit strategy the `unrollings + 1`-th time it would re-enter the same
    /// cycle head along a path.
    pub fn truncated_value(&self, unrollings: u32) -> Rational {
        let heads = self.cycle_heads();
        let order = self.acyclic_order(&heads);
        let mut previous: Vec<Rational> = Vec::new();
        let mut current: Vec<Rational> = vec![Rational::zero(); self.nodes.len()];
        for level in 0..=unrollings {
            // heads expand over the previous level, everything else over this one
            for &id in &order {
                let value = if heads[id] {
                    if level == 0 {
                        self.nodes[id].position.succ_zero()
                    } else {
                        self.combine(id, |c| previous[c].clone())
                    }
                } else {
                    self.combine(id, |c| current[c].clone())
                };
                current[id] = value;
            }
            previous = current.clone();
        }
        current[self.root].clone()
    }

    fn combine(&self, id: usize, value: impl Fn(usize) -> Rational) -> Rational {
        let node = &self.nodes[id];
        match &node.kind {
            NodeKind::Leaf => node.position.succ_zero(),
            NodeKind::Split { left_node, right_node, .. } => value(*left_node) + value(*right_node),
            NodeKind::Scale { factor, target } => value(*target) / factor,
        }
    }

    /// Reachable nodes, heads first, then the rest in depth-first post-order.
    /// Only edges into heads close cycles, so every non-head comes after its
    /// non-head successors.
    fn acyclic_order(&self, heads: &[bool]) -> Vec<usize> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut post = Vec::new();
        let mut stack = vec![(self.root, 0usize)];
        seen[self.root] = true;
        while let Some((id, next)) = stack.pop() {
            let succ = self.successors(id);
            if next < succ.len() {
                stack.push((id, next + 1));
                let s = succ[next];
                if !seen[s] {
                    seen[s] = true;
                    stack.push((s, 0));
                }
            } else {
                post.push(id);
            }
        }
        let mut order: Vec<usize> = post.iter().copied().filter(|&id| heads[id]).collect();
        order.extend(post.iter().copied().filter(|&id| !heads[id]));
        order
    }

    pub fn to_json(&self) -> Result<String> {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| {
                let mut rec = NodeRecord {
                    id,
                    position: n.position.clone(),
                    kind: "leaf".into(),
                    left: None,
                    right: None,
                    sender: None,
                    children: None,
                    relaxed: None,
                    factor: None,
                    target: None,
                };
                match &n.kind {
                    NodeKind::Leaf => {}
                    NodeKind::Split { left, right, sender, left_node, right_node, relaxed, .. } => {
                        rec.kind = "split".into();
                        rec.left = Some(left.clone());
                        rec.right = Some(right.clone());
                        rec.sender = Some(sender + 1);
                        rec.children = Some([*left_node, *right_node]);
                        rec.relaxed = Some(*relaxed);
                    }
                    NodeKind::Scale { factor, target } => {
                        rec.kind = "scale".into();
                        rec.factor = Some(rational_string(factor));
                        rec.target = Some(*target);
                    }
                }
                rec
            })
            .collect();
        let file = GraphFile { name: self.name.clone(), root: self.root, nodes };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Reads a graph written by [`ProtocolGraph::to_json`]. Child links are
    /// recomputed from the positions, and the result is validated.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;
        let by_id: BTreeMap<usize, &NodeRecord> = file.nodes.iter().map(|r| (r.id, r)).collect();
        let root = by_id.get(&file.root).ok_or_else(|| Error::Format(format!("root {} is not a node", file.root)))?;
        let moves: BTreeMap<Position<Rational>, &NodeRecord> = file.nodes.iter().map(|r| (r.position.clone(), r)).collect();
        Self::expand(&file.name, &root.position, |p| {
            let Some(rec) = moves.get(p) else {
                return Err(Error::Format(format!("no node for position {p:?}")));
            };
            let missing = |field: &str| Error::Format(format!("node {} ({}) lacks `{field}`", rec.id, rec.kind));
            Ok(match rec.kind.as_str() {
                "leaf" => None,
                "split" => {
                    let sender = rec.sender.ok_or_else(|| missing("sender"))?;
                    if !(1..=2).contains(&sender) {
                        return Err(Error::Format(format!("node {}: sender must be 1 or 2", rec.id)));
                    }
                    Some(Move::Split {
                        left: rec.left.clone().ok_or_else(|| missing("left"))?,
                        right: rec.right.clone().ok_or_else(|| missing("right"))?,
                        sender: sender - 1,
                        relaxed: rec.relaxed.unwrap_or(false),
                    })
                }
                "scale" => {
                    let factor = rec.factor.as_deref().ok_or_else(|| missing("factor"))?;
                    let factor = parse_rational(factor).ok_or_else(|| Error::Format(format!("bad factor `{factor}`")))?;
                    Some(Move::Scale { factor })
                }
                other => return Err(Error::Format(format!("unknown node kind `{other}`"))),
            })
        })
    }
}

fn merge_terms(row: SparseRow) -> SparseRow {
    let mut merged: BTreeMap<usize, Rational> = BTreeMap::new();
    for (j, a) in row {
        *merged.entry(j).or_insert_with(Rational::zero) += a;
    }
    merged.into_iter().filter(|(_, a)| !a.is_zero()).collect()
}

fn to_lattice(p: &Position<Rational>) -> Result<Position<u32>> {
    let mut out = [0u32; 4];
    for (slot, v) in out.iter_mut().zip(p.coords()) {
        if !v.is_integer() {
            return Err(Error::InvalidGraph(format!("{p:?} is not a lattice position")));
        }
        *slot = u32::try_from(v.to_integer()).map_err(|_| Error::InvalidGraph(format!("{p:?} is out of range")))?;
    }
    Ok(Position::from_abcd(out))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct NodeRecord {
    id: usize,
    position: Position<Rational>,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<Position<Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<Position<Rational>>,
    /// 1-based.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sender: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relaxed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GraphFile {
    name: String,
    root: usize,
    nodes: Vec<NodeRecord>,
}
