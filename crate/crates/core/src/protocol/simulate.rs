//! Monte Carlo play of a protocol graph against the optimal eavesdropper.
//!
//! A sample draws the secret holder and bit from the root distribution, walks
//! the graph letting each sender announce a bit, and ends at a leaf where the
//! players output the zero-bit choice and the eavesdropper blames the player
//! most likely to hold the secret given that output. Ties in the output go to
//! bit 0; ties in the blame are broken uniformly at random.

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{NodeKind, ProtocolGraph};
use crate::error::{Error, Result};
use crate::lp::ExactNumber;
use crate::position::Position;
use crate::scalar::Rational;

/// Samples per shard. Shards are fixed by the sample count alone, so results
/// do not depend on the number of worker threads.
const SHARD: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub samples: u64,
    /// Moves after which play stops and the zero-bit strategy is used.
    pub depth_limit: u32,
    pub seed: u64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions { samples: 1_000_000, depth_limit: 100, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafHit {
    pub node: usize,
    pub position: String,
    pub hits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub protocol: String,
    pub seed: u64,
    pub samples: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub standard_error: f64,
    /// Exact success probability of the (untruncated) graph.
    pub expected: ExactNumber,
    /// `(success_rate - expected) / standard_error`.
    pub deviation_sigmas: f64,
    pub depth_limit: u32,
    /// Samples stopped by the depth limit.
    pub truncated: u64,
    pub truncated_fraction: f64,
    /// Where samples ended (leaves, or inner nodes when truncated).
    pub leaf_hits: Vec<LeafHit>,
}

/// Coordinate index `2 * player + bit`, matching `abcd` order.
fn coord(bit: usize, player: usize) -> usize {
    2 * player + bit
}

/// Exact probability that the sender's announcement leads to `left` given the
/// secret sits at each coordinate of the parent: the sender's own entries move
/// freely, every other player keeps the common ratio of the split.
fn branch_probabilities(parent: &Position<Rational>, left: &Position<Rational>, sender: usize) -> [Rational; 4] {
    let block = |p: &Position<Rational>, player: usize| p.entry(0, player) + p.entry(1, player);
    let mut out: [Rational; 4] = Default::default();
    for player in 0..2 {
        for bit in 0..2 {
            let (num, den) = if player == sender {
                (left.entry(bit, player).clone(), parent.entry(bit, player).clone())
            } else {
                (block(left, player), block(parent, player))
            };
            out[coord(bit, player)] = if den.is_zero() { Rational::zero() } else { num / den };
        }
    }
    out
}

/// Zero-bit play at `p`: the output bit and the players the eavesdropper may blame.
fn leaf_rule(p: &Position<Rational>) -> (usize, Vec<usize>) {
    let row = |bit: usize| {
        let (x, y) = (p.entry(bit, 0), p.entry(bit, 1));
        x + y - x.max(y)
    };
    let out = if row(1) > row(0) { 1 } else { 0 };
    let top = p.entry(out, 0).max(p.entry(out, 1)).clone();
    let blame = (0..2).filter(|&j| *p.entry(out, j) == top).collect();
    (out, blame)
}

enum Step {
    Leaf,
    Split { p0: [f64; 4], left: usize, right: usize, left_map: [usize; 4], right_map: [usize; 4] },
    Scale { target: usize },
}

struct Compiled {
    root: usize,
    /// Cumulative root distribution over coordinates.
    cumulative: [f64; 4],
    steps: Vec<Step>,
    leaves: Vec<(usize, Vec<usize>)>,
}

fn compile(graph: &ProtocolGraph) -> Result<Compiled> {
    let mut steps = Vec::with_capacity(graph.len());
    for (id, node) in graph.nodes.iter().enumerate() {
        steps.push(match &node.kind {
            NodeKind::Leaf => Step::Leaf,
            NodeKind::Split { relaxed: true, .. } => {
                return Err(Error::InvalidGraph(format!(
                    "node {id} {:?} uses a relaxed split, which has no direct protocol; use the exact value instead",
                    node.position
                )));
            }
            NodeKind::Split { left, sender, left_node, right_node, left_sym, right_sym, .. } => Step::Split {
                p0: branch_probabilities(&node.position, left, *sender).map(|r| r.to_f64().unwrap_or(0.0)),
                left: *left_node,
                right: *right_node,
                left_map: std::array::from_fn(|c| left_sym.apply_coord(c)),
                right_map: std::array::from_fn(|c| right_sym.apply_coord(c)),
            },
            NodeKind::Scale { target, .. } => Step::Scale { target: *target },
        });
    }
    let root = graph.root_position();
    let norm = root.norm1();
    if norm.is_zero() {
        return Err(Error::InvalidGraph("root position has no mass".into()));
    }
    let mut cumulative = [0.0; 4];
    let mut acc = Rational::zero();
    for (c, v) in root.coords().enumerate() {
        acc += v;
        cumulative[c] = (&acc / &norm).to_f64().unwrap_or(1.0);
    }
    cumulative[3] = 1.0;
    let leaves = graph.nodes.iter().map(|n| leaf_rule(&n.position)).collect();
    Ok(Compiled { root: graph.root, cumulative, steps, leaves })
}

#[derive(Default)]
struct Tally {
    successes: u64,
    truncated: u64,
    hits: Vec<u64>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.successes += other.successes;
        self.truncated += other.truncated;
        if self.hits.len() < other.hits.len() {
            self.hits.resize(other.hits.len(), 0);
        }
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
        self
    }
}

fn run_shard(c: &Compiled, shard: u64, samples: u64, opts: &SimulationOptions) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(shard);
    let mut tally = Tally { hits: vec![0; c.steps.len()], ..Tally::default() };
    for _ in 0..samples {
        let u: f64 = rng.gen();
        let mut at = c.cumulative.iter().position(|&p| u < p).unwrap_or(3);
        let mut node = c.root;
        let mut depth = 0u32;
        loop {
            let step = &c.steps[node];
            if matches!(step, Step::Leaf) {
                break;
            }
            if depth >= opts.depth_limit {
                tally.truncated += 1;
                break;
            }
            depth += 1;
            match step {
                Step::Leaf => unreachable!(),
                Step::Split { p0, left, right, left_map, right_map } => {
                    if rng.gen::<f64>() < p0[at] {
                        (node, at) = (*left, left_map[at]);
                    } else {
                        (node, at) = (*right, right_map[at]);
                    }
                }
                Step::Scale { target } => node = *target,
            }
        }
        tally.hits[node] += 1;
        let (out, blame) = &c.leaves[node];
        let blamed = if blame.len() == 1 { blame[0] } else { blame[rng.gen_range(0..blame.len())] };
        let (bit, holder) = (at % 2, at / 2);
        if bit == *out && holder != blamed {
            tally.successes += 1;
        }
    }
    tally
}

/// Plays `opts.samples` independent runs of `graph`. Fails on relaxed splits.
pub fn simulate(graph: &ProtocolGraph, opts: &SimulationOptions) -> Result<SimulationReport> {
    let compiled = compile(graph)?;
    let expected = graph.normalized_value()?;
    let shards = opts.samples.div_ceil(SHARD);
    let tally = (0..shards)
        .into_par_iter()
        .map(|s| run_shard(&compiled, s, SHARD.min(opts.samples - s * SHARD), opts))
        .reduce(Tally::default, Tally::merge);
    let n = opts.samples.max(1) as f64;
    let rate = tally.successes as f64 / n;
    let standard_error = (rate * (1.0 - rate) / n).sqrt();
    let exp = expected.to_f64().unwrap_or(f64::NAN);
    let leaf_hits = tally
        .hits
        .iter()
        .enumerate()
        .filter(|(_, &h)| h > 0)
        .map(|(node, &hits)| LeafHit { node, position: graph.nodes[node].position.to_string(), hits })
        .collect();
    Ok(SimulationReport {
        protocol: graph.name.clone(),
        seed: opts.seed,
        samples: opts.samples,
        successes: tally.successes,
        success_rate: rate,
        standard_error,
        expected: ExactNumber::of(&expected),
        deviation_sigmas: if standard_error > 0.0 { (rate - exp) / standard_error } else { 0.0 },
        depth_limit: opts.depth_limit,
        truncated: tally.truncated,
        truncated_fraction: tally.truncated as f64 / n,
        leaf_hits,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCheck {
    pub check: String,
    pub passed: bool,
    pub checked: u64,
    pub failures: Vec<String>,
}

/// At every exact split node, averaging the sender behaviour over the parent
/// distribution gives probability `|left| / |parent|` of the left branch.
pub fn check_branch_probabilities(graph: &ProtocolGraph) -> AnalyticCheck {
    let mut check = AnalyticCheck { check: "branch_probabilities".into(), passed: true, checked: 0, failures: vec![] };
    for (id, node) in graph.nodes.iter().enumerate() {
        let NodeKind::Split { left, sender, relaxed: false, .. } = &node.kind else { continue };
        let p0 = branch_probabilities(&node.position, left, *sender);
        let mixed: Rational = node.position.coords().zip(&p0).map(|(m, p)| m * p).sum();
        check.checked += 1;
        if mixed != left.norm1() {
            check.passed = false;
            check.failures.push(format!("node {id} {:?}: mass {} to the left, expected {}", node.position, mixed, left.norm1()));
        }
    }
    check
}

/// Follows `paths` random walks of up to `max_depth` moves, carrying the exact
/// eavesdropper posterior, and compares it with the normalized position of
/// every node reached.
pub fn check_posteriors(graph: &ProtocolGraph, paths: u64, max_depth: u32, seed: u64) -> AnalyticCheck {
    let mut check = AnalyticCheck { check: "posteriors".into(), passed: true, checked: 0, failures: vec![] };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normalized = |p: &Position<Rational>| -> Vec<Rational> {
        let n = p.norm1();
        p.coords().map(|v| v / &n).collect()
    };
    for _ in 0..paths {
        let mut node = graph.root;
        let mut posterior = normalized(graph.root_position());
        for _ in 0..max_depth {
            let current = &graph.nodes[node];
            match &current.kind {
                NodeKind::Leaf => break,
                NodeKind::Split { relaxed: true, .. } => break,
                NodeKind::Split { left, sender, left_node, right_node, left_sym, right_sym, .. } => {
                    let p0 = branch_probabilities(&current.position, left, *sender);
                    let go_left = rng.gen::<bool>();
                    let (next, sym) = if go_left { (*left_node, *left_sym) } else { (*right_node, *right_sym) };
                    let mut moved = vec![Rational::zero(); 4];
                    for c in 0..4 {
                        let p = if go_left { p0[c].clone() } else { Rational::from_integer(1.into()) - &p0[c] };
                        moved[sym.apply_coord(c)] = &posterior[c] * p;
                    }
                    let total: Rational = moved.iter().sum();
                    if total.is_zero() {
                        break;
                    }
                    posterior = moved.into_iter().map(|v| v / &total).collect();
                    node = next;
                }
                NodeKind::Scale { target, .. } => node = *target,
            }
            check.checked += 1;
            if posterior != normalized(&graph.nodes[node].position) {
                check.passed = false;
                if check.failures.len() < 8 {
                    check.failures.push(format!("posterior at node {node} {:?} differs", graph.nodes[node].position));
                }
            }
        }
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn leaf_rule_ties() {
        let (out, blame) = leaf_rule(&crate::lattice(1, 1, 1, 1).to_rational());
        assert_eq!((out, blame), (0, vec![0, 1]));
        let (out, blame) = leaf_rule(&crate::lattice(1, 2, 1, 3).to_rational());
        assert_eq!((out, blame), (1, vec![1]));
    }

    #[test]
    fn branch_probabilities_of_the_first_twobit_split() {
        let p = branch_probabilities(&crate::lattice(3, 3, 3, 3).to_rational(), &crate::lattice(2, 2, 1, 1).to_rational(), 0);
        assert_eq!(p, [ratio(2, 3), ratio(2, 3), ratio(1, 3), ratio(1, 3)]);
    }

    #[test]
    fn leaf_only_protocol_at_uniform() {
        let g = ProtocolGraph::from_steps("leaf", &crate::lattice(1, 1, 1, 1).to_rational(), &[]).unwrap();
        let r = simulate(&g, &SimulationOptions { samples: 200_000, depth_limit: 10, seed: 3 }).unwrap();
        assert!((r.success_rate - 0.25).abs() < 4.0 * r.standard_error, "{r:?}");
    }

    #[test]
    fn simulation_is_deterministic() {
        let g = ProtocolGraph::builtin("twobit").unwrap();
        let opts = SimulationOptions { samples: 70_000, depth_limit: 10, seed: 11 };
        assert_eq!(simulate(&g, &opts).unwrap(), simulate(&g, &opts).unwrap());
    }

    #[test]
    fn analytic_checks_pass_on_builtins() {
        for name in ["twobit", "cyclic"] {
            let g = ProtocolGraph::builtin(name).unwrap();
            assert!(check_branch_probabilities(&g).passed);
            let post = check_posteriors(&g, 200, 40, 5);
            assert!(post.passed && post.checked > 0, "{post:?}");
        }
    }
}
