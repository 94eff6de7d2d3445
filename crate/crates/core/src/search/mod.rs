//! Iterated splitting and scaling passes over the lattice `{0..T}^4`.

mod lattice;
mod persist;
mod table;

pub use lattice::Lattice;
pub use persist::{load_table, save_table, StoredValue, TABLE_MAGIC};
pub use table::{UpdateOp, UpdateRecord, ValueTable, DEFAULT_MEMORY_BUDGET};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::split::RelaxedVariant;

/// When to stop alternating passes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    /// Stop once a whole round improves no value by `epsilon` or more.
    Converge { epsilon: f64 },
    /// Run exactly this many rounds.
    Iterations(u32),
}

/// Order in which a splitting pass visits positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VisitOrder {
    AscendingNorm,
    /// Only useful for testing that the fixpoint does not depend on order.
    /// Provenance replay is not guaranteed in this order.
    DescendingNorm,
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub termination: Termination,
    /// Hard cap on rounds in converge mode.
    pub max_rounds: u32,
    /// Skip candidate splits whose `ub_min` bound cannot beat the current value.
    pub prune: bool,
    /// Experimental: also propagate `s(λD) >= λ s(D)` in scaling passes.
    pub scale_up: bool,
    pub order: VisitOrder,
    pub memory_budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            termination: Termination::Converge { epsilon: 1e-12 },
            max_rounds: 10_000,
            prune: true,
            scale_up: false,
            order: VisitOrder::AscendingNorm,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

impl SearchOptions {
    pub fn converge(epsilon: f64) -> Self {
        Self { termination: Termination::Converge { epsilon }, ..Self::default() }
    }

    pub fn iterations(n: u32) -> Self {
        Self { termination: Termination::Iterations(n), ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PassKind {
    Split,
    Scale,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PassStats {
    pub round: u32,
    pub step: u32,
    pub kind: PassKind,
    pub improved: usize,
    pub max_improvement: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SearchReport {
    pub converged: bool,
    pub rounds: u32,
    pub passes: Vec<PassStats>,
}

/// Alias for the float table used by the fast search.
pub type FloatTable = ValueTable<f64>;

/// Runs one splitting pass (a new odd step) and returns its statistics.
pub fn splitting_pass<V: Scalar>(table: &mut ValueTable<V>, prune: bool, order: VisitOrder) -> PassStats {
    table.step += 1;
    let step = table.step;
    let mut improved = 0;
    let mut max_improvement = 0.0f64;
    let max_norm = table.lattice.max_norm();
    let norms: Box<dyn Iterator<Item = usize>> = match order {
        VisitOrder::AscendingNorm => Box::new(1..=max_norm),
        VisitOrder::DescendingNorm => Box::new((1..=max_norm).rev()),
    };
    for norm in norms {
        for slot in table.lattice.level(norm) {
            if let Some((value, op)) = best_split(table, slot, prune) {
                let gain = (value.clone() - table.values[slot].clone()).approx();
                max_improvement = max_improvement.max(gain);
                improved += 1;
                table.values[slot] = value.clone();
                table.history[slot].push(UpdateRecord { step, value, op });
            }
        }
    }
    PassStats { round: step.div_ceil(2), step, kind: PassKind::Split, improved, max_improvement }
}

/// Best strict improvement of `slot` over all relaxed splits.
fn best_split<V: Scalar>(table: &ValueTable<V>, slot: usize, prune: bool) -> Option<(V, UpdateOp)> {
    let lat = &table.lattice;
    let d = lat.rep(slot).map(u32::from);
    let side = lat.side();
    let mut best = table.values[slot].clone();
    let mut best_op = None;
    // ub_min of any split is at most ub_min(D); nothing to gain when already there
    if prune && V::of_u32(d[0].min(d[2]) + d[1].min(d[3])) <= best {
        return None;
    }
    let mut floors: Vec<(u32, u32)> = Vec::new();
    for variant in RelaxedVariant::ALL {
        if !variant.applies(&d) {
            continue;
        }
        let [s0, s1, p] = variant.free_coords();
        let r = variant.floored;
        let (big_x, big_y, big_z) = (d[s0], d[s1], d[p]);
        floors.clear();
        floors.extend((0..=big_z).map(|z| (variant.floored_part(&d, z), variant.floored_part(&d, big_z - z))));
        let mut left = [0u32; 4];
        let mut right = [0u32; 4];
        for x in 0..=big_x {
            if 2 * x > big_x {
                break;
            }
            let x_tie = 2 * x == big_x;
            left[s0] = x;
            right[s0] = big_x - x;
            for y in 0..=big_y {
                if x_tie && 2 * y > big_y {
                    break;
                }
                let y_tie = x_tie && 2 * y == big_y;
                left[s1] = y;
                right[s1] = big_y - y;
                for (z, &(fl, fr)) in floors.iter().enumerate() {
                    let z = z as u32;
                    if y_tie && 2 * z > big_z {
                        break;
                    }
                    if x == 0 && y == 0 && z == 0 {
                        continue;
                    }
                    left[p] = z;
                    right[p] = big_z - z;
                    left[r] = fl;
                    right[r] = fr;
                    if prune {
                        let ub = left[0].min(left[2]) + left[1].min(left[3]) + right[0].min(right[2]) + right[1].min(right[3]);
                        if V::of_u32(ub) <= best {
                            continue;
                        }
                    }
                    let li = raw_index(side, &left);
                    let ri = raw_index(side, &right);
                    let v = table.values[lat.slot_of_raw_index(li)].clone() + table.values[lat.slot_of_raw_index(ri)].clone();
                    if v > best {
                        best = v;
                        best_op = Some(UpdateOp::Split {
                            left: left.map(|c| c as u8),
                            right: right.map(|c| c as u8),
                            player: variant.sender() as u8,
                            floored: Some(r as u8),
                        });
                    }
                }
            }
        }
    }
    best_op.filter(|_| best.improves_on(&table.values[slot])).map(|op| (best, op))
}

#[inline]
fn raw_index(side: usize, p: &[u32; 4]) -> usize {
    ((p[0] as usize * side + p[1] as usize) * side + p[2] as usize) * side + p[3] as usize
}

/// Runs one scaling pass (a new even step). Candidates are read from the values
/// as they stood after the previous step.
pub fn scaling_pass<V: Scalar>(table: &mut ValueTable<V>, scale_up: bool) -> PassStats {
    table.step += 1;
    let step = table.step;
    let snapshot = table.values.clone();
    let t = table.resolution();
    let mut improved = 0;
    let mut max_improvement = 0.0f64;
    for slot in 1..table.len() {
        let d = table.lattice.rep(slot).map(u32::from);
        let mut best = table.values[slot].clone();
        let mut best_op = None;
        let top = d.iter().copied().max().unwrap_or(0);
        let mut factor = 2;
        while top > 0 && factor * top <= t {
            let target = table.lattice.slot_of_raw(&d.map(|v| (v * factor) as u8));
            let cand = snapshot[target].clone() / V::of_u32(factor);
            if cand > best {
                best = cand;
                best_op = Some(UpdateOp::Scale { factor: factor as u8 });
            }
            factor += 1;
        }
        if scale_up {
            let g = d.iter().fold(0u32, |g, &v| gcd(g, v));
            for factor in 2..=g {
                if g % factor != 0 {
                    continue;
                }
                let base = table.lattice.slot_of_raw(&d.map(|v| (v / factor) as u8));
                let cand = snapshot[base].clone() * V::of_u32(factor);
                if cand > best {
                    best = cand;
                    best_op = Some(UpdateOp::ScaleUp { factor: factor as u8 });
                }
            }
        }
        if let Some(op) = best_op.filter(|_| best.improves_on(&table.values[slot])) {
            max_improvement = max_improvement.max((best.clone() - table.values[slot].clone()).approx());
            improved += 1;
            table.values[slot] = best.clone();
            table.history[slot].push(UpdateRecord { step, value: best, op });
        }
    }
    PassStats { round: step / 2, step, kind: PassKind::Scale, improved, max_improvement }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Initializes a table and alternates passes until the termination rule fires.
/// Non-convergence within `max_rounds` is reported, not an error.
pub fn run_search<V: Scalar>(
    resolution: u32,
    options: &SearchOptions,
    progress: &mut dyn FnMut(&PassStats),
) -> Result<(ValueTable<V>, SearchReport)> {
    let mut table = ValueTable::init_with_budget(resolution, options.memory_budget)?;
    let report = continue_search(&mut table, options, progress);
    Ok((table, report))
}

/// Runs further rounds on an existing table.
pub fn continue_search<V: Scalar>(
    table: &mut ValueTable<V>,
    options: &SearchOptions,
    progress: &mut dyn FnMut(&PassStats),
) -> SearchReport {
    let (limit, epsilon) = match options.termination {
        Termination::Converge { epsilon } => (options.max_rounds, Some(epsilon)),
        Termination::Iterations(n) => (n, None),
    };
    let mut passes = Vec::new();
    let mut converged = false;
    let mut rounds = 0;
    while rounds < limit {
        rounds += 1;
        let split = splitting_pass(table, options.prune, options.order);
        progress(&split);
        let scale = scaling_pass(table, options.scale_up);
        progress(&scale);
        let gain = split.max_improvement.max(scale.max_improvement);
        let quiet = split.improved == 0 && scale.improved == 0;
        passes.push(split);
        passes.push(scale);
        if let Some(eps) = epsilon {
            if quiet || gain < eps {
                converged = true;
                break;
            }
        }
    }
    if epsilon.is_none() {
        converged = passes.iter().rev().take(2).all(|p| p.improved == 0);
    }
    SearchReport { converged, rounds, passes }
}
