//! Pulls the relations supporting a table value out of the search provenance,
//! and thins them once the linear program has been solved.

use std::collections::{BTreeMap, HashSet};

use crate::constraint::{Constraint, ConstraintSet, SetMetadata};
use crate::error::{Error, Result};
use crate::lp::{build_lp, solve_exact, LpSolution};
use crate::position::Position;
use crate::scalar::{Rational, Scalar};
use crate::search::{StoredValue, UpdateOp, ValueTable};

/// The relations behind `s(root)` as it stood after step `step`.
///
/// Follows the recorded updates: a split at step `L` pulls in its children at
/// `L`, a scaling at step `L` pulls in its operand at `L - 1`, and a position
/// never updated by then contributes its zero-bit bound. Visits are memoized
/// on (position, last update step).
pub fn extract<V: Scalar + StoredValue>(table: &ValueTable<V>, root: &Position<u32>, step: u32) -> Result<ConstraintSet> {
    let lat = table.lattice();
    let root_slot = lat
        .slot(root)
        .ok_or_else(|| Error::MissingProvenance(format!("root {root} lies outside the table")))?;
    let mut seen: HashSet<(usize, u32)> = HashSet::new();
    let mut emitted: HashSet<Constraint> = HashSet::new();
    let mut constraints = Vec::new();
    let mut stack = vec![(root_slot, step)];
    while let Some((slot, i)) = stack.pop() {
        let l = table.last_update(slot, i);
        if !seen.insert((slot, l)) {
            continue;
        }
        let parent = lat.position(slot);
        let constraint = match table.record_until(slot, l) {
            None => Constraint::zero_bit(parent),
            Some(rec) => match rec.op {
                UpdateOp::Split { left, right, player, .. } => {
                    let (left, right) = (to_position(left), to_position(right));
                    for child in [&left, &right] {
                        let s = lat.slot(child).ok_or_else(|| missing(&parent, l))?;
                        stack.push((s, l));
                    }
                    Constraint::split(parent, &left, &right, player as usize)
                }
                UpdateOp::Scale { factor } => {
                    let c = Constraint::scale(parent, factor as u32);
                    if let Constraint::Scale { scaled, .. } = &c {
                        stack.push((lat.slot(scaled).ok_or_else(|| missing(scaled, l))?, l - 1));
                    }
                    c
                }
                UpdateOp::ScaleUp { factor } => {
                    let base = Position::from_abcd(parent.abcd().map(|v| v / factor as u32));
                    stack.push((lat.slot(&base).ok_or_else(|| missing(&base, l))?, l - 1));
                    Constraint::scale(base, factor as u32)
                }
            },
        };
        if emitted.insert(constraint.clone()) {
            constraints.push(constraint);
        }
    }
    let metadata = SetMetadata {
        resolution: Some(table.resolution()),
        step: Some(step),
        mode: Some(V::MODE.to_string()),
        source: Some("search".into()),
    };
    Ok(ConstraintSet::new(root.canonical(), constraints, metadata))
}

fn to_position(p: [u8; 4]) -> Position<u32> {
    Position::from_abcd(p.map(u32::from))
}

fn missing(p: &Position<u32>, step: u32) -> Error {
    Error::MissingProvenance(format!("record of {p} at step {step} points outside the table"))
}

/// Slack of each constraint under `values` (zero for scale equalities).
/// Fails on the first violated constraint.
pub fn slacks(cs: &ConstraintSet, values: &BTreeMap<Position<u32>, Rational>) -> Result<Vec<Rational>> {
    let get = |p: &Position<u32>| {
        values.get(p).cloned().ok_or_else(|| Error::Infeasible { row: 0, reason: format!("no value for {p}") })
    };
    let zero = Rational::from_integer(0.into());
    cs.constraints
        .iter()
        .enumerate()
        .map(|(row, c)| {
            let slack = match c {
                Constraint::Split { parent, left, right, .. } => get(parent)? - get(left)? - get(right)?,
                Constraint::ZeroBit { position, constant } => get(position)? - constant,
                Constraint::Scale { base, factor, scaled } => {
                    let diff = get(base)? * Rational::from_integer((*factor).into()) - get(scaled)?;
                    if diff != zero {
                        return Err(Error::Infeasible { row, reason: format!("scale equality off by {diff}") });
                    }
                    diff
                }
            };
            if slack < zero {
                return Err(Error::Infeasible { row, reason: format!("{c} violated by {}", -slack) });
            }
            Ok(slack)
        })
        .collect()
}

/// Drops slack split and zero-bit constraints, duplicates, and anything not
/// reachable from the root. A slack constraint is kept when removing it would
/// leave its position ungrounded, unless a zero-bit bound that the solution
/// satisfies can take its place. The result is re-solved; if the optimum moved,
/// the deduplicated input is returned instead.
pub fn sparsify(cs: &ConstraintSet, solution: &LpSolution) -> Result<ConstraintSet> {
    let mut base = cs.clone();
    base.dedup();
    let values = solution.values();
    let slack = slacks(&base, &values)?;
    let zero = Rational::from_integer(0.into());
    let mut kept: Vec<Constraint> = base
        .constraints
        .iter()
        .zip(&slack)
        .filter(|(c, s)| matches!(c, Constraint::Scale { .. }) || **s == zero)
        .map(|(c, _)| c.clone())
        .collect();
    let mut candidate = ConstraintSet::new(base.root.clone(), kept.clone(), base.metadata.clone());
    while let Some(p) = candidate.ungrounded() {
        let replacement = Constraint::zero_bit(p.clone());
        let fits = values.get(&p).is_some_and(|v| {
            if let Constraint::ZeroBit { constant, .. } = &replacement {
                v >= constant
            } else {
                false
            }
        });
        if fits {
            kept.push(replacement);
        } else {
            // fall back to the slack constraints that grounded p
            let restore: Vec<Constraint> = base
                .constraints
                .iter()
                .filter(|c| match c {
                    Constraint::Split { parent, .. } => *parent == p,
                    Constraint::ZeroBit { position, .. } => *position == p,
                    Constraint::Scale { .. } => false,
                })
                .cloned()
                .collect();
            if restore.is_empty() {
                return Ok(base);
            }
            kept.extend(restore);
        }
        candidate = ConstraintSet::new(base.root.clone(), kept.clone(), base.metadata.clone());
    }
    candidate.dedup();
    let candidate = candidate.reachable_from_root();
    if candidate.check_closed().is_err() {
        return Ok(base);
    }
    let resolved = solve_exact(&build_lp(&candidate)?)?;
    if resolved.objective != solution.objective {
        return Ok(base);
    }
    Ok(candidate)
}
