//! Hand-written strategies: the two-bit protocol and the cyclic 449/28 strategy
//! at scale 12.
//!
//! Steps are written in the frame of their parent as `parent > left + right @j`
//! (a split with 1-based sender `j`) or `parent x k` (the value of `parent` is
//! that of `k * parent` divided by `k`). Positions without a step are leaves.

use std::collections::BTreeSet;

use crate::constraint::{Constraint, ConstraintSet, SetMetadata};
use crate::error::{Error, Result};
use crate::position::Position;
use crate::scalar::Rational;

const TWOBIT: &str = "
3,3,3,3 > 2,2,1,1 + 1,1,2,2 @1
2,2,1,1 > 1,1,1,0 + 1,1,0,1 @2
";

const CYCLIC_SHARED: &str = "
12,12,12,12 > 7,7,6,4 + 5,5,6,8 @2
5,5,6,8 > 2,2,0,2 + 3,3,6,6 @2
3,3,6,6 > 3,0,3,3 + 0,3,3,3 @1
7,7,6,4 > 4,5,3,2 + 3,2,3,2 @1
4,5,3,2 x 2
8,10,6,4 > 4,5,2,4 + 4,5,4,0 @2
4,5,2,4 > 1,2,1,2 + 3,3,1,2 @1
3,3,1,2 > 1,1,1,0 + 2,2,0,2 @2
1,2,1,2 x 6
6,12,6,12 > 5,10,3,9 + 1,2,3,3 @2
1,2,3,3 > 1,0,1,1 + 0,2,2,2 @1
5,10,3,9 > 0,6,2,6 + 5,4,1,3 @1
3,2,3,2 x 3
9,6,9,6 > 6,3,6,4 + 3,3,3,2 @1
6,3,6,4 > 3,0,3,2 + 3,3,3,2 @1
3,3,3,2 x 3
9,9,9,6 > 7,7,6,4 + 2,2,3,2 @2
2,2,3,2 > 1,1,1,0 + 1,1,2,2 @2
1,1,2,2 > 1,0,1,1 + 0,1,1,1 @1
";

// (5,4,1,3) is worth c+d = 4: player 2 sends its bits apart while (a,b) keeps
// ratio 5:4, which leaves the lattice; the relaxed form floors a.
const CYCLIC_EXACT_TAIL: &str = "5,4,1,3 > 5/4,1,1,0 + 15/4,3,0,3 @2";
const CYCLIC_RELAXED_TAIL: &str = "5,4,1,3 > 1,1,1,0 + 3,3,0,3 @2";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    /// 0-based sender.
    Split { left: Position<Rational>, right: Position<Rational>, player: usize },
    Scale { factor: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub parent: Position<Rational>,
    pub action: Action,
}

fn parse_steps(text: &str) -> Result<Vec<Step>> {
    let pos = |s: &str| s.trim().parse::<Position<Rational>>();
    let mut out = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let bad = || Error::Parse(format!("bad strategy step {line:?}"));
        if let Some((parent, rest)) = line.split_once('>') {
            let (children, player) = rest.split_once('@').ok_or_else(bad)?;
            let (left, right) = children.split_once('+').ok_or_else(bad)?;
            let player: usize = player.trim().parse().map_err(|_| bad())?;
            if !(1..=2).contains(&player) {
                return Err(bad());
            }
            out.push(Step {
                parent: pos(parent)?,
                action: Action::Split { left: pos(left)?, right: pos(right)?, player: player - 1 },
            });
        } else {
            let (parent, factor) = line.split_once(" x ").ok_or_else(bad)?;
            out.push(Step { parent: pos(parent)?, action: Action::Scale { factor: factor.trim().parse().map_err(|_| bad())? } });
        }
    }
    Ok(out)
}

/// Steps of the two-bit protocol rooted at (3,3,3,3).
pub fn twobit_steps() -> Vec<Step> {
    parse_steps(TWOBIT).expect("built-in steps parse")
}

/// Steps of the cyclic strategy rooted at (12,12,12,12). With `exact`, every
/// split is an allowed split (one has fractional children); otherwise that
/// split is replaced by its relaxed lattice form.
pub fn cyclic_steps(exact: bool) -> Vec<Step> {
    let tail = if exact { CYCLIC_EXACT_TAIL } else { CYCLIC_RELAXED_TAIL };
    let mut steps = parse_steps(CYCLIC_SHARED).expect("built-in steps parse");
    steps.extend(parse_steps(tail).expect("built-in steps parse"));
    steps
}

fn to_lattice(p: &Position<Rational>) -> Result<Position<u32>> {
    let coords = p.abcd();
    let mut out = [0u32; 4];
    for (o, c) in out.iter_mut().zip(coords.iter()) {
        if !c.is_integer() {
            return Err(Error::Parse(format!("position {p} is not on the lattice")));
        }
        *o = u32::try_from(c.to_integer()).map_err(|_| Error::Parse(format!("position {p} is not on the lattice")))?;
    }
    Ok(Position::from_abcd(out))
}

/// Constraint set of lattice steps; every position without a step gets its
/// zero-bit bound.
pub fn constraints_from_steps(root: &Position<u32>, steps: &[Step], source: &str) -> Result<ConstraintSet> {
    let mut constraints = Vec::new();
    let mut grounded = BTreeSet::new();
    let mut mentioned = BTreeSet::new();
    for step in steps {
        let parent = to_lattice(&step.parent)?;
        let (canon, g) = parent.canonicalize();
        match &step.action {
            Action::Split { left, right, player } => {
                let (left, right) = (to_lattice(left)?, to_lattice(right)?);
                let player = g.apply_pair(0, *player).1;
                mentioned.insert(left.canonical());
                mentioned.insert(right.canonical());
                constraints.push(Constraint::split(canon.clone(), &left.apply(g), &right.apply(g), player));
            }
            Action::Scale { factor } => {
                mentioned.insert(canon.scale(factor));
                constraints.push(Constraint::scale(canon.clone(), *factor));
            }
        }
        grounded.insert(canon);
    }
    mentioned.insert(root.canonical());
    for p in mentioned.difference(&grounded) {
        constraints.push(Constraint::zero_bit(p.clone()));
    }
    let mut cs = ConstraintSet::new(
        root.canonical(),
        constraints,
        SetMetadata { source: Some(source.to_string()), ..SetMetadata::default() },
    );
    cs.dedup();
    Ok(cs)
}

/// The two-bit protocol as constraints; its optimum is 4 at (3,3,3,3).
pub fn twobit_constraints() -> ConstraintSet {
    constraints_from_steps(&crate::lattice(3, 3, 3, 3), &twobit_steps(), "twobit").expect("built-in set is on the lattice")
}

/// The cyclic strategy as lattice constraints; its optimum is 449/28 at (12,12,12,12).
pub fn cyclic_constraints() -> ConstraintSet {
    constraints_from_steps(&crate::lattice(12, 12, 12, 12), &cyclic_steps(false), "cyclic449")
        .expect("built-in set is on the lattice")
}
