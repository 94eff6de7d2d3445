//! Split, scale and zero-bit relations between game values, and sets of them.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::position::{Position, Symmetry};
use crate::scalar::{parse_rational, rational_string, Rational};
use crate::split::{classify_split, SplitKind};

/// One relation over canonical lattice positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    /// `v(parent) >= v(left) + v(right)`; `player` is the 0-based sender in the
    /// parent's frame. Children are stored canonical, so validating the split
    /// means finding orientations of the children that make it allowed.
    Split { parent: Position<u32>, left: Position<u32>, right: Position<u32>, player: usize },
    /// `factor * v(base) = v(scaled)` with `scaled = factor * base`.
    Scale { base: Position<u32>, factor: u32, scaled: Position<u32> },
    /// `v(position) >= constant` with `constant = succ_zero(position)`.
    ZeroBit { position: Position<u32>, constant: Rational },
}

impl Constraint {
    /// Split with children canonicalized and ordered.
    pub fn split(parent: Position<u32>, left: &Position<u32>, right: &Position<u32>, player: usize) -> Self {
        let (mut left, mut right) = (left.canonical(), right.canonical());
        if left.abcd() < right.abcd() {
            std::mem::swap(&mut left, &mut right);
        }
        Constraint::Split { parent, left, right, player }
    }

    pub fn scale(base: Position<u32>, factor: u32) -> Self {
        let scaled = base.scale(&factor);
        Constraint::Scale { base, factor, scaled }
    }

    pub fn zero_bit(position: Position<u32>) -> Self {
        let constant = Rational::from_integer(position.succ_zero().into());
        Constraint::ZeroBit { position, constant }
    }

    /// Positions mentioned by the constraint.
    pub fn positions(&self) -> Vec<&Position<u32>> {
        match self {
            Constraint::Split { parent, left, right, .. } => vec![parent, left, right],
            Constraint::Scale { base, scaled, .. } => vec![base, scaled],
            Constraint::ZeroBit { position, .. } => vec![position],
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Constraint::Split { .. } => "split",
            Constraint::Scale { .. } => "scale",
            Constraint::ZeroBit { .. } => "zerobit",
        }
    }

    /// Checks that the relation holds for the true game values: splits must be
    /// allowed or relaxed for some orientation of the canonical children, scales
    /// exact integer multiples, zero-bit constants equal to `succ_zero`.
    pub fn validate(&self) -> std::result::Result<(), String> {
        for p in self.positions() {
            if p.canonical() != *p {
                return Err(format!("position {p} is not canonical"));
            }
        }
        match self {
            Constraint::Split { parent, left, right, player } => {
                if *player > 1 {
                    return Err(format!("sender {} out of range", player + 1));
                }
                split_orientation(parent, left, right, *player)
                    .map(|_| ())
                    .ok_or_else(|| format!("{parent} -> {left} + {right} is not a valid split for sender {}", player + 1))
            }
            Constraint::Scale { base, factor, scaled } => {
                if *factor < 2 {
                    return Err(format!("scale factor {factor} below 2"));
                }
                if base.scale(factor) != *scaled {
                    return Err(format!("{scaled} is not {factor} * {base}"));
                }
                Ok(())
            }
            Constraint::ZeroBit { position, constant } => {
                let expected = Rational::from_integer(position.succ_zero().into());
                if *constant != expected {
                    return Err(format!("constant {} differs from succ_zero({position}) = {}", rational_string(constant), expected));
                }
                Ok(())
            }
        }
    }
}

/// Finds symmetries placing the canonical children so that `parent >= left + right`
/// is an allowed or relaxed split with the given sender.
pub fn split_orientation(
    parent: &Position<u32>,
    left: &Position<u32>,
    right: &Position<u32>,
    player: usize,
) -> Option<(Symmetry, Symmetry, SplitKind)> {
    let parent_q = parent.to_rational();
    for gl in Symmetry::ALL {
        let l = left.apply(gl);
        for gr in Symmetry::ALL {
            let r = right.apply(gr);
            if !l.add(&r).le(parent) {
                continue;
            }
            if let Some(kind) = classify_split(&parent_q, &l.to_rational(), &r.to_rational(), player) {
                return Some((gl, gr, kind));
            }
        }
    }
    None
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Split { parent, left, right, player } => {
                write!(f, "s({parent}) >= s({left}) + s({right}) [sender {}]", player + 1)
            }
            Constraint::Scale { base, factor, scaled } => write!(f, "{factor} s({base}) = s({scaled})"),
            Constraint::ZeroBit { position, constant } => write!(f, "s({position}) >= {}", rational_string(constant)),
        }
    }
}

/// JSON record of a constraint; senders are 1-based.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Split { parent: String, left: String, right: String, player: usize },
    Scale { base: String, factor: u32, scaled: String },
    Zerobit { position: String, constant: String },
}

impl Serialize for Constraint {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rec = match self {
            Constraint::Split { parent, left, right, player } => Record::Split {
                parent: parent.to_string(),
                left: left.to_string(),
                right: right.to_string(),
                player: player + 1,
            },
            Constraint::Scale { base, factor, scaled } => {
                Record::Scale { base: base.to_string(), factor: *factor, scaled: scaled.to_string() }
            }
            Constraint::ZeroBit { position, constant } => {
                Record::Zerobit { position: position.to_string(), constant: rational_string(constant) }
            }
        };
        rec.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Constraint {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let pos = |s: &str| s.parse::<Position<u32>>().map_err(D::Error::custom);
        Ok(match Record::deserialize(deserializer)? {
            Record::Split { parent, left, right, player } => {
                if player == 0 {
                    return Err(D::Error::custom("players are numbered from 1"));
                }
                Constraint::Split { parent: pos(&parent)?, left: pos(&left)?, right: pos(&right)?, player: player - 1 }
            }
            Record::Scale { base, factor, scaled } => Constraint::Scale { base: pos(&base)?, factor, scaled: pos(&scaled)? },
            Record::Zerobit { position, constant } => Constraint::ZeroBit {
                position: pos(&position)?,
                constant: parse_rational(&constant).ok_or_else(|| D::Error::custom(format!("bad constant {constant:?}")))?,
            },
        })
    }
}

/// Where a constraint set came from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetMetadata {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub resolution: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub step: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub root: Position<u32>,
    #[serde(default)]
    pub metadata: SetMetadata,
    pub constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(root: Position<u32>, constraints: Vec<Constraint>, metadata: SetMetadata) -> Self {
        Self { root, metadata, constraints }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Drops structural duplicates, keeping first occurrences.
    pub fn dedup(&mut self) {
        let mut seen = HashSet::new();
        self.constraints.retain(|c| seen.insert(c.clone()));
    }

    /// Distinct positions, sorted lexicographically.
    pub fn positions(&self) -> BTreeSet<Position<u32>> {
        let mut out: BTreeSet<_> = self.constraints.iter().flat_map(|c| c.positions()).cloned().collect();
        out.insert(self.root.clone());
        out
    }

    /// Positions whose value is pinned from below: zero-bit positions and split
    /// parents, closed under scale equalities in either direction.
    pub fn grounded(&self) -> BTreeSet<Position<u32>> {
        let mut grounded: BTreeSet<Position<u32>> = self
            .constraints
            .iter()
            .filter_map(|c| match c {
                Constraint::Split { parent, .. } => Some(parent.clone()),
                Constraint::ZeroBit { position, .. } => Some(position.clone()),
                Constraint::Scale { .. } => None,
            })
            .collect();
        loop {
            let mut changed = false;
            for c in &self.constraints {
                if let Constraint::Scale { base, scaled, .. } = c {
                    let (b, s) = (grounded.contains(base), grounded.contains(scaled));
                    if b != s {
                        grounded.insert(if b { scaled.clone() } else { base.clone() });
                        changed = true;
                    }
                }
            }
            if !changed {
                return grounded;
            }
        }
    }

    /// First referenced position (root included) that nothing grounds.
    pub fn ungrounded(&self) -> Option<Position<u32>> {
        let grounded = self.grounded();
        self.positions().into_iter().find(|p| !grounded.contains(p))
    }

    pub fn check_closed(&self) -> Result<()> {
        match self.ungrounded() {
            Some(p) => Err(Error::Unclosed(format!("position {p} is not grounded by any constraint"))),
            None => Ok(()),
        }
    }

    /// Validates every constraint, returning the first failure.
    pub fn validate(&self) -> Result<()> {
        for (index, c) in self.constraints.iter().enumerate() {
            c.validate().map_err(|reason| Error::InvalidConstraint { index, reason })?;
        }
        Ok(())
    }

    /// Keeps only constraints reachable from the root through the relations.
    pub fn reachable_from_root(&self) -> Self {
        let mut by_position: BTreeMap<&Position<u32>, Vec<usize>> = BTreeMap::new();
        for (i, c) in self.constraints.iter().enumerate() {
            let owner = match c {
                Constraint::Split { parent, .. } => vec![parent],
                Constraint::ZeroBit { position, .. } => vec![position],
                Constraint::Scale { base, scaled, .. } => vec![base, scaled],
            };
            for p in owner {
                by_position.entry(p).or_default().push(i);
            }
        }
        let mut keep = vec![false; self.constraints.len()];
        let mut seen = BTreeSet::new();
        let mut stack = vec![&self.root];
        while let Some(p) = stack.pop() {
            if !seen.insert(p) {
                continue;
            }
            for &i in by_position.get(p).map(Vec::as_slice).unwrap_or(&[]) {
                keep[i] = true;
                for q in self.constraints[i].positions() {
                    stack.push(q);
                }
            }
        }
        let constraints = self.constraints.iter().zip(&keep).filter(|(_, &k)| k).map(|(c, _)| c.clone()).collect();
        Self { root: self.root.clone(), metadata: self.metadata.clone(), constraints }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::position::lattice;

    #[test]
    fn split_validation_tries_child_orientations() {
        // 2211 -> 1110 + 1101 stored with both children canonical
        let c = Constraint::split(lattice(2, 2, 1, 1), &lattice(1, 1, 1, 0), &lattice(1, 1, 0, 1), 1);
        assert_eq!(c.validate(), Ok(()));
        let wrong_sender = Constraint::split(lattice(2, 2, 1, 1), &lattice(1, 1, 1, 0), &lattice(1, 1, 0, 1), 0);
        assert!(wrong_sender.validate().is_err());
    }

    #[test]
    fn corrupted_split_is_rejected() {
        let c = Constraint::split(lattice(3, 3, 3, 3), &lattice(2, 2, 1, 1), &lattice(2, 1, 1, 1), 0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn scale_and_zero_bit_validation() {
        assert!(Constraint::scale(lattice(2, 1, 1, 1), 3).validate().is_ok());
        let bad = Constraint::Scale { base: lattice(2, 1, 1, 1), factor: 2, scaled: lattice(4, 2, 2, 3) };
        assert!(bad.validate().is_err());
        assert!(Constraint::zero_bit(lattice(1, 1, 1, 0)).validate().is_ok());
        let bad = Constraint::ZeroBit { position: lattice(1, 1, 1, 0), constant: Rational::from_integer(2.into()) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_round_trip_uses_one_based_senders() {
        let set = ConstraintSet::new(
            lattice(2, 2, 1, 1),
            vec![
                Constraint::split(lattice(2, 2, 1, 1), &lattice(1, 1, 1, 0), &lattice(1, 1, 0, 1), 1),
                Constraint::zero_bit(lattice(1, 1, 1, 0)),
            ],
            SetMetadata::default(),
        );
        let text = set.to_json().unwrap();
        assert!(text.contains("\"player\": 2"));
        assert!(text.contains("\"constant\": \"1\""));
        assert_eq!(ConstraintSet::from_json(&text).unwrap(), set);
    }

    #[test]
    fn closure_follows_scale_equalities() {
        let set = ConstraintSet::new(
            lattice(2, 2, 2, 2),
            vec![Constraint::scale(lattice(1, 1, 1, 1), 2), Constraint::zero_bit(lattice(1, 1, 1, 1))],
            SetMetadata::default(),
        );
        assert!(set.check_closed().is_ok());
        let open = ConstraintSet::new(
            lattice(2, 2, 2, 2),
            vec![Constraint::scale(lattice(1, 1, 1, 1), 2)],
            SetMetadata::default(),
        );
        assert!(matches!(open.check_closed(), Err(Error::Unclosed(_))));
    }
}
