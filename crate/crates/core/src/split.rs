//! Allowed and relaxed splits.
//!
//! Players are 0-based internally (`0` owns `a, b`; `1` owns `c, d`) and printed
//! 1-based. The `player` of a split is always the *sender*: the player whose two
//! coordinates are divided freely while every other player's coordinates are split
//! proportionally.

use serde::{Deserialize, Serialize};

use crate::position::{Coord, Position};
use crate::scalar::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SplitKind {
    Exact,
    /// Coordinate (`0..4` for `a..d`) that was rounded down to stay on the lattice.
    Relaxed { coordinate: u8 },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Split<S: Coord + std::fmt::Display> {
    pub parent: Position<S>,
    pub left: Position<S>,
    pub right: Position<S>,
    pub player: usize,
    pub kind: SplitKind,
}

/// `(d0, d1)` is a `player`-allowed split of `d`: the parts add up to `d` and the
/// first part is `lambda * d` on every coordinate not owned by `player`, for some
/// `lambda` in `[0, 1]`. Comparisons are exact, so this is meant for integer or
/// rational entries.
pub fn is_allowed_split<S: Coord, const K: usize>(
    d: &Position<S, K>,
    d0: &Position<S, K>,
    d1: &Position<S, K>,
    player: usize,
) -> bool {
    if player >= K || !d0.is_nonnegative() || !d1.is_nonnegative() || d0.add(d1) != *d {
        return false;
    }
    // Proportionality d0 = lambda * d on the non-sender block, checked by cross
    // multiplication against a pivot coordinate where d is nonzero.
    let others = || (0..K).filter(move |&j| j != player).flat_map(|j| [(0usize, j), (1usize, j)]);
    let pivot = others().find(|&(x, j)| !d.entry(x, j).is_zero());
    let Some((px, pj)) = pivot else {
        return others().all(|(x, j)| d0.entry(x, j).is_zero());
    };
    let (num, den) = (d0.entry(px, pj).clone(), d.entry(px, pj).clone());
    others().all(|(x, j)| d0.entry(x, j).clone() * den.clone() == d.entry(x, j).clone() * num.clone())
}

/// One of the four ways to relax an allowed split onto the lattice: coordinate
/// `floored` is rounded down, its partner (same player, other bit) is split
/// freely and fixes the ratio, and the sender is the other player.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RelaxedVariant {
    pub floored: usize,
}

impl RelaxedVariant {
    pub const ALL: [RelaxedVariant; 4] = [
        RelaxedVariant { floored: 3 },
        RelaxedVariant { floored: 2 },
        RelaxedVariant { floored: 1 },
        RelaxedVariant { floored: 0 },
    ];

    pub fn partner(self) -> usize {
        self.floored ^ 1
    }

    pub fn sender(self) -> usize {
        1 - self.floored / 2
    }

    /// The three coordinates chosen freely: the sender's two and the partner.
    pub fn free_coords(self) -> [usize; 3] {
        let s = self.sender();
        [2 * s, 2 * s + 1, self.partner()]
    }

    /// Whether this variant is enumerated for `parent`. With a zero partner the
    /// ratio is undefined: a nonzero floored coordinate is left to the variant
    /// with roles swapped, and an all-zero block is enumerated once (by the
    /// variant flooring the odd coordinate).
    pub fn applies(self, parent: &[u32; 4]) -> bool {
        if parent[self.partner()] > 0 {
            true
        } else if parent[self.floored] > 0 {
            false
        } else {
            self.floored % 2 == 1
        }
    }

    /// `floor(parent[floored] / parent[partner] * partner_part)`.
    pub fn floored_part(self, parent: &[u32; 4], partner_part: u32) -> u32 {
        let den = parent[self.partner()];
        if den == 0 {
            0
        } else {
            parent[self.floored] * partner_part / den
        }
    }

    /// Children for the free choice `parts` (sender bit 0, sender bit 1, partner).
    pub fn children(self, parent: &[u32; 4], parts: [u32; 3]) -> ([u32; 4], [u32; 4]) {
        let mut left = [0u32; 4];
        let mut right = [0u32; 4];
        for (coord, part) in self.free_coords().into_iter().zip(parts) {
            left[coord] = part;
            right[coord] = parent[coord] - part;
        }
        let p = self.partner();
        left[self.floored] = self.floored_part(parent, left[p]);
        right[self.floored] = self.floored_part(parent, right[p]);
        (left, right)
    }
}

/// Every relaxed split of a lattice position, over all applicable variants
/// (ordered pairs, so each unordered split appears twice).
pub fn enumerate_relaxed_splits(parent: &Position<u32>) -> Vec<Split<u32>> {
    let d = parent.abcd();
    let mut out = Vec::new();
    for variant in RelaxedVariant::ALL {
        if !variant.applies(&d) {
            continue;
        }
        let [f0, f1, f2] = variant.free_coords().map(|c| d[c]);
        for x in 0..=f0 {
            for y in 0..=f1 {
                for z in 0..=f2 {
                    let (left, right) = variant.children(&d, [x, y, z]);
                    out.push(Split {
                        parent: parent.clone(),
                        left: Position::from_abcd(left),
                        right: Position::from_abcd(right),
                        player: variant.sender(),
                        kind: SplitKind::Relaxed { coordinate: variant.floored as u8 },
                    });
                }
            }
        }
    }
    out
}

/// Replaces each floored entry by its exact proportional value, giving an allowed
/// split that dominates the relaxed one componentwise.
pub fn lift_relaxed(split: &Split<u32>) -> (Position<Rational>, Position<Rational>) {
    let parent = split.parent.to_rational();
    let mut left = split.left.to_rational().abcd();
    let mut right = split.right.to_rational().abcd();
    if let SplitKind::Relaxed { coordinate } = split.kind {
        let r = coordinate as usize;
        let p = r ^ 1;
        let den = parent.coord(p).clone();
        if den != Rational::from_integer(0.into()) {
            let ratio = parent.coord(r).clone() / den;
            left[r] = ratio.clone() * left[p].clone();
            right[r] = ratio * right[p].clone();
        }
    }
    (Position::from_abcd(left), Position::from_abcd(right))
}

/// Classifies `parent >= left + right` as an exact allowed split or as a relaxed
/// split with sender `player`. Returns `None` when it is neither.
pub fn classify_split(
    parent: &Position<Rational>,
    left: &Position<Rational>,
    right: &Position<Rational>,
    player: usize,
) -> Option<SplitKind> {
    if is_allowed_split(parent, left, right, player) {
        return Some(SplitKind::Exact);
    }
    let to_lattice = |p: &Position<Rational>| -> Option<[u32; 4]> {
        let mut out = [0u32; 4];
        for (slot, v) in out.iter_mut().zip(p.coords()) {
            if !v.is_integer() || *v < Rational::from_integer(0.into()) {
                return None;
            }
            *slot = u32::try_from(v.to_integer()).ok()?;
        }
        Some(out)
    };
    let (d, l, r) = (to_lattice(parent)?, to_lattice(left)?, to_lattice(right)?);
    RelaxedVariant::ALL.into_iter().filter(|v| v.sender() == player).find_map(|v| {
        let free_ok = v.free_coords().into_iter().all(|c| l[c] + r[c] == d[c]);
        let p = v.partner();
        let floored_ok = if d[p] == 0 {
            d[v.floored] == 0 && l[v.floored] == 0 && r[v.floored] == 0
        } else {
            l[v.floored] == v.floored_part(&d, l[p]) && r[v.floored] == v.floored_part(&d, r[p])
        };
        (free_ok && floored_ok).then_some(SplitKind::Relaxed { coordinate: v.floored as u8 })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::position::{lattice, Symmetry};

    #[test]
    fn twobit_first_split_is_allowed() {
        // Player 1 sends; player 2's entries (c, d) are split proportionally.
        let d = lattice(3, 3, 3, 3);
        assert!(is_allowed_split(&d, &lattice(2, 2, 1, 1), &lattice(1, 1, 2, 2), 0));
        // The same parts are also proportional on player 1's block.
        assert!(is_allowed_split(&d, &lattice(2, 2, 1, 1), &lattice(1, 1, 2, 2), 1));
    }

    #[test]
    fn trivial_split_is_allowed() {
        let d = lattice(5, 0, 2, 7);
        for j in 0..2 {
            assert!(is_allowed_split(&d, &d, &Position::zero(), j));
        }
    }

    #[test]
    fn proportionality_is_checked_on_the_non_sender_block() {
        let d = lattice(2, 2, 1, 1);
        let (d0, d1) = (lattice(1, 0, 1, 1), lattice(1, 2, 0, 0));
        // Player 1 sending leaves (c, d) split as 1 * (1, 1) + 0 * (1, 1).
        assert!(is_allowed_split(&d, &d0, &d1, 0));
        // Player 2 sending would need (1, 0) proportional to (2, 2).
        assert!(!is_allowed_split(&d, &d0, &d1, 1));
        // Parts that do not add up are rejected.
        assert!(!is_allowed_split(&d, &d0, &lattice(1, 2, 0, 1), 0));
    }

    #[test]
    fn relaxed_children_examples() {
        let d = [7, 7, 6, 4];
        let v = RelaxedVariant { floored: 3 };
        assert_eq!(v.children(&d, [4, 5, 3]), ([4, 5, 3, 2], [3, 2, 3, 2]));
        let d = [2, 2, 3, 2];
        assert_eq!(v.children(&d, [1, 1, 2]), ([1, 1, 2, 1], [1, 1, 1, 0]));
    }

    #[test]
    fn zero_block_splits_only_the_sender() {
        let parent = lattice(2, 1, 0, 0);
        let splits = enumerate_relaxed_splits(&parent);
        let from_player_one: Vec<_> = splits.iter().filter(|s| s.player == 0).collect();
        assert_eq!(from_player_one.len(), 3 * 2);
        for s in from_player_one {
            assert_eq!((*s.left.coord(2), *s.left.coord(3), *s.right.coord(2), *s.right.coord(3)), (0, 0, 0, 0));
            assert_eq!(s.left.add(&s.right), parent);
        }
    }

    #[test]
    fn lifted_relaxed_splits_are_allowed() {
        for idx in 0..5u32.pow(4) {
            let parent = lattice(idx % 5, idx / 5 % 5, idx / 25 % 5, idx / 125);
            for split in enumerate_relaxed_splits(&parent) {
                assert!(split.left.add(&split.right).le(&parent));
                let (l, r) = lift_relaxed(&split);
                assert!(is_allowed_split(&parent.to_rational(), &l, &r, split.player), "{split:?}");
                let kind = classify_split(&parent.to_rational(), &split.left.to_rational(), &split.right.to_rational(), split.player);
                assert!(kind.is_some(), "{split:?}");
            }
        }
    }

    #[test]
    fn allowed_splits_commute_with_symmetry() {
        let d = lattice(3, 3, 3, 3);
        let (d0, d1) = (lattice(2, 2, 1, 1), lattice(1, 1, 2, 2));
        for sym in Symmetry::ALL {
            let player = sym.apply_pair(0, 0).1;
            assert!(is_allowed_split(&d.apply(sym), &d0.apply(sym), &d1.apply(sym), player));
        }
    }

    #[test]
    fn classify_rejects_non_proportional_children() {
        let parent = lattice(2, 2, 3, 2).to_rational();
        let kind = classify_split(&parent, &lattice(1, 1, 2, 2).to_rational(), &lattice(1, 1, 1, 0).to_rational(), 0);
        assert_eq!(kind, None);
        let kind = classify_split(&parent, &lattice(1, 1, 1, 0).to_rational(), &lattice(1, 1, 2, 2).to_rational(), 1);
        assert_eq!(kind, Some(SplitKind::Exact));
    }
}
