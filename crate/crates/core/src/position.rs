//! Game positions: non-negative vectors indexed by (secret bit, player).
//!
//! For two players a position is written `(a, b, c, d) = (D[0,1], D[1,1], D[0,2], D[1,2])`,
//! i.e. `a, b` belong to player 1 and `c, d` to player 2.

use std::fmt;
use std::str::FromStr;

use num_traits::Num;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::scalar::{parse_rational, Rational, Scalar};

/// Minimal arithmetic needed by value functions; covers lattice integers and every [`Scalar`].
pub trait Coord: Num + Clone + PartialOrd + fmt::Debug {}

impl<T: Num + Clone + PartialOrd + fmt::Debug> Coord for T {}

fn max_ref<'a, S: PartialOrd>(x: &'a S, y: &'a S) -> &'a S {
    if y > x {
        y
    } else {
        x
    }
}

fn min_ref<'a, S: PartialOrd>(x: &'a S, y: &'a S) -> &'a S {
    if y < x {
        y
    } else {
        x
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position<S, const K: usize = 2> {
    // players[j] = [D[0, j], D[1, j]]
    players: [[S; 2]; K],
}

impl<S: Coord, const K: usize> Position<S, K> {
    pub fn from_players(players: [[S; 2]; K]) -> Self {
        Self { players }
    }

    pub fn zero() -> Self {
        Self { players: std::array::from_fn(|_| [S::zero(), S::zero()]) }
    }

    pub fn entry(&self, bit: usize, player: usize) -> &S {
        &self.players[player][bit]
    }

    pub fn players(&self) -> &[[S; 2]; K] {
        &self.players
    }

    /// Entries in flattened order `(x=0,j=1), (x=1,j=1), (x=0,j=2), ...`.
    pub fn coords(&self) -> impl Iterator<Item = &S> + '_ {
        self.players.iter().flat_map(|p| p.iter())
    }

    pub fn map<T: Coord>(&self, mut f: impl FnMut(&S) -> T) -> Position<T, K> {
        Position { players: std::array::from_fn(|j| [f(&self.players[j][0]), f(&self.players[j][1])]) }
    }

    pub fn zip_with(&self, other: &Self, mut f: impl FnMut(&S, &S) -> S) -> Self {
        Position {
            players: std::array::from_fn(|j| {
                [f(&self.players[j][0], &other.players[j][0]), f(&self.players[j][1], &other.players[j][1])]
            }),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coords().all(|v| *v >= S::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coords().all(|v| v.is_zero())
    }

    pub fn norm1(&self) -> S {
        self.coords().fold(S::zero(), |acc, v| acc + v.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |x, y| x.clone() + y.clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |x, y| x.clone() - y.clone())
    }

    pub fn scale(&self, factor: &S) -> Self {
        self.map(|v| v.clone() * factor.clone())
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.coords().zip(other.coords()).all(|(x, y)| x <= y)
    }

    /// Value of stopping immediately: the best output bit against an adversary that
    /// blames the most likely owner, `max_x (sum_j D[x,j] - max_j D[x,j])`.
    pub fn succ_zero(&self) -> S {
        let row = |bit: usize| {
            let sum = self.players.iter().fold(S::zero(), |acc, p| acc + p[bit].clone());
            let max = self.players.iter().map(|p| &p[bit]).fold(&self.players[0][bit], max_ref);
            sum - max.clone()
        };
        let (r0, r1) = (row(0), row(1));
        if r1 > r0 {
            r1
        } else {
            r0
        }
    }
}

impl<S: Coord> Position<S> {
    pub fn new(a: S, b: S, c: S, d: S) -> Self {
        Self { players: [[a, b], [c, d]] }
    }

    pub fn abcd(&self) -> [S; 4] {
        let [[a, b], [c, d]] = self.players.clone();
        [a, b, c, d]
    }

    pub fn from_abcd([a, b, c, d]: [S; 4]) -> Self {
        Self::new(a, b, c, d)
    }

    /// Flattened coordinate `i` in `0..4` (`a, b, c, d`).
    pub fn coord(&self, i: usize) -> &S {
        &self.players[i / 2][i % 2]
    }

    /// Superadditive upper bound `min(a,c) + min(b,d)`.
    pub fn ub_min(&self) -> S {
        let [[a, b], [c, d]] = &self.players;
        min_ref(a, c).clone() + min_ref(b, d).clone()
    }

    pub fn apply(&self, sym: Symmetry) -> Self {
        let mut out = self.clone();
        if sym.flip_secret {
            for p in out.players.iter_mut() {
                p.swap(0, 1);
            }
        }
        if sym.swap_players {
            out.players.swap(0, 1);
        }
        out
    }

    /// Representative of the orbit under secret flip and player swap: the
    /// lexicographically greatest image, so in particular `a >= b, c, d`.
    /// Returns the representative and the group element mapping `self` onto it.
    pub fn canonicalize(&self) -> (Self, Symmetry) {
        let mut best = (self.clone(), Symmetry::IDENTITY);
        for sym in Symmetry::ALL.into_iter().skip(1) {
            let image = self.apply(sym);
            if lex_greater(&image.abcd(), &best.0.abcd()) {
                best = (image, sym);
            }
        }
        best
    }

    pub fn canonical(&self) -> Self {
        self.canonicalize().0
    }

    /// Exact game value where it is known in closed form: a position with a zero entry
    /// is worth its zero-bit value, and `a + b <= min(c, d)` (up to symmetry) is worth `a + b`.
    pub fn closed_form_value(&self) -> Option<S> {
        let [a, b, c, d] = self.abcd();
        let zero = S::zero();
        if b == zero || d == zero {
            return Some(min_ref(&a, &c).clone());
        }
        if a == zero || c == zero {
            return Some(min_ref(&b, &d).clone());
        }
        let ab = a.clone() + b.clone();
        if ab <= *min_ref(&c, &d) {
            return Some(ab);
        }
        let cd = c.clone() + d.clone();
        if cd <= *min_ref(&a, &b) {
            return Some(cd);
        }
        None
    }
}

fn lex_greater<S: PartialOrd>(x: &[S; 4], y: &[S; 4]) -> bool {
    for (u, v) in x.iter().zip(y) {
        if u > v {
            return true;
        }
        if u < v {
            return false;
        }
    }
    false
}

impl<S: Coord + fmt::Display, const K: usize> fmt::Display for Position<S, K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.coords().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl<S: Coord + fmt::Display, const K: usize> fmt::Debug for Position<S, K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

fn split_fields(text: &str) -> Result<[&str; 4], Error> {
    let text = text.trim().trim_start_matches('(').trim_end_matches(')');
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    fields.try_into().map_err(|f: Vec<&str>| Error::Parse(format!("expected 4 comma-separated entries, got {}", f.len())))
}

impl FromStr for Position<u32> {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self, Error> {
        let fields = split_fields(text)?;
        let mut out = [0u32; 4];
        for (slot, field) in out.iter_mut().zip(fields) {
            *slot = field.parse().map_err(|_| Error::Parse(format!("invalid lattice entry `{field}`")))?;
        }
        Ok(Position::from_abcd(out))
    }
}

impl FromStr for Position<Rational> {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self, Error> {
        let fields = split_fields(text)?;
        let mut out: Vec<Rational> = Vec::with_capacity(4);
        for field in fields {
            let v = parse_rational(field).ok_or_else(|| Error::Parse(format!("invalid entry `{field}`")))?;
            if v < Rational::from_integer(0.into()) {
                return Err(Error::Parse(format!("negative entry `{field}`")));
            }
            out.push(v);
        }
        let arr: [Rational; 4] = out.try_into().expect("four entries");
        Ok(Position::from_abcd(arr))
    }
}

impl Position<u32> {
    pub fn to_scalar<S: Scalar>(&self) -> Position<S> {
        self.map(|&v| S::of_u32(v))
    }

    pub fn to_rational(&self) -> Position<Rational> {
        self.to_scalar()
    }
}

impl<S: Coord + fmt::Display> Serialize for Position<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Position<u32> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl<'de> Deserialize<'de> for Position<Rational> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Element of the symmetry group generated by secret flip `(a,b,c,d) -> (b,a,d,c)`
/// and player swap `(a,b,c,d) -> (c,d,a,b)`. The group is abelian and every
/// element is its own inverse.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Debug, Serialize, Deserialize)]
pub struct Symmetry {
    pub flip_secret: bool,
    pub swap_players: bool,
}

impl Symmetry {
    pub const IDENTITY: Symmetry = Symmetry { flip_secret: false, swap_players: false };
    pub const FLIP: Symmetry = Symmetry { flip_secret: true, swap_players: false };
    pub const SWAP: Symmetry = Symmetry { flip_secret: false, swap_players: true };
    pub const BOTH: Symmetry = Symmetry { flip_secret: true, swap_players: true };
    pub const ALL: [Symmetry; 4] = [Self::IDENTITY, Self::FLIP, Self::SWAP, Self::BOTH];

    pub fn compose(self, other: Symmetry) -> Symmetry {
        Symmetry {
            flip_secret: self.flip_secret ^ other.flip_secret,
            swap_players: self.swap_players ^ other.swap_players,
        }
    }

    pub fn inverse(self) -> Symmetry {
        self
    }

    /// Image of the (bit, player) pair under this element.
    pub fn apply_pair(self, bit: usize, player: usize) -> (usize, usize) {
        (bit ^ self.flip_secret as usize, player ^ self.swap_players as usize)
    }

    /// Image of a flattened coordinate index `0..4`.
    pub fn apply_coord(self, coord: usize) -> usize {
        let (bit, player) = self.apply_pair(coord % 2, coord / 2);
        2 * player + bit
    }

    pub fn label(self) -> &'static str {
        match (self.flip_secret, self.swap_players) {
            (false, false) => "id",
            (true, false) => "flip",
            (false, true) => "swap",
            (true, true) => "flip+swap",
        }
    }
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn lattice(a: u32, b: u32, c: u32, d: u32) -> Position<u32> {
    Position::new(a, b, c, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn succ_zero_examples() {
        assert_eq!(lattice(3, 3, 3, 3).succ_zero(), 3);
        assert_eq!(lattice(0, 1, 1, 1).succ_zero(), 1);
        assert_eq!(lattice(7, 7, 6, 4).succ_zero(), 6);
    }

    /// Plays every output bit against every blame and takes the players' best
    /// output under the adversary's best blame.
    fn succ_zero_brute(d: &Position<u32>) -> u32 {
        (0..2)
            .map(|out| {
                (0..2)
                    .map(|blamed| (0..2).filter(|&owner| owner != blamed).map(|owner| *d.entry(out, owner)).sum::<u32>())
                    .min()
                    .unwrap()
            })
            .max()
            .unwrap()
    }

    #[test]
    fn succ_zero_matches_brute_force_on_small_lattice() {
        for idx in 0..6u32.pow(4) {
            let p = lattice(idx % 6, idx / 6 % 6, idx / 36 % 6, idx / 216);
            assert_eq!(p.succ_zero(), succ_zero_brute(&p), "{p}");
        }
    }

    #[test]
    fn ub_min_examples() {
        assert_eq!(lattice(2, 2, 1, 1).ub_min(), 2);
        assert_eq!(lattice(0, 0, 5, 7).ub_min(), 0);
        assert_eq!(lattice(7, 7, 6, 4).ub_min(), 10);
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(lattice(1, 2, 3, 4).canonicalize(), (lattice(4, 3, 2, 1), Symmetry::BOTH));
        assert_eq!(lattice(3, 3, 3, 3).canonicalize(), (lattice(3, 3, 3, 3), Symmetry::IDENTITY));
        let (rep, sym) = lattice(0, 1, 1, 1).canonicalize();
        assert_eq!(rep, lattice(1, 1, 1, 0));
        assert_eq!(lattice(0, 1, 1, 1).apply(Symmetry::FLIP).apply(Symmetry::SWAP), rep);
        assert_eq!(sym, Symmetry::BOTH);
    }

    #[test]
    fn canonical_form_has_largest_first_entry() {
        for idx in 0..5u32.pow(4) {
            let p = lattice(idx % 5, idx / 5 % 5, idx / 25 % 5, idx / 125);
            let (rep, sym) = p.canonicalize();
            let [a, b, c, d] = rep.abcd();
            assert!(a >= b && a >= c && a >= d);
            assert_eq!(p.apply(sym), rep);
            assert_eq!(rep.canonical(), rep);
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(lattice(5, 9, 3, 0).closed_form_value(), Some(3));
        assert_eq!(lattice(1, 2, 4, 4).closed_form_value(), Some(3));
        assert_eq!(lattice(3, 3, 3, 3).closed_form_value(), None);
    }

    #[test]
    fn symmetry_acts_on_pairs_consistently() {
        let p = lattice(1, 2, 3, 4);
        for sym in Symmetry::ALL {
            let image = p.apply(sym);
            for bit in 0..2 {
                for player in 0..2 {
                    let (b2, p2) = sym.apply_pair(bit, player);
                    assert_eq!(image.entry(b2, p2), p.entry(bit, player));
                }
            }
            assert_eq!(sym.compose(sym), Symmetry::IDENTITY);
        }
    }

    #[test]
    fn text_form_round_trips() {
        let p: Position<u32> = "7, 7,6,4".parse().unwrap();
        assert_eq!(p, lattice(7, 7, 6, 4));
        assert_eq!(p.to_string(), "7,7,6,4");
        let r: Position<Rational> = "1/4,0.25,1,0".parse().unwrap();
        assert_eq!(r.coord(1), &ratio(1, 4));
        assert!("1,2,3".parse::<Position<u32>>().is_err());
        assert!("1,-2,3,4".parse::<Position<Rational>>().is_err());
    }

    #[test]
    fn general_k_succ_zero() {
        let p: Position<u32, 3> = Position::from_players([[2, 1], [5, 0], [3, 4]]);
        // bit 0: 2+5+3-5 = 5, bit 1: 1+0+4-4 = 1
        assert_eq!(p.succ_zero(), 5);
        assert_eq!(p.norm1(), 15);
    }
}
