//! Index of the canonical positions of `{0..T}^4`.

use crate::error::{Error, Result};
use crate::position::Position;

/// Every raw lattice point maps to the slot of its canonical representative;
/// slots are ordered by ascending L1 norm (ties lexicographically).
#[derive(Clone, Debug)]
pub struct Lattice {
    resolution: u32,
    side: usize,
    slot_of: Vec<u32>,
    reps: Vec<[u8; 4]>,
    // level_start[n]..level_start[n + 1] are the slots of norm n
    level_start: Vec<usize>,
}

pub(crate) const MAX_RESOLUTION: u32 = 255;

impl Lattice {
    /// Rough memory need of a table with `bytes_per_slot` bytes per canonical position.
    pub fn estimate_bytes(resolution: u32, bytes_per_slot: u64) -> u64 {
        let raw = (resolution as u64 + 1).pow(4);
        raw * 4 + (raw / 4 + 1) * (bytes_per_slot + 4 + 24)
    }

    pub fn new(resolution: u32) -> Result<Self> {
        if resolution > MAX_RESOLUTION {
            return Err(Error::ResourceLimit {
                resolution,
                required_bytes: Self::estimate_bytes(resolution, 8),
                budget_bytes: Self::estimate_bytes(MAX_RESOLUTION, 8),
            });
        }
        let side = resolution as usize + 1;
        let total = side.pow(4);
        let mut reps = Vec::new();
        for idx in 0..total {
            let p = Self::decode_raw(side, idx);
            if canonical_abcd(p) == p {
                reps.push(p);
            }
        }
        reps.sort_by_key(|p| (p.iter().map(|&v| v as u32).sum::<u32>(), *p));
        let mut slot_of = vec![u32::MAX; total];
        for (slot, p) in reps.iter().enumerate() {
            slot_of[Self::encode_raw(side, p)] = slot as u32;
        }
        for idx in 0..total {
            if slot_of[idx] == u32::MAX {
                let rep = canonical_abcd(Self::decode_raw(side, idx));
                slot_of[idx] = slot_of[Self::encode_raw(side, &rep)];
            }
        }
        let max_norm = 4 * resolution as usize;
        let mut level_start = vec![0usize; max_norm + 2];
        for p in &reps {
            let n: usize = p.iter().map(|&v| v as usize).sum();
            level_start[n + 1] += 1;
        }
        for n in 1..level_start.len() {
            level_start[n] += level_start[n - 1];
        }
        Ok(Self { resolution, side, slot_of, reps, level_start })
    }

    fn decode_raw(side: usize, mut idx: usize) -> [u8; 4] {
        let mut out = [0u8; 4];
        for slot in out.iter_mut().rev() {
            *slot = (idx % side) as u8;
            idx /= side;
        }
        out
    }

    #[inline]
    fn encode_raw(side: usize, p: &[u8; 4]) -> usize {
        ((p[0] as usize * side + p[1] as usize) * side + p[2] as usize) * side + p[3] as usize
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub(crate) fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub(crate) fn slot_of_raw_index(&self, idx: usize) -> usize {
        self.slot_of[idx] as usize
    }

    #[inline]
    pub(crate) fn slot_of_raw(&self, p: &[u8; 4]) -> usize {
        self.slot_of[Self::encode_raw(self.side, p)] as usize
    }

    pub fn contains(&self, p: &Position<u32>) -> bool {
        p.coords().all(|&v| v <= self.resolution)
    }

    /// Slot of any lattice position (canonicalized on the way).
    pub fn slot(&self, p: &Position<u32>) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        Some(self.slot_of_raw(&p.abcd().map(|v| v as u8)))
    }

    pub fn rep(&self, slot: usize) -> [u8; 4] {
        self.reps[slot]
    }

    pub fn position(&self, slot: usize) -> Position<u32> {
        Position::from_abcd(self.reps[slot].map(u32::from))
    }

    /// Slots whose representative has L1 norm `norm`.
    pub fn level(&self, norm: usize) -> std::ops::Range<usize> {
        if norm + 1 >= self.level_start.len() {
            return self.reps.len()..self.reps.len();
        }
        self.level_start[norm]..self.level_start[norm + 1]
    }

    pub fn max_norm(&self) -> usize {
        4 * self.resolution as usize
    }
}

/// Lexicographically greatest image under the four symmetries.
#[inline]
pub(crate) fn canonical_abcd(p: [u8; 4]) -> [u8; 4] {
    let [a, b, c, d] = p;
    let mut best = p;
    for image in [[b, a, d, c], [c, d, a, b], [d, c, b, a]] {
        if image > best {
            best = image;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::position::lattice;

    // Burnside: each non-identity symmetry fixes n^2 of the n^4 points
    fn orbit_count(resolution: u32) -> usize {
        let n = resolution as usize + 1;
        (n.pow(4) + 3 * n * n) / 4
    }

    #[test]
    fn canonical_count_matches_orbit_count() {
        for t in 0..6 {
            assert_eq!(Lattice::new(t).unwrap().len(), orbit_count(t), "T={t}");
        }
        let reps: std::collections::BTreeSet<_> =
            (0..16u32).map(|i| lattice(i & 1, i >> 1 & 1, i >> 2 & 1, i >> 3 & 1).canonical().abcd()).collect();
        assert_eq!(reps.len(), 7);
    }

    #[test]
    fn slots_agree_with_position_canonicalization() {
        let lat = Lattice::new(4).unwrap();
        for idx in 0..5u32.pow(4) {
            let p = lattice(idx % 5, idx / 5 % 5, idx / 25 % 5, idx / 125);
            let slot = lat.slot(&p).unwrap();
            assert_eq!(lat.position(slot), p.canonical());
        }
        assert_eq!(lat.slot(&lattice(5, 0, 0, 0)), None);
    }

    #[test]
    fn levels_partition_slots_by_norm() {
        let lat = Lattice::new(3).unwrap();
        let mut seen = 0;
        for n in 0..=lat.max_norm() {
            for slot in lat.level(n) {
                assert_eq!(lat.position(slot).norm1() as usize, n);
                seen += 1;
            }
        }
        assert_eq!(seen, lat.len());
    }
}
