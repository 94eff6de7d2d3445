//! Value table with per-position update history.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::position::Position;
use crate::scalar::Scalar;
use crate::search::lattice::Lattice;
use crate::split::{Split, SplitKind};

/// Default memory budget for a table (bytes).
pub const DEFAULT_MEMORY_BUDGET: u64 = 3 << 30;

/// The operation behind one improvement, expressed in the frame of the
/// (canonical) position it improved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpdateOp {
    /// `s(D) <- s(left) + s(right)`. `player` is the sender (0-based);
    /// `floored` is the rounded-down coordinate of a relaxed split.
    Split { left: [u8; 4], right: [u8; 4], player: u8, floored: Option<u8> },
    /// `s(D) <- s(factor * D) / factor`.
    Scale { factor: u8 },
    /// `s(D) <- factor * s(D / factor)` (only with upward scaling enabled).
    ScaleUp { factor: u8 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpdateRecord<V> {
    /// Step at which the value was set: splitting steps are odd, scaling steps even.
    pub step: u32,
    pub value: V,
    pub op: UpdateOp,
}

impl UpdateOp {
    /// The split as a `Split` over lattice positions, if this is a split.
    pub fn as_split(&self, parent: &Position<u32>) -> Option<Split<u32>> {
        match *self {
            UpdateOp::Split { left, right, player, floored } => {
                let left = Position::from_abcd(left.map(u32::from));
                let right = Position::from_abcd(right.map(u32::from));
                let exact_sum = left.add(&right) == *parent;
                let kind = match floored {
                    Some(c) if !exact_sum => SplitKind::Relaxed { coordinate: c },
                    _ => SplitKind::Exact,
                };
                Some(Split { parent: parent.clone(), left, right, player: player as usize, kind })
            }
            _ => None,
        }
    }
}

/// Values of all canonical positions of `{0..T}^4` plus their provenance.
#[derive(Clone, Debug)]
pub struct ValueTable<V> {
    pub(crate) lattice: Lattice,
    pub(crate) values: Vec<V>,
    pub(crate) history: Vec<Vec<UpdateRecord<V>>>,
    pub(crate) step: u32,
}

impl<V: Scalar> ValueTable<V> {
    /// Table initialized to `succ_zero` with empty provenance.
    pub fn init(resolution: u32) -> Result<Self> {
        Self::init_with_budget(resolution, DEFAULT_MEMORY_BUDGET)
    }

    pub fn init_with_budget(resolution: u32, budget_bytes: u64) -> Result<Self> {
        let per_slot = std::mem::size_of::<V>() as u64 * 2 + std::mem::size_of::<Vec<UpdateRecord<V>>>() as u64;
        let required = Lattice::estimate_bytes(resolution, per_slot);
        if required > budget_bytes {
            return Err(Error::ResourceLimit { resolution, required_bytes: required, budget_bytes });
        }
        let lattice = Lattice::new(resolution)?;
        let values = (0..lattice.len())
            .map(|slot| V::of_u32(lattice.position(slot).succ_zero()))
            .collect();
        let history = vec![Vec::new(); lattice.len()];
        Ok(Self { lattice, values, history, step: 0 })
    }

    pub(crate) fn from_parts(lattice: Lattice, values: Vec<V>, history: Vec<Vec<UpdateRecord<V>>>, step: u32) -> Self {
        Self { lattice, values, history, step }
    }

    pub fn resolution(&self) -> u32 {
        self.lattice.resolution()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the last completed step.
    pub fn step(&self) -> u32 {
        self.step
    }

    /// Current value of any lattice position (canonicalized internally).
    pub fn value(&self, p: &Position<u32>) -> Option<&V> {
        self.lattice.slot(p).map(|s| &self.values[s])
    }

    pub fn value_at_slot(&self, slot: usize) -> &V {
        &self.values[slot]
    }

    pub fn history(&self, p: &Position<u32>) -> Option<&[UpdateRecord<V>]> {
        self.lattice.slot(p).map(|s| self.history[s].as_slice())
    }

    pub(crate) fn history_at_slot(&self, slot: usize) -> &[UpdateRecord<V>] {
        &self.history[slot]
    }

    /// Number of stored update records.
    pub fn record_count(&self) -> usize {
        self.history.iter().map(Vec::len).sum()
    }

    /// `L(D, i)`: step of the last update of `slot` at or before step `i` (0 if none).
    pub fn last_update(&self, slot: usize, i: u32) -> u32 {
        self.record_until(slot, i).map_or(0, |r| r.step)
    }

    /// The update record in effect at step `i`.
    pub fn record_until(&self, slot: usize, i: u32) -> Option<&UpdateRecord<V>> {
        let h = &self.history[slot];
        let n = h.partition_point(|r| r.step <= i);
        n.checked_sub(1).map(|k| &h[k])
    }

    /// Value of `slot` as it stood after step `i`.
    pub fn value_until(&self, slot: usize, i: u32) -> V {
        match self.record_until(slot, i) {
            Some(r) => r.value.clone(),
            None => V::of_u32(self.lattice.position(slot).succ_zero()),
        }
    }

    /// Iterates `(position, value)` over canonical positions in slot order.
    pub fn iter(&self) -> impl Iterator<Item = (Position<u32>, &V)> + '_ {
        self.values.iter().enumerate().map(|(s, v)| (self.lattice.position(s), v))
    }

    /// Recomputes every recorded value from its operands at recording time.
    /// Returns the first position whose replay disagrees.
    pub fn replay_provenance(&self) -> Result<()> {
        for slot in 0..self.len() {
            let parent = self.lattice.position(slot);
            for rec in &self.history[slot] {
                let recomputed = self.replay_record(slot, rec)?;
                if recomputed != rec.value {
                    return Err(Error::MissingProvenance(format!(
                        "replay of {parent} at step {} gives {recomputed}, recorded {}",
                        rec.step, rec.value
                    )));
                }
            }
            let last = self.history[slot].last().map_or_else(
                || V::of_u32(parent.succ_zero()),
                |r| r.value.clone(),
            );
            if last != self.values[slot] {
                return Err(Error::MissingProvenance(format!("value of {parent} has no matching record")));
            }
        }
        Ok(())
    }

    fn replay_record(&self, slot: usize, rec: &UpdateRecord<V>) -> Result<V> {
        let parent = self.lattice.rep(slot);
        match rec.op {
            UpdateOp::Split { left, right, .. } => {
                let l = self.lattice.slot_of_raw(&left);
                let r = self.lattice.slot_of_raw(&right);
                Ok(self.value_until(l, rec.step) + self.value_until(r, rec.step))
            }
            UpdateOp::Scale { factor } => {
                let scaled = parent.map(|v| v as u32 * factor as u32);
                let p = Position::from_abcd(scaled);
                let s = self
                    .lattice
                    .slot(&p)
                    .ok_or_else(|| Error::MissingProvenance(format!("scaled position {p} out of range")))?;
                Ok(self.value_until(s, rec.step - 1) / V::of_u32(factor as u32))
            }
            UpdateOp::ScaleUp { factor } => {
                let base = parent.map(|v| v / factor);
                let s = self.lattice.slot_of_raw(&base);
                Ok(self.value_until(s, rec.step - 1) * V::of_u32(factor as u32))
            }
        }
    }
}
