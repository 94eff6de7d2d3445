//! Binary table dump: the magic line, one JSON header line, then little-endian records.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, rational_string, Rational};
use crate::search::lattice::Lattice;
use crate::search::table::{UpdateOp, UpdateRecord, ValueTable};

pub const TABLE_MAGIC: &str = "CGTABLE/1";

/// Values that can be written to a table dump.
pub trait StoredValue: Sized {
    const MODE: &'static str;
    fn write_value(&self, out: &mut Vec<u8>);
    fn read_value(input: &mut &[u8]) -> Result<Self>;
}

impl StoredValue for f64 {
    const MODE: &'static str = "float";

    fn write_value(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_bits().to_le_bytes());
    }

    fn read_value(input: &mut &[u8]) -> Result<Self> {
        Ok(f64::from_bits(u64::from_le_bytes(take(input)?)))
    }
}

impl StoredValue for f32 {
    const MODE: &'static str = "float32";

    fn write_value(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_bits().to_le_bytes());
    }

    fn read_value(input: &mut &[u8]) -> Result<Self> {
        Ok(f32::from_bits(u32::from_le_bytes(take(input)?)))
    }
}

impl StoredValue for Rational {
    const MODE: &'static str = "rational";

    fn write_value(&self, out: &mut Vec<u8>) {
        let s = rational_string(self);
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    }

    fn read_value(input: &mut &[u8]) -> Result<Self> {
        let len = u32::from_le_bytes(take(input)?) as usize;
        if input.len() < len {
            return Err(Error::Format("truncated rational".into()));
        }
        let (text, rest) = input.split_at(len);
        *input = rest;
        let text = std::str::from_utf8(text).map_err(|e| Error::Format(e.to_string()))?;
        parse_rational(text).ok_or_else(|| Error::Format(format!("bad rational {text:?}")))
    }
}

fn take<const N: usize>(input: &mut &[u8]) -> Result<[u8; N]> {
    if input.len() < N {
        return Err(Error::Format("unexpected end of table data".into()));
    }
    let (head, rest) = input.split_at(N);
    *input = rest;
    Ok(head.try_into().expect("length checked"))
}

#[derive(Serialize, Deserialize)]
struct Header {
    resolution: u32,
    mode: String,
    step: u32,
    positions: usize,
    records: usize,
}

fn write_op(op: &UpdateOp, out: &mut Vec<u8>) {
    match *op {
        UpdateOp::Split { left, right, player, floored } => {
            out.push(0);
            out.extend_from_slice(&left);
            out.extend_from_slice(&right);
            out.push(player);
            out.push(floored.map_or(u8::MAX, |f| f));
        }
        UpdateOp::Scale { factor } => out.extend_from_slice(&[1, factor]),
        UpdateOp::ScaleUp { factor } => out.extend_from_slice(&[2, factor]),
    }
}

fn read_op(input: &mut &[u8]) -> Result<UpdateOp> {
    let [tag] = take::<1>(input)?;
    Ok(match tag {
        0 => {
            let left = take::<4>(input)?;
            let right = take::<4>(input)?;
            let [player, floored] = take::<2>(input)?;
            UpdateOp::Split { left, right, player, floored: (floored != u8::MAX).then_some(floored) }
        }
        1 => UpdateOp::Scale { factor: take::<1>(input)?[0] },
        2 => UpdateOp::ScaleUp { factor: take::<1>(input)?[0] },
        other => return Err(Error::Format(format!("unknown update tag {other}"))),
    })
}

/// Writes the table, values and provenance included.
pub fn save_table<V, W>(table: &ValueTable<V>, mut out: W) -> Result<()>
where
    V: crate::scalar::Scalar + StoredValue,
    W: Write,
{
    let header = Header {
        resolution: table.resolution(),
        mode: V::MODE.to_string(),
        step: table.step(),
        positions: table.len(),
        records: table.record_count(),
    };
    writeln!(out, "{TABLE_MAGIC}")?;
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    let mut buf = Vec::new();
    for slot in 0..table.len() {
        buf.clear();
        table.value_at_slot(slot).write_value(&mut buf);
        let history = table.history_at_slot(slot);
        buf.extend_from_slice(&(history.len() as u32).to_le_bytes());
        for rec in history {
            buf.extend_from_slice(&rec.step.to_le_bytes());
            rec.value.write_value(&mut buf);
            write_op(&rec.op, &mut buf);
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a table written by [`save_table`] with the same value type.
pub fn load_table<V, R>(mut input: R) -> Result<ValueTable<V>>
where
    V: crate::scalar::Scalar + StoredValue,
    R: Read,
{
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut rest: &[u8] = &bytes;
    let magic = next_line(&mut rest)?;
    if magic != TABLE_MAGIC {
        return Err(Error::Format(format!("not a table dump (magic {magic:?})")));
    }
    let header: Header = serde_json::from_str(next_line(&mut rest)?)?;
    if header.mode != V::MODE {
        return Err(Error::Format(format!("table mode is {}, expected {}", header.mode, V::MODE)));
    }
    let lattice = Lattice::new(header.resolution)?;
    if lattice.len() != header.positions {
        return Err(Error::Format("position count does not match resolution".into()));
    }
    let mut values = Vec::with_capacity(lattice.len());
    let mut history = Vec::with_capacity(lattice.len());
    for _ in 0..lattice.len() {
        values.push(V::read_value(&mut rest)?);
        let n = u32::from_le_bytes(take(&mut rest)?) as usize;
        let mut records = Vec::with_capacity(n);
        for _ in 0..n {
            let step = u32::from_le_bytes(take(&mut rest)?);
            let value = V::read_value(&mut rest)?;
            let op = read_op(&mut rest)?;
            records.push(UpdateRecord { step, value, op });
        }
        history.push(records);
    }
    if !rest.is_empty() {
        return Err(Error::Format("trailing bytes after table".into()));
    }
    Ok(ValueTable::from_parts(lattice, values, history, header.step))
}

fn next_line<'a>(rest: &mut &'a [u8]) -> Result<&'a str> {
    let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Format("missing header line".into()))?;
    let line = std::str::from_utf8(&rest[..end]).map_err(|e| Error::Format(e.to_string()))?;
    *rest = &rest[end + 1..];
    Ok(line)
}
