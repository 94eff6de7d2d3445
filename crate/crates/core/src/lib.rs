//! Lower and upper bounds for the two-player, two-secret cryptogenography game.
//!
//! Positions are unnormalized distributions over (secret bit, secret holder).
//! [`search`] computes lower bounds by splitting and scaling positions on an
//! integer lattice, [`extract`] pulls out the inequalities behind a value,
//! [`lp`] turns them into an exactly solved and certified linear program,
//! [`hardness`] checks the concave upper-bound function, and [`protocol`] turns
//! split trees into playable protocols and simulates them.

pub mod builtin;
pub mod constraint;
pub mod error;
pub mod extract;
pub mod hardness;
pub mod lp;
pub mod position;
pub mod protocol;
pub mod scalar;
pub mod search;
pub mod split;

pub use error::{Error, Result};
pub use position::{lattice, Coord, Position, Symmetry};
pub use scalar::{Rational, Scalar};
pub use search::{FloatTable, ValueTable};
pub use split::{Split, SplitKind};

/// Position over `f64`.
pub type Position64 = Position<f64>;
/// Position over `f32`.
pub type Position32 = Position<f32>;
/// Position with exact rational entries.
pub type ExactPosition = Position<Rational>;
/// Integer lattice position used by the search.
pub type LatticePosition = Position<u32>;
/// Search table with exact values.
pub type ExactTable = ValueTable<Rational>;
