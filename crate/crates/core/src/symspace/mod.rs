//! Shift models, admissible words, measures, and cylinder functions.
//!
//! A [`ShiftModel`] fixes an alphabet, an admissibility relation on adjacent
//! letters, and a cylinder depth budget `D`. Admissible words of length
//! `d ≤ D` index the canonical basis of the space `V_d` of depth-`d`
//! cylinder functions; the basis order is always lexicographic, and every
//! matrix in this crate is written in that order.
//!
//! A [`Measure`] assigns a strictly positive mass to every admissible
//! cylinder, consistently across depths. [`CylFn`] carries the values of a
//! cylinder function at one depth, and [`ConditionalSystem`] carries the
//! conditional measures of the one-step preimage fibers used by transfer
//! operators.

mod conditional;
mod cylfn;
mod measure;
mod model;
mod word;

pub use conditional::ConditionalSystem;
pub use cylfn::CylFn;
pub use measure::{Measure, MeasureKind};
pub use model::ShiftModel;
pub use word::Word;
