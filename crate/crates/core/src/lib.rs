//! Operator calculus on symbolic shift spaces at finite cylinder resolution.
//!
//! Everything in this crate works on *cylinder functions*: complex-valued
//! functions on a one-sided shift space that only depend on the first `d`
//! coordinates. At a fixed depth budget `D` these form a nested family of
//! finite-dimensional spaces `V_0 ⊂ V_1 ⊂ … ⊂ V_D`, and the whole calculus
//! of composition operators, transfer operators, Markovian weight functions,
//! Cuntz filter systems, and loop-group actions becomes exact finite linear
//! algebra with explicit depth bookkeeping:
//!
//! * composing with the shift raises depth by one,
//! * transfer-type operators lower it by one,
//! * pointwise products live at the maximum of the factor depths,
//! * and any operation that would exceed the budget fails loudly instead of
//!   silently truncating.
//!
//! The crate is organized by subject:
//!
//! * [`symspace`]: shift models, admissible words, measures, cylinder
//!   functions, and conditional fiber systems.
//! * [`operators`]: composition and transfer operators with their adjoints,
//!   Radon-Nikodym data for quasi-invariant measures, and identity checks.
//! * [`markovian`]: nonnegative weight functions that average to one along
//!   fibers, with certificates, transport between measures, and products.
//! * [`cuntz`]: multiplier-weighted isometries and verification of the Cuntz
//!   relations for finite filter families.
//! * [`filters`]: filter banks, the loop-group action on them, and the
//!   cyclic construction of orthonormal filter families.
//! * [`structure`]: Wold decompositions, exactness and ergodicity probes,
//!   recurrence sums, and the solenoid extension of a shift model.
//! * [`fixtures`], [`config`], [`report`], [`suites`]: canonical small
//!   models, scenario configuration, and machine-readable check reports.
//!
//! # Example
//!
//! ```
//! use ergodia_core::{ShiftModel, Measure, MeasureKind, operators};
//!
//! // Full shift on two symbols, cylinder functions up to depth 3.
//! let model = ShiftModel::full_shift(2, 3).unwrap();
//! let measure = Measure::new(&model, MeasureKind::bernoulli(vec![0.5, 0.5])).unwrap();
//!
//! // The fiber-averaged transfer operator agrees with the adjoint of the
//! // composition operator exactly when the measure is shift-invariant.
//! let report = operators::check_transfer_identities(&model, &measure).unwrap();
//! assert!(report.rokhlin_vs_adjoint < 1e-12);
//! ```

#![deny(missing_docs)]
#![deny(rust_2018_idioms)]

pub mod config;
pub mod cuntz;
pub mod error;
pub mod filters;
pub mod fixtures;
mod linalg;
pub mod markovian;
pub mod operators;
pub mod report;
pub mod structure;
pub mod suites;
pub mod symspace;

pub use error::{Error, Result};
pub use symspace::{ConditionalSystem, CylFn, Measure, MeasureKind, ShiftModel, Word};
