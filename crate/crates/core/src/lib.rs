//! Exact arithmetic for paired continued-fraction / base-b digit constructions.
//!
//! The crate builds a computable real `x` in (1/2, 1) digit by digit, together
//! with its reciprocal `1/x`, so that every emitted prefix carries certified
//! bounds: continued-fraction digit blocks with pattern frequencies close to
//! the Gauss measure, and base-b digit blocks with frequencies close to
//! uniform. Everything is computed over arbitrary-precision rationals; all
//! transcendental quantities are evaluated as interval enclosures with outward
//! rounding, and every comparison against a threshold is decided
//! conservatively or reported as undecidable. No floating point is used
//! anywhere.
//!
//! Layers, bottom to top:
//!
//! - [`rational`]: rationals, finite continued-fraction words, convergents,
//!   the Gauss map and base-b shift maps.
//! - [`cylinder`]: cf-ary and b-ary cylinder intervals, enumeration of
//!   subcylinders inside a relative-length window, minimal enclosing b-ary
//!   cylinders, and determined-digit extraction.
//! - [`certified`]: rational interval enclosures for `ln`, `exp` and `pi`
//!   with adaptive working precision.
//! - [`measures`]: the Gauss measure, Levy's constant, large-deviation and
//!   Bernstein-style bounds, and the step schedule.
//! - [`discrepancy`]: exact pattern-frequency discrepancies for cf words and
//!   base-b words, plus concatenation-bound checks.
//! - [`refinement`]: the brick pair (one interval tuple for `x`, one for
//!   `y = 1/x - 1`) and the verified search for a shared digit block that
//!   refines both with small discrepancy.
//! - [`construction`]: the iterative driver, digit emission, and state
//!   persistence; [`checkpoint`] holds the document format and [`cli`] the
//!   command-line surface.

pub mod certified;
pub mod checkpoint;
pub mod cli;
pub mod construction;
pub mod cylinder;
pub mod discrepancy;
pub mod measures;
pub mod rational;
pub mod refinement;

pub use certified::{CertifiedError, CertifiedReal};
pub use construction::{ConstructionConfig, ConstructionState, Target};
pub use cylinder::{BaryCylinder, CfCylinder, Interval};
pub use measures::{BoundConstants, Schedule};
pub use rational::{CfWord, ConvergentPair, Rational};
pub use refinement::{Brick, BrickPair, RefinementOutcome};
