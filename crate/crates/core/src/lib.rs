//! Online prediction over a fixed pool of experts when the best expert
//! changes over time. The learners here maintain a probability vector (or a
//! density matrix) that is multiplicatively updated and then projected back
//! onto a clipped feasible set whose entries never drop below a floor tied
//! to the switch budget; the floor is what lets a single run compete with
//! every comparator sequence that switches experts a bounded number of
//! times.
//!
//! The crate provides:
//! - simplex/spectraplex primitives and the clipped entropic projection
//!   ([`simplex`], [`projection`], [`matrix`], [`spectraplex`]);
//! - the learners themselves, from plain multiplicative weights to the
//!   optimistic and restarting variants ([`learners`], [`spectraplex`]);
//! - exact dynamic programs for the best switching comparator in hindsight
//!   ([`comparator`]);
//! - seeded loss-sequence generators ([`environment`]);
//! - closed-form regret guarantees plus per-step inequality checks
//!   ([`bounds`]), trajectory certification ([`verify`]), and a config-driven
//!   experiment harness ([`harness`]).

pub mod bounds;
pub mod comparator;
pub mod environment;
pub mod error;
pub mod harness;
pub mod learners;
pub mod matrix;
pub mod projection;
pub mod rng;
pub mod simplex;
pub mod spectraplex;
pub mod verify;

pub use error::{Error, Result};
pub use simplex::{Distribution, HorizonConfig, LossVector};
