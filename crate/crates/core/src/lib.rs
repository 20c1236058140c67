//! Strategyproofness verification for single-agent ordinal mechanisms on the
//! weak-preference domain.
//!
//! A mechanism is strategyproof iff it is separation monotonic, separation
//! upper invariant and separation lower invariant. The crate checks both
//! sides of that equivalence exactly, produces machine-checkable
//! counterexamples, and compiles the reduced constraint set into an exact
//! linear program for automated mechanism design.

pub mod amd;
pub mod axioms;
pub mod domain;
pub mod lottery;
pub mod lp;
pub mod mechanism;
pub mod order;
pub mod paths;
pub mod rat;
pub mod verify;

pub use axioms::{Axiom, Certificate, Separation, Verdict};
pub use domain::Domain;
pub use lottery::{Lottery, UtilityFn};
pub use mechanism::MechanismTable;
pub use order::{Alt, AltSet, WeakOrder};
pub use rat::Rat;
