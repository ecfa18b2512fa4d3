//! Exact-arithmetic model of Villadsen-type inductive systems of
//! matrix algebras over powers of a seed space.
//!
//! The crate computes the classification invariants of such a system
//! (radius of comparison, mean-dimension bound, `K₀` as a supernatural number,
//! trace-simplex tag), decides isomorphism where the invariants are known to
//! be complete, and runs the finitary constructions behind those results:
//! composite diagonal maps, trace discretization, Hall matchings,
//! point-evaluation division and intertwining schedules.

pub mod classify;
pub mod error;
pub mod exact;
pub mod families;
pub mod intertwine;
pub mod invariants;
pub mod map;
pub mod matching;
pub mod primes;
pub mod space;
pub mod supernatural;
pub mod system;
pub mod traces;
pub mod validate;

pub use error::{Error, Result};
pub use exact::{Ext, Rational};
