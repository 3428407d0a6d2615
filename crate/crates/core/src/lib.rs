//! Penalisations of the simple symmetric random walk on ℤ.
//!
//! Exact rational oracles (path enumeration, state dynamic programming and
//! absorbing-chain solves), closed-form laws, the penalisation martingales
//! with their h-transform kernels, and seeded simulation under the
//! penalised measures.

mod error;
pub mod exact;
pub mod laws;
pub mod martingales;
pub mod oracle;
pub mod qsim;
pub mod walk;
pub mod weight;

pub use error::{Error, Result};
pub use exact::Rational;
pub use martingales::{MartingaleFamily, MartingaleValue};
pub use oracle::{EventSpec, ExactDist, PenaltyFunctional};
pub use walk::{Field, FieldSet, Path, Step, WalkState};
pub use weight::{Enclosure, PenaltyWeight, SupportFn};
