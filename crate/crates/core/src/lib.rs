//! Finite-section models of free semigroupoid algebras of directed graphs.
//!
//! Operators act on the truncated Fock space spanned by the paths of length at most `K`.
//! Creation past level `K` is mapped to zero, so identities are checked on an interior
//! `H_{K-m}` whose margin `m` is carried explicitly by every operation.

pub mod caratheodory;
pub mod distance;
pub mod error;
pub mod fock;
pub mod functionals;
pub mod graph;
pub mod ideals;
pub mod io;
pub mod linalg;
pub mod semigroupoid;
pub mod wold;

pub use error::{Error, Result};
