//! Exact and numerical tools for the linear `SL2(Z)` action on the n-torus.
//!
//! The toolkit is organised around the symmetric-power embedding
//! `SL2(Z) -> SLn(Z)`: exact construction of the representation matrices
//! (`symrep`), ergodicity certificates for the induced toral automorphisms
//! (`ergocert`), the equivariant identification of projective n-space with
//! unordered point configurations on the projective line (`projfact`),
//! finite models of approximately invariant measure fields (`amencomb`),
//! twisted operator algebras of finite equivalence relations (`relalg`),
//! exact L2-Betti numbers of amalgams (`invariants`), and numerical orbit
//! diagnostics on the torus itself (`dynlab`).

pub mod amencomb;
pub mod dynlab;
pub mod ergocert;
pub mod invariants;
pub mod projfact;
pub mod relalg;
pub mod symrep;

mod ratmat;
mod serial;
mod zpoly;

mod error;
pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
