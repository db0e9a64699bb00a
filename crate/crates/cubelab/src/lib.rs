//! Congruence lattices, higher cubic extensions and 3^n-diagrams, computed
//! concretely over finite sets, finite groups and finitely generated abelian
//! groups.
//!
//! The crate is organised in layers:
//!
//! * [`relcore`] — finite sets, maps, equivalence relations, forks, pullbacks
//!   and the regular-pushout criterion. Everything higher reduces to this.
//! * [`grpalg`] — finite groups by Cayley table, normal subgroups, congruences,
//!   quotients and a built-in catalog used for exhaustive theorem checks.
//! * [`abfg`] — exact integer linear algebra: HNF/SNF, subgroup lattices of
//!   `Z^d`, finitely generated abelian groups and their homomorphisms.
//! * [`cubes`] — n-cubes by iterated pushouts, box products of congruences,
//!   the n-cubic-extension checker, distributivity, and 3^n grids in pointed
//!   and denormalised (fork) form.
//! * [`oracle`] — independent brute-force cross-checks and counterexample
//!   search.
//! * [`cli`] — the command-line surface.

pub mod abfg;
pub mod cli;
pub mod cubes;
pub mod grpalg;
pub mod oracle;
pub mod relcore;
pub mod report;

pub use report::CheckReport;

use thiserror::Error;

/// Errors shared across the crate. Construction errors carry enough context
/// to point at the offending piece of input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),
    #[error("codomain mismatch: {0}")]
    CodomainMismatch(String),
    #[error("rank mismatch: {0}")]
    RankMismatch(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("not a congruence: {0}")]
    NotACongruence(String),
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("ill-defined homomorphism: {0}")]
    IllDefinedHom(String),
    #[error("parent mismatch: {0}")]
    ParentMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
