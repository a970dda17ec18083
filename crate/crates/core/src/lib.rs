//! A workbench for finite universal algebra.
//!
//! The crate decides Mal'cev-type term conditions on the variety generated
//! by a finite algebra. The central question it answers is when a tolerance
//! (a reflexive, symmetric, compatible binary relation) is the homomorphic
//! image of a congruence — the `TolIm` property. Everything is computed on
//! explicit operation tables:
//!
//! * [`algebra`] — finite algebras, terms and term evaluation,
//! * [`relations`] — tolerance and congruence generation with extractable
//!   witness terms,
//! * [`freealg`] — free algebras of finitely generated varieties, realized
//!   as clones of term functions,
//! * [`malcev`] — decision of the condition `M(n)` and solvers for Mal'cev,
//!   majority and Hagemann–Mitschke term systems,
//! * [`witnesses`] — closed-form constructions of `M(n)` witness terms for
//!   lattices, semilattices, balanced signatures, unary signatures and
//!   congruence permutable varieties,
//! * [`tolim`] — refutation and bounded affirmation of `TolIm` for a
//!   concrete tolerance,
//! * [`fixtures`] — the bundled example algebras with machine-checkable
//!   expected properties.

#![forbid(unsafe_code)]

pub mod algebra;
mod closure;
pub mod fixtures;
pub mod freealg;
pub mod malcev;
pub mod relations;
pub mod tolim;
pub mod witnesses;

pub use algebra::{Algebra, FiniteAlgebra, Operation, Term, TermFunction};
pub use relations::BinRel;

use thiserror::Error;

/// Resource limits for table-based computations.
///
/// Every operation that materializes tables (free algebras, closures,
/// term-function tables) counts the entries it allocates against
/// `max_entries`, and closure engines additionally count every candidate
/// vector they produce against `max_work`. Exceeding either fails with
/// [`Error::ResourceExceeded`] instead of degrading silently.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of table entries a single computation may materialize.
    pub max_entries: usize,
    /// Maximum number of candidate vectors a closure may produce.
    pub max_work: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_entries: 10_000_000,
            max_work: 200_000_000,
        }
    }
}

impl Limits {
    pub fn with_max_entries(max_entries: usize) -> Self {
        Limits {
            max_entries,
            ..Limits::default()
        }
    }

    pub fn with_max_work(self, max_work: usize) -> Self {
        Limits { max_work, ..self }
    }
}

/// Errors shared by all modules of the crate.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operation `{op}`: table has {got} entries, expected {expected}")]
    TableLengthMismatch {
        op: String,
        expected: u128,
        got: usize,
    },
    #[error("operation `{op}`: entry {value} at index {index} is outside the universe 0..{size}")]
    EntryOutOfRange {
        op: String,
        index: usize,
        value: usize,
        size: usize,
    },
    #[error("duplicate operation name `{0}`")]
    DuplicateOpName(String),
    #[error("universe must not be empty")]
    EmptyUniverse,
    #[error("universe of size {0} is too large for table-based computation")]
    UniverseTooLarge(usize),
    #[error("operation expects {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("element {value} is outside the universe 0..{size}")]
    ElementOutOfRange { value: usize, size: usize },
    #[error("unbound variable x{0}")]
    UnboundVariable(usize),
    #[error("term uses variable x{var}, but only {arity} variables are available")]
    VariableOutOfArity { var: usize, arity: usize },
    #[error("resource limit exceeded: needed {needed} table entries, cap is {cap}")]
    ResourceExceeded { needed: u128, cap: usize },
    #[error("pair ({0}, {1}) is not in the generated tolerance")]
    PairNotInTolerance(usize, usize),
    #[error("n must be at least 1")]
    InvalidN,
    #[error("arity must be at least 1")]
    InvalidArity,
    #[error("the diagonal identity for the term pair does not hold, so no witness can exist")]
    DiagonalIdentityFails,
    #[error("no witness term exists")]
    NotFound,
    #[error("the relation is not a tolerance")]
    NotATolerance,
    #[error("condition M({n}) fails, so the chain cannot be shortened")]
    MnFails { n: usize },
    #[error("invalid Hagemann-Mitschke chain: {0}")]
    ChainInvalid(String),
    #[error("occurrence patterns are incompatible at variable pair {0}")]
    IncompatibleOccurrence(usize),
    #[error("term trees have different shapes")]
    ShapeMismatch,
    #[error("not a homomorphism: {0}")]
    InvalidHomomorphism(String),
}

pub type Result<T> = std::result::Result<T, Error>;
