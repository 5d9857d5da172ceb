//! Exact computation with closures of finitely generated subgroups of
//! free groups, for the group topologies defined by finite abelian
//! groups (with or without bounded exponent), finite metabelian groups,
//! and finite solvable groups of bounded derived length.
//!
//! The crate is organized around a few exact primitives:
//!
//! - [`words`]: freely reduced words and exponent vectors;
//! - [`automata`]: Stallings automata — folding, membership, bases,
//!   index, intersections, conjugates, cores, overgroups, low-index
//!   enumeration, and Schreier balls from membership oracles;
//! - [`intlin`]: Smith normal form with unimodular transforms, lattice
//!   index and membership over arbitrary-precision integers;
//! - [`quotients`]: finite quotients as concrete groups with derived
//!   series and identity checking;
//! - [`abelian`]: closures, membership and density for the abelian and
//!   bounded-exponent topologies;
//! - [`metabelian`]: free differential calculus, a certificate-based
//!   membership engine for the metabelian topology, and a validation
//!   harness for the rewriting-based closure procedure;
//! - [`pv`]: uniform closedness/density entry points and the generic
//!   extension-closed closure with pluggable oracles.

pub mod abelian;
pub mod automata;
pub mod intlin;
pub mod metabelian;
pub mod pv;
pub mod quotients;
pub mod words;

pub use automata::{StallingsAutomaton, SubgroupIndex};
pub use quotients::{FiniteQuotient, PseudovarietyDescriptor};
pub use words::Word;
