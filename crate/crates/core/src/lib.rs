//! Optimal-size sorting network search with SAT.
//!
//! [`netcore`] holds comparator networks and the 0-1 principle checks,
//! [`prefixes`] enumerates two-layer prefixes up to permutation,
//! [`encoder`] and [`cardinality`] build the CNF instances,
//! [`solver`] runs them and [`driver`] drives the bound search.

pub mod cardinality;
pub mod driver;
pub mod encoder;
pub mod netcore;
pub mod prefixes;
pub mod solver;

pub use netcore::{BitVector, Comparator, ComparatorNetwork, Layer, NetError};
pub use prefixes::{Sentence, Variant, Word, WordKind};
