//! Subset-sum spans in finite abelian groups.
//!
//! Everything is expressed over mixed-radix element indices of a [`Group`]:
//! sets of elements are bitsets ([`ElementSet`]), sum objects are computed
//! by bitset dynamic programming ([`sumset`]), the critical number is
//! computed both from its closed form and by exhaustive search
//! ([`critical`]), and extremal non-spanning sets are enumerated and
//! classified ([`extremal`]).

pub mod arith;
pub mod bounds;
pub mod critical;
pub mod error;
pub mod extremal;
pub mod fuzz;
pub mod group;
pub mod search;
pub mod sumset;
mod words;

pub use error::{Error, Result};
pub use group::{Element, ElementSet, Group, Subgroup};
pub use sumset::{is_complete, restricted_sums, spans, subset_sums, subset_sums_with_zero, sumset, Sequence};

/// Version tag written into checkpoints; resuming requires an exact match.
pub const ENGINE_VERSION: &str = concat!("spanlab-engine/", env!("CARGO_PKG_VERSION"), "/1");
