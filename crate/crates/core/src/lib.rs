//! Hierarchical key assignment without public information.
//!
//! Keys for a partially ordered set of labels are derived down a spanning
//! out-tree of the order. Each label's holder receives a small set of tree
//! secrets from which exactly the keys of its down-set follow.

pub mod allocation;
pub mod baselines;
pub mod error;
pub mod json;
pub mod kdf;
pub mod matching;
pub mod oracle;
pub mod poset;
pub mod tree;

#[cfg(test)]
mod fixtures;

pub use allocation::{metrics, minimal_allocation, validate_enforcement, KeyAllocation, SchemeMetrics};
pub use error::{Error, Result};
pub use kdf::{derive, setup, Key, Secret, SecretStore, SecretBundle};
pub use poset::{ChainPartition, Policy, PolicyDocument, Poset, UserAssignment, DEFAULT_ROOT_LABEL};
pub use tree::{min_leaf_min_weight_out_tree, min_weight_out_tree, ArcChoice, DerivationOutTree, WeightFunction};
