//! The eight-element running example shared by unit tests.

use crate::poset::Poset;
use crate::tree::DerivationOutTree;

pub const SAMPLE_COVERS: [(&str, &str); 10] = [
    ("b", "a"),
    ("c", "a"),
    ("d", "b"),
    ("d", "c"),
    ("e", "c"),
    ("f", "d"),
    ("g", "d"),
    ("g", "e"),
    ("h", "f"),
    ("h", "g"),
];

pub fn sample() -> Poset {
    let elements = ["a", "b", "c", "d", "e", "f", "g", "h"];
    Poset::new(&elements, &SAMPLE_COVERS).unwrap()
}

/// Minimum-weight tree for the example keeping gd rather than fd.
pub fn alt_tree(p: &Poset) -> DerivationOutTree {
    let pairs = [("a", "c"), ("b", "d"), ("c", "d"), ("d", "g"), ("e", "g"), ("f", "h"), ("g", "h")];
    let mut parent = vec![None; p.len()];
    for (c, par) in pairs {
        parent[p.index_of(c).unwrap()] = Some(p.index_of(par).unwrap());
    }
    DerivationOutTree::from_parents(p, parent).unwrap()
}
