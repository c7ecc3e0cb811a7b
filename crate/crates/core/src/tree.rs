//! Derivation out-trees, the dependents sets and arc weights, and the
//! minimum-weight tree builders.
//!
//! For an arc `yz` of the order, `dependents(yz)` is the set of labels `x` with
//! `x >= z` but not `x >= y`: exactly the holders who would need an extra
//! secret for `z` if `yz` were kept in the tree. Weighting each arc by the
//! number of users in its dependents set turns "fewest distributed secrets" into
//! "minimum-weight spanning out-tree", and because every non-root vertex picks
//! its in-arc independently, the minimum is found by a per-vertex argmin.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::hopcroft_karp;
use crate::poset::{Poset, UserAssignment};

/// A spanning out-tree whose arcs all point downwards in the order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationOutTree {
    root: usize,
    parent: Vec<Option<usize>>,
}

/// JSON form of a tree: `{"root": label, "parents": {child: parent}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeExport {
    pub root: String,
    pub parents: BTreeMap<String, String>,
}

impl DerivationOutTree {
    /// Validates a parent vector against `poset`: only the root lacks a
    /// parent and each parent is strictly above its child. Those two facts
    /// already make the parent graph an acyclic spanning out-tree.
    pub fn from_parents(poset: &Poset, parent: Vec<Option<usize>>) -> Result<Self> {
        let root = poset.require_root()?;
        if parent.len() != poset.len() {
            return Err(Error::InvalidTree(format!(
                "expected {} vertices, got {}",
                poset.len(),
                parent.len()
            )));
        }
        for (child, p) in parent.iter().enumerate() {
            match *p {
                None if child != root => {
                    return Err(Error::InvalidTree(format!("`{}` has no parent", poset.label(child))))
                }
                Some(_) if child == root => {
                    return Err(Error::InvalidTree(format!("root `{}` has a parent", poset.label(child))))
                }
                Some(p) if p >= poset.len() || !poset.gt(p, child) => {
                    return Err(Error::InvalidTree(format!(
                        "parent of `{}` is not above it",
                        poset.label(child)
                    )))
                }
                _ => {}
            }
        }
        Ok(Self { root, parent })
    }

    pub fn from_export(poset: &Poset, export: &TreeExport) -> Result<Self> {
        let root = poset.index_of(&export.root)?;
        if Some(root) != poset.root() {
            return Err(Error::InvalidTree(format!("`{}` is not the poset maximum", export.root)));
        }
        let mut parent = vec![None; poset.len()];
        for (child, p) in &export.parents {
            parent[poset.index_of(child)?] = Some(poset.index_of(p)?);
        }
        Self::from_parents(poset, parent)
    }

    pub fn to_export(&self, poset: &Poset) -> TreeExport {
        TreeExport {
            root: poset.label(self.root).to_string(),
            parents: self
                .arcs()
                .map(|(p, c)| (poset.label(c).to_string(), poset.label(p).to_string()))
                .collect(),
        }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, x: usize) -> Option<usize> {
        self.parent[x]
    }

    /// Tree arcs `(parent, child)` in child order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent.iter().enumerate().filter_map(|(c, p)| p.map(|p| (p, c)))
    }

    /// Children of every vertex, each list sorted.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.len()];
        for (p, c) in self.arcs() {
            out[p].push(c);
        }
        out
    }

    /// The tree path from `from` down to `to` (both inclusive), if `from` is
    /// an ancestor-or-self of `to`.
    pub fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = self.parent[cur]?;
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let mut cur = to;
        loop {
            if cur == from {
                return true;
            }
            match self.parent[cur] {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// Vertices reachable from `from`, including itself, in preorder.
    pub fn descendants(&self, from: usize) -> Vec<usize> {
        let children = self.children();
        let mut out = Vec::new();
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(children[v].iter().rev());
        }
        out
    }

    /// Vertices in breadth-first order from the root.
    pub fn top_down(&self) -> Vec<usize> {
        let children = self.children();
        let mut order = vec![self.root];
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            order.extend(&children[v]);
        }
        order
    }

    pub fn depth(&self, x: usize) -> usize {
        let mut d = 0;
        let mut cur = x;
        while let Some(p) = self.parent[cur] {
            d += 1;
            cur = p;
        }
        d
    }

    pub fn leaf_count(&self) -> usize {
        let mut internal = vec![false; self.len()];
        for (p, _) in self.arcs() {
            internal[p] = true;
        }
        internal.iter().filter(|i| !**i).count()
    }

    pub fn total_weight(&self, weights: &WeightFunction) -> Result<u64> {
        self.arcs().map(|a| weights.get(a)).sum()
    }
}

/// Which arcs the tree builder may choose from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArcChoice {
    /// The Hasse diagram; always contains a minimum-weight tree.
    #[default]
    Covers,
    /// Every strict-order pair.
    Closure,
}

impl ArcChoice {
    pub fn arcs(self, poset: &Poset) -> Vec<(usize, usize)> {
        match self {
            ArcChoice::Covers => poset.cover_arcs().to_vec(),
            ArcChoice::Closure => poset.closure_arcs(),
        }
    }
}

fn check_arc(poset: &Poset, (y, z): (usize, usize)) -> Result<()> {
    if y < poset.len() && z < poset.len() && poset.gt(y, z) {
        Ok(())
    } else {
        Err(Error::NotInOrder {
            upper: poset.labels().get(y).cloned().unwrap_or_default(),
            lower: poset.labels().get(z).cloned().unwrap_or_default(),
        })
    }
}

/// `{x : x >= z, x not >= y}` for an arc `y > z`.
pub fn dependents(poset: &Poset, arc: (usize, usize)) -> Result<Vec<usize>> {
    check_arc(poset, arc)?;
    let (y, z) = arc;
    Ok((0..poset.len()).filter(|&x| poset.ge(x, z) && !poset.ge(x, y)).collect())
}

/// Label form of [`dependents`].
pub fn dependent_labels(poset: &Poset, upper: &str, lower: &str) -> Result<Vec<String>> {
    let arc = (poset.index_of(upper)?, poset.index_of(lower)?);
    Ok(dependents(poset, arc)?.into_iter().map(|x| poset.label(x).to_string()).collect())
}

/// Arc weights: the number of users in each arc's dependents set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightFunction {
    weights: BTreeMap<(usize, usize), u64>,
}

impl WeightFunction {
    /// One pass over the elements per arc, O(|arcs| * |X|).
    pub fn compute(poset: &Poset, users: &UserAssignment, arcs: &[(usize, usize)]) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for &arc in arcs {
            check_arc(poset, arc)?;
            let (y, z) = arc;
            let w = (0..poset.len())
                .filter(|&x| poset.ge(x, z) && !poset.ge(x, y))
                .map(|x| users.count(x))
                .sum();
            weights.insert(arc, w);
        }
        Ok(Self { weights })
    }

    pub fn get(&self, arc: (usize, usize)) -> Result<u64> {
        self.weights.get(&arc).copied().ok_or_else(|| {
            Error::InvalidTree(format!("arc {arc:?} has no weight"))
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        self.weights.iter().map(|(&a, &w)| (a, w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weights keyed by label pair.
    pub fn labelled(&self, poset: &Poset) -> BTreeMap<(String, String), u64> {
        self.iter()
            .map(|((y, z), w)| ((poset.label(y).to_string(), poset.label(z).to_string()), w))
            .collect()
    }
}

/// For each non-root vertex, the candidate parents of minimum weight
/// (ascending) and that weight.
fn min_weight_parents(
    poset: &Poset,
    weights: &WeightFunction,
    root: usize,
) -> Result<Vec<(u64, Vec<usize>)>> {
    let mut best: Vec<Option<(u64, Vec<usize>)>> = vec![None; poset.len()];
    for ((y, z), w) in weights.iter() {
        let slot = &mut best[z];
        match slot {
            Some((bw, ps)) if w == *bw => ps.push(y),
            Some((bw, _)) if w > *bw => {}
            _ => *slot = Some((w, vec![y])),
        }
    }
    best.into_iter()
        .enumerate()
        .map(|(x, b)| match b {
            // The root's slot is unused; an empty entry keeps indices aligned.
            _ if x == root => Ok((0, Vec::new())),
            Some((w, mut ps)) => {
                ps.sort_unstable();
                Ok((w, ps))
            }
            None => Err(Error::Unreachable(poset.label(x).to_string())),
        })
        .collect()
}

/// Minimum-weight spanning out-tree over `arcs`: each non-root vertex takes its
/// lightest in-arc, ties going to the lexicographically smallest parent.
pub fn min_weight_out_tree(
    poset: &Poset,
    users: &UserAssignment,
    arcs: &[(usize, usize)],
) -> Result<DerivationOutTree> {
    let root = poset.require_root()?;
    let weights = WeightFunction::compute(poset, users, arcs)?;
    let candidates = min_weight_parents(poset, &weights, root)?;
    let parent = candidates
        .iter()
        .enumerate()
        .map(|(x, (_, ps))| if x == root { None } else { Some(ps[0]) })
        .collect();
    DerivationOutTree::from_parents(poset, parent)
}

/// A minimum-weight out-tree with the fewest leaves among all of them.
///
/// The internal vertices of a tree are its distinct chosen parents, so
/// maximising them is a maximum bipartite matching between non-root vertices
/// and their minimum-weight candidate parents. Unmatched vertices take their
/// smallest candidate.
pub fn min_leaf_min_weight_out_tree(
    poset: &Poset,
    users: &UserAssignment,
    arcs: &[(usize, usize)],
) -> Result<DerivationOutTree> {
    let root = poset.require_root()?;
    let weights = WeightFunction::compute(poset, users, arcs)?;
    let candidates = min_weight_parents(poset, &weights, root)?;
    let adj: Vec<Vec<usize>> = candidates.iter().map(|(_, ps)| ps.clone()).collect();
    let matched = hopcroft_karp(&adj, poset.len());
    let parent = (0..poset.len())
        .map(|x| if x == root { None } else { Some(matched[x].unwrap_or(candidates[x].1[0])) })
        .collect();
    DerivationOutTree::from_parents(poset, parent)
}
