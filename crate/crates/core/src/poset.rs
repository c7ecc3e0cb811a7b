//! Information flow policies as finite posets.
//!
//! A [`Poset`] keeps its labels sorted lexicographically and addresses
//! elements by their index into that order, so every iteration over elements
//! is label-ordered. The strict order is stored as a comparability bit
//! matrix (the transitive closure) alongside the cover arcs of the Hasse
//! diagram.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::hopcroft_karp;

/// Label used for the virtual maximum added above several maximal elements.
pub const DEFAULT_ROOT_LABEL: &str = "⊤";

/// An ordered pair `(x, y)` meaning `x > y`.
pub type Arc = (String, String);
pub type ArcSet = BTreeSet<Arc>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BitMatrix {
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub(crate) fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Self { words, bits: vec![0; words * n] }
    }

    #[inline]
    pub(crate) fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.words + col / 64] >> (col % 64) & 1 == 1
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize) {
        self.bits[row * self.words + col / 64] |= 1 << (col % 64);
    }

    fn row(&self, row: usize) -> &[u64] {
        &self.bits[row * self.words..(row + 1) * self.words]
    }

    fn or_row_into(&mut self, src: usize, dst: usize) {
        for w in 0..self.words {
            let v = self.bits[src * self.words + w];
            self.bits[dst * self.words + w] |= v;
        }
    }

    fn ones(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(row).iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let bit = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + bit)
            })
        })
    }
}

/// A finite partial order over string labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poset {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    /// `above.get(x, y)` iff `x > y`.
    above: BitMatrix,
    covers: Vec<(usize, usize)>,
    root: Option<usize>,
    virtual_root: bool,
}

impl Poset {
    /// Builds the order generated by `arcs` (each `(x, y)` asserting `x > y`).
    /// Any generating subset of the strict order is accepted.
    pub fn new<S: AsRef<str>>(elements: &[S], arcs: &[(S, S)]) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyPoset);
        }
        let mut labels: Vec<String> = Vec::with_capacity(elements.len());
        let mut seen = BTreeSet::new();
        for e in elements {
            let e = e.as_ref();
            if e.is_empty() {
                return Err(Error::EmptyLabel);
            }
            if !seen.insert(e) {
                return Err(Error::DuplicateElement(e.to_string()));
            }
            labels.push(e.to_string());
        }
        labels.sort();
        let index: HashMap<String, usize> =
            labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let lookup = |l: &str| index.get(l).copied().ok_or_else(|| Error::UnknownLabel(l.to_string()));

        let n = labels.len();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (x, y) in arcs {
            let (x, y) = (lookup(x.as_ref())?, lookup(y.as_ref())?);
            if x == y {
                return Err(Error::Cycle(labels[x].clone()));
            }
            succ[x].push(y);
        }

        // Kahn's algorithm; leftover vertices lie on or behind a cycle.
        let mut indeg = vec![0usize; n];
        for s in &succ {
            for &y in s {
                indeg[y] += 1;
            }
        }
        let mut order: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &y in &succ[v] {
                indeg[y] -= 1;
                if indeg[y] == 0 {
                    order.push(y);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&v| indeg[v] > 0).expect("some vertex is stuck");
            return Err(Error::Cycle(labels[stuck].clone()));
        }

        let mut above = BitMatrix::new(n);
        for &v in order.iter().rev() {
            for &y in &succ[v] {
                above.set(v, y);
                above.or_row_into(y, v);
            }
        }
        Ok(Self::from_closure(labels, index, above))
    }

    fn from_closure(labels: Vec<String>, index: HashMap<String, usize>, above: BitMatrix) -> Self {
        let n = labels.len();
        let mut covers = Vec::new();
        for x in 0..n {
            // Cover row: strict down-set minus everything reachable in two steps.
            let mut indirect = vec![0u64; above.words];
            for z in above.ones(x) {
                for (w, word) in above.row(z).iter().enumerate() {
                    indirect[w] |= word;
                }
            }
            for y in above.ones(x) {
                if indirect[y / 64] >> (y % 64) & 1 == 0 {
                    covers.push((x, y));
                }
            }
        }
        covers.sort_unstable();
        let mut poset = Self { labels, index, above, covers, root: None, virtual_root: false };
        let maximal = poset.maximal_indices();
        if maximal.len() == 1 {
            poset.root = Some(maximal[0]);
        }
        poset
    }

    /// Adds a virtual maximum labelled `reserved` when there is more than one
    /// maximal element; otherwise returns the poset unchanged.
    pub fn augment_root(self, reserved: &str) -> Result<Self> {
        if self.root.is_some() {
            return Ok(self);
        }
        if self.index.contains_key(reserved) {
            return Err(Error::ReservedLabel(reserved.to_string()));
        }
        let mut elements = self.labels.clone();
        elements.push(reserved.to_string());
        let mut arcs: Vec<(String, String)> = self.covers_labelled();
        for m in self.maximal_indices() {
            arcs.push((reserved.to_string(), self.labels[m].clone()));
        }
        let mut augmented = Poset::new(&elements, &arcs)?;
        augmented.virtual_root = true;
        Ok(augmented)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labels in index order (lexicographic).
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index.get(label).copied().ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    /// The unique maximum, if there is one.
    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn require_root(&self) -> Result<usize> {
        self.root.ok_or(Error::NoRoot)
    }

    /// Whether the root was added by [`Poset::augment_root`].
    pub fn has_virtual_root(&self) -> bool {
        self.virtual_root
    }

    pub fn is_virtual(&self, x: usize) -> bool {
        self.virtual_root && self.root == Some(x)
    }

    /// `x > y`.
    #[inline]
    pub fn gt(&self, x: usize, y: usize) -> bool {
        self.above.get(x, y)
    }

    /// `x >= y`.
    #[inline]
    pub fn ge(&self, x: usize, y: usize) -> bool {
        x == y || self.above.get(x, y)
    }

    pub fn comparable(&self, x: usize, y: usize) -> bool {
        self.ge(x, y) || self.ge(y, x)
    }

    /// Cover arcs `(x, y)` with `x` covering `y`, sorted.
    pub fn cover_arcs(&self) -> &[(usize, usize)] {
        &self.covers
    }

    /// All strict-order pairs `(x, y)` with `x > y`, sorted.
    pub fn closure_arcs(&self) -> Vec<(usize, usize)> {
        (0..self.len()).flat_map(|x| self.above.ones(x).map(move |y| (x, y))).collect()
    }

    pub fn closure_len(&self) -> usize {
        (0..self.len()).map(|x| self.above.ones(x).count()).sum()
    }

    pub fn covers(&self) -> ArcSet {
        self.covers_labelled().into_iter().collect()
    }

    pub fn closure(&self) -> ArcSet {
        self.closure_arcs()
            .into_iter()
            .map(|(x, y)| (self.labels[x].clone(), self.labels[y].clone()))
            .collect()
    }

    fn covers_labelled(&self) -> Vec<(String, String)> {
        self.covers.iter().map(|&(x, y)| (self.labels[x].clone(), self.labels[y].clone())).collect()
    }

    /// Elements with nothing above them.
    pub fn maximal_indices(&self) -> Vec<usize> {
        let n = self.len();
        let mut covered = vec![false; n];
        for &(_, y) in &self.covers {
            covered[y] = true;
        }
        (0..n).filter(|&x| !covered[x]).collect()
    }

    pub fn maximal(&self) -> Vec<String> {
        self.maximal_indices().into_iter().map(|x| self.labels[x].clone()).collect()
    }

    /// `{y : y <= x}`, sorted.
    pub fn down_indices(&self, x: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.above.ones(x).collect();
        out.push(x);
        out.sort_unstable();
        out
    }

    /// `{y : y >= x}`, sorted.
    pub fn up_indices(&self, x: usize) -> Vec<usize> {
        (0..self.len()).filter(|&y| self.ge(y, x)).collect()
    }

    pub fn down_set(&self, label: &str) -> Result<BTreeSet<String>> {
        let x = self.index_of(label)?;
        Ok(self.down_indices(x).into_iter().map(|y| self.labels[y].clone()).collect())
    }

    pub fn up_set(&self, label: &str) -> Result<BTreeSet<String>> {
        let x = self.index_of(label)?;
        Ok(self.up_indices(x).into_iter().map(|y| self.labels[y].clone()).collect())
    }

    /// Length (in arcs) of the longest cover path.
    pub fn height(&self) -> usize {
        // Indices are not a topological order, so memoise over the closure.
        let n = self.len();
        let mut memo: Vec<Option<usize>> = vec![None; n];
        fn longest(p: &Poset, x: usize, memo: &mut Vec<Option<usize>>) -> usize {
            if let Some(h) = memo[x] {
                return h;
            }
            let h = p
                .covers
                .iter()
                .filter(|&&(a, _)| a == x)
                .map(|&(_, y)| 1 + longest(p, y, memo))
                .max()
                .unwrap_or(0);
            memo[x] = Some(h);
            h
        }
        (0..n).map(|x| longest(self, x, &mut memo)).max().unwrap_or(0)
    }

    /// A minimum chain partition, computed as a maximum matching in the split
    /// graph of the closure (Dilworth / Fulkerson). Chains are listed top to
    /// bottom and ordered by their top label.
    pub fn min_chain_partition(&self) -> ChainPartition {
        let n = self.len();
        let adj: Vec<Vec<usize>> = (0..n).map(|x| self.above.ones(x).collect()).collect();
        let next = hopcroft_karp(&adj, n);
        let mut has_pred = vec![false; n];
        for y in next.iter().flatten() {
            has_pred[*y] = true;
        }
        let chains = (0..n)
            .filter(|&x| !has_pred[x])
            .map(|top| {
                let mut chain = vec![self.labels[top].clone()];
                let mut cur = top;
                while let Some(y) = next[cur] {
                    chain.push(self.labels[y].clone());
                    cur = y;
                }
                chain
            })
            .collect();
        ChainPartition { chains }
    }

    /// Size of a maximum antichain.
    pub fn width(&self) -> usize {
        self.min_chain_partition().chains.len()
    }
}

/// Builds the strict order generated by `arcs` and returns all of its pairs.
pub fn transitive_closure(arcs: &ArcSet, elements: &BTreeSet<String>) -> Result<ArcSet> {
    let elements: Vec<&str> = elements.iter().map(String::as_str).collect();
    let arcs: Vec<(&str, &str)> = arcs.iter().map(|(x, y)| (x.as_str(), y.as_str())).collect();
    if elements.is_empty() {
        return match arcs.first() {
            Some((x, _)) => Err(Error::UnknownLabel(x.to_string())),
            None => Ok(ArcSet::new()),
        };
    }
    Ok(Poset::new(&elements, &arcs)?.closure())
}

/// Cover pairs of a strict partial order given in full.
pub fn transitive_reduction(closure: &ArcSet, elements: &BTreeSet<String>) -> Result<ArcSet> {
    let regenerated = transitive_closure(closure, elements).map_err(|e| match e {
        Error::Cycle(l) => Error::NotStrictOrder(format!("not antisymmetric at `{l}`")),
        other => other,
    })?;
    if let Some((x, y)) = regenerated.difference(closure).next() {
        return Err(Error::NotStrictOrder(format!("not transitive: missing `{x}` > `{y}`")));
    }
    if elements.is_empty() {
        return Ok(ArcSet::new());
    }
    let elements: Vec<&str> = elements.iter().map(String::as_str).collect();
    let arcs: Vec<(&str, &str)> = closure.iter().map(|(x, y)| (x.as_str(), y.as_str())).collect();
    Ok(Poset::new(&elements, &arcs)?.covers())
}

/// Disjoint chains covering every element, each listed top to bottom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainPartition {
    pub chains: Vec<Vec<String>>,
}

impl ChainPartition {
    /// Checks disjointness, coverage and that each chain strictly decreases.
    /// Returns the chains as index lists.
    pub fn resolve(&self, poset: &Poset) -> Result<Vec<Vec<usize>>> {
        let mut seen = vec![false; poset.len()];
        let mut out = Vec::with_capacity(self.chains.len());
        for chain in &self.chains {
            if chain.is_empty() {
                return Err(Error::InvalidPartition("empty chain".into()));
            }
            let mut idx = Vec::with_capacity(chain.len());
            for label in chain {
                let x = poset.index_of(label)?;
                if std::mem::replace(&mut seen[x], true) {
                    return Err(Error::InvalidPartition(format!("`{label}` appears twice")));
                }
                idx.push(x);
            }
            for w in idx.windows(2) {
                if !poset.gt(w[0], w[1]) {
                    return Err(Error::InvalidPartition(format!(
                        "`{}` is not above `{}`",
                        poset.label(w[0]),
                        poset.label(w[1])
                    )));
                }
            }
            out.push(idx);
        }
        if let Some(x) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("`{}` is not covered", poset.label(x))));
        }
        Ok(out)
    }
}

/// Number of users assigned to each element, `|U(x)|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserAssignment {
    counts: Vec<u64>,
}

impl UserAssignment {
    /// Unlisted labels get zero users. The virtual root must not carry users.
    pub fn from_counts(poset: &Poset, counts: &BTreeMap<String, u64>) -> Result<Self> {
        let mut out = vec![0; poset.len()];
        for (label, &count) in counts {
            let x = poset
                .index_of(label)
                .map_err(|_| Error::InvalidUsers(format!("unknown label `{label}`")))?;
            if poset.is_virtual(x) && count > 0 {
                return Err(Error::InvalidUsers(format!("virtual root `{label}` cannot hold users")));
            }
            out[x] = count;
        }
        Ok(Self { counts: out })
    }

    /// `count` users on every element except a virtual root.
    pub fn uniform(poset: &Poset, count: u64) -> Self {
        let counts = (0..poset.len()).map(|x| if poset.is_virtual(x) { 0 } else { count }).collect();
        Self { counts }
    }

    pub fn from_vec(poset: &Poset, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != poset.len() {
            return Err(Error::InvalidUsers(format!(
                "expected {} counts, got {}",
                poset.len(),
                counts.len()
            )));
        }
        if let Some(r) = poset.root().filter(|&r| poset.is_virtual(r) && counts[r] > 0) {
            return Err(Error::InvalidUsers(format!("virtual root `{}` cannot hold users", poset.label(r))));
        }
        Ok(Self { counts })
    }

    #[inline]
    pub fn count(&self, x: usize) -> u64 {
        self.counts[x]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn all_positive_on(&self, poset: &Poset) -> bool {
        (0..poset.len()).all(|x| poset.is_virtual(x) || self.counts[x] > 0)
    }
}

/// On-disk policy: elements, generating arcs (`[x, y]` meaning `x > y`) and
/// optional user counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub elements: Vec<String>,
    #[serde(default)]
    pub arcs: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub users: Option<BTreeMap<String, u64>>,
}

/// A parsed policy: the rooted poset plus its user assignment.
#[derive(Debug, Clone)]
pub struct Policy {
    pub poset: Poset,
    pub users: UserAssignment,
}

impl Policy {
    /// Without a `users` field every real element gets one user, which makes
    /// the weighted objective equal to the plain key count.
    pub fn from_document(doc: &PolicyDocument, reserved_root: &str) -> Result<Self> {
        let poset = parse_poset(doc, reserved_root)?;
        let users = match &doc.users {
            Some(counts) => UserAssignment::from_counts(&poset, counts)?,
            None => UserAssignment::uniform(&poset, 1),
        };
        Ok(Self { poset, users })
    }

    pub fn from_json(text: &str, reserved_root: &str) -> Result<Self> {
        let doc: PolicyDocument = serde_json::from_str(text)?;
        Self::from_document(&doc, reserved_root)
    }
}

/// Normalises a policy document into a rooted poset.
pub fn parse_poset(doc: &PolicyDocument, reserved_root: &str) -> Result<Poset> {
    Poset::new(&doc.elements, &doc.arcs)?.augment_root(reserved_root)
}

#[cfg(test)]
mod tests {
    use crate::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    fn set(pairs: &[(&str, &str)]) -> ArcSet {
        pairs.iter().map(|(x, y)| (x.to_string(), y.to_string())).collect()
    }

    fn labels(ls: &[&str]) -> BTreeSet<String> {
        ls.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn sample_counts() {
        let p = sample();
        assert_eq!(p.len(), 8);
        assert_eq!(p.cover_arcs().len(), 10);
        assert_eq!(p.closure_len(), 23);
        assert_eq!(p.covers(), set(&SAMPLE_COVERS));
        assert_eq!(p.root().map(|r| p.label(r)), Some("h"));
        assert!(!p.has_virtual_root());
        assert_eq!(p.width(), 2);
    }

    #[test]
    fn generating_set_is_normalised() {
        // Redundant arcs h>a and d>a collapse into the same covers.
        let mut arcs: Vec<(&str, &str)> = SAMPLE_COVERS.to_vec();
        arcs.push(("h", "a"));
        arcs.push(("d", "a"));
        let p = Poset::new(&["h", "g", "f", "e", "d", "c", "b", "a"], &arcs).unwrap();
        assert_eq!(p, sample());
    }

    #[test]
    fn singleton() {
        let p = Poset::new(&["a"], &[]).unwrap();
        assert_eq!(p.root(), Some(0));
        assert!(p.cover_arcs().is_empty());
        assert_eq!(p.down_set("a").unwrap(), labels(&["a"]));
    }

    #[test]
    fn two_cycle_rejected() {
        let err = Poset::new(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap_err();
        assert!(matches!(err, Error::Cycle(_)));
        assert!(err.to_string().contains("cycle detected"));
    }

    #[test]
    fn bad_documents() {
        assert!(matches!(Poset::new(&["a", "a"], &[]), Err(Error::DuplicateElement(_))));
        assert!(matches!(Poset::new(&["a"], &[("a", "z")]), Err(Error::UnknownLabel(_))));
        assert!(matches!(Poset::new(&["a"], &[("a", "a")]), Err(Error::Cycle(_))));
        assert!(matches!(Poset::new::<&str>(&[], &[]), Err(Error::EmptyPoset)));
    }

    #[test]
    fn closure_and_reduction_small() {
        let els = labels(&["x", "y", "z"]);
        let chain = set(&[("x", "y"), ("y", "z")]);
        let full = set(&[("x", "y"), ("y", "z"), ("x", "z")]);
        assert_eq!(transitive_closure(&chain, &els).unwrap(), full);
        assert_eq!(transitive_reduction(&full, &els).unwrap(), chain);
        assert!(transitive_closure(&ArcSet::new(), &els).unwrap().is_empty());
        assert!(transitive_reduction(&ArcSet::new(), &els).unwrap().is_empty());
        assert!(matches!(
            transitive_reduction(&chain, &els),
            Err(Error::NotStrictOrder(_))
        ));
        let cyc = set(&[("x", "y"), ("y", "x")]);
        assert!(matches!(transitive_reduction(&cyc, &els), Err(Error::NotStrictOrder(_))));
    }

    #[test]
    fn sample_closure_reduction() {
        let els = labels(&["a", "b", "c", "d", "e", "f", "g", "h"]);
        let closure = transitive_closure(&set(&SAMPLE_COVERS), &els).unwrap();
        assert_eq!(closure.len(), 23);
        assert_eq!(transitive_reduction(&closure, &els).unwrap(), set(&SAMPLE_COVERS));
    }

    #[test]
    fn augment_root_cases() {
        let p = sample().augment_root(DEFAULT_ROOT_LABEL).unwrap();
        assert_eq!(p, sample());

        let p = Poset::new(&["x", "y"], &[]).unwrap().augment_root(DEFAULT_ROOT_LABEL).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.covers(), set(&[("⊤", "x"), ("⊤", "y")]));
        assert!(p.has_virtual_root());
        assert!(p.is_virtual(p.root().unwrap()));

        let err = Poset::new(&["x", "⊤"], &[]).unwrap().augment_root("⊤").unwrap_err();
        assert!(matches!(err, Error::ReservedLabel(_)));
    }

    #[test]
    fn sample_without_h() {
        let covers: Vec<(&str, &str)> = SAMPLE_COVERS.iter().copied().filter(|(x, _)| *x != "h").collect();
        let p = Poset::new(&["a", "b", "c", "d", "e", "f", "g"], &covers).unwrap();
        // Brute force: maximal = nothing strictly above.
        let brute: Vec<usize> = (0..p.len()).filter(|&x| (0..p.len()).all(|y| !p.gt(y, x))).collect();
        let brute: Vec<&str> = brute.iter().map(|&x| p.label(x)).collect();
        assert_eq!(brute, ["f", "g"]);
        let q = p.augment_root("⊤").unwrap();
        let top = q.root().unwrap();
        let mut kids: Vec<&str> =
            q.cover_arcs().iter().filter(|&&(x, _)| x == top).map(|&(_, y)| q.label(y)).collect();
        kids.sort();
        assert_eq!(kids, ["f", "g"]);
    }

    #[test]
    fn down_sets() {
        let p = sample();
        assert_eq!(p.down_set("e").unwrap(), labels(&["a", "c", "e"]));
        assert_eq!(p.down_set("h").unwrap().len(), 8);
        assert_eq!(p.up_set("e").unwrap(), labels(&["e", "g", "h"]));
        assert!(matches!(p.down_set("zz"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn widths() {
        let total = Poset::new(&["1", "2", "3", "4", "5"], &[("5", "4"), ("4", "3"), ("3", "2"), ("2", "1")])
            .unwrap();
        assert_eq!(total.min_chain_partition().chains.len(), 1);
        let star = Poset::new(&["r", "w", "x", "y", "z"], &[("r", "w"), ("r", "x"), ("r", "y"), ("r", "z")])
            .unwrap();
        assert_eq!(star.width(), 4);
        let part = sample().min_chain_partition();
        assert_eq!(part.chains.len(), 2);
        part.resolve(&sample()).unwrap();
    }

    #[test]
    fn partition_validation() {
        let p = sample();
        let bad = ChainPartition { chains: vec![vec!["h".into(), "b".into(), "e".into()]] };
        assert!(matches!(bad.resolve(&p), Err(Error::InvalidPartition(_))));
        let incomplete = ChainPartition { chains: vec![vec!["h".into(), "a".into()]] };
        assert!(matches!(incomplete.resolve(&p), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn policy_users() {
        let doc: PolicyDocument =
            serde_json::from_str(r#"{"elements":["x","y"],"arcs":[],"users":{"x":2}}"#).unwrap();
        let pol = Policy::from_document(&doc, "⊤").unwrap();
        assert_eq!(pol.users.counts(), &[2, 0, 0]);
        let doc: PolicyDocument =
            serde_json::from_str(r#"{"elements":["x","y"],"arcs":[],"users":{"⊤":1}}"#).unwrap();
        assert!(matches!(Policy::from_document(&doc, "⊤"), Err(Error::InvalidUsers(_))));
        assert!(serde_json::from_str::<PolicyDocument>(r#"{"elements":[],"extra":1}"#).is_err());
        let pol = Policy::from_json(r#"{"elements":["x","y"]}"#, "⊤").unwrap();
        assert_eq!(pol.users.counts(), &[1, 1, 0]);
    }

    fn dag_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..=9).prop_flat_map(|n| {
            (Just(n), prop::collection::vec((0..n, 0..n), 0..(n * n)))
                .prop_map(|(n, pairs)| (n, pairs.into_iter().filter(|(a, b)| a < b).collect()))
        })
    }

    fn build(n: usize, arcs: &[(usize, usize)]) -> (Poset, BTreeSet<String>) {
        let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let arcs: Vec<(String, String)> =
            arcs.iter().map(|&(a, b)| (names[a].clone(), names[b].clone())).collect();
        (Poset::new(&names, &arcs).unwrap(), names.into_iter().collect())
    }

    proptest! {
        #[test]
        fn reduction_round_trip((n, arcs) in dag_strategy()) {
            let (p, els) = build(n, &arcs);
            let closure = p.closure();
            let reduced = transitive_reduction(&closure, &els).unwrap();
            prop_assert_eq!(transitive_closure(&reduced, &els).unwrap(), closure);
        }

        #[test]
        fn reduction_matches_brute_force((n, arcs) in dag_strategy()) {
            let (p, _) = build(n, &arcs);
            let brute: Vec<(usize, usize)> = p
                .closure_arcs()
                .into_iter()
                .filter(|&(x, y)| !(0..n).any(|z| p.gt(x, z) && p.gt(z, y)))
                .collect();
            prop_assert_eq!(p.cover_arcs(), &brute[..]);
        }

        #[test]
        fn width_matches_max_antichain((n, arcs) in dag_strategy()) {
            let (p, _) = build(n, &arcs);
            let mut best = 0;
            for mask in 0u32..(1 << n) {
                let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                let anti = members.iter().all(|&a| members.iter().all(|&b| a == b || !p.comparable(a, b)));
                if anti {
                    best = best.max(members.len());
                }
            }
            let part = p.min_chain_partition();
            prop_assert_eq!(part.chains.len(), best);
            prop_assert!(part.resolve(&p).is_ok());
        }

        #[test]
        fn augmented_has_single_source((n, arcs) in dag_strategy()) {
            let (p, _) = build(n, &arcs);
            let q = p.augment_root(DEFAULT_ROOT_LABEL).unwrap();
            prop_assert_eq!(q.maximal_indices().len(), 1);
            let r = q.root().unwrap();
            for x in 0..q.len() {
                prop_assert!(q.ge(r, x));
            }
        }
    }
}
