//! Key allocation: which tree vertices a holder of each label starts from.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poset::{Poset, UserAssignment};
use crate::tree::DerivationOutTree;

/// `starts[x]`: sorted start points for label `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyAllocation {
    starts: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationExport {
    #[serde(rename = "phi")]
    pub starts: BTreeMap<String, Vec<String>>,
}

impl KeyAllocation {
    /// Wraps raw start-point sets; sorts and dedups each.
    pub fn from_sets(poset: &Poset, mut starts: Vec<Vec<usize>>) -> Result<Self> {
        if starts.len() != poset.len() {
            return Err(Error::InvalidAllocation(format!(
                "expected {} entries, got {}",
                poset.len(),
                starts.len()
            )));
        }
        for set in &mut starts {
            if set.iter().any(|&z| z >= poset.len()) {
                return Err(Error::InvalidAllocation("index out of range".into()));
            }
            set.sort_unstable();
            set.dedup();
        }
        Ok(Self { starts })
    }

    pub fn from_export(poset: &Poset, export: &AllocationExport) -> Result<Self> {
        let mut starts = vec![Vec::new(); poset.len()];
        for (x, zs) in &export.starts {
            let x = poset.index_of(x)?;
            starts[x] = zs.iter().map(|z| poset.index_of(z)).collect::<Result<_>>()?;
        }
        Self::from_sets(poset, starts)
    }

    pub fn to_export(&self, poset: &Poset) -> AllocationExport {
        AllocationExport {
            starts: self
                .starts
                .iter()
                .enumerate()
                .map(|(x, zs)| {
                    (poset.label(x).to_string(), zs.iter().map(|&z| poset.label(z).to_string()).collect())
                })
                .collect(),
        }
    }

    pub fn get(&self, x: usize) -> &[usize] {
        &self.starts[x]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.starts
    }

    pub fn total(&self) -> usize {
        self.starts.iter().map(Vec::len).sum()
    }

    /// The start point of `x`'s allocation whose subtree holds `target`.
    pub fn covering_start(&self, tree: &DerivationOutTree, x: usize, target: usize) -> Option<usize> {
        let starts = &self.starts[x];
        let mut cur = target;
        loop {
            if starts.binary_search(&cur).is_ok() {
                return Some(cur);
            }
            cur = tree.parent(cur)?;
        }
    }
}

/// The minimal allocation for `tree`: the root gets itself, and every other
/// `x` gets each `z <= x` whose tree parent is not below `x`.
///
/// O(|X|^2) with constant-time comparability lookups.
pub fn minimal_allocation(poset: &Poset, tree: &DerivationOutTree) -> Result<KeyAllocation> {
    if tree.len() != poset.len() || Some(tree.root()) != poset.root() {
        return Err(Error::InvalidTree("tree does not belong to this poset".into()));
    }
    let root = tree.root();
    let starts = (0..poset.len())
        .map(|x| {
            if x == root {
                return vec![root];
            }
            tree.arcs().filter(|&(y, z)| poset.ge(x, z) && !poset.ge(x, y)).map(|(_, z)| z).collect()
        })
        .collect();
    KeyAllocation::from_sets(poset, starts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `x` is missing from its own allocation.
    MissingSelf { holder: String },
    /// Some `u <= x` cannot be reached from the allocation.
    Unreachable { holder: String, target: String },
    /// A start point reaches a label the holder may not read.
    Overreach { holder: String, start: String, target: String },
    /// Tree or allocation was built for a different poset.
    SizeMismatch,
    /// The allocation differs from the minimal one.
    NotMinimal { holder: String, expected: Vec<String>, actual: Vec<String> },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EnforcementReport {
    pub violations: Vec<Violation>,
}

impl EnforcementReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the three enforcement conditions by explicit tree reachability and,
/// if `check_minimal`, that the allocation is the minimal one.
pub fn validate_enforcement(
    poset: &Poset,
    tree: &DerivationOutTree,
    allocation: &KeyAllocation,
    check_minimal: bool,
) -> EnforcementReport {
    let mut report = EnforcementReport::default();
    let n = poset.len();
    if tree.len() != n || allocation.sets().len() != n {
        report.violations.push(Violation::SizeMismatch);
        return report;
    }
    let label = |i: usize| poset.label(i).to_string();
    for x in 0..n {
        let starts = allocation.get(x);
        if !starts.contains(&x) {
            report.violations.push(Violation::MissingSelf { holder: label(x) });
        }
        for u in 0..n {
            let reaching: Vec<usize> = starts.iter().copied().filter(|&z| tree.reaches(z, u)).collect();
            if poset.ge(x, u) {
                if reaching.is_empty() {
                    report.violations.push(Violation::Unreachable { holder: label(x), target: label(u) });
                }
            } else {
                for z in reaching {
                    report.violations.push(Violation::Overreach {
                        holder: label(x),
                        start: label(z),
                        target: label(u),
                    });
                }
            }
        }
    }
    if check_minimal {
        if let Ok(minimal) = minimal_allocation(poset, tree) {
            for x in 0..n {
                if minimal.get(x) != allocation.get(x) {
                    report.violations.push(Violation::NotMinimal {
                        holder: label(x),
                        expected: minimal.get(x).iter().map(|&z| label(z)).collect(),
                        actual: allocation.get(x).iter().map(|&z| label(z)).collect(),
                    });
                }
            }
        }
    }
    report
}

/// Storage and derivation-cost figures for a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeMetrics {
    /// Secrets summed over labels.
    #[serde(rename = "K_total")]
    pub k_total: u64,
    /// Secrets summed over users.
    #[serde(rename = "K_hat")]
    pub k_hat: u64,
    /// Most secrets held by one label.
    pub k_max: u64,
    /// Longest derivation, in hops.
    pub d_max: u64,
    /// Public items.
    pub p: u64,
}

/// Metrics of a tree scheme. `d_max` counts PRF steps along the tree from the
/// covering start point to the target; the final key step is not included.
pub fn metrics(
    poset: &Poset,
    users: &UserAssignment,
    tree: &DerivationOutTree,
    allocation: &KeyAllocation,
) -> SchemeMetrics {
    let n = poset.len();
    let depth: Vec<usize> = (0..n).map(|x| tree.depth(x)).collect();
    let mut d_max = 0;
    for x in 0..n {
        for y in poset.down_indices(x) {
            if let Some(z) = allocation.covering_start(tree, x, y) {
                d_max = d_max.max(depth[y] - depth[z]);
            }
        }
    }
    SchemeMetrics {
        k_total: allocation.total() as u64,
        k_hat: (0..n).map(|x| users.count(x) * allocation.get(x).len() as u64).sum(),
        k_max: allocation.sets().iter().map(Vec::len).max().unwrap_or(0) as u64,
        d_max: d_max as u64,
        p: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{sample, alt_tree};
    use crate::tree::min_weight_out_tree;

    fn idx(p: &Poset, l: &str) -> usize {
        p.index_of(l).unwrap()
    }

    fn labels(p: &Poset, xs: &[usize]) -> Vec<String> {
        xs.iter().map(|&x| p.label(x).to_string()).collect()
    }

    #[test]
    fn alt_tree_allocation() {
        let p = sample();
        let t = alt_tree(&p);
        let a = minimal_allocation(&p, &t).unwrap();
        assert_eq!(labels(&p, a.get(idx(&p, "b"))), ["a", "b"]);
        assert_eq!(labels(&p, a.get(idx(&p, "e"))), ["c", "e"]);
        assert_eq!(labels(&p, a.get(idx(&p, "f"))), ["d", "f"]);
        assert_eq!(labels(&p, a.get(idx(&p, "c"))), ["c"]);
        assert_eq!(labels(&p, a.get(idx(&p, "h"))), ["h"]);
        assert_eq!(a.total(), 11);
        assert!(validate_enforcement(&p, &t, &a, true).is_valid());
    }

    #[test]
    fn total_order_allocation() {
        let p = Poset::new(&["a", "b", "c", "d"], &[("d", "c"), ("c", "b"), ("b", "a")]).unwrap();
        let t = min_weight_out_tree(&p, &UserAssignment::uniform(&p, 1), p.cover_arcs()).unwrap();
        let a = minimal_allocation(&p, &t).unwrap();
        for x in 0..4 {
            assert_eq!(a.get(x), &[x]);
        }
        let m = metrics(&p, &UserAssignment::uniform(&p, 1), &t, &a);
        assert_eq!(m.k_total, 4);
        assert_eq!(m.d_max, 3);
    }

    #[test]
    fn adversarial_allocations() {
        let p = sample();
        let t = alt_tree(&p);
        let good = minimal_allocation(&p, &t).unwrap();

        let mut sets = good.sets().to_vec();
        sets[idx(&p, "b")] = vec![idx(&p, "b")];
        let short = KeyAllocation::from_sets(&p, sets).unwrap();
        let report = validate_enforcement(&p, &t, &short, false);
        assert!(report.violations.contains(&Violation::Unreachable { holder: "b".into(), target: "a".into() }));

        let mut sets = good.sets().to_vec();
        sets[idx(&p, "c")] = vec![idx(&p, "c"), idx(&p, "e")];
        let wide = KeyAllocation::from_sets(&p, sets).unwrap();
        let report = validate_enforcement(&p, &t, &wide, false);
        assert!(report.violations.contains(&Violation::Overreach {
            holder: "c".into(),
            start: "e".into(),
            target: "e".into()
        }));
    }

    #[test]
    fn redundant_allocation_is_valid_but_not_minimal() {
        let p = sample();
        let t = alt_tree(&p);
        let mut sets = minimal_allocation(&p, &t).unwrap().sets().to_vec();
        sets[idx(&p, "d")].push(idx(&p, "a"));
        let extra = KeyAllocation::from_sets(&p, sets).unwrap();
        assert!(validate_enforcement(&p, &t, &extra, false).is_valid());
        let report = validate_enforcement(&p, &t, &extra, true);
        assert!(matches!(report.violations.as_slice(), [Violation::NotMinimal { holder, .. }] if holder == "d"));
    }

    #[test]
    fn alt_tree_metrics() {
        let p = sample();
        let t = alt_tree(&p);
        let a = minimal_allocation(&p, &t).unwrap();
        let m = metrics(&p, &UserAssignment::uniform(&p, 1), &t, &a);
        assert_eq!(m.k_total, 11);
        assert_eq!(m.k_hat, 11);
        assert_eq!(m.k_max, 2);
        assert_eq!(m.p, 0);
        // h -> g -> d -> c -> a
        assert_eq!(m.d_max, 4);
        let json = serde_json::to_value(m).unwrap();
        assert!(json.get("K_total").is_some() && json.get("K_hat").is_some());
    }

    #[test]
    fn singleton_metrics() {
        let p = Poset::new(&["only"], &[]).unwrap();
        let users = UserAssignment::uniform(&p, 1);
        let t = min_weight_out_tree(&p, &users, p.cover_arcs()).unwrap();
        let a = minimal_allocation(&p, &t).unwrap();
        let m = metrics(&p, &users, &t, &a);
        assert_eq!((m.k_total, m.d_max), (1, 0));
    }

    #[test]
    fn export_round_trip() {
        let p = sample();
        let a = minimal_allocation(&p, &alt_tree(&p)).unwrap();
        let e = a.to_export(&p);
        assert_eq!(e.starts["f"], ["d", "f"]);
        assert_eq!(KeyAllocation::from_export(&p, &e).unwrap(), a);
    }
}
