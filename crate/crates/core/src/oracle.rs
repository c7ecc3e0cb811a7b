//! Brute-force oracles and the verification suite.
//!
//! Everything here recomputes its answer from the order relation alone
//! (exhaustive tree enumeration, literal set-builder evaluation, subset
//! search) so that it can certify the optimised code paths at small scale.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::allocation::{metrics, minimal_allocation, validate_enforcement, KeyAllocation};
use crate::error::{Error, Result};
use crate::kdf::{derive, setup};
use crate::poset::{transitive_closure, transitive_reduction, Poset, Policy, UserAssignment, DEFAULT_ROOT_LABEL};
use crate::tree::{min_leaf_min_weight_out_tree, min_weight_out_tree, DerivationOutTree, WeightFunction};

/// Upper bound on the number of trees [`enumerate_out_trees`] will produce.
pub const MAX_ENUMERATED_TREES: u128 = 1_000_000;

/// Parameters of a seeded random poset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomPosetSpec {
    /// Real elements; a virtual root may add one more.
    pub element_count: usize,
    pub edge_density: f64,
    pub seed: u64,
}

impl RandomPosetSpec {
    /// Random DAG over a shuffled label order, normalised and rooted.
    pub fn generate(&self) -> Result<Poset> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let labels: Vec<String> = (0..self.element_count)
            .map(|i| {
                if self.element_count <= 26 {
                    char::from(b'a' + i as u8).to_string()
                } else {
                    format!("x{i:03}")
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.shuffle(&mut rng);
        let mut arcs = Vec::new();
        for i in 0..order.len() {
            for j in i + 1..order.len() {
                if rng.gen_bool(self.edge_density.clamp(0.0, 1.0)) {
                    arcs.push((labels[order[i]].clone(), labels[order[j]].clone()));
                }
            }
        }
        Poset::new(&labels, &arcs)?.augment_root(DEFAULT_ROOT_LABEL)
    }

    /// Zero to three users per real element.
    pub fn users(&self, poset: &Poset) -> UserAssignment {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_0000_0005_e75a);
        let counts = (0..poset.len()).map(|x| if poset.is_virtual(x) { 0 } else { rng.gen_range(0..=3) }).collect();
        UserAssignment::from_vec(poset, counts).expect("virtual root gets no users")
    }

    /// Parameters for the `index`-th instance of a suite seeded with `base`.
    pub fn for_suite(base: u64, index: u64) -> Self {
        let seed = base.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { element_count: rng.gen_range(1..=7), edge_density: rng.gen_range(0.1..0.7), seed }
    }
}

/// Every spanning out-tree over the given arcs, via the Cartesian product of
/// per-vertex in-arc choices.
#[derive(Debug)]
pub struct OutTrees<'a> {
    poset: &'a Poset,
    root: usize,
    choices: Vec<Vec<usize>>,
    counter: Vec<usize>,
    total: u128,
    done: bool,
}

impl OutTrees<'_> {
    pub fn total(&self) -> u128 {
        self.total
    }
}

impl Iterator for OutTrees<'_> {
    type Item = DerivationOutTree;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let parent = (0..self.poset.len())
            .map(|x| (x != self.root).then(|| self.choices[x][self.counter[x]]))
            .collect();
        // Odometer increment.
        self.done = true;
        for x in 0..self.counter.len() {
            if x == self.root {
                continue;
            }
            self.counter[x] += 1;
            if self.counter[x] < self.choices[x].len() {
                self.done = false;
                break;
            }
            self.counter[x] = 0;
        }
        Some(DerivationOutTree::from_parents(self.poset, parent).expect("arcs respect the order"))
    }
}

pub fn enumerate_out_trees<'a>(poset: &'a Poset, arcs: &[(usize, usize)]) -> Result<OutTrees<'a>> {
    let root = poset.require_root()?;
    let mut choices = vec![Vec::new(); poset.len()];
    for &(y, z) in arcs {
        if !poset.gt(y, z) {
            return Err(Error::NotInOrder { upper: poset.label(y).into(), lower: poset.label(z).into() });
        }
        choices[z].push(y);
    }
    let mut total: u128 = 1;
    for (x, c) in choices.iter_mut().enumerate() {
        c.sort_unstable();
        c.dedup();
        if x == root {
            continue;
        }
        if c.is_empty() {
            return Err(Error::Unreachable(poset.label(x).to_string()));
        }
        total = total.saturating_mul(c.len() as u128);
        if total > MAX_ENUMERATED_TREES {
            return Err(Error::InstanceTooLarge(total));
        }
    }
    Ok(OutTrees { poset, root, counter: vec![0; poset.len()], choices, total, done: false })
}

/// `{x : x >= z and not x >= y}`, straight from the definition.
pub fn dependents_by_definition(poset: &Poset, y: usize, z: usize) -> BTreeSet<usize> {
    (0..poset.len()).filter(|&x| poset.ge(x, z) && !poset.ge(x, y)).collect()
}

fn weight_by_definition(poset: &Poset, users: &UserAssignment, y: usize, z: usize) -> u64 {
    dependents_by_definition(poset, y, z).into_iter().map(|x| users.count(x)).sum()
}

/// Results of one exhaustive pass over all spanning out-trees.
#[derive(Debug, Clone)]
pub struct Exhaustive {
    pub trees: u128,
    pub min_weight: u64,
    /// First minimum-weight tree in enumeration order.
    pub best: DerivationOutTree,
    pub min_leaves: usize,
    /// Whether every minimum-weight tree uses cover arcs only.
    pub min_trees_use_covers_only: bool,
}

pub fn exhaustive(poset: &Poset, users: &UserAssignment, arcs: &[(usize, usize)]) -> Result<Exhaustive> {
    let weights: BTreeMap<(usize, usize), u64> =
        arcs.iter().map(|&(y, z)| ((y, z), weight_by_definition(poset, users, y, z))).collect();
    let covers: BTreeSet<(usize, usize)> = poset.cover_arcs().iter().copied().collect();
    let trees = enumerate_out_trees(poset, arcs)?;
    let total = trees.total();
    let mut best: Option<(u64, DerivationOutTree, usize, bool)> = None;
    for t in trees {
        let w: u64 = t.arcs().map(|a| weights[&a]).sum();
        let leaves = t.leaf_count();
        let covers_only = t.arcs().all(|a| covers.contains(&a));
        match &mut best {
            Some((bw, _, bl, bc)) if w == *bw => {
                *bl = (*bl).min(leaves);
                *bc &= covers_only;
            }
            Some((bw, ..)) if w > *bw => {}
            _ => best = Some((w, t, leaves, covers_only)),
        }
    }
    let (min_weight, best, min_leaves, min_trees_use_covers_only) = best.expect("at least one tree");
    Ok(Exhaustive { trees: total, min_weight, best, min_leaves, min_trees_use_covers_only })
}

/// Exhaustive minimum total arc weight and a tree attaining it.
pub fn brute_min_weight(
    poset: &Poset,
    users: &UserAssignment,
    arcs: &[(usize, usize)],
) -> Result<(u64, DerivationOutTree)> {
    let e = exhaustive(poset, users, arcs)?;
    Ok((e.min_weight, e.best))
}

/// Literal evaluation of the minimal allocation's set-builder definition.
pub fn allocation_by_definition(poset: &Poset, tree: &DerivationOutTree) -> KeyAllocation {
    let n = poset.len();
    let root = tree.root();
    let sets = (0..n)
        .map(|x| {
            if x == root {
                return vec![x];
            }
            (0..n)
                .filter(|&z| (0..n).any(|y| tree.parent(z) == Some(y) && poset.ge(x, z) && !poset.ge(x, y)))
                .collect()
        })
        .collect();
    KeyAllocation::from_sets(poset, sets).expect("indices in range")
}

/// Labels whose secrets a coalition can compute: the tree closure of the
/// union of its members' start points.
pub fn coalition_reachability(
    tree: &DerivationOutTree,
    allocation: &KeyAllocation,
    coalition: &[usize],
) -> BTreeSet<usize> {
    let children = tree.children();
    let mut seen = BTreeSet::new();
    let mut stack: Vec<usize> = coalition.iter().flat_map(|&v| allocation.get(v).iter().copied()).collect();
    while let Some(v) = stack.pop() {
        if seen.insert(v) {
            stack.extend(&children[v]);
        }
    }
    seen
}

/// Size of a maximum antichain by subset enumeration.
pub fn brute_width(poset: &Poset) -> Option<usize> {
    let n = poset.len();
    if n > 16 {
        return None;
    }
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        if (mask.count_ones() as usize) <= best {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if members.iter().enumerate().all(|(i, &a)| members[i + 1..].iter().all(|&b| !poset.comparable(a, b))) {
            best = members.len();
        }
    }
    Some(best)
}

/// All chains `x1 > x2 > ... > xp` with `p >= 3`, capped at `limit`.
fn chains_of_length_three_plus(poset: &Poset, limit: usize) -> Vec<Vec<usize>> {
    fn extend(poset: &Poset, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if path.len() >= 3 {
            out.push(path.clone());
        }
        let last = *path.last().expect("non-empty");
        for next in 0..poset.len() {
            if poset.gt(last, next) {
                path.push(next);
                extend(poset, path, out, limit);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for start in 0..poset.len() {
        extend(poset, &mut vec![start], &mut out, limit);
    }
    out
}

/// Outcome of one named check across all instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub instances: usize,
    pub skipped: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub instances: usize,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn record(&mut self, name: &str, outcome: Outcome) {
        let idx = match self.checks.iter().position(|c| c.name == name) {
            Some(i) => i,
            None => {
                self.checks.push(CheckResult {
                    name: name.to_string(),
                    passed: true,
                    instances: 0,
                    skipped: 0,
                    failures: 0,
                    counterexample: None,
                });
                self.checks.len() - 1
            }
        };
        let c = &mut self.checks[idx];
        match outcome {
            Outcome::Pass => c.instances += 1,
            Outcome::Skip => c.skipped += 1,
            Outcome::Fail(cx) => {
                c.instances += 1;
                c.failures += 1;
                c.passed = false;
                c.counterexample.get_or_insert(cx);
            }
        }
    }
}

enum Outcome {
    Pass,
    Skip,
    Fail(Value),
}

fn outcome(ok: bool, cx: impl FnOnce() -> Value) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Fail(cx())
    }
}

fn describe(poset: &Poset) -> Value {
    json!({
        "elements": poset.labels(),
        "covers": poset.covers().into_iter().collect::<Vec<_>>(),
    })
}

fn random_tree(poset: &Poset, rng: &mut ChaCha8Rng) -> DerivationOutTree {
    let parent = (0..poset.len())
        .map(|z| {
            let above: Vec<usize> = (0..poset.len()).filter(|&y| poset.gt(y, z)).collect();
            above.choose(rng).copied()
        })
        .collect();
    DerivationOutTree::from_parents(poset, parent).expect("random parents lie above")
}

/// Runs every check on one instance. `seed` drives the random trees,
/// perturbations, coalitions and keystore.
pub fn verify_instance(report: &mut VerificationReport, poset: &Poset, users: &UserAssignment, seed: u64) {
    report.instances += 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = poset.len();
    let covers = poset.cover_arcs().to_vec();
    let closure = poset.closure_arcs();
    let cx = || describe(poset);

    // Structure.
    let elements: BTreeSet<String> = poset.labels().iter().cloned().collect();
    let rt = transitive_reduction(&poset.closure(), &elements)
        .and_then(|red| Ok((red.clone(), transitive_closure(&red, &elements)?)));
    report.record(
        "reduction_round_trip",
        outcome(matches!(&rt, Ok((red, clo)) if *red == poset.covers() && *clo == poset.closure()), cx),
    );
    match brute_width(poset) {
        Some(w) => report.record("width_vs_max_antichain", outcome(w == poset.width(), cx)),
        None => report.record("width_vs_max_antichain", Outcome::Skip),
    }

    // Tree optimality.
    let built = min_weight_out_tree(poset, users, &covers);
    let built_closure = min_weight_out_tree(poset, users, &closure);
    let min_leaf = min_leaf_min_weight_out_tree(poset, users, &covers);
    let (Ok(tree), Ok(tree_closure), Ok(min_leaf)) = (built, built_closure, min_leaf) else {
        report.record("min_weight_tree", Outcome::Fail(json!({"error": "tree builder failed", "poset": cx()})));
        return;
    };
    let w_cov = WeightFunction::compute(poset, users, &covers).expect("covers are in the order");
    let w_all = WeightFunction::compute(poset, users, &closure).expect("closure is the order");
    let built_weight = tree.total_weight(&w_cov).expect("tree uses covers");
    let built_closure_weight = tree_closure.total_weight(&w_all).expect("tree uses closure");
    let min_leaf_weight = min_leaf.total_weight(&w_cov).expect("tree uses covers");

    match (exhaustive(poset, users, &covers), exhaustive(poset, users, &closure)) {
        (Ok(ec), Ok(ea)) => {
            report.record(
                "min_weight_tree",
                outcome(built_weight == ec.min_weight, || {
                    json!({"poset": cx(), "built": built_weight, "oracle": ec.min_weight})
                }),
            );
            report.record(
                "covers_vs_closure_minimum",
                outcome(ec.min_weight == ea.min_weight && built_closure_weight == ea.min_weight, || {
                    json!({"poset": cx(), "covers": ec.min_weight, "closure": ea.min_weight,
                           "built_closure": built_closure_weight})
                }),
            );
            report.record(
                "min_leaf_tree",
                outcome(min_leaf_weight == ec.min_weight && min_leaf.leaf_count() == ec.min_leaves, || {
                    json!({"poset": cx(), "weight": min_leaf_weight, "leaves": min_leaf.leaf_count(),
                           "oracle_weight": ec.min_weight, "oracle_leaves": ec.min_leaves})
                }),
            );
            if users.all_positive_on(poset) {
                report.record("positive_users_use_covers_only", outcome(ea.min_trees_use_covers_only, cx));
            } else {
                report.record("positive_users_use_covers_only", Outcome::Skip);
            }
        }
        _ => {
            for name in ["min_weight_tree", "covers_vs_closure_minimum", "min_leaf_tree", "positive_users_use_covers_only"]
            {
                report.record(name, Outcome::Skip);
            }
        }
    }

    // Allocation identities over the built tree and a few random ones.
    let mut trees = vec![tree.clone(), tree_closure, min_leaf];
    trees.extend((0..3).map(|_| random_tree(poset, &mut rng)));
    let root = poset.root().expect("rooted");
    for t in &trees {
        let fast = minimal_allocation(poset, t).expect("tree matches poset");
        let literal = allocation_by_definition(poset, t);
        report.record(
            "allocation_vs_definition",
            outcome(fast == literal, || json!({"poset": cx(), "tree": t.to_export(poset)})),
        );
        let lhs: u64 = (0..n).filter(|&x| x != root).map(|x| users.count(x) * fast.get(x).len() as u64).sum();
        let rhs = t.total_weight(&w_all).expect("closure covers every tree arc");
        report.record(
            "keys_equal_weight_sum",
            outcome(lhs == rhs, || json!({"poset": cx(), "tree": t.to_export(poset), "keys": lhs, "weight": rhs})),
        );
        let m = metrics(poset, users, t, &fast);
        report.record(
            "k_hat_identity",
            outcome(m.k_hat == users.count(root) + rhs, || json!({"poset": cx(), "k_hat": m.k_hat})),
        );
        let report_valid = validate_enforcement(poset, t, &fast, true);
        report.record(
            "minimal_allocation_is_valid",
            outcome(report_valid.is_valid(), || json!({"poset": cx(), "violations": report_valid.violations})),
        );
        let disjoint = (0..n).all(|x| {
            let mut covered: Vec<usize> = fast.get(x).iter().flat_map(|&z| t.descendants(z)).collect();
            let len = covered.len();
            covered.sort_unstable();
            covered.dedup();
            covered.len() == len && covered == poset.down_indices(x)
        });
        report.record("disjoint_coverage", outcome(disjoint, || json!({"poset": cx(), "tree": t.to_export(poset)})));

        // Perturb: any still-valid allocation must contain the minimal one.
        let mut ok = true;
        for _ in 0..8 {
            let mut sets = fast.sets().to_vec();
            let x = rng.gen_range(0..n);
            let z = rng.gen_range(0..n);
            if rng.gen_bool(0.5) {
                sets[x].push(z);
            } else {
                sets[x].retain(|&v| v != z);
            }
            let candidate = KeyAllocation::from_sets(poset, sets).expect("in range");
            if validate_enforcement(poset, t, &candidate, false).is_valid() {
                ok &= (0..n).all(|x| fast.get(x).iter().all(|z| candidate.get(x).contains(z)));
            }
        }
        report.record("valid_allocations_contain_minimal", outcome(ok, || json!({"poset": cx()})));
    }

    // Dependent-set structure over every triple z < y < x.
    let mut nesting_ok = true;
    for x in 0..n {
        for y in 0..n {
            if !poset.gt(x, y) {
                continue;
            }
            for z in 0..n {
                if !poset.gt(y, z) {
                    continue;
                }
                let gxy = dependents_by_definition(poset, x, y);
                let gyz = dependents_by_definition(poset, y, z);
                let gxz = dependents_by_definition(poset, x, z);
                nesting_ok &= gxy.is_disjoint(&gyz) && gxz.is_superset(&gxy) && gxz.is_superset(&gyz);
            }
        }
    }
    report.record("dependents_disjoint_superset", outcome(nesting_ok, cx));

    let chains = chains_of_length_three_plus(poset, 20_000);
    let path_ok = chains.iter().all(|c| {
        let direct = w_all.get((c[0], c[c.len() - 1])).expect("closure arc");
        let stepwise: u64 = c.windows(2).map(|w| w_all.get((w[0], w[1])).expect("closure arc")).sum();
        direct >= stepwise
    });
    report.record("path_weight_superadditive", outcome(path_ok, cx));

    // Cryptographic end-to-end.
    let allocation = minimal_allocation(poset, &tree).expect("tree matches poset");
    let mut key_rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    match setup(poset, &tree, &allocation, &mut key_rng) {
        Ok((store, bundles)) => {
            let mut bad = None;
            for x in 0..n {
                for y in 0..n {
                    let got = derive(poset, &tree, &allocation, &bundles[x], poset.label(y));
                    let ok = if poset.ge(x, y) {
                        matches!(&got, Ok(k) if k == store.key(y))
                    } else {
                        matches!(got, Err(Error::Unauthorized { .. }))
                    };
                    if !ok && bad.is_none() {
                        bad = Some((x, y));
                    }
                }
            }
            report.record(
                "derive_matches_keystore",
                outcome(bad.is_none(), || {
                    let (x, y) = bad.expect("failure recorded");
                    json!({"poset": cx(), "holder": poset.label(x), "target": poset.label(y)})
                }),
            );
        }
        Err(e) => report.record("derive_matches_keystore", Outcome::Fail(json!({"error": e.to_string()}))),
    }

    let mut coalitions: Vec<Vec<usize>> = (0..n).map(|x| vec![x]).collect();
    coalitions.push(Vec::new());
    for _ in 0..4 {
        let size = rng.gen_range(2..=3).min(n);
        let mut members: Vec<usize> = (0..n).collect();
        members.shuffle(&mut rng);
        members.truncate(size);
        coalitions.push(members);
    }
    for coalition in coalitions {
        let reach = coalition_reachability(&tree, &allocation, &coalition);
        let expected: BTreeSet<usize> = coalition.iter().flat_map(|&v| poset.down_indices(v)).collect();
        report.record(
            "coalition_reach_is_union_of_down_sets",
            outcome(reach == expected, || {
                json!({"poset": cx(), "coalition": coalition.iter().map(|&v| poset.label(v)).collect::<Vec<_>>()})
            }),
        );
    }
}

/// Runs the suite on an optional fixture policy and `seeds` random instances.
pub fn run_suite(fixture: Option<&Policy>, seeds: u64, base_seed: u64) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    if let Some(policy) = fixture {
        verify_instance(&mut report, &policy.poset, &policy.users, base_seed);
    }
    for i in 0..seeds {
        let spec = RandomPosetSpec::for_suite(base_seed, i);
        let poset = spec.generate()?;
        let users = spec.users(&poset);
        verify_instance(&mut report, &poset, &users, spec.seed);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{sample, alt_tree};

    #[test]
    fn sample_tree_count() {
        let p = sample();
        let trees = enumerate_out_trees(&p, p.cover_arcs()).unwrap();
        assert_eq!(trees.total(), 8);
        let all: Vec<_> = trees.collect();
        assert_eq!(all.len(), 8);
        let distinct: BTreeSet<Vec<(usize, usize)>> = all.iter().map(|t| t.arcs().collect()).collect();
        assert_eq!(distinct.len(), 8);
    }

    #[test]
    fn trivial_tree_counts() {
        let chain = Poset::new(&["a", "b", "c", "d"], &[("d", "c"), ("c", "b"), ("b", "a")]).unwrap();
        assert_eq!(enumerate_out_trees(&chain, chain.cover_arcs()).unwrap().count(), 1);
        let anti = Poset::new(&["x", "y"], &[]).unwrap().augment_root("⊤").unwrap();
        assert_eq!(enumerate_out_trees(&anti, anti.cover_arcs()).unwrap().count(), 1);
        let single = Poset::new(&["r"], &[]).unwrap();
        assert_eq!(enumerate_out_trees(&single, &[]).unwrap().count(), 1);
    }

    #[test]
    fn enumeration_cap() {
        // A 12-chain has 11! closure trees.
        let names: Vec<String> = (0..12).map(|i| format!("{i:02}")).collect();
        let arcs: Vec<(String, String)> = names.windows(2).map(|w| (w[1].clone(), w[0].clone())).collect();
        let p = Poset::new(&names, &arcs).unwrap();
        assert!(matches!(enumerate_out_trees(&p, &p.closure_arcs()), Err(Error::InstanceTooLarge(_))));
    }

    #[test]
    fn sample_brute_force() {
        let p = sample();
        let users = UserAssignment::uniform(&p, 1);
        let (w, _) = brute_min_weight(&p, &users, p.cover_arcs()).unwrap();
        assert_eq!(w, 10);
        let (w, _) = brute_min_weight(&p, &users, &p.closure_arcs()).unwrap();
        assert_eq!(w, 10);
        let (w, _) = brute_min_weight(&p, &UserAssignment::uniform(&p, 0), p.cover_arcs()).unwrap();
        assert_eq!(w, 0);
        let e = exhaustive(&p, &users, p.cover_arcs()).unwrap();
        assert_eq!(e.min_leaves, 3);
        assert!(exhaustive(&p, &users, &p.closure_arcs()).unwrap().min_trees_use_covers_only);
    }

    #[test]
    fn sample_allocation_by_definition() {
        let p = sample();
        let t = alt_tree(&p);
        let lit = allocation_by_definition(&p, &t);
        assert_eq!(lit.total(), 11);
        assert_eq!(lit, minimal_allocation(&p, &t).unwrap());
        let single = Poset::new(&["r"], &[]).unwrap();
        let t = DerivationOutTree::from_parents(&single, vec![None]).unwrap();
        assert_eq!(allocation_by_definition(&single, &t).get(0), &[0]);
    }

    #[test]
    fn sample_coalitions() {
        let p = sample();
        let t = alt_tree(&p);
        let a = minimal_allocation(&p, &t).unwrap();
        let i = |l: &str| p.index_of(l).unwrap();
        let reach = coalition_reachability(&t, &a, &[i("b"), i("e")]);
        let labels: Vec<&str> = reach.iter().map(|&x| p.label(x)).collect();
        assert_eq!(labels, ["a", "b", "c", "e"]);
        assert_eq!(coalition_reachability(&t, &a, &[i("h")]).len(), 8);
        assert!(coalition_reachability(&t, &a, &[]).is_empty());
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = RandomPosetSpec { element_count: 7, edge_density: 0.4, seed: 42 };
        assert_eq!(spec.generate().unwrap(), spec.generate().unwrap());
        let p = spec.generate().unwrap();
        assert_eq!(spec.users(&p), spec.users(&p));
        assert!(p.root().is_some());
    }

    #[test]
    fn suite_on_fixture_passes() {
        let p = sample();
        let policy = Policy { users: UserAssignment::uniform(&p, 1), poset: p };
        let report = run_suite(Some(&policy), 20, 7).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{c:?}");
        }
        assert_eq!(report.instances, 21);
    }
}
