//! Comparison schemes: the chain-partition scheme and the parameter counts of
//! the basic, iterative and direct schemes.

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::allocation::SchemeMetrics;
use crate::error::{Error, Result};
use crate::kdf::{prf, Key, SECRET_LEN};
use crate::poset::{ChainPartition, Poset, UserAssignment};

/// Keys chained down each chain of a partition. A holder of `x` needs, for
/// every chain meeting its down-set, the key of the highest element of that
/// chain below `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainScheme {
    partition: ChainPartition,
    chains: Vec<Vec<usize>>,
    /// `(chain, position)` of every element.
    position: Vec<(usize, usize)>,
    start_points: Vec<Vec<usize>>,
}

impl ChainScheme {
    pub fn build(poset: &Poset, partition: &ChainPartition) -> Result<Self> {
        let chains = partition.resolve(poset)?;
        let mut position = vec![(0, 0); poset.len()];
        for (c, chain) in chains.iter().enumerate() {
            for (i, &x) in chain.iter().enumerate() {
                position[x] = (c, i);
            }
        }
        let start_points = (0..poset.len())
            .map(|x| {
                let mut starts: Vec<usize> =
                    chains.iter().filter_map(|chain| chain.iter().copied().find(|&y| poset.ge(x, y))).collect();
                starts.sort_unstable();
                starts
            })
            .collect();
        Ok(Self { partition: partition.clone(), chains, position, start_points })
    }

    pub fn partition(&self) -> &ChainPartition {
        &self.partition
    }

    pub fn start_points(&self, x: usize) -> &[usize] {
        &self.start_points[x]
    }

    pub fn start_labels(&self, poset: &Poset, x: usize) -> Vec<String> {
        self.start_points[x].iter().map(|&z| poset.label(z).to_string()).collect()
    }

    pub fn total_keys(&self) -> usize {
        self.start_points.iter().map(Vec::len).sum()
    }

    /// Elements whose keys follow from `x`'s start points by descending chains.
    pub fn derivable(&self, x: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.start_points[x]
            .iter()
            .flat_map(|&z| {
                let (c, i) = self.position[z];
                self.chains[c][i..].iter().copied()
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn metrics(&self, users: &UserAssignment) -> SchemeMetrics {
        let d_max = (0..self.start_points.len())
            .flat_map(|x| self.start_points[x].iter())
            .map(|&z| {
                let (c, i) = self.position[z];
                self.chains[c].len() - 1 - i
            })
            .max()
            .unwrap_or(0);
        SchemeMetrics {
            k_total: self.total_keys() as u64,
            k_hat: self
                .start_points
                .iter()
                .enumerate()
                .map(|(x, s)| users.count(x) * s.len() as u64)
                .sum(),
            k_max: self.start_points.iter().map(Vec::len).max().unwrap_or(0) as u64,
            d_max: d_max as u64,
            p: 0,
        }
    }

    /// A random key for each chain top; each successor key is the PRF of its
    /// predecessor's key on the empty message.
    pub fn generate_keys<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Result<Vec<Key>> {
        let mut keys = vec![Key::from_bytes([0; SECRET_LEN]); self.position.len()];
        for chain in &self.chains {
            let mut top = [0u8; SECRET_LEN];
            rng.try_fill_bytes(&mut top).map_err(|e| Error::Randomness(e.to_string()))?;
            let mut cur = Key::from_bytes(top);
            keys[chain[0]] = cur;
            for &x in &chain[1..] {
                cur = Key::from_bytes(prf(cur.as_bytes(), b"")?);
                keys[x] = cur;
            }
        }
        Ok(keys)
    }

    /// Derives `target`'s key from the start-point keys held by `holder`.
    pub fn derive(&self, poset: &Poset, holder: usize, held: &[Key], target: usize) -> Result<Key> {
        if !poset.ge(holder, target) {
            return Err(Error::Unauthorized {
                holder: poset.label(holder).to_string(),
                target: poset.label(target).to_string(),
            });
        }
        let starts = &self.start_points[holder];
        if held.len() != starts.len() {
            return Err(Error::MalformedBundle("held keys do not match start points".into()));
        }
        let (c, i) = self.position[target];
        let (slot, &z) = starts
            .iter()
            .enumerate()
            .find(|(_, &z)| self.position[z].0 == c)
            .expect("every chain meeting the down-set has a start point");
        let mut key = held[slot];
        for _ in self.position[z].1..i {
            key = Key::from_bytes(prf(key.as_bytes(), b"")?);
        }
        Ok(key)
    }
}

/// The three public-information schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineScheme {
    /// Every holder gets every key it may use.
    Basic,
    /// One key per holder; an encrypted key published per cover arc.
    Iterative,
    /// One key per holder; an encrypted key published per order pair.
    Direct,
}

/// Table parameters for a baseline scheme. `K_total` assumes one holder per
/// label; `K_hat` weights by the user assignment.
pub fn baseline_params(poset: &Poset, users: &UserAssignment, scheme: BaselineScheme) -> SchemeMetrics {
    let n = poset.len() as u64;
    let closure = poset.closure_len() as u64;
    let user_total: u64 = users.counts().iter().sum();
    match scheme {
        BaselineScheme::Basic => SchemeMetrics {
            k_total: n + closure,
            k_hat: (0..poset.len()).map(|x| users.count(x) * poset.down_indices(x).len() as u64).sum(),
            k_max: (0..poset.len()).map(|x| poset.down_indices(x).len() as u64).max().unwrap_or(0),
            d_max: 0,
            p: 0,
        },
        BaselineScheme::Iterative => SchemeMetrics {
            k_total: n,
            k_hat: user_total,
            k_max: 1,
            d_max: poset.height() as u64,
            p: poset.cover_arcs().len() as u64,
        },
        BaselineScheme::Direct => SchemeMetrics {
            k_total: n,
            k_hat: user_total,
            k_max: 1,
            d_max: closure.min(1),
            p: closure,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn sample_chains() -> ChainPartition {
        let chain = |ls: &[&str]| ls.iter().map(|s| s.to_string()).collect();
        ChainPartition { chains: vec![chain(&["h", "g", "e", "c", "a"]), chain(&["f", "d", "b"])] }
    }

    #[test]
    fn sample_chains_start_points() {
        let p = sample();
        let s = ChainScheme::build(&p, &sample_chains()).unwrap();
        assert_eq!(s.start_labels(&p, p.index_of("d").unwrap()), ["c", "d"]);
        assert_eq!(s.total_keys(), 13);
        for x in 0..p.len() {
            assert_eq!(s.derivable(x), p.down_indices(x));
            assert!(s.start_points(x).len() <= 2);
        }
    }

    #[test]
    fn total_order_one_chain() {
        let p = Poset::new(&["a", "b", "c"], &[("c", "b"), ("b", "a")]).unwrap();
        let s = ChainScheme::build(&p, &p.min_chain_partition()).unwrap();
        for x in 0..3 {
            assert_eq!(s.start_points(x), &[x]);
        }
        assert_eq!(s.total_keys(), 3);
    }

    #[test]
    fn baseline_params_on_sample() {
        let p = sample();
        let users = UserAssignment::uniform(&p, 1);
        let basic = baseline_params(&p, &users, BaselineScheme::Basic);
        assert_eq!((basic.k_total, basic.p, basic.d_max), (31, 0, 0));
        assert_eq!(basic.k_max, 8);
        let it = baseline_params(&p, &users, BaselineScheme::Iterative);
        assert_eq!((it.k_total, it.k_max, it.p), (8, 1, 10));
        // h > g > e > c > a
        assert_eq!(it.d_max, 4);
        let direct = baseline_params(&p, &users, BaselineScheme::Direct);
        assert_eq!((direct.k_total, direct.p, direct.d_max), (8, 23, 1));
    }

    #[test]
    fn chain_keys_derive() {
        let p = sample();
        let s = ChainScheme::build(&p, &sample_chains()).unwrap();
        let keys = s.generate_keys(&mut ChaCha20Rng::from_seed([5; 32])).unwrap();
        for x in 0..p.len() {
            let held: Vec<Key> = s.start_points(x).iter().map(|&z| keys[z]).collect();
            for y in 0..p.len() {
                let got = s.derive(&p, x, &held, y);
                if p.ge(x, y) {
                    assert_eq!(got.unwrap(), keys[y]);
                } else {
                    assert!(matches!(got, Err(Error::Unauthorized { .. })));
                }
            }
        }
    }

    #[test]
    fn chain_metrics() {
        let p = sample();
        let s = ChainScheme::build(&p, &sample_chains()).unwrap();
        let m = s.metrics(&UserAssignment::uniform(&p, 1));
        assert_eq!((m.k_total, m.k_hat, m.k_max, m.d_max, m.p), (13, 13, 2, 4, 0));
    }
}
