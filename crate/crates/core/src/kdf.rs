//! PRF-based secret and key generation down a derivation tree.
//!
//! The root secret is random. Every other secret is the PRF of its tree
//! parent's secret applied to its own label, and each label's key is the PRF
//! of its own secret applied to its label. Keys are never fed back into the
//! PRF as keys, so an encryption key does not help derive anything else.
//! A holder of label `x` receives the secrets of the start points in
//! `minimal_allocation(x)` and nothing is published.

use std::collections::BTreeMap;
use std::fmt;

use hmac::{Hmac, Mac};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::Sha256;

use crate::allocation::{minimal_allocation, KeyAllocation};
use crate::error::{Error, Result};
use crate::poset::Poset;
use crate::tree::{DerivationOutTree, TreeExport};

/// Secret and key length in bytes.
pub const SECRET_LEN: usize = 32;

macro_rules! material {
    ($name:ident, $what:literal) => {
        #[doc = concat!("A 256-bit ", $what, ".")]
        #[derive(Clone, Copy, PartialEq, Eq, Hash)]
        pub struct $name([u8; SECRET_LEN]);

        impl $name {
            pub fn from_bytes(bytes: [u8; SECRET_LEN]) -> Self {
                Self(bytes)
            }

            pub fn as_bytes(&self) -> &[u8; SECRET_LEN] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }

            pub fn from_hex(s: &str) -> Result<Self> {
                let mut out = [0u8; SECRET_LEN];
                hex::decode_to_slice(s, &mut out).map_err(|e| Error::Hex(e.to_string()))?;
                Ok(Self(out))
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!(stringify!($name), "({}..)"), &self.to_hex()[..8])
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                Self::from_hex(&s).map_err(serde::de::Error::custom)
            }
        }
    };
}

material!(Secret, "derivation secret");
material!(Key, "encryption key");

/// HMAC-SHA-256 with an arbitrary-length key.
pub fn hmac_sha256(key: &[u8], message: &[u8]) -> [u8; 32] {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(key).expect("HMAC accepts any key length");
    mac.update(message);
    mac.finalize().into_bytes().into()
}

/// The PRF: HMAC-SHA-256 keyed with exactly 32 bytes.
pub fn prf(key: &[u8], message: &[u8]) -> Result<[u8; SECRET_LEN]> {
    if key.len() != SECRET_LEN {
        return Err(Error::KeyLength { expected: SECRET_LEN, actual: key.len() });
    }
    Ok(hmac_sha256(key, message))
}

/// Checks the HMAC-SHA-256 instantiation against RFC 4231 test cases 1 and 2.
pub fn self_check() -> Result<()> {
    let cases: [(&[u8], &[u8], &str); 2] = [
        (
            &[0x0b; 20],
            b"Hi There",
            "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7",
        ),
        (
            b"Jefe",
            b"what do ya want for nothing?",
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843",
        ),
    ];
    for (key, msg, expected) in cases {
        if hex::encode(hmac_sha256(key, msg)) != expected {
            return Err(Error::SelfCheck);
        }
    }
    Ok(())
}

fn encode(label: &str) -> &[u8] {
    label.as_bytes()
}

fn child_secret(parent: &Secret, child_label: &str) -> Secret {
    Secret(hmac_sha256(parent.as_bytes(), encode(child_label)))
}

fn key_from_secret(secret: &Secret, label: &str) -> Key {
    Key(hmac_sha256(secret.as_bytes(), encode(label)))
}

/// Every label's secret and key for one tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretStore {
    tree: DerivationOutTree,
    secrets: Vec<Secret>,
    keys: Vec<Key>,
}

/// `{"tree": ..., "secrets": {label: hex}, "keys": {label: hex}}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeystoreExport {
    pub tree: TreeExport,
    pub secrets: BTreeMap<String, Secret>,
    pub keys: BTreeMap<String, Key>,
}

impl SecretStore {
    pub fn tree(&self) -> &DerivationOutTree {
        &self.tree
    }

    pub fn secret(&self, x: usize) -> &Secret {
        &self.secrets[x]
    }

    pub fn key(&self, x: usize) -> &Key {
        &self.keys[x]
    }

    pub fn secrets(&self) -> &[Secret] {
        &self.secrets
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn key_for(&self, poset: &Poset, label: &str) -> Result<Key> {
        Ok(self.keys[poset.index_of(label)?])
    }

    /// The bundle handed to holders of label `x`.
    pub fn bundle(&self, poset: &Poset, allocation: &KeyAllocation, x: usize) -> SecretBundle {
        SecretBundle {
            holder: poset.label(x).to_string(),
            secrets: allocation
                .get(x)
                .iter()
                .map(|&z| (poset.label(z).to_string(), self.secrets[z]))
                .collect(),
        }
    }

    pub fn to_export(&self, poset: &Poset) -> KeystoreExport {
        let by_label = |i: usize| poset.label(i).to_string();
        KeystoreExport {
            tree: self.tree.to_export(poset),
            secrets: self.secrets.iter().enumerate().map(|(i, s)| (by_label(i), *s)).collect(),
            keys: self.keys.iter().enumerate().map(|(i, k)| (by_label(i), *k)).collect(),
        }
    }

    /// Loads a keystore and re-checks every derivation relation in it.
    pub fn from_export(poset: &Poset, export: &KeystoreExport) -> Result<Self> {
        let tree = DerivationOutTree::from_export(poset, &export.tree)?;
        let fetch = |map_len: usize| {
            if map_len != poset.len() {
                Err(Error::MalformedBundle(format!("keystore has {map_len} entries for {} labels", poset.len())))
            } else {
                Ok(())
            }
        };
        fetch(export.secrets.len())?;
        fetch(export.keys.len())?;
        let mut secrets = Vec::with_capacity(poset.len());
        let mut keys = Vec::with_capacity(poset.len());
        for label in poset.labels() {
            let missing = || Error::MalformedBundle(format!("keystore lacks `{label}`"));
            secrets.push(*export.secrets.get(label).ok_or_else(missing)?);
            keys.push(*export.keys.get(label).ok_or_else(missing)?);
        }
        for (p, c) in tree.arcs() {
            if child_secret(&secrets[p], poset.label(c)) != secrets[c] {
                return Err(Error::MalformedBundle(format!("secret of `{}` does not derive", poset.label(c))));
            }
        }
        for x in 0..poset.len() {
            if key_from_secret(&secrets[x], poset.label(x)) != keys[x] {
                return Err(Error::MalformedBundle(format!("key of `{}` does not derive", poset.label(x))));
            }
        }
        Ok(Self { tree, secrets, keys })
    }
}

/// The secrets of `minimal_allocation(holder)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecretBundle {
    pub holder: String,
    pub secrets: BTreeMap<String, Secret>,
}

/// Draws the root secret from `rng` and derives every other secret and key
/// top-down along `tree`. Returns the store and one bundle per label, in
/// label order.
pub fn setup<R: RngCore + CryptoRng>(
    poset: &Poset,
    tree: &DerivationOutTree,
    allocation: &KeyAllocation,
    rng: &mut R,
) -> Result<(SecretStore, Vec<SecretBundle>)> {
    if *allocation != minimal_allocation(poset, tree)? {
        return Err(Error::InvalidAllocation("allocation is not the minimal one for this tree".into()));
    }
    let mut root_secret = [0u8; SECRET_LEN];
    rng.try_fill_bytes(&mut root_secret).map_err(|e| Error::Randomness(e.to_string()))?;

    let n = poset.len();
    let mut secrets: Vec<Option<Secret>> = vec![None; n];
    for x in tree.top_down() {
        let s = match tree.parent(x) {
            None => Secret(root_secret),
            Some(p) => child_secret(secrets[p].as_ref().expect("parents come first"), poset.label(x)),
        };
        secrets[x] = Some(s);
    }
    let secrets: Vec<Secret> = secrets.into_iter().map(|s| s.expect("tree spans the poset")).collect();
    let keys = secrets.iter().enumerate().map(|(x, s)| key_from_secret(s, poset.label(x))).collect();
    let store = SecretStore { tree: tree.clone(), secrets, keys };
    let bundles = (0..n).map(|x| store.bundle(poset, allocation, x)).collect();
    Ok((store, bundles))
}

/// Derives the key of `target` from a holder's bundle.
///
/// Refuses before any PRF work when `target` is not below the holder. The
/// bundle must hold exactly the secrets of the holder's allocation.
pub fn derive(
    poset: &Poset,
    tree: &DerivationOutTree,
    allocation: &KeyAllocation,
    bundle: &SecretBundle,
    target: &str,
) -> Result<Key> {
    let holder = poset.index_of(&bundle.holder)?;
    let t = poset.index_of(target)?;
    if !poset.ge(holder, t) {
        return Err(Error::Unauthorized { holder: bundle.holder.clone(), target: target.to_string() });
    }
    let starts = allocation.get(holder);
    if starts.len() != bundle.secrets.len()
        || starts.iter().any(|&z| !bundle.secrets.contains_key(poset.label(z)))
    {
        return Err(Error::MalformedBundle(format!(
            "bundle for `{}` does not match its allocation",
            bundle.holder
        )));
    }
    let z = allocation
        .covering_start(tree, holder, t)
        .ok_or_else(|| Error::InvalidAllocation(format!("no start point of `{}` reaches `{target}`", bundle.holder)))?;
    let path = tree.path(z, t).expect("covering start is an ancestor");
    let mut secret = bundle.secrets[poset.label(z)];
    for &step in &path[1..] {
        secret = child_secret(&secret, poset.label(step));
    }
    Ok(key_from_secret(&secret, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{sample, alt_tree};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use sha2::Digest;
    use std::collections::HashSet;

    // Textbook HMAC over raw SHA-256, independent of the hmac crate.
    fn reference_hmac(key: &[u8], msg: &[u8]) -> [u8; 32] {
        let mut block = [0u8; 64];
        if key.len() > 64 {
            block[..32].copy_from_slice(&Sha256::digest(key));
        } else {
            block[..key.len()].copy_from_slice(key);
        }
        let ipad: Vec<u8> = block.iter().map(|b| b ^ 0x36).collect();
        let opad: Vec<u8> = block.iter().map(|b| b ^ 0x5c).collect();
        let inner = Sha256::new().chain_update(&ipad).chain_update(msg).finalize();
        Sha256::new().chain_update(&opad).chain_update(inner).finalize().into()
    }

    #[test]
    fn rfc4231_vectors_and_reference_agree() {
        self_check().unwrap();
        assert_eq!(
            hex::encode(reference_hmac(b"Jefe", b"what do ya want for nothing?")),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"
        );
        // Test case 6: 131-byte key, hashed first.
        let long = [0xaa; 131];
        let msg = b"Test Using Larger Than Block-Size Key - Hash Key First";
        assert_eq!(hmac_sha256(&long, msg), reference_hmac(&long, msg));
        assert_eq!(
            hex::encode(hmac_sha256(&long, msg)),
            "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54"
        );
    }

    proptest::proptest! {
        #[test]
        fn crate_hmac_matches_reference(
            key in proptest::collection::vec(proptest::num::u8::ANY, 0..200),
            msg in proptest::collection::vec(proptest::num::u8::ANY, 0..300),
        ) {
            proptest::prop_assert_eq!(hmac_sha256(&key, &msg), reference_hmac(&key, &msg));
        }
    }

    #[test]
    fn prf_properties() {
        let k = [7u8; 32];
        assert_eq!(prf(&k, b"a").unwrap(), prf(&k, b"a").unwrap());
        let outs: HashSet<[u8; 32]> =
            ["a", "b", "c", "d", "e", "f", "g", "h"].iter().map(|l| prf(&k, l.as_bytes()).unwrap()).collect();
        assert_eq!(outs.len(), 8);
        assert!(matches!(prf(&[0u8; 16], b"x"), Err(Error::KeyLength { actual: 16, .. })));
    }

    fn alt_tree_setup(seed: u8) -> (Poset, DerivationOutTree, KeyAllocation, SecretStore, Vec<SecretBundle>) {
        let p = sample();
        let t = alt_tree(&p);
        let a = minimal_allocation(&p, &t).unwrap();
        let mut rng = ChaCha20Rng::from_seed([seed; 32]);
        let (store, bundles) = setup(&p, &t, &a, &mut rng).unwrap();
        (p, t, a, store, bundles)
    }

    #[test]
    fn setup_follows_tree() {
        let (p, _, _, store, bundles) = alt_tree_setup(1);
        let i = |l: &str| p.index_of(l).unwrap();
        let s = |l: &str| *store.secret(i(l)).as_bytes();
        assert_eq!(s("g"), reference_hmac(&s("h"), b"g"));
        assert_eq!(s("d"), reference_hmac(&s("g"), b"d"));
        assert_eq!(s("a"), reference_hmac(&s("c"), b"a"));
        for l in p.labels() {
            assert_eq!(store.key(i(l)).as_bytes(), &reference_hmac(&s(l), l.as_bytes()));
        }
        let mut all = HashSet::new();
        for x in 0..p.len() {
            all.insert(*store.secret(x).as_bytes());
            all.insert(*store.key(x).as_bytes());
        }
        assert_eq!(all.len(), 16);
        assert_eq!(bundles.len(), 8);
        let f = &bundles[i("f")];
        assert_eq!(f.secrets.keys().collect::<Vec<_>>(), ["d", "f"]);
    }

    #[test]
    fn derive_paths() {
        let (p, t, a, store, bundles) = alt_tree_setup(2);
        let i = |l: &str| p.index_of(l).unwrap();
        assert_eq!(derive(&p, &t, &a, &bundles[i("f")], "a").unwrap(), *store.key(i("a")));
        for l in p.labels() {
            assert_eq!(derive(&p, &t, &a, &bundles[i(l)], l).unwrap(), *store.key(i(l)));
        }
        let err = derive(&p, &t, &a, &bundles[i("c")], "e").unwrap_err();
        assert!(matches!(err, Error::Unauthorized { .. }));

        let mut broken = bundles[i("f")].clone();
        broken.secrets.remove("d");
        assert!(matches!(derive(&p, &t, &a, &broken, "a"), Err(Error::MalformedBundle(_))));
    }

    #[test]
    fn singleton_store() {
        let p = Poset::new(&["r"], &[]).unwrap();
        let t = DerivationOutTree::from_parents(&p, vec![None]).unwrap();
        let a = minimal_allocation(&p, &t).unwrap();
        let (store, bundles) = setup(&p, &t, &a, &mut ChaCha20Rng::from_seed([0; 32])).unwrap();
        assert_eq!(store.secrets().len(), 1);
        assert_eq!(bundles[0].secrets["r"], *store.secret(0));
    }

    #[test]
    fn setup_rejects_foreign_allocation() {
        let p = sample();
        let t = alt_tree(&p);
        let mut sets = minimal_allocation(&p, &t).unwrap().sets().to_vec();
        sets[0].push(1);
        let a = KeyAllocation::from_sets(&p, sets).unwrap();
        assert!(matches!(
            setup(&p, &t, &a, &mut ChaCha20Rng::from_seed([0; 32])),
            Err(Error::InvalidAllocation(_))
        ));
    }

    #[test]
    fn keystore_round_trip_and_tamper() {
        let (p, _, _, store, _) = alt_tree_setup(3);
        let export = store.to_export(&p);
        let json = serde_json::to_string(&export).unwrap();
        let back: KeystoreExport = serde_json::from_str(&json).unwrap();
        assert_eq!(SecretStore::from_export(&p, &back).unwrap(), store);

        let mut tampered = export;
        tampered.keys.insert("a".into(), Key::from_bytes([0; 32]));
        assert!(SecretStore::from_export(&p, &tampered).is_err());
    }

    #[test]
    fn hex_is_lowercase_and_strict() {
        let s = Secret::from_bytes([0xab; 32]);
        assert_eq!(s.to_hex(), "ab".repeat(32));
        assert!(Secret::from_hex("abc").is_err());
        assert!(Key::from_hex(&"zz".repeat(32)).is_err());
    }
}
