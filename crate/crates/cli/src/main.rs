mod seal;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pkas::allocation::{AllocationExport, EnforcementReport};
use pkas::baselines::{baseline_params, BaselineScheme, ChainScheme};
use pkas::json::to_canonical_string;
use pkas::kdf::{self, KeystoreExport};
use pkas::oracle::{run_suite, VerificationReport};
use pkas::tree::TreeExport;
use pkas::{
    derive, metrics, min_leaf_min_weight_out_tree, min_weight_out_tree, minimal_allocation, setup, validate_enforcement, ArcChoice,
    ChainPartition, DerivationOutTree, Key, KeyAllocation, Policy, PolicyDocument, Poset, SchemeMetrics, SecretStore,
    SecretBundle, WeightFunction, DEFAULT_ROOT_LABEL,
};
use rand::rngs::OsRng;
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "pkas", version, about = "Hierarchical key assignment with no public derivation data")]
struct Cli {
    /// Label used for the virtual root when a policy has several maximal elements.
    #[arg(long, global = true, default_value = DEFAULT_ROOT_LABEL)]
    reserved_root: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print structural statistics of a policy.
    Analyze {
        policy: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compute the key-minimising derivation tree and allocation.
    BuildTree {
        policy: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Arcs::Covers)]
        arcs: Arcs,
        /// Among minimum-weight trees, prefer one with fewest leaves.
        #[arg(long)]
        min_leaves: bool,
    },
    /// Generate the keystore and one secret bundle per label.
    Keygen {
        policy: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        entropy: Entropy,
    },
    /// Derive a key from a secret bundle.
    Derive {
        policy: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        target: String,
    },
    /// Compare key counts against the chain and public-information schemes.
    Compare {
        policy: PathBuf,
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Seal the objects listed in a manifest.
    Encrypt {
        policy: PathBuf,
        #[command(flatten)]
        source: KeySourceArgs,
        /// Tree the bundle was issued for.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// 64 hex digits; makes nonces reproducible.
        #[arg(long)]
        seed: Option<String>,
    },
    /// Open sealed objects listed in a manifest.
    Decrypt {
        policy: PathBuf,
        #[command(flatten)]
        source: KeySourceArgs,
        /// Tree the bundle was issued for.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        in_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the brute-force oracle suite.
    Verify {
        policy: PathBuf,
        #[arg(long, default_value_t = 500)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        /// Check this tree (and allocation, if given) instead of only rebuilding.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, requires = "tree")]
        allocation: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Arcs {
    Covers,
    Closure,
}

impl From<Arcs> for ArcChoice {
    fn from(a: Arcs) -> Self {
        match a {
            Arcs::Covers => ArcChoice::Covers,
            Arcs::Closure => ArcChoice::Closure,
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Entropy {
    /// 64 hex digits.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    system_entropy: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct KeySourceArgs {
    #[arg(long)]
    keystore: Option<PathBuf>,
    /// Requires --tree.
    #[arg(long, requires = "tree")]
    bundle: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] pkas::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: pkas::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Seal { path: PathBuf, source: seal::SealError },
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Core(pkas::Error::Unauthorized { .. }) => 2,
            Self::Core(pkas::Error::SelfCheck) | Self::Seal { .. } | Self::Verification(_) => 3,
            _ => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match kdf::self_check().map_err(CliError::from).and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let reserved = cli.reserved_root.as_str();
    match cli.command {
        Command::Analyze { policy, json } => analyze(&policy, reserved, json),
        Command::BuildTree { policy, out_dir, arcs, min_leaves } => {
            build_tree(&load_policy(&policy, reserved)?, &out_dir, arcs.into(), min_leaves)
        }
        Command::Keygen { policy, tree, out_dir, entropy } => {
            let policy = load_policy(&policy, reserved)?;
            let tree = load_tree(&policy.poset, &tree)?;
            match (entropy.seed, entropy.system_entropy) {
                (Some(seed), _) => keygen(&policy, &tree, &out_dir, &mut seeded_rng(&seed)?),
                _ => keygen(&policy, &tree, &out_dir, &mut OsRng),
            }
        }
        Command::Derive { policy, tree, bundle, target } => {
            let policy = load_policy(&policy, reserved)?;
            let tree = load_tree(&policy.poset, &tree)?;
            let allocation = minimal_allocation(&policy.poset, &tree)?;
            let bundle: SecretBundle = read_json(&bundle)?;
            let key = derive(&policy.poset, &tree, &allocation, &bundle, &target)?;
            println!("{}", key.to_hex());
            Ok(())
        }
        Command::Compare { policy, partition, json } => {
            let policy = load_policy(&policy, reserved)?;
            let partition = partition.map(|p| read_json::<ChainPartition>(&p)).transpose()?;
            compare(&policy, partition, json)
        }
        Command::Encrypt { policy, source, tree, manifest, out_dir, seed } => {
            let policy = load_policy(&policy, reserved)?;
            let source = KeySource::load(&policy.poset, &source, tree.as_deref())?;
            match seed {
                Some(seed) => encrypt(&policy.poset, &source, &manifest, &out_dir, &mut seeded_rng(&seed)?),
                None => encrypt(&policy.poset, &source, &manifest, &out_dir, &mut OsRng),
            }
        }
        Command::Decrypt { policy, source, tree, manifest, in_dir, out_dir } => {
            let policy = load_policy(&policy, reserved)?;
            let source = KeySource::load(&policy.poset, &source, tree.as_deref())?;
            decrypt(&policy.poset, &source, &manifest, &in_dir, &out_dir)
        }
        Command::Verify { policy, seeds, base_seed, tree, allocation, report } => {
            let policy = load_policy(&policy, reserved)?;
            verify(&policy, seeds, base_seed, tree.as_deref(), allocation.as_deref(), report.as_deref())
        }
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse { path: path.into(), source: e.into() })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_file(path, to_canonical_string(value)?.as_bytes())
}

fn load_document(path: &Path) -> CliResult<PolicyDocument> {
    read_json(path)
}

fn load_policy(path: &Path, reserved: &str) -> CliResult<Policy> {
    let doc = load_document(path)?;
    Policy::from_document(&doc, reserved).map_err(|source| CliError::Parse { path: path.into(), source })
}

fn load_tree(poset: &Poset, path: &Path) -> CliResult<DerivationOutTree> {
    let export: TreeExport = read_json(path)?;
    DerivationOutTree::from_export(poset, &export).map_err(|source| CliError::Parse { path: path.into(), source })
}

fn seeded_rng(hex_seed: &str) -> CliResult<ChaCha20Rng> {
    let bytes = hex::decode(hex_seed).map_err(|e| CliError::Usage(format!("--seed: {e}")))?;
    let seed: [u8; 32] =
        bytes.try_into().map_err(|_| CliError::Usage("--seed must be exactly 64 hex digits".into()))?;
    Ok(ChaCha20Rng::from_seed(seed))
}

/// File name for a label's bundle. Labels made of ASCII letters, digits and
/// `_` are used as-is; anything else becomes `x-` plus the hex of its bytes.
/// The two forms cannot collide since plain names never contain `-`.
fn bundle_file_name(label: &str) -> String {
    if label.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
        format!("{label}.json")
    } else {
        format!("x-{}.json", hex::encode(label.as_bytes()))
    }
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    elements: usize,
    cover_arcs: usize,
    closure_pairs: usize,
    width: usize,
    height: usize,
    maximal: Vec<String>,
    root: String,
    augmented: bool,
}

fn analyze(path: &Path, reserved: &str, json: bool) -> CliResult<()> {
    let doc = load_document(path)?;
    let parse_err = |source| CliError::Parse { path: path.into(), source };
    let base = Poset::new(&doc.elements, &doc.arcs).map_err(parse_err)?;
    let rooted = base.clone().augment_root(reserved).map_err(parse_err)?;
    let root = rooted.require_root()?;
    let report = AnalyzeReport {
        elements: base.len(),
        cover_arcs: base.cover_arcs().len(),
        closure_pairs: base.closure_len(),
        width: base.width(),
        height: base.height(),
        maximal: base.maximal(),
        root: rooted.label(root).to_string(),
        augmented: rooted.has_virtual_root(),
    };
    if json {
        print!("{}", to_canonical_string(&report)?);
    } else {
        println!("elements: {}", report.elements);
        println!("cover arcs: {}", report.cover_arcs);
        println!("closure pairs: {}", report.closure_pairs);
        println!("width: {}", report.width);
        println!("height: {}", report.height);
        println!("maximal: {}", report.maximal.join(", "));
        println!("root: {}{}", report.root, if report.augmented { " (virtual)" } else { "" });
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct BuildSummary {
    #[serde(flatten)]
    metrics: SchemeMetrics,
    arcs: &'static str,
    leaves: usize,
    tree_weight: u64,
}

fn build_tree(policy: &Policy, out_dir: &Path, arcs: ArcChoice, min_leaves: bool) -> CliResult<()> {
    let poset = &policy.poset;
    let candidates = arcs.arcs(poset);
    let tree = if min_leaves {
        min_leaf_min_weight_out_tree(poset, &policy.users, &candidates)?
    } else {
        min_weight_out_tree(poset, &policy.users, &candidates)?
    };
    let allocation = minimal_allocation(poset, &tree)?;
    let weights = WeightFunction::compute(poset, &policy.users, &candidates)?;
    let summary = BuildSummary {
        metrics: metrics(poset, &policy.users, &tree, &allocation),
        arcs: match arcs {
            ArcChoice::Covers => "covers",
            ArcChoice::Closure => "closure",
        },
        leaves: tree.leaf_count(),
        tree_weight: tree.total_weight(&weights)?,
    };
    write_json(&out_dir.join("tree.json"), &tree.to_export(poset))?;
    write_json(&out_dir.join("allocation.json"), &allocation.to_export(poset))?;
    write_json(&out_dir.join("metrics.json"), &summary)?;
    let m = summary.metrics;
    println!(
        "K_total={} K_hat={} k_max={} d_max={} leaves={} weight={}",
        m.k_total, m.k_hat, m.k_max, m.d_max, summary.leaves, summary.tree_weight
    );
    Ok(())
}

fn keygen<R: RngCore + CryptoRng>(
    policy: &Policy,
    tree: &DerivationOutTree,
    out_dir: &Path,
    rng: &mut R,
) -> CliResult<()> {
    let poset = &policy.poset;
    let allocation = minimal_allocation(poset, tree)?;
    let (store, bundles) = setup(poset, tree, &allocation, rng)?;
    write_json(&out_dir.join("keystore.json"), &store.to_export(poset))?;
    // The virtual root holds no users; its bundle would just be the master secret.
    for (x, bundle) in bundles.iter().enumerate().filter(|&(x, _)| !poset.is_virtual(x)) {
        write_json(&out_dir.join("bundles").join(bundle_file_name(poset.label(x))), bundle)?;
    }
    println!("wrote keystore and {} bundles to {}", poset.len() - usize::from(poset.has_virtual_root()), out_dir.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct CompareRow {
    scheme: &'static str,
    #[serde(flatten)]
    metrics: SchemeMetrics,
}

fn compare(policy: &Policy, partition: Option<ChainPartition>, json: bool) -> CliResult<()> {
    let poset = &policy.poset;
    let users = &policy.users;
    let partition = partition.unwrap_or_else(|| poset.min_chain_partition());
    let chain = ChainScheme::build(poset, &partition)?;
    let tree = min_weight_out_tree(poset, users, poset.cover_arcs())?;
    let allocation = minimal_allocation(poset, &tree)?;
    let rows = [
        CompareRow { scheme: "basic", metrics: baseline_params(poset, users, BaselineScheme::Basic) },
        CompareRow { scheme: "iterative", metrics: baseline_params(poset, users, BaselineScheme::Iterative) },
        CompareRow { scheme: "direct", metrics: baseline_params(poset, users, BaselineScheme::Direct) },
        CompareRow { scheme: "chain", metrics: chain.metrics(users) },
        CompareRow { scheme: "tree", metrics: metrics(poset, users, &tree, &allocation) },
    ];
    if json {
        print!("{}", to_canonical_string(&rows)?);
        return Ok(());
    }
    println!("{:<10} {:>8} {:>8} {:>6} {:>6} {:>6}", "scheme", "K_total", "K_hat", "k_max", "p", "d_max");
    for r in &rows {
        let m = r.metrics;
        println!("{:<10} {:>8} {:>8} {:>6} {:>6} {:>6}", r.scheme, m.k_total, m.k_hat, m.k_max, m.p, m.d_max);
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    objects: Vec<ManifestEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    path: PathBuf,
    label: String,
}

struct ResolvedObject {
    source: PathBuf,
    name: String,
    label: String,
    key: Key,
}

enum KeySource {
    Store(SecretStore),
    Bundle { tree: DerivationOutTree, allocation: KeyAllocation, bundle: SecretBundle },
}

impl KeySource {
    fn load(poset: &Poset, args: &KeySourceArgs, tree: Option<&Path>) -> CliResult<Self> {
        if let Some(path) = &args.keystore {
            let export: KeystoreExport = read_json(path)?;
            let store =
                SecretStore::from_export(poset, &export).map_err(|source| CliError::Parse { path: path.clone(), source })?;
            return Ok(Self::Store(store));
        }
        let (Some(bundle), Some(tree)) = (&args.bundle, tree) else {
            return Err(CliError::Usage("either --keystore or --bundle with --tree is required".into()));
        };
        let tree = load_tree(poset, tree)?;
        let allocation = minimal_allocation(poset, &tree)?;
        Ok(Self::Bundle { tree, allocation, bundle: read_json(bundle)? })
    }

    fn key(&self, poset: &Poset, label: &str) -> CliResult<Key> {
        Ok(match self {
            Self::Store(store) => store.key_for(poset, label)?,
            Self::Bundle { tree, allocation, bundle } => derive(poset, tree, allocation, bundle, label)?,
        })
    }
}

/// Resolves every manifest entry's key up front so that an unauthorised
/// label aborts before any file is read or written.
fn resolve_manifest(poset: &Poset, source: &KeySource, manifest_path: &Path) -> CliResult<Vec<ResolvedObject>> {
    let manifest: Manifest = read_json(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    let mut seen = BTreeMap::new();
    manifest
        .objects
        .into_iter()
        .map(|entry| {
            let x = poset.index_of(&entry.label)?;
            if poset.is_virtual(x) {
                return Err(CliError::Usage(format!("objects cannot carry the virtual root label `{}`", entry.label)));
            }
            let name = entry
                .path
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| CliError::Usage(format!("bad object path {}", entry.path.display())))?
                .to_string();
            if seen.insert(name.clone(), ()).is_some() {
                return Err(CliError::Usage(format!("two objects share the file name `{name}`")));
            }
            let key = source.key(poset, &entry.label)?;
            Ok(ResolvedObject { source: base.join(&entry.path), name, label: entry.label, key })
        })
        .collect()
}

fn encrypt<R: RngCore>(
    poset: &Poset,
    source: &KeySource,
    manifest: &Path,
    out_dir: &Path,
    rng: &mut R,
) -> CliResult<()> {
    let objects = resolve_manifest(poset, source, manifest)?;
    for obj in &objects {
        let plaintext = fs::read(&obj.source).map_err(|source| CliError::Io { path: obj.source.clone(), source })?;
        let sealed = seal::seal(&obj.key, &obj.label, &plaintext, rng);
        write_file(&out_dir.join(format!("{}.pkas", obj.name)), &sealed)?;
    }
    println!("sealed {} objects into {}", objects.len(), out_dir.display());
    Ok(())
}

fn decrypt(poset: &Poset, source: &KeySource, manifest: &Path, in_dir: &Path, out_dir: &Path) -> CliResult<()> {
    let objects = resolve_manifest(poset, source, manifest)?;
    for obj in &objects {
        let path = in_dir.join(format!("{}.pkas", obj.name));
        let sealed = fs::read(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        let header = seal::parse(&sealed).map_err(|source| CliError::Seal { path: path.clone(), source })?;
        if header.label != obj.label {
            return Err(CliError::Verification(format!(
                "{}: sealed under `{}`, manifest says `{}`",
                path.display(),
                header.label,
                obj.label
            )));
        }
        let plaintext = seal::open(&obj.key, &header).map_err(|source| CliError::Seal { path, source })?;
        write_file(&out_dir.join(&obj.name), &plaintext)?;
    }
    println!("opened {} objects into {}", objects.len(), out_dir.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct FullReport {
    passed: bool,
    suite: VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    enforcement: Option<EnforcementReport>,
}

fn verify(
    policy: &Policy,
    seeds: u64,
    base_seed: u64,
    tree: Option<&Path>,
    allocation: Option<&Path>,
    report_path: Option<&Path>,
) -> CliResult<()> {
    let suite = run_suite(Some(policy), seeds, base_seed)?;
    let enforcement = match tree {
        Some(tree_path) => {
            let tree = load_tree(&policy.poset, tree_path)?;
            let allocation = match allocation {
                Some(path) => {
                    let export: AllocationExport = read_json(path)?;
                    KeyAllocation::from_export(&policy.poset, &export)
                        .map_err(|source| CliError::Parse { path: path.into(), source })?
                }
                None => minimal_allocation(&policy.poset, &tree)?,
            };
            Some(validate_enforcement(&policy.poset, &tree, &allocation, true))
        }
        None => None,
    };
    let passed = suite.passed() && enforcement.as_ref().is_none_or(EnforcementReport::is_valid);
    for c in &suite.checks {
        println!(
            "{} {} ({} instances, {} skipped)",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.instances,
            c.skipped
        );
    }
    if let Some(e) = &enforcement {
        println!("{} allocation_enforces_policy", if e.is_valid() { "PASS" } else { "FAIL" });
        for v in &e.violations {
            println!("  violation: {}", serde_json::to_string(v).expect("violations serialise"));
        }
    }
    let full = FullReport { passed, suite, enforcement };
    if let Some(path) = report_path {
        write_json(path, &full)?;
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification("verification failed".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_names_are_injective() {
        assert_eq!(bundle_file_name("f"), "f.json");
        assert_eq!(bundle_file_name("top_secret"), "top_secret.json");
        assert_eq!(bundle_file_name("⊤"), "x-e28aa4.json");
        assert_eq!(bundle_file_name("../a"), "x-2e2e2f61.json");
        assert_ne!(bundle_file_name("x-61"), bundle_file_name("a"));
    }

    #[test]
    fn seeds_must_be_32_bytes() {
        assert!(seeded_rng(&"00".repeat(32)).is_ok());
        assert!(matches!(seeded_rng("00"), Err(CliError::Usage(_))));
        assert!(matches!(seeded_rng(&"zz".repeat(32)), Err(CliError::Usage(_))));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
