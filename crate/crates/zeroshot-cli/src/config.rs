//! Experiment configuration: a flat `key = value` file with dotted keys.
//!
//! Lines starting with `#` and blank lines are ignored. Exactly one data
//! source must be configured: a `synth.*` section describing a generated
//! task, or a `files.*` section pointing at embedding tables, manifests
//! and an optional fold file. Command-line flags override file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use zeroshot::loss::RankMode;
use zeroshot::synth::{MapKind, SyntheticSpec};
use zeroshot::train::TrainConfig;

/// A configuration problem; always maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

/// File-based data source: tables, manifests, optional fold file.
#[derive(Debug, Clone)]
pub struct FilesSpec {
    pub acoustic: PathBuf,
    pub classes: PathBuf,
    pub train_manifest: PathBuf,
    pub val_manifest: PathBuf,
    pub test_manifest: PathBuf,
    /// Fold file plus the fold index serving each role. Without it, each
    /// role's candidate classes are the ones its manifest mentions.
    pub folds: Option<(PathBuf, usize, usize, usize)>,
}

#[derive(Debug, Clone)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Files(FilesSpec),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub train: TrainConfig,
    pub bench_methods: Vec<String>,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub eval_checkpoint: Option<PathBuf>,
    pub out_dir: PathBuf,
}

/// Raw parsed key/value pairs with consumption tracking, so leftover
/// (misspelled) keys can be reported.
struct RawConfig {
    values: BTreeMap<String, String>,
    consumed: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected `key = value`", no + 1));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return err(format!("line {}: empty key", no + 1));
            }
            if values.insert(key.clone(), value).is_some() {
                return err(format!("line {}: duplicate key `{key}`", no + 1));
            }
        }
        Ok(Self {
            values,
            consumed: Default::default(),
        })
    }

    fn get(&self, key: &str) -> Option<&str> {
        let v = self.values.get(key);
        if v.is_some() {
            self.consumed.borrow_mut().insert(key.to_string());
        }
        v.map(|s| s.as_str())
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| ConfigError(format!("missing required key `{key}`")))
    }

    fn parse_value<T: std::str::FromStr>(&self, key: &str, raw: &str) -> Result<T> {
        raw.parse()
            .map_err(|_| ConfigError(format!("bad value for `{key}`: `{raw}`")))
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        self.parse_value(key, raw)
    }

    fn optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => Ok(Some(self.parse_value(key, raw)?)),
        }
    }

    fn has_section(&self, prefix: &str) -> bool {
        self.values
            .keys()
            .any(|k| k.starts_with(prefix) && k[prefix.len()..].starts_with('.'))
    }

    fn unconsumed(&self) -> Vec<String> {
        let consumed = self.consumed.borrow();
        self.values
            .keys()
            .filter(|k| !consumed.contains(*k))
            .cloned()
            .collect()
    }
}

fn parse_synth(raw: &RawConfig) -> Result<SyntheticSpec> {
    let map_kind: MapKind = {
        let s = raw.require("synth.map")?;
        s.parse()
            .map_err(|_| ConfigError(format!("bad value for `synth.map`: `{s}`")))?
    };
    Ok(SyntheticSpec {
        acoustic_dim: raw.required("synth.acoustic_dim")?,
        semantic_dim: raw.required("synth.semantic_dim")?,
        seen_classes: raw.required("synth.seen_classes")?,
        unseen_classes: raw.required("synth.unseen_classes")?,
        samples_per_class: raw.required("synth.samples_per_class")?,
        noise: raw.required("synth.noise")?,
        map_kind,
        seed: raw.required("synth.seed")?,
    })
}

fn parse_files(raw: &RawConfig) -> Result<FilesSpec> {
    let path = |key: &str| -> Result<PathBuf> { Ok(PathBuf::from(raw.require(key)?)) };
    let folds = match raw.get("files.folds") {
        None => None,
        Some(p) => {
            let p = PathBuf::from(p);
            Some((
                p,
                raw.required("files.train_fold")?,
                raw.required("files.val_fold")?,
                raw.required("files.test_fold")?,
            ))
        }
    };
    Ok(FilesSpec {
        acoustic: path("files.acoustic")?,
        classes: path("files.classes")?,
        train_manifest: path("files.train_manifest")?,
        val_manifest: path("files.val_manifest")?,
        test_manifest: path("files.test_manifest")?,
        folds,
    })
}

fn parse_train(raw: &RawConfig) -> Result<TrainConfig> {
    let method = raw
        .require("train.method")?
        .parse()
        .map_err(|e| ConfigError(format!("train.method: {e}")))?;
    let mut config = TrainConfig::new(method);
    if let Some(compat) = raw.get("train.compat") {
        config.compat = compat
            .parse()
            .map_err(|e| ConfigError(format!("train.compat: {e}")))?;
    }
    if let Some(v) = raw.optional("train.learning_rate")? {
        config.learning_rate = v;
    }
    if let Some(v) = raw.optional("train.epochs")? {
        config.epochs = v;
    }
    if let Some(v) = raw.optional("train.batch_size")? {
        config.batch_size = v;
    }
    if let Some(v) = raw.optional("train.l2_lambda")? {
        config.l2_lambda = v;
    }
    config.rank = raw.optional("train.rank")?;
    if let Some(v) = raw.optional("train.seed")? {
        config.seed = v;
    }
    if let Some(v) = raw.get("train.shuffle") {
        config.shuffle = match v {
            "true" => true,
            "false" => false,
            other => return err(format!("bad value for `train.shuffle`: `{other}`")),
        };
    }
    if let Some(v) = raw.get("train.rank_mode") {
        config.rank_mode = match v {
            "margin-violations" => RankMode::MarginViolations,
            "sorted-position" => RankMode::SortedPosition,
            other => return err(format!("bad value for `train.rank_mode`: `{other}`")),
        };
    }
    Ok(config)
}

/// Flag overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub method: Option<String>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let raw = RawConfig::parse(&text)?;

    let has_synth = raw.has_section("synth");
    let has_files = raw.has_section("files");
    let data = match (has_synth, has_files) {
        (true, false) => DataSource::Synthetic(parse_synth(&raw)?),
        (false, true) => DataSource::Files(parse_files(&raw)?),
        (false, false) => return err("no data source: configure `synth.*` or `files.*`"),
        (true, true) => return err("both `synth.*` and `files.*` present; pick one"),
    };

    let mut train = parse_train(&raw)?;
    let bench_methods: Vec<String> = match raw.get("bench.methods") {
        None => Vec::new(),
        Some(list) => list
            .split(',')
            .map(|m| m.trim().to_string())
            .filter(|m| !m.is_empty())
            .collect(),
    };
    // validate method names up front
    for m in &bench_methods {
        m.parse::<zeroshot::train::Method>()
            .map_err(|e| ConfigError(format!("bench.methods: {e}")))?;
    }
    let n_seeds = raw.optional("bench.n_seeds")?.unwrap_or(1);
    let mut base_seed = raw.optional("bench.base_seed")?.unwrap_or(0);
    let eval_checkpoint = raw.get("eval.checkpoint").map(PathBuf::from);
    let mut out_dir = PathBuf::from(raw.get("out.dir").unwrap_or("out"));

    let leftover = raw.unconsumed();
    if !leftover.is_empty() {
        return err(format!("unknown keys: {}", leftover.join(", ")));
    }

    if let Some(seed) = overrides.seed {
        train.seed = seed;
        base_seed = seed;
    }
    if let Some(out) = &overrides.out {
        out_dir = out.clone();
    }
    let mut config = ExperimentConfig {
        data,
        train,
        bench_methods,
        n_seeds,
        base_seed,
        eval_checkpoint,
        out_dir,
    };
    if let Some(method) = &overrides.method {
        let parsed = method
            .parse()
            .map_err(|e| ConfigError(format!("--method: {e}")))?;
        config.train.method = parsed;
        config.bench_methods.retain(|m| m == method);
        if config.bench_methods.is_empty() {
            config.bench_methods.push(method.clone());
        }
    }
    // --seed also re-seeds a synthetic source for the synth command
    if let (Some(seed), DataSource::Synthetic(spec)) = (overrides.seed, &mut config.data) {
        spec.seed = seed;
    }
    Ok(config)
}
