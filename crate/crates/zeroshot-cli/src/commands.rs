//! The four subcommands: `train`, `bench`, `synth`, `eval`.
//!
//! Exit codes are stable API: 0 success, 2 configuration error, 3 data
//! error, 4 numeric failure (divergence). All output files are plain
//! text with fixed column orders, so identical configs and seeds
//! reproduce them byte for byte.

use std::path::Path;

use zeroshot::data::{
    assemble_dataset, parse_embedding_table_file, parse_folds_file, parse_manifest_file,
    write_embedding_table, write_folds, write_manifest,
};
use zeroshot::embedding::{ClassTable, EmbeddingTable, FoldAssignment};
use zeroshot::experiment::{anchor_ttests, run_experiment, DataSplits};
use zeroshot::model::{read_checkpoint, write_checkpoint};
use zeroshot::stats::{results_to_string, summary_to_string, ttest_report_to_string};
use zeroshot::synth::generate_synthetic_task;
use zeroshot::train::{train, write_metrics_log};
use zeroshot::{classify, top1_accuracy, Error as LibError};

use crate::config::{ConfigError, DataSource, ExperimentConfig, FilesSpec};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric error: {msg}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

fn is_numeric(err: &LibError) -> bool {
    match err {
        LibError::Diverged { .. } | LibError::NonFinite { .. } => true,
        LibError::SeedFailed { source, .. } => is_numeric(source),
        _ => false,
    }
}

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        if is_numeric(&e) {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Candidate classes for one role: the fold's members when a fold file is
/// configured, otherwise the classes the manifest mentions.
fn role_classes(
    classes: &EmbeddingTable,
    folds: Option<(&FoldAssignment, usize)>,
    manifest: &[(String, String)],
) -> Result<ClassTable> {
    match folds {
        Some((assignment, fold)) => {
            let members = assignment.members(fold);
            if members.is_empty() {
                return Err(CliError::Data(format!("fold {fold} has no classes")));
            }
            Ok(classes.restrict(members)?)
        }
        None => {
            let mut ids: Vec<&str> = manifest.iter().map(|(_, c)| c.as_str()).collect();
            ids.sort_unstable();
            ids.dedup();
            Ok(classes.restrict(ids)?)
        }
    }
}

fn load_files(spec: &FilesSpec) -> Result<DataSplits> {
    let acoustic = parse_embedding_table_file(&spec.acoustic, None)?;
    let classes = parse_embedding_table_file(&spec.classes, None)?;
    let train_manifest = parse_manifest_file(&spec.train_manifest)?;
    let val_manifest = parse_manifest_file(&spec.val_manifest)?;
    let test_manifest = parse_manifest_file(&spec.test_manifest)?;
    let folds = match &spec.folds {
        None => None,
        Some((path, tr, va, te)) => Some((parse_folds_file(path)?, *tr, *va, *te)),
    };
    let fold_for = |role: usize| -> Option<(&FoldAssignment, usize)> {
        folds.as_ref().map(|(f, tr, va, te)| {
            let idx = match role {
                0 => *tr,
                1 => *va,
                _ => *te,
            };
            (f, idx)
        })
    };
    Ok(DataSplits {
        train: assemble_dataset(&train_manifest, &acoustic)?,
        train_classes: role_classes(&classes, fold_for(0), &train_manifest)?,
        validation: assemble_dataset(&val_manifest, &acoustic)?,
        val_classes: role_classes(&classes, fold_for(1), &val_manifest)?,
        test: assemble_dataset(&test_manifest, &acoustic)?,
        test_classes: role_classes(&classes, fold_for(2), &test_manifest)?,
    })
}

fn load_splits(config: &ExperimentConfig) -> Result<DataSplits> {
    match &config.data {
        DataSource::Synthetic(spec) => {
            let task = generate_synthetic_task(spec).map_err(|e| match e {
                LibError::InvalidParameter { .. } => {
                    CliError::Config(ConfigError(e.to_string()))
                }
                other => other.into(),
            })?;
            Ok(DataSplits::from_synthetic(&task))
        }
        DataSource::Files(spec) => load_files(spec),
    }
}

/// `train`: one training run; writes `checkpoint.txt` (the
/// best-validation model) and `metrics.tsv`.
pub fn cmd_train(config: &ExperimentConfig) -> Result<()> {
    let splits = load_splits(config)?;
    ensure_out_dir(&config.out_dir)?;
    let result = train(
        &splits.train,
        &splits.train_classes,
        &splits.validation,
        &splits.val_classes,
        &config.train,
    )?;
    write_checkpoint(
        &result.best_model,
        result.seed,
        &config.out_dir.join("checkpoint.txt"),
    )?;
    write_metrics_log(&result.per_epoch, &config.out_dir.join("metrics.tsv"))?;
    println!(
        "trained {} for {} epochs: best validation top1 {}",
        config.train.method,
        result.per_epoch.len(),
        result.best_val_top1
    );
    Ok(())
}

/// `bench`: repeated-seed runs per method plus t-tests against the
/// bilinear and factored anchors. Writes `results.tsv`, `summary.tsv`,
/// `ttests.tsv`. Per-method failures are reported and skipped; the first
/// failure's exit code is returned after the suite finishes.
pub fn cmd_bench(config: &ExperimentConfig) -> Result<()> {
    if config.bench_methods.is_empty() {
        return Err(CliError::Config(ConfigError(
            "bench requires `bench.methods`".into(),
        )));
    }
    let splits = load_splits(config)?;
    ensure_out_dir(&config.out_dir)?;
    let mut runs = Vec::new();
    let mut first_failure: Option<CliError> = None;
    for name in &config.bench_methods {
        let mut train_config = config.train.clone();
        train_config.method = name.parse().map_err(|e: LibError| {
            CliError::Config(ConfigError(format!("bench.methods: {e}")))
        })?;
        match run_experiment(&train_config, &splits, config.n_seeds, config.base_seed) {
            Ok(stats) => {
                println!(
                    "{}\tmean {}\tstd {}\tn {}",
                    stats.method_name,
                    stats.mean,
                    stats.std_dev,
                    stats.per_seed_top1.len()
                );
                runs.push(stats);
            }
            Err(e) => {
                eprintln!("method {name} failed: {e}");
                if first_failure.is_none() {
                    first_failure = Some(e.into());
                }
            }
        }
    }
    if runs.is_empty() {
        return Err(first_failure.unwrap_or_else(|| {
            CliError::Data("no method produced results".into())
        }));
    }
    write_text(
        &config.out_dir.join("results.tsv"),
        &results_to_string(&runs, config.base_seed),
    )?;
    write_text(
        &config.out_dir.join("summary.tsv"),
        &summary_to_string(&runs),
    )?;
    let tests = anchor_ttests(&runs)?;
    write_text(
        &config.out_dir.join("ttests.tsv"),
        &ttest_report_to_string(&tests),
    )?;
    match first_failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// `synth`: writes a generated task as embedding tables, manifests and a
/// fold file (seen classes fold 0, unseen fold 1), all in the ingestion
/// formats.
pub fn cmd_synth(config: &ExperimentConfig) -> Result<()> {
    let DataSource::Synthetic(spec) = &config.data else {
        return Err(CliError::Config(ConfigError(
            "synth requires a `synth.*` data source".into(),
        )));
    };
    let task = generate_synthetic_task(spec).map_err(|e| match e {
        LibError::InvalidParameter { .. } => CliError::Config(ConfigError(e.to_string())),
        other => other.into(),
    })?;
    ensure_out_dir(&config.out_dir)?;

    let mut acoustic_entries = Vec::new();
    let mut manifests: [Vec<(String, String)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (dataset, manifest) in [&task.train, &task.validation, &task.test]
        .into_iter()
        .zip(manifests.iter_mut())
    {
        for item in dataset.items() {
            acoustic_entries.push((item.id.clone(), item.acoustic.clone()));
            manifest.push((item.id.clone(), item.class_id.clone()));
        }
    }
    let acoustic = EmbeddingTable::new(acoustic_entries)?;
    let mut class_entries = Vec::new();
    let mut fold_map = std::collections::BTreeMap::new();
    for (id, emb) in task.seen_classes.iter() {
        class_entries.push((id.to_string(), emb.clone()));
        fold_map.insert(id.to_string(), 0usize);
    }
    for (id, emb) in task.unseen_classes.iter() {
        class_entries.push((id.to_string(), emb.clone()));
        fold_map.insert(id.to_string(), 1usize);
    }
    let classes = EmbeddingTable::new(class_entries)?;
    let folds = FoldAssignment::new(fold_map)?;

    write_embedding_table(&acoustic, &config.out_dir.join("acoustic_embeddings.tsv"))?;
    write_embedding_table(&classes, &config.out_dir.join("class_embeddings.tsv"))?;
    write_manifest(&manifests[0], &config.out_dir.join("train_manifest.tsv"))?;
    write_manifest(&manifests[1], &config.out_dir.join("val_manifest.tsv"))?;
    write_manifest(&manifests[2], &config.out_dir.join("test_manifest.tsv"))?;
    write_folds(&folds, &config.out_dir.join("folds.tsv"))?;
    println!(
        "wrote synthetic task: {} train / {} val / {} test instances, {} classes",
        task.train.len(),
        task.validation.len(),
        task.test.len(),
        classes.len()
    );
    Ok(())
}

/// `eval`: classifies the test split with an existing checkpoint; writes
/// `predictions.tsv` and prints the TOP-1 accuracy.
pub fn cmd_eval(config: &ExperimentConfig, checkpoint_flag: Option<&Path>) -> Result<()> {
    let checkpoint_path = checkpoint_flag
        .map(Path::to_path_buf)
        .or_else(|| config.eval_checkpoint.clone())
        .ok_or_else(|| {
            CliError::Config(ConfigError(
                "eval needs `eval.checkpoint` or --checkpoint".into(),
            ))
        })?;
    let (model, _seed) = read_checkpoint(&checkpoint_path)?;
    let splits = load_splits(config)?;
    ensure_out_dir(&config.out_dir)?;
    let mut out = String::new();
    for item in splits.test.items() {
        let predicted = classify(
            &model,
            config.train.compat,
            &item.acoustic,
            &splits.test_classes,
        )?;
        out.push_str(&format!("{}\t{predicted}\n", item.id));
    }
    write_text(&config.out_dir.join("predictions.tsv"), &out)?;
    let top1 = top1_accuracy(
        &model,
        config.train.compat,
        &splits.test,
        &splits.test_classes,
    )?;
    println!("top1\t{top1}");
    Ok(())
}

