//! Behavior tests for the command-line interface: exit codes, file
//! contracts, overrides.

use std::path::Path;
use std::process::{Command, Output};

use zeroshot::data::{parse_embedding_table_file, parse_folds_file, parse_manifest_file};
use zeroshot::model::{init_model, read_checkpoint, Activation, ModelKind};

const SYNTH_CFG: &str = "\
synth.acoustic_dim = 8
synth.semantic_dim = 6
synth.seen_classes = 4
synth.unseen_classes = 3
synth.samples_per_class = 5
synth.noise = 0.05
synth.map = linear
synth.seed = 13
train.method = fc2_tanh
train.compat = cosine
train.learning_rate = 0.2
train.epochs = 6
train.batch_size = 8
train.rank = 5
train.seed = 21
bench.methods = bilinear, fc2_tanh
bench.n_seeds = 3
bench.base_seed = 40
";

fn zeroshot(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zeroshot"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should run")
}

fn write_cfg(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn train_writes_checkpoint_and_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    write_cfg(tmp.path(), "exp.cfg", SYNTH_CFG);
    let out = zeroshot(&["train", "--config", "exp.cfg", "--out", "run"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (model, seed) = read_checkpoint(&tmp.path().join("run/checkpoint.txt")).unwrap();
    assert_eq!(seed, 21);
    assert_eq!(model.kind(), ModelKind::Fc2);
    assert_eq!(model.rank(), Some(5));
    let metrics = std::fs::read_to_string(tmp.path().join("run/metrics.tsv")).unwrap();
    assert_eq!(metrics.lines().count(), 6);
    for line in metrics.lines() {
        assert_eq!(line.split('\t').count(), 3);
    }
}

#[test]
fn zero_epoch_checkpoint_equals_seeded_init() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SYNTH_CFG.replace("train.epochs = 6", "train.epochs = 0");
    write_cfg(tmp.path(), "exp.cfg", &cfg);
    let out = zeroshot(&["train", "--config", "exp.cfg", "--out", "run"], tmp.path());
    assert!(out.status.success());
    let (model, _) = read_checkpoint(&tmp.path().join("run/checkpoint.txt")).unwrap();
    let init = init_model(ModelKind::Fc2, 8, 6, 5, Some(Activation::Tanh), 21).unwrap();
    assert_eq!(model, init);
}

#[test]
fn bad_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    write_cfg(tmp.path(), "exp.cfg", "train.method = bilinear\nsynth.what = 1\n");
    let out = zeroshot(&["train", "--config", "exp.cfg"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_classes_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SYNTH_CFG.replace("synth.seen_classes = 4", "synth.seen_classes = 0");
    write_cfg(tmp.path(), "exp.cfg", &cfg);
    let out = zeroshot(&["synth", "--config", "exp.cfg", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_data_file_exits_3_and_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "\
files.acoustic = nowhere/acoustic.tsv
files.classes = nowhere/classes.tsv
files.train_manifest = nowhere/train.tsv
files.val_manifest = nowhere/val.tsv
files.test_manifest = nowhere/test.tsv
train.method = bilinear
";
    write_cfg(tmp.path(), "exp.cfg", cfg);
    let out = zeroshot(&["train", "--config", "exp.cfg"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nowhere/acoustic.tsv"), "{stderr}");
}

#[test]
fn divergent_training_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    // an enormous step on the dot objective blows the weights up fast
    let cfg = SYNTH_CFG
        .replace("train.learning_rate = 0.2", "train.learning_rate = 1e155")
        .replace("train.compat = cosine", "train.compat = dot")
        .replace("train.epochs = 6", "train.epochs = 12");
    write_cfg(tmp.path(), "exp.cfg", &cfg);
    let out = zeroshot(&["train", "--config", "exp.cfg", "--out", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bench_counting_contract() {
    // two methods, three seeds: 6 result rows, 2 summary rows, 1 t-test row
    let tmp = tempfile::tempdir().unwrap();
    write_cfg(tmp.path(), "exp.cfg", SYNTH_CFG);
    let out = zeroshot(&["bench", "--config", "exp.cfg", "--out", "b"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = std::fs::read_to_string(tmp.path().join("b/results.tsv")).unwrap();
    assert_eq!(results.lines().count(), 6);
    let summary = std::fs::read_to_string(tmp.path().join("b/summary.tsv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    let ttests = std::fs::read_to_string(tmp.path().join("b/ttests.tsv")).unwrap();
    assert_eq!(ttests.lines().count(), 1);
    assert!(ttests.starts_with("fc2_tanh\tbilinear\t"));
    // seeds are the shared ladder 40, 41, 42 for both methods
    for (i, line) in results.lines().enumerate() {
        let seed: u64 = line.split('\t').nth(1).unwrap().parse().unwrap();
        assert_eq!(seed, 40 + (i as u64 % 3));
    }
}

#[test]
fn synth_files_round_trip_and_feed_training() {
    let tmp = tempfile::tempdir().unwrap();
    write_cfg(tmp.path(), "exp.cfg", SYNTH_CFG);
    let out = zeroshot(&["synth", "--config", "exp.cfg", "--out", "data"], tmp.path());
    assert!(out.status.success());
    let dir = tmp.path().join("data");
    // everything parses back through the ingestion layer
    let acoustic = parse_embedding_table_file(&dir.join("acoustic_embeddings.tsv"), Some(8)).unwrap();
    let classes = parse_embedding_table_file(&dir.join("class_embeddings.tsv"), Some(6)).unwrap();
    assert_eq!(acoustic.len(), (4 + 4 + 3) * 5);
    assert_eq!(classes.len(), 7);
    let folds = parse_folds_file(&dir.join("folds.tsv")).unwrap();
    assert_eq!(folds.members(0).len(), 4);
    assert_eq!(folds.members(1).len(), 3);
    let train_manifest = parse_manifest_file(&dir.join("train_manifest.tsv")).unwrap();
    assert_eq!(train_manifest.len(), 20);
    // and a file-based config trains on them
    let cfg = "\
files.acoustic = data/acoustic_embeddings.tsv
files.classes = data/class_embeddings.tsv
files.train_manifest = data/train_manifest.tsv
files.val_manifest = data/val_manifest.tsv
files.test_manifest = data/test_manifest.tsv
files.folds = data/folds.tsv
files.train_fold = 0
files.val_fold = 0
files.test_fold = 1
train.method = bilinear
train.compat = cosine
train.learning_rate = 0.2
train.epochs = 4
train.batch_size = 8
train.seed = 2
";
    write_cfg(tmp.path(), "files.cfg", cfg);
    let out = zeroshot(&["train", "--config", "files.cfg", "--out", "run2"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("run2/checkpoint.txt").exists());
}

#[test]
fn eval_writes_predictions_within_test_fold() {
    let tmp = tempfile::tempdir().unwrap();
    write_cfg(tmp.path(), "exp.cfg", SYNTH_CFG);
    assert!(zeroshot(&["train", "--config", "exp.cfg", "--out", "run"], tmp.path())
        .status
        .success());
    let out = zeroshot(
        &[
            "eval",
            "--config",
            "exp.cfg",
            "--checkpoint",
            "run/checkpoint.txt",
            "--out",
            "ev",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("top1\t"), "{stdout}");
    let predictions = std::fs::read_to_string(tmp.path().join("ev/predictions.tsv")).unwrap();
    assert_eq!(predictions.lines().count(), 3 * 5);
    for line in predictions.lines() {
        let predicted = line.split('\t').nth(1).unwrap();
        // zero-shot hygiene: predictions come from the unseen partition
        assert!(predicted.starts_with("unseen_"), "{line}");
    }
}

#[test]
fn bench_full_six_method_suite_shapes() {
    // all six methods: 6 summary rows; t-tests are 5 against bilinear
    // plus 4 against factored (the anchor pair itself is not repeated)
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SYNTH_CFG
        .replace(
            "bench.methods = bilinear, fc2_tanh",
            "bench.methods = bilinear, factored, fc2_relu, fc2_sigmoid, fc2_tanh, fc3_tanh",
        )
        .replace("bench.n_seeds = 3", "bench.n_seeds = 2")
        .replace("train.epochs = 6", "train.epochs = 3");
    write_cfg(tmp.path(), "exp.cfg", &cfg);
    let out = zeroshot(&["bench", "--config", "exp.cfg", "--out", "b6"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(tmp.path().join("b6/summary.tsv")).unwrap();
    assert_eq!(summary.lines().count(), 6);
    let results = std::fs::read_to_string(tmp.path().join("b6/results.tsv")).unwrap();
    assert_eq!(results.lines().count(), 12);
    let ttests = std::fs::read_to_string(tmp.path().join("b6/ttests.tsv")).unwrap();
    assert_eq!(ttests.lines().count(), 9);
    assert_eq!(
        ttests.lines().filter(|l| l.contains("\tbilinear\t")).count(),
        5
    );
    assert_eq!(
        ttests.lines().filter(|l| l.contains("\tfactored\t")).count(),
        4
    );
}

#[test]
fn method_flag_narrows_bench() {
    let tmp = tempfile::tempdir().unwrap();
    write_cfg(tmp.path(), "exp.cfg", SYNTH_CFG);
    let out = zeroshot(
        &["bench", "--config", "exp.cfg", "--out", "b", "--method", "bilinear"],
        tmp.path(),
    );
    assert!(out.status.success());
    let summary = std::fs::read_to_string(tmp.path().join("b/summary.tsv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.starts_with("bilinear\t"));
}

#[test]
fn commands_do_not_mutate_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    write_cfg(tmp.path(), "exp.cfg", SYNTH_CFG);
    assert!(zeroshot(&["synth", "--config", "exp.cfg", "--out", "data"], tmp.path())
        .status
        .success());
    let before: Vec<(String, Vec<u8>)> = {
        let mut v: Vec<_> = std::fs::read_dir(tmp.path().join("data"))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        v.sort();
        v
    };
    let cfg_before = std::fs::read(tmp.path().join("exp.cfg")).unwrap();
    assert!(zeroshot(&["train", "--config", "exp.cfg", "--out", "run"], tmp.path())
        .status
        .success());
    let after: Vec<(String, Vec<u8>)> = {
        let mut v: Vec<_> = std::fs::read_dir(tmp.path().join("data"))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        v.sort();
        v
    };
    assert_eq!(before, after);
    assert_eq!(cfg_before, std::fs::read(tmp.path().join("exp.cfg")).unwrap());
}
