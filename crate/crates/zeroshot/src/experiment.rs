//! Repeated-seed experiments: train one method many times, score each run
//! on the zero-shot test split, and compare methods with t-tests.

use crate::embedding::{ClassTable, LabeledDataset};
use crate::error::{Error, Result};
use crate::eval::top1_accuracy;
use crate::stats::{summarize_runs, unpaired_t_test, RunStatistics, TTestResult};
use crate::synth::SyntheticTask;
use crate::train::{train, TrainConfig};

/// Train / validation / test datasets with the candidate class table for
/// each role. Test classes are disjoint from training classes in a
/// zero-shot experiment; the splits type does not care either way.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplits {
    pub train: LabeledDataset,
    pub train_classes: ClassTable,
    pub validation: LabeledDataset,
    pub val_classes: ClassTable,
    pub test: LabeledDataset,
    pub test_classes: ClassTable,
}

impl DataSplits {
    /// Splits from a synthetic task: train and validation share the seen
    /// classes, the test role gets the unseen partition.
    pub fn from_synthetic(task: &SyntheticTask) -> Self {
        Self {
            train: task.train.clone(),
            train_classes: task.seen_classes.clone(),
            validation: task.validation.clone(),
            val_classes: task.seen_classes.clone(),
            test: task.test.clone(),
            test_classes: task.unseen_classes.clone(),
        }
    }
}

/// Trains `n_seeds` models with seeds `base_seed..base_seed + n_seeds`,
/// scores each run's best-validation model on the test split against the
/// test-fold classes only, and summarizes.
///
/// The method name in the result comes from `config.method`; `config.seed`
/// is ignored in favor of the seed ladder. A failing seed aborts with that
/// seed attached to the error.
pub fn run_experiment(
    config: &TrainConfig,
    splits: &DataSplits,
    n_seeds: usize,
    base_seed: u64,
) -> Result<RunStatistics> {
    if n_seeds == 0 {
        return Err(Error::InvalidParameter {
            name: "n_seeds",
            reason: "must be at least 1".into(),
        });
    }
    let mut per_seed = Vec::with_capacity(n_seeds);
    for offset in 0..n_seeds {
        let seed = base_seed + offset as u64;
        let mut cfg = config.clone();
        cfg.seed = seed;
        let run = || -> Result<f64> {
            let result = train(
                &splits.train,
                &splits.train_classes,
                &splits.validation,
                &splits.val_classes,
                &cfg,
            )?;
            top1_accuracy(
                &result.best_model,
                cfg.compat,
                &splits.test,
                &splits.test_classes,
            )
        };
        let top1 = run().map_err(|source| Error::SeedFailed {
            seed,
            source: Box::new(source),
        })?;
        per_seed.push(top1);
    }
    summarize_runs(&config.method.to_string(), &per_seed)
}

/// Pairwise t-tests against the two linear comparison anchors.
///
/// Every other method is tested against `bilinear` when present, and
/// against `factored` when present (skipping the bilinear-vs-factored
/// duplicate, which the first anchor already covers). Methods with fewer
/// than two seeds are skipped; order follows the input.
pub fn anchor_ttests(runs: &[RunStatistics]) -> Result<Vec<(String, String, TTestResult)>> {
    let mut rows = Vec::new();
    for anchor in ["bilinear", "factored"] {
        let Some(anchor_run) = runs.iter().find(|r| r.method_name == anchor) else {
            continue;
        };
        if anchor_run.per_seed_top1.len() < 2 {
            continue;
        }
        for run in runs {
            if run.method_name == anchor || run.per_seed_top1.len() < 2 {
                continue;
            }
            if anchor == "factored" && run.method_name == "bilinear" {
                continue;
            }
            let result = unpaired_t_test(&run.per_seed_top1, &anchor_run.per_seed_top1)?;
            rows.push((run.method_name.clone(), anchor.to_string(), result));
        }
    }
    Ok(rows)
}
