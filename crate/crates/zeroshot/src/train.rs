//! Mini-batch SGD on the WARP objective with validation-based model
//! selection.
//!
//! Plain constant-rate SGD, no momentum and no schedule. Each epoch
//! shuffles the instance order with a seeded generator, walks the batches,
//! and takes one gradient step per batch; the gradient of a batch is
//! normalized by the batch size so the step scale does not depend on how
//! the data is cut. After every epoch the full-train objective and the
//! validation TOP-1 are recorded, and the best-validation model is kept.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::{ClassTable, LabeledDataset, LabeledInstance};
use crate::error::{Error, Result};
use crate::eval::top1_accuracy;
use crate::loss::{apply_gradient, RankMode, RankPenalty, WarpLoss};
use crate::model::{init_model, Activation, Compatibility, ModelKind, ProjectionModel};

/// A model shape plus its activation, named the way result tables name
/// methods: `bilinear`, `factored`, `fc2_relu`, `fc2_sigmoid`, `fc2_tanh`,
/// `fc3_tanh`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Method {
    pub kind: ModelKind,
    pub activation: Option<Activation>,
}

impl Method {
    pub fn new(kind: ModelKind, activation: Option<Activation>) -> Result<Self> {
        let needs_activation = matches!(kind, ModelKind::Fc2 | ModelKind::Fc3);
        if needs_activation != activation.is_some() {
            return Err(Error::InvalidParameter {
                name: "method",
                reason: format!("{kind} and activation {activation:?} do not combine"),
            });
        }
        Ok(Self { kind, activation })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.activation {
            Some(act) => write!(f, "{}_{act}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('_') {
            None => Method::new(s.parse()?, None),
            Some((kind, act)) => Method::new(kind.parse()?, Some(act.parse()?)),
        }
    }
}

/// The only validation metric: TOP-1 accuracy on the validation split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationMetric {
    #[default]
    Top1,
}

/// Training hyperparameters. The defaults (lr 0.01, 100 epochs, batch 32,
/// no regularization) are artifact choices, exposed so experiments can
/// record exactly what ran.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub method: Method,
    pub compat: Compatibility,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_lambda: f64,
    /// Factorization width; `None` means full rank `min(d_a, d_s)`.
    pub rank: Option<usize>,
    pub seed: u64,
    pub shuffle: bool,
    pub validation_metric: ValidationMetric,
    pub rank_mode: RankMode,
}

impl TrainConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            compat: Compatibility::Dot,
            learning_rate: 0.01,
            epochs: 100,
            batch_size: 32,
            l2_lambda: 0.0,
            rank: None,
            seed: 0,
            shuffle: true,
            validation_metric: ValidationMetric::Top1,
            rank_mode: RankMode::MarginViolations,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "learning_rate",
                reason: "must be positive".into(),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter {
                name: "batch_size",
                reason: "must be at least 1".into(),
            });
        }
        if !self.l2_lambda.is_finite() || self.l2_lambda < 0.0 {
            return Err(Error::InvalidParameter {
                name: "l2_lambda",
                reason: "must be finite and non-negative".into(),
            });
        }
        Ok(())
    }
}

/// One epoch's record: 0-based epoch index, objective over the full
/// training set after the epoch's updates, and validation TOP-1.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_objective: f64,
    pub val_top1: f64,
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub final_model: ProjectionModel,
    /// The epoch snapshot with the highest validation TOP-1 (ties prefer
    /// the lower train objective, then the earlier epoch); equals the
    /// initial model when `epochs` is 0.
    pub best_model: ProjectionModel,
    pub best_val_top1: f64,
    pub per_epoch: Vec<EpochRecord>,
    pub seed: u64,
}

fn model_is_finite(model: &ProjectionModel) -> bool {
    model.matrices().iter().all(|m| m.is_finite())
}

/// Trains a seeded model on `train_set` and selects by TOP-1 on
/// `val_set` classified against `val_classes` only.
///
/// Validation may use a class set disjoint from training (the zero-shot
/// condition); predictions are always drawn from `val_classes`.
/// Deterministic: the model is initialized from `config.seed` (ChaCha8
/// stream 0) and epoch shuffles come from stream 1 of the same seed.
pub fn train(
    train_set: &LabeledDataset,
    train_classes: &ClassTable,
    val_set: &LabeledDataset,
    val_classes: &ClassTable,
    config: &TrainConfig,
) -> Result<TrainResult> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptySequence {
            context: "training set",
        });
    }
    let d_a = train_set.acoustic_dim();
    let d_s = train_classes.dim();
    if val_set.acoustic_dim() != d_a {
        return Err(Error::DimensionMismatch {
            context: "validation set",
            expected: d_a,
            got: val_set.acoustic_dim(),
        });
    }
    if val_classes.dim() != d_s {
        return Err(Error::DimensionMismatch {
            context: "validation classes",
            expected: d_s,
            got: val_classes.dim(),
        });
    }
    let rank = config.rank.unwrap_or_else(|| d_a.min(d_s));
    let mut model = init_model(
        config.method.kind,
        d_a,
        d_s,
        rank,
        config.method.activation,
        config.seed,
    )?;
    let loss = WarpLoss::new(config.l2_lambda)?
        .with_penalty(RankPenalty::harmonic())
        .with_rank_mode(config.rank_mode);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);

    let mut best_model = model.clone();
    let mut best_key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut per_epoch = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut batch: Vec<LabeledInstance> = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_set.items()[i].clone()));
            let grad = loss.gradient_over(&batch, train_classes, &model, config.compat)?;
            apply_gradient(&mut model, &grad, -config.learning_rate);
        }
        if !model_is_finite(&model) {
            return Err(Error::Diverged { epoch });
        }
        let train_objective = loss
            .objective(train_set, train_classes, &model, config.compat)?
            .objective;
        if !train_objective.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let val_top1 = top1_accuracy(&model, config.compat, val_set, val_classes)?;
        per_epoch.push(EpochRecord {
            epoch,
            train_objective,
            val_top1,
        });
        // selection key: validation TOP-1 first, then lower train
        // objective (so a saturated validation still picks the
        // best-fitting epoch), then the earlier epoch
        let key = (val_top1, -train_objective);
        if key > best_key {
            best_key = key;
            best_model = model.clone();
        }
    }
    let best_val_top1 = if config.epochs == 0 {
        // no epochs ran: the initial model is both final and best
        top1_accuracy(&model, config.compat, val_set, val_classes)?
    } else {
        best_key.0
    };
    Ok(TrainResult {
        final_model: model,
        best_model,
        best_val_top1,
        per_epoch,
        seed: config.seed,
    })
}

/// Outcome of a config sweep: the winner plus any per-config failures.
#[derive(Debug)]
pub struct GridSearchOutcome {
    pub best_index: usize,
    pub best_config: TrainConfig,
    pub best: TrainResult,
    pub failures: Vec<(usize, Error)>,
}

/// Trains every config and returns the one with the highest validation
/// TOP-1; ties go to the earliest config in the list. Individual failures
/// are recorded, not fatal, unless every config fails.
pub fn grid_search(
    configs: &[TrainConfig],
    train_set: &LabeledDataset,
    train_classes: &ClassTable,
    val_set: &LabeledDataset,
    val_classes: &ClassTable,
) -> Result<GridSearchOutcome> {
    if configs.is_empty() {
        return Err(Error::EmptySequence {
            context: "grid search configs",
        });
    }
    let mut best: Option<(usize, TrainResult)> = None;
    let mut failures = Vec::new();
    for (i, config) in configs.iter().enumerate() {
        match train(train_set, train_classes, val_set, val_classes, config) {
            Ok(result) => {
                let replace = match &best {
                    None => true,
                    Some((_, current)) => result.best_val_top1 > current.best_val_top1,
                };
                if replace {
                    best = Some((i, result));
                }
            }
            Err(err) => failures.push((i, err)),
        }
    }
    match best {
        Some((best_index, best)) => Ok(GridSearchOutcome {
            best_index,
            best_config: configs[best_index].clone(),
            best,
            failures,
        }),
        None => Err(Error::AllConfigsFailed),
    }
}

/// `epoch\ttrain_objective\tval_top1` rows.
pub fn metrics_log_to_string(records: &[EpochRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            r.epoch, r.train_objective, r.val_top1
        ));
    }
    out
}

pub fn write_metrics_log(records: &[EpochRecord], path: &Path) -> Result<()> {
    std::fs::write(path, metrics_log_to_string(records)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
