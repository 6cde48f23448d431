//! Zero-shot audio classification through acoustic-semantic projections.
//!
//! Audio instances arrive as fixed-length acoustic embeddings and classes
//! as semantic embeddings built from their textual labels. A projection
//! maps the acoustic space into the semantic space, a compatibility
//! function scores projected instances against candidate classes, and
//! classification is the argmax over candidates — so classes never seen
//! in training can still be predicted, as long as they have semantic
//! embeddings.
//!
//! The crate provides:
//!
//! * bilinear, factored linear and nonlinear (two- and three-layer,
//!   bias-free) projections with dot, cosine and negative-Euclidean
//!   compatibilities ([`model`])
//! * the weighted approximate-rank pairwise ranking objective with exact
//!   ranks, L2 regularization and analytic gradients ([`loss`])
//! * seeded mini-batch SGD with validation-based model selection
//!   ([`mod@train`])
//! * the zero-shot classifier, TOP-1 accuracy, repeated-seed experiment
//!   statistics and a pooled two-sample t-test ([`eval`], [`stats`],
//!   [`experiment`])
//! * line-oriented text formats for embeddings, manifests, folds and
//!   checkpoints, plus a seeded synthetic task generator ([`data`],
//!   [`synth`])
//!
//! Everything is `f64`, single-threaded and deterministic: random draws
//! always come from a ChaCha8 generator seeded by an explicit parameter,
//! and accumulation orders are fixed, so equal seeds give bit-equal
//! results.
//!
//! A rendered guide lives in `book/`; its code snippets are compiled and
//! run as doc-tests.

pub mod data;
pub mod embedding;
mod error;
pub mod eval;
pub mod experiment;
pub mod loss;
pub mod model;
pub mod stats;
pub mod synth;
pub mod train;

pub use embedding::{
    average_vectors, ClassTable, EmbeddingTable, EmbeddingVector, FoldAssignment, LabeledDataset,
    LabeledInstance,
};
pub use error::{Error, Result};
pub use eval::{classify, top1_accuracy};
pub use experiment::{anchor_ttests, run_experiment, DataSplits};
pub use loss::{hinge_loss, margin_rank, LossReport, ModelGradient, RankMode, RankPenalty, WarpLoss};
pub use model::{
    compatibility_score, init_model, Activation, Compatibility, Matrix, ModelKind, ProjectionModel,
};
pub use stats::{summarize_runs, unpaired_t_test, RunStatistics, TTestResult};
pub use synth::{generate_synthetic_task, MapKind, SyntheticSpec, SyntheticTask};
pub use train::{grid_search, train, Method, TrainConfig, TrainResult};

// Compiles and runs every code snippet in the guide as a doc-test, so the
// book cannot drift from the library. One module per chapter keeps test
// failures attributable.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data-model.md")]
    mod data_model {}
    #[doc = include_str!("../../../book/src/projections.md")]
    mod projections {}
    #[doc = include_str!("../../../book/src/ranking-loss.md")]
    mod ranking_loss {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
