//! Seeded synthetic zero-shot tasks for desk-scale verification.
//!
//! Class semantic embeddings are standard-normal draws. Acoustic
//! embeddings are built by inverting a known ground-truth projection, so
//! that projecting an acoustic prototype recovers its class embedding:
//! exactly for the linear map, and up to rare clamping of saturated
//! hidden targets for the tanh map. Per-sample isotropic noise is added
//! on top. The ground-truth model is part of the output, which lets
//! tests score a "perfect" model without training.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embedding::{
    ClassTable, EmbeddingTable, EmbeddingVector, LabeledDataset, LabeledInstance,
};
use crate::error::{Error, Result};
use crate::model::{Activation, Matrix, ProjectionModel};

/// Shape of the ground-truth acoustic-to-semantic map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// A bilinear map with orthonormal columns; a linear model can fit it
    /// exactly.
    Linear,
    /// A bias-free two-layer tanh network; linear models can only
    /// approximate it.
    TanhMlp,
}

impl std::fmt::Display for MapKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MapKind::Linear => f.write_str("linear"),
            MapKind::TanhMlp => f.write_str("tanh-mlp"),
        }
    }
}

impl std::str::FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(MapKind::Linear),
            "tanh-mlp" => Ok(MapKind::TanhMlp),
            other => Err(Error::InvalidParameter {
                name: "map kind",
                reason: format!("unknown map kind `{other}`"),
            }),
        }
    }
}

/// Generator configuration.
///
/// `samples_per_class` instances are drawn per class for each emitted
/// dataset: train and validation over the seen classes, test over the
/// unseen classes. Requires `acoustic_dim >= semantic_dim` so the
/// ground-truth map can be inverted exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub acoustic_dim: usize,
    pub semantic_dim: usize,
    pub seen_classes: usize,
    pub unseen_classes: usize,
    pub samples_per_class: usize,
    pub noise: f64,
    pub map_kind: MapKind,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidParameter {
                name: "synthetic spec",
                reason: reason.to_string(),
            })
        };
        if self.acoustic_dim == 0 || self.semantic_dim == 0 {
            return bad("dimensions must be positive");
        }
        if self.acoustic_dim < self.semantic_dim {
            return bad("acoustic_dim must be >= semantic_dim");
        }
        if self.seen_classes == 0 || self.unseen_classes == 0 {
            return bad("class counts must be positive");
        }
        if self.samples_per_class == 0 {
            return bad("samples_per_class must be positive");
        }
        if !self.noise.is_finite() || self.noise < 0.0 {
            return bad("noise must be finite and non-negative");
        }
        Ok(())
    }
}

/// A generated task: three datasets, the class tables for both partitions,
/// and the ground-truth projection.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub train: LabeledDataset,
    pub validation: LabeledDataset,
    pub test: LabeledDataset,
    pub seen_classes: ClassTable,
    pub unseen_classes: ClassTable,
    pub ground_truth: ProjectionModel,
}

// Keeps tanh pre-images well-defined: hidden targets are clamped into
// (-1, 1) before atanh.
const TANH_CLAMP: f64 = 0.999;
// Scale of hidden tanh targets; large enough that the map is visibly
// nonlinear, small enough that clamping is rare.
const TANH_TARGET_SCALE: f64 = 0.85;

fn draw_standard_normal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Gram-Schmidt over standard-normal columns: a `rows x cols` matrix with
/// orthonormal columns (`rows >= cols`).
fn random_orthonormal_columns(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    debug_assert!(rows >= cols);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while columns.len() < cols {
        let mut v = draw_standard_normal(rng, rows);
        for u in &columns {
            let proj: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue; // degenerate draw; take a fresh one
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        columns.push(v);
    }
    let mut m = Matrix::zeros(rows, cols);
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m
}

/// Generates a task; identical specs produce bit-identical tasks.
///
/// Draw order from one ChaCha8 stream seeded with `spec.seed`: semantic
/// embeddings for seen then unseen classes (each in id order), the
/// ground-truth matrices, then per-dataset sample noise (train,
/// validation, test; classes in id order; samples in index order).
pub fn generate_synthetic_task(spec: &SyntheticSpec) -> Result<SyntheticTask> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d_a = spec.acoustic_dim;
    let d_s = spec.semantic_dim;

    let seen_ids: Vec<String> = (0..spec.seen_classes)
        .map(|i| format!("seen_{i:03}"))
        .collect();
    let unseen_ids: Vec<String> = (0..spec.unseen_classes)
        .map(|i| format!("unseen_{i:03}"))
        .collect();

    let mut semantics: Vec<(String, EmbeddingVector)> = Vec::new();
    for id in seen_ids.iter().chain(unseen_ids.iter()) {
        semantics.push((
            id.clone(),
            EmbeddingVector::new(draw_standard_normal(&mut rng, d_s))?,
        ));
    }

    // Ground truth and the acoustic prototype for each class: the
    // prototype is the exact pre-image of the class embedding.
    let (ground_truth, prototypes): (ProjectionModel, Vec<Vec<f64>>) = match spec.map_kind {
        MapKind::Linear => {
            let weight = random_orthonormal_columns(&mut rng, d_a, d_s);
            let prototypes = semantics
                .iter()
                .map(|(_, phi)| weight.apply(phi.values()))
                .collect();
            (ProjectionModel::bilinear(weight), prototypes)
        }
        MapKind::TanhMlp => {
            let input = random_orthonormal_columns(&mut rng, d_a, d_a);
            let decoder = random_orthonormal_columns(&mut rng, d_a, d_s);
            let prototypes = semantics
                .iter()
                .map(|(_, phi)| {
                    let target = decoder.apply(phi.values());
                    let pre: Vec<f64> = target
                        .iter()
                        .map(|t| (t * TANH_TARGET_SCALE).clamp(-TANH_CLAMP, TANH_CLAMP).atanh())
                        .collect();
                    input.apply(&pre)
                })
                .collect();
            let mut output = decoder;
            output.scale(1.0 / TANH_TARGET_SCALE);
            (
                ProjectionModel::fc2(input, output, Activation::Tanh)?,
                prototypes,
            )
        }
    };

    let seen_count = spec.seen_classes;
    let mut make_dataset = |prefix: &str, class_range: std::ops::Range<usize>| -> Result<LabeledDataset> {
        let mut items = Vec::new();
        for c in class_range {
            let (class_id, _) = &semantics[c];
            for s in 0..spec.samples_per_class {
                let mut acoustic = prototypes[c].clone();
                if spec.noise > 0.0 {
                    for (a, e) in acoustic
                        .iter_mut()
                        .zip(draw_standard_normal(&mut rng, d_a))
                    {
                        *a += spec.noise * e;
                    }
                }
                items.push(LabeledInstance {
                    id: format!("{prefix}_{class_id}_{s:03}"),
                    acoustic: EmbeddingVector::new(acoustic)?,
                    class_id: class_id.clone(),
                });
            }
        }
        LabeledDataset::new(items)
    };

    let train = make_dataset("tr", 0..seen_count)?;
    let validation = make_dataset("va", 0..seen_count)?;
    let test = make_dataset("te", seen_count..seen_count + spec.unseen_classes)?;

    let seen_classes = EmbeddingTable::new(semantics[..seen_count].to_vec())?;
    let unseen_classes = EmbeddingTable::new(semantics[seen_count..].to_vec())?;

    Ok(SyntheticTask {
        train,
        validation,
        test,
        seen_classes,
        unseen_classes,
        ground_truth,
    })
}
