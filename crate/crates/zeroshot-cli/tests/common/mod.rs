//! Shared helpers for the acceptance suite: an independently written
//! brute-force objective oracle, a central-difference gradient harness,
//! and small random task builders.
//!
//! The oracle deliberately re-derives everything from the formulas with
//! plain nested loops: projections from matrix entries, scores from the
//! textbook expressions, ranks by counting violated pairs, the rank
//! transform by direct summation of 1/i. It never calls the library's
//! loss path.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use zeroshot::loss::WarpLoss;
use zeroshot::model::{Activation, Compatibility, ProjectionModel};
use zeroshot::{ClassTable, EmbeddingTable, EmbeddingVector, LabeledDataset, LabeledInstance};

pub fn uniform_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale)
        .collect()
}

/// A random task: `n_classes` random class embeddings and `n_instances`
/// random acoustic vectors with round-robin labels.
pub fn random_task(
    rng: &mut ChaCha8Rng,
    n_classes: usize,
    n_instances: usize,
    acoustic_dim: usize,
    semantic_dim: usize,
) -> (LabeledDataset, ClassTable) {
    let classes = EmbeddingTable::new((0..n_classes).map(|c| {
        (
            format!("c{c:02}"),
            EmbeddingVector::new(uniform_vec(rng, semantic_dim, 1.5)).unwrap(),
        )
    }))
    .unwrap();
    let items: Vec<LabeledInstance> = (0..n_instances)
        .map(|i| LabeledInstance {
            id: format!("i{i:02}"),
            acoustic: EmbeddingVector::new(uniform_vec(rng, acoustic_dim, 1.5)).unwrap(),
            class_id: format!("c{:02}", i % n_classes),
        })
        .collect();
    (LabeledDataset::new(items).unwrap(), classes)
}

// ---------------------------------------------------------------------
// brute-force oracle
// ---------------------------------------------------------------------

fn oracle_matvec_transposed(m: &zeroshot::Matrix, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (j, o) in out.iter_mut().enumerate() {
        for (i, xi) in x.iter().enumerate() {
            *o += m.get(i, j) * xi;
        }
    }
    out
}

fn oracle_matvec(m: &zeroshot::Matrix, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.rows()];
    for (i, o) in out.iter_mut().enumerate() {
        for (j, xj) in x.iter().enumerate() {
            *o += m.get(i, j) * xj;
        }
    }
    out
}

fn oracle_activation(a: Activation, v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| match a {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
        })
        .collect()
}

pub fn oracle_project(model: &ProjectionModel, theta: &[f64]) -> Vec<f64> {
    match model {
        ProjectionModel::Bilinear { weight } => oracle_matvec_transposed(weight, theta),
        ProjectionModel::Factored { input, output } => {
            oracle_matvec_transposed(output, &oracle_matvec_transposed(input, theta))
        }
        ProjectionModel::Fc2 {
            input,
            output,
            activation,
        } => oracle_matvec_transposed(
            output,
            &oracle_activation(*activation, &oracle_matvec_transposed(input, theta)),
        ),
        ProjectionModel::Fc3 {
            input,
            hidden,
            output,
            activation,
        } => {
            let h1 = oracle_activation(*activation, &oracle_matvec_transposed(input, theta));
            let h2 = oracle_activation(*activation, &oracle_matvec(hidden, &h1));
            oracle_matvec_transposed(output, &h2)
        }
    }
}

pub fn oracle_score(compat: Compatibility, a: &[f64], b: &[f64]) -> f64 {
    match compat {
        Compatibility::Dot => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        Compatibility::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            dot / (na * nb)
        }
        Compatibility::NegEuclidean => {
            let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            -sq.sqrt()
        }
    }
}

/// Double-loop WARP objective straight from the formulas: for every
/// instance, score every class, count margin violations for the rank,
/// weight by `(sum of 1/i) / rank` with 0/0 = 0, sum clamped pairwise
/// hinges over all classes, average over instances, add the L2 term.
pub fn oracle_warp_objective(
    data: &LabeledDataset,
    classes: &ClassTable,
    model: &ProjectionModel,
    compat: Compatibility,
    l2_lambda: f64,
) -> f64 {
    let mut total = 0.0;
    for item in data.items() {
        let projected = oracle_project(model, item.acoustic.values());
        let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
        for (id, emb) in classes.iter() {
            scores.insert(id, oracle_score(compat, &projected, emb.values()));
        }
        let true_score = scores[item.class_id.as_str()];
        let mut rank = 0usize;
        for (id, s) in &scores {
            if *id != item.class_id && 1.0 + s - true_score > 0.0 {
                rank += 1;
            }
        }
        if rank == 0 {
            continue; // 0/0 convention: weight is zero
        }
        let mut beta = 0.0;
        for i in 1..=rank {
            beta += 1.0 / i as f64;
        }
        let weight = beta / rank as f64;
        let mut pairwise = 0.0;
        for (id, s) in &scores {
            let margin = if *id == item.class_id { 0.0 } else { 1.0 };
            let l = margin + s - true_score;
            if l > 0.0 {
                pairwise += l;
            }
        }
        total += weight * pairwise;
    }
    let mut l2 = 0.0;
    for m in model.matrices() {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                l2 += m.get(i, j) * m.get(i, j);
            }
        }
    }
    total / data.len() as f64 + l2_lambda * l2
}

// ---------------------------------------------------------------------
// finite-difference gradient harness
// ---------------------------------------------------------------------

/// Smallest |hinge| over all (instance, wrong-class) pairs; the true-class
/// pair is identically zero and excluded.
pub fn min_abs_hinge(
    data: &LabeledDataset,
    classes: &ClassTable,
    model: &ProjectionModel,
    compat: Compatibility,
) -> f64 {
    let mut min = f64::INFINITY;
    for item in data.items() {
        let projected = oracle_project(model, item.acoustic.values());
        let true_score = oracle_score(
            compat,
            &projected,
            classes.get(&item.class_id).unwrap().values(),
        );
        for (id, emb) in classes.iter() {
            if id == item.class_id {
                continue;
            }
            let l = 1.0 + oracle_score(compat, &projected, emb.values()) - true_score;
            min = min.min(l.abs());
        }
    }
    min
}

pub struct FdOutcome {
    pub max_relative_error: f64,
    pub checked_coordinates: usize,
    pub skipped_coordinates: usize,
}

/// Central finite differences against the analytic gradient.
///
/// Coordinates where a perturbation changes any instance's rank are
/// skipped (the per-instance weight is treated as constant during
/// differentiation, so the comparison is only valid at fixed ranks).
/// Differences below 1e-8 in absolute value count as agreement.
pub fn finite_difference_check(
    loss: &WarpLoss,
    data: &LabeledDataset,
    classes: &ClassTable,
    model: &ProjectionModel,
    compat: Compatibility,
    step: f64,
) -> FdOutcome {
    let base_ranks: Vec<usize> = loss
        .objective(data, classes, model, compat)
        .unwrap()
        .per_instance
        .iter()
        .map(|p| p.rank)
        .collect();
    let analytic = loss.gradient(data, classes, model, compat).unwrap();
    let mut max_rel: f64 = 0.0;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for k in 0..analytic.matrices().len() {
        let (rows, cols) = (
            analytic.matrices()[k].rows(),
            analytic.matrices()[k].cols(),
        );
        for i in 0..rows {
            for j in 0..cols {
                let eval = |delta: f64| {
                    let mut perturbed = model.clone();
                    let v = perturbed.matrices()[k].get(i, j);
                    perturbed.matrices_mut()[k].set(i, j, v + delta);
                    loss.objective(data, classes, &perturbed, compat).unwrap()
                };
                let plus = eval(step);
                let minus = eval(-step);
                let ranks_stable = |r: &zeroshot::LossReport| {
                    r.per_instance
                        .iter()
                        .map(|p| p.rank)
                        .eq(base_ranks.iter().copied())
                };
                if !ranks_stable(&plus) || !ranks_stable(&minus) {
                    skipped += 1;
                    continue;
                }
                let fd = (plus.objective - minus.objective) / (2.0 * step);
                let g = analytic.matrices()[k].get(i, j);
                checked += 1;
                if (fd - g).abs() > 1e-8 {
                    max_rel = max_rel.max((fd - g).abs() / fd.abs().max(g.abs()));
                }
            }
        }
    }
    FdOutcome {
        max_relative_error: max_rel,
        checked_coordinates: checked,
        skipped_coordinates: skipped,
    }
}
