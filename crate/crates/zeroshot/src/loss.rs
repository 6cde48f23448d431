//! Weighted approximate-rank pairwise (WARP) ranking loss with analytic
//! subgradients for every projection shape.
//!
//! For an instance with true class `y`, the per-instance term is
//!
//! ```text
//! (beta(r_y) / r_y) * sum_over_classes max{0, margin + s(c) - s(y)}
//! ```
//!
//! where `s(c)` is the compatibility between the projected acoustic
//! embedding and class `c`, the margin is 1 for `c != y` and 0 otherwise,
//! `beta(r) = sum_{i=1..r} alpha_i` with `alpha_i = 1/i` by default, and
//! 0/0 is taken as 0 when the true class is top-ranked. The objective
//! averages the per-instance terms and adds an L2 penalty over all
//! parameter matrices. Ranks are exact (full enumeration over the class
//! table); there is no sampling.

use std::collections::BTreeMap;

use crate::embedding::{ClassTable, LabeledDataset, LabeledInstance};
use crate::error::{Error, Result};
use crate::model::{compatibility_score, dot, norm, Compatibility, Matrix, ProjectionModel};

/// Per-position rank penalties.
///
/// The default sequence is the harmonic `alpha_i = 1/i`. A custom sequence
/// must be non-increasing and non-negative; positions past its end
/// contribute zero (a top-k truncation).
#[derive(Debug, Clone, PartialEq)]
pub struct RankPenalty {
    custom: Option<Vec<f64>>,
}

impl RankPenalty {
    pub fn harmonic() -> Self {
        Self { custom: None }
    }

    pub fn with_custom(penalties: Vec<f64>) -> Result<Self> {
        if penalties.is_empty() {
            return Err(Error::EmptySequence {
                context: "rank penalty",
            });
        }
        let ok = penalties.iter().all(|p| p.is_finite() && *p >= 0.0)
            && penalties.windows(2).all(|w| w[0] >= w[1]);
        if !ok {
            return Err(Error::InvalidParameter {
                name: "rank penalty",
                reason: "penalties must be non-negative and non-increasing".into(),
            });
        }
        Ok(Self {
            custom: Some(penalties),
        })
    }

    /// The penalty for losing one position, `alpha_i` with `i >= 1`.
    pub fn penalty_at(&self, i: usize) -> f64 {
        debug_assert!(i >= 1);
        match &self.custom {
            None => 1.0 / i as f64,
            Some(seq) => seq.get(i - 1).copied().unwrap_or(0.0),
        }
    }

    /// The rank-error transform `beta(r)`, summed in ascending position order.
    pub fn cumulative(&self, rank: usize) -> f64 {
        (1..=rank).map(|i| self.penalty_at(i)).sum()
    }

    /// Per-instance weight `beta(r)/r`, with the 0/0 = 0 convention.
    pub fn weight(&self, rank: usize) -> f64 {
        if rank == 0 {
            0.0
        } else {
            self.cumulative(rank) / rank as f64
        }
    }
}

impl Default for RankPenalty {
    fn default() -> Self {
        Self::harmonic()
    }
}

/// How the true class's rank is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankMode {
    /// Number of other classes whose hinge term is violated
    /// (`1 + s(c) - s(y) > 0`). This is the pairing the objective's inner
    /// sum uses, so rank 0 coincides exactly with a zero data term.
    #[default]
    MarginViolations,
    /// Plain position of the true class in the score-sorted list
    /// (0 = first place; ties resolved by ascending class id).
    SortedPosition,
}

/// The raw pairwise term `margin + s(candidate) - s(true)`.
///
/// The margin is 0 when the candidate is the true class (the term is then
/// identically zero) and 1 otherwise. Clamping at zero is the objective's
/// job, not this function's.
pub fn hinge_loss(candidate_score: f64, true_score: f64, same_class: bool) -> f64 {
    let margin = if same_class { 0.0 } else { 1.0 };
    margin + candidate_score - true_score
}

/// Number of classes violating the unit margin against the true class.
pub fn margin_rank(scores: &BTreeMap<String, f64>, true_class: &str) -> Result<usize> {
    let &true_score = scores.get(true_class).ok_or_else(|| Error::UnknownClass {
        class_id: true_class.to_string(),
    })?;
    Ok(scores
        .iter()
        .filter(|(id, _)| id.as_str() != true_class)
        .filter(|(_, &s)| hinge_loss(s, true_score, false) > 0.0)
        .count())
}

/// Position of the true class when classes are sorted by descending score,
/// ties broken by ascending class id.
pub fn sorted_position_rank(scores: &BTreeMap<String, f64>, true_class: &str) -> Result<usize> {
    let &true_score = scores.get(true_class).ok_or_else(|| Error::UnknownClass {
        class_id: true_class.to_string(),
    })?;
    Ok(scores
        .iter()
        .filter(|(id, _)| id.as_str() != true_class)
        .filter(|(id, &s)| s > true_score || (s == true_score && id.as_str() < true_class))
        .count())
}

/// One dataset instance's contribution to the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct PerInstanceLoss {
    pub instance_id: String,
    /// The true class's rank under the configured [`RankMode`].
    pub rank: usize,
    /// `weight(rank) * sum_over_classes max{0, hinge}`.
    pub weighted_loss: f64,
}

/// Objective value with its per-instance decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    /// Mean of the per-instance weighted losses plus the L2 penalty.
    pub objective: f64,
    pub per_instance: Vec<PerInstanceLoss>,
    pub l2_penalty: f64,
}

/// Gradient with one matrix per model parameter matrix, in
/// [`ProjectionModel::matrices`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradient {
    matrices: Vec<Matrix>,
}

impl ModelGradient {
    pub fn zeros_like(model: &ProjectionModel) -> Self {
        Self {
            matrices: model
                .matrices()
                .iter()
                .map(|m| Matrix::zeros(m.rows(), m.cols()))
                .collect(),
        }
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn matrices_mut(&mut self) -> &mut [Matrix] {
        &mut self.matrices
    }

    /// Largest absolute entry across all matrices.
    pub fn max_abs(&self) -> f64 {
        self.matrices
            .iter()
            .flat_map(|m| m.data().iter())
            .fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }
}

/// Applies `model += scale * gradient`; an SGD step uses `scale = -lr`.
pub fn apply_gradient(model: &mut ProjectionModel, gradient: &ModelGradient, scale: f64) {
    for (m, g) in model.matrices_mut().into_iter().zip(gradient.matrices()) {
        m.add_scaled(g, scale);
    }
}

/// The WARP objective: rank penalties, rank mode, and L2 coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpLoss {
    penalty: RankPenalty,
    rank_mode: RankMode,
    l2_lambda: f64,
}

impl WarpLoss {
    /// Harmonic penalties, margin-violation ranks, the given L2 coefficient.
    pub fn new(l2_lambda: f64) -> Result<Self> {
        if !l2_lambda.is_finite() || l2_lambda < 0.0 {
            return Err(Error::InvalidParameter {
                name: "l2_lambda",
                reason: "must be finite and non-negative".into(),
            });
        }
        Ok(Self {
            penalty: RankPenalty::harmonic(),
            rank_mode: RankMode::MarginViolations,
            l2_lambda,
        })
    }

    pub fn with_penalty(mut self, penalty: RankPenalty) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn with_rank_mode(mut self, mode: RankMode) -> Self {
        self.rank_mode = mode;
        self
    }

    pub fn l2_lambda(&self) -> f64 {
        self.l2_lambda
    }

    pub fn rank_mode(&self) -> RankMode {
        self.rank_mode
    }

    pub fn penalty(&self) -> &RankPenalty {
        &self.penalty
    }

    fn scores_for(
        &self,
        instance: &LabeledInstance,
        classes: &ClassTable,
        model: &ProjectionModel,
        compat: Compatibility,
        projected: &[f64],
    ) -> Result<BTreeMap<String, f64>> {
        if !classes.contains(&instance.class_id) {
            return Err(Error::UnknownClass {
                class_id: instance.class_id.clone(),
            });
        }
        if instance.acoustic.dim() != model.acoustic_dim() {
            return Err(Error::DimensionMismatch {
                context: "warp loss",
                expected: model.acoustic_dim(),
                got: instance.acoustic.dim(),
            });
        }
        let mut scores = BTreeMap::new();
        for (id, emb) in classes.iter() {
            let s = compatibility_score(compat, projected, emb.values())?;
            scores.insert(id.to_string(), s);
        }
        Ok(scores)
    }

    fn rank_of(&self, scores: &BTreeMap<String, f64>, true_class: &str) -> Result<usize> {
        match self.rank_mode {
            RankMode::MarginViolations => margin_rank(scores, true_class),
            RankMode::SortedPosition => sorted_position_rank(scores, true_class),
        }
    }

    /// Objective over a slice of instances (a mini-batch or full dataset).
    /// The data term is normalized by the slice length.
    pub fn objective_over(
        &self,
        items: &[LabeledInstance],
        classes: &ClassTable,
        model: &ProjectionModel,
        compat: Compatibility,
    ) -> Result<LossReport> {
        if items.is_empty() {
            return Err(Error::EmptySequence {
                context: "warp objective",
            });
        }
        if classes.dim() != model.semantic_dim() {
            return Err(Error::DimensionMismatch {
                context: "warp loss class table",
                expected: model.semantic_dim(),
                got: classes.dim(),
            });
        }
        let mut per_instance = Vec::with_capacity(items.len());
        let mut total = 0.0;
        for item in items {
            let projected = model.project_raw(item.acoustic.values());
            let scores = self.scores_for(item, classes, model, compat, &projected)?;
            let rank = self.rank_of(&scores, &item.class_id)?;
            let weight = self.penalty.weight(rank);
            let weighted_loss = if weight == 0.0 {
                0.0
            } else {
                let true_score = scores[&item.class_id];
                let pairwise: f64 = scores
                    .iter()
                    .map(|(id, &s)| hinge_loss(s, true_score, id == &item.class_id).max(0.0))
                    .sum();
                weight * pairwise
            };
            total += weighted_loss;
            per_instance.push(PerInstanceLoss {
                instance_id: item.id.clone(),
                rank,
                weighted_loss,
            });
        }
        let l2_penalty = self.l2_lambda * model.frobenius_sq_sum();
        Ok(LossReport {
            objective: total / items.len() as f64 + l2_penalty,
            per_instance,
            l2_penalty,
        })
    }

    pub fn objective(
        &self,
        dataset: &LabeledDataset,
        classes: &ClassTable,
        model: &ProjectionModel,
        compat: Compatibility,
    ) -> Result<LossReport> {
        self.objective_over(dataset.items(), classes, model, compat)
    }

    /// Subgradient of [`Self::objective_over`] with respect to every
    /// parameter matrix.
    ///
    /// The per-instance weight `beta(r)/r` is treated as a constant (the
    /// rank does not feed the chain rule), and violated hinge terms use
    /// their full gradient while terms at or below zero contribute nothing.
    pub fn gradient_over(
        &self,
        items: &[LabeledInstance],
        classes: &ClassTable,
        model: &ProjectionModel,
        compat: Compatibility,
    ) -> Result<ModelGradient> {
        if items.is_empty() {
            return Err(Error::EmptySequence {
                context: "warp gradient",
            });
        }
        if classes.dim() != model.semantic_dim() {
            return Err(Error::DimensionMismatch {
                context: "warp loss class table",
                expected: model.semantic_dim(),
                got: classes.dim(),
            });
        }
        let mut grad = ModelGradient::zeros_like(model);
        let inv_n = 1.0 / items.len() as f64;
        for item in items {
            let projected = model.project_raw(item.acoustic.values());
            let scores = self.scores_for(item, classes, model, compat, &projected)?;
            let rank = self.rank_of(&scores, &item.class_id)?;
            let weight = self.penalty.weight(rank);
            if weight == 0.0 {
                continue;
            }
            let true_score = scores[&item.class_id];
            let true_emb = classes.get(&item.class_id).expect("checked above");
            // d(loss)/d(projected), accumulated over violating classes
            let mut upstream = vec![0.0; model.semantic_dim()];
            let mut violations = 0usize;
            for (id, emb) in classes.iter() {
                if id == item.class_id {
                    continue;
                }
                if hinge_loss(scores[id], true_score, false) > 0.0 {
                    violations += 1;
                    let g = score_grad_wrt_projected(compat, &projected, emb.values())?;
                    for (u, gi) in upstream.iter_mut().zip(&g) {
                        *u += gi;
                    }
                }
            }
            if violations > 0 {
                let g_true = score_grad_wrt_projected(compat, &projected, true_emb.values())?;
                for (u, gi) in upstream.iter_mut().zip(&g_true) {
                    *u -= violations as f64 * gi;
                }
                accumulate_projection_gradient(
                    model,
                    item.acoustic.values(),
                    &upstream,
                    weight * inv_n,
                    &mut grad,
                );
            }
        }
        if self.l2_lambda > 0.0 {
            for (g, m) in grad.matrices_mut().iter_mut().zip(model.matrices()) {
                g.add_scaled(m, 2.0 * self.l2_lambda);
            }
        }
        Ok(grad)
    }

    pub fn gradient(
        &self,
        dataset: &LabeledDataset,
        classes: &ClassTable,
        model: &ProjectionModel,
        compat: Compatibility,
    ) -> Result<ModelGradient> {
        self.gradient_over(dataset.items(), classes, model, compat)
    }
}

/// Gradient of `score(projected, class_emb)` with respect to `projected`.
fn score_grad_wrt_projected(
    compat: Compatibility,
    projected: &[f64],
    class_emb: &[f64],
) -> Result<Vec<f64>> {
    match compat {
        Compatibility::Dot => Ok(class_emb.to_vec()),
        Compatibility::NegEuclidean => {
            let mut diff: Vec<f64> = projected.iter().zip(class_emb).map(|(p, b)| p - b).collect();
            let dist = norm(&diff);
            if dist == 0.0 {
                // subgradient at the cusp of the norm
                for d in diff.iter_mut() {
                    *d = 0.0;
                }
                Ok(diff)
            } else {
                for d in diff.iter_mut() {
                    *d = -*d / dist;
                }
                Ok(diff)
            }
        }
        Compatibility::Cosine => {
            let np = norm(projected);
            let nb = norm(class_emb);
            if np == 0.0 || nb == 0.0 {
                return Err(Error::ZeroNorm {
                    context: "cosine gradient",
                });
            }
            let d = dot(projected, class_emb);
            let inv = 1.0 / (np * nb);
            let proj_coeff = d / (np * np * np * nb);
            Ok(projected
                .iter()
                .zip(class_emb)
                .map(|(p, b)| b * inv - p * proj_coeff)
                .collect())
        }
    }
}

/// Backpropagates `factor * upstream` (a semantic-space cotangent) through
/// the projection at `theta`, adding to `grad`.
fn accumulate_projection_gradient(
    model: &ProjectionModel,
    theta: &[f64],
    upstream: &[f64],
    factor: f64,
    grad: &mut ModelGradient,
) {
    match model {
        ProjectionModel::Bilinear { .. } => {
            grad.matrices_mut()[0].add_outer(theta, upstream, factor);
        }
        ProjectionModel::Factored { input, output } => {
            let hidden = input.transposed_apply(theta);
            grad.matrices_mut()[1].add_outer(&hidden, upstream, factor);
            let d_hidden = output.apply(upstream);
            grad.matrices_mut()[0].add_outer(theta, &d_hidden, factor);
        }
        ProjectionModel::Fc2 {
            input,
            output,
            activation,
        } => {
            let pre = input.transposed_apply(theta);
            let hidden = activation.apply(&pre);
            grad.matrices_mut()[1].add_outer(&hidden, upstream, factor);
            let mut d_pre = output.apply(upstream);
            for (d, &p) in d_pre.iter_mut().zip(&pre) {
                *d *= activation.derivative(p);
            }
            grad.matrices_mut()[0].add_outer(theta, &d_pre, factor);
        }
        ProjectionModel::Fc3 {
            input,
            hidden,
            output,
            activation,
        } => {
            let pre1 = input.transposed_apply(theta);
            let h1 = activation.apply(&pre1);
            let pre2 = hidden.apply(&h1);
            let h2 = activation.apply(&pre2);
            grad.matrices_mut()[2].add_outer(&h2, upstream, factor);
            let mut d_pre2 = output.apply(upstream);
            for (d, &p) in d_pre2.iter_mut().zip(&pre2) {
                *d *= activation.derivative(p);
            }
            grad.matrices_mut()[1].add_outer(&d_pre2, &h1, factor);
            let mut d_pre1 = hidden.transposed_apply(&d_pre2);
            for (d, &p) in d_pre1.iter_mut().zip(&pre1) {
                *d *= activation.derivative(p);
            }
            grad.matrices_mut()[0].add_outer(theta, &d_pre1, factor);
        }
    }
}
