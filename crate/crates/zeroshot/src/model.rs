//! The projection family and compatibility scoring.
//!
//! Four model shapes map an acoustic embedding into the semantic space:
//!
//! * `Bilinear`: a single weight matrix applied transposed
//! * `Factored`: the same map written as a rank-r product
//! * `Fc2`: factored map with an elementwise nonlinearity between the
//!   two layers (a bias-free two-layer network)
//! * `Fc3`: one extra square hidden layer and nonlinearity
//!
//! Matrices are row-major and every matrix-vector product accumulates in
//! ascending index order, so identical inputs give bit-identical outputs
//! on any platform.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};

/// A dense row-major matrix of finite `f64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from row-major data; length must equal `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::InvalidParameter {
                name: "matrix",
                reason: format!(
                    "shape {rows}x{cols} does not match data length {}",
                    data.len()
                ),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "matrix" });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `y = Mᵀ x`: `y[j] = Σ_i M[i][j]·x[i]`, `i` ascending.
    pub fn transposed_apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (yj, &m) in y.iter_mut().zip(row) {
                *yj += m * xi;
            }
        }
        y
    }

    /// `y = M x`: `y[i] = Σ_j M[i][j]·x[j]`, `j` ascending.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (&m, &xj) in row.iter().zip(x) {
                acc += m * xj;
            }
            *yi = acc;
        }
        y
    }

    /// Squared Frobenius norm, accumulated in row-major order.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// `self += factor · other` (same shape).
    pub fn add_scaled(&mut self, other: &Matrix, factor: f64) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    /// `self += factor · col·rowᵀ` (outer product update).
    pub fn add_outer(&mut self, col: &[f64], row: &[f64], factor: f64) {
        debug_assert_eq!(col.len(), self.rows);
        debug_assert_eq!(row.len(), self.cols);
        for (i, &c) in col.iter().enumerate() {
            let dst = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (d, &r) in dst.iter_mut().zip(row) {
                *d += factor * c * r;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.data.iter_mut() {
            *v *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Elementwise nonlinearity used by the `Fc2` and `Fc3` shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn apply_scalar(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
        }
    }

    pub fn apply(self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&x| self.apply_scalar(x)).collect()
    }

    /// Derivative at pre-activation `x`; relu uses the subgradient 0 at 0.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = self.apply_scalar(x);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        };
        f.write_str(s)
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidParameter {
                name: "activation",
                reason: format!("unknown activation `{other}`"),
            }),
        }
    }
}

/// Similarity between a projected acoustic embedding and a class embedding.
///
/// Euclidean distance is negated so that the best class is always the
/// argmax, whichever kind is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compatibility {
    Dot,
    Cosine,
    NegEuclidean,
}

impl fmt::Display for Compatibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Compatibility::Dot => "dot",
            Compatibility::Cosine => "cosine",
            Compatibility::NegEuclidean => "neg-euclidean",
        };
        f.write_str(s)
    }
}

impl FromStr for Compatibility {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(Compatibility::Dot),
            "cosine" => Ok(Compatibility::Cosine),
            "neg-euclidean" => Ok(Compatibility::NegEuclidean),
            other => Err(Error::InvalidParameter {
                name: "compatibility",
                reason: format!("unknown compatibility `{other}`"),
            }),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scores two same-dimension vectors under the chosen compatibility.
pub fn compatibility_score(kind: Compatibility, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "compatibility_score",
            expected: a.len(),
            got: b.len(),
        });
    }
    match kind {
        Compatibility::Dot => Ok(dot(a, b)),
        Compatibility::Cosine => {
            let na = norm(a);
            let nb = norm(b);
            if na == 0.0 || nb == 0.0 {
                return Err(Error::ZeroNorm {
                    context: "cosine compatibility",
                });
            }
            Ok(dot(a, b) / (na * nb))
        }
        Compatibility::NegEuclidean => {
            let mut acc = 0.0;
            for (x, y) in a.iter().zip(b) {
                let d = x - y;
                acc += d * d;
            }
            Ok(-acc.sqrt())
        }
    }
}

/// The shape of a projection, without its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Bilinear,
    Factored,
    Fc2,
    Fc3,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::Bilinear => "bilinear",
            ModelKind::Factored => "factored",
            ModelKind::Fc2 => "fc2",
            ModelKind::Fc3 => "fc3",
        };
        f.write_str(s)
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(ModelKind::Bilinear),
            "factored" => Ok(ModelKind::Factored),
            "fc2" => Ok(ModelKind::Fc2),
            "fc3" => Ok(ModelKind::Fc3),
            other => Err(Error::InvalidParameter {
                name: "model kind",
                reason: format!("unknown model kind `{other}`"),
            }),
        }
    }
}

/// An acoustic-to-semantic projection. No variant has bias parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionModel {
    /// `project(x) = Wᵀx` with `W` of shape `d_a × d_s`.
    Bilinear { weight: Matrix },
    /// `project(x) = Vᵀ(Uᵀx)` with `U: d_a × r`, `V: r × d_s`.
    Factored { input: Matrix, output: Matrix },
    /// `project(x) = Vᵀ t(Uᵀx)` for activation `t`.
    Fc2 {
        input: Matrix,
        output: Matrix,
        activation: Activation,
    },
    /// `project(x) = Vᵀ t(Q t(Uᵀx))` with a square hidden matrix `Q: r × r`.
    Fc3 {
        input: Matrix,
        hidden: Matrix,
        output: Matrix,
        activation: Activation,
    },
}

impl ProjectionModel {
    pub fn bilinear(weight: Matrix) -> Self {
        ProjectionModel::Bilinear { weight }
    }

    pub fn factored(input: Matrix, output: Matrix) -> Result<Self> {
        if input.cols() != output.rows() {
            return Err(Error::DimensionMismatch {
                context: "factored model",
                expected: input.cols(),
                got: output.rows(),
            });
        }
        Ok(ProjectionModel::Factored { input, output })
    }

    pub fn fc2(input: Matrix, output: Matrix, activation: Activation) -> Result<Self> {
        if input.cols() != output.rows() {
            return Err(Error::DimensionMismatch {
                context: "fc2 model",
                expected: input.cols(),
                got: output.rows(),
            });
        }
        Ok(ProjectionModel::Fc2 {
            input,
            output,
            activation,
        })
    }

    pub fn fc3(
        input: Matrix,
        hidden: Matrix,
        output: Matrix,
        activation: Activation,
    ) -> Result<Self> {
        if input.cols() != hidden.cols() || hidden.rows() != hidden.cols() {
            return Err(Error::DimensionMismatch {
                context: "fc3 hidden matrix",
                expected: input.cols(),
                got: hidden.rows(),
            });
        }
        if hidden.rows() != output.rows() {
            return Err(Error::DimensionMismatch {
                context: "fc3 model",
                expected: hidden.rows(),
                got: output.rows(),
            });
        }
        Ok(ProjectionModel::Fc3 {
            input,
            hidden,
            output,
            activation,
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ProjectionModel::Bilinear { .. } => ModelKind::Bilinear,
            ProjectionModel::Factored { .. } => ModelKind::Factored,
            ProjectionModel::Fc2 { .. } => ModelKind::Fc2,
            ProjectionModel::Fc3 { .. } => ModelKind::Fc3,
        }
    }

    pub fn acoustic_dim(&self) -> usize {
        match self {
            ProjectionModel::Bilinear { weight } => weight.rows(),
            ProjectionModel::Factored { input, .. }
            | ProjectionModel::Fc2 { input, .. }
            | ProjectionModel::Fc3 { input, .. } => input.rows(),
        }
    }

    pub fn semantic_dim(&self) -> usize {
        match self {
            ProjectionModel::Bilinear { weight } => weight.cols(),
            ProjectionModel::Factored { output, .. }
            | ProjectionModel::Fc2 { output, .. }
            | ProjectionModel::Fc3 { output, .. } => output.cols(),
        }
    }

    /// Inner width of the factorization; `None` for the bilinear shape.
    pub fn rank(&self) -> Option<usize> {
        match self {
            ProjectionModel::Bilinear { .. } => None,
            ProjectionModel::Factored { input, .. }
            | ProjectionModel::Fc2 { input, .. }
            | ProjectionModel::Fc3 { input, .. } => Some(input.cols()),
        }
    }

    pub fn activation(&self) -> Option<Activation> {
        match self {
            ProjectionModel::Fc2 { activation, .. } | ProjectionModel::Fc3 { activation, .. } => {
                Some(*activation)
            }
            _ => None,
        }
    }

    /// Parameter matrices in a fixed order: input-to-output along the
    /// data path. Gradients use the same order.
    pub fn matrices(&self) -> Vec<&Matrix> {
        match self {
            ProjectionModel::Bilinear { weight } => vec![weight],
            ProjectionModel::Factored { input, output }
            | ProjectionModel::Fc2 { input, output, .. } => vec![input, output],
            ProjectionModel::Fc3 {
                input,
                hidden,
                output,
                ..
            } => vec![input, hidden, output],
        }
    }

    pub fn matrices_mut(&mut self) -> Vec<&mut Matrix> {
        match self {
            ProjectionModel::Bilinear { weight } => vec![weight],
            ProjectionModel::Factored { input, output }
            | ProjectionModel::Fc2 { input, output, .. } => vec![input, output],
            ProjectionModel::Fc3 {
                input,
                hidden,
                output,
                ..
            } => vec![input, hidden, output],
        }
    }

    /// Names matching `matrices()` order, used by the checkpoint format.
    pub fn matrix_names(&self) -> Vec<&'static str> {
        match self {
            ProjectionModel::Bilinear { .. } => vec!["weight"],
            ProjectionModel::Factored { .. } | ProjectionModel::Fc2 { .. } => {
                vec!["input", "output"]
            }
            ProjectionModel::Fc3 { .. } => vec!["input", "hidden", "output"],
        }
    }

    /// Sum of squared Frobenius norms over all parameter matrices.
    pub fn frobenius_sq_sum(&self) -> f64 {
        self.matrices().iter().map(|m| m.frobenius_sq()).sum()
    }

    /// Projection on raw slices; no finiteness check on the output.
    pub(crate) fn project_raw(&self, acoustic: &[f64]) -> Vec<f64> {
        match self {
            ProjectionModel::Bilinear { weight } => weight.transposed_apply(acoustic),
            ProjectionModel::Factored { input, output } => {
                output.transposed_apply(&input.transposed_apply(acoustic))
            }
            ProjectionModel::Fc2 {
                input,
                output,
                activation,
            } => output.transposed_apply(&activation.apply(&input.transposed_apply(acoustic))),
            ProjectionModel::Fc3 {
                input,
                hidden,
                output,
                activation,
            } => {
                let h1 = activation.apply(&input.transposed_apply(acoustic));
                let h2 = activation.apply(&hidden.apply(&h1));
                output.transposed_apply(&h2)
            }
        }
    }

    /// Maps an acoustic embedding into the semantic space.
    pub fn project(&self, acoustic: &EmbeddingVector) -> Result<EmbeddingVector> {
        if acoustic.dim() != self.acoustic_dim() {
            return Err(Error::DimensionMismatch {
                context: "project",
                expected: self.acoustic_dim(),
                got: acoustic.dim(),
            });
        }
        EmbeddingVector::new(self.project_raw(acoustic.values()))
    }
}

/// Seeded random initialization.
///
/// Every entry is drawn uniformly from `[-1/√fan_in, +1/√fan_in]`, where
/// fan_in is the dimension each matrix consumes (`d_a` for the input
/// matrix or the bilinear weight, `r` for hidden and output matrices).
/// Matrices fill in data-path order, entries in row-major order, from a
/// ChaCha8 generator seeded with `seed`.
pub fn init_model(
    kind: ModelKind,
    acoustic_dim: usize,
    semantic_dim: usize,
    rank: usize,
    activation: Option<Activation>,
    seed: u64,
) -> Result<ProjectionModel> {
    if acoustic_dim == 0 || semantic_dim == 0 {
        return Err(Error::InvalidParameter {
            name: "dimensions",
            reason: "dimensions must be positive".into(),
        });
    }
    let max_rank = acoustic_dim.min(semantic_dim);
    if rank == 0 {
        return Err(Error::InvalidParameter {
            name: "rank",
            reason: "rank must be positive".into(),
        });
    }
    if rank > max_rank && kind != ModelKind::Bilinear {
        return Err(Error::RankTooLarge {
            rank,
            max: max_rank,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows: usize, cols: usize, fan_in: usize| {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| (2.0 * rng.random::<f64>() - 1.0) * bound)
            .collect();
        Matrix::from_row_major(rows, cols, data)
    };
    match kind {
        ModelKind::Bilinear => Ok(ProjectionModel::bilinear(draw(
            acoustic_dim,
            semantic_dim,
            acoustic_dim,
        )?)),
        ModelKind::Factored => {
            let input = draw(acoustic_dim, rank, acoustic_dim)?;
            let output = draw(rank, semantic_dim, rank)?;
            ProjectionModel::factored(input, output)
        }
        ModelKind::Fc2 => {
            let activation = activation.ok_or(Error::InvalidParameter {
                name: "activation",
                reason: "fc2 requires an activation".into(),
            })?;
            let input = draw(acoustic_dim, rank, acoustic_dim)?;
            let output = draw(rank, semantic_dim, rank)?;
            ProjectionModel::fc2(input, output, activation)
        }
        ModelKind::Fc3 => {
            let activation = activation.ok_or(Error::InvalidParameter {
                name: "activation",
                reason: "fc3 requires an activation".into(),
            })?;
            let input = draw(acoustic_dim, rank, acoustic_dim)?;
            let hidden = draw(rank, rank, rank)?;
            let output = draw(rank, semantic_dim, rank)?;
            ProjectionModel::fc3(input, hidden, output, activation)
        }
    }
}

/// Serializes a model with the seed it was created from.
///
/// Header lines are `key\tvalue`; `rank` and `activation` are `-` when the
/// shape has none. Each matrix block starts with
/// `matrix\t<name>\t<rows>\t<cols>` followed by one space-separated row per
/// line. Floats use shortest round-trip decimals, so read-back is exact.
pub fn checkpoint_to_string(model: &ProjectionModel, seed: u64) -> String {
    let mut out = String::new();
    out.push_str(&format!("kind\t{}\n", model.kind()));
    out.push_str(&format!("acoustic_dim\t{}\n", model.acoustic_dim()));
    out.push_str(&format!("semantic_dim\t{}\n", model.semantic_dim()));
    match model.rank() {
        Some(r) => out.push_str(&format!("rank\t{r}\n")),
        None => out.push_str("rank\t-\n"),
    }
    match model.activation() {
        Some(a) => out.push_str(&format!("activation\t{a}\n")),
        None => out.push_str("activation\t-\n"),
    }
    out.push_str(&format!("seed\t{seed}\n"));
    for (name, m) in model.matrix_names().iter().zip(model.matrices()) {
        out.push_str(&format!("matrix\t{name}\t{}\t{}\n", m.rows(), m.cols()));
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if j > 0 {
                    out.push(' ');
                }
                out.push_str(&format!("{}", m.get(i, j)));
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_checkpoint(model: &ProjectionModel, seed: u64, path: &Path) -> Result<()> {
    std::fs::write(path, checkpoint_to_string(model, seed)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct CheckpointLines<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    source_name: String,
}

impl<'a> CheckpointLines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        for (i, line) in self.lines.by_ref() {
            if !line.trim().is_empty() {
                return Ok((i + 1, line));
            }
        }
        Err(Error::CheckpointFormat {
            source_name: self.source_name.clone(),
            line: 0,
            reason: "unexpected end of checkpoint".into(),
        })
    }

    fn err(&self, line: usize, reason: impl Into<String>) -> Error {
        Error::CheckpointFormat {
            source_name: self.source_name.clone(),
            line,
            reason: reason.into(),
        }
    }
}

/// Parses a checkpoint produced by [`checkpoint_to_string`].
pub fn parse_checkpoint_str(text: &str, source_name: &str) -> Result<(ProjectionModel, u64)> {
    let mut reader = CheckpointLines {
        lines: text.lines().enumerate(),
        source_name: source_name.to_string(),
    };
    let mut header: Vec<(usize, String, String)> = Vec::new();
    for _ in 0..6 {
        let (no, line) = reader.next_line()?;
        let (key, value) = line
            .split_once('\t')
            .ok_or_else(|| reader.err(no, "expected `key\\tvalue`"))?;
        header.push((no, key.to_string(), value.to_string()));
    }
    let field = |key: &str| -> Result<(usize, String)> {
        header
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(no, _, v)| (*no, v.clone()))
            .ok_or_else(|| reader.err(0, format!("missing header field `{key}`")))
    };
    let (no, kind_s) = field("kind")?;
    let kind: ModelKind = kind_s.parse().map_err(|_| reader.err(no, "bad kind"))?;
    let (no, d_a) = field("acoustic_dim")?;
    let d_a: usize = d_a
        .parse()
        .map_err(|_| reader.err(no, "bad acoustic_dim"))?;
    let (no, d_s) = field("semantic_dim")?;
    let d_s: usize = d_s
        .parse()
        .map_err(|_| reader.err(no, "bad semantic_dim"))?;
    let (no, rank_s) = field("rank")?;
    let rank: Option<usize> = if rank_s == "-" {
        None
    } else {
        Some(rank_s.parse().map_err(|_| reader.err(no, "bad rank"))?)
    };
    let (no, act_s) = field("activation")?;
    let activation: Option<Activation> = if act_s == "-" {
        None
    } else {
        Some(act_s.parse().map_err(|_| reader.err(no, "bad activation"))?)
    };
    let (no, seed_s) = field("seed")?;
    let seed: u64 = seed_s.parse().map_err(|_| reader.err(no, "bad seed"))?;

    let expected: Vec<(&str, usize, usize)> = match kind {
        ModelKind::Bilinear => vec![("weight", d_a, d_s)],
        ModelKind::Factored | ModelKind::Fc2 => {
            let r = rank.ok_or_else(|| reader.err(0, "missing rank"))?;
            vec![("input", d_a, r), ("output", r, d_s)]
        }
        ModelKind::Fc3 => {
            let r = rank.ok_or_else(|| reader.err(0, "missing rank"))?;
            vec![("input", d_a, r), ("hidden", r, r), ("output", r, d_s)]
        }
    };
    let mut matrices = Vec::new();
    for (name, rows, cols) in expected {
        let (no, line) = reader.next_line()?;
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 4 || parts[0] != "matrix" || parts[1] != name {
            return Err(reader.err(no, format!("expected `matrix\\t{name}\\t{rows}\\t{cols}`")));
        }
        let (pr, pc): (usize, usize) = (
            parts[2].parse().map_err(|_| reader.err(no, "bad rows"))?,
            parts[3].parse().map_err(|_| reader.err(no, "bad cols"))?,
        );
        if (pr, pc) != (rows, cols) {
            return Err(reader.err(no, format!("expected shape {rows}x{cols}, got {pr}x{pc}")));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (no, line) = reader.next_line()?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| reader.err(no, "bad matrix value"))?;
            if row.len() != cols {
                return Err(reader.err(no, format!("expected {cols} values, got {}", row.len())));
            }
            data.extend(row);
        }
        matrices.push(Matrix::from_row_major(rows, cols, data)?);
    }
    let model = match kind {
        ModelKind::Bilinear => ProjectionModel::bilinear(matrices.remove(0)),
        ModelKind::Factored => {
            let input = matrices.remove(0);
            ProjectionModel::factored(input, matrices.remove(0))?
        }
        ModelKind::Fc2 => {
            let act = activation.ok_or_else(|| reader.err(0, "fc2 requires an activation"))?;
            let input = matrices.remove(0);
            ProjectionModel::fc2(input, matrices.remove(0), act)?
        }
        ModelKind::Fc3 => {
            let act = activation.ok_or_else(|| reader.err(0, "fc3 requires an activation"))?;
            let input = matrices.remove(0);
            let hidden = matrices.remove(0);
            ProjectionModel::fc3(input, hidden, matrices.remove(0), act)?
        }
    };
    Ok((model, seed))
}

pub fn read_checkpoint(path: &Path) -> Result<(ProjectionModel, u64)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_checkpoint_str(&text, &path.display().to_string())
}
