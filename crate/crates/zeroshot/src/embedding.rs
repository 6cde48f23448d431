//! Core data types: embedding vectors, labeled datasets, class tables and
//! fold assignments.
//!
//! Every numeric value in the crate is an `f64`. All types here are
//! immutable after construction and safe to share across threads.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A fixed-dimension vector of finite 64-bit floats.
///
/// Holds acoustic embeddings (instance representations) and semantic
/// embeddings (class representations) alike; the two only differ in
/// dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Builds a vector, rejecting empty input and non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySequence {
                context: "embedding vector",
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "embedding vector",
            });
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Elementwise arithmetic mean of a non-empty set of same-dimension vectors.
///
/// This is how clip-level acoustic embeddings are pooled from segment
/// embeddings, and how class semantic embeddings are pooled from the word
/// vectors of a multi-token label.
pub fn average_vectors(vectors: &[EmbeddingVector]) -> Result<EmbeddingVector> {
    let first = vectors.first().ok_or(Error::EmptySequence {
        context: "average_vectors",
    })?;
    let dim = first.dim();
    let mut sum = vec![0.0; dim];
    for v in vectors {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "average_vectors",
                expected: dim,
                got: v.dim(),
            });
        }
        for (acc, x) in sum.iter_mut().zip(v.values()) {
            *acc += x;
        }
    }
    let n = vectors.len() as f64;
    for acc in sum.iter_mut() {
        *acc /= n;
    }
    EmbeddingVector::new(sum)
}

/// One annotated instance: an id, its acoustic embedding, and its class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub id: String,
    pub acoustic: EmbeddingVector,
    pub class_id: String,
}

/// An ordered collection of labeled instances sharing one acoustic dimension.
///
/// Instance ids are unique; iteration order is construction order, which is
/// what seeded shuffling during training operates on.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    items: Vec<LabeledInstance>,
    acoustic_dim: usize,
}

impl LabeledDataset {
    pub fn new(items: Vec<LabeledInstance>) -> Result<Self> {
        let first = items.first().ok_or(Error::EmptySequence {
            context: "labeled dataset",
        })?;
        let acoustic_dim = first.acoustic.dim();
        let mut seen = std::collections::BTreeSet::new();
        for (i, item) in items.iter().enumerate() {
            if item.acoustic.dim() != acoustic_dim {
                return Err(Error::DimensionMismatch {
                    context: "labeled dataset",
                    expected: acoustic_dim,
                    got: item.acoustic.dim(),
                });
            }
            if !seen.insert(item.id.as_str()) {
                return Err(Error::DuplicateId {
                    source_name: "labeled dataset".into(),
                    line: i + 1,
                    id: item.id.clone(),
                });
            }
        }
        Ok(Self {
            items,
            acoustic_dim,
        })
    }

    pub fn items(&self) -> &[LabeledInstance] {
        &self.items
    }

    pub fn acoustic_dim(&self) -> usize {
        self.acoustic_dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Distinct class ids occurring in the dataset, sorted.
    pub fn class_ids(&self) -> Vec<&str> {
        let set: std::collections::BTreeSet<&str> =
            self.items.iter().map(|i| i.class_id.as_str()).collect();
        set.into_iter().collect()
    }
}

/// A mapping from id to embedding with one shared dimension.
///
/// Serves both as the class table (class id -> semantic embedding) and as
/// the acoustic lookup (instance id -> acoustic embedding); the on-disk
/// format is identical. Iteration is always in lexicographic id order, so
/// every downstream computation is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    entries: BTreeMap<String, EmbeddingVector>,
    dim: usize,
}

/// Class id -> semantic embedding. Same representation as any embedding
/// table; the alias marks intent in signatures.
pub type ClassTable = EmbeddingTable;

impl EmbeddingTable {
    pub fn new(entries: impl IntoIterator<Item = (String, EmbeddingVector)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut dim = None;
        for (i, (id, vec)) in entries.into_iter().enumerate() {
            let d = *dim.get_or_insert(vec.dim());
            if vec.dim() != d {
                return Err(Error::DimensionMismatch {
                    context: "embedding table",
                    expected: d,
                    got: vec.dim(),
                });
            }
            if map.insert(id.clone(), vec).is_some() {
                return Err(Error::DuplicateId {
                    source_name: "embedding table".into(),
                    line: i + 1,
                    id,
                });
            }
        }
        let dim = dim.ok_or(Error::EmptySequence {
            context: "embedding table",
        })?;
        Ok(Self { entries: map, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingVector> {
        self.entries.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    /// Ids in lexicographic order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    /// (id, embedding) pairs in lexicographic id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &EmbeddingVector)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// A table restricted to the given ids; unknown ids are an error.
    pub fn restrict<I, S>(&self, ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut entries = Vec::new();
        for id in ids {
            let id = id.as_ref();
            let vec = self.get(id).ok_or_else(|| Error::UnknownClass {
                class_id: id.to_string(),
            })?;
            entries.push((id.to_string(), vec.clone()));
        }
        Self::new(entries)
    }
}

/// A partition of class ids into `fold_count` disjoint folds.
///
/// Every class id belongs to exactly one fold; folds index from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldAssignment {
    folds: BTreeMap<String, usize>,
    fold_count: usize,
}

impl FoldAssignment {
    pub fn new(folds: BTreeMap<String, usize>) -> Result<Self> {
        if folds.is_empty() {
            return Err(Error::EmptySequence {
                context: "fold assignment",
            });
        }
        let fold_count = folds.values().max().copied().unwrap_or(0) + 1;
        Ok(Self { folds, fold_count })
    }

    pub fn fold_count(&self) -> usize {
        self.fold_count
    }

    pub fn fold_of(&self, class_id: &str) -> Option<usize> {
        self.folds.get(class_id).copied()
    }

    /// Class ids assigned to `fold`, in lexicographic order.
    pub fn members(&self, fold: usize) -> Vec<&str> {
        self.folds
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.folds.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn class_count(&self) -> usize {
        self.folds.len()
    }
}
