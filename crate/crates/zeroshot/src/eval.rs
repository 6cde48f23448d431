//! The zero-shot classifier and TOP-1 accuracy.

use crate::embedding::{ClassTable, EmbeddingVector, LabeledDataset};
use crate::error::{Error, Result};
use crate::model::{compatibility_score, Compatibility, ProjectionModel};

/// Classifies one acoustic embedding against a candidate class table.
///
/// Returns the candidate with the highest compatibility to the projected
/// embedding; ties go to the lexicographically smallest class id, so
/// repeated calls agree.
pub fn classify(
    model: &ProjectionModel,
    compat: Compatibility,
    acoustic: &EmbeddingVector,
    candidates: &ClassTable,
) -> Result<String> {
    if candidates.is_empty() {
        return Err(Error::EmptySequence {
            context: "candidate classes",
        });
    }
    if candidates.dim() != model.semantic_dim() {
        return Err(Error::DimensionMismatch {
            context: "classify candidates",
            expected: model.semantic_dim(),
            got: candidates.dim(),
        });
    }
    let projected = model.project(acoustic)?;
    let mut best: Option<(&str, f64)> = None;
    // candidates iterate in ascending id order; a strict `>` keeps the
    // smallest id on ties
    for (id, emb) in candidates.iter() {
        let score = compatibility_score(compat, projected.values(), emb.values())?;
        match best {
            Some((_, s)) if score <= s => {}
            _ => best = Some((id, score)),
        }
    }
    Ok(best.expect("non-empty table").0.to_string())
}

/// Fraction of instances whose predicted class equals the true label.
///
/// Every test label must be present in the candidate table; a missing
/// label means the candidate set was built from the wrong fold.
pub fn top1_accuracy(
    model: &ProjectionModel,
    compat: Compatibility,
    test_set: &LabeledDataset,
    candidates: &ClassTable,
) -> Result<f64> {
    for item in test_set.items() {
        if !candidates.contains(&item.class_id) {
            return Err(Error::UnknownClass {
                class_id: item.class_id.clone(),
            });
        }
    }
    let mut correct = 0usize;
    for item in test_set.items() {
        if classify(model, compat, &item.acoustic, candidates)? == item.class_id {
            correct += 1;
        }
    }
    Ok(correct as f64 / test_set.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{EmbeddingTable, LabeledInstance};
    use crate::model::Matrix;

    fn table(pairs: &[(&str, [f64; 2])]) -> EmbeddingTable {
        EmbeddingTable::new(pairs.iter().map(|(id, v)| {
            (
                id.to_string(),
                EmbeddingVector::new(v.to_vec()).unwrap(),
            )
        }))
        .unwrap()
    }

    fn identity_model() -> ProjectionModel {
        ProjectionModel::factored(Matrix::identity(2), Matrix::identity(2)).unwrap()
    }

    #[test]
    fn single_candidate_wins() {
        let candidates = table(&[("only", [1.0, 0.0])]);
        let x = EmbeddingVector::new(vec![-5.0, 3.0]).unwrap();
        let got = classify(&identity_model(), Compatibility::Dot, &x, &candidates).unwrap();
        assert_eq!(got, "only");
    }

    #[test]
    fn matching_embedding_wins_under_dot() {
        // independent oracle: score table computed by hand.
        // theta = (2, 0): dot with a=(2,0) is 4, with b=(0,1) is 0.
        let candidates = table(&[("a", [2.0, 0.0]), ("b", [0.0, 1.0])]);
        let x = EmbeddingVector::new(vec![2.0, 0.0]).unwrap();
        let got = classify(&identity_model(), Compatibility::Dot, &x, &candidates).unwrap();
        assert_eq!(got, "a");
    }

    #[test]
    fn ties_break_lexicographically() {
        let candidates = table(&[("zeta", [1.0, 0.0]), ("alpha", [1.0, 0.0])]);
        let x = EmbeddingVector::new(vec![1.0, 1.0]).unwrap();
        let got = classify(&identity_model(), Compatibility::Dot, &x, &candidates).unwrap();
        assert_eq!(got, "alpha");
    }

    #[test]
    fn scaling_weight_keeps_predictions() {
        let candidates = table(&[("a", [1.5, -0.5]), ("b", [-0.25, 2.0]), ("c", [0.5, 0.5])]);
        let w = Matrix::from_row_major(2, 2, vec![0.3, -1.2, 0.8, 0.4]).unwrap();
        let mut w2 = w.clone();
        w2.scale(2.0);
        let m1 = ProjectionModel::bilinear(w);
        let m2 = ProjectionModel::bilinear(w2);
        for raw in [[0.4, 0.7], [-1.0, 0.3], [2.0, -2.0]] {
            let x = EmbeddingVector::new(raw.to_vec()).unwrap();
            assert_eq!(
                classify(&m1, Compatibility::Dot, &x, &candidates).unwrap(),
                classify(&m2, Compatibility::Dot, &x, &candidates).unwrap()
            );
        }
    }

    #[test]
    fn accuracy_fractions() {
        let candidates = table(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        let items = vec![
            LabeledInstance {
                id: "i1".into(),
                acoustic: EmbeddingVector::new(vec![1.0, 0.0]).unwrap(),
                class_id: "a".into(),
            },
            LabeledInstance {
                id: "i2".into(),
                acoustic: EmbeddingVector::new(vec![1.0, 0.0]).unwrap(),
                class_id: "b".into(), // will be predicted "a": wrong
            },
        ];
        let data = LabeledDataset::new(items).unwrap();
        let acc = top1_accuracy(&identity_model(), Compatibility::Dot, &data, &candidates).unwrap();
        assert_eq!(acc, 0.5);
    }

    #[test]
    fn missing_label_is_an_error() {
        let candidates = table(&[("a", [1.0, 0.0])]);
        let data = LabeledDataset::new(vec![LabeledInstance {
            id: "i1".into(),
            acoustic: EmbeddingVector::new(vec![1.0, 0.0]).unwrap(),
            class_id: "ghost".into(),
        }])
        .unwrap();
        assert!(matches!(
            top1_accuracy(&identity_model(), Compatibility::Dot, &data, &candidates),
            Err(Error::UnknownClass { .. })
        ));
    }

    #[test]
    fn empty_candidates_rejected() {
        // an EmbeddingTable cannot be empty, so drive the check via restrict
        let candidates = table(&[("a", [1.0, 0.0])]);
        let err = candidates.restrict(Vec::<String>::new());
        assert!(err.is_err());
    }
}
