//! Line-oriented text ingestion and serialization.
//!
//! Three formats, all UTF-8, `#`-prefixed comment lines ignored:
//!
//! * embedding table: `<id>\t<v1> <v2> ... <vd>` with decimal or scientific
//!   notation values
//! * dataset manifest: `<instance_id>\t<class_id>`
//! * fold file: `<class_id>\t<fold_index>`
//!
//! Serialization writes floats in Rust's shortest round-trip decimal form,
//! so parse -> serialize -> parse is value-exact.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::{
    EmbeddingTable, EmbeddingVector, FoldAssignment, LabeledDataset, LabeledInstance,
};
use crate::error::{Error, Result};

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_string(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Data lines with their 1-based line numbers; comments and blanks skipped.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn split_id_rest<'a>(
    line: &'a str,
    source_name: &str,
    line_no: usize,
) -> Result<(&'a str, &'a str)> {
    let (id, rest) = line.split_once('\t').ok_or_else(|| Error::MalformedLine {
        source_name: source_name.to_string(),
        line: line_no,
        reason: "missing tab separator".into(),
    })?;
    if id.is_empty() {
        return Err(Error::MalformedLine {
            source_name: source_name.to_string(),
            line: line_no,
            reason: "empty id".into(),
        });
    }
    Ok((id, rest))
}

/// Parses an embedding table from text. `source_name` labels errors
/// (a path for files, any tag for in-memory text).
pub fn parse_embedding_table_str(
    text: &str,
    source_name: &str,
    expected_dim: Option<usize>,
) -> Result<EmbeddingTable> {
    let mut entries: Vec<(String, EmbeddingVector)> = Vec::new();
    let mut ids = std::collections::BTreeSet::new();
    let mut dim = expected_dim;
    for (line_no, line) in data_lines(text) {
        let (id, rest) = split_id_rest(line, source_name, line_no)?;
        let mut values = Vec::new();
        for token in rest.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| Error::InvalidNumber {
                source_name: source_name.to_string(),
                line: line_no,
                token: token.to_string(),
            })?;
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::MalformedLine {
                source_name: source_name.to_string(),
                line: line_no,
                reason: "no values after id".into(),
            });
        }
        let d = *dim.get_or_insert(values.len());
        if values.len() != d {
            return Err(Error::LineDimensionMismatch {
                source_name: source_name.to_string(),
                line: line_no,
                expected: d,
                found: values.len(),
            });
        }
        if !ids.insert(id.to_string()) {
            return Err(Error::DuplicateId {
                source_name: source_name.to_string(),
                line: line_no,
                id: id.to_string(),
            });
        }
        let vec = EmbeddingVector::new(values).map_err(|_| Error::InvalidNumber {
            source_name: source_name.to_string(),
            line: line_no,
            token: "non-finite value".into(),
        })?;
        entries.push((id.to_string(), vec));
    }
    if entries.is_empty() {
        return Err(Error::EmptyInput {
            source_name: source_name.to_string(),
        });
    }
    EmbeddingTable::new(entries)
}

pub fn parse_embedding_table_file(
    path: &Path,
    expected_dim: Option<usize>,
) -> Result<EmbeddingTable> {
    let text = read_to_string(path)?;
    parse_embedding_table_str(&text, &path.display().to_string(), expected_dim)
}

/// Serializes a table in id order; output re-parses to an equal table.
pub fn embedding_table_to_string(table: &EmbeddingTable) -> String {
    let mut out = String::new();
    for (id, vec) in table.iter() {
        out.push_str(id);
        out.push('\t');
        for (i, v) in vec.values().iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_embedding_table(table: &EmbeddingTable, path: &Path) -> Result<()> {
    write_string(path, &embedding_table_to_string(table))
}

/// Parses a manifest of `(instance_id, class_id)` pairs, preserving file order.
pub fn parse_manifest_str(text: &str, source_name: &str) -> Result<Vec<(String, String)>> {
    let mut rows = Vec::new();
    let mut ids = std::collections::BTreeSet::new();
    for (line_no, line) in data_lines(text) {
        let (id, class) = split_id_rest(line, source_name, line_no)?;
        let class = class.trim();
        if class.is_empty() || class.contains('\t') {
            return Err(Error::MalformedLine {
                source_name: source_name.to_string(),
                line: line_no,
                reason: "expected exactly one class id after tab".into(),
            });
        }
        if !ids.insert(id.to_string()) {
            return Err(Error::DuplicateId {
                source_name: source_name.to_string(),
                line: line_no,
                id: id.to_string(),
            });
        }
        rows.push((id.to_string(), class.to_string()));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput {
            source_name: source_name.to_string(),
        });
    }
    Ok(rows)
}

pub fn parse_manifest_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = read_to_string(path)?;
    parse_manifest_str(&text, &path.display().to_string())
}

pub fn manifest_to_string(rows: &[(String, String)]) -> String {
    let mut out = String::new();
    for (id, class) in rows {
        out.push_str(id);
        out.push('\t');
        out.push_str(class);
        out.push('\n');
    }
    out
}

pub fn write_manifest(rows: &[(String, String)], path: &Path) -> Result<()> {
    write_string(path, &manifest_to_string(rows))
}

/// Joins a manifest against an acoustic embedding table, in manifest order.
pub fn assemble_dataset(
    manifest: &[(String, String)],
    acoustic: &EmbeddingTable,
) -> Result<LabeledDataset> {
    let mut items = Vec::with_capacity(manifest.len());
    for (instance_id, class_id) in manifest {
        let vec = acoustic
            .get(instance_id)
            .ok_or_else(|| Error::MissingInstanceEmbedding {
                instance_id: instance_id.clone(),
            })?;
        items.push(LabeledInstance {
            id: instance_id.clone(),
            acoustic: vec.clone(),
            class_id: class_id.clone(),
        });
    }
    LabeledDataset::new(items)
}

/// Parses a fold file of `class_id\tfold_index` lines.
pub fn parse_folds_str(text: &str, source_name: &str) -> Result<FoldAssignment> {
    let mut map = BTreeMap::new();
    for (line_no, line) in data_lines(text) {
        let (id, rest) = split_id_rest(line, source_name, line_no)?;
        let fold: usize = rest.trim().parse().map_err(|_| Error::InvalidNumber {
            source_name: source_name.to_string(),
            line: line_no,
            token: rest.trim().to_string(),
        })?;
        if map.insert(id.to_string(), fold).is_some() {
            return Err(Error::DuplicateId {
                source_name: source_name.to_string(),
                line: line_no,
                id: id.to_string(),
            });
        }
    }
    if map.is_empty() {
        return Err(Error::EmptyInput {
            source_name: source_name.to_string(),
        });
    }
    FoldAssignment::new(map)
}

pub fn parse_folds_file(path: &Path) -> Result<FoldAssignment> {
    let text = read_to_string(path)?;
    parse_folds_str(&text, &path.display().to_string())
}

pub fn folds_to_string(folds: &FoldAssignment) -> String {
    let mut out = String::new();
    for (id, fold) in folds.iter() {
        out.push_str(&format!("{id}\t{fold}\n"));
    }
    out
}

pub fn write_folds(folds: &FoldAssignment, path: &Path) -> Result<()> {
    write_string(path, &folds_to_string(folds))
}

/// Randomly partitions class ids into `k` folds of near-equal size.
///
/// The ids are first sorted, then shuffled with a ChaCha8 generator seeded
/// from `seed`, then cut into contiguous chunks, so the result depends only
/// on the id set and the seed. Sizes differ by at most one; when the count
/// does not divide evenly, the later folds get the extra class.
pub fn split_folds<S: AsRef<str>>(class_ids: &[S], k: usize, seed: u64) -> Result<FoldAssignment> {
    let mut ids: Vec<&str> = class_ids.iter().map(|s| s.as_ref()).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != class_ids.len() {
        return Err(Error::InvalidParameter {
            name: "class_ids",
            reason: "duplicate class ids".into(),
        });
    }
    if k == 0 || k > ids.len() {
        return Err(Error::InvalidFoldCount {
            folds: k,
            classes: ids.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let n = ids.len();
    let base = n / k;
    let rem = n % k;
    let mut map = BTreeMap::new();
    let mut cursor = 0usize;
    for fold in 0..k {
        let size = base + usize::from(fold >= k - rem);
        for id in &ids[cursor..cursor + size] {
            map.insert((*id).to_string(), fold);
        }
        cursor += size;
    }
    FoldAssignment::new(map)
}
