//! Symmetric pairwise distance matrices and the `DMATV1` file format.
//!
//! ```text
//! DMATV1 <n>
//! <id-length-in-bytes> <id>          (n lines)
//! <row i: d(i,0) .. d(i,i-1)>       (rows 1..n, strictly lower triangle)
//! ```
//!
//! Each distance is a little-endian f64 written as 16 lowercase hex
//! characters, concatenated along the row.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use super::{Metric, MetricError, Prepared};
use crate::corpus::Corpus;
use crate::embedding::{decode_hex_bytes, push_hex, EmbeddingSet};

pub const DMAT_MAGIC: &str = "DMATV1";

#[derive(Debug, Error)]
pub enum MatrixFormatError {
    #[error("distance matrix parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn perr(line: usize, message: impl Into<String>) -> MatrixFormatError {
    MatrixFormatError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Build from the strictly-lower-triangle entries in row-major order;
    /// the upper triangle is mirrored and the diagonal is zero.
    pub fn from_lower_triangle(ids: Vec<String>, lower: &[f64]) -> Self {
        let n = ids.len();
        assert_eq!(
            lower.len(),
            n * n.saturating_sub(1) / 2,
            "lower triangle size"
        );
        let mut values = vec![0.0; n * n];
        let mut k = 0;
        for i in 1..n {
            for j in 0..i {
                values[i * n + j] = lower[k];
                values[j * n + i] = lower[k];
                k += 1;
            }
        }
        DistanceMatrix { ids, values }
    }

    /// Build from a full matrix, which must be symmetric with zero diagonal.
    pub fn from_full(ids: Vec<String>, values: Vec<f64>) -> Option<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return None;
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return None;
            }
            for j in 0..i {
                let v = values[i * n + j];
                if v != values[j * n + i] || !(v >= 0.0 && v.is_finite()) {
                    return None;
                }
            }
        }
        Some(DistanceMatrix { ids, values })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.ids.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> DistanceMatrix {
        DistanceMatrix {
            ids: self.ids.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn to_dmat(&self) -> String {
        let n = self.len();
        let mut out = format!("{DMAT_MAGIC} {n}\n");
        for id in &self.ids {
            out.push_str(&format!("{} {}\n", id.len(), id));
        }
        for i in 1..n {
            for j in 0..i {
                push_hex(&mut out, &self.get(i, j).to_le_bytes());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_dmat(text: &str) -> Result<Self, MatrixFormatError> {
        let mut lines = text
            .split_inclusive('\n')
            .enumerate()
            .map(|(k, l)| (k + 1, l));
        let mut next = |what: &str| -> Result<(usize, &str), MatrixFormatError> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| perr(0, format!("missing {what}")))?;
            line.strip_suffix('\n')
                .map(|l| (no, l))
                .ok_or_else(|| perr(no, "line is not newline-terminated"))
        };
        let (_, header) = next("header")?;
        let n: usize = header
            .strip_prefix(DMAT_MAGIC)
            .and_then(|r| r.strip_prefix(' '))
            .and_then(|r| r.parse().ok())
            .ok_or_else(|| perr(1, format!("bad header {header:?}")))?;
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            let (no, line) = next("id")?;
            let (len, id) = line
                .split_once(' ')
                .ok_or_else(|| perr(no, "missing id length"))?;
            let len: usize = len.parse().map_err(|_| perr(no, "bad id length"))?;
            if id.len() != len {
                return Err(perr(
                    no,
                    format!("id length {} does not match declared {len}", id.len()),
                ));
            }
            ids.push(id.to_string());
        }
        let mut lower = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 1..n {
            let (no, line) = next("row")?;
            if line.len() != 16 * i {
                return Err(perr(no, format!("row {i} should hold {i} values")));
            }
            let bytes = decode_hex_bytes(line).map_err(|m| perr(no, m))?;
            for chunk in bytes.chunks_exact(8) {
                let v = f64::from_le_bytes(chunk.try_into().unwrap());
                if !(v.is_finite() && v >= 0.0) {
                    return Err(perr(no, format!("invalid distance {v}")));
                }
                lower.push(v);
            }
        }
        if lines.next().is_some() {
            return Err(perr(0, "trailing data"));
        }
        Ok(DistanceMatrix::from_lower_triangle(ids, &lower))
    }

    pub fn write(&self, path: &Path) -> Result<(), MatrixFormatError> {
        fs::write(path, self.to_dmat())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, MatrixFormatError> {
        Self::from_dmat(&fs::read_to_string(path)?)
    }
}

/// All pairwise distances under `metric`, computed in parallel.
///
/// Each unordered pair is evaluated once as `distance(i, j)` with `i > j` and
/// mirrored. On failure, the error for the first failing conversation (or
/// pair, in row-major order) is returned regardless of scheduling.
pub fn pairwise_matrix(
    corpus: &Corpus,
    embeddings: &EmbeddingSet,
    metric: &Metric,
) -> Result<DistanceMatrix, MetricError> {
    metric.validate()?;
    let conversations = corpus.conversations();
    let prepared: Vec<Prepared> = conversations
        .par_iter()
        .map(|c| metric.prepare(c, embeddings))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_, _>>()?;
    let n = conversations.len();
    let pairs: Vec<(usize, usize)> = (1..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    let results: Vec<Result<f64, MetricError>> = pairs
        .par_iter()
        .map(|&(i, j)| metric.prepared_distance(&prepared[i], &prepared[j]))
        .collect();
    let mut lower = Vec::with_capacity(pairs.len());
    for (result, &(i, j)) in results.into_iter().zip(&pairs) {
        match result {
            Ok(d) => lower.push(d),
            Err(source) => {
                return Err(MetricError::Pair {
                    first: conversations[i].id.clone(),
                    second: conversations[j].id.clone(),
                    source: Box::new(source),
                })
            }
        }
    }
    let ids = conversations.iter().map(|c| c.id.clone()).collect();
    Ok(DistanceMatrix::from_lower_triangle(ids, &lower))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dmat_layout_and_round_trip() {
        let m = DistanceMatrix::from_lower_triangle(
            vec!["a".into(), "b c".into(), "d".into()],
            &[1.0, 0.5, 2.0],
        );
        let text = m.to_dmat();
        assert!(text.starts_with("DMATV1 3\n1 a\n3 b c\n1 d\n000000000000f03f\n"));
        let back = DistanceMatrix::from_dmat(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get(0, 1), 1.0);
        assert_eq!(back.get(2, 1), 2.0);
        assert_eq!(back.get(1, 2), 2.0);
    }

    #[test]
    fn single_conversation_has_no_rows() {
        let m = DistanceMatrix::from_lower_triangle(vec!["x".into()], &[]);
        assert_eq!(m.to_dmat(), "DMATV1 1\n1 x\n");
        assert_eq!(
            DistanceMatrix::from_dmat("DMATV1 1\n1 x\n")
                .unwrap()
                .get(0, 0),
            0.0
        );
    }

    #[test]
    fn malformed_matrices() {
        for text in [
            "DMATV2 1\n1 x\n",
            "DMATV1 2\n1 x\n1 y\n",
            "DMATV1 2\n1 x\n1 y\n000000000000f03f",
            "DMATV1 2\n1 x\n1 y\n000000000000f0bf\n",
            "DMATV1 2\n2 x\n1 y\n000000000000f03f\n",
            "DMATV1 1\n1 x\nextra\n",
        ] {
            assert!(DistanceMatrix::from_dmat(text).is_err(), "{text:?}");
        }
    }

    #[test]
    fn from_full_checks_symmetry() {
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(DistanceMatrix::from_full(ids.clone(), vec![0.0, 1.0, 1.0, 0.0]).is_some());
        assert!(DistanceMatrix::from_full(ids.clone(), vec![0.0, 1.0, 2.0, 0.0]).is_none());
        assert!(DistanceMatrix::from_full(ids, vec![1.0, 1.0, 1.0, 0.0]).is_none());
    }
}
