//! Hierarchical-query kernels: point-query pooling, instance-query assembly
//! and endpoint augmentation, specified on plain row-major matrices so they
//! stay framework-free and testable.

use thiserror::Error;

use crate::geometry::Point3;

#[derive(Debug, Error, PartialEq)]
pub enum QueryError {
    #[error("empty matrix")]
    EmptyMatrix,

    #[error("embedding dimension must be at least 1")]
    ZeroDim,

    #[error("matrix values must be finite")]
    NonFiniteValue,

    #[error("value buffer has {got} entries, expected {expected}")]
    BadBufferLength { expected: usize, got: usize },

    #[error("dimension mismatch: matrix dim {matrix_dim}, vector length {vector_len}")]
    DimensionMismatch { matrix_dim: usize, vector_len: usize },
}

/// A dense row-major real matrix holding embedding vectors, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, values: Vec<f64>) -> Result<Self, QueryError> {
        if dim == 0 {
            return Err(QueryError::ZeroDim);
        }
        if values.len() != rows * dim {
            return Err(QueryError::BadBufferLength {
                expected: rows * dim,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(QueryError::NonFiniteValue);
        }
        Ok(Self { rows, dim, values })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, QueryError> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if dim == 0 {
            return Err(QueryError::ZeroDim);
        }
        let n = rows.len();
        let mut values = Vec::with_capacity(n * dim);
        for r in &rows {
            if r.len() != dim {
                return Err(QueryError::DimensionMismatch {
                    matrix_dim: dim,
                    vector_len: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(n, dim, values)
    }

    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            rows,
            dim,
            values: vec![0.0; rows * dim],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim)
    }
}

/// Query-bank sizing: point-query count defaults to 11, one per output
/// keypoint of a centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryConfig {
    pub n_points: usize,
    pub n_instances: usize,
    pub dim: usize,
}

impl QueryConfig {
    pub fn new(n_instances: usize, dim: usize) -> Self {
        Self {
            n_points: 11,
            n_instances,
            dim,
        }
    }
}

/// Pools the point queries into one global feature via a column-wise sum.
pub fn point_pooling(q_p: &EmbeddingMatrix) -> Result<Vec<f64>, QueryError> {
    if q_p.rows() == 0 {
        return Err(QueryError::EmptyMatrix);
    }
    let mut pooled = vec![0.0; q_p.dim()];
    for row in q_p.iter_rows() {
        for (acc, v) in pooled.iter_mut().zip(row) {
            *acc += v;
        }
    }
    Ok(pooled)
}

/// Adds the pooled point feature to every instance query, yielding the
/// assembled centerline queries with the same shape as `q_i`.
pub fn assemble_lc_queries(
    q_i: &EmbeddingMatrix,
    pooled: &[f64],
) -> Result<EmbeddingMatrix, QueryError> {
    if pooled.len() != q_i.dim() {
        return Err(QueryError::DimensionMismatch {
            matrix_dim: q_i.dim(),
            vector_len: pooled.len(),
        });
    }
    let values = q_i
        .iter_rows()
        .flat_map(|row| row.iter().zip(pooled).map(|(v, p)| v + p))
        .collect();
    EmbeddingMatrix::new(q_i.rows(), q_i.dim(), values)
}

/// Appends start and end coordinates to a query vector, in that fixed order:
/// `[query | sx, sy, sz | ex, ey, ez]`.
pub fn augment_with_endpoints(query: &[f64], start: Point3, end: Point3) -> Vec<f64> {
    let mut out = Vec::with_capacity(query.len() + 6);
    out.extend_from_slice(query);
    out.extend_from_slice(&[start.x, start.y, start.z, end.x, end.y, end.z]);
    out
}
