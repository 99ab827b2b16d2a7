//! Object-level residual matrices, ordered-residual-kernel scores and the
//! per-view affinity accumulated from them.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::epipolar::{sampson_distance, Correspondence, FundamentalMatrix};
use crate::flowdepth::{flow_model_residual, FlowDepthModel, FlowSample};
use crate::types::View;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AffinityError {
    #[error("no score matrices to accumulate")]
    EmptyInput,
    #[error("score matrix {index} is {got}x{got}, expected {expected}x{expected}")]
    DimensionMismatch { index: usize, expected: usize, got: usize },
}

/// Entry `(i, j)` is the residual of object `i`'s model on object `j`'s data
/// for one frame pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualMatrix {
    pub k: usize,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl ResidualMatrix {
    pub fn invalid(k: usize) -> Self {
        Self { k, values: vec![0.0; k * k], valid: vec![false; k * k] }
    }

    /// Builds a fully valid matrix from rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let k = rows.len();
        let values: Vec<f64> = rows.iter().flat_map(|r| {
            assert_eq!(r.len(), k, "residual matrix must be square");
            r.iter().copied()
        }).collect();
        Self { k, valid: vec![true; k * k], values }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let idx = i * self.k + j;
        self.valid[idx].then_some(self.values[idx])
    }

    pub fn set(&mut self, i: usize, j: usize, value: Option<f64>) {
        let idx = i * self.k + j;
        match value {
            Some(v) => {
                self.values[idx] = v;
                self.valid[idx] = true;
            }
            None => {
                self.values[idx] = 0.0;
                self.valid[idx] = false;
            }
        }
    }

    pub fn row_valid(&self, i: usize) -> bool {
        self.valid[i * self.k..(i + 1) * self.k].iter().any(|&v| v)
    }

    pub fn column_valid(&self, j: usize) -> bool {
        (0..self.k).any(|i| self.valid[i * self.k + j])
    }
}

/// Entry `(model i, object j)` = `max(t − rank, 0)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScoreMatrix {
    pub k: usize,
    pub scores: Vec<u32>,
}

impl ScoreMatrix {
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.scores[i * self.k + j]
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.scores.chunks(self.k.max(1)).map(<[u32]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub view: View,
    pub a: DMatrix<f64>,
}

impl AffinityMatrix {
    pub fn k(&self) -> usize {
        self.a.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.a.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// Mean Sampson distance of every object's correspondences under every
/// object's fundamental matrix. `None` models are degenerate.
pub fn residual_matrix_traj(
    models: &[Option<FundamentalMatrix>],
    corrs: &[Vec<Correspondence>],
    min_points: usize,
) -> ResidualMatrix {
    assert_eq!(models.len(), corrs.len());
    let k = models.len();
    let mut r = ResidualMatrix::invalid(k);
    for (i, model) in models.iter().enumerate() {
        let Some(model) = model else { continue };
        for (j, data) in corrs.iter().enumerate() {
            if data.len() < min_points {
                continue;
            }
            let (sum, n) = data
                .iter()
                .filter_map(|c| sampson_distance(&model.f, c).ok())
                .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
            if n > 0 {
                r.set(i, j, Some(sum / n as f64));
            }
        }
    }
    r
}

/// Flow residual of every object's samples under every object's model.
pub fn residual_matrix_flow(
    models: &[Option<FlowDepthModel>],
    samples: &[Vec<FlowSample>],
    min_samples: usize,
) -> ResidualMatrix {
    assert_eq!(models.len(), samples.len());
    let k = models.len();
    let mut r = ResidualMatrix::invalid(k);
    for (i, model) in models.iter().enumerate() {
        let Some(model) = model else { continue };
        for (j, data) in samples.iter().enumerate() {
            if data.len() < min_samples.max(1) {
                continue;
            }
            r.set(i, j, flow_model_residual(model, data).ok());
        }
    }
    r
}

/// Ordered residual kernel scores. Valid entries of each row are ranked in
/// ascending residual order (ties by lower object index) and scored
/// `max(t − rank, 0)`; invalid entries score 0.
pub fn ork_scores(r: &ResidualMatrix, t: usize) -> ScoreMatrix {
    let k = r.k;
    let mut scores = vec![0u32; k * k];
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(k);
    for i in 0..k {
        row.clear();
        row.extend((0..k).filter_map(|j| r.get(i, j).map(|v| (j, v))));
        // stable: equal residuals keep index order
        row.sort_by(|a, b| a.1.total_cmp(&b.1));
        for (rank, &(j, _)) in row.iter().enumerate() {
            scores[i * k + j] = t.saturating_sub(rank) as u32;
        }
    }
    ScoreMatrix { k, scores }
}

/// `A = Σ SᵀS` over frame pairs, in the order given. Integer arithmetic, so
/// the result is exact.
pub fn accumulate_affinity(view: View, score_matrices: &[ScoreMatrix]) -> Result<AffinityMatrix, AffinityError> {
    let first = score_matrices.first().ok_or(AffinityError::EmptyInput)?;
    let k = first.k;
    let mut acc = vec![0u64; k * k];
    for (index, s) in score_matrices.iter().enumerate() {
        if s.k != k {
            return Err(AffinityError::DimensionMismatch { index, expected: k, got: s.k });
        }
        for m in 0..k {
            let row = &s.scores[m * k..(m + 1) * k];
            for i in 0..k {
                if row[i] == 0 {
                    continue;
                }
                for j in 0..k {
                    acc[i * k + j] += u64::from(row[i]) * u64::from(row[j]);
                }
            }
        }
    }
    Ok(AffinityMatrix { view, a: DMatrix::from_fn(k, k, |i, j| acc[i * k + j] as f64) })
}

/// Row normalization followed by `(M + Mᵀ)/2`. Zero rows stay zero.
pub fn normalize_affinity(a: &AffinityMatrix) -> AffinityMatrix {
    let k = a.k();
    let mut m = a.a.clone();
    for i in 0..k {
        let sum: f64 = m.row(i).sum();
        if sum > 0.0 {
            for j in 0..k {
                m[(i, j)] /= sum;
            }
        }
    }
    let sym = DMatrix::from_fn(k, k, |i, j| (m[(i, j)] + m[(j, i)]) / 2.0);
    AffinityMatrix { view: a.view, a: sym }
}
