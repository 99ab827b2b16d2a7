//! Fundamental-matrix fitting on trajectory correspondences and the Sampson
//! residual used to score them.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpipolarError {
    #[error("need at least {needed} correspondences, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("sampson distance undefined: both points sit on their epipoles")]
    UndefinedResidual,
}

/// A tracked point seen in two frames, as homogeneous normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub p: Vector3<f64>,
    pub p_prime: Vector3<f64>,
}

impl Correspondence {
    pub fn new(x: f64, y: f64, x_prime: f64, y_prime: f64) -> Self {
        Self { p: Vector3::new(x, y, 1.0), p_prime: Vector3::new(x_prime, y_prime, 1.0) }
    }
}

/// Rank-2, unit-Frobenius-norm epipolar model with its RANSAC support.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix {
    pub f: Matrix3<f64>,
    pub inlier_ratio: f64,
    pub n_support: usize,
}

impl FundamentalMatrix {
    /// Canonicalizes `m` (rank 2, norm 1, sign rule) into a model with no
    /// support statistics attached.
    pub fn from_matrix(m: &Matrix3<f64>) -> Option<Self> {
        let f = canonicalize(&enforce_rank2(m))?;
        Some(Self { f, inlier_ratio: 1.0, n_support: 0 })
    }

    pub fn sampson(&self, c: &Correspondence) -> Result<f64, EpipolarError> {
        sampson_distance(&self.f, c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub max_iters: usize,
    /// Squared normalized-coordinate units.
    pub sampson_inlier_threshold: f64,
    pub min_inlier_ratio: f64,
    pub rng_seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self { max_iters: 500, sampson_inlier_threshold: 1e-4, min_inlier_ratio: 0.5, rng_seed: 0 }
    }
}

/// Why a robust fit produced no usable model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateCause {
    TooFewPoints,
    NoHypothesis,
    LowInlierRatio,
    RankDeficient,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RansacOutcome {
    Model(FundamentalMatrix),
    Degenerate(DegenerateCause),
}

impl RansacOutcome {
    pub fn model(&self) -> Option<&FundamentalMatrix> {
        match self {
            RansacOutcome::Model(f) => Some(f),
            RansacOutcome::Degenerate(_) => None,
        }
    }

    pub fn into_model(self) -> Option<FundamentalMatrix> {
        match self {
            RansacOutcome::Model(f) => Some(f),
            RansacOutcome::Degenerate(_) => None,
        }
    }
}

const RANK_TOLERANCE: f64 = 1e-9;

/// Scales `m` to unit Frobenius norm and flips it so that its
/// largest-magnitude entry is positive. Near-ties (within 1e-9 relative)
/// resolve to the first entry in row-major order.
pub fn canonicalize(m: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let norm = m.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return None;
    }
    let m = m / norm;
    let max = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let mut pivot = 0.0;
    'rows: for r in 0..3 {
        for c in 0..3 {
            if m[(r, c)].abs() >= max * (1.0 - 1e-9) {
                pivot = m[(r, c)];
                break 'rows;
            }
        }
    }
    Some(if pivot < 0.0 { -m } else { m })
}

/// Zeroes the smallest singular value.
pub fn enforce_rank2(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut s = svd.singular_values;
    let smallest = s.imin();
    s[smallest] = 0.0;
    u * Matrix3::from_diagonal(&s) * v_t
}

/// Hartley conditioning: a similarity that moves the centroid to the origin
/// and the mean distance from it to √2. Returns the conditioned points and
/// the transform that produced them.
pub fn condition_points(points: &[Vector3<f64>]) -> Result<(Vec<Vector3<f64>>, Matrix3<f64>), EpipolarError> {
    if points.is_empty() {
        return Err(EpipolarError::InsufficientPoints { needed: 2, got: 0 });
    }
    let n = points.len() as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in points {
        cx += p.x / p.z;
        cy += p.y / p.z;
    }
    cx /= n;
    cy /= n;
    let mean_dist = points
        .iter()
        .map(|p| (p.x / p.z - cx).hypot(p.y / p.z - cy))
        .sum::<f64>()
        / n;
    if !(mean_dist > 0.0 && mean_dist.is_finite()) {
        return Err(EpipolarError::DegenerateInput("all points identical"));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    let conditioned = points.iter().map(|p| t * (p / p.z)).collect();
    Ok((conditioned, t))
}

/// Normalized eight-point solve. Needs at least 8 correspondences with a
/// rank-8 design matrix.
pub fn eight_point(corrs: &[Correspondence]) -> Result<FundamentalMatrix, EpipolarError> {
    if corrs.len() < 8 {
        return Err(EpipolarError::InsufficientPoints { needed: 8, got: corrs.len() });
    }
    let first: Vec<_> = corrs.iter().map(|c| c.p).collect();
    let second: Vec<_> = corrs.iter().map(|c| c.p_prime).collect();
    let (p1, t1) = condition_points(&first)?;
    let (p2, t2) = condition_points(&second)?;

    // Pad to 9 rows so the SVD always exposes the full right null space.
    let rows = corrs.len().max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (p, q)) in p1.iter().zip(&p2).enumerate() {
        let (x, y) = (p.x, p.y);
        let (xp, yp) = (q.x, q.y);
        let row = [xp * x, xp * y, xp, yp * x, yp * y, yp, x, y, 1.0];
        for (j, v) in row.into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv = |k: usize| svd.singular_values[order[k]];
    if !(sv(7) > RANK_TOLERANCE * sv(0)) {
        return Err(EpipolarError::DegenerateInput("design matrix rank below 8"));
    }
    let null = v_t.row(order[8]);
    let f_cond = Matrix3::from_row_slice(&[
        null[0], null[1], null[2], null[3], null[4], null[5], null[6], null[7], null[8],
    ]);
    let f = t2.transpose() * enforce_rank2(&f_cond) * t1;
    let f = canonicalize(&f).ok_or(EpipolarError::DegenerateInput("vanishing fundamental matrix"))?;
    Ok(FundamentalMatrix { f, inlier_ratio: 1.0, n_support: corrs.len() })
}

/// First-order geometric error of `c` under `f`:
/// `(p'ᵀFp)² / ((Fp)₁² + (Fp)₂² + (Fᵀp')₁² + (Fᵀp')₂²)`.
pub fn sampson_distance(f: &Matrix3<f64>, c: &Correspondence) -> Result<f64, EpipolarError> {
    let fp = f * c.p;
    let ftp = f.transpose() * c.p_prime;
    let algebraic = c.p_prime.dot(&fp);
    let denom = fp.x * fp.x + fp.y * fp.y + ftp.x * ftp.x + ftp.y * ftp.y;
    if denom <= 0.0 {
        return Err(EpipolarError::UndefinedResidual);
    }
    Ok(algebraic * algebraic / denom)
}

fn count_inliers(f: &Matrix3<f64>, corrs: &[Correspondence], threshold: f64) -> usize {
    corrs
        .iter()
        .filter(|c| matches!(sampson_distance(f, c), Ok(d) if d < threshold))
        .count()
}

/// Eight-point RANSAC with a fixed iteration budget, followed by a refit on
/// the consensus set. Every failure mode yields `Degenerate`.
pub fn ransac_fit_fundamental(corrs: &[Correspondence], cfg: &RansacConfig) -> RansacOutcome {
    if corrs.len() < 8 {
        return RansacOutcome::Degenerate(DegenerateCause::TooFewPoints);
    }
    let mut rng = seed::stream(cfg.rng_seed, &[seed::STREAM_RANSAC]);
    let mut sample = Vec::with_capacity(8);
    let mut best: Option<(usize, Matrix3<f64>)> = None;

    for _ in 0..cfg.max_iters {
        sample.clear();
        sample.extend(index::sample(&mut rng, corrs.len(), 8).iter().map(|i| corrs[i]));
        let Ok(hypothesis) = eight_point(&sample) else { continue };
        let support = count_inliers(&hypothesis.f, corrs, cfg.sampson_inlier_threshold);
        if best.as_ref().is_none_or(|(s, _)| support > *s) {
            best = Some((support, hypothesis.f));
        }
    }

    let Some((_, f_best)) = best else {
        return RansacOutcome::Degenerate(DegenerateCause::NoHypothesis);
    };
    let inliers: Vec<Correspondence> = corrs
        .iter()
        .filter(|c| matches!(sampson_distance(&f_best, c), Ok(d) if d < cfg.sampson_inlier_threshold))
        .copied()
        .collect();
    if inliers.len() < 8 {
        return RansacOutcome::Degenerate(DegenerateCause::LowInlierRatio);
    }
    let refit = match eight_point(&inliers) {
        Ok(f) => f,
        Err(_) => return RansacOutcome::Degenerate(DegenerateCause::RankDeficient),
    };
    let support = count_inliers(&refit.f, corrs, cfg.sampson_inlier_threshold);
    let ratio = support as f64 / corrs.len() as f64;
    if ratio < cfg.min_inlier_ratio {
        return RansacOutcome::Degenerate(DegenerateCause::LowInlierRatio);
    }
    RansacOutcome::Model(FundamentalMatrix { f: refit.f, inlier_ratio: ratio, n_support: support })
}

/// `[t]×`, the cross-product matrix of `t`.
pub fn skew(t: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}
