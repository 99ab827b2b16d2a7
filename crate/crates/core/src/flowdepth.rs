//! The eight-parameter linearized flow + inverse-depth motion model:
//!
//! ```text
//! u = a + b/z − c·x/z − d·y + e·x² − f·x·y
//! v = g + h/z − c·y/z − d·x + e·x·y + f·y²
//! ```
//!
//! `c`, `d`, `e`, `f` are shared between both equations. Coordinates and
//! flow are in normalized image units.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use thiserror::Error;

/// Upper bound applied to inverse depth so near-zero relative depth stays finite.
pub const MAX_INV_DEPTH: f64 = 1e6;

/// Condition number above which a fit is flagged.
pub const ILL_CONDITIONED: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("least-squares solve failed: {0}")]
    Solve(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub x: f64,
    pub y: f64,
    pub inv_z: f64,
    pub u: f64,
    pub v: f64,
}

impl FlowSample {
    /// Builds a sample from relative depth `z`, clamping `1/z`.
    pub fn with_depth(x: f64, y: f64, z: f64, u: f64, v: f64) -> Self {
        Self { x, y, inv_z: (1.0 / z).min(MAX_INV_DEPTH), u, v }
    }
}

/// Coefficients `(a, b, c, d, e, f, g, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowDepthModel {
    pub theta: [f64; 8],
}

impl FlowDepthModel {
    pub fn predict(&self, s: &FlowSample) -> (f64, f64) {
        let rows = design_rows(s);
        (dot(&rows.row_u, &self.theta), dot(&rows.row_v, &self.theta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignRows {
    pub row_u: [f64; 8],
    pub target_u: f64,
    pub row_v: [f64; 8],
    pub target_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowFit {
    pub model: FlowDepthModel,
    /// Ratio of extreme singular values of the stacked design matrix.
    pub condition: f64,
    pub ill_conditioned: bool,
}

#[inline]
fn dot(a: &[f64; 8], b: &[f64; 8]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn design_rows(s: &FlowSample) -> DesignRows {
    let (x, y, w) = (s.x, s.y, s.inv_z);
    DesignRows {
        row_u: [1.0, w, -x * w, -y, x * x, -x * y, 0.0, 0.0],
        target_u: s.u,
        row_v: [0.0, 0.0, -y * w, -x, x * y, y * y, 1.0, w],
        target_v: s.v,
    }
}

/// Least-squares fit over the stacked design rows. Rank-deficient designs
/// get the minimum-norm solution and the `ill_conditioned` flag.
pub fn fit_flow_depth_model(samples: &[FlowSample]) -> Result<FlowFit, FlowError> {
    if samples.len() < 4 {
        return Err(FlowError::InsufficientSamples { needed: 4, got: samples.len() });
    }
    let n = samples.len();
    let mut a = DMatrix::<f64>::zeros(2 * n, 8);
    let mut b = DVector::<f64>::zeros(2 * n);
    for (i, s) in samples.iter().enumerate() {
        let rows = design_rows(s);
        for j in 0..8 {
            a[(2 * i, j)] = rows.row_u[j];
            a[(2 * i + 1, j)] = rows.row_v[j];
        }
        b[2 * i] = rows.target_u;
        b[2 * i + 1] = rows.target_v;
    }

    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let max = sv.max();
    let min = sv.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    let solution = svd
        .solve(&b, max / ILL_CONDITIONED)
        .map_err(FlowError::Solve)?;
    let mut theta = [0.0; 8];
    theta.copy_from_slice(solution.as_slice());
    Ok(FlowFit {
        model: FlowDepthModel { theta },
        condition,
        ill_conditioned: !(condition <= ILL_CONDITIONED),
    })
}

/// Mean over samples of the squared flow prediction error.
pub fn flow_model_residual(model: &FlowDepthModel, samples: &[FlowSample]) -> Result<f64, FlowError> {
    if samples.is_empty() {
        return Err(FlowError::InsufficientSamples { needed: 1, got: 0 });
    }
    let total: f64 = samples
        .iter()
        .map(|s| {
            let (pu, pv) = model.predict(s);
            (s.u - pu).powi(2) + (s.v - pv).powi(2)
        })
        .sum();
    Ok(total / samples.len() as f64)
}

/// Uniform subsample without replacement, kept in input order.
pub fn subsample<T: Copy, R: Rng + ?Sized>(items: &[T], cap: usize, rng: &mut R) -> Vec<T> {
    if items.len() <= cap {
        return items.to_vec();
    }
    let mut picked = index::sample(rng, items.len(), cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i]).collect()
}
