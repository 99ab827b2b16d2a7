//! Co-regularized two-view spectral clustering of objects.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use thiserror::Error;

use crate::affinity::AffinityMatrix;
use crate::seed;
use crate::types::View;

/// Diagonal guard added before degree normalization.
pub const LAPLACIAN_EPS: f64 = 1e-8;

const KMEANS_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("symmetric eigendecomposition of a {0}x{0} matrix did not converge")]
    EigenFailure(usize),
    #[error("asked for {requested} eigenvectors of a {size}x{size} operator")]
    TooManyClusters { requested: usize, size: usize },
    #[error("embeddings disagree on object count ({0} vs {1})")]
    ShapeMismatch(usize, usize),
}

/// `D^(-1/2) (A + εI) D^(-1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewLaplacian {
    pub view: View,
    pub l: DMatrix<f64>,
}

/// Orthonormal columns, one row per object.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub view: View,
    pub u: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    /// Cluster index per object, numbered by first appearance.
    pub labels: Vec<usize>,
    /// False exactly for objects sharing the background's cluster.
    pub moving: Vec<bool>,
}

impl ClusterAssignment {
    pub fn cluster_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoRegularized {
    pub traj: Embedding,
    pub flow: Embedding,
    /// Objective after initialization and after every half-step.
    pub objective: Vec<f64>,
}

pub fn normalized_laplacian(a: &AffinityMatrix) -> ViewLaplacian {
    let k = a.k();
    let guarded = &a.a + DMatrix::<f64>::identity(k, k) * LAPLACIAN_EPS;
    let inv_sqrt: Vec<f64> = guarded.row_iter().map(|r| 1.0 / r.sum().sqrt()).collect();
    let mut l = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = inv_sqrt[i] * guarded[(i, j)] * inv_sqrt[j];
            l[(i, j)] = v;
            l[(j, i)] = v;
        }
    }
    ViewLaplacian { view: a.view, l }
}

/// Top `count` eigenvectors of symmetric `m`, by descending eigenvalue, each
/// flipped so its largest-magnitude entry is positive.
pub fn top_eigenvectors(m: &DMatrix<f64>, count: usize) -> Result<DMatrix<f64>, FusionError> {
    let n = m.nrows();
    if count > n {
        return Err(FusionError::TooManyClusters { requested: count, size: n });
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(FusionError::EigenFailure(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut u = DMatrix::zeros(n, count);
    for (c, &src) in order.iter().take(count).enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = col.iter().fold(0.0f64, |best, &x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        u.set_column(c, &(col * sign));
    }
    Ok(u)
}

pub fn spectral_embedding(l: &ViewLaplacian, k_motions: usize) -> Result<Embedding, FusionError> {
    Ok(Embedding { view: l.view, u: top_eigenvectors(&l.l, k_motions)? })
}

/// `tr(UₜᵀLₜUₜ) + tr(U_fᵀL_fU_f) + λ‖UₜᵀU_f‖²`.
pub fn coregularization_objective(
    l_traj: &ViewLaplacian,
    l_flow: &ViewLaplacian,
    u_traj: &DMatrix<f64>,
    u_flow: &DMatrix<f64>,
    lambda: f64,
) -> f64 {
    let own = |l: &DMatrix<f64>, u: &DMatrix<f64>| (u.transpose() * l * u).trace();
    own(&l_traj.l, u_traj) + own(&l_flow.l, u_flow) + lambda * (u_traj.transpose() * u_flow).norm_squared()
}

fn consensus_operator(l: &DMatrix<f64>, other: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    if lambda == 0.0 {
        return l.clone();
    }
    l + (other * other.transpose()) * lambda
}

/// Alternating maximization of the pairwise co-regularized objective.
/// Each half-step replaces one view's embedding by the top eigenvectors of
/// its operator plus `λ` times the other view's projector.
pub fn coregularized_embeddings(
    l_traj: &ViewLaplacian,
    l_flow: &ViewLaplacian,
    k_motions: usize,
    lambda: f64,
    iters: usize,
) -> Result<CoRegularized, FusionError> {
    if l_traj.l.nrows() != l_flow.l.nrows() {
        return Err(FusionError::ShapeMismatch(l_traj.l.nrows(), l_flow.l.nrows()));
    }
    let mut u_flow = top_eigenvectors(&l_flow.l, k_motions)?;
    let mut u_traj = top_eigenvectors(&l_traj.l, k_motions)?;
    let mut objective = vec![coregularization_objective(l_traj, l_flow, &u_traj, &u_flow, lambda)];
    for _ in 0..iters {
        u_traj = top_eigenvectors(&consensus_operator(&l_traj.l, &u_flow, lambda), k_motions)?;
        objective.push(coregularization_objective(l_traj, l_flow, &u_traj, &u_flow, lambda));
        u_flow = top_eigenvectors(&consensus_operator(&l_flow.l, &u_traj, lambda), k_motions)?;
        objective.push(coregularization_objective(l_traj, l_flow, &u_traj, &u_flow, lambda));
    }
    Ok(CoRegularized {
        traj: Embedding { view: View::Trajectory, u: u_traj },
        flow: Embedding { view: View::Flow, u: u_flow },
        objective,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Result of one k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub inertia: f64,
}

/// Lloyd's k-means on `points` with farthest-point seeding. Each restart
/// draws its first center from `rng`; the lowest inertia wins, earliest on ties.
pub fn kmeans<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, restarts: usize, rng: &mut R) -> KMeans {
    let n = points.len();
    assert!(k >= 1 && k <= n, "k-means needs 1 <= k <= n");
    let dim = points[0].len();
    let mut best: Option<KMeans> = None;

    for _ in 0..restarts.max(1) {
        let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].clone()];
        let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
        while centers.len() < k {
            let mut far = 0;
            for i in 1..n {
                if nearest[i] > nearest[far] {
                    far = i;
                }
            }
            centers.push(points[far].clone());
            for (d, p) in nearest.iter_mut().zip(points) {
                *d = d.min(sq_dist(p, &points[far]));
            }
        }

        let mut labels = vec![usize::MAX; n];
        for _ in 0..KMEANS_MAX_ITERS {
            let mut changed = false;
            for (i, p) in points.iter().enumerate() {
                let mut arg = 0;
                let mut dist = sq_dist(p, &centers[0]);
                for (c, center) in centers.iter().enumerate().skip(1) {
                    let d = sq_dist(p, center);
                    if d < dist {
                        dist = d;
                        arg = c;
                    }
                }
                if labels[i] != arg {
                    labels[i] = arg;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            for (c, center) in centers.iter_mut().enumerate() {
                let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
                if members.is_empty() {
                    continue;
                }
                for d in 0..dim {
                    center[d] = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
                }
            }
        }
        let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
        if best.as_ref().is_none_or(|b| inertia < b.inertia) {
            best = Some(KMeans { labels, inertia });
        }
    }
    best.expect("at least one restart")
}

/// Renumbers labels by order of first appearance.
pub fn relabel_by_appearance(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    labels
        .iter()
        .map(|&l| match map.iter().find(|(from, _)| *from == l) {
            Some(&(_, to)) => to,
            None => {
                let to = map.len();
                map.push((l, to));
                to
            }
        })
        .collect()
}

/// Clusters objects on the row-normalized column concatenation of the given
/// embeddings.
pub fn cluster_embeddings(
    embeddings: &[&Embedding],
    k_motions: usize,
    background: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterAssignment, FusionError> {
    let n = embeddings.first().map_or(0, |e| e.u.nrows());
    for e in embeddings {
        if e.u.nrows() != n {
            return Err(FusionError::ShapeMismatch(n, e.u.nrows()));
        }
    }
    if k_motions > n || k_motions == 0 {
        return Err(FusionError::TooManyClusters { requested: k_motions, size: n });
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = embeddings.iter().flat_map(|e| e.u.row(i).iter().copied().collect::<Vec<_>>()).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
            }
            row
        })
        .collect();
    let mut rng = seed::stream(seed, &[seed::STREAM_KMEANS]);
    let km = kmeans(&rows, k_motions, restarts, &mut rng);
    let labels = relabel_by_appearance(&km.labels);
    let bg_label = labels[background];
    let moving = labels.iter().map(|&l| l != bg_label).collect();
    Ok(ClusterAssignment { labels, moving })
}

/// Two-view form of [`cluster_embeddings`].
pub fn cluster_objects(
    u_traj: &Embedding,
    u_flow: &Embedding,
    k_motions: usize,
    background: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterAssignment, FusionError> {
    cluster_embeddings(&[u_traj, u_flow], k_motions, background, seed, restarts)
}
