//! End-to-end object motion segmentation of a scene bundle.

use thiserror::Error;

use crate::affinity::{
    accumulate_affinity, normalize_affinity, ork_scores, residual_matrix_flow, residual_matrix_traj, AffinityError,
    AffinityMatrix, ResidualMatrix, ScoreMatrix,
};
use crate::epipolar::{ransac_fit_fundamental, Correspondence, RansacConfig};
use crate::flowdepth::{fit_flow_depth_model, subsample, FlowSample};
use crate::fusion::{
    cluster_embeddings, cluster_objects, coregularized_embeddings, normalized_laplacian, spectral_embedding,
    ClusterAssignment, FusionError,
};
use crate::io::tracks::sanitize_tracks;
use crate::seed;
use crate::types::{validate_bundle, EngineConfig, LabelMap, ObjectId, SceneBundle, TrackSet, View, Violation};

/// Fewest flow samples that still give the 8 equations of one model.
pub const MIN_FLOW_SAMPLES: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SegmentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("bundle violates {} invariant(s); first: {}", .0.len(), .0[0])]
    InvalidBundle(Vec<Violation>),
    #[error("no views requested")]
    NoViews,
    #[error("object {0} has no usable motion model in any requested view")]
    NotEnoughEvidence(ObjectId),
    #[error(transparent)]
    Affinity(#[from] AffinityError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
}

/// Everything one view contributes: per-frame-pair residuals and scores,
/// the accumulated affinity and its normalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewEvidence {
    pub view: View,
    /// `(first frame, residuals)` per frame pair, in ascending frame order.
    pub residuals: Vec<(usize, ResidualMatrix)>,
    pub scores: Vec<ScoreMatrix>,
    pub affinity: AffinityMatrix,
    pub normalized: AffinityMatrix,
}

impl ViewEvidence {
    /// Whether object `i` had a usable model in at least one frame pair.
    pub fn has_model(&self, i: usize) -> bool {
        self.residuals.iter().any(|(_, r)| r.row_valid(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub assignment: ClusterAssignment,
    /// Per frame: each pixel's moving-cluster id, 0 for the background's cluster.
    pub label_maps: Vec<LabelMap>,
    pub evidence: Vec<ViewEvidence>,
    /// Co-regularization objective trace when both views were fused.
    pub objective: Option<Vec<f64>>,
}

/// Per-object correspondences between frames `m` and `m + gap`, in
/// normalized coordinates.
pub fn trajectory_correspondences(bundle: &SceneBundle, tracks: &TrackSet, m: usize, gap: usize) -> Vec<Vec<Correspondence>> {
    let norm = bundle.normalizer();
    let mut out = vec![Vec::new(); bundle.objects.len()];
    for track in &tracks.tracks {
        let Some(i) = bundle.object_index(track.object_id) else { continue };
        if let (Some(a), Some(b)) = (track.at(m), track.at(m + gap)) {
            let (x, y) = norm.point(a.x, a.y);
            let (xp, yp) = norm.point(b.x, b.y);
            out[i].push(Correspondence::new(x, y, xp, yp));
        }
    }
    out
}

/// Per-object flow samples at frame `m`, each capped at
/// `cfg.flow_sample_cap` by a per-(object, frame) random subset. Objects
/// covering fewer than `cfg.min_object_pixels` pixels get no samples.
pub fn flow_samples(bundle: &SceneBundle, cfg: &EngineConfig, m: usize) -> Vec<Vec<FlowSample>> {
    let frame = &bundle.frames[m];
    let Some(flow) = &frame.flow else {
        return vec![Vec::new(); bundle.objects.len()];
    };
    let norm = bundle.normalizer();
    let mut pixels: Vec<Vec<usize>> = vec![Vec::new(); bundle.objects.len()];
    for (idx, &label) in frame.mask.labels.iter().enumerate() {
        if let Some(i) = bundle.object_index(label) {
            pixels[i].push(idx);
        }
    }
    pixels
        .iter()
        .zip(&bundle.objects)
        .map(|(px, obj)| {
            if px.len() < cfg.min_object_pixels.max(MIN_FLOW_SAMPLES) {
                return Vec::new();
            }
            let mut rng = seed::stream(cfg.seed, &[seed::STREAM_FLOW_SAMPLES, u64::from(obj.id), m as u64]);
            subsample(px, cfg.flow_sample_cap, &mut rng)
                .into_iter()
                .map(|idx| {
                    let (x, y) = norm.point((idx % bundle.width) as f64, (idx / bundle.width) as f64);
                    let (u, v) = norm.displacement(f64::from(flow.u[idx]), f64::from(flow.v[idx]));
                    FlowSample::with_depth(x, y, f64::from(frame.depth.z[idx]), u, v)
                })
                .collect()
        })
        .collect()
}

/// Frame gap actually used for epipolar fits: the configured gap, shortened
/// when the clip is too short for it.
pub fn effective_gap(bundle: &SceneBundle, cfg: &EngineConfig) -> usize {
    cfg.frame_gap_traj.min(bundle.frame_count().saturating_sub(1)).max(1)
}

/// Residual matrices for every frame pair of `view`.
pub fn view_residuals(bundle: &SceneBundle, tracks: &TrackSet, cfg: &EngineConfig, view: View) -> Vec<(usize, ResidualMatrix)> {
    let n = bundle.frame_count();
    match view {
        View::Trajectory => {
            let gap = effective_gap(bundle, cfg);
            (0..n.saturating_sub(gap))
                .map(|m| {
                    let corrs = trajectory_correspondences(bundle, tracks, m, gap);
                    let models: Vec<_> = corrs
                        .iter()
                        .zip(&bundle.objects)
                        .map(|(c, obj)| {
                            let ransac = RansacConfig {
                                rng_seed: seed::derive_seed(cfg.seed, &[seed::STREAM_RANSAC, u64::from(obj.id), m as u64]),
                                ..cfg.ransac.clone()
                            };
                            ransac_fit_fundamental(c, &ransac).into_model()
                        })
                        .collect();
                    (m, residual_matrix_traj(&models, &corrs, cfg.min_track_points))
                })
                .collect()
        }
        View::Flow => (0..n.saturating_sub(1))
            .map(|m| {
                let samples = flow_samples(bundle, cfg, m);
                let models: Vec<_> = samples
                    .iter()
                    .map(|s| fit_flow_depth_model(s).ok().map(|fit| fit.model))
                    .collect();
                (m, residual_matrix_flow(&models, &samples, MIN_FLOW_SAMPLES))
            })
            .collect(),
    }
}

/// Residuals, ORK scores and affinities for one view. `tracks` should
/// already be sanitized.
pub fn view_evidence(
    bundle: &SceneBundle,
    tracks: &TrackSet,
    cfg: &EngineConfig,
    view: View,
) -> Result<ViewEvidence, SegmentError> {
    let k = bundle.objects.len();
    let residuals = view_residuals(bundle, tracks, cfg, view);
    let t = cfg.ork_threshold(k);
    let mut scores: Vec<ScoreMatrix> = residuals.iter().map(|(_, r)| ork_scores(r, t)).collect();
    if scores.is_empty() {
        // no frame pair for this view: an all-zero score keeps shapes intact
        scores.push(ork_scores(&ResidualMatrix::invalid(k), t));
    }
    let affinity = accumulate_affinity(view, &scores)?;
    let normalized = normalize_affinity(&affinity);
    Ok(ViewEvidence { view, residuals, scores, affinity, normalized })
}

/// Tracks with off-mask and near-border points removed.
pub fn clean_tracks(bundle: &SceneBundle, cfg: &EngineConfig) -> TrackSet {
    let masks: Vec<&LabelMap> = bundle.frames.iter().map(|f| &f.mask).collect();
    sanitize_tracks(&bundle.tracks, &masks, cfg.edge_margin, cfg.min_track_len)
}

/// Per-frame maps of moving clusters: the background's cluster becomes 0,
/// the others 1, 2, … in cluster order. Unassigned pixels stay 0.
pub fn moving_label_maps(bundle: &SceneBundle, assignment: &ClusterAssignment) -> Vec<LabelMap> {
    let bg = bundle.background_index().map(|i| assignment.labels[i]);
    let mut cluster_ids = vec![0u16; assignment.cluster_count()];
    let mut next = 1u16;
    for (c, id) in cluster_ids.iter_mut().enumerate() {
        if Some(c) != bg {
            *id = next;
            next += 1;
        }
    }
    let max_id = bundle.objects.iter().map(|o| o.id as usize).max().unwrap_or(0);
    let mut by_id = vec![0u16; max_id + 1];
    for (i, obj) in bundle.objects.iter().enumerate() {
        by_id[obj.id as usize] = cluster_ids[assignment.labels[i]];
    }
    bundle
        .frames
        .iter()
        .map(|f| LabelMap {
            width: f.mask.width,
            height: f.mask.height,
            labels: f.mask.labels.iter().map(|&l| by_id.get(l as usize).copied().unwrap_or(0)).collect(),
        })
        .collect()
}

/// Clusters objects from already computed per-view evidence (one or two
/// views).
pub fn cluster_from_evidence(
    bundle: &SceneBundle,
    cfg: &EngineConfig,
    evidence: Vec<ViewEvidence>,
) -> Result<Segmentation, SegmentError> {
    if evidence.is_empty() {
        return Err(SegmentError::NoViews);
    }
    for (i, obj) in bundle.objects.iter().enumerate() {
        if !evidence.iter().any(|e| e.has_model(i)) {
            return Err(SegmentError::NotEnoughEvidence(obj.id));
        }
    }
    let k_motions = bundle.num_motions;
    let background = bundle.background_index().unwrap_or(0);
    let laplacians: Vec<_> = evidence.iter().map(|e| normalized_laplacian(&e.normalized)).collect();
    let (assignment, objective) = match laplacians.as_slice() {
        [single] => {
            let emb = spectral_embedding(single, k_motions)?;
            (cluster_embeddings(&[&emb], k_motions, background, cfg.seed, cfg.kmeans_restarts)?, None)
        }
        [a, b] => {
            let (traj, flow) = if a.view == View::Trajectory { (a, b) } else { (b, a) };
            let co = coregularized_embeddings(traj, flow, k_motions, cfg.lambda, cfg.coreg_iters)?;
            let assignment = cluster_objects(&co.traj, &co.flow, k_motions, background, cfg.seed, cfg.kmeans_restarts)?;
            (assignment, Some(co.objective))
        }
        _ => unreachable!("views are deduplicated"),
    };
    let label_maps = moving_label_maps(bundle, &assignment);
    Ok(Segmentation { assignment, label_maps, evidence, objective })
}

/// Deduplicated views in canonical order (trajectory first).
pub fn canonical_views(views: &[View]) -> Vec<View> {
    View::ALL.into_iter().filter(|v| views.contains(v)).collect()
}

/// Segments the objects of `bundle` into `bundle.num_motions` motion groups
/// using the requested views.
pub fn segment_scene(bundle: &SceneBundle, cfg: &EngineConfig, views: &[View]) -> Result<Segmentation, SegmentError> {
    cfg.check().map_err(SegmentError::Config)?;
    let views = canonical_views(views);
    if views.is_empty() {
        return Err(SegmentError::NoViews);
    }
    let violations = validate_bundle(bundle);
    if !violations.is_empty() {
        return Err(SegmentError::InvalidBundle(violations));
    }
    let tracks = clean_tracks(bundle, cfg);
    let evidence = views
        .iter()
        .map(|&v| view_evidence(bundle, &tracks, cfg, v))
        .collect::<Result<Vec<_>, _>>()?;
    cluster_from_evidence(bundle, cfg, evidence)
}
