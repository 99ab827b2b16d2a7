//! Single-view versus fused accuracy on seeded synthetic scenes.
//!
//! Evidence is computed once per view and reused for all three variants, so
//! the trajectory-only, flow-only and fused runs see identical residuals.

use crate::assignment::matched_accuracy;
use crate::segment::{clean_tracks, cluster_from_evidence, view_evidence, SegmentError};
use crate::synth::{generate_scene, ScenarioKind, ScenarioSpec, SynthError};
use crate::types::{EngineConfig, View};

#[derive(Debug, thiserror::Error)]
pub enum AblationError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
}

/// Hungarian-matched object-label accuracy of each variant on one scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationRow {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub traj: f64,
    pub flow: f64,
    pub fused: f64,
}

/// The scene kinds used for the ablation, in suite order.
pub const SUITE_KINDS: [ScenarioKind; 3] =
    [ScenarioKind::Parallax, ScenarioKind::EpipolarDegenerate, ScenarioKind::MultiObject];

/// `count` scenes cycling through [`SUITE_KINDS`] with seeds `0, 0, 0, 1, 1, …`.
pub fn suite(count: usize, noise_sigma: f64) -> Vec<ScenarioSpec> {
    (0..count)
        .map(|i| ScenarioSpec::new(SUITE_KINDS[i % SUITE_KINDS.len()], (i / SUITE_KINDS.len()) as u64).noise(noise_sigma))
        .collect()
}

/// Generates the scene for `spec` and scores the three variants on it.
pub fn score_scene(spec: &ScenarioSpec, cfg: &EngineConfig) -> Result<AblationRow, AblationError> {
    let scene = generate_scene(spec)?;
    let bundle = &scene.bundle;
    let truth = scene.ground_truth.labels(&bundle.objects);
    let tracks = clean_tracks(bundle, cfg);
    let traj = view_evidence(bundle, &tracks, cfg, View::Trajectory)?;
    let flow = view_evidence(bundle, &tracks, cfg, View::Flow)?;
    let acc = |evidence| -> Result<f64, SegmentError> {
        let seg = cluster_from_evidence(bundle, cfg, evidence)?;
        Ok(matched_accuracy(&seg.assignment.labels, &truth))
    };
    Ok(AblationRow {
        kind: spec.kind,
        seed: spec.seed,
        traj: acc(vec![traj.clone()])?,
        flow: acc(vec![flow.clone()])?,
        fused: acc(vec![traj, flow])?,
    })
}

/// Mean `(traj, flow, fused)` accuracy over `rows`, optionally restricted to one kind.
pub fn mean_accuracy(rows: &[AblationRow], kind: Option<ScenarioKind>) -> (f64, f64, f64) {
    let picked: Vec<_> = rows.iter().filter(|r| kind.is_none_or(|k| r.kind == k)).collect();
    if picked.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = picked.len() as f64;
    let sum = |f: fn(&AblationRow) -> f64| picked.iter().map(|r| f(r)).sum::<f64>() / n;
    (sum(|r| r.traj), sum(|r| r.flow), sum(|r| r.fused))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_cycles_kinds_and_seeds() {
        let s = suite(7, 0.5);
        let kinds: Vec<_> = s.iter().map(|x| x.kind).collect();
        assert_eq!(kinds[..4], [SUITE_KINDS[0], SUITE_KINDS[1], SUITE_KINDS[2], SUITE_KINDS[0]]);
        assert_eq!(s.iter().map(|x| x.seed).collect::<Vec<_>>(), vec![0, 0, 0, 1, 1, 1, 2]);
        assert!(s.iter().all(|x| x.noise_sigma == 0.5));
    }

    #[test]
    fn means_per_kind() {
        let row = |kind, traj| AblationRow { kind, seed: 0, traj, flow: 1.0, fused: 0.5 };
        let rows = [row(ScenarioKind::Parallax, 1.0), row(ScenarioKind::MultiObject, 0.0)];
        assert_eq!(mean_accuracy(&rows, None), (0.5, 1.0, 0.5));
        assert_eq!(mean_accuracy(&rows, Some(ScenarioKind::Parallax)), (1.0, 1.0, 0.5));
        assert_eq!(mean_accuracy(&rows, Some(ScenarioKind::Static)), (0.0, 0.0, 0.0));
    }
}
