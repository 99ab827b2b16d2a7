//! End-to-end behaviour of the pipeline on synthetic scenes.

use mofuse::assignment::matched_accuracy;
use mofuse::epipolar::sampson_distance;
use mofuse::flowdepth::{fit_flow_depth_model, flow_model_residual};
use mofuse::segment::{clean_tracks, flow_samples, trajectory_correspondences, view_residuals};
use mofuse::synth::{generate_scene, ScenarioKind, ScenarioSpec, SyntheticScene};
use mofuse::{segment_scene, EngineConfig, View};

fn scene(kind: ScenarioKind, seed: u64, noise: f64) -> SyntheticScene {
    generate_scene(&ScenarioSpec::new(kind, seed).noise(noise)).unwrap()
}

fn labels(s: &SyntheticScene, views: &[View]) -> Vec<usize> {
    segment_scene(&s.bundle, &EngineConfig::default(), views).unwrap().assignment.labels
}

fn group_of(s: &SyntheticScene) -> Vec<usize> {
    s.ground_truth.labels(&s.bundle.objects)
}

#[test]
fn epipolar_degenerate_needs_flow() {
    let s = scene(ScenarioKind::EpipolarDegenerate, 1, 0.5);
    let truth = group_of(&s);
    assert!(matched_accuracy(&labels(&s, &[View::Trajectory]), &truth) < 1.0);
    assert_eq!(matched_accuracy(&labels(&s, &[View::Flow]), &truth), 1.0);
    assert_eq!(matched_accuracy(&labels(&s, &View::ALL), &truth), 1.0);
}

#[test]
fn parallax_flow_splits_statics_fused_keeps_them() {
    let s = scene(ScenarioKind::Parallax, 2, 0.5);
    let truth = group_of(&s);
    let bg = s.bundle.background_index().unwrap();
    let statics: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == 0).collect();

    let flow = labels(&s, &[View::Flow]);
    assert!(statics.iter().any(|&i| flow[i] != flow[bg]), "flow {flow:?}");
    let fused = labels(&s, &View::ALL);
    assert!(statics.iter().all(|&i| fused[i] == fused[bg]), "fused {fused:?}");
    assert_eq!(matched_accuracy(&fused, &truth), 1.0);
}

#[test]
fn degenerate_movers_obey_background_geometry() {
    let s = scene(ScenarioKind::EpipolarDegenerate, 3, 0.0);
    let cfg = EngineConfig::default();
    let b = &s.bundle;
    let truth = group_of(&s);
    let bg = b.background_index().unwrap();
    let tracks = clean_tracks(b, &cfg);
    let corrs = trajectory_correspondences(b, &tracks, 0, cfg.frame_gap_traj);
    let f_bg = mofuse::epipolar::eight_point(&corrs[bg]).unwrap();
    let samples = flow_samples(b, &cfg, 0);
    let flow_bg = fit_flow_depth_model(&samples[bg]).unwrap().model;
    let fit_bg = flow_model_residual(&flow_bg, &samples[bg]).unwrap();

    let movers: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == 1).collect();
    assert!(!movers.is_empty());
    for &j in &movers {
        for c in &corrs[j] {
            assert!(sampson_distance(&f_bg.f, c).unwrap() < 1e-9);
        }
        let cross = flow_model_residual(&flow_bg, &samples[j]).unwrap();
        assert!(cross > 10.0 * fit_bg.max(1e-12), "object {j}: {cross:e} vs {fit_bg:e}");
    }
}

/// Noiseless scenes: every object's own model fits it in both views, and
/// objects from different motion groups are told apart by at least one view
/// in every frame pair both views cover.
#[test]
fn ground_truth_consistency() {
    let cfg = EngineConfig::default();
    let kinds = [ScenarioKind::Parallax, ScenarioKind::EpipolarDegenerate, ScenarioKind::MultiObject, ScenarioKind::Random];
    for kind in kinds {
        for seed in 0..4 {
            let s = scene(kind, seed, 0.0);
            let b = &s.bundle;
            let truth = group_of(&s);
            let tracks = clean_tracks(b, &cfg);
            let traj = view_residuals(b, &tracks, &cfg, View::Trajectory);
            let flow = view_residuals(b, &tracks, &cfg, View::Flow);
            for (_, r) in traj.iter().chain(&flow) {
                for i in 0..truth.len() {
                    if let Some(v) = r.get(i, i) {
                        assert!(v < 1e-9, "{kind} seed {seed}: own residual of {i} is {v:e}");
                    }
                }
            }
            for (m, rt) in &traj {
                let rf = &flow.iter().find(|(mf, _)| mf == m).unwrap().1;
                for i in 0..truth.len() {
                    for j in 0..truth.len() {
                        if truth[i] == truth[j] {
                            continue;
                        }
                        let best = [rt.get(i, j), rf.get(i, j)].into_iter().flatten().fold(0.0, f64::max);
                        assert!(best > 1e-4, "{kind} seed {seed} frame {m}: ({i},{j}) only {best:e}");
                    }
                }
            }
        }
    }
}

#[test]
fn static_scene_is_one_group() {
    let s = scene(ScenarioKind::Static, 0, 0.5);
    let seg = segment_scene(&s.bundle, &EngineConfig::default(), &View::ALL).unwrap();
    assert!(seg.assignment.moving.iter().all(|m| !m));
    assert!(seg.label_maps.iter().all(|m| m.labels.iter().all(|&l| l == 0)));
}

#[test]
fn segmentation_is_deterministic() {
    let s = scene(ScenarioKind::MultiObject, 5, 0.5);
    let cfg = EngineConfig::default().with_seed(11);
    let a = segment_scene(&s.bundle, &cfg, &View::ALL).unwrap();
    let b = segment_scene(&s.bundle, &cfg, &View::ALL).unwrap();
    assert_eq!(a.assignment, b.assignment);
    assert_eq!(a.objective, b.objective);
    assert_eq!(a.label_maps, b.label_maps);
}
