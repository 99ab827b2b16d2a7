//! Bundle directories: `manifest.json`, per-frame rasters and `tracks.json`.
//!
//! Layout written by [`write_bundle`]:
//!
//! ```text
//! manifest.json
//! mask_0000.mseg  depth_0000.mdep  flow_0000.mflo
//! ...
//! mask_NNNN.mseg  depth_NNNN.mdep            (no flow on the last frame)
//! tracks.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::formats::{read_depth, read_flow, read_seg, write_depth, write_flow, write_seg, FormatError};
use crate::synth::GroundTruth;
use crate::types::{validate_bundle, EngineConfig, Frame, LabelMap, ObjectMeta, SceneBundle, TrackSet, View, Violation};

pub const MANIFEST: &str = "manifest.json";
pub const TRACKS: &str = "tracks.json";
pub const GROUND_TRUTH: &str = "ground_truth.json";
pub const RESULT: &str = "result.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{path}: {detail}")]
    Manifest { path: PathBuf, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {} violation(s); first: {}", .violations.len(), .violations[0])]
    Invalid { path: PathBuf, violations: Vec<Violation> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFiles {
    pub mask: String,
    pub depth: String,
    pub flow: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub num_motions: usize,
    pub objects: Vec<ObjectMeta>,
    pub frames: Vec<FrameFiles>,
    pub tracks: String,
}

impl BundleManifest {
    /// Manifest with the canonical file naming for `bundle`.
    pub fn for_bundle(bundle: &SceneBundle) -> Self {
        let frames = bundle
            .frames
            .iter()
            .enumerate()
            .map(|(m, f)| FrameFiles {
                mask: format!("mask_{m:04}.mseg"),
                depth: format!("depth_{m:04}.mdep"),
                flow: f.flow.as_ref().map(|_| format!("flow_{m:04}.mflo")),
            })
            .collect();
        Self {
            width: bundle.width,
            height: bundle.height,
            frame_count: bundle.frame_count(),
            num_motions: bundle.num_motions,
            objects: bundle.objects.clone(),
            frames,
            tracks: TRACKS.into(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|source| IoError::Json { path: path.to_path_buf(), source })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|source| IoError::Json { path: path.to_path_buf(), source })?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(io_err(path))
}

fn ensure_dir(dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_bundle(bundle: &SceneBundle, dir: &Path) -> Result<(), IoError> {
    ensure_dir(dir)?;
    let manifest = BundleManifest::for_bundle(bundle);
    for (frame, files) in bundle.frames.iter().zip(&manifest.frames) {
        write_seg(&dir.join(&files.mask), &frame.mask)?;
        write_depth(&dir.join(&files.depth), &frame.depth)?;
        if let (Some(flow), Some(name)) = (&frame.flow, &files.flow) {
            write_flow(&dir.join(name), flow)?;
        }
    }
    write_json(&dir.join(&manifest.tracks), &bundle.tracks)?;
    write_json(&dir.join(MANIFEST), &manifest)
}

/// Loads and validates a bundle directory.
pub fn read_bundle(dir: &Path) -> Result<SceneBundle, IoError> {
    if !dir.is_dir() {
        return Err(IoError::Manifest { path: dir.to_path_buf(), detail: "not a bundle directory".into() });
    }
    let manifest_path = dir.join(MANIFEST);
    let manifest: BundleManifest = read_json(&manifest_path)?;
    let bad = |detail: String| IoError::Manifest { path: manifest_path.clone(), detail };
    if manifest.num_motions == 0 {
        return Err(bad("num_motions must be >= 1".into()));
    }
    if manifest.frames.len() != manifest.frame_count {
        return Err(bad(format!(
            "frame_count {} but {} frame entries",
            manifest.frame_count,
            manifest.frames.len()
        )));
    }
    let dims = |what: &str, file: &str, w: usize, h: usize| -> Result<(), IoError> {
        if (w, h) == (manifest.width, manifest.height) {
            Ok(())
        } else {
            Err(bad(format!("{what} {file} is {w}x{h}, manifest says {}x{}", manifest.width, manifest.height)))
        }
    };
    let mut frames = Vec::with_capacity(manifest.frames.len());
    for files in &manifest.frames {
        let mask = read_seg(&dir.join(&files.mask))?;
        dims("mask", &files.mask, mask.width, mask.height)?;
        let depth = read_depth(&dir.join(&files.depth))?;
        dims("depth", &files.depth, depth.width, depth.height)?;
        let flow = match &files.flow {
            Some(name) => {
                let flow = read_flow(&dir.join(name))?;
                dims("flow", name, flow.width, flow.height)?;
                Some(flow)
            }
            None => None,
        };
        frames.push(Frame { mask, depth, flow });
    }
    let tracks: TrackSet = read_json(&dir.join(&manifest.tracks))?;
    let bundle = SceneBundle {
        width: manifest.width,
        height: manifest.height,
        objects: manifest.objects,
        num_motions: manifest.num_motions,
        frames,
        tracks,
    };
    let violations = validate_bundle(&bundle);
    if !violations.is_empty() {
        return Err(IoError::Invalid { path: dir.to_path_buf(), violations });
    }
    Ok(bundle)
}

pub fn write_ground_truth(gt: &GroundTruth, dir: &Path) -> Result<(), IoError> {
    ensure_dir(dir)?;
    write_json(&dir.join(GROUND_TRUTH), gt)
}

pub fn read_ground_truth(dir: &Path) -> Result<GroundTruth, IoError> {
    read_json(&dir.join(GROUND_TRUTH))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectResult {
    pub id: u16,
    pub name: String,
    pub label: usize,
    pub moving: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewAffinities {
    pub raw: Vec<Vec<f64>>,
    pub normalized: Vec<Vec<f64>>,
}

/// `result.json` of a segmentation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationResult {
    pub seed: u64,
    pub views: Vec<View>,
    pub num_motions: usize,
    pub config: EngineConfig,
    pub objects: Vec<ObjectResult>,
    pub affinities: BTreeMap<View, ViewAffinities>,
    pub objective: Option<Vec<f64>>,
    pub masks: Vec<String>,
}

impl SegmentationResult {
    pub fn new(bundle: &SceneBundle, cfg: &EngineConfig, seg: &crate::segment::Segmentation) -> Self {
        let objects = bundle
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| ObjectResult {
                id: o.id,
                name: o.name.clone(),
                label: seg.assignment.labels[i],
                moving: seg.assignment.moving[i],
            })
            .collect();
        let affinities = seg
            .evidence
            .iter()
            .map(|e| (e.view, ViewAffinities { raw: e.affinity.rows(), normalized: e.normalized.rows() }))
            .collect();
        Self {
            seed: cfg.seed,
            views: seg.evidence.iter().map(|e| e.view).collect(),
            num_motions: bundle.num_motions,
            config: cfg.clone(),
            objects,
            affinities,
            objective: seg.objective.clone(),
            masks: (0..seg.label_maps.len()).map(|m| format!("seg_{m:04}.mseg")).collect(),
        }
    }
}

/// Writes `result.json` and one `MSEG` map per frame.
pub fn write_result(result: &SegmentationResult, maps: &[LabelMap], dir: &Path) -> Result<(), IoError> {
    ensure_dir(dir)?;
    for (name, map) in result.masks.iter().zip(maps) {
        write_seg(&dir.join(name), map)?;
    }
    write_json(&dir.join(RESULT), result)
}

/// The per-frame moving-instance maps listed in `dir/result.json`.
pub fn read_result_maps(dir: &Path) -> Result<Vec<LabelMap>, IoError> {
    let result: SegmentationResult = read_json(&dir.join(RESULT))?;
    result.masks.iter().map(|name| Ok(read_seg(&dir.join(name))?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_scene, ScenarioKind, ScenarioSpec};

    fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut out: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let scene = generate_scene(&ScenarioSpec::new(ScenarioKind::Random, 3).noise(0.5)).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_bundle(&scene.bundle, a.path()).unwrap();
        let back = read_bundle(a.path()).unwrap();
        assert_eq!(back, scene.bundle);
        write_bundle(&back, b.path()).unwrap();
        assert_eq!(listing(a.path()), listing(b.path()));
    }

    #[test]
    fn zero_motions_rejected() {
        let scene = generate_scene(&ScenarioSpec::new(ScenarioKind::Static, 0).frames(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&scene.bundle, dir.path()).unwrap();
        let path = dir.path().join(MANIFEST);
        let mut manifest: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
        manifest["num_motions"] = 0.into();
        fs::write(&path, serde_json::to_vec(&manifest).unwrap()).unwrap();
        assert!(matches!(read_bundle(dir.path()), Err(IoError::Manifest { .. })));
    }

    #[test]
    fn missing_file_is_reported() {
        let scene = generate_scene(&ScenarioSpec::new(ScenarioKind::Static, 0).frames(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&scene.bundle, dir.path()).unwrap();
        fs::remove_file(dir.path().join("depth_0001.mdep")).unwrap();
        let err = read_bundle(dir.path()).unwrap_err();
        assert!(err.to_string().contains("depth_0001.mdep"));
    }

    #[test]
    fn nonpositive_depth_rejected_at_ingest() {
        let mut scene = generate_scene(&ScenarioSpec::new(ScenarioKind::Static, 0).frames(2)).unwrap();
        scene.bundle.frames[1].depth.z[5] = 0.0;
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&scene.bundle, dir.path()).unwrap();
        assert!(matches!(read_bundle(dir.path()), Err(IoError::Invalid { .. })));
    }
}
