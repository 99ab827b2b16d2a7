//! Domain types shared by every stage of the engine.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::epipolar::RansacConfig;

/// Label-map pixel value identifying an object. `0` marks unassigned pixels.
pub type ObjectId = u16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectMeta {
    pub id: ObjectId,
    pub name: String,
    pub is_background: bool,
}

/// Row-major grid of object ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u16>,
}

impl LabelMap {
    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        Self { width, height, labels: vec![value; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.labels[y * self.width + x]
    }

    pub fn count(&self, id: u16) -> usize {
        self.labels.iter().filter(|&&l| l == id).count()
    }
}

/// Per-pixel displacement (pixels) from frame `m` to `m + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub u: Vec<f32>,
    pub v: Vec<f32>,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, u: vec![0.0; width * height], v: vec![0.0; width * height] }
    }
}

/// Per-pixel relative depth. Positive, unitless.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthField {
    pub width: usize,
    pub height: usize,
    pub z: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub track_id: u32,
    pub object_id: ObjectId,
    pub points: Vec<TrackPoint>,
}

impl Track {
    /// Position at `frame`, if the track was observed there.
    pub fn at(&self, frame: usize) -> Option<&TrackPoint> {
        self.points
            .binary_search_by_key(&frame, |p| p.frame)
            .ok()
            .map(|i| &self.points[i])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackSet {
    pub tracks: Vec<Track>,
}

/// Cues for one frame. `flow` holds motion towards the next frame and is
/// absent on the last frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub mask: LabelMap,
    pub depth: DepthField,
    pub flow: Option<FlowField>,
}

/// One video's worth of motion cues.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneBundle {
    pub width: usize,
    pub height: usize,
    pub objects: Vec<ObjectMeta>,
    /// Number of motion groups the scene is known to contain.
    pub num_motions: usize,
    pub frames: Vec<Frame>,
    pub tracks: TrackSet,
}

impl SceneBundle {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn background_index(&self) -> Option<usize> {
        self.objects.iter().position(|o| o.is_background)
    }

    pub fn object_index(&self, id: ObjectId) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn normalizer(&self) -> Normalizer {
        Normalizer::new(self.width, self.height)
    }
}

/// Intrinsics-free pixel to normalized-coordinate map:
/// `x̂ = (x - w/2) / max(w, h)`, likewise for `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub cx: f64,
    pub cy: f64,
    pub scale: f64,
}

impl Normalizer {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            scale: width.max(height) as f64,
        }
    }

    #[inline]
    pub fn point(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.cx) / self.scale, (y - self.cy) / self.scale)
    }

    #[inline]
    pub fn displacement(&self, u: f64, v: f64) -> (f64, f64) {
        (u / self.scale, v / self.scale)
    }

    #[inline]
    pub fn to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        (x * self.scale + self.cx, y * self.scale + self.cy)
    }
}

/// The two motion cues the engine can cluster on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Trajectory,
    Flow,
}

impl View {
    pub const ALL: [View; 2] = [View::Trajectory, View::Flow];

    pub fn name(self) -> &'static str {
        match self {
            View::Trajectory => "trajectory",
            View::Flow => "flow",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for View {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "traj" | "trajectory" | "trajs" => Ok(View::Trajectory),
            "flow" => Ok(View::Flow),
            other => Err(format!("unknown view `{other}` (expected traj or flow)")),
        }
    }
}

/// Engine-wide knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Frame gap between the two views of each fundamental-matrix fit.
    pub frame_gap_traj: usize,
    pub ransac: RansacConfig,
    /// Inlier count threshold of the ordered residual kernel. `None` means
    /// `ceil(k / 2)` for `k` objects.
    pub ork_t: Option<usize>,
    /// Co-regularization weight.
    pub lambda: f64,
    pub coreg_iters: usize,
    pub kmeans_restarts: usize,
    pub seed: u64,
    pub min_track_points: usize,
    /// Shortest track kept after sanitation.
    pub min_track_len: usize,
    pub min_object_pixels: usize,
    pub flow_sample_cap: usize,
    /// Track points closer than this to any image border are dropped.
    pub edge_margin: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            frame_gap_traj: 3,
            ransac: RansacConfig::default(),
            ork_t: None,
            lambda: 0.025,
            coreg_iters: 10,
            kmeans_restarts: 10,
            seed: 0,
            min_track_points: 8,
            min_track_len: 2,
            min_object_pixels: 16,
            flow_sample_cap: 1000,
            edge_margin: 8.0,
        }
    }
}

impl EngineConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Resolved ORK threshold for `k` objects, clamped into `[1, k]`.
    pub fn ork_threshold(&self, k: usize) -> usize {
        self.ork_t.unwrap_or(k.div_ceil(2)).clamp(1, k.max(1))
    }

    pub fn check(&self) -> Result<(), String> {
        if self.frame_gap_traj == 0 {
            return Err("frame_gap_traj must be >= 1".into());
        }
        if !(self.lambda >= 0.0) {
            return Err("lambda must be >= 0".into());
        }
        if self.ork_t == Some(0) {
            return Err("ork_t must be >= 1".into());
        }
        let counts = [
            ("coreg_iters", self.coreg_iters),
            ("kmeans_restarts", self.kmeans_restarts),
            ("min_track_points", self.min_track_points),
            ("min_track_len", self.min_track_len),
            ("min_object_pixels", self.min_object_pixels),
            ("flow_sample_cap", self.flow_sample_cap),
            ("ransac.max_iters", self.ransac.max_iters),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(format!("{name} must be >= 1"));
            }
        }
        if !(self.ransac.sampson_inlier_threshold > 0.0) {
            return Err("ransac.sampson_inlier_threshold must be > 0".into());
        }
        Ok(())
    }
}

/// A broken bundle invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub frame: Option<usize>,
    pub detail: String,
}

impl Violation {
    fn new(field: &str, frame: Option<usize>, detail: impl Into<String>) -> Self {
        Self { field: field.to_string(), frame, detail: detail.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frame {
            Some(m) => write!(f, "{} (frame {}): {}", self.field, m, self.detail),
            None => write!(f, "{}: {}", self.field, self.detail),
        }
    }
}

/// Checks every bundle invariant and reports each broken one.
///
/// At most one violation is reported per field and frame; the detail names
/// the first offending pixel or track plus the total count.
pub fn validate_bundle(bundle: &SceneBundle) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = bundle.frame_count();
    let (w, h) = (bundle.width, bundle.height);

    if n < 2 {
        out.push(Violation::new("frame_count", None, format!("{n} frames, need at least 2")));
    }
    if w == 0 || h == 0 {
        out.push(Violation::new("width/height", None, format!("{w}x{h} is empty")));
    }

    let backgrounds = bundle.objects.iter().filter(|o| o.is_background).count();
    if backgrounds != 1 {
        out.push(Violation::new(
            "is_background",
            None,
            format!("{backgrounds} objects flagged as background, expected exactly 1"),
        ));
    }
    let mut ids = BTreeSet::new();
    for o in &bundle.objects {
        if o.id == 0 {
            out.push(Violation::new("objects.id", None, format!("object `{}` uses reserved id 0", o.name)));
        } else if !ids.insert(o.id) {
            out.push(Violation::new("objects.id", None, format!("duplicate object id {}", o.id)));
        }
    }
    if bundle.num_motions == 0 || bundle.num_motions > bundle.objects.len() {
        out.push(Violation::new(
            "num_motions",
            None,
            format!("{} motions for {} objects", bundle.num_motions, bundle.objects.len()),
        ));
    }

    for (m, frame) in bundle.frames.iter().enumerate() {
        let mask = &frame.mask;
        if mask.width != w || mask.height != h || mask.labels.len() != w * h {
            out.push(Violation::new(
                "LabelMap",
                Some(m),
                format!("dimensions {}x{} ({} labels) differ from {w}x{h}", mask.width, mask.height, mask.labels.len()),
            ));
        } else {
            let mut bad = mask.labels.iter().enumerate().filter(|(_, &l)| l != 0 && !ids.contains(&l));
            if let Some((first, &label)) = bad.next() {
                let count = 1 + bad.count();
                out.push(Violation::new(
                    "LabelMap",
                    Some(m),
                    format!("unknown label {label} at pixel ({}, {}); {count} such pixels", first % w, first / w),
                ));
            }
        }

        let depth = &frame.depth;
        if depth.width != w || depth.height != h || depth.z.len() != w * h {
            out.push(Violation::new(
                "DepthField",
                Some(m),
                format!("dimensions {}x{} ({} values) differ from {w}x{h}", depth.width, depth.height, depth.z.len()),
            ));
        } else {
            let mut bad = depth.z.iter().enumerate().filter(|(_, &z)| !(z.is_finite() && z > 0.0));
            if let Some((first, &z)) = bad.next() {
                let count = 1 + bad.count();
                out.push(Violation::new(
                    "DepthField",
                    Some(m),
                    format!("depth {z} at pixel ({}, {}) is not finite and positive; {count} such pixels", first % w, first / w),
                ));
            }
        }

        match &frame.flow {
            Some(flow) => {
                if flow.width != w || flow.height != h || flow.u.len() != w * h || flow.v.len() != w * h {
                    out.push(Violation::new(
                        "FlowField",
                        Some(m),
                        format!("dimensions {}x{} differ from {w}x{h}", flow.width, flow.height),
                    ));
                } else {
                    let bad = flow.u.iter().chain(&flow.v).filter(|x| !x.is_finite()).count();
                    if bad > 0 {
                        out.push(Violation::new("FlowField", Some(m), format!("{bad} non-finite components")));
                    }
                }
            }
            None if m + 1 < n => {
                out.push(Violation::new("FlowField", Some(m), "missing flow for a frame with a successor"));
            }
            None => {}
        }
    }

    for track in &bundle.tracks.tracks {
        let tid = track.track_id;
        if !ids.contains(&track.object_id) {
            out.push(Violation::new(
                "TrackSet.object_id",
                None,
                format!("track {tid} refers to unknown object {}", track.object_id),
            ));
        }
        if track.points.windows(2).any(|w| w[1].frame <= w[0].frame) {
            out.push(Violation::new("TrackSet.points", None, format!("track {tid} frames not strictly increasing")));
        }
        if let Some(p) = track.points.iter().find(|p| p.frame >= n) {
            out.push(Violation::new("TrackSet.points", Some(p.frame), format!("track {tid} frame out of range")));
        }
        if track.points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            out.push(Violation::new("TrackSet.points", None, format!("track {tid} has non-finite coordinates")));
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_bundle() -> SceneBundle {
        let (w, h) = (4, 3);
        let objects = vec![
            ObjectMeta { id: 1, name: "background".into(), is_background: true },
            ObjectMeta { id: 2, name: "box".into(), is_background: false },
        ];
        let mut mask = LabelMap::filled(w, h, 1);
        mask.labels[5] = 2;
        let depth = DepthField { width: w, height: h, z: vec![1.0; w * h] };
        let frames = vec![
            Frame { mask: mask.clone(), depth: depth.clone(), flow: Some(FlowField::zeros(w, h)) },
            Frame { mask, depth, flow: None },
        ];
        let tracks = TrackSet {
            tracks: vec![Track {
                track_id: 0,
                object_id: 2,
                points: vec![TrackPoint { frame: 0, x: 1.0, y: 1.0 }, TrackPoint { frame: 1, x: 1.5, y: 1.0 }],
            }],
        };
        SceneBundle { width: w, height: h, objects, num_motions: 2, frames, tracks }
    }

    #[test]
    fn well_formed_bundle_has_no_violations() {
        assert!(validate_bundle(&tiny_bundle()).is_empty());
    }

    #[test]
    fn two_backgrounds_flagged() {
        let mut b = tiny_bundle();
        b.objects[1].is_background = true;
        let v = validate_bundle(&b);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "is_background");
    }

    #[test]
    fn zero_depth_names_field_and_pixel() {
        let mut b = tiny_bundle();
        b.frames[1].depth.z[6] = 0.0;
        let v = validate_bundle(&b);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "DepthField");
        assert_eq!(v[0].frame, Some(1));
        assert!(v[0].detail.contains("pixel (2, 1)"), "{}", v[0].detail);
    }

    #[test]
    fn track_invariants() {
        let mut b = tiny_bundle();
        b.tracks.tracks[0].points[1].frame = 0;
        b.tracks.tracks[0].object_id = 9;
        let fields: Vec<_> = validate_bundle(&b).into_iter().map(|v| v.field).collect();
        assert!(fields.contains(&"TrackSet.object_id".to_string()));
        assert!(fields.contains(&"TrackSet.points".to_string()));
    }

    #[test]
    fn num_motions_bounds() {
        let mut b = tiny_bundle();
        b.num_motions = 0;
        assert_eq!(validate_bundle(&b)[0].field, "num_motions");
        b.num_motions = 3;
        assert_eq!(validate_bundle(&b)[0].field, "num_motions");
    }

    #[test]
    fn unknown_label_and_missing_flow() {
        let mut b = tiny_bundle();
        b.frames[0].mask.labels[0] = 7;
        b.frames[0].flow = None;
        let v = validate_bundle(&b);
        assert_eq!(v.len(), 2);
        assert!(v.iter().any(|x| x.field == "LabelMap" && x.frame == Some(0)));
        assert!(v.iter().any(|x| x.field == "FlowField" && x.frame == Some(0)));
    }

    #[test]
    fn validation_is_pure() {
        let mut b = tiny_bundle();
        b.frames[0].depth.z[0] = -1.0;
        assert_eq!(validate_bundle(&b), validate_bundle(&b));
    }

    #[test]
    fn normalizer_centers_and_scales() {
        let n = Normalizer::new(200, 100);
        assert_eq!(n.point(100.0, 50.0), (0.0, 0.0));
        assert_eq!(n.point(200.0, 100.0), (0.5, 0.25));
        assert_eq!(n.to_pixel(0.5, 0.25), (200.0, 100.0));
    }

    #[test]
    fn default_ork_threshold_is_half_rounded_up() {
        let cfg = EngineConfig::default();
        assert_eq!(cfg.ork_threshold(5), 3);
        assert_eq!(cfg.ork_threshold(6), 3);
        assert_eq!(cfg.ork_threshold(1), 1);
        let cfg = EngineConfig { ork_t: Some(9), ..EngineConfig::default() };
        assert_eq!(cfg.ork_threshold(4), 4);
    }
}
