//! Deterministic synthetic rigid scenes with analytic ground truth.
//!
//! Scenes are built from planar patches seen by a pinhole camera. Masks,
//! depth and dense flow are rendered analytically from the patches; tracks
//! follow 3D points attached to each body with some relief off the patch
//! plane so that per-object point sets are never coplanar.
//!
//! All scenario motions are translations parallel to the image plane, which
//! keeps every object's own flow exactly representable by the flow+depth
//! model and every object's own trajectories exactly epipolar.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::types::{
    DepthField, FlowField, Frame, LabelMap, Normalizer, ObjectId, ObjectMeta, SceneBundle, Track, TrackPoint,
    TrackSet,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("point is behind the camera at frame {frame}")]
    BehindCamera { frame: usize },
}

/// Rigid transform `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn apply_inverse(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }
}

/// Pinhole camera. `poses[m]` maps camera coordinates to world coordinates
/// at frame `m`; its translation is the camera center.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    /// Focal length in normalized units (multiples of `max(width, height)`).
    pub focal: f64,
    pub width: usize,
    pub height: usize,
    pub poses: Vec<Pose>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub x: f64,
    pub y: f64,
    pub depth: f64,
}

impl CameraModel {
    pub fn normalizer(&self) -> Normalizer {
        Normalizer::new(self.width, self.height)
    }

    pub fn project(&self, frame: usize, point: &Vector3<f64>) -> Result<Projection, SynthError> {
        let pc = self.poses[frame].apply_inverse(point);
        if !(pc.z > 1e-9) {
            return Err(SynthError::BehindCamera { frame });
        }
        let (x, y) = self.normalizer().to_pixel(self.focal * pc.x / pc.z, self.focal * pc.y / pc.z);
        Ok(Projection { x, y, depth: pc.z })
    }

    /// World point at camera-frame depth `depth` behind pixel `(x, y)`.
    pub fn back_project(&self, frame: usize, x: f64, y: f64, depth: f64) -> Vector3<f64> {
        self.poses[frame].apply(&(self.ray_camera(x, y) * depth))
    }

    /// Camera-frame ray direction with unit z component.
    fn ray_camera(&self, x: f64, y: f64) -> Vector3<f64> {
        let (xn, yn) = self.normalizer().point(x, y);
        Vector3::new(xn / self.focal, yn / self.focal, 1.0)
    }
}

/// A planar rectangular patch attached to a moving rigid frame. The patch is
/// the local `z = 0` plane with half extents along local x and y.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidBody {
    pub id: ObjectId,
    pub name: String,
    pub is_background: bool,
    pub motion_group: usize,
    pub half_extent: [f64; 2],
    /// Body-to-world transform per frame.
    pub poses: Vec<Pose>,
    /// Track points sit up to this fraction of their depth off the patch.
    pub relief: f64,
}

impl RigidBody {
    pub fn center(&self, frame: usize) -> Vector3<f64> {
        self.poses[frame].translation
    }

    pub fn normal(&self, frame: usize) -> Vector3<f64> {
        self.poses[frame].rotation.column(2).into_owned()
    }

    /// Ray parameter of the hit with the patch, if any. With a unit-z camera
    /// ray this is the camera-frame depth.
    fn intersect(&self, frame: usize, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let n = self.normal(frame);
        let denom = n.dot(dir);
        if denom.abs() < 1e-12 {
            return None;
        }
        let s = n.dot(&(self.center(frame) - origin)) / denom;
        if !(s > 1e-9) {
            return None;
        }
        let local = self.poses[frame].apply_inverse(&(origin + dir * s));
        (local.x.abs() <= self.half_extent[0] && local.y.abs() <= self.half_extent[1]).then_some(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Lateral camera motion over flat static objects at strongly different
    /// depths, plus a group of objects moving across the epipolar lines.
    Parallax,
    /// Lateral camera motion; one group slides along the camera's direction
    /// of travel and so obeys the background's epipolar geometry.
    EpipolarDegenerate,
    /// Several moving groups, some with more than one object.
    MultiObject,
    /// Nothing moves.
    Static,
    /// Randomized groups, velocities and slants.
    Random,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Parallax,
        ScenarioKind::EpipolarDegenerate,
        ScenarioKind::MultiObject,
        ScenarioKind::Static,
        ScenarioKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Parallax => "parallax",
            ScenarioKind::EpipolarDegenerate => "epipolar_degenerate",
            ScenarioKind::MultiObject => "multi_object",
            ScenarioKind::Static => "static",
            ScenarioKind::Random => "random",
        }
    }

    fn min_objects(self) -> usize {
        match self {
            ScenarioKind::Static | ScenarioKind::Random => 1,
            ScenarioKind::MultiObject | ScenarioKind::EpipolarDegenerate => 2,
            ScenarioKind::Parallax => 3,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub seed: u64,
    /// Total number of objects, background included.
    pub num_objects: usize,
    pub frame_count: usize,
    /// Standard deviation, in pixels, of noise added to flow and tracks.
    pub noise_sigma: f64,
    pub width: usize,
    pub height: usize,
}

impl ScenarioSpec {
    pub const MAX_OBJECTS: usize = 1 + SLOTS.len();

    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        Self { kind, seed, num_objects: 6, frame_count: 8, noise_sigma: 0.0, width: 256, height: 192 }
    }

    pub fn objects(mut self, n: usize) -> Self {
        self.num_objects = n;
        self
    }

    pub fn frames(mut self, n: usize) -> Self {
        self.frame_count = n;
        self
    }

    pub fn noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    fn check(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.num_objects < self.kind.min_objects() {
            return bad(format!("{} needs at least {} objects, got {}", self.kind, self.kind.min_objects(), self.num_objects));
        }
        if self.num_objects > Self::MAX_OBJECTS {
            return bad(format!("at most {} objects supported, got {}", Self::MAX_OBJECTS, self.num_objects));
        }
        if self.frame_count < 2 {
            return bad(format!("need at least 2 frames, got {}", self.frame_count));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma {} must be finite and >= 0", self.noise_sigma));
        }
        if self.width < 32 || self.height < 32 {
            return bad(format!("image {}x{} too small", self.width, self.height));
        }
        Ok(())
    }
}

/// Ground-truth motion group per object. Group 0 is the background's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub groups: BTreeMap<ObjectId, usize>,
}

impl GroundTruth {
    /// Group per object, in `objects` order.
    pub fn labels(&self, objects: &[ObjectMeta]) -> Vec<usize> {
        objects.iter().map(|o| self.groups.get(&o.id).copied().unwrap_or(0)).collect()
    }

    /// Per-frame maps of moving instances: each pixel carries its object's
    /// group, with the background group mapped to 0.
    pub fn moving_label_maps(&self, bundle: &SceneBundle) -> Vec<LabelMap> {
        bundle
            .frames
            .iter()
            .map(|f| LabelMap {
                width: f.mask.width,
                height: f.mask.height,
                labels: f
                    .mask
                    .labels
                    .iter()
                    .map(|l| self.groups.get(l).map_or(0, |&g| g as u16))
                    .collect(),
            })
            .collect()
    }
}

/// A generated scene together with the geometry that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub spec: ScenarioSpec,
    pub camera: CameraModel,
    pub bodies: Vec<RigidBody>,
    pub bundle: SceneBundle,
    pub ground_truth: GroundTruth,
    /// Metric depth divided by this gives the stored relative depth.
    pub depth_scale: f64,
}

const FOCAL: f64 = 1.0;
const HALF_SIZE: f64 = 0.12;
const SLOTS: [(f64, f64); 6] = [(-0.28, -0.17), (0.0, -0.17), (0.28, -0.17), (-0.28, 0.17), (0.0, 0.17), (0.28, 0.17)];
const TRACKS_PER_OBJECT: usize = 96;
const TRACKS_BACKGROUND: usize = 128;
const TRACK_BORDER: usize = 12;
const MOTION_GAIN: f64 = 1.5;

/// Per-object recipe before it is turned into a body.
struct Plan {
    group: usize,
    depth: f64,
    slot: (f64, f64),
    tilt: f64,
    /// World velocity per frame.
    velocity: Vector3<f64>,
}

/// World speed per frame that moves a point at `depth` by `px` pixels per frame.
fn speed_for(px: f64, depth: f64, scale: f64) -> f64 {
    MOTION_GAIN * px / scale * depth / FOCAL
}

fn unit(angle: f64) -> Vector3<f64> {
    Vector3::new(angle.cos(), angle.sin(), 0.0)
}

struct Layout {
    camera_velocity: Vector3<f64>,
    background_depth: f64,
    background_tilt: f64,
    plans: Vec<Plan>,
}

fn layout<R: Rng>(spec: &ScenarioSpec, rng: &mut R) -> Layout {
    let fg = spec.num_objects - 1;
    let scale = spec.width.max(spec.height) as f64;
    let mut slots: Vec<(f64, f64)> = SLOTS.to_vec();
    slots.shuffle(rng);
    let sign = |rng: &mut R| if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let tilt = |rng: &mut R| sign(rng) * rng.random_range(0.5..0.8);

    match spec.kind {
        ScenarioKind::Static => {
            let plans = (0..fg)
                .map(|i| Plan {
                    group: 0,
                    depth: rng.random_range(3.0..8.0),
                    slot: slots[i],
                    tilt: tilt(rng),
                    velocity: Vector3::zeros(),
                })
                .collect();
            Layout { camera_velocity: Vector3::zeros(), background_depth: 12.0, background_tilt: 0.5, plans }
        }
        ScenarioKind::Parallax => {
            // Flat statics spread over several depths in front of a flat
            // background, and a group of movers near the background drifting
            // vertically. A flow model fitted on a constant-depth patch cannot
            // separate its constant term from its depth term, so in flow every
            // static depth looks like its own motion. Every static shares one
            // epipolar geometry regardless of depth.
            let background_depth = 8.0;
            let camera_speed = speed_for(3.0, background_depth, scale) * sign(rng);
            let movers = (fg + 1) / 3;
            let statics = fg - movers;
            let depth = background_depth * rng.random_range(0.88..0.95);
            let vy = speed_for(rng.random_range(1.6..2.0), depth, scale) * sign(rng);
            let plans = (0..fg)
                .map(|i| {
                    let (group, depth, velocity) = if i < statics {
                        let band = (i as f64 + rng.random_range(0.3..0.7)) / statics as f64;
                        (0, background_depth * (0.4 + 0.5 * band), Vector3::zeros())
                    } else {
                        (1, depth * rng.random_range(0.98..1.02), Vector3::new(0.0, vy, 0.0))
                    };
                    Plan { group, depth, slot: slots[i], tilt: 0.0, velocity }
                })
                .collect();
            Layout {
                camera_velocity: Vector3::new(camera_speed, 0.0, 0.0),
                background_depth,
                background_tilt: 0.0,
                plans,
            }
        }
        ScenarioKind::EpipolarDegenerate => {
            let camera_speed = speed_for(1.5, 10.0, scale) * sign(rng);
            // The movers slide along the camera's travel direction at twice
            // its speed, so in the image they mirror a static at the same
            // depth and share the background's epipolar geometry.
            let depth = rng.random_range(4.0..6.0);
            let movers = fg.div_ceil(2);
            let plans = (0..fg)
                .map(|i| {
                    let (group, velocity) =
                        if i < movers { (1, Vector3::new(2.0 * camera_speed, 0.0, 0.0)) } else { (0, Vector3::zeros()) };
                    Plan { group, depth: depth * rng.random_range(0.97..1.03), slot: slots[i], tilt: tilt(rng), velocity }
                })
                .collect();
            Layout {
                camera_velocity: Vector3::new(camera_speed, 0.0, 0.0),
                background_depth: 10.0,
                background_tilt: sign(rng) * 0.5,
                plans,
            }
        }
        ScenarioKind::MultiObject => {
            let heading = rng.random_range(0.0..std::f64::consts::TAU);
            let camera_velocity = unit(heading) * speed_for(3.0, 10.0, scale);
            let movers = if fg >= 3 { fg - 1 } else { fg };
            let moving_groups = movers.min(2);
            // movers travel across the camera heading, one group to each side,
            // so neither shares the camera's epipolar geometry
            let group_dirs: Vec<f64> = (0..moving_groups)
                .map(|g| {
                    let side = if g == 0 { 1.0 } else { -1.0 };
                    heading + side * std::f64::consts::FRAC_PI_2 + rng.random_range(-0.2..0.2)
                })
                .collect();
            let group_depth: Vec<f64> = (0..moving_groups).map(|_| rng.random_range(4.0..6.0)).collect();
            let group_px: Vec<f64> = (0..moving_groups).map(|_| rng.random_range(3.0..4.0)).collect();
            let mut plans = Vec::with_capacity(fg);
            for i in 0..fg {
                let mover = i < movers;
                if mover {
                    let g = i % moving_groups;
                    let depth = group_depth[g] * rng.random_range(0.97..1.03);
                    let velocity = unit(group_dirs[g]) * speed_for(group_px[g], group_depth[g], scale);
                    plans.push(Plan { group: g + 1, depth, slot: slots[i], tilt: tilt(rng), velocity });
                } else {
                    plans.push(Plan {
                        group: 0,
                        depth: rng.random_range(3.5..7.0),
                        slot: slots[i],
                        tilt: tilt(rng),
                        velocity: Vector3::zeros(),
                    });
                }
            }
            Layout { camera_velocity, background_depth: 10.0, background_tilt: sign(rng) * 0.5, plans }
        }
        ScenarioKind::Random => {
            let camera_velocity =
                unit(rng.random_range(0.0..std::f64::consts::TAU)) * speed_for(rng.random_range(1.5..3.0), 10.0, scale);
            let moving_groups = if fg == 0 { 0 } else { rng.random_range(0..=fg.min(3)) };
            // headings spread evenly so that no two groups nearly coincide
            let base = rng.random_range(0.0..std::f64::consts::TAU);
            let velocities: Vec<(f64, f64)> = (0..moving_groups)
                .map(|g| {
                    let spread = std::f64::consts::TAU * g as f64 / moving_groups as f64;
                    (base + spread + rng.random_range(-0.3..0.3), rng.random_range(5.0..7.0))
                })
                .collect();
            let plans = (0..fg)
                .map(|i| {
                    // every moving group gets at least one object
                    let group = if i < moving_groups { i + 1 } else { rng.random_range(0..=moving_groups) };
                    let depth = rng.random_range(5.0..9.0);
                    let velocity = if group == 0 {
                        Vector3::zeros()
                    } else {
                        // one world velocity per group, sized for a mid-range depth
                        let (dir, px) = velocities[group - 1];
                        unit(dir) * speed_for(px, 7.0, scale)
                    };
                    Plan { group, depth, slot: slots[i], tilt: tilt(rng), velocity }
                })
                .collect();
            Layout { camera_velocity, background_depth: 10.0, background_tilt: sign(rng) * 0.5, plans }
        }
    }
}

/// Builds the camera and bodies for `spec` without rendering anything.
pub fn build_geometry(spec: &ScenarioSpec) -> Result<(CameraModel, Vec<RigidBody>), SynthError> {
    spec.check()?;
    let mut rng = seed::stream(spec.seed, &[seed::STREAM_SYNTH_LAYOUT]);
    let layout = layout(spec, &mut rng);
    let frames = spec.frame_count;
    let mid = (frames - 1) as f64 / 2.0;

    let camera = CameraModel {
        focal: FOCAL,
        width: spec.width,
        height: spec.height,
        poses: (0..frames)
            .map(|m| Pose::new(Matrix3::identity(), layout.camera_velocity * m as f64))
            .collect(),
    };

    let background_rotation = *Rotation3::from_axis_angle(&Vector3::y_axis(), layout.background_tilt).matrix();
    let mut bodies = vec![RigidBody {
        id: 1,
        name: "background".into(),
        is_background: true,
        motion_group: 0,
        half_extent: [1e4, 1e4],
        poses: vec![Pose::new(background_rotation, Vector3::new(0.0, 0.0, layout.background_depth)); frames],
        relief: 0.25,
    }];

    for (i, plan) in layout.plans.iter().enumerate() {
        // place the object so that it sits on its slot halfway through the clip
        let relative = plan.velocity - layout.camera_velocity;
        let center0 = Vector3::new(
            plan.slot.0 * plan.depth / FOCAL - mid * relative.x,
            plan.slot.1 * plan.depth / FOCAL - mid * relative.y,
            plan.depth,
        );
        let rotation = *Rotation3::from_axis_angle(&Vector3::y_axis(), plan.tilt).matrix();
        let half = HALF_SIZE * plan.depth / FOCAL;
        bodies.push(RigidBody {
            id: (i + 2) as ObjectId,
            name: format!("{}_{}", if plan.group == 0 { "static" } else { "mover" }, i + 2),
            is_background: false,
            motion_group: plan.group,
            half_extent: [half / plan.tilt.cos(), half],
            poses: (0..frames)
                .map(|m| Pose::new(rotation, center0 + plan.velocity * m as f64))
                .collect(),
            relief: 0.5,
        });
    }
    Ok((camera, bodies))
}

struct Render {
    labels: Vec<u16>,
    /// Metric camera-frame depth.
    depth: Vec<f64>,
    hit_body: Vec<Option<usize>>,
}

fn render_frame(camera: &CameraModel, bodies: &[RigidBody], frame: usize) -> Render {
    let (w, h) = (camera.width, camera.height);
    let origin = camera.poses[frame].translation;
    let rot = camera.poses[frame].rotation;
    let mut out = Render { labels: vec![0; w * h], depth: vec![0.0; w * h], hit_body: vec![None; w * h] };
    for y in 0..h {
        for x in 0..w {
            let dir = rot * camera.ray_camera(x as f64, y as f64);
            let mut best: Option<(usize, f64)> = None;
            for (b, body) in bodies.iter().enumerate() {
                if let Some(s) = body.intersect(frame, &origin, &dir) {
                    if best.is_none_or(|(_, d)| s < d) {
                        best = Some((b, s));
                    }
                }
            }
            let idx = y * w + x;
            if let Some((b, s)) = best {
                out.labels[idx] = bodies[b].id;
                out.depth[idx] = s;
                out.hit_body[idx] = Some(b);
            }
        }
    }
    out
}

/// Generates the bundle and ground truth for `spec`. Fully determined by
/// the spec, seed included.
pub fn generate_scene(spec: &ScenarioSpec) -> Result<SyntheticScene, SynthError> {
    let (camera, bodies) = build_geometry(spec)?;
    let (w, h) = (spec.width, spec.height);
    let frames = spec.frame_count;

    let renders: Vec<Render> = (0..frames).map(|m| render_frame(&camera, &bodies, m)).collect();
    for (m, r) in renders.iter().enumerate() {
        if r.labels.contains(&0) {
            return Err(SynthError::InvalidSpec(format!("background does not cover frame {m}")));
        }
    }

    let total: f64 = renders.iter().flat_map(|r| r.depth.iter()).sum();
    let depth_scale = total / (frames * w * h) as f64;

    let noise = Normal::new(0.0, spec.noise_sigma).expect("checked sigma");
    let mut out_frames = Vec::with_capacity(frames);
    for (m, render) in renders.iter().enumerate() {
        let flow = (m + 1 < frames).then(|| {
            let mut flow = FlowField::zeros(w, h);
            let mut rng = seed::stream(spec.seed, &[seed::STREAM_SYNTH_FLOW_NOISE, m as u64]);
            let origin = camera.poses[m].translation;
            let rot = camera.poses[m].rotation;
            for y in 0..h {
                for x in 0..w {
                    let idx = y * w + x;
                    let Some(b) = render.hit_body[idx] else { continue };
                    let body = &bodies[b];
                    let hit = origin + rot * camera.ray_camera(x as f64, y as f64) * render.depth[idx];
                    let moved = if body.poses[m + 1] == body.poses[m] {
                        hit
                    } else {
                        body.poses[m + 1].apply(&body.poses[m].apply_inverse(&hit))
                    };
                    let (mut u, mut v) = match (camera.project(m, &hit), camera.project(m + 1, &moved)) {
                        (Ok(a), Ok(b)) => (b.x - a.x, b.y - a.y),
                        _ => (0.0, 0.0),
                    };
                    if spec.noise_sigma > 0.0 {
                        u += noise.sample(&mut rng);
                        v += noise.sample(&mut rng);
                    }
                    flow.u[idx] = u as f32;
                    flow.v[idx] = v as f32;
                }
            }
            flow
        });
        out_frames.push(Frame {
            mask: LabelMap { width: w, height: h, labels: render.labels.clone() },
            depth: DepthField { width: w, height: h, z: render.depth.iter().map(|d| (d / depth_scale) as f32).collect() },
            flow,
        });
    }

    let mut tracks = Vec::new();
    for (b, body) in bodies.iter().enumerate() {
        let candidates: Vec<usize> = renders[0]
            .hit_body
            .iter()
            .enumerate()
            .filter(|&(idx, hb)| {
                let (x, y) = (idx % w, idx / w);
                *hb == Some(b)
                    && x >= TRACK_BORDER
                    && y >= TRACK_BORDER
                    && x + TRACK_BORDER < w
                    && y + TRACK_BORDER < h
            })
            .map(|(idx, _)| idx)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let wanted = if body.is_background { TRACKS_BACKGROUND } else { TRACKS_PER_OBJECT };
        let mut place = seed::stream(spec.seed, &[seed::STREAM_SYNTH_TRACKS, u64::from(body.id), 0]);
        let mut jitter = seed::stream(spec.seed, &[seed::STREAM_SYNTH_TRACKS, u64::from(body.id), 1]);
        let picks = index::sample(&mut place, candidates.len(), wanted.min(candidates.len())).into_vec();
        for pick in picks {
            let idx = candidates[pick];
            let (x, y) = ((idx % w) as f64, (idx / w) as f64);
            let relief = place.random_range(-body.relief..body.relief);
            let world = camera.back_project(0, x, y, renders[0].depth[idx] * (1.0 + relief));
            let local = body.poses[0].apply_inverse(&world);
            let mut points = Vec::with_capacity(frames);
            for m in 0..frames {
                let Ok(p) = camera.project(m, &body.poses[m].apply(&local)) else { continue };
                let (mut px, mut py) = (p.x, p.y);
                if spec.noise_sigma > 0.0 {
                    px += noise.sample(&mut jitter);
                    py += noise.sample(&mut jitter);
                }
                points.push(TrackPoint { frame: m, x: px, y: py });
            }
            tracks.push(Track { track_id: tracks.len() as u32, object_id: body.id, points });
        }
    }

    let objects: Vec<ObjectMeta> = bodies
        .iter()
        .map(|b| ObjectMeta { id: b.id, name: b.name.clone(), is_background: b.is_background })
        .collect();
    let groups: BTreeMap<ObjectId, usize> = bodies.iter().map(|b| (b.id, b.motion_group)).collect();
    let num_motions = groups.values().collect::<std::collections::BTreeSet<_>>().len();
    let bundle = SceneBundle {
        width: w,
        height: h,
        objects,
        num_motions,
        frames: out_frames,
        tracks: TrackSet { tracks },
    };
    Ok(SyntheticScene {
        spec: spec.clone(),
        camera,
        bodies,
        bundle,
        ground_truth: GroundTruth { groups },
        depth_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::validate_bundle;

    fn identity_camera(frames: usize) -> CameraModel {
        CameraModel { focal: 1.0, width: 200, height: 100, poses: vec![Pose::identity(); frames] }
    }

    #[test]
    fn on_axis_projection() {
        let cam = identity_camera(1);
        let p = cam.project(0, &Vector3::new(0.0, 0.0, 2.0)).unwrap();
        assert_eq!((p.x, p.y, p.depth), (100.0, 50.0, 2.0));
    }

    #[test]
    fn translated_camera_depth() {
        let mut cam = identity_camera(1);
        cam.poses[0] = Pose::new(Matrix3::identity(), Vector3::new(0.0, 0.0, -1.0));
        let p = cam.project(0, &Vector3::new(0.0, 0.0, 2.0)).unwrap();
        assert_eq!(p.depth, 3.0);
        assert_eq!((p.x, p.y), (100.0, 50.0));
    }

    #[test]
    fn behind_camera() {
        let cam = identity_camera(1);
        assert_eq!(cam.project(0, &Vector3::new(0.0, 0.0, -1.0)), Err(SynthError::BehindCamera { frame: 0 }));
    }

    #[test]
    fn back_projection_round_trip() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let r = *Rotation3::from_scaled_axis(axis * 0.3).matrix();
            let t = Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let cam = CameraModel { focal: 0.9, width: 320, height: 240, poses: vec![Pose::new(r, t)] };
            let (x, y, d) = (rng.random_range(0.0..320.0), rng.random_range(0.0..240.0), rng.random_range(0.5..20.0));
            let p = cam.project(0, &cam.back_project(0, x, y, d)).unwrap();
            assert!((p.x - x).abs() < 1e-9 && (p.y - y).abs() < 1e-9 && (p.depth - d).abs() < 1e-9);
        }
    }

    #[test]
    fn scenario_names_round_trip() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("nope".parse::<ScenarioKind>().is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_scene(&ScenarioSpec::new(ScenarioKind::Parallax, 0).objects(2)).is_err());
        assert!(generate_scene(&ScenarioSpec::new(ScenarioKind::Static, 0).frames(1)).is_err());
        assert!(generate_scene(&ScenarioSpec::new(ScenarioKind::Static, 0).noise(-1.0)).is_err());
        assert!(generate_scene(&ScenarioSpec::new(ScenarioKind::Random, 0).objects(99)).is_err());
    }

    #[test]
    fn static_scene_has_no_motion() {
        let s = generate_scene(&ScenarioSpec::new(ScenarioKind::Static, 3)).unwrap();
        for f in &s.bundle.frames {
            if let Some(flow) = &f.flow {
                assert!(flow.u.iter().chain(&flow.v).all(|&x| x == 0.0));
            }
        }
        for t in &s.bundle.tracks.tracks {
            assert!(t.points.iter().all(|p| p.x == t.points[0].x && p.y == t.points[0].y));
        }
        assert_eq!(s.bundle.num_motions, 1);
    }

    #[test]
    fn generated_bundles_validate() {
        for kind in ScenarioKind::ALL {
            for seed in 0..3 {
                let s = generate_scene(&ScenarioSpec::new(kind, seed).noise(0.5)).unwrap();
                assert_eq!(validate_bundle(&s.bundle), vec![], "{kind} seed {seed}");
            }
        }
    }

    #[test]
    fn same_seed_same_bundle() {
        let spec = ScenarioSpec::new(ScenarioKind::Random, 12).noise(0.5);
        assert_eq!(generate_scene(&spec).unwrap().bundle, generate_scene(&spec).unwrap().bundle);
    }

    #[test]
    fn masks_pick_front_most_patch() {
        let s = generate_scene(&ScenarioSpec::new(ScenarioKind::MultiObject, 4)).unwrap();
        let cam = &s.camera;
        for (m, frame) in s.bundle.frames.iter().enumerate() {
            for idx in (0..frame.mask.labels.len()).step_by(37) {
                let (x, y) = ((idx % cam.width) as f64, (idx / cam.width) as f64);
                let dir = cam.poses[m].rotation * cam.ray_camera(x, y);
                let nearest = s
                    .bodies
                    .iter()
                    .filter_map(|b| b.intersect(m, &cam.poses[m].translation, &dir).map(|d| (b.id, d)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                assert_eq!(frame.mask.labels[idx], nearest.0);
            }
        }
    }

    #[test]
    fn relative_depth_preserves_ratios() {
        let s = generate_scene(&ScenarioSpec::new(ScenarioKind::Parallax, 1)).unwrap();
        let z = &s.bundle.frames[0].depth.z;
        let mean: f64 = s.bundle.frames.iter().flat_map(|f| f.depth.z.iter()).map(|&z| z as f64).sum::<f64>()
            / (s.bundle.frames.len() * z.len()) as f64;
        assert!((mean - 1.0).abs() < 1e-5);
        let cam = &s.camera;
        for idx in [0, 1000, 20000, 40000] {
            let (x, y) = ((idx % cam.width) as f64, (idx / cam.width) as f64);
            let dir = cam.ray_camera(x, y);
            let metric = s
                .bodies
                .iter()
                .filter_map(|b| b.intersect(0, &cam.poses[0].translation, &dir))
                .fold(f64::INFINITY, f64::min);
            assert!((z[idx] as f64 * s.depth_scale / metric - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn enough_tracks_per_object() {
        for kind in ScenarioKind::ALL {
            let s = generate_scene(&ScenarioSpec::new(kind, 7)).unwrap();
            for o in &s.bundle.objects {
                let n = s.bundle.tracks.tracks.iter().filter(|t| t.object_id == o.id).count();
                assert!(n >= 16, "{kind}: object {} has {n} tracks", o.id);
            }
        }
    }

    #[test]
    fn ground_truth_moving_maps() {
        let s = generate_scene(&ScenarioSpec::new(ScenarioKind::EpipolarDegenerate, 2)).unwrap();
        let maps = s.ground_truth.moving_label_maps(&s.bundle);
        assert_eq!(maps.len(), s.bundle.frame_count());
        let bg_pixels = s.bundle.frames[0].mask.count(1);
        assert!(maps[0].count(0) >= bg_pixels);
        assert_eq!(s.bundle.num_motions, 2);
    }
}
