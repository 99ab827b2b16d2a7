//! Zero-shot object-level motion segmentation.
//!
//! Each object in a scene gets two kinds of motion model per frame pair: a
//! fundamental matrix fitted robustly to its point trajectories, and an
//! eight-parameter flow+depth model fitted to its optical flow. Residuals of
//! every model on every object's data are turned into rank-based affinities
//! (ordered residual kernel), and the two views are fused by co-regularized
//! spectral clustering into the requested number of motion groups.
//!
//! ```no_run
//! use mofuse::{segment_scene, EngineConfig, View};
//! use mofuse::synth::{generate_scene, ScenarioKind, ScenarioSpec};
//!
//! let scene = generate_scene(&ScenarioSpec::new(ScenarioKind::MultiObject, 7)).unwrap();
//! let seg = segment_scene(&scene.bundle, &EngineConfig::default(), &View::ALL).unwrap();
//! println!("{:?}", seg.assignment.labels);
//! ```

pub mod ablation;
pub mod affinity;
pub mod assignment;
pub mod cli;
pub mod epipolar;
pub mod eval;
pub mod flowdepth;
pub mod fusion;
pub mod io;
pub mod segment;
pub mod synth;
pub mod types;

mod seed;

pub use affinity::{AffinityMatrix, ResidualMatrix, ScoreMatrix};
pub use epipolar::{Correspondence, FundamentalMatrix, RansacConfig, RansacOutcome};
pub use eval::{evaluate, MetricReport};
pub use flowdepth::{FlowDepthModel, FlowSample};
pub use fusion::ClusterAssignment;
pub use segment::{segment_scene, SegmentError, Segmentation};
pub use types::{
    validate_bundle, DepthField, EngineConfig, FlowField, Frame, LabelMap, ObjectId, ObjectMeta, SceneBundle, Track,
    TrackPoint, TrackSet, View, Violation,
};
