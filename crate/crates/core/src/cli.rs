//! Command-line front end. [`run`] returns the process exit code: 0 on
//! success, 1 on data errors, 2 on usage errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::eval::evaluate;
use crate::io::bundle::{read_json, write_json, RESULT};
use crate::io::{
    read_bundle, read_ground_truth, read_result_maps, write_bundle, write_ground_truth, write_result,
    SegmentationResult,
};
use crate::segment::{segment_scene, ViewEvidence};
use crate::synth::{generate_scene, ScenarioKind, ScenarioSpec};
use crate::types::{validate_bundle, EngineConfig, LabelMap, View};

#[derive(Debug, Parser)]
#[command(name = "mofuse", version, about = "Object-level motion segmentation from trajectories, flow and depth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cluster the objects of a bundle into motion groups.
    Segment(SegmentArgs),
    /// Generate a synthetic bundle with ground truth.
    Synth(SynthArgs),
    /// Score predicted moving-object masks against a reference.
    Eval(EvalArgs),
    /// Check a bundle's invariants.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct SegmentArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Comma-separated subset of traj, flow.
    #[arg(long, default_value = "traj,flow", value_delimiter = ',')]
    views: Vec<View>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    ork_t: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    frame_gap: Option<usize>,
    /// Co-regularization iterations.
    #[arg(long)]
    iters: Option<usize>,
    /// Also write per-frame residual and score matrices to `evidence.json`.
    #[arg(long)]
    debug_dump: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    scenario: ScenarioKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    objects: usize,
    #[arg(long, default_value_t = 8)]
    frames: usize,
    /// Pixel noise sigma on flow and tracks.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Segmentation output directory.
    #[arg(long)]
    pred: PathBuf,
    /// Bundle directory with `ground_truth.json`, or another segmentation output.
    #[arg(long)]
    gt: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    scene: PathBuf,
}

type CmdResult = Result<(), String>;

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Segment(a) => segment(a),
        Command::Synth(a) => synth(a),
        Command::Eval(a) => eval(a),
        Command::Validate(a) => validate(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn segment(a: SegmentArgs) -> CmdResult {
    let bundle = read_bundle(&a.scene).map_err(|e| e.to_string())?;
    let mut cfg = EngineConfig::default().with_seed(a.seed);
    cfg.ork_t = a.ork_t.or(cfg.ork_t);
    cfg.lambda = a.lambda.unwrap_or(cfg.lambda);
    cfg.frame_gap_traj = a.frame_gap.unwrap_or(cfg.frame_gap_traj);
    cfg.coreg_iters = a.iters.unwrap_or(cfg.coreg_iters);
    let seg = segment_scene(&bundle, &cfg, &a.views).map_err(|e| format!("{}: {e}", a.scene.display()))?;
    let result = SegmentationResult::new(&bundle, &cfg, &seg);
    write_result(&result, &seg.label_maps, &a.out).map_err(|e| e.to_string())?;
    if a.debug_dump {
        write_json(&a.out.join("evidence.json"), &evidence_dump(&seg.evidence)).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn evidence_dump(evidence: &[ViewEvidence]) -> serde_json::Value {
    let matrix = |k: usize, f: &dyn Fn(usize, usize) -> serde_json::Value| -> Vec<Vec<serde_json::Value>> {
        (0..k).map(|i| (0..k).map(|j| f(i, j)).collect()).collect()
    };
    let views: Vec<serde_json::Value> = evidence
        .iter()
        .map(|e| {
            let frames: Vec<serde_json::Value> = e
                .residuals
                .iter()
                .zip(&e.scores)
                .map(|((m, r), s)| {
                    serde_json::json!({
                        "frame": m,
                        "residuals": matrix(r.k, &|i, j| r.get(i, j).into()),
                        "scores": s.rows(),
                    })
                })
                .collect();
            serde_json::json!({
                "view": e.view,
                "frames": frames,
                "affinity": e.affinity.rows(),
                "normalized": e.normalized.rows(),
            })
        })
        .collect();
    serde_json::json!({ "views": views })
}

fn synth(a: SynthArgs) -> CmdResult {
    let spec = ScenarioSpec::new(a.scenario, a.seed).objects(a.objects).frames(a.frames).noise(a.noise);
    let scene = generate_scene(&spec).map_err(|e| e.to_string())?;
    write_bundle(&scene.bundle, &a.out).map_err(|e| e.to_string())?;
    write_ground_truth(&scene.ground_truth, &a.out).map_err(|e| e.to_string())
}

/// Moving-instance maps of a directory: a segmentation output's own maps,
/// or a bundle's masks mapped through its ground-truth motion groups.
fn moving_maps(dir: &Path) -> Result<Vec<LabelMap>, String> {
    if dir.join(RESULT).is_file() {
        return read_result_maps(dir).map_err(|e| e.to_string());
    }
    let bundle = read_bundle(dir).map_err(|e| e.to_string())?;
    let gt = read_ground_truth(dir).map_err(|e| e.to_string())?;
    Ok(gt.moving_label_maps(&bundle))
}

fn eval(a: EvalArgs) -> CmdResult {
    if !a.pred.join(RESULT).is_file() {
        // surface the reader's own diagnostic for the missing file
        read_json::<SegmentationResult>(&a.pred.join(RESULT)).map_err(|e| e.to_string())?;
    }
    let pred = moving_maps(&a.pred)?;
    let gt = moving_maps(&a.gt)?;
    let report = evaluate(&pred, &gt).map_err(|e| e.to_string())?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    Ok(())
}

fn validate(a: ValidateArgs) -> CmdResult {
    // read_bundle already rejects invariant violations; report them all
    match read_bundle(&a.scene) {
        Ok(bundle) => {
            let violations = validate_bundle(&bundle);
            if violations.is_empty() {
                println!("ok");
                Ok(())
            } else {
                Err(format!("{} violation(s)", violations.len()))
            }
        }
        Err(crate::io::IoError::Invalid { violations, .. }) => {
            for v in &violations {
                println!("{v}");
            }
            Err(format!("{}: {} violation(s)", a.scene.display(), violations.len()))
        }
        Err(e) => Err(e.to_string()),
    }
}
