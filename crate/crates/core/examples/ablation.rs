//! Single-view versus fused segmentation accuracy over seeded synthetic scenes.
//!
//! ```text
//! cargo run --release --example ablation -- [scenes=20] [noise_sigma=0.5] [lambda]
//! ```

use mofuse::ablation::{mean_accuracy, score_scene, suite, SUITE_KINDS};
use mofuse::EngineConfig;

fn main() {
    let arg = |i: usize| std::env::args().nth(i);
    let scenes: usize = arg(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let noise: f64 = arg(2).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let mut cfg = EngineConfig::default();
    if let Some(lambda) = arg(3).and_then(|s| s.parse().ok()) {
        cfg.lambda = lambda;
    }

    println!("{:<22}{:>6}{:>8}{:>8}{:>8}", "scenario", "seed", "traj", "flow", "fused");
    let mut rows = Vec::new();
    for spec in suite(scenes, noise) {
        match score_scene(&spec, &cfg) {
            Ok(row) => {
                println!("{:<22}{:>6}{:>8.3}{:>8.3}{:>8.3}", spec.kind.name(), spec.seed, row.traj, row.flow, row.fused);
                rows.push(row);
            }
            Err(e) => eprintln!("{} seed {}: {e}", spec.kind.name(), spec.seed),
        }
    }
    println!();
    for kind in SUITE_KINDS {
        let (t, f, u) = mean_accuracy(&rows, Some(kind));
        println!("{:<28}{t:>8.3}{f:>8.3}{u:>8.3}", kind.name());
    }
    let (t, f, u) = mean_accuracy(&rows, None);
    println!("{:<28}{t:>8.3}{f:>8.3}{u:>8.3}", "mean");
}
