//! Turns residual matrices into ordered-residual-kernel scores and a
//! normalized affinity, using the three-object worked example.
//!
//! ```text
//! cargo run --example ork_affinity -- [t=2]
//! ```

use mofuse::affinity::{accumulate_affinity, normalize_affinity, ork_scores};
use mofuse::{ResidualMatrix, View};

fn main() {
    let t: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let r = ResidualMatrix::from_rows(&[vec![0.1, 0.5, 0.9], vec![0.6, 0.2, 0.8], vec![0.9, 0.7, 0.1]]);
    let s = ork_scores(&r, t);
    println!("scores (t = {t})");
    for row in s.rows() {
        println!("  {row:?}");
    }
    let a = accumulate_affinity(View::Trajectory, std::slice::from_ref(&s)).expect("one frame pair");
    println!("affinity");
    for row in a.rows() {
        println!("  {row:?}");
    }
    println!("row-normalized, symmetrized");
    for row in normalize_affinity(&a).rows() {
        println!("  {:?}", row.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>());
    }
}
