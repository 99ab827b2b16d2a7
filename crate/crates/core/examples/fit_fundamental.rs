//! Recovers the epipolar geometry of a rigid camera motion from noisy
//! correspondences with outliers, then compares it with the analytic `[t]×R`.
//! A fundamental matrix has more freedom than an essential one, so under
//! noise the fit can sit far from `[t]×R` in norm while explaining the
//! inliers just as well; with `noise_px = 0` the two agree to rounding.
//!
//! ```text
//! cargo run --example fit_fundamental -- [noise_px=0.5] [outliers=10]
//! ```

use mofuse::epipolar::{canonicalize, ransac_fit_fundamental, skew};
use mofuse::{Correspondence, RansacConfig, RansacOutcome};
use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let noise_px: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let outliers: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // pixels of a 256-wide image in normalized units
    let jitter = Normal::new(0.0, noise_px / 256.0).expect("finite sigma");

    let r = *Rotation3::from_euler_angles(0.01, -0.02, 0.015).matrix();
    let t = Vector3::new(0.3, 0.05, 0.02);
    let mut corrs = Vec::new();
    for _ in 0..80 {
        let p = Vector3::new(rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0), rng.random_range(3.0..9.0));
        let q = r * p + t;
        corrs.push(Correspondence::new(
            p.x / p.z + jitter.sample(&mut rng),
            p.y / p.z + jitter.sample(&mut rng),
            q.x / q.z + jitter.sample(&mut rng),
            q.y / q.z + jitter.sample(&mut rng),
        ));
    }
    for _ in 0..outliers {
        let mut c = || rng.random_range(-0.5..0.5);
        corrs.push(Correspondence::new(c(), c(), c(), c()));
    }

    let truth = canonicalize(&(skew(&t) * r)).expect("nonzero essential matrix");
    match ransac_fit_fundamental(&corrs, &RansacConfig::default()) {
        RansacOutcome::Model(fit) => {
            println!("inlier ratio   {:.3} ({} of {})", fit.inlier_ratio, fit.n_support, corrs.len());
            println!("|F - [t]xR|    {:.2e}", (fit.f - truth).norm());
            let mean = |f: &nalgebra::Matrix3<f64>| {
                corrs[..80].iter().map(|c| mofuse::epipolar::sampson_distance(f, c).unwrap_or(0.0)).sum::<f64>() / 80.0
            };
            println!("mean Sampson   fitted {:.2e}, truth {:.2e}", mean(&fit.f), mean(&truth));
        }
        RansacOutcome::Degenerate(cause) => println!("degenerate: {cause:?}"),
    }
}
