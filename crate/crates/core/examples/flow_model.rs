//! Fits the eight-coefficient flow+depth model to a tilted patch and shows
//! why constant depth is ambiguous: the `a` and `b` columns coincide, so the
//! fit falls back to the minimum-norm solution but still predicts the flow.
//!
//! ```text
//! cargo run --example flow_model
//! ```

use mofuse::flowdepth::{fit_flow_depth_model, flow_model_residual};
use mofuse::{FlowDepthModel, FlowSample};

fn patch(theta: [f64; 8], depth: impl Fn(f64, f64) -> f64) -> Vec<FlowSample> {
    let model = FlowDepthModel { theta };
    let mut out = Vec::new();
    for i in 0..12 {
        for j in 0..12 {
            let (x, y) = (-0.2 + 0.03 * i as f64, -0.15 + 0.025 * j as f64);
            let mut s = FlowSample::with_depth(x, y, depth(x, y), 0.0, 0.0);
            (s.u, s.v) = model.predict(&s);
            out.push(s);
        }
    }
    out
}

fn show(name: &str, truth: [f64; 8], samples: &[FlowSample]) {
    let fit = fit_flow_depth_model(samples).expect("enough samples");
    let err = fit.model.theta.iter().zip(truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let residual = flow_model_residual(&fit.model, samples).expect("nonempty");
    println!("{name}");
    println!("  condition {:.2e}  ill-conditioned {}", fit.condition, fit.ill_conditioned);
    println!("  max |theta - truth| {err:.2e}  residual {residual:.2e}");
    println!("  theta {:?}", fit.model.theta.map(|t| (t * 1e4).round() / 1e4));
}

fn main() {
    let truth = [0.01, 0.02, 0.003, -0.001, 0.002, 0.001, -0.004, 0.015];
    show("tilted patch", truth, &patch(truth, |x, _| 1.0 + 0.8 * x));
    show("fronto-parallel patch", truth, &patch(truth, |_, _| 1.0));
}
