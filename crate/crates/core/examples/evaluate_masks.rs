//! Tube-level precision, recall and F-measure on hand-made label maps:
//! a perfect prediction, a half-overlapping one and one with a spurious
//! extra instance.
//!
//! ```text
//! cargo run --example evaluate_masks
//! ```

use mofuse::{evaluate, LabelMap};

fn map(width: usize, fill: impl Fn(usize, usize) -> u16) -> LabelMap {
    let height = 4;
    let labels = (0..width * height).map(|i| fill(i % width, i / width)).collect();
    LabelMap { width, height, labels }
}

fn main() {
    let gt = vec![map(8, |x, _| u16::from(x < 4)); 2];
    let cases = [
        ("exact", vec![map(8, |x, _| u16::from(x < 4)); 2]),
        ("half overlap", vec![map(8, |x, _| u16::from((2..6).contains(&x))); 2]),
        ("spurious instance", vec![map(8, |x, _| if x < 4 { 1 } else if x == 7 { 2 } else { 0 }); 2]),
        ("nothing predicted", vec![map(8, |_, _| 0); 2]),
    ];
    println!("{:<20}{:>8}{:>8}{:>8}", "prediction", "Pu", "Ru", "Fu");
    for (name, pred) in cases {
        let r = evaluate(&pred, &gt).expect("same shapes");
        println!("{name:<20}{:>8.3}{:>8.3}{:>8.3}", r.pu, r.ru, r.fu);
    }
}
