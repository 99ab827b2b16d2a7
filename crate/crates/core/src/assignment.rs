//! Maximum-weight one-to-one matching between two sets.

/// Largest instance count for which matchings are enumerated exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 8;

/// Pairs `(row, col)` maximizing the total of `weights[row][col]` over
/// one-to-one matchings. Weights must be finite and non-negative; pairs of
/// weight zero may be omitted from the result.
pub fn max_weight_matching(weights: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let pairs = if rows.max(cols) <= EXHAUSTIVE_LIMIT { exhaustive(weights, cols) } else { hungarian(weights, cols) };
    pairs.into_iter().filter(|&(r, c)| weights[r][c] > 0.0).collect()
}

pub fn matching_weight(weights: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(r, c)| weights[r][c]).sum()
}

/// Depth-first enumeration over rows; each row takes a free column or none.
/// The first matching reaching the best total wins.
fn exhaustive(weights: &[Vec<f64>], cols: usize) -> Vec<(usize, usize)> {
    fn go(
        row: usize,
        weights: &[Vec<f64>],
        used: &mut Vec<bool>,
        current: &mut Vec<(usize, usize)>,
        total: f64,
        best: &mut (f64, Vec<(usize, usize)>),
    ) {
        if row == weights.len() {
            if total > best.0 {
                *best = (total, current.clone());
            }
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                current.push((row, c));
                go(row + 1, weights, used, current, total + weights[row][c], best);
                current.pop();
                used[c] = false;
            }
        }
        go(row + 1, weights, used, current, total, best);
    }
    let mut best = (-1.0, Vec::new());
    go(0, weights, &mut vec![false; cols], &mut Vec::new(), 0.0, &mut best);
    best.1
}

/// Kuhn–Munkres with potentials on the square padding of `weights`,
/// minimizing `max − weight`.
fn hungarian(weights: &[Vec<f64>], cols: usize) -> Vec<(usize, usize)> {
    let n = weights.len().max(cols);
    let top = weights.iter().flatten().copied().fold(0.0f64, f64::max);
    let cost = |i: usize, j: usize| -> f64 {
        let w = weights.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0);
        top - w
    };
    // 1-based arrays; column 0 is the virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=n)
        .filter(|&j| p[j] != 0 && p[j] <= weights.len() && j <= cols)
        .map(|j| (p[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Fraction of items whose label agrees with the reference after the best
/// one-to-one relabeling of predicted clusters.
pub fn matched_accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len());
    if pred.is_empty() {
        return 1.0;
    }
    let rows = pred.iter().max().map_or(0, |m| m + 1);
    let cols = truth.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0.0; cols]; rows];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p][t] += 1.0;
    }
    matching_weight(&counts, &max_weight_matching(&counts)) / pred.len() as f64
}
