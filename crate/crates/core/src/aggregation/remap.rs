use alloc::vec::Vec;

/// Group-wise affine remap of one criterion row onto `[lo, hi]`, where
/// `lo = 0` if some score falls below `tau` (else 0.5) and `hi = 1` if some
/// score exceeds `tau` (else 0.5).
///
/// A constant row has no spread to stretch: it maps to `hi` when the
/// constant exceeds `tau` and to `lo` otherwise.
pub fn remap_row(row: &[f64], tau: f64) -> Vec<f64> {
    let Some(&first) = row.first() else {
        return Vec::new();
    };
    let (min, max) = row.iter().fold((first, first), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let lo = if min < tau { 0.0 } else { 0.5 };
    let hi = if max > tau { 1.0 } else { 0.5 };
    if min == max {
        let v = if min > tau { hi } else { lo };
        return alloc::vec![v; row.len()];
    }
    let span = max - min;
    row.iter().map(|&s| lo + (s - min) / span * (hi - lo)).collect()
}

/// Row-wise [`remap_row`] over a K×G matrix.
pub fn remap_matrix(scores: &[Vec<f64>], tau: f64) -> Vec<Vec<f64>> {
    scores.iter().map(|row| remap_row(row, tau)).collect()
}
