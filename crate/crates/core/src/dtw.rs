//! Dynamic time warping over descriptor sequences.
//!
//! The local cost is the Euclidean distance between descriptor vectors;
//! the returned score is the accumulated cost of the cheapest monotone
//! alignment path, together with the path length used to normalize it.

use crate::error::{Error, Result};

/// Euclidean distance between two equal-length vectors.
pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Aligns two sequences of equal-dimension vectors and returns the
/// optimal accumulated cost and the number of cells on the optimal path.
///
/// Standard recurrence with unit steps (up, left, diagonal); ties during
/// backtracking prefer the diagonal so the reported length is the
/// shortest among cost-optimal paths reachable that way.
pub fn dtw(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<(f64, usize)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySequence);
    }
    let (n, m) = (a.len(), b.len());
    let mut acc = vec![vec![0.0f64; m]; n];
    for i in 0..n {
        for j in 0..m {
            let cost = euclidean(&a[i], &b[j])?;
            let best_prev = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => acc[0][j - 1],
                (_, 0) => acc[i - 1][0],
                _ => acc[i - 1][j - 1].min(acc[i - 1][j]).min(acc[i][j - 1]),
            };
            acc[i][j] = cost + best_prev;
        }
    }

    // walk back from the corner counting cells
    let (mut i, mut j) = (n - 1, m - 1);
    let mut length = 1usize;
    while i > 0 || j > 0 {
        if i == 0 {
            j -= 1;
        } else if j == 0 {
            i -= 1;
        } else {
            let diag = acc[i - 1][j - 1];
            let up = acc[i - 1][j];
            let left = acc[i][j - 1];
            if diag <= up && diag <= left {
                i -= 1;
                j -= 1;
            } else if up <= left {
                i -= 1;
            } else {
                j -= 1;
            }
        }
        length += 1;
    }
    Ok((acc[n - 1][m - 1], length))
}
