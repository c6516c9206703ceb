use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::Matrix;

/// An optimal assignment: `row_to_col[i]` is the column matched to row `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    pub row_to_col: Vec<Option<usize>>,
    pub total: f64,
}

/// Optimal linear assignment on a rectangular matrix via shortest
/// augmenting paths with potentials. Every row is matched when
/// `rows <= cols`, every column otherwise.
pub fn hungarian(weights: &Matrix<f64>, maximize: bool) -> Matching {
    let (n, m) = (weights.rows(), weights.cols());
    if n == 0 || m == 0 {
        return Matching {
            row_to_col: vec![None; n],
            total: 0.0,
        };
    }
    let sign = if maximize { -1.0 } else { 1.0 };
    let transpose = n > m;
    let (rows, cols) = if transpose { (m, n) } else { (n, m) };
    let cost = |i: usize, j: usize| {
        if transpose {
            sign * weights[(j, i)]
        } else {
            sign * weights[(i, j)]
        }
    };
    let col_owner = solve(rows, cols, cost);
    let mut row_to_col = vec![None; n];
    for (j, owner) in col_owner.iter().enumerate() {
        if let Some(i) = *owner {
            if transpose {
                row_to_col[j] = Some(i);
            } else {
                row_to_col[i] = Some(j);
            }
        }
    }
    let total = row_to_col
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|j| weights[(i, j)]))
        .sum();
    Matching { row_to_col, total }
}

/// Minimum-cost assignment of all `n` rows into `m >= n` columns; returns
/// the owning row per column.
fn solve(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<Option<usize>> {
    // 1-based with a virtual column 0.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
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
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    owner[1..]
        .iter()
        .map(|&i| if i == 0 { None } else { Some(i - 1) })
        .collect()
}
