//! Minimum-cost rectangular assignment (Hungarian algorithm with potentials).

use nalgebra::DMatrix;

/// Marks a forbidden pair in a cost matrix.
pub const INFEASIBLE: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    /// `(row, column)` pairs, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
    pub total_cost: f64,
}

impl Assignment {
    pub fn col_for_row(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|(r, _)| *r == row).map(|(_, c)| *c)
    }
}

/// Solves the assignment problem on `cost`. Non-finite entries are treated as
/// forbidden. Among matchings using the largest possible number of allowed
/// pairs, the one with the smallest total cost is returned.
pub fn hungarian(cost: &DMatrix<f64>) -> Assignment {
    let (rows, cols) = cost.shape();
    if rows == 0 || cols == 0 {
        return Assignment {
            pairs: Vec::new(),
            unmatched_rows: (0..rows).collect(),
            unmatched_cols: (0..cols).collect(),
            total_cost: 0.0,
        };
    }

    let feasible: Vec<f64> = cost.iter().copied().filter(|c| c.is_finite()).collect();
    let (lo, hi) = feasible
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    let n = rows.min(cols) as f64;
    // any matching with one more allowed pair beats every matching with fewer
    let big = (n + 1.0) * (hi - lo + 1.0) + hi.abs() + lo.abs() + 1.0;
    let filled = cost.map(|c| if c.is_finite() { c } else { big });

    let transpose = rows > cols;
    let work = if transpose { filled.transpose() } else { filled };
    let row_to_col = solve_rows_le_cols(&work);

    let mut pairs = Vec::new();
    for (r, c) in row_to_col.into_iter().enumerate() {
        let (r, c) = if transpose { (c, r) } else { (r, c) };
        if cost[(r, c)].is_finite() {
            pairs.push((r, c));
        }
    }
    pairs.sort_unstable();
    let total_cost = pairs.iter().map(|&(r, c)| cost[(r, c)]).sum();
    let unmatched_rows = (0..rows).filter(|r| !pairs.iter().any(|p| p.0 == *r)).collect();
    let unmatched_cols = (0..cols).filter(|c| !pairs.iter().any(|p| p.1 == *c)).collect();
    Assignment { pairs, unmatched_rows, unmatched_cols, total_cost }
}

/// Shortest augmenting path with dual potentials; requires `rows ≤ cols`.
/// Returns the column assigned to each row.
fn solve_rows_le_cols(a: &DMatrix<f64>) -> Vec<usize> {
    let (n, m) = a.shape();
    // 1-based with column 0 as the virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = a[(i0 - 1, j - 1)] - u[i0] - v[j];
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
    let mut out = vec![usize::MAX; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}
