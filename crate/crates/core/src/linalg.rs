//! Small dense linear solves.

/// Solves `A x = b` for a possibly over-determined `A` (rows x cols) by
/// Gaussian elimination with partial pivoting.
///
/// Returns `None` when `A` does not have full column rank or when the extra
/// equations are inconsistent with the solution (beyond `tol` scaled by the
/// row magnitude).
pub fn solve_dense(a: &[Vec<f64>], b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    if rows != b.len() || rows < cols {
        return None;
    }
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            let mut row = r.clone();
            row.push(bi);
            row
        })
        .collect();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);

    for c in 0..cols {
        let pivot = (c..rows)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .expect("non-empty range");
        if m[pivot][c].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(c, pivot);
        let inv = 1.0 / m[c][c];
        for i in 0..rows {
            if i != c {
                let f = m[i][c] * inv;
                if f != 0.0 {
                    for k in c..=cols {
                        m[i][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    for row in m.iter().skip(cols) {
        if row[cols].abs() > tol * scale {
            return None;
        }
    }
    Some((0..cols).map(|c| m[c][cols] / m[c][c]).collect())
}
