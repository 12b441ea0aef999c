//! Fixed-size dense solves for the dip fitter.

use libm::fabs;

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes relative to the matrix scale.
pub(crate) fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, &v| m.max(fabs(v)));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for col in 0..N {
        let pivot = (col..N)
            .max_by(|&i, &j| fabs(a[i][col]).total_cmp(&fabs(a[j][col])))
            .unwrap_or(col);
        if fabs(a[pivot][col]) <= 1e-14 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let factor = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut acc = b[row];
        for k in row + 1..N {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

pub(crate) fn inverse_diagonal<const N: usize>(a: [[f64; N]; N]) -> Option<[f64; N]> {
    let mut diag = [0.0; N];
    for (i, d) in diag.iter_mut().enumerate() {
        let mut e = [0.0; N];
        e[i] = 1.0;
        *d = solve(a, e)?[i];
    }
    Some(diag)
}
