use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Pivots smaller than this fraction of their original diagonal entry are
/// treated as numerically zero.
const PIVOT_RTOL: f64 = 1e-10;

/// Solves `a x = b` for symmetric positive-definite `a` by Cholesky
/// factorization. Fails with [`Error::RankDeficient`] on a vanishing pivot.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let p = a.rows();
    assert_eq!(a.cols(), p, "cholesky_solve needs a square matrix");
    assert_eq!(b.len(), p);

    let mut l = Matrix::zeros(p, p);
    for j in 0..p {
        let diag = a[(j, j)];
        let mut s = diag;
        for k in 0..j {
            s -= l[(j, k)] * l[(j, k)];
        }
        if !s.is_finite() || s <= PIVOT_RTOL * diag.abs() {
            return Err(Error::RankDeficient(format!("vanishing pivot in column {j}")));
        }
        let ljj = s.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..p {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }

    // L z = b
    let mut z = vec![0.0; p];
    for i in 0..p {
        let mut v = b[i];
        for k in 0..i {
            v -= l[(i, k)] * z[k];
        }
        z[i] = v / l[(i, i)];
    }
    // L^T x = z
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut v = z[i];
        for k in i + 1..p {
            v -= l[(k, i)] * x[k];
        }
        x[i] = v / l[(i, i)];
    }
    Ok(x)
}
