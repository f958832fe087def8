use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::{PIVOT_TOLERANCE, SYMMETRY_TOLERANCE};
use crate::error::{Error, Result};

/// Output of a least-squares fit of every response column on the same design.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// `cols(design) × cols(response)`.
    pub coefficients: Matrix,
    /// `rows(design) × cols(response)`.
    pub residuals: Matrix,
    /// `(XᵀX)⁻¹`, used for coefficient standard errors.
    pub xtx_inverse: Matrix,
}

impl LeastSquares {
    /// Residual sum of squares for response column `j`.
    pub fn rss(&self, j: usize) -> f64 {
        self.residuals.col(j).iter().map(|e| e * e).sum()
    }

    /// Classical OLS standard errors for response column `j`, using RSS/(n − k).
    pub fn standard_errors(&self, j: usize) -> Vec<f64> {
        let n = self.residuals.rows();
        let k = self.coefficients.rows();
        let s2 = self.rss(j) / (n - k) as f64;
        (0..k).map(|i| (s2 * self.xtx_inverse[(i, i)]).sqrt()).collect()
    }
}

/// Least squares via Householder QR.
///
/// Rank is judged on the diagonal of R: any |R_jj| below `PIVOT_TOLERANCE`
/// times the largest is treated as rank deficiency.
pub fn ols(design: &Matrix, response: &Matrix) -> Result<LeastSquares> {
    let n = design.rows();
    let k = design.cols();
    let m = response.cols();
    if response.rows() != n {
        return Err(Error::invalid("design and response row counts differ"));
    }
    if k == 0 {
        return Ok(LeastSquares {
            coefficients: Matrix::zeros(0, m),
            residuals: response.clone(),
            xtx_inverse: Matrix::zeros(0, 0),
        });
    }
    if n <= k {
        return Err(Error::invalid(format!(
            "least squares needs more rows ({n}) than columns ({k})"
        )));
    }

    let mut a = design.clone();
    let mut qty = response.clone();
    let mut v = vec![0.0; n];
    for j in 0..k {
        let norm = (j..n).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::RankDeficient(format!("design column {j} is zero")));
        }
        let alpha = if a[(j, j)] > 0.0 { -norm } else { norm };
        for i in j..n {
            v[i] = a[(i, j)];
        }
        v[j] -= alpha;
        let vnorm2: f64 = (j..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 > 0.0 {
            for c in j..k {
                let dot: f64 = (j..n).map(|i| v[i] * a[(i, c)]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in j..n {
                    a[(i, c)] -= f * v[i];
                }
            }
            for c in 0..m {
                let dot: f64 = (j..n).map(|i| v[i] * qty[(i, c)]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in j..n {
                    qty[(i, c)] -= f * v[i];
                }
            }
        }
    }

    let max_diag = (0..k).fold(0.0f64, |acc, j| acc.max(a[(j, j)].abs()));
    for j in 0..k {
        if a[(j, j)].abs() <= PIVOT_TOLERANCE * max_diag {
            return Err(Error::RankDeficient(format!(
                "pivot {j} is {:e} relative to {:e}",
                a[(j, j)].abs(),
                max_diag
            )));
        }
    }

    // Back-substitution R·b = (Qᵀy)[..k].
    let mut coefficients = Matrix::zeros(k, m);
    for c in 0..m {
        for i in (0..k).rev() {
            let mut s = qty[(i, c)];
            for l in (i + 1)..k {
                s -= a[(i, l)] * coefficients[(l, c)];
            }
            coefficients[(i, c)] = s / a[(i, i)];
        }
    }

    // R⁻¹ by back-substitution on the identity, then (XᵀX)⁻¹ = R⁻¹R⁻ᵀ.
    let mut r_inv = Matrix::zeros(k, k);
    for c in 0..k {
        for i in (0..=c).rev() {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for l in (i + 1)..=c {
                s -= a[(i, l)] * r_inv[(l, c)];
            }
            r_inv[(i, c)] = s / a[(i, i)];
        }
    }
    let xtx_inverse = r_inv.matmul(&r_inv.transpose());

    let fitted = design.matmul(&coefficients);
    let residuals = response - &fitted;
    Ok(LeastSquares {
        coefficients,
        residuals,
        xtx_inverse,
    })
}

/// Lower-triangular Cholesky factor with positive diagonal.
pub fn cholesky(spd: &Matrix) -> Result<Matrix> {
    let n = spd.rows();
    if spd.cols() != n {
        return Err(Error::invalid("cholesky needs a square matrix"));
    }
    if !spd.is_symmetric(SYMMETRY_TOLERANCE) {
        return Err(Error::invalid("cholesky input is not symmetric"));
    }
    if n == 2 {
        return cholesky_2x2(spd);
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = spd[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = spd[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

fn cholesky_2x2(m: &Matrix) -> Result<Matrix> {
    let a = m[(0, 0)];
    if a <= 0.0 || !a.is_finite() {
        return Err(Error::NotPositiveDefinite { index: 0, pivot: a });
    }
    let l00 = a.sqrt();
    let l10 = m[(1, 0)] / l00;
    let d = m[(1, 1)] - l10 * l10;
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::NotPositiveDefinite { index: 1, pivot: d });
    }
    let mut l = Matrix::zeros(2, 2);
    l[(0, 0)] = l00;
    l[(1, 0)] = l10;
    l[(1, 1)] = d.sqrt();
    Ok(l)
}

/// Solves L·x = b for lower-triangular L.
pub fn solve_lower(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves Lᵀ·x = b for lower-triangular L.
pub fn solve_lower_transpose(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Inverse of a symmetric positive definite matrix through its Cholesky factor.
pub fn spd_inverse(spd: &Matrix) -> Result<Matrix> {
    let l = cholesky(spd)?;
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        let y = solve_lower(&l, &e);
        let x = solve_lower_transpose(&l, &y);
        for r in 0..n {
            inv[(r, c)] = x[r];
        }
    }
    Ok(inv)
}

/// Eigenvalues sorted descending, eigenvectors as matching columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSolution {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

/// Cyclic Jacobi rotations for a symmetric matrix.
pub fn symmetric_eigen(a: &Matrix) -> Result<EigenSolution> {
    let n = a.rows();
    if a.cols() != n || !a.is_symmetric(SYMMETRY_TOLERANCE) {
        return Err(Error::invalid("symmetric_eigen needs a symmetric matrix"));
    }
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        let diag: f64 = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, c)] = v[(r, i)];
        }
    }
    Ok(EigenSolution {
        eigenvalues,
        eigenvectors,
    })
}

/// Solves `a·v = λ·b·v` for symmetric `a` and symmetric positive definite `b`.
///
/// Reduces to a standard symmetric problem through `b = L·Lᵀ`. Eigenvectors
/// are returned `b`-normalized (`vᵀ·b·v = 1`).
pub fn generalized_symmetric_eigen(a: &Matrix, b: &Matrix) -> Result<EigenSolution> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n || b.cols() != n {
        return Err(Error::invalid("generalized eigenproblem needs equal square matrices"));
    }
    if !a.is_symmetric(SYMMETRY_TOLERANCE) {
        return Err(Error::invalid("generalized eigenproblem: a is not symmetric"));
    }
    let l = cholesky(b)?;
    // C = L⁻¹ a L⁻ᵀ
    let mut x = Matrix::zeros(n, n);
    for c in 0..n {
        let col = solve_lower(&l, &a.col(c));
        for r in 0..n {
            x[(r, c)] = col[r];
        }
    }
    let xt = x.transpose();
    let mut reduced = Matrix::zeros(n, n);
    for c in 0..n {
        let col = solve_lower(&l, &xt.col(c));
        for r in 0..n {
            reduced[(r, c)] = col[r];
        }
    }
    // Symmetrize away rounding before Jacobi.
    let sym = (&reduced + &reduced.transpose()).scale(0.5);
    let std = symmetric_eigen(&sym)?;
    let mut vectors = Matrix::zeros(n, n);
    for c in 0..n {
        let v = solve_lower_transpose(&l, &std.eigenvectors.col(c));
        for r in 0..n {
            vectors[(r, c)] = v[r];
        }
    }
    Ok(EigenSolution {
        eigenvalues: std.eigenvalues,
        eigenvectors: vectors,
    })
}

/// Largest eigenvalue modulus of a general square matrix.
pub fn spectral_radius(a: &Matrix) -> f64 {
    let n = a.rows();
    let m = nalgebra::DMatrix::from_row_slice(n, n, a.as_slice());
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Sample covariance (n − 1 denominator) of the columns of `x`.
pub fn covariance(x: &Matrix) -> Result<Matrix> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::InsufficientData {
            what: "covariance",
            needed: 2,
            got: n,
        });
    }
    let k = x.cols();
    let means: Vec<f64> = (0..k)
        .map(|c| x.col(c).iter().sum::<f64>() / n as f64)
        .collect();
    let mut cov = Matrix::zeros(k, k);
    for r in 0..n {
        let row = x.row(r);
        for i in 0..k {
            for j in i..k {
                cov[(i, j)] += (row[i] - means[i]) * (row[j] - means[j]);
            }
        }
    }
    for i in 0..k {
        for j in i..k {
            let v = cov[(i, j)] / (n - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn ols_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let mut d = Matrix::zeros(5, 2);
        let mut y = Matrix::zeros(5, 1);
        for (i, x) in xs.iter().enumerate() {
            d[(i, 0)] = 1.0;
            d[(i, 1)] = *x;
            y[(i, 0)] = 2.0 * x + 1.0;
        }
        let fit = ols(&d, &y).unwrap();
        assert!((fit.coefficients[(0, 0)] - 1.0).abs() < 1e-10);
        assert!((fit.coefficients[(1, 0)] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn ols_zero_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = random_matrix(&mut rng, 20, 3);
        let fit = ols(&d, &Matrix::zeros(20, 1)).unwrap();
        assert!(fit.coefficients.as_slice().iter().all(|c| *c == 0.0));
        assert!(fit.residuals.as_slice().iter().all(|e| *e == 0.0));
    }

    #[test]
    fn ols_residuals_orthogonal_to_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = random_matrix(&mut rng, 200, 5);
        let y = random_matrix(&mut rng, 200, 1);
        let fit = ols(&d, &y).unwrap();
        let dots = d.t_matmul(&fit.residuals);
        assert!(dots.max_abs() < 1e-8, "{dots:?}");
    }

    #[test]
    fn ols_detects_rank_deficiency() {
        let mut d = Matrix::zeros(10, 2);
        for i in 0..10 {
            d[(i, 0)] = i as f64;
            d[(i, 1)] = 2.0 * i as f64;
        }
        let y = Matrix::column(&[1.0; 10]);
        assert!(matches!(ols(&d, &y), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&Matrix::identity(3)).unwrap();
        assert_eq!(l, Matrix::identity(3));
        let l = cholesky(&Matrix::diag(&[4.0, 9.0])).unwrap();
        assert_eq!(l, Matrix::diag(&[2.0, 3.0]));
        let err = cholesky(&Matrix::diag(&[1.0, -1.0])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 3, 5] {
            let a = random_matrix(&mut rng, n + 3, n);
            let spd = a.t_matmul(&a);
            let l = cholesky(&spd).unwrap();
            let back = l.matmul(&l.transpose());
            let err = (&back - &spd).max_abs() / spd.max_abs();
            assert!(err < 1e-9, "n={n} err={err}");
        }
    }

    #[test]
    fn generalized_eigen_examples() {
        let sol = generalized_symmetric_eigen(&Matrix::identity(2), &Matrix::identity(2)).unwrap();
        for v in &sol.eigenvalues {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let sol =
            generalized_symmetric_eigen(&Matrix::diag(&[2.0, 1.0]), &Matrix::identity(2)).unwrap();
        assert!((sol.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!((sol.eigenvalues[1] - 1.0).abs() < 1e-14);
        let sol =
            generalized_symmetric_eigen(&Matrix::diag(&[1.0, 3.0]), &Matrix::identity(2)).unwrap();
        assert_eq!(sol.eigenvalues, vec![3.0, 1.0]);
    }

    #[test]
    fn generalized_eigen_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 3] {
            for _ in 0..20 {
                let x = random_matrix(&mut rng, n + 4, n);
                let y = random_matrix(&mut rng, n + 4, n);
                let a = x.t_matmul(&x);
                let b = y.t_matmul(&y);
                let sol = generalized_symmetric_eigen(&a, &b).unwrap();
                for (c, lambda) in sol.eigenvalues.iter().enumerate() {
                    let v = Matrix::column(&sol.eigenvectors.col(c));
                    let lhs = a.matmul(&v);
                    let rhs = b.matmul(&v).scale(*lambda);
                    assert!((&lhs - &rhs).max_abs() < 1e-8);
                }
                assert!(sol.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn generalized_eigen_rejects_indefinite_b() {
        let r = generalized_symmetric_eigen(&Matrix::identity(2), &Matrix::diag(&[1.0, 0.0]));
        assert!(r.is_err());
    }

    #[test]
    fn spectral_radius_of_rotation_and_diagonal() {
        let rot = Matrix::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
        assert!((spectral_radius(&rot) - 1.0).abs() < 1e-12);
        let d = Matrix::diag(&[0.5, -0.9, 0.1]);
        assert!((spectral_radius(&d) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn spd_inverse_roundtrip() {
        let m = Matrix::from_rows(&[&[4.0, 1.0], &[1.0, 3.0]]).unwrap();
        let inv = spd_inverse(&m).unwrap();
        let id = m.matmul(&inv);
        assert!((&id - &Matrix::identity(2)).max_abs() < 1e-14);
    }
}
