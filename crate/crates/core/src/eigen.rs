//! Small dense eigen-solvers for the system matrices.

use nalgebra::DMatrix;

/// Diagonal similarity `D^{-1} A D` with rows and columns of comparable
/// norm (Parlett-Reinsch, powers of two so no rounding is introduced).
pub fn balance(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut b = a.clone();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].abs();
                    r += b[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            while cc < r / 2.0 {
                f *= 2.0;
                cc *= 4.0;
            }
            while cc > r * 2.0 {
                f /= 2.0;
                cc /= 4.0;
            }
            if (cc + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
    }
    b
}

/// Eigenvalues of a real square matrix as `(re, im)` pairs, computed on the
/// balanced matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<(f64, f64)> {
    balance(a).complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
}

/// Real eigenvalues sorted increasingly, or the largest imaginary part when
/// the spectrum is not real to within `imag_tol` (absolute, scaled by the
/// spectral radius when that exceeds one).
pub fn real_spectrum(a: &DMatrix<f64>, imag_tol: f64) -> Result<Vec<f64>, f64> {
    let ev = eigenvalues(a);
    let radius = ev.iter().map(|e| e.0.hypot(e.1)).fold(1.0, f64::max);
    let worst = ev.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
    if worst > imag_tol * radius {
        return Err(worst);
    }
    let mut re: Vec<f64> = ev.iter().map(|e| e.0).collect();
    re.sort_by(f64::total_cmp);
    Ok(re)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a).iter().map(|e| e.0.hypot(e.1)).fold(0.0, f64::max)
}

/// `A = R diag(lambda) R^{-1}` for a matrix with real spectrum.
#[derive(Debug, Clone)]
pub struct RealEigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    /// 1-norm condition number of `vectors`.
    pub condition: f64,
}

impl RealEigenDecomposition {
    /// `R f(Lambda) R^{-1}`.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, lambda) in self.values.iter().enumerate() {
            let s = f(*lambda);
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * &self.inverse
    }
}

/// Eigen-decomposition by shifted inverse iteration on each real eigenvalue.
///
/// Returns `None` for a non-real spectrum or a singular eigenvector matrix.
pub fn real_eigen_decomposition(a: &DMatrix<f64>, imag_tol: f64) -> Option<RealEigenDecomposition> {
    let n = a.nrows();
    let values = real_spectrum(a, imag_tol).ok()?;
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &lambda) in values.iter().enumerate() {
        let mut shift = lambda + 1e-11 * scale;
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] -= shift;
        }
        let mut lu = shifted.clone().lu();
        if !lu.is_invertible() {
            shift = lambda + 1e-9 * scale;
            shifted = a.clone();
            for i in 0..n {
                shifted[(i, i)] -= shift;
            }
            lu = shifted.lu();
        }
        // deterministic start vector with no special alignment
        let mut x = nalgebra::DVector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64);
        for _ in 0..3 {
            x = lu.solve(&x)?;
            let norm = x.norm();
            if !(norm.is_finite() && norm > 0.0) {
                return None;
            }
            x /= norm;
        }
        vectors.set_column(j, &x);
    }
    let inverse = vectors.clone().try_inverse()?;
    let condition = norm1(&vectors) * norm1(&inverse);
    if !condition.is_finite() {
        return None;
    }
    Some(RealEigenDecomposition { values, vectors, inverse, condition })
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}
