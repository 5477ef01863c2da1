//! Hyperbolicity-preserving closure algebra.
//!
//! Given ordered offsets `r~_0 < ... < r~_M`, the eigenvalues `r_k = u + r~_k`
//! are imposed on the closed system matrix by choosing its last row
//! `(a_0, ..., a_M)`:
//!
//! 1. expand `prod_k (y - r~_k) = sum_i c_i y^i` with `y = x - u`;
//! 2. rewrite it in the scaled Hermite basis
//!    `sum_k beta_k theta^{k/2} He_k(s) + theta^{(M+1)/2} He_{M+1}(s)`,
//!    `s = y / sqrt(theta)`;
//! 3. match against `M! q_{M+1}`, the last associated polynomial of the
//!    unreduced lower Hessenberg matrix, whose Hermite coefficients are affine
//!    in the unknown row. The equations are triangular and are solved from the
//!    `He_M` coefficient downwards.
//!
//! Since the offsets never see `u`, every `a_k` with `k < M` is independent of
//! `u` and `a_M - u` is too, which is exactly Galilean invariance of the system.

use crate::error::{Error, Result};
use crate::hermite::hermite_connection;
use crate::matrix::{grad_last_row, grad_matrix, SystemMatrix};
use crate::state::PrimitiveMomentState;

/// Default minimum separation between consecutive offsets.
pub const DEFAULT_EPS_GAP: f64 = 1e-6;

/// Galilean-shifted eigenvalues `r~_0 < ... < r~_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenOffsets {
    values: Vec<f64>,
}

impl EigenOffsets {
    /// Validates finiteness and `r~_{k+1} - r~_k >= eps_gap`.
    pub fn new(values: Vec<f64>, eps_gap: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Dimension("need at least two offsets".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Offsets { index: i, gap: eps_gap });
        }
        for (i, pair) in values.windows(2).enumerate() {
            if !(pair[1] - pair[0] >= eps_gap) || pair[1] <= pair[0] {
                return Err(Error::Offsets { index: i + 1, gap: eps_gap });
            }
        }
        Ok(Self { values })
    }

    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Smallest gap between consecutive offsets.
    pub fn min_gap(&self) -> f64 {
        self.values.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min)
    }
}

/// Last row `(a_0, ..., a_M)` of the closed system matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LastRow {
    pub values: Vec<f64>,
}

impl LastRow {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }
}

/// `beta_0 ..= beta_M` of the scaled Hermite expansion; the `He_{M+1}`
/// coefficient is `theta^{(M+1)/2}` by normalisation and not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteCoefficients {
    pub beta: Vec<f64>,
}

/// Coefficients `c_0 ..= c_M` of the monic `prod_k (y - r~_k)`; `c_{M+1} = 1`
/// is implicit.
pub fn vieta_coefficients(offsets: &EigenOffsets) -> Vec<f64> {
    let n = offsets.values.len();
    let mut poly = Vec::with_capacity(n + 1);
    poly.push(1.0);
    for &r in &offsets.values {
        poly.push(0.0);
        for i in (0..poly.len()).rev() {
            let lower = if i > 0 { poly[i - 1] } else { 0.0 };
            poly[i] = lower - r * poly[i];
        }
    }
    poly.truncate(n);
    poly
}

/// Rewrites `sum_i c_i y^i + y^{M+1}` (`c` holds `c_0 ..= c_M`) as
/// `sum_k beta_k theta^{k/2} He_k(y/sqrt(theta)) + theta^{(M+1)/2} He_{M+1}`.
pub fn monomial_to_hermite(c: &[f64], theta: f64) -> HermiteCoefficients {
    let top = c.len(); // M + 1
    let coeff = |i: usize| if i == top { 1.0 } else { c[i] };
    let beta = (0..top)
        .map(|k| {
            let mut sum = 0.0;
            let mut theta_pow = 1.0; // theta^{(i-k)/2} for i - k even
            let mut i = k;
            while i <= top {
                sum += coeff(i) * theta_pow * hermite_connection(i, k);
                theta_pow *= theta;
                i += 2;
            }
            sum
        })
        .collect();
    HermiteCoefficients { beta }
}

/// Hermite coefficients (in `xi = (x - u)/sqrt(theta)`) of the associated
/// polynomials `q_0 ..= q_M` of the Grad rows `0 ..= M-1`.
///
/// `q_1 = sqrt(theta)/rho He_1`, `q_2 = theta/rho He_2`,
/// `q_3 = theta^{3/2}/6 He_3` and for `k >= 4`
/// `q_k = theta^{k/2}/k! He_k - theta f_{k-2}/(2 rho) He_2 - sqrt(theta) f_{k-1}/rho He_1`.
pub fn associated_polynomials(w: &PrimitiveMomentState) -> Vec<Vec<f64>> {
    let m = w.order();
    let (rho, theta) = (w.rho, w.theta);
    let s = theta.sqrt();
    let mut q = vec![vec![0.0; m + 2]; m + 1];
    q[0][0] = 1.0;
    q[1][1] = s / rho;
    q[2][2] = theta / rho;
    // leading coefficient theta^{k/2}/k!, built up multiplicatively
    let mut lead = theta * s / 6.0;
    q[3][3] = lead;
    for k in 4..=m {
        lead *= s / k as f64;
        q[k][k] = lead;
        q[k][2] -= theta * w.moment(k as isize - 2) / (2.0 * rho);
        q[k][1] -= s * w.moment(k as isize - 1) / rho;
    }
    q
}

/// Last row whose closed matrix has eigenvalues `u + offsets`.
pub fn last_row_from_eigenvalues(
    offsets: &EigenOffsets,
    w: &PrimitiveMomentState,
) -> Result<LastRow> {
    let m = w.order();
    if offsets.order() != m {
        return Err(Error::Dimension(format!(
            "{} offsets for a state of order {m}",
            offsets.values.len()
        )));
    }
    let beta = monomial_to_hermite(&vieta_coefficients(offsets), w.theta).beta;
    let q = associated_polynomials(w);
    let s = w.theta.sqrt();

    // T = (x - u) q_M = sqrt(theta) xi q_M, using xi He_k = He_{k+1} + k He_{k-1}
    let mut shifted = vec![0.0; m + 2];
    for (i, &v) in q[m].iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        shifted[i + 1] += s * v;
        if i > 0 {
            shifted[i - 1] += s * i as f64 * v;
        }
    }

    // target_k = beta_k theta^{k/2} / M!
    let mut target = vec![0.0; m + 1];
    let mut scale = 1.0;
    for i in 1..=m {
        scale /= i as f64;
    }
    for (k, t) in target.iter_mut().enumerate() {
        *t = beta[k] * scale;
        scale *= s;
    }

    // q_{M+1} = T - d q_M - sum_{j<M} a_j q_j with d = a_M - u.
    let d = (shifted[m] - target[m]) / q[m][m];
    let mut a = vec![0.0; m + 1];
    for k in (0..m).rev() {
        let mut rhs = shifted[k] - d * q[m][k] - target[k];
        for j in k + 1..m {
            rhs -= a[j] * q[j][k];
        }
        a[k] = rhs / q[k][k];
    }
    a[m] = w.u + d;
    Ok(LastRow { values: a })
}

/// Gradient coefficients `N_i = (a_i - grad_i) / (M + 1)`, where `grad_i` is
/// the Grad last row (the closure-free part).
pub fn grad_coeffs_from_last_row(a: &LastRow, w: &PrimitiveMomentState) -> Result<Vec<f64>> {
    let base = grad_last_row(w);
    if base.len() != a.values.len() {
        return Err(Error::Dimension("last row and state orders differ".into()));
    }
    let scale = (w.order() + 1) as f64;
    Ok(a.values.iter().zip(&base).map(|(ai, bi)| (ai - bi) / scale).collect())
}

/// Inverse of [`grad_coeffs_from_last_row`].
pub fn last_row_from_grad_coeffs(coeffs: &[f64], w: &PrimitiveMomentState) -> Result<LastRow> {
    let base = grad_last_row(w);
    if base.len() != coeffs.len() {
        return Err(Error::Dimension("coefficient and state orders differ".into()));
    }
    let scale = (w.order() + 1) as f64;
    Ok(LastRow { values: base.iter().zip(coeffs).map(|(b, n)| b + scale * n).collect() })
}

/// Grad's matrix with its last row replaced by `a`.
pub fn assemble_ml_matrix(w: &PrimitiveMomentState, a: &LastRow) -> Result<SystemMatrix> {
    if a.order() != w.order() {
        return Err(Error::Dimension("last row and state orders differ".into()));
    }
    let mut m = grad_matrix(w);
    m.set_last_row(&a.values);
    Ok(m)
}
