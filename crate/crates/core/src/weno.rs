//! Fifth-order WENO reconstruction from five cell averages.
//!
//! Cells are indexed `-2..=2` around the target cell, whose reference
//! coordinate is `xi in [-1/2, 1/2]`. The three quadratic candidates are
//! blended with WENO-Z weights (`tau_5 = |beta_0 - beta_2|`, power 2). At
//! abscissae where the optimal linear weights are not all positive the
//! positive/negative splitting of Shi, Hu and Shu is applied.
//!
//! Point-value finite differences use the same formulas, with the flux values
//! playing the role of cell averages and `xi = 1/2`.

use nalgebra::{Matrix3, Vector3};

const EPS: f64 = 1e-40;

/// Reconstruction at one intra-cell abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WenoPoint {
    pub xi: f64,
    /// `candidates[r][i]`: weight of cell `r - 2 + i` in quadratic `r`.
    candidates: [[f64; 3]; 3],
    linear: [f64; 3],
}

/// Cell average of `xi^p` over the cell centred at `o`.
fn cell_average_monomial(o: f64, p: i32) -> f64 {
    ((o + 0.5).powi(p + 1) - (o - 0.5).powi(p + 1)) / (p as f64 + 1.0)
}

/// Weights `c_i` with `sum_i c_i avg_i = P(xi)` for the polynomial of degree
/// `offsets.len() - 1` with the given cell averages.
fn stencil_weights(offsets: &[f64], xi: f64) -> Vec<f64> {
    let n = offsets.len();
    let v = nalgebra::DMatrix::from_fn(n, n, |i, p| cell_average_monomial(offsets[i], p as i32));
    let rhs = nalgebra::DVector::from_fn(n, |p, _| xi.powi(p as i32));
    let c = v.transpose().lu().solve(&rhs).expect("cell-average Vandermonde is invertible");
    c.iter().copied().collect()
}

impl WenoPoint {
    pub fn new(xi: f64) -> Self {
        let mut candidates = [[0.0; 3]; 3];
        for (r, cand) in candidates.iter_mut().enumerate() {
            let offs: Vec<f64> = (0..3).map(|i| (r + i) as f64 - 2.0).collect();
            cand.copy_from_slice(&stencil_weights(&offs, xi));
        }
        let big = stencil_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0], xi);
        // sum_r d_r candidates[r] = big: an overdetermined but consistent
        // 5x3 system, solved through its normal equations.
        let mut a = nalgebra::DMatrix::zeros(5, 3);
        for r in 0..3 {
            for i in 0..3 {
                a[(r + i, r)] = candidates[r][i];
            }
        }
        let b = nalgebra::DVector::from_column_slice(&big);
        let ata: Matrix3<f64> = Matrix3::from_fn(|i, j| a.column(i).dot(&a.column(j)));
        let atb = Vector3::from_fn(|i, _| a.column(i).dot(&b));
        let d = ata.lu().solve(&atb).expect("linear weights exist");
        Self { xi, candidates, linear: [d[0], d[1], d[2]] }
    }

    pub fn linear_weights(&self) -> [f64; 3] {
        self.linear
    }

    /// Unlimited fifth-order value (the linear blend).
    pub fn linear_value(&self, s: &[f64; 5]) -> f64 {
        let p = self.candidate_values(s);
        (0..3).map(|r| self.linear[r] * p[r]).sum()
    }

    fn candidate_values(&self, s: &[f64; 5]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for r in 0..3 {
            p[r] = (0..3).map(|i| self.candidates[r][i] * s[r + i]).sum();
        }
        p
    }

    /// WENO value at `xi` from averages `s[0..5]` of cells `-2..=2`.
    pub fn reconstruct(&self, s: &[f64; 5]) -> f64 {
        let p = self.candidate_values(s);
        let beta = smoothness(s);
        let tau = (beta[0] - beta[2]).abs();
        let nonlinear = |gamma: [f64; 3]| -> [f64; 3] {
            let mut alpha = [0.0; 3];
            for r in 0..3 {
                let q = tau / (beta[r] + EPS);
                alpha[r] = gamma[r] * (1.0 + q * q);
            }
            let sum: f64 = alpha.iter().sum();
            alpha.map(|a| a / sum)
        };
        if self.linear.iter().all(|&d| d > 0.0) {
            let w = nonlinear(self.linear);
            return (0..3).map(|r| w[r] * p[r]).sum();
        }
        let plus = self.linear.map(|d| 0.5 * (d + 3.0 * d.abs()));
        let minus: [f64; 3] = std::array::from_fn(|r| plus[r] - self.linear[r]);
        let sp: f64 = plus.iter().sum();
        let sm: f64 = minus.iter().sum();
        let wp = nonlinear(plus.map(|g| g / sp));
        let wm = nonlinear(minus.map(|g| g / sm));
        (0..3).map(|r| (sp * wp[r] - sm * wm[r]) * p[r]).sum()
    }
}

/// Jiang-Shu smoothness indicators of the three candidate stencils.
pub fn smoothness(s: &[f64; 5]) -> [f64; 3] {
    let sq = |x: f64| x * x;
    [
        13.0 / 12.0 * sq(s[0] - 2.0 * s[1] + s[2]) + 0.25 * sq(s[0] - 4.0 * s[1] + 3.0 * s[2]),
        13.0 / 12.0 * sq(s[1] - 2.0 * s[2] + s[3]) + 0.25 * sq(s[1] - s[3]),
        13.0 / 12.0 * sq(s[2] - 2.0 * s[3] + s[4]) + 0.25 * sq(3.0 * s[2] - 4.0 * s[3] + s[4]),
    ]
}

/// Value at the right interface `xi = 1/2` from the left-biased stencil.
pub fn weno5_right_interface(s: &[f64; 5]) -> f64 {
    let p = [
        (2.0 * s[0] - 7.0 * s[1] + 11.0 * s[2]) / 6.0,
        (-s[1] + 5.0 * s[2] + 2.0 * s[3]) / 6.0,
        (2.0 * s[2] + 5.0 * s[3] - s[4]) / 6.0,
    ];
    let d = [0.1, 0.6, 0.3];
    let beta = smoothness(s);
    let tau = (beta[0] - beta[2]).abs();
    let mut alpha = [0.0; 3];
    for r in 0..3 {
        let q = tau / (beta[r] + EPS);
        alpha[r] = d[r] * (1.0 + q * q);
    }
    let sum: f64 = alpha.iter().sum();
    (0..3).map(|r| alpha[r] / sum * p[r]).sum()
}
