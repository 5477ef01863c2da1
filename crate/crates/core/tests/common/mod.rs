//! Helpers shared by the integration tests: the published wave initial
//! conditions and small desk-scale closure fits on kinetic data.

#![allow(dead_code)]

use bgk_closure::closure::grad_coeffs_from_last_row;
use bgk_closure::datagen::{MacroDraw, Sinusoid, TrajectoryDataset, WaveParams};
use bgk_closure::hermite::hermite_roots;
use bgk_closure::network::analytic::{affine_network, piecewise_linear_in_theta, raw_for_offsets, uniform_knots};
use bgk_closure::network::physical_features;
use bgk_closure::{MlClosure, PrimitiveMomentState, Result};
use nalgebra::{DMatrix, DVector};

/// `(Knudsen, [[a_rho, b_rho, k_rho, psi_rho, a_theta, b_theta, k_theta, psi_theta, alpha]; 2])`.
pub const TABLE_ROWS: [(f64, [[f64; 9]; 2]); 4] = [
    (
        0.001554,
        [
            [0.261888, 0.270198, 4.0, 0.347195, 0.228545, 0.665582, 1.0, 2.708624, 0.438211],
            [0.270198, 0.627907, 1.0, 5.5624, 0.223145, 0.622083, 4.0, 1.573187, 0.596517],
        ],
    ),
    (
        0.016515,
        [
            [0.222878, 0.655877, 1.0, 0.484743, 0.213417, 0.574442, 3.0, 3.280153, 0.066066],
            [0.229181, 0.585005, 2.0, 4.482850, 0.253143, 0.639633, 2.0, 5.905965, 0.981557],
        ],
    ),
    (
        0.143742,
        [
            [0.246574, 0.574064, 3.0, 3.953562, 0.254433, 0.253392, 1.0, 4.545444, 0.589359],
            [0.250002, 0.686808, 4.0, 4.205230, 0.253392, 0.525255, 3.0, 4.694920, 0.384366],
        ],
    ),
    (
        1.008160,
        [
            [0.224907, 0.614791, 2.0, 5.343272, 0.251982, 0.569712, 2.0, 0.829738, 0.34663],
            [0.219768, 0.68036, 1.0, 1.102718, 0.250576, 0.514169, 1.0, 4.491626, 0.639318],
        ],
    ),
];

pub fn table_params(row: usize) -> WaveParams {
    let draw = |r: &[f64; 9]| MacroDraw {
        rho: Sinusoid { amplitude: r[0], offset: r[1], wavenumber: r[2] as u32, phase: r[3] },
        theta: Sinusoid { amplitude: r[4], offset: r[5], wavenumber: r[6] as u32, phase: r[7] },
    };
    let rows = &TABLE_ROWS[row].1;
    WaveParams { draws: [draw(&rows[0]), draw(&rows[1])], alpha: [rows[0][8], rows[1][8]] }
}

/// One training sample: state, gradients of `(rho, u, theta, f_3..f_M)` and
/// the gradient of the closing moment.
pub struct Sample {
    pub w: PrimitiveMomentState,
    pub dw: Vec<f64>,
    pub target: f64,
}

pub fn samples(ds: &TrajectoryDataset, stride: usize) -> Vec<Sample> {
    let (n, m) = (ds.grid.n_x, ds.order);
    let mut out = Vec::new();
    for r in &ds.records {
        for t in 0..r.times.len() {
            for j in (0..n).step_by(stride) {
                let v: Vec<f64> = (0..=m).map(|k| r.moment(t, k, n, m)[j]).collect();
                out.push(Sample {
                    w: PrimitiveMomentState::from_slice(&v).expect("valid dataset state"),
                    dw: (0..=m).map(|k| r.gradient(t, k, n, m)[j]).collect(),
                    target: r.gradient(t, m + 1, n, m)[j],
                });
            }
        }
    }
    out
}

/// Hyperbolic closure with offsets `sqrt(theta) (x_k + c_k)`, `x_k` the roots
/// of `He_{M+1}`; `c = 0` is HME up to the interpolation in `theta`.
pub fn shifted_hme_network(order: usize, c: &[f64]) -> Result<MlClosure> {
    let roots = hermite_roots(order + 1);
    piecewise_linear_in_theta(order, &uniform_knots(0.05, 3.0, 60), 1e-6, |t| {
        let off: Vec<f64> = roots.iter().zip(c).map(|(r, c)| t.sqrt() * (r + c)).collect();
        raw_for_offsets(&off, 1e-6)
    })
}

/// `N(w) . w_x - (f_{M+1})_x` for every sample.
pub fn residuals(net: &MlClosure, data: &[Sample]) -> Vec<f64> {
    data.iter()
        .map(|s| {
            let row = net.last_row(&s.w).expect("closure evaluates");
            let n = grad_coeffs_from_last_row(&row, &s.w).expect("orders agree");
            n.iter().zip(&s.dw).map(|(n, d)| n * d).sum::<f64>() - s.target
        })
        .collect()
}

fn loss(order: usize, c: &[f64], data: &[Sample]) -> Option<f64> {
    let net = shifted_hme_network(order, c).ok()?;
    Some(residuals(&net, data).iter().map(|r| r * r).sum())
}

/// Levenberg-Marquardt fit of the shifts `c`, starting from HME. Returns the
/// shifts and the loss before and after.
pub fn fit_shifted_hme(order: usize, data: &[Sample], iterations: usize) -> (Vec<f64>, f64, f64) {
    let mut c = vec![0.0; order + 1];
    let start = loss(order, &c, data).expect("HME start is valid");
    let mut current = start;
    let mut lambda = 1e-3;
    for _ in 0..iterations {
        let r0 = residuals(&shifted_hme_network(order, &c).unwrap(), data);
        let h = 1e-6;
        let mut jac = DMatrix::zeros(data.len(), c.len());
        for p in 0..c.len() {
            let mut cp = c.clone();
            cp[p] += h;
            let rp = residuals(&shifted_hme_network(order, &cp).unwrap(), data);
            for i in 0..data.len() {
                jac[(i, p)] = (rp[i] - r0[i]) / h;
            }
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_vec(r0);
        let mut improved = false;
        while lambda < 1e8 {
            let mut a = jtj.clone();
            for i in 0..c.len() {
                a[(i, i)] *= 1.0 + lambda;
            }
            let Some(step) = a.lu().solve(&(-&g)) else { break };
            let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            match loss(order, &trial, data) {
                Some(l) if l < current => {
                    improved = current - l > 1e-12 * current;
                    c = trial;
                    current = l;
                    lambda = (lambda / 3.0).max(1e-9);
                    break;
                }
                _ => lambda *= 4.0,
            }
        }
        if !improved {
            break;
        }
    }
    (c, start, current)
}

/// Least-squares affine gradient-coefficient closure `N(w) = W x(w) + b`
/// with no eigenvalue head.
pub fn fit_affine_gradient_closure(order: usize, data: &[Sample]) -> Result<MlClosure> {
    let (nf, no) = (order, order + 1);
    let mut a = DMatrix::zeros(data.len(), no * (nf + 1));
    let mut b = DVector::zeros(data.len());
    for (i, s) in data.iter().enumerate() {
        let x = physical_features(&s.w);
        for k in 0..no {
            for l in 0..nf {
                a[(i, k * nf + l)] = x[l] * s.dw[k];
            }
            a[(i, no * nf + k)] = s.dw[k];
        }
        b[i] = s.target;
    }
    let sol = a.svd(true, true).solve(&b, 1e-12).expect("SVD solve");
    let (w, bias) = sol.as_slice().split_at(no * nf);
    affine_network(order, w.to_vec(), bias.to_vec(), 1e-6)
}

/// [`fit_shifted_hme`] returning the fitted network.
pub fn fit_shifted_hme_network(order: usize, data: &[Sample], iterations: usize) -> (MlClosure, f64, f64) {
    let (c, start, end) = fit_shifted_hme(order, data, iterations);
    (shifted_hme_network(order, &c).expect("fitted shifts stay ordered"), start, end)
}
