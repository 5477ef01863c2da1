use std::f64::consts::PI;

use bgk_closure::solver::{run, FieldState, OutputCadence, Scheme, SolverConfig};
use bgk_closure::{Boundary, Closure, Grid1D, PrimitiveMomentState};

fn smooth(x: f64) -> bgk_closure::Result<PrimitiveMomentState> {
    PrimitiveMomentState::new(
        1.0 + 0.2 * (2.0 * PI * x).sin(),
        0.3 + 0.1 * (2.0 * PI * x).cos(),
        1.0 + 0.1 * (2.0 * PI * x).sin(),
        vec![0.01 * (2.0 * PI * x).cos(), 0.0],
    )
}

fn solve(scheme: Scheme, n: usize, t: f64) -> Vec<f64> {
    let grid = Grid1D::new(0.0, 1.0, n, Boundary::Periodic).unwrap();
    let state = FieldState::from_profile(grid, 4, 4, smooth).unwrap();
    let mut cfg = SolverConfig::new(scheme, f64::INFINITY);
    cfg.cfl = 0.4;
    let out = run(state, &Closure::Hme, &cfg, t, &OutputCadence::Final).unwrap();
    assert!(out.completed());
    out.last().unwrap().state.data.clone()
}

/// Averages pairs of fine cells onto the next coarser grid.
fn restrict(fine: &[f64], nv: usize) -> Vec<f64> {
    fine.chunks(2 * nv).flat_map(|c| (0..nv).map(move |i| 0.5 * (c[i] + c[nv + i]))).collect()
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn self_convergence(scheme: Scheme, sizes: &[usize], t: f64) -> Vec<f64> {
    let sols: Vec<Vec<f64>> = sizes.iter().map(|&n| solve(scheme, n, t)).collect();
    let diffs: Vec<f64> = (0..sols.len() - 1).map(|i| l1(&sols[i], &restrict(&sols[i + 1], 5))).collect();
    diffs.windows(2).map(|d| (d[0] / d[1]).log2()).collect()
}

#[test]
fn first_order_self_convergence() {
    let orders = self_convergence(Scheme::Roe, &[64, 128, 256, 512], 0.1);
    println!("first-order rates {orders:?}");
    assert!((orders.last().unwrap() - 1.0).abs() < 0.2, "{orders:?}");
}

#[test]
fn high_order_self_convergence() {
    let orders = self_convergence(Scheme::HighOrderRoe, &[64, 128, 256, 512], 0.1);
    println!("high-order rates {orders:?}");
    assert!(*orders.last().unwrap() >= 2.5, "{orders:?}");
}
