//! Spatial discretization: Roe linearization along a path, fluctuation
//! splitting, WENO reconstruction and the semi-discrete right-hand sides.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::LazyLock;

use nalgebra::{DMatrix, DVector};

use super::{to_conservative_matrix, Closure, CollisionMode, FieldState, Path, SolverConfig, Viscosity};
use crate::eigen::real_eigen_decomposition;
use crate::error::{Error, Result};
use crate::quadrature::{lobatto_derivative_matrix, GaussLegendre, LOBATTO_NODES, LOBATTO_WEIGHTS};
use crate::state::{Boundary, ConservativeState, Grid1D};
use crate::weno::WenoPoint;

static LOBATTO_WENO: LazyLock<[WenoPoint; 4]> =
    LazyLock::new(|| LOBATTO_NODES.map(WenoPoint::new));
static LOBATTO_D: LazyLock<[[f64; 4]; 4]> = LazyLock::new(lobatto_derivative_matrix);

/// Fluxes of the three conservation laws: `(m, 2E, 3 f_3 + u (3E - m u))`.
pub fn conservative_flux(u: &[f64]) -> [f64; 3] {
    let (rho, m, e, f3) = (u[0], u[1], u[2], u[3]);
    let vel = m / rho;
    [m, 2.0 * e, 3.0 * f3 + vel * (3.0 * e - m * vel)]
}

/// `J A(w) J^{-1}` at the conservative state `u`.
pub fn conservative_matrix(closure: &Closure, u: &[f64]) -> Result<DMatrix<f64>> {
    let w = ConservativeState::from_slice(u)?.to_primitive()?;
    let a = closure.matrix(&w)?;
    Ok(to_conservative_matrix(a.as_matrix(), &w))
}

/// Quadrature approximation of `int_0^1 A(phi(s)) phi'(s) ds / (U_R - U_L)`,
/// i.e. `sum_i omega_i A(phi(s_i)) alpha'(s_i)` for paths of the form
/// `phi = U_L + alpha(s) (U_R - U_L)`.
pub fn roe_linearization(
    ul: &[f64],
    ur: &[f64],
    path: Path,
    rule: &GaussLegendre,
    matrix: impl Fn(&[f64]) -> Result<DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    let n = ul.len();
    if ul == ur {
        return matrix(ul);
    }
    let mut acc = DMatrix::zeros(n, n);
    for (s, w) in rule.nodes.iter().zip(&rule.weights) {
        let (p, dalpha) = path.point(*s, ul, ur);
        acc += matrix(&p)? * (w * dalpha);
    }
    Ok(acc)
}

/// Fluctuations `D^- = (A dw - Q dw)/2`, `D^+ = (A dw + Q dw)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fluctuations {
    pub minus: Vec<f64>,
    pub plus: Vec<f64>,
    /// Roe was requested but the matrix was not safely diagonalizable, so
    /// FORCE was used instead.
    pub fell_back: bool,
}

fn viscous_parts(
    a: &DMatrix<f64>,
    dw: &[f64],
    viscosity: Viscosity,
    dx: f64,
    dt: f64,
    condition_limit: f64,
) -> (DVector<f64>, DVector<f64>, bool) {
    let d = DVector::from_column_slice(dw);
    let ad = a * &d;
    let force = |ad: &DVector<f64>| -> DVector<f64> {
        let a2d = a * ad;
        (&d * (dx / dt) + a2d * (dt / dx)) * 0.5
    };
    match viscosity {
        Viscosity::LaxFriedrichs => {
            let qd = &d * (dx / dt);
            (ad, qd, false)
        }
        Viscosity::Force => {
            let qd = force(&ad);
            (ad, qd, false)
        }
        Viscosity::Roe => match real_eigen_decomposition(a, 1e-10) {
            Some(dec) if dec.condition <= condition_limit => {
                let qd = dec.apply_function(f64::abs) * &d;
                (ad, qd, false)
            }
            _ => {
                let qd = force(&ad);
                (ad, qd, true)
            }
        },
    }
}

/// Splits `A dw` into left- and right-going parts.
pub fn fluctuations(
    a: &DMatrix<f64>,
    dw: &[f64],
    viscosity: Viscosity,
    dx: f64,
    dt: f64,
    condition_limit: f64,
) -> Fluctuations {
    let (ad, qd, fell_back) = viscous_parts(a, dw, viscosity, dx, dt, condition_limit);
    if fell_back {
        log::debug!("Roe splitting ill-conditioned; using FORCE at this interface");
    }
    Fluctuations {
        minus: ad.iter().zip(qd.iter()).map(|(a, q)| 0.5 * (a - q)).collect(),
        plus: ad.iter().zip(qd.iter()).map(|(a, q)| 0.5 * (a + q)).collect(),
        fell_back,
    }
}

/// WENO5 values at intra-cell `abscissae` in `[-1/2, 1/2]` from five cell
/// averages centred on the target cell.
pub fn weno5_reconstruct(averages: &[f64; 5], abscissae: &[f64]) -> Vec<f64> {
    abscissae
        .iter()
        .map(|&xi| {
            match LOBATTO_NODES.iter().position(|&n| n == xi) {
                Some(i) => LOBATTO_WENO[i].reconstruct(averages),
                None => WenoPoint::new(xi).reconstruct(averages),
            }
        })
        .collect()
}

/// Shared per-evaluation context.
pub(crate) struct Discretization<'a> {
    pub closure: &'a Closure,
    pub config: &'a SolverConfig,
    pub grid: Grid1D,
    pub n_vars: usize,
    pub rule: GaussLegendre,
    pub time: f64,
    pub fallbacks: &'a AtomicUsize,
}

impl Discretization<'_> {
    fn matrix(&self, u: &[f64], cell: usize) -> Result<DMatrix<f64>> {
        conservative_matrix(self.closure, u).map_err(|e| match e {
            Error::Positivity { .. } | Error::DegenerateDistribution { .. } | Error::InvalidState(_) => {
                Error::PositivityLoss { cell, time: self.time }
            }
            other => other,
        })
    }

    /// `(D^-, D^+)` at an interface, with the conservation rows replaced by
    /// half flux differences so that they telescope exactly.
    fn interface(&self, ul: &[f64], ur: &[f64], dt: f64, cell: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let dw: Vec<f64> = ur.iter().zip(ul).map(|(r, l)| r - l).collect();
        if dw.iter().all(|d| *d == 0.0) {
            let z = vec![0.0; self.n_vars];
            return Ok((z.clone(), z));
        }
        let a = roe_linearization(ul, ur, self.config.path, &self.rule, |u| self.matrix(u, cell))?;
        let (mut ad, qd, fell_back) = viscous_parts(
            &a,
            &dw,
            self.config.scheme.viscosity(),
            self.grid.dx(),
            dt,
            self.config.roe_condition_limit,
        );
        if fell_back {
            self.fallbacks.fetch_add(1, Ordering::Relaxed);
        }
        let (fl, fr) = (conservative_flux(ul), conservative_flux(ur));
        for r in 0..3 {
            ad[r] = fr[r] - fl[r];
        }
        let minus = ad.iter().zip(qd.iter()).map(|(a, q)| 0.5 * (a - q)).collect();
        let plus = ad.iter().zip(qd.iter()).map(|(a, q)| 0.5 * (a + q)).collect();
        Ok((minus, plus))
    }

    fn real_index(&self, e: isize, g: usize) -> usize {
        (e - g as isize).clamp(0, self.grid.n_x as isize - 1) as usize
    }
}

/// Cell data padded with `g` ghost cells per side.
fn extended(data: &[f64], grid: &Grid1D, n_vars: usize, g: usize) -> Vec<f64> {
    let n = grid.n_x as isize;
    let mut ext = Vec::with_capacity((grid.n_x + 2 * g) * n_vars);
    for e in -(g as isize)..n + g as isize {
        let j = match grid.boundary {
            Boundary::Periodic => e.rem_euclid(n),
            Boundary::Outflow => e.clamp(0, n - 1),
        } as usize;
        ext.extend_from_slice(&data[j * n_vars..(j + 1) * n_vars]);
    }
    ext
}

fn add_collision(rhs: &mut [f64], data: &[f64], n_vars: usize, config: &SolverConfig) {
    if config.collision != CollisionMode::Explicit {
        return;
    }
    for (r, u) in rhs.chunks_exact_mut(n_vars).zip(data.chunks_exact(n_vars)) {
        for k in 3..n_vars {
            r[k] -= u[k] / config.tau;
        }
    }
}

/// First-order semi-discrete operator `-(D^+_{j-1/2} + D^-_{j+1/2})/dx + Q`.
pub(crate) fn first_order_operator(d: &Discretization, data: &[f64], dt: f64) -> Result<Vec<f64>> {
    let (n_x, nv) = (d.grid.n_x, d.n_vars);
    let ext = extended(data, &d.grid, nv, 1);
    let faces = d.config.execution.try_map(n_x + 1, |k| {
        d.interface(&ext[k * nv..(k + 1) * nv], &ext[(k + 1) * nv..(k + 2) * nv], dt, d.real_index(k as isize, 1))
    })?;
    let dx = d.grid.dx();
    let mut rhs = vec![0.0; n_x * nv];
    for j in 0..n_x {
        for i in 0..nv {
            rhs[j * nv + i] = -(faces[j].1[i] + faces[j + 1].0[i]) / dx;
        }
    }
    add_collision(&mut rhs, data, nv, d.config);
    Ok(rhs)
}

/// High-order semi-discrete operator: WENO traces at the Gauss-Lobatto nodes,
/// interface fluctuations and the in-cell integral of `A(P) P_x`.
pub(crate) fn high_order_operator(d: &Discretization, data: &[f64], dt: f64) -> Result<Vec<f64>> {
    let (n_x, nv) = (d.grid.n_x, d.n_vars);
    let g = 3;
    let ext = extended(data, &d.grid, nv, g);
    let exec = d.config.execution;

    // nodal values for real cells -1..=n_x (ext cells 2..n_x+4)
    let nodal: Vec<[Vec<f64>; 4]> = exec.map(n_x + 2, |i| {
        let e = i + 2;
        let mut out: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; nv]);
        for v in 0..nv {
            let s: [f64; 5] = std::array::from_fn(|k| ext[(e - 2 + k) * nv + v]);
            for (q, pt) in LOBATTO_WENO.iter().enumerate() {
                out[q][v] = pt.reconstruct(&s);
            }
        }
        out
    });

    let faces = exec.try_map(n_x + 1, |k| {
        d.interface(&nodal[k][3], &nodal[k + 1][0], dt, k.min(n_x - 1))
    })?;

    let dmat = &*LOBATTO_D;
    let integrals = exec.try_map(n_x, |j| -> Result<Vec<f64>> {
        let p = &nodal[j + 1];
        let mut acc = vec![0.0; nv];
        for q in 0..4 {
            let dp: Vec<f64> = (0..nv).map(|v| (0..4).map(|m| dmat[q][m] * p[m][v]).sum()).collect();
            let b = d.matrix(&p[q], j)?;
            let bd = b * DVector::from_column_slice(&dp);
            for v in 3..nv {
                acc[v] += LOBATTO_WEIGHTS[q] * bd[v];
            }
        }
        let (fl, fr) = (conservative_flux(&p[0]), conservative_flux(&p[3]));
        for r in 0..3 {
            acc[r] = fr[r] - fl[r];
        }
        Ok(acc)
    })?;

    let dx = d.grid.dx();
    let mut rhs = vec![0.0; n_x * nv];
    for j in 0..n_x {
        for i in 0..nv {
            rhs[j * nv + i] = -(faces[j].1[i] + faces[j + 1].0[i] + integrals[j][i]) / dx;
        }
    }
    add_collision(&mut rhs, data, nv, d.config);
    Ok(rhs)
}

pub(crate) fn operator(d: &Discretization, data: &[f64], dt: f64) -> Result<Vec<f64>> {
    if d.config.scheme.is_high_order() {
        high_order_operator(d, data, dt)
    } else {
        first_order_operator(d, data, dt)
    }
}

/// Checks finiteness and positivity of every cell.
pub(crate) fn check_state(data: &[f64], n_vars: usize, time: f64) -> Result<()> {
    for (j, u) in data.chunks_exact(n_vars).enumerate() {
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { cell: j, time });
        }
        let kinetic = 0.5 * u[1] * u[1] / u[0];
        if !(u[0] > 0.0) || !(u[2] > kinetic) {
            return Err(Error::PositivityLoss { cell: j, time });
        }
    }
    Ok(())
}

fn apply_split_collision(data: &mut [f64], n_vars: usize, config: &SolverConfig, dt: f64) {
    if config.collision != CollisionMode::SplitExact {
        return;
    }
    let decay = (-dt / config.tau).exp();
    for u in data.chunks_exact_mut(n_vars) {
        for v in &mut u[3..] {
            *v *= decay;
        }
    }
}

/// One time step of length `dt`: forward Euler for first-order schemes and
/// SSP-RK3 (Shu-Osher form) for high-order ones. Returns the new data and
/// the number of Roe-to-FORCE fallbacks.
pub(crate) fn advance(
    closure: &Closure,
    config: &SolverConfig,
    state: &FieldState,
    dt: f64,
) -> Result<(FieldState, usize)> {
    let fallbacks = AtomicUsize::new(0);
    let nv = state.n_vars();
    let mut d = Discretization {
        closure,
        config,
        grid: state.grid,
        n_vars: nv,
        rule: config.rule(),
        time: state.time,
        fallbacks: &fallbacks,
    };
    let u0 = &state.data;
    let mut next = if config.scheme.is_high_order() {
        let l0 = operator(&d, u0, dt)?;
        let u1: Vec<f64> = u0.iter().zip(&l0).map(|(u, l)| u + dt * l).collect();
        check_state(&u1, nv, state.time + dt)?;
        d.time = state.time + dt;
        let l1 = operator(&d, &u1, dt)?;
        let u2: Vec<f64> =
            (0..u0.len()).map(|i| 0.75 * u0[i] + 0.25 * (u1[i] + dt * l1[i])).collect();
        check_state(&u2, nv, state.time + 0.5 * dt)?;
        d.time = state.time + 0.5 * dt;
        let l2 = operator(&d, &u2, dt)?;
        (0..u0.len()).map(|i| u0[i] / 3.0 + 2.0 / 3.0 * (u2[i] + dt * l2[i])).collect()
    } else {
        let l0 = operator(&d, u0, dt)?;
        u0.iter().zip(&l0).map(|(u, l)| u + dt * l).collect::<Vec<f64>>()
    };
    apply_split_collision(&mut next, nv, config, dt);
    let time = state.time + dt;
    check_state(&next, nv, time)?;
    Ok((
        FieldState { grid: state.grid, order: state.order, data: next, time },
        fallbacks.into_inner(),
    ))
}

/// One time step of length `dt` with the configured scheme.
pub fn step(state: &FieldState, closure: &Closure, config: &SolverConfig, dt: f64) -> Result<FieldState> {
    config.validate()?;
    Ok(advance(closure, config, state, dt)?.0)
}

/// One forward-Euler step of a first-order scheme.
pub fn step_first_order(
    state: &FieldState,
    closure: &Closure,
    config: &SolverConfig,
    dt: f64,
) -> Result<FieldState> {
    if config.scheme.is_high_order() {
        return Err(Error::Config("step_first_order needs a first-order scheme".into()));
    }
    config.validate()?;
    Ok(advance(closure, config, state, dt)?.0)
}

/// Semi-discrete time derivative of the high-order scheme (collision included
/// in explicit mode).
pub fn high_order_rhs(
    state: &FieldState,
    closure: &Closure,
    config: &SolverConfig,
    dt: f64,
) -> Result<Vec<f64>> {
    if state.grid.n_x < 5 {
        return Err(Error::Config("high-order scheme needs at least 5 cells".into()));
    }
    let fallbacks = AtomicUsize::new(0);
    let d = Discretization {
        closure,
        config,
        grid: state.grid,
        n_vars: state.n_vars(),
        rule: config.rule(),
        time: state.time,
        fallbacks: &fallbacks,
    };
    high_order_operator(&d, &state.data, dt)
}
