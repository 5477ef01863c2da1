//! Discrete-velocity reference solver for the 1D BGK equation.
//!
//! The distribution is stored as point values `f(x_j, v_k)` at cell centres,
//! cell-major. Transport uses WENO5 upwind finite differences along each
//! velocity node, collision is treated implicitly through a closed-form
//! relaxation solve, and the two are coupled by the ARS(4,4,3) IMEX
//! Runge-Kutta scheme.

use std::io::Write;

use crate::error::{Error, Result};
use crate::moments::{conserved_moments, maxwellian, moments_from_distribution};
use crate::parallel::Execution;
use crate::state::{Boundary, Grid1D, PrimitiveMomentState};
use crate::weno::weno5_right_interface;

mod imex;

pub use imex::{ImexTableau, ARS443};

/// Uniform velocity grid with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub v_min: f64,
    pub v_max: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl VelocityGrid {
    pub const MIN_NODES: usize = 32;

    /// `n` nodes on the symmetric interval `[v_min, v_max]`.
    pub fn new(v_min: f64, v_max: f64, n: usize) -> Result<Self> {
        if !(v_max > v_min) || !v_min.is_finite() || !v_max.is_finite() {
            return Err(Error::Config(format!("velocity interval [{v_min}, {v_max}]")));
        }
        if (v_min + v_max).abs() > 1e-12 * v_max.abs() {
            return Err(Error::Config("velocity grid must be symmetric about 0".into()));
        }
        if n < Self::MIN_NODES {
            return Err(Error::Config(format!("{n} velocity nodes, need {}", Self::MIN_NODES)));
        }
        let h = (v_max - v_min) / (n - 1) as f64;
        let nodes = (0..n)
            .map(|k| {
                // exact symmetry keeps odd moments of even data at zero
                let a = v_min + h * k as f64;
                let b = v_max - h * (n - 1 - k) as f64;
                0.5 * (a + b)
            })
            .collect();
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        Ok(Self { v_min, v_max, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.v_max - self.v_min) / (self.len() - 1) as f64
    }

    pub fn max_speed(&self) -> f64 {
        self.v_max.abs().max(self.v_min.abs())
    }
}

impl Default for VelocityGrid {
    fn default() -> Self {
        Self::new(-10.0, 10.0, 150).expect("valid default grid")
    }
}

/// `f(x_j, v_k)` stored at `values[j * n_v + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticField {
    pub grid: Grid1D,
    pub velocity: VelocityGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl KineticField {
    pub fn new(grid: Grid1D, velocity: VelocityGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_x * velocity.len() {
            return Err(Error::Dimension(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.n_x,
                velocity.len()
            )));
        }
        let field = Self { grid, velocity, values, time: 0.0 };
        field.validate()?;
        Ok(field)
    }

    pub fn from_fn(grid: Grid1D, velocity: VelocityGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.n_x * velocity.len());
        for j in 0..grid.n_x {
            let x = grid.center(j);
            values.extend(velocity.nodes.iter().map(|&v| f(x, v)));
        }
        Self::new(grid, velocity, values)
    }

    /// Local Maxwellian with macroscopic profiles given as functions of `x`.
    pub fn maxwellian(
        grid: Grid1D,
        velocity: VelocityGrid,
        rho: impl Fn(f64) -> f64,
        u: impl Fn(f64) -> f64,
        theta: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        Self::from_fn(grid, velocity, |x, v| maxwellian(rho(x), u(x), theta(x), v))
    }

    pub fn n_v(&self) -> usize {
        self.velocity.len()
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        let n = self.n_v();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn validate(&self) -> Result<()> {
        for j in 0..self.grid.n_x {
            let cell = self.cell(j);
            if cell.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { cell: j, time: self.time });
            }
            let [rho, ..] = conserved_moments(cell, &self.velocity);
            if !(rho > 0.0) {
                return Err(Error::PositivityLoss { cell: j, time: self.time });
            }
        }
        Ok(())
    }

    /// Domain totals of `(rho, rho u, E)`.
    pub fn totals(&self) -> [f64; 3] {
        let dx = self.grid.dx();
        let mut acc = [0.0; 3];
        for j in 0..self.grid.n_x {
            let m = conserved_moments(self.cell(j), &self.velocity);
            for i in 0..3 {
                acc[i] += m[i] * dx;
            }
        }
        acc
    }

    /// Grad moments of order `order` in every cell.
    pub fn moments(&self, order: usize, exec: Execution) -> Result<Vec<PrimitiveMomentState>> {
        exec.try_map(self.grid.n_x, |j| {
            moments_from_distribution(self.cell(j), &self.velocity, order)
        })
    }
}

fn ghost_index(j: isize, n: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Periodic => j.rem_euclid(n as isize) as usize,
        Boundary::Outflow => j.clamp(0, n as isize - 1) as usize,
    }
}

/// `-v df/dx` along one velocity node from the line of point values.
fn advect_line(line: &[f64], v: f64, dx: f64, boundary: Boundary, out: &mut [f64]) {
    let n = line.len();
    if v == 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    let at = |j: isize| line[ghost_index(j, n, boundary)];
    // flux at the right interface of cell j
    let flux = |j: isize| -> f64 {
        if v > 0.0 {
            v * weno5_right_interface(&[at(j - 2), at(j - 1), at(j), at(j + 1), at(j + 2)])
        } else {
            v * weno5_right_interface(&[at(j + 3), at(j + 2), at(j + 1), at(j), at(j - 1)])
        }
    };
    let mut left = flux(-1);
    for j in 0..n {
        let right = flux(j as isize);
        out[j] = -(right - left) / dx;
        left = right;
    }
}

/// Transport right-hand side `-v df/dx` of a field, parallel over velocities.
pub fn advection_rhs(field: &KineticField, exec: Execution) -> Vec<f64> {
    advection_rhs_values(&field.values, &field.grid, &field.velocity, exec)
}

fn advection_rhs_values(
    values: &[f64],
    grid: &Grid1D,
    velocity: &VelocityGrid,
    exec: Execution,
) -> Vec<f64> {
    let n_x = grid.n_x;
    let n_v = velocity.len();
    let dx = grid.dx();
    let columns = exec.map(n_v, |k| {
        let line: Vec<f64> = (0..n_x).map(|j| values[j * n_v + k]).collect();
        let mut out = vec![0.0; n_x];
        advect_line(&line, velocity.nodes[k], dx, grid.boundary, &mut out);
        out
    });
    let mut rhs = vec![0.0; n_x * n_v];
    for (k, col) in columns.iter().enumerate() {
        for j in 0..n_x {
            rhs[j * n_v + k] = col[j];
        }
    }
    rhs
}

/// Maxwellian whose discrete moments on `grid` equal `target = (rho, m, E)`.
///
/// Sampling the continuous Maxwellian loses conservation at the level of the
/// tail mass outside the grid; a few Newton steps on `(rho, u, theta)` restore
/// it to round-off.
pub fn discrete_maxwellian(target: [f64; 3], grid: &VelocityGrid) -> Result<Vec<f64>> {
    let rho0 = target[0];
    if !(rho0 > 0.0) {
        return Err(Error::DegenerateDistribution { rho: rho0, theta: f64::NAN });
    }
    let u0 = target[1] / rho0;
    let theta0 = 2.0 * target[2] / rho0 - u0 * u0;
    if !(theta0 > 0.0) {
        return Err(Error::DegenerateDistribution { rho: rho0, theta: theta0 });
    }
    let (mut rho, mut u, mut theta) = (rho0, u0, theta0);
    let sample = |rho: f64, u: f64, theta: f64| -> Vec<f64> {
        grid.nodes.iter().map(|&v| maxwellian(rho, u, theta, v)).collect()
    };
    let mut f = sample(rho, u, theta);
    for _ in 0..4 {
        let m = conserved_moments(&f, grid);
        let r: [f64; 3] = std::array::from_fn(|i| m[i] - target[i]);
        let scale = target[0].abs() + target[2].abs();
        if r.iter().all(|x| x.abs() <= 1e-15 * scale) {
            break;
        }
        // Jacobian of the discrete moments with respect to (rho, u, theta)
        let mut jac = nalgebra::Matrix3::zeros();
        for ((fk, &v), &w) in f.iter().zip(&grid.nodes).zip(&grid.weights) {
            let d = v - u;
            let grads = [fk / rho, fk * d / theta, fk * (d * d / (2.0 * theta * theta) - 0.5 / theta)];
            let basis = [w, w * v, 0.5 * w * v * v];
            for (i, b) in basis.iter().enumerate() {
                for (c, g) in grads.iter().enumerate() {
                    jac[(i, c)] += b * g;
                }
            }
        }
        let Some(step) = jac.lu().solve(&nalgebra::Vector3::new(r[0], r[1], r[2])) else {
            break;
        };
        rho -= step[0];
        u -= step[1];
        theta -= step[2];
        if !(rho > 0.0 && theta > 0.0) {
            return Err(Error::DegenerateDistribution { rho, theta });
        }
        f = sample(rho, u, theta);
    }
    Ok(f)
}

/// Implicit relaxation `f = f_hat + lambda (f_M[f] - f)`, solved in closed
/// form as `(f_hat + lambda f_M[f_hat]) / (1 + lambda)` since the collision
/// operator conserves `(rho, rho u, E)`.
pub fn relaxation_solve(f_hat: &[f64], lambda: f64, grid: &VelocityGrid) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("relaxation parameter {lambda}")));
    }
    let fm = discrete_maxwellian(conserved_moments(f_hat, grid), grid)?;
    if lambda.is_infinite() {
        return Ok(fm);
    }
    Ok(f_hat.iter().zip(&fm).map(|(f, m)| (f + lambda * m) / (1.0 + lambda)).collect())
}

/// Exact homogeneous relaxation over `dt`: `f_M + (f - f_M) e^{-dt/tau}`.
pub fn relax_exact(f: &[f64], dt: f64, tau: f64, grid: &VelocityGrid) -> Result<Vec<f64>> {
    let fm = discrete_maxwellian(conserved_moments(f, grid), grid)?;
    let decay = (-dt / tau).exp();
    Ok(f.iter().zip(&fm).map(|(v, m)| m + (v - m) * decay).collect())
}

/// Time integrator of the kinetic solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DvmScheme {
    /// ARS(4,4,3) IMEX Runge-Kutta.
    #[default]
    Imex,
    /// SSP-RK3 transport followed by exact relaxation.
    SplitExact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DvmConfig {
    pub tau: f64,
    pub cfl: f64,
    pub scheme: DvmScheme,
    pub execution: Execution,
}

impl DvmConfig {
    pub fn new(tau: f64) -> Self {
        Self { tau, cfl: 0.5, scheme: DvmScheme::Imex, execution: Execution::Parallel }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidRelaxation(self.tau));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl {} outside (0, 1]", self.cfl)));
        }
        Ok(())
    }

    /// Largest stable step for the explicit transport.
    pub fn max_dt(&self, field: &KineticField) -> f64 {
        self.cfl * field.grid.dx() / field.velocity.max_speed()
    }
}

/// Relaxes every cell of `values` with parameter `lambda`.
fn relax_all(
    values: &[f64],
    lambda: f64,
    velocity: &VelocityGrid,
    exec: Execution,
) -> Result<Vec<f64>> {
    let n_v = velocity.len();
    let cells = exec.try_map(values.len() / n_v, |j| {
        relaxation_solve(&values[j * n_v..(j + 1) * n_v], lambda, velocity)
    })?;
    Ok(cells.concat())
}

/// One IMEX step with the ARS(4,4,3) tableau.
pub fn imex_step(field: &KineticField, tau: f64, dt: f64, exec: Execution) -> Result<KineticField> {
    imex_step_with(field, tau, dt, &ARS443, exec)
}

/// One IMEX step with an arbitrary stiffly accurate tableau whose implicit
/// part has an explicit first stage.
pub fn imex_step_with(
    field: &KineticField,
    tau: f64,
    dt: f64,
    tableau: &ImexTableau,
    exec: Execution,
) -> Result<KineticField> {
    if !(tau > 0.0) {
        return Err(Error::InvalidRelaxation(tau));
    }
    let n = field.values.len();
    let s = tableau.stages();
    let mut transport: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut collision: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut stage = field.values.clone();
    transport.push(advection_rhs_values(&stage, &field.grid, &field.velocity, exec));
    collision.push(vec![0.0; n]); // unused: the first implicit column is zero
    for i in 1..s {
        let mut f_hat = field.values.clone();
        for j in 0..i {
            let ae = dt * tableau.explicit[i][j];
            let ai = dt * tableau.implicit[i][j];
            for idx in 0..n {
                f_hat[idx] += ae * transport[j][idx] + ai * collision[j][idx];
            }
        }
        let aii = tableau.implicit[i][i];
        stage = relax_all(&f_hat, dt * aii / tau, &field.velocity, exec)?;
        collision.push(stage.iter().zip(&f_hat).map(|(f, h)| (f - h) / (dt * aii)).collect());
        if i + 1 < s {
            transport.push(advection_rhs_values(&stage, &field.grid, &field.velocity, exec));
        }
    }
    let mut out = KineticField { values: stage, time: field.time + dt, ..field.clone() };
    check_cells(&mut out)?;
    Ok(out)
}

/// SSP-RK3 transport followed by exact relaxation over `dt`.
pub fn split_exact_step(
    field: &KineticField,
    tau: f64,
    dt: f64,
    exec: Execution,
) -> Result<KineticField> {
    if !(tau > 0.0) {
        return Err(Error::InvalidRelaxation(tau));
    }
    let (grid, vel) = (&field.grid, &field.velocity);
    let u0 = &field.values;
    let l0 = advection_rhs_values(u0, grid, vel, exec);
    let u1: Vec<f64> = u0.iter().zip(&l0).map(|(u, l)| u + dt * l).collect();
    let l1 = advection_rhs_values(&u1, grid, vel, exec);
    let u2: Vec<f64> =
        (0..u0.len()).map(|i| 0.75 * u0[i] + 0.25 * (u1[i] + dt * l1[i])).collect();
    let l2 = advection_rhs_values(&u2, grid, vel, exec);
    let u3: Vec<f64> =
        (0..u0.len()).map(|i| u0[i] / 3.0 + 2.0 / 3.0 * (u2[i] + dt * l2[i])).collect();
    let n_v = vel.len();
    let relaxed = exec.try_map(grid.n_x, |j| relax_exact(&u3[j * n_v..(j + 1) * n_v], dt, tau, vel))?;
    let mut out = KineticField { values: relaxed.concat(), time: field.time + dt, ..field.clone() };
    check_cells(&mut out)?;
    Ok(out)
}

fn check_cells(field: &mut KineticField) -> Result<()> {
    field.validate()
}

/// Moments sampled during a kinetic run.
#[derive(Debug, Clone, PartialEq)]
pub struct DvmTrajectory {
    pub times: Vec<f64>,
    /// `moments[t][j]`, of order `M + 1` so the closing moment is kept.
    pub moments: Vec<Vec<PrimitiveMomentState>>,
    pub final_field: KineticField,
    pub steps: usize,
}

/// Advances `field` to `t_final`, landing exactly on every sample time and
/// recording the Grad moments up to `moment_order` there. A sample time equal
/// to the initial time records the initial data.
pub fn run_dvm(
    field: KineticField,
    config: &DvmConfig,
    t_final: f64,
    sample_times: &[f64],
    moment_order: usize,
) -> Result<DvmTrajectory> {
    run_dvm_with(field, config, t_final, sample_times, moment_order, |_| Ok(()))
}

/// [`run_dvm`] with a callback invoked on the field at every sample time.
pub fn run_dvm_with(
    mut field: KineticField,
    config: &DvmConfig,
    t_final: f64,
    sample_times: &[f64],
    moment_order: usize,
    mut on_sample: impl FnMut(&KineticField) -> Result<()>,
) -> Result<DvmTrajectory> {
    config.validate()?;
    if sample_times.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Config("sample times must increase".into()));
    }
    if sample_times.iter().any(|&t| t < field.time || t > t_final) {
        return Err(Error::Config("sample times must lie within the run".into()));
    }
    let exec = config.execution;
    let mut times = Vec::new();
    let mut moments = Vec::new();
    let mut next = 0;
    let mut steps = 0;
    let dt_max = config.max_dt(&field);
    let eps = 1e-12 * t_final.abs().max(1.0);
    loop {
        while next < sample_times.len() && (sample_times[next] - field.time).abs() <= eps {
            times.push(field.time);
            moments.push(field.moments(moment_order, exec)?);
            on_sample(&field)?;
            next += 1;
        }
        if field.time >= t_final - eps {
            break;
        }
        let target = if next < sample_times.len() { sample_times[next] } else { t_final };
        let remaining = target - field.time;
        // land on the target without a sliver step
        let n_steps = (remaining / dt_max).ceil().max(1.0);
        let dt = remaining / n_steps;
        field = match config.scheme {
            DvmScheme::Imex => imex_step(&field, config.tau, dt, exec)?,
            DvmScheme::SplitExact => split_exact_step(&field, config.tau, dt, exec)?,
        };
        if (field.time - target).abs() <= eps {
            field.time = target;
        }
        steps += 1;
    }
    Ok(DvmTrajectory { times, moments, final_field: field, steps })
}

/// Raw distribution dump: `u32 N_x, u32 N_v`, the `N_x` cell centres and `N_v`
/// velocity nodes as f64, then for each snapshot `f64 t` followed by the
/// values cell-major. Little-endian throughout.
pub struct RawDumpWriter<W: Write> {
    out: W,
    n: usize,
}

impl<W: Write> RawDumpWriter<W> {
    pub fn new(mut out: W, grid: &Grid1D, velocity: &VelocityGrid) -> Result<Self> {
        out.write_all(&(grid.n_x as u32).to_le_bytes())?;
        out.write_all(&(velocity.len() as u32).to_le_bytes())?;
        for x in grid.centers() {
            out.write_all(&x.to_le_bytes())?;
        }
        for v in &velocity.nodes {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(Self { out, n: grid.n_x * velocity.len() })
    }

    pub fn write(&mut self, field: &KineticField) -> Result<()> {
        if field.values.len() != self.n {
            return Err(Error::Dimension("snapshot does not match dump header".into()));
        }
        self.out.write_all(&field.time.to_le_bytes())?;
        for v in &field.values {
            self.out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}
