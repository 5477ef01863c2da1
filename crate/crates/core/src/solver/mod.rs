//! Path-conservative finite-volume solvers for the moment system
//! `w_t + A(w) w_x = Q(w)`.
//!
//! The unknowns are cell averages of the partially conservative variables
//! `U = (rho, rho u, E, f_3, ..., f_M)`. The first three rows are the
//! conservation laws of mass, momentum and energy and are always discretized
//! through their fluxes, so they are conserved to round-off; the remaining
//! rows are non-conservative and use path-conservative fluctuations.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{grad_matrix, hme_matrix, SystemMatrix};
use crate::network::MlClosure;
use crate::parallel::Execution;
use crate::quadrature::GaussLegendre;
use crate::state::{ConservativeState, Grid1D, PrimitiveMomentState};

mod run;
mod scheme;

pub use run::{compute_dt, max_wave_speed, run, FailureRecord, OutputCadence, RunOutput, Snapshot};
pub use scheme::{
    conservative_flux, conservative_matrix, fluctuations, high_order_rhs, roe_linearization,
    step, step_first_order, weno5_reconstruct, Fluctuations,
};

/// Source of the last row of the system matrix.
#[derive(Debug, Clone)]
pub enum Closure {
    Grad,
    Hme,
    /// Hyperbolic learned closure (eigenvalue head).
    Ml(Arc<MlClosure>),
    /// Learned gradient coefficients used directly, with no hyperbolicity
    /// guarantee.
    MlNonHyperbolic(Arc<MlClosure>),
}

impl Closure {
    pub fn name(&self) -> &'static str {
        match self {
            Closure::Grad => "grad",
            Closure::Hme => "hme",
            Closure::Ml(_) => "ml",
            Closure::MlNonHyperbolic(_) => "ml_nonhyperbolic",
        }
    }

    /// System matrix `A(w)` in primitive variables.
    pub fn matrix(&self, w: &PrimitiveMomentState) -> Result<SystemMatrix> {
        match self {
            Closure::Grad => Ok(grad_matrix(w)),
            Closure::Hme => Ok(hme_matrix(w)),
            Closure::Ml(net) => net.matrix(w),
            Closure::MlNonHyperbolic(net) => net.gradient_coefficient_matrix(w),
        }
    }

    /// Whether a non-real spectrum is an error (rather than tolerated).
    pub fn requires_real_spectrum(&self) -> bool {
        !matches!(self, Closure::MlNonHyperbolic(_))
    }

    /// Order fixed by the closure itself, if any.
    pub fn order(&self) -> Option<usize> {
        match self {
            Closure::Ml(net) | Closure::MlNonHyperbolic(net) => Some(net.order()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Roe,
    LaxFriedrichs,
    Force,
    HighOrderRoe,
    /// High-order reconstruction with FORCE interface fluctuations.
    HighOrderForce,
}

impl Scheme {
    pub fn is_high_order(self) -> bool {
        matches!(self, Scheme::HighOrderRoe | Scheme::HighOrderForce)
    }

    pub fn viscosity(self) -> Viscosity {
        match self {
            Scheme::Roe | Scheme::HighOrderRoe => Viscosity::Roe,
            Scheme::LaxFriedrichs => Viscosity::LaxFriedrichs,
            Scheme::Force | Scheme::HighOrderForce => Viscosity::Force,
        }
    }

    /// Ghost cells needed on each side.
    pub fn ghosts(self) -> usize {
        if self.is_high_order() {
            3
        } else {
            1
        }
    }
}

/// Numerical viscosity matrix of the fluctuation splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Viscosity {
    /// `R |Lambda| R^{-1}`.
    Roe,
    /// `(dx/dt) I`.
    LaxFriedrichs,
    /// `((dx/dt) I + (dt/dx) A^2) / 2`.
    Force,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathBranch {
    /// `phi(s) = U_L + s^N (U_R - U_L)`.
    Minus,
    /// `phi(s) = U_R - (1 - s)^N (U_R - U_L)`.
    Plus,
}

/// Integration path between two states in conservative variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    Linear,
    Polynomial { degree: u32, branch: PathBranch },
}

impl Path {
    /// `(phi(s), phi'(s))` factor: the point on the path and the scalar
    /// multiplying `U_R - U_L` in `d phi / ds`.
    pub fn point(self, s: f64, ul: &[f64], ur: &[f64]) -> (Vec<f64>, f64) {
        let (alpha, dalpha) = match self {
            Path::Linear => (s, 1.0),
            Path::Polynomial { degree, branch } => {
                let n = degree as i32;
                match branch {
                    PathBranch::Minus => (s.powi(n), n as f64 * s.powi(n - 1)),
                    PathBranch::Plus => {
                        (1.0 - (1.0 - s).powi(n), n as f64 * (1.0 - s).powi(n - 1))
                    }
                }
            }
        };
        let p = ul.iter().zip(ur).map(|(l, r)| l + alpha * (r - l)).collect();
        (p, dalpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionMode {
    /// Source added to the right-hand side; `dt <= 0.9 tau`.
    Explicit,
    /// Exact decay `f_k <- f_k exp(-dt/tau)` after each transport step.
    SplitExact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub path: Path,
    /// Gauss-Legendre points for the path integral.
    pub quadrature_points: usize,
    pub cfl: f64,
    pub collision: CollisionMode,
    pub tau: f64,
    /// Eigenvector condition number above which Roe falls back to FORCE.
    pub roe_condition_limit: f64,
    pub execution: Execution,
}

impl SolverConfig {
    pub fn new(scheme: Scheme, tau: f64) -> Self {
        Self {
            scheme,
            path: Path::Linear,
            quadrature_points: 3,
            cfl: 0.5,
            collision: CollisionMode::Explicit,
            tau,
            roe_condition_limit: 1e8,
            execution: Execution::Parallel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl {} outside (0, 1]", self.cfl)));
        }
        if self.quadrature_points == 0 {
            return Err(Error::Config("need at least one path quadrature point".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidRelaxation(self.tau));
        }
        if let Path::Polynomial { degree: 0, .. } = self.path {
            return Err(Error::Config("polynomial path degree must be positive".into()));
        }
        if !(self.roe_condition_limit > 1.0) {
            return Err(Error::Config("roe condition limit must exceed one".into()));
        }
        Ok(())
    }

    pub(crate) fn rule(&self) -> GaussLegendre {
        GaussLegendre::new(self.quadrature_points)
    }
}

/// Cell averages of `U` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid1D,
    pub order: usize,
    /// `data[j * (M + 1) + i]`, conservative variables.
    pub data: Vec<f64>,
    pub time: f64,
}

impl FieldState {
    pub fn n_vars(&self) -> usize {
        self.order + 1
    }

    pub fn from_conservative(grid: Grid1D, order: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.n_x * (order + 1) {
            return Err(Error::Dimension("field data does not match grid".into()));
        }
        let s = Self { grid, order, data, time: 0.0 };
        s.primitives()?;
        Ok(s)
    }

    /// Point values at cell centres (first-order accurate as averages).
    pub fn from_primitives(grid: Grid1D, cells: &[PrimitiveMomentState]) -> Result<Self> {
        let order = cells.first().ok_or_else(|| Error::Dimension("no cells".into()))?.order();
        if cells.len() != grid.n_x || cells.iter().any(|c| c.order() != order) {
            return Err(Error::Dimension("cells do not match grid or order".into()));
        }
        let data = cells.iter().flat_map(|c| c.to_conservative().to_vec()).collect();
        Self::from_conservative(grid, order, data)
    }

    /// Cell averages of `U(w(x))` by `points`-point Gauss-Legendre quadrature.
    pub fn from_profile(
        grid: Grid1D,
        order: usize,
        points: usize,
        profile: impl Fn(f64) -> Result<PrimitiveMomentState>,
    ) -> Result<Self> {
        let rule = GaussLegendre::new(points);
        let dx = grid.dx();
        let n = order + 1;
        let mut data = vec![0.0; grid.n_x * n];
        for j in 0..grid.n_x {
            let x0 = grid.x_a + j as f64 * dx;
            for (s, wq) in rule.nodes.iter().zip(&rule.weights) {
                let w = profile(x0 + s * dx)?;
                if w.order() != order {
                    return Err(Error::Dimension("profile order".into()));
                }
                for (d, u) in data[j * n..(j + 1) * n].iter_mut().zip(w.to_conservative().to_vec()) {
                    *d += wq * u;
                }
            }
        }
        Self::from_conservative(grid, order, data)
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        let n = self.n_vars();
        &self.data[j * n..(j + 1) * n]
    }

    pub fn primitive(&self, j: usize) -> Result<PrimitiveMomentState> {
        ConservativeState::from_slice(self.cell(j))?
            .to_primitive()
            .map_err(|_| Error::PositivityLoss { cell: j, time: self.time })
    }

    pub fn primitives(&self) -> Result<Vec<PrimitiveMomentState>> {
        (0..self.grid.n_x).map(|j| self.primitive(j)).collect()
    }

    /// `sum_j U_j dx` for the three conserved components.
    pub fn totals(&self) -> [f64; 3] {
        let mut acc = [0.0; 3];
        for j in 0..self.grid.n_x {
            for (a, u) in acc.iter_mut().zip(self.cell(j)) {
                *a += u * self.grid.dx();
            }
        }
        acc
    }
}

/// Converts a matrix in primitive variables to `J A J^{-1}` in the partially
/// conservative variables (see [`conservative_matrix`] for the closure-aware
/// entry point).
pub(crate) fn to_conservative_matrix(a: &DMatrix<f64>, w: &PrimitiveMomentState) -> DMatrix<f64> {
    let (rho, u, theta) = (w.rho, w.u, w.theta);
    let jinv = [
        [1.0, 0.0, 0.0],
        [-u / rho, 1.0 / rho, 0.0],
        [(u * u - theta) / rho, -2.0 * u / rho, 2.0 / rho],
    ];
    let jac = [
        [1.0, 0.0, 0.0],
        [u, rho, 0.0],
        [0.5 * (theta + u * u), rho * u, 0.5 * rho],
    ];
    let n = a.nrows();
    let mut b = a.clone();
    for i in 0..n {
        let r = [a[(i, 0)], a[(i, 1)], a[(i, 2)]];
        for c in 0..3 {
            b[(i, c)] = r[0] * jinv[0][c] + r[1] * jinv[1][c] + r[2] * jinv[2][c];
        }
    }
    let top: Vec<[f64; 3]> = (0..n).map(|c| [b[(0, c)], b[(1, c)], b[(2, c)]]).collect();
    for (c, t) in top.iter().enumerate() {
        for r in 0..3 {
            b[(r, c)] = jac[r][0] * t[0] + jac[r][1] * t[1] + jac[r][2] * t[2];
        }
    }
    b
}
