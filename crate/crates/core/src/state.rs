//! Primitive and partially conservative moment states, and the spatial grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest supported truncation order.
pub const MIN_ORDER: usize = 4;

/// `w = (rho, u, theta, f_3, ..., f_M)` at a point or cell.
///
/// By convention `f_0 = rho`, `f_1 = f_2 = 0` and the heat flux is `q = 3 f_3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveMomentState {
    pub rho: f64,
    pub u: f64,
    pub theta: f64,
    /// `f_3 ..= f_M`.
    pub f: Vec<f64>,
}

impl PrimitiveMomentState {
    pub fn new(rho: f64, u: f64, theta: f64, f: Vec<f64>) -> Result<Self> {
        let state = Self { rho, u, theta, f };
        state.validate()?;
        Ok(state)
    }

    /// Equilibrium (all higher moments zero) of order `order`.
    pub fn equilibrium(order: usize, rho: f64, u: f64, theta: f64) -> Result<Self> {
        Self::new(rho, u, theta, vec![0.0; order.saturating_sub(2)])
    }

    /// Builds a state from `(rho, u, theta, f_3, ..)`.
    pub fn from_slice(w: &[f64]) -> Result<Self> {
        if w.len() < 3 {
            return Err(Error::Dimension(format!("state vector of length {}", w.len())));
        }
        Self::new(w[0], w[1], w[2], w[3..].to_vec())
    }

    pub fn validate(&self) -> Result<()> {
        if self.order() < MIN_ORDER {
            return Err(Error::InvalidState(format!(
                "order {} below minimum {MIN_ORDER}",
                self.order()
            )));
        }
        if !(self.rho > 0.0) || !(self.theta > 0.0) {
            return Err(Error::DegenerateDistribution { rho: self.rho, theta: self.theta });
        }
        if !self.u.is_finite() || !self.rho.is_finite() || !self.theta.is_finite() {
            return Err(Error::InvalidState("non-finite macroscopic variable".into()));
        }
        if self.f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite higher moment".into()));
        }
        Ok(())
    }

    /// Truncation order `M`; the state has `M + 1` components.
    pub fn order(&self) -> usize {
        self.f.len() + 2
    }

    /// Number of components, `M + 1`.
    pub fn len(&self) -> usize {
        self.f.len() + 3
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Expansion coefficient `f_k` with the index conventions `f_0 = rho`,
    /// `f_1 = f_2 = 0`, and zero for negative indices or `k > M`.
    pub fn moment(&self, k: isize) -> f64 {
        match k {
            0 => self.rho,
            k if k < 3 => 0.0,
            k => self.f.get(k as usize - 3).copied().unwrap_or(0.0),
        }
    }

    /// Heat flux `q = 3 f_3`.
    pub fn heat_flux(&self) -> f64 {
        3.0 * self.moment(3)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len());
        w.extend([self.rho, self.u, self.theta]);
        w.extend_from_slice(&self.f);
        w
    }

    /// Same state seen from a frame moving with velocity `-c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { u: self.u + c, ..self.clone() }
    }

    pub fn to_conservative(&self) -> ConservativeState {
        ConservativeState {
            rho: self.rho,
            momentum: self.rho * self.u,
            energy: 0.5 * self.rho * self.theta + 0.5 * self.rho * self.u * self.u,
            f: self.f.clone(),
        }
    }
}

/// `(rho, rho u, E, f_3, ..., f_M)` with `E = rho theta / 2 + rho u^2 / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservativeState {
    pub rho: f64,
    pub momentum: f64,
    pub energy: f64,
    pub f: Vec<f64>,
}

impl ConservativeState {
    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() < 3 {
            return Err(Error::Dimension(format!("state vector of length {}", v.len())));
        }
        Ok(Self { rho: v[0], momentum: v[1], energy: v[2], f: v[3..].to_vec() })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.f.len() + 3);
        v.extend([self.rho, self.momentum, self.energy]);
        v.extend_from_slice(&self.f);
        v
    }

    pub fn to_primitive(&self) -> Result<PrimitiveMomentState> {
        let kinetic = 0.5 * self.momentum * self.momentum / self.rho;
        if !(self.rho > 0.0) || !(self.energy > kinetic) {
            return Err(Error::Positivity { energy: self.energy, kinetic });
        }
        let u = self.momentum / self.rho;
        let theta = 2.0 * (self.energy - kinetic) / self.rho;
        PrimitiveMomentState::new(self.rho, u, theta, self.f.clone())
    }
}

/// Direction for [`convert_variables`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToConservative,
    ToPrimitive,
}

/// Converts between primitive `(rho, u, theta, f..)` and partially conservative
/// `(rho, rho u, E, f..)` component vectors.
pub fn convert_variables(state: &[f64], direction: Direction) -> Result<Vec<f64>> {
    match direction {
        Direction::ToConservative => {
            Ok(PrimitiveMomentState::from_slice(state)?.to_conservative().to_vec())
        }
        Direction::ToPrimitive => {
            Ok(ConservativeState::from_slice(state)?.to_primitive()?.to_vec())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Outflow,
}

/// Uniform cell-centred grid on `[x_a, x_b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_a: f64,
    pub x_b: f64,
    pub n_x: usize,
    pub boundary: Boundary,
}

impl Grid1D {
    pub fn new(x_a: f64, x_b: f64, n_x: usize, boundary: Boundary) -> Result<Self> {
        if !(x_b > x_a) || !x_a.is_finite() || !x_b.is_finite() {
            return Err(Error::Config(format!("empty domain [{x_a}, {x_b}]")));
        }
        if n_x < 4 {
            return Err(Error::Config(format!("need at least 4 cells, got {n_x}")));
        }
        Ok(Self { x_a, x_b, n_x, boundary })
    }

    pub fn dx(&self) -> f64 {
        (self.x_b - self.x_a) / self.n_x as f64
    }

    pub fn length(&self) -> f64 {
        self.x_b - self.x_a
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_a + (j as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_x).map(|j| self.center(j)).collect()
    }
}
