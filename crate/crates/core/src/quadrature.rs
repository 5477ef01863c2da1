//! Quadrature rules on the unit interval and reference cell.

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss-Legendre rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule via Golub-Welsch, mapped from `[-1, 1]` to `[0, 1]`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i.abs_diff(j) == 1 {
                let k = i.max(j) as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // symmetrize so that odd moments about 1/2 cancel exactly
        for i in 0..n / 2 {
            let x = 0.5 * (pairs[n - 1 - i].0 - pairs[i].0);
            let w = 0.5 * (pairs[n - 1 - i].1 + pairs[i].1);
            pairs[i] = (-x, w);
            pairs[n - 1 - i] = (x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self {
            nodes: pairs.iter().map(|p| 0.5 * (p.0 + 1.0)).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Approximates `int_0^1 f`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// Approximates the average of `f` over `[a, b]`.
    pub fn average(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.integrate(|s| f(a + (b - a) * s))
    }
}

/// Four-point Gauss-Lobatto nodes on the unit cell `[-1/2, 1/2]`.
pub const LOBATTO_NODES: [f64; 4] = [
    -0.5,
    -0.223_606_797_749_978_97, // -1 / (2 sqrt 5)
    0.223_606_797_749_978_97,
    0.5,
];

/// Matching weights; they sum to one so the rule gives the cell average.
pub const LOBATTO_WEIGHTS: [f64; 4] = [1.0 / 12.0, 5.0 / 12.0, 5.0 / 12.0, 1.0 / 12.0];

/// Derivative at each Lobatto node of the cubic through the nodal values,
/// per unit of the reference coordinate.
pub fn lobatto_derivative_matrix() -> [[f64; 4]; 4] {
    let x = LOBATTO_NODES;
    let mut d = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            if i == j {
                d[i][j] = (0..4).filter(|&k| k != i).map(|k| 1.0 / (x[i] - x[k])).sum();
            } else {
                let mut num = 1.0;
                let mut den = 1.0;
                for k in 0..4 {
                    if k != j {
                        den *= x[j] - x[k];
                    }
                    if k != j && k != i {
                        num *= x[i] - x[k];
                    }
                }
                d[i][j] = num / den;
            }
        }
    }
    d
}
