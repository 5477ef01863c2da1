//! Grad and HME system matrices in primitive variables, and the collision term.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::state::PrimitiveMomentState;

/// The `(M+1) x (M+1)` coefficient matrix `A(w)` of `w_t + A(w) w_x = Q`.
///
/// Always unreduced lower Hessenberg for `rho > 0`: zero above the first
/// superdiagonal, superdiagonal `(rho, 1, 6/rho, 4, 5, ..., M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    entries: DMatrix<f64>,
}

impl SystemMatrix {
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() < 5 {
            return Err(Error::Dimension(format!(
                "system matrix must be square of size >= 5, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries })
    }

    /// Truncation order `M`.
    pub fn order(&self) -> usize {
        self.entries.nrows() - 1
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn last_row(&self) -> Vec<f64> {
        let m = self.order();
        self.entries.row(m).iter().copied().collect()
    }

    pub(crate) fn set_last_row(&mut self, row: &[f64]) {
        let m = self.order();
        for (j, v) in row.iter().enumerate() {
            self.entries[(m, j)] = *v;
        }
    }

    /// `true` when every entry above the first superdiagonal is zero.
    pub fn is_lower_hessenberg(&self) -> bool {
        let n = self.size();
        (0..n).all(|i| (i + 2..n).all(|j| self.entries[(i, j)] == 0.0))
    }

    /// Lower Hessenberg with no zero on the superdiagonal.
    pub fn is_unreduced_lower_hessenberg(&self) -> bool {
        self.is_lower_hessenberg() && (0..self.size() - 1).all(|i| self.entries[(i, i + 1)] != 0.0)
    }

    /// All eigenvalues as `(re, im)` pairs, unsorted.
    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        crate::eigen::eigenvalues(&self.entries)
    }
}

/// Grad's moment system matrix (closure `f_{M+1} = 0`), with `q = 3 f_3`
/// substituted so the matrix depends on `w` only.
pub fn grad_matrix(w: &PrimitiveMomentState) -> SystemMatrix {
    let m = w.order();
    let n = m + 1;
    let (rho, u, theta) = (w.rho, w.u, w.theta);
    let f = |k: usize| w.moment(k as isize);
    let f_signed = |k: isize| w.moment(k);

    let mut a = DMatrix::zeros(n, n);
    a[(0, 0)] = u;
    a[(0, 1)] = rho;
    a[(1, 0)] = theta / rho;
    a[(1, 1)] = u;
    a[(1, 2)] = 1.0;
    a[(2, 1)] = 2.0 * theta;
    a[(2, 2)] = u;
    a[(2, 3)] = 6.0 / rho;
    for k in 3..=m {
        let ki = k as isize;
        a[(k, 0)] += -theta / rho * f_signed(ki - 1);
        a[(k, 1)] += (k + 1) as f64 * f(k);
        a[(k, 2)] += 0.5 * (k as f64 - 1.0) * f_signed(ki - 1) + 0.5 * theta * f_signed(ki - 3);
        a[(k, 3)] += -3.0 / rho * f_signed(ki - 2);
        if k >= 4 {
            a[(k, k - 1)] += theta;
        }
        a[(k, k)] += u;
        if k < m {
            a[(k, k + 1)] = (k + 1) as f64;
        }
    }
    SystemMatrix { entries: a }
}

/// Last row of the Grad matrix; the closure-free base of every other closure.
pub fn grad_last_row(w: &PrimitiveMomentState) -> Vec<f64> {
    grad_matrix(w).last_row()
}

/// Last row of the HME regularisation: the `(M+1) f_M` entry vanishes and the
/// theta-gradient entry becomes `-f_{M-1} + theta/2 f_{M-3}`.
pub fn hme_last_row(w: &PrimitiveMomentState) -> Vec<f64> {
    let m = w.order() as isize;
    let mut row = grad_last_row(w);
    row[1] = 0.0;
    row[2] = -w.moment(m - 1) + 0.5 * w.theta * w.moment(m - 3);
    row
}

/// Hyperbolic moment equations: Grad's matrix with the regularised last row.
pub fn hme_matrix(w: &PrimitiveMomentState) -> SystemMatrix {
    let mut a = grad_matrix(w);
    a.set_last_row(&hme_last_row(w));
    a
}

/// BGK collision term `(0, 0, 0, -f_3/tau, ..., -f_M/tau)`.
pub fn collision_source(w: &PrimitiveMomentState, tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidRelaxation(tau));
    }
    let mut q = vec![0.0; w.len()];
    for (qk, fk) in q[3..].iter_mut().zip(&w.f) {
        *qk = -fk / tau;
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite_roots;
    use proptest::prelude::*;

    fn sorted_real(m: &SystemMatrix) -> Vec<f64> {
        let mut ev: Vec<f64> = m.eigenvalues().iter().map(|e| e.0).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn random_state(order: usize, seed: &[f64]) -> PrimitiveMomentState {
        let f = (0..order - 2).map(|i| 0.1 * seed[(i + 3) % seed.len()]).collect();
        PrimitiveMomentState::new(0.5 + seed[0].abs(), seed[1], 0.3 + seed[2].abs(), f).unwrap()
    }

    #[test]
    fn equilibrium_grad_entries() {
        let w = PrimitiveMomentState::equilibrium(4, 1.0, 0.0, 1.0).unwrap();
        let a = grad_matrix(&w);
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.get(1, 0), 1.0);
        assert_eq!(a.get(1, 2), 1.0);
        assert_eq!(a.get(2, 3), 6.0);
        assert_eq!(a.get(3, 2), 0.5);
        for i in 0..5 {
            assert_eq!(a.get(i, i), 0.0);
        }
        assert!(a.is_unreduced_lower_hessenberg());
    }

    #[test]
    fn heat_flux_enters_row_four() {
        let w = PrimitiveMomentState::new(1.0, 0.0, 1.0, vec![0.1, 0.0]).unwrap();
        let a = grad_matrix(&w);
        assert!((a.get(3, 1) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn superdiagonal_pattern() {
        let w = PrimitiveMomentState::new(2.0, 0.3, 0.7, vec![0.1; 7]).unwrap();
        let a = grad_matrix(&w);
        assert_eq!(a.get(0, 1), 2.0);
        assert_eq!(a.get(1, 2), 1.0);
        assert_eq!(a.get(2, 3), 3.0);
        for k in 3..a.order() {
            assert_eq!(a.get(k, k + 1), (k + 1) as f64);
        }
        assert!(hme_matrix(&w).is_unreduced_lower_hessenberg());
    }

    #[test]
    fn general_rows_match_the_explicit_matrix() {
        // rows 4..=6 written out entry by entry
        let w = PrimitiveMomentState::new(1.3, 0.2, 0.8, vec![0.11, -0.07, 0.05, 0.03]).unwrap();
        let (rho, theta) = (w.rho, w.theta);
        let f = |k| w.moment(k);
        let a = grad_matrix(&w);
        let close = |x: f64, y: f64| (x - y).abs() < 1e-15;
        assert!(close(a.get(4, 0), -theta / rho * f(3)));
        assert!(close(a.get(4, 1), 5.0 * f(4)));
        assert!(close(a.get(4, 2), 1.5 * f(3)));
        assert!(close(a.get(4, 3), theta));
        assert!(close(a.get(5, 2), 2.0 * f(4)));
        assert!(close(a.get(5, 3), -3.0 / rho * f(3)));
        assert!(close(a.get(5, 4), theta));
        assert!(close(a.get(6, 2), 0.5 * theta * f(3) + 2.5 * f(5)));
        assert!(close(a.get(6, 3), -3.0 / rho * f(4)));
        assert_eq!(a.get(6, 4), 0.0);
        assert!(close(a.get(6, 5), theta));
    }

    #[test]
    fn hme_last_row_at_equilibrium() {
        let w = PrimitiveMomentState::equilibrium(4, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(hme_last_row(&w), vec![0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn hme_equilibrium_spectrum_is_hermite_roots() {
        for order in 4..=12 {
            let (u, theta) = (0.37, 1.9);
            let w = PrimitiveMomentState::equilibrium(order, 0.8, u, theta).unwrap();
            let ev = sorted_real(&hme_matrix(&w));
            let roots = hermite_roots(order + 1);
            for (e, r) in ev.iter().zip(&roots) {
                assert!((e - (u + theta.sqrt() * r)).abs() < 1e-10, "order {order}");
            }
        }
    }

    #[test]
    fn collision_term() {
        let w = PrimitiveMomentState::equilibrium(5, 1.0, 0.0, 1.0).unwrap();
        assert!(collision_source(&w, 1.0).unwrap().iter().all(|&q| q == 0.0));
        let w = PrimitiveMomentState::new(1.0, 0.0, 1.0, vec![0.2, 0.0]).unwrap();
        assert!((collision_source(&w, 0.1).unwrap()[3] + 2.0).abs() < 1e-15);
        assert!(matches!(collision_source(&w, 0.0), Err(Error::InvalidRelaxation(_))));
    }

    proptest! {
        #[test]
        fn galilean_shift_adds_identity(
            seed in proptest::collection::vec(-1.0f64..1.0, 6),
            order in 4usize..=10,
            c in -2.0f64..2.0,
        ) {
            let w = random_state(order, &seed);
            for build in [grad_matrix, hme_matrix] {
                let a = build(&w).into_matrix();
                let b = build(&w.shifted(c)).into_matrix();
                let diff = b - a;
                for i in 0..=order {
                    for j in 0..=order {
                        let want = if i == j { c } else { 0.0 };
                        prop_assert!((diff[(i, j)] - want).abs() < 1e-13);
                    }
                }
            }
        }

        #[test]
        fn hme_is_hyperbolic_away_from_equilibrium(
            seed in proptest::collection::vec(-1.0f64..1.0, 6),
            order in 4usize..=8,
        ) {
            let w = random_state(order, &seed);
            let a = hme_matrix(&w);
            prop_assert!(a.is_unreduced_lower_hessenberg());
            let ev = a.eigenvalues();
            let mut re: Vec<f64> = ev.iter().map(|e| e.0).collect();
            re.sort_by(f64::total_cmp);
            for e in &ev {
                prop_assert!(e.1.abs() < 1e-8);
            }
            for pair in re.windows(2) {
                prop_assert!(pair[1] - pair[0] > 1e-6);
            }
        }
    }
}
