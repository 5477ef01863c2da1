//! Probabilists' Hermite polynomials.
//!
//! Convention: `He_{k+1}(x) = x He_k(x) - k He_{k-1}(x)`, `He_0 = 1`, `He_1 = x`,
//! orthogonal under `exp(-x^2/2)` with `<He_j, He_k> = sqrt(2 pi) k! delta_jk`.
//! The physicists' polynomials `H_k` differ by a factor `2^{k/2}` and an
//! argument scaling; nothing in this crate uses them.

use nalgebra::{DMatrix, SymmetricEigen};

/// `He_k(x)` via the three-term recurrence.
pub fn hermite_eval(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `He_0(x) ..= He_kmax(x)`.
pub fn hermite_all(kmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(1.0);
    if kmax >= 1 {
        out.push(x);
    }
    for j in 1..kmax {
        let next = x * out[j] - j as f64 * out[j - 1];
        out.push(next);
    }
    out
}

/// The `k` simple real roots of `He_k`, sorted increasingly.
///
/// Eigenvalues of the symmetric tridiagonal Jacobi matrix (zero diagonal,
/// off-diagonal `sqrt(j)`), followed by two Newton polishing steps using
/// `He_k' = k He_{k-1}`.
pub fn hermite_roots(k: usize) -> Vec<f64> {
    assert!(k >= 1, "He_0 has no roots");
    if k == 1 {
        return vec![0.0];
    }
    let jacobi = DMatrix::from_fn(k, k, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut roots: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    roots.sort_by(f64::total_cmp);
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let h = hermite_all(k, *r);
            let deriv = k as f64 * h[k - 1];
            if deriv != 0.0 {
                *r -= h[k] / deriv;
            }
        }
    }
    // Enforce exact antisymmetry; the middle root of odd degree is 0.
    for i in 0..k / 2 {
        let m = 0.5 * (roots[k - 1 - i] - roots[i]);
        roots[i] = -m;
        roots[k - 1 - i] = m;
    }
    if k % 2 == 1 {
        roots[k / 2] = 0.0;
    }
    roots
}

/// Connection coefficient `b_{mk}` in `x^m = sum_k b_{mk} He_k(x)`.
///
/// `b_{mk} = m! / (2^j j! k!)` with `j = (m - k)/2` when `m - k` is even, else 0.
pub fn hermite_connection(m: usize, k: usize) -> f64 {
    if k > m || (m - k) % 2 == 1 {
        return 0.0;
    }
    let j = (m - k) / 2;
    // m! / (k! j!) / 2^j, accumulated as a product of ratios.
    let mut value = 1.0;
    for i in 1..=j {
        value *= (k + i) as f64 / (2.0 * i as f64);
    }
    for i in (k + j + 1)..=m {
        value *= i as f64;
    }
    value
}

/// `k!` as a float. Only used for the small orders this crate supports.
pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}
