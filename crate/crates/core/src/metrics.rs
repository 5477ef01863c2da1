//! Error norms used to compare runs.

use crate::error::{Error, Result};

/// `||a - b||_2 / ||b||_2`, with `b` the reference.
pub fn relative_l2(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("{} values against {}", a.len(), b.len())));
    }
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let norm: f64 = b.iter().map(|y| y * y).sum();
    if norm == 0.0 {
        return Err(Error::InvalidState("reference field is identically zero".into()));
    }
    Ok((diff / norm).sqrt())
}

/// `sum_j |v_{j+1} - v_j|`, wrapping around when `periodic`.
pub fn total_variation(v: &[f64], periodic: bool) -> f64 {
    let mut tv: f64 = v.windows(2).map(|p| (p[1] - p[0]).abs()).sum();
    if periodic && v.len() > 1 {
        tv += (v[0] - v[v.len() - 1]).abs();
    }
    tv
}
