//! IMEX Runge-Kutta tableaux.

/// Paired explicit/implicit Butcher tableaux. Row 0 of the implicit part is
/// zero (explicit first stage); both parts are stiffly accurate, so the last
/// stage is the step result.
#[derive(Debug, Clone, PartialEq)]
pub struct ImexTableau {
    pub explicit: Vec<Vec<f64>>,
    pub implicit: Vec<Vec<f64>>,
    pub c: Vec<f64>,
}

impl ImexTableau {
    pub fn stages(&self) -> usize {
        self.c.len()
    }

    /// Weights: the last rows, padded with the final column.
    pub fn explicit_weights(&self) -> Vec<f64> {
        let s = self.stages();
        let mut b = self.explicit[s - 1].clone();
        b.resize(s, 0.0);
        b
    }

    pub fn implicit_weights(&self) -> Vec<f64> {
        let s = self.stages();
        let mut b = self.implicit[s - 1].clone();
        b.resize(s, 0.0);
        b
    }

    fn entry(rows: &[Vec<f64>], i: usize, j: usize) -> f64 {
        rows[i].get(j).copied().unwrap_or(0.0)
    }

    pub fn explicit_entry(&self, i: usize, j: usize) -> f64 {
        Self::entry(&self.explicit, i, j)
    }

    pub fn implicit_entry(&self, i: usize, j: usize) -> f64 {
        Self::entry(&self.implicit, i, j)
    }
}

/// ARS(4,4,3) of Ascher, Ruuth and Spiteri, written as a 5-stage pair.
pub static ARS443: std::sync::LazyLock<ImexTableau> = std::sync::LazyLock::new(|| ImexTableau {
    explicit: vec![
        vec![0.0],
        vec![0.5, 0.0],
        vec![11.0 / 18.0, 1.0 / 18.0, 0.0],
        vec![5.0 / 6.0, -5.0 / 6.0, 0.5, 0.0],
        vec![0.25, 1.75, 0.75, -1.75, 0.0],
    ],
    implicit: vec![
        vec![0.0],
        vec![0.0, 0.5],
        vec![0.0, 1.0 / 6.0, 0.5],
        vec![0.0, -0.5, 0.5, 0.5],
        vec![0.0, 1.5, -1.5, 0.5, 0.5],
    ],
    c: vec![0.0, 0.5, 2.0 / 3.0, 0.5, 1.0],
});
