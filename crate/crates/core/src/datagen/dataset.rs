//! BGKD trajectory datasets.
//!
//! Layout (little-endian): magic `BGKD`, `u32` version, then the metadata
//! block `u8 generator, u32 M, f64 x_a, f64 x_b, u32 N_x, u8 boundary,
//! u64 seed, u32 record count`, then per record `u64 seed, f64 tau,
//! u32 n_params, params, u32 n_times, times, moments, gradients` and a
//! trailing CRC32 of everything before it. Moments and gradients are
//! `[t][k][x]` with `k = 0..=M+1`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::codec::{Reader, Writer};
use crate::error::{FormatError, Result};
use crate::state::{Boundary, Grid1D};

const MAGIC: &[u8; 4] = b"BGKD";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Hme,
    Dvm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub tau: f64,
    /// Flattened initial-condition parameters.
    pub params: Vec<f64>,
    pub times: Vec<f64>,
    pub moments: Vec<f64>,
    pub gradients: Vec<f64>,
}

impl TrajectoryRecord {
    /// Moment slot `k` at time index `t`.
    pub fn moment(&self, t: usize, k: usize, n_x: usize, order: usize) -> &[f64] {
        let base = (t * (order + 2) + k) * n_x;
        &self.moments[base..base + n_x]
    }

    pub fn gradient(&self, t: usize, k: usize, n_x: usize, order: usize) -> &[f64] {
        let base = (t * (order + 2) + k) * n_x;
        &self.gradients[base..base + n_x]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    pub generator: Generator,
    pub order: usize,
    pub grid: Grid1D,
    pub seed: u64,
    pub records: Vec<TrajectoryRecord>,
}

impl TrajectoryDataset {
    /// Values per saved time.
    pub fn block_len(&self) -> usize {
        (self.order + 2) * self.grid.n_x
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        for (i, r) in self.records.iter().enumerate() {
            let n = r.times.len() * self.block_len();
            if r.moments.len() != n || r.gradients.len() != n {
                return Err(FormatError::Dimension(format!(
                    "record {i}: {} moments and {} gradients for {} times",
                    r.moments.len(),
                    r.gradients.len(),
                    r.times.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, FormatError> {
        self.validate()?;
        let mut w = Writer::new(MAGIC, VERSION);
        w.u8(match self.generator {
            Generator::Hme => 0,
            Generator::Dvm => 1,
        });
        w.len_u32(self.order);
        w.f64(self.grid.x_a);
        w.f64(self.grid.x_b);
        w.len_u32(self.grid.n_x);
        w.u8(match self.grid.boundary {
            Boundary::Periodic => 0,
            Boundary::Outflow => 1,
        });
        w.u64(self.seed);
        w.len_u32(self.records.len());
        for r in &self.records {
            w.u64(r.seed);
            w.f64(r.tau);
            w.len_u32(r.params.len());
            w.f64s(&r.params);
            w.len_u32(r.times.len());
            w.f64s(&r.times);
            w.f64s(&r.moments);
            w.f64s(&r.gradients);
        }
        Ok(w.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let (mut r, crc) = Reader::open(bytes, MAGIC, VERSION)?;
        let generator = match r.u8("generator")? {
            0 => Generator::Hme,
            1 => Generator::Dvm,
            t => return Err(FormatError::Invalid(format!("generator tag {t}"))),
        };
        let order = r.u32("order")? as usize;
        let x_a = r.finite("x_a")?;
        let x_b = r.finite("x_b")?;
        let n_x = r.u32("n_x")? as usize;
        let boundary = match r.u8("boundary")? {
            0 => Boundary::Periodic,
            1 => Boundary::Outflow,
            t => return Err(FormatError::Invalid(format!("boundary tag {t}"))),
        };
        let grid = Grid1D::new(x_a, x_b, n_x, boundary).map_err(|e| FormatError::Invalid(e.to_string()))?;
        let seed = r.u64("seed")?;
        let n_records = r.u32("record count")? as usize;
        let block = (order + 2).saturating_mul(n_x);
        let mut records = Vec::new();
        for _ in 0..n_records {
            let seed = r.u64("record seed")?;
            let tau = r.finite("tau")?;
            let n_params = r.u32("parameter count")? as usize;
            let params = r.finite_vec(n_params, "parameters")?;
            let n_times = r.u32("time count")? as usize;
            let times = r.finite_vec(n_times, "times")?;
            let moments = r.finite_vec(n_times.saturating_mul(block), "moments")?;
            let gradients = r.finite_vec(n_times.saturating_mul(block), "gradients")?;
            records.push(TrajectoryRecord { seed, tau, params, times, moments, gradients });
        }
        r.finish(crc)?;
        Ok(Self { generator, order, grid, seed, records })
    }
}

pub fn write_dataset(dataset: &TrajectoryDataset, mut stream: impl Write) -> Result<()> {
    stream.write_all(&dataset.to_bytes()?)?;
    Ok(())
}

/// Reads a whole BGKD stream; nothing is returned unless every check passes.
pub fn read_dataset(mut stream: impl Read) -> Result<TrajectoryDataset> {
    let mut bytes = Vec::new();
    stream.read_to_end(&mut bytes)?;
    Ok(TrajectoryDataset::from_bytes(&bytes)?)
}
