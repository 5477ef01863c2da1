//! Trajectory directories: one CSV per snapshot plus `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use bgk_closure::PrimitiveMomentState;
use serde::{Deserialize, Serialize};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SnapshotEntry {
    pub step: usize,
    pub time: f64,
    pub file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureEntry {
    pub time: f64,
    pub cell: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// Full echo of the parsed arguments.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub ic_params: Vec<f64>,
    #[serde(default)]
    pub snapshots: Vec<SnapshotEntry>,
    #[serde(default)]
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
    #[serde(default)]
    pub failures: Vec<FailureEntry>,
    #[serde(default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            seeds: Vec::new(),
            tau: None,
            ic_params: Vec::new(),
            snapshots: Vec::new(),
            outputs: Vec::new(),
            wall_clock_s: 0.0,
            failures: Vec::new(),
            extra: serde_json::Map::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(dir.join(MANIFEST), text + "\n").with_context(|| format!("writing manifest in {}", dir.display()))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn header(order: usize) -> Vec<String> {
    let mut h: Vec<String> = ["x", "rho", "u", "theta"].iter().map(|s| s.to_string()).collect();
    h.extend((3..=order).map(|k| format!("f{k}")));
    h
}

pub fn snapshot_name(step: usize) -> String {
    format!("snapshot_{step:05}.csv")
}

/// Writes one snapshot; floats use the shortest round-trip representation so
/// files are reproducible and lossless.
pub fn write_snapshot(path: &Path, x: &[f64], cells: &[PrimitiveMomentState]) -> Result<()> {
    ensure!(x.len() == cells.len(), "{} centres for {} cells", x.len(), cells.len());
    let order = cells.first().map_or(0, |c| c.order());
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header(order))?;
    for (x, c) in x.iter().zip(cells) {
        let mut row = vec![x.to_string()];
        row.extend(c.to_vec().iter().map(f64::to_string));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns of a snapshot CSV by name.
#[derive(Debug, Clone)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for rec in r.records() {
            let rec = rec?;
            ensure!(rec.len() == names.len(), "ragged row in {}", path.display());
            for (c, v) in columns.iter_mut().zip(rec.iter()) {
                c.push(v.trim().parse::<f64>().with_context(|| format!("bad number {v:?} in {}", path.display()))?);
            }
        }
        Ok(Self { names, columns })
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        match self.names.iter().position(|n| n == name) {
            Some(i) => Ok(&self.columns[i]),
            None => bail!("no column {name:?}"),
        }
    }

    /// Primitive states per row, from every column after `x`.
    pub fn states(&self) -> Result<Vec<PrimitiveMomentState>> {
        ensure!(self.names.first().map(String::as_str) == Some("x"), "first column must be x");
        let rows = self.columns.first().map_or(0, Vec::len);
        (0..rows)
            .map(|j| {
                let w: Vec<f64> = self.columns[1..].iter().map(|c| c[j]).collect();
                PrimitiveMomentState::from_slice(&w).with_context(|| format!("row {j}"))
            })
            .collect()
    }
}

pub fn snapshot_path(dir: &Path, entry: &SnapshotEntry) -> PathBuf {
    dir.join(&entry.file)
}
