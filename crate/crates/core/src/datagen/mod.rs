//! Random initial conditions, trajectory generation with the HME or kinetic
//! solver, and spatial gradients of the saved moments.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic::{run_dvm, DvmConfig, KineticField, VelocityGrid};
use crate::moments::{maxwellian, moments_from_distribution};
use crate::parallel::Execution;
use crate::solver::{run, Closure, CollisionMode, FieldState, OutputCadence, Scheme, SolverConfig};
use crate::state::{Boundary, Grid1D, PrimitiveMomentState};

mod dataset;

pub use dataset::{read_dataset, write_dataset, Generator, TrajectoryDataset, TrajectoryRecord};

/// Regulariser in the denominator of the two-Maxwellian blend.
pub const BLEND_EPS: f64 = 1e-6;

pub const AMPLITUDE_RANGE: (f64, f64) = (0.2, 0.3);
pub const OFFSET_RANGE: (f64, f64) = (0.5, 0.7);
pub const WAVENUMBERS: [u32; 4] = [1, 2, 3, 4];
pub const PHASE_RANGE: (f64, f64) = (0.0, 2.0 * PI);
pub const KNUDSEN_RANGE: (f64, f64) = (1e-3, 10.0);

/// `a sin(2 k pi x / L + psi) + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub offset: f64,
    pub wavenumber: u32,
    pub phase: f64,
}

impl Sinusoid {
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        self.amplitude * (2.0 * self.wavenumber as f64 * PI * x / length + self.phase).sin() + self.offset
    }

    fn sample(rng: &mut impl Rng) -> Self {
        Self {
            amplitude: rng.random_range(AMPLITUDE_RANGE.0..=AMPLITUDE_RANGE.1),
            offset: rng.random_range(OFFSET_RANGE.0..=OFFSET_RANGE.1),
            wavenumber: WAVENUMBERS[rng.random_range(0..WAVENUMBERS.len())],
            phase: rng.random_range(PHASE_RANGE.0..=PHASE_RANGE.1),
        }
    }

    pub fn in_sampling_ranges(&self) -> bool {
        let within = |v: f64, (lo, hi): (f64, f64)| (lo..=hi).contains(&v);
        within(self.amplitude, AMPLITUDE_RANGE)
            && within(self.offset, OFFSET_RANGE)
            && WAVENUMBERS.contains(&self.wavenumber)
            && within(self.phase, PHASE_RANGE)
    }

    fn to_vec(self) -> [f64; 4] {
        [self.amplitude, self.offset, self.wavenumber as f64, self.phase]
    }
}

/// One macroscopic draw; the velocity is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroDraw {
    pub rho: Sinusoid,
    pub theta: Sinusoid,
}

/// Two macroscopic draws whose Maxwellians are blended with weights `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub draws: [MacroDraw; 2],
    pub alpha: [f64; 2],
}

impl WaveParams {
    pub fn sample(rng: &mut impl Rng) -> Self {
        let draw = |rng: &mut _| MacroDraw { rho: Sinusoid::sample(rng), theta: Sinusoid::sample(rng) };
        let draws = [draw(rng), draw(rng)];
        let alpha = [rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0)];
        Self { draws, alpha }
    }

    pub fn in_sampling_ranges(&self) -> bool {
        self.draws.iter().all(|d| d.rho.in_sampling_ranges() && d.theta.in_sampling_ranges())
            && self.alpha.iter().all(|a| (0.0..=1.0).contains(a))
    }

    fn denominator(&self) -> f64 {
        self.alpha[0] + self.alpha[1] + BLEND_EPS
    }

    /// `f_wave(x, v)`.
    pub fn distribution(&self, x: f64, v: f64, length: f64) -> f64 {
        let mut acc = 0.0;
        for (d, a) in self.draws.iter().zip(self.alpha) {
            acc += a * maxwellian(d.rho.eval(x, length), 0.0, d.theta.eval(x, length), v);
        }
        acc / self.denominator()
    }

    /// Density of the blend.
    pub fn density(&self, x: f64, length: f64) -> f64 {
        let s: f64 = self.draws.iter().zip(self.alpha).map(|(d, a)| a * d.rho.eval(x, length)).sum();
        s / self.denominator()
    }

    /// Temperature of the blend (both components are at rest).
    pub fn temperature(&self, x: f64, length: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (d, a) in self.draws.iter().zip(self.alpha) {
            let r = a * d.rho.eval(x, length);
            num += r * d.theta.eval(x, length);
            den += r;
        }
        num / den
    }

    pub fn field(&self, grid: Grid1D, velocity: VelocityGrid) -> Result<KineticField> {
        let length = grid.length();
        KineticField::from_fn(grid, velocity, |x, v| self.distribution(x, v, length))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(18);
        for d in &self.draws {
            out.extend(d.rho.to_vec());
            out.extend(d.theta.to_vec());
        }
        out.extend(self.alpha);
        out
    }
}

/// A Riemann problem on an interval: left state inside `[x1, x2]`, right
/// state outside, both at rest. Positions are fractions of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockParams {
    pub x1: f64,
    pub x2: f64,
    pub rho_l: f64,
    pub theta_l: f64,
    pub rho_r: f64,
    pub theta_r: f64,
}

impl ShockParams {
    pub fn sample(rng: &mut impl Rng) -> Self {
        Self {
            x1: rng.random_range(0.2..=0.4),
            x2: rng.random_range(0.6..=0.8),
            rho_l: rng.random_range(1.0..=2.0),
            theta_l: rng.random_range(1.0..=2.0),
            rho_r: rng.random_range(0.55..=0.9),
            theta_r: rng.random_range(0.55..=0.9),
        }
    }

    pub fn in_sampling_ranges(&self) -> bool {
        (0.2..=0.4).contains(&self.x1)
            && (0.6..=0.8).contains(&self.x2)
            && (1.0..=2.0).contains(&self.rho_l)
            && (1.0..=2.0).contains(&self.theta_l)
            && (0.55..=0.9).contains(&self.rho_r)
            && (0.55..=0.9).contains(&self.theta_r)
    }

    /// `f_shock` at a point with domain fraction `s`.
    pub fn distribution(&self, s: f64, v: f64) -> f64 {
        if (self.x1..=self.x2).contains(&s) {
            maxwellian(self.rho_l, 0.0, self.theta_l, v)
        } else {
            maxwellian(self.rho_r, 0.0, self.theta_r, v)
        }
    }
}

/// `alpha f_wave + (1 - alpha) f_shock`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixParams {
    pub wave: WaveParams,
    pub shock: ShockParams,
    pub alpha: f64,
}

impl MixParams {
    pub fn sample(rng: &mut impl Rng) -> Self {
        let wave = WaveParams::sample(rng);
        let shock = ShockParams::sample(rng);
        Self { wave, shock, alpha: rng.random_range(0.2..=0.4) }
    }

    pub fn in_sampling_ranges(&self) -> bool {
        self.wave.in_sampling_ranges() && self.shock.in_sampling_ranges() && (0.2..=0.4).contains(&self.alpha)
    }

    pub fn field(&self, grid: Grid1D, velocity: VelocityGrid) -> Result<KineticField> {
        let (x_a, length) = (grid.x_a, grid.length());
        KineticField::from_fn(grid, velocity, |x, v| {
            self.alpha * self.wave.distribution(x, v, length)
                + (1.0 - self.alpha) * self.shock.distribution((x - x_a) / length, v)
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = self.wave.to_vec();
        let s = &self.shock;
        out.extend([s.x1, s.x2, s.rho_l, s.theta_l, s.rho_r, s.theta_r, self.alpha]);
        out
    }
}

pub fn sample_wave_ic(rng: &mut impl Rng, grid: Grid1D, velocity: VelocityGrid) -> Result<(WaveParams, KineticField)> {
    let p = WaveParams::sample(rng);
    Ok((p, p.field(grid, velocity)?))
}

pub fn sample_mix_ic(rng: &mut impl Rng, grid: Grid1D, velocity: VelocityGrid) -> Result<(MixParams, KineticField)> {
    let p = MixParams::sample(rng);
    Ok((p, p.field(grid, velocity)?))
}

/// `tau = 10^s` with `s` uniform on `[log10 lo, log10 hi]`.
pub fn sample_knudsen(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    10f64.powf(rng.random_range(lo.log10()..=hi.log10()))
}

/// Fourth-order central differences with periodic wrap.
pub fn compute_gradients(values: &[f64], dx: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 5 {
        return Err(Error::Dimension(format!("{n} points; gradients need at least 5")));
    }
    let at = |j: isize| values[j.rem_euclid(n as isize) as usize];
    Ok((0..n as isize)
        .map(|j| (at(j - 2) - 8.0 * at(j - 1) + 8.0 * at(j + 1) - at(j + 2)) / (12.0 * dx))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcKind {
    Wave,
    Mix,
}

/// Initial-condition parameters of either family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IcParams {
    Wave(WaveParams),
    Mix(MixParams),
}

impl IcParams {
    pub fn field(&self, grid: Grid1D, velocity: VelocityGrid) -> Result<KineticField> {
        match self {
            IcParams::Wave(p) => p.field(grid, velocity),
            IcParams::Mix(p) => p.field(grid, velocity),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            IcParams::Wave(p) => p.to_vec(),
            IcParams::Mix(p) => p.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub generator: Generator,
    pub kind: IcKind,
    /// Truncation order `M`; moments up to `f_{M+1}` are stored.
    pub order: usize,
    pub grid: Grid1D,
    pub velocity: VelocityGrid,
    pub t_final: f64,
    /// Saved times are `k t_final / n_times`, `k = 1..=n_times`.
    pub n_times: usize,
    pub n_ics: usize,
    pub knudsen_range: (f64, f64),
    pub seed: u64,
    /// Scheme of the moment solver when `generator` is HME.
    pub scheme: Scheme,
    pub collision: CollisionMode,
    pub execution: Execution,
}

impl GenerationConfig {
    /// HME data on `[-1/2, 1/2]`, 256 cells, 320 times up to `t = 10`.
    pub fn hme(order: usize, n_ics: usize, seed: u64) -> Self {
        Self {
            generator: Generator::Hme,
            kind: IcKind::Wave,
            order,
            grid: Grid1D::new(-0.5, 0.5, 256, Boundary::Periodic).expect("valid grid"),
            velocity: VelocityGrid::default(),
            t_final: 10.0,
            n_times: 320,
            n_ics,
            knudsen_range: KNUDSEN_RANGE,
            seed,
            scheme: Scheme::HighOrderRoe,
            collision: CollisionMode::Explicit,
            execution: Execution::Parallel,
        }
    }

    /// Kinetic data on `[0, 1]`, 256 cells, 1000 times up to `t = 1`.
    pub fn kinetic(order: usize, n_ics: usize, seed: u64) -> Self {
        Self {
            generator: Generator::Dvm,
            grid: Grid1D::new(0.0, 1.0, 256, Boundary::Periodic).expect("valid grid"),
            t_final: 1.0,
            n_times: 1000,
            ..Self::hme(order, n_ics, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < crate::state::MIN_ORDER {
            return Err(Error::Config(format!("order {} below minimum", self.order)));
        }
        if self.grid.boundary != Boundary::Periodic {
            return Err(Error::Config("dataset gradients need a periodic grid".into()));
        }
        if self.n_times == 0 || !(self.t_final > 0.0) {
            return Err(Error::Config("need a positive final time and at least one sample".into()));
        }
        let (lo, hi) = self.knudsen_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::Config("invalid Knudsen range".into()));
        }
        Ok(())
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (1..=self.n_times).map(|k| k as f64 * self.t_final / self.n_times as f64).collect()
    }
}

/// Per-IC seeds drawn from the master seed.
pub fn ic_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..n).map(|_| rng.random()).collect()
}

/// `(tau, parameters)` of the IC with seed `seed`.
pub fn draw_ic(seed: u64, kind: IcKind, knudsen_range: (f64, f64)) -> (f64, IcParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = sample_knudsen(&mut rng, knudsen_range);
    let params = match kind {
        IcKind::Wave => IcParams::Wave(WaveParams::sample(&mut rng)),
        IcKind::Mix => IcParams::Mix(MixParams::sample(&mut rng)),
    };
    (tau, params)
}

/// An initial condition that could not be generated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationFailure {
    pub index: usize,
    pub seed: u64,
    pub tau: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationReport {
    pub dataset: TrajectoryDataset,
    pub failures: Vec<GenerationFailure>,
}

/// Generates `config.n_ics` trajectories, in parallel over initial
/// conditions. Failed ICs are reported and left out of the dataset.
pub fn generate(config: &GenerationConfig) -> Result<GenerationReport> {
    config.validate()?;
    let seeds = ic_seeds(config.seed, config.n_ics);
    let times = config.sample_times();
    let results = config.execution.map(seeds.len(), |i| {
        let (tau, params) = draw_ic(seeds[i], config.kind, config.knudsen_range);
        let record = generate_one(config, &times, tau, &params).map(|(moments, gradients)| TrajectoryRecord {
            seed: seeds[i],
            tau,
            params: params.to_vec(),
            times: times.clone(),
            moments,
            gradients,
        });
        (i, tau, record)
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (index, tau, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                log::warn!("initial condition {index} (tau = {tau:e}) failed: {e}");
                failures.push(GenerationFailure { index, seed: seeds[index], tau, message: e.to_string() });
            }
        }
    }
    let dataset = TrajectoryDataset {
        generator: config.generator,
        order: config.order,
        grid: config.grid,
        seed: config.seed,
        records,
    };
    Ok(GenerationReport { dataset, failures })
}

/// Moments `[t][k][x]` for `k = 0..=M+1` (slots 0, 1, 2 hold `rho, u,
/// theta`) and their gradients.
fn generate_one(
    config: &GenerationConfig,
    times: &[f64],
    tau: f64,
    params: &IcParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let field = params.field(config.grid, config.velocity.clone())?;
    let order = config.order;
    let snapshots: Vec<Vec<PrimitiveMomentState>> = match config.generator {
        Generator::Dvm => {
            let mut dvm = DvmConfig::new(tau);
            dvm.execution = Execution::Sequential;
            run_dvm(field, &dvm, config.t_final, times, order + 1)?.moments
        }
        Generator::Hme => {
            let cells = config.execution.try_map(config.grid.n_x, |j| {
                moments_from_distribution(field.cell(j), &field.velocity, order)
            })?;
            let initial = FieldState::from_primitives(config.grid, &cells)?;
            let mut sc = SolverConfig::new(config.scheme, tau);
            sc.collision = config.collision;
            sc.execution = Execution::Sequential;
            let out = run(initial, &Closure::Hme, &sc, config.t_final, &OutputCadence::Times(times.to_vec()))?;
            if let Some(f) = out.failure {
                return Err(Error::Config(format!("solver failure at t = {}: {}", f.time, f.message)));
            }
            // drop the initial snapshot
            out.snapshots[1..].iter().map(|s| s.primitives()).collect::<Result<_>>()?
        }
    };
    if snapshots.len() != times.len() {
        return Err(Error::Dimension(format!("{} snapshots for {} times", snapshots.len(), times.len())));
    }
    let n_x = config.grid.n_x;
    let dx = config.grid.dx();
    let slots = order + 2;
    let mut moments = Vec::with_capacity(times.len() * slots * n_x);
    let mut gradients = Vec::with_capacity(moments.capacity());
    for cells in &snapshots {
        let mut block = vec![0.0; slots * n_x];
        for (j, w) in cells.iter().enumerate() {
            block[j] = w.rho;
            block[n_x + j] = w.u;
            block[2 * n_x + j] = w.theta;
            for (k, f) in w.f.iter().enumerate() {
                block[(3 + k) * n_x + j] = *f;
            }
        }
        let mut grads = Vec::with_capacity(slots * n_x);
        for k in 0..slots {
            grads.extend(compute_gradients(&block[k * n_x..(k + 1) * n_x], dx)?);
        }
        if config.generator == Generator::Hme {
            // HME closing moment: f_{M+1} = 0 and its gradient from the
            // regularisation, -f_M u_x - f_{M-1} theta_x / 2.
            let last = (order + 1) * n_x;
            for j in 0..n_x {
                let (f_m, f_m1) = (block[order * n_x + j], block[(order - 1) * n_x + j]);
                let (u_x, theta_x) = (grads[n_x + j], grads[2 * n_x + j]);
                block[last + j] = 0.0;
                grads[last + j] = -f_m * u_x - 0.5 * f_m1 * theta_x;
            }
        }
        moments.extend(block);
        gradients.extend(grads);
    }
    Ok((moments, gradients))
}

#[cfg(test)]
mod tests;
