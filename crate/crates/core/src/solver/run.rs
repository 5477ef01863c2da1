//! Time-step selection and the solve loop.

use serde::Serialize;

use super::scheme::advance;
use super::{Closure, CollisionMode, FieldState, SolverConfig};
use crate::eigen::{eigenvalues, real_spectrum};
use crate::error::{Error, Result};
use crate::state::PrimitiveMomentState;

/// Imaginary-part tolerance when checking a cell spectrum.
const IMAG_TOL: f64 = 1e-8;

fn cell_speed(closure: &Closure, w: &PrimitiveMomentState, cell: usize) -> Result<f64> {
    if let Closure::Ml(net) = closure {
        // the spectrum is u + offsets by construction; a dense eigensolve of
        // a tightly clustered spectrum can report spurious complex pairs
        let off = net.offsets(w)?;
        return Ok(off.values().iter().fold(0.0, |s, o| s.max((w.u + o).abs())));
    }
    let a = closure.matrix(w)?;
    let m = a.as_matrix();
    if closure.requires_real_spectrum() {
        let scale = 1.0 + w.u.abs() + w.theta.sqrt();
        match real_spectrum(m, IMAG_TOL * scale) {
            Ok(v) => Ok(v.iter().fold(0.0, |s, l| s.max(l.abs()))),
            Err(imag) => Err(Error::Hyperbolicity { cell, imag }),
        }
    } else {
        Ok(eigenvalues(m).iter().fold(0.0, |s, (re, im)| s.max(re.hypot(*im))))
    }
}

/// Largest characteristic speed over all cells.
pub fn max_wave_speed(state: &FieldState, closure: &Closure, config: &SolverConfig) -> Result<f64> {
    let speeds = config.execution.try_map(state.grid.n_x, |j| {
        let w = state.primitive(j)?;
        cell_speed(closure, &w, j)
    })?;
    Ok(speeds.into_iter().fold(0.0, f64::max))
}

/// `min(cfl dx / max|lambda|, 0.9 tau)`, the second term only for explicit
/// collisions.
pub fn compute_dt(state: &FieldState, closure: &Closure, config: &SolverConfig) -> Result<f64> {
    let speed = max_wave_speed(state, closure, config)?;
    Ok(dt_from_speed(speed, state, config))
}

fn dt_from_speed(speed: f64, state: &FieldState, config: &SolverConfig) -> f64 {
    let mut dt = if speed > 0.0 { config.cfl * state.grid.dx() / speed } else { f64::INFINITY };
    if config.collision == CollisionMode::Explicit {
        dt = dt.min(0.9 * config.tau);
    }
    dt
}

/// Which states to keep.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputCadence {
    /// Only the final state.
    Final,
    /// The initial state and the first state at or after each time (steps are
    /// shortened to land on them exactly).
    Times(Vec<f64>),
    /// Every step, including the initial state.
    EveryStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub state: FieldState,
}

impl Snapshot {
    pub fn primitives(&self) -> Result<Vec<PrimitiveMomentState>> {
        self.state.primitives()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub time: f64,
    pub cell: Option<usize>,
    pub message: String,
}

impl FailureRecord {
    fn from_error(e: &Error, time: f64) -> Self {
        let cell = match e {
            Error::PositivityLoss { cell, .. }
            | Error::NonFinite { cell, .. }
            | Error::Hyperbolicity { cell, .. } => Some(*cell),
            _ => None,
        };
        Self { time, cell, message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub dt_history: Vec<f64>,
    /// Largest wave speed at the start of each step.
    pub max_speeds: Vec<f64>,
    /// Set when the run stopped early; snapshots up to that point are kept.
    pub failure: Option<FailureRecord>,
    pub steps: usize,
    pub roe_fallbacks: usize,
}

impl RunOutput {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

/// Advances `initial` to `t_final`. Solver failures (positivity, non-finite
/// values, loss of hyperbolicity) end the run and are recorded in the output;
/// only invalid inputs are returned as errors.
pub fn run(
    initial: FieldState,
    closure: &Closure,
    config: &SolverConfig,
    t_final: f64,
    cadence: &OutputCadence,
) -> Result<RunOutput> {
    config.validate()?;
    if !(t_final >= initial.time) || !t_final.is_finite() {
        return Err(Error::Config(format!("final time {t_final} before start {}", initial.time)));
    }
    if let Some(order) = closure.order() {
        if order != initial.order {
            return Err(Error::Dimension(format!(
                "closure order {order} but state order {}",
                initial.order
            )));
        }
    }
    if config.scheme.is_high_order() && initial.grid.n_x < 5 {
        return Err(Error::Config("high-order scheme needs at least 5 cells".into()));
    }
    initial.primitives()?;

    let mut targets: Vec<f64> = match cadence {
        OutputCadence::Times(t) => {
            let mut t: Vec<f64> = t.iter().copied().filter(|&s| s > initial.time && s < t_final).collect();
            t.sort_by(f64::total_cmp);
            t.dedup();
            t
        }
        _ => Vec::new(),
    };
    targets.push(t_final);
    let keep_all = matches!(cadence, OutputCadence::EveryStep);

    let mut out = RunOutput::default();
    if !matches!(cadence, OutputCadence::Final) {
        out.snapshots.push(Snapshot { time: initial.time, state: initial.clone() });
    }
    let mut state = initial;
    let mut next_target = 0;
    let eps = 1e-12 * t_final.abs().max(1.0);

    while next_target < targets.len() {
        let target = targets[next_target];
        if state.time >= target - eps {
            if !keep_all || next_target + 1 == targets.len() {
                push_unique(&mut out.snapshots, &state);
            }
            next_target += 1;
            continue;
        }
        let speed = match max_wave_speed(&state, closure, config) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("run stopped at t = {}: {e}", state.time);
                out.failure = Some(FailureRecord::from_error(&e, state.time));
                break;
            }
        };
        let mut dt = dt_from_speed(speed, &state, config);
        if !dt.is_finite() {
            dt = target - state.time;
        }
        let landing = target - state.time <= dt * (1.0 + 1e-12);
        if landing {
            dt = target - state.time;
        }
        match advance(closure, config, &state, dt) {
            Ok((mut next, fallbacks)) => {
                if landing {
                    next.time = target;
                }
                out.steps += 1;
                out.roe_fallbacks += fallbacks;
                out.dt_history.push(dt);
                out.max_speeds.push(speed);
                state = next;
                if keep_all {
                    out.snapshots.push(Snapshot { time: state.time, state: state.clone() });
                }
            }
            Err(e) => {
                log::warn!("run stopped at t = {}: {e}", state.time);
                out.failure = Some(FailureRecord::from_error(&e, state.time));
                break;
            }
        }
    }
    if out.failure.is_some() {
        push_unique(&mut out.snapshots, &state);
    }
    if out.roe_fallbacks > 0 {
        log::warn!("Roe splitting fell back to FORCE at {} interfaces", out.roe_fallbacks);
    }
    Ok(out)
}

fn push_unique(snapshots: &mut Vec<Snapshot>, state: &FieldState) {
    if snapshots.last().map(|s| s.time) != Some(state.time) {
        snapshots.push(Snapshot { time: state.time, state: state.clone() });
    }
}
