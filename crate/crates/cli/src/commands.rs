use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use bgk_closure::datagen::{
    self, draw_ic, generate, ic_seeds, write_dataset, GenerationConfig, Generator, IcKind, IcParams,
};
use bgk_closure::kinetic::{run_dvm_with, DvmConfig, DvmScheme, KineticField, VelocityGrid};
use bgk_closure::metrics::relative_l2;
use bgk_closure::moments::moments_from_distribution;
use bgk_closure::network::load_weights;
use bgk_closure::solver::{
    run, CollisionMode, FieldState, OutputCadence, Path as IntegrationPath, PathBranch, Scheme, SolverConfig,
};
use bgk_closure::{Boundary, Closure, Execution, Grid1D, PrimitiveMomentState};

use crate::output::{snapshot_name, snapshot_path, write_snapshot, FailureEntry, Manifest, SnapshotEntry, Table};
use crate::{
    AuditArgs, ClosureArg, CollisionArg, Command, CompareArgs, DvmArgs, DvmSchemeArg, GenDataArgs, GeneratorArg,
    IcArg, PathArg, ProblemArgs, SchemeArg, SolveArgs, Status,
};

pub fn dispatch(cli: &crate::Cli) -> Result<Status> {
    let config = serde_json::to_value(&cli.command)?;
    match &cli.command {
        Command::GenData(a) => gen_data(a, config),
        Command::Solve(a) => solve(a, config),
        Command::Dvm(a) => dvm(a, config),
        Command::Compare(a) => compare(a, config),
        Command::EigenAudit(a) => eigen_audit(a, config),
    }
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Roe => Scheme::Roe,
            SchemeArg::LaxFriedrichs => Scheme::LaxFriedrichs,
            SchemeArg::Force => Scheme::Force,
            SchemeArg::HighOrderRoe => Scheme::HighOrderRoe,
            SchemeArg::HighOrderForce => Scheme::HighOrderForce,
        }
    }
}

impl From<IcArg> for IcKind {
    fn from(k: IcArg) -> Self {
        match k {
            IcArg::Wave => IcKind::Wave,
            IcArg::Mix => IcKind::Mix,
        }
    }
}

fn build_closure(kind: ClosureArg, weights: Option<&Path>, order: Option<usize>) -> Result<Closure> {
    let learned = matches!(kind, ClosureArg::Ml | ClosureArg::MlNonhyperbolic);
    let closure = match (learned, weights) {
        (false, Some(_)) => bail!("--weights only applies to the learned closures"),
        (true, None) => bail!("the learned closures need --weights"),
        (false, None) => match kind {
            ClosureArg::Grad => Closure::Grad,
            _ => Closure::Hme,
        },
        (true, Some(path)) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let net = Arc::new(load_weights(file).with_context(|| format!("loading {}", path.display()))?);
            if kind == ClosureArg::Ml {
                Closure::Ml(net)
            } else {
                Closure::MlNonHyperbolic(net)
            }
        }
    };
    if let (Some(m), Some(n)) = (order, closure.order()) {
        ensure!(m == n, "weights are for M = {n}, trajectory or --moments has M = {m}");
    }
    Ok(closure)
}

/// Grid, `tau` and IC parameters of a `solve` / `dvm` problem.
struct Problem {
    grid: Grid1D,
    tau: f64,
    params: IcParams,
    times: Vec<f64>,
}

fn problem(p: &ProblemArgs) -> Result<Problem> {
    ensure!(p.t_final > 0.0 && p.t_final.is_finite(), "--t-final must be positive");
    ensure!(p.snapshots > 0, "--snapshots must be positive");
    let grid = Grid1D::new(p.x_min, p.x_max, p.cells, Boundary::Periodic)?;
    let (drawn, params) = draw_ic(p.seed, p.ic.into(), datagen::KNUDSEN_RANGE);
    let tau = p.kn.unwrap_or(drawn);
    ensure!(tau > 0.0 && tau.is_finite(), "--kn must be positive");
    let times = (1..=p.snapshots).map(|k| k as f64 * p.t_final / p.snapshots as f64).collect();
    Ok(Problem { grid, tau, params, times })
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn record_params(m: &mut Manifest, p: &Problem, seed: u64) {
    m.seeds = vec![seed];
    m.tau = Some(p.tau);
    m.ic_params = p.params.to_vec();
}

fn solve(a: &SolveArgs, config: serde_json::Value) -> Result<Status> {
    let start = Instant::now();
    let closure = build_closure(a.closure, a.weights.as_deref(), Some(a.moments))?;
    let prob = problem(&a.problem)?;
    let mut sc = SolverConfig::new(a.scheme.into(), prob.tau);
    sc.path = match a.path {
        PathArg::Linear => IntegrationPath::Linear,
        PathArg::Minus => IntegrationPath::Polynomial { degree: a.path_degree, branch: PathBranch::Minus },
        PathArg::Plus => IntegrationPath::Polynomial { degree: a.path_degree, branch: PathBranch::Plus },
    };
    sc.quadrature_points = a.quadrature;
    sc.cfl = a.cfl;
    sc.collision = match a.collision {
        CollisionArg::Explicit => CollisionMode::Explicit,
        CollisionArg::SplitExact => CollisionMode::SplitExact,
    };
    sc.validate()?;
    if sc.scheme.is_high_order() {
        ensure!(prob.grid.n_x >= 5, "high-order schemes need at least 5 cells");
    }

    let field = prob.params.field(prob.grid, VelocityGrid::default())?;
    let cells = Execution::Parallel
        .try_map(prob.grid.n_x, |j| moments_from_distribution(field.cell(j), &field.velocity, a.moments))?;
    let initial = FieldState::from_primitives(prob.grid, &cells)?;

    let out = run(initial, &closure, &sc, a.problem.t_final, &OutputCadence::Times(prob.times.clone()))?;

    let dir = &a.problem.out;
    prepare_out(dir)?;
    let x = prob.grid.centers();
    let mut m = Manifest::new("solve", config);
    record_params(&mut m, &prob, a.problem.seed);
    for (step, snap) in out.snapshots.iter().enumerate() {
        let file = snapshot_name(step);
        match snap.primitives() {
            Ok(cells) => write_snapshot(&dir.join(&file), &x, &cells)?,
            Err(e) => {
                log::warn!("snapshot at t = {} not written: {e}", snap.time);
                continue;
            }
        }
        m.snapshots.push(SnapshotEntry { step, time: snap.time, file });
    }
    m.extra.insert("steps".into(), out.steps.into());
    m.extra.insert("roe_fallbacks".into(), out.roe_fallbacks.into());
    m.extra.insert("closure".into(), closure.name().into());
    let status = match &out.failure {
        Some(f) => {
            m.failures.push(FailureEntry { time: f.time, cell: f.cell, message: f.message.clone() });
            Status::SolverFailure
        }
        None => Status::Ok,
    };
    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.write(dir)?;
    Ok(status)
}

fn dvm(a: &DvmArgs, config: serde_json::Value) -> Result<Status> {
    let start = Instant::now();
    ensure!(a.moments >= bgk_closure::state::MIN_ORDER, "--moments must be at least {}", bgk_closure::state::MIN_ORDER);
    let prob = problem(&a.problem)?;
    let velocity = VelocityGrid::new(-a.v_max, a.v_max, a.velocities)?;
    let mut dc = DvmConfig::new(prob.tau);
    dc.cfl = a.cfl;
    dc.scheme = match a.scheme {
        DvmSchemeArg::Imex => DvmScheme::Imex,
        DvmSchemeArg::SplitExact => DvmScheme::SplitExact,
    };
    dc.validate()?;
    let field: KineticField = prob.params.field(prob.grid, velocity)?;
    let mut sample_times = vec![0.0];
    sample_times.extend(&prob.times);

    let dir = &a.problem.out;
    prepare_out(dir)?;
    let x = prob.grid.centers();
    let mut m = Manifest::new("dvm", config);
    record_params(&mut m, &prob, a.problem.seed);
    let mut step = 0;
    let result = run_dvm_with(field, &dc, a.problem.t_final, &sample_times, a.moments, |f| {
        let cells = f.moments(a.moments, dc.execution)?;
        let file = snapshot_name(step);
        write_snapshot(&dir.join(&file), &x, &cells)
            .map_err(|e| bgk_closure::Error::Config(format!("writing snapshot: {e:#}")))?;
        m.snapshots.push(SnapshotEntry { step, time: f.time, file });
        step += 1;
        Ok(())
    });
    let status = match result {
        Ok(traj) => {
            m.extra.insert("steps".into(), traj.steps.into());
            Status::Ok
        }
        Err(e) => {
            let time = m.snapshots.last().map_or(0.0, |s| s.time);
            m.failures.push(FailureEntry { time, cell: None, message: e.to_string() });
            Status::SolverFailure
        }
    };
    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.write(dir)?;
    Ok(status)
}

fn gen_data(a: &GenDataArgs, config: serde_json::Value) -> Result<Status> {
    let start = Instant::now();
    let mut gc = match a.generator {
        GeneratorArg::Hme => GenerationConfig::hme(a.moments, a.ics, a.seed),
        GeneratorArg::Dvm => GenerationConfig::kinetic(a.moments, a.ics, a.seed),
    };
    gc.kind = a.ic.into();
    gc.scheme = a.scheme.into();
    if let Some(n) = a.cells {
        gc.grid = Grid1D::new(gc.grid.x_a, gc.grid.x_b, n, Boundary::Periodic)?;
    }
    if let Some(t) = a.t_final {
        gc.t_final = t;
    }
    if let Some(n) = a.times {
        gc.n_times = n;
    }
    gc.knudsen_range = (a.kn_min.unwrap_or(gc.knudsen_range.0), a.kn_max.unwrap_or(gc.knudsen_range.1));
    gc.validate()?;
    if gc.generator == Generator::Hme && gc.scheme.is_high_order() {
        ensure!(gc.grid.n_x >= 5, "high-order schemes need at least 5 cells");
    }

    let report = generate(&gc)?;
    prepare_out(&a.out)?;
    let path = a.out.join("dataset.bgkd");
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_dataset(&report.dataset, BufWriter::new(file))?;

    let mut m = Manifest::new("gen-data", config);
    m.seeds = std::iter::once(a.seed).chain(ic_seeds(a.seed, a.ics)).collect();
    m.outputs.push("dataset.bgkd".into());
    m.extra.insert("records".into(), report.dataset.records.len().into());
    m.extra.insert("taus".into(), report.dataset.records.iter().map(|r| r.tau).collect::<Vec<_>>().into());
    for f in &report.failures {
        m.failures.push(FailureEntry { time: 0.0, cell: None, message: format!("ic {} (seed {}, tau {:e}): {}", f.index, f.seed, f.tau, f.message) });
    }
    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.write(&a.out)?;
    Ok(if report.failures.is_empty() { Status::Ok } else { Status::SolverFailure })
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub time: f64,
    pub field: String,
    pub error: f64,
}

/// Relative L2 errors of `test` against `reference` at every time present in
/// both trajectories.
pub fn compare_dirs(reference: &Path, test: &Path, fields: &[String]) -> Result<Vec<ErrorRow>> {
    let rm = Manifest::read(reference)?;
    let tm = Manifest::read(test)?;
    let mut rows = Vec::new();
    for r in &rm.snapshots {
        let tol = 1e-9 * r.time.abs().max(1.0);
        let Some(t) = tm.snapshots.iter().find(|t| (t.time - r.time).abs() <= tol) else {
            continue;
        };
        let rt = Table::read(&snapshot_path(reference, r))?;
        let tt = Table::read(&snapshot_path(test, t))?;
        for field in fields {
            let a = tt.column(field).with_context(|| format!("test snapshot {}", t.file))?;
            let b = rt.column(field).with_context(|| format!("reference snapshot {}", r.file))?;
            let error = relative_l2(a, b).with_context(|| format!("field {field} at t = {}", r.time))?;
            rows.push(ErrorRow { time: r.time, field: field.clone(), error });
        }
    }
    ensure!(!rows.is_empty(), "the trajectories share no output time");
    Ok(rows)
}

fn compare(a: &CompareArgs, config: serde_json::Value) -> Result<Status> {
    let start = Instant::now();
    ensure!(!a.fields.is_empty(), "--fields is empty");
    let rows = compare_dirs(&a.reference, &a.test, &a.fields)?;
    println!("{:>12}  {:>8}  {:>12}", "time", "field", "rel_l2");
    for r in &rows {
        println!("{:>12.6}  {:>8}  {:>12.6e}", r.time, r.field, r.error);
    }
    if let Some(dir) = &a.out {
        prepare_out(dir)?;
        let mut w = csv::Writer::from_path(dir.join("compare.csv"))?;
        w.write_record(["time", "field", "rel_l2"])?;
        for r in &rows {
            w.write_record([r.time.to_string(), r.field.clone(), r.error.to_string()])?;
        }
        w.flush()?;
        let mut m = Manifest::new("compare", config);
        m.outputs.push("compare.csv".into());
        m.wall_clock_s = start.elapsed().as_secs_f64();
        m.write(dir)?;
    }
    Ok(Status::Ok)
}

/// Smallest eigenvalue gap and largest imaginary part over a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRecord {
    pub min_gap: f64,
    pub cell: usize,
    pub max_imag: f64,
}

pub fn min_gap(closure: &Closure, cells: &[PrimitiveMomentState]) -> Result<GapRecord> {
    let per_cell = Execution::Parallel.try_map(cells.len(), |j| -> Result<(f64, f64)> {
        let a = closure.matrix(&cells[j])?;
        let ev = bgk_closure::eigen::eigenvalues(a.as_matrix());
        let imag = ev.iter().fold(0.0f64, |m, e| m.max(e.1.abs()));
        let mut re: Vec<f64> = ev.iter().map(|e| e.0).collect();
        re.sort_by(f64::total_cmp);
        let gap = re.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
        Ok((gap, imag))
    })?;
    let mut rec = GapRecord { min_gap: f64::INFINITY, cell: 0, max_imag: 0.0 };
    for (j, (gap, imag)) in per_cell.into_iter().enumerate() {
        if gap < rec.min_gap {
            rec.min_gap = gap;
            rec.cell = j;
        }
        rec.max_imag = rec.max_imag.max(imag);
    }
    Ok(rec)
}

fn eigen_audit(a: &AuditArgs, config: serde_json::Value) -> Result<Status> {
    let start = Instant::now();
    let tm = Manifest::read(&a.trajectory)?;
    ensure!(!tm.snapshots.is_empty(), "trajectory has no snapshots");
    let first = Table::read(&snapshot_path(&a.trajectory, &tm.snapshots[0]))?;
    let order = first.names.len() - 2;
    let closure = build_closure(a.closure, a.weights.as_deref(), Some(order))?;

    let mut records = Vec::new();
    for s in &tm.snapshots {
        let cells = Table::read(&snapshot_path(&a.trajectory, s))?.states()?;
        ensure!(cells.iter().all(|c| c.order() == order), "snapshot {} changes the order", s.file);
        records.push((s, min_gap(&closure, &cells)?));
    }
    prepare_out(&a.out)?;
    let mut w = csv::Writer::from_path(a.out.join("audit.csv"))?;
    w.write_record(["step", "time", "min_gap", "cell", "max_imag"])?;
    for (s, r) in &records {
        w.write_record([
            s.step.to_string(),
            s.time.to_string(),
            r.min_gap.to_string(),
            r.cell.to_string(),
            r.max_imag.to_string(),
        ])?;
    }
    w.flush()?;
    let mut m = Manifest::new("eigen-audit", config);
    m.outputs.push("audit.csv".into());
    m.extra.insert("closure".into(), closure.name().into());
    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.write(&a.out)?;
    Ok(Status::Ok)
}
