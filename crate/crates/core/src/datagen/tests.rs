use super::*;
use crate::error::FormatError;
use crate::kinetic::VelocityGrid;
use crate::moments::conserved_moments;

fn sinusoid(amplitude: f64, offset: f64, wavenumber: u32, phase: f64) -> Sinusoid {
    Sinusoid { amplitude, offset, wavenumber, phase }
}

fn params(alpha: [f64; 2]) -> WaveParams {
    WaveParams {
        draws: [
            MacroDraw { rho: sinusoid(0.25, 0.6, 1, 0.0), theta: sinusoid(0.22, 0.6, 2, 1.0) },
            MacroDraw { rho: sinusoid(0.21, 0.55, 3, 2.0), theta: sinusoid(0.29, 0.65, 1, 4.0) },
        ],
        alpha,
    }
}

#[test]
fn sinusoid_closed_form() {
    assert!((sinusoid(0.25, 0.6, 1, 0.0).eval(0.25, 1.0) - 0.85).abs() < 1e-15);
}

#[test]
fn single_component_blend() {
    let p = params([1.0, 0.0]);
    let d = p.draws[0];
    for (x, v) in [(0.1, -0.3), (0.7, 1.2)] {
        let expect = maxwellian(d.rho.eval(x, 1.0), 0.0, d.theta.eval(x, 1.0), v) / (1.0 + 1e-6);
        assert_eq!(p.distribution(x, v, 1.0), expect);
    }
}

#[test]
fn blend_moments_match_closed_form() {
    let p = params([0.3, 0.8]);
    let grid = Grid1D::new(0.0, 1.0, 16, Boundary::Periodic).unwrap();
    let field = p.field(grid, VelocityGrid::default()).unwrap();
    for j in 0..16 {
        let x = grid.center(j);
        let [rho, m, e] = conserved_moments(field.cell(j), &field.velocity);
        assert!((rho - p.density(x, 1.0)).abs() < 1e-12);
        assert!(m.abs() < 1e-14);
        assert!((2.0 * e / rho - p.temperature(x, 1.0)).abs() < 1e-12);
    }
}

#[test]
fn sampled_parameters_lie_in_ranges() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ks = [false; 4];
    for _ in 0..2000 {
        let m = MixParams::sample(&mut rng);
        assert!(m.in_sampling_ranges(), "{m:?}");
        ks[m.wave.draws[0].rho.wavenumber as usize - 1] = true;
    }
    assert!(ks.iter().all(|k| *k));
}

#[test]
fn knudsen_is_log_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 10_000;
    let mut s: Vec<f64> = (0..n)
        .map(|_| (sample_knudsen(&mut rng, KNUDSEN_RANGE).log10() + 3.0) / 4.0)
        .collect();
    assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
    s.sort_by(f64::total_cmp);
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - v))
        .fold(0.0, f64::max);
    // Kolmogorov critical value at the 1% level
    let critical = 1.6276 / (n as f64).sqrt();
    assert!(d < critical, "D = {d}, critical {critical}");
}

#[test]
fn mix_limits() {
    let grid = Grid1D::new(0.0, 1.0, 20, Boundary::Periodic).unwrap();
    let vel = VelocityGrid::default();
    let shock = ShockParams { x1: 0.3, x2: 0.7, rho_l: 1.5, theta_l: 1.2, rho_r: 0.6, theta_r: 0.8 };
    let wave = params([0.5, 0.5]);
    let pure = MixParams { wave, shock, alpha: 1.0 }.field(grid, vel.clone()).unwrap();
    assert_eq!(pure.values, wave.field(grid, vel.clone()).unwrap().values);

    let sharp = MixParams { wave, shock, alpha: 0.0 }.field(grid, vel.clone()).unwrap();
    for j in 0..20 {
        let x = grid.center(j);
        let (r, t) = if (0.3..=0.7).contains(&x) { (1.5, 1.2) } else { (0.6, 0.8) };
        for (k, v) in vel.nodes.iter().enumerate() {
            assert_eq!(sharp.cell(j)[k], maxwellian(r, 0.0, t, *v));
        }
    }
}

#[test]
fn mixed_density_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = Grid1D::new(0.0, 1.0, 64, Boundary::Periodic).unwrap();
    for _ in 0..20 {
        let (p, field) = sample_mix_ic(&mut rng, grid, VelocityGrid::default()).unwrap();
        for j in 0..64 {
            let x = grid.center(j);
            let wave = p.wave.density(x, 1.0);
            let lo = p.alpha * wave + (1.0 - p.alpha) * p.shock.rho_r.min(p.shock.rho_l);
            let hi = p.alpha * wave + (1.0 - p.alpha) * p.shock.rho_r.max(p.shock.rho_l);
            let rho = conserved_moments(field.cell(j), &field.velocity)[0];
            assert!(rho >= lo - 1e-12 && rho <= hi + 1e-12);
            assert!(rho >= p.alpha * wave + (1.0 - p.alpha) * 0.55 - 1e-12);
        }
    }
}

#[test]
fn gradients_of_constants_sines_and_cubics() {
    let zero = compute_gradients(&[2.5; 16], 0.1).unwrap();
    assert!(zero.iter().all(|g| *g == 0.0));

    let n = 256;
    let dx = 1.0 / n as f64;
    let xs: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * dx).collect();
    let s: Vec<f64> = xs.iter().map(|x| (2.0 * PI * x).sin()).collect();
    let g = compute_gradients(&s, dx).unwrap();
    let err = xs.iter().zip(&g).map(|(x, g)| (g - 2.0 * PI * (2.0 * PI * x).cos()).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");

    let c: Vec<f64> = xs.iter().map(|x| x * x * x - 0.5 * x).collect();
    let g = compute_gradients(&c, dx).unwrap();
    for j in 2..n - 2 {
        assert!((g[j] - (3.0 * xs[j] * xs[j] - 0.5)).abs() < 1e-11);
    }
}

fn small(generator: Generator, execution: Execution) -> GenerationConfig {
    let mut c = match generator {
        Generator::Hme => GenerationConfig::hme(4, 3, 99),
        Generator::Dvm => GenerationConfig::kinetic(4, 2, 99),
    };
    c.grid = Grid1D::new(c.grid.x_a, c.grid.x_b, 16, Boundary::Periodic).unwrap();
    c.velocity = VelocityGrid::new(-8.0, 8.0, 48).unwrap();
    c.t_final = 0.02;
    c.n_times = 4;
    c.scheme = Scheme::HighOrderForce;
    c.collision = CollisionMode::SplitExact;
    c.execution = execution;
    c
}

#[test]
fn hme_generation_targets_and_determinism() {
    let par = generate(&small(Generator::Hme, Execution::Parallel)).unwrap();
    assert!(par.failures.is_empty(), "{:?}", par.failures);
    let ds = &par.dataset;
    assert_eq!(ds.records.len(), 3);
    let (n, m) = (16, 4);
    for r in &ds.records {
        assert_eq!(r.times.len(), 4);
        assert_eq!(r.moments.len(), 4 * (m + 2) * n);
        for t in 0..4 {
            let (fm, fm1) = (r.moment(t, m, n, m), r.moment(t, m - 1, n, m));
            let (ux, thx) = (r.gradient(t, 1, n, m), r.gradient(t, 2, n, m));
            let last = r.gradient(t, m + 1, n, m);
            assert!(r.moment(t, m + 1, n, m).iter().all(|v| *v == 0.0));
            for j in 0..n {
                assert_eq!(last[j], -fm[j] * ux[j] - 0.5 * fm1[j] * thx[j]);
            }
        }
    }
    let seq = generate(&small(Generator::Hme, Execution::Sequential)).unwrap();
    assert_eq!(seq.dataset, par.dataset);
}

#[test]
fn dvm_generation_shapes() {
    let report = generate(&small(Generator::Dvm, Execution::Parallel)).unwrap();
    assert!(report.failures.is_empty());
    let ds = &report.dataset;
    assert_eq!(ds.generator, Generator::Dvm);
    for r in &ds.records {
        assert_eq!(r.moments.len(), r.gradients.len());
        assert_eq!(r.moments.len(), 4 * 6 * 16);
        assert!((KNUDSEN_RANGE.0..=KNUDSEN_RANGE.1).contains(&r.tau));
        // closing moment is kept
        assert!(r.moment(3, 5, 16, 4).iter().any(|v| *v != 0.0));
    }
}

fn random_dataset(seed: u64) -> TrajectoryDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid1D::new(-0.5, 0.5, 6, Boundary::Periodic).unwrap();
    let block = 6 * 6;
    let records = (0..3)
        .map(|_| TrajectoryRecord {
            seed: rng.random(),
            tau: rng.random(),
            params: (0..18).map(|_| rng.random()).collect(),
            times: vec![0.1, 0.2],
            moments: (0..2 * block).map(|_| rng.random_range(-1.0..1.0)).collect(),
            gradients: (0..2 * block).map(|_| rng.random_range(-1.0..1.0)).collect(),
        })
        .collect();
    TrajectoryDataset { generator: Generator::Dvm, order: 4, grid, seed, records }
}

#[test]
fn dataset_round_trip_is_bitwise() {
    let ds = random_dataset(5);
    let mut buf = Vec::new();
    write_dataset(&ds, &mut buf).unwrap();
    let back = read_dataset(buf.as_slice()).unwrap();
    assert_eq!(back, ds);
    let mut again = Vec::new();
    write_dataset(&back, &mut again).unwrap();
    assert_eq!(again, buf);
}

#[test]
fn corrupt_datasets_are_rejected() {
    let bytes = random_dataset(6).to_bytes().unwrap();
    let mut v = bytes.clone();
    v[4] = 2;
    assert!(matches!(
        TrajectoryDataset::from_bytes(&v),
        Err(FormatError::Version { expected: 1, found: 2 })
    ));
    let mut flipped = bytes.clone();
    flipped[100] ^= 1;
    assert!(TrajectoryDataset::from_bytes(&flipped).is_err());
    assert!(matches!(
        TrajectoryDataset::from_bytes(&bytes[..bytes.len() - 20]),
        Err(FormatError::Truncated(_) | FormatError::Checksum { .. } | FormatError::Invalid(_))
    ));
    let mut magic = bytes;
    magic[0] = b'X';
    assert!(matches!(TrajectoryDataset::from_bytes(&magic), Err(FormatError::BadMagic { .. })));
}

#[test]
fn mismatched_shapes_are_not_written() {
    let mut ds = random_dataset(8);
    ds.records[1].gradients.pop();
    assert!(ds.to_bytes().is_err());
}
