use super::*;
use crate::ode_profile::{unforced_profile, ProfileSeries};
use crate::trig_algebra::{examples, Direction};

fn linear(half_width: f64, h: f64, t_final: f64) -> SolverConfig {
    SolverConfig::new(half_width, h, 0.5, t_final, NonlinearityCoefficients::zero()).unwrap()
}

#[test]
fn zero_amplitude_gives_zero_field() {
    let cfg = linear(3.0, 0.1, 1.0);
    let w = make_initial_data(&InitialData::smooth_bump(1.0, 0.0), &cfg).unwrap();
    assert!(w.u.iter().chain(&w.ut).all(|v| *v == 0.0));
    assert_eq!(energy(&w), 0.0);
}

#[test]
fn bump_peak_is_eps_over_e() {
    let cfg = linear(3.0, 0.1, 1.0);
    let w = make_initial_data(&InitialData::smooth_bump(1.0, 0.1), &cfg).unwrap();
    assert!((w.max_abs() - 0.1 * (-1.0f64).exp()).abs() < 1e-15);
    // exact zero on and outside the support circle
    for j in 0..cfg.grid.n {
        for i in 0..cfg.grid.n {
            if cfg.grid.coord(i).hypot(cfg.grid.coord(j)) >= 1.0 {
                assert_eq!(w.u[cfg.grid.index(i, j)], 0.0);
                assert_eq!(w.ut[cfg.grid.index(i, j)], 0.0);
            }
        }
    }
}

#[test]
fn deriv_bump_energy_matches_quadrature_oracle() {
    let cfg = linear(2.0, 0.02, 0.1);
    let data = InitialData::deriv_bump(1.0, 0.3);
    let w = make_initial_data(&data, &cfg).unwrap();
    assert!(w.u.iter().all(|v| *v == 0.0));
    let k = cfg.grid.index(65, 90);
    assert_eq!(w.ut[k], 0.3 * data.profile(cfg.grid.coord(65), cfg.grid.coord(90)).1);
    // sqrt(eps^2/2 int (d_1 bump)^2), integral from a 30-digit quadrature
    let expected = (0.5 * 0.09 * 0.425_168_331_587_636_3f64).sqrt();
    assert!(((energy(&w) - expected) / expected).abs() < 1e-8, "{}", energy(&w));
}

#[test]
fn custom_data_must_respect_support() {
    let n = 11;
    let mut tab = TabulatedData { n, half_width: 1.0, f: vec![0.0; n * n], g: vec![0.0; n * n] };
    tab.f[5 * n + 5] = 1.0;
    let ok = InitialData { kind: DataKind::Custom(tab.clone()), radius: 0.5, epsilon: 1.0, center: [0.0, 0.0] };
    assert!(ok.validate().is_ok());
    assert!((ok.profile(0.0, 0.0).0 - 1.0).abs() < 1e-15);
    tab.g[0] = 1.0;
    let bad = InitialData { kind: DataKind::Custom(tab), radius: 0.5, epsilon: 1.0, center: [0.0, 0.0] };
    assert!(bad.validate().is_err());
}

#[test]
fn config_validation() {
    let zero = NonlinearityCoefficients::zero();
    assert!(SolverConfig::new(10.0, 0.1, 0.6, 1.0, zero.clone()).is_err());
    assert!(SolverConfig::new(10.0, 0.1, 0.0, 1.0, zero.clone()).is_err());
    let cfg = SolverConfig::new(10.0, 0.1, 0.5, 7.0, zero).unwrap();
    assert!(cfg.cfl() <= 0.5 + 1e-15);
    assert!((cfg.dt * cfg.steps as f64 - 7.0).abs() < 1e-12);
    assert!(cfg.check_domain(&InitialData::smooth_bump(1.0, 0.1)).is_ok());
    assert!(cfg.check_domain(&InitialData::smooth_bump(2.9, 0.1)).is_err());
}

#[test]
fn zero_field_stays_zero() {
    let cfg = SolverConfig::new(3.0, 0.1, 0.5, 1.0, examples::dt_plus_d2_cubed()).unwrap();
    let mut w = WaveField::zero(cfg.grid);
    for _ in 0..5 {
        step(&mut w, &cfg).unwrap();
    }
    assert!(w.u.iter().all(|v| *v == 0.0));
}

#[test]
fn one_linear_step_keeps_energy() {
    let cfg = linear(2.0, 0.02, 1.0);
    let mut w = make_initial_data(&InitialData::smooth_bump(1.0, 0.1), &cfg).unwrap();
    let e0 = energy(&w);
    step(&mut w, &cfg).unwrap();
    assert!(((energy(&w) - e0) / e0).abs() < 1e-3);
}

#[test]
fn staggered_energy_is_conserved_without_nonlinearity() {
    let cfg = linear(6.0, 0.1, 4.0);
    let out = run(&cfg, &InitialData::smooth_bump(1.0, 0.2), &RunOptions::default()).unwrap();
    let e = &out.energy.values;
    let spread = e.iter().fold(0.0f64, |m, v| m.max((v - e[0]).abs()));
    assert!(spread / e[0] < 1e-12, "{spread}");
}

/// `max |u - u_ref|` on the axis `x_2 = 0` for `f(x_1) = exp(-4 x_1^2)`, `g = 0`.
fn plane_wave_error(h: f64) -> f64 {
    let cfg = linear(6.0, h, 2.0);
    let f = |x: f64| (-4.0 * x * x).exp();
    let mut w = WaveField::from_samples(cfg.grid, cfg.grid.sample(|x, _| f(x)), vec![0.0; cfg.grid.len()]).unwrap();
    for _ in 0..cfg.steps {
        step(&mut w, &cfg).unwrap();
    }
    let j = (cfg.grid.n - 1) / 2;
    (0..cfg.grid.n)
        .map(|i| {
            let x = cfg.grid.coord(i);
            (w.u[cfg.grid.index(i, j)] - 0.5 * (f(x - 2.0) + f(x + 2.0))).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn plane_wave_converges_at_second_order() {
    let e: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&h| plane_wave_error(h)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "{e:?}");
    }
    // frozen from the first run of this study
    assert!((e[0] - 9.905e-3).abs() < 1e-5, "{}", e[0]);
}

#[test]
fn linear_drift_stays_below_regression_bound() {
    // R = 1, eps = 0.2, T = 10: -2.355e-3 at h = 0.2, -1.063e-3 at h = 0.1
    for (h, frozen) in [(0.2, -2.354_695e-3), (0.1, -1.062_517e-3)] {
        let cfg = linear(12.0, h, 10.0);
        let opts = RunOptions { checkpoint_every: 1000, ..Default::default() };
        let out = run(&cfg, &InitialData::smooth_bump(1.0, 0.2), &opts).unwrap();
        let drift = (out.energy_final - out.energy_initial) / out.energy_initial;
        assert!((drift - frozen).abs() < 1e-8, "{drift}");
        assert!(drift.abs() <= LINEAR_DRIFT_K * h * h);
    }
}

#[test]
fn damping_never_adds_energy() {
    let cfg = SolverConfig::new(8.0, 0.1, 0.5, 5.0, examples::cubic_damping()).unwrap();
    let out = run(&cfg, &InitialData::smooth_bump(1.0, 0.2), &RunOptions::default()).unwrap();
    assert!(out.energy.max_increase() <= 1e-6);
    assert!(out.energy.values.last().unwrap() < &out.energy.values[0]);
}

#[test]
fn anti_damping_trips_guard() {
    let growth = NonlinearityCoefficients::zero().add_cubic_product(-50.0, [1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
    let cfg = SolverConfig::new(6.0, 0.1, 0.5, 4.0, growth).unwrap();
    let r = run(&cfg, &InitialData::smooth_bump(1.0, 30.0), &RunOptions::default());
    assert!(matches!(r, Err(Error::BlowUp { .. })), "{r:?}");
}

#[test]
fn unstable_time_step_is_caught() {
    let mut cfg = linear(6.0, 0.1, 4.0);
    cfg.dt = 0.09;
    let mut w = make_initial_data(&InitialData::smooth_bump(1.0, 0.2), &cfg).unwrap();
    let err = (0..400).find_map(|_| step(&mut w, &cfg).err());
    assert!(matches!(err, Some(Error::Instability { .. })), "{err:?}");
}

#[test]
fn propagation_check_on_fixtures() {
    let grid = Grid::new(5.0, 0.1).unwrap();
    let zero = WaveField::zero(grid);
    assert_eq!(check_propagation(&zero.current_level(), 1.0, [0.0, 0.0]), 0.0);
    let mut planted = zero.clone();
    planted.u[grid.index(90, 50)] = 0.25;
    // |x| = 4 > 0 + 1 + 0.4
    assert_eq!(check_propagation(&planted.current_level(), 1.0, [0.0, 0.0]), 0.25);
    assert_eq!(check_propagation(&planted.current_level(), 3.7, [0.0, 0.0]), 0.0);
}

#[test]
fn discrete_solution_is_confined_to_a_widened_cone() {
    // leapfrog dispersion leaves an Airy precursor a few cells ahead of the
    // front; thirty-two cells out it is gone
    let cfg = linear(12.0, 0.1, 6.0);
    let data = InitialData::smooth_bump(1.0, 0.2);
    let opts = RunOptions { checkpoint_every: 10, keep_snapshots: true, ..Default::default() };
    let out = run(&cfg, &data, &opts).unwrap();
    for s in &out.snapshots {
        assert!(check_propagation_with(&s.view(), 1.0, [0.0, 0.0], 32.0) < 1e-10);
    }
    assert!(out.checkpoints.iter().all(|c| c.outside_cone.is_finite()));
}

fn planted_outgoing(grid: Grid, t: f64) -> Snapshot {
    let phi = |s: f64| (-s * s).exp();
    let dphi = |s: f64| -2.0 * s * (-s * s).exp();
    let u = grid.sample(|x, y| {
        let r = x.hypot(y);
        if r < 0.5 {
            0.0
        } else {
            phi(r - t) / r.sqrt()
        }
    });
    let ut = grid.sample(|x, y| {
        let r = x.hypot(y);
        if r < 0.5 {
            0.0
        } else {
            -dphi(r - t) / r.sqrt()
        }
    });
    Snapshot { t, grid, u, ut }
}

#[test]
fn ray_of_planted_outgoing_wave_is_phi_prime() {
    let omega = Direction::from_angle(0.7);
    let sigma: f64 = -0.4;
    let exact = -2.0 * sigma * (-sigma * sigma).exp();
    let mut errs = Vec::new();
    for h in [0.04, 0.02] {
        let grid = Grid::new(8.0, h).unwrap();
        let snaps: Vec<Snapshot> = [2.0, 3.0, 4.0, 5.0].iter().map(|&t| planted_outgoing(grid, t)).collect();
        let series = extract_ray(&snaps, sigma, &omega).unwrap();
        errs.push(series.v.iter().map(|v| (v - exact).abs()).fold(0.0, f64::max));
    }
    assert!(errs[0] < 5e-3, "{errs:?}");
    let ratio = errs[0] / errs[1];
    assert!(ratio > 3.0 && ratio < 5.0, "{errs:?}");
}

#[test]
fn zero_field_ray_is_zero() {
    let grid = Grid::new(8.0, 0.1).unwrap();
    let snaps: Vec<Snapshot> = [2.0, 3.0, 4.0]
        .iter()
        .map(|&t| Snapshot { t, grid, u: vec![0.0; grid.len()], ut: vec![0.0; grid.len()] })
        .collect();
    let series = extract_ray(&snaps, 0.0, &Direction::from_angle(1.0)).unwrap();
    assert!(series.v.iter().all(|v| *v == 0.0));
}

#[test]
fn ray_outside_grid_is_an_error() {
    let grid = Grid::new(4.0, 0.1).unwrap();
    let snaps = vec![Snapshot { t: 5.0, grid, u: vec![0.0; grid.len()], ut: vec![0.0; grid.len()] }; 3];
    assert!(matches!(extract_ray(&snaps, 0.0, &Direction::from_angle(0.0)), Err(Error::RayOutsideDomain { .. })));
    let view = snaps[0].view();
    let early = LevelView { t: 1.0, ..view };
    assert!(matches!(sample_profile(&early, 0.0, &Direction::from_angle(0.0)), Err(Error::RayOutsideDomain { .. })));
}

#[test]
fn residual_vanishes_on_ode_solutions() {
    let times: Vec<f64> = (0..2000).map(|k| 2.0 + 0.01 * k as f64).collect();
    let v: Vec<f64> = times.iter().map(|t| unforced_profile(1.5, 0.4, 2.0, *t)).collect();
    let series = ProfileSeries::new(times.clone(), v, vec![0.0; 2000], None).unwrap();
    let fit = residual_forcing(&series, 1.5, 0.1, 0.0, 0.05).unwrap();
    assert!(fit.h.iter().all(|h| h.abs() < 1e-6));
    assert_eq!(fit.times.len(), 1998);

    let flat = ProfileSeries::new(times, vec![0.3; 2000], vec![0.0; 2000], None).unwrap();
    let fit = residual_forcing(&flat, 0.0, 0.1, 0.0, 0.05).unwrap();
    let worst = fit.h.iter().fold(0.0f64, |m, h| m.max(h.abs()));
    assert!(worst < 1e-10, "{worst:e}");
    assert!(fit.constant < 1e-7);
}

#[test]
fn run_records_probes_and_diagnostics() {
    let cfg = SolverConfig::new(9.0, 0.1, 0.5, 4.0, examples::d1_squared_dt()).unwrap();
    let probe = RayProbe { sigma: 0.0, omega: Direction::from_angle(0.0) };
    let opts = RunOptions { probes: vec![probe], pointwise_mu: Some(0.05), checkpoint_every: 20, ..Default::default() };
    let out = run(&cfg, &InitialData::smooth_bump(1.0, 0.1), &opts).unwrap();
    let (t, v) = &out.probes[0];
    assert!((t[0] - 2.0).abs() < 1e-12 && (t.last().unwrap() - 4.0).abs() < 1e-12);
    assert!(v.iter().all(|x| x.is_finite()));
    let c = out.pointwise_constant().unwrap();
    assert!(c.is_finite() && c > 0.0);
    assert_eq!(out.checkpoints.last().unwrap().t, out.final_level.t);
    assert!((out.final_level.t - 4.0).abs() < 1e-12);
    let fit = fit_energy_bound(&out.energy, 0.1, 0.25);
    for (t, e) in out.energy.times.iter().zip(&out.energy.values) {
        assert!(*e <= fit * 0.1 / (1.0 + 0.01 * (t + 2.0).ln()).powf(0.25) * (1.0 + 1e-12));
    }
}

#[test]
fn snapshot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(1.0, 0.25).unwrap();
    let snap = planted_outgoing(grid, 0.5);
    let [json, bin] = write_snapshot(dir.path(), "level", &snap, 1.0, 0.1).unwrap();
    assert!(json.exists() && bin.exists());
    let (header, back) = read_snapshot(&json).unwrap();
    assert_eq!(header.n, grid.n);
    assert_eq!(back, snap);
}

#[test]
fn energy_csv_layout() {
    let mut s = EnergySeries::default();
    s.push(0.5, 1.0);
    s.push(1.5, 0.9);
    let csv = energy_csv(&s, Some((2.0, 0.1, 0.25)));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,E,E_bound");
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1].split(',').count(), 3);
    assert!(energy_csv(&s, None).lines().nth(1).unwrap().ends_with(','));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn linear_staggered_energy_holds_for_any_bump(
            eps in 0.01f64..0.5,
            cx in -0.5f64..0.5,
            cy in -0.5f64..0.5,
            radius in 0.6f64..1.5,
        ) {
            let cfg = linear(5.0, 0.1, 2.0);
            let data = InitialData { kind: DataKind::SmoothBump, radius, epsilon: eps, center: [cx, cy] };
            let out = run(&cfg, &data, &RunOptions::default()).unwrap();
            let e = &out.energy.values;
            for v in e {
                prop_assert!(((v - e[0]) / e[0]).abs() < 1e-12);
            }
        }

        #[test]
        fn damping_is_monotone_for_any_amplitude(eps in 0.01f64..0.6) {
            let cfg = SolverConfig::new(5.0, 0.1, 0.5, 2.0, examples::cubic_damping()).unwrap();
            let out = run(&cfg, &InitialData::smooth_bump(1.0, eps), &RunOptions::default()).unwrap();
            prop_assert!(out.energy.max_increase() <= 1e-6 * eps);
        }
    }
}
