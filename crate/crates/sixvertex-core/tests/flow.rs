use std::sync::OnceLock;

use sixvertex_core::flow::*;
use sixvertex_core::kernels::Sign;
use sixvertex_core::thermo::{ThermoOptions, ThermoPoint};
use sixvertex_core::Error;

const PROBES: [f64; 4] = [0.3, 0.35, 0.45, 0.5];

fn spec() -> SurfaceSpec {
    SurfaceSpec {
        eta: 1.0,
        s_range: (0.35, 0.45),
        t_range: (0.21, 0.39),
        u_range: (0.25, 0.55),
        ns: 10,
        nt: 10,
        nu: 40,
        branch: Sign::Plus,
        thermo: ThermoOptions { m_nodes: 256, ..ThermoOptions::default() },
    }
}

fn surface() -> &'static FreeEnergySurface {
    static SURF: OnceLock<FreeEnergySurface> = OnceLock::new();
    SURF.get_or_init(|| build_surface(&spec()).expect("surface"))
}

fn sine(amplitude: f64) -> Profile {
    Profile::Sine { mean: 0.0, amplitude, period: 1.0, phase: 0.0 }
}

fn perturbed_stationary(g: usize, eps: f64) -> FieldState {
    let mut st = stationary_state(surface(), 1.0, g, 0.4, &sine(0.05), 0.4, 0.3).unwrap();
    st.perturb(1, eps, eps);
    st
}

fn config(u: Profile, v: Profile, dy: f64, y_end: f64) -> EvolveConfig {
    EvolveConfig { u, v, dy, y_end, probes: PROBES.to_vec(), mode_cutoff: Some(1), record_every: 1000, margin: 0.02 }
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// deterministic low-discrepancy points in the box, kept off the Chebyshev nodes
fn halton(i: usize, base: usize) -> f64 {
    let (mut f, mut r, mut k) = (1.0, 0.0, i);
    while k > 0 {
        f /= base as f64;
        r += f * (k % base) as f64;
        k /= base;
    }
    r
}

#[test]
fn surface_matches_direct_thermo_off_grid() {
    let mut s = surface().clone();
    let sp = spec();
    let lerp = |(lo, hi): (f64, f64), a: f64| lo + (hi - lo) * (0.05 + 0.9 * a);
    let probes: Vec<_> = (1..=20)
        .map(|i| (lerp(sp.s_range, halton(i, 2)), lerp(sp.t_range, halton(i, 3)), lerp(sp.u_range, halton(i, 5))))
        .collect();
    let v = s.validate(&probes).unwrap();
    assert_eq!(v.points, 20);
    assert!(v.max_error() < 1e-5, "{v:?}");
    assert_eq!(s.validation, Some(v));
}

#[test]
fn surface_reproduces_its_nodes() {
    let s = surface();
    let sp = spec();
    let (ss, ts, us) = (sp.s_nodes(), sp.t_nodes(), sp.u_nodes());
    for (i, j, k) in [(0, 0, 0), (3, 7, 11), (9, 9, 39), (5, 2, 20)] {
        let v = s.eval(ss[i], ts[j], us[k]).unwrap().value;
        let stored = s.values()[(i * sp.nt + j) * sp.nu + k];
        assert!((v - stored).abs() < 1e-12, "{v} vs {stored}");
    }
}

#[test]
fn half_filling_surface_is_even_in_field() {
    let sp = SurfaceSpec {
        eta: 1.0,
        s_range: (0.45, 0.55),
        t_range: (-0.1, 0.1),
        u_range: (0.4, 0.4),
        ns: 3,
        nt: 4,
        nu: 1,
        branch: Sign::Plus,
        thermo: ThermoOptions::default(),
    };
    let (col, _) = tabulate_column(&sp, 0.5, None).unwrap();
    for j in 0..2 {
        assert!((col[j] - col[3 - j]).abs() < 1e-10, "{} vs {}", col[j], col[3 - j]);
    }
}

#[test]
fn single_spectral_node_gives_planar_surface() {
    let sp = SurfaceSpec {
        u_range: (0.4, 0.4),
        nu: 1,
        ns: 5,
        nt: 5,
        thermo: ThermoOptions { m_nodes: 64, ..ThermoOptions::default() },
        ..spec()
    };
    let s = build_surface(&sp).unwrap();
    let p = s.eval(0.4, 0.3, 0.4).unwrap();
    let d = ThermoPoint::new(0.4, 0.3, 1.0, &sp.thermo).unwrap().branch_derivatives(0.4, Sign::Plus).unwrap();
    assert!((p.value - d.value).abs() < 1e-4);
    assert!(matches!(s.eval(0.4, 0.3, 0.41), Err(Error::Range(_))));
}

#[test]
fn surface_queries_outside_the_box_fail() {
    let s = surface();
    for (a, b, c) in [(0.3, 0.3, 0.4), (0.4, 0.5, 0.4), (0.4, 0.3, 0.6), (0.4, 0.2, 0.4)] {
        assert!(matches!(s.eval(a, b, c), Err(Error::Range(_))), "{a} {b} {c}");
    }
    assert!(s.slab(0.2).is_err());
    assert!(s.slab(0.4).unwrap().eval(0.46, 0.3).is_err());
}

#[test]
fn bad_surface_specs_are_rejected() {
    let bad = [
        SurfaceSpec { s_range: (0.5, 0.4), ..spec() },
        SurfaceSpec { s_range: (0.0, 0.4), ..spec() },
        SurfaceSpec { t_range: (0.3, 0.3), ..spec() },
        SurfaceSpec { u_range: (0.4, 1.2), ..spec() },
        SurfaceSpec { u_range: (0.4, 0.4), ..spec() },
        SurfaceSpec { ns: 1, ..spec() },
    ];
    for sp in bad {
        assert!(sp.validate().is_err(), "{sp:?}");
        assert!(build_surface(&sp).is_err());
    }
}

#[test]
fn holes_make_the_surface_unusable() {
    let sp = spec();
    let col = vec![0.0; sp.nt * sp.nu];
    let mut cols: Vec<_> = (0..sp.ns).map(|_| Ok(col.clone())).collect();
    cols[4] = Err(Error::Domain("failed column".into()));
    assert!(FreeEnergySurface::from_columns(sp.clone(), cols).is_err());
    assert!(FreeEnergySurface::from_values(sp, vec![0.0; 7]).is_err());
}

#[test]
fn constant_state_value_is_length_times_density() {
    let s = surface();
    let st = FieldState::uniform(1.5, 32, 0.4, 0.3).unwrap();
    let h = hamiltonian_value(&st, 0.45, &Profile::Constant(0.05), s).unwrap();
    let d = s.eval(0.4, 0.3, 0.4).unwrap().value;
    assert!((h - 1.5 * d).abs() < 1e-12, "{h} vs {}", 1.5 * d);
}

#[test]
fn translation_leaves_value_unchanged() {
    let s = surface();
    let mut st = FieldState::uniform(1.0, 64, 0.4, 0.3).unwrap();
    st.perturb(1, 0.004, 0.01);
    st.perturb(3, 0.001, -0.005);
    let mut shifted = st.clone();
    shifted.phi.rotate_left(5);
    shifted.pi.rotate_left(5);
    let v = Profile::Constant(0.02);
    let a = hamiltonian_value(&st, 0.4, &v, s).unwrap();
    let b = hamiltonian_value(&shifted, 0.4, &v, s).unwrap();
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
}

#[test]
fn quadrature_is_spectrally_accurate() {
    let s = surface();
    let value = |g: usize| {
        let mut st = FieldState::uniform(1.0, g, 0.4, 0.3).unwrap();
        st.perturb(1, 0.001, 0.02);
        st.perturb(2, 0.0005, -0.01);
        hamiltonian_value(&st, 0.4, &sine(0.05), s).unwrap()
    };
    assert!((value(128) - value(256)).abs() < 1e-8);
}

#[test]
fn states_outside_the_surface_report_regime_exit() {
    let st = FieldState::uniform(1.0, 16, 0.4, 0.5).unwrap();
    let e = hamiltonian_value(&st, 0.4, &Profile::Constant(0.0), surface()).unwrap_err();
    assert!(matches!(e, Error::RegimeExit { x_index: 0, .. }), "{e}");
}

#[test]
fn field_state_geometry() {
    let mut st = FieldState::uniform(2.0, 8, 0.4, 0.3).unwrap();
    assert!((st.q - 0.8).abs() < 1e-15);
    assert!(st.is_lipschitz());
    let h = st.heights();
    assert!((h[4] - h[0] - 0.4).abs() < 1e-15);
    st.perturb(1, 0.2, 0.0);
    assert!(!st.is_lipschitz());
    assert!(FieldState::new(1.0, 0.4, vec![0.0; 4], vec![0.0; 3]).is_err());
}

#[test]
fn fourier_calculus_is_exact_on_trigonometric_data() {
    let g = 32;
    let f = Fourier::new(g, 2.0);
    let xs: Vec<f64> = (0..g).map(|i| 2.0 * i as f64 / g as f64).collect();
    let k = std::f64::consts::PI;
    let u: Vec<f64> = xs.iter().map(|x| (k * x).sin() + 0.3 * (3.0 * k * x).cos()).collect();
    let du: Vec<f64> = xs.iter().map(|x| k * (k * x).cos() - 0.9 * k * (3.0 * k * x).sin()).collect();
    assert!(sup(&f.derivative(&u, None), &du) < 1e-12);
    let low: Vec<f64> = xs.iter().map(|x| k * (k * x).cos()).collect();
    assert!(sup(&f.derivative(&u, Some(1)), &low) < 1e-12);
    let back = f.antiderivative(&du);
    let mean = u.iter().sum::<f64>() / g as f64;
    let centered: Vec<f64> = u.iter().map(|v| v - mean).collect();
    let bmean = back.iter().sum::<f64>() / g as f64;
    let b: Vec<f64> = back.iter().map(|v| v - bmean).collect();
    assert!(sup(&b, &centered) < 1e-12);
}

#[test]
fn constant_state_is_a_fixed_point() {
    let st = FieldState::uniform(1.0, 64, 0.4, 0.3).unwrap();
    let cfg = config(Profile::Constant(0.4), Profile::Constant(0.0), 0.01, 0.2);
    let tr = evolve(&st, surface(), &cfg).unwrap();
    let h2 = surface().eval(0.4, 0.3, 0.4).unwrap().h2;
    assert!(sup(&tr.final_state.pi, &st.pi) < 1e-13);
    let shift: Vec<f64> = st.phi.iter().map(|p| p + 0.2 * h2).collect();
    assert!(sup(&tr.final_state.phi, &shift) < 1e-12);
    assert!((tr.final_state.y - 0.2).abs() < 1e-14);
}

#[test]
fn stationary_state_only_translates_in_height() {
    let st = stationary_state(surface(), 1.0, 64, 0.4, &sine(0.05), 0.4, 0.3).unwrap();
    let cfg = config(Profile::Constant(0.4), sine(0.05), 0.01, 0.2);
    let tr = evolve(&st, surface(), &cfg).unwrap();
    assert!(sup(&tr.final_state.pi, &st.pi) < 1e-9);
    let d: Vec<f64> = tr.final_state.phi.iter().zip(&st.phi).map(|(a, b)| a - b).collect();
    let spread = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - d.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1e-9, "{spread}");
    // the shift rate is the common value of ℋ_2
    let h2 = surface().eval(0.4, 0.3, 0.4).unwrap().h2;
    assert!((d[0] / 0.2 - h2).abs() < 1e-9);
}

#[test]
fn stationary_state_has_the_requested_slope_and_field() {
    let v = sine(0.05);
    let st = stationary_state(surface(), 1.0, 64, 0.4, &v, 0.4, 0.3).unwrap();
    let f = Fourier::new(64, 1.0);
    let target = surface().eval(0.4, 0.3, 0.4).unwrap();
    for (i, (&s, &p)) in st.slope(&f).iter().zip(&st.pi).enumerate() {
        let pt = surface().eval(s, p, 0.4 - v.value(st.x(i))).unwrap();
        assert!((pt.h1 - target.h1).abs() < 1e-10 && (pt.h2 - target.h2).abs() < 1e-10);
    }
    assert!(st.is_lipschitz());
}

#[test]
fn perturbed_flow_conserves_every_probe() {
    let st = perturbed_stationary(64, 5e-8);
    let tr = evolve(&st, surface(), &config(Profile::Constant(0.4), sine(0.05), 1e-3, 1.0)).unwrap();
    let log = &tr.log;
    for k in 0..PROBES.len() {
        assert!(log.relative_drift(k) < 1e-6, "w = {}: {:e}", PROBES[k], log.relative_drift(k));
    }
    assert!(log.generator_drift() < 1e-6);
    // a quantity outside the family is visibly not conserved
    assert!(log.control_drift() > 1e-4, "{:e}", log.control_drift());
    assert!((tr.q - st.q).abs() == 0.0);
    assert_eq!(tr.final_state.q, st.q);
}

#[test]
fn time_dependent_generator_conserves_every_probe() {
    let st = perturbed_stationary(64, 5e-8);
    let u = Profile::Sine { mean: 0.4, amplitude: 0.05, period: 1.0, phase: 0.0 };
    let tr = evolve(&st, surface(), &config(u, sine(0.05), 1e-3, 1.0)).unwrap();
    assert!(tr.log.max_relative_drift() < 1e-5, "{:e}", tr.log.max_relative_drift());
}

/// Sup over logged steps and probes of `|H_w − H_w^ref| / |H_w^ref|`.
fn deviation(log: &ConservationLog, reference: &ConservationLog, stride: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in log.values.iter().enumerate() {
        let r = &reference.values[i * stride];
        assert!((log.ys[i] - reference.ys[i * stride]).abs() < 1e-9);
        for (a, b) in row.iter().zip(r) {
            worst = worst.max((a - b).abs() / b.abs());
        }
    }
    worst
}

#[test]
fn integrator_is_fourth_order() {
    let st = perturbed_stationary(64, 5e-8);
    let run = |dy: f64| evolve(&st, surface(), &config(Profile::Constant(0.4), sine(0.05), dy, 1.0)).unwrap().log;
    let reference = run(0.00125);
    let errs: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dy| deviation(&run(dy), &reference, (dy / 0.00125f64).round() as usize))
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 4.0).abs() < 0.3, "{errs:?}");
    }
}

#[test]
fn momentum_is_conserved_for_homogeneous_generators() {
    let mut st = FieldState::uniform(1.0, 64, 0.4, 0.3).unwrap();
    st.perturb(1, 1e-5, 1e-5);
    let cfg = config(Profile::Constant(0.4), Profile::Constant(0.0), 1e-3, 0.5);
    let tr = evolve(&st, surface(), &cfg).unwrap();
    assert!(tr.log.momentum_drift() < 1e-8, "{:e}", tr.log.momentum_drift());
}

#[test]
fn leaving_the_surface_halts_with_partial_trajectory() {
    let mut st = FieldState::uniform(1.0, 32, 0.4, 0.3).unwrap();
    st.perturb(1, 0.002, 0.02);
    let cfg = EvolveConfig { record_every: 10, ..config(Profile::Constant(0.4), Profile::Constant(0.0), 1e-2, 5.0) };
    let fail = evolve(&st, surface(), &cfg).unwrap_err();
    assert!(matches!(fail.error, Error::RegimeExit { .. }), "{}", fail.error);
    let y = fail.partial.final_state.y;
    assert!(y > 0.0 && y < 5.0);
    assert_eq!(fail.partial.log.ys.last().copied(), Some(y));
}

#[test]
fn bad_evolve_configs_are_rejected() {
    let st = FieldState::uniform(1.0, 16, 0.4, 0.3).unwrap();
    for cfg in [
        config(Profile::Constant(0.4), Profile::Constant(0.0), 0.0, 1.0),
        config(Profile::Constant(0.4), Profile::Constant(0.0), 0.1, -1.0),
        config(Profile::Constant(0.9), Profile::Constant(0.0), 0.1, 1.0),
    ] {
        assert!(evolve(&st, surface(), &cfg).is_err());
    }
}

#[test]
fn tension_slope_is_the_maximizer() {
    let s = surface();
    let h = 1e-5;
    for &(sl, t) in &[(0.38, 0.23), (0.4, 0.25), (0.43, 0.27)] {
        let c = surface_tension(s, sl, t, 0.4).unwrap();
        let p = surface_tension(s, sl, t + h, 0.4).unwrap().sigma;
        let m = surface_tension(s, sl, t - h, 0.4).unwrap().sigma;
        assert!(((p - m) / (2.0 * h) - c.pi).abs() < 1e-6);
        let ps = surface_tension(s, sl + h, t, 0.4).unwrap().sigma;
        let ms = surface_tension(s, sl - h, t, 0.4).unwrap().sigma;
        assert!(((ps - ms) / (2.0 * h) - c.sigma_s).abs() < 1e-6);
        let hp = s.eval(sl, c.pi, 0.4).unwrap();
        assert!((hp.h2 - t).abs() < 1e-12);
        assert!((c.sigma - (c.pi * t - hp.value)).abs() < 1e-14);
    }
}

#[test]
fn tension_is_convex_in_the_time_slope() {
    let s = surface();
    for &sl in &[0.37, 0.4, 0.43] {
        let lo = s.eval(sl, 0.22, 0.4).unwrap().h2;
        let hi = s.eval(sl, 0.38, 0.4).unwrap().h2;
        let ts: Vec<f64> = (0..=20).map(|k| lo + (hi - lo) * k as f64 / 20.0).collect();
        let sig: Vec<f64> = ts.iter().map(|&t| surface_tension(s, sl, t, 0.4).unwrap().sigma).collect();
        for w in sig.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8);
        }
        let c = surface_tension(s, sl, ts[10], 0.4).unwrap();
        let [ss, st, tt] = c.hessian;
        assert!(tt > 0.0 && ss * tt - st * st > 0.0);
    }
}

#[test]
fn tension_fails_without_interior_maximizer() {
    assert!(matches!(surface_tension(surface(), 0.4, 5.0, 0.4), Err(Error::Range(_))));
}

#[test]
fn action_density_along_a_trajectory_is_the_tension() {
    let s = surface();
    let v = sine(0.05);
    let mut st = stationary_state(s, 1.0, 32, 0.4, &v, 0.4, 0.3).unwrap();
    st.perturb(1, 1e-4, 1e-4);
    let cfg = EvolveConfig { record_every: 50, ..config(Profile::Constant(0.4), v, 2e-3, 0.1) };
    let tr = evolve(&st, s, &cfg).unwrap();
    let f = Fourier::new(32, 1.0);
    for snap in &tr.snapshots {
        let state = FieldState::new(1.0, tr.q, snap.phi.clone(), snap.pi.clone()).unwrap();
        for (i, (&sl, &p)) in state.slope(&f).iter().zip(&state.pi).enumerate() {
            let u = 0.4 - v.value(state.x(i));
            let pt = s.eval(sl, p, u).unwrap();
            let density = p * pt.h2 - pt.value;
            let sigma = surface_tension(s, sl, pt.h2, u).unwrap().sigma;
            assert!((density - sigma).abs() < 1e-5);
        }
    }
}

fn tilted_problem(nx: usize, ny: usize, tilt: f64) -> ActionProblem {
    let bottom: Vec<f64> = (0..nx).map(|i| 0.4 * i as f64 / nx as f64).collect();
    let top = bottom.iter().map(|b| b + 0.1 * tilt).collect();
    ActionProblem {
        l: 1.0,
        t_end: 0.1,
        ny,
        q: 0.4,
        bottom,
        top,
        u: Profile::Constant(0.4),
        v: Profile::Constant(0.0),
        margin: 0.02,
    }
}

#[test]
fn uniform_boundary_data_give_the_linear_minimizer() {
    let s = surface();
    let tilt = s.eval(0.4, 0.3, 0.4).unwrap().h2;
    let p = tilted_problem(16, 8, tilt);
    let sol = minimize_action(&p, s, &ActionOptions::default()).unwrap();
    assert!(sup(&sol.h, &p.initial_guess()) < 1e-10);
    let sigma = surface_tension(s, 0.4, tilt, 0.4).unwrap().sigma;
    assert!((sol.action - 0.1 * sigma).abs() < 1e-12, "{} vs {}", sol.action, 0.1 * sigma);
    assert!((action_value(&p, s, &p.initial_guess()).unwrap() - sol.action).abs() < 1e-14);
}

#[test]
fn infeasible_boundary_data_are_rejected() {
    let s = surface();
    let mut p = tilted_problem(16, 8, 0.25);
    p.top[3] += 0.05;
    assert!(matches!(minimize_action(&p, s, &ActionOptions::default()), Err(Error::Feasibility(_))));
    let mut p = tilted_problem(16, 8, 0.25);
    p.top.pop();
    assert!(minimize_action(&p, s, &ActionOptions::default()).is_err());
}

#[test]
fn action_minimizer_is_a_flow_line() {
    let s = surface();
    let v = sine(0.05);
    let mut st = stationary_state(s, 1.0, 64, 0.4, &v, 0.4, 0.3).unwrap();
    st.perturb(1, 1e-4, 1e-4);
    let t_end = 0.1;
    let cfg = EvolveConfig { mode_cutoff: Some(2), ..config(Profile::Constant(0.4), v, t_end / 256.0, t_end) };
    let top = evolve(&st, s, &cfg).unwrap().final_state.heights();
    let p = ActionProblem {
        l: 1.0,
        t_end,
        ny: 64,
        q: st.q,
        bottom: st.heights(),
        top: top.clone(),
        u: Profile::Constant(0.4),
        v,
        margin: 0.02,
    };
    let sol = minimize_action(&p, s, &ActionOptions::default()).unwrap();
    assert!(sol.el_residual < 1e-3);
    assert!(sol.history.windows(2).all(|w| w[1].0 <= w[0].0 + 1e-13));
    let start = initial_state_from_action(&p, s, &sol.h).unwrap();
    let rebuilt = evolve(&start, s, &cfg).unwrap().final_state.heights();
    assert!(sup(&rebuilt, &top) < 1e-3);
}
