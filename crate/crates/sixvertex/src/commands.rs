//! One function per subcommand. Each validates its section, runs the pipeline, writes
//! CSV data and a JSON summary under the output directory and returns the summary.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sixvertex_core::bethe::{eigenvalue, solve_bethe, BetheOptions};
use sixvertex_core::flow::{
    evolve, initial_state_from_action, minimize_action, stationary_state, ActionOptions, ActionProblem, EvolveConfig,
    FieldState, FreeEnergySurface, Profile, SurfaceSpec, Trajectory,
};
use sixvertex_core::kernels::{
    ice_rule_residual, kernel_k, p, p_prime, psi, r_matrix, theta, yang_baxter_residual, ModelParams, Sign,
};
use sixvertex_core::thermo::free_energy_full;
use sixvertex_core::xfer::SectorOperator;
use sixvertex_core::C64;

use crate::config::{
    ActionSection, BetheSection, EvolveSection, FreeEnergySection, IdentitiesSection, InitialStateConfig, KernelsSection,
    SurfaceSection, XferSection,
};
use crate::error::{AppError, AppResult};
use crate::output::{write_csv, write_json};
use crate::pool::build_pool;
use crate::surface::{build_surface_parallel, read_surface, write_surface};
use crate::sweep::{sweep_verify, IdentityGrid};

/// Where outputs go; created on first use.
#[derive(Debug, Clone)]
pub struct OutDir(pub PathBuf);

impl OutDir {
    pub fn file(&self, name: impl AsRef<Path>) -> AppResult<PathBuf> {
        std::fs::create_dir_all(&self.0).map_err(|e| AppError::io(&self.0, e))?;
        Ok(self.0.join(name))
    }
}

fn sine_inhomogeneities(n_sites: usize, amplitude: f64) -> Vec<f64> {
    if amplitude == 0.0 {
        return Vec::new();
    }
    (0..n_sites).map(|k| amplitude * (std::f64::consts::TAU * (k + 1) as f64 / n_sites as f64).sin()).collect()
}

fn model(eta: f64, u: f64, h: f64, v_field: f64, n_sites: usize, v_amplitude: f64) -> AppResult<ModelParams> {
    Ok(ModelParams::new(eta, u)?.with_fields(h, v_field)?.with_inhomogeneities(sine_inhomogeneities(n_sites, v_amplitude))?)
}

#[derive(Serialize)]
struct KernelRow {
    alpha_re: f64,
    alpha_im: f64,
    p_re: f64,
    p_im: f64,
    dp_re: f64,
    dp_im: f64,
    theta_re: f64,
    theta_im: f64,
    k_re: f64,
    k_im: f64,
    psi_plus_re: f64,
    psi_plus_im: f64,
    psi_minus_re: f64,
    psi_minus_im: f64,
}

pub fn check_kernels(sec: &KernelsSection, out: &OutDir) -> AppResult<Value> {
    let params = ModelParams::new(sec.eta, sec.u)?.with_fields(sec.h, 0.0)?;
    let eta = sec.eta;
    let mut rows = Vec::with_capacity(sec.alphas.len());
    for &re in &sec.alphas {
        let a = C64::new(re, sec.imag);
        let (pv, dp, th, k) = (p(a, eta)?, p_prime(a, eta)?, theta(a, eta)?, kernel_k(a, eta)?);
        let (pp, pm) = (psi(a, Sign::Plus, eta)?, psi(a, Sign::Minus, eta)?);
        rows.push(KernelRow {
            alpha_re: re,
            alpha_im: sec.imag,
            p_re: pv.re,
            p_im: pv.im,
            dp_re: dp.re,
            dp_im: dp.im,
            theta_re: th.re,
            theta_im: th.im,
            k_re: k.re,
            k_im: k.im,
            psi_plus_re: pp.re,
            psi_plus_im: pp.im,
            psi_minus_re: pm.re,
            psi_minus_im: pm.im,
        });
    }
    write_csv(&out.file("kernels.csv")?, &rows)?;
    let w = params.weights();
    let r = r_matrix(sec.u, sec.h, 0.0, eta);
    let summary = json!({
        "command": "check-kernels",
        "eta": eta,
        "u": sec.u,
        "weights": { "a": w.a, "b": w.b, "c": w.c },
        "delta": w.delta()?,
        "yang_baxter_residual": yang_baxter_residual(sec.u, sec.w, sec.h, eta),
        "ice_rule_residual": ice_rule_residual(&r, [0.7_f64.exp(), (-0.7_f64).exp()]),
        "points": rows.len(),
    });
    write_json(&out.file("kernels.json")?, &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct SectorRow {
    n: usize,
    dim: usize,
    eigenvalue: f64,
    weighted: f64,
    residual: f64,
    iterations: usize,
    dense_fallback: bool,
}

pub fn xfer_eigen(sec: &XferSection, out: &OutDir) -> AppResult<Value> {
    let params = model(sec.eta, sec.u, sec.h, sec.v_field, sec.n_sites, sec.v_amplitude)?;
    let sectors: Vec<usize> = if sec.sectors.is_empty() { (0..=sec.n_sites).collect() } else { sec.sectors.clone() };
    let mut rows = Vec::with_capacity(sectors.len());
    for n in sectors {
        let op = SectorOperator::new(sec.n_sites, n, params.clone())?;
        let top = op.top_eigenvalue(sec.u, sec.tol)?;
        let weighted = top.value * ((sec.n_sites as f64 - 2.0 * n as f64) * sec.v_field).exp();
        rows.push(SectorRow {
            n,
            dim: op.dim(),
            eigenvalue: top.value,
            weighted,
            residual: top.residual,
            iterations: top.iterations,
            dense_fallback: top.dense_fallback,
        });
    }
    write_csv(&out.file("xfer.csv")?, &rows)?;
    let best = rows.iter().max_by(|a, b| a.weighted.total_cmp(&b.weighted));
    let summary = json!({
        "command": "xfer-eigen",
        "n_sites": sec.n_sites,
        "sectors": rows.len(),
        "dominant_sector": best.map(|r| r.n),
        "dominant_weighted_eigenvalue": best.map(|r| r.weighted),
        "log_per_site": best.map(|r| r.weighted.ln() / sec.n_sites as f64),
    });
    write_json(&out.file("xfer.json")?, &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct RootRow {
    k: usize,
    quantum_number: f64,
    re: f64,
    im: f64,
}

pub fn bethe_solve(sec: &BetheSection, out: &OutDir) -> AppResult<Value> {
    let params = model(sec.eta, sec.u, sec.h, 0.0, sec.n_sites, sec.v_amplitude)?;
    let opts = BetheOptions { tol: sec.tol, ..BetheOptions::default() };
    let sol = solve_bethe(sec.n_sites, sec.n, &params, opts)?;
    let lam = eigenvalue(&sol, sec.u)?;
    let rows: Vec<RootRow> = sol
        .roots
        .iter()
        .zip(&sol.quantum_numbers)
        .enumerate()
        .map(|(k, (z, &qn))| RootRow { k, quantum_number: qn, re: z.re, im: z.im })
        .collect();
    write_csv(&out.file("bethe_roots.csv")?, &rows)?;
    let mut summary = json!({
        "command": "bethe-solve",
        "n_sites": sec.n_sites,
        "n": sec.n,
        "residual": sol.residual,
        "eigenvalue_re": lam.re,
        "eigenvalue_im": lam.im,
    });
    if sec.compare {
        let top = SectorOperator::new(sec.n_sites, sec.n, params)?.top_eigenvalue(sec.u, 1e-14)?;
        summary["transfer_eigenvalue"] = json!(top.value);
        summary["relative_error"] = json!((lam.re - top.value).abs() / top.value.abs());
    }
    write_json(&out.file("bethe.json")?, &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct FreeEnergyRow {
    eta: f64,
    u: f64,
    q: f64,
    h: f64,
    value: f64,
    branch: char,
    other: f64,
    tie: bool,
    h1: f64,
    h2: f64,
    h11: f64,
    h12: f64,
    h22: f64,
    h13: f64,
    h23: f64,
    max_imag: f64,
}

pub fn free_energy(sec: &FreeEnergySection, out: &OutDir) -> AppResult<Value> {
    let pt = free_energy_full(sec.u, sec.q, sec.h, sec.eta, &sec.thermo.to_options()?)?;
    let d1 = pt.d1.unwrap_or([f64::NAN; 2]);
    let d2 = pt.d2.unwrap_or([f64::NAN; 5]);
    let row = FreeEnergyRow {
        eta: sec.eta,
        u: pt.u,
        q: pt.q,
        h: pt.h,
        value: pt.value,
        branch: pt.branch.symbol(),
        other: pt.other,
        tie: pt.tie,
        h1: d1[0],
        h2: d1[1],
        h11: d2[0],
        h12: d2[1],
        h22: d2[2],
        h13: d2[3],
        h23: d2[4],
        max_imag: pt.max_imag,
    };
    write_csv(&out.file("free_energy.csv")?, std::slice::from_ref(&row))?;
    let mut summary = serde_json::to_value(&row)?;
    summary["command"] = json!("free-energy");
    write_json(&out.file("free_energy.json")?, &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct IdentityRow {
    index: usize,
    q: f64,
    h: f64,
    u: f64,
    w: f64,
    source: &'static str,
    branch_u: Option<char>,
    branch_w: Option<char>,
    residual1: Option<f64>,
    residual2: Option<f64>,
    residual3: Option<f64>,
    error: Option<String>,
}

pub fn identity_grid(sec: &IdentitiesSection) -> AppResult<IdentityGrid> {
    Ok(IdentityGrid {
        eta: sec.eta,
        qs: sec.q.clone(),
        hs: sec.h.clone(),
        pairs: sec.pairs(),
        source: sec.source.into(),
        thermo: sec.thermo.to_options()?,
    })
}

pub fn verify_identities(sec: &IdentitiesSection, workers: Option<usize>, out: &OutDir) -> AppResult<Value> {
    let grid = identity_grid(sec)?;
    let pool = build_pool(workers)?;
    let report = sweep_verify(&grid, &pool);
    let source = grid.source.name();
    let rows: Vec<IdentityRow> = grid
        .points()
        .iter()
        .zip(&report.results)
        .enumerate()
        .map(|(index, (&(q, h, u, w), r))| match r {
            Ok(rep) => IdentityRow {
                index,
                q,
                h,
                u,
                w,
                source,
                branch_u: Some(rep.branch_u.symbol()),
                branch_w: Some(rep.branch_w.symbol()),
                residual1: Some(rep.residual1),
                residual2: Some(rep.residual2),
                residual3: Some(rep.residual3),
                error: None,
            },
            Err(f) => IdentityRow {
                index,
                q,
                h,
                u,
                w,
                source,
                branch_u: None,
                branch_w: None,
                residual1: None,
                residual2: None,
                residual3: None,
                error: Some(f.error.clone()),
            },
        })
        .collect();
    write_csv(&out.file("identities.csv")?, &rows)?;
    let mut summary = serde_json::to_value(&report.summary)?;
    summary["command"] = json!("verify-identities");
    write_json(&out.file("identities.json")?, &summary)?;
    Ok(summary)
}

pub fn surface_spec(sec: &SurfaceSection) -> AppResult<SurfaceSpec> {
    let spec = SurfaceSpec {
        eta: sec.eta,
        s_range: sec.s_range,
        t_range: sec.t_range,
        u_range: sec.u_range,
        ns: sec.ns,
        nt: sec.nt,
        nu: sec.nu,
        branch: sec.branch.into(),
        thermo: sec.thermo.to_options()?,
    };
    spec.validate()?;
    Ok(spec)
}

/// Deterministic off-grid probes: a Halton sequence in the inner 90% of the box.
pub fn validation_probes(spec: &SurfaceSpec, count: usize) -> Vec<(f64, f64, f64)> {
    fn halton(mut i: usize, base: usize) -> f64 {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    let lerp = |(lo, hi): (f64, f64), a: f64| lo + (hi - lo) * (0.05 + 0.9 * a);
    (1..=count)
        .map(|i| (lerp(spec.s_range, halton(i, 2)), lerp(spec.t_range, halton(i, 3)), lerp(spec.u_range, halton(i, 5))))
        .collect()
}

pub fn build_surface(sec: &SurfaceSection, workers: Option<usize>, out: &OutDir) -> AppResult<Value> {
    let spec = surface_spec(sec)?;
    let pool = build_pool(workers)?;
    let mut surf = build_surface_parallel(&spec, &pool)?;
    let v = surf.validate(&validation_probes(&spec, sec.validation_probes))?;
    let path = out.file(&sec.output)?;
    write_surface(&surf, &path)?;
    let summary = json!({
        "command": "build-surface",
        "path": path.display().to_string(),
        "points": spec.ns * spec.nt * spec.nu,
        "validation_points": v.points,
        "max_value_error": v.max_value_error,
        "max_h1_error": v.max_h1_error,
        "max_h2_error": v.max_h2_error,
    });
    write_json(&out.file("surface.json")?, &summary)?;
    Ok(summary)
}

pub fn initial_state(surf: &FreeEnergySurface, init: &InitialStateConfig, u: f64, v: &Profile) -> AppResult<FieldState> {
    if init.g < 4 || !(init.l > 0.0) {
        return Err(AppError::Invalid(format!("need g ≥ 4 and l > 0, got g = {}, l = {}", init.g, init.l)));
    }
    let mut st = stationary_state(surf, init.l, init.g, u, v, init.s0, init.pi0)?;
    st.perturb(init.mode, init.eps, init.eps);
    Ok(st)
}

#[derive(Serialize)]
struct TrajectoryRow {
    y: f64,
    x: f64,
    h: f64,
    pi: f64,
}

#[derive(Serialize)]
struct ConservationRow {
    y: f64,
    w: f64,
    h_w: f64,
}

fn write_trajectory(tr: &Trajectory, out: &OutDir) -> AppResult<()> {
    let xs = tr.xs();
    let mut rows = Vec::with_capacity(tr.snapshots.len() * xs.len());
    for snap in &tr.snapshots {
        for (i, &x) in xs.iter().enumerate() {
            rows.push(TrajectoryRow { y: snap.y, x, h: tr.q * x / tr.l + snap.phi[i], pi: snap.pi[i] });
        }
    }
    write_csv(&out.file("trajectory.csv")?, &rows)?;
    let log = &tr.log;
    let mut rows = Vec::with_capacity(log.ys.len() * log.probes.len());
    for (y, vals) in log.ys.iter().zip(&log.values) {
        for (w, v) in log.probes.iter().zip(vals) {
            rows.push(ConservationRow { y: *y, w: *w, h_w: *v });
        }
    }
    write_csv(&out.file("conservation.csv")?, &rows)
}

pub fn evolve_command(sec: &EvolveSection, out: &OutDir) -> AppResult<Value> {
    let surf = read_surface(&sec.surface)?;
    let u = sec.u.to_profile()?;
    let v = sec.v.to_profile()?;
    let st = initial_state(&surf, &sec.initial, u.value(0.0), &v)?;
    let cfg = EvolveConfig {
        u,
        v,
        dy: sec.dy,
        y_end: sec.y_end,
        probes: sec.probes.clone(),
        mode_cutoff: sec.mode_cutoff,
        record_every: sec.record_every,
        margin: sec.margin,
    };
    let (tr, failure) = match evolve(&st, &surf, &cfg) {
        Ok(tr) => (tr, None),
        Err(f) => (f.partial, Some(f.error)),
    };
    write_trajectory(&tr, out)?;
    let log = &tr.log;
    let drifts: Vec<f64> = (0..log.probes.len()).map(|k| log.relative_drift(k)).collect();
    let summary = json!({
        "command": "evolve",
        "status": if failure.is_some() { "regime-exit" } else { "ok" },
        "error": failure.as_ref().map(|e| e.to_string()),
        "y_reached": tr.final_state.y,
        "probes": log.probes,
        "relative_drift": drifts,
        "max_relative_drift": log.max_relative_drift(),
        "generator_drift": log.generator_drift(),
        "momentum_drift": log.momentum_drift(),
        "control_drift": log.control_drift(),
    });
    write_json(&out.file("evolve.json")?, &summary)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(summary),
    }
}

#[derive(Serialize)]
struct HeightRow {
    y: f64,
    x: f64,
    h: f64,
}

pub fn minimize_action_command(sec: &ActionSection, out: &OutDir) -> AppResult<Value> {
    let surf = read_surface(&sec.surface)?;
    let v = sec.v.to_profile()?;
    if sec.flow_steps == 0 || !(sec.t_end > 0.0) {
        return Err(AppError::Invalid("flow_steps and t_end must be positive".into()));
    }
    let st = initial_state(&surf, &sec.initial, sec.u, &v)?;
    let cfg = EvolveConfig {
        u: Profile::Constant(sec.u),
        v,
        dy: sec.t_end / sec.flow_steps as f64,
        y_end: sec.t_end,
        probes: Vec::new(),
        mode_cutoff: sec.mode_cutoff,
        record_every: sec.flow_steps,
        margin: sec.margin,
    };
    let top = evolve(&st, &surf, &cfg).map_err(|f| f.error)?.final_state.heights();
    let problem = ActionProblem {
        l: st.l,
        t_end: sec.t_end,
        ny: sec.ny,
        q: st.q,
        bottom: st.heights(),
        top: top.clone(),
        u: Profile::Constant(sec.u),
        v,
        margin: sec.margin,
    };
    let sol = minimize_action(&problem, &surf, &ActionOptions { tol: sec.tol, max_iter: sec.max_iter })?;
    let start = initial_state_from_action(&problem, &surf, &sol.h)?;
    let rebuilt = evolve(&start, &surf, &cfg).map_err(|f| f.error)?.final_state.heights();
    let recon = rebuilt.iter().zip(&top).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let nx = problem.nx();
    let rows: Vec<HeightRow> = sol
        .h
        .iter()
        .enumerate()
        .map(|(k, &h)| HeightRow { y: (k / nx) as f64 * problem.dy(), x: (k % nx) as f64 * problem.dx(), h })
        .collect();
    write_csv(&out.file("action_heights.csv")?, &rows)?;
    let summary = json!({
        "command": "minimize-action",
        "nx": nx,
        "ny": sec.ny,
        "action": sol.action,
        "el_residual": sol.el_residual,
        "iterations": sol.iterations,
        "reconstruction_error": recon,
    });
    write_json(&out.file("action.json")?, &summary)?;
    Ok(summary)
}
