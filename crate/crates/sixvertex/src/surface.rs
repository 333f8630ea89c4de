//! Parallel tabulation of free-energy surfaces and their text format.
//!
//! ```text
//! # sixvertex free-energy surface
//! version 1
//! eta 1
//! s_range 0.35 0.45
//! t_range 0.21 0.39
//! u_range 0.25 0.55
//! nodes 10 10 40
//! branch +
//! thermo 256 1e-12 40 0.02
//! values
//! <ns·nt·nu lines, index (i_s·nt + i_t)·nu + i_u>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use rayon::ThreadPool;
use sixvertex_core::flow::{tabulate_column, FreeEnergySurface, SurfaceSpec};
use sixvertex_core::kernels::Sign;
use sixvertex_core::thermo::ThermoOptions;

use crate::error::{AppError, AppResult};

pub const SURFACE_FORMAT_VERSION: u32 = 1;

/// Tabulates every slope column independently on `pool`. Any failed column makes the
/// whole surface unusable.
pub fn build_surface_parallel(spec: &SurfaceSpec, pool: &ThreadPool) -> AppResult<FreeEnergySurface> {
    spec.validate()?;
    let cols: Vec<_> = pool.install(|| {
        spec.s_nodes().par_iter().map(|&s| tabulate_column(spec, s, None).map(|(col, _)| col)).collect()
    });
    Ok(FreeEnergySurface::from_columns(spec.clone(), cols)?)
}

fn sign_symbol(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "+",
        Sign::Minus => "-",
    }
}

pub fn surface_to_string(surf: &FreeEnergySurface) -> String {
    let sp = surf.spec();
    let th = &sp.thermo;
    let mut out = String::new();
    out.push_str("# sixvertex free-energy surface\n");
    let _ = writeln!(out, "version {SURFACE_FORMAT_VERSION}");
    let _ = writeln!(out, "eta {:e}", sp.eta);
    let _ = writeln!(out, "s_range {:e} {:e}", sp.s_range.0, sp.s_range.1);
    let _ = writeln!(out, "t_range {:e} {:e}", sp.t_range.0, sp.t_range.1);
    let _ = writeln!(out, "u_range {:e} {:e}", sp.u_range.0, sp.u_range.1);
    let _ = writeln!(out, "nodes {} {} {}", sp.ns, sp.nt, sp.nu);
    let _ = writeln!(out, "branch {}", sign_symbol(sp.branch));
    let _ = writeln!(out, "thermo {} {:e} {} {:e}", th.m_nodes, th.newton_tol, th.max_newton, th.h_step);
    out.push_str("values\n");
    for v in surf.values() {
        let _ = writeln!(out, "{v:.17e}");
    }
    out
}

pub fn surface_from_str(text: &str, path: &Path) -> AppResult<FreeEnergySurface> {
    let bad = |msg: String| AppError::SurfaceFormat { path: path.to_path_buf(), msg };
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let mut header = |key: &str| -> AppResult<Vec<String>> {
        let line = lines.next().ok_or_else(|| bad(format!("missing `{key}` line")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(bad(format!("expected `{key}`, found `{line}`")));
        }
        Ok(parts.map(str::to_owned).collect())
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad integer `{s}`")));
    let pair = |v: &[String]| -> AppResult<(f64, f64)> {
        match v {
            [a, b] => Ok((num(a)?, num(b)?)),
            _ => Err(bad("expected two numbers".into())),
        }
    };

    let version = header("version")?;
    if version != [SURFACE_FORMAT_VERSION.to_string()] {
        return Err(bad(format!("unsupported version {version:?}")));
    }
    let eta = match header("eta")?.as_slice() {
        [e] => num(e)?,
        _ => return Err(bad("expected one number after `eta`".into())),
    };
    let s_range = pair(&header("s_range")?)?;
    let t_range = pair(&header("t_range")?)?;
    let u_range = pair(&header("u_range")?)?;
    let (ns, nt, nu) = match header("nodes")?.as_slice() {
        [a, b, c] => (int(a)?, int(b)?, int(c)?),
        _ => return Err(bad("expected three integers after `nodes`".into())),
    };
    let branch = match header("branch")?.as_slice() {
        [s] if s == "+" => Sign::Plus,
        [s] if s == "-" => Sign::Minus,
        other => return Err(bad(format!("bad branch {other:?}"))),
    };
    let thermo = match header("thermo")?.as_slice() {
        [m, tol, it, step] => {
            ThermoOptions { m_nodes: int(m)?, newton_tol: num(tol)?, max_newton: int(it)?, h_step: num(step)? }
        }
        _ => return Err(bad("expected four fields after `thermo`".into())),
    };
    if !header("values")?.is_empty() {
        return Err(bad("trailing tokens after `values`".into()));
    }
    let values = lines.map(num).collect::<AppResult<Vec<f64>>>()?;
    let spec = SurfaceSpec { eta, s_range, t_range, u_range, ns, nt, nu, branch, thermo };
    spec.validate()?;
    if values.len() != ns * nt * nu {
        return Err(bad(format!("expected {} values, found {}", ns * nt * nu, values.len())));
    }
    Ok(FreeEnergySurface::from_values(spec, values)?)
}

pub fn write_surface(surf: &FreeEnergySurface, path: &Path) -> AppResult<()> {
    std::fs::write(path, surface_to_string(surf)).map_err(|e| AppError::io(path, e))
}

pub fn read_surface(path: &Path) -> AppResult<FreeEnergySurface> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    surface_from_str(&text, path)
}
