use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::cheb::{cheb_basis, cheb_basis2, cheb_coefficients, cheb_nodes, to_reference};
use crate::error::{Error, Result};
use crate::kernels::Sign;
use crate::thermo::{branch_value, select_branch, solve_contour, solve_contour_from, ContourSolution, ThermoOptions, ThermoPoint};

/// Box and resolution of a tabulated surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSpec {
    pub eta: f64,
    /// Slope `s = ∂ₓh`, the filling slot.
    pub s_range: (f64, f64),
    /// `t = π`, the field slot.
    pub t_range: (f64, f64),
    /// Spectral offset; a degenerate range gives a 2-D surface.
    pub u_range: (f64, f64),
    pub ns: usize,
    pub nt: usize,
    pub nu: usize,
    /// Branch of `ℋ±` tabulated; must win everywhere in the box.
    pub branch: Sign,
    pub thermo: ThermoOptions,
}

impl SurfaceSpec {
    pub fn validate(&self) -> Result<()> {
        let (s0, s1) = self.s_range;
        let (t0, t1) = self.t_range;
        let (u0, u1) = self.u_range;
        if !(0.0 < s0 && s0 < s1 && s1 < 1.0) {
            return Err(Error::Domain(format!("slope range ({s0}, {s1}) must be increasing inside (0, 1)")));
        }
        if !(t0 < t1) {
            return Err(Error::Domain(format!("field range ({t0}, {t1}) must be increasing")));
        }
        if !(0.0 < u0 && u0 <= u1 && u1 < self.eta) {
            return Err(Error::Domain(format!("spectral range ({u0}, {u1}) must lie in (0, {})", self.eta)));
        }
        if self.ns < 2 || self.nt < 2 {
            return Err(Error::Domain("at least two nodes per slope and field axis".into()));
        }
        if (u0 == u1) != (self.nu == 1) || self.nu == 0 {
            return Err(Error::Domain("a single spectral node goes with a degenerate spectral range".into()));
        }
        Ok(())
    }

    pub fn s_nodes(&self) -> Vec<f64> {
        cheb_nodes(self.ns, self.s_range.0, self.s_range.1)
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        cheb_nodes(self.nt, self.t_range.0, self.t_range.1)
    }

    pub fn u_nodes(&self) -> Vec<f64> {
        cheb_nodes(self.nu, self.u_range.0, self.u_range.1)
    }

    pub fn contains(&self, s: f64, t: f64, u: f64) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| {
            let slack = 1e-12 * (1.0 + (hi - lo));
            v >= lo - slack && v <= hi + slack
        };
        inside(s, self.s_range) && inside(t, self.t_range) && inside(u, self.u_range)
    }
}

/// Values along one slope node: `nt × nu`, field-major. Also returns the contour at the
/// first field node, a warm start for the neighbouring column.
pub fn tabulate_column(
    spec: &SurfaceSpec,
    s: f64,
    seed: Option<&ContourSolution>,
) -> Result<(Vec<f64>, ContourSolution)> {
    let ts = spec.t_nodes();
    let us = spec.u_nodes();
    let mut out = Vec::with_capacity(ts.len() * us.len());
    let mut first = None;
    let mut prev: Option<ContourSolution> = None;
    for (j, &t) in ts.iter().enumerate() {
        let c = match (&prev, j, seed) {
            (Some(p), _, _) => solve_contour_from(p, s, t, &spec.thermo)?,
            (None, _, Some(sd)) => solve_contour_from(sd, s, t, &spec.thermo)?,
            (None, _, None) => solve_contour(s, t, spec.eta, &spec.thermo)?,
        };
        for &u in &us {
            let (win, ..) = select_branch(&c, u)?;
            let v = branch_value(&c, u, spec.branch)?.re;
            let other = branch_value(&c, u, spec.branch.flip())?.re;
            if win != spec.branch && (v - other).abs() >= 1e-12 {
                return Err(Error::Range(format!(
                    "branch {} wins at (s, t, u) = ({s}, {t}, {u}) inside the surface box",
                    win.symbol()
                )));
            }
            out.push(v);
        }
        if j == 0 {
            first = Some(c.clone());
        }
        prev = Some(c);
    }
    Ok((out, first.expect("at least two field nodes")))
}

/// Interpolation error of `ℋ, ℋ_1, ℋ_2` against direct evaluation at probe points.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SurfaceValidation {
    pub points: usize,
    pub max_value_error: f64,
    pub max_h1_error: f64,
    pub max_h2_error: f64,
}

impl SurfaceValidation {
    pub fn max_error(&self) -> f64 {
        self.max_value_error.max(self.max_h1_error).max(self.max_h2_error)
    }
}

/// Interpolated value and derivatives in `(s, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub value: f64,
    pub h1: f64,
    pub h2: f64,
    pub h11: f64,
    pub h12: f64,
    pub h22: f64,
}

/// Tensor Chebyshev interpolant of `ℋ_u(s, t)` on a box.
#[derive(Debug, Clone)]
pub struct FreeEnergySurface {
    spec: SurfaceSpec,
    values: Vec<f64>,
    coeffs: Vec<f64>,
    pub validation: Option<SurfaceValidation>,
}

/// The surface frozen at one spectral offset.
#[derive(Debug, Clone)]
pub struct Slab {
    pub u: f64,
    s_range: (f64, f64),
    t_range: (f64, f64),
    ns: usize,
    nt: usize,
    coeffs: Vec<f64>,
}

fn transform_axis(data: &mut [f64], dims: [usize; 3], axis: usize) {
    let n = dims[axis];
    let stride = match axis {
        0 => dims[1] * dims[2],
        1 => dims[2],
        _ => 1,
    };
    let total = dims[0] * dims[1] * dims[2];
    let mut line = vec![0.0; n];
    for base in 0..total {
        if (base / stride) % n != 0 {
            continue;
        }
        for (k, l) in line.iter_mut().enumerate() {
            *l = data[base + k * stride];
        }
        let c = cheb_coefficients(&line);
        for (k, ck) in c.iter().enumerate() {
            data[base + k * stride] = *ck;
        }
    }
}

impl FreeEnergySurface {
    /// From node values indexed `(i_s * nt + i_t) * nu + i_u`.
    pub fn from_values(spec: SurfaceSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        let dims = [spec.ns, spec.nt, spec.nu];
        if values.len() != dims.iter().product::<usize>() {
            return Err(Error::Dimension { expected: dims.iter().product(), found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Range("surface table holds non-finite values".into()));
        }
        let mut coeffs = values.clone();
        for axis in 0..3 {
            transform_axis(&mut coeffs, dims, axis);
        }
        Ok(Self { spec, values, coeffs, validation: None })
    }

    /// From per-slope columns; any failed column makes the surface unusable.
    pub fn from_columns(spec: SurfaceSpec, columns: Vec<Result<Vec<f64>>>) -> Result<Self> {
        let total = columns.len();
        let mut values = Vec::with_capacity(total * spec.nt * spec.nu);
        let mut holes = 0;
        let mut first_err = None;
        for c in columns {
            match c {
                Ok(v) => values.extend(v),
                Err(e) => {
                    holes += 1;
                    first_err.get_or_insert(e);
                }
            }
        }
        if let Some(e) = first_err {
            return Err(Error::Range(format!("{holes} of {total} surface columns failed; first: {e}")));
        }
        Self::from_values(spec, values)
    }

    pub fn spec(&self) -> &SurfaceSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn range_error(&self, s: f64, t: f64, u: f64) -> Error {
        Error::Range(format!("(s, t, u) = ({s}, {t}, {u}) outside the surface box"))
    }

    /// Contracts the spectral axis at `u`.
    pub fn slab(&self, u: f64) -> Result<Slab> {
        let sp = &self.spec;
        if !sp.contains(sp.s_range.0, sp.t_range.0, u) {
            return Err(self.range_error(f64::NAN, f64::NAN, u));
        }
        let nu = sp.nu;
        let mut tu = vec![0.0; nu];
        let mut dtu = vec![0.0; nu];
        cheb_basis(nu, to_reference(u, sp.u_range.0, sp.u_range.1).clamp(-1.0, 1.0), &mut tu, &mut dtu);
        let coeffs = self.coeffs.chunks_exact(nu).map(|c| c.iter().zip(&tu).map(|(a, b)| a * b).sum()).collect();
        Ok(Slab { u, s_range: sp.s_range, t_range: sp.t_range, ns: sp.ns, nt: sp.nt, coeffs })
    }

    pub fn eval(&self, s: f64, t: f64, u: f64) -> Result<SurfacePoint> {
        if !self.spec.contains(s, t, u) {
            return Err(self.range_error(s, t, u));
        }
        self.slab(u)?.eval(s, t)
    }

    /// Compares `ℋ, ℋ_1, ℋ_2` with full thermo evaluations at `probes` and stores the result.
    pub fn validate(&mut self, probes: &[(f64, f64, f64)]) -> Result<SurfaceValidation> {
        let mut v = SurfaceValidation { points: probes.len(), ..SurfaceValidation::default() };
        for &(s, t, u) in probes {
            let p = self.eval(s, t, u)?;
            let d = ThermoPoint::new(s, t, self.spec.eta, &self.spec.thermo)?.branch_derivatives(u, self.spec.branch)?;
            v.max_value_error = v.max_value_error.max((p.value - d.value).abs());
            v.max_h1_error = v.max_h1_error.max((p.h1 - d.h1).abs());
            v.max_h2_error = v.max_h2_error.max((p.h2 - d.h2).abs());
        }
        self.validation = Some(v);
        Ok(v)
    }
}

impl Slab {
    pub fn contains(&self, s: f64, t: f64) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| {
            let slack = 1e-12 * (1.0 + (hi - lo));
            v >= lo - slack && v <= hi + slack
        };
        inside(s, self.s_range) && inside(t, self.t_range)
    }

    pub fn t_range(&self) -> (f64, f64) {
        self.t_range
    }

    pub fn s_range(&self) -> (f64, f64) {
        self.s_range
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<SurfacePoint> {
        if !self.contains(s, t) {
            return Err(Error::Range(format!("(s, t, u) = ({s}, {t}, {}) outside the surface box", self.u)));
        }
        let (ns, nt) = (self.ns, self.nt);
        let mut ts = vec![0.0; ns];
        let mut dts = vec![0.0; ns];
        let mut ddts = vec![0.0; ns];
        let mut tt = vec![0.0; nt];
        let mut dtt = vec![0.0; nt];
        let mut ddtt = vec![0.0; nt];
        let xs = to_reference(s, self.s_range.0, self.s_range.1).clamp(-1.0, 1.0);
        let xt = to_reference(t, self.t_range.0, self.t_range.1).clamp(-1.0, 1.0);
        cheb_basis2(ns, xs, &mut ts, &mut dts, &mut ddts);
        cheb_basis2(nt, xt, &mut tt, &mut dtt, &mut ddtt);
        let js = 2.0 / (self.s_range.1 - self.s_range.0);
        let jt = 2.0 / (self.t_range.1 - self.t_range.0);
        let mut out = [0.0f64; 6];
        for i in 0..ns {
            let row = &self.coeffs[i * nt..(i + 1) * nt];
            let (mut r0, mut r1, mut r2) = (0.0, 0.0, 0.0);
            for j in 0..nt {
                r0 += row[j] * tt[j];
                r1 += row[j] * dtt[j];
                r2 += row[j] * ddtt[j];
            }
            out[0] += ts[i] * r0;
            out[1] += dts[i] * r0;
            out[2] += ts[i] * r1;
            out[3] += ddts[i] * r0;
            out[4] += dts[i] * r1;
            out[5] += ts[i] * r2;
        }
        Ok(SurfacePoint {
            value: out[0],
            h1: out[1] * js,
            h2: out[2] * jt,
            h11: out[3] * js * js,
            h12: out[4] * js * jt,
            h22: out[5] * jt * jt,
        })
    }
}

/// Tabulates the whole box, slope column by slope column, warm-starting each column from
/// its neighbour.
pub fn build_surface(spec: &SurfaceSpec) -> Result<FreeEnergySurface> {
    spec.validate()?;
    let mut seed: Option<ContourSolution> = None;
    let mut cols = Vec::with_capacity(spec.ns);
    for s in spec.s_nodes() {
        let (col, first) = tabulate_column(spec, s, seed.as_ref())?;
        cols.push(Ok(col));
        seed = Some(first);
    }
    FreeEnergySurface::from_columns(spec.clone(), cols)
}
