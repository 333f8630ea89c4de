use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::field::{FieldState, Fourier, Profile};
use super::surface::{FreeEnergySurface, Slab};
use crate::error::{Error, Result};
use crate::linalg::BandedSpd;

/// `σ(s, t) = max_π (π t − ℋ(s, π))` and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tension {
    pub sigma: f64,
    /// Maximizer, equal to `∂σ/∂t`.
    pub pi: f64,
    /// `∂σ/∂s = −ℋ_1(s, π)`.
    pub sigma_s: f64,
    /// `(σ_ss, σ_st, σ_tt)`.
    pub hessian: [f64; 3],
}

/// Legendre transform of a slab in its field slot, by Newton on `ℋ_2(s, π) = t`.
pub fn tension_on_slab(slab: &Slab, s: f64, t: f64, guess: f64) -> Result<Tension> {
    let (lo, hi) = slab.t_range();
    let mut p = guess.clamp(lo, hi);
    for _ in 0..60 {
        let pt = slab.eval(s, p)?;
        if !(pt.h22 > 0.0) {
            return Err(Error::Range(format!("ℋ not convex in π at (s, π) = ({s}, {p})")));
        }
        let dp = (pt.h2 - t) / pt.h22;
        let next = p - dp;
        if !(lo..=hi).contains(&next) {
            // allow one clamped retry before giving up
            let clamped = next.clamp(lo, hi);
            if clamped == p {
                return Err(Error::Range(format!("no interior maximizer for (s, t) = ({s}, {t}) in π ∈ [{lo}, {hi}]")));
            }
            p = clamped;
            continue;
        }
        p = next;
        if dp.abs() < 1e-14 * (1.0 + p.abs()) {
            let pt = slab.eval(s, p)?;
            let sigma_tt = 1.0 / pt.h22;
            return Ok(Tension {
                sigma: p * t - pt.value,
                pi: p,
                sigma_s: -pt.h1,
                hessian: [-pt.h11 + pt.h12 * pt.h12 / pt.h22, -pt.h12 / pt.h22, sigma_tt],
            });
        }
    }
    Err(Error::Iteration { method: "Legendre transform", iterations: 60, residual: f64::NAN })
}

/// `σ_u(s, yslope)`.
pub fn surface_tension(surf: &FreeEnergySurface, s: f64, yslope: f64, u: f64) -> Result<Tension> {
    let slab = surf.slab(u)?;
    let (lo, hi) = slab.t_range();
    tension_on_slab(&slab, s, yslope, 0.5 * (lo + hi))
}

/// Boundary-value problem on `[0, L] × [0, T]`: heights at `y = 0` and `y = T`, monodromy `q` in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionProblem {
    pub l: f64,
    pub t_end: f64,
    /// Cells along `y`; there are `ny + 1` rows of nodes.
    pub ny: usize,
    pub q: f64,
    /// `h(x_i, 0)`, `x_i = iL/nx`.
    pub bottom: Vec<f64>,
    /// `h(x_i, T)`.
    pub top: Vec<f64>,
    pub u: Profile,
    pub v: Profile,
    pub margin: f64,
}

impl ActionProblem {
    pub fn nx(&self) -> usize {
        self.bottom.len()
    }

    pub fn dx(&self) -> f64 {
        self.l / self.nx() as f64
    }

    pub fn dy(&self) -> f64 {
        self.t_end / self.ny as f64
    }

    fn check(&self) -> Result<()> {
        if self.bottom.len() != self.top.len() {
            return Err(Error::Dimension { expected: self.bottom.len(), found: self.top.len() });
        }
        if self.nx() < 4 || self.ny < 2 || !(self.l > 0.0) || !(self.t_end > 0.0) {
            return Err(Error::Domain("need nx ≥ 4, ny ≥ 2 and positive extents".into()));
        }
        for (name, row) in [("bottom", &self.bottom), ("top", &self.top)] {
            for i in 0..row.len() {
                let next = if i + 1 == row.len() { row[0] + self.q } else { row[i + 1] };
                let s = (next - row[i]) / self.dx();
                if !(s > self.margin && s < 1.0 - self.margin) {
                    return Err(Error::Feasibility(format!("{name} boundary slope {s} at x index {i} violates the gradient box")));
                }
            }
        }
        Ok(())
    }

    /// Linear interpolation in `y` between the boundary rows; `(ny + 1) × nx`, row-major.
    pub fn initial_guess(&self) -> Vec<f64> {
        let nx = self.nx();
        let mut h = vec![0.0; (self.ny + 1) * nx];
        for j in 0..=self.ny {
            let a = j as f64 / self.ny as f64;
            for i in 0..nx {
                h[j * nx + i] = (1.0 - a) * self.bottom[i] + a * self.top[i];
            }
        }
        h
    }
}

/// Minimizer and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSolution {
    /// `(ny + 1) × nx` heights, row `j` at `y = j·T/ny`.
    pub h: Vec<f64>,
    pub action: f64,
    /// Max over interior nodes of the discrete Euler–Lagrange residual.
    pub el_residual: f64,
    pub iterations: usize,
    /// `(action, el_residual)` per iteration.
    pub history: Vec<(f64, f64)>,
}

/// Descent controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ActionOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500 }
    }
}

// P1 elements: cell (i, j) splits into (i,j),(i+1,j),(i,j+1) and (i+1,j+1),(i,j+1),(i+1,j).
struct Mesh<'a> {
    p: &'a ActionProblem,
    slabs: Vec<Slab>,
}

struct Eval {
    action: f64,
    grad: Vec<f64>,
    pis: Vec<f64>,
}

impl<'a> Mesh<'a> {
    fn new(p: &'a ActionProblem, surf: &FreeEnergySurface) -> Result<Self> {
        let (nx, ny) = (p.nx(), p.ny);
        let (dx, dy) = (p.dx(), p.dy());
        let mut slabs = Vec::with_capacity(2 * nx * ny);
        let mut cache: Vec<(f64, Slab)> = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                for k in 1..=2 {
                    let (xc, yc) = ((i as f64 + k as f64 / 3.0) * dx, (j as f64 + k as f64 / 3.0) * dy);
                    let u = p.u.value(yc) - p.v.value(xc);
                    let slab = match cache.iter().find(|(cu, _)| *cu == u) {
                        Some((_, s)) => s.clone(),
                        None => {
                            let s = surf.slab(u).map_err(|e| Error::Feasibility(format!("{e}")))?;
                            if cache.len() < 4 * nx {
                                cache.push((u, s.clone()));
                            }
                            s
                        }
                    };
                    slabs.push(slab);
                }
            }
        }
        Ok(Self { p, slabs })
    }

    fn at(&self, h: &[f64], i: usize, j: usize) -> f64 {
        let nx = self.p.nx();
        if i == nx {
            h[j * nx] + self.p.q
        } else {
            h[j * nx + i]
        }
    }

    fn eval(&self, h: &[f64], guesses: &[f64], want_grad: bool) -> Result<Eval> {
        let p = self.p;
        let (nx, ny) = (p.nx(), p.ny);
        let (dx, dy) = (p.dx(), p.dy());
        let area = 0.5 * dx * dy;
        let mut grad = if want_grad { vec![0.0; h.len()] } else { Vec::new() };
        let mut pis = vec![0.0; 2 * nx * ny];
        let mut action = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let ip = (i + 1) % nx;
                let (h00, h10, h01, h11) = (self.at(h, i, j), self.at(h, i + 1, j), self.at(h, i, j + 1), self.at(h, i + 1, j + 1));
                let tri = [((h10 - h00) / dx, (h01 - h00) / dy), ((h11 - h01) / dx, (h11 - h10) / dy)];
                for (k, &(sx, sy)) in tri.iter().enumerate() {
                    let idx = 2 * (j * nx + i) + k;
                    if !(sx > p.margin && sx < 1.0 - p.margin) {
                        return Err(Error::Feasibility(format!("slope {sx} leaves the gradient box at cell ({i}, {j})")));
                    }
                    let t = tension_on_slab(&self.slabs[idx], sx, sy, guesses[idx])
                        .map_err(|e| Error::Feasibility(format!("cell ({i}, {j}): {e}")))?;
                    pis[idx] = t.pi;
                    action += area * t.sigma;
                    if want_grad {
                        let (gs, gt) = (area * t.sigma_s / dx, area * t.pi / dy);
                        let n = |ii: usize, jj: usize| jj * nx + ii;
                        if k == 0 {
                            grad[n(i, j)] -= gs + gt;
                            grad[n(ip, j)] += gs;
                            grad[n(i, j + 1)] += gt;
                        } else {
                            grad[n(ip, j + 1)] += gs + gt;
                            grad[n(i, j + 1)] -= gs;
                            grad[n(ip, j)] -= gt;
                        }
                    }
                }
            }
        }
        Ok(Eval { action, grad, pis })
    }

    /// Stiffness matrix of the quadratic form with constant Hessian `m`, interior nodes only.
    fn preconditioner(&self, m: [f64; 3]) -> Result<BandedSpd> {
        let p = self.p;
        let (nx, ny) = (p.nx(), p.ny);
        let (dx, dy) = (p.dx(), p.dy());
        let area = 0.5 * dx * dy;
        let n_int = (ny - 1) * nx;
        let mut a = BandedSpd::zeros(n_int, 2 * nx - 1);
        let node = |i: usize, j: usize| -> Option<usize> {
            if j == 0 || j == ny {
                None
            } else {
                Some((j - 1) * nx + i % nx)
            }
        };
        for j in 0..ny {
            for i in 0..nx {
                // gradient = Σ_c coef_c h_c, per triangle
                let t1 = [(node(i, j), -1.0 / dx, -1.0 / dy), (node(i + 1, j), 1.0 / dx, 0.0), (node(i, j + 1), 0.0, 1.0 / dy)];
                let t2 = [(node(i + 1, j + 1), 1.0 / dx, 1.0 / dy), (node(i, j + 1), -1.0 / dx, 0.0), (node(i + 1, j), 0.0, -1.0 / dy)];
                for tri in [t1, t2] {
                    for &(na, ax, ay) in &tri {
                        for &(nb, bx, by) in &tri {
                            if let (Some(ka), Some(kb)) = (na, nb) {
                                if ka >= kb {
                                    let v = area * (ax * (m[0] * bx + m[1] * by) + ay * (m[1] * bx + m[2] * by));
                                    a.add(ka, kb, v);
                                }
                            }
                        }
                    }
                }
            }
        }
        a.factor()
    }
}

fn interior_residual(p: &ActionProblem, grad: &[f64]) -> f64 {
    let nx = p.nx();
    let scale = 1.0 / (p.dx() * p.dy());
    grad[nx..p.ny * nx].iter().map(|g| (g * scale).abs()).fold(0.0, f64::max)
}

/// `S[h] = ∫∫ σ_{u(y)−v(x)}(∂ₓh, ∂ᵧh) dx dy` on the P1 mesh.
pub fn action_value(p: &ActionProblem, surf: &FreeEnergySurface, h: &[f64]) -> Result<f64> {
    p.check()?;
    let mesh = Mesh::new(p, surf)?;
    let guesses = default_guesses(p, &mesh);
    Ok(mesh.eval(h, &guesses, false)?.action)
}

fn default_guesses(p: &ActionProblem, mesh: &Mesh<'_>) -> Vec<f64> {
    mesh.slabs.iter().map(|s| 0.5 * (s.t_range().0 + s.t_range().1)).take(2 * p.nx() * p.ny).collect()
}

/// Discrete Euler–Lagrange residual `max |∂S/∂h_ij| / (Δx Δy)` over interior nodes.
pub fn el_residual(p: &ActionProblem, surf: &FreeEnergySurface, h: &[f64]) -> Result<f64> {
    p.check()?;
    let mesh = Mesh::new(p, surf)?;
    let guesses = default_guesses(p, &mesh);
    Ok(interior_residual(p, &mesh.eval(h, &guesses, true)?.grad))
}

/// Preconditioned descent from the linear interpolant of the boundary rows.
///
/// The preconditioner is the stiffness matrix of `σ`'s Hessian at the mean gradient; steps
/// that leave the gradient box or do not decrease `S` are halved.
pub fn minimize_action(p: &ActionProblem, surf: &FreeEnergySurface, opts: &ActionOptions) -> Result<ActionSolution> {
    p.check()?;
    let mesh = Mesh::new(p, surf)?;
    let nx = p.nx();
    let mut h = p.initial_guess();
    let mut guesses = default_guesses(p, &mesh);
    let mut cur = mesh.eval(&h, &guesses, true)?;
    guesses.clone_from(&cur.pis);
    let s_mean = p.q / p.l;
    let t_mean = (p.top.iter().sum::<f64>() - p.bottom.iter().sum::<f64>()) / (nx as f64 * p.t_end);
    let u_mid = p.u.value(0.5 * p.t_end) - 0.5 * (p.v.bounds().0 + p.v.bounds().1);
    let reference = surf.slab(u_mid).and_then(|s| tension_on_slab(&s, s_mean, t_mean, 0.5 * (s.t_range().0 + s.t_range().1)))?;
    let pre = mesh.preconditioner(reference.hessian)?;
    let mut history = vec![(cur.action, interior_residual(p, &cur.grad))];
    let mut iterations = 0;
    while history.last().expect("seeded").1 > opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::Iteration { method: "action descent", iterations, residual: history.last().expect("seeded").1 });
        }
        iterations += 1;
        let g_int = &cur.grad[nx..p.ny * nx];
        let d = pre.solve(g_int);
        let slope: f64 = g_int.iter().zip(&d).map(|(g, di)| g * di).sum();
        let mut alpha = 1.0;
        let accepted = loop {
            let mut trial = h.clone();
            for (hv, dv) in trial[nx..p.ny * nx].iter_mut().zip(&d) {
                *hv -= alpha * dv;
            }
            if let Ok(e) = mesh.eval(&trial, &guesses, true) {
                let drop = cur.action - e.action;
                let armijo = drop >= 1e-4 * alpha * slope - 1e-13 * cur.action.abs().max(1.0);
                let better = interior_residual(p, &e.grad) < history.last().expect("seeded").1;
                if armijo && (drop > 0.0 || better) {
                    break Some((trial, e));
                }
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                break None;
            }
        };
        match accepted {
            Some((trial, e)) => {
                h = trial;
                cur = e;
                guesses.clone_from(&cur.pis);
                history.push((cur.action, interior_residual(p, &cur.grad)));
            }
            None => {
                return Err(Error::Iteration {
                    method: "action line search",
                    iterations,
                    residual: history.last().expect("seeded").1,
                })
            }
        }
    }
    let (action, el) = *history.last().expect("seeded");
    Ok(ActionSolution { h, action, el_residual: el, iterations, history })
}

/// Row `j` of a solution as a height profile.
pub fn row(p: &ActionProblem, h: &[f64], j: usize) -> Vec<f64> {
    let nx = p.nx();
    h[j * nx..(j + 1) * nx].to_vec()
}

/// Initial data for [`super::evolve`] read off a minimizer: the `y = 0` row and
/// `π = ∂σ/∂(∂ᵧh)` from a second-order one-sided `∂ᵧh`.
pub fn initial_state_from_action(p: &ActionProblem, surf: &FreeEnergySurface, h: &[f64]) -> Result<FieldState> {
    let nx = p.nx();
    let dy = p.dy();
    let f = Fourier::new(nx, p.l);
    let state = FieldState::from_heights(p.l, p.q, &p.bottom, vec![0.0; nx])?;
    let slopes = state.slope(&f);
    let mut pis = Vec::with_capacity(nx);
    for i in 0..nx {
        let t = (-3.0 * h[i] + 4.0 * h[nx + i] - h[2 * nx + i]) / (2.0 * dy);
        let slab = surf.slab(p.u.value(0.0) - p.v.value(state.x(i)))?;
        let (lo, hi) = slab.t_range();
        pis.push(tension_on_slab(&slab, slopes[i], t, 0.5 * (lo + hi))?.pi);
    }
    let mut out = state;
    out.pi = pis;
    Ok(out)
}
