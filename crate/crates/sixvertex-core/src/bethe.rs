//! Logarithmic Bethe equations for the sector ground state and the eigenvalue formula.
//!
//! For roots `α_1..α_n` and quantum numbers `I_j = (n+1−2j)/2` the system is
//!
//! `(1/N) Σ_k p(α_j + i v_k) + 2iH − 2π I_j / N − (1/N) Σ_{m≠j} Θ(α_j − α_m) = 0`.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::{kernel_k, p, p_prime, p_ratio, psi, theta, theta_ratio, ModelParams, Sign};
use crate::linalg::{Lu, Matrix};
use crate::{C64, I, PI, TAU};

/// Ground-state quantum numbers `I_j = (n + 1 − 2j)/2`, `j = 1..n`.
pub fn ground_state_numbers(n: usize) -> Vec<f64> {
    (1..=n).map(|j| (n as f64 + 1.0 - 2.0 * j as f64) / 2.0).collect()
}

/// Converged root set of one sector.
#[derive(Debug, Clone)]
pub struct BetheSolution {
    pub n_sites: usize,
    pub n: usize,
    pub roots: Vec<C64>,
    pub quantum_numbers: Vec<f64>,
    /// Max-norm of the logarithmic system at `roots`.
    pub residual: f64,
    pub params: ModelParams,
    /// Residual after each Newton step of the final solve.
    pub newton_history: Vec<f64>,
}

/// Solver controls.
#[derive(Debug, Clone, Copy)]
pub struct BetheOptions {
    pub tol: f64,
    pub max_newton: usize,
    /// Initial number of ramp steps from zero field and homogeneous columns.
    pub ramp_steps: usize,
    /// Smallest ramp step before giving up.
    pub min_step: f64,
}

impl Default for BetheOptions {
    fn default() -> Self {
        Self { tol: 1e-13, max_newton: 60, ramp_steps: 10, min_step: 1.0 / 1024.0 }
    }
}

struct System<'a> {
    n_sites: usize,
    eta: f64,
    h: f64,
    v: &'a [f64],
    coupling: f64,
    targets: Vec<f64>,
}

impl System<'_> {
    fn residual(&self, a: &[C64]) -> Result<Vec<C64>> {
        let nf = self.n_sites as f64;
        let mut out = Vec::with_capacity(a.len());
        for (j, &aj) in a.iter().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for &vk in self.v {
                s += p(aj + I * vk, self.eta)?;
            }
            let mut t = C64::new(0.0, 0.0);
            for (m, &am) in a.iter().enumerate() {
                if m != j {
                    t += theta(aj - am, self.eta)?;
                }
            }
            out.push(s / nf + 2.0 * I * self.h - self.targets[j] - self.coupling * t / nf);
        }
        Ok(out)
    }

    fn jacobian(&self, a: &[C64]) -> Result<Matrix<C64>> {
        let n = a.len();
        let nf = self.n_sites as f64;
        let mut jac = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = C64::new(0.0, 0.0);
            for &vk in self.v {
                diag += p_prime(a[j] + I * vk, self.eta)?;
            }
            diag /= nf;
            for m in 0..n {
                if m != j {
                    let k = self.coupling * kernel_k(a[j] - a[m], self.eta)? / nf;
                    diag -= k;
                    jac[(j, m)] = k;
                }
            }
            jac[(j, j)] = diag;
        }
        Ok(jac)
    }
}

fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Damped Newton. Returns roots, final residual and the residual history.
fn newton(sys: &System<'_>, mut a: Vec<C64>, tol: f64, max_iter: usize) -> Result<(Vec<C64>, f64, Vec<f64>)> {
    let mut f = sys.residual(&a)?;
    let mut r = max_norm(&f);
    let mut history = vec![r];
    for it in 0..max_iter {
        if r < tol {
            return Ok((a, r, history));
        }
        let jac = sys.jacobian(&a)?;
        let neg: Vec<C64> = f.iter().map(|z| -z).collect();
        let step = Lu::new(jac)?.solve(&neg);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<C64> = a.iter().zip(&step).map(|(x, d)| x + d * lambda).collect();
            if let Ok(ft) = sys.residual(&trial) {
                let rt = max_norm(&ft);
                if rt.is_finite() && (rt < r || rt < tol) {
                    a = trial;
                    f = ft;
                    r = rt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-4 {
                // no descent: accept stagnation at roundoff level, otherwise fail
                if r < 1e3 * tol {
                    return Ok((a, r, history));
                }
                return Err(Error::Iteration { method: "Bethe Newton", iterations: it + 1, residual: r });
            }
        }
        history.push(r);
    }
    if r < 1e3 * tol {
        Ok((a, r, history))
    } else {
        Err(Error::Iteration { method: "Bethe Newton", iterations: max_iter, residual: r })
    }
}

/// Inverts `p(α) = y` on the real line (p is increasing there).
fn invert_p(y: f64, eta: f64) -> Result<f64> {
    let mut lo = -PI / 2.0;
    let mut hi = PI / 2.0;
    let mut x = y / p_prime(C64::new(0.0, 0.0), eta)?.re;
    for _ in 0..200 {
        let f = p(C64::new(x, 0.0), eta)?.re - y;
        if f.abs() < 1e-15 {
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = p_prime(C64::new(x, 0.0), eta)?.re;
        let nx = x - f / d;
        x = if nx > lo && nx < hi { nx } else { 0.5 * (lo + hi) };
    }
    Ok(x)
}

/// Solves the ground-state Bethe equations of sector `n` on `N` columns.
///
/// The solve starts at zero field with homogeneous columns from the non-interacting
/// seed, then ramps `H` and `{v_k}` to their targets, halving the ramp step whenever
/// Newton fails.
pub fn solve_bethe(n_sites: usize, n: usize, params: &ModelParams, opts: BetheOptions) -> Result<BetheSolution> {
    params.validate()?;
    if n > n_sites {
        return Err(Error::Domain(alloc::format!("n = {n} exceeds N = {n_sites}")));
    }
    if !params.v_list.is_empty() && params.v_list.len() != n_sites {
        return Err(Error::Dimension { expected: n_sites, found: params.v_list.len() });
    }
    let eta = params.eta;
    let nf = n_sites as f64;
    let qn = ground_state_numbers(n);
    let targets: Vec<f64> = qn.iter().map(|&ij| TAU * ij / nf).collect();
    let v_target: Vec<f64> = (0..n_sites).map(|k| params.v(k)).collect();
    let finish = |roots: Vec<C64>, residual: f64, history: Vec<f64>| -> Result<BetheSolution> {
        for a in 0..roots.len() {
            for b in a + 1..roots.len() {
                if (roots[a] - roots[b]).norm() < 1e-8 {
                    return Err(Error::Degeneracy(alloc::format!("roots {a} and {b} coincide at {}", roots[a])));
                }
            }
        }
        Ok(BetheSolution {
            n_sites,
            n,
            roots,
            quantum_numbers: qn.clone(),
            residual,
            params: params.clone(),
            newton_history: history,
        })
    };
    if n == 0 {
        return finish(Vec::new(), 0.0, Vec::new());
    }

    let zeros = vec![0.0; n_sites];
    let seed: Vec<C64> = targets.iter().map(|&y| invert_p(y, eta).map(|x| C64::new(x, 0.0))).collect::<Result<_>>()?;

    // stage 1: switch on the interaction at zero field
    let mut sys = System { n_sites, eta, h: 0.0, v: &zeros, coupling: 1.0, targets: targets.clone() };
    let mut roots = match newton(&sys, seed.clone(), opts.tol, opts.max_newton) {
        Ok((a, _, _)) => a,
        Err(_) => {
            let mut a = seed;
            let mut c = 0.0;
            let mut step = 0.25;
            while c < 1.0 {
                let next = (c + step).min(1.0);
                sys.coupling = next;
                match newton(&sys, a.clone(), opts.tol, opts.max_newton) {
                    Ok((b, _, _)) => {
                        a = b;
                        c = next;
                    }
                    Err(e) => {
                        step *= 0.5;
                        if step < opts.min_step {
                            return Err(Error::Continuation(alloc::format!(
                                "interaction homotopy stalled at coupling {c}: {e}"
                            )));
                        }
                    }
                }
            }
            a
        }
    };

    // stage 2: ramp field and inhomogeneities
    let needs_ramp = params.h_field != 0.0 || v_target.iter().any(|&v| v != 0.0);
    let mut s = 0.0;
    let mut step = if needs_ramp { 1.0 / opts.ramp_steps.max(1) as f64 } else { 1.0 };
    let mut v_cur = zeros.clone();
    loop {
        let next = if needs_ramp && s + step < 1.0 - 1e-12 { s + step } else { 1.0 };
        for (vc, vt) in v_cur.iter_mut().zip(&v_target) {
            *vc = next * vt;
        }
        let sys = System { n_sites, eta, h: next * params.h_field, v: &v_cur, coupling: 1.0, targets: targets.clone() };
        match newton(&sys, roots.clone(), opts.tol, opts.max_newton) {
            Ok((a, r, hist)) => {
                roots = a;
                s = next;
                if s >= 1.0 {
                    return finish(roots, r, hist);
                }
            }
            Err(e) => {
                step *= 0.5;
                if step < opts.min_step {
                    return Err(Error::Continuation(alloc::format!("field/inhomogeneity ramp stalled at {s}: {e}")));
                }
            }
        }
    }
}

impl BetheSolution {
    /// Max-norm of the logarithmic system at the stored roots.
    pub fn log_residual(&self) -> Result<f64> {
        let v: Vec<f64> = (0..self.n_sites).map(|k| self.params.v(k)).collect();
        let targets: Vec<f64> = self.quantum_numbers.iter().map(|&ij| TAU * ij / self.n_sites as f64).collect();
        let sys = System { n_sites: self.n_sites, eta: self.params.eta, h: self.params.h_field, v: &v, coupling: 1.0, targets };
        Ok(max_norm(&sys.residual(&self.roots)?))
    }

    /// Relative residual of the product form
    /// `e^{−2NH} ∏_k e^{ip(α_j+iv_k)} = (−1)^{n+1} ∏_{m≠j} e^{iΘ(α_j−α_m)}`.
    pub fn product_residual(&self) -> f64 {
        let eta = self.params.eta;
        let sign = if (self.n + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut worst: f64 = 0.0;
        for (j, &aj) in self.roots.iter().enumerate() {
            let mut lhs = C64::new((-2.0 * self.n_sites as f64 * self.params.h_field).exp(), 0.0);
            for k in 0..self.n_sites {
                lhs *= p_ratio(aj + I * self.params.v(k), eta);
            }
            let mut rhs = C64::new(sign, 0.0);
            for (m, &am) in self.roots.iter().enumerate() {
                if m != j {
                    rhs *= theta_ratio(aj - am, eta);
                }
            }
            worst = worst.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()));
        }
        worst
    }
}

/// Λ(u, {v_k}, H, 0) from a root set; `u` may differ from the one used to solve.
pub fn eigenvalue(sol: &BetheSolution, u: f64) -> Result<C64> {
    let params = &sol.params;
    params.check_spectral(u)?;
    let eta = params.eta;
    let nf = sol.n_sites as f64;
    let mut lp = C64::new(nf * params.h_field, 0.0);
    let mut lm = C64::new(-nf * params.h_field, 0.0);
    for k in 0..sol.n_sites {
        lp += (eta - u + params.v(k)).sinh().ln();
        lm += (u - params.v(k)).sinh().ln();
    }
    for &a in &sol.roots {
        let z = a + I * u;
        lp += psi(z, Sign::Plus, eta).map_err(collision)?;
        lm += psi(z, Sign::Minus, eta).map_err(collision)?;
    }
    Ok(lp.exp() + lm.exp())
}

fn collision(e: Error) -> Error {
    match e {
        Error::Singularity(m) => Error::Singularity(alloc::format!("spectral parameter collides with a root: {m}")),
        other => other,
    }
}
