use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::ThermoOptions;
use crate::error::{Error, Result};
use crate::kernels::{kernel_k, p, p_pole_distance, p_prime, theta};
use crate::linalg::{Lu, Matrix};
use crate::quadrature::LegendreRule;
use crate::{C64, I, TAU};

/// Discretized root contour `α(t)`, `t ∈ [−q/2, q/2]`.
#[derive(Debug, Clone)]
pub struct ContourSolution {
    pub q: f64,
    pub h: f64,
    pub eta: f64,
    /// Gauss–Legendre nodes `t_i` and weights `w_i` on `[−q/2, q/2]`.
    pub rule: LegendreRule,
    pub alpha: Vec<C64>,
    /// `dα/dt` at the nodes, equal to `1/ρ`.
    pub alpha_prime: Vec<C64>,
    /// Root density `ρ(α_i) = dt/dα`.
    pub rho: Vec<C64>,
    pub a: C64,
    pub b: C64,
    pub rho_a: C64,
    pub rho_b: C64,
    /// Max-norm of the discretized contour equation at the nodes.
    pub residual: f64,
}

impl ContourSolution {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.rule.weights
    }

    pub fn nodes_t(&self) -> &[f64] {
        &self.rule.nodes
    }

    /// `Σ_j w_j Θ(z − α_j)`, the quadrature of `∫_C Θ(z − β) ρ(β) dβ`.
    pub fn theta_sum(&self, z: C64) -> Result<C64> {
        let mut s = C64::new(0.0, 0.0);
        for (&aj, &wj) in self.alpha.iter().zip(&self.rule.weights) {
            s += theta(z - aj, self.eta)? * wj;
        }
        Ok(s)
    }

    /// `Σ_j w_j K(z − α_j)`.
    pub fn kernel_sum(&self, z: C64) -> Result<C64> {
        let mut s = C64::new(0.0, 0.0);
        for (&aj, &wj) in self.alpha.iter().zip(&self.rule.weights) {
            s += kernel_k(z - aj, self.eta)? * wj;
        }
        Ok(s)
    }

    /// `t(z) = [p(z) + 2iH − Σ_j w_j Θ(z − α_j)] / 2π`, the counting function.
    pub fn counting(&self, z: C64) -> Result<C64> {
        Ok((p(z, self.eta)? + 2.0 * I * self.h - self.theta_sum(z)?) / TAU)
    }

    /// `ρ(z) = [p′(z) − Σ_j w_j K(z − α_j)] / 2π` at any point near the contour.
    pub fn density(&self, z: C64) -> Result<C64> {
        Ok((p_prime(z, self.eta)? - self.kernel_sum(z)?) / TAU)
    }

    /// Solves `t(z) = t` for `z` by Newton from `guess`.
    pub fn point_at(&self, t: f64, guess: C64) -> Result<C64> {
        let mut z = guess;
        for it in 0..60 {
            let f = self.counting(z)? - t;
            if f.norm() < 1e-15 {
                return Ok(z);
            }
            let step = f / self.density(z)?;
            z -= step;
            if step.norm() < 1e-15 * (1.0 + z.norm()) {
                return Ok(z);
            }
            if !z.is_finite() {
                return Err(Error::Iteration { method: "endpoint Newton", iterations: it, residual: f.norm() });
            }
        }
        let r = (self.counting(z)? - t).norm();
        if r < 1e-12 {
            Ok(z)
        } else {
            Err(Error::Iteration { method: "endpoint Newton", iterations: 60, residual: r })
        }
    }

    /// `α′` by spectral differentiation of the Legendre interpolant of the node values.
    pub fn spectral_alpha_prime(&self) -> Vec<C64> {
        let d = self.rule.differentiation_matrix();
        let n = self.len();
        (0..n)
            .map(|i| (0..n).fold(C64::new(0.0, 0.0), |acc, j| acc + self.alpha[j] * d[i * n + j]))
            .collect()
    }

    /// Smallest distance from the nodes and endpoints to a singularity of p or K.
    pub fn pole_distance(&self) -> f64 {
        let mut pts = self.alpha.clone();
        pts.push(self.a);
        pts.push(self.b);
        let mut d = f64::INFINITY;
        for &x in &pts {
            d = d.min(p_pole_distance(x, self.eta));
        }
        // every K(α_i − α_j) pole sits at imaginary offset ±η
        let hi = pts.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
        let lo = pts.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
        d.min(self.eta - (hi - lo))
    }
}

/// Residual vector of the discretized contour equation.
fn contour_residual(alpha: &[C64], rule: &LegendreRule, h: f64, eta: f64) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(alpha.len());
    for (i, &ai) in alpha.iter().enumerate() {
        let mut s = p(ai, eta)? + 2.0 * I * h - TAU * rule.nodes[i];
        for (&aj, &wj) in alpha.iter().zip(&rule.weights) {
            s -= theta(ai - aj, eta)? * wj;
        }
        out.push(s);
    }
    Ok(out)
}

fn contour_jacobian(alpha: &[C64], rule: &LegendreRule, eta: f64) -> Result<Matrix<C64>> {
    let n = alpha.len();
    let mut jac = Matrix::zeros(n, n);
    for i in 0..n {
        let mut diag = p_prime(alpha[i], eta)?;
        for j in 0..n {
            if j != i {
                let k = kernel_k(alpha[i] - alpha[j], eta)? * rule.weights[j];
                jac[(i, j)] = k;
                diag -= k;
            }
        }
        jac[(i, i)] = diag;
    }
    Ok(jac)
}

fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn newton(mut alpha: Vec<C64>, rule: &LegendreRule, h: f64, eta: f64, opts: &ThermoOptions) -> Result<(Vec<C64>, f64)> {
    let mut f = contour_residual(&alpha, rule, h, eta)?;
    let mut r = max_norm(&f);
    for it in 0..opts.max_newton {
        if r < opts.newton_tol {
            return Ok((alpha, r));
        }
        let jac = contour_jacobian(&alpha, rule, eta)?;
        let neg: Vec<C64> = f.iter().map(|z| -z).collect();
        let step = Lu::new(jac)?.solve(&neg);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<C64> = alpha.iter().zip(&step).map(|(a, d)| a + d * lambda).collect();
            if let Ok(ft) = contour_residual(&trial, rule, h, eta) {
                let rt = max_norm(&ft);
                if rt.is_finite() && rt < r {
                    alpha = trial;
                    f = ft;
                    r = rt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-3 {
                if r < 1e2 * opts.newton_tol {
                    return Ok((alpha, r));
                }
                return Err(Error::Iteration { method: "contour Newton", iterations: it + 1, residual: r });
            }
        }
    }
    if r < 1e2 * opts.newton_tol {
        Ok((alpha, r))
    } else {
        Err(Error::Iteration { method: "contour Newton", iterations: opts.max_newton, residual: r })
    }
}

fn check_domain(q: f64, h: f64, eta: f64, opts: &ThermoOptions) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(alloc::format!("filling q must lie in (0, 1), got {q}")));
    }
    if !(eta > 0.0) || !h.is_finite() {
        return Err(Error::Domain("eta must be positive and H finite".into()));
    }
    if opts.m_nodes < 64 {
        return Err(Error::Domain(alloc::format!("at least 64 contour nodes required, got {}", opts.m_nodes)));
    }
    Ok(())
}

/// Finishes a node solution: densities, endpoints and pole checks.
fn assemble(alpha: Vec<C64>, rule: LegendreRule, q: f64, h: f64, eta: f64, residual: f64) -> Result<ContourSolution> {
    let n = alpha.len();
    let mut c = ContourSolution {
        q,
        h,
        eta,
        rule,
        alpha,
        alpha_prime: vec![C64::new(0.0, 0.0); n],
        rho: vec![C64::new(0.0, 0.0); n],
        a: C64::new(0.0, 0.0),
        b: C64::new(0.0, 0.0),
        rho_a: C64::new(0.0, 0.0),
        rho_b: C64::new(0.0, 0.0),
        residual,
    };
    for i in 0..n {
        let r = c.density(c.alpha[i])?;
        c.rho[i] = r;
        c.alpha_prime[i] = C64::new(1.0, 0.0) / r;
    }
    let extrapolate = |i0: usize, i1: usize, t: f64| {
        let (t0, t1) = (c.rule.nodes[i0], c.rule.nodes[i1]);
        c.alpha[i1] + (c.alpha[i1] - c.alpha[i0]) * ((t - t1) / (t1 - t0))
    };
    let gb = extrapolate(n - 2, n - 1, 0.5 * q);
    let ga = extrapolate(1, 0, -0.5 * q);
    c.b = c.point_at(0.5 * q, gb)?;
    c.a = c.point_at(-0.5 * q, ga)?;
    c.rho_b = c.density(c.b)?;
    c.rho_a = c.density(c.a)?;
    let d = c.pole_distance();
    if d < 0.05 {
        return Err(Error::ContourDeformation { distance: d });
    }
    Ok(c)
}

/// Solves the contour equation at `(q, H)`, continuing in `H` from zero field.
pub fn solve_contour(q: f64, h: f64, eta: f64, opts: &ThermoOptions) -> Result<ContourSolution> {
    check_domain(q, h, eta, opts)?;
    let rule = LegendreRule::new(opts.m_nodes, -0.5 * q, 0.5 * q);
    let base = solve_zero_field(q, &rule, eta, opts)?;
    if h == 0.0 {
        let r = max_norm(&contour_residual(&base, &rule, 0.0, eta)?);
        return assemble(base, rule, q, 0.0, eta, r);
    }
    let (alpha, r) = continue_in_h(base, &rule, 0.0, h, eta, opts)?;
    assemble(alpha, rule, q, h, eta, r)
}

/// Re-solves at `(q, H)` starting from a nearby solution with the same node count.
pub fn solve_contour_from(prev: &ContourSolution, q: f64, h: f64, opts: &ThermoOptions) -> Result<ContourSolution> {
    check_domain(q, h, prev.eta, opts)?;
    if prev.len() != opts.m_nodes {
        return solve_contour(q, h, prev.eta, opts);
    }
    let eta = prev.eta;
    let rule = LegendreRule::new(opts.m_nodes, -0.5 * q, 0.5 * q);
    // node i keeps its relative position, so the old values are a good guess
    let guess: Vec<C64> = prev.alpha.clone();
    let (alpha, r) = match newton(guess.clone(), &rule, h, eta, opts) {
        Ok(v) => v,
        Err(_) => {
            let (mid, _) = newton(guess, &rule, prev.h, eta, opts)?;
            continue_in_h(mid, &rule, prev.h, h, eta, opts)?
        }
    };
    assemble(alpha, rule, q, h, eta, r)
}

fn solve_zero_field(q: f64, rule: &LegendreRule, eta: f64, opts: &ThermoOptions) -> Result<Vec<C64>> {
    let slope = p_prime(C64::new(0.0, 0.0), eta)?.re;
    let linear = |rule: &LegendreRule, scale: f64| -> Vec<C64> {
        rule.nodes.iter().map(|&t| C64::new(TAU * t * scale / slope, 0.0)).collect()
    };
    if let Ok((a, _)) = newton(linear(rule, 1.0), rule, 0.0, eta, opts) {
        return Ok(real_part(a));
    }
    // fall back to continuation in the filling
    let mut qc = q.min(0.1);
    let mut cur = LegendreRule::new(rule.len(), -0.5 * qc, 0.5 * qc);
    let (mut a, _) = newton(linear(&cur, 1.0), &cur, 0.0, eta, opts)?;
    let mut step = 0.05;
    while qc < q {
        let next = (qc + step).min(q);
        let nr = LegendreRule::new(rule.len(), -0.5 * next, 0.5 * next);
        let guess: Vec<C64> = a.iter().map(|z| z * (next / qc)).collect();
        match newton(guess, &nr, 0.0, eta, opts) {
            Ok((b, _)) => {
                a = b;
                qc = next;
                cur = nr;
            }
            Err(e) => {
                step *= 0.5;
                if step < 1e-4 {
                    return Err(Error::Continuation(alloc::format!("filling continuation stalled at q = {qc}: {e}")));
                }
            }
        }
    }
    let _ = cur;
    Ok(real_part(a))
}

fn real_part(a: Vec<C64>) -> Vec<C64> {
    a.into_iter().map(|z| C64::new(z.re, 0.0)).collect()
}

fn continue_in_h(
    mut alpha: Vec<C64>,
    rule: &LegendreRule,
    h0: f64,
    h1: f64,
    eta: f64,
    opts: &ThermoOptions,
) -> Result<(Vec<C64>, f64)> {
    let mut hc = h0;
    let dir = if h1 >= h0 { 1.0 } else { -1.0 };
    let mut step = opts.h_step;
    let mut r = 0.0;
    while (h1 - hc) * dir > 0.0 {
        let next = if ((h1 - hc) * dir) <= step * (1.0 + 1e-12) { h1 } else { hc + dir * step };
        match newton(alpha.clone(), rule, next, eta, opts) {
            Ok((a, res)) => {
                alpha = a;
                hc = next;
                r = res;
            }
            Err(e) => {
                step *= 0.5;
                if step < opts.h_step / 64.0 {
                    return Err(Error::Continuation(alloc::format!("field continuation stalled at H = {hc}: {e}")));
                }
            }
        }
    }
    Ok((alpha, r))
}
