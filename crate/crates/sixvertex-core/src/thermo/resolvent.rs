use alloc::vec::Vec;
use num_traits::Float;

use super::contour::ContourSolution;
use crate::error::{Error, Result};
use crate::kernels::{kernel_k, theta};
use crate::linalg::{Lu, Matrix};
use crate::{C64, TAU};

/// Nyström solution of the linear Fredholm problems attached to a contour.
///
/// Every unknown `X` solves `X(α) + (1/2π) ∫_C K(α − β) X(β) dβ = g(α)` with
///
/// | quantity   | right-hand side `g`            |
/// |------------|--------------------------------|
/// | `R(·, γ)`  | `−K(· − γ)/2π`                 |
/// | `F(·, γ)`  | `Θ(· − γ)/2π`                  |
/// | `D₋`       | `1/2π`                         |
/// | `D₊`       | `(Θ(· − B) + Θ(· − A))/2π`     |
///
/// Values off the nodes come from the Nyström interpolant
/// `X(z) = g(z) − (1/2π) Σ_j K(z − α_j) w_j α′_j X_j`.
#[derive(Debug, Clone)]
pub struct ResolventData {
    pub contour: ContourSolution,
    /// `I + K̂` with `K̂_ij = K(α_i − α_j) w_j α′_j / 2π`.
    pub nystrom: Matrix<C64>,
    /// `R(α_i, α_j)`.
    pub r_nodes: Matrix<C64>,
    pub r_at_b: Vec<C64>,
    pub r_at_a: Vec<C64>,
    pub f_at_b: Vec<C64>,
    pub f_at_a: Vec<C64>,
    pub d_minus: Vec<C64>,
    pub d_plus: Vec<C64>,
    pub d_minus_a: C64,
    pub d_minus_b: C64,
    pub d_plus_a: C64,
    pub d_plus_b: C64,
    /// `R(B, B)`, `R(B, A)`, `R(A, B)`, `R(A, A)`.
    pub r_ends: [C64; 4],
    /// `F(B, B)`, `F(B, A)`, `F(A, B)`, `F(A, A)`.
    pub f_ends: [C64; 4],
    /// 1-norm condition number of `I + K̂`.
    pub condition: f64,
    lu: Lu<C64>,
}

const MAX_CONDITION: f64 = 1e10;

impl ResolventData {
    /// `w_j α′_j`, the measure `dβ` at the nodes.
    pub fn measure(&self) -> Vec<C64> {
        self.contour.weights().iter().zip(&self.contour.alpha_prime).map(|(&w, &ap)| ap * w).collect()
    }

    /// Solves the Fredholm problem for right-hand side `g`, returning node values.
    pub fn solve_rhs(&self, g: impl Fn(C64) -> Result<C64>) -> Result<Vec<C64>> {
        let b = self.contour.alpha.iter().map(|&z| g(z)).collect::<Result<Vec<_>>>()?;
        Ok(self.lu.solve(&b))
    }

    /// Nyström interpolation of a solution at an arbitrary point.
    pub fn interpolate(&self, z: C64, g_z: C64, nodes: &[C64]) -> Result<C64> {
        nystrom_eval(&self.contour, z, g_z, nodes)
    }

    /// `(1 + D₊(B)) D₋(B) − 1/2π`.
    pub fn endpoint_charge_residual(&self) -> f64 {
        ((C64::new(1.0, 0.0) + self.d_plus_b) * self.d_minus_b - 1.0 / TAU).norm()
    }

    /// `‖(I + K̂)(I + R̂) − I‖∞` with `R̂_ij = R(α_i, α_j) w_j α′_j`.
    pub fn operator_identity_residual(&self) -> f64 {
        let n = self.contour.len();
        let mu = self.measure();
        let i_plus_r = Matrix::from_fn(n, n, |i, j| {
            let d = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            d + self.r_nodes[(i, j)] * mu[j]
        });
        self.nystrom.matmul(&i_plus_r).sub(&Matrix::identity(n)).norm_inf()
    }

    /// Max-norm of `R + K/2π + (1/2π) K * R` at all node pairs.
    pub fn fredholm_residual(&self) -> Result<f64> {
        let c = &self.contour;
        let n = c.len();
        let mu = self.measure();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let krow: Vec<C64> = (0..n).map(|j| kernel_k(c.alpha[i] - c.alpha[j], c.eta)).collect::<Result<_>>()?;
            for k in 0..n {
                let mut s = self.r_nodes[(i, k)] + krow[k] / TAU;
                for j in 0..n {
                    s += krow[j] * mu[j] * self.r_nodes[(j, k)] / TAU;
                }
                worst = worst.max(s.norm());
            }
        }
        Ok(worst)
    }

    /// `∂F(α, γ)/∂α + R(α, γ) + R(α, B) F(B, γ) − R(α, A) F(A, γ)` at the nodes, with `γ = α_k`
    /// and the derivative taken spectrally in `t`.
    pub fn dfda_residual(&self, k: usize) -> Result<f64> {
        let c = &self.contour;
        let n = c.len();
        let eta = c.eta;
        let gamma = c.alpha[k];
        let f = self.solve_rhs(|z| Ok(theta(z - gamma, eta)? / TAU))?;
        let f_b = self.interpolate(c.b, theta(c.b - gamma, eta)? / TAU, &f)?;
        let f_a = self.interpolate(c.a, theta(c.a - gamma, eta)? / TAU, &f)?;
        let dm = c.rule.differentiation_matrix();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let mut dt = C64::new(0.0, 0.0);
            for j in 0..n {
                dt += f[j] * dm[i * n + j];
            }
            let lhs = dt / c.alpha_prime[i];
            let rhs = -self.r_nodes[(i, k)] - self.r_at_b[i] * f_b + self.r_at_a[i] * f_a;
            worst = worst.max((lhs - rhs).norm());
        }
        Ok(worst)
    }

    /// `D₋` and `D₊` rebuilt from `F`: `(1 + F(·,B) − F(·,A))/2π` and `F(·,B) + F(·,A)`.
    pub fn dressed_charge_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.contour.len() {
            let dm = (C64::new(1.0, 0.0) + self.f_at_b[i] - self.f_at_a[i]) / TAU;
            let dp = self.f_at_b[i] + self.f_at_a[i];
            worst = worst.max((dm - self.d_minus[i]).norm()).max((dp - self.d_plus[i]).norm());
        }
        worst
    }
}

fn nystrom_eval(c: &ContourSolution, z: C64, g_z: C64, nodes: &[C64]) -> Result<C64> {
    let mut s = g_z;
    for j in 0..c.len() {
        s -= kernel_k(z - c.alpha[j], c.eta)? * c.rule.weights[j] * c.alpha_prime[j] * nodes[j] / TAU;
    }
    Ok(s)
}

/// Builds the Nyström matrix and solves every Fredholm problem on the contour.
pub fn solve_resolvent(c: &ContourSolution) -> Result<ResolventData> {
    let n = c.len();
    let eta = c.eta;
    let mu: Vec<C64> = c.weights().iter().zip(&c.alpha_prime).map(|(&w, &ap)| ap * w).collect();
    let mut kmat = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            kmat[(i, j)] = kernel_k(c.alpha[i] - c.alpha[j], eta)?;
        }
    }
    let nystrom = Matrix::from_fn(n, n, |i, j| {
        kmat[(i, j)] * mu[j] / TAU + if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
    });
    let lu = Lu::new(nystrom.clone())?;
    let inv = lu.inverse();
    let condition = nystrom.norm_one() * inv.norm_one();
    if !(condition < MAX_CONDITION) {
        return Err(Error::Resolution { condition });
    }
    let solve = |g: &dyn Fn(C64) -> Result<C64>| -> Result<Vec<C64>> {
        let b = c.alpha.iter().map(|&z| g(z)).collect::<Result<Vec<_>>>()?;
        Ok(lu.solve(&b))
    };
    let rhs_k = Matrix::from_fn(n, n, |i, j| -kmat[(i, j)] / TAU);
    let r_nodes = lu.solve_matrix(&rhs_k);
    let (a, b) = (c.a, c.b);
    let r_at_b = solve(&|z| Ok(-kernel_k(z - b, eta)? / TAU))?;
    let r_at_a = solve(&|z| Ok(-kernel_k(z - a, eta)? / TAU))?;
    let f_at_b = solve(&|z| Ok(theta(z - b, eta)? / TAU))?;
    let f_at_a = solve(&|z| Ok(theta(z - a, eta)? / TAU))?;
    let d_minus = solve(&|_| Ok(C64::new(1.0 / TAU, 0.0)))?;
    let d_plus = solve(&|z| Ok((theta(z - b, eta)? + theta(z - a, eta)?) / TAU))?;

    let d_minus_b = nystrom_eval(c, b, C64::new(1.0 / TAU, 0.0), &d_minus)?;
    let d_minus_a = nystrom_eval(c, a, C64::new(1.0 / TAU, 0.0), &d_minus)?;
    let dp_rhs = |z: C64| -> Result<C64> { Ok((theta(z - b, eta)? + theta(z - a, eta)?) / TAU) };
    let d_plus_b = nystrom_eval(c, b, dp_rhs(b)?, &d_plus)?;
    let d_plus_a = nystrom_eval(c, a, dp_rhs(a)?, &d_plus)?;
    let r_end = |z: C64, g: C64, nodes: &[C64]| nystrom_eval(c, z, -kernel_k(z - g, eta)? / TAU, nodes);
    let f_end = |z: C64, g: C64, nodes: &[C64]| nystrom_eval(c, z, theta(z - g, eta)? / TAU, nodes);
    let r_ends = [r_end(b, b, &r_at_b)?, r_end(b, a, &r_at_a)?, r_end(a, b, &r_at_b)?, r_end(a, a, &r_at_a)?];
    let f_ends = [f_end(b, b, &f_at_b)?, f_end(b, a, &f_at_a)?, f_end(a, b, &f_at_b)?, f_end(a, a, &f_at_a)?];

    Ok(ResolventData {
        contour: c.clone(),
        nystrom,
        r_nodes,
        r_at_b,
        r_at_a,
        f_at_b,
        f_at_a,
        d_minus,
        d_plus,
        d_minus_a,
        d_minus_b,
        d_plus_a,
        d_plus_b,
        r_ends,
        f_ends,
        condition,
        lu,
    })
}

/// `ξ = 2πi (f′(B) + ∫_C f′ R(·, B))` and `ξ̃` the same at `A`.
pub fn xi_pair(res: &ResolventData, f_prime: impl Fn(C64) -> Result<C64>) -> Result<(C64, C64)> {
    let c = &res.contour;
    let mut sb = f_prime(c.b)?;
    let mut sa = f_prime(c.a)?;
    for j in 0..c.len() {
        let m = f_prime(c.alpha[j])? * c.rule.weights[j] * c.alpha_prime[j];
        sb += m * res.r_at_b[j];
        sa += m * res.r_at_a[j];
    }
    let k = C64::new(0.0, TAU);
    Ok((k * sb, k * sa))
}
