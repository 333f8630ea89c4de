//! Thermodynamic limit: root contour, Fredholm resolvents, free energy and its derivatives.
//!
//! At filling `q` and field `H` the roots condense on a contour `C` from `A` to `B`
//! parametrized by the counting variable `t ∈ [−q/2, q/2]`:
//!
//! `2πt(α) = p(α) + 2iH − ∫_C Θ(α − β) ρ(β) dβ`, `ρ = dt/dα`.
//!
//! The unknowns are `α(t_i)` at Gauss–Legendre nodes, so `∫_C f ρ dα = Σ_i w_i f(α_i)`.
//! The free energy is `ℋ_u(q,H) = max_± [±H + l± + ∫_C ψ±(α + iu) ρ(α) dα]`.

mod contour;
mod resolvent;

pub use contour::{solve_contour, solve_contour_from, ContourSolution};
pub use resolvent::{solve_resolvent, xi_pair, ResolventData};

use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::{l_pm, psi_prime, psi_singularity_distance, BranchedFunctionTable, BranchedKind, Sign};
use crate::{C64, I, PI};

/// Discretization and continuation controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoOptions {
    pub m_nodes: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Largest field increment per continuation step.
    pub h_step: f64,
}

impl Default for ThermoOptions {
    fn default() -> Self {
        Self { m_nodes: 128, newton_tol: 1e-12, max_newton: 40, h_step: 0.02 }
    }
}

/// `Σ_i w_i f(α_i)`, refusing functions that jump between sheets along the contour.
pub fn density_integral(c: &ContourSolution, f: impl Fn(C64) -> Result<C64>) -> Result<C64> {
    let mut s = C64::new(0.0, 0.0);
    let mut prev: Option<C64> = None;
    for (i, (&a, &w)) in c.alpha.iter().zip(c.weights()).enumerate() {
        let v = f(a)?;
        if let Some(pv) = prev {
            let jump = (v - pv).norm();
            if !(jump < PI) {
                return Err(Error::Branch { index: i, jump });
            }
        }
        prev = Some(v);
        s += v * w;
    }
    Ok(s)
}

/// Value and derivatives of one branch `ℋ±` at one spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchDerivatives {
    pub sign: Sign,
    pub value: f64,
    pub h1: f64,
    pub h2: f64,
    pub h11: f64,
    pub h12: f64,
    pub h22: f64,
    pub h13: f64,
    pub h23: f64,
    /// Largest imaginary part discarded from the complex formulas.
    pub max_imag: f64,
    pub xi: C64,
    pub xi_tilde: C64,
}

/// Free energy at one `(u, q, H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergyPoint {
    pub u: f64,
    pub q: f64,
    pub h: f64,
    pub value: f64,
    /// Branch attaining the maximum.
    pub branch: Sign,
    /// The other branch's value.
    pub other: f64,
    /// Both branches within 1e−12: coexistence.
    pub tie: bool,
    /// `(ℋ_1, ℋ_2)`.
    pub d1: Option<[f64; 2]>,
    /// `(ℋ_11, ℋ_12, ℋ_22, ℋ_13, ℋ_23)`.
    pub d2: Option<[f64; 5]>,
    pub max_imag: f64,
}

/// Contour and resolvent at one `(q, H)`, reusable across spectral parameters.
#[derive(Debug, Clone)]
pub struct ThermoPoint {
    pub res: ResolventData,
}

impl ThermoPoint {
    pub fn new(q: f64, h: f64, eta: f64, opts: &ThermoOptions) -> Result<Self> {
        let c = solve_contour(q, h, eta, opts)?;
        Self::from_contour(&c)
    }

    pub fn from_contour(c: &ContourSolution) -> Result<Self> {
        Ok(Self { res: solve_resolvent(c)? })
    }

    pub fn contour(&self) -> &ContourSolution {
        &self.res.contour
    }

    /// Smallest distance from the shifted contour to a singularity of ψ±.
    ///
    /// Quadrature accuracy degrades once this drops to the node spacing near the contour
    /// center (about `q/M`); more nodes are needed then.
    pub fn singularity_distance(&self, u: f64, sign: Sign) -> f64 {
        let c = self.contour();
        c.alpha
            .iter()
            .chain([&c.a, &c.b])
            .map(|&a| psi_singularity_distance(a + I * u, sign, c.eta))
            .fold(f64::INFINITY, f64::min)
    }

    /// `ℋ±` at spectral parameter `u`.
    pub fn branch_value(&self, u: f64, sign: Sign) -> Result<C64> {
        branch_value(self.contour(), u, sign)
    }

    /// `ℋ±` and its first and second derivatives, from the closed forms.
    pub fn branch_derivatives(&self, u: f64, sign: Sign) -> Result<BranchDerivatives> {
        check_u(u, self.contour().eta)?;
        let res = &self.res;
        let c = self.contour();
        let eta = c.eta;
        let f = tracked_psi(c, u, sign)?;
        let n = c.len();
        let fp = |z: C64| psi_prime(z + I * u, sign, eta);
        let mut g = C64::new(0.0, 0.0);
        let mut s_dm = C64::new(0.0, 0.0);
        let mut s_dp = C64::new(0.0, 0.0);
        for i in 0..n {
            let w = c.weights()[i];
            g += f[i + 1] * w;
            let m = fp(c.alpha[i])? * w * c.alpha_prime[i];
            s_dm += m * res.d_minus[i];
            s_dp += m * res.d_plus[i];
        }
        let (fa, fb) = (f[0], f[n + 1]);
        let sg = sign.as_f64();
        let value = g + sg * c.h + l_pm(u, sign, eta)?;
        let h2 = C64::new(sg, 0.0) - 2.0 * I * s_dm;
        let h1 = (fb + fa) * 0.5 + s_dp * 0.5;
        let (xi, xt) = xi_pair(res, fp)?;
        let (rb, ra) = (c.rho_b, c.rho_a);
        if rb.norm() < 1e-8 || ra.norm() < 1e-8 {
            return Err(Error::BoundaryOfRegime { rho: rb.norm().min(ra.norm()) });
        }
        let one = C64::new(1.0, 0.0);
        let (dmb, dma, dpb, dpa) = (res.d_minus_b, res.d_minus_a, res.d_plus_b, res.d_plus_a);
        let h22 = 2.0 * I / PI * (dmb * dmb / rb * xi - dma * dma / ra * xt);
        let h12 = -1.0 / (2.0 * PI) * ((one + dpb) / rb * dmb * xi + (one - dpa) / ra * dma * xt);
        let h11 = -I / (8.0 * PI) * ((one + dpb) * (one + dpb) / rb * xi - (one - dpa) * (one - dpa) / ra * xt);
        let h23 = -I / PI * (dmb * xi - dma * xt);
        let h13 = 1.0 / (4.0 * PI) * ((one + dpb) * xi + (one - dpa) * xt);
        let all = [value, h1, h2, h11, h12, h22, h13, h23];
        let max_imag = all.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        Ok(BranchDerivatives {
            sign,
            value: value.re,
            h1: h1.re,
            h2: h2.re,
            h11: h11.re,
            h12: h12.re,
            h22: h22.re,
            h13: h13.re,
            h23: h23.re,
            max_imag,
            xi,
            xi_tilde: xt,
        })
    }

    /// Which branch is larger at `u`, with both values.
    pub fn select_branch(&self, u: f64) -> Result<(Sign, f64, f64, bool)> {
        select_branch(self.contour(), u)
    }

    /// Free energy only.
    pub fn value(&self, u: f64) -> Result<FreeEnergyPoint> {
        let (branch, value, other, tie) = self.select_branch(u)?;
        let c = self.contour();
        let imag = self.branch_value(u, branch)?.im.abs();
        Ok(FreeEnergyPoint { u, q: c.q, h: c.h, value, branch, other, tie, d1: None, d2: None, max_imag: imag })
    }

    /// Free energy with first and second derivatives of the winning branch.
    pub fn derivatives(&self, u: f64) -> Result<(FreeEnergyPoint, BranchDerivatives)> {
        let (branch, value, other, tie) = self.select_branch(u)?;
        let d = self.branch_derivatives(u, branch)?;
        let c = self.contour();
        Ok((
            FreeEnergyPoint {
                u,
                q: c.q,
                h: c.h,
                value,
                branch,
                other,
                tie,
                d1: Some([d.h1, d.h2]),
                d2: Some([d.h11, d.h12, d.h22, d.h13, d.h23]),
                max_imag: d.max_imag,
            },
            d,
        ))
    }
}

fn check_u(u: f64, eta: f64) -> Result<()> {
    if !(u > 0.0 && u < eta) {
        return Err(Error::Domain(alloc::format!("spectral parameter {u} outside (0, {eta})")));
    }
    Ok(())
}

/// ψ± tracked along `A, α_1, …, α_M, B` (shifted by `iu`).
fn tracked_psi(c: &ContourSolution, u: f64, sign: Sign) -> Result<Vec<C64>> {
    let mut pts = Vec::with_capacity(c.len() + 2);
    pts.push(c.a + I * u);
    pts.extend(c.alpha.iter().map(|&a| a + I * u));
    pts.push(c.b + I * u);
    Ok(BranchedFunctionTable::new(c.eta)?.along(BranchedKind::Psi(sign), &pts)?.values)
}

/// `ℋ± = ±H + l± + ∫_C ψ±(α + iu) ρ(α) dα`; needs only the contour.
pub fn branch_value(c: &ContourSolution, u: f64, sign: Sign) -> Result<C64> {
    check_u(u, c.eta)?;
    let f = tracked_psi(c, u, sign)?;
    let g: C64 = f[1..=c.len()].iter().zip(c.weights()).map(|(&v, &w)| v * w).sum();
    Ok(g + sign.as_f64() * c.h + l_pm(u, sign, c.eta)?)
}

/// Winning branch at `u`, its value, the other value, and whether they tie.
pub fn select_branch(c: &ContourSolution, u: f64) -> Result<(Sign, f64, f64, bool)> {
    let vp = branch_value(c, u, Sign::Plus)?.re;
    let vm = branch_value(c, u, Sign::Minus)?.re;
    let tie = (vp - vm).abs() < 1e-12;
    Ok(if vp >= vm { (Sign::Plus, vp, vm, tie) } else { (Sign::Minus, vm, vp, tie) })
}

/// `ℋ_u(q, H)` and the winning branch.
pub fn free_energy(u: f64, q: f64, h: f64, eta: f64, opts: &ThermoOptions) -> Result<FreeEnergyPoint> {
    ThermoPoint::new(q, h, eta, opts)?.value(u)
}

/// `(ℋ_1, ℋ_2)` of the winning branch.
pub fn first_derivs(u: f64, q: f64, h: f64, eta: f64, opts: &ThermoOptions) -> Result<[f64; 2]> {
    let (p, _) = ThermoPoint::new(q, h, eta, opts)?.derivatives(u)?;
    Ok(p.d1.expect("derivatives requested"))
}

/// `(ℋ_11, ℋ_12, ℋ_22, ℋ_13, ℋ_23)` of the winning branch.
pub fn second_derivs(u: f64, q: f64, h: f64, eta: f64, opts: &ThermoOptions) -> Result<[f64; 5]> {
    let (p, _) = ThermoPoint::new(q, h, eta, opts)?.derivatives(u)?;
    Ok(p.d2.expect("derivatives requested"))
}

/// Full record: value, branch, first and second derivatives.
pub fn free_energy_full(u: f64, q: f64, h: f64, eta: f64, opts: &ThermoOptions) -> Result<FreeEnergyPoint> {
    Ok(ThermoPoint::new(q, h, eta, opts)?.derivatives(u)?.0)
}
