//! The three bilinear identities between Hessians of `ℋ_u` and `ℋ_w` at a shared `(q, H)`:
//!
//! * `ℋ₁₁ℋ̃₂₂ − ℋ̃₁₁ℋ₂₂`
//! * `ℋ₁₁ℋ̃₂₃ + ℋ₁₂ℋ̃₁₃ − ℋ₁₃ℋ̃₁₂ − ℋ₂₃ℋ̃₁₁`
//! * `ℋ₁₂ℋ̃₂₃ + ℋ₂₂ℋ̃₁₃ − ℋ₁₃ℋ̃₂₂ − ℋ₂₃ℋ̃₁₂`
//!
//! where `ℋ̃` is `ℋ` at spectral parameter `w`. They vanish exactly when the Hamiltonians
//! `∫ℋ_u` Poisson-commute.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::Sign;
use crate::thermo::{ThermoOptions, ThermoPoint};

/// Where the Hessian entries come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HessianSource {
    ClosedForm,
    /// Central differences of free-energy values over full re-solves.
    FiniteDifference,
}

impl HessianSource {
    pub fn name(self) -> &'static str {
        match self {
            HessianSource::ClosedForm => "closed-form",
            HessianSource::FiniteDifference => "finite-difference",
        }
    }
}

/// `(ℋ₁₁, ℋ₁₂, ℋ₂₂, ℋ₁₃, ℋ₂₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hessian {
    pub h11: f64,
    pub h12: f64,
    pub h22: f64,
    pub h13: f64,
    pub h23: f64,
}

impl Hessian {
    pub fn from_array(d: [f64; 5]) -> Self {
        Self { h11: d[0], h12: d[1], h22: d[2], h13: d[3], h23: d[4] }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.h11, self.h12, self.h22, self.h13, self.h23]
    }
}

/// Normalized residuals at one `(u, w, q, H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub u: f64,
    pub w: f64,
    pub q: f64,
    pub h: f64,
    pub residual1: f64,
    pub residual2: f64,
    pub residual3: f64,
    pub hessian_source: HessianSource,
    pub branch_u: Sign,
    pub branch_w: Sign,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.residual1.max(self.residual2).max(self.residual3)
    }

    pub fn residuals(&self) -> [f64; 3] {
        [self.residual1, self.residual2, self.residual3]
    }
}

fn normalized(products: [f64; 4], signs: [f64; 4]) -> f64 {
    let scale = products.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = products.iter().zip(&signs).map(|(p, s)| p * s).sum();
    s / scale
}

/// Signed normalized residuals of the three identities.
pub fn bilinear_residuals(a: &Hessian, b: &Hessian) -> [f64; 3] {
    let r1 = normalized([a.h11 * b.h22, b.h11 * a.h22, 0.0, 0.0], [1.0, -1.0, 0.0, 0.0]);
    let r2 = normalized(
        [a.h11 * b.h23, a.h12 * b.h13, a.h13 * b.h12, a.h23 * b.h11],
        [1.0, 1.0, -1.0, -1.0],
    );
    let r3 = normalized(
        [a.h12 * b.h23, a.h22 * b.h13, a.h13 * b.h22, a.h23 * b.h12],
        [1.0, 1.0, -1.0, -1.0],
    );
    [r1, r2, r3]
}

/// Step of the finite-difference Hessian.
pub const FD_STEP: f64 = 2.5e-4;

/// Hessians at several spectral parameters from one stencil of nine contour solves.
///
/// `signs[k]` fixes the branch used for `us[k]` at every stencil point.
pub fn finite_difference_hessians(
    us: &[(f64, Sign)],
    q: f64,
    h: f64,
    eta: f64,
    opts: &ThermoOptions,
) -> Result<alloc::vec::Vec<Hessian>> {
    let e = FD_STEP;
    let mut grid: [[Option<ThermoPoint>; 3]; 3] = Default::default();
    for (i, dq) in [-e, 0.0, e].iter().enumerate() {
        for (j, dh) in [-e, 0.0, e].iter().enumerate() {
            grid[i][j] = Some(ThermoPoint::new(q + dq, h + dh, eta, opts)?);
        }
    }
    let val = |i: usize, j: usize, u: f64, s: Sign| -> Result<f64> {
        Ok(grid[i][j].as_ref().expect("stencil filled").branch_value(u, s)?.re)
    };
    us.iter()
        .map(|&(u, s)| {
            let f0 = val(1, 1, u, s)?;
            let h11 = (val(2, 1, u, s)? - 2.0 * f0 + val(0, 1, u, s)?) / (e * e);
            let h22 = (val(1, 2, u, s)? - 2.0 * f0 + val(1, 0, u, s)?) / (e * e);
            let h12 = (val(2, 2, u, s)? - val(2, 0, u, s)? - val(0, 2, u, s)? + val(0, 0, u, s)?) / (4.0 * e * e);
            let h13 = (val(2, 1, u + e, s)? - val(0, 1, u + e, s)? - val(2, 1, u - e, s)? + val(0, 1, u - e, s)?)
                / (4.0 * e * e);
            let h23 = (val(1, 2, u + e, s)? - val(1, 0, u + e, s)? - val(1, 2, u - e, s)? + val(1, 0, u - e, s)?)
                / (4.0 * e * e);
            Ok(Hessian { h11, h12, h22, h13, h23 })
        })
        .collect()
}

/// Evaluates the three identities at a shared `(q, H)` for spectral parameters `u` and `w`.
pub fn identity_residuals(
    u: f64,
    w: f64,
    q: f64,
    h: f64,
    eta: f64,
    source: HessianSource,
    opts: &ThermoOptions,
) -> Result<IdentityReport> {
    for x in [u, w] {
        if !(x > 0.0 && x < eta) {
            return Err(Error::Domain(alloc::format!("spectral parameter {x} outside (0, {eta})")));
        }
    }
    let tp = ThermoPoint::new(q, h, eta, opts)?;
    let (su, ..) = tp.select_branch(u)?;
    let (sw, ..) = tp.select_branch(w)?;
    let (a, b) = match source {
        HessianSource::ClosedForm => {
            let hess = |x: f64, s: Sign| -> Result<Hessian> {
                let d = tp.branch_derivatives(x, s)?;
                Ok(Hessian { h11: d.h11, h12: d.h12, h22: d.h22, h13: d.h13, h23: d.h23 })
            };
            (hess(u, su)?, hess(w, sw)?)
        }
        HessianSource::FiniteDifference => {
            let v = finite_difference_hessians(&[(u, su), (w, sw)], q, h, eta, opts)?;
            (v[0], v[1])
        }
    };
    let [r1, r2, r3] = bilinear_residuals(&a, &b);
    Ok(IdentityReport {
        u,
        w,
        q,
        h,
        residual1: r1.abs(),
        residual2: r2.abs(),
        residual3: r3.abs(),
        hessian_source: source,
        branch_u: su,
        branch_w: sw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_arguments_cancel() {
        let a = Hessian { h11: -4.1, h12: -1.3, h22: 0.5, h13: 1.5, h23: -0.4 };
        assert_eq!(bilinear_residuals(&a, &a), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn first_identity_is_antisymmetric() {
        let a = Hessian { h11: -4.1, h12: -1.3, h22: 0.5, h13: 1.5, h23: -0.4 };
        let b = Hessian { h11: -3.0, h12: 0.2, h22: 0.7, h13: -0.5, h23: 0.9 };
        assert_eq!(bilinear_residuals(&a, &b)[0], -bilinear_residuals(&b, &a)[0]);
    }

    #[test]
    fn zero_hessians_give_zero() {
        let z = Hessian::from_array([0.0; 5]);
        assert_eq!(bilinear_residuals(&z, &z), [0.0; 3]);
    }
}
