//! Weights, Δ, the R-matrix and the special functions of the Δ < −1 regime.
//!
//! Conventions:
//! * `p(α)` is the branch of `−i·log[sinh(η/2+iα)/sinh(η/2−iα)]` with `p(0) = 0`,
//!   analytic in the strip `|Im α| < η/2`.
//! * `Θ(x)` is the branch of `−i·log[−sinh(ix+η)/sinh(ix−η)]` with `Θ(0) = 0`,
//!   analytic in `|Im x| < η`.
//! * `ψ₊(z) = −i·p(z)` and `ψ₋(z) = i·p(z − iη)`, with `z = α + iu`.
//!
//! Both logarithms are evaluated as `2x − i[log(1 − e^{−c−2ix}) − log(1 − e^{−c+2ix})]`,
//! which equals the sinh-ratio form but has no cuts inside the strip. The principal
//! log of the ratio itself jumps at `Re α = ±π/2`.

use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::{C64, I, PI, TAU};

/// Which of the two eigenvalue terms (and free-energy branches) is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Symmetric vertex weights `(a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Weights {
    /// Baxter parametrization for Δ < −1, with the overall scale set to one.
    pub fn baxter(eta: f64, u: f64) -> Self {
        Self { a: (eta - u).sinh(), b: u.sinh(), c: eta.sinh() }
    }

    pub fn delta(&self) -> Result<f64> {
        delta_param(self.a, self.b, self.c)
    }
}

/// Model parameters. The c-weight asymmetry is fixed to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub eta: f64,
    pub u: f64,
    /// Horizontal field H.
    pub h_field: f64,
    /// Vertical field V.
    pub v_field: f64,
    /// Column inhomogeneities v_k. Empty means homogeneous.
    pub v_list: Vec<f64>,
    /// Row inhomogeneities u_i. Empty means every row uses `u`.
    pub u_list: Vec<f64>,
}

impl ModelParams {
    /// Homogeneous parameters with zero fields.
    pub fn new(eta: f64, u: f64) -> Result<Self> {
        let p = Self { eta, u, h_field: 0.0, v_field: 0.0, v_list: Vec::new(), u_list: Vec::new() };
        p.validate()?;
        Ok(p)
    }

    pub fn with_fields(mut self, h: f64, v: f64) -> Result<Self> {
        self.h_field = h;
        self.v_field = v;
        self.validate()?;
        Ok(self)
    }

    pub fn with_inhomogeneities(mut self, v_list: Vec<f64>) -> Result<Self> {
        self.v_list = v_list;
        self.validate()?;
        Ok(self)
    }

    /// Checks that every effective spectral argument `u − v_k` lies in `(0, η)`.
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::Domain(alloc::format!("eta must be positive, got {}", self.eta)));
        }
        if !self.h_field.is_finite() || !self.v_field.is_finite() {
            return Err(Error::Domain("fields must be finite".into()));
        }
        let rows: Vec<f64> = if self.u_list.is_empty() { alloc::vec![self.u] } else { self.u_list.clone() };
        for &u in &rows {
            self.check_spectral(u)?;
        }
        Ok(())
    }

    /// Checks a spectral parameter against the column inhomogeneities.
    pub fn check_spectral(&self, u: f64) -> Result<()> {
        let (lo, hi) = self.v_bounds();
        if !(u - hi > 0.0 && u - lo < self.eta) {
            return Err(Error::Domain(alloc::format!(
                "spectral argument u - v_k must lie in (0, {}); u = {u}, v in [{lo}, {hi}]",
                self.eta
            )));
        }
        Ok(())
    }

    /// Inhomogeneity of column `k`, zero when homogeneous.
    pub fn v(&self, k: usize) -> f64 {
        self.v_list.get(k).copied().unwrap_or(0.0)
    }

    fn v_bounds(&self) -> (f64, f64) {
        if self.v_list.is_empty() {
            (0.0, 0.0)
        } else {
            let lo = self.v_list.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = self.v_list.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
    }

    pub fn weights(&self) -> Weights {
        Weights::baxter(self.eta, self.u)
    }

    pub fn delta(&self) -> f64 {
        -self.eta.cosh()
    }
}

/// Anisotropy Δ = (a² + b² − c²)/(2ab).
pub fn delta_param(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::Domain(alloc::format!("weights must be positive, got ({a}, {b}, {c})")));
    }
    Ok((a * a + b * b - c * c) / (2.0 * a * b))
}

const POLE_EPS: f64 = 1e-15;

/// `2x − i[log(1 − e^{−c−2ix}) − log(1 − e^{−c+2ix})]`, the common shape of p and Θ.
fn log_pair(x: C64, c: f64, what: &str) -> Result<C64> {
    let e1 = (C64::new(-c, 0.0) - 2.0 * I * x).exp();
    let e2 = (C64::new(-c, 0.0) + 2.0 * I * x).exp();
    let f1 = C64::new(1.0, 0.0) - e1;
    let f2 = C64::new(1.0, 0.0) - e2;
    if f1.norm() < POLE_EPS || f2.norm() < POLE_EPS || !(f1.is_finite() && f2.is_finite()) {
        return Err(Error::Singularity(alloc::format!("{what} at {x}")));
    }
    Ok(2.0 * x - I * (f1.ln() - f2.ln()))
}

/// p(α).
pub fn p(alpha: C64, eta: f64) -> Result<C64> {
    log_pair(alpha, eta, "log singularity of p")
}

/// p′(α) = sinh η / (sinh(η/2 + iα) sinh(η/2 − iα)).
pub fn p_prime(alpha: C64, eta: f64) -> Result<C64> {
    let h = C64::new(0.5 * eta, 0.0);
    let d = (h + I * alpha).sinh() * (h - I * alpha).sinh();
    if d.norm() < POLE_EPS {
        return Err(Error::Singularity(alloc::format!("pole of p' at {alpha}")));
    }
    Ok(C64::new(eta.sinh(), 0.0) / d)
}

/// The ratio `sinh(η/2+iα)/sinh(η/2−iα) = e^{ip(α)}`.
pub fn p_ratio(alpha: C64, eta: f64) -> C64 {
    let h = C64::new(0.5 * eta, 0.0);
    (h + I * alpha).sinh() / (h - I * alpha).sinh()
}

/// Θ(x).
pub fn theta(x: C64, eta: f64) -> Result<C64> {
    log_pair(x, 2.0 * eta, "log singularity of Theta")
}

/// K(x) = Θ′(x) = −sinh 2η / (sinh(ix+η) sinh(ix−η)).
pub fn kernel_k(x: C64, eta: f64) -> Result<C64> {
    let e = C64::new(eta, 0.0);
    let d = (I * x + e).sinh() * (I * x - e).sinh();
    if d.norm() < POLE_EPS {
        return Err(Error::Singularity(alloc::format!("pole of K at {x}")));
    }
    Ok(-C64::new((2.0 * eta).sinh(), 0.0) / d)
}

/// The ratio `−sinh(ix+η)/sinh(ix−η) = e^{iΘ(x)}`.
pub fn theta_ratio(x: C64, eta: f64) -> C64 {
    let e = C64::new(eta, 0.0);
    -(I * x + e).sinh() / (I * x - e).sinh()
}

/// Argument of p that represents ψ± at `z = α + iu`.
fn psi_shift(z: C64, sign: Sign, eta: f64) -> C64 {
    match sign {
        Sign::Plus => z,
        Sign::Minus => z - I * eta,
    }
}

/// ψ±(z) for `z = α + iu`.
pub fn psi(z: C64, sign: Sign, eta: f64) -> Result<C64> {
    let v = p(psi_shift(z, sign, eta), eta)?;
    Ok(match sign {
        Sign::Plus => -I * v,
        Sign::Minus => I * v,
    })
}

/// dψ±/dα at `z = α + iu`.
pub fn psi_prime(z: C64, sign: Sign, eta: f64) -> Result<C64> {
    let v = p_prime(psi_shift(z, sign, eta), eta)?;
    Ok(match sign {
        Sign::Plus => -I * v,
        Sign::Minus => I * v,
    })
}

/// The defining ratio `e^{ψ±(α+iu)}` written with sinh.
pub fn psi_ratio(z: C64, sign: Sign, eta: f64) -> C64 {
    let h = C64::new(0.5 * eta, 0.0);
    match sign {
        Sign::Plus => (h - I * z).sinh() / (h + I * z).sinh(),
        Sign::Minus => (C64::new(1.5 * eta, 0.0) + I * z).sinh() / (-I * z - h).sinh(),
    }
}

/// l₊ = ln sinh(η − u), l₋ = ln sinh u.
pub fn l_pm(u: f64, sign: Sign, eta: f64) -> Result<f64> {
    let arg = match sign {
        Sign::Plus => eta - u,
        Sign::Minus => u,
    };
    if !(arg > 0.0) {
        return Err(Error::Domain(alloc::format!("l{} needs a positive sinh argument, got {arg}", sign.symbol())));
    }
    Ok(arg.sinh().ln())
}

/// Distance from `alpha` to the nearest log singularity of p, at `±iη/2 + kπ`.
pub fn p_pole_distance(alpha: C64, eta: f64) -> f64 {
    let re = alpha.re - PI * (alpha.re / PI).round();
    let d_up = (re * re + (alpha.im - 0.5 * eta).powi(2)).sqrt();
    let d_dn = (re * re + (alpha.im + 0.5 * eta).powi(2)).sqrt();
    d_up.min(d_dn)
}

/// Distance from `z = α + iu` to the nearest singularity of ψ±.
pub fn psi_singularity_distance(z: C64, sign: Sign, eta: f64) -> f64 {
    p_pole_distance(psi_shift(z, sign, eta), eta)
}

/// Distance from `x` to the nearest singularity of K and Θ, at `±iη + kπ`.
pub fn k_pole_distance(x: C64, eta: f64) -> f64 {
    let re = x.re - PI * (x.re / PI).round();
    let d_up = (re * re + (x.im - eta).powi(2)).sqrt();
    let d_dn = (re * re + (x.im + eta).powi(2)).sqrt();
    d_up.min(d_dn)
}

/// 4×4 matrix on `C² ⊗ C²` in the basis `e₁⊗e₁, e₁⊗e₂, e₂⊗e₁, e₂⊗e₂`; `e₁` is occupied.
pub type Mat4 = [[f64; 4]; 4];

/// R(u, H, V).
pub fn r_matrix(u: f64, h: f64, v: f64, eta: f64) -> Mat4 {
    let w = Weights::baxter(eta, u);
    [
        [w.a * (h + v).exp(), 0.0, 0.0, 0.0],
        [0.0, w.b * (h - v).exp(), w.c, 0.0],
        [0.0, w.c, w.b * (v - h).exp(), 0.0],
        [0.0, 0.0, 0.0, w.a * (-h - v).exp()],
    ]
}

/// Diagonal of `D^x = diag(e^{x/2}, e^{−x/2})`.
pub fn d_diag(x: f64) -> [f64; 2] {
    [(0.5 * x).exp(), (-0.5 * x).exp()]
}

/// Kronecker product of two diagonal 2×2 matrices, as a 4×4 diagonal.
pub fn kron_diag(d1: [f64; 2], d2: [f64; 2]) -> [f64; 4] {
    [d1[0] * d2[0], d1[0] * d2[1], d1[1] * d2[0], d1[1] * d2[1]]
}

/// `(D^H ⊗ D^V) R(u) (D^H ⊗ D^V)`.
pub fn r_matrix_factored(u: f64, h: f64, v: f64, eta: f64) -> Mat4 {
    let r = r_matrix(u, 0.0, 0.0, eta);
    let d = kron_diag(d_diag(h), d_diag(v));
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = d[i] * r[i][j] * d[j];
        }
    }
    out
}

type Mat8 = [[f64; 8]; 8];

/// Embeds a two-site operator into `C²⊗C²⊗C²` acting on factors `(s, t)`.
fn embed(r: &Mat4, s: usize, t: usize) -> Mat8 {
    let bit = |state: usize, k: usize| (state >> (2 - k)) & 1;
    let mut out = [[0.0; 8]; 8];
    for row in 0..8 {
        for col in 0..8 {
            let other = (0..3).filter(|&k| k != s && k != t);
            if other.clone().any(|k| bit(row, k) != bit(col, k)) {
                continue;
            }
            let ri = 2 * bit(row, s) + bit(row, t);
            let ci = 2 * bit(col, s) + bit(col, t);
            out[row][col] = r[ri][ci];
        }
    }
    out
}

fn mul8(a: &Mat8, b: &Mat8) -> Mat8 {
    let mut out = [[0.0; 8]; 8];
    for i in 0..8 {
        for k in 0..8 {
            if a[i][k] == 0.0 {
                continue;
            }
            for j in 0..8 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Max-norm of `R₁₂(u)R₁₃(u+v,H,0)R₂₃(v,H,0) − R₂₃(v,H,0)R₁₃(u+v,H,0)R₁₂(u)`.
pub fn yang_baxter_residual(u: f64, v: f64, h: f64, eta: f64) -> f64 {
    let r12 = embed(&r_matrix(u, 0.0, 0.0, eta), 0, 1);
    let r13 = embed(&r_matrix(u + v, h, 0.0, eta), 0, 2);
    let r23 = embed(&r_matrix(v, h, 0.0, eta), 1, 2);
    let lhs = mul8(&mul8(&r12, &r13), &r23);
    let rhs = mul8(&mul8(&r23, &r13), &r12);
    let mut m: f64 = 0.0;
    for i in 0..8 {
        for j in 0..8 {
            m = m.max((lhs[i][j] - rhs[i][j]).abs());
        }
    }
    m
}

/// Max-norm of `(D⊗D)R − R(D⊗D)` for `D = diag(d0, d1)`.
pub fn ice_rule_residual(r: &Mat4, d: [f64; 2]) -> f64 {
    let dd = [d[0] * d[0], d[0] * d[1], d[1] * d[0], d[1] * d[1]];
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            m = m.max((dd[i] * r[i][j] - r[i][j] * dd[j]).abs());
        }
    }
    m
}

/// Which function a [`BranchedFunctionTable`] tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchedKind {
    P,
    Theta,
    Psi(Sign),
}

/// Values tracked continuously along an ordered contour.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracked {
    pub values: Vec<C64>,
    /// Number of sheet shifts applied at each point, relative to the anchored formula.
    pub windings: Vec<i64>,
}

/// Continuous-branch evaluation of p, Θ and ψ± along ordered point lists.
///
/// The first point uses the anchored formula. Every later value is shifted by a
/// whole number of periods so that it stays within π of its predecessor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchedFunctionTable {
    pub eta: f64,
}

impl BranchedFunctionTable {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::Domain("eta must be positive".into()));
        }
        Ok(Self { eta })
    }

    pub fn eval(&self, kind: BranchedKind, x: C64) -> Result<C64> {
        match kind {
            BranchedKind::P => p(x, self.eta),
            BranchedKind::Theta => theta(x, self.eta),
            BranchedKind::Psi(s) => psi(x, s, self.eta),
        }
    }

    /// The sheet period: 2π in the real part for p and Θ, 2πi for ψ.
    fn period(kind: BranchedKind) -> C64 {
        match kind {
            BranchedKind::Psi(_) => C64::new(0.0, TAU),
            _ => C64::new(TAU, 0.0),
        }
    }

    pub fn along(&self, kind: BranchedKind, points: &[C64]) -> Result<Tracked> {
        let period = Self::period(kind);
        let mut values = Vec::with_capacity(points.len());
        let mut windings = Vec::with_capacity(points.len());
        let mut prev: Option<C64> = None;
        for &z in points {
            let raw = self.eval(kind, z)?;
            let (v, k) = match prev {
                None => (raw, 0),
                Some(pv) => {
                    let diff = (pv - raw) / period;
                    let k = diff.re.round() as i64;
                    (raw + period * k as f64, k)
                }
            };
            prev = Some(v);
            values.push(v);
            windings.push(k);
        }
        Ok(Tracked { values, windings })
    }
}
