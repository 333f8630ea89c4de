use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::surface::{FreeEnergySurface, Slab, SurfacePoint};
use crate::error::{Error, Result};
use crate::TAU;

/// A smooth scalar profile, of `x` (inhomogeneities) or of `y` (spectral parameter).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `mean + amplitude · sin(2π·arg/period + phase)`.
    Sine { mean: f64, amplitude: f64, period: f64, phase: f64 },
}

impl Profile {
    pub fn value(&self, arg: f64) -> f64 {
        match *self {
            Profile::Constant(c) => c,
            Profile::Sine { mean, amplitude, period, phase } => mean + amplitude * (TAU * arg / period + phase).sin(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Profile::Constant(_)) || matches!(self, Profile::Sine { amplitude, .. } if *amplitude == 0.0)
    }

    /// Largest and smallest values.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Profile::Constant(c) => (c, c),
            Profile::Sine { mean, amplitude, .. } => (mean - amplitude.abs(), mean + amplitude.abs()),
        }
    }
}

/// Discrete Fourier tools on a uniform periodic grid of `g` points over length `l`.
#[derive(Debug, Clone)]
pub struct Fourier {
    g: usize,
    l: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Fourier {
    pub fn new(g: usize, l: f64) -> Self {
        let cos = (0..g).map(|k| (TAU * k as f64 / g as f64).cos()).collect();
        let sin = (0..g).map(|k| (TAU * k as f64 / g as f64).sin()).collect();
        Self { g, l, cos, sin }
    }

    pub fn len(&self) -> usize {
        self.g
    }

    pub fn is_empty(&self) -> bool {
        self.g == 0
    }

    fn highest(&self, cutoff: Option<usize>) -> usize {
        let nyq = self.g / 2 - 1;
        cutoff.map_or(nyq, |c| c.min(nyq))
    }

    /// `(Re f̂_m, Im f̂_m)` for `m ≤ m_max`, with `f̂_m = (1/G) Σ f_i e^{−2πi m i/G}`.
    fn coefficients(&self, f: &[f64], m_max: usize) -> Vec<(f64, f64)> {
        let g = self.g;
        (0..=m_max)
            .map(|m| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, &fi) in f.iter().enumerate() {
                    let k = (m * i) % g;
                    re += fi * self.cos[k];
                    im -= fi * self.sin[k];
                }
                (re / g as f64, im / g as f64)
            })
            .collect()
    }

    fn synthesize(&self, c: &[(f64, f64)], scale: impl Fn(usize) -> (f64, f64)) -> Vec<f64> {
        let g = self.g;
        (0..g)
            .map(|i| {
                let mut v = 0.0;
                for (m, &(re, im)) in c.iter().enumerate() {
                    let (a, b) = scale(m);
                    // multiply by (a + ib), then take 2 Re(· e^{2πi m i/G}); mode 0 once
                    let (cr, ci) = (re * a - im * b, re * b + im * a);
                    let k = (m * i) % g;
                    let term = cr * self.cos[k] - ci * self.sin[k];
                    v += if m == 0 { term } else { 2.0 * term };
                }
                v
            })
            .collect()
    }

    /// `∂ₓf` keeping modes `|m| ≤ cutoff` (all but Nyquist when `None`).
    pub fn derivative(&self, f: &[f64], cutoff: Option<usize>) -> Vec<f64> {
        let m_max = self.highest(cutoff);
        let c = self.coefficients(f, m_max);
        let l = self.l;
        self.synthesize(&c, |m| (0.0, TAU * m as f64 / l))
    }

    /// Projection onto modes `|m| ≤ cutoff`; `None` is the identity.
    pub fn filter(&self, f: &[f64], cutoff: Option<usize>) -> Vec<f64> {
        match cutoff {
            None => f.to_vec(),
            Some(_) => {
                let c = self.coefficients(f, self.highest(cutoff));
                self.synthesize(&c, |_| (1.0, 0.0))
            }
        }
    }

    /// Zero-mean periodic `F` with `∂ₓF = f − mean(f)`.
    pub fn antiderivative(&self, f: &[f64]) -> Vec<f64> {
        let c = self.coefficients(f, self.highest(None));
        let l = self.l;
        self.synthesize(&c, |m| if m == 0 { (0.0, 0.0) } else { (0.0, -l / (TAU * m as f64)) })
    }
}

/// Height function `h(x) = q·x/L + φ(x)` and conjugate field `π(x)` on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub l: f64,
    /// Monodromy `h(x + L) − h(x)`.
    pub q: f64,
    /// Periodic part of the height.
    pub phi: Vec<f64>,
    pub pi: Vec<f64>,
    pub y: f64,
}

impl FieldState {
    pub fn new(l: f64, q: f64, phi: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        if !(l > 0.0) {
            return Err(Error::Domain(format!("circumference must be positive, got {l}")));
        }
        if phi.len() != pi.len() {
            return Err(Error::Dimension { expected: phi.len(), found: pi.len() });
        }
        if phi.len() < 4 || !phi.len().is_multiple_of(2) {
            return Err(Error::Domain(format!("grid size must be even and at least 4, got {}", phi.len())));
        }
        Ok(Self { l, q, phi, pi, y: 0.0 })
    }

    /// From height samples `h(x_i)`, `x_i = iL/G`.
    pub fn from_heights(l: f64, q: f64, h: &[f64], pi: Vec<f64>) -> Result<Self> {
        let g = h.len();
        let phi = h.iter().enumerate().map(|(i, &v)| v - q * i as f64 / g as f64).collect();
        Self::new(l, q, phi, pi)
    }

    /// Constant slope `s` and constant `π`.
    pub fn uniform(l: f64, g: usize, s: f64, pi: f64) -> Result<Self> {
        Self::new(l, s * l, vec![0.0; g], vec![pi; g])
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.l / self.len() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    pub fn heights(&self) -> Vec<f64> {
        let g = self.len() as f64;
        self.phi.iter().enumerate().map(|(i, p)| self.q * i as f64 / g + p).collect()
    }

    /// Spectral `∂ₓh`.
    pub fn slope(&self, f: &Fourier) -> Vec<f64> {
        f.derivative(&self.phi, None).into_iter().map(|d| d + self.q / self.l).collect()
    }

    /// `(h_{i+1} − h_i)/Δx` with `h_G = h_0 + q`.
    pub fn discrete_slopes(&self) -> Vec<f64> {
        let h = self.heights();
        let g = h.len();
        (0..g)
            .map(|i| {
                let next = if i + 1 == g { h[0] + self.q } else { h[i + 1] };
                (next - h[i]) / self.dx()
            })
            .collect()
    }

    pub fn is_lipschitz(&self) -> bool {
        self.discrete_slopes().iter().all(|&s| s > 0.0 && s < 1.0)
    }

    /// `∫ π ∂ₓh dx`.
    pub fn momentum(&self, f: &Fourier) -> f64 {
        self.slope(f).iter().zip(&self.pi).map(|(s, p)| s * p).sum::<f64>() * self.dx()
    }

    /// Adds `a_h sin(2πmx/L)` to the height and `a_π cos(2πmx/L)` to `π`.
    pub fn perturb(&mut self, mode: usize, a_h: f64, a_pi: f64) {
        for i in 0..self.len() {
            let arg = TAU * mode as f64 * self.x(i) / self.l;
            self.phi[i] += a_h * arg.sin();
            self.pi[i] += a_pi * arg.cos();
        }
    }
}

pub(crate) fn regime_exit(i: usize, y: f64, e: Error) -> Error {
    match e {
        Error::RegimeExit { .. } => e,
        other => Error::RegimeExit { x_index: i, y, detail: format!("{other}") },
    }
}

/// Samples `ℋ` along the state at spectral offsets `offsets[i]`, checking the gradient box.
pub(crate) fn sample(
    surf: &FreeEnergySurface,
    slopes: &[f64],
    pi: &[f64],
    offsets: &[f64],
    y: f64,
    margin: f64,
) -> Result<Vec<SurfacePoint>> {
    slopes
        .iter()
        .zip(pi)
        .zip(offsets)
        .enumerate()
        .map(|(i, ((&s, &p), &u))| {
            if !(s > margin && s < 1.0 - margin) {
                return Err(Error::RegimeExit { x_index: i, y, detail: format!("slope {s} left ({margin}, {})", 1.0 - margin) });
            }
            surf.eval(s, p, u).map_err(|e| regime_exit(i, y, e))
        })
        .collect()
}

pub(crate) fn sample_slabs(slabs: &[Slab], slopes: &[f64], pi: &[f64], y: f64, margin: f64) -> Result<Vec<SurfacePoint>> {
    slopes
        .iter()
        .zip(pi)
        .zip(slabs)
        .enumerate()
        .map(|(i, ((&s, &p), slab))| {
            if !(s > margin && s < 1.0 - margin) {
                return Err(Error::RegimeExit { x_index: i, y, detail: format!("slope {s} left ({margin}, {})", 1.0 - margin) });
            }
            slab.eval(s, p).map_err(|e| regime_exit(i, y, e))
        })
        .collect()
}

/// `H_u = ∫₀^L ℋ_{u−v(x)}(∂ₓh, π) dx` by the periodic trapezoidal rule.
pub fn hamiltonian_value(state: &FieldState, u: f64, v: &Profile, surf: &FreeEnergySurface) -> Result<f64> {
    let f = Fourier::new(state.len(), state.l);
    let offsets: Vec<f64> = (0..state.len()).map(|i| u - v.value(state.x(i))).collect();
    let pts = sample(surf, &state.slope(&f), &state.pi, &offsets, state.y, 0.0)?;
    Ok(pts.iter().map(|p| p.value).sum::<f64>() * state.dx())
}

/// A state on which the flow of `H_u` only shifts `h` uniformly: `ℋ_1` and `ℋ_2` are constant
/// in `x`, matching their values at `(s0, π0)` with `v = 0`.
pub fn stationary_state(
    surf: &FreeEnergySurface,
    l: f64,
    g: usize,
    u: f64,
    v: &Profile,
    s0: f64,
    pi0: f64,
) -> Result<FieldState> {
    let target = surf.eval(s0, pi0, u)?;
    let (c1, c2) = (target.h1, target.h2);
    let mut slopes = vec![s0; g];
    let mut pis = vec![pi0; g];
    for i in 0..g {
        let x = i as f64 * l / g as f64;
        let slab = surf.slab(u - v.value(x)).map_err(|e| regime_exit(i, 0.0, e))?;
        let (mut s, mut p) = (s0, pi0);
        let mut converged = false;
        for _ in 0..50 {
            let pt = slab.eval(s, p).map_err(|e| regime_exit(i, 0.0, e))?;
            let (f1, f2) = (pt.h1 - c1, pt.h2 - c2);
            if f1.abs().max(f2.abs()) < 1e-14 {
                converged = true;
                break;
            }
            let det = pt.h11 * pt.h22 - pt.h12 * pt.h12;
            s -= (pt.h22 * f1 - pt.h12 * f2) / det;
            p -= (pt.h11 * f2 - pt.h12 * f1) / det;
        }
        if !converged {
            return Err(Error::Iteration { method: "stationary state", iterations: 50, residual: f64::NAN });
        }
        slopes[i] = s;
        pis[i] = p;
    }
    let f = Fourier::new(g, l);
    let mean = slopes.iter().sum::<f64>() / g as f64;
    let phi = f.antiderivative(&slopes);
    FieldState::new(l, mean * l, phi, pis)
}
