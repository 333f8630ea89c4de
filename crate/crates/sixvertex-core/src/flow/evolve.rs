use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::field::{sample, sample_slabs, FieldState, Fourier, Profile};
use super::surface::{FreeEnergySurface, Slab};
use crate::error::{Error, Result};

/// Integration controls for [`evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    /// Generator spectral parameter as a function of `y`.
    pub u: Profile,
    /// Inhomogeneities as a function of `x`.
    pub v: Profile,
    pub dy: f64,
    pub y_end: f64,
    /// Spectral parameters `w` whose `H_w` is logged every step.
    pub probes: Vec<f64>,
    /// Fourier modes `|m| ≤ cutoff` are evolved; higher ones stay frozen. `None` evolves all.
    pub mode_cutoff: Option<usize>,
    /// Keep every `record_every`-th state in the trajectory (the last one is always kept).
    pub record_every: usize,
    /// Slopes must stay in `(margin, 1 − margin)`.
    pub margin: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            u: Profile::Constant(0.4),
            v: Profile::Constant(0.0),
            dy: 1e-3,
            y_end: 1.0,
            probes: Vec::new(),
            mode_cutoff: Some(2),
            record_every: 100,
            margin: 0.02,
        }
    }
}

/// Values logged after every step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConservationLog {
    pub probes: Vec<f64>,
    pub ys: Vec<f64>,
    /// `values[step][k] = H_{w_k}`.
    pub values: Vec<Vec<f64>>,
    /// `H_{u(y)}` of the generator itself.
    pub generator: Vec<f64>,
    /// `∫ π ∂ₓh dx`.
    pub momentum: Vec<f64>,
    /// `∫ π² dx`, not conserved in general.
    pub control: Vec<f64>,
}

fn max_rel(series: impl Iterator<Item = f64>) -> f64 {
    let mut first = None;
    let mut worst: f64 = 0.0;
    for v in series {
        let f = *first.get_or_insert(v);
        worst = worst.max(((v - f) / f).abs());
    }
    worst
}

impl ConservationLog {
    /// `max_y |H_w(y) − H_w(0)| / |H_w(0)|` for probe `k`.
    pub fn relative_drift(&self, k: usize) -> f64 {
        max_rel(self.values.iter().map(|row| row[k]))
    }

    pub fn max_relative_drift(&self) -> f64 {
        (0..self.probes.len()).map(|k| self.relative_drift(k)).fold(0.0, f64::max)
    }

    pub fn generator_drift(&self) -> f64 {
        max_rel(self.generator.iter().copied())
    }

    pub fn control_drift(&self) -> f64 {
        max_rel(self.control.iter().copied())
    }

    pub fn momentum_drift(&self) -> f64 {
        let f = self.momentum.first().copied().unwrap_or(0.0);
        self.momentum.iter().map(|m| (m - f).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub y: f64,
    pub phi: Vec<f64>,
    pub pi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub l: f64,
    pub q: f64,
    pub snapshots: Vec<Snapshot>,
    pub log: ConservationLog,
    pub final_state: FieldState,
}

impl Trajectory {
    pub fn xs(&self) -> Vec<f64> {
        self.final_state.xs()
    }
}

/// Evolution stopped early; `partial` holds everything up to the last good step.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveFailure {
    pub error: Error,
    pub partial: Trajectory,
}

struct Rhs<'a> {
    surf: &'a FreeEnergySurface,
    cfg: &'a EvolveConfig,
    fourier: Fourier,
    xs: Vec<f64>,
    fixed: Option<Vec<Slab>>,
    l: f64,
    q: f64,
}

impl Rhs<'_> {
    fn eval(&self, y: f64, phi: &[f64], pi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let slopes: Vec<f64> = self.fourier.derivative(phi, None).into_iter().map(|d| d + self.q / self.l).collect();
        let pts = match &self.fixed {
            Some(slabs) => sample_slabs(slabs, &slopes, pi, y, self.cfg.margin)?,
            None => {
                let u = self.cfg.u.value(y);
                let offsets: Vec<f64> = self.xs.iter().map(|&x| u - self.cfg.v.value(x)).collect();
                sample(self.surf, &slopes, pi, &offsets, y, self.cfg.margin)?
            }
        };
        let h1: Vec<f64> = pts.iter().map(|p| p.h1).collect();
        let h2: Vec<f64> = pts.iter().map(|p| p.h2).collect();
        Ok((self.fourier.filter(&h2, self.cfg.mode_cutoff), self.fourier.derivative(&h1, self.cfg.mode_cutoff)))
    }
}

struct Monitor {
    slabs: Vec<Vec<Slab>>,
}

fn log_state(
    log: &mut ConservationLog,
    mon: &Monitor,
    rhs: &Rhs<'_>,
    phi: &[f64],
    pi: &[f64],
    y: f64,
) -> Result<()> {
    let f = &rhs.fourier;
    let slopes: Vec<f64> = f.derivative(phi, None).into_iter().map(|d| d + rhs.q / rhs.l).collect();
    let dx = rhs.l / slopes.len() as f64;
    let mut row = Vec::with_capacity(mon.slabs.len());
    for slabs in &mon.slabs {
        let pts = sample_slabs(slabs, &slopes, pi, y, 0.0)?;
        row.push(pts.iter().map(|p| p.value).sum::<f64>() * dx);
    }
    let u = rhs.cfg.u.value(y);
    let offsets: Vec<f64> = rhs.xs.iter().map(|&x| u - rhs.cfg.v.value(x)).collect();
    let gen = sample(rhs.surf, &slopes, pi, &offsets, y, 0.0)?;
    log.ys.push(y);
    log.values.push(row);
    log.generator.push(gen.iter().map(|p| p.value).sum::<f64>() * dx);
    log.momentum.push(slopes.iter().zip(pi).map(|(s, p)| s * p).sum::<f64>() * dx);
    log.control.push(pi.iter().map(|p| p * p).sum::<f64>() * dx);
    Ok(())
}

/// Classical RK4 for `∂ᵧh = ℋ_2(∂ₓh, π; u(y) − v(x))`, `∂ᵧπ = ∂ₓ[ℋ_1(∂ₓh, π; u(y) − v(x))]`,
/// with spectral `∂ₓ` and `H_w` logged at every step.
pub fn evolve(
    state: &FieldState,
    surf: &FreeEnergySurface,
    cfg: &EvolveConfig,
) -> core::result::Result<Trajectory, EvolveFailure> {
    let empty = |error: Error| EvolveFailure {
        error,
        partial: Trajectory {
            l: state.l,
            q: state.q,
            snapshots: Vec::new(),
            log: ConservationLog::default(),
            final_state: state.clone(),
        },
    };
    if !(cfg.dy > 0.0) || !(cfg.y_end >= 0.0) || cfg.record_every == 0 {
        return Err(empty(Error::Domain(format!(
            "need dy > 0, y_end ≥ 0 and record_every ≥ 1 (got {}, {}, {})",
            cfg.dy, cfg.y_end, cfg.record_every
        ))));
    }
    let steps = (cfg.y_end / cfg.dy).round() as usize;
    if ((steps as f64) * cfg.dy - cfg.y_end).abs() > 1e-9 * cfg.y_end.max(1.0) {
        return Err(empty(Error::Domain(format!("y_end = {} is not a multiple of dy = {}", cfg.y_end, cfg.dy))));
    }
    let g = state.len();
    let xs = state.xs();
    let slabs_for = |u: f64| -> Result<Vec<Slab>> {
        xs.iter().enumerate().map(|(i, &x)| surf.slab(u - cfg.v.value(x)).map_err(|e| super::field::regime_exit(i, state.y, e))).collect()
    };
    let fixed = if cfg.u.is_constant() {
        match slabs_for(cfg.u.value(0.0)) {
            Ok(s) => Some(s),
            Err(e) => return Err(empty(e)),
        }
    } else {
        None
    };
    let mut mon = Monitor { slabs: Vec::new() };
    for &w in &cfg.probes {
        match slabs_for(w) {
            Ok(s) => mon.slabs.push(s),
            Err(e) => return Err(empty(e)),
        }
    }
    let rhs = Rhs { surf, cfg, fourier: Fourier::new(g, state.l), xs: xs.clone(), fixed, l: state.l, q: state.q };
    let mut log = ConservationLog { probes: cfg.probes.clone(), ..ConservationLog::default() };
    let mut phi = state.phi.clone();
    let mut pi = state.pi.clone();
    let mut y = state.y;
    let mut snapshots = vec![Snapshot { y, phi: phi.clone(), pi: pi.clone() }];
    let finish = |phi: Vec<f64>, pi: Vec<f64>, y: f64, snapshots: Vec<Snapshot>, log: ConservationLog| {
        let mut fs = state.clone();
        fs.phi = phi;
        fs.pi = pi;
        fs.y = y;
        Trajectory { l: state.l, q: state.q, snapshots, log, final_state: fs }
    };
    if let Err(e) = log_state(&mut log, &mon, &rhs, &phi, &pi, y) {
        return Err(EvolveFailure { error: e, partial: finish(phi, pi, y, snapshots, log) });
    }
    let dy = cfg.dy;
    let axpy = |a: &[f64], k: &[f64], c: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, d)| x + c * d).collect() };
    for step in 1..=steps {
        let stage = || -> Result<(Vec<f64>, Vec<f64>)> {
            let (k1h, k1p) = rhs.eval(y, &phi, &pi)?;
            let (k2h, k2p) = rhs.eval(y + 0.5 * dy, &axpy(&phi, &k1h, 0.5 * dy), &axpy(&pi, &k1p, 0.5 * dy))?;
            let (k3h, k3p) = rhs.eval(y + 0.5 * dy, &axpy(&phi, &k2h, 0.5 * dy), &axpy(&pi, &k2p, 0.5 * dy))?;
            let (k4h, k4p) = rhs.eval(y + dy, &axpy(&phi, &k3h, dy), &axpy(&pi, &k3p, dy))?;
            let comb = |a: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
                (0..a.len()).map(|i| a[i] + dy / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
            };
            Ok((comb(&phi, &k1h, &k2h, &k3h, &k4h), comb(&pi, &k1p, &k2p, &k3p, &k4p)))
        };
        let next = stage().and_then(|(nphi, npi)| {
            let ny = state.y + step as f64 * dy;
            log_state(&mut log, &mon, &rhs, &nphi, &npi, ny)?;
            Ok((nphi, npi, ny))
        });
        match next {
            Ok((nphi, npi, ny)) => {
                phi = nphi;
                pi = npi;
                y = ny;
                if step % cfg.record_every == 0 || step == steps {
                    snapshots.push(Snapshot { y, phi: phi.clone(), pi: pi.clone() });
                }
            }
            Err(e) => {
                if snapshots.last().map(|s| s.y) != Some(y) {
                    snapshots.push(Snapshot { y, phi: phi.clone(), pi: pi.clone() });
                }
                return Err(EvolveFailure { error: e, partial: finish(phi, pi, y, snapshots, log) });
            }
        }
    }
    Ok(finish(phi, pi, y, snapshots, log))
}
