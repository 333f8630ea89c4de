//! Parallel sweeps of the commutation identities over `(q, H, u, w)`.

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;
use sixvertex_core::commute::{identity_residuals, HessianSource, IdentityReport};
use sixvertex_core::thermo::ThermoOptions;

/// Points of a sweep: every `(q, H)` combined with every `(u, w)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityGrid {
    pub eta: f64,
    pub qs: Vec<f64>,
    pub hs: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
    pub source: HessianSource,
    pub thermo: ThermoOptions,
}

impl IdentityGrid {
    /// Pairs from the Cartesian product `us × ws`.
    pub fn cartesian(eta: f64, qs: Vec<f64>, hs: Vec<f64>, us: &[f64], ws: &[f64], source: HessianSource) -> Self {
        let pairs = us.iter().flat_map(|&u| ws.iter().map(move |&w| (u, w))).collect();
        Self { eta, qs, hs, pairs, source, thermo: ThermoOptions::default() }
    }

    pub fn len(&self) -> usize {
        self.qs.len() * self.hs.len() * self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(q, H, u, w)` in sweep order: `q` slowest, then `H`, then the pair.
    pub fn points(&self) -> Vec<(f64, f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for &q in &self.qs {
            for &h in &self.hs {
                for &(u, w) in &self.pairs {
                    out.push((q, h, u, w));
                }
            }
        }
        out
    }
}

/// A point that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub index: usize,
    pub q: f64,
    pub h: f64,
    pub u: f64,
    pub w: f64,
    pub error: String,
    /// Caused by the input rather than by a solver.
    pub input_error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub points: usize,
    pub succeeded: usize,
    pub source: &'static str,
    /// Largest normalized residual of each identity over the successful points.
    pub max_residual: [f64; 3],
    pub failures: Vec<PointFailure>,
}

impl SweepSummary {
    pub fn overall_max(&self) -> f64 {
        self.max_residual.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    /// One entry per grid point, in sweep order.
    pub results: Vec<Result<IdentityReport, PointFailure>>,
    pub summary: SweepSummary,
}

impl SweepReport {
    pub fn reports(&self) -> impl Iterator<Item = &IdentityReport> {
        self.results.iter().filter_map(|r| r.as_ref().ok())
    }
}

/// Evaluates every grid point on `pool`; failures are recorded and the sweep continues.
pub fn sweep_verify(grid: &IdentityGrid, pool: &ThreadPool) -> SweepReport {
    let points = grid.points();
    let results: Vec<_> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(index, &(q, h, u, w))| {
                identity_residuals(u, w, q, h, grid.eta, grid.source, &grid.thermo).map_err(|e| PointFailure {
                    index,
                    q,
                    h,
                    u,
                    w,
                    error: e.to_string(),
                    input_error: e.is_input_error(),
                })
            })
            .collect()
    });
    let mut max_residual = [0.0f64; 3];
    let mut failures = Vec::new();
    let mut succeeded = 0;
    for r in &results {
        match r {
            Ok(rep) => {
                succeeded += 1;
                for (m, v) in max_residual.iter_mut().zip(rep.residuals()) {
                    *m = m.max(v.abs());
                }
            }
            Err(f) => failures.push(f.clone()),
        }
    }
    let summary = SweepSummary { points: points.len(), succeeded, source: grid.source.name(), max_residual, failures };
    SweepReport { results, summary }
}
