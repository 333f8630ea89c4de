//! Row-to-row transfer matrices restricted to fixed particle sectors.
//!
//! A basis state is a bitmask over the `N` vertical edges of a row; bit `k` set means
//! column `k` is occupied. Sector `n` holds the `C(N, n)` masks with `n` bits, in
//! ascending numeric order.
//!
//! Field convention: an occupied horizontal edge carries `e^{−H}` and an empty one
//! `e^{+H}` (per vertex, as in `R(u, −H, 0)`), an occupied vertical edge carries
//! `e^{−V}`. With this choice the eigenvalue in sector `n` is the Bethe formula with
//! `n` roots and the vertical field contributes `e^{M(N−2n)V}` on an `M`-row torus.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::{ModelParams, Weights};
use crate::linalg::{Lu, Matrix};

/// Largest width accepted by the sector machinery.
pub const MAX_SITES: usize = 24;

/// Binomial coefficient.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Enumeration of all bitmasks by popcount with reverse lookup.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub n_sites: usize,
    pub n: usize,
    by_count: Vec<Vec<u32>>,
    rank: Vec<u32>,
}

impl SectorBasis {
    pub fn new(n_sites: usize, n: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::Domain(alloc::format!("lattice width must be in 1..={MAX_SITES}, got {n_sites}")));
        }
        if n > n_sites {
            return Err(Error::Domain(alloc::format!("particle number {n} exceeds width {n_sites}")));
        }
        let mut by_count = vec![Vec::new(); n_sites + 1];
        let mut rank = vec![0u32; 1 << n_sites];
        for mask in 0u32..(1u32 << n_sites) {
            let c = mask.count_ones() as usize;
            rank[mask as usize] = by_count[c].len() as u32;
            by_count[c].push(mask);
        }
        Ok(Self { n_sites, n, by_count, rank })
    }

    /// Masks of the sector, ascending.
    pub fn states(&self) -> &[u32] {
        &self.by_count[self.n]
    }

    pub fn dim(&self) -> usize {
        self.by_count[self.n].len()
    }

    /// Position of `mask` within its popcount class.
    pub fn index_of(&self, mask: u32) -> usize {
        self.rank[mask as usize] as usize
    }

    fn masks(&self, count: isize) -> &[u32] {
        if count < 0 || count as usize > self.n_sites {
            &[]
        } else {
            &self.by_count[count as usize]
        }
    }
}

/// Transfer matrix `t(u, {v_k}, H, 0)` acting on sector `n`.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub basis: SectorBasis,
    pub params: ModelParams,
}

/// Dominant eigenpair of a sector.
#[derive(Debug, Clone)]
pub struct TopEigen {
    pub value: f64,
    /// Unit-norm, positive eigenvector.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// Relative residual `‖t x − λ x‖ / |λ|`.
    pub residual: f64,
    pub dense_fallback: bool,
}

impl SectorOperator {
    pub fn new(n_sites: usize, n: usize, params: ModelParams) -> Result<Self> {
        params.validate()?;
        if !params.v_list.is_empty() && params.v_list.len() != n_sites {
            return Err(Error::Dimension { expected: n_sites, found: params.v_list.len() });
        }
        Ok(Self { basis: SectorBasis::new(n_sites, n)?, params })
    }

    pub fn n_sites(&self) -> usize {
        self.basis.n_sites
    }

    pub fn n(&self) -> usize {
        self.basis.n
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn site_weights(&self, u: f64) -> Result<Vec<Weights>> {
        self.params.check_spectral(u)?;
        Ok((0..self.n_sites()).map(|k| Weights::baxter(self.params.eta, u - self.params.v(k))).collect())
    }

    /// `t(u) · state`, by contracting one vertex at a time.
    pub fn apply(&self, state: &[f64], u: f64) -> Result<Vec<f64>> {
        let w = self.site_weights(u)?;
        self.apply_with(state, &w)
    }

    fn apply_with(&self, state: &[f64], w: &[Weights]) -> Result<Vec<f64>> {
        let dim = self.dim();
        if state.len() != dim {
            return Err(Error::Dimension { expected: dim, found: state.len() });
        }
        let n = self.n() as isize;
        let nsites = self.n_sites();
        let f_occ = (-self.params.h_field).exp();
        let f_emp = self.params.h_field.exp();
        let mut out = vec![0.0; dim];
        for h0 in 0..2isize {
            // cur[h] is indexed by masks with popcount n + h0 − h
            let mut cur = [
                vec![0.0; self.basis.masks(n + h0).len()],
                vec![0.0; self.basis.masks(n + h0 - 1).len()],
            ];
            cur[h0 as usize].copy_from_slice(state);
            let mut next = [vec![0.0; cur[0].len()], vec![0.0; cur[1].len()]];
            for (k, wk) in w.iter().enumerate().take(nsites) {
                let bit = 1u32 << k;
                next[0].iter_mut().for_each(|x| *x = 0.0);
                next[1].iter_mut().for_each(|x| *x = 0.0);
                for h in 0..2usize {
                    let masks = self.basis.masks(n + h0 - h as isize);
                    for (r, &amp) in cur[h].iter().enumerate() {
                        if amp == 0.0 {
                            continue;
                        }
                        let mask = masks[r];
                        let occupied = mask & bit != 0;
                        match (h, occupied) {
                            (1, true) => next[1][r] += wk.a * f_occ * amp,
                            (0, false) => next[0][r] += wk.a * f_emp * amp,
                            (1, false) => {
                                next[1][r] += wk.b * f_occ * amp;
                                next[0][self.basis.index_of(mask | bit)] += wk.c * amp;
                            }
                            _ => {
                                next[0][r] += wk.b * f_emp * amp;
                                next[1][self.basis.index_of(mask & !bit)] += wk.c * amp;
                            }
                        }
                    }
                }
                core::mem::swap(&mut cur, &mut next);
            }
            for (o, &v) in out.iter_mut().zip(&cur[h0 as usize]) {
                *o += v;
            }
        }
        Ok(out)
    }

    /// The sector matrix, built column by column from [`SectorOperator::apply`].
    pub fn dense_matrix(&self, u: f64) -> Result<Matrix<f64>> {
        let w = self.site_weights(u)?;
        let dim = self.dim();
        let mut m = Matrix::zeros(dim, dim);
        let mut e = vec![0.0; dim];
        for j in 0..dim {
            e[j] = 1.0;
            let col = self.apply_with(&e, &w)?;
            e[j] = 0.0;
            for (i, v) in col.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    /// Dominant eigenvalue by shifted power iteration.
    ///
    /// The sector matrix is nonnegative and irreducible, so its Perron root is real,
    /// simple and carries a positive eigenvector. Large negative eigenvalues are common,
    /// so once a rough estimate exists the iteration runs on `t + σ` with `σ = λ/2`.
    /// If the residual stalls and the sector is small enough, inverse iteration on the
    /// dense matrix finishes the job.
    pub fn top_eigenvalue(&self, u: f64, tol: f64) -> Result<TopEigen> {
        self.top_eigenvalue_with(u, tol, 20_000)
    }

    pub fn top_eigenvalue_with(&self, u: f64, tol: f64, max_iter: usize) -> Result<TopEigen> {
        if !(tol > 0.0) {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        let w = self.site_weights(u)?;
        let dim = self.dim();
        let mut x = vec![1.0 / (dim as f64).sqrt(); dim];
        let mut sigma = 0.0;
        let mut lambda = 0.0;
        let mut residual = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut stall = 0usize;
        for it in 1..=max_iter {
            let y = self.apply_with(&x, &w)?;
            lambda = dot(&x, &y);
            residual = y.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
                / lambda.abs().max(f64::MIN_POSITIVE);
            if residual < tol {
                return Ok(TopEigen { value: lambda, vector: x, iterations: it, residual, dense_fallback: false });
            }
            if residual < 0.98 * best {
                best = residual;
                stall = 0;
            } else {
                stall += 1;
            }
            if stall > 200 {
                break;
            }
            if it == 8 {
                sigma = 0.5 * lambda.abs();
            }
            let mut z: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a + sigma * b).collect();
            let nz = norm(&z);
            if !(nz > 0.0) || !nz.is_finite() {
                return Err(Error::Iteration { method: "power iteration", iterations: it, residual });
            }
            z.iter_mut().for_each(|v| *v /= nz);
            x = z;
        }
        if dim <= 4096 {
            return self.inverse_iteration(&w, lambda, x, tol);
        }
        Err(Error::Iteration { method: "power iteration", iterations: max_iter, residual })
    }

    fn inverse_iteration(&self, w: &[Weights], guess: f64, mut x: Vec<f64>, tol: f64) -> Result<TopEigen> {
        let dim = self.dim();
        let mut m = Matrix::zeros(dim, dim);
        let mut e = vec![0.0; dim];
        for j in 0..dim {
            e[j] = 1.0;
            for (i, v) in self.apply_with(&e, w)?.into_iter().enumerate() {
                m[(i, j)] = v;
            }
            e[j] = 0.0;
        }
        let mu = guess * (1.0 + 1e-7) + 1e-12;
        let mut shifted = m.clone();
        for i in 0..dim {
            shifted[(i, i)] -= mu;
        }
        let lu = Lu::new(shifted)?;
        let mut residual = f64::INFINITY;
        for it in 1..=50 {
            let mut z = lu.solve(&x);
            let nz = norm(&z);
            z.iter_mut().for_each(|v| *v /= nz);
            if z.iter().sum::<f64>() < 0.0 {
                z.iter_mut().for_each(|v| *v = -*v);
            }
            x = z;
            let y = m.matvec(&x);
            let lambda = dot(&x, &y);
            residual = y.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt() / lambda.abs();
            if residual < tol.max(1e-14) {
                return Ok(TopEigen { value: lambda, vector: x, iterations: it, residual, dense_fallback: true });
            }
        }
        Err(Error::Iteration { method: "inverse iteration", iterations: 50, residual })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `ln Tr(A_1 A_2 ⋯ A_M)` for nonnegative square matrices, rescaling as it goes.
pub fn log_trace_product(mats: &[Matrix<f64>]) -> Result<f64> {
    let first = mats.first().ok_or_else(|| Error::Domain("empty matrix product".into()))?;
    let mut acc = first.clone();
    let mut log_scale = 0.0;
    rescale(&mut acc, &mut log_scale);
    for m in &mats[1..] {
        acc = acc.matmul(m);
        rescale(&mut acc, &mut log_scale);
    }
    trace_log(&acc, log_scale)
}

/// `ln Tr(A^m)` by repeated squaring with rescaling.
pub fn log_trace_power(a: &Matrix<f64>, m: usize) -> Result<f64> {
    if m == 0 {
        return Ok((a.rows() as f64).ln());
    }
    let mut base = a.clone();
    let mut base_log = 0.0;
    rescale(&mut base, &mut base_log);
    let mut acc: Option<(Matrix<f64>, f64)> = None;
    let mut e = m;
    loop {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => (base.clone(), base_log),
                Some((p, l)) => {
                    let mut q = p.matmul(&base);
                    let mut lq = l + base_log;
                    rescale(&mut q, &mut lq);
                    (q, lq)
                }
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        let mut sq = base.matmul(&base);
        let mut ls = 2.0 * base_log;
        rescale(&mut sq, &mut ls);
        base = sq;
        base_log = ls;
    }
    let (p, l) = acc.expect("m > 0");
    trace_log(&p, l)
}

fn rescale(m: &mut Matrix<f64>, log_scale: &mut f64) {
    let s = m.max_abs();
    if s > 0.0 && s.is_finite() {
        let rows = m.rows();
        let cols = m.cols();
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] /= s;
            }
        }
        *log_scale += s.ln();
    }
}

fn trace_log(m: &Matrix<f64>, log_scale: f64) -> Result<f64> {
    let tr: f64 = (0..m.rows()).map(|i| m[(i, i)]).sum();
    if !(tr > 0.0) {
        return Err(Error::Domain("transfer-matrix trace is not positive".into()));
    }
    Ok(tr.ln() + log_scale)
}

/// Per-sector contributions `ln Tr(t_n(u_1)⋯t_n(u_M))` with no vertical-field factor.
pub fn sector_log_traces(m_rows: usize, n_sites: usize, params: &ModelParams) -> Result<Vec<f64>> {
    if m_rows == 0 {
        return Err(Error::Domain("need at least one row".into()));
    }
    if n_sites > 12 {
        return Err(Error::Domain(alloc::format!("torus width {n_sites} exceeds 12")));
    }
    if !params.u_list.is_empty() && params.u_list.len() != m_rows {
        return Err(Error::Dimension { expected: m_rows, found: params.u_list.len() });
    }
    let mut out = Vec::with_capacity(n_sites + 1);
    for n in 0..=n_sites {
        let op = SectorOperator::new(n_sites, n, params.clone())?;
        let lt = if params.u_list.is_empty() {
            log_trace_power(&op.dense_matrix(params.u)?, m_rows)?
        } else {
            let mats = params.u_list.iter().map(|&u| op.dense_matrix(u)).collect::<Result<Vec<_>>>()?;
            log_trace_product(&mats)?
        };
        out.push(lt);
    }
    Ok(out)
}

/// `ln Z` of the `M × N` torus, summing `Tr t_n^M = Σ_i Λ_i^M` over every sector.
pub fn torus_log_z(m_rows: usize, n_sites: usize, params: &ModelParams) -> Result<f64> {
    let sectors = sector_log_traces(m_rows, n_sites, params)?;
    let terms: Vec<f64> = sectors
        .iter()
        .enumerate()
        .map(|(n, &lt)| lt + (m_rows as f64) * (n_sites as f64 - 2.0 * n as f64) * params.v_field)
        .collect();
    Ok(log_sum_exp(&terms))
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Dominant eigenvalue of each sector and the overall maximum.
#[derive(Debug, Clone)]
pub struct SectorMaxima {
    pub per_sector: Vec<f64>,
    /// Sector index and value of the largest `e^{(N−2n)V} Λ_n`.
    pub global: (usize, f64),
}

pub fn sector_maxima(n_sites: usize, params: &ModelParams, tol: f64) -> Result<SectorMaxima> {
    let mut per_sector = Vec::with_capacity(n_sites + 1);
    let mut global = (0, f64::NEG_INFINITY);
    for n in 0..=n_sites {
        let op = SectorOperator::new(n_sites, n, params.clone())?;
        let top = op.top_eigenvalue(params.u, tol)?;
        let weighted = top.value * ((n_sites as f64 - 2.0 * n as f64) * params.v_field).exp();
        if weighted > global.1 {
            global = (n, weighted);
        }
        per_sector.push(top.value);
    }
    Ok(SectorMaxima { per_sector, global })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(h: f64) -> ModelParams {
        ModelParams::new(1.0, 0.4).unwrap().with_fields(h, 0.0).unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(14, 7), 3432);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn basis_is_sorted_and_ranked() {
        let b = SectorBasis::new(6, 2).unwrap();
        assert_eq!(b.dim(), 15);
        assert!(b.states().windows(2).all(|w| w[0] < w[1]));
        for (i, &m) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(m), i);
        }
    }

    #[test]
    fn empty_sector_eigenvalue() {
        let p = params(0.07).with_inhomogeneities(alloc::vec![0.01, -0.02, 0.03, 0.0, 0.02]).unwrap();
        let op = SectorOperator::new(5, 0, p.clone()).unwrap();
        let y = op.apply(&[1.0], 0.4).unwrap();
        let mut a = 1.0;
        let mut b = 1.0;
        for k in 0..5 {
            a *= (1.0 - 0.4 + p.v(k)).sinh();
            b *= (0.4 - p.v(k)).sinh();
        }
        let expected = (5.0 * 0.07f64).exp() * a + (-5.0 * 0.07f64).exp() * b;
        assert!((y[0] - expected).abs() < 1e-14 * expected);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let op = SectorOperator::new(4, 2, params(0.0)).unwrap();
        assert!(matches!(op.apply(&[1.0; 5], 0.4), Err(Error::Dimension { expected: 6, found: 5 })));
    }

    #[test]
    fn two_site_matrix_is_quadratic_root() {
        let op = SectorOperator::new(2, 1, params(0.0)).unwrap();
        let m = op.dense_matrix(0.4).unwrap();
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let tr = a + d;
        let det = a * d - b * c;
        let root = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
        let top = op.top_eigenvalue(0.4, 1e-14).unwrap();
        assert!((top.value - root).abs() < 1e-12 * root);
    }

    #[test]
    fn log_trace_power_matches_direct_product() {
        let a = Matrix::from_fn(3, 3, |i, j| 0.5 + (i * 3 + j) as f64 * 0.1);
        let mut p = a.clone();
        for _ in 1..7 {
            p = p.matmul(&a);
        }
        let direct = (0..3).map(|i| p[(i, i)]).sum::<f64>().ln();
        assert!((log_trace_power(&a, 7).unwrap() - direct).abs() < 1e-13);
        let prod = log_trace_product(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert!((prod - log_trace_power(&a, 3).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
