use nalgebra::DMatrix;
use sixvertex_core::bethe::{eigenvalue, solve_bethe, BetheOptions};
use sixvertex_core::kernels::{ModelParams, Weights};
use sixvertex_core::xfer::{sector_log_traces, torus_log_z, SectorOperator};
use sixvertex_core::C64;

fn params(h: f64, v: Vec<f64>) -> ModelParams {
    ModelParams::new(1.0, 0.4).unwrap().with_fields(h, 0.0).unwrap().with_inhomogeneities(v).unwrap()
}

fn sine_profile(n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|k| amp * (std::f64::consts::TAU * (k + 1) as f64 / n as f64).sin()).collect()
}

/// Weight of one vertex: aux in `h`, vertical in `i`, aux out `h2`, vertical out `o`.
fn vertex(w: Weights, hf: f64, h: usize, i: usize, h2: usize, o: usize) -> f64 {
    if h + i != h2 + o {
        return 0.0;
    }
    let field = |occ: usize| if occ == 1 { (-hf).exp() } else { hf.exp() };
    if h == i {
        w.a * field(h)
    } else if h2 == h {
        w.b * field(h)
    } else {
        w.c
    }
}

/// Full 2^N transfer matrix by summing over every horizontal edge assignment.
fn brute_transfer(n_sites: usize, p: &ModelParams, u: f64) -> DMatrix<f64> {
    let dim = 1usize << n_sites;
    let w: Vec<Weights> = (0..n_sites).map(|k| Weights::baxter(p.eta, u - p.v(k))).collect();
    DMatrix::from_fn(dim, dim, |out, inp| {
        let mut total = 0.0;
        for aux in 0..dim {
            let mut prod = 1.0;
            for k in 0..n_sites {
                let h = (aux >> k) & 1;
                let h2 = (aux >> ((k + 1) % n_sites)) & 1;
                prod *= vertex(w[k], p.h_field, h, (inp >> k) & 1, h2, (out >> k) & 1);
            }
            total += prod;
        }
        total
    })
}

fn dense_top(m: &sixvertex_core::linalg::Matrix<f64>) -> f64 {
    let n = m.rows();
    let d = DMatrix::from_fn(n, n, |i, j| m[(i, j)]);
    d.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn sector_operator_matches_brute_force_contraction() {
    for n_sites in 2..=4 {
        let p = params(0.07, sine_profile(n_sites, 0.03));
        let full = brute_transfer(n_sites, &p, 0.37);
        for n in 0..=n_sites {
            let op = SectorOperator::new(n_sites, n, p.clone()).unwrap();
            let m = op.dense_matrix(0.37).unwrap();
            let states = op.basis.states();
            for (i, &si) in states.iter().enumerate() {
                for (j, &sj) in states.iter().enumerate() {
                    assert!((m[(i, j)] - full[(si as usize, sj as usize)]).abs() < 1e-14);
                }
            }
        }
        // nothing leaks between sectors
        for out in 0..(1usize << n_sites) {
            for inp in 0..(1usize << n_sites) {
                if out.count_ones() != inp.count_ones() {
                    assert_eq!(full[(out, inp)], 0.0);
                }
            }
        }
    }
}

#[test]
fn two_site_trace_matches_contraction() {
    let p = params(0.0, vec![]);
    let op = SectorOperator::new(2, 1, p.clone()).unwrap();
    let m = op.dense_matrix(0.4).unwrap();
    let full = brute_transfer(2, &p, 0.4);
    let tr_full: f64 = [1usize, 2].iter().map(|&s| full[(s, s)]).sum();
    assert!((m[(0, 0)] + m[(1, 1)] - tr_full).abs() < 1e-14);
}

#[test]
fn power_iteration_matches_dense_eigenvalue() {
    let p = params(0.0, vec![]);
    let op = SectorOperator::new(6, 3, p).unwrap();
    let top = op.top_eigenvalue(0.4, 1e-13).unwrap();
    let dense = dense_top(&op.dense_matrix(0.4).unwrap());
    assert!((top.value - dense).abs() < 1e-10 * dense, "{} vs {}", top.value, dense);
    assert!(top.value > 0.0);
    assert!(top.vector.iter().all(|&x| x > 0.0));
}

#[test]
fn hard_sectors_with_negative_partner_converge() {
    for (n_sites, n) in [(8, 4), (10, 5)] {
        let op = SectorOperator::new(n_sites, n, params(0.0, vec![])).unwrap();
        let top = op.top_eigenvalue(0.4, 1e-13).unwrap();
        let dense = dense_top(&op.dense_matrix(0.4).unwrap());
        assert!((top.value - dense).abs() < 1e-10 * dense);
    }
}

#[test]
fn transfer_matrices_commute() {
    let p = params(0.06, sine_profile(7, 0.04));
    let op = SectorOperator::new(7, 3, p).unwrap();
    let x: Vec<f64> = (0..op.dim()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
    let (u, w) = (0.31, 0.72);
    let a = op.apply(&op.apply(&x, w).unwrap(), u).unwrap();
    let b = op.apply(&op.apply(&x, u).unwrap(), w).unwrap();
    let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    assert!(diff < 1e-12 * scale);
}

#[test]
fn homogeneous_zero_field_commutes_with_shift() {
    let op = SectorOperator::new(6, 2, params(0.0, vec![])).unwrap();
    let m = op.dense_matrix(0.4).unwrap();
    let states = op.basis.states();
    let shift = |s: u32| ((s << 1) | (s >> 5)) & 0x3f;
    for (i, &si) in states.iter().enumerate() {
        for (j, &sj) in states.iter().enumerate() {
            let a = m[(op.basis.index_of(shift(si)), op.basis.index_of(shift(sj)))];
            assert!((a - m[(i, j)]).abs() < 1e-14);
        }
    }
}

#[test]
fn top_eigenvalue_is_even_in_field_at_half_filling() {
    for n_sites in [4, 6] {
        let a = SectorOperator::new(n_sites, n_sites / 2, params(0.08, vec![])).unwrap().top_eigenvalue(0.4, 1e-13).unwrap();
        let b = SectorOperator::new(n_sites, n_sites / 2, params(-0.08, vec![])).unwrap().top_eigenvalue(0.4, 1e-13).unwrap();
        assert!((a.value - b.value).abs() < 1e-11 * a.value);
    }
}

#[test]
fn bethe_eigenvalue_matches_transfer_matrix() {
    let n_sites = 6;
    let p = params(0.05, sine_profile(n_sites, 0.02));
    let sol = solve_bethe(n_sites, 3, &p, BetheOptions::default()).unwrap();
    let lam = eigenvalue(&sol, 0.4).unwrap();
    let top = SectorOperator::new(n_sites, 3, p).unwrap().top_eigenvalue(0.4, 1e-14).unwrap();
    assert!((lam.re - top.value).abs() < 1e-9 * top.value);
    assert!(lam.im.abs() < 1e-9 * lam.norm());
    // frozen from an independent exact-diagonalization run
    assert!((top.value - 3.932_907_190_136_78).abs() < 1e-11, "{}", top.value);
}

#[test]
fn homogeneous_half_filling_eigenvalue() {
    let p = params(0.0, vec![]);
    let sol = solve_bethe(4, 2, &p, BetheOptions::default()).unwrap();
    let lam = eigenvalue(&sol, 0.4).unwrap();
    let top = SectorOperator::new(4, 2, p).unwrap().top_eigenvalue(0.4, 1e-14).unwrap();
    assert!(lam.im.abs() < 1e-14);
    assert!((lam.re - top.value).abs() < 1e-10 * top.value);
}

#[test]
fn zero_field_roots_are_real_and_symmetric() {
    let sol = solve_bethe(10, 5, &params(0.0, vec![]), BetheOptions::default()).unwrap();
    let mut re: Vec<f64> = sol.roots.iter().map(|z| z.re).collect();
    assert!(sol.roots.iter().all(|z| z.im.abs() < 1e-12));
    re.sort_by(f64::total_cmp);
    for k in 0..5 {
        assert!((re[k] + re[4 - k]).abs() < 1e-12);
    }
}

#[test]
fn field_roots_are_closed_under_reflection() {
    let sol = solve_bethe(8, 3, &params(0.07, vec![]), BetheOptions::default()).unwrap();
    for &a in &sol.roots {
        let refl = C64::new(-a.re, a.im);
        let d = sol.roots.iter().map(|b| (b - refl).norm()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-8);
    }
}

#[test]
fn one_root_set_serves_every_spectral_parameter() {
    let n_sites = 6;
    let p = params(0.04, sine_profile(n_sites, 0.03));
    let sol = solve_bethe(n_sites, 2, &p, BetheOptions::default()).unwrap();
    let op = SectorOperator::new(n_sites, 2, p).unwrap();
    let x = op.top_eigenvalue(0.4, 1e-14).unwrap().vector;
    for w in [0.25, 0.4, 0.6, 0.8] {
        let tx = op.apply(&x, w).unwrap();
        let lam = eigenvalue(&sol, w).unwrap();
        let err = tx.iter().zip(&x).map(|(a, b)| (a - lam.re * b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10 * lam.norm(), "w = {w}");
    }
}

fn brute_torus(m_rows: usize, n_sites: usize, p: &ModelParams) -> f64 {
    let w = Weights::baxter(p.eta, p.u);
    let nv = m_rows * n_sites;
    let mut z = 0.0;
    for vert in 0..(1usize << nv) {
        for hor in 0..(1usize << nv) {
            let vbit = |i: usize, k: usize| (vert >> ((i % m_rows) * n_sites + k)) & 1;
            let hbit = |i: usize, k: usize| (hor >> (i * n_sites + (k % n_sites))) & 1;
            let mut prod = 1.0;
            for i in 0..m_rows {
                for k in 0..n_sites {
                    prod *= vertex(w, p.h_field, hbit(i, k), vbit(i, k), hbit(i, k + 1), vbit(i + 1, k));
                    prod *= if vbit(i, k) == 1 { (-p.v_field).exp() } else { p.v_field.exp() };
                }
            }
            z += prod;
        }
    }
    z
}

#[test]
fn small_torus_matches_configuration_sum() {
    let p = ModelParams::new(1.0, 0.35).unwrap().with_fields(0.1, -0.2).unwrap();
    let lz = torus_log_z(2, 2, &p).unwrap();
    assert!((lz - brute_torus(2, 2, &p).ln()).abs() < 1e-13);
    let lz = torus_log_z(2, 3, &p).unwrap();
    assert!((lz - brute_torus(2, 3, &p).ln()).abs() < 1e-13);
}

#[test]
fn vertical_field_reweights_sectors() {
    let p0 = ModelParams::new(1.0, 0.4).unwrap();
    let pv = p0.clone().with_fields(0.0, 0.15).unwrap();
    let (m, n) = (5, 4);
    let sectors = sector_log_traces(m, n, &p0).unwrap();
    let shifted: Vec<f64> = sectors
        .iter()
        .enumerate()
        .map(|(k, &l)| l + m as f64 * (n as f64 - 2.0 * k as f64) * 0.15)
        .collect();
    let expect = sixvertex_core::xfer::log_sum_exp(&shifted) - sixvertex_core::xfer::log_sum_exp(&sectors);
    let got = torus_log_z(m, n, &pv).unwrap() - torus_log_z(m, n, &p0).unwrap();
    assert!((got - expect).abs() < 1e-12);
}

#[test]
fn long_torus_is_dominated_by_top_eigenvalue() {
    let p = ModelParams::new(1.0, 0.4).unwrap().with_fields(0.0, 0.1).unwrap();
    let n = 4;
    let best = (0..=n)
        .map(|k| {
            let op = SectorOperator::new(n, k, p.clone()).unwrap();
            op.top_eigenvalue(0.4, 1e-14).unwrap().value.ln() + (n as f64 - 2.0 * k as f64) * 0.1
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let m = 4000;
    let per_site = torus_log_z(m, n, &p).unwrap() / (m * n) as f64;
    assert!((per_site - best / n as f64).abs() < 1e-3);
}
