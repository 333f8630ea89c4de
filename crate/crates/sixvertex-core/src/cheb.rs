//! Chebyshev interpolation on boxes, used by the tabulated free-energy surface.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::PI;

/// Chebyshev points of the first kind on `[lo, hi]`, ascending.
pub fn cheb_nodes(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|k| {
            let x = -((PI * (k as f64 + 0.5) / n as f64).cos());
            0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        })
        .collect()
}

/// Coefficients of the degree `n−1` interpolant through values at [`cheb_nodes`].
pub fn cheb_coefficients(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut c = vec![0.0; n];
    for (j, cj) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for (k, &v) in values.iter().enumerate() {
            // ascending nodes carry a (−1)^j sign relative to the usual ordering
            s += v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos();
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *cj = sign * s * if j == 0 { 1.0 } else { 2.0 } / n as f64;
    }
    c
}

/// Values of T_k(x) and T_k'(x) for k < n, with x on the reference interval.
pub fn cheb_basis(n: usize, x: f64, t: &mut [f64], dt: &mut [f64]) {
    if n == 0 {
        return;
    }
    t[0] = 1.0;
    dt[0] = 0.0;
    if n == 1 {
        return;
    }
    t[1] = x;
    dt[1] = 1.0;
    for k in 2..n {
        t[k] = 2.0 * x * t[k - 1] - t[k - 2];
        dt[k] = 2.0 * t[k - 1] + 2.0 * x * dt[k - 1] - dt[k - 2];
    }
}

/// Like [`cheb_basis`], adding T_k''(x).
pub fn cheb_basis2(n: usize, x: f64, t: &mut [f64], dt: &mut [f64], ddt: &mut [f64]) {
    cheb_basis(n, x, t, dt);
    for (k, v) in ddt.iter_mut().enumerate().take(n) {
        if k < 2 {
            *v = 0.0;
        }
    }
    for k in 2..n {
        ddt[k] = 4.0 * dt[k - 1] + 2.0 * x * ddt[k - 1] - ddt[k - 2];
    }
}

/// Maps `v` in `[lo, hi]` to `[-1, 1]`; a degenerate interval maps to 0.
pub fn to_reference(v: f64, lo: f64, hi: f64) -> f64 {
    if hi == lo {
        0.0
    } else {
        (2.0 * v - lo - hi) / (hi - lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolant_reproduces_smooth_function() {
        let n = 20;
        let xs = cheb_nodes(n, 0.0, 2.0);
        let vals: Vec<f64> = xs.iter().map(|&x| (x * 1.3).exp()).collect();
        let c = cheb_coefficients(&vals);
        let mut t = vec![0.0; n];
        let mut dt = vec![0.0; n];
        for &x in &[0.0, 0.37, 1.5, 2.0] {
            cheb_basis(n, to_reference(x, 0.0, 2.0), &mut t, &mut dt);
            let v: f64 = c.iter().zip(&t).map(|(a, b)| a * b).sum();
            let d: f64 = c.iter().zip(&dt).map(|(a, b)| a * b).sum::<f64>() * 2.0 / 2.0;
            assert!((v - (1.3 * x).exp()).abs() < 1e-13);
            assert!((d - 1.3 * (1.3 * x).exp()).abs() < 1e-11);
        }
    }

    #[test]
    fn single_node_is_constant() {
        assert_eq!(cheb_nodes(1, 0.2, 0.2), vec![0.2]);
        assert_eq!(cheb_coefficients(&[3.0]), vec![3.0]);
    }

    #[test]
    fn second_derivative_of_basis() {
        let n = 9;
        let (mut t, mut dt, mut ddt) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let x = 0.3;
        cheb_basis2(n, x, &mut t, &mut dt, &mut ddt);
        for k in 0..n {
            let th = x.acos();
            let kk = k as f64;
            // Chebyshev ODE: (1−x²)T'' − xT' + k²T = 0
            let ode = (1.0 - x * x) * ddt[k] - x * dt[k] + kk * kk * t[k];
            assert!(ode.abs() < 1e-11, "k={k} {ode}");
            assert!((t[k] - (kk * th).cos()).abs() < 1e-13);
        }
    }
}
