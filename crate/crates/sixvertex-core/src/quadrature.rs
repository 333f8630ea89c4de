//! Gauss–Legendre quadrature and Legendre-node interpolation.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "need at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`, with barycentric interpolation support.
#[derive(Debug, Clone)]
pub struct LegendreRule {
    pub a: f64,
    pub b: f64,
    /// Reference nodes on `[-1, 1]`.
    pub reference: Vec<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    bary: Vec<f64>,
}

impl LegendreRule {
    pub fn new(n: usize, a: f64, b: f64) -> Self {
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = x.iter().map(|&z| mid + half * z).collect();
        let weights = w.iter().map(|&v| half * v).collect();
        let bary = x
            .iter()
            .zip(&w)
            .enumerate()
            .map(|(i, (&z, &v))| {
                let s = ((1.0 - z * z) * v).sqrt();
                if i % 2 == 0 { s } else { -s }
            })
            .collect();
        Self { a, b, reference: x, nodes, weights, bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Barycentric interpolation weights at `t`: `f(t) ≈ Σ_j c_j f_j`.
    pub fn interpolation_row(&self, t: f64) -> Vec<f64> {
        let n = self.len();
        let mut row = vec![0.0; n];
        for (j, &tj) in self.nodes.iter().enumerate() {
            if t == tj {
                row[j] = 1.0;
                return row;
            }
        }
        let mut total = 0.0;
        for j in 0..n {
            let c = self.bary[j] / (t - self.nodes[j]);
            row[j] = c;
            total += c;
        }
        for c in &mut row {
            *c /= total;
        }
        row
    }

    /// Spectral differentiation matrix on the nodes, row-major `n × n`.
    pub fn differentiation_matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = self.bary[j] / self.bary[i] / (self.nodes[i] - self.nodes[j]);
                    d[i * n + j] = v;
                    diag -= v;
                }
            }
            d[i * n + i] = diag;
        }
        d
    }
}
