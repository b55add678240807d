//! Tensor-product Gauss-Legendre rules on the centered reference cell.

use crate::error::{invalid, Result};
use crate::mesh::DIM;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[q - 1 - i] = x;
        weights[q - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial of degree `n` and its derivative at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tensor Gauss rule with `q` points per axis on
/// `[-dt/2, dt/2] x [-dx/2, dx/2] x [-dy/2, dy/2] x [-dz/2, dz/2]`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    q: usize,
    points: Vec<[f64; DIM]>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(q: usize, spacings: [f64; DIM]) -> Result<Self> {
        if q < 1 {
            return Err(invalid("quadrature needs at least one point per axis"));
        }
        let (x, w) = gauss_legendre(q);
        let n = q.pow(DIM as u32);
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i0 in 0..q {
            for i1 in 0..q {
                for i2 in 0..q {
                    for i3 in 0..q {
                        let idx = [i0, i1, i2, i3];
                        let mut p = [0.0; DIM];
                        let mut wt = 1.0;
                        for a in 0..DIM {
                            let half = 0.5 * spacings[a];
                            p[a] = x[idx[a]] * half;
                            wt *= w[idx[a]] * half;
                        }
                        points.push(p);
                        weights.push(wt);
                    }
                }
            }
        }
        Ok(Self { q, points, weights })
    }

    pub fn points_per_axis(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; DIM]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; DIM], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }
}
