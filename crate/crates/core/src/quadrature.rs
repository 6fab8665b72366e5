//! Gauss–Hermite and Gauss–Legendre rules.
//!
//! Nodes are found by Newton iteration on the three-term recurrences. Hermite
//! starting points come from bisection on the Jacobi matrix, which keeps high
//! orders from converging onto a neighbouring root.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Gauss–Hermite rule for expectations under the standard normal law.
///
/// `Σ w_i f(z_i) ≈ E[f(Z)]`, `Z ~ N(0, 1)`; the weights sum to one.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > 512 {
            return Err(invalid(format!("Gauss-Hermite order must be in 1..=512, got {order}")));
        }
        let n = order;
        let nf = n as f64;
        let pim4 = PI.powf(-0.25);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            // i-th largest root of H_n, bracketed on the Jacobi matrix then polished
            let mut z = hermite_eigenvalue(n, n - 1 - i) / std::f64::consts::SQRT_2;
            let mut pp = 0.0;
            for _ in 0..200 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        // physicists' rule (weight e^{-x^2}) -> standard normal expectation
        let scale = 1.0 / PI.sqrt();
        let mut nodes: Vec<f64> = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
        let mut weights: Vec<f64> = w.iter().map(|v| v * scale).collect();
        nodes.reverse();
        weights.reverse();
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `E[f(Z)]` for a standard normal `Z`.
    pub fn expect(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.iter().map(|(z, w)| w * f(z)).sum()
    }
}

/// `k`-th smallest eigenvalue of the probabilists' Hermite Jacobi matrix
/// (zero diagonal, off-diagonal `√j`), by Sturm-sequence bisection.
fn hermite_eigenvalue(n: usize, k: usize) -> f64 {
    let below = |x: f64| {
        let mut count = 0;
        let mut q = -x;
        for j in 1..=n {
            if j > 1 {
                q = -x - (j - 1) as f64 / q;
            }
            if q == 0.0 {
                q = -1e-300;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let bound = 2.0 * (n as f64).sqrt() + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    while hi - lo > 1e-13 * hi.abs().max(lo.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if below(mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > 1024 {
            return Err(invalid(format!("Gauss-Legendre order must be in 1..=1024, got {order}")));
        }
        let n = order;
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `∫_a^b f(t) dt`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum();
        sum * half
    }
}
