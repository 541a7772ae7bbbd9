// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! Gauss-Legendre rules and Chebyshev panel interpolation.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the three-term Legendre recurrence.
    fn compute(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared rule with `n` nodes; computed once per `n`.
    pub fn get(n: usize) -> &'static GaussLegendre {
        static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("quadrature cache poisoned");
        map.entry(n)
            .or_insert_with(|| Box::leak(Box::new(GaussLegendre::compute(n))))
    }

    /// Integral of `g` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * g(mid + half * x);
        }
        acc * half
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Polynomial interpolant of a function on `[a, b]` through Chebyshev points,
/// with an exact running integral.
#[derive(Debug, Clone)]
pub struct ChebyshevPanel {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl ChebyshevPanel {
    /// Chebyshev points of the first kind mapped onto `[a, b]`.
    pub fn points(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| {
                let x = (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos();
                0.5 * (a + b) + 0.5 * (b - a) * x
            })
            .collect()
    }

    /// Interpolates samples taken at [`ChebyshevPanel::points`].
    pub fn fit(a: f64, b: f64, samples: &[f64]) -> Self {
        let n = samples.len();
        let nf = n as f64;
        let coeffs = (0..n)
            .map(|k| {
                let s: f64 = samples
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / nf).cos())
                    .sum();
                let c = 2.0 * s / nf;
                if k == 0 {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect();
        ChebyshevPanel { a, b, coeffs }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = (2.0 * t - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs[0]
    }

    /// Integral of the interpolant from `a` to `t`.
    pub fn integral_to(&self, t: f64) -> f64 {
        let x = ((2.0 * t - self.a - self.b) / (self.b - self.a)).clamp(-1.0, 1.0);
        // int_{-1}^{x} T_k, using T_k = cos(k acos x)
        let th = x.acos();
        let mut acc = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            let kf = k as f64;
            let prim = |th: f64| -> f64 {
                match k {
                    0 => -th.cos() * 0.0 + (th.cos()),
                    1 => 0.5 * th.cos() * th.cos(),
                    _ => {
                        0.5 * (((kf + 1.0) * th).cos() / (kf + 1.0) - ((kf - 1.0) * th).cos() / (kf - 1.0))
                    }
                }
            };
            acc += c * (prim(th) - prim(std::f64::consts::PI));
        }
        acc * 0.5 * (self.b - self.a)
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 24, 64] {
            let gl = GaussLegendre::get(n);
            let wsum: f64 = gl.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-14, "n={n}");
            let deg = 2 * n - 1;
            let got = gl.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert!((got - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn legendre_rule_on_smooth_function() {
        let got = GaussLegendre::get(24).integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((got - 2.0).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_panel_interpolates_and_integrates() {
        let (a, b) = (0.5, 2.0);
        let pts = ChebyshevPanel::points(a, b, 20);
        let samples: Vec<f64> = pts.iter().map(|t| (-t).exp()).collect();
        let p = ChebyshevPanel::fit(a, b, &samples);
        for &t in &[0.5, 0.77, 1.3, 2.0] {
            assert!((p.eval(t) - (-t).exp()).abs() < 1e-14);
            let exact = (-a).exp() - (-t).exp();
            assert!((p.integral_to(t) - exact).abs() < 1e-14, "t={t}");
        }
    }
}
