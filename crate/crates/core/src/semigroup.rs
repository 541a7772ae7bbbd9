// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! Heat kernels `p_t(0, d) = (1/pi) int_0^pi exp(-t psi(theta)) cos(d theta) dtheta`
//! for the classical symbol `psi = 4 sin^2(theta/2)` and the fractional symbol
//! `psi = (4 sin^2(theta/2))^s`, and the semigroup they generate.
//!
//! Two independent engines are provided for the fractional kernel:
//! - composite Gauss-Legendre on panels graded geometrically towards
//!   `theta = 0`, where `psi ~ theta^(2s)` has a cusp;
//! - the exact expansion `p_t(0,d) = sum_k (-t)^k/k! c_{sk}(d)` where `c_a(d)` are
//!   the Fourier coefficients of `psi^(k)`, used while `t 4^s` is moderate.

use std::f64::consts::PI;

use crate::error::{check_order, Error, Result};
use crate::lattice::{LatticeFunction, Window};
use crate::quadrature::GaussLegendre;
use crate::special::{symbol_power_amplitude, symbol_power_coefficient, symbol_power_coefficients, symbol_power_tail};

/// Largest `t 4^s` for which rows come from the series.
pub const SERIES_LIMIT: f64 = 4.0;

/// Nodes with `t psi > CUTOFF` contribute below `e^-46` and are skipped.
const CUTOFF: f64 = 46.0;

const PANEL_NODES: usize = 24;
const GRADED_PANELS: i32 = 52;
const RESYNC: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// `-Delta`.
    Classical,
    /// `(-Delta)^s`.
    Fractional(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Auto,
    Quadrature,
    Series,
}

#[derive(Debug, Clone)]
pub struct SemigroupEvaluator {
    generator: Generator,
}

/// Quadrature nodes on `[0, pi]` sorted by angle, weights including `1/pi`.
#[derive(Debug, Clone)]
struct SpectralRule {
    theta: Vec<f64>,
    weight: Vec<f64>,
    psi: Vec<f64>,
}

impl SpectralRule {
    fn build(generator: Generator, dmax: usize) -> Self {
        let gl = GaussLegendre::get(PANEL_NODES);
        let mut edges = vec![0.0];
        for j in (0..GRADED_PANELS).rev() {
            edges.push(PI * 2f64.powi(-j));
        }
        let mut theta = Vec::new();
        let mut weight = Vec::new();
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            // about four wavelengths of cos(dmax theta) per panel
            let sub = ((b - a) * dmax as f64 / (8.0 * PI)).ceil().max(1.0) as usize;
            let h = (b - a) / sub as f64;
            for k in 0..sub {
                let lo = a + k as f64 * h;
                for (x, w) in gl.mapped(lo, lo + h) {
                    theta.push(x);
                    weight.push(w / PI);
                }
            }
        }
        let psi = theta.iter().map(|&th| symbol_of(generator, th)).collect();
        SpectralRule { theta, weight, psi }
    }

    /// `sum_i w_i exp(-t psi_i) cos(d theta_i)` for `d = 0..=dmax`.
    fn row(&self, t: f64, dmax: usize) -> Vec<f64> {
        self.rows(t, dmax, false).0
    }

    /// The heat kernel row and, if requested, the row of `sum_i w_i psi_i
    /// exp(-t psi_i) cos(d theta_i)`, i.e. the generator applied to it.
    fn rows(&self, t: f64, dmax: usize, generator: bool) -> (Vec<f64>, Vec<f64>) {
        let n = self.psi.partition_point(|&p| t * p <= CUTOFF);
        let th = &self.theta[..n];
        let g: Vec<f64> = self.weight[..n]
            .iter()
            .zip(&self.psi[..n])
            .map(|(w, p)| w * (-t * p).exp())
            .collect();
        let gl: Vec<f64> = if generator {
            g.iter().zip(&self.psi[..n]).map(|(a, p)| a * p).collect()
        } else {
            Vec::new()
        };
        let step_c: Vec<f64> = th.iter().map(|x| x.cos()).collect();
        let step_s: Vec<f64> = th.iter().map(|x| x.sin()).collect();
        let mut c = vec![1.0; n];
        let mut s = vec![0.0; n];
        let mut out = Vec::with_capacity(dmax + 1);
        let mut out_l = Vec::with_capacity(if generator { dmax + 1 } else { 0 });
        for d in 0..=dmax {
            if d > 0 && d % RESYNC == 0 {
                for i in 0..n {
                    let (si, ci) = (d as f64 * th[i]).sin_cos();
                    c[i] = ci;
                    s[i] = si;
                }
            }
            out.push(dot(&g, &c));
            if generator {
                out_l.push(dot(&gl, &c));
            }
            for i in 0..n {
                let cn = c[i] * step_c[i] - s[i] * step_s[i];
                let sn = s[i] * step_c[i] + c[i] * step_s[i];
                c[i] = cn;
                s[i] = sn;
            }
        }
        (out, out_l)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for l in 0..4 {
            let i = 4 * k + l;
            acc[l] += a[i] * b[i];
        }
    }
    for i in 4 * chunks..a.len() {
        acc[0] += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

fn symbol_of(generator: Generator, theta: f64) -> f64 {
    let base = 4.0 * (0.5 * theta).sin().powi(2);
    match generator {
        Generator::Classical => base,
        Generator::Fractional(s) => base.powf(s),
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::param("t", format!("time must be finite and nonnegative, got {t}")))
    }
}

fn check_positive_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::param("t", format!("time must be positive, got {t}")))
    }
}

/// Number of expansion terms so that `(t 4^s)^k / k!` drops below `1e-18`.
fn series_terms(x: f64) -> usize {
    let mut term = 1.0;
    let mut k = 0usize;
    loop {
        k += 1;
        term *= x / k as f64;
        if k as f64 > x && term < 1e-18 {
            return k;
        }
    }
}

impl SemigroupEvaluator {
    pub fn fractional(s: f64) -> Result<Self> {
        check_order(s)?;
        Ok(SemigroupEvaluator {
            generator: Generator::Fractional(s),
        })
    }

    pub fn classical() -> Self {
        SemigroupEvaluator {
            generator: Generator::Classical,
        }
    }

    pub fn generator(&self) -> Generator {
        self.generator
    }

    pub fn symbol(&self, theta: f64) -> f64 {
        symbol_of(self.generator, theta)
    }

    /// Largest value of the symbol, attained at `theta = pi`.
    pub fn symbol_max(&self) -> f64 {
        self.symbol(PI)
    }

    fn series_applicable(&self, t: f64) -> bool {
        matches!(self.generator, Generator::Fractional(_)) && t * self.symbol_max() <= SERIES_LIMIT
    }

    /// `p_t(0, d)` for `d = 0..=dmax`.
    pub fn row(&self, t: f64, dmax: usize) -> Result<Vec<f64>> {
        self.row_with(t, dmax, Method::Auto)
    }

    pub fn row_with(&self, t: f64, dmax: usize, method: Method) -> Result<Vec<f64>> {
        check_time(t)?;
        if t == 0.0 {
            let mut r = vec![0.0; dmax + 1];
            r[0] = 1.0;
            return Ok(r);
        }
        let use_series = match method {
            Method::Auto => self.series_applicable(t),
            Method::Series => {
                if !matches!(self.generator, Generator::Fractional(_)) {
                    return Err(Error::param("method", "the series applies to fractional orders only"));
                }
                true
            }
            Method::Quadrature => false,
        };
        if use_series {
            Ok(self.row_series(t, dmax))
        } else {
            Ok(SpectralRule::build(self.generator, dmax).row(t, dmax))
        }
    }

    fn row_series(&self, t: f64, dmax: usize) -> Vec<f64> {
        self.rows_series(t, dmax, false).0
    }

    /// Series rows of `p_t` and of `L p_t = -d/dt p_t`, the latter from
    /// `sum_k (-t)^(k-1)/(k-1)! c_{sk}(d)`.
    fn rows_series(&self, t: f64, dmax: usize, generator: bool) -> (Vec<f64>, Vec<f64>) {
        let Generator::Fractional(s) = self.generator else {
            unreachable!("series requested for the classical generator")
        };
        let terms = series_terms(t * self.symbol_max()) + usize::from(generator);
        let mut out = vec![0.0; dmax + 1];
        out[0] = 1.0;
        let mut out_l = if generator { vec![0.0; dmax + 1] } else { Vec::new() };
        let mut coef = 1.0;
        let mut coef_l = 1.0;
        for k in 1..=terms {
            if k > 1 {
                coef_l *= -t / (k - 1) as f64;
            }
            coef *= -t / k as f64;
            let c = symbol_power_coefficients(s * k as f64, dmax);
            for (o, v) in out.iter_mut().zip(&c) {
                *o += coef * v;
            }
            if generator {
                for (o, v) in out_l.iter_mut().zip(&c) {
                    *o += coef_l * v;
                }
            }
        }
        (out, out_l)
    }

    /// `p_t(0, d)` and `(L p_t)(0, d)` for `d = 0..=dmax`.
    pub fn rows_with_generator(&self, t: f64, dmax: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        check_positive_time(t)?;
        if self.series_applicable(t) {
            Ok(self.rows_series(t, dmax, true))
        } else {
            Ok(SpectralRule::build(self.generator, dmax).rows(t, dmax, true))
        }
    }

    /// `p_t(0, d)`.
    pub fn kernel(&self, t: f64, d: i64) -> Result<f64> {
        check_time(t)?;
        let d = d.unsigned_abs();
        if t == 0.0 {
            return Ok(if d == 0 { 1.0 } else { 0.0 });
        }
        if self.series_applicable(t) {
            let Generator::Fractional(s) = self.generator else { unreachable!() };
            let terms = series_terms(t * self.symbol_max());
            let mut acc = if d == 0 { 1.0 } else { 0.0 };
            let mut coef = 1.0;
            for k in 1..=terms {
                coef *= -t / k as f64;
                acc += coef * symbol_power_coefficient(s * k as f64, d);
            }
            return Ok(acc);
        }
        if let Some(v) = self.kernel_far(t, d) {
            return Ok(v);
        }
        let row = SpectralRule::build(self.generator, d as usize).row(t, d as usize);
        Ok(row[d as usize])
    }

    /// The expansion in powers of `t` far from the origin, where
    /// `t d^(-2s)` is small and the terms decrease without cancellation.
    /// Truncated at its smallest term.
    fn kernel_far(&self, t: f64, d: u64) -> Option<f64> {
        let Generator::Fractional(s) = self.generator else {
            return None;
        };
        if d < 4096 || t * (d as f64).powf(-2.0 * s) > 1e-3 {
            return None;
        }
        let mut acc = 0.0;
        let mut coef = 1.0;
        let mut last = f64::INFINITY;
        for k in 1..200 {
            coef *= -t / k as f64;
            let a = s * k as f64;
            if symbol_power_amplitude(a) == 0.0 {
                continue;
            }
            let term = coef * symbol_power_coefficient(a, d);
            if term.abs() > last {
                break;
            }
            acc += term;
            last = term.abs();
            if last <= 1e-17 * acc.abs() {
                break;
            }
        }
        Some(acc)
    }

    /// `sum_{d > big_d} p_t(0, d)` from the termwise tails of the expansion.
    /// Each term is exact; the sum is truncated at its smallest term, whose
    /// size is returned as the second component. Requires `big_d` well
    /// beyond the spread `t^(1/(2s))`.
    pub fn one_sided_tail(&self, t: f64, big_d: u64) -> (f64, f64) {
        let Generator::Fractional(s) = self.generator else {
            // classical kernel tails are super-exponentially small
            return (0.0, 0.0);
        };
        let mut acc = 0.0;
        let mut coef = 1.0;
        let mut last = f64::INFINITY;
        for k in 1..200 {
            coef *= -t / k as f64;
            let a = s * k as f64;
            if (big_d as f64) < a {
                break;
            }
            let term = coef * symbol_power_tail(a, big_d);
            if symbol_power_amplitude(a) == 0.0 {
                continue;
            }
            if term.abs() > last {
                break;
            }
            acc += term;
            last = term.abs();
            if last < 1e-18 {
                break;
            }
        }
        (acc, last)
    }

    /// `P_t f` on `out`.
    pub fn apply(&self, t: f64, f: &LatticeFunction, out: Window) -> Result<LatticeFunction> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(f.restrict(out));
        }
        let fw = f.window();
        let reach = (out.hi() - fw.lo()).abs().max((fw.hi() - out.lo()).abs()) as usize;
        let row = self.row(t, reach)?;
        let vals: Vec<f64> = out
            .iter()
            .map(|x| {
                f.iter()
                    .map(|(y, v)| if v == 0.0 { 0.0 } else { v * row[(x - y).unsigned_abs() as usize] })
                    .sum()
            })
            .collect();
        LatticeFunction::from_values(out.lo(), vals)
    }

    /// Grid maximum of `|P_t f(x)|` followed by a golden-section refinement
    /// in `ln t` around the best grid point. A lower bound for `sup_t`.
    pub fn maximal_function(&self, f: &LatticeFunction, t_grid: &[f64], x: i64) -> Result<MaximalValue> {
        if t_grid.is_empty() {
            return Err(Error::param("t_grid", "must not be empty"));
        }
        for &t in t_grid {
            check_positive_time(t)?;
        }
        let mut grid: Vec<f64> = t_grid.to_vec();
        grid.sort_by(f64::total_cmp);
        let at = |t: f64| -> Result<f64> {
            let w = Window::new(x, x)?;
            Ok(self.apply(t, f, w)?.get(x).abs())
        };
        let mut best = (0.0, grid[0]);
        let mut best_i = 0;
        for (i, &t) in grid.iter().enumerate() {
            let v = at(t)?;
            if v > best.0 {
                best = (v, t);
                best_i = i;
            }
        }
        let (mut a, mut b) = (
            grid[best_i.saturating_sub(1)].ln(),
            grid[(best_i + 1).min(grid.len() - 1)].ln(),
        );
        if b > a {
            let r = 0.5 * (5f64.sqrt() - 1.0);
            let mut c = b - r * (b - a);
            let mut d = a + r * (b - a);
            let mut fc = at(c.exp())?;
            let mut fd = at(d.exp())?;
            for _ in 0..40 {
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - r * (b - a);
                    fc = at(c.exp())?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + r * (b - a);
                    fd = at(d.exp())?;
                }
            }
            for (v, lt) in [(fc, c), (fd, d)] {
                if v > best.0 {
                    best = (v, lt.exp());
                }
            }
        }
        Ok(MaximalValue {
            value: best.0,
            argmax_t: best.1,
        })
    }
}

/// Result of [`SemigroupEvaluator::maximal_function`]; `value` never
/// exceeds the true supremum over `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximalValue {
    pub value: f64,
    pub argmax_t: f64,
}

/// `h_t(0, d)` for the classical Laplacian.
pub fn heat_kernel_classical(t: f64, d: i64) -> Result<f64> {
    check_positive_time(t)?;
    SemigroupEvaluator::classical().kernel(t, d)
}

/// `p_t(0, d)` for `(-Delta)^s`.
pub fn heat_kernel_fractional(s: f64, t: f64, d: i64) -> Result<f64> {
    check_positive_time(t)?;
    SemigroupEvaluator::fractional(s)?.kernel(t, d)
}

/// `P_t f` on `out_window`.
pub fn apply_semigroup(
    evaluator: &SemigroupEvaluator,
    t: f64,
    f: &LatticeFunction,
    out_window: Window,
) -> Result<LatticeFunction> {
    evaluator.apply(t, f, out_window)
}
