// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! Vertical square functions `(int_0^inf |grad-type P_t f|^2(x) dt)^(1/2)`.
//!
//! Time integrals use Gauss-Legendre on log-spaced panels. Beyond `t_max`
//! the integrand is bounded by a closed-form envelope built from
//! `||P_t f||_inf` and the Lipschitz constant of `P_t f`, both estimated with
//! `sin(theta/2) >= theta/pi` in the spectral integral.
//!
//! At each time node `P_t f` is computed on a finite window `W`. The sum
//! over sites outside `W` is split as
//! `sum K(y-x) (u_x - u_y)^2 = u_x^2 T(x) - 2 u_x sum K u_y + sum K u_y^2`,
//! where the middle term comes exactly from `L P_t f` and only the last,
//! quadratically small term is estimated.

use std::borrow::Cow;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_q_low, Error, Result};
use crate::gradients::outside_mass;
use crate::kernel::FractionalKernel;
use crate::lattice::{lq_norm, LatticeFunction, Window};
use crate::quadrature::GaussLegendre;
use crate::report::{ErrorTable, PointError, VerificationReport};
use crate::semigroup::{Generator, SemigroupEvaluator};
use crate::special::gamma_fn;

pub const T_MIN: f64 = 1e-6;
pub const PANELS_PER_DECADE: usize = 2;
pub const NODES_PER_PANEL: usize = 16;
/// Default distance between the evaluation points and the window edge.
pub const DEFAULT_MARGIN: i64 = 1024;
/// Default tolerance for the discarded part `int_{t_max}^inf`.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-9;
const T_MAX_LIMIT: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SquareKind {
    /// `G`, full gradient.
    G,
    /// `G~`, modified gradient.
    Gtilde,
    /// `H`, forward difference.
    H,
    /// `H_q`, pseudo-gradient.
    Hq { q: f64 },
    /// `G_{*,T}`, or `G_*` without a horizon.
    Gstar { horizon: Option<f64> },
}

impl SquareKind {
    pub fn label(&self) -> String {
        match self {
            SquareKind::G => "G".into(),
            SquareKind::Gtilde => "Gtilde".into(),
            SquareKind::H => "H".into(),
            SquareKind::Hq { q } => format!("Hq(q={q})"),
            SquareKind::Gstar { horizon: None } => "Gstar".into(),
            SquareKind::Gstar { horizon: Some(t) } => format!("Gstar(T={t})"),
        }
    }
}

/// Pointwise integrand at one time node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Integrand {
    Full,
    Modified,
    Difference,
    Gamma(f64),
    /// `|grad~ u|^2 + U u^2`.
    ModifiedWithPotential,
    /// `Gamma_q(u) + (q-1) U u^2`.
    GammaWithPotential(f64),
}

/// Bounds on the integrand for large `t`, used to certify the discarded
/// time tail.
#[derive(Debug, Clone)]
pub struct TailEnvelope {
    kernel: Arc<FractionalKernel>,
    l1: f64,
    sup: f64,
    scale: f64,
    difference: bool,
    /// `sum_{y=1}^{n} K(y) y^2` for `n` up to the kernel table size.
    moment: Vec<f64>,
}

impl TailEnvelope {
    pub fn new(kernel: Arc<FractionalKernel>, f: &LatticeFunction, kind: SquareKind) -> Self {
        let table = kernel.table();
        let mut moment = Vec::with_capacity(table.len());
        let mut acc = 0.0;
        moment.push(0.0);
        for (y, k) in table.iter().enumerate().skip(1) {
            let yf = y as f64;
            acc += k * yf * yf;
            moment.push(acc);
        }
        let scale = match kind {
            SquareKind::Hq { q } => q - 1.0,
            _ => 1.0,
        };
        TailEnvelope {
            kernel,
            l1: f.l1_norm(),
            sup: f.sup_norm(),
            scale,
            difference: matches!(kind, SquareKind::H),
            moment,
        }
    }

    fn s(&self) -> f64 {
        self.kernel.order()
    }

    /// `||f||_1 (1/2) Gamma(1 + 1/(2s)) t^(-1/(2s))`, a bound for `||P_t f||_inf`.
    fn sup_decay(&self, t: f64) -> f64 {
        let s = self.s();
        self.l1 * 0.5 * gamma_fn(1.0 + 0.5 / s) * t.powf(-0.5 / s)
    }

    pub fn sup_bound(&self, t: f64) -> f64 {
        self.sup.min(self.sup_decay(t))
    }

    /// Bound for `|P_t f(x+1) - P_t f(x)|`: `||f||_1 (pi/(8s)) Gamma(1/s) t^(-1/s)`.
    pub fn lipschitz_bound(&self, t: f64) -> f64 {
        let s = self.s();
        self.l1 * std::f64::consts::PI / (8.0 * s) * gamma_fn(1.0 / s) * t.powf(-1.0 / s)
    }

    /// Upper bound for `sum_{y=1}^{big_y} K(y) y^2`.
    fn moment_bound(&self, big_y: f64) -> f64 {
        let n = self.moment.len() - 1;
        if big_y <= n as f64 {
            return self.moment[big_y as usize];
        }
        // K(y) <= pref (1 + 1e-9) y^(-1-2s) beyond the table
        let p = 2.0 - 2.0 * self.s();
        self.moment[n] + self.kernel.prefactor() * (1.0 + 1e-9) * ((big_y + 1.0).powf(p) - (n as f64).powf(p)) / p
    }

    fn tail_bound_at(&self, big_y: f64) -> f64 {
        if big_y < 1e15 {
            self.kernel.tail(big_y as u64)
        } else {
            let s = self.s();
            self.kernel.prefactor() * (1.0 + 1e-9) * big_y.powf(-2.0 * s) / (2.0 * s)
        }
    }

    fn gradient_with(&self, a: f64, d: f64) -> f64 {
        if a == 0.0 {
            return 0.0;
        }
        // |u(x) - u(y)| <= min(|x-y| d, 2a)
        let big_y = (2.0 * a / d).floor();
        if big_y < 1.0 {
            return 4.0 * a * a * self.kernel.l1_norm();
        }
        2.0 * (d * d * self.moment_bound(big_y) + 4.0 * a * a * self.tail_bound_at(big_y))
    }

    /// Bound for `|grad P_t f|^2(x)`, uniform in `x`.
    pub fn gradient_bound(&self, t: f64) -> f64 {
        self.gradient_with(self.sup_bound(t), self.lipschitz_bound(t))
    }

    /// Bound for the integrand of the square function this envelope was
    /// built for.
    pub fn integrand_bound(&self, t: f64) -> f64 {
        if self.difference {
            self.lipschitz_bound(t).powi(2)
        } else {
            self.scale * self.gradient_bound(t)
        }
    }

    /// Upper bound for `int_{t0}^inf` of the integrand.
    pub fn integral_beyond(&self, t0: f64) -> f64 {
        let s = self.s();
        if self.l1 == 0.0 {
            return 0.0;
        }
        if self.difference {
            let c = self.lipschitz_bound(1.0);
            return c * c * t0.powf(1.0 - 2.0 / s) / (2.0 / s - 1.0);
        }
        // b decreases in t: upper Riemann sums, then a power-law piece on
        // the bound that uses only the decaying branch of the sup bound,
        // which falls at least like t^(-1/s)
        let mut acc = 0.0;
        let mut t = t0;
        let mut last = f64::INFINITY;
        for _ in 0..600 {
            let next = 1.1 * t;
            acc += self.scale * self.gradient_bound(t) * (next - t);
            t = next;
            last = self.scale * self.gradient_with(self.sup_decay(t), self.lipschitz_bound(t)) * t / (1.0 / s - 1.0);
            if last <= 1e-3 * acc {
                break;
            }
        }
        acc + last
    }
}

/// Gauss-Legendre nodes on `[0, T_MIN]` and on log-spaced panels up to
/// `t_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeQuadrature {
    t_max: f64,
    finite_horizon: bool,
    panels_per_decade: usize,
    nodes_per_panel: usize,
    tail_bound: f64,
    #[serde(skip)]
    nodes: Vec<(f64, f64)>,
}

impl TimeQuadrature {
    /// Rule on `(0, t_max]`; `tail_bound` accounts for `(t_max, inf)`.
    pub fn new(t_max: f64, tail_bound: f64) -> Result<Self> {
        Self::build(t_max, tail_bound, false, PANELS_PER_DECADE, NODES_PER_PANEL)
    }

    /// Rule on exactly `[0, horizon]`.
    pub fn finite(horizon: f64) -> Result<Self> {
        Self::build(horizon, 0.0, true, PANELS_PER_DECADE, NODES_PER_PANEL)
    }

    /// Smallest panel edge whose certified tail is below `tolerance`.
    pub fn certified(envelope: &TailEnvelope, tolerance: f64) -> Result<Self> {
        Self::certified_with(|t| envelope.integral_beyond(t), tolerance)
    }

    /// As [`TimeQuadrature::certified`] for any decreasing tail bound
    /// `tail(t) >= int_t^inf` of the integrand.
    pub fn certified_with(tail: impl Fn(f64) -> f64, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::param("tolerance", "must be positive"));
        }
        let mut k = 1;
        loop {
            let t = T_MIN * 10f64.powf(k as f64 / PANELS_PER_DECADE as f64);
            if t > T_MAX_LIMIT {
                return Err(Error::Quadrature(format!(
                    "tail bound stays above {tolerance:e} up to t = {T_MAX_LIMIT:e}"
                )));
            }
            let bound = tail(t);
            if bound <= tolerance {
                return Self::new(t, bound);
            }
            k += 1;
        }
    }

    /// Same interval and tail with a different panel resolution.
    pub fn with_resolution(&self, panels_per_decade: usize, nodes_per_panel: usize) -> Result<Self> {
        Self::build(self.t_max, self.tail_bound, self.finite_horizon, panels_per_decade, nodes_per_panel)
    }

    fn build(t_max: f64, tail_bound: f64, finite_horizon: bool, ppd: usize, npp: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::param("t_max", format!("must be positive and finite, got {t_max}")));
        }
        if ppd == 0 || npp == 0 {
            return Err(Error::param("panels", "panel and node counts must be positive"));
        }
        let gl = GaussLegendre::get(npp);
        let mut nodes = Vec::new();
        let first = T_MIN.min(t_max);
        nodes.extend(gl.mapped(0.0, first));
        let mut a = first;
        let mut k = 1;
        while a < t_max {
            let b = (T_MIN * 10f64.powf(k as f64 / ppd as f64)).min(t_max);
            if b > a {
                nodes.extend(gl.mapped(a, b));
                a = b;
            }
            k += 1;
        }
        Ok(TimeQuadrature {
            t_max,
            finite_horizon,
            panels_per_decade: ppd,
            nodes_per_panel: npp,
            tail_bound,
            nodes,
        })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn is_finite_horizon(&self) -> bool {
        self.finite_horizon
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }
}

/// `P_t f` on a window together with what is known about it off the window.
pub(crate) struct Snapshot {
    pub u: Vec<f64>,
    /// `L P_t f` on the window; `None` when `P_t f` vanishes off the window.
    pub lu: Option<Vec<f64>>,
    /// Bound for `sup |P_t f|` off the window.
    pub eps: f64,
    /// Bound for `sum (P_t f)^2` off the window.
    pub m2_out: f64,
    /// Potential on the window, for Schrodinger integrands.
    pub potential: Option<Vec<f64>>,
    /// `p_t(0, d)` for `d` up to the window width, if available.
    pub row: Vec<f64>,
}

/// Source of snapshots of a semigroup orbit.
pub(crate) trait Orbit {
    fn window(&self) -> Window;
    fn kernel(&self) -> &FractionalKernel;
    fn snapshot(&self, t: f64) -> Result<Snapshot>;
}

/// Free-space orbit `P_t f` restricted to a window containing `f`.
pub(crate) struct FreeOrbit<'a> {
    kernel: &'a FractionalKernel,
    evaluator: &'a SemigroupEvaluator,
    f: &'a LatticeFunction,
    window: Window,
    generator: bool,
}

impl<'a> FreeOrbit<'a> {
    pub fn new(
        kernel: &'a FractionalKernel,
        evaluator: &'a SemigroupEvaluator,
        f: &'a LatticeFunction,
        window: Window,
    ) -> Result<Self> {
        let fw = f.window();
        if fw.lo() < window.lo() || fw.hi() > window.hi() {
            return Err(Error::param("window", "must contain the window of f"));
        }
        Ok(FreeOrbit {
            kernel,
            evaluator,
            f,
            window,
            generator: true,
        })
    }
}

impl Orbit for FreeOrbit<'_> {
    fn window(&self) -> Window {
        self.window
    }

    fn kernel(&self) -> &FractionalKernel {
        self.kernel
    }

    fn snapshot(&self, t: f64) -> Result<Snapshot> {
        let w = self.window;
        let fw = self.f.window();
        let reach = (w.hi() - fw.lo()).max(fw.hi() - w.lo()) as usize;
        let dist = (fw.lo() - w.lo() + 1).min(w.hi() - fw.hi() + 1) as usize;
        let dmax = reach.max(dist).max(w.width());
        let (row, lrow) = if self.generator {
            self.evaluator.rows_with_generator(t, dmax)?
        } else {
            (self.evaluator.row(t, dmax)?, Vec::new())
        };
        let n = w.width();
        let mut u = vec![0.0; n];
        let mut lu = vec![0.0; n];
        for (a, fa) in self.f.iter() {
            if fa == 0.0 {
                continue;
            }
            for (i, x) in w.iter().enumerate() {
                let d = (x - a).unsigned_abs() as usize;
                u[i] += fa * row[d];
                if self.generator {
                    lu[i] += fa * lrow[d];
                }
            }
        }
        let l1 = self.f.l1_norm();
        // p_t(0, .) is positive and decreasing in |d|
        let eps = l1 * row[dist].max(0.0);
        let diam = fw.width() - 1;
        let row2 = self.evaluator.row(2.0 * t, diam)?;
        let mut total = 0.0;
        for (a, fa) in self.f.iter() {
            for (b, fb) in self.f.iter() {
                total += fa * fb * row2[(a - b).unsigned_abs() as usize];
            }
        }
        let inside: f64 = u.iter().map(|v| v * v).sum();
        let m2_out = (total - inside).max(0.0) + 1e-13 * total.abs();
        Ok(Snapshot {
            u,
            lu: self.generator.then_some(lu),
            eps,
            m2_out,
            potential: None,
            row,
        })
    }
}

/// Kernel data for one window: symmetric kernel strip, off-window masses,
/// and kernel values at the distance to the complement.
pub(crate) struct WindowGeometry {
    n: usize,
    norm: f64,
    strip: Vec<f64>,
    tout: Vec<f64>,
    kdist: Vec<f64>,
}

impl WindowGeometry {
    pub fn new(kernel: &FractionalKernel, w: Window) -> Self {
        let n = w.width();
        let mut strip = vec![0.0; 2 * n - 1];
        for d in 1..n {
            let k = kernel.value(d as i64);
            strip[n - 1 + d] = k;
            strip[n - 1 - d] = k;
        }
        let tout = w.iter().map(|x| outside_mass(kernel, w, x)).collect();
        let kdist = (0..n).map(|i| kernel.value(((i + 1).min(n - i)) as i64)).collect();
        WindowGeometry {
            n,
            norm: kernel.l1_norm(),
            strip,
            tout,
            kdist,
        }
    }

    /// `K(|j - i|)` for `j` in the window, zero at `j = i`.
    fn row(&self, i: usize) -> &[f64] {
        &self.strip[self.n - 1 - i..2 * self.n - 1 - i]
    }

    pub fn tout(&self, i: usize) -> f64 {
        self.tout[i]
    }
}

fn weighted_sums(k: &[f64], u: &[f64], ui: f64) -> (f64, f64) {
    let mut sq = [0.0f64; 4];
    let mut lin = [0.0f64; 4];
    let chunks = u.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let j = 4 * c + l;
            let d = ui - u[j];
            sq[l] += k[j] * d * d;
            lin[l] += k[j] * u[j];
        }
    }
    for j in 4 * chunks..u.len() {
        let d = ui - u[j];
        sq[0] += k[j] * d * d;
        lin[0] += k[j] * u[j];
    }
    ((sq[0] + sq[1]) + (sq[2] + sq[3]), (lin[0] + lin[1]) + (lin[2] + lin[3]))
}

/// Integrand values with error bounds at window indices `range`.
pub(crate) fn evaluate(
    geo: &WindowGeometry,
    snap: &Snapshot,
    integrand: Integrand,
    range: std::ops::Range<usize>,
) -> Vec<(f64, f64)> {
    let q = match integrand {
        Integrand::Gamma(q) | Integrand::GammaWithPotential(q) => q,
        _ => 2.0,
    };
    let gamma = matches!(integrand, Integrand::Gamma(_) | Integrand::GammaWithPotential(_));
    let u: Cow<[f64]> = if gamma {
        Cow::Owned(snap.u.iter().map(|v| v.max(0.0)).collect())
    } else {
        Cow::Borrowed(&snap.u)
    };
    let uq: Vec<f64> = if gamma { u.iter().map(|v| v.powf(q)).collect() } else { Vec::new() };
    let mut out = Vec::with_capacity(range.len());
    for i in range {
        let ui = u[i];
        let k = geo.row(i);
        let tout = geo.tout[i];
        let eps = snap.eps;
        // sum over y off the window of K(y-x) u_y, and the rounding in it
        let far = |lin: f64| -> (f64, f64) {
            match &snap.lu {
                Some(lu) => {
                    let raw = geo.norm * ui - lu[i] - lin;
                    let cap = tout * eps;
                    let slack = 2e-15 * (geo.norm * ui.abs() + lu[i].abs() + lin.abs());
                    (raw.clamp(-cap, cap), slack)
                }
                None => (0.0, 0.0),
            }
        };
        let b2 = if snap.lu.is_some() { (geo.kdist[i] * snap.m2_out).min(tout * eps * eps) } else { 0.0 };
        let (mut val, mut err) = match integrand {
            Integrand::Full => {
                let (sq, lin) = weighted_sums(k, &u, ui);
                let (o1, r) = far(lin);
                (sq + ui * ui * tout - 2.0 * ui * o1 + 0.5 * b2, 0.5 * b2 + 2.0 * ui.abs() * r)
            }
            Integrand::Modified | Integrand::ModifiedWithPotential => {
                let a = ui.abs();
                let mut sq = 0.0;
                let mut lin = 0.0;
                for j in 0..u.len() {
                    lin += k[j] * u[j];
                    if a > u[j].abs() {
                        let d = ui - u[j];
                        sq += k[j] * d * d;
                    }
                }
                if snap.lu.is_none() {
                    (sq + ui * ui * tout, 0.0)
                } else if a > eps {
                    let (o1, r) = far(lin);
                    (sq + ui * ui * tout - 2.0 * ui * o1 + 0.5 * b2, 0.5 * b2 + 2.0 * a * r)
                } else {
                    let half = 0.5 * tout * (a + eps).powi(2);
                    (sq + half, half)
                }
            }
            Integrand::Difference => {
                let d = if i + 1 < u.len() { u[i + 1] - ui } else { f64::NAN };
                (d * d, 0.0)
            }
            Integrand::Gamma(_) | Integrand::GammaWithPotential(_) => {
                if ui == 0.0 && q < 2.0 {
                    (0.0, 0.0)
                } else {
                    let p = if q == 2.0 { 1.0 } else { ui.powf(2.0 - q) };
                    let uiq = uq[i];
                    let mut acc = 0.0;
                    let mut lin = 0.0;
                    for j in 0..u.len() {
                        acc += k[j] * (q * ui * (ui - u[j]) - p * (uiq - uq[j]));
                        lin += k[j] * u[j];
                    }
                    let mut v = acc + (q - 1.0) * ui * ui * tout;
                    let mut e = 0.0;
                    if snap.lu.is_some() {
                        let (o1, r) = far(lin);
                        let o1 = o1.max(0.0);
                        // sum K u_y^q <= eps^(q-1) sum K u_y off the window
                        let bq = p * eps.powf(q - 1.0) * o1;
                        v += -q * ui * o1 + 0.5 * bq;
                        e += 0.5 * bq + q * ui * r;
                    }
                    (v, e)
                }
            }
        };
        match integrand {
            Integrand::ModifiedWithPotential | Integrand::GammaWithPotential(_) => {
                let uval = snap.potential.as_ref().map_or(0.0, |p| p[i]);
                let c = if let Integrand::GammaWithPotential(q) = integrand { q - 1.0 } else { 1.0 };
                val += c * uval * ui * ui;
            }
            _ => {}
        }
        err = err.max(0.0);
        out.push((val, err));
    }
    out
}

/// Integrated squares at a window of points, with error bounds that
/// combine window truncation and the certified time tail. Quadrature error
/// of the time panels is not included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareProfile {
    pub kind: String,
    pub window: Window,
    pub squares: Vec<f64>,
    pub errors: Vec<f64>,
    pub tail_bound: f64,
    pub t_max: f64,
}

impl SquareProfile {
    fn index(&self, x: i64) -> usize {
        self.window
            .index(x)
            .unwrap_or_else(|| panic!("point {x} outside the profile window"))
    }

    /// The square function at `x`.
    pub fn value(&self, x: i64) -> f64 {
        self.squares[self.index(x)].max(0.0).sqrt()
    }

    pub fn square(&self, x: i64) -> f64 {
        self.squares[self.index(x)]
    }

    pub fn error(&self, x: i64) -> f64 {
        self.errors[self.index(x)]
    }

    pub fn values(&self) -> Vec<f64> {
        self.squares.iter().map(|v| v.max(0.0).sqrt()).collect()
    }

    pub fn as_function(&self) -> LatticeFunction {
        LatticeFunction::from_values(self.window.lo(), self.values()).expect("finite square function values")
    }
}

/// A single square-function value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SquareValue {
    pub value: f64,
    /// Bound on the error of `value^2`.
    pub square_error: f64,
}

pub(crate) fn integrate_orbit(
    orbit: &dyn Orbit,
    integrand: Integrand,
    points: Window,
    quad: &TimeQuadrature,
    label: String,
) -> Result<SquareProfile> {
    let w = orbit.window();
    if points.lo() < w.lo() || points.hi() > w.hi() || (integrand == Integrand::Difference && points.hi() >= w.hi()) {
        return Err(Error::param("points", "must lie inside the orbit window"));
    }
    let geo = WindowGeometry::new(orbit.kernel(), w);
    let start = (points.lo() - w.lo()) as usize;
    let range = start..start + points.width();
    let mut squares = vec![0.0; points.width()];
    let mut errors = vec![0.0; points.width()];
    for &(t, wt) in quad.nodes() {
        let snap = orbit.snapshot(t)?;
        for (k, (v, e)) in evaluate(&geo, &snap, integrand, range.clone()).into_iter().enumerate() {
            squares[k] += wt * v;
            errors[k] += wt * e;
        }
    }
    for e in errors.iter_mut() {
        *e += quad.tail_bound();
    }
    Ok(SquareProfile {
        kind: label,
        window: points,
        squares,
        errors,
        tail_bound: quad.tail_bound(),
        t_max: quad.t_max(),
    })
}

/// Evaluator for square functions of `(-Delta)^s`.
#[derive(Debug, Clone)]
pub struct SquareFunctions {
    kernel: Arc<FractionalKernel>,
    evaluator: SemigroupEvaluator,
    margin: i64,
    z_margin: i64,
}

impl SquareFunctions {
    pub fn new(s: f64) -> Result<Self> {
        Self::from_parts(FractionalKernel::shared(s)?, SemigroupEvaluator::fractional(s)?)
    }

    pub fn from_parts(kernel: Arc<FractionalKernel>, evaluator: SemigroupEvaluator) -> Result<Self> {
        if evaluator.generator() != Generator::Fractional(kernel.order()) {
            return Err(Error::param("evaluator", "must use the same order as the kernel"));
        }
        Ok(SquareFunctions {
            kernel,
            evaluator,
            margin: DEFAULT_MARGIN,
            z_margin: DEFAULT_MARGIN / 2,
        })
    }

    /// Distance from the evaluation points (and the support of `f`) to the
    /// edge of the window on which `P_t f` is computed.
    pub fn with_margin(mut self, margin: i64) -> Self {
        self.margin = margin.max(1);
        self
    }

    /// Half-width added around the evaluation points for the `z`-sum of `G_*`.
    pub fn with_z_margin(mut self, z_margin: i64) -> Self {
        self.z_margin = z_margin.max(0);
        self
    }

    pub fn kernel(&self) -> &Arc<FractionalKernel> {
        &self.kernel
    }

    pub fn evaluator(&self) -> &SemigroupEvaluator {
        &self.evaluator
    }

    pub fn envelope(&self, f: &LatticeFunction, kind: SquareKind) -> TailEnvelope {
        TailEnvelope::new(self.kernel.clone(), f, kind)
    }

    /// Certified rule for `kind` applied to `f`, or the finite rule for
    /// `G_{*,T}`.
    pub fn quadrature(&self, f: &LatticeFunction, kind: SquareKind, tolerance: f64) -> Result<TimeQuadrature> {
        match kind {
            SquareKind::Gstar { horizon: Some(t) } => TimeQuadrature::finite(t),
            _ => TimeQuadrature::certified(&self.envelope(f, kind), tolerance),
        }
    }

    fn validate(&self, f: &LatticeFunction, kind: SquareKind) -> Result<()> {
        match kind {
            SquareKind::Hq { q } => {
                check_q_low(q)?;
                if !f.is_nonnegative() {
                    return Err(Error::param("f", "must be nonnegative for H_q"));
                }
            }
            SquareKind::Gstar { horizon: Some(t) } if !(t > 0.0 && t.is_finite()) => {
                return Err(Error::param("T", "horizon must be positive and finite"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Squares of the square function `kind` of `f` at every point of `points`.
    pub fn profile(&self, f: &LatticeFunction, kind: SquareKind, points: Window, quad: &TimeQuadrature) -> Result<SquareProfile> {
        self.validate(f, kind)?;
        if let SquareKind::Gstar { horizon } = kind {
            if horizon.is_some() != quad.is_finite_horizon() {
                return Err(Error::param("quad", "horizon of the rule does not match the requested G_*"));
            }
            return self.gstar_profile(f, points, quad, kind.label());
        }
        let integrand = match kind {
            SquareKind::G => Integrand::Full,
            SquareKind::Gtilde => Integrand::Modified,
            SquareKind::H => Integrand::Difference,
            SquareKind::Hq { q } => Integrand::Gamma(q),
            SquareKind::Gstar { .. } => unreachable!(),
        };
        let window = points.hull(&f.window()).expand(self.margin)?;
        let orbit = FreeOrbit::new(&self.kernel, &self.evaluator, f, window)?;
        integrate_orbit(&orbit, integrand, points, quad, kind.label())
    }

    /// Convenience: certified rule at the default tolerance, then
    /// [`SquareFunctions::profile`].
    pub fn compute(&self, f: &LatticeFunction, kind: SquareKind, points: Window) -> Result<SquareProfile> {
        let quad = self.quadrature(f, kind, DEFAULT_TAIL_TOLERANCE)?;
        self.profile(f, kind, points, &quad)
    }

    fn gstar_profile(&self, f: &LatticeFunction, points: Window, quad: &TimeQuadrature, label: String) -> Result<SquareProfile> {
        let zw = points.expand(self.z_margin)?;
        let window = zw.hull(&f.window()).expand(self.margin)?;
        let orbit = FreeOrbit::new(&self.kernel, &self.evaluator, f, window)?;
        let geo = WindowGeometry::new(&self.kernel, window);
        let envelope = self.envelope(f, SquareKind::G);
        let z0 = (zw.lo() - window.lo()) as usize;
        let mut squares = vec![0.0; points.width()];
        let mut errors = vec![0.0; points.width()];
        for &(t, wt) in quad.nodes() {
            let snap = orbit.snapshot(t)?;
            let g = evaluate(&geo, &snap, Integrand::Full, z0..z0 + zw.width());
            let bound = envelope.gradient_bound(t);
            for (k, x) in points.iter().enumerate() {
                let mut acc = 0.0;
                let mut err = 0.0;
                let mut mass = 0.0;
                for (j, z) in zw.iter().enumerate() {
                    let p = snap.row[(x - z).unsigned_abs() as usize];
                    acc += p * g[j].0;
                    err += p.abs() * g[j].1;
                    mass += p;
                }
                let out = ((1.0 - mass).max(0.0) + 1e-14) * bound;
                squares[k] += wt * (acc + 0.5 * out);
                errors[k] += wt * (err + 0.5 * out);
            }
        }
        for e in errors.iter_mut() {
            *e += quad.tail_bound();
        }
        Ok(SquareProfile {
            kind: label,
            window: points,
            squares,
            errors,
            tail_bound: quad.tail_bound(),
            t_max: quad.t_max(),
        })
    }
}

fn single(kernel: &FractionalKernel, evaluator: &SemigroupEvaluator, f: &LatticeFunction, x: i64, kind: SquareKind, quad: &TimeQuadrature) -> Result<SquareValue> {
    let engine = SquareFunctions::from_parts(FractionalKernel::shared(kernel.order())?, evaluator.clone())?;
    let p = engine.profile(f, kind, Window::new(x, x)?, quad)?;
    Ok(SquareValue {
        value: p.value(x),
        square_error: p.error(x),
    })
}

/// `G(f)(x)`.
pub fn square_g(kernel: &FractionalKernel, evaluator: &SemigroupEvaluator, f: &LatticeFunction, x: i64, quad: &TimeQuadrature) -> Result<SquareValue> {
    single(kernel, evaluator, f, x, SquareKind::G, quad)
}

/// `G~(f)(x)`.
pub fn square_gtilde(kernel: &FractionalKernel, evaluator: &SemigroupEvaluator, f: &LatticeFunction, x: i64, quad: &TimeQuadrature) -> Result<SquareValue> {
    single(kernel, evaluator, f, x, SquareKind::Gtilde, quad)
}

/// `H(f)(x)`.
pub fn square_h(kernel: &FractionalKernel, evaluator: &SemigroupEvaluator, f: &LatticeFunction, x: i64, quad: &TimeQuadrature) -> Result<SquareValue> {
    single(kernel, evaluator, f, x, SquareKind::H, quad)
}

/// `H_q(f)(x)` for `f >= 0`.
pub fn square_hq(kernel: &FractionalKernel, evaluator: &SemigroupEvaluator, f: &LatticeFunction, q: f64, x: i64, quad: &TimeQuadrature) -> Result<SquareValue> {
    single(kernel, evaluator, f, x, SquareKind::Hq { q }, quad)
}

/// `G_{*,T}(f)(x)`, or `G_*(f)(x)` when `horizon` is `None`.
pub fn square_gstar(
    kernel: &FractionalKernel,
    evaluator: &SemigroupEvaluator,
    f: &LatticeFunction,
    x: i64,
    horizon: Option<f64>,
    quad: &TimeQuadrature,
) -> Result<SquareValue> {
    single(kernel, evaluator, f, x, SquareKind::Gstar { horizon }, quad)
}

/// `G~_U(f)` at `points`, in the window model of `schro`.
pub fn square_gtilde_u(
    schro: &crate::schrodinger::SchrodingerEvaluator,
    f: &LatticeFunction,
    points: Window,
    quad: &TimeQuadrature,
) -> Result<SquareProfile> {
    let orbit = schro.orbit(f)?;
    integrate_orbit(&orbit, Integrand::ModifiedWithPotential, points, quad, "GtildeU".into())
}

/// `||g||_q / ||f||_q` for a profile `g` of `f`.
pub fn lq_ratio(profile: &SquareProfile, f: &LatticeFunction, q: f64) -> Result<f64> {
    let num = lq_norm(&profile.as_function(), q)?;
    let den = lq_norm(f, q)?;
    if den == 0.0 {
        return Err(Error::param("f", "must not vanish"));
    }
    Ok(num / den)
}

/// `G(delta_1)` for `s = 1/4` on `2..=2n`, the input of the divergence
/// test for `||G(f)||_q`.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleData {
    pub s: f64,
    pub n: i64,
    pub points: Window,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub fit_range: (i64, i64),
}

/// Order of the counterexample.
pub const COUNTEREXAMPLE_ORDER: f64 = 0.25;

impl CounterexampleData {
    pub fn compute(n: i64, margin: i64) -> Result<Self> {
        if n < 32 {
            return Err(Error::param("n", "must be at least 32"));
        }
        let s = COUNTEREXAMPLE_ORDER;
        let engine = SquareFunctions::new(s)?.with_margin(margin);
        let f = LatticeFunction::delta(1);
        let points = Window::new(2, 2 * n)?;
        let p = engine.compute(&f, SquareKind::G, points)?;
        let values = p.values();
        let fit_range = (32, 512.min(2 * n));
        let (xs, ys): (Vec<f64>, Vec<f64>) = (fit_range.0..=fit_range.1)
            .map(|x| (((x - 1) as f64).ln(), values[(x - 2) as usize].ln()))
            .unzip();
        let slope = least_squares_slope(&xs, &ys);
        Ok(CounterexampleData {
            s,
            n,
            points,
            values,
            errors: p.errors,
            slope,
            fit_range,
        })
    }

    pub fn value(&self, x: i64) -> f64 {
        self.values[(x - 2) as usize]
    }

    /// `S_m = sum_{x=2}^{m} G(delta_1)(x)^q`.
    pub fn partial_sum(&self, q: f64, m: i64) -> f64 {
        (2..=m.min(2 * self.n)).map(|x| self.value(x).powf(q)).sum()
    }

    /// `S_{2m} - S_m` for `m = 16, 32, ..., n`.
    pub fn doubling_increments(&self, q: f64) -> Vec<(i64, f64)> {
        let mut out = Vec::new();
        let mut m = 16;
        while m <= self.n {
            out.push((m, self.partial_sum(q, 2 * m) - self.partial_sum(q, m)));
            m *= 2;
        }
        out
    }

    /// Verdict for exponent `q`. For `q <= 4/3` the increments must stay
    /// positive with successive ratios at least `0.9` (no geometric decay);
    /// otherwise the last four ratios must be below `0.6`. The fitted slope
    /// must lie in `[-0.80, -0.70]` in both cases.
    ///
    /// No finite computation proves divergence; the doubling test is the
    /// numerical stand-in.
    pub fn report(&self, q: f64) -> VerificationReport {
        let inc = self.doubling_increments(q);
        let ratios: Vec<f64> = inc.windows(2).map(|w| w[1].1 / w[0].1).collect();
        let divergent_branch = q <= 4.0 / 3.0 + 1e-12;
        let last4 = &ratios[ratios.len().saturating_sub(4)..];
        let slope_err = if self.slope > -0.70 {
            self.slope + 0.70
        } else if self.slope < -0.80 {
            -0.80 - self.slope
        } else {
            0.0
        };
        let branch_err = if divergent_branch {
            let low = inc.iter().all(|(_, d)| *d > 0.0);
            let worst = last4.iter().cloned().fold(f64::INFINITY, f64::min);
            if !low {
                1.0
            } else {
                (0.9 - worst).max(0.0)
            }
        } else {
            let worst = last4.iter().cloned().fold(0.0, f64::max);
            (worst - 0.6).max(0.0)
        };
        let enough = last4.len() >= 4;
        let mut details = vec![PointError {
            label: format!("slope over [{}, {}]", self.fit_range.0, self.fit_range.1),
            observed: self.slope,
            expected: -0.75,
            error: slope_err,
        }];
        for (k, (m, d)) in inc.iter().enumerate() {
            details.push(PointError {
                label: format!("S_{} - S_{}", 2 * m, m),
                observed: *d,
                expected: if k > 0 { ratios[k - 1] } else { f64::NAN },
                error: 0.0,
            });
        }
        let err = if enough { slope_err + branch_err } else { f64::INFINITY };
        VerificationReport::new("counterexample_doubling", err, 0.0)
            .param("s", self.s)
            .param("q", q)
            .param("n", self.n)
            .param("branch", if divergent_branch { "divergent" } else { "convergent" })
            .with_details(details)
            .note(format!("successive increment ratios: {ratios:?}"))
            .note("divergence is tested by doubling partial sums; no finite computation proves it")
    }
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Counterexample for `s = 1/4`: decay slope of `G(delta_1)` and the
/// doubling test on `sum G(delta_1)(x)^q`.
pub fn counterexample_report(q: f64, n: i64) -> Result<VerificationReport> {
    if !(q > 1.0) {
        return Err(Error::param("q", "must exceed 1"));
    }
    Ok(CounterexampleData::compute(n, 3 * DEFAULT_MARGIN)?.report(q))
}

/// Direct summation of `int_0^T sum_x |grad P_t delta_0|^2(x) dt`.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyAnchor {
    pub s: f64,
    pub horizon: f64,
    pub radius: i64,
    /// `int_0^T sum_x |grad P_t delta_0|^2 dt`.
    pub energy: f64,
    /// Bound on the window-truncation error of `energy`.
    pub truncation_bound: f64,
    /// `||P_T delta_0||_2^2 = p_{2T}(0,0)`.
    pub remaining: f64,
}

impl EnergyAnchor {
    /// Smallest horizon on a half-decade grid with `p_{2T}(0,0) <= target`.
    pub fn horizon_for(s: f64, target: f64) -> Result<f64> {
        let ev = SemigroupEvaluator::fractional(s)?;
        let mut t = 1.0;
        while ev.kernel(2.0 * t, 0)? > target {
            t *= 10f64.sqrt();
            if t > 1e8 {
                return Err(Error::param("target", "unreachable"));
            }
        }
        Ok(t)
    }

    pub fn compute(s: f64, horizon: f64, radius: i64) -> Result<Self> {
        let kernel = FractionalKernel::shared(s)?;
        let ev = SemigroupEvaluator::fractional(s)?;
        let f = LatticeFunction::delta(0);
        let w = Window::centered(0, radius)?;
        let orbit = FreeOrbit::new(&kernel, &ev, &f, w)?;
        let geo = WindowGeometry::new(&kernel, w);
        let quad = TimeQuadrature::finite(horizon)?;
        let c = radius as usize;
        let norm = kernel.l1_norm();
        let mut energy = 0.0;
        let mut bound = 0.0;
        for &(t, wt) in quad.nodes() {
            let snap = orbit.snapshot(t)?;
            // P_t delta_0 is even
            let vals = evaluate(&geo, &snap, Integrand::Full, c..w.width());
            let mut inside = vals[0].0;
            let mut err = vals[0].1;
            for (v, e) in &vals[1..] {
                inside += 2.0 * v;
                err += 2.0 * e;
            }
            // x off the window: the part with y inside and u_x replaced by 0
            let s1: f64 = snap.u.iter().enumerate().map(|(i, u)| u * u * geo.tout(i)).sum();
            let m2 = snap.m2_out;
            err += 2.0 * (s1 * norm * m2).sqrt() + 5.0 * norm * m2;
            energy += wt * (inside + s1);
            bound += wt * err;
        }
        Ok(EnergyAnchor {
            s,
            horizon,
            radius,
            energy,
            truncation_bound: bound,
            remaining: ev.kernel(2.0 * horizon, 0)?,
        })
    }

    /// `||G(delta_0)||_2` estimated as `(energy + ||P_T delta_0||^2)^(1/2)`.
    pub fn norm_estimate(&self) -> f64 {
        (self.energy + self.remaining).sqrt()
    }

    pub fn report(&self, tolerance: f64) -> VerificationReport {
        let full = (self.norm_estimate() - 1.0).abs();
        let truncated = (self.energy.sqrt() - 1.0).abs();
        let mut table = ErrorTable::default();
        table.push("||G(delta_0)||_2 with the tail beyond T", self.norm_estimate(), 1.0, full);
        table.push("(int_0^T sum_x |grad P_t delta_0|^2)^(1/2)", self.energy.sqrt(), 1.0, truncated);
        table
            .into_report("l2_isometry_anchor", tolerance)
            .param("s", self.s)
            .param("T", self.horizon)
            .param("radius", self.radius)
            .note(format!(
                "tail ||P_T delta_0||^2 = {:.3e}; window truncation bound {:.3e}",
                self.remaining, self.truncation_bound
            ))
    }
}

/// `G(f)(x) <= sqrt(2) G_*(f)(x)` on `points`; a point fails only when the
/// lower end of `2 G_*^2` lies below the upper end of `G^2`.
pub fn check_gstar_domination(engine: &SquareFunctions, f: &LatticeFunction, points: Window) -> Result<VerificationReport> {
    let g = engine.compute(f, SquareKind::G, points)?;
    let gs = engine.compute(f, SquareKind::Gstar { horizon: None }, points)?;
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for x in points.iter() {
        let lhs = g.square(x) + g.error(x);
        let rhs = 2.0 * (gs.square(x) - gs.error(x));
        if lhs > rhs {
            violations += 1;
        }
        let ratio = g.value(x) / gs.value(x);
        worst = worst.max(ratio);
        details.push(PointError {
            label: format!("x={x}"),
            observed: ratio,
            expected: 2f64.sqrt(),
            error: (lhs - rhs).max(0.0),
        });
    }
    Ok(VerificationReport::new("gstar_domination", violations as f64, 0.0)
        .param("s", engine.kernel.order())
        .param("points", format!("[{}, {}]", points.lo(), points.hi()))
        .with_details(details)
        .note(format!("largest G/G_* = {worst:.6}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(s: f64) -> SquareFunctions {
        SquareFunctions::new(s).unwrap().with_margin(256).with_z_margin(128)
    }

    #[test]
    fn quadrature_nodes_cover_the_interval() {
        let q = TimeQuadrature::finite(3.7).unwrap();
        let total: f64 = q.nodes().iter().map(|(_, w)| w).sum();
        assert!((total - 3.7).abs() < 1e-12);
        let q = TimeQuadrature::new(1e-7, 0.0).unwrap();
        let total: f64 = q.nodes().iter().map(|(_, w)| w).sum();
        assert!((total - 1e-7).abs() < 1e-20);
        assert!(TimeQuadrature::finite(0.0).is_err());
    }

    #[test]
    fn envelope_dominates_integrands() {
        let e = engine(0.4);
        let f = LatticeFunction::from_values(-2, vec![0.3, -1.0, 2.0, 0.0, 0.5]).unwrap();
        let env = e.envelope(&f, SquareKind::G);
        let env_h = e.envelope(&f, SquareKind::H);
        let w = Window::new(-300, 300).unwrap();
        let orbit = FreeOrbit::new(&e.kernel, &e.evaluator, &f, w).unwrap();
        let geo = WindowGeometry::new(&e.kernel, w);
        for t in [0.01, 0.3, 2.0, 15.0, 80.0] {
            let snap = orbit.snapshot(t).unwrap();
            let vals = evaluate(&geo, &snap, Integrand::Full, 200..401);
            let diffs = evaluate(&geo, &snap, Integrand::Difference, 200..401);
            for ((v, err), (d, _)) in vals.iter().zip(&diffs) {
                assert!(v - err <= env.integrand_bound(t), "t={t}");
                assert!(*d <= env_h.integrand_bound(t));
            }
            let sup = snap.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(sup <= env.sup_bound(t));
        }
    }

    #[test]
    fn tail_integral_decays() {
        let e = engine(0.5);
        let env = e.envelope(&LatticeFunction::delta(0), SquareKind::G);
        let a = env.integral_beyond(10.0);
        let b = env.integral_beyond(100.0);
        assert!(a > b && b > 0.0);
        // b(t) falls like t^(-1/s - 1)
        assert!((a / b).log10() > 1.8, "{a} {b}");
    }

    #[test]
    fn zero_function_gives_zero() {
        let e = engine(0.5);
        let f = LatticeFunction::zeros(Window::new(-1, 1).unwrap());
        for kind in [SquareKind::G, SquareKind::Gtilde, SquareKind::H, SquareKind::Hq { q: 1.5 }, SquareKind::Gstar { horizon: Some(0.5) }] {
            let p = e.compute(&f, kind, Window::new(-2, 2).unwrap()).unwrap();
            assert!(p.squares.iter().all(|v| *v == 0.0), "{kind:?}");
        }
    }

    #[test]
    fn orderings_between_square_functions() {
        let e = engine(0.5);
        let f = LatticeFunction::from_values(-1, vec![1.0, 0.25, 0.6]).unwrap();
        let pts = Window::new(-6, 6).unwrap();
        let g = e.compute(&f, SquareKind::G, pts).unwrap();
        let gt = e.compute(&f, SquareKind::Gtilde, pts).unwrap();
        let h = e.compute(&f, SquareKind::H, pts).unwrap();
        let h2 = e.compute(&f, SquareKind::Hq { q: 2.0 }, pts).unwrap();
        let k1 = e.kernel.value(1);
        for x in pts.iter() {
            let slack = g.error(x) + gt.error(x);
            assert!(gt.square(x) <= g.square(x) + slack);
            assert!(h.square(x) <= g.square(x) / k1 + g.error(x) / k1);
            assert!((h2.square(x) - g.square(x)).abs() <= 1e-10 + slack, "x={x}");
        }
    }

    #[test]
    fn margin_changes_results_within_error_bounds() {
        let f = LatticeFunction::delta(0);
        let pts = Window::new(0, 20).unwrap();
        let a = engine(0.3).with_margin(128).compute(&f, SquareKind::G, pts).unwrap();
        let b = engine(0.3).with_margin(1024).compute(&f, SquareKind::G, pts).unwrap();
        for x in pts.iter() {
            let diff = (a.square(x) - b.square(x)).abs();
            assert!(diff <= a.error(x) + b.error(x), "x={x}: {diff} > {} + {}", a.error(x), b.error(x));
        }
    }

    #[test]
    fn gstar_grows_with_horizon() {
        let e = engine(0.5);
        let f = LatticeFunction::delta(1);
        let pts = Window::new(-3, 3).unwrap();
        let mut prev = vec![0.0; pts.width()];
        for t in [0.25, 0.5, 2.0] {
            let p = e.compute(&f, SquareKind::Gstar { horizon: Some(t) }, pts).unwrap();
            for (k, x) in pts.iter().enumerate() {
                assert!(p.square(x) + p.error(x) >= prev[k]);
                prev[k] = p.square(x) - p.error(x);
            }
        }
    }

    #[test]
    fn hq_requires_nonnegative_input() {
        let e = engine(0.5);
        let f = LatticeFunction::from_values(0, vec![1.0, -1.0]).unwrap();
        assert!(e.compute(&f, SquareKind::Hq { q: 1.5 }, Window::new(0, 1).unwrap()).is_err());
    }

    #[test]
    fn impossible_tolerance_is_an_error() {
        let e = engine(0.9);
        let env = e.envelope(&LatticeFunction::delta(0), SquareKind::G);
        assert!(matches!(TimeQuadrature::certified(&env, 1e-300), Err(Error::Quadrature(_))));
    }
}
