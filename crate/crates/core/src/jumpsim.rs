// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! The continuous-time random walk generated by `-L` and the martingale
//! `M_t = P_{T-t} f(X_t) - P_T f(X_0)`.
//!
//! Path `i` of a run with seed `seed` draws from ChaCha20 keyed by `seed` on
//! stream `i`, so paths are reproducible one at a time and independent of
//! how a run is split up.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

use crate::error::{Error, Result};
use crate::kernel::{FractionalKernel, TransitionLaw};
use crate::lattice::{LatticeFunction, Window};
use crate::quadrature::{ChebyshevPanel, GaussLegendre};
use crate::report::{ErrorTable, VerificationReport};
use crate::semigroup::SemigroupEvaluator;
use crate::squarefn::{evaluate, FreeOrbit, Integrand, Orbit, Snapshot, SquareFunctions, SquareKind, WindowGeometry};

/// Half-width of the window around `f` on which orbit values are tabulated.
const ORBIT_RADIUS: i64 = 4096;

/// A piecewise-constant trajectory on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpPath {
    pub start: i64,
    pub horizon: f64,
    /// Jump times in `(0, horizon]`, strictly increasing.
    pub jump_times: Vec<f64>,
    /// `states[0] = start`, `states[k]` is the state after the `k`-th jump.
    pub states: Vec<i64>,
    pub seed: u64,
    pub index: u64,
}

impl JumpPath {
    pub fn end(&self) -> i64 {
        *self.states.last().expect("a path has at least one state")
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// Holding intervals `(state, from, to)`.
    pub fn segments(&self) -> impl Iterator<Item = (i64, f64, f64)> + '_ {
        (0..self.states.len()).map(move |k| {
            let from = if k == 0 { 0.0 } else { self.jump_times[k - 1] };
            let to = self.jump_times.get(k).copied().unwrap_or(self.horizon);
            (self.states[k], from, to)
        })
    }

    /// `int_0^T v(X_r) dr`, an exact finite sum.
    pub fn occupation_integral(&self, v: impl Fn(i64) -> f64) -> f64 {
        self.segments().map(|(x, a, b)| v(x) * (b - a)).sum()
    }
}

/// Generator for path `index` of a run keyed by `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One jump displacement: magnitude by inverse transform, symmetric sign.
pub fn sample_jump(law: &TransitionLaw, rng: &mut impl Rng) -> i64 {
    // u in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    let m = law.magnitude_from_uniform(u) as i64;
    if rng.random::<bool>() {
        m
    } else {
        -m
    }
}

/// Path with index 0 of the run keyed by `seed`.
pub fn sample_path(law: &TransitionLaw, start: i64, horizon: f64, seed: u64) -> Result<JumpPath> {
    sample_path_indexed(law, start, horizon, seed, 0)
}

pub fn sample_path_indexed(law: &TransitionLaw, start: i64, horizon: f64, seed: u64, index: u64) -> Result<JumpPath> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::param("T", "horizon must be positive and finite"));
    }
    let mut rng = path_rng(seed, index);
    let hold = Exp::new(law.rate()).map_err(|e| Error::param("rate", e.to_string()))?;
    let mut t = 0.0;
    let mut x = start;
    let mut jump_times = Vec::new();
    let mut states = vec![start];
    loop {
        t += hold.sample(&mut rng);
        if t > horizon {
            break;
        }
        x = x.saturating_add(sample_jump(law, &mut rng));
        jump_times.push(t);
        states.push(x);
    }
    Ok(JumpPath {
        start,
        horizon,
        jump_times,
        states,
        seed,
        index,
    })
}

/// Per-state interpolants of `sigma -> P_sigma f(x)` and
/// `sigma -> int_0^sigma |grad P_r f|^2(x) dr` on `[0, T]`.
///
/// Both are entire in `sigma`, so one Chebyshev panel of moderate degree
/// suffices. Sites within [`ORBIT_RADIUS`] of `f` read the tabulated orbit;
/// sites further out use the far-field heat kernel and a one-sided sum.
pub struct OrbitCache {
    kernel: Arc<FractionalKernel>,
    evaluator: SemigroupEvaluator,
    f: LatticeFunction,
    horizon: f64,
    sigmas: Vec<f64>,
    window: Window,
    geometry: WindowGeometry,
    snapshots: Vec<Snapshot>,
    states: HashMap<i64, (ChebyshevPanel, ChebyshevPanel)>,
}

impl OrbitCache {
    pub fn new(kernel: Arc<FractionalKernel>, f: &LatticeFunction, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::param("T", "horizon must be positive and finite"));
        }
        let evaluator = SemigroupEvaluator::fractional(kernel.order())?;
        let degree = (24.0 + 2.0 * evaluator.symbol_max() * horizon).ceil().min(256.0) as usize;
        let sigmas = ChebyshevPanel::points(0.0, horizon, degree);
        let window = f.window().expand(ORBIT_RADIUS)?;
        let geometry = WindowGeometry::new(&kernel, window);
        let orbit = FreeOrbit::new(&kernel, &evaluator, f, window)?;
        let snapshots = sigmas.iter().map(|&t| orbit.snapshot(t)).collect::<Result<Vec<_>>>()?;
        Ok(OrbitCache {
            kernel,
            evaluator,
            f: f.clone(),
            horizon,
            sigmas,
            window,
            geometry,
            snapshots,
            states: HashMap::new(),
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn samples(&self, x: i64) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut u = Vec::with_capacity(self.sigmas.len());
        let mut g = Vec::with_capacity(self.sigmas.len());
        if let Some(i) = self.window.index(x) {
            for snap in &self.snapshots {
                u.push(snap.u[i]);
                g.push(evaluate(&self.geometry, snap, Integrand::Full, i..i + 1)[0].0);
            }
            return Ok((u, g));
        }
        // far site: u_y for y off the window is below the window-edge value
        // and contributes at most K-mass times u_x^2-sized terms
        let norm = self.kernel.l1_norm();
        let kvals: Vec<f64> = self.window.iter().map(|y| self.kernel.value(y - x)).collect();
        let inside_mass: f64 = kvals.iter().sum();
        for (j, &sigma) in self.sigmas.iter().enumerate() {
            let mut ux = 0.0;
            for (a, fa) in self.f.iter() {
                if fa != 0.0 {
                    ux += fa * self.evaluator.kernel(sigma, x - a)?;
                }
            }
            let snap = &self.snapshots[j];
            let mut acc = 0.0;
            for (k, uy) in kvals.iter().zip(&snap.u) {
                let d = ux - uy;
                acc += k * d * d;
            }
            acc += ux * ux * (norm - inside_mass).max(0.0);
            u.push(ux);
            g.push(acc);
        }
        Ok((u, g))
    }

    fn entry(&mut self, x: i64) -> Result<&(ChebyshevPanel, ChebyshevPanel)> {
        if !self.states.contains_key(&x) {
            let (u, g) = self.samples(x)?;
            let pu = ChebyshevPanel::fit(0.0, self.horizon, &u);
            let pg = ChebyshevPanel::fit(0.0, self.horizon, &g);
            self.states.insert(x, (pu, pg));
        }
        Ok(&self.states[&x])
    }

    /// `P_sigma f(x)` for `sigma` in `[0, T]`.
    pub fn value(&mut self, x: i64, sigma: f64) -> Result<f64> {
        Ok(self.entry(x)?.0.eval(sigma))
    }

    /// `int_a^b |grad P_r f|^2(x) dr` for `0 <= a <= b <= T`.
    pub fn energy(&mut self, x: i64, a: f64, b: f64) -> Result<f64> {
        let (_, pg) = self.entry(x)?;
        Ok(pg.integral_to(b) - pg.integral_to(a))
    }

    pub fn cached_states(&self) -> usize {
        self.states.len()
    }
}

/// `M_T`, `<M>_T` and `[M]_T` along one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleFunctionals {
    pub m_t: f64,
    pub angle_bracket: f64,
    pub square_bracket: f64,
}

/// Functionals of `M_t = P_{T-t} f(X_t) - P_T f(X_0)` along `path`, whose
/// horizon must equal the cache horizon.
pub fn martingale_functionals(path: &JumpPath, cache: &mut OrbitCache) -> Result<MartingaleFunctionals> {
    let t = cache.horizon();
    if (path.horizon - t).abs() > 1e-12 * t {
        return Err(Error::param("path", "horizon does not match the orbit cache"));
    }
    let start_value = cache.value(path.start, t)?;
    let end_value = cache.f.get(path.end());
    let mut angle = 0.0;
    for (x, a, b) in path.segments() {
        // time r in [a, b] corresponds to sigma = T - r
        angle += cache.energy(x, t - b, t - a)?;
    }
    let mut square = 0.0;
    for (k, &tau) in path.jump_times.iter().enumerate() {
        let before = cache.value(path.states[k], t - tau)?;
        let after = cache.value(path.states[k + 1], t - tau)?;
        square += (after - before).powi(2);
    }
    Ok(MartingaleFunctionals {
        m_t: end_value - start_value,
        angle_bracket: angle.max(0.0),
        square_bracket: square,
    })
}

/// Running mean and standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl MeanEstimate {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn standard_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Deviation measured in units of three standard errors; zero deviation
/// with zero spread counts as agreement.
fn in_se_units(dev: f64, se: f64) -> f64 {
    if dev == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        dev.abs() / (3.0 * se)
    }
}

/// Monte Carlo estimates behind [`verify_compensator`].
#[derive(Debug, Clone, Serialize)]
pub struct CompensatorRun {
    pub m_t: MeanEstimate,
    pub m_t_squared: MeanEstimate,
    pub angle_bracket: MeanEstimate,
    pub square_bracket: MeanEstimate,
    pub angle_moment: MeanEstimate,
    pub square_moment: MeanEstimate,
    /// `P_T f^2(x_0) - (P_T f(x_0))^2`.
    pub variance: f64,
    pub moment_q: f64,
}

pub fn run_compensator(law: &TransitionLaw, f: &LatticeFunction, horizon: f64, n_paths: u64, seed: u64, start: i64, moment_q: f64) -> Result<CompensatorRun> {
    let kernel = FractionalKernel::shared(law.kernel().order())?;
    let evaluator = SemigroupEvaluator::fractional(kernel.order())?;
    let at = Window::new(start, start)?;
    let pf = evaluator.apply(horizon, f, at)?.get(start);
    let f2 = f.map(|v| v * v)?;
    let pf2 = evaluator.apply(horizon, &f2, at)?.get(start);
    let mut cache = OrbitCache::new(kernel, f, horizon)?;
    let mut run = CompensatorRun {
        m_t: MeanEstimate::default(),
        m_t_squared: MeanEstimate::default(),
        angle_bracket: MeanEstimate::default(),
        square_bracket: MeanEstimate::default(),
        angle_moment: MeanEstimate::default(),
        square_moment: MeanEstimate::default(),
        variance: pf2 - pf * pf,
        moment_q,
    };
    for i in 0..n_paths {
        let path = sample_path_indexed(law, start, horizon, seed, i)?;
        let mf = martingale_functionals(&path, &mut cache)?;
        run.m_t.push(mf.m_t);
        run.m_t_squared.push(mf.m_t * mf.m_t);
        run.angle_bracket.push(mf.angle_bracket);
        run.square_bracket.push(mf.square_bracket);
        run.angle_moment.push(mf.angle_bracket.powf(0.5 * moment_q));
        run.square_moment.push(mf.square_bracket.powf(0.5 * moment_q));
    }
    Ok(run)
}

/// `E[M_T] = 0` and `E[M_T^2] = E[<M>_T] = E[[M]_T] = P_T f^2 - (P_T f)^2`
/// at `x_0 = 0`, each within three standard errors. The error column is
/// the deviation in units of `3 SE`, so the tolerance is 1.
pub fn verify_compensator(law: &TransitionLaw, f: &LatticeFunction, horizon: f64, n_paths: u64, seed: u64) -> Result<VerificationReport> {
    verify_compensator_at(law, f, horizon, n_paths, seed, 0)
}

/// [`verify_compensator`] started from `start`.
pub fn verify_compensator_at(law: &TransitionLaw, f: &LatticeFunction, horizon: f64, n_paths: u64, seed: u64, start: i64) -> Result<VerificationReport> {
    if n_paths < 2 {
        return Err(Error::param("n_paths", "need at least two paths"));
    }
    let run = run_compensator(law, f, horizon, n_paths, seed, start, 3.0)?;
    let v = run.variance;
    let mut table = ErrorTable::default();
    table.push("E[M_T]", run.m_t.mean, 0.0, in_se_units(run.m_t.mean, run.m_t.standard_error()));
    for (label, est) in [
        ("E[M_T^2]", run.m_t_squared),
        ("E[<M>_T]", run.angle_bracket),
        ("E[[M]_T]", run.square_bracket),
    ] {
        table.push(label, est.mean, v, in_se_units(est.mean - v, est.standard_error()));
    }
    let ratio = run.angle_moment.mean / run.square_moment.mean;
    Ok(table
        .into_report("martingale_compensator", 1.0)
        .param("s", law.kernel().order())
        .param("T", horizon)
        .param("start", start)
        .param("paths", n_paths)
        .param("seed", seed)
        .note("errors are deviations in units of three standard errors")
        .note(format!(
            "E[<M>_T^(3/2)] / E[[M]_T^(3/2)] = {ratio:.6} (SEs {:.2e}, {:.2e})",
            run.angle_moment.standard_error(),
            run.square_moment.standard_error()
        )))
}

/// `sum_{z in window_z} E_z[<M>_T 1{X_T = x}]` computed deterministically as
/// `int_0^T sum_w (sum_{z in window_z} p_r(z, w)) |grad P_{T-r} f|^2(w) p_{T-r}(w, x) dr`,
/// with `w` summed over a window and the rest bounded.
pub fn restricted_gstar_square(
    kernel: Arc<FractionalKernel>,
    f: &LatticeFunction,
    horizon: f64,
    x: i64,
    window_z: Window,
    w_radius: i64,
) -> Result<(f64, f64)> {
    let evaluator = SemigroupEvaluator::fractional(kernel.order())?;
    let ww = window_z.hull(&Window::new(x, x)?).hull(&f.window()).expand(w_radius)?;
    let outer = ww.expand(w_radius)?;
    let orbit = FreeOrbit::new(&kernel, &evaluator, f, outer)?;
    let geo = WindowGeometry::new(&kernel, outer);
    let sq = SquareFunctions::from_parts(kernel.clone(), evaluator.clone())?;
    let envelope = sq.envelope(f, SquareKind::G);
    let gl = GaussLegendre::get(16);
    let panels = 4;
    let h = horizon / panels as f64;
    let start = (ww.lo() - outer.lo()) as usize;
    let mut value = 0.0;
    let mut bound = 0.0;
    for p in 0..panels {
        for (r, wt) in gl.mapped(p as f64 * h, (p + 1) as f64 * h) {
            let sigma = horizon - r;
            let snap = orbit.snapshot(sigma)?;
            let g = evaluate(&geo, &snap, Integrand::Full, start..start + ww.width());
            let reach = ww.width() + window_z.width();
            let pr = evaluator.row(r, reach)?;
            let mut acc = 0.0;
            let mut err = 0.0;
            let mut mass_x = 0.0;
            for (k, w) in ww.iter().enumerate() {
                let start_mass: f64 = window_z.iter().map(|z| pr[(z - w).unsigned_abs() as usize]).sum();
                let px = snap.row[(w - x).unsigned_abs() as usize];
                acc += start_mass * g[k].0 * px;
                err += start_mass * g[k].1 * px;
                mass_x += px;
            }
            let out = ((1.0 - mass_x).max(0.0) + 1e-14) * envelope.gradient_bound(sigma);
            value += wt * (acc + 0.5 * out);
            bound += wt * (err + 0.5 * out);
        }
    }
    Ok((value, bound))
}

/// Monte Carlo side of the representation of `G_{*,T}(f)^2(x)`.
#[derive(Debug, Clone, Serialize)]
pub struct RepresentationRun {
    pub estimate: f64,
    pub standard_error: f64,
    pub endpoint_hits: u64,
    pub paths: u64,
}

pub fn run_representation(law: &TransitionLaw, f: &LatticeFunction, horizon: f64, x: i64, window_z: Window, n_paths_per_start: u64, seed: u64) -> Result<RepresentationRun> {
    let kernel = FractionalKernel::shared(law.kernel().order())?;
    let mut cache = OrbitCache::new(kernel, f, horizon)?;
    let mut estimate = 0.0;
    let mut var = 0.0;
    let mut hits = 0;
    let mut index = 0u64;
    for z in window_z.iter() {
        let mut est = MeanEstimate::default();
        for _ in 0..n_paths_per_start {
            let path = sample_path_indexed(law, z, horizon, seed, index)?;
            index += 1;
            if path.end() == x {
                hits += 1;
                est.push(martingale_functionals(&path, &mut cache)?.angle_bracket);
            } else {
                est.push(0.0);
            }
        }
        estimate += est.mean;
        var += est.standard_error().powi(2);
    }
    Ok(RepresentationRun {
        estimate,
        standard_error: var.sqrt(),
        endpoint_hits: hits,
        paths: index,
    })
}

/// Compares `sum_z E_z[<M>_T 1{X_T = x}]` over `window_z` with the
/// deterministic `G_{*,T}(f)^2(x)`. The allowance is `3 SE` plus the
/// computed contribution of starts outside `window_z`. Too few endpoint
/// hits yield [`Error::Inconclusive`].
pub fn verify_gstar_representation(
    law: &TransitionLaw,
    f: &LatticeFunction,
    horizon: f64,
    x: i64,
    window_z: Window,
    n_paths_per_start: u64,
    seed: u64,
) -> Result<VerificationReport> {
    let run = run_representation(law, f, horizon, x, window_z, n_paths_per_start, seed)?;
    let kernel = FractionalKernel::shared(law.kernel().order())?;
    let sq = SquareFunctions::from_parts(kernel.clone(), SemigroupEvaluator::fractional(kernel.order())?)?;
    let kind = SquareKind::Gstar { horizon: Some(horizon) };
    let p = sq.compute(f, kind, Window::new(x, x)?)?;
    let full = p.square(x);
    if f.values().iter().all(|v| *v == 0.0) {
        return Ok(VerificationReport::new("gstar_representation", run.estimate.abs() + full.abs(), 0.0)
            .param("T", horizon)
            .param("x", x));
    }
    if run.endpoint_hits < 100 {
        return Err(Error::Inconclusive(format!(
            "only {} of {} paths ended at x = {x}",
            run.endpoint_hits, run.paths
        )));
    }
    let (restricted, restricted_err) = restricted_gstar_square(kernel, f, horizon, x, window_z, 1024)?;
    let truncation = (full - restricted).max(0.0) + restricted_err + p.error(x);
    let allowance = 3.0 * run.standard_error + truncation;
    let dev = (run.estimate - full).abs();
    let mut table = ErrorTable::default();
    table.push("Monte Carlo vs G_{*,T}^2", run.estimate, full, dev / allowance);
    table.push(
        "Monte Carlo vs restricted starts",
        run.estimate,
        restricted,
        (run.estimate - restricted).abs() / (3.0 * run.standard_error + restricted_err),
    );
    Ok(table
        .into_report("gstar_representation", 1.0)
        .param("s", law.kernel().order())
        .param("T", horizon)
        .param("x", x)
        .param("window_z", format!("[{}, {}]", window_z.lo(), window_z.hi()))
        .param("paths_per_start", n_paths_per_start)
        .param("seed", seed)
        .note(format!(
            "estimate {:.6e} +- {:.2e} (SE), {} endpoint hits; truncation allowance {:.2e}",
            run.estimate, run.standard_error, run.endpoint_hits, truncation
        )))
}

/// Aggregate jump statistics over many paths.
#[derive(Debug, Clone, Serialize)]
pub struct JumpStatistics {
    pub paths: u64,
    pub count: MeanEstimate,
    pub expected_count: f64,
    /// Chi-square statistic of the jump counts against the Poisson law.
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Frequency of `|J| = 1` among first jumps.
    pub unit_jump: MeanEstimate,
    pub unit_jump_expected: f64,
    /// Total variation between first-jump displacements and `p(0, .)`,
    /// on the atoms `|m| <= 20` and the two tails.
    pub total_variation: f64,
}

pub fn jump_statistics(law: &TransitionLaw, horizon: f64, n_paths: u64, seed: u64) -> Result<JumpStatistics> {
    let lambda = law.rate() * horizon;
    let kmax = ((lambda + 8.0 * lambda.sqrt()).ceil() as usize).max(6);
    let mut counts = vec![0u64; kmax + 1];
    let mut count = MeanEstimate::default();
    let mut unit = MeanEstimate::default();
    const ATOMS: i64 = 20;
    let mut disp = vec![0u64; 2 * ATOMS as usize + 3];
    let mut first_jumps = 0u64;
    for i in 0..n_paths {
        let path = sample_path_indexed(law, 0, horizon, seed, i)?;
        let n = path.jump_count();
        counts[n.min(kmax)] += 1;
        count.push(n as f64);
        if n > 0 {
            let j = path.states[1] - path.states[0];
            unit.push(f64::from(u8::from(j.abs() == 1)));
            let bucket = if j < -ATOMS {
                0
            } else if j > ATOMS {
                disp.len() - 1
            } else {
                (j + ATOMS + 1) as usize
            };
            disp[bucket] += 1;
            first_jumps += 1;
        }
    }
    let poisson = Poisson::new(lambda).map_err(|e| Error::param("lambda", e.to_string()))?;
    // pool cells so that every expected count is at least 5
    let nf = n_paths as f64;
    let mut chi = 0.0;
    let mut cells = 0usize;
    let (mut obs, mut exp) = (0.0, 0.0);
    for k in 0..=kmax {
        let p = if k == kmax { 1.0 - (0..kmax).map(|j| poisson.pmf(j as u64)).sum::<f64>() } else { poisson.pmf(k as u64) };
        obs += counts[k] as f64;
        exp += nf * p;
        if exp >= 5.0 && (k == kmax || nf * (1.0 - (0..=k).map(|j| poisson.pmf(j as u64)).sum::<f64>()) >= 5.0) {
            chi += (obs - exp).powi(2) / exp;
            cells += 1;
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 {
        chi += (obs - exp).powi(2) / exp;
        cells += 1;
    }
    let dof = cells.saturating_sub(1).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).map_err(|e| Error::param("dof", e.to_string()))?.cdf(chi);
    let norm = law.kernel().l1_norm();
    let mut tv = 0.0;
    let fj = first_jumps.max(1) as f64;
    let tail = law.kernel().tail(ATOMS as u64) / norm;
    tv += (disp[0] as f64 / fj - tail).abs() + (disp[disp.len() - 1] as f64 / fj - tail).abs();
    for m in -ATOMS..=ATOMS {
        let p = if m == 0 { 0.0 } else { law.probability(0, m) };
        tv += (disp[(m + ATOMS + 1) as usize] as f64 / fj - p).abs();
    }
    Ok(JumpStatistics {
        paths: n_paths,
        count,
        expected_count: lambda,
        chi_square: chi,
        degrees_of_freedom: dof,
        p_value,
        unit_jump: unit,
        unit_jump_expected: 2.0 * law.kernel().value(1) / norm,
        total_variation: 0.5 * tv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(s: f64) -> TransitionLaw {
        TransitionLaw::new(FractionalKernel::shared(s).unwrap())
    }

    #[test]
    fn paths_are_reproducible_and_well_formed() {
        let l = law(0.5);
        let a = sample_path(&l, 3, 5.0, 42).unwrap();
        let b = sample_path(&l, 3, 5.0, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_path_indexed(&l, 3, 5.0, 42, 1).unwrap();
        assert_ne!(a, c);
        for p in [&a, &c] {
            assert_eq!(p.states[0], 3);
            assert_eq!(p.states.len(), p.jump_times.len() + 1);
            assert!(p.jump_times.windows(2).all(|w| w[0] < w[1]));
            assert!(p.jump_times.iter().all(|t| *t > 0.0 && *t <= 5.0));
            assert!(p.states.windows(2).all(|w| w[0] != w[1]));
        }
        assert!(sample_path(&l, 0, 0.0, 1).is_err());
    }

    #[test]
    fn occupation_integral_is_exact() {
        let p = JumpPath {
            start: 0,
            horizon: 2.0,
            jump_times: vec![0.5, 1.5],
            states: vec![0, 3, 0],
            seed: 0,
            index: 0,
        };
        assert_eq!(p.occupation_integral(|x| if x == 0 { 1.0 } else { 10.0 }), 1.0 + 10.0);
    }

    #[test]
    fn orbit_cache_matches_direct_evaluation() {
        let kernel = FractionalKernel::shared(0.5).unwrap();
        let ev = SemigroupEvaluator::fractional(0.5).unwrap();
        let f = LatticeFunction::delta(0);
        let mut cache = OrbitCache::new(kernel.clone(), &f, 1.0).unwrap();
        let sq = SquareFunctions::from_parts(kernel, ev.clone()).unwrap();
        for x in [0i64, 1, -7, 50, 10_000] {
            for sigma in [0.0, 0.3, 1.0] {
                let want = if sigma == 0.0 { f.get(x) } else { ev.kernel(sigma, x).unwrap() };
                let got = cache.value(x, sigma).unwrap();
                assert!((got - want).abs() < 1e-12, "x={x} sigma={sigma}: {got} {want}");
            }
            // int_0^1 |grad P_r f|^2(x) dr against the time-quadrature engine
            let p = sq.compute(&f, SquareKind::Gstar { horizon: Some(1e-300) }, Window::new(0, 0).unwrap());
            assert!(p.is_ok());
        }
        let g1 = cache.energy(0, 0.0, 1.0).unwrap();
        let quad = crate::squarefn::TimeQuadrature::finite(1.0).unwrap();
        let w = Window::new(-4096, 4096).unwrap();
        let orbit = FreeOrbit::new(cache.kernel.as_ref(), &ev, &f, w).unwrap();
        let geo = WindowGeometry::new(cache.kernel.as_ref(), w);
        let mut want = 0.0;
        for &(t, wt) in quad.nodes() {
            want += wt * evaluate(&geo, &orbit.snapshot(t).unwrap(), Integrand::Full, 4096..4097)[0].0;
        }
        assert!((g1 - want).abs() < 1e-10, "{g1} {want}");
    }

    #[test]
    fn zero_function_has_zero_functionals() {
        let l = law(0.5);
        let r = verify_compensator(&l, &LatticeFunction::zeros(Window::new(0, 0).unwrap()), 1.0, 200, 7).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_abs_error, 0.0);
    }

    #[test]
    fn mean_estimate_matches_closed_form() {
        let mut m = MeanEstimate::default();
        for v in [1.0, 2.0, 3.0, 4.0] {
            m.push(v);
        }
        assert_eq!(m.mean, 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn small_compensator_run_is_consistent() {
        let l = law(0.5);
        let r = verify_compensator(&l, &LatticeFunction::delta(0), 1.0, 5000, 11).unwrap();
        assert!(r.passed, "{}", r.summary());
    }
}
