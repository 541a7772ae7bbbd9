// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! The semigroup of `L_U = (-Delta)^s + U` for bounded `U >= 0`.
//!
//! The generator is restricted to a window and every jump that leaves the
//! window kills the walk: the diagonal keeps the full `||K||_1 + U(x)`.
//! The truncated matrix is then the generator of a sub-Markovian semigroup
//! and its orbit sits below the free one, so truncation only loses mass.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{check_q_low, Error, Result};
use crate::gradients::{gamma_q_schrodinger, grad_modified_sq};
use crate::jumpsim::{sample_path_indexed, MeanEstimate};
use crate::kernel::{FractionalKernel, TransitionLaw};
use crate::lattice::{LatticeFunction, Window};
use crate::report::{ErrorTable, VerificationReport};
use crate::semigroup::SemigroupEvaluator;
use crate::squarefn::{integrate_orbit, Integrand, Orbit, Snapshot, SquareProfile, TimeQuadrature, DEFAULT_TAIL_TOLERANCE};

/// Half-width of the default window.
pub const DEFAULT_RADIUS: i64 = 100;

/// How `e^{-t A}` is formed for the truncated generator `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpMethod {
    /// `V diag(e^{-t lambda}) V^T` from one symmetric eigendecomposition.
    Spectral,
    /// Scaling and squaring with a Padé approximant.
    Pade,
}

/// Killed semigroup `e^{-t L_U}` on a window.
#[derive(Debug, Clone)]
pub struct SchrodingerEvaluator {
    kernel: Arc<FractionalKernel>,
    potential: LatticeFunction,
    window: Window,
    generator: DMatrix<f64>,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
    /// Eigendecomposition of the truncated generator with `U = 0`.
    free: SymmetricEigen<f64, nalgebra::Dyn>,
    spectral: SemigroupEvaluator,
}

fn truncated_generator(kernel: &FractionalKernel, potential: &LatticeFunction, window: Window) -> DMatrix<f64> {
    let n = window.width();
    let norm = kernel.l1_norm();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            norm + potential.get(window.lo() + i as i64)
        } else {
            -kernel.value(i as i64 - j as i64)
        }
    })
}

impl SchrodingerEvaluator {
    /// Evaluator on `[-100, 100]`.
    pub fn new(kernel: Arc<FractionalKernel>, potential: LatticeFunction) -> Result<Self> {
        Self::with_window(kernel, potential, Window::centered(0, DEFAULT_RADIUS)?)
    }

    pub fn with_window(kernel: Arc<FractionalKernel>, potential: LatticeFunction, window: Window) -> Result<Self> {
        if !potential.is_nonnegative() {
            return Err(Error::InvalidFunction("potential must be nonnegative".into()));
        }
        let generator = truncated_generator(&kernel, &potential, window);
        let free_gen = truncated_generator(&kernel, &LatticeFunction::zeros(Window::new(0, 0)?), window);
        let eigen = SymmetricEigen::new(generator.clone());
        let free = SymmetricEigen::new(free_gen);
        let spectral = SemigroupEvaluator::fractional(kernel.order())?;
        Ok(SchrodingerEvaluator {
            kernel,
            potential,
            window,
            generator,
            eigen,
            free,
            spectral,
        })
    }

    pub fn kernel(&self) -> &Arc<FractionalKernel> {
        &self.kernel
    }

    pub fn potential(&self) -> &LatticeFunction {
        &self.potential
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// The truncated generator `L + U` with killing outside the window.
    pub fn generator_matrix(&self) -> &DMatrix<f64> {
        &self.generator
    }

    /// Bottom of the spectrum of the truncated generator. Positive for any
    /// finite window since every row loses kernel mass to the outside.
    pub fn lambda_min(&self) -> f64 {
        self.eigen.eigenvalues.min()
    }

    fn check_time(t: f64) -> Result<()> {
        if t.is_finite() && t >= 0.0 {
            Ok(())
        } else {
            Err(Error::param("t", format!("time must be finite and nonnegative, got {t}")))
        }
    }

    fn to_vector(&self, f: &LatticeFunction) -> Result<DVector<f64>> {
        let fw = f.window();
        let outside = f.iter().any(|(x, v)| v != 0.0 && !self.window.contains(x));
        if outside {
            return Err(Error::param("f", format!("support must lie in [{}, {}]", self.window.lo(), self.window.hi())));
        }
        let _ = fw;
        Ok(DVector::from_iterator(self.window.width(), self.window.iter().map(|x| f.get(x))))
    }

    fn from_vector(&self, v: &DVector<f64>) -> LatticeFunction {
        LatticeFunction::from_values(self.window.lo(), v.iter().copied().collect()).expect("finite semigroup values")
    }

    /// `e^{-tA}` as a dense matrix.
    pub fn matrix_exponential(&self, t: f64, method: ExpMethod) -> Result<DMatrix<f64>> {
        Self::check_time(t)?;
        Ok(match method {
            ExpMethod::Spectral => {
                let v = &self.eigen.eigenvectors;
                let d = self.eigen.eigenvalues.map(|l| (-t * l).exp());
                v * DMatrix::from_diagonal(&d) * v.transpose()
            }
            ExpMethod::Pade => (&self.generator * -t).exp(),
        })
    }

    /// `P_t^U f` on the window.
    pub fn apply(&self, t: f64, f: &LatticeFunction) -> Result<LatticeFunction> {
        Self::check_time(t)?;
        let fv = self.to_vector(f)?;
        Ok(self.from_vector(&spectral_apply(&self.eigen, t, &fv)))
    }

    pub fn apply_with(&self, t: f64, f: &LatticeFunction, method: ExpMethod) -> Result<LatticeFunction> {
        match method {
            ExpMethod::Spectral => self.apply(t, f),
            ExpMethod::Pade => {
                let fv = self.to_vector(f)?;
                Ok(self.from_vector(&(self.matrix_exponential(t, method)? * fv)))
            }
        }
    }

    /// Pointwise bound on `|P_t^U f - P_t^{U,W} f|` on the window, where the
    /// second term is the killed orbit. Walks that stay in the window see the
    /// same weights in both, so the gap is at most the mass of `|f|` carried
    /// by walks that leave: `P_t |f| - P_t^{0,W} |f|`.
    pub fn truncation_bound(&self, t: f64, f: &LatticeFunction) -> Result<LatticeFunction> {
        Self::check_time(t)?;
        let af = f.map(f64::abs)?;
        let free = self.spectral.apply(t, &af, self.window)?;
        let killed = spectral_apply(&self.free, t, &self.to_vector(&af)?);
        let vals = free
            .values()
            .iter()
            .zip(killed.iter())
            .map(|(a, b)| (a - b).max(0.0) + 1e-13 * af.sup_norm())
            .collect();
        LatticeFunction::from_values(self.window.lo(), vals)
    }

    /// Orbit `t -> P_t^U f` for the square-function engine. Off the window
    /// the orbit is zero, matching the killed model.
    pub(crate) fn orbit(&self, f: &LatticeFunction) -> Result<SchrodingerOrbit<'_>> {
        let fv = self.to_vector(f)?;
        let coeffs = self.eigen.eigenvectors.transpose() * fv;
        let potential = self.window.iter().map(|x| self.potential.get(x)).collect();
        Ok(SchrodingerOrbit {
            evaluator: self,
            coeffs,
            potential,
        })
    }

    /// Time rule whose tail beyond `t_max` is certified from
    /// `sup |P_t^U f| <= e^{-lambda t} ||f||_2` and a sup-norm bound on the
    /// integrand: `c M^2` with `c = 4||K|| + ||U||` for the modified gradient
    /// and `c = q||K|| + (q-1)||U||` for `Gamma_{q,U}`.
    pub fn quadrature(&self, f: &LatticeFunction, integrand_constant: f64, tolerance: f64) -> Result<TimeQuadrature> {
        let lambda = self.lambda_min();
        let l2sq: f64 = f.values().iter().map(|v| v * v).sum();
        let c = integrand_constant * l2sq / (2.0 * lambda);
        TimeQuadrature::certified_with(|t| c * (-2.0 * lambda * t).exp(), tolerance)
    }

    fn potential_sup(&self) -> f64 {
        self.window.iter().map(|x| self.potential.get(x)).fold(0.0, f64::max)
    }
}

fn spectral_apply(eigen: &SymmetricEigen<f64, nalgebra::Dyn>, t: f64, f: &DVector<f64>) -> DVector<f64> {
    let v = &eigen.eigenvectors;
    let mut c = v.transpose() * f;
    for (ci, l) in c.iter_mut().zip(eigen.eigenvalues.iter()) {
        *ci *= (-t * l).exp();
    }
    v * c
}

pub(crate) struct SchrodingerOrbit<'a> {
    evaluator: &'a SchrodingerEvaluator,
    coeffs: DVector<f64>,
    potential: Vec<f64>,
}

impl Orbit for SchrodingerOrbit<'_> {
    fn window(&self) -> Window {
        self.evaluator.window
    }

    fn kernel(&self) -> &FractionalKernel {
        &self.evaluator.kernel
    }

    fn snapshot(&self, t: f64) -> Result<Snapshot> {
        let e = &self.evaluator.eigen;
        let c = DVector::from_iterator(
            self.coeffs.len(),
            self.coeffs.iter().zip(e.eigenvalues.iter()).map(|(c, l)| c * (-t * l).exp()),
        );
        let u = &e.eigenvectors * c;
        Ok(Snapshot {
            u: u.iter().copied().collect(),
            lu: None,
            eps: 0.0,
            m2_out: 0.0,
            potential: Some(self.potential.clone()),
            row: Vec::new(),
        })
    }
}

/// `P_t^U f` through a fresh evaluator on `[-100, 100]`.
pub fn apply_schrodinger_semigroup(evaluator: &SchrodingerEvaluator, t: f64, f: &LatticeFunction) -> Result<LatticeFunction> {
    evaluator.apply(t, f)
}

/// `G~_U(f)` at `points`, with the tail certified to `tolerance`.
pub fn square_gtilde_schrodinger(evaluator: &SchrodingerEvaluator, f: &LatticeFunction, points: Window, tolerance: f64) -> Result<SquareProfile> {
    let c = 4.0 * evaluator.kernel.l1_norm() + evaluator.potential_sup();
    let quad = evaluator.quadrature(f, c, tolerance)?;
    crate::squarefn::square_gtilde_u(evaluator, f, points, &quad)
}

/// `(int_0^inf Gamma_{q,U}(P_t^U f) dt)^(1/2)` at the points of `points`.
pub fn square_hq_schrodinger(
    evaluator: &SchrodingerEvaluator,
    f: &LatticeFunction,
    q: f64,
    points: Window,
    quad: Option<&TimeQuadrature>,
) -> Result<SquareProfile> {
    check_q_low(q)?;
    if !f.is_nonnegative() {
        return Err(Error::InvalidFunction("f must be nonnegative".into()));
    }
    let owned;
    let quad = match quad {
        Some(q) => q,
        None => {
            let c = q * evaluator.kernel.l1_norm() + (q - 1.0) * evaluator.potential_sup();
            owned = evaluator.quadrature(f, c, DEFAULT_TAIL_TOLERANCE)?;
            &owned
        }
    };
    let orbit = evaluator.orbit(f)?;
    integrate_orbit(&orbit, Integrand::GammaWithPotential(q), points, quad, format!("Hq,U(q={q})"))
}

/// Checks `0 <= P_t^U f <= P_t f` on the window for every `t` in `t_grid`.
/// The error column counts violations beyond a rounding slack of
/// `1e-12 ||f||_inf`; the report passes with none.
pub fn verify_domination(evaluator: &SchrodingerEvaluator, f: &LatticeFunction, t_grid: &[f64]) -> Result<VerificationReport> {
    if !f.is_nonnegative() {
        return Err(Error::InvalidFunction("f must be nonnegative".into()));
    }
    let slack = 1e-12 * f.sup_norm().max(f64::MIN_POSITIVE);
    let mut violations = 0usize;
    let mut worst_low: f64 = 0.0;
    let mut worst_high: f64 = 0.0;
    let mut strict_gap: f64 = 0.0;
    for &t in t_grid {
        let pu = evaluator.apply(t, f)?;
        let p = evaluator.spectral.apply(t, f, evaluator.window)?;
        for ((_, a), b) in pu.iter().zip(p.values()) {
            worst_low = worst_low.min(a);
            worst_high = worst_high.max(a - b);
            strict_gap = strict_gap.max(b - a);
            if a < -slack || a > b + slack {
                violations += 1;
            }
        }
    }
    Ok(VerificationReport::new("schrodinger_domination", violations as f64, 0.0)
        .param("s", evaluator.kernel.order())
        .param("window", format!("[{}, {}]", evaluator.window.lo(), evaluator.window.hi()))
        .param("t_grid", format!("{t_grid:?}"))
        .note(format!(
            "min P^U f = {worst_low:.3e}, max (P^U f - P f) = {worst_high:.3e}, max gap P f - P^U f = {strict_gap:.3e}"
        )))
}

/// `P_t^c = e^{-ct} P_t` for a constant potential on the window, against
/// the same truncation with `U = 0`.
pub fn verify_constant_potential(kernel: Arc<FractionalKernel>, c: f64, f: &LatticeFunction, t_grid: &[f64], window: Window, tolerance: f64) -> Result<VerificationReport> {
    let constant = LatticeFunction::from_fn(window, |_| c)?;
    let with_c = SchrodingerEvaluator::with_window(kernel.clone(), constant, window)?;
    let without = SchrodingerEvaluator::with_window(kernel.clone(), LatticeFunction::zeros(Window::new(0, 0)?), window)?;
    let mut table = ErrorTable::default();
    for &t in t_grid {
        let a = with_c.apply(t, f)?;
        let b = without.apply(t, f)?.scale((-c * t).exp());
        for ((x, va), vb) in a.iter().zip(b.values()) {
            table.push(format!("t={t} x={x}"), va, *vb, (va - vb).abs());
        }
    }
    Ok(table
        .into_report("schrodinger_constant_potential", tolerance)
        .param("s", kernel.order())
        .param("c", c))
}

/// Monte Carlo estimate of `E_start[exp(-int_0^T U(X_r) dr) f(X_T)]` on the
/// untruncated lattice.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FeynmanKacEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub paths: u64,
}

pub fn feynman_kac_estimate(
    law: &TransitionLaw,
    potential: &LatticeFunction,
    f: &LatticeFunction,
    start: i64,
    horizon: f64,
    n_paths: u64,
    seed: u64,
) -> Result<FeynmanKacEstimate> {
    if !potential.is_nonnegative() {
        return Err(Error::InvalidFunction("potential must be nonnegative".into()));
    }
    let mut est = MeanEstimate::default();
    for i in 0..n_paths {
        let path = sample_path_indexed(law, start, horizon, seed, i)?;
        let fx = f.get(path.end());
        if fx == 0.0 {
            est.push(0.0);
            continue;
        }
        let weight = (-path.occupation_integral(|x| potential.get(x))).exp();
        est.push(weight * fx);
    }
    Ok(FeynmanKacEstimate {
        estimate: est.mean,
        standard_error: est.standard_error(),
        paths: n_paths,
    })
}

/// Feynman–Kac against the killed matrix semigroup at `start`. The
/// allowance is `3 SE` plus the truncation bound at `start`.
pub fn verify_feynman_kac(evaluator: &SchrodingerEvaluator, f: &LatticeFunction, start: i64, horizon: f64, n_paths: u64, seed: u64) -> Result<VerificationReport> {
    let law = TransitionLaw::new(evaluator.kernel.clone());
    let fk = feynman_kac_estimate(&law, &evaluator.potential, f, start, horizon, n_paths, seed)?;
    let exact = evaluator.apply(horizon, f)?.get(start);
    let bias = evaluator.truncation_bound(horizon, f)?.get(start);
    let allowance = 3.0 * fk.standard_error + bias;
    let dev = (fk.estimate - exact).abs();
    let err = if dev == 0.0 { 0.0 } else { dev / allowance };
    Ok(VerificationReport::new("schrodinger_feynman_kac", err, 1.0)
        .param("s", evaluator.kernel.order())
        .param("T", horizon)
        .param("start", start)
        .param("paths", n_paths)
        .param("seed", seed)
        .note(format!(
            "Monte Carlo {:.6e} +- {:.2e}, matrix {exact:.6e}, truncation bound {bias:.2e}; error in units of the allowance",
            fk.estimate, fk.standard_error
        )))
}

/// Doubles the window until `P_t^U f` on the original window moves by less
/// than `tolerance`, up to `max_doublings` times.
pub fn window_convergence(
    kernel: Arc<FractionalKernel>,
    potential: &LatticeFunction,
    f: &LatticeFunction,
    t: f64,
    window: Window,
    tolerance: f64,
    max_doublings: usize,
) -> Result<VerificationReport> {
    let mut current = SchrodingerEvaluator::with_window(kernel.clone(), potential.clone(), window)?.apply(t, f)?;
    let mut w = window;
    let mut shift = f64::INFINITY;
    let mut steps = 0;
    for _ in 0..max_doublings {
        let half = (w.width() as i64) / 2 + 1;
        w = w.expand(half)?;
        let next = SchrodingerEvaluator::with_window(kernel.clone(), potential.clone(), w)?
            .apply(t, f)?
            .restrict(window);
        shift = current.iter().zip(next.values()).map(|((_, a), b)| (a - b).abs()).fold(0.0, f64::max);
        current = next;
        steps += 1;
        if shift < tolerance {
            break;
        }
    }
    Ok(VerificationReport::new("schrodinger_window_convergence", shift, tolerance)
        .param("s", kernel.order())
        .param("t", t)
        .param("final_window", format!("[{}, {}]", w.lo(), w.hi()))
        .param("doublings", steps))
}

/// `|grad~ u|^2 + U u^2 <= 2/(q(q-1)) Gamma_{q,U}(u)` for `u = P_t^U f` at
/// every point of the window and every `t` in `t_grid`. The error column
/// counts violations.
pub fn check_chain_inequality(evaluator: &SchrodingerEvaluator, f: &LatticeFunction, q: f64, t_grid: &[f64]) -> Result<VerificationReport> {
    check_q_low(q)?;
    let c = 2.0 / (q * (q - 1.0));
    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let u = evaluator.apply(t, f)?.map(|v| v.max(0.0))?;
        for x in evaluator.window.iter() {
            let ux = u.get(x);
            let lhs = grad_modified_sq(&evaluator.kernel, &u, x) + evaluator.potential.get(x) * ux * ux;
            let rhs = c * gamma_q_schrodinger(&evaluator.kernel, &evaluator.potential, &u, q, x)?;
            let scale = 1e-12 * (lhs.abs() + rhs.abs()) + 1e-300;
            if lhs > rhs + scale {
                violations += 1;
            }
            if rhs > 0.0 {
                worst = worst.max(lhs / rhs);
            }
        }
    }
    Ok(VerificationReport::new("schrodinger_chain_inequality", violations as f64, 0.0)
        .param("q", q)
        .param("s", evaluator.kernel.order())
        .note(format!("largest lhs / rhs = {worst:.6}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn evaluator(s: f64, potential: LatticeFunction, radius: i64) -> SchrodingerEvaluator {
        SchrodingerEvaluator::with_window(FractionalKernel::shared(s).unwrap(), potential, Window::centered(0, radius).unwrap()).unwrap()
    }

    fn zero() -> LatticeFunction {
        LatticeFunction::zeros(Window::new(0, 0).unwrap())
    }

    #[test]
    fn spectral_and_pade_exponentials_agree() {
        let e = evaluator(0.5, LatticeFunction::delta(0).scale(2.0), 30);
        for t in [0.1, 1.0, 7.0] {
            let a = e.matrix_exponential(t, ExpMethod::Spectral).unwrap();
            let b = e.matrix_exponential(t, ExpMethod::Pade).unwrap();
            assert!((a - b).amax() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn semigroup_matrix_is_symmetric_sub_markov() {
        let e = evaluator(0.25, LatticeFunction::from_fn(Window::new(-3, 3).unwrap(), |x| (x * x) as f64 * 0.1).unwrap(), 40);
        let p = e.matrix_exponential(0.7, ExpMethod::Spectral).unwrap();
        assert!((&p - p.transpose()).amax() < 1e-12);
        assert!(p.min() > -1e-14);
        for r in 0..p.nrows() {
            let sum: f64 = p.row(r).sum();
            assert!(sum >= 0.0 && sum <= 1.0 + 1e-12, "row {r}: {sum}");
        }
        assert!(e.lambda_min() > 0.0);
    }

    #[test]
    fn zero_time_is_identity_and_negative_time_rejected() {
        let e = evaluator(0.5, zero(), 20);
        let f = LatticeFunction::from_fn(Window::new(-2, 2).unwrap(), |x| x as f64).unwrap();
        let g = e.apply(0.0, &f).unwrap();
        for x in -20..=20 {
            assert!((g.get(x) - f.get(x)).abs() < 1e-13);
        }
        assert!(e.apply(-1.0, &f).is_err());
        assert!(e.apply(1.0, &LatticeFunction::delta(50)).is_err());
    }

    #[test]
    fn zero_potential_matches_free_semigroup_within_truncation_bound() {
        let e = evaluator(0.5, zero(), 100);
        let f = LatticeFunction::delta(0);
        let killed = e.apply(1.0, &f).unwrap();
        let free = SemigroupEvaluator::fractional(0.5).unwrap().apply(1.0, &f, e.window()).unwrap();
        let bound = e.truncation_bound(1.0, &f).unwrap();
        for x in e.window().iter() {
            let gap = free.get(x) - killed.get(x);
            assert!(gap >= -1e-13 && gap <= bound.get(x) + 1e-13, "x={x}: {gap}");
        }
        // the gap at the centre is a small fraction of the value
        assert!(bound.get(0) < 1e-2 * free.get(0));
    }

    #[test]
    fn constant_potential_factorizes() {
        let k = FractionalKernel::shared(0.75).unwrap();
        let f = LatticeFunction::from_fn(Window::new(-4, 4).unwrap(), |x| 1.0 + 0.1 * x as f64).unwrap();
        let r = verify_constant_potential(k, 0.7, &f, &[0.1, 1.0, 3.0], Window::centered(0, 50).unwrap(), 1e-8).unwrap();
        assert!(r.passed, "{}", r.summary());
    }

    #[test]
    fn strict_domination_for_point_potential() {
        let e = evaluator(0.5, LatticeFunction::delta(0).scale(5.0), 100);
        let f = LatticeFunction::delta(0);
        let r = verify_domination(&e, &f, &[0.1, 1.0]).unwrap();
        assert!(r.passed, "{}", r.summary());
        let pu = e.apply(1.0, &f).unwrap().get(0);
        let p = SemigroupEvaluator::fractional(0.5).unwrap().kernel(1.0, 0).unwrap();
        assert!(pu < 0.5 * p, "{pu} {p}");
    }

    #[test]
    fn feynman_kac_with_zero_potential_matches_semigroup() {
        let k = FractionalKernel::shared(0.5).unwrap();
        let law = TransitionLaw::new(k);
        let est = feynman_kac_estimate(&law, &zero(), &LatticeFunction::delta(0), 0, 1.0, 20_000, 5).unwrap();
        let want = SemigroupEvaluator::fractional(0.5).unwrap().kernel(1.0, 0).unwrap();
        assert!((est.estimate - want).abs() <= 3.0 * est.standard_error, "{est:?} {want}");
    }

    #[test]
    fn feynman_kac_with_constant_potential_scales() {
        let k = FractionalKernel::shared(0.5).unwrap();
        let law = TransitionLaw::new(k);
        let c = 0.8;
        let u = LatticeFunction::from_fn(Window::centered(0, 1000).unwrap(), |_| c).unwrap();
        let est = feynman_kac_estimate(&law, &u, &LatticeFunction::delta(0), 0, 1.0, 20_000, 9).unwrap();
        let want = (-c).exp() * SemigroupEvaluator::fractional(0.5).unwrap().kernel(1.0, 0).unwrap();
        // paths leaving [-1000, 1000] see U = 0 there, but such paths cannot
        // return to 0 except with negligible probability at this count
        assert!((est.estimate - want).abs() <= 3.0 * est.standard_error, "{est:?} {want}");
    }

    #[test]
    fn hq_with_zero_potential_matches_free_window_model() {
        let e = evaluator(0.5, LatticeFunction::delta(0), 30);
        let f = LatticeFunction::from_fn(Window::new(-2, 2).unwrap(), |x| 1.0 / (1.0 + (x * x) as f64)).unwrap();
        let p = square_hq_schrodinger(&e, &f, 2.0, Window::new(-3, 3).unwrap(), None).unwrap();
        let g = square_gtilde_schrodinger(&e, &f, Window::new(-3, 3).unwrap(), 1e-9).unwrap();
        for x in -3..=3 {
            // at q = 2, Gamma_{2,U}(u) = |grad u|^2 + U u^2 >= |grad~ u|^2 + U u^2
            assert!(p.square(x) + 1e-9 >= g.square(x), "x={x}");
            assert!(p.square(x) > 0.0);
        }
    }

    #[test]
    fn chain_inequality_holds() {
        let e = evaluator(0.25, LatticeFunction::from_fn(Window::new(-2, 2).unwrap(), |x| 1.0 + x as f64 * 0.3).unwrap(), 25);
        let f = LatticeFunction::from_fn(Window::new(-3, 3).unwrap(), |x| (x + 4) as f64).unwrap();
        for q in [1.1, 1.5, 2.0] {
            let r = check_chain_inequality(&e, &f, q, &[0.05, 0.5, 2.0]).unwrap();
            assert!(r.passed, "{}", r.summary());
        }
    }

    #[test]
    fn window_doubling_converges() {
        let k = FractionalKernel::shared(0.75).unwrap();
        let r = window_convergence(k, &LatticeFunction::delta(0), &LatticeFunction::delta(0), 1.0, Window::centered(0, 20).unwrap(), 1e-4, 4).unwrap();
        assert!(r.passed, "{}", r.summary());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn domination_and_contraction(
            u in proptest::collection::vec(0.0f64..3.0, 9),
            f in proptest::collection::vec(0.0f64..1.0, 7),
            t in 0.01f64..5.0,
        ) {
            let pot = LatticeFunction::from_values(-4, u).unwrap();
            let f = LatticeFunction::from_values(-3, f).unwrap();
            let e = evaluator(0.5, pot, 25);
            let r = verify_domination(&e, &f, &[t]).unwrap();
            prop_assert!(r.passed, "{}", r.summary());
            let g = e.apply(t, &f).unwrap();
            for q in [1.0, 2.0] {
                prop_assert!(crate::lq_norm(&g, q).unwrap() <= crate::lq_norm(&f, q).unwrap() * (1.0 + 1e-12));
            }
            prop_assert!(g.sup_norm() <= f.sup_norm() * (1.0 + 1e-12));
        }
    }
}
