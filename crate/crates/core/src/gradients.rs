// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! Gradient moduli and the pseudo-gradient `Gamma_q` for finitely supported
//! functions. Values outside the stored window are zero, so every sum over
//! the far field collapses to `f(x)^2` times an exact kernel tail.

use crate::error::{check_q_low, Error, Result};
use crate::kernel::FractionalKernel;
use crate::lattice::{LatticeFunction, Window};
use crate::quadrature::GaussLegendre;
use crate::report::{PointError, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientKind {
    Full,
    Modified,
    Difference,
}

/// Kernel mass at distances reaching outside `w` from `x`, for `x` in `w`.
pub(crate) fn outside_mass(kernel: &FractionalKernel, w: Window, x: i64) -> f64 {
    kernel.tail((x - w.lo()) as u64) + kernel.tail((w.hi() - x) as u64)
}

/// `|grad f|^2(x) = sum_y K_s(y-x) (f(x) - f(y))^2`.
pub fn grad_full_sq(kernel: &FractionalKernel, f: &LatticeFunction, x: i64) -> f64 {
    let w = f.window();
    let vals = f.values();
    let table = kernel.table();
    let k = |d: i64| -> f64 {
        let d = d.unsigned_abs() as usize;
        if d < table.len() {
            table[d]
        } else {
            kernel.value(d as i64)
        }
    };
    let fx = f.get(x);
    let mut acc = 0.0;
    for (i, v) in vals.iter().enumerate() {
        let y = w.lo() + i as i64;
        if y != x {
            let diff = fx - v;
            acc += k(y - x) * diff * diff;
        }
    }
    if w.contains(x) {
        acc += fx * fx * outside_mass(kernel, w, x);
    }
    acc
}

pub fn grad_full(kernel: &FractionalKernel, f: &LatticeFunction, x: i64) -> f64 {
    grad_full_sq(kernel, f, x).sqrt()
}

/// `|grad~ f|^2(x)`: the sum restricted to `|f(x)| > |f(y)|`.
pub fn grad_modified_sq(kernel: &FractionalKernel, f: &LatticeFunction, x: i64) -> f64 {
    let w = f.window();
    let fx = f.get(x);
    let ax = fx.abs();
    if ax == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (i, v) in f.values().iter().enumerate() {
        if ax > v.abs() {
            let diff = fx - v;
            acc += kernel.value(w.lo() + i as i64 - x) * diff * diff;
        }
    }
    // x is inside the window because f(x) != 0
    acc + fx * fx * outside_mass(kernel, w, x)
}

pub fn grad_modified(kernel: &FractionalKernel, f: &LatticeFunction, x: i64) -> f64 {
    grad_modified_sq(kernel, f, x).sqrt()
}

/// `Df(x) = f(x+1) - f(x)`.
pub fn diff(f: &LatticeFunction, x: i64) -> f64 {
    f.get(x + 1) - f.get(x)
}

fn check_nonnegative(f: &LatticeFunction, name: &'static str) -> Result<()> {
    if f.is_nonnegative() {
        Ok(())
    } else {
        Err(Error::param(name, "must be nonnegative"))
    }
}

/// `Gamma_q(f)(x) = sum_y K_s(x-y) [q f(x)(f(x)-f(y)) - f(x)^(2-q) (f(x)^q - f(y)^q)]`
/// with `f(x)^(2-q) = 0` when `f(x) = 0` and `q < 2`.
pub fn gamma_q_explicit(kernel: &FractionalKernel, f: &LatticeFunction, q: f64, x: i64) -> Result<f64> {
    check_q_low(q)?;
    check_nonnegative(f, "f")?;
    Ok(gamma_q_unchecked(kernel, f, q, x))
}

pub(crate) fn gamma_q_unchecked(kernel: &FractionalKernel, f: &LatticeFunction, q: f64, x: i64) -> f64 {
    let w = f.window();
    let fx = f.get(x);
    if fx == 0.0 && q < 2.0 {
        return 0.0;
    }
    let fxq = fx.powf(q);
    let fx2q = if q == 2.0 { 1.0 } else { fx.powf(2.0 - q) };
    let mut acc = 0.0;
    for (i, &v) in f.values().iter().enumerate() {
        let y = w.lo() + i as i64;
        if y == x {
            continue;
        }
        let term = q * fx * (fx - v) - fx2q * (fxq - v.powf(q));
        acc += kernel.value(y - x) * term;
    }
    if w.contains(x) {
        // f(y) = 0: q f(x)^2 - f(x)^2
        acc += (q - 1.0) * fx * fx * outside_mass(kernel, w, x);
    }
    acc
}

/// Inner integral `int_0^1 (1-u) a^(2-q) / ((1-u) a + u b)^(2-q) du` on
/// panels halving towards both ends: the integrand varies on the scale
/// `b/a` near `u = 1` when `b << a`, and on `a/b` near `u = 0` when `a << b`.
fn taylor_weight(a: f64, b: f64, q: f64, nodes: usize) -> f64 {
    let gl = GaussLegendre::get(nodes);
    let g = |u: f64| (1.0 - u) * (a / ((1.0 - u) * a + u * b)).powf(2.0 - q);
    let mut acc = gl.integrate(0.0, 0.5f64.powi(41), g) + gl.integrate(1.0 - 0.5f64.powi(41), 1.0, g);
    let mut width = 0.5;
    for _ in 0..40 {
        width *= 0.5;
        acc += gl.integrate(width, 2.0 * width, g);
        acc += gl.integrate(1.0 - 2.0 * width, 1.0 - width, g);
    }
    acc
}

/// The Taylor-remainder form
/// `q(q-1) sum_y K_s(x-y)(f(x)-f(y))^2 int_0^1 (1-u) f(x)^(2-q) / ((1-u)f(x) + u f(y))^(2-q) du`.
///
/// `f` must be strictly positive on its window; the zero far field uses the
/// exact inner integral `1/q`.
pub fn gamma_q_taylor(kernel: &FractionalKernel, f: &LatticeFunction, q: f64, x: i64, quad_nodes: usize) -> Result<f64> {
    check_q_low(q)?;
    if q < 2.0 && f.values().iter().any(|v| *v <= 0.0) {
        return Err(Error::param("f", "must be strictly positive on its window when q < 2"));
    }
    check_nonnegative(f, "f")?;
    let w = f.window();
    if !w.contains(x) {
        return Err(Error::param("x", "must lie in the window of f"));
    }
    let fx = f.get(x);
    let mut acc = 0.0;
    for (i, &v) in f.values().iter().enumerate() {
        let y = w.lo() + i as i64;
        if y == x || v == fx {
            continue;
        }
        let diff = fx - v;
        acc += kernel.value(y - x) * diff * diff * taylor_weight(fx, v, q, quad_nodes.max(1));
    }
    acc += fx * fx * outside_mass(kernel, w, x) / q;
    Ok(q * (q - 1.0) * acc)
}

/// `Gamma_{q,U}(f)(x) = Gamma_q(f)(x) + (q-1) U(x) f(x)^2`.
pub fn gamma_q_schrodinger(
    kernel: &FractionalKernel,
    potential: &LatticeFunction,
    f: &LatticeFunction,
    q: f64,
    x: i64,
) -> Result<f64> {
    check_nonnegative(potential, "U")?;
    let g = gamma_q_explicit(kernel, f, q, x)?;
    let fx = f.get(x);
    Ok(g + (q - 1.0) * potential.get(x) * fx * fx)
}

/// `q f L_U f - f^(2-q) L_U f^q` at `x` straight from the definition with
/// `L_U = L + U`; a cross-check for [`gamma_q_schrodinger`].
pub fn gamma_q_schrodinger_direct(
    kernel: &FractionalKernel,
    potential: &LatticeFunction,
    f: &LatticeFunction,
    q: f64,
    x: i64,
) -> Result<f64> {
    check_q_low(q)?;
    check_nonnegative(f, "f")?;
    check_nonnegative(potential, "U")?;
    let at = Window::new(x, x)?;
    let fq = f.map(|v| v.powf(q))?;
    let lf = kernel.apply(f, at).get(x) + potential.get(x) * f.get(x);
    let lfq = kernel.apply(&fq, at).get(x) + potential.get(x) * fq.get(x);
    let fx = f.get(x);
    let fx2q = if fx == 0.0 && q < 2.0 { 0.0 } else { fx.powf(2.0 - q) };
    Ok(q * fx * lf - fx2q * lfq)
}

/// Outcome of [`check_pointwise_bounds`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseBounds {
    /// Points where `|grad~ f|^2 > 2/(q(q-1)) Gamma_q(f)`.
    pub modified_violations: usize,
    /// Points where `|Df|^2 > 2 (Gamma_q(f)(x+1) + Gamma_q(f)(x))`.
    pub difference_violations: usize,
    /// Points where `|Df|^2` exceeds the same sum times `2/(q(q-1)K_s(1))`.
    pub derived_constant_violations: usize,
    /// Largest `|grad~ f|^2 / Gamma_q(f)` seen, against `2/(q(q-1))`.
    pub worst_modified_ratio: f64,
    /// Largest `|Df|^2 / (Gamma_q(f)(x+1) + Gamma_q(f)(x))` seen.
    pub worst_difference_ratio: f64,
    pub points: usize,
}

fn exceeds(lhs: f64, rhs: f64) -> bool {
    lhs > rhs + 1e-12 * lhs.abs().max(rhs.abs())
}

/// Evaluates both pointwise comparisons between gradient moduli and
/// `Gamma_q` at every point of `window`.
pub fn pointwise_bounds(kernel: &FractionalKernel, f: &LatticeFunction, q: f64, window: Window) -> Result<PointwiseBounds> {
    check_q_low(q)?;
    check_nonnegative(f, "f")?;
    let c_mod = 2.0 / (q * (q - 1.0));
    let c_derived = 2.0 / (q * (q - 1.0) * kernel.value(1));
    let mut out = PointwiseBounds {
        modified_violations: 0,
        difference_violations: 0,
        derived_constant_violations: 0,
        worst_modified_ratio: 0.0,
        worst_difference_ratio: 0.0,
        points: 0,
    };
    let mut gamma_next = gamma_q_unchecked(kernel, f, q, window.lo());
    for x in window.iter() {
        let gamma_x = gamma_next;
        gamma_next = gamma_q_unchecked(kernel, f, q, x + 1);
        let m = grad_modified_sq(kernel, f, x);
        if exceeds(m, c_mod * gamma_x) {
            out.modified_violations += 1;
        }
        if m > 0.0 {
            out.worst_modified_ratio = out.worst_modified_ratio.max(m / gamma_x);
        }
        let d2 = diff(f, x).powi(2);
        let pair = gamma_x + gamma_next;
        if exceeds(d2, 2.0 * pair) {
            out.difference_violations += 1;
        }
        if exceeds(d2, c_derived * pair) {
            out.derived_constant_violations += 1;
        }
        if d2 > 0.0 {
            out.worst_difference_ratio = out.worst_difference_ratio.max(d2 / pair);
        }
        out.points += 1;
    }
    Ok(out)
}

/// Report form of [`pointwise_bounds`]: the error is the number of points
/// violating either comparison with constants `2/(q(q-1))` and `2`.
pub fn check_pointwise_bounds(
    kernel: &FractionalKernel,
    f: &LatticeFunction,
    q: f64,
    window: Window,
) -> Result<VerificationReport> {
    let b = pointwise_bounds(kernel, f, q, window)?;
    let violations = (b.modified_violations + b.difference_violations) as f64;
    Ok(VerificationReport::new("pointwise_gamma_bounds", violations, 0.0)
        .param("s", kernel.order())
        .param("q", q)
        .param("window", format!("[{}, {}]", window.lo(), window.hi()))
        .with_details(vec![
            PointError {
                label: "modified gradient ratio".into(),
                observed: b.worst_modified_ratio,
                expected: 2.0 / (q * (q - 1.0)),
                error: b.modified_violations as f64,
            },
            PointError {
                label: "difference ratio".into(),
                observed: b.worst_difference_ratio,
                expected: 2.0,
                error: b.difference_violations as f64,
            },
        ])
        .note(format!(
            "difference bound with constant 2/(q(q-1)K_s(1)) = {:.6}: {} violations",
            2.0 / (q * (q - 1.0) * kernel.value(1)),
            b.derived_constant_violations
        )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn kernel(s: f64) -> std::sync::Arc<FractionalKernel> {
        FractionalKernel::shared(s).unwrap()
    }

    #[test]
    fn point_mass_gradients() {
        let k = kernel(0.5);
        let d = LatticeFunction::delta(0);
        assert!((grad_full(&k, &d, 0) - (4.0 / PI).sqrt()).abs() < 1e-14);
        assert!((grad_full(&k, &d, 5) - k.value(5).sqrt()).abs() < 1e-15);
        assert!((grad_modified(&k, &d, 0) - (4.0 / PI).sqrt()).abs() < 1e-14);
        assert_eq!(grad_modified(&k, &d, 5), 0.0);
        assert_eq!(diff(&d, -1), 1.0);
        assert_eq!(diff(&d, 0), -1.0);
        assert_eq!(diff(&d, 3), 0.0);
        let zero = LatticeFunction::zeros(Window::centered(0, 4).unwrap());
        assert_eq!(grad_full(&k, &zero, 1), 0.0);
    }

    #[test]
    fn constants_have_no_gradient_inside_modified_sum() {
        let k = kernel(0.3);
        let c = LatticeFunction::from_fn(Window::centered(0, 10).unwrap(), |_| 2.0).unwrap();
        // the strict inequality excludes the window; only the zero far field counts
        let far = 4.0 * outside_mass(&k, c.window(), 0);
        assert!((grad_modified_sq(&k, &c, 0) - far).abs() < 1e-15);
    }

    #[test]
    fn gamma_of_point_mass() {
        let k = kernel(0.5);
        let d = LatticeFunction::delta(0);
        let g = gamma_q_explicit(&k, &d, 1.5, 0).unwrap();
        assert!((g - 2.0 / PI).abs() < 1e-14);
        let u = LatticeFunction::delta(0);
        let gu = gamma_q_schrodinger(&k, &u, &d, 1.5, 0).unwrap();
        assert!((gu - (2.0 / PI + 0.5)).abs() < 1e-14);
        let direct = gamma_q_schrodinger_direct(&k, &u, &d, 1.5, 0).unwrap();
        assert!((gu - direct).abs() < 1e-14);
    }

    #[test]
    fn gamma_rejects_bad_inputs() {
        let k = kernel(0.5);
        let neg = LatticeFunction::from_values(0, vec![1.0, -1.0]).unwrap();
        assert!(gamma_q_explicit(&k, &neg, 1.5, 0).is_err());
        assert!(gamma_q_explicit(&k, &LatticeFunction::delta(0), 2.5, 0).is_err());
        assert!(gamma_q_explicit(&k, &LatticeFunction::delta(0), 1.0, 0).is_err());
        let with_zero = LatticeFunction::from_values(0, vec![1.0, 0.0, 2.0]).unwrap();
        assert!(gamma_q_taylor(&k, &with_zero, 1.5, 0, 16).is_err());
    }

    #[test]
    fn equality_case_for_point_mass_at_two() {
        let k = kernel(0.5);
        let b = pointwise_bounds(&k, &LatticeFunction::delta(0), 2.0, Window::centered(0, 5).unwrap()).unwrap();
        assert_eq!(b.modified_violations, 0);
        assert!((b.worst_modified_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_two_fails_for_point_mass_at_small_q() {
        // |Df|^2(-1) = 1 while Gamma_q(delta_0)(0) = (q-1)||K||_1 and Gamma_q(delta_0)(-1) = 0
        let k = kernel(0.25);
        let b = pointwise_bounds(&k, &LatticeFunction::delta(0), 1.1, Window::centered(0, 3).unwrap()).unwrap();
        assert!(b.difference_violations > 0);
        assert_eq!(b.derived_constant_violations, 0);
    }

    fn positive_function() -> impl Strategy<Value = LatticeFunction> {
        (-10i64..0, prop::collection::vec(0.05f64..2.0, 1..21))
            .prop_map(|(lo, v)| LatticeFunction::from_values(lo, v).unwrap())
    }

    fn nonnegative_function() -> impl Strategy<Value = LatticeFunction> {
        (-10i64..0, prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..2.0], 1..21))
            .prop_map(|(lo, v)| LatticeFunction::from_values(lo, v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn taylor_form_matches_explicit(f in positive_function(), q in 1.05f64..2.0, s in 0.1f64..0.9) {
            let k = FractionalKernel::with_table_size(s, 2048).unwrap();
            for x in f.window().iter() {
                let a = gamma_q_explicit(&k, &f, q, x).unwrap();
                let b = gamma_q_taylor(&k, &f, q, x, 16).unwrap();
                prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{} {}", a, b);
            }
        }

        #[test]
        fn gamma_two_is_squared_gradient(f in nonnegative_function(), s in 0.1f64..0.9) {
            let k = FractionalKernel::with_table_size(s, 2048).unwrap();
            for x in f.window().expand(3).unwrap().iter() {
                let a = gamma_q_explicit(&k, &f, 2.0, x).unwrap();
                let b = grad_full_sq(&k, &f, x);
                prop_assert!((a - b).abs() < 1e-12 * (1.0 + b));
            }
        }

        #[test]
        fn gamma_is_nonnegative_and_two_homogeneous(f in nonnegative_function(), q in 1.05f64..2.0, lambda in 0.1f64..10.0) {
            let k = kernel(0.4);
            let scaled = f.scale(lambda);
            for x in f.window().expand(2).unwrap().iter() {
                let a = gamma_q_explicit(&k, &f, q, x).unwrap();
                let b = gamma_q_explicit(&k, &scaled, q, x).unwrap();
                prop_assert!(a >= -1e-13);
                prop_assert!((b - lambda * lambda * a).abs() < 1e-11 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn modified_gradient_is_dominated(f in nonnegative_function()) {
            let k = kernel(0.6);
            for x in f.window().expand(2).unwrap().iter() {
                prop_assert!(grad_modified_sq(&k, &f, x) <= grad_full_sq(&k, &f, x) * (1.0 + 1e-14));
            }
        }

        #[test]
        fn potential_reduction_matches_definition(f in nonnegative_function(), uvals in prop::collection::vec(0.0f64..3.0, 5), q in 1.05f64..2.0) {
            let k = kernel(0.35);
            let u = LatticeFunction::from_values(-2, uvals).unwrap();
            for x in f.window().expand(1).unwrap().iter() {
                let a = gamma_q_schrodinger(&k, &u, &f, q, x).unwrap();
                let b = gamma_q_schrodinger_direct(&k, &u, &f, q, x).unwrap();
                prop_assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn modified_bound_holds(f in nonnegative_function(), q in 1.05f64..2.0) {
            let k = kernel(0.25);
            let b = pointwise_bounds(&k, &f, q, f.window().expand(2).unwrap()).unwrap();
            prop_assert_eq!(b.modified_violations, 0);
            prop_assert_eq!(b.derived_constant_violations, 0);
        }
    }
}
