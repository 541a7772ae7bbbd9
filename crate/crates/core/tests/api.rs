// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

use approx::assert_relative_eq;

use fraclat::kernel::{kernel_value, l1_norm, symbol, FractionalKernel};
use fraclat::semigroup::{heat_kernel_fractional, SemigroupEvaluator};
use fraclat::squarefn::{SquareFunctions, SquareKind};
use fraclat::{lq_norm, LatticeFunction, Window};

// Reference values computed with mpmath at 25-30 digits.

#[test]
fn kernel_values_match_gamma_ratio() {
    for (s, m, want) in [
        (0.25, 3, 0.03872275085455031),
        (0.75, 10, 0.0009513786019485183),
        (0.5, 1000, 3.183099657612821e-07),
    ] {
        assert_relative_eq!(kernel_value(s, m).unwrap(), want, max_relative = 1e-13);
        assert_relative_eq!(kernel_value(s, -m).unwrap(), want, max_relative = 1e-13);
    }
    assert_eq!(kernel_value(0.5, 0).unwrap(), 0.0);
}

#[test]
fn half_order_norm_is_four_over_pi() {
    assert_relative_eq!(l1_norm(0.5).unwrap(), 4.0 / std::f64::consts::PI, max_relative = 1e-14);
    let k = FractionalKernel::new(0.5).unwrap();
    assert_relative_eq!(symbol(0.5, std::f64::consts::PI), 2.0, max_relative = 1e-15);
    assert!(k.power_law_bounds().0 > 0.0);
}

#[test]
fn heat_kernel_matches_fourier_integral() {
    for (s, t, d, want) in [
        (0.5, 1.0, 0, 0.3421515443446216),
        (0.5, 1.0, 3, 0.03200770521022993),
        (0.25, 2.0, 1, 0.07115307074382611),
        (0.75, 0.3, 5, 0.0018040749210508165),
    ] {
        assert_relative_eq!(heat_kernel_fractional(s, t, d).unwrap(), want, max_relative = 1e-10);
    }
}

#[test]
fn semigroup_conserves_mass() {
    let ev = SemigroupEvaluator::fractional(0.5).unwrap();
    let f = LatticeFunction::from_values(-1, vec![0.5, 1.0, 0.25]).unwrap();
    let out = ev.apply(0.5, &f, Window::centered(0, 4000).unwrap()).unwrap();
    // the heavy tail beyond the window is of order t / radius
    assert!((out.l1_norm() - f.l1_norm()).abs() < 1e-3);
    assert!(out.is_nonnegative());
}

#[test]
fn square_functions_vanish_on_zero_and_scale_linearly() {
    let engine = SquareFunctions::new(0.5).unwrap();
    let f = LatticeFunction::from_values(0, vec![1.0, 0.5]).unwrap();
    let points = Window::new(-2, 3).unwrap();
    let f3 = f.scale(3.0);
    // the horizon depends on the size of f, so share one time grid
    let quad = engine.quadrature(&f3, SquareKind::G, 1e-9).unwrap();
    let g = engine.profile(&f, SquareKind::G, points, &quad).unwrap();
    let g3 = engine.profile(&f3, SquareKind::G, points, &quad).unwrap();
    for x in points.iter() {
        assert_relative_eq!(g3.value(x), 3.0 * g.value(x), max_relative = 1e-12);
    }
    let zero = LatticeFunction::zeros(Window::new(0, 1).unwrap());
    let z = engine.compute(&zero, SquareKind::Gtilde, points).unwrap();
    assert!(z.values().iter().all(|v| *v == 0.0));
}

#[test]
fn lattice_function_json_round_trip() {
    let f = LatticeFunction::from_values(-3, vec![0.0, 1.5, -2.0]).unwrap();
    let text = serde_json::to_string(&f).unwrap();
    assert_eq!(text, r#"{"lo":-3,"values":[0.0,1.5,-2.0]}"#);
    let back: LatticeFunction = serde_json::from_str(&text).unwrap();
    assert_eq!(back, f);
    assert!(serde_json::from_str::<LatticeFunction>(r#"{"lo":0,"values":[]}"#).is_err());
    assert_relative_eq!(lq_norm(&f, 2.0).unwrap(), 6.25f64.sqrt(), max_relative = 1e-15);
}
