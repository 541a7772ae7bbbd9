// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! Reference values computed by routes that share no code with the spectral
//! engines: modified Bessel functions for the classical heat kernel, and
//! subordination of the classical kernel for order one half.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::quadrature::GaussLegendre;

/// `e^{-x} I_d(x)` for `x >= 0`.
///
/// Summed outward from the largest term of the power series, or by the
/// Hankel expansion once `x` dominates `d^2`.
pub fn scaled_bessel_i(d: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if d == 0 { 1.0 } else { 0.0 };
    }
    let df = d as f64;
    if x > 2000.0 && x > 40.0 * df * df {
        return hankel_scaled_bessel_i(d, x);
    }
    let ln_half = (0.5 * x).ln();
    let ln_term = |k: f64| (2.0 * k + df) * ln_half - ln_gamma(k + 1.0) - ln_gamma(k + df + 1.0) - x;
    let peak = (0.5 * ((df * df + x * x).sqrt() - df)).floor().max(0.0);
    let q = 0.25 * x * x;
    let t0 = ln_term(peak).exp();
    let mut acc = t0;
    let mut term = t0;
    let mut k = peak;
    loop {
        term *= q / ((k + 1.0) * (k + 1.0 + df));
        k += 1.0;
        acc += term;
        if term < 1e-18 * acc {
            break;
        }
    }
    let mut term = t0;
    let mut k = peak;
    while k > 0.0 {
        term *= k * (k + df) / q;
        k -= 1.0;
        acc += term;
        if term < 1e-18 * acc {
            break;
        }
    }
    acc
}

fn hankel_scaled_bessel_i(d: u32, x: f64) -> f64 {
    let mu = 4.0 * (d as f64).powi(2);
    let mut term = 1.0;
    let mut acc = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        term *= -(mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * x);
        if term.abs() >= last || term == 0.0 {
            break;
        }
        acc += term;
        last = term.abs();
        if last < 1e-18 {
            break;
        }
    }
    acc / (2.0 * PI * x).sqrt()
}

/// Classical heat kernel `h_t(0, d) = e^{-2t} I_d(2t)`.
pub fn classical_heat_kernel(t: f64, d: u32) -> f64 {
    scaled_bessel_i(d, 2.0 * t)
}

/// Density of the one-sided stable law of index one half:
/// `t exp(-t^2/(4 lambda)) / (2 sqrt(pi) lambda^(3/2))`.
pub fn stable_half_density(t: f64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    t * (-t * t / (4.0 * lambda)).exp() / (2.0 * PI.sqrt() * lambda.powf(1.5))
}

/// Heat kernel of `(-Delta)^(1/2)` by subordination,
/// `p_t(0, d) = int_0^inf f_t(lambda) h_lambda(0, d) dlambda`.
///
/// The integral runs in `v = ln lambda` on panels of width 1/4; the part
/// beyond `lambda = e^50` is below `t e^-50 / (4 pi)`.
pub fn half_order_heat_kernel(t: f64, d: u32) -> f64 {
    let gl = GaussLegendre::get(16);
    // below this lambda the density is under exp(-900)
    let v_lo = (t * t / 3600.0).ln().floor();
    let v_hi = 50.0;
    let panels = ((v_hi - v_lo) * 4.0).ceil() as usize;
    let h = (v_hi - v_lo) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let a = v_lo + p as f64 * h;
        acc += gl.integrate(a, a + h, |v| {
            let lambda = v.exp();
            lambda * stable_half_density(t, lambda) * classical_heat_kernel(lambda, d)
        });
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        // e^{-x} I_d(x) from an arbitrary-precision library
        let cases = [
            (0, 2.0, 0.30850832255367104),
            (1, 2.0, 0.21526928924893766),
            (5, 2.0, 0.0013297610941881578),
            (0, 10.0, 0.12783333716342861),
            (20, 10.0, 5.6786220145215239e-9),
            (3, 3000.0, 0.0072730401792777156),
            (0, 1e5, 0.0012615678379767768),
        ];
        for (d, x, want) in cases {
            let got = scaled_bessel_i(d, x);
            assert!(((got - want) / want).abs() < 1e-12, "d={d} x={x}: {got}");
        }
    }

    #[test]
    fn series_and_hankel_branches_meet() {
        let below = scaled_bessel_i(2, 1999.999_999);
        let above = hankel_scaled_bessel_i(2, 1999.999_999);
        // the series start near x = 2000 carries ~1e-12 relative rounding
        assert!(((below - above) / above).abs() < 1e-10);
    }

    #[test]
    fn stable_density_has_unit_mass() {
        let gl = GaussLegendre::get(16);
        let mut acc = 0.0;
        let h = 0.25;
        for p in 0..400 {
            let a = -20.0 + p as f64 * h;
            acc += gl.integrate(a, a + h, |v| v.exp() * stable_half_density(1.0, v.exp()));
        }
        // remaining mass beyond lambda = e^80 is about 2/sqrt(pi) e^-40
        assert!((acc - 1.0).abs() < 1e-12, "{acc}");
    }

    #[test]
    fn subordination_reproduces_reference_kernel() {
        let got = half_order_heat_kernel(1.0, 0);
        assert!((got - 0.34215154434462161).abs() < 1e-10, "{got}");
        let got = half_order_heat_kernel(1.0, 10);
        assert!((got - 0.0031587755659362732).abs() < 1e-10, "{got}");
    }
}
