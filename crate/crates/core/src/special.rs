// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! Gamma-function ratios and the Fourier coefficients of powers of the
//! lattice symbol `(2 sin(theta/2))^(2a)`.

use statrs::function::gamma::{gamma, ln_gamma};

/// Even Bernoulli numbers B_2 .. B_14 scaled as B_2k / (2k (2k - 1)).
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
];

fn stirling_series(z: f64) -> f64 {
    let zi = 1.0 / z;
    let zi2 = zi * zi;
    let mut acc = 0.0;
    for c in STIRLING.iter().rev() {
        acc = acc * zi2 + c;
    }
    acc * zi
}

/// `ln Gamma(x + a) - ln Gamma(x + b)` without the cancellation that a plain
/// difference of log-Gammas suffers for large `x`. Requires `x + a > 0` and
/// `x + b > 0`.
pub fn ln_gamma_ratio(x: f64, a: f64, b: f64) -> f64 {
    debug_assert!(x + a > 0.0 && x + b > 0.0);
    const SHIFT_TO: f64 = 12.0;
    let lowest = x + a.min(b);
    if lowest >= SHIFT_TO {
        let (za, zb) = (x + a, x + b);
        (a - b) * x.ln() + (za - 0.5) * (a / x).ln_1p() - (zb - 0.5) * (b / x).ln_1p() - (a - b)
            + stirling_series(za)
            - stirling_series(zb)
    } else {
        // Gamma(z) = Gamma(z + n) / (z (z+1) ... (z+n-1))
        let n = (SHIFT_TO - lowest).ceil();
        let mut correction = 0.0;
        for i in 0..n as usize {
            let i = i as f64;
            correction += ((x + a + i) / (x + b + i)).ln();
        }
        ln_gamma_ratio(x + n, a, b) - correction
    }
}

/// `Gamma(x + a) / Gamma(x + b)`.
pub fn gamma_ratio(x: f64, a: f64, b: f64) -> f64 {
    ln_gamma_ratio(x, a, b).exp()
}

/// Fourier cosine coefficient `(1/pi) int_0^pi (2 sin(theta/2))^(2a) cos(d theta) dtheta`
/// for `a >= 0`, equal to `(-1)^d binom(2a, a + d)`.
pub fn symbol_power_coefficient(a: f64, d: u64) -> f64 {
    if a == 0.0 {
        return if d == 0 { 1.0 } else { 0.0 };
    }
    let df = d as f64;
    if df < a + 1.0 {
        // c(0) = Gamma(2a+1)/Gamma(a+1)^2 by the duplication formula, then the
        // ratio recurrence; keeps exp() away from large log-Gamma values
        let mut c = 4f64.powf(a) * gamma_ratio(a, 0.5, 1.0) / std::f64::consts::PI.sqrt();
        for j in 0..d {
            let jf = j as f64;
            c *= (jf - a) / (jf + a + 1.0);
        }
        c
    } else {
        let amp = symbol_power_amplitude(a);
        if amp == 0.0 {
            return 0.0;
        }
        -amp * gamma_ratio(df, -a, a + 1.0)
    }
}

/// `Gamma(2a + 1) sin(pi a) / pi`, the amplitude of the algebraic tail of
/// [`symbol_power_coefficient`]; zero for integer `a`.
pub fn symbol_power_amplitude(a: f64) -> f64 {
    let frac = a - a.round();
    if frac == 0.0 {
        return 0.0;
    }
    let sin = (std::f64::consts::PI * a).sin();
    sin * ln_gamma(2.0 * a + 1.0).exp() / std::f64::consts::PI
}

/// All coefficients `d = 0..=dmax` of [`symbol_power_coefficient`] via the
/// ratio recurrence `c(d+1) = c(d) (d - a) / (d + a + 1)`.
pub fn symbol_power_coefficients(a: f64, dmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dmax + 1);
    let mut c = symbol_power_coefficient(a, 0);
    for d in 0..=dmax {
        out.push(c);
        let df = d as f64;
        c *= (df - a) / (df + a + 1.0);
    }
    out
}

/// Sum of [`symbol_power_coefficient`] over `d > m` (one side only), for
/// `m + 1 >= a + 1`. Telescopes to `-amp Gamma(m+1-a) / (2a Gamma(m+1+a))`.
pub fn symbol_power_tail(a: f64, m: u64) -> f64 {
    let amp = symbol_power_amplitude(a);
    if amp == 0.0 {
        return 0.0;
    }
    let mf = m as f64;
    debug_assert!(mf + 1.0 >= a + 1.0);
    -amp * gamma_ratio(mf + 1.0, -a, a) / (2.0 * a)
}

pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

pub fn ln_gamma_fn(x: f64) -> f64 {
    ln_gamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_matches_direct_gamma_for_moderate_arguments() {
        for &x in &[0.7, 1.0, 3.5, 10.0, 40.0, 150.0] {
            for &(a, b) in &[(-0.25, 1.25), (-0.5, 1.5), (0.3, -0.2), (1.0, 0.0)] {
                if x + a <= 0.0 || x + b <= 0.0 {
                    continue;
                }
                let direct = gamma(x + a) / gamma(x + b);
                let r = gamma_ratio(x, a, b);
                assert!((r / direct - 1.0).abs() < 1e-12, "x={x} a={a} b={b}: {r} vs {direct}");
            }
        }
    }

    #[test]
    fn ratio_matches_high_precision_values() {
        let cases = [
            (0.7, -0.25, 1.25, 2.0085470593243622366),
            (3.5, -0.5, 1.5, 0.083333333333333333333),
            (40.0, 0.3, -0.2, 6.2889418877942786537),
            (150.0, -0.25, 1.25, 0.00054433294399295550344),
            (1e6, -0.5, 1.5, 1.00000000000025e-12),
        ];
        for (x, a, b, want) in cases {
            let r = gamma_ratio(x, a, b);
            assert!((r / want - 1.0).abs() < 1e-14, "x={x}: {r} vs {want}");
        }
    }

    #[test]
    fn ratio_tracks_power_law_for_huge_arguments() {
        // Gamma(x + a)/Gamma(x + b) ~ x^(a-b) (1 + (a-b)(a+b-1)/(2x))
        let (a, b) = (-0.5, 1.5);
        let x: f64 = 1e9;
        let approx = x.powf(a - b) * (1.0 + (a - b) * (a + b - 1.0) / (2.0 * x));
        assert!((gamma_ratio(x, a, b) / approx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn integer_power_coefficients() {
        // (2 sin(theta/2))^2 = 2 - 2 cos(theta)
        assert!((symbol_power_coefficient(1.0, 0) - 2.0).abs() < 1e-14);
        assert!((symbol_power_coefficient(1.0, 1) + 1.0).abs() < 1e-14);
        assert_eq!(symbol_power_coefficient(1.0, 2), 0.0);
        // (2 sin(theta/2))^4 = 6 - 8 cos + 2 cos 2theta
        let c = symbol_power_coefficients(2.0, 4);
        let want = [6.0, -4.0, 1.0, 0.0, 0.0];
        for (got, w) in c.iter().zip(want) {
            assert!((got - w).abs() < 1e-13);
        }
    }

    #[test]
    fn closed_form_agrees_with_recurrence() {
        for &a in &[0.25, 0.5, 0.75, 1.5, 2.25] {
            let rec = symbol_power_coefficients(a, 60);
            for (d, r) in rec.iter().enumerate() {
                let c = symbol_power_coefficient(a, d as u64);
                assert!((c - r).abs() <= 1e-13 * (1.0 + r.abs()), "a={a} d={d}");
            }
        }
    }

    #[test]
    fn coefficients_sum_to_zero() {
        // the symbol power vanishes at theta = 0
        let a = 0.75;
        let m = 2000;
        let c = symbol_power_coefficients(a, m);
        let total = c[0] + 2.0 * c[1..].iter().sum::<f64>() + 2.0 * symbol_power_tail(a, m as u64);
        assert!(total.abs() < 1e-12, "{total}");
    }
}
