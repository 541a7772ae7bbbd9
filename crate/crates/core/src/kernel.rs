// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! The jump kernel `K_s` of the fractional discrete Laplacian, the operator
//! `L = (-Delta)^s` acting on finitely supported functions, and the Markov
//! transition law built from the normalized kernel.
//!
//! Every lattice sum is closed with the exact telescoped tail
//! `sum_{m > M} K_s(m) = K_s(M+1) (M+1+s) / (2s)`, so no cutoff is silent.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{check_order, Result};
use crate::lattice::{LatticeFunction, Window};
use crate::report::VerificationReport;
use crate::special::ln_gamma_ratio;

/// Default table length for kernel values.
pub const DEFAULT_TABLE_SIZE: usize = 1_000_000;

/// Largest jump magnitude the sampler returns.
pub const MAX_JUMP: u64 = 1 << 62;

#[derive(Debug, Clone)]
pub struct FractionalKernel {
    s: f64,
    prefactor: f64,
    /// `values[m] = K_s(m)` for `0 <= m <= table_size`.
    values: Vec<f64>,
    l1_norm: f64,
}

impl FractionalKernel {
    pub fn new(s: f64) -> Result<Self> {
        Self::with_table_size(s, DEFAULT_TABLE_SIZE)
    }

    pub fn with_table_size(s: f64, table_size: usize) -> Result<Self> {
        check_order(s)?;
        let table_size = table_size.max(1);
        // |Gamma(-s)| = Gamma(1-s)/s
        let ln_pref = s * 4f64.ln() + ln_gamma(0.5 + s) + s.ln() - 0.5 * PI.ln() - ln_gamma(1.0 - s);
        let prefactor = ln_pref.exp();
        let k1 = (ln_pref + ln_gamma(1.0 - s) - ln_gamma(2.0 + s)).exp();
        let mut values = Vec::with_capacity(table_size + 1);
        values.push(0.0);
        let mut k = k1;
        for m in 1..=table_size {
            if m % 64 == 0 {
                // resync to stop rounding drift in the forward recurrence
                k = prefactor * ln_gamma_ratio(m as f64, -s, 1.0 + s).exp();
            }
            values.push(k);
            let mf = m as f64;
            k *= (mf - s) / (mf + 1.0 + s);
        }
        let l1_norm = 2.0 * k1 * (1.0 + s) / (2.0 * s);
        Ok(FractionalKernel {
            s,
            prefactor,
            values,
            l1_norm,
        })
    }

    /// Process-wide kernel with the default table, built once per order.
    pub fn shared(s: f64) -> Result<Arc<FractionalKernel>> {
        check_order(s)?;
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<FractionalKernel>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("kernel cache poisoned");
        if let Some(k) = map.get(&s.to_bits()) {
            return Ok(Arc::clone(k));
        }
        let k = Arc::new(FractionalKernel::new(s)?);
        map.insert(s.to_bits(), Arc::clone(&k));
        Ok(k)
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    /// `4^s Gamma(1/2+s) / (sqrt(pi) |Gamma(-s)|)`.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn table_size(&self) -> usize {
        self.values.len() - 1
    }

    /// `K_s(m)`, with `K_s(0) = 0`.
    pub fn value(&self, m: i64) -> f64 {
        self.value_abs(m.unsigned_abs())
    }

    pub(crate) fn value_abs(&self, m: u64) -> f64 {
        if (m as usize) < self.values.len() {
            self.values[m as usize]
        } else {
            self.prefactor * ln_gamma_ratio(m as f64, -self.s, 1.0 + self.s).exp()
        }
    }

    /// Tabulated `K_s(0..=table_size)`.
    pub fn table(&self) -> &[f64] {
        &self.values
    }

    /// One-sided tail `sum_{m > big_m} K_s(m)`.
    pub fn tail(&self, big_m: u64) -> f64 {
        let next = big_m.saturating_add(1);
        self.value_abs(next) * (next as f64 + self.s) / (2.0 * self.s)
    }

    /// `sum_{m != 0} K_s(m)`.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    /// Min and max of `K_s(m) m^(1+2s)` over `1..=table_size`.
    pub fn power_law_bounds(&self) -> (f64, f64) {
        let e = 1.0 + 2.0 * self.s;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (m, k) in self.values.iter().enumerate().skip(1) {
            let r = k * (m as f64).powf(e);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }

    /// `Lf(j) = sum_m (f(j) - f(m)) K_s(j - m)` on `out`. Exact: the part of
    /// the sum where `f(m) = 0` collapses to `f(j) ||K_s||_1`.
    pub fn apply(&self, f: &LatticeFunction, out: Window) -> LatticeFunction {
        let fw = f.window();
        let fv = f.values();
        let mut res = Vec::with_capacity(out.width());
        for j in out.iter() {
            let mut conv = 0.0;
            for (i, v) in fv.iter().enumerate() {
                if *v != 0.0 {
                    conv += v * self.value(j - (fw.lo() + i as i64));
                }
            }
            res.push(self.l1_norm * f.get(j) - conv);
        }
        LatticeFunction::from_values(out.lo(), res).expect("finite kernel sums")
    }

    /// `sum_x Lf(x)` over all of the lattice, with the part outside
    /// `support +- margin` summed in closed form.
    pub fn total_mass_of_image(&self, f: &LatticeFunction, margin: u64) -> f64 {
        let Some(supp) = f.support() else {
            return 0.0;
        };
        let inner = supp.expand(margin as i64).expect("window fits");
        let lf = self.apply(f, inner);
        let mut total: f64 = lf.values().iter().sum();
        for (m, v) in f.iter() {
            if v == 0.0 {
                continue;
            }
            let right = (inner.hi() - m) as u64;
            let left = (m - inner.lo()) as u64;
            total -= v * (self.tail(right) + self.tail(left));
        }
        total
    }

    /// `sum_x f(x) Lf(x)` and `1/2 sum_{x,y} K_s(x-y) (f(x)-f(y))^2`.
    pub fn dirichlet_form(&self, f: &LatticeFunction) -> (f64, f64) {
        let w = f.window();
        let lf = self.apply(f, w);
        let quad: f64 = f.values().iter().zip(lf.values()).map(|(a, b)| a * b).sum();
        let vals = f.values();
        let mut energy = 0.0;
        for (i, a) in vals.iter().enumerate() {
            for (j, b) in vals.iter().enumerate() {
                if i != j {
                    energy += 0.5 * self.value(i as i64 - j as i64) * (a - b).powi(2);
                }
            }
            // pairs with the zero region outside the window
            let left = i as u64;
            let right = (vals.len() - 1 - i) as u64;
            energy += a * a * (self.tail(left) + self.tail(right));
        }
        (quad, energy)
    }

    /// `sum_{m > n} K_s(m) cos(m theta)` for `0 < theta <= pi` by repeated
    /// summation by parts, using the exact forward differences of `K_s`.
    /// Returns the sum and a bound on the neglected remainder.
    pub fn oscillatory_tail(&self, n: u64, theta: f64) -> (f64, f64) {
        let s = self.s;
        let start = n + 1;
        let z = Complex64::from_polar(1.0, theta);
        let one_minus = Complex64::new(1.0, 0.0) - z;
        let ratio = z / one_minus;
        let zn = Complex64::from_polar(1.0, (theta * start as f64) % (2.0 * PI));
        let sf = start as f64;
        let mut diff = self.value_abs(start);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut bound = f64::INFINITY;
        for k in 0..60 {
            let term = pow * diff * zn / one_minus;
            acc += term;
            let next = diff * (-1.0 - 2.0 * s - k as f64) / (sf + 1.0 + s + k as f64);
            // remainder after this term: |ratio|^(k+1) sum_m |Delta^(k+1) a_m| = |ratio|^(k+1) |Delta^k a_start|
            let rem = ratio.norm().powi(k + 1) * diff.abs();
            if rem < bound {
                bound = rem;
            } else {
                break;
            }
            if rem <= 1e-17 * acc.norm().max(f64::MIN_POSITIVE) {
                break;
            }
            pow *= ratio;
            diff = next;
        }
        (acc.re, bound)
    }
}

/// Symbol of `L` at frequency `theta`: `(4 sin^2(theta/2))^s`.
pub fn symbol(s: f64, theta: f64) -> f64 {
    (4.0 * (0.5 * theta).sin().powi(2)).powf(s)
}

/// `K_s(m)`.
pub fn kernel_value(s: f64, m: i64) -> Result<f64> {
    Ok(FractionalKernel::shared(s)?.value(m))
}

/// `sum_{m > big_m} K_s(m)`.
pub fn kernel_tail(s: f64, big_m: u64) -> Result<f64> {
    Ok(FractionalKernel::shared(s)?.tail(big_m))
}

/// `||K_s||_1`.
pub fn l1_norm(s: f64) -> Result<f64> {
    Ok(FractionalKernel::shared(s)?.l1_norm())
}

/// `Lf` on `out_window`.
pub fn apply_l(kernel: &FractionalKernel, f: &LatticeFunction, out_window: Window) -> LatticeFunction {
    kernel.apply(f, out_window)
}

/// Compares `sum_{|m| <= M} K_s(m)(1 - cos(m theta))` plus its exact tail with
/// the symbol `(4 sin^2(theta/2))^s`. Relative tolerance `1e-8`.
pub fn multiplier_identity_check(s: f64, theta: f64, big_m: u64) -> Result<VerificationReport> {
    check_order(s)?;
    if !(0.0..=PI).contains(&theta) {
        return Err(crate::Error::param("theta", format!("must lie in [0, pi], got {theta}")));
    }
    let kernel = FractionalKernel::shared(s)?;
    let expected = symbol(s, theta);
    let mut observed = 0.0;
    let mut bound = 0.0;
    if theta > 0.0 {
        let mut direct = 0.0;
        for m in 1..=big_m {
            let half = 0.5 * m as f64 * theta;
            direct += kernel.value_abs(m) * 2.0 * half.sin().powi(2);
        }
        let (osc, rem) = kernel.oscillatory_tail(big_m, theta);
        observed = 2.0 * (direct + kernel.tail(big_m) - osc);
        bound = 2.0 * rem;
    }
    let err = if expected > 0.0 {
        (observed - expected).abs() / expected
    } else {
        (observed - expected).abs()
    };
    Ok(VerificationReport::new("multiplier_identity", err, 1e-8)
        .param("s", s)
        .param("theta", theta)
        .param("M", big_m)
        .note(format!("observed {observed:.16e}, symbol {expected:.16e}"))
        .note(format!("oscillatory tail remainder bound {bound:.3e}")))
}

/// Checks `sum_x Lf(x) = 0` with tolerance `1e-8 ||f||_1`.
pub fn conservation_check(kernel: &FractionalKernel, f: &LatticeFunction) -> VerificationReport {
    let total = kernel.total_mass_of_image(f, 64);
    let l1 = f.l1_norm();
    let err = if l1 > 0.0 { total.abs() / l1 } else { total.abs() };
    VerificationReport::new("conservation", err, 1e-8)
        .param("s", kernel.order())
        .param("l1_norm_f", l1)
        .note(format!("sum of Lf over the lattice: {total:.3e}"))
}

/// Law of one jump of the continuous-time chain: `p(i, j) = K_s(i-j)/||K_s||_1`.
#[derive(Debug, Clone)]
pub struct TransitionLaw {
    kernel: Arc<FractionalKernel>,
    /// `ccdf[m] = P(|J| > m)` for `0 <= m <= table_size`.
    ccdf: Vec<f64>,
}

impl TransitionLaw {
    pub fn new(kernel: Arc<FractionalKernel>) -> Self {
        let n = kernel.table_size();
        let norm = kernel.l1_norm();
        let ccdf = (0..=n as u64).map(|m| 2.0 * kernel.tail(m) / norm).collect();
        TransitionLaw { kernel, ccdf }
    }

    pub fn kernel(&self) -> &FractionalKernel {
        &self.kernel
    }

    /// Total jump rate `||K_s||_1`.
    pub fn rate(&self) -> f64 {
        self.kernel.l1_norm()
    }

    pub fn probability(&self, i: i64, j: i64) -> f64 {
        self.kernel.value(i - j) / self.kernel.l1_norm()
    }

    /// `P(|J| > m)`.
    pub fn magnitude_ccdf(&self, m: u64) -> f64 {
        if (m as usize) < self.ccdf.len() {
            self.ccdf[m as usize]
        } else {
            2.0 * self.kernel.tail(m) / self.kernel.l1_norm()
        }
    }

    /// Inverse transform: the smallest `m >= 1` with `P(|J| > m) < u`, for
    /// `u` in `(0, 1]`. Clamped at [`MAX_JUMP`].
    pub fn magnitude_from_uniform(&self, u: f64) -> u64 {
        let last = self.ccdf.len() - 1;
        if self.ccdf[last] < u {
            // ccdf is decreasing: first index with ccdf < u
            let idx = self.ccdf.partition_point(|&g| g >= u);
            return idx.max(1) as u64;
        }
        if self.magnitude_ccdf(MAX_JUMP) >= u {
            return MAX_JUMP;
        }
        let (mut lo, mut hi) = (last as u64, MAX_JUMP);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.magnitude_ccdf(mid) < u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn first_values_match_high_precision_reference() {
        let cases = [
            (0.25, 1, 0.21574104047535174267),
            (0.25, 10, 0.0063127609237824437121),
            (0.25, 1000, 6.3078317978497369977e-6),
            (0.5, 1, 0.42441318157838756205),
            (0.5, 2, 0.08488263631567751241),
            (0.5, 1000, 3.1830996576128211186e-7),
            (0.75, 1, 0.67448034229491212917),
            (0.75, 10, 0.00095137860194851824993),
        ];
        for (s, m, want) in cases {
            let k = FractionalKernel::shared(s).unwrap();
            assert!(rel(k.value(m), want) < 1e-14, "s={s} m={m}");
        }
        assert!(rel(kernel_value(0.5, 1).unwrap(), 4.0 / (3.0 * PI)) < 4e-15);
        assert_eq!(kernel_value(0.5, 0).unwrap(), 0.0);
        assert_eq!(kernel_value(0.5, -1).unwrap(), kernel_value(0.5, 1).unwrap());
    }

    #[test]
    fn values_far_out_match_reference() {
        let cases = [
            (0.25, 1_000_000, 1.9947114020073192265e-10),
            (0.25, 1_000_000_000, 6.3078313050504001211e-15),
            (0.5, 1_000_000, 3.1830988618387024901e-13),
            (0.5, 1_000_000_000, 3.1830988618379067162e-19),
            (0.75, 1_000_000_000, 9.4617469575756001861e-24),
        ];
        for (s, m, want) in cases {
            let k = FractionalKernel::shared(s).unwrap();
            assert!(rel(k.value(m), want) < 1e-12, "s={s} m={m}: {}", k.value(m));
        }
    }

    #[test]
    fn table_joins_the_asymptotic_branch() {
        let k = FractionalKernel::with_table_size(0.3, 5000).unwrap();
        let inside = k.value(5000);
        let outside = k.prefactor() * ln_gamma_ratio(5000.0, -0.3, 1.3).exp();
        assert!(rel(inside, outside) < 1e-13, "{inside} {outside} {}", rel(inside, outside));
        let step = k.value(5001) / inside;
        assert!(rel(step, (5000.0 - 0.3) / 5001.3) < 1e-13);
    }

    #[test]
    fn norms_and_tails_match_summation_reference() {
        // reference: explicit partial sums plus Euler-Maclaurin remainders
        let norms = [
            (0.25, 1.0787052023767587133),
            (0.5, 1.2732395447351626862),
            (0.75, 1.5737874653547949681),
        ];
        for (s, want) in norms {
            assert!(rel(l1_norm(s).unwrap(), want) < 1e-14, "s={s}");
        }
        assert!(rel(l1_norm(0.5).unwrap(), 4.0 / PI) < 4e-15);
        assert!(rel(kernel_tail(0.5, 0).unwrap(), 2.0 / PI) < 4e-15);
        let tails = [
            (0.25, 0.012612509679800549127),
            (0.5, 0.0003181508107784014708),
            (0.75, 6.3031038785816159372e-6),
        ];
        for (s, want) in tails {
            assert!(rel(kernel_tail(s, 1000).unwrap(), want) < 1e-12, "s={s}");
        }
    }

    #[test]
    fn tail_agrees_with_brute_force_partial_sums() {
        let s = 0.25;
        let k = FractionalKernel::shared(s).unwrap();
        // sum_{1000 < m <= 10^6} K + tail(10^6) = tail(1000)
        let partial: f64 = k.table()[1001..].iter().rev().sum();
        let got = partial + k.tail(1_000_000);
        assert!(rel(got, k.tail(1000)) < 1e-12);
    }

    #[test]
    fn power_law_ratio_is_bounded() {
        for s in [0.1, 0.5, 0.9] {
            let (lo, hi) = FractionalKernel::shared(s).unwrap().power_law_bounds();
            assert!(lo > 0.0 && hi.is_finite() && hi / lo < 10.0, "s={s}: {lo} {hi}");
        }
    }

    #[test]
    fn recurrence_holds_to_rounding() {
        let k = FractionalKernel::shared(0.37).unwrap();
        for m in [1u64, 2, 17, 999, 123_456, 999_999, 5_000_000] {
            let mf = m as f64;
            let lhs = k.value_abs(m + 1) * (mf + 1.0 + 0.37);
            let rhs = k.value_abs(m) * (mf - 0.37);
            assert!(rel(lhs, rhs) < 1e-13, "m={m}");
        }
    }

    #[test]
    fn operator_kills_constants_up_to_the_window_tail() {
        let k = FractionalKernel::shared(0.5).unwrap();
        let r = 2000;
        let f = LatticeFunction::from_fn(Window::centered(0, r).unwrap(), |_| 1.0).unwrap();
        let lf = k.apply(&f, Window::new(0, 0).unwrap());
        assert!((lf.get(0) - 2.0 * k.tail(r as u64)).abs() < 1e-12);
        let zero = LatticeFunction::zeros(Window::centered(0, 3).unwrap());
        assert!(k.apply(&zero, Window::centered(0, 5).unwrap()).values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn operator_on_a_cosine_recovers_the_symbol() {
        let (s, theta) = (0.5, 0.7);
        let k = FractionalKernel::shared(s).unwrap();
        let r = 200_000i64;
        let f = LatticeFunction::from_fn(Window::centered(0, r).unwrap(), |x| (theta * x as f64).cos()).unwrap();
        let lf = k.apply(&f, Window::new(0, 0).unwrap()).get(0);
        // truncation error at the centre is at most 2 tail(r)
        assert!((lf - symbol(s, theta)).abs() <= 2.0 * k.tail(r as u64) + 1e-10);
    }

    #[test]
    fn symbol_identity_at_reference_points() {
        let r = multiplier_identity_check(0.5, PI, 1000).unwrap();
        assert!(r.passed, "{}", r.summary());
        let r = multiplier_identity_check(0.25, PI / 2.0, 100_000).unwrap();
        assert!(r.passed, "{}", r.summary());
        let r = multiplier_identity_check(0.25, 0.0, 10).unwrap();
        assert!(r.passed && r.max_abs_error == 0.0);
    }

    #[test]
    fn oscillatory_tail_matches_direct_sum() {
        let k = FractionalKernel::shared(0.75).unwrap();
        let theta = 1.1;
        let (fast, bound) = k.oscillatory_tail(100, theta);
        // 0.75 decays fast enough for a long direct sum plus a crude bound
        let direct: f64 = (101..=1_000_000u64).map(|m| k.value_abs(m) * (m as f64 * theta).cos()).sum();
        assert!((fast - direct).abs() < 1e-12 + k.tail(1_000_000) * 2.0, "{fast} {direct}");
        assert!(bound < 1e-14);
    }

    #[test]
    fn conservation_of_mass() {
        let k = FractionalKernel::shared(0.5).unwrap();
        let r = conservation_check(&k, &LatticeFunction::delta(0));
        assert!(r.passed, "{}", r.summary());
        let k = FractionalKernel::shared(0.75).unwrap();
        let f = LatticeFunction::from_fn(Window::centered(0, 20).unwrap(), |x| ((x * 37 % 11) as f64) - 4.5).unwrap();
        let r = conservation_check(&k, &f);
        assert!(r.passed, "{}", r.summary());
    }

    #[test]
    fn jump_law_sums_to_one() {
        let law = TransitionLaw::new(FractionalKernel::shared(0.5).unwrap());
        let p: f64 = (-1000..=1000).map(|j| law.probability(0, j)).sum::<f64>() + law.magnitude_ccdf(1000);
        assert!((p - 1.0).abs() < 1e-14);
        assert_eq!(law.probability(3, 7), law.probability(0, 4));
        assert!((law.magnitude_ccdf(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_transform_inverts_the_ccdf() {
        let law = TransitionLaw::new(FractionalKernel::shared(0.25).unwrap());
        for u in [0.999, 0.5, 0.1, 1e-3, 1e-6, 1e-9] {
            let m = law.magnitude_from_uniform(u);
            assert!(law.magnitude_ccdf(m) < u, "u={u}");
            assert!(m == 1 || law.magnitude_ccdf(m - 1) >= u, "u={u} m={m}");
        }
        assert_eq!(law.magnitude_from_uniform(1.0), 1);
        // beyond the reachable range the sampler clamps
        assert!(law.magnitude_ccdf(MAX_JUMP) > 1e-12);
        assert_eq!(law.magnitude_from_uniform(1e-12), MAX_JUMP);
    }

    fn small_function() -> impl Strategy<Value = LatticeFunction> {
        (-5i64..5, prop::collection::vec(-2.0f64..2.0, 1..12))
            .prop_map(|(lo, v)| LatticeFunction::from_values(lo, v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn operator_is_self_adjoint(f in small_function(), g in small_function(), s in 0.05f64..0.95) {
            let k = FractionalKernel::with_table_size(s, 4096).unwrap();
            let w = f.window().hull(&g.window());
            let lf = k.apply(&f, w);
            let lg = k.apply(&g, w);
            let a: f64 = w.iter().map(|x| lf.get(x) * g.get(x)).sum();
            let b: f64 = w.iter().map(|x| f.get(x) * lg.get(x)).sum();
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn dirichlet_form_identity(f in small_function(), s in 0.05f64..0.95) {
            let k = FractionalKernel::with_table_size(s, 4096).unwrap();
            let (quad, energy) = k.dirichlet_form(&f);
            prop_assert!((quad - energy).abs() < 1e-12 * (1.0 + energy));
            prop_assert!(quad >= -1e-12);
        }

        #[test]
        fn kernel_is_positive_and_even(s in 0.01f64..0.99, m in 1i64..3_000_000) {
            let k = FractionalKernel::with_table_size(s, 1000).unwrap();
            prop_assert!(k.value(m) > 0.0);
            prop_assert_eq!(k.value(m), k.value(-m));
            prop_assert!((k.tail(m as u64 - 1) - k.tail(m as u64) - k.value(m)).abs() <= 1e-13 * k.tail(m as u64 - 1));
        }
    }
}
