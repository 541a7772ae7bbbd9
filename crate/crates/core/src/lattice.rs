// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! Finitely supported functions on the integer lattice.
//!
//! A [`LatticeFunction`] stores dense values on an inclusive integer
//! [`Window`] and is exactly zero everywhere else.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive integer interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    lo: i64,
    hi: i64,
}

/// Largest admissible window width; keeps index arithmetic well inside `i64`.
pub const MAX_WIDTH: i64 = 1 << 40;

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::param("window", format!("lo = {lo} exceeds hi = {hi}")));
        }
        match hi.checked_sub(lo) {
            Some(w) if w < MAX_WIDTH => Ok(Window { lo, hi }),
            _ => Err(Error::param("window", format!("width of [{lo}, {hi}] is too large"))),
        }
    }

    /// Symmetric window `[center - radius, center + radius]`.
    pub fn centered(center: i64, radius: i64) -> Result<Self> {
        Window::new(center - radius, center + radius)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn width(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    /// Window grown by `margin` on both sides.
    pub fn expand(&self, margin: i64) -> Result<Self> {
        Window::new(self.lo - margin, self.hi + margin)
    }

    /// Smallest window containing both.
    pub fn hull(&self, other: &Window) -> Window {
        Window {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub(crate) fn index(&self, x: i64) -> Option<usize> {
        self.contains(x).then(|| (x - self.lo) as usize)
    }
}

/// Real function on Z with finite support, stored densely on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    window: Window,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Wire {
    lo: i64,
    values: Vec<f64>,
}

impl Serialize for LatticeFunction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        Wire {
            lo: self.window.lo,
            values: self.values.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LatticeFunction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = Wire::deserialize(deserializer)?;
        LatticeFunction::from_values(wire.lo, wire.values).map_err(serde::de::Error::custom)
    }
}

impl LatticeFunction {
    /// Builds a function whose first value sits at `lo`.
    pub fn from_values(lo: i64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidFunction("values must be non-empty".into()));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!(
                "non-finite value at lattice point {}",
                lo + bad as i64
            )));
        }
        let window = Window::new(lo, lo + values.len() as i64 - 1)?;
        Ok(LatticeFunction { window, values })
    }

    pub fn zeros(window: Window) -> Self {
        LatticeFunction {
            window,
            values: vec![0.0; window.width()],
        }
    }

    /// Unit mass at `x`.
    pub fn delta(x: i64) -> Self {
        LatticeFunction {
            window: Window { lo: x, hi: x },
            values: vec![1.0],
        }
    }

    /// Samples `g` on every point of `window`.
    pub fn from_fn(window: Window, g: impl Fn(i64) -> f64) -> Result<Self> {
        LatticeFunction::from_values(window.lo, window.iter().map(g).collect())
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `x`; zero outside the stored window.
    pub fn get(&self, x: i64) -> f64 {
        self.window.index(x).map_or(0.0, |i| self.values[i])
    }

    /// Points of the window paired with their values.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.window.iter().zip(self.values.iter().copied())
    }

    /// Same function represented on `window` (values outside are dropped).
    pub fn restrict(&self, window: Window) -> Self {
        LatticeFunction {
            window,
            values: window.iter().map(|x| self.get(x)).collect(),
        }
    }

    pub fn scale(&self, alpha: f64) -> Self {
        LatticeFunction {
            window: self.window,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        LatticeFunction::from_values(self.window.lo, self.values.iter().map(|&v| g(v)).collect())
    }

    /// Pointwise sum, represented on the hull of both windows.
    pub fn add(&self, other: &LatticeFunction) -> Self {
        let window = self.window.hull(&other.window);
        LatticeFunction {
            window,
            values: window.iter().map(|x| self.get(x) + other.get(x)).collect(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// Smallest window containing every nonzero value, if any.
    pub fn support(&self) -> Option<Window> {
        let first = self.values.iter().position(|&v| v != 0.0)?;
        let last = self.values.iter().rposition(|&v| v != 0.0)?;
        Some(Window {
            lo: self.window.lo + first as i64,
            hi: self.window.lo + last as i64,
        })
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The l^q norm; `q = f64::INFINITY` gives the sup norm.
pub fn lq_norm(f: &LatticeFunction, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::param("q", format!("norm exponent must be >= 1, got {q}")));
    }
    if q.is_infinite() {
        return Ok(f.sup_norm());
    }
    if q == 1.0 {
        return Ok(f.l1_norm());
    }
    // scale by the sup norm so large q cannot overflow
    let m = f.sup_norm();
    if m == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = f.values.iter().map(|v| (v.abs() / m).powf(q)).sum();
    Ok(m * s.powf(1.0 / q))
}

/// Membership in the domain where the pointwise formula for the fractional
/// Laplacian converges, i.e. `sum |u(m)| (1 + |m|)^(-(1 + 2s)) < inf`.
/// Every finitely supported function qualifies.
pub fn in_ds(f: &LatticeFunction, s: f64) -> bool {
    let weighted: f64 = f
        .iter()
        .map(|(m, v)| v.abs() * (1.0 + m.unsigned_abs() as f64).powf(-(1.0 + 2.0 * s)))
        .sum();
    weighted.is_finite()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn window_rejects_reversed_bounds() {
        assert!(Window::new(3, 2).is_err());
        assert_eq!(Window::new(-2, 2).unwrap().width(), 5);
    }

    #[test]
    fn norms_of_small_functions() {
        assert_eq!(lq_norm(&LatticeFunction::delta(0), 2.0).unwrap(), 1.0);
        let two = LatticeFunction::from_values(0, vec![1.0, 1.0]).unwrap();
        assert_eq!(lq_norm(&two, 1.0).unwrap(), 2.0);
        let tri = LatticeFunction::from_values(0, vec![3.0, 4.0]).unwrap();
        assert!((lq_norm(&tri, 2.0).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(lq_norm(&tri, f64::INFINITY).unwrap(), 4.0);
        assert!(lq_norm(&tri, 0.5).is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        assert!(LatticeFunction::from_values(0, vec![1.0, f64::NAN]).is_err());
        assert!(LatticeFunction::from_values(0, vec![]).is_err());
    }

    #[test]
    fn domain_membership_for_finite_support() {
        assert!(in_ds(&LatticeFunction::delta(1), 0.25));
        assert!(in_ds(&LatticeFunction::zeros(Window::new(0, 0).unwrap()), 0.5));
        let wide = LatticeFunction::from_fn(Window::new(-100, 100).unwrap(), |x| x as f64).unwrap();
        assert!(in_ds(&wide, 0.9));
    }

    #[test]
    fn json_wire_format() {
        let f = LatticeFunction::from_values(-1, vec![0.5, 2.0]).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, r#"{"lo":-1,"values":[0.5,2.0]}"#);
        let back: LatticeFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<LatticeFunction>(r#"{"lo":0,"values":[]}"#).is_err());
    }

    #[test]
    fn support_trims_zeros() {
        let f = LatticeFunction::from_values(-2, vec![0.0, 1.0, 0.0, 2.0, 0.0]).unwrap();
        assert_eq!(f.support(), Some(Window::new(-1, 1).unwrap()));
        assert_eq!(LatticeFunction::zeros(Window::new(0, 3).unwrap()).support(), None);
    }

    fn arb_function() -> impl Strategy<Value = LatticeFunction> {
        (-20i64..20, prop::collection::vec(-10.0f64..10.0, 1..30))
            .prop_map(|(lo, v)| LatticeFunction::from_values(lo, v).unwrap())
    }

    proptest! {
        #[test]
        fn norm_decreases_in_exponent(f in arb_function(), q in 1.0f64..4.0, dp in 0.0f64..4.0) {
            let p = q + dp;
            let nq = lq_norm(&f, q).unwrap();
            let np = lq_norm(&f, p).unwrap();
            prop_assert!(np <= nq * (1.0 + 1e-12) + 1e-300);
            prop_assert!(lq_norm(&f, f64::INFINITY).unwrap() <= np * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn norm_is_absolutely_homogeneous(f in arb_function(), q in 1.0f64..5.0, a in -5.0f64..5.0) {
            let lhs = lq_norm(&f.scale(a), q).unwrap();
            let rhs = a.abs() * lq_norm(&f, q).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }
    }
}
