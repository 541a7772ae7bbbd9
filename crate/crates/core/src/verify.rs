// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! Named verification suites. Each suite returns one or more reports; a
//! suite passes when all of its reports pass.
//!
//! Randomized suites draw their inputs from ChaCha20 keyed by the suite
//! seed, so a run is reproducible from its configuration alone.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradients::{gamma_q_explicit, gamma_q_taylor, grad_full_sq, pointwise_bounds};
use crate::jumpsim::{jump_statistics, verify_compensator, verify_gstar_representation};
use crate::kernel::{multiplier_identity_check, FractionalKernel, TransitionLaw};
use crate::lattice::{lq_norm, LatticeFunction, Window};
use crate::oracle;
use crate::report::{ErrorTable, PointError, VerificationReport};
use crate::schrodinger::{square_gtilde_schrodinger, verify_constant_potential, verify_domination, verify_feynman_kac, SchrodingerEvaluator};
use crate::semigroup::{heat_kernel_classical, SemigroupEvaluator};
use crate::squarefn::{check_gstar_domination, CounterexampleData, EnergyAnchor, SquareFunctions, SquareKind, SquareProfile, DEFAULT_MARGIN};

/// The verification suites, in acceptance order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Kernel,
    Symbol,
    ClassicalHeat,
    FractionalHeat,
    GammaCoherence,
    Pointwise,
    Isometry,
    Counterexample,
    GstarClaim,
    Martingale,
    Representation,
    Schrodinger,
    Boundedness,
}

impl Suite {
    pub const ALL: [Suite; 13] = [
        Suite::Kernel,
        Suite::Symbol,
        Suite::ClassicalHeat,
        Suite::FractionalHeat,
        Suite::GammaCoherence,
        Suite::Pointwise,
        Suite::Isometry,
        Suite::Counterexample,
        Suite::GstarClaim,
        Suite::Martingale,
        Suite::Representation,
        Suite::Schrodinger,
        Suite::Boundedness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Kernel => "kernel",
            Suite::Symbol => "symbol",
            Suite::ClassicalHeat => "classical-heat",
            Suite::FractionalHeat => "fractional-heat",
            Suite::GammaCoherence => "gamma-coherence",
            Suite::Pointwise => "pointwise",
            Suite::Isometry => "isometry",
            Suite::Counterexample => "counterexample",
            Suite::GstarClaim => "gstar-claim",
            Suite::Martingale => "martingale",
            Suite::Representation => "representation",
            Suite::Schrodinger => "schrodinger",
            Suite::Boundedness => "boundedness",
        }
    }

    /// One-line description of what the suite checks.
    pub fn description(self) -> &'static str {
        match self {
            Suite::Kernel => "K_s(1), the ratio recurrence and ||K_s||_1 against closed forms and summation",
            Suite::Symbol => "sum_m K_s(m)(1 - cos m theta) = (4 sin^2(theta/2))^s",
            Suite::ClassicalHeat => "classical heat kernel against the modified Bessel series",
            Suite::FractionalHeat => "mass conservation, Chapman-Kolmogorov, and subordination at s = 1/2",
            Suite::GammaCoherence => "explicit and Taylor forms of Gamma_q agree; Gamma_2 = |grad|^2",
            Suite::Pointwise => "pointwise bounds of the modified gradient and the difference by Gamma_q",
            Suite::Isometry => "||G(delta_0)||_2 = 1",
            Suite::Counterexample => "G(delta_1) at s = 1/4: decay slope and doubling of partial sums",
            Suite::GstarClaim => "G(f) <= sqrt(2) G_*(f) pointwise",
            Suite::Martingale => "E M_T = 0 and E M_T^2 = E <M>_T = E [M]_T = P_T f^2 - (P_T f)^2",
            Suite::Representation => "sum_z E_z[<M>_T 1{X_T = x}] = G_{*,T}(f)^2(x)",
            Suite::Schrodinger => "domination, constant potentials and Feynman-Kac",
            Suite::Boundedness => "empirical l^q ratios of the square functions stay below fixed ceilings",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::param("suite", format!("unknown suite `{s}`")))
    }
}

/// Sizes and seeds of the randomized suites. [`SuiteOptions::default`] is
/// the acceptance configuration; [`SuiteOptions::quick`] shrinks every
/// sample for smoke runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteOptions {
    pub seed: u64,
    pub random_functions: usize,
    pub gstar_random_functions: usize,
    pub mc_paths: u64,
    pub representation_paths_per_start: u64,
    pub schrodinger_pairs: usize,
    pub boundedness_inputs: usize,
    pub counterexample_n: i64,
    /// Exponents for the counterexample suite.
    pub counterexample_q: Vec<f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 20_260_101,
            random_functions: 1000,
            gstar_random_functions: 50,
            mc_paths: 100_000,
            representation_paths_per_start: 20_000,
            schrodinger_pairs: 100,
            boundedness_inputs: 200,
            counterexample_n: 512,
            counterexample_q: vec![4.0 / 3.0, 2.0],
        }
    }
}

impl SuiteOptions {
    pub fn quick() -> Self {
        SuiteOptions {
            random_functions: 40,
            gstar_random_functions: 3,
            mc_paths: 10_000,
            representation_paths_per_start: 2_000,
            schrodinger_pairs: 8,
            boundedness_inputs: 12,
            counterexample_n: 64,
            ..SuiteOptions::default()
        }
    }
}

fn rng_for(seed: u64, suite: Suite) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(suite as u64);
    rng
}

/// Values uniform on `[0, 1)`, each zeroed with probability `zero_p`.
fn random_nonnegative(rng: &mut impl Rng, window: Window, zero_p: f64) -> LatticeFunction {
    let vals = (0..window.width())
        .map(|_| if rng.random::<f64>() < zero_p { 0.0 } else { rng.random::<f64>() })
        .collect();
    LatticeFunction::from_values(window.lo(), vals).expect("finite values")
}

fn random_positive(rng: &mut impl Rng, window: Window) -> LatticeFunction {
    let vals = (0..window.width()).map(|_| 0.05 + rng.random::<f64>()).collect();
    LatticeFunction::from_values(window.lo(), vals).expect("finite values")
}

fn random_signed(rng: &mut impl Rng, window: Window) -> LatticeFunction {
    let vals = (0..window.width()).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
    LatticeFunction::from_values(window.lo(), vals).expect("finite values")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `K_{1/2}(1) = 4/(3 pi)`, the ratio recurrence on `[1, 10^6]`, and
/// `||K_{1/2}||_1 = 4/pi` against the table sum plus the exact tail.
pub fn kernel_exactness() -> Result<Vec<VerificationReport>> {
    let k = FractionalKernel::shared(0.5)?;
    let mut out = Vec::new();
    let k1 = k.value(1);
    out.push(
        VerificationReport::new("kernel_value_k1", (k1 - 4.0 / (3.0 * PI)).abs(), 1e-12)
            .param("s", 0.5)
            .note(format!("K(1) = {k1:.17e}")),
    );
    let mut worst: f64 = 0.0;
    let mut at = 0;
    for s in [0.25, 0.5, 0.75] {
        let k = FractionalKernel::shared(s)?;
        for m in 1..1_000_000i64 {
            let ratio = k.value(m + 1) / k.value(m);
            let want = (m as f64 - s) / (m as f64 + 1.0 + s);
            let e = rel(ratio, want);
            if e > worst {
                worst = e;
                at = m;
            }
        }
    }
    out.push(
        VerificationReport::new("kernel_ratio_recurrence", worst, 1e-13)
            .param("m_range", "[1, 1000000]")
            .param("s", "0.25, 0.5, 0.75")
            .note(format!("worst relative deviation at m = {at}")),
    );
    let big_m = 1_000_000u64;
    let mut partial = 0.0;
    for m in (1..=big_m as i64).rev() {
        partial += k.value(m);
    }
    let summed = 2.0 * (partial + k.tail(big_m));
    let closed = k.l1_norm();
    let mut table = ErrorTable::default();
    table.push("summation vs 4/pi", summed, 4.0 / PI, (summed - 4.0 / PI).abs());
    table.push("closed form vs 4/pi", closed, 4.0 / PI, (closed - 4.0 / PI).abs());
    out.push(table.into_report("kernel_l1_norm", 1e-10).param("s", 0.5).param("M", big_m));
    Ok(out)
}

/// The symbol identity on 50 angles in `(0, pi]` for `s = 1/4, 1/2, 3/4`.
pub fn symbol_identity() -> Result<Vec<VerificationReport>> {
    let mut table = ErrorTable::default();
    for s in [0.25, 0.5, 0.75] {
        for j in 1..=50 {
            let theta = PI * j as f64 / 50.0;
            let r = multiplier_identity_check(s, theta, 20_000)?;
            table.push(format!("s={s} theta={theta:.4}"), r.max_abs_error, 0.0, r.max_abs_error);
        }
    }
    Ok(vec![table
        .into_report("symbol_identity", 1e-8)
        .note("errors are relative to the symbol")])
}

/// Quadrature value of the classical heat kernel against the Bessel series.
pub fn classical_heat_kernel_check() -> Result<Vec<VerificationReport>> {
    let mut table = ErrorTable::default();
    for t in [0.1, 1.0, 5.0] {
        for d in 0..=20 {
            let got = heat_kernel_classical(t, d)?;
            let want = oracle::classical_heat_kernel(t, d as u32);
            table.push(format!("t={t} d={d}"), got, want, (got - want).abs());
        }
    }
    Ok(vec![table.into_report("classical_heat_kernel", 1e-10)])
}

/// Radius of the intermediate sum in the Chapman–Kolmogorov check.
const CK_RADIUS: usize = 20_000;

/// Mass conservation, Chapman–Kolmogorov and the subordination oracle.
pub fn fractional_heat_kernel_checks() -> Result<Vec<VerificationReport>> {
    let mut mass = ErrorTable::default();
    let mut ck = ErrorTable::default();
    for s in [0.25, 0.5, 0.75] {
        let ev = SemigroupEvaluator::fractional(s)?;
        for t in [0.1, 1.0, 10.0] {
            let dmax = 4000;
            let row = ev.row(t, dmax)?;
            let (tail, _) = ev.one_sided_tail(t, dmax as u64);
            let total = row[0] + 2.0 * row[1..].iter().sum::<f64>() + 2.0 * tail;
            mass.push(format!("s={s} t={t}"), total, 1.0, (total - 1.0).abs());
        }
        for (t1, t2) in [(0.3, 0.7), (1.0, 2.0)] {
            let r1 = ev.row(t1, CK_RADIUS + 20)?;
            let r2 = ev.row(t2, 2 * CK_RADIUS + 40)?;
            let r12 = ev.row(t1 + t2, 20)?;
            let (tail1, _) = ev.one_sided_tail(t1, CK_RADIUS as u64);
            for d in 0..=20i64 {
                let mut acc = 0.0;
                for z in -(CK_RADIUS as i64)..=CK_RADIUS as i64 {
                    acc += r1[z.unsigned_abs() as usize] * r2[(d - z).unsigned_abs() as usize];
                }
                // starts beyond the radius: p_{t2} there is at most its value at
                // distance radius - d, and at least zero
                let cap = 2.0 * tail1 * r2[CK_RADIUS - d as usize];
                let est = acc + 0.5 * cap;
                let want = r12[d as usize];
                ck.push(format!("s={s} t={t1}+{t2} d={d}"), est, want, ((est - want).abs() - 0.5 * cap).max(0.0));
            }
        }
    }
    let mut sub = ErrorTable::default();
    let ev = SemigroupEvaluator::fractional(0.5)?;
    for t in [0.1, 1.0, 5.0] {
        let row = ev.row(t, 20)?;
        for (d, got) in row.iter().enumerate() {
            let want = oracle::half_order_heat_kernel(t, d as u32);
            sub.push(format!("t={t} d={d}"), *got, want, (got - want).abs());
        }
    }
    Ok(vec![
        mass.into_report("heat_kernel_mass", 1e-8),
        ck.into_report("chapman_kolmogorov", 1e-8)
            .param("radius", CK_RADIUS)
            .note("errors are net of the bound on intermediate points beyond the radius"),
        sub.into_report("subordination_half_order", 1e-8),
    ])
}

/// Explicit versus Taylor form of `Gamma_q` on strictly positive random
/// functions, and `Gamma_2 = |grad|^2`.
pub fn gamma_coherence(opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let mut rng = rng_for(opts.seed, Suite::GammaCoherence);
    let w = Window::new(-10, 10)?;
    let orders = [0.25, 0.5, 0.75];
    let exponents = [1.1, 1.3, 1.5, 1.8, 2.0];
    let kernels: Vec<_> = orders.iter().map(|&s| FractionalKernel::shared(s)).collect::<Result<_>>()?;
    let mut taylor = ErrorTable::default();
    let mut two = ErrorTable::default();
    for i in 0..opts.random_functions {
        let k = &kernels[i % orders.len()];
        let q = exponents[i % exponents.len()];
        let f = random_positive(&mut rng, w);
        for x in [-10, -3, 0, 4, 10] {
            let a = gamma_q_explicit(k, &f, q, x)?;
            let b = gamma_q_taylor(k, &f, q, x, 64)?;
            taylor.push(format!("f#{i} s={} q={q} x={x}", k.order()), b, a, (a - b).abs());
            let g2 = gamma_q_explicit(k, &f, 2.0, x)?;
            let full = grad_full_sq(k, &f, x);
            two.push(format!("f#{i} s={} x={x}", k.order()), g2, full, (g2 - full).abs());
        }
    }
    Ok(vec![
        taylor.into_report("gamma_taylor_vs_explicit", 1e-8).param("functions", opts.random_functions),
        two.into_report("gamma_two_is_gradient", 1e-10).param("functions", opts.random_functions),
    ])
}

/// Both pointwise bounds over random nonnegative functions on `[-15, 15]`.
///
/// The first report uses the constants `2/(q(q-1))` and `2` throughout. The
/// second repeats the difference bound with `2/(q(q-1)K_s(1))`, the
/// constant that the inner-integral argument actually delivers.
pub fn pointwise_suite(opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let mut rng = rng_for(opts.seed, Suite::Pointwise);
    let fw = Window::new(-15, 15)?;
    let points = fw.expand(1)?;
    let mut modified = 0usize;
    let mut difference = 0usize;
    let mut derived = 0usize;
    let mut details = Vec::new();
    let mut derived_details = Vec::new();
    let mut total_points = 0usize;
    for s in [0.25, 0.75] {
        let k = FractionalKernel::shared(s)?;
        for q in [1.1, 1.5, 2.0] {
            let (mut m, mut d, mut dc) = (0, 0, 0);
            let (mut wm, mut wd): (f64, f64) = (0.0, 0.0);
            for _ in 0..opts.random_functions {
                let f = random_nonnegative(&mut rng, fw, 0.3);
                let b = pointwise_bounds(&k, &f, q, points)?;
                m += b.modified_violations;
                d += b.difference_violations;
                dc += b.derived_constant_violations;
                wm = wm.max(b.worst_modified_ratio);
                wd = wd.max(b.worst_difference_ratio);
                total_points += b.points;
            }
            modified += m;
            difference += d;
            derived += dc;
            details.push(PointError {
                label: format!("s={s} q={q}: |grad~ f|^2 / Gamma_q, violations of 2/(q(q-1))"),
                observed: wm,
                expected: 2.0 / (q * (q - 1.0)),
                error: m as f64,
            });
            details.push(PointError {
                label: format!("s={s} q={q}: |Df|^2 / (Gamma_q(x+1) + Gamma_q(x)), violations of 2"),
                observed: wd,
                expected: 2.0,
                error: d as f64,
            });
            derived_details.push(PointError {
                label: format!("s={s} q={q}: violations of 2/(q(q-1)K_s(1))"),
                observed: wd,
                expected: 2.0 / (q * (q - 1.0) * k.value(1)),
                error: dc as f64,
            });
        }
    }
    Ok(vec![
        VerificationReport::new("pointwise_gamma_bounds", (modified + difference) as f64, 0.0)
            .param("functions_per_case", opts.random_functions)
            .param("points", total_points)
            .with_details(details)
            .note(format!("modified-gradient violations {modified}, difference violations {difference}")),
        VerificationReport::new("pointwise_difference_derived_constant", derived as f64, 0.0)
            .param("functions_per_case", opts.random_functions)
            .with_details(derived_details),
    ])
}

/// `||G(delta_0)||_2 = 1` at `s = 1/4` and `s = 1/2`.
pub fn isometry_anchor() -> Result<Vec<VerificationReport>> {
    [0.25, 0.5]
        .into_iter()
        .map(|s| {
            let horizon = EnergyAnchor::horizon_for(s, 5e-4)?;
            Ok(EnergyAnchor::compute(s, horizon, 3000)?.report(1e-3))
        })
        .collect()
}

/// Doubling test for each exponent in `opts.counterexample_q`.
pub fn counterexample_suite(opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let data = CounterexampleData::compute(opts.counterexample_n, 3 * DEFAULT_MARGIN)?;
    Ok(opts.counterexample_q.iter().map(|&q| data.report(q)).collect())
}

/// `G <= sqrt(2) G_*` on `[-10, 10]` at `s = 1/2` for `delta_1` and random
/// signed functions on `[-5, 5]`.
pub fn gstar_claim(opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let mut rng = rng_for(opts.seed, Suite::GstarClaim);
    let engine = SquareFunctions::new(0.5)?.with_margin(512).with_z_margin(256);
    let points = Window::new(-10, 10)?;
    let mut inputs = vec![LatticeFunction::delta(1)];
    for _ in 0..opts.gstar_random_functions {
        inputs.push(random_signed(&mut rng, Window::new(-5, 5)?));
    }
    let mut violations = 0.0;
    let mut details = Vec::new();
    for (i, f) in inputs.iter().enumerate() {
        let r = check_gstar_domination(&engine, f, points)?;
        violations += r.max_abs_error;
        details.push(PointError {
            label: if i == 0 { "delta_1".into() } else { format!("random #{i}") },
            observed: r.max_abs_error,
            expected: 0.0,
            error: r.max_abs_error,
        });
    }
    Ok(vec![VerificationReport::new("gstar_claim", violations, 0.0)
        .param("s", 0.5)
        .param("inputs", inputs.len())
        .with_details(details)])
}

/// Compensator identities and jump statistics at `s = 1/2`, `T = 1`.
pub fn martingale_suite(opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let law = TransitionLaw::new(FractionalKernel::shared(0.5)?);
    let comp = verify_compensator(&law, &LatticeFunction::delta(0), 1.0, opts.mc_paths, opts.seed)?;
    let st = jump_statistics(&law, 1.0, opts.mc_paths, opts.seed ^ 0x5eed)?;
    let mut table = ErrorTable::default();
    let se = st.count.standard_error();
    table.push("mean jump count", st.count.mean, st.expected_count, (st.count.mean - st.expected_count).abs() / (3.0 * se));
    let use_ = st.unit_jump.standard_error();
    table.push(
        "P(|J| = 1)",
        st.unit_jump.mean,
        st.unit_jump_expected,
        (st.unit_jump.mean - st.unit_jump_expected).abs() / (3.0 * use_),
    );
    let stats = table
        .into_report("jump_statistics", 1.0)
        .param("paths", st.paths)
        .note("errors are deviations in units of three standard errors")
        .note(format!(
            "jump counts: chi-square {:.2} on {} degrees of freedom, p = {:.3}",
            st.chi_square, st.degrees_of_freedom, st.p_value
        ))
        .note(format!("first-jump total variation {:.4}", st.total_variation));
    let law_fit = VerificationReport::new("jump_law_fit", (st.total_variation / 0.01).max(if st.p_value < 0.01 { 2.0 } else { 0.0 }), 1.0)
        .param("paths", st.paths)
        .note(format!("chi-square p-value {:.4} (level 0.01), total variation {:.4} (limit 0.01)", st.p_value, st.total_variation));
    Ok(vec![comp, stats, law_fit])
}

/// Representation of `G_{*,T}(delta_0)^2(0)` at `s = 1/2`, `T = 1/2`.
pub fn representation_suite(opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let law = TransitionLaw::new(FractionalKernel::shared(0.5)?);
    let r = verify_gstar_representation(
        &law,
        &LatticeFunction::delta(0),
        0.5,
        0,
        Window::new(-30, 30)?,
        opts.representation_paths_per_start,
        opts.seed,
    )?;
    Ok(vec![r])
}

/// Domination over random `(U, f)` pairs, constant potentials, and
/// Feynman–Kac for `U = f = delta_0`.
pub fn schrodinger_suite(opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let mut rng = rng_for(opts.seed, Suite::Schrodinger);
    let orders = [0.25, 0.5, 0.75];
    let kernels: Vec<_> = orders.iter().map(|&s| FractionalKernel::shared(s)).collect::<Result<_>>()?;
    let mut violations = 0.0;
    let mut details = Vec::new();
    for i in 0..opts.schrodinger_pairs {
        let k = kernels[i % orders.len()].clone();
        let u = random_nonnegative(&mut rng, Window::new(-5, 5)?, 0.3).scale(5.0);
        let f = random_nonnegative(&mut rng, Window::new(-8, 8)?, 0.3);
        let ev = SchrodingerEvaluator::new(k, u)?;
        let r = verify_domination(&ev, &f, &[0.1, 1.0, 10.0])?;
        if r.max_abs_error > 0.0 {
            details.push(PointError {
                label: format!("pair #{i}"),
                observed: r.max_abs_error,
                expected: 0.0,
                error: r.max_abs_error,
            });
        }
        violations += r.max_abs_error;
    }
    let domination = VerificationReport::new("schrodinger_domination_suite", violations, 0.0)
        .param("pairs", opts.schrodinger_pairs)
        .param("t_grid", "0.1, 1, 10")
        .with_details(details);
    let mut out = vec![domination];
    let f = random_nonnegative(&mut rng, Window::new(-6, 6)?, 0.0);
    for (s, c) in [(0.5, 1.0), (0.25, 0.3), (0.75, 2.5)] {
        out.push(verify_constant_potential(
            FractionalKernel::shared(s)?,
            c,
            &f,
            &[0.1, 1.0, 5.0],
            Window::centered(0, 100)?,
            1e-8,
        )?);
    }
    let k = FractionalKernel::shared(0.5)?;
    let ev = SchrodingerEvaluator::new(k, LatticeFunction::delta(0))?;
    out.push(verify_feynman_kac(&ev, &LatticeFunction::delta(0), 0, 1.0, opts.mc_paths, opts.seed)?);
    Ok(out)
}

/// Ceilings for the boundedness suite, fixed from exploratory runs with a
/// wide safety factor.
pub const BOUNDEDNESS_CEILINGS: [(&str, f64); 6] = [
    ("Gtilde q=1.5", 2.0),
    ("H q=1.2", 2.0),
    ("G q=2", 1.0),
    ("G q=3", 2.0),
    ("Hq q=1.5", 3.0),
    ("GtildeU q=1.5", 2.0),
];

/// Time-tail tolerance for the boundedness suite; the ratios are far
/// coarser than the default `1e-9`.
pub const BOUNDEDNESS_TAIL_TOLERANCE: f64 = 1e-6;

/// Allowed growth of the mean ratio from width 21 to width 81.
pub const BOUNDEDNESS_GROWTH: f64 = 1.15;

/// Ratios `||S f||_q / ||f||_q` for one square function over inputs on
/// windows of width 21, 41 and 81. Returns `(width, ratio)` pairs.
pub fn boundedness_ratios(label: &str, opts: &SuiteOptions, s: f64) -> Result<Vec<(usize, f64)>> {
    let seed_offset = BOUNDEDNESS_CEILINGS.iter().position(|(l, _)| *l == label).unwrap_or(0) as u64;
    let mut rng = rng_for(opts.seed.wrapping_add(seed_offset), Suite::Boundedness);
    let engine = SquareFunctions::new(s)?.with_margin(128);
    let widths = [21usize, 41, 81];
    let mut out = Vec::new();
    for i in 0..opts.boundedness_inputs {
        let n = widths[i % widths.len()];
        let half = (n / 2) as i64;
        let fw = Window::centered(0, half)?;
        let points = fw.expand(n as i64)?;
        let f = random_nonnegative(&mut rng, fw, 0.3);
        if f.sup_norm() == 0.0 {
            continue;
        }
        let profile = |kind: SquareKind| -> Result<SquareProfile> {
            let quad = engine.quadrature(&f, kind, BOUNDEDNESS_TAIL_TOLERANCE)?;
            engine.profile(&f, kind, points, &quad)
        };
        let (profile, q) = match label {
            "Gtilde q=1.5" => (profile(SquareKind::Gtilde)?, 1.5),
            "H q=1.2" => (profile(SquareKind::H)?, 1.2),
            "G q=2" => (profile(SquareKind::G)?, 2.0),
            "G q=3" => (profile(SquareKind::G)?, 3.0),
            "Hq q=1.5" => (profile(SquareKind::Hq { q: 1.5 })?, 1.5),
            "GtildeU q=1.5" => {
                let u = random_nonnegative(&mut rng, Window::new(-5, 5)?, 0.3);
                let ev = SchrodingerEvaluator::with_window(engine.kernel().clone(), u, points.expand(64)?)?;
                (square_gtilde_schrodinger(&ev, &f, points, BOUNDEDNESS_TAIL_TOLERANCE)?, 1.5)
            }
            _ => return Err(Error::param("label", format!("unknown square function `{label}`"))),
        };
        let ratio = lq_norm(&profile.as_function(), q)? / lq_norm(&f, q)?;
        out.push((n, ratio));
    }
    Ok(out)
}

/// Empirical `l^q` ratios against fixed ceilings with a growth test
/// between the smallest and largest input windows.
pub fn boundedness_suite(opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let s = 0.5;
    let mut out = Vec::new();
    for (label, ceiling) in BOUNDEDNESS_CEILINGS {
        let ratios = boundedness_ratios(label, opts, s)?;
        let max = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
        let mean_at = |w: usize| {
            let v: Vec<f64> = ratios.iter().filter(|r| r.0 == w).map(|r| r.1).collect();
            v.iter().sum::<f64>() / v.len().max(1) as f64
        };
        let (m21, m41, m81) = (mean_at(21), mean_at(41), mean_at(81));
        let growth = m81 / m21;
        // both conditions expressed as a ratio that must stay at or below 1
        let err = (max / ceiling).max(growth / BOUNDEDNESS_GROWTH);
        out.push(
            VerificationReport::new(format!("boundedness {label}"), err, 1.0)
                .param("s", s)
                .param("inputs", ratios.len())
                .param("ceiling", ceiling)
                .with_details(vec![
                    PointError { label: "max ratio".into(), observed: max, expected: ceiling, error: max / ceiling },
                    PointError { label: "mean ratio, width 21".into(), observed: m21, expected: m21, error: 0.0 },
                    PointError { label: "mean ratio, width 41".into(), observed: m41, expected: m21, error: 0.0 },
                    PointError { label: "mean ratio, width 81".into(), observed: m81, expected: m21, error: growth / BOUNDEDNESS_GROWTH },
                ])
                .note("empirical suprema over random inputs; no operator norm is certified"),
        );
    }
    Ok(out)
}

/// Runs one suite.
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    match suite {
        Suite::Kernel => kernel_exactness(),
        Suite::Symbol => symbol_identity(),
        Suite::ClassicalHeat => classical_heat_kernel_check(),
        Suite::FractionalHeat => fractional_heat_kernel_checks(),
        Suite::GammaCoherence => gamma_coherence(opts),
        Suite::Pointwise => pointwise_suite(opts),
        Suite::Isometry => isometry_anchor(),
        Suite::Counterexample => counterexample_suite(opts),
        Suite::GstarClaim => gstar_claim(opts),
        Suite::Martingale => martingale_suite(opts),
        Suite::Representation => representation_suite(opts),
        Suite::Schrodinger => schrodinger_suite(opts),
        Suite::Boundedness => boundedness_suite(opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert!(!s.description().is_empty());
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn random_inputs_are_reproducible() {
        let w = Window::new(-3, 3).unwrap();
        let a = random_nonnegative(&mut rng_for(1, Suite::Pointwise), w, 0.3);
        let b = random_nonnegative(&mut rng_for(1, Suite::Pointwise), w, 0.3);
        assert_eq!(a, b);
        let c = random_nonnegative(&mut rng_for(1, Suite::Schrodinger), w, 0.3);
        assert_ne!(a, c);
        assert!(a.is_nonnegative());
    }

    #[test]
    fn quick_options_are_smaller() {
        let q = SuiteOptions::quick();
        let d = SuiteOptions::default();
        assert!(q.random_functions < d.random_functions && q.mc_paths < d.mc_paths);
        let json = serde_json::to_string(&q).unwrap();
        let back: SuiteOptions = serde_json::from_str(&json).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn classical_suite_passes() {
        let r = classical_heat_kernel_check().unwrap();
        assert!(r.iter().all(|r| r.passed));
    }
}
