//! Analytic rate expressions: capacity, DD bounds, COMP and LiPo rates,
//! the counting bound, and the test-profile entropy bound.
//!
//! All rates are in bits (base-2 logarithms). The sparsity parameter θ
//! sets how the defective count scales with the population, k = Θ(n^θ).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LOG2_E: f64 = std::f64::consts::LOG2_E;
const LN_2: f64 = std::f64::consts::LN_2;

/// 1/(e ln 2) ≈ 0.5307: the COMP ceiling and the DD knee value.
pub fn inv_e_ln2() -> f64 {
    1.0 / (std::f64::consts::E * LN_2)
}

/// Per-test defective-count probabilities for a Bernoulli design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestProfile {
    /// Probability a test contains no defective.
    pub q0: f64,
    /// Probability a test contains exactly one defective.
    pub q1: f64,
    /// Probability a test contains at least one defective.
    pub q1plus: f64,
}

impl TestProfile {
    pub fn new(q0: f64, q1: f64, q1plus: f64) -> Result<Self> {
        let ok = (0.0..=1.0).contains(&q0)
            && (0.0..=1.0).contains(&q1)
            && q1 <= q1plus + 1e-12
            && (q0 + q1plus - 1.0).abs() <= 1e-9;
        if !ok {
            return Err(Error::OutOfDomain { what: "test profile", value: q0 });
        }
        Ok(TestProfile { q0, q1, q1plus })
    }
}

/// Exact profile for k defectives at Bernoulli parameter p:
/// q0 = (1−p)^k, q1 = kp(1−p)^{k−1}.
pub fn test_profile(p: f64, k: usize) -> Result<TestProfile> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability { value: p });
    }
    let q0 = (1.0 - p).powi(k as i32);
    let q1 = if k == 0 { 0.0 } else { k as f64 * p * (1.0 - p).powi(k as i32 - 1) };
    Ok(TestProfile { q0, q1, q1plus: 1.0 - q0 })
}

/// Large-k limit of [`test_profile`] at p = ν/k:
/// q0 = e^{−ν}, q1 = νe^{−ν}.
pub fn test_profile_asymptotic(nu: f64) -> Result<TestProfile> {
    if nu <= 0.0 || !nu.is_finite() {
        return Err(Error::OutOfDomain { what: "nu", value: nu });
    }
    let q0 = (-nu).exp();
    Ok(TestProfile { q0, q1: nu * q0, q1plus: 1.0 - q0 })
}

fn entropy_unchecked(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Binary entropy h(x) in bits, with h(0) = h(1) = 0 by continuity.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain { what: "entropy argument", value: x });
    }
    Ok(entropy_unchecked(x))
}

/// Bits-per-test ceiling for a decoder that learns from negative tests
/// always but from positive tests only when they hold a single
/// defective: q0·log(1/q0) + q1·log(1/q1plus), with 0·log(1/0) = 0.
pub fn dd_entropy_bound(profile: &TestProfile) -> f64 {
    let negative_term = if profile.q0 > 0.0 { profile.q0 * (1.0 / profile.q0).log2() } else { 0.0 };
    let positive_term =
        if profile.q1 > 0.0 { profile.q1 * (1.0 / profile.q1plus).log2() } else { 0.0 };
    negative_term + positive_term
}

/// Settings for the max–min search over the design intensity ν.
///
/// A coarse grid brackets the maximum and golden-section refinement
/// finishes it off; the min of two smooth curves can be kinked at their
/// crossing, which golden section tolerates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub nu_max: f64,
    pub grid_step: f64,
    pub refine_tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings { nu_max: 8.0, grid_step: 1e-3, refine_tol: 1e-7 }
    }
}

/// Location and value of a one-dimensional maximum over ν.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub nu: f64,
    pub value: f64,
}

fn maximize_over_nu<F: Fn(f64) -> f64>(f: F, opt: &OptimizerSettings) -> Optimum {
    let steps = (opt.nu_max / opt.grid_step).round() as usize;
    let mut best_idx = 1usize;
    let mut best_val = f64::NEG_INFINITY;
    for idx in 1..=steps {
        let value = f(idx as f64 * opt.grid_step);
        if value > best_val {
            best_val = value;
            best_idx = idx;
        }
    }
    let mut lo = (best_idx.saturating_sub(1)).max(1) as f64 * opt.grid_step;
    let hi = ((best_idx + 1).min(steps)) as f64 * opt.grid_step;
    if best_idx == 1 {
        lo = opt.grid_step / 1024.0;
    }

    // Golden-section search for the maximum on [lo, hi].
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > opt.refine_tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        }
    }
    let nu = 0.5 * (a + b);
    Optimum { nu, value: f(nu) }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::OutOfDomain { what: "theta", value: theta });
    }
    Ok(())
}

/// The counting-style minimand ν e^{−ν} log₂e · (1−θ)/θ, maximized at ν = 1.
fn counting_minimand(nu: f64, theta: f64) -> f64 {
    nu * (-nu).exp() * LOG2_E * (1.0 - theta) / theta
}

/// Maximum achievable rate for any detection algorithm over Bernoulli
/// designs, with the maximizing ν.
pub fn capacity_optimum(theta: f64, opt: &OptimizerSettings) -> Result<Optimum> {
    check_theta(theta)?;
    Ok(maximize_over_nu(|nu| entropy_unchecked((-nu).exp()).min(counting_minimand(nu, theta)), opt))
}

/// Maximum achievable rate for any detection algorithm over Bernoulli
/// designs.
pub fn capacity(theta: f64, opt: &OptimizerSettings) -> Result<f64> {
    Ok(capacity_optimum(theta, opt)?.value)
}

/// Rate the definite-defectives decoder is known to achieve:
/// (1/(e ln 2)) · min{1, (1−θ)/θ}.
pub fn dd_lower_rate(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(inv_e_ln2() * 1f64.min((1.0 - theta) / theta))
}

/// Upper bound on the definite-defectives rate, with the maximizing ν.
pub fn dd_upper_optimum(theta: f64, opt: &OptimizerSettings) -> Result<Optimum> {
    check_theta(theta)?;
    Ok(maximize_over_nu(
        |nu| {
            let profile =
                TestProfile { q0: (-nu).exp(), q1: nu * (-nu).exp(), q1plus: 1.0 - (-nu).exp() };
            dd_entropy_bound(&profile).min(counting_minimand(nu, theta))
        },
        opt,
    ))
}

/// Upper bound on the definite-defectives rate.
pub fn dd_upper_rate(theta: f64, opt: &OptimizerSettings) -> Result<f64> {
    Ok(dd_upper_optimum(theta, opt)?.value)
}

/// Sparsity threshold 1/(2 − ln(1 − e^{−1})) below which the DD upper
/// bound sits strictly under capacity.
pub fn theta_star() -> f64 {
    1.0 / (2.0 - (1.0 - (-1f64).exp()).ln())
}

/// Exact maximum achievable COMP rate, (1/(e ln 2))(1−θ).
pub fn comp_rate(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(inv_e_ln2() * (1.0 - theta))
}

/// Entropy-argument ceiling for COMP, 1/(e ln 2); tight only at θ = 0.
pub fn comp_upper() -> f64 {
    inv_e_ln2()
}

/// Coefficient of the LiPo feasibility-LP rate, 1/((8/3) e² ln 2).
pub fn lipo_coefficient() -> f64 {
    1.0 / ((8.0 / 3.0) * std::f64::consts::E.powi(2) * LN_2)
}

/// Rate achieved by the known-k feasibility LP:
/// coefficient · (1−θ)/(1+θ).
pub fn lipo_rate(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(lipo_coefficient() * (1.0 - theta) / (1.0 + theta))
}

/// log₂ C(n, k) via a sum of logs; no factorial overflow.
pub fn counting_bound_tests(n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    let k = k.min(n - k);
    // C(n, k) = Π_{i=1..k} (n − k + i)/i.
    let mut total = 0.0;
    for i in 1..=k {
        total += ((n - k + i) as f64 / i as f64).log2();
    }
    Ok(total)
}

/// Bits learned per test: log₂ C(n, k) / t.
pub fn achieved_rate(n: usize, k: usize, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::ZeroCount { what: "test count t" });
    }
    Ok(counting_bound_tests(n, k)? / t as f64)
}

/// Named rate curves for the standard plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    Capacity,
    DdLower,
    DdUpper,
    Comp,
    Lipo,
}

impl CurveKind {
    pub const ALL: [CurveKind; 5] = [
        CurveKind::Capacity,
        CurveKind::DdLower,
        CurveKind::DdUpper,
        CurveKind::Comp,
        CurveKind::Lipo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Capacity => "capacity",
            CurveKind::DdLower => "dd_lower",
            CurveKind::DdUpper => "dd_upper",
            CurveKind::Comp => "comp",
            CurveKind::Lipo => "lipo",
        }
    }

    pub fn eval(self, theta: f64, opt: &OptimizerSettings) -> Result<f64> {
        match self {
            CurveKind::Capacity => capacity(theta, opt),
            CurveKind::DdLower => dd_lower_rate(theta),
            CurveKind::DdUpper => dd_upper_rate(theta, opt),
            CurveKind::Comp => comp_rate(theta),
            CurveKind::Lipo => lipo_rate(theta),
        }
    }
}

impl std::str::FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "capacity" => Ok(CurveKind::Capacity),
            "dd_lower" => Ok(CurveKind::DdLower),
            "dd_upper" => Ok(CurveKind::DdUpper),
            "comp" => Ok(CurveKind::Comp),
            "lipo" => Ok(CurveKind::Lipo),
            other => Err(Error::Parse(format!("unknown curve '{other}'"))),
        }
    }
}

/// A sampled θ → rate curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub name: String,
    pub samples: Vec<(f64, f64)>,
}

impl RateCurve {
    pub fn sample(kind: CurveKind, thetas: &[f64], opt: &OptimizerSettings) -> Result<RateCurve> {
        for pos in 1..thetas.len() {
            if thetas[pos] <= thetas[pos - 1] {
                return Err(Error::OutOfDomain { what: "theta grid order", value: thetas[pos] });
            }
        }
        let samples = thetas
            .iter()
            .map(|&theta| Ok((theta, kind.eval(theta, opt)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(RateCurve { name: kind.name().to_string(), samples })
    }
}

/// Evenly spaced θ grid over [lo, hi] ⊂ (0, 1).
pub fn theta_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
        return Err(Error::OutOfDomain { what: "theta range", value: lo });
    }
    if step <= 0.0 {
        return Err(Error::OutOfDomain { what: "theta step", value: step });
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

/// θ values where the closed-form regimes of the curves begin and end,
/// located by bisection on curve differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossovers {
    /// Last θ with capacity = 1 (the max–min turns two-sided above it).
    pub capacity_flat_end: f64,
    /// First θ where capacity equals (1/(e ln 2))(1−θ)/θ exactly.
    pub capacity_closed_form_start: f64,
    /// Last θ where the DD upper bound sits on its low-θ plateau.
    pub dd_upper_plateau_end: f64,
    /// First θ where the DD upper bound meets capacity (θ*).
    pub dd_optimal_start: f64,
}

fn bisect<P: Fn(f64) -> bool>(mut lo: f64, mut hi: f64, predicate: P) -> f64 {
    // Invariant: predicate(lo) = false, predicate(hi) = true.
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if predicate(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection margin: golden-section refinement leaves value noise of
/// order `refine_tol` at kinked maxima, so the curve-difference
/// threshold sits well above it.
const CROSSOVER_MARGIN: f64 = 1e-6;

pub fn locate_crossovers(opt: &OptimizerSettings) -> Crossovers {
    let plateau = maximize_over_nu(
        |nu| {
            let profile =
                TestProfile { q0: (-nu).exp(), q1: nu * (-nu).exp(), q1plus: 1.0 - (-nu).exp() };
            dd_entropy_bound(&profile)
        },
        opt,
    )
    .value;
    let simple = |theta: f64| inv_e_ln2() * (1.0 - theta) / theta;

    Crossovers {
        capacity_flat_end: bisect(0.30, 0.36, |theta| {
            capacity(theta, opt).expect("theta in range") < 1.0 - CROSSOVER_MARGIN
        }),
        capacity_closed_form_start: bisect(0.34, 0.37, |theta| {
            simple(theta) - capacity(theta, opt).expect("theta in range") < CROSSOVER_MARGIN
        }),
        dd_upper_plateau_end: bisect(0.33, 0.38, |theta| {
            plateau - dd_upper_rate(theta, opt).expect("theta in range") > CROSSOVER_MARGIN
        }),
        dd_optimal_start: bisect(0.38, 0.43, |theta| {
            let gap = capacity(theta, opt).expect("theta in range")
                - dd_upper_rate(theta, opt).expect("theta in range");
            gap < CROSSOVER_MARGIN
        }),
    }
}
