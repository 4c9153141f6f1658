//! Blow-up constants, the John-type iteration sequences, the K-functionals,
//! and closed-form lifespan bounds.
//!
//! Two integral cases exist: a speed datum with positive integral
//! (`Cg = ½∫g`) and a vanishing speed datum with `f >= 0` (`Cf`-family).

use serde::{Deserialize, Serialize};

use crate::data::{CompactData, Family, InitialDatum};
use crate::error::{domain, Error, Result};
use crate::model::{Gauge, Params, Regime};

/// Which lifespan law applies to the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegralCase {
    /// `∫g > 0`.
    NonZero,
    /// `∫g = 0`.
    Zero,
}

impl IntegralCase {
    pub fn of(family: Family) -> Self {
        if family.zero_integral() {
            IntegralCase::Zero
        } else {
            IntegralCase::NonZero
        }
    }
}

/// Explicit constants of the blow-up argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupConstants {
    pub case: IntegralCase,
    pub p: f64,
    pub a: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    /// Only for `a < 0`.
    pub c6: Option<f64>,
    /// Only for `a < 0`.
    pub c7: Option<f64>,
    /// Nonzero case only.
    pub cg: Option<f64>,
    /// Zero case only.
    pub cf: Option<f64>,
    /// Zero case only.
    pub cf_prime: Option<f64>,
    /// Zero case with `a < 0` only.
    pub cf_dprime: Option<f64>,
    pub sp: f64,
    pub sp_prime: f64,
}

/// `Σ_{j>=1} j/p^j = p/(p-1)²`.
pub fn sp_closed(p: f64) -> f64 {
    p / ((p - 1.0) * (p - 1.0))
}

/// `Σ_{j>=1} (j+1)/p^j = S_p + 1/(p-1)`.
pub fn sp_prime_closed(p: f64) -> f64 {
    sp_closed(p) + 1.0 / (p - 1.0)
}

/// Partial sums `Σ_{j=1}^{n} (j+shift)/p^j`.
pub fn sp_partial(p: f64, n: usize, shift: f64) -> f64 {
    (1..=n).map(|j| (j as f64 + shift) / p.powi(j as i32)).sum()
}

/// Builds the constants; the data must satisfy one of the two blow-up hypotheses.
pub fn compute_constants(params: &Params, datum: &InitialDatum) -> Result<BlowupConstants> {
    params.validate()?;
    let Params { p, a, r, .. } = *params;
    let case = match datum.family {
        Family::GPositive => {
            if !(datum.integral_g > 0.0) {
                return Err(Error::Precondition("the speed datum must have positive integral".into()));
            }
            IntegralCase::NonZero
        }
        Family::FPositiveGZero => {
            if datum.f(-0.5 * datum.r) <= 0.0 {
                return Err(Error::Precondition(
                    "f must be nonnegative and not identically zero on (-R, 0)".into(),
                ));
            }
            IntegralCase::Zero
        }
        Family::GZeroOdd => {
            return Err(Error::Precondition(
                "g-zero-odd data satisfy neither ∫g > 0 nor g ≡ 0 with f >= 0".into(),
            ))
        }
    };
    if (datum.r - r).abs() > 0.0 {
        return Err(Error::Config(format!("datum radius {} differs from R = {r}", datum.r)));
    }
    let q = p - 1.0;
    let c0 = 0.125 * std::f64::consts::FRAC_1_SQRT_2.powf((-(1.0 + a)).max(0.0));
    let c1 = 2.0 * c0 / (1.0 + r).powf(1.0 + a);
    let c2 = q * q * c1;
    let c3 = (-c2.ln() / q).exp();
    let c5 = 2.0 * q * q * c0;
    let c4 = (-c5.ln() / q).exp();
    let (c6, c7) = if a < 0.0 {
        let c7 = 2.0 * q * q * c0 / (1.0 - a);
        (Some((-c7.ln() / q).exp()), Some(c7))
    } else {
        (None, None)
    };
    let (cg, cf, cf_prime, cf_dprime) = match case {
        IntegralCase::NonZero => (Some(0.5 * datum.integral_g), None, None, None),
        IntegralCase::Zero => {
            let j = datum.f_power_integral(p);
            let two_p = 2f64.powf(p);
            let cf = 2.0 * c0 / (two_p * (1.0 + r).powf(1.0 + a)) * j;
            let cf_prime = 2.0 * c0 / two_p * j;
            let cf_dprime = (a < 0.0).then(|| cf_prime / (1.0 - a));
            (None, Some(cf), Some(cf_prime), cf_dprime)
        }
    };
    Ok(BlowupConstants {
        case,
        p,
        a,
        r,
        c0,
        c1,
        c2,
        c3,
        c4,
        c5,
        c6,
        c7,
        cg,
        cf,
        cf_prime,
        cf_dprime,
        sp: sp_closed(p),
        sp_prime: sp_prime_closed(p),
    })
}

impl BlowupConstants {
    fn regime(&self) -> Regime {
        Regime::of(self.a)
    }

    /// Constant of the `M_n` recursion for this regime.
    pub fn recursion_constant(&self) -> f64 {
        match self.regime() {
            Regime::Positive => self.c2,
            Regime::Zero => self.c5,
            Regime::Negative => self.c7.expect("c7 exists for a < 0"),
        }
    }

    /// Data constant of this case and regime (`Cg`, `Cf`, `Cf'` or `Cf''`).
    pub fn data_constant(&self) -> f64 {
        match (self.case, self.regime()) {
            (IntegralCase::NonZero, _) => self.cg.expect("cg exists in the nonzero case"),
            (IntegralCase::Zero, Regime::Positive) => self.cf.expect("cf exists in the zero case"),
            (IntegralCase::Zero, Regime::Zero) => self.cf_prime.expect("cf' exists in the zero case"),
            (IntegralCase::Zero, Regime::Negative) => {
                self.cf_dprime.expect("cf'' exists for a < 0 in the zero case")
            }
        }
    }

    fn matches(&self, params: &Params) -> Result<()> {
        if self.p != params.p || self.a != params.a || self.r != params.r {
            return Err(Error::Config("constants were computed for different (p, a, R)".into()));
        }
        Ok(())
    }

    /// `log M_1`: `log(Cg·ε)` or `log(C·ε^p)`.
    fn log_seed(&self, eps: f64) -> f64 {
        match self.case {
            IntegralCase::NonZero => (self.data_constant() * eps).ln(),
            IntegralCase::Zero => self.data_constant().ln() + self.p * eps.ln(),
        }
    }

    fn s(&self) -> f64 {
        match self.case {
            IntegralCase::NonZero => self.sp,
            IntegralCase::Zero => self.sp_prime,
        }
    }
}

/// `a_n = (p^{n-1} - 1)/(p - 1)`.
pub fn a_closed(p: f64, n: usize) -> f64 {
    (p.powi(n as i32 - 1) - 1.0) / (p - 1.0)
}

/// `b_n = (p^n - 1)/(p - 1)`.
pub fn b_closed(p: f64, n: usize) -> f64 {
    (p.powi(n as i32) - 1.0) / (p - 1.0)
}

/// Checks the closed forms of `a_n` and `b_n` against their recurrences in
/// exact integer arithmetic for rational `p = num/den > 1`, `n <= n_max`.
///
/// Scaled sequences `A_n = den^{n-1}·a_n` and `B_n = den^{n-1}·b_n` are integers:
/// `A_{n+1} = num·A_n + den^n` with closed form `den·(num^{n-1} - den^{n-1})/(num - den)`,
/// `B_{n+1} = num·B_n + den^n` with closed form `(num^n - den^n)/(num - den)`.
pub fn sequences_exact_check(num: u64, den: u64, n_max: usize) -> Result<bool> {
    if !(den >= 1 && num > den) {
        return Err(domain(format!("need p = {num}/{den} > 1")));
    }
    let (num, den) = (num as u128, den as u128);
    let pow = |b: u128, e: usize| -> Option<u128> { b.checked_pow(e as u32) };
    let mut a_rec: u128 = 0;
    let mut b_rec: u128 = 1;
    for n in 1..=n_max {
        let (Some(nn1), Some(dn1), Some(nn), Some(dn)) =
            (pow(num, n - 1), pow(den, n - 1), pow(num, n), pow(den, n))
        else {
            return Err(domain(format!("n = {n} overflows 128-bit arithmetic")));
        };
        let a_closed = den * (nn1 - dn1) / (num - den);
        let b_closed = (nn - dn) / (num - den);
        if a_rec != a_closed || b_rec != b_closed {
            return Ok(false);
        }
        a_rec = num * a_rec + dn;
        b_rec = num * b_rec + dn;
    }
    Ok(true)
}

/// Iteration sequences, index `k` holding the value for `n = k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sequences {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub log_m: Vec<f64>,
}

/// `a_{n+1} = p·a_n + 1, a_1 = 0`; `b_{n+1} = p·b_n + 1, b_1 = 1`; and
/// `log M_{n+1} = log C - 2n·log p + p·log M_n` (nonzero case) or with
/// `2(n+1)` (zero case), seeded by `M_1`.
pub fn sequences(consts: &BlowupConstants, params: &Params, n: usize) -> Result<Sequences> {
    if n < 1 {
        return Err(domain("need n >= 1"));
    }
    consts.matches(params)?;
    let p = params.p;
    let log_c = consts.recursion_constant().ln();
    let shift = match consts.case {
        IntegralCase::NonZero => 0.0,
        IntegralCase::Zero => 1.0,
    };
    let mut a = vec![0.0];
    let mut b = vec![1.0];
    let mut log_m = vec![consts.log_seed(params.eps)];
    for k in 1..n {
        let prev = k - 1;
        a.push(p * a[prev] + 1.0);
        b.push(p * b[prev] + 1.0);
        let step = k as f64 + shift;
        log_m.push(log_c - 2.0 * step * p.ln() + p * log_m[prev]);
    }
    Ok(Sequences { a, b, log_m })
}

/// The six K-functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KCase {
    K1,
    K2,
    K3,
    K4,
    K5,
    K6,
}

impl KCase {
    /// Functional belonging to a case and regime.
    pub fn for_case(case: IntegralCase, regime: Regime) -> Self {
        match (case, regime) {
            (IntegralCase::NonZero, Regime::Positive) => KCase::K1,
            (IntegralCase::NonZero, Regime::Zero) => KCase::K2,
            (IntegralCase::NonZero, Regime::Negative) => KCase::K3,
            (IntegralCase::Zero, Regime::Positive) => KCase::K4,
            (IntegralCase::Zero, Regime::Zero) => KCase::K5,
            (IntegralCase::Zero, Regime::Negative) => KCase::K6,
        }
    }

    fn case(self) -> IntegralCase {
        match self {
            KCase::K1 | KCase::K2 | KCase::K3 => IntegralCase::NonZero,
            _ => IntegralCase::Zero,
        }
    }

    fn regime(self) -> Regime {
        match self {
            KCase::K1 | KCase::K4 => Regime::Positive,
            KCase::K2 | KCase::K5 => Regime::Zero,
            KCase::K3 | KCase::K6 => Regime::Negative,
        }
    }
}

/// `log X(x, t)` with `X = x`, `log(1+x)` or `x^{1-a}/(1+t+x)` by regime.
fn log_space_factor(regime: Regime, x: f64, t: f64, a: f64) -> f64 {
    match regime {
        Regime::Positive => x.ln(),
        Regime::Zero => x.ln_1p().ln(),
        Regime::Negative => (1.0 - a) * x.ln() - (1.0 + t + x).ln(),
    }
}

fn check_k_domain(which: KCase, x: f64, t: f64, r: f64) -> Result<()> {
    if !(x > 0.0 && t - x > r) {
        return Err(domain(format!("({x}, {t}) is outside x > 0, t - x > R")));
    }
    if matches!(which, KCase::K1 | KCase::K4) && x > r {
        return Err(domain(format!("{which:?} needs x <= R, got x = {x}")));
    }
    Ok(())
}

/// Evaluates a K-functional at `(x, t)` for amplitude `params.eps`.
pub fn k_functional(which: KCase, x: f64, t: f64, consts: &BlowupConstants, params: &Params) -> Result<f64> {
    consts.matches(params)?;
    if which.case() != consts.case || which.regime() != params.regime() {
        return Err(Error::Precondition(format!(
            "{which:?} does not belong to the {:?} case with a = {}",
            consts.case, params.a
        )));
    }
    check_k_domain(which, x, t, params.r)?;
    let p = params.p;
    let q = p - 1.0;
    let log_x = log_space_factor(which.regime(), x, t, params.a);
    let power = match which.case() {
        IntegralCase::NonZero => 1.0,
        IntegralCase::Zero => p,
    };
    let head = ((t - x - params.r).ln() + power * log_x) / q;
    Ok(head + consts.recursion_constant().ln() / q - 2.0 * consts.s() * p.ln() + consts.log_seed(params.eps))
}

/// `log{M_n (t-x-R)^{a_n} X^{b_n}}` (zero case) or `log{M_n ((t-x-R)X)^{a_n}}`
/// (nonzero case), the lower bound on `u(x, t)` after `n` steps.
pub fn log_iterated_bound(
    seqs: &Sequences,
    n: usize,
    x: f64,
    t: f64,
    consts: &BlowupConstants,
    params: &Params,
) -> f64 {
    let k = n - 1;
    let log_x = log_space_factor(params.regime(), x, t, params.a);
    let log_d = (t - x - params.r).ln();
    match consts.case {
        IntegralCase::NonZero => seqs.log_m[k] + seqs.a[k] * (log_d + log_x),
        IntegralCase::Zero => seqs.log_m[k] + seqs.a[k] * log_d + seqs.b[k] * log_x,
    }
}

/// A lifespan law `gauge(T)·ε^{exponent} ≈ const`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Law {
    pub gauge: Gauge,
    pub exponent: f64,
}

impl Law {
    /// `gauge⁻¹(ε^{-exponent})`: the bound shape with unit constant.
    pub fn eval(&self, eps: f64) -> Result<f64> {
        self.gauge.invert(eps.powf(-self.exponent))
    }

    /// Log-log slope of `T(ε)` for identity gauges.
    pub fn slope(&self) -> f64 {
        -self.exponent
    }

    pub fn is_power_law(&self) -> bool {
        self.gauge == Gauge::Identity
    }
}

/// Lower-bound shape of the lifespan with unit constant `c = 1`.
pub fn lower_bound_shape(case: IntegralCase, params: &Params) -> Law {
    let Params { p, a, .. } = *params;
    let q = p - 1.0;
    match (case, params.regime()) {
        (IntegralCase::NonZero, Regime::Negative) => Law { gauge: Gauge::Identity, exponent: q / (1.0 - a) },
        (IntegralCase::NonZero, Regime::Zero) => Law { gauge: Gauge::Phi, exponent: q },
        (IntegralCase::NonZero, Regime::Positive) => Law { gauge: Gauge::Identity, exponent: q },
        (IntegralCase::Zero, Regime::Negative) => {
            Law { gauge: Gauge::Identity, exponent: p * q / (1.0 - p * a) }
        }
        (IntegralCase::Zero, Regime::Zero) => Law { gauge: Gauge::Psi { p }, exponent: p * q },
        (IntegralCase::Zero, Regime::Positive) => Law { gauge: Gauge::Identity, exponent: p * q },
    }
}

/// Sufficient blow-up condition `lhs(t₀) > rhs(ε)`, held as logarithms.
struct Display {
    /// `log lhs(t₀)`.
    lhs: Box<dyn Fn(f64) -> f64>,
    /// `log rhs` without the `ε` factor.
    log_k: f64,
    /// `rhs = K·ε^{-eps_power}`.
    eps_power: f64,
}

fn display(consts: &BlowupConstants, params: &Params) -> Result<Display> {
    consts.matches(params)?;
    let Params { p, a, r, .. } = *params;
    let q = p - 1.0;
    let data = consts.data_constant().ln();
    let ln2 = 2f64.ln();
    let (lhs, prefactor, eps_power): (Box<dyn Fn(f64) -> f64>, f64, f64) =
        match (consts.case, params.regime()) {
            (IntegralCase::NonZero, Regime::Positive) => {
                (Box::new(|t: f64| t.ln()), ln2 - r.ln() - consts.c2.ln(), q)
            }
            (IntegralCase::NonZero, Regime::Zero) => {
                (Box::new(|t: f64| t.ln() + (2.0 + t).ln().ln()), 8f64.ln() - consts.c5.ln(), q)
            }
            (IntegralCase::NonZero, Regime::Negative) => (
                Box::new(move |t: f64| (1.0 - a) * t.ln()),
                5f64.ln() + (2.0 - a) * ln2 - consts.c7.expect("a < 0").ln(),
                q,
            ),
            (IntegralCase::Zero, Regime::Positive) => {
                (Box::new(|t: f64| t.ln()), ln2 - p * r.ln() - consts.c2.ln(), p * q)
            }
            (IntegralCase::Zero, Regime::Zero) => (
                Box::new(move |t: f64| t.ln() + p * (2.0 + t).ln().ln()),
                4f64.ln() + p * ln2 - consts.c5.ln(),
                p * q,
            ),
            // The lower estimate behind this case scales like t₀^{1-pa}.
            (IntegralCase::Zero, Regime::Negative) => (
                Box::new(move |t: f64| (1.0 - p * a) * t.ln()),
                p * 5f64.ln() + (2.0 - p * a) * ln2 - consts.c7.expect("a < 0").ln(),
                p * q,
            ),
        };
    let log_k = prefactor + 2.0 * q * consts.s() * p.ln() + (1.0 - p) * data;
    Ok(Display { lhs, log_k, eps_power })
}

/// Smallest admissible blow-up time `t₀ >= 4R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub t0: f64,
    /// The display already holds at `t₀ = 4R`, so `4R` is returned.
    pub at_floor: bool,
}

/// Solves the blow-up display for the smallest `t₀ >= 4R` at which it holds
/// strictly; the returned `t₀` satisfies the strict inequality.
pub fn upper_bound_time(params: &Params, consts: &BlowupConstants) -> Result<UpperBound> {
    params.validate()?;
    let d = display(consts, params)?;
    let target = d.log_k - d.eps_power * params.eps.ln();
    let floor = 4.0 * params.r;
    if (d.lhs)(floor) > target {
        return Ok(UpperBound { t0: floor, at_floor: true });
    }
    let mut lo = floor;
    let mut hi = 2.0 * floor;
    while (d.lhs)(hi) <= target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(domain("blow-up time exceeds the floating-point range"));
        }
    }
    // Invariant: lhs(lo) <= target < lhs(hi).
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (d.lhs)(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(UpperBound { t0: hi, at_floor: false })
}

/// Amplitude at which the display holds with equality at `t₀ = 4R`; below it
/// the display is stronger than `t₀ >= 4R`.
pub fn epsilon_threshold(params: &Params, consts: &BlowupConstants) -> Result<f64> {
    let d = display(consts, params)?;
    let lhs = (d.lhs)(4.0 * params.r);
    Ok(((d.log_k - lhs) / d.eps_power).exp())
}

/// Blow-up point used for the K-functional of each regime.
pub fn blowup_point(which: KCase, t0: f64, r: f64) -> (f64, f64) {
    match which {
        KCase::K1 | KCase::K4 => (r, t0),
        _ => (0.5 * t0, t0),
    }
}

/// Labeled rows of constants and bounds for display.
pub fn bounds_table(params: &Params, datum: &InitialDatum) -> Result<Vec<(String, String)>> {
    let case = IntegralCase::of(datum.family);
    let law = lower_bound_shape(case, params);
    let mut rows = vec![
        ("case".to_string(), format!("{case:?}")),
        ("lower_bound_shape(c=1)".to_string(), format!("{:.6e}", law.eval(params.eps)?)),
    ];
    match compute_constants(params, datum) {
        Ok(c) => {
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6e}"));
            for (k, v) in [
                ("C0", Some(c.c0)),
                ("C1", Some(c.c1)),
                ("C2", Some(c.c2)),
                ("C3", Some(c.c3)),
                ("C4", Some(c.c4)),
                ("C5", Some(c.c5)),
                ("C6", c.c6),
                ("C7", c.c7),
                ("Cg", c.cg),
                ("Cf", c.cf),
                ("Cf'", c.cf_prime),
                ("Cf''", c.cf_dprime),
                ("Sp", Some(c.sp)),
                ("Sp'", Some(c.sp_prime)),
            ] {
                rows.push((k.to_string(), fmt(v)));
            }
            let ub = upper_bound_time(params, &c)?;
            rows.push(("eps_threshold".to_string(), format!("{:.6e}", epsilon_threshold(params, &c)?)));
            rows.push(("t0_upper".to_string(), format!("{:.6e}", ub.t0)));
            rows.push(("t0_at_floor".to_string(), ub.at_floor.to_string()));
        }
        Err(e) => rows.push(("upper_bound".to_string(), format!("unavailable: {e}"))),
    }
    Ok(rows)
}
