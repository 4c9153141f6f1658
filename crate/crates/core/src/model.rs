//! Problem parameters, the logarithmic gauges `φ` and `ψ_p`, the regime
//! dependent weight of the existence norm, and the space-time region
//! classifier.
//!
//! All logarithms are natural logarithms.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Parameters `(p, a, ε, R)` of the weighted problem
/// `u_tt - u_xx = |u|^p / (1+x²)^{(1+a)/2}` with data `ε(f, g)` supported in `[-R, R]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub p: f64,
    pub a: f64,
    pub eps: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

/// Sign class of the weight exponent `a`; most formulas split three ways on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Negative,
    Zero,
    Positive,
}

impl Regime {
    pub fn of(a: f64) -> Self {
        if a < 0.0 {
            Regime::Negative
        } else if a == 0.0 {
            Regime::Zero
        } else {
            Regime::Positive
        }
    }
}

impl Params {
    pub fn new(p: f64, a: f64, eps: f64, r: f64) -> Result<Self> {
        let params = Self { p, a, eps, r };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(domain(format!("exponent p must exceed 1, got {}", self.p)));
        }
        if !self.a.is_finite() {
            return Err(domain(format!("weight exponent a must be finite, got {}", self.a)));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(domain(format!("amplitude eps must be positive, got {}", self.eps)));
        }
        if !(self.r.is_finite() && self.r >= 1.0) {
            return Err(domain(format!("support radius R must be at least 1, got {}", self.r)));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.a)
    }

    /// Same problem at a different amplitude.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.p, self.a, eps, self.r)
    }
}

/// `φ(s) = s·log(2+s)`.
pub fn phi(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(domain(format!("phi is defined for s >= 0, got {s}")));
    }
    Ok(phi_unchecked(s))
}

/// `ψ_p(s) = s·log^p(2+s)`.
pub fn psi_p(s: f64, p: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(domain(format!("psi_p is defined for s >= 0, got {s}")));
    }
    if !(p > 1.0) {
        return Err(domain(format!("psi_p needs p > 1, got {p}")));
    }
    Ok(psi_unchecked(s, p))
}

#[inline]
fn phi_unchecked(s: f64) -> f64 {
    s * (2.0 + s).ln()
}

#[inline]
fn psi_unchecked(s: f64, p: f64) -> f64 {
    s * (2.0 + s).ln().powf(p)
}

/// A strictly increasing gauge with `gauge(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Gauge {
    Identity,
    Phi,
    Psi { p: f64 },
}

impl Gauge {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Gauge::Identity => s,
            Gauge::Phi => phi_unchecked(s),
            Gauge::Psi { p } => psi_unchecked(s, p),
        }
    }

    pub fn invert(&self, y: f64) -> Result<f64> {
        match self {
            Gauge::Identity => Ok(y),
            _ => invert_gauge(|s| self.eval(s), y, GAUGE_TOL),
        }
    }
}

/// Relative tolerance used for gauge inversion throughout the crate.
pub const GAUGE_TOL: f64 = 1e-10;

/// Inverts a strictly increasing gauge with `gauge(0) = 0` by bisection.
///
/// The upper bracket starts at `s = 1` and doubles until it passes `y`.
/// Returns `s` with `|gauge(s) - y| <= tol·max(1, y)`, or the bracket
/// midpoint once the bracket has collapsed to adjacent floats.
pub fn invert_gauge<G: Fn(f64) -> f64>(gauge: G, y: f64, tol: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(domain(format!("cannot invert gauge at non-finite value {y}")));
    }
    if y < 0.0 {
        return Err(domain(format!("gauge values are nonnegative, got {y}")));
    }
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let scale = y.max(1.0);
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while gauge(hi) < y {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Domain(format!("no upper bracket for gauge value {y}")));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let g = gauge(mid);
        if (g - y).abs() <= tol * scale || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if g < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Weight `w(r, t)` of the existence norm.
pub fn weight(r: f64, t: f64, params: &Params) -> f64 {
    let s = t + r + 3.0 * params.r;
    match params.regime() {
        Regime::Negative => s.powf(params.a),
        Regime::Zero => 1.0 / s.ln(),
        Regime::Positive => 1.0,
    }
}

/// Growth factor `D(T)` of the linear a-priori bound.
pub fn d_of_t(t: f64, params: &Params) -> f64 {
    match params.regime() {
        Regime::Negative => (t + 2.0 * params.r).powf(-params.a),
        Regime::Zero => (t + 3.0 * params.r).ln(),
        Regime::Positive => 1.0,
    }
}

/// Growth factor `E(T)` of the nonlinear a-priori bound.
pub fn e_of_t(t: f64, params: &Params) -> f64 {
    let Params { p, a, r, .. } = *params;
    match params.regime() {
        Regime::Negative => (t + 2.0 * r).powf(1.0 - p * a),
        Regime::Zero => (t + r) * (t + 3.0 * r).ln().powf(p),
        Regime::Positive => t + r,
    }
}

/// Piece of the backward light cone of the data support a point lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// `t+|x| >= R` and `t-|x| >= R`.
    Interior,
    /// `t+|x| >= R` and `|t-|x|| <= R`.
    Exterior,
    /// `t+|x| <= R`.
    Origin,
    /// `|x| > t+R`; the solution vanishes here.
    OutsideCone,
}

/// Classifies `(x, t)`.
///
/// The three closed regions share boundary lines; ties go to the first match
/// in the order Interior, Origin, Exterior.
pub fn classify_region(x: f64, t: f64, r: f64) -> Result<Region> {
    if !(t >= 0.0) {
        return Err(domain(format!("time must be nonnegative, got {t}")));
    }
    let ax = x.abs();
    let region = if t + ax >= r && t - ax >= r {
        Region::Interior
    } else if t + ax <= r {
        Region::Origin
    } else if (t - ax).abs() <= r {
        Region::Exterior
    } else {
        Region::OutsideCone
    };
    Ok(region)
}
