//! Compactly supported initial data built from the quartic bump
//! `B(x) = (1 - (x/R)²)⁴` on `|x| <= R`.
//!
//! The bump is C³ across `±R`, so every family is admissible `C²×C¹` data.
//! Derivatives and antiderivatives are exact polynomials.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Initial-data family; each one satisfies one of the blow-up hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `f = amp_f·B`, `g = amp_g·B`; `∫g > 0`.
    GPositive,
    /// `f = amp_f·B`, `g = amp_g·(x/R)·B`; `∫g = 0` by oddness.
    GZeroOdd,
    /// `f = amp_f·B >= 0`, `g ≡ 0`.
    FPositiveGZero,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::GPositive, Family::GZeroOdd, Family::FPositiveGZero];

    pub fn name(self) -> &'static str {
        match self {
            Family::GPositive => "g-positive",
            Family::GZeroOdd => "g-zero-odd",
            Family::FPositiveGZero => "f-positive-g-zero",
        }
    }

    /// Whether the speed datum has vanishing total integral.
    pub fn zero_integral(self) -> bool {
        !matches!(self, Family::GPositive)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|fam| fam.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown data family '{s}'")))
    }
}

/// Anything with a position datum `f` and speed datum `g` claimed to vanish
/// outside `[-R, R]`.
pub trait CompactData {
    fn support_radius(&self) -> f64;
    fn f(&self, x: f64) -> f64;
    fn g(&self, x: f64) -> f64;
}

/// `(1-u²)⁴` for `|u| < 1`, else 0.
#[inline]
fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - u * u;
    let q2 = q * q;
    q2 * q2
}

/// Antiderivative of `(1-v²)⁴` normalised to vanish at `v = -1`.
#[inline]
fn bump_primitive(u: f64) -> f64 {
    let poly = |v: f64| {
        let v2 = v * v;
        v * (1.0 + v2 * (-4.0 / 3.0 + v2 * (6.0 / 5.0 + v2 * (-4.0 / 7.0 + v2 / 9.0))))
    };
    if u <= -1.0 {
        0.0
    } else if u >= 1.0 {
        256.0 / 315.0
    } else {
        poly(u) + 128.0 / 315.0
    }
}

/// Antiderivative of `v(1-v²)⁴`, i.e. `-(1-v²)⁵/10`, vanishing outside `(-1, 1)`.
#[inline]
fn odd_bump_primitive(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - u * u;
    -(q * q * q * q * q) / 10.0
}

/// A concrete initial datum `(f, g)` with closed-form derivatives and `∫g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialDatum {
    pub family: Family,
    #[serde(rename = "R")]
    pub r: f64,
    pub amp_f: f64,
    pub amp_g: f64,
    pub integral_g: f64,
}

/// Builds a datum of the given family, checking the amplitudes against the
/// family's hypothesis.
pub fn make_data(family: Family, r: f64, amp_f: f64, amp_g: f64) -> Result<InitialDatum> {
    if !(r.is_finite() && r >= 1.0) {
        return Err(Error::Config(format!("support radius must be at least 1, got {r}")));
    }
    if !(amp_f.is_finite() && amp_g.is_finite()) {
        return Err(Error::Config("amplitudes must be finite".into()));
    }
    let integral_g = match family {
        Family::GPositive => {
            if !(amp_g > 0.0) {
                return Err(Error::Config(format!(
                    "g-positive needs amp_g > 0 for a positive speed integral, got {amp_g}"
                )));
            }
            amp_g * 256.0 * r / 315.0
        }
        Family::GZeroOdd => 0.0,
        Family::FPositiveGZero => {
            if !(amp_f > 0.0) {
                return Err(Error::Config(format!("f-positive-g-zero needs amp_f > 0, got {amp_f}")));
            }
            if amp_g != 0.0 {
                return Err(Error::Config(format!(
                    "f-positive-g-zero has g identically zero, got amp_g = {amp_g}"
                )));
            }
            0.0
        }
    };
    Ok(InitialDatum { family, r, amp_f, amp_g, integral_g })
}

impl InitialDatum {
    /// Default amplitudes per family: `f = 0` for g-positive, unit bumps otherwise.
    pub fn standard(family: Family, r: f64) -> Result<Self> {
        match family {
            Family::GPositive => make_data(family, r, 0.0, 1.0),
            Family::GZeroOdd => make_data(family, r, 1.0, 1.0),
            Family::FPositiveGZero => make_data(family, r, 1.0, 0.0),
        }
    }

    #[inline]
    fn u(&self, x: f64) -> f64 {
        x / self.r
    }

    pub fn df(&self, x: f64) -> f64 {
        let u = self.u(x);
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - u * u;
        self.amp_f * (-8.0 * u * q * q * q) / self.r
    }

    pub fn d2f(&self, x: f64) -> f64 {
        let u = self.u(x);
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - u * u;
        self.amp_f * (-8.0 * q * q * (1.0 - 7.0 * u * u)) / (self.r * self.r)
    }

    pub fn dg(&self, x: f64) -> f64 {
        let u = self.u(x);
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - u * u;
        match self.family {
            Family::GPositive => self.amp_g * (-8.0 * u * q * q * q) / self.r,
            Family::GZeroOdd => self.amp_g * q * q * q * (1.0 - 9.0 * u * u) / self.r,
            Family::FPositiveGZero => 0.0,
        }
    }

    /// `∫_{-∞}^{x} g(y) dy` in closed form.
    pub fn g_primitive(&self, x: f64) -> f64 {
        let u = self.u(x);
        match self.family {
            Family::GPositive => self.amp_g * self.r * bump_primitive(u),
            Family::GZeroOdd => self.amp_g * self.r * odd_bump_primitive(u),
            Family::FPositiveGZero => 0.0,
        }
    }

    /// `∫_lo^hi g(y) dy`.
    pub fn g_integral(&self, lo: f64, hi: f64) -> f64 {
        self.g_primitive(hi) - self.g_primitive(lo)
    }

    /// `sup |f|`.
    pub fn f_sup(&self) -> f64 {
        self.amp_f.abs()
    }

    /// Largest amplitude, used to scale absolute tolerances.
    pub fn amplitude(&self) -> f64 {
        self.amp_f.abs().max(self.amp_g.abs())
    }

    /// `∫_0^R f(-β)^p dβ` by adaptive quadrature.
    ///
    /// Only meaningful for `f >= 0`; negative values are raised through `|f|`.
    pub fn f_power_integral(&self, p: f64) -> f64 {
        let integrand = |beta: f64| self.f(-beta).abs().powf(p);
        // Scale for the relative tolerance: the integrand peaks at β = 0.
        let scale = (self.f(0.0).abs().powf(p) * self.r).max(f64::MIN_POSITIVE);
        quad::adaptive_simpson(integrand, 0.0, self.r, 1e-12 * scale)
    }
}

impl CompactData for InitialDatum {
    fn support_radius(&self) -> f64 {
        self.r
    }

    fn f(&self, x: f64) -> f64 {
        self.amp_f * bump(self.u(x))
    }

    fn g(&self, x: f64) -> f64 {
        let u = self.u(x);
        match self.family {
            Family::GPositive => self.amp_g * bump(u),
            Family::GZeroOdd => self.amp_g * u * bump(u),
            Family::FPositiveGZero => 0.0,
        }
    }
}

/// Samples `f` and `g` on `R <= |x| <= 2R` and reports whether every sample is exactly zero.
pub fn check_support<D: CompactData + ?Sized>(datum: &D, n_samples: usize) -> bool {
    let r = datum.support_radius();
    let n = n_samples.max(1);
    (0..n).all(|k| {
        let frac = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
        let x = r * (1.0 + frac);
        [x, -x].iter().all(|&y| datum.f(y) == 0.0 && datum.g(y) == 0.0)
    })
}
