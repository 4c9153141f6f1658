//! The d'Alembert free wave `u⁰` and the Huygens support check.

use crate::data::{CompactData, InitialDatum};
use crate::error::{Error, Result};

/// `u⁰(x, t) = ½{f(x+t) + f(x-t)} + ½∫_{x-t}^{x+t} g`, without the factor ε.
pub fn u0(x: f64, t: f64, datum: &InitialDatum) -> f64 {
    0.5 * (datum.f(x + t) + datum.f(x - t)) + 0.5 * datum.g_integral(x - t, x + t)
}

/// Free wave bound to a datum.
#[derive(Debug, Clone, Copy)]
pub struct FreeWave<'a> {
    pub datum: &'a InitialDatum,
}

impl<'a> FreeWave<'a> {
    pub fn new(datum: &'a InitialDatum) -> Self {
        Self { datum }
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        u0(x, t, self.datum)
    }
}

/// Absolute tolerance of the Huygens check, relative to the data amplitude.
pub const HUYGENS_TOL: f64 = 1e-12;

/// Samples `u⁰` on `|x| < t - R` for `t ∈ [R, t_max]` and reports whether it
/// vanishes there.
///
/// Uses an `n × n` lattice in `(t, x/(t-R))`, so `n_samples` is rounded up to
/// a square.
pub fn huygens_check(datum: &InitialDatum, t_max: f64, n_samples: usize) -> Result<bool> {
    if datum.integral_g != 0.0 {
        return Err(Error::Precondition(format!(
            "Huygens support needs a speed datum with zero integral, got {}",
            datum.integral_g
        )));
    }
    let r = datum.r;
    if !(t_max > r) {
        return Err(Error::Domain(format!("t_max must exceed R = {r}, got {t_max}")));
    }
    let n = (n_samples as f64).sqrt().ceil().max(2.0) as usize;
    let tol = HUYGENS_TOL * datum.amplitude().max(f64::MIN_POSITIVE);
    let ok = (0..n).all(|it| {
        let t = r + (t_max - r) * it as f64 / (n - 1) as f64;
        let half = t - r;
        (0..n).all(|ix| {
            // Open interval (-half, half).
            let x = half * (2.0 * (ix as f64 + 0.5) / n as f64 - 1.0);
            u0(x, t, datum).abs() <= tol
        })
    });
    Ok(ok)
}
