//! Successive approximation `U_{n+1} = L_a(|U_n + εu⁰|^p)`, `U_1 ≡ 0`, in the
//! weighted sup norm, plus the explicit contraction conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::InitialDatum;
use crate::duhamel::{apply_la, Field, Grid};
use crate::error::{domain, Result};
use crate::freewave::u0;
use crate::model::{self, Params};

/// Norm beyond which the iteration is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// `sup w(|x|,t)·|U(x,t)|` over the grid.
pub fn weighted_norm(u: &Field, params: &Params) -> Result<f64> {
    u.check_finite()?;
    let g = u.grid;
    let mut best = 0.0_f64;
    for it in 0..g.nt() {
        let t = g.t(it);
        for (ix, &v) in u.row(it).iter().enumerate() {
            if v != 0.0 {
                best = best.max(model::weight(g.x(ix).abs(), t, params) * v.abs());
            }
        }
    }
    Ok(best)
}

/// Outcome of [`iterate`].
#[derive(Debug, Clone)]
pub struct PicardResult {
    /// Last computed iterate.
    pub u: Field,
    /// `‖U_1‖, ‖U_2‖, …`.
    pub norms: Vec<f64>,
    /// `‖U_2 - U_1‖, ‖U_3 - U_2‖, …`.
    pub deltas: Vec<f64>,
    pub converged: bool,
    /// Largest of the last (up to three) successive delta ratios.
    pub contraction_ratio: f64,
    /// Index `n` of the first iterate `U_n` whose norm blew past [`DIVERGENCE_NORM`].
    pub diverged_at: Option<usize>,
}

/// `ε·u⁰` sampled on a grid.
pub fn free_field(grid: Grid, datum: &InitialDatum, eps: f64) -> Field {
    Field::from_fn(grid, |x, t| eps * u0(x, t, datum))
}

fn ratio_tail(deltas: &[f64]) -> f64 {
    let ratios: Vec<f64> = deltas.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
    ratios.iter().rev().take(3).fold(0.0_f64, |m, &r| m.max(r))
}

/// Runs the recursion on the covering grid of `[0, T]` with spacing `h`.
///
/// Stops once `‖U_{n+1} - U_n‖ <= tol·‖U_{n+1}‖` or after `n_max` iterates.
pub fn iterate(
    datum: &InitialDatum,
    params: &Params,
    t_end: f64,
    h: f64,
    n_max: usize,
    tol: f64,
) -> Result<PicardResult> {
    params.validate()?;
    if n_max < 2 {
        return Err(domain(format!("n_max must be at least 2, got {n_max}")));
    }
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    let grid = Grid::covering(h, t_end, datum.r)?;
    let free = free_field(grid, datum, params.eps);
    let mut u = Field::zeros(grid);
    let mut norms = vec![0.0];
    let mut deltas = Vec::new();
    let mut converged = false;
    let mut diverged_at = None;

    for n in 2..=n_max {
        let mut source = free.clone();
        for (s, &v) in source.values.iter_mut().zip(&u.values) {
            *s = (*s + v).abs().powf(params.p);
        }
        if source.values.iter().any(|v| !v.is_finite()) {
            diverged_at = Some(n);
            break;
        }
        let next = apply_la(&source, params.a)?;
        let norm = weighted_norm(&next, params)?;
        let mut diff = next.clone();
        for (d, &v) in diff.values.iter_mut().zip(&u.values) {
            *d -= v;
        }
        let delta = weighted_norm(&diff, params)?;
        norms.push(norm);
        deltas.push(delta);
        u = next;
        if !(norm <= DIVERGENCE_NORM) {
            diverged_at = Some(n);
            break;
        }
        if delta <= tol * norm {
            converged = true;
            break;
        }
    }
    Ok(PicardResult { u, contraction_ratio: ratio_tail(&deltas), norms, deltas, converged, diverged_at })
}

/// Truth values of the two contraction inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ContractionCheck {
    pub cond1: bool,
    pub cond2: bool,
}

impl ContractionCheck {
    pub fn both(&self) -> bool {
        self.cond1 && self.cond2
    }
}

/// Evaluates
/// `2^{p²+2p}·C·M^p·E(T)·ε^{p²} <= 2^p·M·ε^p` and
/// `3^{p-1}·p·C·2(2^{p+1}Mε^p)^{p-1}·E(T) + 3^{p-1}·p·M·ε^{p-1}·D(T) <= 1/2`
/// with measured `M` and `C`.
pub fn contraction_conditions(m: f64, c: f64, params: &Params, t_end: f64) -> ContractionCheck {
    let Params { p, eps, .. } = *params;
    let e = model::e_of_t(t_end, params);
    let d = model::d_of_t(t_end, params);
    let lhs1 = 2f64.powf(p * p + 2.0 * p) * c * m.powf(p) * e * eps.powf(p * p);
    let rhs1 = 2f64.powf(p) * m * eps.powf(p);
    let three = 3f64.powf(p - 1.0) * p;
    let lhs2 = three * c * 2.0 * (2f64.powf(p + 1.0) * m * eps.powf(p)).powf(p - 1.0) * e
        + three * m * eps.powf(p - 1.0) * d;
    ContractionCheck { cond1: lhs1 <= rhs1, cond2: lhs2 <= 0.5 }
}

/// Largest `T` in `[0, t_hi]` at which both conditions hold, by bisection
/// (both left sides increase with `T`). `None` if they fail already at `T = 0`.
pub fn max_contractive_time(m: f64, c: f64, params: &Params, t_hi: f64) -> Option<f64> {
    let ok = |t: f64| contraction_conditions(m, c, params, t).both();
    if !ok(0.0) {
        return None;
    }
    if ok(t_hi) {
        return Some(t_hi);
    }
    let (mut lo, mut hi) = (0.0, t_hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Checks `‖|U|^θ|V|^{1-θ}‖ <= ‖U‖^θ‖V‖^{1-θ}` on `trials` random field
/// pairs and exponents; returns the number of violations.
///
/// Fields are random on a small grid; a relative slack of `1e-12` absorbs rounding.
pub fn holder_violations(params: &Params, trials: usize, seed: u64) -> Result<usize> {
    let grid = Grid::covering(0.25, 2.0, params.r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..trials {
        let scale_u: f64 = rng.gen_range(1e-3..1e3);
        let scale_v: f64 = rng.gen_range(1e-3..1e3);
        let theta: f64 = rng.gen_range(0.0..=1.0);
        let mut u = Field::zeros(grid);
        let mut v = Field::zeros(grid);
        for k in 0..u.values.len() {
            u.values[k] = scale_u * rng.gen_range(-1.0..1.0);
            v.values[k] = scale_v * rng.gen_range(-1.0..1.0);
        }
        let mut mix = Field::zeros(grid);
        for k in 0..mix.values.len() {
            mix.values[k] = u.values[k].abs().powf(theta) * v.values[k].abs().powf(1.0 - theta);
        }
        let lhs = weighted_norm(&mix, params)?;
        let rhs = weighted_norm(&u, params)?.powf(theta) * weighted_norm(&v, params)?.powf(1.0 - theta);
        if lhs > rhs * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    Ok(violations)
}
