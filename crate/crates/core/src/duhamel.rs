//! Lattice fields, the weighted Duhamel operator
//! `L_a(v)(x,t) = ½∫_0^t ds ∫_{x-t+s}^{x+t-s} v(y,s)(1+y²)^{-(1+a)/2} dy`,
//! and numerical measurement of the constants in the a-priori integral bounds.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::model::{self, Params};
use crate::quad;

/// Uniform lattice `x_i = (i - half)·h`, `t_n = n·h`, `0 <= n <= steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub h: f64,
    pub half: usize,
    pub steps: usize,
}

impl Grid {
    pub fn new(h: f64, half: usize, steps: usize) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(domain(format!("grid spacing must be positive, got {h}")));
        }
        Ok(Self { h, half, steps })
    }

    /// Smallest symmetric grid on `[0, t_max]` whose x-extent covers the
    /// light cone `|x| <= t + R` with one spare cell.
    pub fn covering(h: f64, t_max: f64, r: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(domain(format!("grid spacing must be positive, got {h}")));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(domain(format!("t_max must be positive, got {t_max}")));
        }
        let steps = steps_for(t_max, h)?;
        let half = steps + (r / h).ceil() as usize + 1;
        Self::new(h, half, steps)
    }

    pub fn nx(&self) -> usize {
        2 * self.half + 1
    }

    pub fn nt(&self) -> usize {
        self.steps + 1
    }

    pub fn x(&self, ix: usize) -> f64 {
        (ix as f64 - self.half as f64) * self.h
    }

    pub fn t(&self, it: usize) -> f64 {
        it as f64 * self.h
    }

    pub fn x_min(&self) -> f64 {
        self.x(0)
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx() - 1)
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.steps)
    }
}

/// Number of steps of size `h` in `t_max`; `h` must divide `t_max` up to rounding.
pub fn steps_for(t_max: f64, h: f64) -> Result<usize> {
    let ratio = t_max / h;
    let steps = ratio.round();
    if steps < 1.0 || (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
        return Err(Error::Precondition(format!("grid spacing {h} does not divide t_max = {t_max}")));
    }
    Ok(steps as usize)
}

/// Values on a [`Grid`], stored row by row in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
    /// First time index at which the field was declared blown up.
    pub blowup_index: Option<usize>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.nx() * grid.nt()], blowup_index: None }
    }

    pub fn from_fn<F: FnMut(f64, f64) -> f64>(grid: Grid, mut f: F) -> Self {
        let mut field = Self::zeros(grid);
        for it in 0..grid.nt() {
            let t = grid.t(it);
            for ix in 0..grid.nx() {
                field.values[it * grid.nx() + ix] = f(grid.x(ix), t);
            }
        }
        field
    }

    #[inline]
    pub fn get(&self, ix: usize, it: usize) -> f64 {
        self.values[it * self.grid.nx() + ix]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, it: usize, value: f64) {
        let nx = self.grid.nx();
        self.values[it * nx + ix] = value;
    }

    pub fn row(&self, it: usize) -> &[f64] {
        let nx = self.grid.nx();
        &self.values[it * nx..(it + 1) * nx]
    }

    pub fn row_mut(&mut self, it: usize) -> &mut [f64] {
        let nx = self.grid.nx();
        &mut self.values[it * nx..(it + 1) * nx]
    }

    pub fn blowup_flag(&self) -> bool {
        self.blowup_index.is_some()
    }

    /// Errors on the first non-finite entry or a storage/grid size mismatch.
    pub fn check_finite(&self) -> Result<()> {
        self.check_shape()?;
        let nx = self.grid.nx();
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(Error::NonFinite { ix: k % nx, it: k / nx }),
            None => Ok(()),
        }
    }

    pub fn check_shape(&self) -> Result<()> {
        let expected = self.grid.nx() * self.grid.nt();
        if self.values.len() != expected {
            return Err(Error::GridMismatch(format!(
                "field holds {} values, grid needs {expected}",
                self.values.len()
            )));
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    /// Largest absolute difference over the grid.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// `(1+y²)^{-(1+a)/2}`.
#[inline]
pub fn kernel(y: f64, a: f64) -> f64 {
    (1.0 + y * y).powf(-0.5 * (1.0 + a))
}

fn weighted_rows(v: &Field, a: f64) -> Vec<f64> {
    let g = v.grid;
    let k: Vec<f64> = (0..g.nx()).map(|ix| kernel(g.x(ix), a)).collect();
    let mut out = v.values.clone();
    for row in out.chunks_mut(g.nx()) {
        for (val, kk) in row.iter_mut().zip(&k) {
            *val *= kk;
        }
    }
    out
}

/// `L_a(v)` on the grid of `v` by the trapezoid rule in `y` and `s`, in
/// `O(nx·nt)` operations.
///
/// On grid nodes the moving interval ends exactly on nodes, so no partial
/// cells arise; values beyond the grid are taken as zero.
pub fn apply_la(v: &Field, a: f64) -> Result<Field> {
    v.check_finite()?;
    let g = v.grid;
    let nx = g.nx();
    let pad = g.steps + 1;
    let width = nx + 2 * pad;
    let weighted = weighted_rows(v, a);
    let h2 = 0.5 * g.h * g.h;

    // b_m = c_m·v·k on the padded row; c_0 = ½ is the trapezoid end weight in s.
    let padded = |m: usize, out: &mut [f64]| {
        out.fill(0.0);
        let c = if m == 0 { 0.5 } else { 1.0 };
        for (dst, src) in out[pad..pad + nx].iter_mut().zip(&weighted[m * nx..(m + 1) * nx]) {
            *dst = c * src;
        }
    };

    let mut out = Field::zeros(g);
    let mut b_prev = vec![0.0; width];
    let mut b_cur = vec![0.0; width];
    let mut sum_prev = vec![0.0; width];
    let mut sum_cur = vec![0.0; width];
    let mut sum_next = vec![0.0; width];
    let mut right_cur = vec![0.0; width];
    let mut left_cur = vec![0.0; width];
    let mut right_next = vec![0.0; width];
    let mut left_next = vec![0.0; width];

    for n in 0..g.steps {
        padded(n, &mut b_cur);
        let at = |arr: &[f64], j: isize| -> f64 {
            if j < 0 || j as usize >= width {
                0.0
            } else {
                arr[j as usize]
            }
        };
        for j in 0..width {
            let ji = j as isize;
            sum_next[j] = at(&sum_cur, ji - 1) + at(&sum_cur, ji + 1) - sum_prev[j] - b_prev[j]
                + at(&b_cur, ji - 1)
                + b_cur[j]
                + at(&b_cur, ji + 1);
            right_next[j] = at(&right_cur, ji + 1) + at(&b_cur, ji + 1);
            left_next[j] = at(&left_cur, ji - 1) + at(&b_cur, ji - 1);
        }
        let row = out.row_mut(n + 1);
        for (ix, val) in row.iter_mut().enumerate() {
            let j = ix + pad;
            *val = h2 * (sum_next[j] - 0.5 * (right_next[j] + left_next[j]));
        }
        std::mem::swap(&mut sum_prev, &mut sum_cur);
        std::mem::swap(&mut sum_cur, &mut sum_next);
        std::mem::swap(&mut right_cur, &mut right_next);
        std::mem::swap(&mut left_cur, &mut left_next);
        std::mem::swap(&mut b_prev, &mut b_cur);
    }
    Ok(out)
}

/// Direct `O(nx·nt²·nx)` evaluation of the same quadrature as [`apply_la`].
pub fn apply_la_naive(v: &Field, a: f64) -> Result<Field> {
    v.check_finite()?;
    let g = v.grid;
    let nx = g.nx() as isize;
    let weighted = weighted_rows(v, a);
    let at = |i: isize, m: usize| -> f64 {
        if i < 0 || i >= nx {
            0.0
        } else {
            weighted[m * nx as usize + i as usize]
        }
    };
    let mut out = Field::zeros(g);
    for n in 1..g.nt() {
        for j in 0..nx {
            let mut total = 0.0;
            for m in 0..n {
                let d = (n - m) as isize;
                let mut row = 0.0;
                for i in j - d..=j + d {
                    row += at(i, m);
                }
                row -= 0.5 * (at(j - d, m) + at(j + d, m));
                let c = if m == 0 { 0.5 } else { 1.0 };
                total += c * row;
            }
            out.set(j as usize, n, 0.5 * g.h * g.h * total);
        }
    }
    Ok(out)
}

/// Trapezoid integral over `[lo, hi]` of the piecewise-linear interpolant of
/// `row` (node `i` at `x0 + i·h`), zero outside the row.
fn row_trapezoid(row: &[f64], x0: f64, h: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let n = row.len() as isize;
    let node = |i: isize| -> f64 {
        if i < 0 || i >= n {
            0.0
        } else {
            row[i as usize]
        }
    };
    let interp = |x: f64| -> f64 {
        let u = (x - x0) / h;
        let i = u.floor();
        let frac = u - i;
        let i = i as isize;
        (1.0 - frac) * node(i) + frac * node(i + 1)
    };
    // First node strictly right of lo and last node strictly left of hi.
    let first = ((lo - x0) / h).floor() as isize + 1;
    let last = ((hi - x0) / h).ceil() as isize - 1;
    if first > last {
        return 0.5 * (hi - lo) * (interp(lo) + interp(hi));
    }
    let x_first = x0 + first as f64 * h;
    let x_last = x0 + last as f64 * h;
    let mut total = 0.5 * (x_first - lo) * (interp(lo) + node(first));
    total += 0.5 * (hi - x_last) * (node(last) + interp(hi));
    for i in first..last {
        total += 0.5 * h * (node(i) + node(i + 1));
    }
    total
}

/// `L_a(v)(x, t)` at an arbitrary point, with partial-cell end corrections
/// in `y` and a partial last panel in `s`.
///
/// At grid nodes this reproduces [`apply_la`].
pub fn la_point(v: &Field, a: f64, x: f64, t: f64) -> Result<f64> {
    v.check_shape()?;
    let g = v.grid;
    if !(t >= 0.0 && t <= g.t_max() * (1.0 + 1e-12)) {
        return Err(domain(format!("t = {t} outside [0, {}]", g.t_max())));
    }
    let weighted = weighted_rows(v, a);
    let nx = g.nx();
    let levels = ((t / g.h) * (1.0 + 1e-14)).floor() as usize;
    let levels = levels.min(g.steps);
    let row_value = |m: usize| -> f64 {
        let reach = t - g.t(m);
        if reach <= 0.0 {
            return 0.0;
        }
        row_trapezoid(&weighted[m * nx..(m + 1) * nx], g.x_min(), g.h, x - reach, x + reach)
    };
    let q: Vec<f64> = (0..=levels).map(row_value).collect();
    let mut total = 0.0;
    for m in 0..levels {
        total += 0.5 * g.h * (q[m] + q[m + 1]);
    }
    // Remaining panel ends where the interval has shrunk to a point.
    total += 0.5 * (t - g.t(levels)) * q[levels];
    Ok(0.5 * total)
}

/// Indicator used in the a-priori integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Support {
    /// `(s-R)_+ <= |y| <= s+R`.
    Annulus,
    /// `|y| <= s+R`.
    Disc,
}

/// Sample points `(x >= 0, t)` of one region, `n × n` per region.
fn region_samples(t_end: f64, r: f64, n: usize, interior: bool) -> Vec<(f64, f64)> {
    let n = n.max(2);
    let lin = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (n - 1) as f64;
    let mut pts = Vec::with_capacity(3 * n * n);
    // Origin: t + x <= R.
    let top = r.min(t_end);
    for i in 0..n {
        let t = lin(0.0, top, i);
        for k in 0..n {
            pts.push((lin(0.0, r - t, k), t));
        }
    }
    // Exterior: |t - x| <= R, t + x >= R, via ξ = t - x and η = t + x.
    for i in 0..n {
        let xi = lin(-r, r.min(t_end), i);
        let eta_lo = r.max(xi);
        let eta_hi = 2.0 * t_end - xi;
        if eta_hi < eta_lo {
            continue;
        }
        for k in 0..n {
            let eta = lin(eta_lo, eta_hi, k);
            pts.push((0.5 * (eta - xi), 0.5 * (eta + xi)));
        }
    }
    if interior && t_end > r {
        // Interior: t - x >= R.
        for i in 0..n {
            let xi = lin(r, t_end, i);
            for k in 0..n {
                pts.push((lin(0.0, t_end - xi, k), xi + lin(0.0, t_end - xi, k)));
            }
        }
    }
    pts
}

/// Gauss-Legendre over `[lo, hi]`, split geometrically away from `origin` so
/// that panels stay comparable to the distance from it.
fn graded_gl<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, origin: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mut cuts = vec![lo, hi];
    let mut d = 1.0;
    while d < (hi - origin).abs().max((lo - origin).abs()) {
        for c in [origin - d, origin + d] {
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
        d *= 2.0;
    }
    if origin > lo && origin < hi {
        cuts.push(origin);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).map(|w| quad::composite_gl(&mut f, w[0], w[1], 1)).sum()
}

/// `∫_0^t ds ∫_{x-t+s}^{x+t-s} w(|y|,s)^{-power}·k(y)·χ(y,s) dy`.
fn apriori_integral(x: f64, t: f64, params: &Params, power: f64, support: Support) -> f64 {
    let r = params.r;
    let a = params.a;
    let integrand = |y: f64, s: f64| model::weight(y.abs(), s, params).powf(-power) * kernel(y, a);

    // Endpoint lines cross each other at these times; between them the
    // clipped y-intervals are linear in s.
    let mut cuts = vec![0.0, t];
    let candidates =
        [0.5 * (t - x - r), 0.5 * (t - x + r), t - x, 0.5 * (x + t - r), 0.5 * (x + t + r), x + t, r];
    cuts.extend(candidates.iter().copied().filter(|&s| s > 0.0 && s < t));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let inner = |s: f64| -> f64 {
        let lo = x - t + s;
        let hi = x + t - s;
        let outer = s + r;
        let inner_r = if support == Support::Annulus { (s - r).max(0.0) } else { 0.0 };
        let f = |y: f64| integrand(y, s);
        // Positive part [inner_r, outer] and its mirror.
        let pos = graded_gl(f, lo.max(inner_r), hi.min(outer), 0.0);
        let neg = graded_gl(f, lo.max(-outer), hi.min(-inner_r), 0.0);
        pos + neg
    };
    cuts.windows(2).map(|w| graded_gl(inner, w[0], w[1], 0.0)).sum()
}

fn check_horizon(t_end: f64) -> Result<()> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(domain(format!("T must be positive, got {t_end}")));
    }
    Ok(())
}

/// `I₀(x, t)` with the annulus indicator.
pub fn i0(m: u32, x: f64, t: f64, params: &Params) -> f64 {
    apriori_integral(x, t, params, m as f64, Support::Annulus)
}

/// `I(x, t)` with the disc indicator and weight power `p`.
pub fn i_full(x: f64, t: f64, params: &Params) -> f64 {
    apriori_integral(x, t, params, params.p, Support::Disc)
}

/// Measured constant `max I₀·w(|x|,t)/D(T)^m` over the exterior and origin
/// regions with `t <= T`, `n_samples × n_samples` points per region.
pub fn verify_apriori_i0(m: u32, t_end: f64, params: &Params, n_samples: usize) -> Result<f64> {
    if m > 1 {
        return Err(domain(format!("m must be 0 or 1, got {m}")));
    }
    params.validate()?;
    check_horizon(t_end)?;
    let d = model::d_of_t(t_end, params).powi(m as i32);
    let pts = region_samples(t_end, params.r, n_samples, false);
    Ok(pts
        .par_iter()
        .map(|&(x, t)| i0(m, x, t, params) * model::weight(x, t, params) / d)
        .reduce(|| 0.0, f64::max))
}

/// Measured constant `max I·w(|x|,t)/E(T)` over all three regions with `t <= T`.
pub fn verify_apriori_i(t_end: f64, params: &Params, n_samples: usize) -> Result<f64> {
    params.validate()?;
    check_horizon(t_end)?;
    let e = model::e_of_t(t_end, params);
    let pts = region_samples(t_end, params.r, n_samples, true);
    Ok(pts
        .par_iter()
        .map(|&(x, t)| i_full(x, t, params) * model::weight(x, t, params) / e)
        .reduce(|| 0.0, f64::max))
}
