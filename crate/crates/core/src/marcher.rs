//! Unit-CFL characteristic scheme
//! `u_j^{n+1} = u_{j+1}^n + u_{j-1}^n - u_j^{n-1} + h²·|u_j^n|^p·k(x_j)`,
//! threshold blow-up detection and numerical lifespan extraction.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{CompactData, Family, InitialDatum};
use crate::duhamel::{kernel, Field, Grid};
use crate::error::{domain, Error, Result};
use crate::freewave::u0;
use crate::model::Params;

/// Whether the nonlinear source is switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceMode {
    /// Free wave only.
    Off,
    Full,
}

/// How the first time level is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartMode {
    /// `ε·u⁰(x, h) + (h²/2)·F(x, 0, εf)`: the linear part is exact.
    Exact,
    /// `εf + hεg + (h²/2)(εf'' + F(x, 0, εf))`.
    Taylor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    BlewUp,
    SurvivedToTmax,
    Diverged,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::BlewUp => "BlewUp",
            Status::SurvivedToTmax => "SurvivedToTmax",
            Status::Diverged => "Diverged",
        }
    }
}

/// Default blow-up threshold `10⁶·max(1, ε)`.
pub fn default_threshold(eps: f64) -> f64 {
    1e6 * eps.max(1.0)
}

/// `|u|^p` with a fast path for small integer exponents.
#[derive(Debug, Clone, Copy)]
enum Power {
    Two,
    Int(i32),
    Real(f64),
}

impl Power {
    fn new(p: f64) -> Self {
        if p == 2.0 {
            Power::Two
        } else if p.fract() == 0.0 && p <= 16.0 {
            Power::Int(p as i32)
        } else {
            Power::Real(p)
        }
    }

    #[inline(always)]
    fn apply(self, u: f64) -> f64 {
        match self {
            Power::Two => u * u,
            Power::Int(k) => u.abs().powi(k),
            Power::Real(p) => u.abs().powf(p),
        }
    }
}

/// Single-grid time stepper holding three time levels.
#[derive(Debug, Clone)]
pub struct Marcher {
    grid: Grid,
    power: Power,
    mode: SourceMode,
    cone_cells: usize,
    /// `h²·k(x_j)` with the source off folded in as zero.
    source_weight: Vec<f64>,
    prev: Vec<f64>,
    cur: Vec<f64>,
    next: Vec<f64>,
    /// Index of the level held in `cur`.
    level: usize,
}

impl Marcher {
    /// Sets up levels 0 and 1 on the covering grid of `[0, t_max]`.
    pub fn new(
        datum: &InitialDatum,
        params: &Params,
        h: f64,
        t_max: f64,
        mode: SourceMode,
        start: StartMode,
    ) -> Result<Self> {
        params.validate()?;
        if !(h > 0.0 && t_max > 0.0) {
            return Err(domain(format!("need h > 0 and t_max > 0, got h = {h}, t_max = {t_max}")));
        }
        // Round up so the last level reaches t_max.
        let steps = ((t_max / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let cone_cells = (datum.r / h).ceil() as usize + 1;
        let grid = Grid::new(h, steps + cone_cells, steps)?;
        let nx = grid.nx();
        let h2 = h * h;
        let weight_of = |x: f64| match mode {
            SourceMode::Off => 0.0,
            SourceMode::Full => h2 * kernel(x, params.a),
        };
        let source_weight: Vec<f64> = (0..nx).map(|ix| weight_of(grid.x(ix))).collect();
        let power = Power::new(params.p);
        let eps = params.eps;
        let prev: Vec<f64> = (0..nx).map(|ix| eps * datum.f(grid.x(ix))).collect();
        let cur: Vec<f64> = (0..nx)
            .map(|ix| {
                let x = grid.x(ix);
                let half_src = 0.5 * source_weight[ix] * power.apply(prev[ix]);
                let linear = match start {
                    StartMode::Exact => eps * u0(x, h, datum),
                    StartMode::Taylor => eps * (datum.f(x) + h * datum.g(x) + 0.5 * h2 * datum.d2f(x)),
                };
                linear + half_src
            })
            .collect();
        Ok(Self { grid, power, mode, cone_cells, source_weight, prev, cur, next: vec![0.0; nx], level: 1 })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn mode(&self) -> SourceMode {
        self.mode
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn time(&self) -> f64 {
        self.grid.t(self.level)
    }

    /// Values at the current level.
    pub fn current(&self) -> &[f64] {
        &self.cur
    }

    /// Values at the previous level.
    pub fn previous(&self) -> &[f64] {
        &self.prev
    }

    pub fn done(&self) -> bool {
        self.level >= self.grid.steps
    }

    /// Advances one level and returns `max_j |u_j|` on the new level.
    ///
    /// Only nodes that the light cone of the data can reach are updated; the
    /// rest stay exactly zero.
    pub fn step(&mut self) -> f64 {
        let n = self.level;
        let half = self.grid.half;
        let reach = (n + 1 + self.cone_cells).min(half - 1);
        let (lo, hi) = (half - reach, half + reach);
        let power = self.power;
        let mut peak = 0.0_f64;
        let (prev, cur, next, w) = (&self.prev, &self.cur, &mut self.next, &self.source_weight);
        for j in lo..=hi {
            let v = cur[j + 1] + cur[j - 1] - prev[j] + w[j] * power.apply(cur[j]);
            next[j] = v;
            // NaN compares false and must not be lost.
            if !(v.abs() <= peak) {
                peak = v.abs();
            }
        }
        std::mem::swap(&mut self.prev, &mut self.cur);
        std::mem::swap(&mut self.cur, &mut self.next);
        self.level += 1;
        peak
    }

    /// Marches to the end of the grid or the first threshold crossing.
    pub fn run(&mut self, threshold: f64, mut observe: impl FnMut(f64, &[f64])) -> MarchOutcome {
        let h = self.grid.h;
        let max_abs = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| if !(x.abs() <= m) { x.abs() } else { m });
        observe(0.0, &self.prev);
        observe(h, &self.cur);
        for (t, peak) in [(0.0, max_abs(&self.prev)), (h, max_abs(&self.cur))] {
            if let Some(out) = self.classify(peak, t, threshold) {
                return out;
            }
        }
        while !self.done() {
            let peak = self.step();
            let t = self.time();
            observe(t, &self.cur);
            if let Some(out) = self.classify(peak, t, threshold) {
                return out;
            }
        }
        MarchOutcome { h, status: Status::SurvivedToTmax, t_blow: None, t_reached: self.time() }
    }

    fn classify(&self, peak: f64, t: f64, threshold: f64) -> Option<MarchOutcome> {
        let h = self.grid.h;
        if !peak.is_finite() {
            return Some(MarchOutcome { h, status: Status::Diverged, t_blow: None, t_reached: t });
        }
        if peak >= threshold {
            return Some(MarchOutcome { h, status: Status::BlewUp, t_blow: Some(t), t_reached: t });
        }
        None
    }

    /// Marches the whole grid, keeping every level.
    pub fn run_recording(mut self) -> Field {
        let mut field = Field::zeros(self.grid);
        field.row_mut(0).copy_from_slice(&self.prev);
        field.row_mut(1).copy_from_slice(&self.cur);
        while !self.done() {
            let peak = self.step();
            field.row_mut(self.level).copy_from_slice(&self.cur);
            if !peak.is_finite() && field.blowup_index.is_none() {
                field.blowup_index = Some(self.level);
            }
        }
        field
    }
}

/// Result of a single march.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarchOutcome {
    pub h: f64,
    pub status: Status,
    pub t_blow: Option<f64>,
    pub t_reached: f64,
}

/// Marches once with the exact start and the source on.
pub fn march(
    datum: &InitialDatum,
    params: &Params,
    h: f64,
    t_max: f64,
    threshold: f64,
) -> Result<MarchOutcome> {
    check_threshold(datum, params, threshold)?;
    let mut m = Marcher::new(datum, params, h, t_max, SourceMode::Full, StartMode::Exact)?;
    Ok(m.run(threshold, |_, _| {}))
}

fn check_threshold(datum: &InitialDatum, params: &Params, threshold: f64) -> Result<()> {
    let scale = params.eps * datum.amplitude().max(datum.integral_g.abs());
    if !(threshold > 10.0 * scale) {
        return Err(Error::Precondition(format!(
            "threshold {threshold} is not far above the data size {scale}"
        )));
    }
    Ok(())
}

/// Numerical lifespan on a ladder of grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanReport {
    pub eps: f64,
    pub p: f64,
    pub a: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub family: Family,
    pub grids: Vec<f64>,
    pub t_blow_per_grid: Vec<Option<f64>>,
    pub t_extrapolated: Option<f64>,
    pub threshold: f64,
    pub t_max: f64,
    pub status: Status,
    /// Blow-up times on different grids disagree by more than 20%.
    pub unreliable: bool,
}

impl LifespanReport {
    /// Best available lifespan estimate.
    pub fn t_num(&self) -> Option<f64> {
        self.t_extrapolated
    }

    pub fn h_finest(&self) -> f64 {
        self.grids.last().copied().unwrap_or(f64::NAN)
    }
}

/// Relative spread above which grid results are flagged.
pub const GRID_DISAGREEMENT: f64 = 0.2;

/// `T_f + (T_f - T_c)·h_f/(h_c - h_f)`: linear extrapolation to `h = 0`.
pub fn extrapolate(h_coarse: f64, t_coarse: f64, h_fine: f64, t_fine: f64) -> f64 {
    t_fine + (t_fine - t_coarse) * h_fine / (h_coarse - h_fine)
}

/// Marches every grid of `h_list` (strictly decreasing) up to `t_max`.
pub fn detect_lifespan(
    datum: &InitialDatum,
    params: &Params,
    h_list: &[f64],
    threshold: f64,
    t_max: f64,
) -> Result<LifespanReport> {
    if h_list.len() < 2 {
        return Err(Error::Precondition(format!("need at least two grids, got {}", h_list.len())));
    }
    if h_list.windows(2).any(|w| !(w[1] < w[0])) || !(h_list[h_list.len() - 1] > 0.0) {
        return Err(Error::Precondition("grid ladder must be positive and strictly decreasing".into()));
    }
    let outcomes =
        h_list.iter().map(|&h| march(datum, params, h, t_max, threshold)).collect::<Result<Vec<_>>>()?;
    let t_blow: Vec<Option<f64>> = outcomes.iter().map(|o| o.t_blow).collect();
    let k = outcomes.len();
    let status = if outcomes.iter().any(|o| o.status == Status::Diverged) {
        Status::Diverged
    } else if outcomes[k - 2..].iter().all(|o| o.status == Status::BlewUp) {
        Status::BlewUp
    } else {
        Status::SurvivedToTmax
    };
    let t_extrapolated = match (status, t_blow[k - 2], t_blow[k - 1]) {
        (Status::BlewUp, Some(tc), Some(tf)) => Some(extrapolate(h_list[k - 2], tc, h_list[k - 1], tf)),
        _ => None,
    };
    let found: Vec<f64> = t_blow.iter().flatten().copied().collect();
    let unreliable = if found.len() >= 2 {
        let lo = found.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = found.iter().copied().fold(0.0, f64::max);
        hi > (1.0 + GRID_DISAGREEMENT) * lo
    } else {
        false
    };
    Ok(LifespanReport {
        eps: params.eps,
        p: params.p,
        a: params.a,
        r: params.r,
        family: datum.family,
        grids: h_list.to_vec(),
        t_blow_per_grid: t_blow,
        t_extrapolated,
        threshold,
        t_max,
        status,
        unreliable,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Path of the time-series file that accompanies a snapshot dump.
pub fn series_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".series.csv");
    PathBuf::from(s)
}

/// Marches once and writes `x t u` lines (every `stride` levels, nodes inside
/// the cone) to `path` and `t,max_abs_u` to `<path>.series.csv`.
pub fn march_with_dump(
    datum: &InitialDatum,
    params: &Params,
    h: f64,
    t_max: f64,
    threshold: f64,
    path: &Path,
) -> Result<MarchOutcome> {
    check_threshold(datum, params, threshold)?;
    let mut m = Marcher::new(datum, params, h, t_max, SourceMode::Full, StartMode::Exact)?;
    let grid = m.grid();
    let stride = (grid.steps / 200).max(1);
    let series_file = series_path(path);
    let mut snap = create(path)?;
    let mut series = create(&series_file)?;
    let mut failure: Option<Error> = None;
    writeln!(series, "t,max_abs_u").map_err(io_err(&series_file))?;
    let mut level = 0usize;
    let outcome = m.run(threshold, |t, row| {
        if failure.is_some() {
            return;
        }
        let peak = row.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let mut res = writeln!(series, "{t},{peak:e}").map_err(io_err(&series_file));
        if res.is_ok() && level.is_multiple_of(stride) {
            for (ix, &u) in row.iter().enumerate() {
                let x = grid.x(ix);
                if x.abs() <= t + datum.r {
                    res = writeln!(snap, "{x} {t} {u:e}").map_err(io_err(path));
                    if res.is_err() {
                        break;
                    }
                }
            }
        }
        if let Err(e) = res {
            failure = Some(e);
        }
        level += 1;
    });
    if let Some(e) = failure {
        return Err(e);
    }
    snap.flush().map_err(io_err(path))?;
    series.flush().map_err(io_err(&series_file))?;
    Ok(outcome)
}
