//! Amplitude sweeps, lifespan-law fits, reports and paired-family comparisons.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{lower_bound_shape, IntegralCase, Law};
use crate::data::{make_data, Family, InitialDatum};
use crate::error::{Error, Result};
use crate::marcher::{default_threshold, detect_lifespan, LifespanReport, Status};
use crate::model::{Gauge, Params};

/// Default absolute slope tolerance.
pub const DEFAULT_TOL_ABS: f64 = 0.15;
/// Minimum coefficient of determination for a passing power-law fit.
pub const MIN_R_SQUARED: f64 = 0.98;
/// Largest gauge spread for a passing gauge-law check.
pub const MAX_GAUGE_SPREAD: f64 = 2.0;
/// Minimum number of usable records for any fit.
pub const MIN_RECORDS: usize = 4;
/// Minimum span of the amplitude list in decades.
pub const MIN_DECADES: f64 = 1.0;
/// `t_max(ε)` is this multiple of the calibrated bound shape.
pub const T_MAX_FACTOR: f64 = 3.0;
/// Doublings of the window allowed while calibrating or retrying.
const MAX_DOUBLINGS: usize = 12;

/// Sweep configuration, read verbatim from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub p: f64,
    pub a: f64,
    pub family: Family,
    #[serde(rename = "R")]
    pub r: f64,
    pub amp_f: f64,
    pub amp_g: f64,
    pub eps_list: Vec<f64>,
    pub h_list: Vec<f64>,
    /// Defaults to `10⁶·max(1, ε)` per amplitude.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub tol_abs: Option<f64>,
    #[serde(default)]
    pub out_csv: Option<PathBuf>,
    #[serde(default)]
    pub out_json: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn tol(&self) -> f64 {
        self.tol_abs.unwrap_or(DEFAULT_TOL_ABS)
    }

    fn threshold_for(&self, eps: f64) -> f64 {
        self.threshold.unwrap_or_else(|| default_threshold(eps))
    }

    fn validate(&self) -> Result<()> {
        if self.eps_list.len() < MIN_RECORDS {
            return Err(Error::Config(format!(
                "need at least {MIN_RECORDS} amplitudes, got {}",
                self.eps_list.len()
            )));
        }
        if self.eps_list.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Config("amplitudes must be positive and finite".into()));
        }
        let hi = self.eps_list.iter().copied().fold(0.0, f64::max);
        let lo = self.eps_list.iter().copied().fold(f64::INFINITY, f64::min);
        if (hi / lo).log10() < MIN_DECADES - 1e-9 {
            return Err(Error::Config(format!(
                "amplitudes must span at least {MIN_DECADES} decade(s), got [{lo}, {hi}]"
            )));
        }
        Params::new(self.p, self.a, hi, self.r)?;
        Ok(())
    }
}

/// Least-squares fit of `log T` against `log ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Pass/fail with the rule that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub rule: String,
}

/// Outcome of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// Sorted by descending amplitude.
    pub records: Vec<LifespanReport>,
    pub law: Law,
    /// Slope for power laws, gauge exponent otherwise.
    pub theoretical_exponent: f64,
    pub fit: Option<Fit>,
    pub gauge_spread: Option<f64>,
    /// `T/shape` on the largest amplitude, used to size every window.
    pub calibration: f64,
    pub verdict: Verdict,
}

/// A `(ε, T)` pair that may be excluded from fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifespanPoint {
    pub eps: f64,
    pub t: f64,
    pub usable: bool,
}

impl From<&LifespanReport> for LifespanPoint {
    fn from(r: &LifespanReport) -> Self {
        match (r.status, r.t_num()) {
            (Status::BlewUp, Some(t)) if !r.unreliable && t > 0.0 => {
                LifespanPoint { eps: r.eps, t, usable: true }
            }
            _ => LifespanPoint { eps: r.eps, t: f64::NAN, usable: false },
        }
    }
}

pub fn points(records: &[LifespanReport]) -> Vec<LifespanPoint> {
    records.iter().map(LifespanPoint::from).collect()
}

fn usable(points: &[LifespanPoint]) -> Result<Vec<LifespanPoint>> {
    let kept: Vec<LifespanPoint> = points.iter().copied().filter(|p| p.usable).collect();
    if kept.len() < MIN_RECORDS {
        return Err(Error::InsufficientRecords { needed: MIN_RECORDS, got: kept.len() });
    }
    Ok(kept)
}

/// Ordinary least squares of `log T` on `log ε` over usable points.
pub fn fit_exponent(points: &[LifespanPoint]) -> Result<Fit> {
    let kept = usable(points)?;
    let n = kept.len() as f64;
    let xs: Vec<f64> = kept.iter().map(|p| p.eps.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.t.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("all amplitudes coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(Fit { slope, intercept, r_squared })
}

/// `max q / min q` for `q = gauge(T)·ε^{exponent}` over usable points.
pub fn fit_gauge_constancy(points: &[LifespanPoint], gauge: Gauge, exponent: f64) -> Result<f64> {
    let kept = usable(points)?;
    let qs: Vec<f64> = kept.iter().map(|p| gauge.eval(p.t) * p.eps.powf(exponent)).collect();
    let hi = qs.iter().copied().fold(0.0, f64::max);
    let lo = qs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(hi / lo)
}

/// Verdict of a law against usable points.
pub fn judge(points: &[LifespanPoint], law: &Law, tol_abs: f64) -> (Option<Fit>, Option<f64>, Verdict) {
    let fit = fit_exponent(points).ok();
    if law.is_power_law() {
        let verdict = match fit {
            Some(f) => Verdict {
                pass: (f.slope - law.slope()).abs() <= tol_abs && f.r_squared >= MIN_R_SQUARED,
                rule: format!("|slope - {:.6}| <= {tol_abs} and r2 >= {MIN_R_SQUARED}", law.slope()),
            },
            None => Verdict { pass: false, rule: "too few usable records".into() },
        };
        (fit, None, verdict)
    } else {
        let spread = fit_gauge_constancy(points, law.gauge, law.exponent).ok();
        let verdict = match spread {
            Some(s) => {
                Verdict { pass: s <= MAX_GAUGE_SPREAD, rule: format!("gauge spread <= {MAX_GAUGE_SPREAD}") }
            }
            None => Verdict { pass: false, rule: "too few usable records".into() },
        };
        (fit, spread, verdict)
    }
}

fn run_one(
    datum: &InitialDatum,
    params: &Params,
    h_list: &[f64],
    threshold: f64,
    t_max: f64,
) -> Result<LifespanReport> {
    let mut window = t_max;
    let mut report = detect_lifespan(datum, params, h_list, threshold, window)?;
    for _ in 0..2 {
        if report.status != Status::SurvivedToTmax {
            break;
        }
        window *= 2.0;
        report = detect_lifespan(datum, params, h_list, threshold, window)?;
    }
    Ok(report)
}

/// Ratio `T/shape(ε)` at the largest amplitude, growing the window from
/// `3·shape` until the finest grids blow up.
fn calibrate(config: &SweepConfig, datum: &InitialDatum, law: &Law, eps: f64) -> Result<f64> {
    let params = Params::new(config.p, config.a, eps, config.r)?;
    let shape = law.eval(eps)?;
    let mut window = T_MAX_FACTOR * shape;
    for _ in 0..MAX_DOUBLINGS {
        let rep = detect_lifespan(datum, &params, &config.h_list, config.threshold_for(eps), window)?;
        match (rep.status, rep.t_num()) {
            (Status::BlewUp, Some(t)) => return Ok(t / shape),
            (Status::Diverged, _) => {
                return Err(Error::Precondition(format!("march diverged while calibrating at eps = {eps}")))
            }
            _ => window *= 2.0,
        }
    }
    Err(Error::Precondition(format!("no blow-up within {window} at eps = {eps}")))
}

/// Runs the amplitude sweep; per-amplitude runs are independent and reduced in order.
pub fn sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let datum = make_data(config.family, config.r, config.amp_f, config.amp_g)?;
    let probe = Params::new(config.p, config.a, 1.0, config.r)?;
    let law = lower_bound_shape(IntegralCase::of(config.family), &probe);
    let mut eps_sorted = config.eps_list.clone();
    eps_sorted.sort_by(|a, b| b.total_cmp(a));
    let calibration = calibrate(config, &datum, &law, eps_sorted[0])?;
    let records = eps_sorted
        .par_iter()
        .map(|&eps| {
            let params = Params::new(config.p, config.a, eps, config.r)?;
            let t_max = T_MAX_FACTOR * calibration * law.eval(eps)?;
            run_one(&datum, &params, &config.h_list, config.threshold_for(eps), t_max)
        })
        .collect::<Result<Vec<_>>>()?;
    let (fit, gauge_spread, verdict) = judge(&points(&records), &law, config.tol());
    let theoretical_exponent = if law.is_power_law() { law.slope() } else { law.exponent };
    Ok(SweepResult {
        config: config.clone(),
        records,
        law,
        theoretical_exponent,
        fit,
        gauge_spread,
        calibration,
        verdict,
    })
}

pub const CSV_HEADER: [&str; 8] =
    ["eps", "h_finest", "T_num", "status", "threshold", "slope", "theoretical_exponent", "verdict"];

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// CSV rows (without header): one per record, then a summary row when non-empty.
pub fn csv_rows(result: &SweepResult) -> Vec<[String; 8]> {
    let mut rows: Vec<[String; 8]> = result
        .records
        .iter()
        .map(|r| {
            let status = if r.unreliable {
                format!("{}-unreliable", r.status.name())
            } else {
                r.status.name().to_string()
            };
            [
                r.eps.to_string(),
                r.h_finest().to_string(),
                opt(r.t_num()),
                status,
                r.threshold.to_string(),
                String::new(),
                result.theoretical_exponent.to_string(),
                String::new(),
            ]
        })
        .collect();
    if !rows.is_empty() {
        let slope = result.fit.map(|f| f.slope);
        rows.push([
            "summary".into(),
            String::new(),
            String::new(),
            result.gauge_spread.map_or(String::new(), |g| format!("gauge_spread={g}")),
            String::new(),
            opt(slope),
            result.theoretical_exponent.to_string(),
            if result.verdict.pass { "pass".into() } else { "fail".into() },
        ]);
    }
    rows
}

/// Writes the CSV table and the JSON mirror.
pub fn report(result: &SweepResult, path_csv: &Path, path_json: &Path) -> Result<()> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path: path.clone(), source }
    };
    let mut writer = csv::Writer::from_path(path_csv).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path_csv.to_path_buf(), source },
        other => Error::Config(format!("{other:?}")),
    })?;
    writer.write_record(CSV_HEADER)?;
    for row in csv_rows(result) {
        writer.write_record(&row)?;
    }
    writer.flush().map_err(io(path_csv))?;
    let mut json = serde_json::to_string_pretty(result)?;
    json.push('\n');
    fs::write(path_json, json).map_err(io(path_json))?;
    Ok(())
}

/// Matched-amplitude comparison of a zero-integral and a nonzero-integral sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    /// `(ε, T_zero, T_nonzero)`.
    pub pairs: Vec<(f64, Option<f64>, Option<f64>)>,
    pub violations: usize,
}

/// Counts amplitudes where the zero-integral lifespan fails to exceed the
/// nonzero one. A zero-integral run that outlived its window counts as
/// longer when the window exceeds the other lifespan.
pub fn compare_ordering(zero: &[LifespanReport], nonzero: &[LifespanReport]) -> OrderingReport {
    let mut pairs = Vec::new();
    let mut violations = 0;
    for z in zero {
        let Some(n) = nonzero.iter().find(|n| n.eps == z.eps) else { continue };
        let (tz, tn) = (z.t_num(), n.t_num());
        let ok = match (tz, tn, z.status) {
            (Some(tz), Some(tn), _) => tz > tn,
            (None, Some(tn), Status::SurvivedToTmax) => z.t_max > tn,
            _ => false,
        };
        if !ok {
            violations += 1;
        }
        pairs.push((z.eps, tz, tn));
    }
    OrderingReport { pairs, violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<LifespanPoint> {
        [0.4, 0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&eps| LifespanPoint { eps, t: f(eps), usable: true })
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        let fit = fit_exponent(&synthetic(|e| 1.0 / e)).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let fit = fit_exponent(&synthetic(|e| 3.0 * e.powf(-2.0 / 3.0))).unwrap();
        assert!((fit.slope + 2.0 / 3.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn flagged_points_are_excluded() {
        let mut pts = synthetic(|e| 2.0 / e);
        pts[2] = LifespanPoint { eps: 0.1, t: 1e9, usable: false };
        let fit = fit_exponent(&pts).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        pts[3].usable = false;
        assert!(matches!(fit_exponent(&pts), Err(Error::InsufficientRecords { needed: 4, got: 3 })));
    }

    #[test]
    fn gauge_constancy() {
        let pts = synthetic(|e| Gauge::Phi.invert(1.0 / e).unwrap());
        let spread = fit_gauge_constancy(&pts, Gauge::Phi, 1.0).unwrap();
        assert!((spread - 1.0).abs() < 1e-9);
        let wrong = fit_gauge_constancy(&pts, Gauge::Identity, 1.0).unwrap();
        assert!(wrong > 1.5);
    }

    #[test]
    fn config_validation() {
        let base = SweepConfig {
            p: 2.0,
            a: 1.0,
            family: Family::GPositive,
            r: 1.0,
            amp_f: 0.0,
            amp_g: 1.0,
            eps_list: vec![0.4, 0.2, 0.1, 0.05],
            h_list: vec![0.5, 0.25],
            threshold: None,
            tol_abs: None,
            out_csv: None,
            out_json: None,
        };
        assert!(base.validate().is_err());
        let mut ok = base.clone();
        ok.eps_list = vec![0.4, 0.2, 0.1, 0.04];
        assert!(ok.validate().is_ok());
        let json = r#"{"p":2,"a":1,"family":"g-positive","R":1,"amp_f":0,"amp_g":1,
            "eps_list":[0.4,0.2,0.1,0.04],"h_list":[0.5,0.25],"threshold":null,
            "tol_abs":0.15,"out_csv":"a.csv","out_json":"a.json"}"#;
        let parsed: SweepConfig = serde_json::from_str(json).unwrap();
        assert_eq!(parsed.family, Family::GPositive);
        assert!(serde_json::from_str::<SweepConfig>(&json.replace("\"p\"", "\"q\"")).is_err());
    }
}
