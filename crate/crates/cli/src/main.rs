use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lifespan_core::bounds::bounds_table;
use lifespan_core::duhamel::{verify_apriori_i, verify_apriori_i0};
use lifespan_core::freewave::huygens_check;
use lifespan_core::harness::{report, sweep, SweepConfig};
use lifespan_core::marcher::{default_threshold, march, march_with_dump, series_path};
use lifespan_core::picard::{holder_violations, iterate};
use lifespan_core::{make_data, Family, InitialDatum, Params};

/// Largest tolerated change of an a-priori constant under horizon doubling.
const APRIORI_MAX_CHANGE: f64 = 1.2;

#[derive(Parser)]
#[command(name = "lifespan", version, about = "Lifespan laboratory for 1D weighted semilinear waves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// March one solution and report its blow-up time.
    Solve {
        #[arg(long)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        family: Family,
        #[arg(long = "R")]
        r: f64,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long)]
        threshold: Option<f64>,
        /// Writes `x t u` snapshots here and the peak series next to it.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Run an amplitude sweep described by a JSON file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print blow-up constants and bound times.
    Bounds {
        #[arg(long)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        family: Family,
        #[arg(long = "R")]
        r: f64,
        #[arg(long = "amp_f")]
        amp_f: Option<f64>,
        #[arg(long = "amp_g")]
        amp_g: Option<f64>,
    },
    /// Check one structural property and print PASS or FAIL.
    Verify {
        #[arg(long)]
        which: Check,
        #[command(flatten)]
        case: CaseArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Huygens,
    #[value(name = "apriori-i0")]
    AprioriI0,
    #[value(name = "apriori-i")]
    AprioriI,
    Picard,
    Holder,
}

#[derive(clap::Args)]
struct CaseArgs {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = Family::GZeroOdd)]
    family: Family,
    #[arg(long = "R", default_value_t = 1.0)]
    r: f64,
    /// Horizon; defaults to 10R (huygens), 40 (a-priori), 5 (picard).
    #[arg(long)]
    tmax: Option<f64>,
    /// Grid spacing for picard; defaults to tmax/128.
    #[arg(long)]
    h: Option<f64>,
    /// Sample count: points for huygens, per-axis points for a-priori.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn datum_for(family: Family, r: f64, amp_f: Option<f64>, amp_g: Option<f64>) -> Result<InitialDatum> {
    let standard = InitialDatum::standard(family, r)?;
    Ok(make_data(family, r, amp_f.unwrap_or(standard.amp_f), amp_g.unwrap_or(standard.amp_g))?)
}

fn print_verdict(pass: bool, name: &str, detail: String) -> ExitCode {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn solve(
    params: &Params,
    datum: &InitialDatum,
    h: f64,
    tmax: f64,
    threshold: Option<f64>,
    dump: Option<PathBuf>,
) -> Result<ExitCode> {
    let threshold = threshold.unwrap_or_else(|| default_threshold(params.eps));
    let outcome = match &dump {
        Some(path) => march_with_dump(datum, params, h, tmax, threshold, path)?,
        None => march(datum, params, h, tmax, threshold)?,
    };
    let t_blow = outcome.t_blow.map_or("-".to_string(), |t| t.to_string());
    println!(
        "status={} t_blow={} t_reached={} h={} threshold={:e}",
        outcome.status.name(),
        t_blow,
        outcome.t_reached,
        outcome.h,
        threshold
    );
    if let Some(path) = dump {
        println!("dump={} series={}", path.display(), series_path(&path).display());
    }
    Ok(ExitCode::SUCCESS)
}

fn run_sweep(path: &Path) -> Result<ExitCode> {
    let config = SweepConfig::from_json_file(path).with_context(|| format!("reading {}", path.display()))?;
    let result = sweep(&config)?;
    for rec in &result.records {
        let t = rec.t_num().map_or("-".to_string(), |t| format!("{t:.6}"));
        let flag = if rec.unreliable { " unreliable" } else { "" };
        println!("eps={:e} T={t} status={}{flag}", rec.eps, rec.status.name());
    }
    if let Some(fit) = result.fit {
        println!("slope={:.6} r2={:.6} theory={:.6}", fit.slope, fit.r_squared, result.theoretical_exponent);
    }
    if let Some(spread) = result.gauge_spread {
        println!("gauge_spread={spread:.6}");
    }
    match (&config.out_csv, &config.out_json) {
        (Some(csv), Some(json)) => report(&result, csv, json)?,
        (None, None) => {}
        _ => bail!("out_csv and out_json must be given together"),
    }
    println!("verdict={} ({})", if result.verdict.pass { "pass" } else { "fail" }, result.verdict.rule);
    Ok(ExitCode::SUCCESS)
}

fn verify(which: Check, c: &CaseArgs) -> Result<ExitCode> {
    let params = Params::new(c.p, c.a, c.eps, c.r)?;
    Ok(match which {
        Check::Huygens => {
            let datum = datum_for(c.family, c.r, None, None)?;
            let t_max = c.tmax.unwrap_or(10.0 * c.r);
            let samples = c.samples.unwrap_or(10_000);
            let ok = huygens_check(&datum, t_max, samples)?;
            print_verdict(ok, "huygens", format!("{} on [R, {t_max}], {samples} samples", c.family))
        }
        Check::AprioriI0 | Check::AprioriI => {
            let t = c.tmax.unwrap_or(40.0);
            let n = c.samples.unwrap_or(64);
            let change = |lo: f64, hi: f64| (hi / lo).max(lo / hi);
            let (name, detail, worst) = if matches!(which, Check::AprioriI0) {
                let mut worst = 1.0_f64;
                let mut parts = Vec::new();
                for m in [0, 1] {
                    let (lo, hi) =
                        (verify_apriori_i0(m, t, &params, n)?, verify_apriori_i0(m, 2.0 * t, &params, n)?);
                    worst = worst.max(change(lo, hi));
                    parts.push(format!("m={m}: C(T)={lo:.6e} C(2T)={hi:.6e}"));
                }
                ("apriori-i0", parts.join(", "), worst)
            } else {
                let (lo, hi) = (verify_apriori_i(t, &params, n)?, verify_apriori_i(2.0 * t, &params, n)?);
                ("apriori-i", format!("C(T)={lo:.6e} C(2T)={hi:.6e}"), change(lo, hi))
            };
            print_verdict(worst <= APRIORI_MAX_CHANGE, name, format!("T={t}, {detail}, change {worst:.4}"))
        }
        Check::Picard => {
            let datum = datum_for(c.family, c.r, None, None)?;
            let t_max = c.tmax.unwrap_or(5.0);
            let h = c.h.unwrap_or(t_max / 128.0);
            let res = iterate(&datum, &params, t_max, h, 60, 1e-12)?;
            let iterates = res.norms.len();
            print_verdict(
                res.converged,
                "picard",
                format!(
                    "{iterates} iterates, final norm {:.6e}, contraction ratio {:.4}",
                    res.norms.last().copied().unwrap_or(0.0),
                    res.contraction_ratio
                ),
            )
        }
        Check::Holder => {
            let violations = holder_violations(&params, c.trials, c.seed)?;
            print_verdict(
                violations == 0,
                "holder",
                format!("{violations} violations in {} trials", c.trials),
            )
        }
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { p, a, eps, family, r, h, tmax, threshold, dump } => {
            let params = Params::new(p, a, eps, r)?;
            let datum = datum_for(family, r, None, None)?;
            solve(&params, &datum, h, tmax, threshold, dump)
        }
        Command::Sweep { config } => run_sweep(&config),
        Command::Bounds { p, a, eps, family, r, amp_f, amp_g } => {
            let params = Params::new(p, a, eps, r)?;
            let datum = datum_for(family, r, amp_f, amp_g)?;
            let rows = bounds_table(&params, &datum)?;
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in rows {
                println!("{k:<width$}  {v}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { which, case } => verify(which, &case),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
