use lifespan_core::bounds::{
    a_closed, b_closed, compute_constants, epsilon_threshold, lower_bound_shape, sequences, upper_bound_time,
    IntegralCase,
};
use lifespan_core::data::CompactData;
use lifespan_core::duhamel::{apply_la, Field, Grid};
use lifespan_core::freewave::u0;
use lifespan_core::harness::{csv_rows, report, sweep, SweepConfig, CSV_HEADER};
use lifespan_core::marcher::{Marcher, SourceMode, StartMode};
use lifespan_core::model::{classify_region, invert_gauge, phi, psi_p, weight, Gauge, GAUGE_TOL};
use lifespan_core::picard::holder_violations;
use lifespan_core::quad::composite_gl;
use lifespan_core::{make_data, Family, Params, Region};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::GPositive), Just(Family::GZeroOdd), Just(Family::FPositiveGZero)]
}

fn datum(family: Family, r: f64) -> lifespan_core::InitialDatum {
    match family {
        Family::GPositive => make_data(family, r, 0.5, 1.0),
        Family::GZeroOdd => make_data(family, r, 1.0, 1.0),
        Family::FPositiveGZero => make_data(family, r, 1.0, 0.0),
    }
    .unwrap()
}

fn random_field(grid: Grid, seed: &[f64]) -> Field {
    let mut k = 0usize;
    Field::from_fn(grid, |_, _| {
        k += 1;
        seed[k % seed.len()]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauges_increase(s1 in 0.0..1e6_f64, gap in 1e-6..1e3_f64, p in 1.05..4.0_f64) {
        let s2 = s1 + gap * (1.0 + s1);
        prop_assert!(phi(s1).unwrap() < phi(s2).unwrap());
        prop_assert!(psi_p(s1, p).unwrap() < psi_p(s2, p).unwrap());
    }

    #[test]
    fn gauge_inversion_round_trips(s in 0.0..1e8_f64, p in 1.05..4.0_f64) {
        for gauge in [Gauge::Identity, Gauge::Phi, Gauge::Psi { p }] {
            let back = gauge.invert(gauge.eval(s)).unwrap();
            prop_assert!((back - s).abs() <= 1e-8 * (1.0 + s), "{gauge:?}: {s} -> {back}");
        }
        let back = invert_gauge(|v| phi(v).unwrap(), phi(s).unwrap(), GAUGE_TOL).unwrap();
        prop_assert!((back - s).abs() <= 1e-8 * (1.0 + s));
    }

    #[test]
    fn weight_positive_and_monotone(
        r in 0.0..100.0_f64,
        t in 0.0..100.0_f64,
        dt in 1e-3..50.0_f64,
        a in prop_oneof![-3.0..-0.01_f64, Just(0.0), 0.01..3.0_f64],
    ) {
        let params = Params::new(2.0, a, 0.1, 1.0).unwrap();
        let (w0, w1) = (weight(r, t, &params), weight(r, t + dt, &params));
        prop_assert!(w0 > 0.0 && w1 > 0.0);
        if a <= 0.0 {
            prop_assert!(w1 < w0);
        } else {
            prop_assert_eq!(w1, w0);
        }
    }

    #[test]
    fn regions_partition_the_cone(x in -50.0..50.0_f64, t in 0.0..50.0_f64, r in 1.0..5.0_f64) {
        let region = classify_region(x, t, r).unwrap();
        let ax = x.abs();
        let interior = t + ax >= r && t - ax >= r;
        let origin = t + ax <= r;
        let exterior = t + ax >= r && (t - ax).abs() <= r;
        let expected = if ax > t + r {
            Region::OutsideCone
        } else if interior {
            Region::Interior
        } else if origin {
            Region::Origin
        } else {
            prop_assert!(exterior);
            Region::Exterior
        };
        prop_assert_eq!(region, expected);
    }

    #[test]
    fn exponent_ordering(p in 1.01..6.0_f64, a in -5.0..-0.001_f64) {
        prop_assume!(1.0 - p * a > 0.0);
        prop_assert!((p - 1.0) / (1.0 - a) < p * (p - 1.0) / (1.0 - p * a));
    }

    #[test]
    fn speed_datum_odd_and_integral_matches(x in -2.0..2.0_f64, r in 1.0..4.0_f64, amp in 0.1..5.0_f64) {
        let odd = make_data(Family::GZeroOdd, r, 1.0, amp).unwrap();
        prop_assert!((odd.g(-x) + odd.g(x)).abs() <= 1e-15 * amp);
        let pos = make_data(Family::GPositive, r, 0.0, amp).unwrap();
        let quad = composite_gl(|y| pos.g(y), -r, r, 64);
        prop_assert!((quad - pos.integral_g).abs() <= 1e-12 * amp * r);
    }

    #[test]
    fn free_wave_symmetry_and_speed(
        fam in family(),
        x in 0.0..20.0_f64,
        t in 0.0..15.0_f64,
        r in 1.0..3.0_f64,
    ) {
        let d = datum(fam, r);
        let (plus, minus) = (u0(x, t, &d), u0(-x, t, &d));
        match fam {
            Family::GZeroOdd => {
                // f even, g odd: the f part is even and the g part odd.
                let f_part = 0.5 * (d.f(x + t) + d.f(x - t));
                prop_assert!(((plus + minus) / 2.0 - f_part).abs() <= 1e-12);
            }
            _ => prop_assert!((plus - minus).abs() <= 1e-12),
        }
        if x > t + r {
            prop_assert_eq!(plus, 0.0);
        }
    }

    #[test]
    fn free_wave_diamond_identity(
        fam in family(),
        x in -6.0..6.0_f64,
        t in 0.5..8.0_f64,
        h in 0.01..0.5_f64,
    ) {
        let d = datum(fam, 1.0);
        let lhs = u0(x, t + h, &d) + u0(x, t - h, &d);
        let rhs = u0(x + h, t, &d) + u0(x - h, t, &d);
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn duhamel_linear_and_monotone(
        seed1 in prop::collection::vec(0.0..2.0_f64, 7),
        seed2 in prop::collection::vec(0.0..2.0_f64, 11),
        alpha in -3.0..3.0_f64,
        beta in -3.0..3.0_f64,
        a in -2.0..2.0_f64,
    ) {
        let grid = Grid::covering(0.25, 3.0, 1.0).unwrap();
        let v1 = random_field(grid, &seed1);
        let v2 = random_field(grid, &seed2);
        let mut combo = v1.clone();
        for (c, &w) in combo.values.iter_mut().zip(&v2.values) {
            *c = alpha * *c + beta * w;
        }
        let (l1, l2, lc) = (apply_la(&v1, a).unwrap(), apply_la(&v2, a).unwrap(), apply_la(&combo, a).unwrap());
        let mut bigger = v1.clone();
        for (b, &w) in bigger.values.iter_mut().zip(&v2.values) {
            *b += w;
        }
        let lb = apply_la(&bigger, a).unwrap();
        for k in 0..lc.values.len() {
            let expect = alpha * l1.values[k] + beta * l2.values[k];
            prop_assert!((lc.values[k] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            prop_assert!(lb.values[k] >= l1.values[k] - 1e-14);
        }
    }

    #[test]
    fn marcher_keeps_cone_support_and_sign(
        fam in prop_oneof![Just(Family::GPositive), Just(Family::FPositiveGZero)],
        a in -2.0..2.0_f64,
        eps in 0.01..0.3_f64,
    ) {
        let d = datum(fam, 1.0);
        let params = Params::new(2.0, a, eps, 1.0).unwrap();
        let field = Marcher::new(&d, &params, 0.125, 4.0, SourceMode::Full, StartMode::Exact)
            .unwrap()
            .run_recording();
        let g = field.grid;
        for it in 0..g.nt() {
            for ix in 0..g.nx() {
                let u = field.get(ix, it);
                if g.x(ix).abs() > g.t(it) + 1.0 + 1e-12 {
                    prop_assert_eq!(u, 0.0);
                }
                prop_assert!(u >= -1e-14);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn holder_norm_inequality(seed in any::<u64>(), a in -2.0..2.0_f64) {
        let params = Params::new(2.0, a, 0.1, 1.0).unwrap();
        prop_assert_eq!(holder_violations(&params, 50, seed).unwrap(), 0);
    }
}

#[test]
fn closed_forms_match_recurrences_in_floating_point() {
    for p in [1.5, 2.0, 3.0] {
        let (mut a, mut b) = (0.0_f64, 1.0_f64);
        for n in 1..=40 {
            assert!((a_closed(p, n) - a).abs() <= 1e-12 * a.max(1.0), "a_{n} at p = {p}");
            assert!((b_closed(p, n) - b).abs() <= 1e-12 * b.max(1.0), "b_{n} at p = {p}");
            a = p * a + 1.0;
            b = p * b + 1.0;
        }
    }
}

#[test]
fn iterated_coefficients_dominate_their_lower_bound() {
    for (fam, amp_f, amp_g) in [(Family::GPositive, 0.0, 1.0), (Family::FPositiveGZero, 1.0, 0.0)] {
        for p in [1.5, 2.0, 3.0] {
            for a in [-1.5, 0.0, 1.0] {
                let d = make_data(fam, 1.0, amp_f, amp_g).unwrap();
                let params = Params::new(p, a, 0.05, 1.0).unwrap();
                let c = compute_constants(&params, &d).unwrap();
                let seqs = sequences(&c, &params, 41).unwrap();
                let log_c = c.recursion_constant().ln();
                let s = match c.case {
                    IntegralCase::NonZero => c.sp,
                    IntegralCase::Zero => c.sp_prime,
                };
                let bracket = log_c / (p - 1.0) - 2.0 * s * p.ln() + seqs.log_m[0];
                for n in 1..=40 {
                    let rhs = -log_c / (p - 1.0) + p.powi(n as i32) * bracket;
                    let lhs = seqs.log_m[n];
                    assert!(lhs >= rhs - 1e-9 * rhs.abs().max(1.0), "{fam} p={p} a={a} n={n}: {lhs} < {rhs}");
                }
            }
        }
    }
}

#[test]
fn upper_and_lower_bounds_share_their_shape() {
    for (fam, amp_f, amp_g) in [(Family::GPositive, 0.0, 1.0), (Family::FPositiveGZero, 1.0, 0.0)] {
        for a in [-2.0, -1.0, 0.0, 1.0] {
            let d = make_data(fam, 1.0, amp_f, amp_g).unwrap();
            let probe = Params::new(2.0, a, 1.0, 1.0).unwrap();
            let c = compute_constants(&probe, &d).unwrap();
            let law = lower_bound_shape(IntegralCase::of(fam), &probe);
            let threshold = epsilon_threshold(&probe, &c).unwrap().min(1.0);
            let ratios: Vec<f64> = (0..=10)
                .map(|k| {
                    let eps = threshold * 1e-3 * 10f64.powf(-k as f64 / 10.0);
                    let params = probe.with_eps(eps).unwrap();
                    let upper = upper_bound_time(&params, &c).unwrap();
                    assert!(!upper.at_floor);
                    upper.t0 / law.eval(eps).unwrap()
                })
                .collect();
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), &r| (l.min(r), h.max(r)));
            assert!(lo > 0.0);
            assert!(hi / lo <= 2.0, "{fam} a={a}: ratio spread {}", hi / lo);
        }
    }
}

#[test]
fn empty_and_five_record_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SweepConfig {
        p: 2.0,
        a: 1.0,
        family: Family::GPositive,
        r: 1.0,
        amp_f: 0.0,
        amp_g: 0.02,
        eps_list: vec![0.4, 0.2, 0.1, 0.05, 0.025],
        h_list: vec![0.5, 0.25],
        threshold: None,
        tol_abs: None,
        out_csv: None,
        out_json: None,
    };
    let result = sweep(&cfg).unwrap();
    assert_eq!(csv_rows(&result).len(), 6);
    let mut empty = result.clone();
    empty.records.clear();
    for (name, res, rows) in [("full", &result, 7), ("empty", &empty, 1)] {
        let (csv, json) = (dir.path().join(format!("{name}.csv")), dir.path().join(format!("{name}.json")));
        report(res, &csv, &json).unwrap();
        let first = (std::fs::read(&csv).unwrap(), std::fs::read(&json).unwrap());
        report(res, &csv, &json).unwrap();
        assert!(first == (std::fs::read(&csv).unwrap(), std::fs::read(&json).unwrap()));
        let text = String::from_utf8(first.0).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(text.lines().count(), rows);
        let parsed: serde_json::Value = serde_json::from_slice(&first.1).unwrap();
        assert_eq!(parsed["records"].as_array().unwrap().len(), res.records.len());
    }
}
