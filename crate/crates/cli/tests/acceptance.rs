//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Every criterion names the shipped
//! config files it runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use safetyrace::lab::{
    point_spec, sign_with_ties, ClaimReport, DeltaRow, Proposition, SweepRow, TIE_FLOOR,
};
use safetyrace::solver::{deviation_gains, OracleOptions, DEVIATION_TOL};
use safetyrace::{oracle_solve, performance, safety, solve, PlayerParams, StrategyProfile};
use safetyrace_cli::run::{run_claim, run_config_sweep, SweepOutput};
use safetyrace_cli::table;
use safetyrace_cli::Config;

const VERIFY_GRID: usize = 64;
const ORACLE_GRID: usize = 200;
const IDENTITY_DRAWS: usize = 1000;
const IDENTITY_TOL: f64 = 1e-9;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(rel: &str) -> Config {
    Config::load(&configs().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e:#}"))
}

struct Suite {
    failed: usize,
}

impl Suite {
    fn record(&mut self, name: &str, files: &[&str], elapsed: Duration, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!(
            "{} {name} [{}] ({:.1}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            files.join(", "),
            elapsed.as_secs_f64()
        );
    }
}

struct Run {
    file: &'static str,
    out: SweepOutput,
    elapsed: Duration,
}

fn sweep(file: &'static str) -> Run {
    let start = Instant::now();
    let out = run_config_sweep(&load(file)).unwrap_or_else(|e| panic!("{file}: {e:#}"));
    Run {
        file,
        out,
        elapsed: start.elapsed(),
    }
}

fn claim(p: Proposition) -> (String, ClaimReport, Duration) {
    let file = format!("claims/{}.json", p.name());
    let start = Instant::now();
    let report = run_claim(p, &load(&file)).unwrap_or_else(|e| panic!("{file}: {e:#}"));
    (file, report, start.elapsed())
}

fn claim_summary(r: &ClaimReport) -> String {
    let mut s = format!(
        "{} {} ({} checked, {} skipped)",
        r.claim,
        if r.passed { "holds" } else { "fails" },
        r.checked,
        r.skipped_nonconverged
    );
    for f in &r.failures {
        s += &format!("; point {}: {}", f.index + 1, f.diagnostic);
    }
    s
}

fn claim_ok(r: &ClaimReport) -> bool {
    r.passed && r.skipped_nonconverged == 0 && !r.vacuous
}

/// σ series keyed by series label, in axis order, for scheme `none`.
fn sigma_by_series(out: &SweepOutput) -> BTreeMap<String, Vec<(f64, Option<f64>)>> {
    let mut m: BTreeMap<String, Vec<(f64, Option<f64>)>> = BTreeMap::new();
    for r in out.rows.iter().filter(|r| r.scheme == "none") {
        m.entry(r.series.clone().unwrap_or_default())
            .or_default()
            .push((r.axis, r.converged.then_some(r.sigma)));
    }
    m
}

fn deltas_by_series(out: &SweepOutput) -> BTreeMap<String, Vec<DeltaRow>> {
    let mut m: BTreeMap<String, Vec<DeltaRow>> = BTreeMap::new();
    for d in out.deltas.as_deref().unwrap_or_default() {
        m.entry(d.series.clone()).or_default().push(d.clone());
    }
    m
}

fn series_param(label: &str, key: &str) -> Option<f64> {
    label
        .split(',')
        .find_map(|part| part.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

fn mode_of(label: &str) -> &str {
    label
        .split(',')
        .find(|p| *p == "multiplicative" || *p == "winner")
        .unwrap_or("")
}

fn delta_at(rows: &[DeltaRow], axis: f64) -> Option<f64> {
    rows.iter()
        .find(|d| d.axis == axis)
        .and_then(|d| d.delta_sigma)
}

fn fmt_delta(rows: &[DeltaRow]) -> String {
    rows.iter()
        .map(|d| match d.delta_sigma {
            Some(v) => format!("{}:{v:+.2e}", d.axis),
            None => format!("{}:n/c", d.axis),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn sigma_price_regimes(s: &mut Suite, fig1: &Run) {
    let (file, report, t) = claim(Proposition::SigmaMonotoneInR);
    let mut ok = claim_ok(&report);
    let mut bad = Vec::new();
    for (label, series) in sigma_by_series(&fig1.out) {
        let theta = series_param(&label, "theta").unwrap();
        let sig: Option<Vec<f64>> = series.iter().map(|p| p.1).collect();
        let Some(sig) = sig else {
            bad.push(format!("{label}: non-converged point"));
            continue;
        };
        let diffs: Vec<f64> = sig.windows(2).map(|w| w[1] - w[0]).collect();
        let good = if [1.5, 2.0, 4.0].contains(&theta) {
            diffs.iter().all(|&d| d > TIE_FLOOR)
        } else if [0.25, 0.5].contains(&theta) {
            diffs.iter().all(|&d| d < -TIE_FLOOR)
        } else {
            true
        };
        if !good {
            bad.push(format!("{label}: adjacent diffs {diffs:?}"));
        }
    }
    ok &= bad.is_empty();
    let elapsed = fig1.elapsed + t;
    ok &= elapsed < Duration::from_secs(30);
    let detail = if bad.is_empty() {
        claim_summary(&report)
    } else {
        bad.join("; ")
    };
    s.record(
        "sigma_price_regimes",
        &[fig1.file, &file],
        elapsed,
        ok,
        detail,
    );
}

fn sigma_price_boundary(s: &mut Suite, fig1: &Run) {
    let by = sigma_by_series(&fig1.out);
    let span = |theta: f64, mode: &str| -> Option<f64> {
        let (_, series) = by
            .iter()
            .find(|(l, _)| series_param(l, "theta") == Some(theta) && mode_of(l) == mode)?;
        Some((series.last()?.1? - series.first()?.1?).abs())
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for mode in ["multiplicative", "winner"] {
        match (span(1.0, mode), span(1.5, mode)) {
            (Some(flat), Some(steep)) => {
                ok &= flat * 10.0 <= steep;
                parts.push(format!(
                    "{mode}: |dsigma| {flat:.2e} at theta=1 vs {steep:.2e} at theta=1.5"
                ));
            }
            _ => {
                ok = false;
                parts.push(format!("{mode}: missing or non-converged series"));
            }
        }
    }
    s.record(
        "sigma_price_boundary",
        &[fig1.file],
        fig1.elapsed,
        ok,
        parts.join("; "),
    );
}

fn sigma_to_one(s: &mut Suite, fig2: &Run) {
    let (file, report, t) = claim(Proposition::SigmaToOneAsR2ToZero);
    let mut ok = claim_ok(&report);
    let mut parts = Vec::new();
    for (label, series) in sigma_by_series(&fig2.out) {
        let (r2, sigma) = *series.last().unwrap();
        let good = r2 <= 1e-4 && sigma.is_some_and(|v| v >= 0.99);
        ok &= good;
        parts.push(format!("{label}: sigma(r2={r2:e})={sigma:?}"));
    }
    let elapsed = fig2.elapsed + t;
    ok &= elapsed < Duration::from_secs(60);
    parts.push(claim_summary(&report));
    s.record(
        "sigma_to_one_cheap_rival",
        &[fig2.file, &file],
        elapsed,
        ok,
        parts.join("; "),
    );
}

fn productive_threshold(s: &mut Suite, fig3: &Run) {
    let (file, report, t) = claim(Proposition::SubsidyProductiveBetterIffThetaGtNeg1);
    let deltas = deltas_by_series(&fig3.out);
    let winner = &deltas["winner"];
    let neg = [-3.0, -2.0]
        .iter()
        .all(|&th| delta_at(winner, th).is_some_and(|d| sign_with_ties(d) < 0));
    let pos = [-0.5, 0.0, 1.0, 2.0]
        .iter()
        .all(|&th| delta_at(winner, th).is_some_and(|d| sign_with_ties(d) > 0));
    let bracket = winner.iter().all(|d| match d.delta_sigma {
        Some(v) if d.axis <= -2.0 => sign_with_ties(v) < 0,
        Some(v) if d.axis >= -0.5 => sign_with_ties(v) > 0,
        Some(_) => true,
        None => false,
    });
    let ok = neg && pos && bracket && claim_ok(&report);
    let detail = format!(
        "winner delta by theta: {}; {}",
        fmt_delta(winner),
        claim_summary(&report)
    );
    s.record(
        "productive_subsidy_threshold",
        &[fig3.file, &file],
        fig3.elapsed + t,
        ok,
        detail,
    );
}

fn productive_high_theta(s: &mut Suite, fig3: &Run) {
    let (file, report, t) = claim(Proposition::SubsidyProductiveBetter);
    let deltas = deltas_by_series(&fig3.out);
    let mult = &deltas["multiplicative"];
    let n = mult.len();
    let signs: Vec<i8> = mult
        .iter()
        .map(|d| d.delta_sigma.map_or(i8::MIN, sign_with_ties))
        .collect();
    let ok = n >= 4
        && signs[..2].iter().all(|&x| x == -1)
        && signs[n - 2..].iter().all(|&x| x == 1)
        && claim_ok(&report);
    let detail = format!(
        "multiplicative delta by theta: {}; {}",
        fmt_delta(mult),
        claim_summary(&report)
    );
    s.record(
        "productive_subsidy_high_theta",
        &[fig3.file, &file],
        fig3.elapsed + t,
        ok,
        detail,
    );
}

fn low_a_believer(s: &mut Suite, fig4: &Run) {
    let (file, report, t) = claim(Proposition::SubsidizeLowABelieverBetter);
    let mut ok = claim_ok(&report);
    let mut parts = Vec::new();
    for (label, rows) in deltas_by_series(&fig4.out) {
        let top = rows.last().map(|d| d.axis).unwrap_or(0.0);
        let last_nonpos = rows
            .iter()
            .rposition(|d| d.delta_sigma.is_none_or(|v| sign_with_ties(v) <= 0));
        let good = top >= 1e5 * (1.0 - 1e-12)
            && match last_nonpos {
                None => true,
                Some(k) if k + 1 == rows.len() => false,
                Some(k) => top >= 10.0 * rows[k + 1].axis,
            };
        ok &= good;
        let change = last_nonpos.map_or("none".to_string(), |k| format!("{:.3e}", rows[k].axis));
        parts.push(format!("{label}: last non-positive A'={change}"));
    }
    let elapsed = fig4.elapsed + t;
    ok &= elapsed < Duration::from_secs(300);
    parts.push(claim_summary(&report));
    s.record(
        "low_a_believer",
        &[fig4.file, &file],
        elapsed,
        ok,
        parts.join("; "),
    );
}

fn cost_asymmetry(s: &mut Suite, fig5: &Run, fig6: &Run) {
    let (file, report, t) = claim(Proposition::AppendixCLowThetaMultiplicative);
    let d5 = fig5.out.deltas.clone().unwrap_or_default();
    let d6 = fig6.out.deltas.clone().unwrap_or_default();
    let low_d_wins = !d5.is_empty()
        && d5
            .iter()
            .all(|d| d.delta_sigma.is_some_and(|v| sign_with_ties(v) < 0));
    let n = d6.len();
    let high_d_top = n >= 2
        && d6[n - 2..]
            .iter()
            .all(|d| d.delta_sigma.is_some_and(|v| sign_with_ties(v) > 0));
    let ok = low_d_wins && high_d_top && claim_ok(&report);
    let detail = format!(
        "high-d minus low-d, base: {}; A x10, B x0.5: {}; {}",
        fmt_delta(&d5),
        fmt_delta(&d6),
        claim_summary(&report)
    );
    s.record(
        "cost_asymmetry_patterns",
        &[fig5.file, fig6.file, &file],
        fig5.elapsed + fig6.elapsed + t,
        ok,
        detail,
    );
}

fn oracle_equivalence(s: &mut Suite) {
    let file = "oracle_cases.json";
    let start = Instant::now();
    let text = std::fs::read_to_string(configs().join(file)).unwrap();
    let cases: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    let cell = OracleOptions {
        grid_n: ORACLE_GRID,
        ..Default::default()
    }
    .cell_width();
    let results: Vec<(bool, String)> = cases
        .par_iter()
        .enumerate()
        .map(|(k, v)| {
            let cfg = Config::parse(&v.to_string()).unwrap();
            let spec = cfg.problem().unwrap();
            let a = solve(&spec, &cfg.solver, None).unwrap();
            let b = oracle_solve(&spec, ORACLE_GRID).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..2 {
                worst = worst
                    .max((a.profile.xs[i].ln() - b.profile.xs[i].ln()).abs())
                    .max((a.profile.xp[i].ln() - b.profile.xp[i].ln()).abs());
            }
            let rel = (a.outcome.sigma - b.outcome.sigma).abs() / a.outcome.sigma;
            let ok = a.converged && b.converged && worst <= cell && rel <= 0.02;
            (
                ok,
                format!(
                    "case {}: {:.2} cells, sigma {:.1e} rel",
                    k + 1,
                    worst / cell,
                    rel
                ),
            )
        })
        .collect();
    let ok = results.len() == 12 && results.iter().all(|r| r.0);
    let failing: Vec<&str> = results
        .iter()
        .filter(|r| !r.0)
        .map(|r| r.1.as_str())
        .collect();
    let worst = results
        .iter()
        .map(|r| r.1.as_str())
        .collect::<Vec<_>>()
        .join("; ");
    let detail = if failing.is_empty() {
        worst
    } else {
        failing.join("; ")
    };
    s.record("oracle_equivalence", &[file], start.elapsed(), ok, detail);
}

/// Worst deviation gain of every converged row.
fn verify_rows(run: &Run) -> (usize, usize, f64) {
    let plan = &run.out.plan;
    let cfg = load(run.file).solver;
    let gains: Vec<Option<f64>> = run
        .out
        .rows
        .par_iter()
        .map(|row| {
            if !row.converged {
                return None;
            }
            let series = plan
                .series
                .iter()
                .find(|s| {
                    Some(&s.label) == row.series.as_ref()
                        || (row.series.is_none() && s.label.is_empty())
                })
                .expect("series");
            let scheme = plan
                .sweep
                .schemes
                .iter()
                .find(|sc| sc.label() == row.scheme)
                .expect("scheme");
            let spec = point_spec(&series.spec, &plan.sweep.axis, row.axis, scheme).unwrap();
            let profile = StrategyProfile::new(
                row.players.iter().map(|p| p.xs).collect(),
                row.players.iter().map(|p| p.xp).collect(),
            )
            .unwrap();
            let g = deviation_gains(&profile, &spec, &cfg, VERIFY_GRID).unwrap();
            Some(g.into_iter().fold(f64::NEG_INFINITY, f64::max))
        })
        .collect();
    let checked = gains.iter().flatten().count();
    let failed = gains
        .iter()
        .flatten()
        .filter(|&&g| g > DEVIATION_TOL)
        .count();
    let worst = gains
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    (checked, failed, worst)
}

fn symmetric_rows(rows: &[SweepRow]) -> (usize, f64) {
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    let worst = rows
        .iter()
        .filter(|r| r.converged)
        .map(|r| rel(r.players[0].xs, r.players[1].xs).max(rel(r.players[0].xp, r.players[1].xp)))
        .fold(0.0, f64::max);
    (rows.len(), worst)
}

fn identities() -> (usize, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut worst_h: f64 = 0.0;
    let mut worst_e: f64 = 0.0;
    for _ in 0..IDENTITY_DRAWS {
        let p = PlayerParams {
            a: 10f64.powf(rng.random_range(-2.0..2.0)),
            alpha: rng.random_range(0.1..1.0),
            b: 10f64.powf(rng.random_range(-2.0..2.0)),
            beta: rng.random_range(0.1..1.0),
            theta: rng.random_range(-2.0..4.0),
            d: 1.0,
            r: 1.0,
        };
        let xs = 10f64.powf(rng.random_range(-3.0..3.0));
        let xp = 10f64.powf(rng.random_range(-3.0..3.0));
        let c: f64 = rng.random_range(1.0..100.0);
        let s = |xs: f64, xp: f64| safety(&p, xs, performance(&p, xp)).unwrap();
        let base = s(xs, xp);
        let scaled = s(c * xs, c * xp);
        let expect = base * c.powf(p.alpha - p.theta * p.beta);
        worst_h = worst_h.max((scaled - expect).abs() / expect);
        let closed = p.a / p.b.powf(p.theta) * xs.powf(p.alpha) * xp.powf(-p.theta * p.beta);
        worst_e = worst_e.max((base - closed).abs() / closed);
    }
    (IDENTITY_DRAWS, worst_h, worst_e)
}

fn equilibrium_properties(s: &mut Suite, runs: &[&Run], fig1: &Run) {
    let start = Instant::now();
    let mut checked = 0;
    let mut failed = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut nonconverged = 0;
    for run in runs {
        let (c, f, w) = verify_rows(run);
        checked += c;
        failed += f;
        worst = worst.max(w);
        nonconverged += run.out.nonconverged();
    }
    let (n_sym, sym) = symmetric_rows(&fig1.out.rows);
    let (draws, hom, ela) = identities();
    let ok = failed == 0
        && nonconverged == 0
        && sym <= 1e-6
        && hom <= IDENTITY_TOL
        && ela <= IDENTITY_TOL;
    let files: Vec<&str> = runs.iter().map(|r| r.file).collect();
    let detail = format!(
        "{checked} equilibria verified, {failed} with a profitable deviation (max gain {worst:.1e}), {nonconverged} non-converged; \
         symmetric strategies over {n_sym} points within {sym:.1e}; \
         {draws} draws: homogeneity {hom:.1e}, elasticity {ela:.1e}"
    );
    s.record(
        "equilibrium_properties",
        &files,
        start.elapsed(),
        ok,
        detail,
    );
}

fn csv_bytes(out: &SweepOutput) -> Vec<u8> {
    let mut buf = Vec::new();
    table::write_sweep(&mut buf, &out.rows, out.plan.labelled).unwrap();
    if let Some(d) = &out.deltas {
        table::write_delta(&mut buf, d, out.plan.labelled).unwrap();
    }
    buf
}

fn determinism(s: &mut Suite, runs: &[&Run]) {
    let start = Instant::now();
    // A different worker count must not change a single byte.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let mut differing = Vec::new();
    for run in runs {
        let again = pool.install(|| sweep(run.file));
        if csv_bytes(&run.out) != csv_bytes(&again.out) {
            differing.push(run.file.to_string());
        }
    }
    for p in Proposition::ALL {
        let first = claim(p).1;
        let second = pool.install(|| claim(p)).1;
        if first != second {
            differing.push(format!("claim {p}"));
        }
    }
    let files: Vec<&str> = runs.iter().map(|r| r.file).collect();
    let ok = differing.is_empty();
    let detail = if ok {
        format!(
            "{} sweeps and {} claim grids reproduced byte for byte",
            runs.len(),
            Proposition::ALL.len()
        )
    } else {
        format!("differences in {}", differing.join(", "))
    };
    s.record("determinism", &files, start.elapsed(), ok, detail);
}

fn main() -> ExitCode {
    let mut s = Suite { failed: 0 };
    let fig1 = sweep("figures/fig1.json");
    let fig2 = sweep("figures/fig2.json");
    let fig3 = sweep("figures/fig3.json");
    let fig4 = sweep("figures/fig4.json");
    let fig5 = sweep("figures/fig5.json");
    let fig6 = sweep("figures/fig6.json");
    let fig7 = sweep("figures/fig7.json");

    sigma_price_regimes(&mut s, &fig1);
    sigma_price_boundary(&mut s, &fig1);
    sigma_to_one(&mut s, &fig2);
    productive_threshold(&mut s, &fig3);
    productive_high_theta(&mut s, &fig3);
    low_a_believer(&mut s, &fig4);
    cost_asymmetry(&mut s, &fig5, &fig6);
    oracle_equivalence(&mut s);
    let runs = [&fig1, &fig2, &fig3, &fig4, &fig5, &fig6, &fig7];
    equilibrium_properties(&mut s, &runs, &fig1);
    determinism(&mut s, &runs);

    println!("acceptance: {} criteria failed", s.failed);
    if s.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
