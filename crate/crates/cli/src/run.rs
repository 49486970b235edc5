//! Command implementations. Work runs on the rayon pool; every file is
//! written by the calling thread after results are collected in order.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use safetyrace::lab::{
    delta_rows, run_series_sweep, verify_claim, ClaimReport, DeltaRow, Proposition, SweepRow,
};
use safetyrace::{solve, EquilibriumResult, SolverConfig};

use crate::config::{config_dir, Config, Overrides, SweepPlan};
use crate::table;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    ConfigError = 1,
    NotConverged = 2,
    ClaimFailed = 3,
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub overrides: Overrides,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub solver: SolverConfig,
    pub tool_version: &'static str,
    pub rows: usize,
    pub points: usize,
    pub nonconverged: usize,
    pub outputs: Vec<String>,
    /// The only section that differs between identical runs.
    pub timing: Timing,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub started: String,
    pub finished: String,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Config> {
    let mut cfg = Config::load(path)?;
    cfg.apply(overrides);
    cfg.solver.validate()?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct PlayerReport {
    player: usize,
    xs: f64,
    xp: f64,
    s: f64,
    p: f64,
    q: f64,
    sigma_i: f64,
    payoff: f64,
}

#[derive(Debug, Serialize)]
struct SolveReport {
    config_digest: String,
    risk_mode: String,
    converged: bool,
    iterations: usize,
    residual: f64,
    damped: bool,
    clamped: bool,
    sigma: f64,
    players: Vec<PlayerReport>,
}

fn solve_report(cfg: &Config, res: &EquilibriumResult) -> Result<SolveReport> {
    let o = &res.outcome;
    Ok(SolveReport {
        config_digest: cfg.digest()?,
        risk_mode: cfg.risk_mode.label().to_string(),
        converged: res.converged,
        iterations: res.iterations,
        residual: res.residual,
        damped: res.damped,
        clamped: res.clamped,
        sigma: o.sigma,
        players: (0..o.s.len())
            .map(|i| PlayerReport {
                player: i + 1,
                xs: res.profile.xs[i],
                xp: res.profile.xp[i],
                s: o.s[i],
                p: o.p[i],
                q: o.q[i],
                sigma_i: o.sigma_i[i],
                payoff: o.payoffs[i],
            })
            .collect(),
    })
}

pub fn solve_cmd(config: &Path, opts: &Options) -> Result<Exit> {
    let cfg = load(config, &opts.overrides)?;
    let res = solve(&cfg.problem()?, &cfg.solver, None)?;
    let mut text = serde_json::to_string_pretty(&solve_report(&cfg, &res)?)?;
    text.push('\n');
    match &opts.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(if res.converged {
        Exit::Success
    } else {
        Exit::NotConverged
    })
}

/// Rows of a sweep plus the Δσ table when both single-player schemes ran.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub plan: SweepPlan,
    pub rows: Vec<SweepRow>,
    pub deltas: Option<Vec<DeltaRow>>,
}

impl SweepOutput {
    pub fn nonconverged(&self) -> usize {
        self.rows.iter().filter(|r| !r.converged).count()
    }
}

pub fn run_config_sweep(cfg: &Config) -> Result<SweepOutput> {
    let plan = cfg.sweep_plan()?;
    let rows = run_series_sweep(&plan.series, &plan.sweep, &cfg.solver)?;
    let labels: Vec<String> = plan.sweep.schemes.iter().map(|s| s.label()).collect();
    let has = |l: &str| labels.iter().any(|x| x == l);
    let deltas = (has("player1") && has("player2")).then(|| delta_rows(&rows));
    Ok(SweepOutput { plan, rows, deltas })
}

/// `foo.csv` → `foo.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = name.strip_suffix(".csv").unwrap_or(&name);
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn default_out(cfg: &Config, config_path: &Path, opts: &Options) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| o.path.clone()))
        .unwrap_or_else(|| {
            let stem = config_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or("sweep".into());
            PathBuf::from(format!("{stem}.csv"))
        })
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Writes the sweep CSV, the Δσ CSV if any, and the manifest. Returns the
/// paths written.
pub fn write_sweep_outputs(
    cfg: &Config,
    out: &SweepOutput,
    csv_path: &Path,
    started: String,
) -> Result<Vec<PathBuf>> {
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut written = vec![csv_path.to_path_buf()];
    let f = fs::File::create(csv_path)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    table::write_sweep(io::BufWriter::new(f), &out.rows, out.plan.labelled)?;
    if let Some(deltas) = &out.deltas {
        let path = sibling(csv_path, "delta.csv");
        table::write_delta(
            io::BufWriter::new(fs::File::create(&path)?),
            deltas,
            out.plan.labelled,
        )?;
        written.push(path);
    }
    let manifest = Manifest {
        command: "sweep".into(),
        config_digest: cfg.digest()?,
        seed: cfg.solver.seed,
        solver: cfg.solver.clone(),
        tool_version: env!("CARGO_PKG_VERSION"),
        rows: out.rows.iter().map(|r| r.players.len()).sum(),
        points: out.rows.len(),
        nonconverged: out.nonconverged(),
        outputs: written.iter().map(|p| file_name(p)).collect(),
        timing: Timing {
            started,
            finished: now(),
        },
    };
    let path = sibling(csv_path, "manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    written.push(path);
    Ok(written)
}

pub fn sweep_cmd(config: &Path, opts: &Options) -> Result<Exit> {
    let started = now();
    let cfg = load(config, &opts.overrides)?;
    let out = run_config_sweep(&cfg)?;
    let csv_path = default_out(&cfg, config, opts);
    for p in write_sweep_outputs(&cfg, &out, &csv_path, started)? {
        eprintln!("wrote {}", p.display());
    }
    let nc = out.nonconverged();
    if nc > 0 {
        eprintln!("{nc} of {} points did not converge", out.rows.len());
        return Ok(Exit::NotConverged);
    }
    Ok(Exit::Success)
}

pub fn figure_path(n: u8) -> Result<PathBuf> {
    if !(1..=7).contains(&n) {
        bail!("no figure {n}; figures are 1 to 7");
    }
    Ok(config_dir().join("figures").join(format!("fig{n}.json")))
}

pub fn figure_cmd(n: u8, opts: &Options) -> Result<Exit> {
    sweep_cmd(&figure_path(n)?, opts)
}

pub fn claim_path(p: Proposition) -> PathBuf {
    config_dir()
        .join("claims")
        .join(format!("{}.json", p.name()))
}

pub fn run_claim(p: Proposition, cfg: &Config) -> Result<ClaimReport> {
    Ok(verify_claim(&cfg.claim_spec(p)?, &cfg.solver)?)
}

/// More than 10% of the grid failed to converge.
pub fn excessive_nonconvergence(report: &ClaimReport) -> bool {
    report.skipped_nonconverged * 10 > report.grid_size()
}

pub fn claim_cmd(name: &str, config: Option<&Path>, opts: &Options) -> Result<Exit> {
    let started = now();
    let p: Proposition = name.parse()?;
    let path = config
        .map(Path::to_path_buf)
        .unwrap_or_else(|| claim_path(p));
    let cfg = load(&path, &opts.overrides)?;
    let report = run_claim(p, &cfg)?;

    let verdict = if report.passed { "PASS" } else { "FAIL" };
    println!(
        "claim {}: {verdict} (checked {}, skipped {} non-converged{})",
        report.claim,
        report.checked,
        report.skipped_nonconverged,
        if report.vacuous {
            ", vacuous: empty grid"
        } else {
            ""
        }
    );
    for f in &report.failures {
        println!("  point {}: {}", f.index + 1, f.diagnostic);
    }
    match &opts.out {
        Some(out) => {
            table::write_failures(fs::File::create(out)?, &report)?;
            let manifest = Manifest {
                command: format!("claim {}", report.claim),
                config_digest: cfg.digest()?,
                seed: cfg.solver.seed,
                solver: cfg.solver.clone(),
                tool_version: env!("CARGO_PKG_VERSION"),
                rows: report.failures.len(),
                points: report.grid_size(),
                nonconverged: report.skipped_nonconverged,
                outputs: vec![file_name(out)],
                timing: Timing {
                    started,
                    finished: now(),
                },
            };
            fs::write(
                sibling(out, "manifest.json"),
                serde_json::to_string_pretty(&manifest)? + "\n",
            )?;
        }
        None if !report.failures.is_empty() => {
            println!();
            table::write_failures(io::stdout(), &report)?;
        }
        None => {}
    }

    Ok(if excessive_nonconvergence(&report) {
        Exit::NotConverged
    } else if report.passed {
        Exit::Success
    } else {
        Exit::ClaimFailed
    })
}
