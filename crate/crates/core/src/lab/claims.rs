//! Claim verification over finite grids of parameterizations: solve every
//! grid point, evaluate a registered proposition, and collect
//! counterexamples.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ParamField, ProblemSpec};
use crate::solver::{solve, SolverConfig};

use super::compare::{sign_with_ties, TIE_FLOOR};
use super::path::ParamPath;
use super::subsidy::{SubsidyScheme, SubsidyTarget};
use super::sweep::{delta_rows, run_sweep, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposition {
    /// Identical players: sigma rises with the common price iff
    /// theta > alpha / beta (falls iff below, flat at equality).
    SigmaMonotoneInR,
    /// Sigma at the cheapest scanned price of player 2 reaches the target.
    SigmaToOneAsR2ToZero,
    /// Multiplicative risk, player 1 has the higher B: subsidizing player 1
    /// loses at the two lowest scanned thetas and wins at the two highest.
    SubsidyProductiveBetter,
    /// Winner-only risk, player 1 has the higher B: subsidizing player 1 wins
    /// iff theta > -1.
    SubsidyProductiveBetterIffThetaGtNeg1,
    /// Player 2 believes A' over the scan: subsidizing player 1 wins for every
    /// A' past the last sign change, with 10x headroom.
    #[serde(rename = "subsidize_low_A_believer_better")]
    SubsidizeLowABelieverBetter,
    /// Multiplicative risk at low theta: subsidizing the high-d player loses.
    #[serde(rename = "appendixC_low_theta_multiplicative")]
    AppendixCLowThetaMultiplicative,
}

impl Proposition {
    pub const ALL: [Proposition; 6] = [
        Proposition::SigmaMonotoneInR,
        Proposition::SigmaToOneAsR2ToZero,
        Proposition::SubsidyProductiveBetter,
        Proposition::SubsidyProductiveBetterIffThetaGtNeg1,
        Proposition::SubsidizeLowABelieverBetter,
        Proposition::AppendixCLowThetaMultiplicative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Proposition::SigmaMonotoneInR => "sigma_monotone_in_r",
            Proposition::SigmaToOneAsR2ToZero => "sigma_to_one_as_r2_to_zero",
            Proposition::SubsidyProductiveBetter => "subsidy_productive_better",
            Proposition::SubsidyProductiveBetterIffThetaGtNeg1 => {
                "subsidy_productive_better_iff_theta_gt_neg1"
            }
            Proposition::SubsidizeLowABelieverBetter => "subsidize_low_A_believer_better",
            Proposition::AppendixCLowThetaMultiplicative => "appendixC_low_theta_multiplicative",
        }
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Proposition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Proposition::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownClaim(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Flat,
}

/// One test point of a claim grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimPoint {
    pub spec: ProblemSpec,
    /// Values of the proposition's own axis: common r, player 2's r, theta
    /// or player 2's believed A. Empty means "use the point as is".
    pub scan: Vec<f64>,
    pub discount: f64,
    /// Lower bound on sigma for [`Proposition::SigmaToOneAsR2ToZero`].
    pub target: f64,
    /// Overrides the trend [`Proposition::SigmaMonotoneInR`] derives from
    /// theta; used for negative controls.
    pub expect: Option<Trend>,
}

impl ClaimPoint {
    pub fn new(spec: ProblemSpec, scan: Vec<f64>) -> Self {
        Self {
            spec,
            scan,
            discount: SubsidyScheme::DEFAULT_DISCOUNT,
            target: 0.99,
            expect: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimSpec {
    pub proposition: Proposition,
    pub points: Vec<ClaimPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimFailure {
    /// 0-based position in the grid.
    pub index: usize,
    pub spec: ProblemSpec,
    pub diagnostic: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub claim: String,
    pub passed: bool,
    pub checked: usize,
    pub failures: Vec<ClaimFailure>,
    pub skipped_nonconverged: usize,
    /// The grid was empty, so the claim holds trivially.
    pub vacuous: bool,
}

impl ClaimReport {
    pub fn grid_size(&self) -> usize {
        self.checked + self.skipped_nonconverged
    }
}

enum Verdict {
    Pass,
    Fail(String),
    Skipped,
}

/// Evaluates the proposition at every grid point (concurrently, reduced in
/// grid order).
pub fn verify_claim(claim: &ClaimSpec, cfg: &SolverConfig) -> Result<ClaimReport> {
    let verdicts = claim
        .points
        .par_iter()
        .map(|pt| evaluate_point(claim.proposition, pt, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut failures = Vec::new();
    let mut skipped = 0;
    for (index, (v, pt)) in verdicts.into_iter().zip(&claim.points).enumerate() {
        match v {
            Verdict::Pass => {}
            Verdict::Skipped => skipped += 1,
            Verdict::Fail(diagnostic) => failures.push(ClaimFailure {
                index,
                spec: pt.spec.clone(),
                diagnostic,
            }),
        }
    }
    Ok(ClaimReport {
        claim: claim.proposition.name().to_string(),
        passed: failures.is_empty(),
        checked: claim.points.len() - skipped,
        failures,
        skipped_nonconverged: skipped,
        vacuous: claim.points.is_empty(),
    })
}

fn fmt_series(xs: &[f64], ys: &[f64]) -> String {
    xs.iter()
        .zip(ys)
        .map(|(x, y)| format!("{x}:{y:.9}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn evaluate_point(prop: Proposition, pt: &ClaimPoint, cfg: &SolverConfig) -> Result<Verdict> {
    match prop {
        Proposition::SigmaMonotoneInR => monotone_in_r(pt, cfg),
        Proposition::SigmaToOneAsR2ToZero => sigma_to_one(pt, cfg),
        Proposition::SubsidyProductiveBetter => productive_better_high_theta(pt, cfg),
        Proposition::SubsidyProductiveBetterIffThetaGtNeg1 => productive_iff(pt, cfg),
        Proposition::SubsidizeLowABelieverBetter => low_a_believer(pt, cfg),
        Proposition::AppendixCLowThetaMultiplicative => high_d_loses(pt, cfg),
    }
}

/// Sigma along `path` without subsidies; `None` if any solve failed to
/// converge.
fn sigma_scan(
    spec: &ProblemSpec,
    path: ParamPath,
    values: &[f64],
    cfg: &SolverConfig,
) -> Result<Option<Vec<f64>>> {
    let rows = run_sweep(
        &SweepSpec {
            base: spec.clone(),
            axis: path,
            values: values.to_vec(),
            schemes: vec![SubsidyScheme::none()],
        },
        cfg,
    )?;
    Ok(rows
        .iter()
        .all(|r| r.converged)
        .then(|| rows.iter().map(|r| r.sigma).collect()))
}

/// Δσ (player 1 minus player 2 subsidized) along `path`.
fn delta_scan(
    spec: &ProblemSpec,
    path: ParamPath,
    values: &[f64],
    discount: f64,
    cfg: &SolverConfig,
) -> Result<Option<Vec<f64>>> {
    let schemes = vec![
        SubsidyScheme::new(SubsidyTarget::Player(0), discount)?,
        SubsidyScheme::new(SubsidyTarget::Player(1), discount)?,
    ];
    let rows = run_sweep(
        &SweepSpec {
            base: spec.clone(),
            axis: path,
            values: values.to_vec(),
            schemes,
        },
        cfg,
    )?;
    Ok(delta_rows(&rows)
        .into_iter()
        .map(|d| d.delta_sigma)
        .collect())
}

fn sorted_scan(pt: &ClaimPoint, default: f64) -> Vec<f64> {
    let mut scan = if pt.scan.is_empty() {
        vec![default]
    } else {
        pt.scan.clone()
    };
    scan.sort_by(f64::total_cmp);
    scan.dedup();
    scan
}

/// Puts the player with the larger `field` first.
fn larger_first(spec: &ProblemSpec, field: ParamField) -> ProblemSpec {
    let mut spec = spec.clone();
    if spec.players[1].get(field) > spec.players[0].get(field) {
        spec.players.swap(0, 1);
        spec.beliefs.beliefs.swap(0, 1);
    }
    spec
}

fn monotone_in_r(pt: &ClaimPoint, cfg: &SolverConfig) -> Result<Verdict> {
    let rs = sorted_scan(pt, pt.spec.players[0].r);
    let Some(sigma) = sigma_scan(&pt.spec, ParamPath::all_players(ParamField::R), &rs, cfg)? else {
        return Ok(Verdict::Skipped);
    };
    let p = &pt.spec.players[0];
    let critical = p.alpha / p.beta;
    let trend = pt.expect.unwrap_or(if (p.theta - critical).abs() <= 1e-12 {
        Trend::Flat
    } else if p.theta > critical {
        Trend::Increasing
    } else {
        Trend::Decreasing
    });
    let diffs: Vec<f64> = sigma.windows(2).map(|w| w[1] - w[0]).collect();
    let ok = match trend {
        Trend::Increasing => diffs.iter().all(|&d| d > TIE_FLOOR),
        Trend::Decreasing => diffs.iter().all(|&d| d < -TIE_FLOOR),
        Trend::Flat => {
            let lo = sigma.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = sigma.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo <= 1e-6
        }
    };
    Ok(if ok {
        Verdict::Pass
    } else {
        Verdict::Fail(format!(
            "theta={} alpha/beta={critical}: expected {trend:?} sigma in r, got {}",
            p.theta,
            fmt_series(&rs, &sigma)
        ))
    })
}

fn sigma_to_one(pt: &ClaimPoint, cfg: &SolverConfig) -> Result<Verdict> {
    let r2 = sorted_scan(pt, pt.spec.players[1].r)[0];
    let mut spec = pt.spec.clone();
    ParamPath::player(1, ParamField::R).apply(&mut spec, r2)?;
    let res = solve(&spec, cfg, None)?;
    if !res.converged {
        return Ok(Verdict::Skipped);
    }
    let sigma = res.outcome.sigma;
    Ok(if sigma >= pt.target {
        Verdict::Pass
    } else {
        Verdict::Fail(format!("sigma={sigma} < {} at r2={r2}", pt.target))
    })
}

fn productive_better_high_theta(pt: &ClaimPoint, cfg: &SolverConfig) -> Result<Verdict> {
    let spec = larger_first(&pt.spec, ParamField::B);
    let thetas = sorted_scan(pt, spec.players[0].theta);
    if thetas.len() < 4 {
        return Err(Error::InvalidSweep(
            "subsidy_productive_better needs at least 4 theta values".into(),
        ));
    }
    let Some(delta) = delta_scan(
        &spec,
        ParamPath::all_players(ParamField::Theta),
        &thetas,
        pt.discount,
        cfg,
    )?
    else {
        return Ok(Verdict::Skipped);
    };
    let n = delta.len();
    let low_ok = delta[..2].iter().all(|&d| sign_with_ties(d) < 0);
    let high_ok = delta[n - 2..].iter().all(|&d| sign_with_ties(d) > 0);
    Ok(if low_ok && high_ok {
        Verdict::Pass
    } else {
        Verdict::Fail(format!(
            "delta sigma by theta: {}",
            fmt_series(&thetas, &delta)
        ))
    })
}

fn productive_iff(pt: &ClaimPoint, cfg: &SolverConfig) -> Result<Verdict> {
    let spec = larger_first(&pt.spec, ParamField::B);
    let thetas = sorted_scan(pt, spec.players[0].theta);
    let Some(delta) = delta_scan(
        &spec,
        ParamPath::all_players(ParamField::Theta),
        &thetas,
        pt.discount,
        cfg,
    )?
    else {
        return Ok(Verdict::Skipped);
    };
    let bad: Vec<String> = thetas
        .iter()
        .zip(&delta)
        .filter(|&(&t, &d)| {
            let s = sign_with_ties(d);
            s != 0 && t != -1.0 && (s > 0) != (t > -1.0)
        })
        .map(|(t, d)| format!("theta={t}: delta sigma={d:.9}"))
        .collect();
    Ok(if bad.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(bad.join("; "))
    })
}

fn low_a_believer(pt: &ClaimPoint, cfg: &SolverConfig) -> Result<Verdict> {
    let a_prime = sorted_scan(pt, ParamPath::belief(1, ParamField::A).read(&pt.spec)?);
    let Some(delta) = delta_scan(
        &pt.spec,
        ParamPath::belief(1, ParamField::A),
        &a_prime,
        pt.discount,
        cfg,
    )?
    else {
        return Ok(Verdict::Skipped);
    };
    let last_nonpositive = delta.iter().rposition(|&d| sign_with_ties(d) <= 0);
    let ok = match last_nonpositive {
        None => true,
        Some(k) if k + 1 == delta.len() => false,
        Some(k) => a_prime[a_prime.len() - 1] >= 10.0 * a_prime[k + 1],
    };
    Ok(if ok {
        Verdict::Pass
    } else {
        Verdict::Fail(format!(
            "delta sigma by A': {}",
            fmt_series(&a_prime, &delta)
        ))
    })
}

fn high_d_loses(pt: &ClaimPoint, cfg: &SolverConfig) -> Result<Verdict> {
    let spec = larger_first(&pt.spec, ParamField::D);
    let thetas = sorted_scan(pt, spec.players[0].theta);
    let Some(delta) = delta_scan(
        &spec,
        ParamPath::all_players(ParamField::Theta),
        &thetas,
        pt.discount,
        cfg,
    )?
    else {
        return Ok(Verdict::Skipped);
    };
    let bad: Vec<String> = thetas
        .iter()
        .zip(&delta)
        .filter(|&(_, &d)| sign_with_ties(d) >= 0)
        .map(|(t, d)| format!("theta={t}: delta sigma={d:.9}"))
        .collect();
    Ok(if bad.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(bad.join("; "))
    })
}
