//! Parameter sweeps: one equilibrium per (series, axis value, scheme).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ProblemSpec, RiskMode};
use crate::solver::{solve, EquilibriumResult, SolverConfig};

use super::compare::DeltaRow;
use super::path::ParamPath;
use super::subsidy::{apply_scheme, SubsidyScheme};

/// One labelled variant of the base problem (a curve in a figure).
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub spec: ProblemSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ProblemSpec,
    pub axis: ParamPath,
    pub values: Vec<f64>,
    pub schemes: Vec<SubsidyScheme>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidSweep("values must be nonempty".into()));
        }
        let increasing = self.values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidSweep(
                "values must be strictly monotone".into(),
            ));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidSweep(
                "at least one subsidy scheme is required".into(),
            ));
        }
        self.axis.read(&self.base)?;
        Ok(())
    }
}

/// Per-player columns of a sweep row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerRow {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub xs: f64,
    pub xp: f64,
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub series: Option<String>,
    pub axis: f64,
    pub scheme: String,
    /// Aggregate safety under the true parameters.
    pub sigma: f64,
    pub players: Vec<PlayerRow>,
    pub converged: bool,
}

impl SweepRow {
    pub fn from_result(
        series: Option<String>,
        axis: f64,
        scheme: String,
        res: &EquilibriumResult,
    ) -> Self {
        let o = &res.outcome;
        let players = (0..o.s.len())
            .map(|i| PlayerRow {
                s: o.s[i],
                p: o.p[i],
                q: o.q[i],
                xs: res.profile.xs[i],
                xp: res.profile.xp[i],
                payoff: o.payoffs[i],
            })
            .collect();
        Self {
            series,
            axis,
            scheme,
            sigma: o.sigma,
            players,
            converged: res.converged,
        }
    }
}

/// Problem solved at one sweep point: axis value set, then scheme applied.
pub fn point_spec(
    base: &ProblemSpec,
    axis: &ParamPath,
    value: f64,
    scheme: &SubsidyScheme,
) -> Result<ProblemSpec> {
    let mut spec = base.clone();
    axis.apply(&mut spec, value)?;
    apply_scheme(&spec, scheme)
}

/// Solves every (value, scheme) pair. Rows come back in input order
/// (values outer, schemes inner); non-converged rows are kept and flagged.
pub fn run_sweep(sweep: &SweepSpec, cfg: &SolverConfig) -> Result<Vec<SweepRow>> {
    run_series_sweep(
        &[Series {
            label: String::new(),
            spec: sweep.base.clone(),
        }],
        sweep,
        cfg,
    )
    .map(|rows| {
        rows.into_iter()
            .map(|r| SweepRow { series: None, ..r })
            .collect()
    })
}

/// Runs the sweep once per series, replacing the base problem each time.
pub fn run_series_sweep(
    series: &[Series],
    sweep: &SweepSpec,
    cfg: &SolverConfig,
) -> Result<Vec<SweepRow>> {
    for s in series {
        SweepSpec {
            base: s.spec.clone(),
            ..sweep.clone()
        }
        .validate()?;
    }
    let items: Vec<(&Series, f64, &SubsidyScheme)> = series
        .iter()
        .flat_map(|s| {
            sweep
                .values
                .iter()
                .flat_map(move |&v| sweep.schemes.iter().map(move |sc| (s, v, sc)))
        })
        .collect();
    items
        .par_iter()
        .map(|&(s, value, scheme)| {
            let spec = point_spec(&s.spec, &sweep.axis, value, scheme)?;
            let res = solve(&spec, cfg, None)?;
            Ok(SweepRow::from_result(
                Some(s.label.clone()),
                value,
                scheme.label(),
                &res,
            ))
        })
        .collect()
}

/// Series that differ only in risk aggregation.
pub fn risk_mode_series(base: &ProblemSpec, modes: &[RiskMode]) -> Vec<Series> {
    modes
        .iter()
        .map(|&m| Series {
            label: m.label().to_string(),
            spec: ProblemSpec {
                risk_mode: m,
                ..base.clone()
            },
        })
        .collect()
}

/// Series that differ in one parameter; labels are `field=value`.
pub fn param_series(base: &ProblemSpec, path: &ParamPath, values: &[f64]) -> Result<Vec<Series>> {
    values
        .iter()
        .map(|&v| {
            let mut spec = base.clone();
            path.apply(&mut spec, v)?;
            Ok(Series {
                label: format!("{}={}", path.field, v),
                spec,
            })
        })
        .collect()
}

/// Pairs `player1` and `player2` rows that share series and axis value into
/// Δσ = σ(subsidize player 1) − σ(subsidize player 2). Order follows the
/// first appearance of each point.
pub fn delta_rows(rows: &[SweepRow]) -> Vec<DeltaRow> {
    let mut out = Vec::new();
    let key = |r: &SweepRow| (r.series.clone().unwrap_or_default(), r.axis.to_bits());
    let mut seen = std::collections::HashSet::new();
    for row in rows {
        if !seen.insert(key(row)) {
            continue;
        }
        let find = |label: &str| {
            rows.iter()
                .find(|r| key(r) == key(row) && r.scheme == label)
        };
        if let (Some(a), Some(b)) = (find("player1"), find("player2")) {
            out.push(DeltaRow {
                series: key(row).0,
                axis: row.axis,
                delta_sigma: (a.converged && b.converged).then_some(a.sigma - b.sigma),
            });
        }
    }
    out
}
