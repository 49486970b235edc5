//! Subsidy comparisons: which player should get the discounted price?

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ParamField, ProblemSpec, RiskMode};
use crate::solver::{solve, SolverConfig};

use super::path::ParamPath;
use super::subsidy::{apply_scheme, SubsidyScheme, SubsidyTarget};

/// Differences of aggregate safety below this are ties.
pub const TIE_FLOOR: f64 = 1e-7;

/// Aggregate safety under each scheme; `None` where the solver did not
/// converge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsidyComparison {
    pub none: Option<f64>,
    pub player1: Option<f64>,
    pub player2: Option<f64>,
    pub both: Option<f64>,
    /// Labels of schemes that did not converge.
    pub nonconverged: Vec<String>,
}

impl SubsidyComparison {
    /// `sigma(subsidize player 1) - sigma(subsidize player 2)`.
    pub fn delta(&self) -> Option<f64> {
        Some(self.player1? - self.player2?)
    }
}

/// Sign of `delta` with the tie floor applied: 1, -1 or 0.
pub fn sign_with_ties(delta: f64) -> i8 {
    if delta > TIE_FLOOR {
        1
    } else if delta < -TIE_FLOOR {
        -1
    } else {
        0
    }
}

fn sigma_under(
    spec: &ProblemSpec,
    target: SubsidyTarget,
    discount: f64,
    cfg: &SolverConfig,
) -> Result<Option<f64>> {
    let scheme = SubsidyScheme::new(target, discount)?;
    let res = solve(&apply_scheme(spec, &scheme)?, cfg, None)?;
    Ok(res.converged.then_some(res.outcome.sigma))
}

fn require_two(spec: &ProblemSpec) -> Result<()> {
    if spec.n() != 2 {
        return Err(Error::InvalidSweep(format!(
            "subsidy comparisons need 2 players, got {}",
            spec.n()
        )));
    }
    Ok(())
}

/// Aggregate safety with no subsidy, a subsidy for either player, and for
/// both. Player 1 is the designated (productive, safety-conscious, ...) one.
pub fn compare_subsidies(
    spec: &ProblemSpec,
    discount: f64,
    cfg: &SolverConfig,
) -> Result<SubsidyComparison> {
    require_two(spec)?;
    let targets = [
        SubsidyTarget::None,
        SubsidyTarget::Player(0),
        SubsidyTarget::Player(1),
        SubsidyTarget::Both,
    ];
    let sigmas = targets
        .par_iter()
        .map(|&t| sigma_under(spec, t, discount, cfg))
        .collect::<Result<Vec<_>>>()?;
    let nonconverged = targets
        .iter()
        .zip(&sigmas)
        .filter(|(_, s)| s.is_none())
        .map(|(t, _)| t.to_string())
        .collect();
    Ok(SubsidyComparison {
        none: sigmas[0],
        player1: sigmas[1],
        player2: sigmas[2],
        both: sigmas[3],
        nonconverged,
    })
}

/// `sigma(subsidize player 1) - sigma(subsidize player 2)` only.
pub fn subsidy_delta(spec: &ProblemSpec, discount: f64, cfg: &SolverConfig) -> Result<Option<f64>> {
    require_two(spec)?;
    let (a, b) = rayon::join(
        || sigma_under(spec, SubsidyTarget::Player(0), discount, cfg),
        || sigma_under(spec, SubsidyTarget::Player(1), discount, cfg),
    );
    Ok(a?.zip(b?).map(|(a, b)| a - b))
}

/// One point of a Δσ curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub series: String,
    pub axis: f64,
    /// `None` when either solve did not converge.
    pub delta_sigma: Option<f64>,
}

impl DeltaRow {
    pub fn converged(&self) -> bool {
        self.delta_sigma.is_some()
    }
}

/// Δσ (player 1 minus player 2) along `axis`, in input order.
pub fn delta_sweep(
    spec: &ProblemSpec,
    axis: &ParamPath,
    values: &[f64],
    discount: f64,
    series: &str,
    cfg: &SolverConfig,
) -> Result<Vec<DeltaRow>> {
    values
        .par_iter()
        .map(|&v| {
            let mut point = spec.clone();
            axis.apply(&mut point, v)?;
            Ok(DeltaRow {
                series: series.to_string(),
                axis: v,
                delta_sigma: subsidy_delta(&point, discount, cfg)?,
            })
        })
        .collect()
}

/// Player 2's belief about `A` swept over `a_prime`. Player 1 keeps the
/// true `A`. Each row is Δσ = σ(subsidize player 1) −
/// σ(subsidize player 2), measured under the true parameters.
pub fn beliefs_sweep(
    spec: &ProblemSpec,
    a_prime: &[f64],
    discount: f64,
    cfg: &SolverConfig,
) -> Result<Vec<DeltaRow>> {
    require_two(spec)?;
    let label = format!("theta={}", spec.players[0].theta);
    delta_sweep(
        spec,
        &ParamPath::belief(1, ParamField::A),
        a_prime,
        discount,
        &label,
        cfg,
    )
}

/// Multiplicative rescaling of some fields of every player, optionally
/// with a different risk mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    #[serde(default)]
    pub scale: BTreeMap<ParamField, f64>,
    #[serde(default)]
    pub risk_mode: Option<RiskMode>,
}

impl Variant {
    pub fn apply(&self, base: &ProblemSpec) -> Result<ProblemSpec> {
        let mut spec = base.clone();
        for p in &mut spec.players {
            for (&field, &factor) in &self.scale {
                p.set(field, p.get(field) * factor);
            }
        }
        if let Some(m) = self.risk_mode {
            spec.risk_mode = m;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Δσ = σ(subsidize the high-d player) − σ(subsidize the low-d player)
/// across `thetas`, once per variant. The high-d player is the one with
/// the larger `d` (player 1 on ties).
pub fn appendix_c_experiments(
    base: &ProblemSpec,
    thetas: &[f64],
    variants: &[Variant],
    discount: f64,
    cfg: &SolverConfig,
) -> Result<Vec<DeltaRow>> {
    require_two(base)?;
    let mut rows = Vec::new();
    for variant in variants {
        let mut spec = variant.apply(base)?;
        if spec.players[1].d > spec.players[0].d {
            spec.players.swap(0, 1);
            spec.beliefs.beliefs.swap(0, 1);
        }
        rows.extend(delta_sweep(
            &spec,
            &ParamPath::all_players(ParamField::Theta),
            thetas,
            discount,
            &variant.label,
            cfg,
        )?);
    }
    Ok(rows)
}
