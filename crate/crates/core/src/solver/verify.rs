//! No-profitable-deviation check for candidate equilibria.

use crate::error::Result;
use crate::model::{evaluate, ProblemSpec, StrategyProfile};

use super::{EquilibriumResult, SolverConfig};

/// Largest tolerated payoff gain from a unilateral deviation.
pub const DEVIATION_TOL: f64 = 1e-6;

/// Log-space offsets of the local stencil around the candidate point.
const STENCIL: [f64; 5] = [1e-4, 1e-3, 1e-2, 0.1, 0.5];

/// `grid_n` log-spaced values over `[lo, hi]`; empty when `grid_n < 2`.
pub(crate) fn log_grid(lo: f64, hi: f64, grid_n: usize) -> Vec<f64> {
    if grid_n < 2 {
        return Vec::new();
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (grid_n - 1) as f64;
    (0..grid_n)
        .map(|k| {
            if k == grid_n - 1 {
                hi
            } else {
                (a + step * k as f64).exp()
            }
        })
        .collect()
}

/// For each player, the best believed-payoff gain over a `grid_n x grid_n`
/// log grid on the allocation box plus a local stencil.
pub fn deviation_gains(
    profile: &StrategyProfile,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    grid_n: usize,
) -> Result<Vec<f64>> {
    let grid = log_grid(cfg.x_min, cfg.x_max, grid_n);
    let mut gains = Vec::with_capacity(spec.n());
    for i in 0..spec.n() {
        let world = spec.worldview(i);
        let base = evaluate(profile, &world, spec.risk_mode)?.payoffs[i];
        let mut trial = profile.clone();
        let mut best_gain = f64::NEG_INFINITY;
        let mut check = |xs: f64, xp: f64| -> Result<()> {
            trial.xs[i] = xs;
            trial.xp[i] = xp;
            let u = evaluate(&trial, &world, spec.risk_mode)?.payoffs[i];
            if u - base > best_gain {
                best_gain = u - base;
            }
            Ok(())
        };
        for &xs in &grid {
            for &xp in &grid {
                check(xs, xp)?;
            }
        }
        let (xs0, xp0) = (profile.xs[i], profile.xp[i]);
        for h in STENCIL {
            for (ds, dp) in [
                (1.0, 0.0),
                (-1.0, 0.0),
                (0.0, 1.0),
                (0.0, -1.0),
                (1.0, 1.0),
                (-1.0, -1.0),
                (1.0, -1.0),
                (-1.0, 1.0),
            ] {
                let xs = cfg.clamp(xs0 * f64::exp(ds * h));
                let xp = cfg.clamp(xp0 * f64::exp(dp * h));
                check(xs, xp)?;
            }
        }
        gains.push(best_gain);
    }
    Ok(gains)
}

/// True iff no tested unilateral deviation improves any player's believed
/// payoff by more than [`DEVIATION_TOL`].
pub fn verify_equilibrium(
    result: &EquilibriumResult,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    grid_n: usize,
) -> bool {
    match deviation_gains(&result.profile, spec, cfg, grid_n) {
        Ok(gains) => gains.iter().all(|&g| g <= DEVIATION_TOL),
        Err(_) => false,
    }
}
