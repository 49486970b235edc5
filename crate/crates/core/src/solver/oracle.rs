//! Brute-force equilibrium oracle for two-player games: best responses are
//! exhaustive argmaxes over a log-spaced grid. Slow and coarse, but shares
//! nothing with the simplex search it is used to validate.

use crate::error::{Error, Result};
use crate::model::{evaluate, ProblemSpec, StrategyProfile};

use super::verify::log_grid;
use super::EquilibriumResult;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    pub grid_n: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub max_iters: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            grid_n: 200,
            x_min: 1e-10,
            x_max: 1e10,
            max_iters: 200,
        }
    }
}

impl OracleOptions {
    /// Width of one grid cell in natural-log units.
    pub fn cell_width(&self) -> f64 {
        (self.x_max / self.x_min).ln() / (self.grid_n.max(2) - 1) as f64
    }
}

/// Grid oracle over the default allocation box.
pub fn oracle_solve(spec: &ProblemSpec, grid_n: usize) -> Result<EquilibriumResult> {
    oracle_solve_with(
        spec,
        &OracleOptions {
            grid_n,
            ..Default::default()
        },
    )
}

pub fn oracle_solve_with(spec: &ProblemSpec, opts: &OracleOptions) -> Result<EquilibriumResult> {
    spec.validate()?;
    if spec.n() != 2 {
        return Err(Error::OracleSize(spec.n()));
    }
    if opts.grid_n < 2 || !(opts.x_min > 0.0 && opts.x_min < opts.x_max) {
        return Err(Error::SolverConfig(
            "oracle needs grid_n >= 2 and 0 < x_min < x_max".into(),
        ));
    }
    let grid = log_grid(opts.x_min, opts.x_max, opts.grid_n);
    let worlds = [spec.worldview(0), spec.worldview(1)];

    // Start from the grid point closest to 1.
    let unit = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.ln().abs().total_cmp(&b.1.ln().abs()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let mut idx = [(unit, unit); 2];
    let mut seen = vec![idx];
    let to_profile = |idx: &[(usize, usize); 2]| StrategyProfile {
        xs: vec![grid[idx[0].0], grid[idx[1].0]],
        xp: vec![grid[idx[0].1], grid[idx[1].1]],
    };

    let mut converged = false;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < opts.max_iters {
        iterations += 1;
        let current = to_profile(&idx);
        let mut next = idx;
        for i in 0..2 {
            next[i] = grid_argmax(i, &current, &grid, &worlds[i], spec)?;
        }
        let moved = (0..2)
            .flat_map(|i| [(idx[i].0, next[i].0), (idx[i].1, next[i].1)])
            .map(|(a, b)| (grid[b] - grid[a]).abs() / grid[a])
            .fold(0.0, f64::max);
        residual = moved;
        if next == idx {
            converged = true;
            break;
        }
        if seen.contains(&next) {
            // Cycle between grid points.
            idx = next;
            break;
        }
        seen.push(next);
        idx = next;
    }

    let profile = to_profile(&idx);
    let outcome = spec.outcome(&profile)?;
    let last = grid.len() - 1;
    let clamped = idx
        .iter()
        .any(|&(a, b)| a == 0 || b == 0 || a == last || b == last);
    Ok(EquilibriumResult {
        profile,
        outcome,
        converged,
        iterations,
        residual,
        clamped,
        damped: false,
    })
}

/// Exhaustive argmax of player `i`'s believed payoff; ties go to the lower
/// (xs, xp) index in lexicographic order.
fn grid_argmax(
    i: usize,
    current: &StrategyProfile,
    grid: &[f64],
    world: &[crate::model::PlayerParams],
    spec: &ProblemSpec,
) -> Result<(usize, usize)> {
    let mut trial = current.clone();
    let mut best = (0, 0);
    let mut best_u = f64::NEG_INFINITY;
    for (a, &xs) in grid.iter().enumerate() {
        for (b, &xp) in grid.iter().enumerate() {
            trial.xs[i] = xs;
            trial.xp[i] = xp;
            let u = evaluate(&trial, world, spec.risk_mode)?.payoffs[i];
            if u > best_u {
                best_u = u;
                best = (a, b);
            }
        }
    }
    Ok(best)
}
