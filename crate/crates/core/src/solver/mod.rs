//! Pure-strategy Nash equilibria by iterated best response.
//!
//! Each round every player maximizes its (believed) payoff over the
//! allocation box with opponents fixed at the previous round's profile. The
//! iteration stops once no coordinate moves by more than `tol` relative.

mod local;
mod objective;
mod oracle;
mod verify;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Outcome, ProblemSpec, StrategyProfile};

use local::{nelder_mead, newton_polish, Found, LogBox};
use objective::ResponseObjective;

pub use oracle::{oracle_solve, oracle_solve_with, OracleOptions};
pub use verify::{deviation_gains, verify_equilibrium, DEVIATION_TOL};

/// How best responses are combined into the next profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateScheme {
    /// Every player responds to the previous round's profile.
    #[default]
    Jacobi,
    /// Players respond in index order to the partially updated profile.
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Convergence threshold on the max relative strategy change.
    pub tol: f64,
    pub max_iters: usize,
    /// Tolerance of the inner best-response search.
    pub inner_tol: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Local searches per best response.
    pub n_starts: usize,
    pub seed: u64,
    pub update: UpdateScheme,
    /// Weight on the new best response once oscillation is detected
    /// (geometric averaging in log space). 1 disables damping.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 500,
            inner_tol: 1e-10,
            x_min: 1e-10,
            x_max: 1e10,
            n_starts: 8,
            seed: 0,
            update: UpdateScheme::Jacobi,
            damping: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::SolverConfig(m.to_string()));
        if !(self.x_min > 0.0 && self.x_min < self.x_max && self.x_max.is_finite()) {
            return bad("need 0 < x_min < x_max");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be > 0");
        }
        if !(self.inner_tol > 0.0) {
            return bad("inner_tol must be > 0");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1");
        }
        if self.n_starts == 0 {
            return bad("n_starts must be >= 1");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must be in (0, 1]");
        }
        Ok(())
    }

    fn log_box(&self) -> LogBox {
        LogBox {
            lo: self.x_min.ln(),
            hi: self.x_max.ln(),
        }
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.x_min, self.x_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub profile: StrategyProfile,
    /// Evaluated under the true parameters.
    pub outcome: Outcome,
    pub converged: bool,
    pub iterations: usize,
    /// Max relative change between the last two rounds.
    pub residual: f64,
    /// Some coordinate sits on the allocation box boundary.
    pub clamped: bool,
    /// Damping was switched on after oscillation was detected.
    pub damped: bool,
}

/// Player `i`'s best response `(xs, xp)` to `profile` under its beliefs.
pub fn best_response(
    i: usize,
    profile: &StrategyProfile,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    if i >= spec.n() {
        return Err(Error::PlayerIndex {
            index: i,
            n: spec.n(),
        });
    }
    if profile.n() != spec.n() {
        return Err(Error::LengthMismatch {
            what: "strategy profile",
            expected: spec.n(),
            got: profile.n(),
        });
    }
    cfg.validate()?;
    let world = spec.worldview(i);
    let obj = ResponseObjective::new(i, profile, &world, spec.risk_mode)?;
    let bounds = cfg.log_box();

    let f = |z: [f64; 2]| obj.value(z);
    let fg = |z: [f64; 2]| obj.value_grad(z);

    let mut best: Option<Found> = None;
    for start in start_points(i, profile, cfg) {
        let found = nelder_mead(&f, start, bounds, 1.0, cfg.inner_tol, 4000);
        let found = newton_polish(&fg, found, bounds, 60);
        if !found.value.is_finite() {
            continue;
        }
        best = Some(match best {
            None => found,
            Some(cur) => pick(cur, found),
        });
    }
    let best = best.ok_or(Error::NonFinitePayoff { player: i })?;
    Ok((cfg.clamp(best.z[0].exp()), cfg.clamp(best.z[1].exp())))
}

/// Higher payoff wins; near-ties go to smaller total spend, then smaller xp.
fn pick(cur: Found, cand: Found) -> Found {
    let scale = 1.0 + cur.value.abs().max(cand.value.abs());
    if (cand.value - cur.value).abs() <= 1e-13 * scale {
        let spend = |f: &Found| f.z[0].exp() + f.z[1].exp();
        let (sc, sn) = (spend(&cur), spend(&cand));
        if sn < sc || (sn == sc && cand.z[1] < cur.z[1]) {
            return cand;
        }
        return cur;
    }
    if cand.value > cur.value {
        cand
    } else {
        cur
    }
}

/// Start 0 is the current allocation, start 1 the unit allocation, the
/// rest are drawn uniformly over the log box from a seeded stream.
fn start_points(i: usize, profile: &StrategyProfile, cfg: &SolverConfig) -> Vec<[f64; 2]> {
    let bounds = cfg.log_box();
    let mut starts = Vec::with_capacity(cfg.n_starts);
    starts.push([cfg.clamp(profile.xs[i]).ln(), cfg.clamp(profile.xp[i]).ln()]);
    if cfg.n_starts > 1 {
        starts.push(bounds.project([0.0, 0.0]));
    }
    let mut rng =
        ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(i as u64 + 1)));
    while starts.len() < cfg.n_starts {
        starts.push([
            rng.random_range(bounds.lo..=bounds.hi),
            rng.random_range(bounds.lo..=bounds.hi),
        ]);
    }
    starts
}

fn relative_change(old: f64, new: f64, floor: f64) -> f64 {
    (new - old).abs() / old.abs().max(floor)
}

fn max_relative_change(old: &StrategyProfile, new: &StrategyProfile, floor: f64) -> f64 {
    old.xs
        .iter()
        .zip(&new.xs)
        .chain(old.xp.iter().zip(&new.xp))
        .map(|(&a, &b)| relative_change(a, b, floor))
        .fold(0.0, f64::max)
}

/// Solves for a pure-strategy Nash equilibrium starting from `init`
/// (all ones by default).
pub fn solve(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    init: Option<&StrategyProfile>,
) -> Result<EquilibriumResult> {
    spec.validate()?;
    cfg.validate()?;
    let n = spec.n();
    let mut profile = match init {
        Some(p) if p.n() != n => {
            return Err(Error::LengthMismatch {
                what: "initial profile",
                expected: n,
                got: p.n(),
            })
        }
        Some(p) => StrategyProfile {
            xs: p.xs.iter().map(|&x| cfg.clamp(x)).collect(),
            xp: p.xp.iter().map(|&x| cfg.clamp(x)).collect(),
        },
        None => StrategyProfile::uniform(n, cfg.clamp(1.0)),
    };

    let mut residual = f64::INFINITY;
    let mut history: Vec<f64> = Vec::new();
    let mut damped = false;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let mut responses = profile.clone();
        for i in 0..n {
            let against = match cfg.update {
                UpdateScheme::Jacobi => &profile,
                UpdateScheme::GaussSeidel => &responses,
            };
            let (xs, xp) = best_response(i, against, spec, cfg)?;
            responses.xs[i] = xs;
            responses.xp[i] = xp;
        }
        residual = max_relative_change(&profile, &responses, cfg.x_min);
        history.push(residual);
        if residual <= cfg.tol {
            profile = responses;
            converged = true;
            break;
        }
        if !damped && cfg.damping < 1.0 && oscillating(&history) {
            damped = true;
        }
        profile = if damped {
            blend(&profile, &responses, cfg.damping)
        } else {
            responses
        };
    }

    let outcome = spec.outcome(&profile)?;
    let on_edge = |x: f64| {
        (x - cfg.x_min).abs() <= 1e-12 * cfg.x_min || (x - cfg.x_max).abs() <= 1e-12 * cfg.x_max
    };
    let clamped = profile.xs.iter().chain(&profile.xp).any(|&x| on_edge(x));
    Ok(EquilibriumResult {
        profile,
        outcome,
        converged,
        iterations,
        residual,
        clamped,
        damped,
    })
}

/// The residual has not reached a new low (by 10%) in the last four rounds.
fn oscillating(history: &[f64]) -> bool {
    const WINDOW: usize = 4;
    if history.len() < 2 * WINDOW {
        return false;
    }
    let (before, recent) = history.split_at(history.len() - WINDOW);
    let best_before = before.iter().copied().fold(f64::INFINITY, f64::min);
    recent.iter().all(|&r| r > 0.9 * best_before)
}

/// Geometric blend `old^(1-w) * new^w`.
fn blend(old: &StrategyProfile, new: &StrategyProfile, w: f64) -> StrategyProfile {
    let mix = |a: f64, b: f64| ((1.0 - w) * a.ln() + w * b.ln()).exp();
    StrategyProfile {
        xs: old
            .xs
            .iter()
            .zip(&new.xs)
            .map(|(&a, &b)| mix(a, b))
            .collect(),
        xp: old
            .xp
            .iter()
            .zip(&new.xp)
            .map(|(&a, &b)| mix(a, b))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{payoff, PlayerParams, RiskMode};

    fn baseline(theta: f64, mode: RiskMode) -> ProblemSpec {
        let p = PlayerParams {
            a: 10.0,
            alpha: 0.5,
            b: 10.0,
            beta: 0.5,
            theta,
            d: 1.0,
            r: 0.1,
        };
        ProblemSpec::symmetric(2, p, mode).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            x_min: 2.0,
            x_max: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            n_starts: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn cost_dominance_sends_both_to_floor() {
        let mut spec = baseline(0.5, RiskMode::Multiplicative);
        spec.players[0].r = 1e6;
        spec.players[0].d = 0.0;
        let cfg = SolverConfig::default();
        let profile = StrategyProfile::uniform(2, 0.3);
        let (xs, xp) = best_response(0, &profile, &spec, &cfg).unwrap();
        assert_eq!(xs, cfg.x_min);
        assert_eq!(xp, cfg.x_min);
    }

    #[test]
    fn best_response_beats_every_start() {
        let spec = baseline(1.5, RiskMode::WinnerOnly);
        let cfg = SolverConfig::default();
        let profile = StrategyProfile::new(vec![0.02, 0.3], vec![0.1, 0.05]).unwrap();
        let (xs, xp) = best_response(0, &profile, &spec, &cfg).unwrap();
        let mut at = profile.clone();
        at.xs[0] = xs;
        at.xp[0] = xp;
        let u_best = payoff(0, &at, &spec, true).unwrap();
        for z in start_points(0, &profile, &cfg) {
            let mut p = profile.clone();
            p.xs[0] = z[0].exp();
            p.xp[0] = z[1].exp();
            assert!(u_best >= payoff(0, &p, &spec, true).unwrap());
        }
    }

    #[test]
    fn symmetric_solve_is_symmetric() {
        for mode in [RiskMode::Multiplicative, RiskMode::WinnerOnly] {
            let res = solve(&baseline(0.5, mode), &SolverConfig::default(), None).unwrap();
            assert!(res.converged, "{mode}: residual {}", res.residual);
            let p = &res.profile;
            assert!(relative_change(p.xs[0], p.xs[1], 1e-300) <= 1e-6);
            assert!(relative_change(p.xp[0], p.xp[1], 1e-300) <= 1e-6);
            assert!(res.residual <= 1e-8);
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let mut spec = baseline(1.0, RiskMode::WinnerOnly);
        spec.players[1].b = 2.0;
        let cfg = SolverConfig::default();
        let a = solve(&spec, &cfg, None).unwrap();
        let b = solve(&spec, &cfg, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let mut spec = baseline(1.0, RiskMode::WinnerOnly);
        spec.players[1].b = 2.0;
        let cfg = SolverConfig {
            max_iters: 1,
            ..Default::default()
        };
        let res = solve(&spec, &cfg, None).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn gauss_seidel_reaches_same_equilibrium() {
        let mut spec = baseline(0.5, RiskMode::Multiplicative);
        for p in &mut spec.players {
            p.a = 100.0;
        }
        spec.players[0].b = 20.0;
        let jac = solve(&spec, &SolverConfig::default(), None).unwrap();
        let gs = solve(
            &spec,
            &SolverConfig {
                update: UpdateScheme::GaussSeidel,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        assert!(jac.converged && gs.converged);
        assert!(max_relative_change(&jac.profile, &gs.profile, 1e-10) < 1e-6);
    }

    #[test]
    fn oscillation_detector() {
        assert!(!oscillating(&[
            1.0, 0.5, 0.25, 0.12, 0.06, 0.03, 0.01, 0.005
        ]));
        assert!(oscillating(&[1.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]));
        assert!(oscillating(&[9.0, 0.2, 3.0, 0.9, 9.0, 0.2, 3.0, 0.9]));
        assert!(!oscillating(&[0.5, 0.5, 0.5]));
    }
}
