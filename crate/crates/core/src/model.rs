//! Production functions, contest success, disaster-risk aggregation and
//! payoffs of the compute-race safety game.
//!
//! Every player buys compute at a per-unit price `r` and splits it between
//! safety (`xs`) and performance (`xp`). Performance is `p = B xp^beta`;
//! safety odds are `s = A xs^alpha p^(-theta)`. The contest is won with
//! probability proportional to performance, and a disaster costs every
//! player their own `d`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Natural-log bounds applied to intermediate power-law values.
pub const LN_VALUE_MAX: f64 = 690.775_527_898_213_7; // ln(1e300)
pub const LN_VALUE_MIN: f64 = -LN_VALUE_MAX;

/// One player's technology and preference parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlayerParams {
    /// Safety productivity factor.
    #[serde(rename = "A")]
    pub a: f64,
    /// Compute elasticity of safety.
    pub alpha: f64,
    /// Performance productivity factor.
    #[serde(rename = "B")]
    pub b: f64,
    /// Compute elasticity of performance.
    pub beta: f64,
    /// Safety-performance tradeoff; `-theta` is the p-elasticity of s.
    pub theta: f64,
    /// Disaster cost borne by this player.
    pub d: f64,
    /// Per-unit factor price faced by this player.
    pub r: f64,
}

impl Default for PlayerParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            alpha: 0.5,
            b: 1.0,
            beta: 0.5,
            theta: 0.5,
            d: 1.0,
            r: 1.0,
        }
    }
}

impl PlayerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("A", self.a),
            ("alpha", self.alpha),
            ("B", self.b),
            ("beta", self.beta),
            ("r", self.r),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.d.is_finite() && self.d >= 0.0) {
            return Err(invalid(
                "d",
                format!("must be finite and >= 0, got {}", self.d),
            ));
        }
        if !self.theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        Ok(())
    }

    pub fn get(&self, field: ParamField) -> f64 {
        match field {
            ParamField::A => self.a,
            ParamField::Alpha => self.alpha,
            ParamField::B => self.b,
            ParamField::Beta => self.beta,
            ParamField::Theta => self.theta,
            ParamField::D => self.d,
            ParamField::R => self.r,
        }
    }

    pub fn set(&mut self, field: ParamField, value: f64) {
        match field {
            ParamField::A => self.a = value,
            ParamField::Alpha => self.alpha = value,
            ParamField::B => self.b = value,
            ParamField::Beta => self.beta = value,
            ParamField::Theta => self.theta = value,
            ParamField::D => self.d = value,
            ParamField::R => self.r = value,
        }
    }

    /// `alpha - theta * beta`: the returns-to-scale exponent of safety.
    pub fn scaling_exponent(&self) -> f64 {
        scaling_exponent(self)
    }
}

/// Names of the scalar fields of [`PlayerParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParamField {
    A,
    #[serde(rename = "alpha")]
    Alpha,
    B,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "d")]
    D,
    #[serde(rename = "r")]
    R,
}

impl ParamField {
    pub const ALL: [ParamField; 7] = [
        ParamField::A,
        ParamField::Alpha,
        ParamField::B,
        ParamField::Beta,
        ParamField::Theta,
        ParamField::D,
        ParamField::R,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamField::A => "A",
            ParamField::Alpha => "alpha",
            ParamField::B => "B",
            ParamField::Beta => "beta",
            ParamField::Theta => "theta",
            ParamField::D => "d",
            ParamField::R => "r",
        }
    }
}

impl fmt::Display for ParamField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamField::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownPath(s.to_string()))
    }
}

/// How individual safety levels combine into the probability of no disaster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMode {
    /// Every player independently may cause a disaster.
    Multiplicative,
    /// Only the contest winner may cause a disaster.
    #[serde(alias = "winner")]
    WinnerOnly,
}

impl RiskMode {
    pub fn label(self) -> &'static str {
        match self {
            RiskMode::Multiplicative => "multiplicative",
            RiskMode::WinnerOnly => "winner",
        }
    }
}

impl fmt::Display for RiskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RiskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiplicative" => Ok(RiskMode::Multiplicative),
            "winner" | "winner_only" => Ok(RiskMode::WinnerOnly),
            other => Err(Error::Config(format!(
                "unknown risk mode `{other}` (expected multiplicative or winner)"
            ))),
        }
    }
}

/// Which players a believed parameter value is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefScope {
    /// The believed value replaces the field for every player in the
    /// believer's model of the world.
    #[default]
    AllPlayers,
    /// Only the believer's own parameters are replaced.
    OwnOnly,
}

/// One player's deviations from the true parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Belief {
    pub overrides: BTreeMap<ParamField, f64>,
    #[serde(default)]
    pub scope: BeliefScope,
}

impl Belief {
    pub fn is_truthful(&self) -> bool {
        self.overrides.is_empty()
    }
}

/// Per-player beliefs. Player `i` maximizes its payoff in a model of the
/// world built from the true parameters with its overrides substituted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BeliefProfile {
    pub beliefs: Vec<Belief>,
}

impl BeliefProfile {
    pub fn truthful(n: usize) -> Self {
        Self {
            beliefs: vec![Belief::default(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn is_truthful(&self) -> bool {
        self.beliefs.iter().all(Belief::is_truthful)
    }

    /// Sets player `believer`'s belief about `field`.
    pub fn set(&mut self, believer: usize, field: ParamField, value: f64) {
        self.beliefs[believer].overrides.insert(field, value);
    }

    /// The parameter vector player `believer` uses for every player.
    pub fn worldview(&self, believer: usize, truth: &[PlayerParams]) -> Vec<PlayerParams> {
        let belief = &self.beliefs[believer];
        truth
            .iter()
            .enumerate()
            .map(|(j, params)| {
                let mut p = *params;
                if belief.scope == BeliefScope::AllPlayers || j == believer {
                    for (&field, &value) in &belief.overrides {
                        p.set(field, value);
                    }
                }
                p
            })
            .collect()
    }
}

/// A fully specified game: true parameters, beliefs and risk aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub players: Vec<PlayerParams>,
    pub beliefs: BeliefProfile,
    pub risk_mode: RiskMode,
}

impl ProblemSpec {
    pub fn new(players: Vec<PlayerParams>, risk_mode: RiskMode) -> Result<Self> {
        let n = players.len();
        let spec = Self {
            players,
            beliefs: BeliefProfile::truthful(n),
            risk_mode,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `n` identical players.
    pub fn symmetric(n: usize, params: PlayerParams, risk_mode: RiskMode) -> Result<Self> {
        Self::new(vec![params; n], risk_mode)
    }

    pub fn with_beliefs(mut self, beliefs: BeliefProfile) -> Result<Self> {
        self.beliefs = beliefs;
        self.validate()?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.players.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.players.len();
        if n < 2 {
            return Err(Error::TooFewPlayers(n));
        }
        if self.beliefs.len() != n {
            return Err(Error::LengthMismatch {
                what: "beliefs",
                expected: n,
                got: self.beliefs.len(),
            });
        }
        for (i, p) in self.players.iter().enumerate() {
            p.validate()
                .map_err(|e| prefix_field(e, &format!("players[{}]", i + 1)))?;
        }
        for i in 0..n {
            for p in self.beliefs.worldview(i, &self.players) {
                p.validate()
                    .map_err(|e| prefix_field(e, &format!("beliefs[{}]", i + 1)))?;
            }
        }
        Ok(())
    }

    /// Parameters player `i` acts on.
    pub fn worldview(&self, i: usize) -> Vec<PlayerParams> {
        self.beliefs.worldview(i, &self.players)
    }

    /// Outcome of `profile` under the true parameters.
    pub fn outcome(&self, profile: &StrategyProfile) -> Result<Outcome> {
        evaluate(profile, &self.players, self.risk_mode)
    }
}

fn prefix_field(e: Error, prefix: &str) -> Error {
    match e {
        Error::InvalidParam { field, reason } => Error::InvalidParam {
            field: format!("{prefix}.{field}"),
            reason,
        },
        other => other,
    }
}

/// Compute allocations of all players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub xs: Vec<f64>,
    pub xp: Vec<f64>,
}

impl StrategyProfile {
    pub fn new(xs: Vec<f64>, xp: Vec<f64>) -> Result<Self> {
        if xs.len() != xp.len() {
            return Err(Error::LengthMismatch {
                what: "xp",
                expected: xs.len(),
                got: xp.len(),
            });
        }
        if let Some(v) = xs
            .iter()
            .chain(&xp)
            .find(|v| !(v.is_finite() && **v >= 0.0))
        {
            return Err(invalid(
                "strategy",
                format!("allocations must be finite and >= 0, got {v}"),
            ));
        }
        Ok(Self { xs, xp })
    }

    pub fn uniform(n: usize, value: f64) -> Self {
        Self {
            xs: vec![value; n],
            xp: vec![value; n],
        }
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    /// Total compute purchased by player `i`.
    pub fn total(&self, i: usize) -> f64 {
        self.xs[i] + self.xp[i]
    }
}

/// Everything the model derives from a strategy profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub s: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub sigma_i: Vec<f64>,
    pub sigma: f64,
    pub payoffs: Vec<f64>,
    /// Set when some power-law value left `[1e-300, 1e300]` and was clamped.
    pub clamped: bool,
}

/// `B xp^beta`.
pub fn performance(params: &PlayerParams, xp: f64) -> f64 {
    if xp == 0.0 {
        return 0.0;
    }
    let (v, _) = clamped_exp(params.b.ln() + params.beta * xp.ln());
    v
}

/// `A xs^alpha p^(-theta)`. Zero performance is only admissible when
/// `theta <= 0`.
pub fn safety(params: &PlayerParams, xs: f64, p: f64) -> Result<f64> {
    safety_flagged(params, xs, p).map(|(s, _)| s)
}

fn safety_flagged(params: &PlayerParams, xs: f64, p: f64) -> Result<(f64, bool)> {
    if p == 0.0 {
        if params.theta > 0.0 {
            return Err(Error::Domain {
                theta: params.theta,
            });
        }
        if params.theta < 0.0 {
            return Ok((0.0, false));
        }
    }
    if xs == 0.0 {
        return Ok((0.0, false));
    }
    let ln_p_term = if params.theta == 0.0 {
        0.0
    } else {
        params.theta * p.ln()
    };
    Ok(clamped_exp(
        params.a.ln() + params.alpha * xs.ln() - ln_p_term,
    ))
}

fn clamped_exp(ln_v: f64) -> (f64, bool) {
    if ln_v > LN_VALUE_MAX {
        (LN_VALUE_MAX.exp(), true)
    } else if ln_v < LN_VALUE_MIN {
        (LN_VALUE_MIN.exp(), true)
    } else {
        (ln_v.exp(), false)
    }
}

/// Proportional contest success `q_i = p_i / sum_j p_j`; uniform when every
/// performance is zero.
pub fn contest_probs(p: &[f64]) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        let n = p.len() as f64;
        return vec![1.0 / n; p.len()];
    }
    p.iter().map(|v| v / total).collect()
}

/// Returns `(sigma_i, sigma)`: the safe-outcome probability conditional on
/// each player winning, and the unconditional probability of no disaster.
pub fn aggregate_safety(s: &[f64], q: &[f64], mode: RiskMode) -> (Vec<f64>, f64) {
    let (sigma_i, sigma, _) = aggregate_with_complement(s, q, mode);
    (sigma_i, sigma)
}

/// Like [`aggregate_safety`], also returning `1 - sigma` computed without
/// cancellation.
pub(crate) fn aggregate_with_complement(
    s: &[f64],
    q: &[f64],
    mode: RiskMode,
) -> (Vec<f64>, f64, f64) {
    match mode {
        RiskMode::Multiplicative => {
            let ln_sigma: f64 = s.iter().map(|&v| ln_safe_prob(v)).sum();
            let sigma = ln_sigma.exp();
            (vec![sigma; s.len()], sigma, -ln_sigma.exp_m1())
        }
        RiskMode::WinnerOnly => {
            let sigma_i: Vec<f64> = s.iter().map(|&v| v / (1.0 + v)).collect();
            let sigma = sigma_i.iter().zip(q).map(|(a, b)| a * b).sum();
            let complement = s.iter().zip(q).map(|(&v, b)| b / (1.0 + v)).sum();
            (sigma_i, sigma, complement)
        }
    }
}

/// `ln(s / (1 + s))`.
fn ln_safe_prob(s: f64) -> f64 {
    if s == 0.0 {
        f64::NEG_INFINITY
    } else {
        -(1.0 / s).ln_1p()
    }
}

/// Evaluates safety, performance, win probabilities, aggregate safety and
/// payoffs for a profile with the given parameters.
pub fn evaluate(
    profile: &StrategyProfile,
    params: &[PlayerParams],
    mode: RiskMode,
) -> Result<Outcome> {
    let n = params.len();
    if profile.n() != n {
        return Err(Error::LengthMismatch {
            what: "strategy profile",
            expected: n,
            got: profile.n(),
        });
    }
    let mut clamped = false;
    let p: Vec<f64> = params
        .iter()
        .zip(&profile.xp)
        .map(|(pp, &xp)| {
            if xp == 0.0 {
                return 0.0;
            }
            let (v, c) = clamped_exp(pp.b.ln() + pp.beta * xp.ln());
            clamped |= c;
            v
        })
        .collect();
    let mut s = Vec::with_capacity(n);
    for j in 0..n {
        let (v, c) = safety_flagged(&params[j], profile.xs[j], p[j])?;
        clamped |= c;
        s.push(v);
    }
    let q = contest_probs(&p);
    let (sigma_i, sigma, complement) = aggregate_with_complement(&s, &q, mode);
    let payoffs = (0..n)
        .map(|i| sigma_i[i] * q[i] - complement * params[i].d - params[i].r * profile.total(i))
        .collect();
    Ok(Outcome {
        s,
        p,
        q,
        sigma_i,
        sigma,
        payoffs,
        clamped,
    })
}

/// Expected net payoff of player `i`. With `use_beliefs` the whole world is
/// evaluated under player `i`'s believed parameters.
pub fn payoff(
    i: usize,
    profile: &StrategyProfile,
    spec: &ProblemSpec,
    use_beliefs: bool,
) -> Result<f64> {
    if i >= spec.n() {
        return Err(Error::PlayerIndex {
            index: i,
            n: spec.n(),
        });
    }
    let outcome = if use_beliefs {
        evaluate(profile, &spec.worldview(i), spec.risk_mode)?
    } else {
        spec.outcome(profile)?
    };
    Ok(outcome.payoffs[i])
}

/// `alpha - theta * beta`. Scaling both inputs by `c` scales safety by
/// `c` to this power.
pub fn scaling_exponent(params: &PlayerParams) -> f64 {
    params.alpha - params.theta * params.beta
}
