//! JSON experiment configs. The schema and its defaults are documented in
//! `configs/REFERENCE.md`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use safetyrace::lab::{
    ClaimPoint, ClaimSpec, ParamPath, Proposition, Series, SubsidyScheme, SubsidyTarget, SweepSpec,
    Trend,
};
use safetyrace::{
    BeliefProfile, BeliefScope, ParamField, PlayerParams, ProblemSpec, RiskMode, SolverConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub players: Vec<PlayerParams>,
    #[serde(default = "default_risk_mode")]
    pub risk_mode: RiskMode,
    /// Keyed by 1-based player index.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub beliefs: BTreeMap<String, BeliefBlock>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<ClaimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

fn default_risk_mode() -> RiskMode {
    RiskMode::Multiplicative
}

fn default_discount() -> f64 {
    SubsidyScheme::DEFAULT_DISCOUNT
}

fn default_schemes() -> Vec<SubsidyTarget> {
    vec![SubsidyTarget::None]
}

fn default_target() -> f64 {
    0.99
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefBlock {
    #[serde(default)]
    pub scope: BeliefScope,
    #[serde(flatten)]
    pub overrides: BTreeMap<ParamField, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    List(Vec<f64>),
    Spaced(Spacing),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Spacing {
    /// Geometric spacing; `start` and `stop` are the end values themselves.
    Logspace {
        start: f64,
        stop: f64,
        num: usize,
    },
    Linspace {
        start: f64,
        stop: f64,
        num: usize,
    },
}

impl Values {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        match self {
            Values::List(v) => Ok(v.clone()),
            Values::Spaced(Spacing::Linspace { start, stop, num }) => {
                spaced(*start, *stop, *num, |s, e, t| s + (e - s) * t)
            }
            Values::Spaced(Spacing::Logspace { start, stop, num }) => {
                if !(*start > 0.0 && *stop > 0.0) {
                    bail!("logspace needs positive end points, got {start} and {stop}");
                }
                spaced(*start, *stop, *num, |s, e, t| {
                    10f64.powf(s.log10() + (e.log10() - s.log10()) * t)
                })
            }
        }
    }
}

fn spaced(
    start: f64,
    stop: f64,
    num: usize,
    at: impl Fn(f64, f64, f64) -> f64,
) -> Result<Vec<f64>> {
    match num {
        0 => bail!("spacing needs num >= 1"),
        1 => Ok(vec![start]),
        _ => Ok((0..num)
            .map(|k| match k {
                0 => start,
                k if k == num - 1 => stop,
                k => at(start, stop, k as f64 / (num - 1) as f64),
            })
            .collect()),
    }
}

/// One dimension of a series or claim grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Dim {
    Param { path: ParamPath, values: Values },
    RiskModes(Vec<RiskMode>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: ParamPath,
    pub values: Values,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<SubsidyTarget>,
    #[serde(default = "default_discount")]
    pub discount: f64,
    /// Cartesian product of these dimensions; one series per combination.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Dim>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vary: Vec<Dim>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<Values>,
    #[serde(default = "default_discount")]
    pub discount: f64,
    #[serde(default = "default_target")]
    pub target: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Trend>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_points: Vec<ExtraPoint>,
}

/// A grid point outside the cartesian product, e.g. a negative control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraPoint {
    #[serde(default)]
    pub set: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk_mode: Option<RiskMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Trend>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: PathBuf,
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub risk: Option<RiskMode>,
}

/// A sweep ready to run.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub series: Vec<Series>,
    pub sweep: SweepSpec,
    /// Whether the output carries a `series` column.
    pub labelled: bool,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.problem()?;
        cfg.solver.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.solver.seed = seed;
        }
        if let Some(tol) = o.tol {
            self.solver.tol = tol;
        }
        if let Some(m) = o.max_iters {
            self.solver.max_iters = m;
        }
        if let Some(mode) = o.risk {
            self.risk_mode = mode;
            let dims = self
                .sweep
                .iter_mut()
                .flat_map(|s| s.series.iter_mut())
                .chain(self.claim.iter_mut().flat_map(|c| c.vary.iter_mut()));
            for dim in dims {
                if let Dim::RiskModes(modes) = dim {
                    *modes = vec![mode];
                }
            }
            for extra in self
                .claim
                .iter_mut()
                .flat_map(|c| c.extra_points.iter_mut())
            {
                extra.risk_mode = None;
            }
        }
    }

    /// The config with every value list expanded, as hashed into run
    /// manifests.
    pub fn resolved(&self) -> Result<Self> {
        let mut cfg = self.clone();
        let expand = |v: &mut Values| -> Result<()> {
            *v = Values::List(v.resolve()?);
            Ok(())
        };
        let expand_dims = |dims: &mut Vec<Dim>| -> Result<()> {
            for d in dims {
                if let Dim::Param { values, .. } = d {
                    expand(values)?;
                }
            }
            Ok(())
        };
        if let Some(s) = &mut cfg.sweep {
            expand(&mut s.values)?;
            expand_dims(&mut s.series)?;
        }
        if let Some(c) = &mut cfg.claim {
            if let Some(scan) = &mut c.scan {
                expand(scan)?;
            }
            expand_dims(&mut c.vary)?;
        }
        Ok(cfg)
    }

    /// Lowercase hex SHA-256 of the resolved config.
    pub fn digest(&self) -> Result<String> {
        let bytes = serde_json::to_vec(&self.resolved()?)?;
        Ok(Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect())
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let n = self.players.len();
        let mut beliefs = BeliefProfile::truthful(n);
        for (key, block) in &self.beliefs {
            let index: usize = key
                .parse()
                .ok()
                .filter(|&k| (1..=n).contains(&k))
                .ok_or_else(|| anyhow!("beliefs: key `{key}` is not a player index in 1..={n}"))?;
            beliefs.beliefs[index - 1].scope = block.scope;
            for (&field, &value) in &block.overrides {
                beliefs.set(index - 1, field, value);
            }
        }
        Ok(ProblemSpec::new(self.players.clone(), self.risk_mode)?.with_beliefs(beliefs)?)
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let section = self
            .sweep
            .as_ref()
            .ok_or_else(|| anyhow!("config has no `sweep` section"))?;
        let schemes = section
            .schemes
            .iter()
            .map(|&t| SubsidyScheme::new(t, section.discount))
            .collect::<safetyrace::Result<Vec<_>>>()?;
        let series = expand_dims(&self.problem()?, &section.series)?
            .into_iter()
            .map(|(label, spec)| Series { label, spec })
            .collect();
        let sweep = SweepSpec {
            base: self.problem()?,
            axis: section.axis,
            values: section.values.resolve()?,
            schemes,
        };
        sweep.validate()?;
        Ok(SweepPlan {
            series,
            sweep,
            labelled: !section.series.is_empty(),
        })
    }

    pub fn claim_spec(&self, proposition: Proposition) -> Result<ClaimSpec> {
        let section = self
            .claim
            .as_ref()
            .ok_or_else(|| anyhow!("config has no `claim` section"))?;
        if let Some(name) = &section.name {
            if name != proposition.name() {
                bail!("config is for claim `{name}`, not `{proposition}`");
            }
        }
        let scan = section
            .scan
            .as_ref()
            .map(Values::resolve)
            .transpose()?
            .unwrap_or_default();
        let point = |spec: ProblemSpec, expect: Option<Trend>| ClaimPoint {
            spec,
            scan: scan.clone(),
            discount: section.discount,
            target: section.target,
            expect,
        };
        let base = self.problem()?;
        let mut points: Vec<ClaimPoint> = expand_dims(&base, &section.vary)?
            .into_iter()
            .map(|(_, spec)| point(spec, section.expect))
            .collect();
        for extra in &section.extra_points {
            let mut spec = base.clone();
            if let Some(m) = extra.risk_mode {
                spec.risk_mode = m;
            }
            for (path, &value) in &extra.set {
                path.parse::<ParamPath>()?.apply(&mut spec, value)?;
            }
            points.push(point(spec, extra.expect.or(section.expect)));
        }
        Ok(ClaimSpec {
            proposition,
            points,
        })
    }
}

/// Cartesian product of `dims` applied to `base`, first dimension
/// outermost. Labels join the per-dimension labels with commas.
pub fn expand_dims(base: &ProblemSpec, dims: &[Dim]) -> Result<Vec<(String, ProblemSpec)>> {
    let mut out = vec![(String::new(), base.clone())];
    for dim in dims {
        let mut next = Vec::new();
        for (label, spec) in &out {
            let join = |part: String| {
                if label.is_empty() {
                    part
                } else {
                    format!("{label},{part}")
                }
            };
            match dim {
                Dim::Param { path, values } => {
                    for v in values.resolve()? {
                        let mut s = spec.clone();
                        path.apply(&mut s, v)?;
                        next.push((join(format!("{}={}", path.field, v)), s));
                    }
                }
                Dim::RiskModes(modes) => {
                    for &m in modes {
                        next.push((
                            join(m.label().to_string()),
                            ProblemSpec {
                                risk_mode: m,
                                ..spec.clone()
                            },
                        ));
                    }
                }
            }
        }
        out = next;
    }
    Ok(out)
}

/// Directory holding the shipped configs: `$SAFETYRACE_CONFIG_DIR`, else
/// `./configs`, else the repository copy.
pub fn config_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os("SAFETYRACE_CONFIG_DIR") {
        return PathBuf::from(dir);
    }
    let local = PathBuf::from("configs");
    if local.is_dir() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}
