use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::model::{ParamField, ProblemSpec};

/// Who receives the discounted factor price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubsidyTarget {
    None,
    /// 0-based player index.
    Player(usize),
    Both,
}

impl fmt::Display for SubsidyTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubsidyTarget::None => f.write_str("none"),
            SubsidyTarget::Player(k) => write!(f, "player{}", k + 1),
            SubsidyTarget::Both => f.write_str("both"),
        }
    }
}

impl FromStr for SubsidyTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SubsidyTarget::None),
            "both" => Ok(SubsidyTarget::Both),
            _ => s
                .strip_prefix("player")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1)
                .map(|k| SubsidyTarget::Player(k - 1))
                .ok_or_else(|| Error::Config(format!("unknown subsidy scheme `{s}`"))),
        }
    }
}

impl Serialize for SubsidyTarget {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SubsidyTarget {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// A subsidized player pays `discount * r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsidyScheme {
    pub target: SubsidyTarget,
    pub discount: f64,
}

impl SubsidyScheme {
    pub const DEFAULT_DISCOUNT: f64 = 0.5;

    pub fn new(target: SubsidyTarget, discount: f64) -> Result<Self> {
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(invalid(
                "discount",
                format!("must be in (0, 1], got {discount}"),
            ));
        }
        Ok(Self { target, discount })
    }

    pub fn none() -> Self {
        Self {
            target: SubsidyTarget::None,
            discount: Self::DEFAULT_DISCOUNT,
        }
    }

    pub fn label(&self) -> String {
        self.target.to_string()
    }
}

/// Copy of `spec` with the targeted players' prices discounted. Believed
/// prices move with the true ones.
pub fn apply_scheme(spec: &ProblemSpec, scheme: &SubsidyScheme) -> Result<ProblemSpec> {
    let n = spec.n();
    let targets: Vec<usize> = match scheme.target {
        SubsidyTarget::None => return Ok(spec.clone()),
        SubsidyTarget::Player(k) if k >= n => return Err(Error::PlayerIndex { index: k, n }),
        SubsidyTarget::Player(k) => vec![k],
        SubsidyTarget::Both => (0..n).collect(),
    };
    SubsidyScheme::new(scheme.target, scheme.discount)?;
    let mut out = spec.clone();
    for k in targets {
        out.players[k].r *= scheme.discount;
        // A believed price is scaled along with the true one.
        if let Some(r) = out.beliefs.beliefs[k].overrides.get_mut(&ParamField::R) {
            *r *= scheme.discount;
        }
    }
    out.validate()?;
    Ok(out)
}
