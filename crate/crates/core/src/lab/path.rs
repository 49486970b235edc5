//! Parameter paths such as `players[2].r`, `players[*].theta` and
//! `beliefs[2].A`. Player indices are 1-based.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::model::{ParamField, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathTarget {
    /// True parameters of one player (0-based) or of all players.
    Players(Option<usize>),
    /// What one player (0-based) believes.
    Beliefs(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamPath {
    pub target: PathTarget,
    pub field: ParamField,
}

impl ParamPath {
    pub fn all_players(field: ParamField) -> Self {
        Self {
            target: PathTarget::Players(None),
            field,
        }
    }

    /// `player` is 0-based.
    pub fn player(player: usize, field: ParamField) -> Self {
        Self {
            target: PathTarget::Players(Some(player)),
            field,
        }
    }

    pub fn belief(player: usize, field: ParamField) -> Self {
        Self {
            target: PathTarget::Beliefs(player),
            field,
        }
    }

    /// Writes `value` into `spec` and revalidates it.
    pub fn apply(&self, spec: &mut ProblemSpec, value: f64) -> Result<()> {
        let n = spec.n();
        match self.target {
            PathTarget::Players(None) => spec
                .players
                .iter_mut()
                .for_each(|p| p.set(self.field, value)),
            PathTarget::Players(Some(k)) => {
                spec.players
                    .get_mut(k)
                    .ok_or(Error::PlayerIndex { index: k, n })?
                    .set(self.field, value);
            }
            PathTarget::Beliefs(k) => {
                if k >= n {
                    return Err(Error::PlayerIndex { index: k, n });
                }
                spec.beliefs.set(k, self.field, value);
            }
        }
        spec.validate()
    }

    /// Current value at this path (for `players[*]`, player 1's value).
    pub fn read(&self, spec: &ProblemSpec) -> Result<f64> {
        let n = spec.n();
        match self.target {
            PathTarget::Players(sel) => {
                let k = sel.unwrap_or(0);
                spec.players
                    .get(k)
                    .map(|p| p.get(self.field))
                    .ok_or(Error::PlayerIndex { index: k, n })
            }
            PathTarget::Beliefs(k) => {
                if k >= n {
                    return Err(Error::PlayerIndex { index: k, n });
                }
                Ok(spec.worldview(k)[k].get(self.field))
            }
        }
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.target {
            PathTarget::Players(None) => write!(f, "players[*].{}", self.field),
            PathTarget::Players(Some(k)) => write!(f, "players[{}].{}", k + 1, self.field),
            PathTarget::Beliefs(k) => write!(f, "beliefs[{}].{}", k + 1, self.field),
        }
    }
}

impl FromStr for ParamPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownPath(s.to_string());
        let (head, field) = s.split_once('.').ok_or_else(unknown)?;
        let field: ParamField = field.parse().map_err(|_| unknown())?;
        let (kind, index) = head
            .strip_suffix(']')
            .and_then(|h| h.split_once('['))
            .ok_or_else(unknown)?;
        let index = if index == "*" {
            None
        } else {
            let k: usize = index.parse().map_err(|_| unknown())?;
            if k == 0 {
                return Err(invalid(s, "player indices start at 1"));
            }
            Some(k - 1)
        };
        let target = match (kind, index) {
            ("players", sel) => PathTarget::Players(sel),
            ("beliefs", Some(k)) => PathTarget::Beliefs(k),
            _ => return Err(unknown()),
        };
        Ok(Self { target, field })
    }
}

impl Serialize for ParamPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParamPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
