use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which graph family the propagation runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Directed k-NN graphs, separate row and column degrees.
    #[default]
    Nonsym,
    /// `(A + A^T) / 2` of the directed graphs.
    Sym,
    /// Dense per-row graphs over each row's neighborhood.
    Local,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Nonsym => "nonsym",
            Variant::Sym => "sym",
            Variant::Local => "local",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonsym" => Ok(Variant::Nonsym),
            "sym" => Ok(Variant::Sym),
            "local" => Ok(Variant::Local),
            other => Err(Error::Config(format!("unknown graph variant `{other}`"))),
        }
    }
}

/// Propagation hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcrConfig {
    /// Neighbors per row in the global graph.
    pub k_g: usize,
    /// Neighbors per row in the cross-camera graph.
    pub k_c: usize,
    /// Kernel temperature in `exp(-dist^2 / gamma)`.
    pub gamma: f64,
    /// Weight of the global term; the cross-camera term gets `1 - alpha`.
    pub alpha: f64,
    pub iterations: usize,
    pub variant: Variant,
    /// Unit-normalize rows after every iteration.
    pub renormalize: bool,
    /// Unit-normalize rows before the first iteration.
    pub pre_normalize: bool,
}

impl Default for GcrConfig {
    fn default() -> Self {
        Self {
            k_g: 15,
            k_c: 3,
            gamma: 0.2,
            alpha: 0.7,
            iterations: 3,
            variant: Variant::Nonsym,
            renormalize: true,
            pre_normalize: true,
        }
    }
}

impl GcrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_g == 0 {
            return Err(Error::Config("k_g must be positive".into()));
        }
        if self.k_c == 0 {
            return Err(Error::Config("k_c must be positive".into()));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        Ok(())
    }
}
