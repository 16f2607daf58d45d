//! JSON scenario description.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::fracture::{CriterionMode, FractureCriterion};
use crate::geometry::{CrackEnd, DomainOutline, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub mu: f64,
    pub rho: f64,
}

/// Lattice spacing plus either `kappa = c / c_s` or the time step `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub dh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "unit_tau")]
    pub tau: f64,
}

fn unit_tau() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackConfig {
    pub vertices: Vec<Vec2>,
    /// Ends that may grow; each grows along the crack axis.
    #[serde(default)]
    pub tips: Vec<CrackEnd>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CriterionConfig {
    Steady {
        a_dot: f64,
        r_min: f64,
    },
    KCriterion {
        k_c: f64,
        v_max: f64,
        r0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_min: Option<f64>,
    },
}

impl CriterionConfig {
    pub fn criterion(&self) -> FractureCriterion {
        match *self {
            CriterionConfig::Steady { a_dot, r_min } => FractureCriterion { mode: CriterionMode::Steady { a_dot }, r_min: Some(r_min) },
            CriterionConfig::KCriterion { k_c, v_max, r0, r_min } => FractureCriterion { mode: CriterionMode::KCriterion { k_c, v_max, r0 }, r_min },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_max: f64,
    /// Steps between time-series records.
    #[serde(default = "one")]
    pub sample_every: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub material: MaterialConfig,
    pub lattice: LatticeConfig,
    pub domain: DomainOutline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crack: Option<CrackConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<CriterionConfig>,
    pub run: RunConfig,
}

impl ScenarioConfig {
    pub fn from_json(s: &str) -> Result<Self, SimError> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        let l = &self.lattice;
        if !(l.dh > 0.0 && l.dh.is_finite()) {
            return bad(format!("dh must be positive, got {}", l.dh));
        }
        if l.kappa.is_some() && l.dt.is_some() {
            return bad("give either lattice.kappa or lattice.dt, not both".into());
        }
        if !(self.run.t_max > 0.0) {
            return bad(format!("t_max must be positive, got {}", self.run.t_max));
        }
        if self.run.sample_every == 0 || self.run.output.snapshot_every == Some(0) {
            return bad("strides must be at least 1".into());
        }
        self.domain.validate().map_err(|e| SimError::Config(e.to_string()))?;
        for i in 0..self.domain.len() {
            let len = self.domain.edge(i).length();
            if len < 2.0 * l.dh {
                return bad(format!("edge {i} has length {len} < 2 dh"));
            }
        }
        if let Some(c) = &self.crack {
            let len = c.vertices.first().zip(c.vertices.last()).map_or(0.0, |(a, b)| a.distance(*b));
            if len < 2.0 * l.dh {
                return bad(format!("crack length {len} < 2 dh"));
            }
        }
        if self.criterion.is_some() && self.crack.is_none() {
            return bad("a fracture criterion needs a crack".into());
        }
        Ok(())
    }
}
