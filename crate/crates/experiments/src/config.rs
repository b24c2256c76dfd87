//! Run configuration: a JSON file whose fields are all optional, overridden
//! by command-line flags. Unset fields fall back to per-study defaults, so a
//! config together with the code version fixes a run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ExpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Simulate,
    Converge,
    Moments,
    StrongRoundtrip,
    MatsumotoYor,
    Independence,
    ItoCheck,
}

impl Study {
    pub const ALL: [Study; 7] = [
        Study::Simulate,
        Study::Converge,
        Study::Moments,
        Study::StrongRoundtrip,
        Study::MatsumotoYor,
        Study::Independence,
        Study::ItoCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Study::Simulate => "simulate",
            Study::Converge => "converge",
            Study::Moments => "moments",
            Study::StrongRoundtrip => "strong-roundtrip",
            Study::MatsumotoYor => "matsumoto-yor",
            Study::Independence => "independence",
            Study::ItoCheck => "ito-check",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub study: Option<Study>,
    /// Replica count; studies with several parts apply it to each part.
    pub replicas: Option<usize>,
    /// Time steps, coarsest first for refinement studies.
    pub dt: Option<Vec<f64>>,
    /// Environment grid step.
    pub h: Option<f64>,
    /// Local-time bandwidth `ε = factor · √dt`.
    pub epsilon_factor: f64,
    /// Partition meshes, coarsest first.
    pub mesh: Option<Vec<f64>>,
    /// Meshes for the drift cross-route comparison.
    pub drift_mesh: Option<Vec<f64>>,
    /// Horizons `K` for the scale-function asymptotics.
    pub k_list: Option<Vec<f64>>,
    /// Probe points `x` for correlation checks.
    pub probes: Option<Vec<f64>>,
    /// Window lengths for bound-ratio sweeps.
    pub windows: Option<Vec<f64>>,
    /// Threshold overrides by name (see `criteria`).
    pub tolerances: BTreeMap<String, f64>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 20_240_601,
            study: None,
            replicas: None,
            dt: None,
            h: None,
            epsilon_factor: brox_core::local_time::DEFAULT_BANDWIDTH_FACTOR,
            mesh: None,
            drift_mesh: None,
            k_list: None,
            probes: None,
            windows: None,
            tolerances: BTreeMap::new(),
            out: None,
        }
    }
}

fn positive_list(name: &str, v: &Option<Vec<f64>>) -> Result<()> {
    if let Some(v) = v {
        if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(ExpError::Config(format!("{name} must be a nonempty list of positive numbers")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ExpError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|source| ExpError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn for_study(study: Study) -> Self {
        ExperimentConfig {
            study: Some(study),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == Some(0) {
            return Err(ExpError::Config("replicas must be positive".into()));
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(ExpError::Config("h must be positive".into()));
            }
        }
        if !(self.epsilon_factor > 0.0) {
            return Err(ExpError::Config("epsilon_factor must be positive".into()));
        }
        positive_list("dt", &self.dt)?;
        positive_list("mesh", &self.mesh)?;
        positive_list("drift_mesh", &self.drift_mesh)?;
        positive_list("k_list", &self.k_list)?;
        positive_list("windows", &self.windows)?;
        if let Some(p) = &self.probes {
            if p.is_empty() {
                return Err(ExpError::Config("probes must be nonempty".into()));
            }
        }
        for m in [&self.mesh, &self.drift_mesh].into_iter().flatten() {
            if m.windows(2).any(|w| w[1] >= w[0]) {
                return Err(ExpError::Config("mesh lists must be decreasing".into()));
            }
        }
        Ok(())
    }

    pub fn replicas_or(&self, default: usize) -> usize {
        self.replicas.unwrap_or(default)
    }

    pub fn dt_or(&self, default: &[f64]) -> Vec<f64> {
        self.dt.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn h_or(&self, default: f64) -> f64 {
        self.h.unwrap_or(default)
    }

    pub fn epsilon(&self, dt: f64) -> f64 {
        self.epsilon_factor * dt.sqrt()
    }

    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"seed": 7, "study": "ito-check", "dt": [0.001]}"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.study, Some(Study::ItoCheck));
        assert_eq!(cfg.dt_or(&[1.0]), vec![0.001]);
        assert_eq!(cfg.replicas_or(50), 50);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_fields_and_bad_values_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sed": 1}"#).is_err());
        let cfg = ExperimentConfig {
            mesh: Some(vec![0.1, 0.2]),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            replicas: Some(0),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
