//! JSON run configuration: parsing, defaults, and cross-validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qobsent::fock::LatticeSpec;
use qobsent::model::ModelParams;
use qobsent::scenarios::{CanonicalReference, QuenchEntropy, StateKind};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quench: Option<QuenchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compute: Option<ComputeConfig>,
    /// Entropy columns to record, subset of S_xE, S_FOE, S_diag, S_VN_half.
    #[serde(default = "default_entropies")]
    pub entropies: Vec<String>,
    /// Number of equal positional bins.
    pub bins: usize,
    /// Number of equal spatial blocks for local-energy measurements.
    pub blocks: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

fn default_entropies() -> Vec<String> {
    ["S_xE", "S_FOE", "S_diag", "S_VN_half"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Quench,
    Sweep,
    Compute,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExperimentKind::Quench => write!(f, "quench"),
            ExperimentKind::Sweep => write!(f, "sweep"),
            ExperimentKind::Compute => write!(f, "compute"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "nnn_default")]
    pub tp: f64,
    #[serde(rename = "V", default = "one")]
    pub v: f64,
    #[serde(rename = "Vp", default = "nnn_default")]
    pub vp: f64,
    /// `true`: interactions use `(n_i - 1/2)(n_j - 1/2)`, `false`: `n_i n_j`.
    #[serde(default = "yes")]
    pub density_shift: bool,
}

fn one() -> f64 {
    1.0
}
fn nnn_default() -> f64 {
    0.96
}
fn yes() -> bool {
    true
}

impl ModelConfig {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        let lattice = LatticeSpec::new(self.l, self.n)?;
        let p = ModelParams {
            lattice,
            t: self.t,
            tp: self.tp,
            v: self.v,
            vp: self.vp,
            density_shift: self.density_shift,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchConfig {
    /// Sites of the initial confining box (same particle number).
    #[serde(rename = "pre_L")]
    pub pre_l: usize,
    #[serde(default = "default_quench_time")]
    pub quench_time: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "default_reference")]
    pub canonical_reference: CanonicalReferenceConfig,
}

fn default_quench_time() -> f64 {
    30.0
}
fn default_t_max() -> f64 {
    90.0
}
fn default_dt() -> f64 {
    0.25
}
fn default_reference() -> CanonicalReferenceConfig {
    CanonicalReferenceConfig::EnergyMatched
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonicalReferenceConfig {
    EnergyMatched,
    InitialBeta,
}

impl From<CanonicalReferenceConfig> for CanonicalReference {
    fn from(c: CanonicalReferenceConfig) -> Self {
        match c {
            CanonicalReferenceConfig::EnergyMatched => CanonicalReference::EnergyMatched,
            CanonicalReferenceConfig::InitialBeta => CanonicalReference::InitialBeta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_kinds")]
    pub state_kinds: Vec<StateKindConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<usize>>,
}

fn default_k() -> usize {
    30
}
fn default_kinds() -> Vec<StateKindConfig> {
    vec![
        StateKindConfig::Eigenstate,
        StateKindConfig::Superposition,
        StateKindConfig::Microcanonical,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKindConfig {
    Eigenstate,
    Superposition,
    Microcanonical,
}

impl From<StateKindConfig> for StateKind {
    fn from(c: StateKindConfig) -> Self {
        match c {
            StateKindConfig::Eigenstate => StateKind::Eigenstate,
            StateKindConfig::Superposition => StateKind::RandomSuperposition,
            StateKindConfig::Microcanonical => StateKind::MicrocanonicalMixture,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeConfig {
    pub state: StateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateConfig {
    Thermal { beta: f64 },
    Eigenstate { index: usize },
    Superposition { center: usize, k: usize },
    Microcanonical { center: usize, k: usize },
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(CliError::Parse)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Validation(msg));
        if self.model.n > self.model.l {
            return fail(format!(
                "model.N = {} exceeds model.L = {}",
                self.model.n, self.model.l
            ));
        }
        if self.bins == 0 || self.model.l % self.bins != 0 {
            return fail(format!(
                "bins = {} must divide model.L = {}",
                self.bins, self.model.l
            ));
        }
        if self.blocks == 0 || self.model.l % self.blocks != 0 {
            return fail(format!(
                "blocks = {} must divide model.L = {}",
                self.blocks, self.model.l
            ));
        }
        for tag in &self.entropies {
            if !["S_xE", "S_FOE", "S_diag", "S_VN_half"].contains(&tag.as_str()) {
                return fail(format!(
                    "entropies contains unknown tag {tag:?} (expected S_xE, S_FOE, S_diag, S_VN_half)"
                ));
            }
        }
        match self.experiment {
            ExperimentKind::Quench => {
                let q = match &self.quench {
                    Some(q) => q,
                    None => return fail("experiment = quench requires a quench block".into()),
                };
                if q.pre_l == 0 || q.pre_l > self.model.l {
                    return fail(format!(
                        "quench.pre_L = {} must lie in 1..=model.L = {}",
                        q.pre_l, self.model.l
                    ));
                }
                if q.pre_l < self.model.n {
                    return fail(format!(
                        "quench.pre_L = {} cannot hold N = {} particles",
                        q.pre_l, self.model.n
                    ));
                }
                if !(q.dt > 0.0) || !(q.t_max > 0.0) {
                    return fail("quench.dt and quench.t_max must be positive".into());
                }
                if q.quench_time < 0.0 {
                    return fail("quench.quench_time must be nonnegative".into());
                }
            }
            ExperimentKind::Sweep => {
                let s = match &self.sweep {
                    Some(s) => s,
                    None => return fail("experiment = sweep requires a sweep block".into()),
                };
                if s.k == 0 {
                    return fail("sweep.k must be positive".into());
                }
                if s.state_kinds.is_empty() {
                    return fail("sweep.state_kinds must not be empty".into());
                }
            }
            ExperimentKind::Compute => {
                if self.compute.is_none() {
                    return fail("experiment = compute requires a compute block".into());
                }
            }
        }
        Ok(())
    }

    pub fn requested_entropies(&self) -> Vec<QuenchEntropy> {
        QuenchEntropy::ALL
            .iter()
            .copied()
            .filter(|k| self.entropies.iter().any(|t| t == k.column()))
            .collect()
    }

    pub fn schedule(q: &QuenchConfig) -> Vec<f64> {
        let steps = (q.t_max / q.dt).round() as usize;
        (0..=steps).map(|i| i as f64 * q.dt).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_QUENCH: &str = r#"{
        "model": {"L": 16, "N": 4},
        "experiment": "quench",
        "quench": {"pre_L": 8},
        "bins": 4,
        "blocks": 4,
        "seed": 1
    }"#;

    #[test]
    fn minimal_quench_config_gets_defaults() {
        let c = RunConfig::parse(MINIMAL_QUENCH).unwrap();
        assert_eq!(c.model.t, 1.0);
        assert_eq!(c.model.v, 1.0);
        assert_eq!(c.model.tp, 0.96);
        assert_eq!(c.model.vp, 0.96);
        assert!(c.model.density_shift);
        let q = c.quench.unwrap();
        assert_eq!(q.beta, 1.0);
        assert_eq!(q.quench_time, 30.0);
        assert_eq!(RunConfig::schedule(&q).len(), 361);
        assert_eq!(c.entropies.len(), 4);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = r#"{"model": {"L": 8, "N": 2, "gamma": 3}, "experiment": "compute",
                       "compute": {"state": {"kind": "thermal", "beta": 1.0}},
                       "bins": 2, "blocks": 2}"#;
        let err = RunConfig::parse(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gamma"), "message was: {msg}");
    }

    #[test]
    fn bins_must_divide_lattice() {
        let text = r#"{"model": {"L": 16, "N": 4}, "experiment": "quench",
                       "quench": {"pre_L": 8}, "bins": 3, "blocks": 4}"#;
        let err = RunConfig::parse(text).unwrap_err();
        assert!(err.to_string().contains("bins"));
    }

    #[test]
    fn experiment_block_required() {
        let text = r#"{"model": {"L": 16, "N": 4}, "experiment": "sweep",
                       "bins": 4, "blocks": 4}"#;
        assert!(RunConfig::parse(text).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = RunConfig::parse(MINIMAL_QUENCH).unwrap();
        let echo = serde_json::to_string_pretty(&c).unwrap();
        let back = RunConfig::parse(&echo).unwrap();
        assert_eq!(c, back);
    }
}
