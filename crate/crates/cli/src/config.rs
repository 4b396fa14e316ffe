//! Experiment configuration files.

use std::path::{Path, PathBuf};

use cvforge::diagnostics::{DEFAULT_EXTENT, DEFAULT_POINTS, GKP_EXTENT};
use cvforge::objective::MC_SAMPLES;
use cvforge::optimizer::{AdamConfig, NetShape};
use cvforge::targets::TargetSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Prepare,
    Synthesize,
    Sweep,
    Analyze,
}

/// One experiment: target, network, optimiser and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub target: TargetSpec,
    /// Input-output relations for gate targets. Defaults to the target's
    /// block size where it has one, and to 1 for states.
    #[serde(default)]
    pub relations: Option<usize>,
    pub network: NetShape,
    pub optimizer: AdamConfig,
    #[serde(default)]
    pub penalty_weight: f64,
    #[serde(default = "one")]
    pub restarts: usize,
    /// Worker threads; defaults to all cores. `CVFORGE_THREADS` caps it.
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub depths: Vec<usize>,
    #[serde(default = "one")]
    pub runs_per_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Half-width of the phase-space and wavefunction grids.
    #[serde(default)]
    pub extent: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Output rows of gate heatmaps; defaults to the relation count, or the
    /// full cutoff for gates that leave the input block.
    #[serde(default)]
    pub heatmap_rows: Option<usize>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            extent: None,
            points: default_points(),
            heatmap_rows: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            samples: MC_SAMPLES,
            seed: 0,
        }
    }
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_points() -> usize {
    DEFAULT_POINTS
}
fn default_samples() -> usize {
    MC_SAMPLES
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("cvforge-out")
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(steps) = o.steps {
            self.optimizer.steps = steps;
        }
        if let Some(seed) = o.seed {
            self.optimizer.seed = seed;
        }
        if let Some(restarts) = o.restarts {
            self.restarts = restarts;
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = dir.clone();
        }
    }

    /// Relation count after defaults.
    pub fn resolved_relations(&self) -> Result<usize, CliError> {
        if let Some(d) = self.relations {
            return Ok(d);
        }
        match self.target {
            TargetSpec::QftGate { d } | TargetSpec::HaarGate { d, .. } => Ok(d),
            ref t if t.is_gate() => Err(CliError::Config(format!(
                "field `relations`: required for target `{}`",
                t.name()
            ))),
            _ => Ok(1),
        }
    }

    /// Checks cross-field constraints that the schema cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("field `{field}`: {msg}")));
        if self.network.modes != self.target.modes() {
            return bad(
                "network.modes",
                format!(
                    "target `{}` acts on {} mode(s), network has {}",
                    self.target.name(),
                    self.target.modes(),
                    self.network.modes
                ),
            );
        }
        if self.network.layers == 0 {
            return bad("network.layers", "must be at least 1".into());
        }
        if self.restarts == 0 {
            return bad("restarts", "must be at least 1".into());
        }
        if self.parallelism == Some(0) {
            return bad("parallelism", "must be at least 1".into());
        }
        if self.diagnostics.points < 2 {
            return bad("diagnostics.points", "need at least 2 grid points".into());
        }
        if let Some(e) = self.diagnostics.extent {
            if !(e > 0.0 && e.is_finite()) {
                return bad("diagnostics.extent", format!("{e} must be positive"));
            }
        }
        if self.monte_carlo.samples == 0 {
            return bad("monte_carlo.samples", "must be at least 1".into());
        }
        match (&self.task, &self.sweep) {
            (Task::Sweep, None) => return bad("sweep", "required for task `sweep`".into()),
            (Task::Sweep, Some(s)) if s.depths.is_empty() || s.depths.contains(&0) => {
                return bad("sweep.depths", "need a non-empty list of positive depths".into())
            }
            (Task::Sweep, Some(s)) if s.runs_per_depth == 0 => {
                return bad("sweep.runs_per_depth", "must be at least 1".into())
            }
            _ => {}
        }
        match self.task {
            Task::Prepare if self.target.is_gate() => {
                bad("task", format!("`prepare` needs a state target, got `{}`", self.target.name()))
            }
            Task::Synthesize if !self.target.is_gate() => {
                bad("task", format!("`synthesize` needs a gate target, got `{}`", self.target.name()))
            }
            _ => Ok(()),
        }
    }

    /// Worker count: the configured value, else all cores, capped by
    /// `CVFORGE_THREADS`.
    pub fn threads(&self) -> Result<usize, CliError> {
        let available = std::thread::available_parallelism().map_or(1, |n| n.get());
        let mut n = self.parallelism.unwrap_or(available);
        if let Ok(v) = std::env::var("CVFORGE_THREADS") {
            let cap: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| CliError::Config(format!("CVFORGE_THREADS={v:?} is not a positive integer")))?;
            n = n.min(cap);
        }
        Ok(n.max(1))
    }

    pub fn grid_extent(&self) -> f64 {
        self.diagnostics.extent.unwrap_or(match self.target {
            TargetSpec::HexGkp { .. } => GKP_EXTENT,
            _ => DEFAULT_EXTENT,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "task": "prepare",
        "target": {"kind": "single_photon"},
        "network": {"layers": 8, "modes": 1, "cutoff": 6},
        "optimizer": {"steps": 10}
    }"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.restarts, 1);
        assert_eq!(c.optimizer.learning_rate, 0.025);
        assert_eq!(c.resolved_relations().unwrap(), 1);
        assert_eq!(c.monte_carlo.samples, MC_SAMPLES);
        assert_eq!(c.grid_extent(), 6.0);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_field_names_location() {
        let text = MINIMAL.replace("\"optimizer\": {\"steps\": 10}", "\"optimiser\": {}");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("optimiser") && err.contains("line"), "{err}");
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut c = ExperimentConfig::parse(MINIMAL).unwrap();
        c.apply(&Overrides {
            steps: Some(3),
            seed: Some(9),
            restarts: Some(4),
            output_dir: Some("x".into()),
        });
        assert_eq!((c.optimizer.steps, c.optimizer.seed, c.restarts), (3, 9, 4));
        assert_eq!(c.output_dir, PathBuf::from("x"));
    }

    #[test]
    fn cross_field_checks() {
        let mut c = ExperimentConfig::parse(MINIMAL).unwrap();
        c.task = Task::Synthesize;
        assert!(c.validate().is_err());
        c.task = Task::Sweep;
        assert!(c.validate().is_err());
        c.sweep = Some(SweepConfig {
            depths: vec![1, 2],
            runs_per_depth: 2,
        });
        c.validate().unwrap();
        c.network.modes = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn gate_relations_default_from_target() {
        let mut c = ExperimentConfig::parse(MINIMAL).unwrap();
        c.target = TargetSpec::QftGate { d: 8 };
        assert_eq!(c.resolved_relations().unwrap(), 8);
        c.target = TargetSpec::CubicPhaseGate { gamma: 0.01 };
        assert!(c.resolved_relations().is_err());
    }
}
