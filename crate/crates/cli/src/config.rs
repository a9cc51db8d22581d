//! Run configuration: defaults, flat TOML file, command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bratu_vqa::classical::{ContinuationOptions, NewtonOptions, DEFAULT_M};
use bratu_vqa::continuation::{default_lower_schedule, default_upper_schedule, SweepConfig};
use bratu_vqa::optim::{AdamParams, EarlyStop, TrainOptions};
use bratu_vqa::pde::TrialConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub grid_points: usize,
    pub stencil_h: f64,
    pub scale_s: f64,
    pub seed: u64,
    /// Multi-start count for the first upper-branch point.
    pub n_starts: usize,
    pub lower_lambdas: Vec<f64>,
    pub upper_lambdas: Vec<f64>,
    pub compare_lambdas: Vec<f64>,
    /// Where `classical` writes fixed-lambda profiles.
    pub profile_lambdas: Vec<f64>,
    pub classical_m: usize,
    pub delta_s: f64,
    /// Previous lower-branch solution as predictor instead of zero.
    pub lower_predictor: bool,
    pub early_stop: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_qubits: 3,
            n_layers: 4,
            learning_rate: 0.005,
            iterations: 500,
            grid_points: 100,
            stencil_h: 1e-3,
            scale_s: 4.0,
            seed: 0,
            n_starts: 8,
            lower_lambdas: default_lower_schedule(),
            upper_lambdas: default_upper_schedule(),
            compare_lambdas: vec![0.1, 1.0, 3.0],
            profile_lambdas: vec![0.1, 1.0, 3.0],
            classical_m: DEFAULT_M,
            delta_s: 0.05,
            lower_predictor: false,
            early_stop: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Values given on the command line; `None` leaves the file or default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub iterations: Option<usize>,
    pub n_starts: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Defaults, then `path` if given, then `overrides`.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Self::default(),
        };
        if let Some(v) = overrides.seed {
            cfg.seed = v;
        }
        if let Some(v) = &overrides.out_dir {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = overrides.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = overrides.n_starts {
            cfg.n_starts = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.n_qubits == 0 || self.n_qubits > bratu_vqa::qsim::MAX_QUBITS {
            return bad(format!("n_qubits must lie in 1..={}", bratu_vqa::qsim::MAX_QUBITS));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive".into());
        }
        if self.n_starts == 0 {
            return bad("n_starts must be at least 1".into());
        }
        if self.classical_m < 3 {
            return bad("classical_m must be at least 3".into());
        }
        if !(self.delta_s.is_finite() && self.delta_s > 0.0) {
            return bad("delta_s must be positive".into());
        }
        let lists = [&self.lower_lambdas, &self.upper_lambdas, &self.compare_lambdas, &self.profile_lambdas];
        if lists.iter().any(|l| l.iter().any(|v| !v.is_finite() || *v < 0.0)) {
            return bad("lambda values must be finite and non-negative".into());
        }
        self.trial_template(0.0).map(|_| ())
    }

    pub fn trial_template(&self, lambda: f64) -> Result<TrialConfig, CliError> {
        TrialConfig::new(lambda, self.scale_s, self.stencil_h, self.grid_points).map_err(CliError::from_config)
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            iterations: self.iterations,
            adam: AdamParams { learning_rate: self.learning_rate, ..AdamParams::default() },
            early_stop: self.early_stop.then(EarlyStop::default),
            ..TrainOptions::default()
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, CliError> {
        let mut sweep =
            SweepConfig::new(self.trial_template(0.0)?, self.n_layers, self.n_qubits, self.train_options(), self.seed);
        sweep.lower_predictor = self.lower_predictor;
        Ok(sweep)
    }

    pub fn continuation_options(&self, stop_below: f64) -> ContinuationOptions {
        ContinuationOptions {
            delta_s: self.delta_s,
            newton: NewtonOptions::default(),
            stop_below_lambda: Some(stop_below),
            ..ContinuationOptions::default()
        }
    }
}
