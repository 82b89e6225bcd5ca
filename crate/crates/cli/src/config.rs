//! Fully resolved per-subcommand configs. Each one is embedded in its report
//! and can be fed back through `--config`.

use std::path::Path;

use qpvlab_core::bloch::QubitProjector;
use qpvlab_core::hmc::DEFAULT_TOL;
use qpvlab_core::io::{ChannelFile, InstanceFile, StrategyFile};
use qpvlab_core::qpvsim::{ProtocolConfig, StrategyDims};
use qpvlab_core::stratsearch::{SearchConfig, CENSUS_CLUSTER_TOL};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::args::{BuiltinStrategy, Mode};
use crate::{CliResult, Failure};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckHiddenConfig {
    pub instance: InstanceFile,
    pub tol: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategySource {
    Builtin(BuiltinStrategy),
    Inline(StrategyFile),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub protocol: ProtocolConfig,
    pub mode: Mode,
    pub runs: usize,
    /// Draw each run's basis uniformly from the sphere instead of from T.
    pub sample_sphere: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategySource>,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyAttackConfig {
    pub protocol: ProtocolConfig,
    pub tol: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinChannel {
    /// The BB84 attack channel restricted to the span of its two planted inputs.
    Bb84,
    Copy,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSource {
    Builtin(BuiltinChannel),
    Inline(ChannelFile),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaScanConfig {
    pub channel: ChannelSource,
    pub attempts: usize,
    pub max_iters: usize,
    pub fd_step: f64,
    pub cluster_tol: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub n: u64,
}

pub fn default_check_hidden(instance: InstanceFile) -> CheckHiddenConfig {
    CheckHiddenConfig {
        instance,
        tol: DEFAULT_TOL,
        seed: 0,
    }
}

pub fn default_protocol(extra: &[QubitProjector]) -> ProtocolConfig {
    let mut p = ProtocolConfig::default();
    p.basis_set.extend(extra.iter().cloned());
    p
}

pub fn default_search() -> SearchConfig {
    SearchConfig::new(
        vec![QubitProjector::z_eigenstate(), QubitProjector::x_eigenstate()],
        StrategyDims::new(2, 2, 2, 2),
    )
}

pub fn default_lambda_scan() -> LambdaScanConfig {
    LambdaScanConfig {
        channel: ChannelSource::Builtin(BuiltinChannel::Bb84),
        attempts: 40,
        max_iters: 200,
        fd_step: 1e-6,
        cluster_tol: CENSUS_CLUSTER_TOL,
        seed: 0,
    }
}

pub fn parse_dims(s: &str) -> CliResult<StrategyDims> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure(format!("--dims expects A,B,C,D as four positive integers, got `{s}`")))?;
    match parts[..] {
        [a, b, c, d] => Ok(StrategyDims::new(a, b, c, d)),
        _ => Err(Failure(format!(
            "--dims expects four comma-separated integers, got `{s}`"
        ))),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure(format!("{what} {}: {e}", path.display())))
}

/// Loads a config from a report (taking its `config` after checking
/// `command`) or from a bare config object.
pub fn load_config<T: DeserializeOwned>(path: &Path, command: &str) -> CliResult<T> {
    let value: serde_json::Value = read_json(path, "config")?;
    let inner = match value.as_object() {
        Some(obj) if obj.contains_key("config") && obj.contains_key("command") => {
            let found = obj["command"].as_str().unwrap_or_default();
            if found != command {
                return Err(Failure(format!(
                    "config {} is a `{found}` report, not `{command}`",
                    path.display()
                )));
            }
            obj["config"].clone()
        }
        _ => value,
    };
    serde_json::from_value(inner).map_err(|e| Failure(format!("config {}: {e}", path.display())))
}

/// Rejects parameter flags alongside `--config`, which must be reproduced as is.
pub fn exclusive(config_given: bool, supplied: &[&str]) -> CliResult<()> {
    if config_given && !supplied.is_empty() {
        return Err(Failure(format!(
            "--config cannot be combined with parameter flags: {}",
            supplied.join(", ")
        )));
    }
    Ok(())
}

/// Fails with every problem at once.
pub fn require_valid(problems: Vec<String>) -> CliResult<()> {
    if problems.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = problems.iter().map(|p| format!("  - {p}")).collect();
    Err(Failure(format!(
        "invalid config ({} problems):\n{}",
        problems.len(),
        list.join("\n")
    )))
}

impl SimulateConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.sample_sphere {
            // T is replaced by {P} on every run; only the geometry matters.
            let mut probe = self.protocol.clone();
            probe.basis_set = vec![QubitProjector::z_eigenstate()];
            out.extend(probe.problems());
        } else {
            out.extend(self.protocol.problems());
        }
        if self.runs == 0 {
            out.push("runs must be at least 1".into());
        }
        match self.mode {
            Mode::Honest if self.strategy.is_some() => out.push("honest mode takes no strategy".into()),
            Mode::Adversarial if self.strategy.is_none() => out.push("adversarial mode needs a strategy".into()),
            Mode::Adversarial if self.sample_sphere => {
                out.push("adversarial runs draw bases from T; sample_sphere must be false".into())
            }
            _ => {}
        }
        out
    }
}

impl VerifyAttackConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = self.protocol.problems();
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            out.push(format!("tol must be a non-negative number, got {}", self.tol));
        }
        out
    }
}

impl CheckHiddenConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            out.push(format!("tol must be a non-negative number, got {}", self.tol));
        }
        out
    }
}

impl LambdaScanConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.attempts == 0 {
            out.push("attempts must be at least 1".into());
        }
        if self.max_iters == 0 {
            out.push("max_iters must be at least 1".into());
        }
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            out.push(format!("fd_step must be positive, got {}", self.fd_step));
        }
        if !(self.cluster_tol.is_finite() && self.cluster_tol > 0.0) {
            out.push(format!("cluster_tol must be positive, got {}", self.cluster_tol));
        }
        out
    }
}
