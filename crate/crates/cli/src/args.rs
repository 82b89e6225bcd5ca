use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qpvlab_core::bloch::QubitProjector;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "qpvlab",
    version,
    about = "Experiments on single-qubit position verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether a channel is a hidden measurement channel for P.
    CheckHidden(CheckHiddenArgs),
    /// Run the protocol with honest provers or colluding adversaries.
    Simulate(SimulateArgs),
    /// Verify the shared-EPR-pair attack on the BB84 bases.
    VerifyAttack(VerifyAttackArgs),
    /// Search for cheating strategies by local optimization with restarts.
    Search(SearchArgs),
    /// Look for points of Λ and check the distance bound between them.
    LambdaScan(LambdaScanArgs),
    /// Print the component bound 4·7^(2n+2).
    Bound(BoundArgs),
}

/// Flags every report-producing subcommand shares.
#[derive(Args, Debug)]
pub struct Common {
    /// Master seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here instead of standard output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Resolved config to run from: a previous report or a bare config object.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ProtocolFlags {
    /// Verifier distance from the centre.
    #[arg(long)]
    pub d: Option<f64>,
    /// Adversary distance from the centre.
    #[arg(long)]
    pub h: Option<f64>,
    /// Signal speed.
    #[arg(long = "c-light")]
    pub c_light: Option<f64>,
    /// Probability of z = 0.
    #[arg(long)]
    pub z_prior: Option<f64>,
}

impl ProtocolFlags {
    pub fn supplied(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.d.is_some() {
            out.push("--d");
        }
        if self.h.is_some() {
            out.push("--h");
        }
        if self.c_light.is_some() {
            out.push("--c-light");
        }
        if self.z_prior.is_some() {
            out.push("--z-prior");
        }
        out
    }
}

fn parse_projector(s: &str) -> Result<QubitProjector, String> {
    s.parse().map_err(|e: qpvlab_core::QpvError| e.to_string())
}

#[derive(Args, Debug)]
pub struct CheckHiddenArgs {
    #[command(flatten)]
    pub common: Common,
    /// Instance file (U, w_dim, v1_dim, v2_dim, w, P).
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Residual tolerance [default: 1e-9].
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Honest,
    Adversarial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinStrategy {
    Bb84,
    DoNothing,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub protocol: ProtocolFlags,
    /// Basis in T (repeatable). Honest runs without it draw P uniformly from the sphere.
    #[arg(long = "basis", value_parser = parse_projector)]
    pub basis: Vec<QubitProjector>,
    /// Number of runs [default: 100].
    #[arg(long)]
    pub runs: Option<usize>,
    /// Who answers the verifiers [default: honest].
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Built-in adversarial strategy [default: bb84].
    #[arg(long, value_enum, conflicts_with = "strategy")]
    pub builtin: Option<BuiltinStrategy>,
    /// Strategy file for adversarial runs.
    #[arg(long)]
    pub strategy: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyAttackArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub protocol: ProtocolFlags,
    /// Extra basis added to {Z, X} (repeatable).
    #[arg(long = "basis", value_parser = parse_projector)]
    pub basis: Vec<QubitProjector>,
    /// Tolerance on distinguishability and acceptance [default: 1e-9].
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[command(flatten)]
    pub common: Common,
    /// Register dimensions as A,B,C,D [default: 2,2,2,2].
    #[arg(long)]
    pub dims: Option<String>,
    /// Basis in T (repeatable) [default: Z and X].
    #[arg(long = "basis", value_parser = parse_projector)]
    pub basis: Vec<QubitProjector>,
    /// Number of restarts [default: 20].
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Optimizer iterations per restart [default: 50].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Standard deviation of random starting parameters [default: 1].
    #[arg(long)]
    pub init_scale: Option<f64>,
    /// Use the encoded BB84 attack as restart 0.
    #[arg(long)]
    pub inject_bb84: bool,
    /// Per-restart CSV [default: the report path with extension .csv, if --out is set].
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LambdaScanArgs {
    #[command(flatten)]
    pub common: Common,
    /// `bb84`, `copy`, or a channel/instance file [default: bb84].
    #[arg(long)]
    pub channel: Option<String>,
    /// Number of random starts [default: 40].
    #[arg(long)]
    pub attempts: Option<usize>,
    /// Optimizer iterations per start [default: 200].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Trace-distance radius for merging bases in the census [default: 1e-4].
    #[arg(long)]
    pub cluster_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    /// Input dimension exponent n ≥ 0.
    #[arg(allow_negative_numbers = true)]
    pub n: i64,
    /// Also write a JSON report here.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}
