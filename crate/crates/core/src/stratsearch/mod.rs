//! Numerical search for cheating strategies and for points of Λ.

mod lambda;
mod lm;
mod params;

pub use lambda::{
    distinct_basis_census, distinct_measurement_census, find_lambda_pairs, find_lambda_pairs_with, lemma1_scan,
    LambdaPoint, LambdaSearchConfig, Lemma1Entry, Lemma1Report, CENSUS_CLUSTER_TOL, LEMMA1_SLACK,
};
pub use lm::{fd_jacobian, levenberg_marquardt, LmOptions, LmOutcome};
pub use params::{skew_from_reals, skew_to_reals, ParamLayout, StrategyParams};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bloch::{trace_distance, QubitProjector};
use crate::error::{QpvError, Result};
use crate::matkernel::{ComplexMatrix, C64, DEFAULT_DIM_CAP};
use crate::qpvsim::{
    assemble_final_state, bb84_attack, bob_kernel, encoded_qubit, optimize_decoders, FinalStates, StrategyDims,
    BASIS_MATCH_TOL, DEFAULT_SEESAW_ROUNDS,
};
use crate::random::{derive_seed, gaussian, rng_from_seed};
use params::Pieces;

/// A worst-case acceptance at or above this certifies a perfect strategy.
pub const CERTIFIED_PERFECT: f64 = 1.0 - 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub basis_set: Vec<QubitProjector>,
    pub dims: StrategyDims,
    #[serde(default = "defaults::restarts")]
    pub restarts: usize,
    #[serde(default = "defaults::max_iters")]
    pub max_iters: usize,
    /// Forward-difference step for the Jacobian.
    #[serde(default = "defaults::fd_step")]
    pub fd_step: f64,
    /// Local ascent stops once the overlap residual `‖r‖²` drops below this.
    #[serde(default = "defaults::cost_tol")]
    pub cost_tol: f64,
    /// Local ascent stops once a step improves `‖r‖²` by less than this fraction.
    #[serde(default = "defaults::rel_tol")]
    pub rel_tol: f64,
    /// Standard deviation of random starting parameters.
    #[serde(default = "defaults::init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub seed: u64,
    /// Use the BB84 attack as restart 0.
    #[serde(default)]
    pub inject_bb84: bool,
}

mod defaults {
    pub fn restarts() -> usize {
        20
    }
    pub fn max_iters() -> usize {
        50
    }
    pub fn fd_step() -> f64 {
        1e-6
    }
    pub fn cost_tol() -> f64 {
        1e-24
    }
    pub fn rel_tol() -> f64 {
        1e-10
    }
    pub fn init_scale() -> f64 {
        1.0
    }
}

impl SearchConfig {
    pub fn new(basis_set: Vec<QubitProjector>, dims: StrategyDims) -> Self {
        Self {
            basis_set,
            dims,
            restarts: defaults::restarts(),
            max_iters: defaults::max_iters(),
            fd_step: defaults::fd_step(),
            cost_tol: defaults::cost_tol(),
            rel_tol: defaults::rel_tol(),
            init_scale: defaults::init_scale(),
            seed: 0,
            inject_bb84: false,
        }
    }

    /// Every violated constraint, for a cap on register dimensions.
    pub fn problems(&self, cap: usize) -> Vec<String> {
        let mut out = Vec::new();
        if self.restarts == 0 {
            out.push("restarts must be at least 1".into());
        }
        if self.basis_set.is_empty() {
            out.push("basis_set must be nonempty".into());
        }
        for (i, p) in self.basis_set.iter().enumerate() {
            if self.basis_set[..i]
                .iter()
                .any(|q| trace_distance(p, q) <= BASIS_MATCH_TOL)
            {
                out.push(format!("basis_set repeats {p}"));
            }
        }
        if let Err(e) = self.dims.validate(cap) {
            out.push(e.to_string());
        }
        if self.dims.d < 2 {
            out.push("dims.D must be at least 2".into());
        }
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            out.push(format!("fd_step must be positive, got {}", self.fd_step));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            out.push(format!("init_scale must be non-negative, got {}", self.init_scale));
        }
        if !(self.cost_tol >= 0.0 && self.rel_tol >= 0.0) {
            out.push("cost_tol and rel_tol must be non-negative".into());
        }
        if self.inject_bb84 {
            if self.dims != StrategyDims::new(4, 4, 4, 4) {
                out.push("inject_bb84 requires dims A=B=C=D=4".into());
            }
            let zx = [QubitProjector::z_eigenstate(), QubitProjector::x_eigenstate()];
            if self
                .basis_set
                .iter()
                .any(|p| !zx.iter().any(|q| q.same_as(p, BASIS_MATCH_TOL)))
            {
                out.push("inject_bb84 requires every basis to be the Z or X eigenstate".into());
            }
        }
        out
    }

    pub fn validate(&self, cap: usize) -> Result<()> {
        let p = self.problems(cap);
        if p.is_empty() {
            Ok(())
        } else {
            Err(QpvError::Config(p.join("; ")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub index: usize,
    pub seed: u64,
    pub injected: bool,
    /// Worst-case acceptance at the starting point.
    pub start_value: f64,
    /// Best worst-case acceptance seen in this restart.
    pub value: f64,
    /// Final overlap residual `‖r‖²`.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_params: StrategyParams,
    pub best_restart: usize,
    pub best_worst_case: f64,
    pub per_restart: Vec<RestartRecord>,
    pub certified_perfect: bool,
}

/// The overlap residual: for each basis, the entries of `M_0* M_1` and
/// `M_0 M_1*` where `M_z` is the final state for bit `z`. It vanishes exactly
/// when both sides can tell `z` apart perfectly.
struct Objective<'a> {
    layout: &'a ParamLayout,
    qubits: Vec<[[C64; 2]; 2]>,
}

impl<'a> Objective<'a> {
    fn new(layout: &'a ParamLayout) -> Self {
        let qubits = layout
            .bases()
            .iter()
            .map(|p| [encoded_qubit(p, 0), encoded_qubit(p, 1)])
            .collect();
        Self { layout, qubits }
    }

    fn states(&self, psi: &[C64], u: &ComplexMatrix, v: &ComplexMatrix, k: usize) -> [ComplexMatrix; 2] {
        let dims = self.layout.dims();
        self.qubits[k].map(|q| assemble_final_state(&dims, psi, u, &bob_kernel(&dims, v, q)))
    }

    fn block(&self, psi: &[C64], u: &ComplexMatrix, v: &ComplexMatrix, k: usize) -> Vec<f64> {
        let [m0, m1] = self.states(psi, u, v, k);
        let a = &m0.adjoint() * &m1;
        let b = &m0 * &m1.adjoint();
        a.entries_row_major()
            .into_iter()
            .chain(b.entries_row_major())
            .flat_map(|z| [z.re, z.im])
            .collect()
    }

    fn residual_of(&self, pieces: &Pieces) -> Vec<f64> {
        (0..self.qubits.len())
            .flat_map(|k| self.block(&pieces.psi, &pieces.u[k], &pieces.v, k))
            .collect()
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        match self.layout.decode_pieces(x) {
            Ok(p) => self.residual_of(&p),
            Err(_) => vec![f64::INFINITY],
        }
    }

    /// Forward differences, recomputing only the blocks a parameter touches.
    fn jacobian(&self, x: &[f64], r: &[f64], step: f64) -> DMatrix<f64> {
        let base = self.layout.decode_pieces(x).expect("finite parameters");
        let block_len = r.len() / self.qubits.len();
        let mut j = DMatrix::zeros(r.len(), x.len());
        let mut xp = x.to_vec();
        let mut fill = |col: usize, k: usize, vals: Vec<f64>| {
            for (i, v) in vals.into_iter().enumerate() {
                let row = k * block_len + i;
                j[(row, col)] = (v - r[row]) / step;
            }
        };
        for col in 0..x.len() {
            let orig = xp[col];
            xp[col] = orig + step;
            if col < self.layout.psi_len() {
                let psi = self.layout.decode_psi(&xp);
                for k in 0..self.qubits.len() {
                    fill(col, k, self.block(&psi, &base.u[k], &base.v, k));
                }
            } else if self.layout.v_range().contains(&col) {
                let v = self.layout.decode_v(&xp).expect("finite parameters");
                for k in 0..self.qubits.len() {
                    fill(col, k, self.block(&base.psi, &base.u[k], &v, k));
                }
            } else {
                let k = (col - self.layout.psi_len()) / self.layout.u_len();
                let u = self.layout.decode_u(&xp, k).expect("finite parameters");
                fill(col, k, self.block(&base.psi, &u, &base.v, k));
            }
            xp[col] = orig;
        }
        j
    }

    /// Minimum over bases of the seesaw-optimized acceptance probability.
    fn value(&self, x: &[f64]) -> Result<f64> {
        let pieces = self.layout.decode_pieces(x)?;
        let mut worst = f64::INFINITY;
        for k in 0..self.qubits.len() {
            let [m0, m1] = self.states(&pieces.psi, &pieces.u[k], &pieces.v, k);
            let states = FinalStates::new(m0, m1)?;
            let p = optimize_decoders(&states, [0.5, 0.5], None, DEFAULT_SEESAW_ROUNDS)?.probability;
            worst = worst.min(p);
        }
        Ok(worst.clamp(0.0, 1.0))
    }
}

fn run_restart(config: &SearchConfig, layout: &ParamLayout, index: usize) -> Result<(RestartRecord, Vec<f64>)> {
    let objective = Objective::new(layout);
    let seed = derive_seed(config.seed, index as u64);
    let injected = config.inject_bb84 && index == 0;
    let x0 = if injected {
        layout.encode(&bb84_attack())?.values
    } else {
        let mut rng = rng_from_seed(seed);
        (0..layout.len())
            .map(|_| config.init_scale * gaussian(&mut rng))
            .collect()
    };
    let start_value = objective.value(&x0)?;
    let mut record = RestartRecord {
        index,
        seed,
        injected,
        start_value,
        value: start_value,
        residual: objective.residual(&x0).iter().map(|v| v * v).sum(),
        iterations: 0,
    };
    if record.residual <= config.cost_tol {
        return Ok((record, x0));
    }
    let residual = |x: &[f64]| objective.residual(x);
    let jacobian = |x: &[f64], r: &[f64]| objective.jacobian(x, r, config.fd_step);
    let opts = LmOptions {
        max_iters: config.max_iters,
        cost_tol: config.cost_tol,
        rel_tol: config.rel_tol,
    };
    let out = levenberg_marquardt(x0.clone(), &residual, &jacobian, &opts);
    record.iterations = out.iterations;
    record.residual = out.cost;
    let end_value = objective.value(&out.x)?;
    if end_value > start_value {
        record.value = end_value;
        Ok((record, out.x))
    } else {
        Ok((record, x0))
    }
}

pub fn search_cheating(config: &SearchConfig) -> Result<SearchResult> {
    search_cheating_with_progress(config, DEFAULT_DIM_CAP, &mut |_| {})
}

/// Runs every restart, reporting each record in restart order.
pub fn search_cheating_with_progress(
    config: &SearchConfig,
    cap: usize,
    progress: &mut dyn FnMut(&RestartRecord),
) -> Result<SearchResult> {
    config.validate(cap)?;
    let layout = ParamLayout::new(config.dims, config.basis_set.clone())?;
    let mut runs = Vec::with_capacity(config.restarts);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let results: Vec<_> = (0..config.restarts)
            .into_par_iter()
            .map(|i| run_restart(config, &layout, i))
            .collect();
        for r in results {
            let r = r?;
            progress(&r.0);
            runs.push(r);
        }
    }
    #[cfg(not(feature = "parallel"))]
    for i in 0..config.restarts {
        let r = run_restart(config, &layout, i)?;
        progress(&r.0);
        runs.push(r);
    }
    let best = runs.iter().enumerate().fold(
        0,
        |best, (i, (rec, _))| if rec.value > runs[best].0.value { i } else { best },
    );
    let best_worst_case = runs[best].0.value;
    Ok(SearchResult {
        best_params: StrategyParams {
            values: runs[best].1.clone(),
        },
        best_restart: best,
        best_worst_case,
        certified_perfect: best_worst_case >= CERTIFIED_PERFECT,
        per_restart: runs.into_iter().map(|(r, _)| r).collect(),
    })
}
