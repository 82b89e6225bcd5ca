use std::path::{Path, PathBuf};

use qpvlab_core::bloch::QubitProjector;
use qpvlab_core::hmc::{
    check_block_equations, check_definition1, check_xy_equations, component_bound, HmcVerdict, IsometricChannel,
};
use qpvlab_core::io::{ChannelFile, StrategyFile};
use qpvlab_core::matkernel::DEFAULT_DIM_CAP;
use qpvlab_core::qpvsim::{
    acceptance_given_z, acceptance_probability, assess_strategy, bb84_attack, bb84_restricted_channel,
    do_nothing_strategy, run_adversarial, run_honest, CheatAssessment, CheatingStrategy, RunReport, Verdict,
};
use qpvlab_core::random::{derive_seed, random_bloch, rng_from_seed};
use qpvlab_core::stratsearch::{
    distinct_basis_census, distinct_measurement_census, find_lambda_pairs_with, lemma1_scan,
    search_cheating_with_progress, LambdaPoint, LambdaSearchConfig, Lemma1Report, ParamLayout, RestartRecord,
    SearchConfig, SearchResult,
};
use rand::Rng;
use serde::Serialize;

use crate::args::{
    BoundArgs, BuiltinStrategy, CheckHiddenArgs, Cli, Command, LambdaScanArgs, Mode, SearchArgs, SimulateArgs,
    VerifyAttackArgs,
};
use crate::config::*;
use crate::report::Report;
use crate::{CliResult, Failure};

const EXIT_HOLDS: u8 = 0;
const EXIT_FAILS: u8 = 2;

fn verdict_code(holds: bool) -> u8 {
    if holds {
        EXIT_HOLDS
    } else {
        EXIT_FAILS
    }
}

/// The dimension cap, overridable through `QPVLAB_DIM_CAP`.
fn dim_cap() -> CliResult<usize> {
    match std::env::var("QPVLAB_DIM_CAP") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(cap) if cap > 0 => Ok(cap),
            _ => Err(Failure(format!("QPVLAB_DIM_CAP must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(DEFAULT_DIM_CAP),
    }
}

pub fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::CheckHidden(a) => check_hidden(a),
        Command::Simulate(a) => simulate(a),
        Command::VerifyAttack(a) => verify_attack(a),
        Command::Search(a) => search(a),
        Command::LambdaScan(a) => lambda_scan(a),
        Command::Bound(a) => bound(a),
    }
}

#[derive(Serialize)]
struct CheckHiddenResult {
    is_hidden: bool,
    criteria_agree: bool,
    definition1: HmcVerdict,
    xy_equations: HmcVerdict,
    block_equations: HmcVerdict,
}

fn check_hidden(a: CheckHiddenArgs) -> CliResult<u8> {
    let cap = dim_cap()?;
    let mut supplied = Vec::new();
    if a.common.seed.is_some() {
        supplied.push("--seed");
    }
    if a.instance.is_some() {
        supplied.push("--instance");
    }
    if a.tol.is_some() {
        supplied.push("--tol");
    }
    exclusive(a.common.config.is_some(), &supplied)?;
    let config = match &a.common.config {
        Some(path) => load_config(path, "check-hidden")?,
        None => {
            let path = a
                .instance
                .as_ref()
                .ok_or_else(|| Failure("--instance or --config is required".into()))?;
            let mut c = default_check_hidden(read_json(path, "instance")?);
            c.tol = a.tol.unwrap_or(c.tol);
            c.seed = a.common.seed.unwrap_or(0);
            c
        }
    };
    require_valid(config.problems())?;
    let inst = config.instance.clone().into_instance(cap)?;
    let definition1 = check_definition1(&inst, config.tol);
    let xy_equations = check_xy_equations(&inst, config.tol);
    let block_equations = check_block_equations(&inst, config.tol);
    let result = CheckHiddenResult {
        is_hidden: definition1.is_hidden,
        criteria_agree: definition1.is_hidden == xy_equations.is_hidden
            && xy_equations.is_hidden == block_equations.is_hidden,
        definition1,
        xy_equations,
        block_equations,
    };
    Report::new("check-hidden", config.seed, &config, &result).emit(a.common.out.as_deref())?;
    Ok(verdict_code(result.is_hidden))
}

#[derive(Serialize)]
struct SimulatedRun {
    index: usize,
    projector: QubitProjector,
    report: RunReport,
}

#[derive(Serialize)]
struct SimulateResult {
    total: usize,
    accepted: usize,
    runs: Vec<SimulatedRun>,
}

fn build_strategy(source: &StrategySource, bases: &[QubitProjector], cap: usize) -> CliResult<CheatingStrategy> {
    Ok(match source {
        StrategySource::Builtin(BuiltinStrategy::Bb84) => bb84_attack(),
        StrategySource::Builtin(BuiltinStrategy::DoNothing) => do_nothing_strategy(bases),
        StrategySource::Inline(file) => file.clone().into_strategy(cap)?,
    })
}

fn simulate(a: SimulateArgs) -> CliResult<u8> {
    let cap = dim_cap()?;
    let mut supplied = a.protocol.supplied();
    for (given, flag) in [
        (a.common.seed.is_some(), "--seed"),
        (!a.basis.is_empty(), "--basis"),
        (a.runs.is_some(), "--runs"),
        (a.mode.is_some(), "--mode"),
        (a.builtin.is_some(), "--builtin"),
        (a.strategy.is_some(), "--strategy"),
    ] {
        if given {
            supplied.push(flag);
        }
    }
    exclusive(a.common.config.is_some(), &supplied)?;
    let config: SimulateConfig = match &a.common.config {
        Some(path) => load_config(path, "simulate")?,
        None => {
            let mode = a.mode.unwrap_or(Mode::Honest);
            let mut protocol = qpvlab_core::qpvsim::ProtocolConfig::default();
            if !a.basis.is_empty() {
                protocol.basis_set = a.basis.clone();
            }
            protocol.d = a.protocol.d.unwrap_or(protocol.d);
            protocol.h = a.protocol.h.unwrap_or(protocol.h);
            protocol.c_light = a.protocol.c_light.unwrap_or(protocol.c_light);
            protocol.z_prior = a.protocol.z_prior.unwrap_or(protocol.z_prior);
            let strategy = match (mode, &a.strategy, a.builtin) {
                (Mode::Adversarial, Some(path), _) => {
                    Some(StrategySource::Inline(read_json::<StrategyFile>(path, "strategy")?))
                }
                (Mode::Adversarial, None, b) => Some(StrategySource::Builtin(b.unwrap_or(BuiltinStrategy::Bb84))),
                (Mode::Honest, None, None) => None,
                (Mode::Honest, _, _) => return Err(Failure("--strategy/--builtin need --mode adversarial".into())),
            };
            SimulateConfig {
                protocol,
                mode,
                runs: a.runs.unwrap_or(100),
                sample_sphere: mode == Mode::Honest && a.basis.is_empty(),
                strategy,
                seed: a.common.seed.unwrap_or(0),
            }
        }
    };
    require_valid(config.problems())?;
    let strategy = match &config.strategy {
        Some(source) => Some(build_strategy(source, &config.protocol.basis_set, cap)?),
        None => None,
    };
    let mut runs = Vec::with_capacity(config.runs);
    for index in 0..config.runs {
        let mut rng = rng_from_seed(derive_seed(config.seed, index as u64));
        let mut protocol = config.protocol.clone();
        let projector = if config.sample_sphere {
            let p = QubitProjector::from_bloch(random_bloch(&mut rng))?;
            protocol.basis_set = vec![p.clone()];
            p
        } else {
            protocol.basis_set[rng.random_range(0..protocol.basis_set.len())].clone()
        };
        let z: u8 = rng.random_range(0..2);
        let run_seed: u64 = rng.random();
        let report = match &strategy {
            None => run_honest(&protocol, &projector, z, run_seed)?,
            Some(s) => run_adversarial(&protocol, s, &projector, z, run_seed)?,
        };
        runs.push(SimulatedRun {
            index,
            projector,
            report,
        });
    }
    let accepted = runs.iter().filter(|r| r.report.verdict == Verdict::Accept).count();
    let result = SimulateResult {
        total: runs.len(),
        accepted,
        runs,
    };
    Report::new("simulate", config.seed, &config, &result).emit(a.common.out.as_deref())?;
    Ok(verdict_code(result.accepted == result.total))
}

#[derive(Serialize)]
struct BasisAcceptance {
    projector: QubitProjector,
    acceptance: f64,
    given_z: [f64; 2],
}

#[derive(Serialize)]
struct VerifyAttackResult {
    is_perfect: bool,
    min_acceptance: f64,
    acceptance: Vec<BasisAcceptance>,
    assessment: CheatAssessment,
    runs: Vec<RunReport>,
}

fn verify_attack(a: VerifyAttackArgs) -> CliResult<u8> {
    let mut supplied = a.protocol.supplied();
    for (given, flag) in [
        (a.common.seed.is_some(), "--seed"),
        (!a.basis.is_empty(), "--basis"),
        (a.tol.is_some(), "--tol"),
    ] {
        if given {
            supplied.push(flag);
        }
    }
    exclusive(a.common.config.is_some(), &supplied)?;
    let config: VerifyAttackConfig = match &a.common.config {
        Some(path) => load_config(path, "verify-attack")?,
        None => {
            let mut protocol = default_protocol(&a.basis);
            protocol.d = a.protocol.d.unwrap_or(protocol.d);
            protocol.h = a.protocol.h.unwrap_or(protocol.h);
            protocol.c_light = a.protocol.c_light.unwrap_or(protocol.c_light);
            protocol.z_prior = a.protocol.z_prior.unwrap_or(protocol.z_prior);
            VerifyAttackConfig {
                protocol,
                tol: a.tol.unwrap_or(1e-9),
                seed: a.common.seed.unwrap_or(0),
            }
        }
    };
    require_valid(config.problems())?;
    let strategy = bb84_attack();
    for p in &config.protocol.basis_set {
        if strategy.u_for(p).is_err() {
            return Err(Failure(format!("the BB84 attack is undefined for basis {p}")));
        }
    }
    let assessment = assess_strategy(&config.protocol, &strategy, config.tol)?;
    let mut acceptance = Vec::new();
    let mut runs = Vec::new();
    for (i, p) in config.protocol.basis_set.iter().enumerate() {
        let dec = strategy
            .decoders_for(p)
            .ok_or_else(|| Failure(format!("the BB84 attack ships no decoders for basis {p}")))?;
        acceptance.push(BasisAcceptance {
            projector: p.clone(),
            acceptance: acceptance_probability(&config.protocol, &strategy, p, None)?,
            given_z: [
                acceptance_given_z(&strategy, p, 0, dec)?,
                acceptance_given_z(&strategy, p, 1, dec)?,
            ],
        });
        for z in 0..2u8 {
            let seed = derive_seed(config.seed, (2 * i + z as usize) as u64);
            runs.push(run_adversarial(&config.protocol, &strategy, p, z, seed)?);
        }
    }
    let min_acceptance = acceptance
        .iter()
        .flat_map(|b| std::iter::once(b.acceptance).chain(b.given_z))
        .fold(f64::INFINITY, f64::min);
    let holds = assessment.is_perfect && min_acceptance >= 1.0 - config.tol;
    let result = VerifyAttackResult {
        is_perfect: assessment.is_perfect,
        min_acceptance,
        acceptance,
        assessment,
        runs,
    };
    Report::new("verify-attack", config.seed, &config, &result).emit(a.common.out.as_deref())?;
    Ok(verdict_code(holds))
}

#[derive(Serialize)]
struct SearchReport<'a> {
    #[serde(flatten)]
    search: &'a SearchResult,
    best_strategy: StrategyFile,
}

#[derive(Serialize)]
struct CsvRow {
    restart: usize,
    seed: u64,
    injected: bool,
    start_value: f64,
    value: f64,
    best_so_far: f64,
    residual: f64,
    iterations: usize,
}

fn write_csv(path: &Path, records: &[RestartRecord]) -> CliResult<()> {
    let mut w =
        csv::Writer::from_path(path).map_err(|e| Failure(format!("cannot write csv {}: {e}", path.display())))?;
    let mut best = f64::NEG_INFINITY;
    for r in records {
        best = best.max(r.value);
        w.serialize(CsvRow {
            restart: r.index,
            seed: r.seed,
            injected: r.injected,
            start_value: r.start_value,
            value: r.value,
            best_so_far: best,
            residual: r.residual,
            iterations: r.iterations,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn search(a: SearchArgs) -> CliResult<u8> {
    let cap = dim_cap()?;
    let mut supplied = Vec::new();
    for (given, flag) in [
        (a.common.seed.is_some(), "--seed"),
        (a.dims.is_some(), "--dims"),
        (!a.basis.is_empty(), "--basis"),
        (a.restarts.is_some(), "--restarts"),
        (a.max_iters.is_some(), "--max-iters"),
        (a.init_scale.is_some(), "--init-scale"),
        (a.inject_bb84, "--inject-bb84"),
    ] {
        if given {
            supplied.push(flag);
        }
    }
    exclusive(a.common.config.is_some(), &supplied)?;
    let config: SearchConfig = match &a.common.config {
        Some(path) => load_config(path, "search")?,
        None => {
            let mut c = default_search();
            if let Some(d) = &a.dims {
                c.dims = parse_dims(d)?;
            }
            if !a.basis.is_empty() {
                c.basis_set = a.basis.clone();
            }
            c.restarts = a.restarts.unwrap_or(c.restarts);
            c.max_iters = a.max_iters.unwrap_or(c.max_iters);
            c.init_scale = a.init_scale.unwrap_or(c.init_scale);
            c.inject_bb84 = a.inject_bb84;
            c.seed = a.common.seed.unwrap_or(0);
            c
        }
    };
    require_valid(config.problems(cap))?;
    let result = search_cheating_with_progress(&config, cap, &mut |r: &RestartRecord| {
        eprintln!("restart {} value {}", r.index, r.value);
    })?;
    let layout = ParamLayout::new(config.dims, config.basis_set.clone())?;
    let best = layout.decode(&result.best_params)?;
    let report = SearchReport {
        search: &result,
        best_strategy: StrategyFile::from_strategy(&best),
    };
    let csv_path: Option<PathBuf> = a
        .csv
        .clone()
        .or_else(|| a.common.out.as_ref().map(|o| o.with_extension("csv")));
    if let Some(path) = &csv_path {
        write_csv(path, &result.per_restart)?;
    }
    Report::new("search", config.seed, &config, &report).emit(a.common.out.as_deref())?;
    Ok(EXIT_HOLDS)
}

#[derive(Serialize)]
struct LambdaScanResult {
    dim_w: usize,
    certified_points: usize,
    points: Vec<LambdaPoint>,
    lemma1: Lemma1Report,
    basis_census: usize,
    measurement_census: usize,
    component_bound: u128,
    census_within_bound: bool,
}

fn lambda_scan(a: LambdaScanArgs) -> CliResult<u8> {
    let cap = dim_cap()?;
    let mut supplied = Vec::new();
    for (given, flag) in [
        (a.common.seed.is_some(), "--seed"),
        (a.channel.is_some(), "--channel"),
        (a.attempts.is_some(), "--attempts"),
        (a.max_iters.is_some(), "--max-iters"),
        (a.cluster_tol.is_some(), "--cluster-tol"),
    ] {
        if given {
            supplied.push(flag);
        }
    }
    exclusive(a.common.config.is_some(), &supplied)?;
    let config: LambdaScanConfig = match &a.common.config {
        Some(path) => load_config(path, "lambda-scan")?,
        None => {
            let mut c = default_lambda_scan();
            c.channel = match a.channel.as_deref() {
                None | Some("bb84") => ChannelSource::Builtin(BuiltinChannel::Bb84),
                Some("copy") => ChannelSource::Builtin(BuiltinChannel::Copy),
                Some(path) => ChannelSource::Inline(read_json::<ChannelFile>(Path::new(path), "channel")?),
            };
            c.attempts = a.attempts.unwrap_or(c.attempts);
            c.max_iters = a.max_iters.unwrap_or(c.max_iters);
            c.cluster_tol = a.cluster_tol.unwrap_or(c.cluster_tol);
            c.seed = a.common.seed.unwrap_or(0);
            c
        }
    };
    require_valid(config.problems())?;
    let channel = match &config.channel {
        ChannelSource::Builtin(BuiltinChannel::Bb84) => bb84_restricted_channel(),
        ChannelSource::Builtin(BuiltinChannel::Copy) => IsometricChannel::qubit_copy(),
        ChannelSource::Inline(file) => file.clone().into_channel(cap)?,
    };
    let search = LambdaSearchConfig {
        attempts: config.attempts,
        seed: config.seed,
        max_iters: config.max_iters,
        fd_step: config.fd_step,
    };
    let points = find_lambda_pairs_with(&channel, &search);
    let lemma1 = lemma1_scan(&points)?;
    let dim_w = channel.shape().w_dim;
    let bound = component_bound(dim_w as u64)?;
    let basis_census = distinct_basis_census(&points, config.cluster_tol);
    let result = LambdaScanResult {
        dim_w,
        certified_points: points.len(),
        basis_census,
        measurement_census: distinct_measurement_census(&points, config.cluster_tol),
        component_bound: bound,
        census_within_bound: (basis_census as u128) <= bound,
        points,
        lemma1,
    };
    Report::new("lambda-scan", config.seed, &config, &result).emit(a.common.out.as_deref())?;
    Ok(verdict_code(
        result.lemma1.violations == 0 && result.census_within_bound,
    ))
}

#[derive(Serialize)]
struct BoundResult {
    value: u128,
}

fn bound(a: BoundArgs) -> CliResult<u8> {
    if a.n < 0 {
        return Err(Failure(format!("n must be non-negative, got {}", a.n)));
    }
    let config = BoundConfig { n: a.n as u64 };
    let value = component_bound(config.n)?;
    println!("{value}");
    if let Some(out) = &a.out {
        Report::new("bound", 0, &config, &BoundResult { value }).emit(Some(out))?;
    }
    Ok(EXIT_HOLDS)
}
