//! Event timelines for honest and adversarial runs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::seesaw::{optimize_decoders, DEFAULT_SEESAW_ROUNDS};
use super::strategy::CheatingStrategy;
use super::{encoded_qubit, final_states, ProtocolConfig};
use crate::bloch::QubitProjector;
use crate::error::{QpvError, Result};
use crate::random::rng_from_seed;

/// Relative slack allowed on the light-speed constraint.
const CAUSALITY_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    /// At `x = -d`; sends the basis.
    VerifierLeft,
    /// At `x = +d`; sends the qubit.
    VerifierRight,
    Prover,
    Alice,
    Bob,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Send,
    Receive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageTag {
    pub id: u32,
    pub direction: Direction,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub position: f64,
    pub actor: Actor,
    pub action: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<MessageTag>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Accept,
    Abort,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub events: Vec<Event>,
    pub z: u8,
    pub z1: u8,
    pub z2: u8,
    pub verdict: Verdict,
}

impl RunReport {
    /// Sorted distinct event times.
    pub fn event_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self.events.iter().map(|e| e.time).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    /// Checks every message travels no faster than light.
    pub fn check_causality(&self, c_light: f64) -> std::result::Result<(), String> {
        for send in self
            .events
            .iter()
            .filter(|e| matches!(&e.message, Some(m) if m.direction == Direction::Send))
        {
            let id = send.message.as_ref().map(|m| m.id);
            let receives: Vec<&Event> = self
                .events
                .iter()
                .filter(|e| matches!(&e.message, Some(m) if m.direction == Direction::Receive && Some(m.id) == id))
                .collect();
            if receives.is_empty() {
                return Err(format!("message {id:?} is never received"));
            }
            for recv in receives {
                let dt = recv.time - send.time;
                let dx = (recv.position - send.position).abs();
                if dt < 0.0 || dx > c_light * dt * (1.0 + CAUSALITY_SLACK) {
                    return Err(format!("message {id:?} covers {dx} in {dt}"));
                }
            }
        }
        Ok(())
    }
}

struct Log {
    events: Vec<Event>,
}

impl Log {
    fn act(&mut self, time: f64, position: f64, actor: Actor, action: &str) {
        self.events.push(Event {
            time,
            position,
            actor,
            action: action.into(),
            message: None,
        });
    }

    fn msg(&mut self, time: f64, position: f64, actor: Actor, id: u32, direction: Direction, content: String) {
        let action = match direction {
            Direction::Send => "send",
            Direction::Receive => "receive",
        };
        self.events.push(Event {
            time,
            position,
            actor,
            action: action.into(),
            message: Some(MessageTag { id, direction, content }),
        });
    }
}

fn check_inputs(config: &ProtocolConfig, p: &QubitProjector, z: u8) -> Result<()> {
    config.validate()?;
    if !config.contains(p) {
        return Err(QpvError::field("P", format!("{p} is not in the basis set")));
    }
    if z > 1 {
        return Err(QpvError::OutOfRange {
            what: "z",
            value: z as f64,
        });
    }
    Ok(())
}

fn verdict(z: u8, z1: u8, z2: u8) -> Verdict {
    if z == z1 && z == z2 {
        Verdict::Accept
    } else {
        Verdict::Abort
    }
}

/// The honest prover at `x = 0` measures `{P, I - P}` and broadcasts.
pub fn run_honest(config: &ProtocolConfig, p: &QubitProjector, z: u8, seed: u64) -> Result<RunReport> {
    check_inputs(config, p, z)?;
    let mut rng = rng_from_seed(seed);
    let (d, c) = (config.d, config.c_light);
    let (t_mid, t_end) = (d / c, 2.0 * d / c);
    let mut log = Log { events: Vec::new() };
    use Actor::*;
    use Direction::*;

    log.msg(0.0, -d, VerifierLeft, 0, Send, format!("P = {p}"));
    log.msg(0.0, d, VerifierRight, 1, Send, format!("qubit encoding z = {z}"));
    log.msg(t_mid, 0.0, Prover, 0, Receive, format!("P = {p}"));
    log.msg(t_mid, 0.0, Prover, 1, Receive, "qubit".into());

    let q = encoded_qubit(p, z as usize);
    let x = p.statevec();
    let prob0 = (x[0].conj() * q[0] + x[1].conj() * q[1]).norm_sqr();
    let outcome = u8::from(rng.random::<f64>() >= prob0);
    log.act(t_mid, 0.0, Prover, &format!("measure {{P, I-P}} -> {outcome}"));
    log.msg(t_mid, 0.0, Prover, 2, Send, format!("z = {outcome}"));
    log.msg(t_mid, 0.0, Prover, 3, Send, format!("z = {outcome}"));
    log.msg(t_end, -d, VerifierLeft, 2, Receive, format!("z1 = {outcome}"));
    log.msg(t_end, d, VerifierRight, 3, Receive, format!("z2 = {outcome}"));
    let v = verdict(z, outcome, outcome);
    log.act(t_end, -d, VerifierLeft, &format!("verdict {v:?}"));

    Ok(RunReport {
        events: log.events,
        z,
        z1: outcome,
        z2: outcome,
        verdict: v,
    })
}

/// Alice at `-h` and Bob at `+h` run `strategy`. Outcomes are sampled from
/// the strategy's decoders, or seesaw-optimized ones when it ships none.
pub fn run_adversarial(
    config: &ProtocolConfig,
    strategy: &CheatingStrategy,
    p: &QubitProjector,
    z: u8,
    seed: u64,
) -> Result<RunReport> {
    check_inputs(config, p, z)?;
    let states = final_states(strategy, p)?;
    let decoders = match strategy.decoders_for(p) {
        Some(dec) => dec.clone(),
        None => optimize_decoders(&states, config.prior(), None, DEFAULT_SEESAW_ROUNDS)?.decoders,
    };
    let mut rng = rng_from_seed(seed);
    let (d, h, c) = (config.d, config.h, config.c_light);
    let (t_act, t_hold, t_end) = ((d - h) / c, (d + h) / c, 2.0 * d / c);
    let mut log = Log { events: Vec::new() };
    use Actor::*;
    use Direction::*;

    log.msg(0.0, -d, VerifierLeft, 0, Send, format!("P = {p}"));
    log.msg(0.0, d, VerifierRight, 1, Send, format!("qubit encoding z = {z}"));
    log.msg(t_act, -h, Alice, 0, Receive, format!("P = {p}"));
    log.act(t_act, -h, Alice, "apply U_P");
    log.msg(t_act, -h, Alice, 2, Send, "C".into());
    log.msg(t_act, -h, Alice, 3, Send, format!("P = {p}"));
    log.msg(t_act, h, Bob, 1, Receive, "qubit".into());
    log.act(t_act, h, Bob, "apply V");
    log.msg(t_act, h, Bob, 4, Send, "D".into());
    log.msg(t_hold, -h, Alice, 4, Receive, "D".into());
    log.msg(t_hold, h, Bob, 2, Receive, "C".into());
    log.msg(t_hold, h, Bob, 3, Receive, format!("P = {p}"));

    // Joint outcome (z1, z2) from Alice's and Bob's decoders.
    let zi = z as usize;
    let probs: Vec<f64> = (0..4)
        .map(|k| states.outcome_probability(&decoders, zi, k / 2, k % 2).max(0.0))
        .collect();
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut pick = 3;
    for (k, &pr) in probs.iter().enumerate() {
        if u < pr {
            pick = k;
            break;
        }
        u -= pr;
    }
    let (z1, z2) = ((pick / 2) as u8, (pick % 2) as u8);
    log.act(t_hold, -h, Alice, &format!("measure A,D -> {z1}"));
    log.msg(t_hold, -h, Alice, 5, Send, format!("z = {z1}"));
    log.act(t_hold, h, Bob, &format!("measure B,C -> {z2}"));
    log.msg(t_hold, h, Bob, 6, Send, format!("z = {z2}"));
    log.msg(t_end, -d, VerifierLeft, 5, Receive, format!("z1 = {z1}"));
    log.msg(t_end, d, VerifierRight, 6, Receive, format!("z2 = {z2}"));
    let v = verdict(z, z1, z2);
    log.act(t_end, -d, VerifierLeft, &format!("verdict {v:?}"));

    Ok(RunReport {
        events: log.events,
        z,
        z1,
        z2,
        verdict: v,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{bb84_attack, do_nothing_strategy};
    use super::*;
    use crate::random::{random_bloch, rng_from_seed};

    fn config_with(p: &QubitProjector) -> ProtocolConfig {
        ProtocolConfig {
            basis_set: vec![p.clone()],
            ..ProtocolConfig::default()
        }
    }

    #[test]
    fn honest_runs_accept_with_exact_times() {
        let mut rng = rng_from_seed(0);
        for seed in 0..50 {
            let p = QubitProjector::from_bloch(random_bloch(&mut rng)).unwrap();
            let cfg = ProtocolConfig {
                d: 3.0,
                c_light: 2.0,
                h: 1.0,
                ..config_with(&p)
            };
            for z in 0..2 {
                let r = run_honest(&cfg, &p, z, seed).unwrap();
                assert_eq!(r.verdict, Verdict::Accept);
                assert_eq!((r.z1, r.z2), (z, z));
                assert_eq!(r.event_times(), vec![0.0, 1.5, 3.0]);
                r.check_causality(cfg.c_light).unwrap();
            }
        }
    }

    #[test]
    fn honest_rejects_foreign_basis() {
        let cfg = ProtocolConfig::default();
        assert!(run_honest(&cfg, &QubitProjector::y_eigenstate(), 0, 0).is_err());
        assert!(run_honest(&cfg, &cfg.basis_set[0], 2, 0).is_err());
    }

    #[test]
    fn adversarial_timing() {
        let cfg = ProtocolConfig::default();
        let s = bb84_attack();
        for seed in 0..10 {
            for p in &cfg.basis_set {
                for z in 0..2 {
                    let r = run_adversarial(&cfg, &s, p, z, seed).unwrap();
                    assert_eq!(r.verdict, Verdict::Accept);
                    assert_eq!(r.event_times(), vec![0.0, 0.5, 1.5, 2.0]);
                    r.check_causality(cfg.c_light).unwrap();
                }
            }
        }
    }

    #[test]
    fn do_nothing_sometimes_aborts() {
        let cfg = ProtocolConfig::default();
        let s = do_nothing_strategy(&cfg.basis_set);
        let aborts = (0..200)
            .filter(|&seed| {
                run_adversarial(&cfg, &s, &cfg.basis_set[0], (seed % 2) as u8, seed)
                    .unwrap()
                    .verdict
                    == Verdict::Abort
            })
            .count();
        assert!(aborts > 50 && aborts < 150, "{aborts}");
    }

    #[test]
    fn causality_check_catches_superluminal_messages() {
        let cfg = ProtocolConfig::default();
        let mut r = run_honest(&cfg, &cfg.basis_set[0], 0, 0).unwrap();
        r.events[2].time = 0.5;
        assert!(r.check_causality(cfg.c_light).is_err());
    }
}
