//! Shot-based stochastic reproduction of the conditional protocols.
//!
//! Every shot samples the binary success/failure instrument of each Bell
//! projection and, on acceptance, projective measurements of the output
//! modes in their own match/orthogonal bases. Estimates are empirical
//! frequencies with binomial standard errors.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bell::{apply_conditional, Reflectivity};
use crate::error::{Error, Result};
use crate::hilbert::{orthogonal, PureState};
use crate::protocols::{Mode, ReflectivitySchedule, PROBABILITY_FLOOR};

/// Largest chain length accepted for shot-based runs.
pub const MAX_SAMPLED_CHAIN: usize = 8;

/// Probabilities this close to one are treated as exactly one, so branches
/// that are deterministic up to rounding stay deterministic when sampled.
const CERTAINTY_SNAP: f64 = 1e-9;

/// Which conditional protocol a sampling run drives.
#[derive(Clone, Debug)]
pub enum ProtocolTarget {
    Teleport(Reflectivity),
    Chain(ReflectivitySchedule),
}

/// A reproducible sampling plan: shot count, seed, and the protocol target.
#[derive(Clone, Debug)]
pub struct ShotConfig {
    shots: u64,
    seed: u64,
    target: ProtocolTarget,
}

impl ShotConfig {
    pub fn teleport(shots: u64, seed: u64, r: Reflectivity) -> Result<Self> {
        Self::new(shots, seed, ProtocolTarget::Teleport(r))
    }

    pub fn chain(shots: u64, seed: u64, schedule: ReflectivitySchedule) -> Result<Self> {
        Self::new(shots, seed, ProtocolTarget::Chain(schedule))
    }

    fn new(shots: u64, seed: u64, target: ProtocolTarget) -> Result<Self> {
        if shots < 1 {
            return Err(Error::InvalidParameter(
                "sampling needs at least one shot".into(),
            ));
        }
        Ok(ShotConfig {
            shots,
            seed,
            target,
        })
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn target(&self) -> &ProtocolTarget {
        &self.target
    }
}

/// An empirical frequency with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_accepted: u64,
    pub n_total: u64,
}

impl Estimate {
    fn bernoulli(hits: u64, trials: u64) -> Self {
        debug_assert!(trials >= 1 && hits <= trials);
        let mean = hits as f64 / trials as f64;
        Estimate {
            mean,
            std_error: (mean * (1.0 - mean) / trials as f64).sqrt(),
            n_accepted: hits,
            n_total: trials,
        }
    }
}

/// Sampled teleportation run: the three mode fidelities and the branch rate.
#[derive(Clone, Debug, PartialEq)]
pub struct TeleportEstimates {
    pub f_s: Estimate,
    pub f_sprime: Estimate,
    pub f_i: Estimate,
    pub success: Estimate,
}

/// Sampled chain run: one fidelity estimate per output mode plus the rate of
/// shots on which every stage succeeded.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainEstimates {
    pub per_mode: Vec<(Mode, Estimate)>,
    pub success: Estimate,
}

/// Each shot draws from its own stream of a splittable generator, so results
/// do not depend on evaluation order.
fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

fn snap_certain(p: f64) -> f64 {
    if p > 1.0 - CERTAINTY_SNAP {
        1.0
    } else {
        p
    }
}

/// Projectively measures `qubit` of `state` in the {target, orthogonal}
/// basis, collapsing `state` onto the sampled branch.
fn measure_mode(
    state: &mut PureState,
    qubit: usize,
    target: &PureState,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    let (branch, prob) = state.project_qubit(qubit, target)?;
    if rng.random::<f64>() < snap_certain(prob) {
        *state = branch.normalize()?;
        Ok(true)
    } else {
        let (miss, _) = state.project_qubit(qubit, &orthogonal(target)?)?;
        *state = miss.normalize()?;
        Ok(false)
    }
}

/// Samples partial teleportation: per shot, the Bell projection either
/// succeeds or the shot is discarded; accepted shots measure the sender,
/// receiver, and ancilla modes against the input (ancilla against its
/// orthogonal complement).
pub fn mc_partial_teleport(psi: &PureState, cfg: &ShotConfig) -> Result<TeleportEstimates> {
    let ProtocolTarget::Teleport(r) = cfg.target else {
        return Err(Error::InvalidParameter(
            "this sampler needs a single-reflectivity target".into(),
        ));
    };
    if psi.num_qubits() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "teleportation takes a single qubit, got {} qubits",
            psi.num_qubits()
        )));
    }
    // The post-selected state is identical on every accepted shot, so it is
    // computed once; the per-shot randomness is the instrument outcome and
    // the three mode measurements.
    let joint = psi.tensor(&PureState::singlet())?;
    let (branch, p_success) = apply_conditional(&joint, (0, 1), r)?;
    if p_success < PROBABILITY_FLOOR {
        return Err(Error::ZeroProbabilityOutcome {
            probability: p_success,
        });
    }
    let p_success = snap_certain(p_success);
    let accepted_state = branch.normalize()?;
    let psi_perp = orthogonal(psi)?;

    let mut accepted = 0u64;
    let mut hits = [0u64; 3];
    for shot in 0..cfg.shots {
        let mut rng = shot_rng(cfg.seed, shot);
        if rng.random::<f64>() >= p_success {
            continue;
        }
        accepted += 1;
        let mut state = accepted_state.clone();
        // Register layout matches the exact protocol: 0 = S, 1 = I, 2 = S'.
        let plan: [(usize, &PureState); 3] = [(0, psi), (1, &psi_perp), (2, psi)];
        for (slot, &(qubit, target)) in plan.iter().enumerate() {
            if measure_mode(&mut state, qubit, target, &mut rng)? {
                hits[slot] += 1;
            }
        }
    }
    if accepted == 0 {
        return Err(Error::ZeroAcceptedShots);
    }
    Ok(TeleportEstimates {
        f_s: Estimate::bernoulli(hits[0], accepted),
        f_i: Estimate::bernoulli(hits[1], accepted),
        f_sprime: Estimate::bernoulli(hits[2], accepted),
        success: Estimate::bernoulli(accepted, cfg.shots),
    })
}

/// Samples the cloning chain: a shot is accepted only when every stage's
/// projection succeeds, then each replica and the teleported clone are
/// measured against the input and the ancilla against its complement.
pub fn mc_clone_chain(psi: &PureState, cfg: &ShotConfig) -> Result<ChainEstimates> {
    let ProtocolTarget::Chain(ref schedule) = cfg.target else {
        return Err(Error::InvalidParameter(
            "this sampler needs a reflectivity schedule".into(),
        ));
    };
    if psi.num_qubits() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "the chain takes a single-qubit input, got {} qubits",
            psi.num_qubits()
        )));
    }
    let n = schedule.len();
    if n > MAX_SAMPLED_CHAIN {
        return Err(Error::InvalidParameter(format!(
            "shot-based chains support up to {MAX_SAMPLED_CHAIN} stages, got {n}"
        )));
    }

    // Stage success probabilities and the all-success state do not vary
    // between shots; hoist them and leave only the sampling in the loop.
    let mut state = psi.clone();
    for _ in 1..n {
        state = state.tensor(psi)?;
    }
    state = state.tensor(&PureState::singlet())?;
    let mut stage_probs = Vec::with_capacity(n);
    for k in 0..n {
        let (branch, prob) = apply_conditional(&state, (k, n), schedule.stage(k))?;
        if prob < PROBABILITY_FLOOR {
            return Err(Error::ZeroProbabilityOutcome { probability: prob });
        }
        stage_probs.push(snap_certain(prob));
        state = branch.normalize()?;
    }
    let accepted_state = state;
    let psi_perp = orthogonal(psi)?;

    // Register layout matches the exact chain: replicas, then I at qubit n,
    // then the teleported clone S' at qubit n + 1.
    let mut plan: Vec<(usize, Mode)> = (0..n).map(|k| (k, Mode::Replica(k + 1))).collect();
    plan.push((n + 1, Mode::SPrime));
    plan.push((n, Mode::I));

    let mut accepted = 0u64;
    let mut hits = vec![0u64; plan.len()];
    for shot in 0..cfg.shots {
        let mut rng = shot_rng(cfg.seed, shot);
        if !stage_probs.iter().all(|&p| rng.random::<f64>() < p) {
            continue;
        }
        accepted += 1;
        let mut state = accepted_state.clone();
        for (slot, &(qubit, mode)) in plan.iter().enumerate() {
            let target = if mode == Mode::I { &psi_perp } else { psi };
            if measure_mode(&mut state, qubit, target, &mut rng)? {
                hits[slot] += 1;
            }
        }
    }
    if accepted == 0 {
        return Err(Error::ZeroAcceptedShots);
    }
    Ok(ChainEstimates {
        per_mode: plan
            .iter()
            .zip(&hits)
            .map(|(&(_, mode), &h)| (mode, Estimate::bernoulli(h, accepted)))
            .collect(),
        success: Estimate::bernoulli(accepted, cfg.shots),
    })
}
