//! The teleportation-as-cloning protocols.
//!
//! Every protocol here follows the same template: tensor the input with one
//! or more singlet pairs, apply the conditional beam-splitter branch from
//! [`crate::bell`] to selected qubit pairs, renormalize, and read fidelities
//! off the reduced output modes. Register layouts are documented per function;
//! qubit 0 is always the sender's input qubit.

use num_complex::Complex64;

use crate::bell::{self, ConditionalMap, Reflectivity};
use crate::bounds::{self, FidelityPair};
use crate::error::{Error, Result};
use crate::hilbert::{fidelity, orthogonal, DensityMatrix, PureState};

/// Probabilities below this are treated as impossible outcomes.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

/// Labels for the output modes appearing in fidelity reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// The sender-side qubit that carried the input state.
    S,
    /// The teleported clone on the receiver side.
    SPrime,
    /// The ancilla mode; its fidelity is reported against the flipped state.
    I,
    /// The n-th sender-side replica of a cloning chain (1-based).
    Replica(usize),
    /// The clone kept by the receiver of the k-th sequential stage (1-based).
    Stage(usize),
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::S => write!(f, "S"),
            Mode::SPrime => write!(f, "Sprime"),
            Mode::I => write!(f, "I"),
            Mode::Replica(n) => write!(f, "S{n}"),
            Mode::Stage(k) => write!(f, "B{k}"),
        }
    }
}

/// Fidelity summary of one conditional protocol run.
///
/// `fidelity_i_orthogonal` compares the ancilla against the state orthogonal
/// to the input; all other entries compare against the input itself. The
/// `inequality_residual` is the trade-off frontier expression
/// `(1-F_S)(1-F_S') - (1/2 - (1-F_S) - (1-F_S'))^2` evaluated on
/// (`fidelity_s`, `fidelity_sprime`); it is meaningful for single-input
/// protocols, where values >= 0 are allowed and 0 marks optimality.
#[derive(Clone, Debug)]
pub struct CloneReport {
    pub fidelity_s: f64,
    pub fidelity_sprime: f64,
    pub fidelity_i_orthogonal: f64,
    pub success_probability: f64,
    pub inequality_residual: f64,
    pub per_mode_fidelities: Vec<(Mode, f64)>,
}

/// Per-stage reflectivities of a multi-stage protocol; nonempty, each stage
/// within `[0, 1/2]`.
#[derive(Clone, Debug)]
pub struct ReflectivitySchedule {
    stages: Vec<Reflectivity>,
}

impl ReflectivitySchedule {
    pub fn new(stages: Vec<Reflectivity>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidSchedule("schedule has no stages".into()));
        }
        Ok(ReflectivitySchedule { stages })
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        let stages = values
            .iter()
            .map(|&v| Reflectivity::new(v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(stages)
    }

    /// The schedule `R_n = 1/(n+2)` that makes an n-stage chain symmetric.
    pub fn chain_default(n: usize) -> Self {
        let stages = (1..=n)
            .map(|k| Reflectivity::new(1.0 / (k as f64 + 2.0)).expect("1/(k+2) <= 1/3"))
            .collect();
        ReflectivitySchedule { stages }
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn stage(&self, k: usize) -> Reflectivity {
        self.stages[k]
    }

    pub fn values(&self) -> Vec<f64> {
        self.stages.iter().map(|r| r.value()).collect()
    }
}

/// Result of a single partial teleportation: the report plus the normalized
/// joint state of (S, I, S') for follow-up local operations.
#[derive(Clone, Debug)]
pub struct TeleportOutcome {
    pub report: CloneReport,
    pub joint: PureState,
}

fn require_input_qubit(psi: &PureState) -> Result<()> {
    if psi.num_qubits() != 1 {
        return Err(Error::DimensionMismatch(
            "protocol input must be a single qubit".into(),
        ));
    }
    if !psi.is_normalized() {
        return Err(Error::NotNormalized {
            norm_sqr: psi.norm_sqr(),
        });
    }
    Ok(())
}

fn frontier_residual(f_s: f64, f_sprime: f64) -> Result<f64> {
    Ok(bounds::inequality_residual(FidelityPair::new(
        f_s, f_sprime,
    )?))
}

/// Teleports a share of `psi` through one singlet using a beam splitter of
/// reflectivity `r`.
///
/// Register layout: qubit 0 = S (input), 1 = I (ancilla), 2 = S' (receiver);
/// the conditional branch acts on (S, I). `R = 0` leaves the input untouched,
/// `R = 1/2` is complete teleportation.
pub fn partial_teleport(psi: &PureState, r: Reflectivity) -> Result<TeleportOutcome> {
    require_input_qubit(psi)?;
    let joint = psi.tensor(&PureState::singlet())?;
    let (branch, p_success) = bell::apply_conditional(&joint, (0, 1), r)?;
    if p_success <= PROBABILITY_FLOOR {
        return Err(Error::ZeroProbabilityOutcome {
            probability: p_success,
        });
    }
    let joint = branch.normalize()?;
    let perp = orthogonal(psi)?;
    let f_s = fidelity(psi, &joint.reduce_to_qubit(0)?)?;
    let f_i = fidelity(&perp, &joint.reduce_to_qubit(1)?)?;
    let f_sprime = fidelity(psi, &joint.reduce_to_qubit(2)?)?;
    let report = CloneReport {
        fidelity_s: f_s,
        fidelity_sprime: f_sprime,
        fidelity_i_orthogonal: f_i,
        success_probability: p_success,
        inequality_residual: frontier_residual(f_s, f_sprime)?,
        per_mode_fidelities: vec![(Mode::S, f_s), (Mode::SPrime, f_sprime), (Mode::I, f_i)],
    };
    Ok(TeleportOutcome { report, joint })
}

/// The two local polarization outcomes used by the reversal measurements,
/// named by the detected pair in measurement order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairOutcome {
    /// `|V>` on the first measured qubit, `|H>` on the second.
    VH,
    /// `|H>` on the first measured qubit, `|V>` on the second.
    HV,
}

fn ket_v() -> PureState {
    PureState::basis(1, 0).expect("single-qubit basis")
}

fn ket_h() -> PureState {
    PureState::basis(1, 1).expect("single-qubit basis")
}

fn diagonal_filter(v: f64, h: f64, label: String) -> Result<ConditionalMap> {
    ConditionalMap::single_qubit(
        [
            [Complex64::new(v, 0.0), Complex64::ZERO],
            [Complex64::ZERO, Complex64::new(h, 0.0)],
        ],
        label,
    )
}

fn require_teleport_joint(joint: &PureState) -> Result<()> {
    if joint.num_qubits() != 3 {
        return Err(Error::DimensionMismatch(
            "reversal expects the 3-qubit (S, I, S') state of a partial teleportation".into(),
        ));
    }
    if !joint.is_normalized() {
        return Err(Error::NotNormalized {
            norm_sqr: joint.norm_sqr(),
        });
    }
    Ok(())
}

/// Projects two qubits of `joint` onto the product outcome and returns the
/// unnormalized collapsed state with the outcome probability.
fn project_pair(
    joint: &PureState,
    (qa, qb): (usize, usize),
    outcome: PairOutcome,
) -> Result<(PureState, f64, usize, usize)> {
    let (first, second) = match outcome {
        PairOutcome::VH => (ket_v(), ket_h()),
        PairOutcome::HV => (ket_h(), ket_v()),
    };
    let bit_a = matches!(outcome, PairOutcome::HV) as usize;
    let bit_b = 1 - bit_a;
    let (collapsed, _) = joint.project_qubit(qa, &first)?;
    let (collapsed, _) = collapsed.project_qubit(qb, &second)?;
    let p_outcome = collapsed.norm_sqr();
    Ok((collapsed, p_outcome, bit_a, bit_b))
}

/// Extracts the single-qubit state of `q` from a 3-qubit register whose other
/// two qubits have collapsed onto the basis values `bits`.
fn extract_qubit(state: &PureState, q: usize, bits: [(usize, usize); 2]) -> Result<PureState> {
    let mut base = 0usize;
    for (qubit, bit) in bits {
        base |= bit << (2 - qubit);
    }
    let step = 1usize << (2 - q);
    PureState::from_amplitudes(
        1,
        vec![state.amplitudes()[base], state.amplitudes()[base | step]],
    )?
    .normalize()
}

/// Completes the teleportation on the receiver side: the sender measures S and
/// I in the `{|V>, |H>}` basis, announces the outcome, and the receiver applies
/// the matching local filter to S'. Returns the restored S' state and the
/// joint probability of (outcome, filter success).
///
/// Requires `r > 0`: at `R = 0` nothing reaches the receiver and both filters
/// annihilate their branch.
pub fn locc_reverse_bob(
    joint: &PureState,
    outcome: PairOutcome,
    r: Reflectivity,
) -> Result<(PureState, f64)> {
    require_teleport_joint(joint)?;
    if r.value() <= 0.0 {
        return Err(Error::InvalidParameter(
            "receiver-side restoration requires R > 0".into(),
        ));
    }
    let rv = r.value();
    let (collapsed, p_outcome, bit_s, bit_i) = project_pair(joint, (0, 1), outcome)?;
    if p_outcome <= PROBABILITY_FLOOR {
        return Err(Error::ZeroProbabilityOutcome {
            probability: p_outcome,
        });
    }
    // Branch states on S': VH -> alpha(1-R)|V> + beta R|H>,
    // HV -> alpha R|V> + beta(1-R)|H>; the filter evens out the two weights.
    let filter = match outcome {
        PairOutcome::VH => diagonal_filter(rv, 1.0 - rv, format!("receiver filter VH R={rv}"))?,
        PairOutcome::HV => diagonal_filter(1.0 - rv, rv, format!("receiver filter HV R={rv}"))?,
    };
    let normalized = collapsed.normalize()?;
    let (filtered, p_filter) = filter.apply_to_qubit(&normalized, 2)?;
    if p_filter <= PROBABILITY_FLOOR {
        return Err(Error::ZeroProbabilityOutcome {
            probability: p_outcome * p_filter,
        });
    }
    let restored = extract_qubit(&filtered, 2, [(0, bit_s), (1, bit_i)])?;
    Ok((restored, p_outcome * p_filter))
}

/// Undoes the teleportation on the sender side: the receiver measures S' and
/// the sender measures I, then the sender filters S back to the input state.
/// The outcome names the detected pair in the order (I, S').
///
/// Fails with [`Error::SingularFilter`] at `R = 1/2`, where the sender keeps
/// no share to restore.
pub fn locc_reverse_alice(
    joint: &PureState,
    outcome: PairOutcome,
    r: Reflectivity,
) -> Result<(PureState, f64)> {
    require_teleport_joint(joint)?;
    let rv = r.value();
    if (0.5 - rv).abs() < 1e-12 {
        return Err(Error::SingularFilter);
    }
    let (collapsed, p_outcome, bit_i, bit_sprime) = project_pair(joint, (1, 2), outcome)?;
    if p_outcome <= PROBABILITY_FLOOR {
        return Err(Error::ZeroProbabilityOutcome {
            probability: p_outcome,
        });
    }
    // Branch states on S: HV -> alpha(1-R)|V> + beta(1-2R)|H>,
    // VH -> alpha(1-2R)|V> + beta(1-R)|H>.
    let filter = match outcome {
        PairOutcome::HV => {
            diagonal_filter(1.0 - 2.0 * rv, 1.0 - rv, format!("sender filter HV R={rv}"))?
        }
        PairOutcome::VH => {
            diagonal_filter(1.0 - rv, 1.0 - 2.0 * rv, format!("sender filter VH R={rv}"))?
        }
    };
    let normalized = collapsed.normalize()?;
    let (filtered, p_filter) = filter.apply_to_qubit(&normalized, 0)?;
    if p_filter <= PROBABILITY_FLOOR {
        return Err(Error::ZeroProbabilityOutcome {
            probability: p_outcome * p_filter,
        });
    }
    let restored = extract_qubit(&filtered, 0, [(1, bit_i), (2, bit_sprime)])?;
    Ok((restored, p_outcome * p_filter))
}

/// Distributes `psi` to `schedule.len() + 1` parties by chaining partial
/// teleportations: stage k teleports the stage k-1 receiver's clone onward
/// through a fresh singlet.
///
/// Register layout: qubit 0 = S; stage k (1-based) appends its ancilla at
/// qubit 2k-1 and its receiver at qubit 2k. The report lists the sender clone
/// followed by each stage's kept clone; `fidelity_i_orthogonal` refers to the
/// final stage's ancilla.
pub fn sequential_teleport(
    psi: &PureState,
    schedule: &ReflectivitySchedule,
) -> Result<CloneReport> {
    require_input_qubit(psi)?;
    let stages = schedule.len();
    let mut state = psi.clone();
    let mut source = 0usize; // the clone consumed by the next stage
    for k in 0..stages {
        state = state.tensor(&PureState::singlet())?;
        let ancilla = 2 * k + 1;
        let (branch, _) = bell::apply_conditional(&state, (source, ancilla), schedule.stage(k))?;
        state = branch;
        source = ancilla + 1;
    }
    let p_success = state.norm_sqr();
    if p_success <= PROBABILITY_FLOOR {
        return Err(Error::ZeroProbabilityOutcome {
            probability: p_success,
        });
    }
    let state = state.normalize()?;
    let perp = orthogonal(psi)?;

    let mut per_mode = Vec::with_capacity(stages + 1);
    let f_s = fidelity(psi, &state.reduce_to_qubit(0)?)?;
    per_mode.push((Mode::S, f_s));
    for k in 1..=stages {
        let f = fidelity(psi, &state.reduce_to_qubit(2 * k)?)?;
        per_mode.push((Mode::Stage(k), f));
    }
    let f_final = per_mode[stages].1;
    let f_i = fidelity(&perp, &state.reduce_to_qubit(2 * stages - 1)?)?;
    Ok(CloneReport {
        fidelity_s: f_s,
        fidelity_sprime: f_final,
        fidelity_i_orthogonal: f_i,
        success_probability: p_success,
        inequality_residual: frontier_residual(f_s, f_final)?,
        per_mode_fidelities: per_mode,
    })
}

/// Largest chain size; the register needs `n + 2` qubits.
pub const MAX_CHAIN_INPUTS: usize = 12;

fn chain_state(
    psi: &PureState,
    n: usize,
    schedule: Option<&ReflectivitySchedule>,
    tail: &PureState,
) -> Result<(PureState, f64, ReflectivitySchedule)> {
    require_input_qubit(psi)?;
    if !(1..=MAX_CHAIN_INPUTS).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "chain size {n} outside 1..={MAX_CHAIN_INPUTS}"
        )));
    }
    let schedule = match schedule {
        Some(s) => {
            if s.len() != n {
                return Err(Error::InvalidSchedule(format!(
                    "{} stages for a chain of {n} inputs",
                    s.len()
                )));
            }
            s.clone()
        }
        None => ReflectivitySchedule::chain_default(n),
    };
    let mut state = psi.clone();
    for _ in 1..n {
        state = state.tensor(psi)?;
    }
    state = state.tensor(tail)?;
    let ancilla = n;
    for k in 0..n {
        let (branch, _) = bell::apply_conditional(&state, (k, ancilla), schedule.stage(k))?;
        state = branch;
    }
    let p_success = state.norm_sqr();
    if p_success <= PROBABILITY_FLOOR {
        return Err(Error::ZeroProbabilityOutcome {
            probability: p_success,
        });
    }
    Ok((state.normalize()?, p_success, schedule))
}

/// Turns `n` identical replicas of `psi` plus one singlet into `n + 1`
/// symmetric clones and one ancilla ("anti-clone"), by bouncing the shared
/// ancilla qubit off each replica in turn.
///
/// Register layout: qubits `0..n` = replicas, `n` = ancilla I, `n + 1` = the
/// teleported clone S'. With the default schedule `R_k = 1/(k+2)` all `n + 1`
/// clone fidelities coincide.
pub fn clone_chain(
    psi: &PureState,
    n: usize,
    schedule: Option<&ReflectivitySchedule>,
) -> Result<CloneReport> {
    let (state, p_success, _) = chain_state(psi, n, schedule, &PureState::singlet())?;
    let perp = orthogonal(psi)?;
    let mut per_mode = Vec::with_capacity(n + 2);
    for k in 0..n {
        let f = fidelity(psi, &state.reduce_to_qubit(k)?)?;
        per_mode.push((Mode::Replica(k + 1), f));
    }
    let f_sprime = fidelity(psi, &state.reduce_to_qubit(n + 1)?)?;
    per_mode.push((Mode::SPrime, f_sprime));
    let f_i = fidelity(&perp, &state.reduce_to_qubit(n)?)?;
    per_mode.push((Mode::I, f_i));
    let f_s = per_mode[0].1;
    Ok(CloneReport {
        fidelity_s: f_s,
        fidelity_sprime: f_sprime,
        fidelity_i_orthogonal: f_i,
        success_probability: p_success,
        inequality_residual: frontier_residual(f_s, f_sprime)?,
        per_mode_fidelities: per_mode,
    })
}

/// Result of the local universal-NOT port: the ancilla's reduced state, its
/// fidelity with the flipped input, and the branch probability.
#[derive(Clone, Debug)]
pub struct UnotOutcome {
    pub anticlone: DensityMatrix,
    pub fidelity_orthogonal: f64,
    pub success_probability: f64,
}

/// Approximates the universal NOT of `psi` using only `n` replicas, `n`
/// unbalanced beam splitters and one extra port in a completely random
/// polarization state (realized here as half of a hidden singlet, which is
/// never measured).
pub fn unot_local(psi: &PureState, n: usize) -> Result<UnotOutcome> {
    // The hidden purifier sits at qubit n + 1 and is simply ignored.
    let (state, p_success, _) = chain_state(psi, n, None, &PureState::singlet())?;
    let anticlone = state.reduce_to_qubit(n)?;
    let fidelity_orthogonal = fidelity(&orthogonal(psi)?, &anticlone)?;
    Ok(UnotOutcome {
        anticlone,
        fidelity_orthogonal,
        success_probability: p_success,
    })
}

/// Report of the time-bin run: fidelities after the receiver's correcting
/// unitary match the polarization protocol, and before the correction the
/// receiver's clone points at the rotated target `alpha|0,1> - beta|1,0>`.
#[derive(Clone, Debug)]
pub struct TimebinOutcome {
    pub corrected: CloneReport,
    pub uncorrected_receiver_fidelity: f64,
}

/// The receiver-side correcting unitary: swaps the two bins and flips the
/// sign of the early bin, `|1,0> -> -|0,1> ... |0,1> -> |1,0>` composed as
/// `U|0> = |1>, U|1> = -|0>`. Its square is `-1`.
fn timebin_flip() -> [[Complex64; 2]; 2] {
    [
        [Complex64::ZERO, -Complex64::ONE],
        [Complex64::ONE, Complex64::ZERO],
    ]
}

/// Runs the partial teleportation on time-bin qubits, where the shared
/// resource is `(|VV> + |HH>)/sqrt(2)` (both photons in the same bin) instead
/// of the singlet. The sender-side fidelities are unchanged; the receiver
/// needs one extra local unitary to point its clone back at the input.
pub fn timebin_equivalence(psi: &PureState, r: Reflectivity) -> Result<TimebinOutcome> {
    require_input_qubit(psi)?;
    let joint = psi.tensor(&PureState::phi_plus())?;
    let (branch, p_success) = bell::apply_conditional(&joint, (0, 1), r)?;
    if p_success <= PROBABILITY_FLOOR {
        return Err(Error::ZeroProbabilityOutcome {
            probability: p_success,
        });
    }
    let uncorrected = branch.normalize()?;

    // Target of the uncorrected receiver clone: U|psi> = alpha|1> - beta|0>.
    let rotated = PureState::qubit(-psi.amplitudes()[1], psi.amplitudes()[0])?;
    let uncorrected_receiver_fidelity = fidelity(&rotated, &uncorrected.reduce_to_qubit(2)?)?;

    let corrected = uncorrected.apply_single_qubit(&timebin_flip(), 2)?;
    let perp = orthogonal(psi)?;
    let f_s = fidelity(psi, &corrected.reduce_to_qubit(0)?)?;
    let f_i = fidelity(&perp, &corrected.reduce_to_qubit(1)?)?;
    let f_sprime = fidelity(psi, &corrected.reduce_to_qubit(2)?)?;
    let report = CloneReport {
        fidelity_s: f_s,
        fidelity_sprime: f_sprime,
        fidelity_i_orthogonal: f_i,
        success_probability: p_success,
        inequality_residual: frontier_residual(f_s, f_sprime)?,
        per_mode_fidelities: vec![(Mode::S, f_s), (Mode::SPrime, f_sprime), (Mode::I, f_i)],
    };
    Ok(TimebinOutcome {
        corrected: report,
        uncorrected_receiver_fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::haar_random_qubit;

    const TOL: f64 = 1e-12;

    fn r(value: f64) -> Reflectivity {
        Reflectivity::new(value).unwrap()
    }

    #[test]
    fn teleport_reproduces_closed_form_fidelities() {
        // (R, F_S, F_S', F_I, P)
        let cases = [
            (0.0, 1.0, 0.5, 0.5, 1.0),
            (1.0 / 3.0, 5.0 / 6.0, 5.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0),
            (0.375, 29.0 / 38.0, 17.0 / 19.0, 25.0 / 38.0, 19.0 / 64.0),
            (0.5, 0.5, 1.0, 0.5, 0.25),
        ];
        for &(rv, f_s, f_sp, f_i, p) in &cases {
            let out = partial_teleport(&haar_random_qubit(3), r(rv)).unwrap();
            assert!((out.report.fidelity_s - f_s).abs() < TOL, "R={rv}");
            assert!((out.report.fidelity_sprime - f_sp).abs() < TOL, "R={rv}");
            assert!(
                (out.report.fidelity_i_orthogonal - f_i).abs() < TOL,
                "R={rv}"
            );
            assert!((out.report.success_probability - p).abs() < TOL, "R={rv}");
        }
    }

    #[test]
    fn teleport_fidelities_are_universal() {
        let mut reports = Vec::new();
        for seed in 0..100 {
            let out = partial_teleport(&haar_random_qubit(seed), r(0.27)).unwrap();
            reports.push(out.report);
        }
        for accessor in [
            |rep: &CloneReport| rep.fidelity_s,
            |rep: &CloneReport| rep.fidelity_sprime,
            |rep: &CloneReport| rep.fidelity_i_orthogonal,
            |rep: &CloneReport| rep.success_probability,
        ] {
            let values: Vec<f64> = reports.iter().map(accessor).collect();
            let (min, max) = values
                .iter()
                .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            assert!(max - min < 1e-10, "spread {}", max - min);
        }
    }

    #[test]
    fn teleport_trade_off_is_monotone_and_saturated() {
        let mut last_s = f64::MAX;
        let mut last_sp = -1.0;
        for k in 0..=50 {
            let rv = k as f64 * 0.01;
            let rep = partial_teleport(&haar_random_qubit(9), r(rv))
                .unwrap()
                .report;
            assert!(rep.fidelity_s <= last_s + TOL);
            assert!(rep.fidelity_sprime >= last_sp - TOL);
            assert!(rep.inequality_residual.abs() < TOL, "R={rv}");
            last_s = rep.fidelity_s;
            last_sp = rep.fidelity_sprime;
        }
    }

    #[test]
    fn teleport_outputs_are_diagonal_in_the_input_basis() {
        let psi = haar_random_qubit(17);
        let perp = orthogonal(&psi).unwrap();
        let out = partial_teleport(&psi, r(0.3)).unwrap();
        for q in 0..3 {
            let rho = out.joint.reduce_to_qubit(q).unwrap();
            let a = psi.amplitudes();
            let b = perp.amplitudes();
            let off = a[0].conj() * (rho.get(0, 0) * b[0] + rho.get(0, 1) * b[1])
                + a[1].conj() * (rho.get(1, 0) * b[0] + rho.get(1, 1) * b[1]);
            assert!(off.norm() < 1e-10, "mode {q} not diagonal: {off}");
        }
    }

    #[test]
    fn teleport_rejects_bad_inputs() {
        let unnormalized =
            PureState::from_amplitudes(1, vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)])
                .unwrap();
        assert!(matches!(
            partial_teleport(&unnormalized, r(0.3)),
            Err(Error::NotNormalized { .. })
        ));
        let pair = PureState::singlet();
        assert!(partial_teleport(&pair, r(0.3)).is_err());
    }

    #[test]
    fn receiver_restoration_reaches_unit_fidelity() {
        for &rv in &[0.1, 1.0 / 3.0, 0.45, 0.5] {
            for seed in 0..5 {
                let psi = haar_random_qubit(seed);
                let joint = partial_teleport(&psi, r(rv)).unwrap().joint;
                for outcome in [PairOutcome::VH, PairOutcome::HV] {
                    let (restored, p) = locc_reverse_bob(&joint, outcome, r(rv)).unwrap();
                    assert!(p > 0.0);
                    let overlap = psi.overlap_sqr(&restored).unwrap();
                    assert!(
                        (overlap - 1.0).abs() < 1e-10,
                        "R={rv} {outcome:?}: overlap {overlap}"
                    );
                }
            }
        }
    }

    #[test]
    fn receiver_restoration_probability_is_state_independent() {
        // Joint probability of (outcome, filter) is R^2 (1-R)^2 / (2 P(R)).
        let rv: f64 = 0.3;
        let p_r = 1.0 - 3.0 * rv + 3.0 * rv * rv;
        let expected = rv * rv * (1.0 - rv) * (1.0 - rv) / (2.0 * p_r);
        for seed in 0..10 {
            let joint = partial_teleport(&haar_random_qubit(seed), r(rv))
                .unwrap()
                .joint;
            for outcome in [PairOutcome::VH, PairOutcome::HV] {
                let (_, p) = locc_reverse_bob(&joint, outcome, r(rv)).unwrap();
                assert!((p - expected).abs() < TOL, "{outcome:?}: {p}");
            }
        }
    }

    #[test]
    fn sender_restoration_reaches_unit_fidelity_below_half() {
        for &rv in &[0.1, 1.0 / 3.0, 0.45] {
            for seed in 0..5 {
                let psi = haar_random_qubit(seed);
                let joint = partial_teleport(&psi, r(rv)).unwrap().joint;
                for outcome in [PairOutcome::VH, PairOutcome::HV] {
                    let (restored, p) = locc_reverse_alice(&joint, outcome, r(rv)).unwrap();
                    assert!(p > 0.0);
                    let overlap = psi.overlap_sqr(&restored).unwrap();
                    assert!(
                        (overlap - 1.0).abs() < 1e-10,
                        "R={rv} {outcome:?}: overlap {overlap}"
                    );
                }
            }
        }
    }

    #[test]
    fn sender_restoration_is_impossible_at_full_teleportation() {
        let joint = partial_teleport(&haar_random_qubit(1), r(0.5))
            .unwrap()
            .joint;
        assert_eq!(
            locc_reverse_alice(&joint, PairOutcome::VH, r(0.5)).unwrap_err(),
            Error::SingularFilter
        );
    }

    #[test]
    fn receiver_restoration_needs_positive_reflectivity() {
        let joint = partial_teleport(&haar_random_qubit(1), r(0.0))
            .unwrap()
            .joint;
        assert!(matches!(
            locc_reverse_bob(&joint, PairOutcome::VH, r(0.0)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn sequential_single_stage_matches_direct_teleportation() {
        let psi = haar_random_qubit(5);
        let schedule = ReflectivitySchedule::from_values(&[0.3]).unwrap();
        let seq = sequential_teleport(&psi, &schedule).unwrap();
        let direct = partial_teleport(&psi, r(0.3)).unwrap().report;
        assert!((seq.fidelity_s - direct.fidelity_s).abs() < TOL);
        assert!((seq.fidelity_sprime - direct.fidelity_sprime).abs() < TOL);
        assert!((seq.fidelity_i_orthogonal - direct.fidelity_i_orthogonal).abs() < TOL);
        assert!((seq.success_probability - direct.success_probability).abs() < TOL);
    }

    #[test]
    fn sequential_three_party_schedule_equalizes_fidelities() {
        let psi = haar_random_qubit(8);
        let schedule = ReflectivitySchedule::from_values(&[0.375, 1.0 / 3.0]).unwrap();
        let rep = sequential_teleport(&psi, &schedule).unwrap();
        let expected = 29.0 / 38.0;
        assert_eq!(rep.per_mode_fidelities.len(), 3);
        for &(mode, f) in &rep.per_mode_fidelities {
            assert!((f - expected).abs() < TOL, "{mode}: {f}");
        }
        // Below the one-to-three optimum 7/9.
        assert!(rep.fidelity_s < 7.0 / 9.0);
        // Overall probability is the product of the stage probabilities.
        assert!((rep.success_probability - 19.0 / 192.0).abs() < TOL);
    }

    #[test]
    fn chain_of_one_is_the_symmetric_teleportation() {
        let psi = haar_random_qubit(2);
        let chain = clone_chain(&psi, 1, None).unwrap();
        let direct = partial_teleport(&psi, r(1.0 / 3.0)).unwrap().report;
        assert!((chain.fidelity_s - direct.fidelity_s).abs() < TOL);
        assert!((chain.fidelity_sprime - direct.fidelity_sprime).abs() < TOL);
        assert!((chain.fidelity_i_orthogonal - direct.fidelity_i_orthogonal).abs() < TOL);
        assert!((chain.success_probability - direct.success_probability).abs() < TOL);
    }

    #[test]
    fn chain_matches_hand_computed_small_cases() {
        // n = 2: clones 11/12, ancilla 3/4, probability 1/6;
        // n = 3: clones 19/20, ancilla 4/5, probability 1/10.
        let psi = haar_random_qubit(4);
        let two = clone_chain(&psi, 2, None).unwrap();
        for &(_, f) in &two.per_mode_fidelities[..3] {
            assert!((f - 11.0 / 12.0).abs() < TOL);
        }
        assert!((two.fidelity_i_orthogonal - 0.75).abs() < TOL);
        assert!((two.success_probability - 1.0 / 6.0).abs() < TOL);

        let three = clone_chain(&psi, 3, None).unwrap();
        for &(_, f) in &three.per_mode_fidelities[..4] {
            assert!((f - 19.0 / 20.0).abs() < TOL);
        }
        assert!((three.fidelity_i_orthogonal - 0.8).abs() < TOL);
        assert!((three.success_probability - 0.1).abs() < TOL);
    }

    #[test]
    fn chain_error_probabilities_cover_every_mode() {
        // One minus the clone fidelities plus the ancilla fidelity sum to 1:
        // the flipped state is detected in exactly one output mode.
        let psi = haar_random_qubit(12);
        for n in 1..=4 {
            let schedule = ReflectivitySchedule::from_values(&vec![0.21; n]).unwrap();
            let rep = clone_chain(&psi, n, Some(&schedule)).unwrap();
            let total: f64 = rep
                .per_mode_fidelities
                .iter()
                .map(|&(mode, f)| if mode == Mode::I { f } else { 1.0 - f })
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "n={n}: {total}");
        }
    }

    #[test]
    fn chain_validates_schedule_length() {
        let psi = haar_random_qubit(1);
        let schedule = ReflectivitySchedule::from_values(&[0.3]).unwrap();
        assert!(matches!(
            clone_chain(&psi, 2, Some(&schedule)),
            Err(Error::InvalidSchedule(_))
        ));
    }

    #[test]
    fn unot_port_fidelity_grows_with_the_chain() {
        let psi = haar_random_qubit(33);
        let cases = [(1, 2.0 / 3.0, 1.0 / 3.0), (2, 0.75, 1.0 / 6.0)];
        for &(n, f, p) in &cases {
            let out = unot_local(&psi, n).unwrap();
            assert!((out.fidelity_orthogonal - f).abs() < TOL, "n={n}");
            assert!((out.success_probability - p).abs() < TOL, "n={n}");
        }
        let ten = unot_local(&psi, 10).unwrap();
        assert!((ten.fidelity_orthogonal - 11.0 / 12.0).abs() < TOL);
    }

    #[test]
    fn unot_anticlone_equals_chain_ancilla() {
        let psi = haar_random_qubit(6);
        let unot = unot_local(&psi, 2).unwrap();
        let chain = clone_chain(&psi, 2, None).unwrap();
        assert!((unot.fidelity_orthogonal - chain.fidelity_i_orthogonal).abs() < TOL);
        assert!((unot.success_probability - chain.success_probability).abs() < TOL);
    }

    #[test]
    fn timebin_run_matches_polarization_after_correction() {
        for &rv in &[0.0, 0.1, 1.0 / 3.0, 0.45, 0.5] {
            for seed in [3, 14] {
                let psi = haar_random_qubit(seed);
                let tb = timebin_equivalence(&psi, r(rv)).unwrap();
                let pol = partial_teleport(&psi, r(rv)).unwrap().report;
                assert!((tb.corrected.fidelity_s - pol.fidelity_s).abs() < TOL);
                assert!((tb.corrected.fidelity_sprime - pol.fidelity_sprime).abs() < TOL);
                assert!(
                    (tb.corrected.fidelity_i_orthogonal - pol.fidelity_i_orthogonal).abs() < TOL
                );
                assert!((tb.corrected.success_probability - pol.success_probability).abs() < TOL);
                // Before the correction the receiver points at the rotated target.
                assert!((tb.uncorrected_receiver_fidelity - pol.fidelity_sprime).abs() < TOL);
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn reports_are_physical(rv in 0.0f64..=0.5, seed in 0u64..10_000) {
                let rep = partial_teleport(&haar_random_qubit(seed), r(rv)).unwrap().report;
                for &(_, f) in &rep.per_mode_fidelities {
                    prop_assert!((0.0..=1.0).contains(&f));
                }
                prop_assert!(rep.success_probability > 0.0 && rep.success_probability <= 1.0);
                // The closed frontier: residual vanishes for this protocol.
                prop_assert!(rep.inequality_residual.abs() < 1e-10);
            }

            #[test]
            fn chain_mode_errors_always_sum_to_one(
                n in 1usize..=3,
                seed in 0u64..1000,
                r1 in 0.0f64..=0.5,
                r2 in 0.0f64..=0.5,
                r3 in 0.0f64..=0.5,
            ) {
                let values = [r1, r2, r3];
                let schedule = ReflectivitySchedule::from_values(&values[..n]).unwrap();
                match clone_chain(&haar_random_qubit(seed), n, Some(&schedule)) {
                    Ok(rep) => {
                        let total: f64 = rep
                            .per_mode_fidelities
                            .iter()
                            .map(|&(mode, f)| if mode == Mode::I { f } else { 1.0 - f })
                            .sum();
                        prop_assert!((total - 1.0).abs() < 1e-10);
                    }
                    // All-1/2 schedules can drive the branch probability to zero.
                    Err(Error::ZeroProbabilityOutcome { .. }) => {}
                    Err(other) => return Err(TestCaseError::fail(format!("{other}"))),
                }
            }
        }
    }
}
