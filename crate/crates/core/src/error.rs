use thiserror::Error;

/// Errors surfaced by state construction, protocol runs and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("register of {requested} qubits exceeds the maximum of {max}")]
    RegisterOverflow { requested: usize, max: usize },

    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("amplitudes must be finite")]
    NonFiniteAmplitude,

    #[error("cannot normalize a state with vanishing norm")]
    ZeroNorm,

    #[error("reflectivity {0} lies outside [0, 1/2]")]
    ReflectivityOutOfRange(f64),

    #[error("selected outcome has probability {probability:.3e}, below the zero threshold")]
    ZeroProbabilityOutcome { probability: f64 },

    #[error("restoration filter is singular at R = 1/2; the sender-side clone cannot be recovered there")]
    SingularFilter,

    #[error("schedule solver stopped after {iterations} iterations with residual {residual:.3e} above tolerance")]
    SolverDidNotConverge { iterations: usize, residual: f64 },

    #[error("no shots were accepted; cannot form fidelity estimates")]
    ZeroAcceptedShots,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
