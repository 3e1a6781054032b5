//! Qubit registers as dense state vectors, plus the handful of linear-algebra
//! operations the teleportation protocols need: tensor products, embedded one-
//! and two-qubit operators, single-qubit projections, partial traces and
//! fidelities.
//!
//! Conventions used throughout the crate:
//!
//! * `|V> = |0>` and `|H> = |1>`;
//! * qubit 0 is the most significant bit of a basis index, so for an n-qubit
//!   register the bit of qubit `q` in index `k` is `(k >> (n-1-q)) & 1`;
//! * comparisons between states are phase-insensitive (fidelities and squared
//!   overlaps); no test or protocol depends on a global phase.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest register the dense simulator will build. 15 qubits covers the
/// N -> N+1 chain up to N = 12 (with purifier) and sequential distribution up
/// to M = 8 clones (1 + 2(M-1) qubits).
pub const MAX_QUBITS: usize = 15;

const NORM_TOL: f64 = 1e-12;

/// Complex amplitude of a basis state.
pub type Amplitude = Complex64;

/// Dense pure state of `num_qubits` qubits.
///
/// States produced by conditional (non-unitary) maps are left unnormalized and
/// flagged as such; [`PureState::normalize`] is always an explicit call.
#[derive(Clone, Debug)]
pub struct PureState {
    num_qubits: usize,
    amps: Vec<Amplitude>,
    normalized: bool,
}

impl PureState {
    /// Builds a state from raw amplitudes; `amps.len()` must be `2^num_qubits`.
    pub fn from_amplitudes(num_qubits: usize, amps: Vec<Amplitude>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::RegisterOverflow {
                requested: num_qubits,
                max: MAX_QUBITS,
            });
        }
        if amps.len() != 1 << num_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a {}-qubit register",
                amps.len(),
                num_qubits
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFiniteAmplitude);
        }
        let mut state = PureState {
            num_qubits,
            amps,
            normalized: false,
        };
        state.normalized = (state.norm_sqr() - 1.0).abs() <= NORM_TOL;
        Ok(state)
    }

    /// Single qubit `alpha |V> + beta |H>`; must be normalized within 1e-12.
    pub fn qubit(alpha: Amplitude, beta: Amplitude) -> Result<Self> {
        let state = Self::from_amplitudes(1, vec![alpha, beta])?;
        if !state.normalized {
            return Err(Error::NotNormalized {
                norm_sqr: state.norm_sqr(),
            });
        }
        Ok(state)
    }

    /// Bloch-angle qubit `cos(theta/2) |V> + e^{i phi} sin(theta/2) |H>`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        let alpha = Complex64::new((theta / 2.0).cos(), 0.0);
        let beta = Complex64::from_polar((theta / 2.0).sin(), phi);
        PureState {
            num_qubits: 1,
            amps: vec![alpha, beta],
            normalized: true,
        }
    }

    /// Computational basis state `|index>` of an n-qubit register.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::RegisterOverflow {
                requested: num_qubits,
                max: MAX_QUBITS,
            });
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::QubitOutOfRange { index, num_qubits });
        }
        let mut amps = vec![Complex64::ZERO; dim];
        amps[index] = Complex64::ONE;
        Ok(PureState {
            num_qubits,
            amps,
            normalized: true,
        })
    }

    /// Two-qubit singlet `(|VH> - |HV>)/sqrt(2)`.
    pub fn singlet() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState {
            num_qubits: 2,
            amps: vec![
                Complex64::ZERO,
                Complex64::new(s, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::ZERO,
            ],
            normalized: true,
        }
    }

    /// Two-qubit state `(|VV> + |HH>)/sqrt(2)`, the time-bin shared resource.
    pub fn phi_plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState {
            num_qubits: 2,
            amps: vec![
                Complex64::new(s, 0.0),
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::new(s, 0.0),
            ],
            normalized: true,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Whether the squared norm was within 1e-12 of 1 when last checked.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Returns the normalized state, or an error when the norm vanishes.
    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 <= 1e-28 {
            return Err(Error::ZeroNorm);
        }
        let scale = 1.0 / n2.sqrt();
        let amps = self.amps.iter().map(|a| a * scale).collect();
        Ok(PureState {
            num_qubits: self.num_qubits,
            amps,
            normalized: true,
        })
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<Amplitude> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch(format!(
                "inner product between {}- and {}-qubit states",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Squared overlap `|<self|other>|^2`, the phase-insensitive comparison.
    pub fn overlap_sqr(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Tensor product with `other` appended as the least significant qubits.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(Error::RegisterOverflow {
                requested: n,
                max: MAX_QUBITS,
            });
        }
        let d2 = other.amps.len();
        let mut amps = vec![Complex64::ZERO; self.amps.len() * d2];
        for (i, a) in self.amps.iter().enumerate() {
            if *a == Complex64::ZERO {
                continue;
            }
            for (j, b) in other.amps.iter().enumerate() {
                amps[i * d2 + j] = a * b;
            }
        }
        let mut state = PureState {
            num_qubits: n,
            amps,
            normalized: false,
        };
        state.normalized = (state.norm_sqr() - 1.0).abs() <= NORM_TOL;
        Ok(state)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                index: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Mask selecting the bit of qubit `q` in a basis index.
    fn bit_mask(&self, q: usize) -> usize {
        1 << (self.num_qubits - 1 - q)
    }

    /// Applies a 2x2 operator (not necessarily unitary) to qubit `q`.
    pub fn apply_single_qubit(&self, m: &[[Amplitude; 2]; 2], q: usize) -> Result<Self> {
        self.check_qubit(q)?;
        let mask = self.bit_mask(q);
        let mut amps = self.amps.clone();
        for k in 0..self.amps.len() {
            if k & mask != 0 {
                continue;
            }
            let a0 = self.amps[k];
            let a1 = self.amps[k | mask];
            amps[k] = m[0][0] * a0 + m[0][1] * a1;
            amps[k | mask] = m[1][0] * a0 + m[1][1] * a1;
        }
        let mut state = PureState {
            num_qubits: self.num_qubits,
            amps,
            normalized: false,
        };
        state.normalized = (state.norm_sqr() - 1.0).abs() <= NORM_TOL;
        Ok(state)
    }

    /// Applies a 4x4 operator to the ordered pair `(q1, q2)`; `q1` supplies the
    /// more significant bit of the operator's 2-qubit basis index.
    pub fn apply_two_qubit(
        &self,
        m: &[[Amplitude; 4]; 4],
        (q1, q2): (usize, usize),
    ) -> Result<Self> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(Error::InvalidParameter(format!(
                "two-qubit operator needs distinct qubits, got ({q1}, {q2})"
            )));
        }
        let m1 = self.bit_mask(q1);
        let m2 = self.bit_mask(q2);
        let mut amps = self.amps.clone();
        for k in 0..self.amps.len() {
            if k & (m1 | m2) != 0 {
                continue;
            }
            let idx = [k, k | m2, k | m1, k | m1 | m2];
            let old = idx.map(|i| self.amps[i]);
            for (row, &i) in idx.iter().enumerate() {
                amps[i] = (0..4).map(|col| m[row][col] * old[col]).sum();
            }
        }
        let mut state = PureState {
            num_qubits: self.num_qubits,
            amps,
            normalized: false,
        };
        state.normalized = (state.norm_sqr() - 1.0).abs() <= NORM_TOL;
        Ok(state)
    }

    /// Projects qubit `q` onto the single-qubit state `onto`. Returns the
    /// unnormalized post-projection state and the outcome probability (which is
    /// exact only when `self` is normalized).
    pub fn project_qubit(&self, q: usize, onto: &PureState) -> Result<(Self, f64)> {
        self.check_qubit(q)?;
        if onto.num_qubits != 1 {
            return Err(Error::DimensionMismatch(
                "projection target must be a single-qubit state".into(),
            ));
        }
        let mask = self.bit_mask(q);
        let c0 = onto.amps[0];
        let c1 = onto.amps[1];
        let mut amps = vec![Complex64::ZERO; self.amps.len()];
        for k in 0..self.amps.len() {
            if k & mask != 0 {
                continue;
            }
            let overlap = c0.conj() * self.amps[k] + c1.conj() * self.amps[k | mask];
            amps[k] = c0 * overlap;
            amps[k | mask] = c1 * overlap;
        }
        let mut state = PureState {
            num_qubits: self.num_qubits,
            amps,
            normalized: false,
        };
        let prob = state.norm_sqr();
        state.normalized = (prob - 1.0).abs() <= NORM_TOL;
        Ok((state, prob))
    }

    /// Reduced density matrix of qubit `keep`; requires a normalized state.
    pub fn reduce_to_qubit(&self, keep: usize) -> Result<DensityMatrix> {
        self.check_qubit(keep)?;
        if !self.normalized {
            return Err(Error::NotNormalized {
                norm_sqr: self.norm_sqr(),
            });
        }
        let mask = self.bit_mask(keep);
        let mut r00 = Complex64::ZERO;
        let mut r01 = Complex64::ZERO;
        let mut r11 = Complex64::ZERO;
        for k in 0..self.amps.len() {
            if k & mask != 0 {
                continue;
            }
            let a0 = self.amps[k];
            let a1 = self.amps[k | mask];
            r00 += a0 * a0.conj();
            r01 += a0 * a1.conj();
            r11 += a1 * a1.conj();
        }
        DensityMatrix::from_entries(2, vec![r00, r01, r01.conj(), r11])
    }
}

/// Dense density matrix of one or more qubits (dimension a power of two).
///
/// Construction validates Hermiticity (within 1e-10), unit trace (within
/// 1e-10), and for single-qubit matrices positive semidefiniteness (smallest
/// eigenvalue >= -1e-10).
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<Amplitude>,
}

impl DensityMatrix {
    const HERMITICITY_TOL: f64 = 1e-10;

    pub fn from_entries(dim: usize, entries: Vec<Amplitude>) -> Result<Self> {
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::DimensionMismatch(format!(
                "density matrix dimension {dim} is not a power of two"
            )));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} density matrix",
                entries.len()
            )));
        }
        let rho = DensityMatrix { dim, entries };
        for i in 0..dim {
            for j in i..dim {
                let delta = rho.get(i, j) - rho.get(j, i).conj();
                if delta.norm() > Self::HERMITICITY_TOL {
                    return Err(Error::DimensionMismatch(format!(
                        "density matrix not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > Self::HERMITICITY_TOL || trace.im.abs() > Self::HERMITICITY_TOL
        {
            return Err(Error::NotNormalized { norm_sqr: trace.re });
        }
        if dim == 2 && rho.min_eigenvalue_2x2() < -Self::HERMITICITY_TOL {
            return Err(Error::DimensionMismatch(
                "density matrix has a negative eigenvalue".into(),
            ));
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Amplitude {
        self.entries[row * self.dim + col]
    }

    pub fn trace(&self) -> Amplitude {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Smallest eigenvalue of a 2x2 Hermitian matrix, in closed form.
    fn min_eigenvalue_2x2(&self) -> f64 {
        let tr = self.trace().re;
        let det = (self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0)).re;
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        (tr - disc) / 2.0
    }

    /// Traces out all qubits except `keep` (indices follow the same
    /// most-significant-first convention as `PureState`).
    pub fn partial_trace_to_qubit(&self, keep: usize) -> Result<DensityMatrix> {
        let n = self.dim.trailing_zeros() as usize;
        if keep >= n {
            return Err(Error::QubitOutOfRange {
                index: keep,
                num_qubits: n,
            });
        }
        let mask = 1usize << (n - 1 - keep);
        let mut out = [Complex64::ZERO; 4];
        for k in 0..self.dim {
            if k & mask != 0 {
                continue;
            }
            out[0] += self.get(k, k);
            out[1] += self.get(k, k | mask);
            out[2] += self.get(k | mask, k);
            out[3] += self.get(k | mask, k | mask);
        }
        DensityMatrix::from_entries(2, out.to_vec())
    }
}

/// `<psi| rho |psi>` for a single-qubit pure state and a 2x2 density matrix.
pub fn fidelity(psi: &PureState, rho: &DensityMatrix) -> Result<f64> {
    if psi.num_qubits != 1 || rho.dim != 2 {
        return Err(Error::DimensionMismatch(
            "fidelity is defined here for single-qubit state vs 2x2 density matrix".into(),
        ));
    }
    let a = psi.amps[0];
    let b = psi.amps[1];
    let value = a.conj() * (rho.get(0, 0) * a + rho.get(0, 1) * b)
        + b.conj() * (rho.get(1, 0) * a + rho.get(1, 1) * b);
    assert!(
        value.im.abs() < 1e-12,
        "fidelity acquired an imaginary part: {}",
        value.im
    );
    Ok(value.re.clamp(0.0, 1.0))
}

/// The state orthogonal to a single-qubit `psi`: `(alpha, beta) -> (-beta*, alpha*)`.
pub fn orthogonal(psi: &PureState) -> Result<PureState> {
    if psi.num_qubits != 1 {
        return Err(Error::DimensionMismatch(
            "orthogonal complement is defined for single-qubit states".into(),
        ));
    }
    PureState::qubit(-psi.amps[1].conj(), psi.amps[0].conj())
}

/// Haar-distributed single-qubit state; deterministic in the seed.
pub fn haar_random_qubit(seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: f64 = rng.random();
    let theta = (1.0 - 2.0 * u).acos();
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    PureState::from_bloch(theta, phi)
}
