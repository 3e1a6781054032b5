//! The conditional two-qubit map implemented by an unbalanced beam splitter
//! followed by post-selection on both photons leaving separately.
//!
//! For reflectivity `R` the successful branch applies
//!
//! ```text
//! Pi(R) = (1 - 2R) * I4 + 2R * |psi-><psi-|
//! ```
//!
//! where `|psi-> = (|VH> - |HV>)/sqrt(2)`. The operator is Hermitian with
//! spectrum `{1, 1-2R, 1-2R, 1-2R}`: the singlet component always survives,
//! the triplet components are damped. `R = 0` is the identity (no interaction)
//! and `R = 1/2` is the full singlet projection of standard teleportation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{Amplitude, PureState};

/// Beam-splitter reflectivity, restricted to the protocol range `[0, 1/2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reflectivity(f64);

impl Reflectivity {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || !(0.0..=0.5).contains(&value) {
            return Err(Error::ReflectivityOutOfRange(value));
        }
        Ok(Reflectivity(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Transmissivity `T = 1 - R`.
    pub fn transmissivity(self) -> f64 {
        1.0 - self.0
    }
}

/// A conditional (trace-non-increasing) operator on one qubit or on a qubit
/// pair: the successful beam-splitter branch, its failure complement, and the
/// local restoration filters all take this form.
#[derive(Clone, Debug)]
pub struct ConditionalMap {
    matrix: MapMatrix,
    label: String,
}

#[derive(Clone, Debug)]
pub enum MapMatrix {
    Single([[Amplitude; 2]; 2]),
    Pair([[Amplitude; 4]; 4]),
}

impl ConditionalMap {
    const NORM_SLACK: f64 = 1.0 + 1e-12;

    pub fn single_qubit(matrix: [[Amplitude; 2]; 2], label: impl Into<String>) -> Result<Self> {
        Self::checked(MapMatrix::Single(matrix), label.into())
    }

    pub fn two_qubit(matrix: [[Amplitude; 4]; 4], label: impl Into<String>) -> Result<Self> {
        Self::checked(MapMatrix::Pair(matrix), label.into())
    }

    fn checked(matrix: MapMatrix, label: String) -> Result<Self> {
        let map = ConditionalMap { matrix, label };
        let norm = map.spectral_norm();
        if norm > Self::NORM_SLACK {
            return Err(Error::InvalidParameter(format!(
                "conditional map '{}' amplifies: spectral norm {norm}",
                map.label
            )));
        }
        Ok(map)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &MapMatrix {
        &self.matrix
    }

    fn dim(&self) -> usize {
        match self.matrix {
            MapMatrix::Single(_) => 2,
            MapMatrix::Pair(_) => 4,
        }
    }

    fn entry(&self, row: usize, col: usize) -> Amplitude {
        match &self.matrix {
            MapMatrix::Single(m) => m[row][col],
            MapMatrix::Pair(m) => m[row][col],
        }
    }

    /// Largest singular value, from power iteration on the Gram matrix.
    pub fn spectral_norm(&self) -> f64 {
        let d = self.dim();
        // gram = M^dagger M, Hermitian positive semidefinite.
        let mut gram = vec![Complex64::ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                gram[i * d + j] = (0..d)
                    .map(|k| self.entry(k, i).conj() * self.entry(k, j))
                    .sum();
            }
        }
        // Deterministic start with unequal components so no eigenvector is missed.
        let mut v: Vec<Complex64> = (0..d)
            .map(|i| Complex64::new(1.0 + i as f64 * 0.3, 0.1 * (i as f64 + 1.0)))
            .collect();
        let mut lambda = 0.0;
        for _ in 0..200 {
            let mut w = vec![Complex64::ZERO; d];
            for i in 0..d {
                w[i] = (0..d).map(|j| gram[i * d + j] * v[j]).sum();
            }
            let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            for x in &mut w {
                *x /= norm;
            }
            v = w;
        }
        lambda.sqrt()
    }

    /// Applies a pair map, returning the unnormalized branch and its squared
    /// norm (the branch probability when the input is normalized).
    pub fn apply(&self, state: &PureState, qubits: (usize, usize)) -> Result<(PureState, f64)> {
        let MapMatrix::Pair(m) = &self.matrix else {
            return Err(Error::DimensionMismatch(format!(
                "'{}' is a single-qubit map; use apply_to_qubit",
                self.label
            )));
        };
        let out = state.apply_two_qubit(m, qubits)?;
        let prob = out.norm_sqr();
        Ok((out, prob))
    }

    /// Applies a single-qubit map to qubit `q`; same return convention as
    /// [`ConditionalMap::apply`].
    pub fn apply_to_qubit(&self, state: &PureState, q: usize) -> Result<(PureState, f64)> {
        let MapMatrix::Single(m) = &self.matrix else {
            return Err(Error::DimensionMismatch(format!(
                "'{}' is a pair map; use apply",
                self.label
            )));
        };
        let out = state.apply_single_qubit(m, q)?;
        let prob = out.norm_sqr();
        Ok((out, prob))
    }

    /// `<state| M |state>` with a pair map embedded at `qubits`.
    pub fn expectation_on(&self, state: &PureState, qubits: (usize, usize)) -> Result<f64> {
        let MapMatrix::Pair(m) = &self.matrix else {
            return Err(Error::DimensionMismatch(format!(
                "'{}' is a single-qubit map; expectation_on takes pair maps",
                self.label
            )));
        };
        let applied = state.apply_two_qubit(m, qubits)?;
        let value = state.inner(&applied)?;
        assert!(
            value.im.abs() < 1e-12,
            "expectation of a Hermitian map acquired an imaginary part: {}",
            value.im
        );
        Ok(value.re)
    }
}

/// The successful post-selected branch of the unbalanced beam splitter.
pub fn projector(r: Reflectivity) -> ConditionalMap {
    let rv = r.value();
    let t2 = Complex64::new(1.0 - 2.0 * rv, 0.0); // 1 - 2R, the triplet damping
    let d = Complex64::new(1.0 - rv, 0.0);
    let o = Complex64::new(-rv, 0.0);
    let z = Complex64::ZERO;
    let matrix = [[t2, z, z, z], [z, d, o, z], [z, o, d, z], [z, z, z, t2]];
    ConditionalMap::two_qubit(matrix, format!("pair projector R={rv}"))
        .expect("the projector never amplifies for R in [0, 1/2]")
}

/// The failure complement `I - Pi(R)^2`, a positive operator whose expectation
/// is the probability that post-selection rejects the event.
pub fn failure_complement(r: Reflectivity) -> ConditionalMap {
    let pi = projector(r);
    let mut matrix = [[Complex64::ZERO; 4]; 4];
    #[allow(clippy::needless_range_loop)]
    for i in 0..4 {
        for j in 0..4 {
            let prod: Complex64 = (0..4).map(|k| pi.entry(i, k) * pi.entry(k, j)).sum();
            matrix[i][j] = if i == j { Complex64::ONE - prod } else { -prod };
        }
    }
    ConditionalMap::two_qubit(matrix, format!("failure complement R={}", r.value()))
        .expect("the failure complement is a POVM element")
}

/// Checks that the projector acts on two-photon product states with the
/// transmission/reflection amplitudes expected of the beam splitter:
/// `|psi psi> -> (T - R)|psi psi>` and
/// `|psi psi_perp> -> T |psi psi_perp> - R |psi_perp psi>`, with `T = 1 - R`.
pub fn pair_action_consistent(r: Reflectivity, psi: &PureState) -> Result<bool> {
    if psi.num_qubits() != 1 {
        return Err(Error::DimensionMismatch(
            "pair action check takes a single-qubit state".into(),
        ));
    }
    let tol = 1e-12;
    let rv = r.value();
    let t = 1.0 - rv;
    let perp = crate::hilbert::orthogonal(psi)?;
    let pi = projector(r);

    let both = psi.tensor(psi)?;
    let (mapped, _) = pi.apply(&both, (0, 1))?;
    let mut ok = close(&mapped, &scaled(&both, t - rv), tol);

    let cross = psi.tensor(&perp)?;
    let swapped = perp.tensor(psi)?;
    let (mapped, _) = pi.apply(&cross, (0, 1))?;
    let expected = add(&scaled(&cross, t), &scaled(&swapped, -rv));
    ok &= close(&mapped, &expected, tol);
    Ok(ok)
}

/// Embeds the successful branch at `qubits` of `state`; returns the
/// unnormalized branch state and its squared norm.
pub fn apply_conditional(
    state: &PureState,
    qubits: (usize, usize),
    r: Reflectivity,
) -> Result<(PureState, f64)> {
    projector(r).apply(state, qubits)
}

fn scaled(state: &PureState, factor: f64) -> PureState {
    let amps = state
        .amplitudes()
        .iter()
        .map(|a| a * factor)
        .collect::<Vec<_>>();
    PureState::from_amplitudes(state.num_qubits(), amps).expect("same register size")
}

fn add(a: &PureState, b: &PureState) -> PureState {
    let amps = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x + y)
        .collect::<Vec<_>>();
    PureState::from_amplitudes(a.num_qubits(), amps).expect("same register size")
}

fn close(a: &PureState, b: &PureState, tol: f64) -> bool {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .all(|(x, y)| (x - y).norm() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::haar_random_qubit;

    /// Success probability of the canonical `|psi>|singlet>` input.
    fn branch_probability(r: f64, seed: u64) -> f64 {
        let psi = haar_random_qubit(seed);
        let joint = psi.tensor(&PureState::singlet()).unwrap();
        let (_, p) = apply_conditional(&joint, (0, 1), Reflectivity::new(r).unwrap()).unwrap();
        p
    }

    /// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
    /// Test-side oracle, independent of the operator's algebraic structure.
    #[allow(clippy::needless_range_loop)]
    fn jacobi_eigenvalues(mut m: [[f64; 4]; 4]) -> [f64; 4] {
        for _sweep in 0..60 {
            let mut off = 0.0;
            for p in 0..4 {
                for q in (p + 1)..4 {
                    off += m[p][q] * m[p][q];
                }
            }
            if off < 1e-26 {
                break;
            }
            for p in 0..4 {
                for q in (p + 1)..4 {
                    if m[p][q].abs() < 1e-15 {
                        continue;
                    }
                    let theta = 0.5 * (2.0 * m[p][q]).atan2(m[q][q] - m[p][p]);
                    let (c, s) = (theta.cos(), theta.sin());
                    for k in 0..4 {
                        let (mkp, mkq) = (m[k][p], m[k][q]);
                        m[k][p] = c * mkp - s * mkq;
                        m[k][q] = s * mkp + c * mkq;
                    }
                    for k in 0..4 {
                        let (mpk, mqk) = (m[p][k], m[q][k]);
                        m[p][k] = c * mpk - s * mqk;
                        m[q][k] = s * mpk + c * mqk;
                    }
                }
            }
        }
        let mut eigs = [m[0][0], m[1][1], m[2][2], m[3][3]];
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eigs
    }

    fn real_matrix(map: &ConditionalMap) -> [[f64; 4]; 4] {
        let MapMatrix::Pair(m) = map.matrix() else {
            panic!("expected a pair map")
        };
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                assert!(m[i][j].im.abs() < 1e-15);
                out[i][j] = m[i][j].re;
            }
        }
        out
    }

    #[test]
    fn reflectivity_rejects_out_of_range_values() {
        assert!(Reflectivity::new(0.6).is_err());
        assert!(Reflectivity::new(-0.01).is_err());
        assert!(Reflectivity::new(f64::NAN).is_err());
        assert!(Reflectivity::new(0.0).is_ok());
        assert!(Reflectivity::new(0.5).is_ok());
    }

    #[test]
    fn spectrum_is_one_plus_triple_damping() {
        for &(r, damped) in &[(1.0 / 3.0, 1.0 / 3.0), (0.1, 0.8), (0.45, 0.1)] {
            let eigs = jacobi_eigenvalues(real_matrix(&projector(Reflectivity::new(r).unwrap())));
            for e in &eigs[..3] {
                assert!((e - damped).abs() < 1e-12, "R={r}: {eigs:?}");
            }
            assert!((eigs[3] - 1.0).abs() < 1e-12, "R={r}: {eigs:?}");
        }
    }

    #[test]
    fn endpoints_are_identity_and_singlet_projection() {
        let id = real_matrix(&projector(Reflectivity::new(0.0).unwrap()));
        for (i, row) in id.iter().enumerate() {
            for (j, value) in row.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((value - expect).abs() < 1e-15);
            }
        }
        let half = real_matrix(&projector(Reflectivity::new(0.5).unwrap()));
        let eigs = jacobi_eigenvalues(half);
        assert!(eigs[..3].iter().all(|e| e.abs() < 1e-12));
        assert!((eigs[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_never_amplifies() {
        for k in 0..=50 {
            let r = Reflectivity::new(k as f64 * 0.01).unwrap();
            assert!(projector(r).spectral_norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn pair_action_holds_across_reflectivities_and_states() {
        for k in 0..=20 {
            let r = Reflectivity::new(k as f64 * 0.025).unwrap();
            for seed in 0..5 {
                assert!(pair_action_consistent(r, &haar_random_qubit(seed)).unwrap());
            }
        }
    }

    #[test]
    fn success_probability_is_state_independent() {
        // P(R) = 1 - 3R + 3R^2 for the canonical |psi>|singlet> input.
        for &(r, expect) in &[(1.0 / 3.0, 1.0 / 3.0), (0.5, 0.25), (0.0, 1.0)] {
            let p = branch_probability(r, 11);
            assert!((p - expect).abs() < 1e-12, "R={r}: {p}");
        }
        let probs: Vec<f64> = (0..100)
            .map(|seed| branch_probability(0.21, seed))
            .collect();
        let (min, max) = probs
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        assert!(max - min < 1e-10, "spread {}", max - min);
    }

    #[test]
    fn success_and_failure_probabilities_are_complete() {
        for k in 0..=10 {
            let r = Reflectivity::new(k as f64 * 0.05).unwrap();
            for seed in 0..10 {
                let state = haar_random_qubit(seed)
                    .tensor(&haar_random_qubit(seed + 1000))
                    .unwrap();
                let (_, p_success) = apply_conditional(&state, (0, 1), r).unwrap();
                let p_fail = failure_complement(r)
                    .expectation_on(&state, (0, 1))
                    .unwrap();
                assert!((p_success + p_fail - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projector_is_invariant_under_joint_rotations() {
        // (U x U) Pi (U x U)^dagger = Pi: the map is universal.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let theta = rng.random::<f64>() * std::f64::consts::PI;
            let phi = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
            let chi = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
            let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let u = [
                [Complex64::new(ct, 0.0), -Complex64::from_polar(st, chi)],
                [
                    Complex64::from_polar(st, phi),
                    Complex64::from_polar(ct, phi + chi),
                ],
            ];
            let mut uu = [[Complex64::ZERO; 4]; 4];
            for r1 in 0..2 {
                for c1 in 0..2 {
                    for r2 in 0..2 {
                        for c2 in 0..2 {
                            uu[2 * r1 + r2][2 * c1 + c2] = u[r1][c1] * u[r2][c2];
                        }
                    }
                }
            }
            let pi = projector(Reflectivity::new(0.27).unwrap());
            let MapMatrix::Pair(p) = pi.matrix() else {
                unreachable!()
            };
            // Conjugate: rotated = UU * P * UU^dagger.
            let mut tmp = [[Complex64::ZERO; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    tmp[i][j] = (0..4).map(|k| uu[i][k] * p[k][j]).sum();
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    let rotated: Complex64 = (0..4).map(|k| tmp[i][k] * uu[j][k].conj()).sum();
                    assert!(
                        (rotated - p[i][j]).norm() < 1e-10,
                        "twirl moved entry ({i}, {j}): {rotated} vs {}",
                        p[i][j]
                    );
                }
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn branch_probabilities_are_physical(
                r in 0.0f64..=0.5,
                seed_a in 0u64..500,
                seed_b in 500u64..1000,
            ) {
                let r = Reflectivity::new(r).unwrap();
                let state = haar_random_qubit(seed_a)
                    .tensor(&haar_random_qubit(seed_b))
                    .unwrap();
                let (_, p) = apply_conditional(&state, (0, 1), r).unwrap();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
                let p_fail = failure_complement(r).expectation_on(&state, (0, 1)).unwrap();
                prop_assert!((p + p_fail - 1.0).abs() < 1e-12);
            }
        }
    }
}
