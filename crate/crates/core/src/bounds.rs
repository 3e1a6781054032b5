//! Closed-form fidelity trade-offs, classical baselines, and a solver for
//! reflectivity schedules that make sequential distribution symmetric.

use crate::bell::Reflectivity;
use crate::error::{Error, Result};
use crate::hilbert::PureState;
use crate::protocols::{sequential_teleport, ReflectivitySchedule};

/// Fidelities of the two clones of a one-to-two protocol, each in `[1/2, 1]`.
#[derive(Clone, Copy, Debug)]
pub struct FidelityPair {
    f_s: f64,
    f_sprime: f64,
}

impl FidelityPair {
    const SLACK: f64 = 1e-9;

    pub fn new(f_s: f64, f_sprime: f64) -> Result<Self> {
        for f in [f_s, f_sprime] {
            if !f.is_finite() || !(0.5 - Self::SLACK..=1.0 + Self::SLACK).contains(&f) {
                return Err(Error::InvalidParameter(format!(
                    "clone fidelity {f} outside [1/2, 1]"
                )));
            }
        }
        Ok(FidelityPair { f_s, f_sprime })
    }

    pub fn f_s(self) -> f64 {
        self.f_s
    }

    pub fn f_sprime(self) -> f64 {
        self.f_sprime
    }
}

/// Left minus right side of the cloning trade-off
/// `(1-F_S)(1-F_S') >= (1/2 - (1-F_S) - (1-F_S'))^2`.
///
/// Nonnegative values are reachable by a one-to-two cloner; zero marks the
/// optimal frontier; negative values are forbidden.
pub fn inequality_residual(pair: FidelityPair) -> f64 {
    let d_s = 1.0 - pair.f_s;
    let d_sprime = 1.0 - pair.f_sprime;
    d_s * d_sprime - (0.5 - d_s - d_sprime).powi(2)
}

/// Optimal fidelity of symmetric n -> n+1 cloning,
/// `((n+1)^2 + n) / ((n+1)(n+2))`.
pub fn optimal_fidelity_chain(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter(
            "cloning chain needs at least one input".into(),
        ));
    }
    let nf = n as f64;
    Ok(((nf + 1.0) * (nf + 1.0) + nf) / ((nf + 1.0) * (nf + 2.0)))
}

/// Fidelity of the chain's ancilla against the flipped input,
/// `(n+1)/(n+2)`, the optimal universal-NOT value for n replicas.
pub fn anticlone_fidelity_chain(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter(
            "cloning chain needs at least one input".into(),
        ));
    }
    let nf = n as f64;
    Ok((nf + 1.0) / (nf + 2.0))
}

/// Branch probability of the symmetric chain on n replicas,
/// `2 / ((n+1)(n+2))`.
pub fn chain_success_probability(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter(
            "cloning chain needs at least one input".into(),
        ));
    }
    let nf = n as f64;
    Ok(2.0 / ((nf + 1.0) * (nf + 2.0)))
}

/// Reference fidelities for distributing one qubit to `m` receivers.
#[derive(Clone, Copy, Debug)]
pub struct ClassicalBaselines {
    /// Best classical (measure-and-resend) fidelity, `(1 + 1/m)/2`.
    pub classical: f64,
    /// Optimal universal one-to-m cloning fidelity, `(2m + 1)/(3m)`.
    pub optimal_one_to_m: f64,
}

/// The floor a quantum protocol must beat and the ceiling it cannot exceed.
pub fn classical_baselines(m: usize) -> Result<ClassicalBaselines> {
    if m < 1 {
        return Err(Error::InvalidParameter(
            "baselines need at least one receiver".into(),
        ));
    }
    let mf = m as f64;
    Ok(ClassicalBaselines {
        classical: 0.5 * (1.0 + 1.0 / mf),
        optimal_one_to_m: (2.0 * mf + 1.0) / (3.0 * mf),
    })
}

/// Closed-form output of a single partial teleportation at reflectivity `R`:
/// with `P = 1 - 3R + 3R^2`,
///
/// ```text
/// F_S  = ((1-2R)^2 + (1-R)^2) / 2P
/// F_S' = (R^2 + (1-R)^2) / 2P
/// F_I  = (1-R)^2 / 2P
/// ```
#[derive(Clone, Copy, Debug)]
pub struct TeleportTheory {
    pub f_s: f64,
    pub f_sprime: f64,
    pub f_i: f64,
    pub p_success: f64,
}

pub fn teleport_closed_form(r: Reflectivity) -> TeleportTheory {
    let rv = r.value();
    let p = 1.0 - 3.0 * rv + 3.0 * rv * rv;
    let t = 1.0 - rv;
    let damp = 1.0 - 2.0 * rv;
    TeleportTheory {
        f_s: (damp * damp + t * t) / (2.0 * p),
        f_sprime: (rv * rv + t * t) / (2.0 * p),
        f_i: t * t / (2.0 * p),
        p_success: p,
    }
}

/// Unnormalized weights for finding the flipped state in each output mode of
/// a cloning chain, in closed form. Dividing by `total` gives the per-mode
/// probabilities; `total / 2` is the branch probability of the chain.
#[derive(Clone, Debug)]
pub struct ChainModeWeights {
    /// Weight of replica n (1-based): `R_n^2 prod_{k<n}(1-R_k)^2 prod_{k>n}(1-2R_k)^2`.
    pub replicas: Vec<f64>,
    /// Weight of the teleported clone: `prod_k (1-2R_k)^2`.
    pub teleported: f64,
    /// Weight of the ancilla: `prod_k (1-R_k)^2`.
    pub ancilla: f64,
    /// Sum of all weights.
    pub total: f64,
}

pub fn chain_mode_weights(schedule: &ReflectivitySchedule) -> ChainModeWeights {
    let values = schedule.values();
    let n = values.len();
    let mut replicas = Vec::with_capacity(n);
    for j in 0..n {
        let mut w = values[j] * values[j];
        for (k, &rk) in values.iter().enumerate() {
            if k < j {
                w *= (1.0 - rk) * (1.0 - rk);
            } else if k > j {
                w *= (1.0 - 2.0 * rk) * (1.0 - 2.0 * rk);
            }
        }
        replicas.push(w);
    }
    let teleported = values.iter().map(|&rv| (1.0 - 2.0 * rv).powi(2)).product();
    let ancilla = values.iter().map(|&rv| (1.0 - rv).powi(2)).product();
    let total = replicas.iter().sum::<f64>() + teleported + ancilla;
    ChainModeWeights {
        replicas,
        teleported,
        ancilla,
        total,
    }
}

/// A reflectivity schedule found by the solver, with the replayed evidence.
#[derive(Clone, Debug)]
pub struct ScheduleSolution {
    pub schedule: ReflectivitySchedule,
    /// The shared clone fidelity at the solution.
    pub common_fidelity: f64,
    /// Largest pairwise clone-fidelity difference on the final replay.
    pub residual: f64,
    pub iterations: usize,
}

const SOLVER_MAX_ITER: usize = 60;
const JACOBIAN_STEP: f64 = 1e-6;

/// Finds the reflectivities `R_1 .. R_{m-1}` for which sequential
/// distribution to `m` parties gives every clone the same fidelity.
///
/// Damped Newton iteration on the adjacent fidelity differences, with the
/// fidelities evaluated by the exact simulator; iterates are clamped to
/// `[0, 1/2]^{m-1}`. The returned schedule is replayed once more before the
/// solver reports success, so `residual <= tol` always holds on the result.
pub fn solve_symmetric_schedule(m: usize, tol: f64) -> Result<ScheduleSolution> {
    if !(2..=8).contains(&m) {
        return Err(Error::InvalidParameter(format!(
            "schedule solver handles 2..=8 parties, got {m}"
        )));
    }
    if !tol.is_finite() || tol < 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} below the supported floor 1e-12"
        )));
    }
    let dims = m - 1;
    let probe = PureState::from_bloch(1.0, 0.5);
    let fidelities = |x: &[f64]| -> Result<Vec<f64>> {
        let schedule = ReflectivitySchedule::from_values(x)?;
        let report = sequential_teleport(&probe, &schedule)?;
        Ok(report.per_mode_fidelities.iter().map(|&(_, f)| f).collect())
    };
    let residuals = |x: &[f64]| -> Result<Vec<f64>> {
        let f = fidelities(x)?;
        Ok((0..dims).map(|i| f[i] - f[i + 1]).collect())
    };
    let spread = |f: &[f64]| -> f64 {
        let (lo, hi) = f
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    };

    // Aim well past the requested tolerance so the returned schedule is
    // clean to full print precision; stalling early is still a success as
    // long as the contract tolerance holds.
    let target = (tol * 1e-3).max(1e-13);
    let mut x: Vec<f64> = (1..=dims).map(|k| 1.0 / (k as f64 + 2.0)).collect();
    let mut g = residuals(&x)?;
    let mut iterations = 0;
    while iterations < SOLVER_MAX_ITER {
        let f = fidelities(&x)?;
        let current = spread(&f);
        if current <= target {
            break;
        }
        iterations += 1;

        // Central-difference Jacobian, column per schedule entry.
        let mut jac = vec![vec![0.0; dims]; dims];
        for col in 0..dims {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[col] = (hi[col] + JACOBIAN_STEP).min(0.5);
            lo[col] = (lo[col] - JACOBIAN_STEP).max(0.0);
            let span = hi[col] - lo[col];
            let g_hi = residuals(&hi)?;
            let g_lo = residuals(&lo)?;
            for row in 0..dims {
                jac[row][col] = (g_hi[row] - g_lo[row]) / span;
            }
        }
        let minus_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let Some(dx) = solve_linear(jac, minus_g) else {
            return Err(Error::SolverDidNotConverge {
                iterations,
                residual: norm_inf(&g),
            });
        };

        // Halve the step until the residual norm improves.
        let g_norm = norm_inf(&g);
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-4 {
            let candidate: Vec<f64> = x
                .iter()
                .zip(&dx)
                .map(|(xi, di)| (xi + lambda * di).clamp(0.0, 0.5))
                .collect();
            let g_new = residuals(&candidate)?;
            if norm_inf(&g_new) < g_norm {
                x = candidate;
                g = g_new;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            if current <= tol {
                break;
            }
            return Err(Error::SolverDidNotConverge {
                iterations,
                residual: g_norm,
            });
        }
    }

    // Replay the final schedule; never report success on a stale residual.
    let schedule = ReflectivitySchedule::from_values(&x)?;
    let report = sequential_teleport(&probe, &schedule)?;
    let final_f: Vec<f64> = report.per_mode_fidelities.iter().map(|&(_, f)| f).collect();
    let residual = spread(&final_f);
    if residual > tol {
        return Err(Error::SolverDidNotConverge {
            iterations,
            residual,
        });
    }
    let common_fidelity = final_f.iter().sum::<f64>() / final_f.len() as f64;
    Ok(ScheduleSolution {
        schedule,
        common_fidelity,
        residual,
        iterations,
    })
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Gaussian elimination with partial pivoting; `None` when singular.
#[allow(clippy::needless_range_loop)]
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .expect("finite pivots")
        })?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for col in (row + 1)..n {
            sum -= a[row][col] * x[col];
        }
        x[row] = sum / a[row][row];
    }
    Some(x)
}
