//! Command-line front end for the conditional-teleportation toolkit.
//!
//! Every command writes exactly one table (csv) or object (json) to stdout;
//! diagnostics go to stderr. Exit codes: 0 success, 2 invalid parameters,
//! 3 solver non-convergence, 4 zero-probability outcome.

use std::f64::consts::PI;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use teleclone::bell::Reflectivity;
use teleclone::bounds::solve_symmetric_schedule;
use teleclone::hilbert::PureState;
use teleclone::montecarlo::{mc_clone_chain, mc_partial_teleport, Estimate, ShotConfig};
use teleclone::protocols::{
    clone_chain, locc_reverse_alice, locc_reverse_bob, partial_teleport, sequential_teleport,
    timebin_equivalence, unot_local, CloneReport, Mode, PairOutcome, ReflectivitySchedule,
};
use teleclone::Error;

#[derive(Parser)]
#[command(
    name = "teleclone",
    version,
    about = "Conditional partial teleportation toolkit"
)]
struct Cli {
    /// Polar Bloch angle of the input qubit, radians in [0, pi].
    #[arg(long, global = true, default_value_t = 1.0)]
    theta: f64,
    /// Azimuthal Bloch angle of the input qubit, radians in [0, 2*pi).
    #[arg(long, global = true, default_value_t = 0.5)]
    phi: f64,
    /// Seed for stochastic commands; deterministic ones ignore it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format for the single table or object on stdout.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    /// Restore the receiver's clone to the input state.
    Bob,
    /// Restore the sender's clone to the input state.
    Alice,
}

#[derive(Clone, Copy, ValueEnum)]
enum Outcome {
    /// V on the first measured mode, H on the second.
    Vh,
    /// H on the first measured mode, V on the second.
    Hv,
}

#[derive(Subcommand)]
enum Command {
    /// One partial teleportation at reflectivity R.
    Teleport {
        #[arg(long)]
        r: f64,
    },
    /// Partial teleportation over a reflectivity grid.
    Sweep {
        #[arg(long, default_value_t = 0.0)]
        rmin: f64,
        #[arg(long, default_value_t = 0.5)]
        rmax: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
    /// Symmetric cloning chain on n input replicas.
    Chain {
        #[arg(long)]
        n: usize,
        /// Per-stage reflectivities; defaults to the symmetric schedule.
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<f64>>,
    },
    /// Sequential distribution through an explicit reflectivity schedule.
    Sequence {
        #[arg(long, value_delimiter = ',', required = true)]
        schedule: Vec<f64>,
    },
    /// Undo a partial teleportation from one side after the measurement.
    Reverse {
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum)]
        side: Side,
        #[arg(long, value_enum, default_value = "vh")]
        outcome: Outcome,
    },
    /// Approximate universal flip of the input, from n replicas.
    Unot {
        #[arg(long)]
        n: usize,
    },
    /// Time-bin run at reflectivity R, with and without the correction.
    Timebin {
        #[arg(long)]
        r: f64,
    },
    /// Shot-based estimates; give --r for one stage or --n for a chain.
    Mc {
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
    },
    /// Find the schedule giving all m parties the same fidelity.
    SolveSchedule {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::SolverDidNotConverge { .. } => 3,
        Error::ZeroProbabilityOutcome { .. } | Error::ZeroAcceptedShots => 4,
        _ => 2,
    }
}

fn input_state(cli: &Cli) -> Result<PureState, Error> {
    if !cli.theta.is_finite() || !(0.0..=PI).contains(&cli.theta) {
        return Err(Error::InvalidParameter(format!(
            "theta {} outside [0, pi]",
            cli.theta
        )));
    }
    if !cli.phi.is_finite() || !(0.0..2.0 * PI).contains(&cli.phi) {
        return Err(Error::InvalidParameter(format!(
            "phi {} outside [0, 2*pi)",
            cli.phi
        )));
    }
    Ok(PureState::from_bloch(cli.theta, cli.phi))
}

fn run(cli: &Cli) -> Result<(), Error> {
    let psi = input_state(cli)?;
    match &cli.command {
        Command::Teleport { r } => {
            let rep = partial_teleport(&psi, Reflectivity::new(*r)?)?.report;
            let rows = vec![teleport_row(*r, &rep)];
            emit_rows(cli, "teleport", json!({ "R": sig12(*r) }), &rows)
        }
        Command::Sweep { rmin, rmax, steps } => {
            if *steps < 1 {
                return Err(Error::InvalidParameter(
                    "sweep needs at least one step".into(),
                ));
            }
            if rmax < rmin {
                return Err(Error::InvalidParameter(format!(
                    "empty sweep range [{rmin}, {rmax}]"
                )));
            }
            let mut rows = Vec::with_capacity(*steps);
            for k in 0..*steps {
                let rv = if *steps == 1 {
                    *rmin
                } else {
                    rmin + (rmax - rmin) * k as f64 / (*steps as f64 - 1.0)
                };
                let rep = partial_teleport(&psi, Reflectivity::new(rv)?)?.report;
                rows.push(teleport_row(rv, &rep));
            }
            emit_rows(
                cli,
                "sweep",
                json!({ "rmin": sig12(*rmin), "rmax": sig12(*rmax), "steps": steps }),
                &rows,
            )
        }
        Command::Chain { n, schedule } => {
            let schedule = match schedule {
                Some(values) => Some(ReflectivitySchedule::from_values(values)?),
                None => None,
            };
            let rep = clone_chain(&psi, *n, schedule.as_ref())?;
            let used = schedule.unwrap_or_else(|| ReflectivitySchedule::chain_default(*n));
            let params = json!({ "n": n, "schedule": sig12_list(&used.values()) });
            emit_clone_report(cli, "chain", params, &rep)
        }
        Command::Sequence { schedule } => {
            let schedule = ReflectivitySchedule::from_values(schedule)?;
            let rep = sequential_teleport(&psi, &schedule)?;
            let params = json!({ "schedule": sig12_list(&schedule.values()) });
            emit_clone_report(cli, "sequence", params, &rep)
        }
        Command::Reverse { r, side, outcome } => {
            let rv = Reflectivity::new(*r)?;
            let joint = partial_teleport(&psi, rv)?.joint;
            let pair = match outcome {
                Outcome::Vh => PairOutcome::VH,
                Outcome::Hv => PairOutcome::HV,
            };
            let (restored, probability) = match side {
                Side::Bob => locc_reverse_bob(&joint, pair, rv)?,
                Side::Alice => locc_reverse_alice(&joint, pair, rv)?,
            };
            let fidelity = restored.overlap_sqr(&psi)?;
            let (side_name, outcome_name) = (
                match side {
                    Side::Bob => "bob",
                    Side::Alice => "alice",
                },
                match outcome {
                    Outcome::Vh => "vh",
                    Outcome::Hv => "hv",
                },
            );
            let params = json!({ "R": sig12(*r), "side": side_name, "outcome": outcome_name });
            let quantities = [
                ("restored_fidelity", fidelity),
                ("probability", probability),
            ];
            emit_quantities(cli, "reverse", params, &quantities)
        }
        Command::Unot { n } => {
            let out = unot_local(&psi, *n)?;
            let quantities = [
                ("anticlone_fidelity", out.fidelity_orthogonal),
                ("success_probability", out.success_probability),
            ];
            emit_quantities(cli, "unot", json!({ "n": n }), &quantities)
        }
        Command::Timebin { r } => {
            let out = timebin_equivalence(&psi, Reflectivity::new(*r)?)?;
            let quantities = [
                ("F_S", out.corrected.fidelity_s),
                ("F_Sprime", out.corrected.fidelity_sprime),
                ("F_I", out.corrected.fidelity_i_orthogonal),
                ("P_success", out.corrected.success_probability),
                ("uncorrected_F_Sprime", out.uncorrected_receiver_fidelity),
            ];
            emit_quantities(cli, "timebin", json!({ "R": sig12(*r) }), &quantities)
        }
        Command::Mc { r, n, shots } => match (r, n) {
            (Some(rv), None) => {
                let cfg = ShotConfig::teleport(*shots, cli.seed, Reflectivity::new(*rv)?)?;
                let est = mc_partial_teleport(&psi, &cfg)?;
                let entries = [
                    ("F_S", est.f_s),
                    ("F_Sprime", est.f_sprime),
                    ("F_I", est.f_i),
                    ("P_success", est.success),
                ];
                let params = json!({ "R": sig12(*rv), "shots": shots });
                emit_estimates(cli, "mc", params, &entries)
            }
            (None, Some(n)) => {
                let schedule = ReflectivitySchedule::chain_default(*n);
                let cfg = ShotConfig::chain(*shots, cli.seed, schedule)?;
                let est = mc_clone_chain(&psi, &cfg)?;
                let mut entries: Vec<(String, Estimate)> = est
                    .per_mode
                    .iter()
                    .map(|&(mode, e)| (format!("F_{mode}"), e))
                    .collect();
                entries.push(("P_success".into(), est.success));
                let borrowed: Vec<(&str, Estimate)> =
                    entries.iter().map(|(k, e)| (k.as_str(), *e)).collect();
                let params = json!({ "n": n, "shots": shots });
                emit_estimates(cli, "mc", params, &borrowed)
            }
            _ => Err(Error::InvalidParameter(
                "give exactly one of --r (one stage) or --n (chain)".into(),
            )),
        },
        Command::SolveSchedule { m, tol } => {
            let sol = solve_symmetric_schedule(*m, *tol)?;
            let params = json!({ "m": m, "tol": *tol });
            match cli.format {
                Format::Csv => {
                    let mut out = String::from("quantity,value\n");
                    for (k, v) in sol.schedule.values().iter().enumerate() {
                        out.push_str(&format!("R{},{}\n", k + 1, csv_cell(*v)));
                    }
                    out.push_str(&format!(
                        "common_fidelity,{}\n",
                        csv_cell(sol.common_fidelity)
                    ));
                    out.push_str(&format!("residual,{}\n", csv_cell(sol.residual)));
                    out.push_str(&format!("iterations,{}\n", sol.iterations));
                    print!("{out}");
                    Ok(())
                }
                Format::Json => {
                    let results = json!({
                        "schedule": sig12_list(&sol.schedule.values()),
                        "common_fidelity": sig12(sol.common_fidelity),
                        "residual": sig12(sol.residual),
                        "iterations": sol.iterations,
                    });
                    print_envelope(cli, "solve-schedule", params, results);
                    Ok(())
                }
            }
        }
    }
}

/// Rounds to 12 significant digits so printed values are stable and short.
fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}")
        .parse()
        .expect("round-trip of a finite float")
}

/// CSV cell for a numeric value: plain decimal in the human range,
/// scientific notation for very small magnitudes.
fn csv_cell(x: f64) -> String {
    let v = sig12(x);
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn sig12_list(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| sig12(v)).collect()
}

const ROW_KEYS: [&str; 6] = ["R", "F_S", "F_Sprime", "F_I", "P_success", "ineq_residual"];

fn teleport_row(rv: f64, rep: &CloneReport) -> [f64; 6] {
    [
        rv,
        rep.fidelity_s,
        rep.fidelity_sprime,
        rep.fidelity_i_orthogonal,
        rep.success_probability,
        rep.inequality_residual,
    ]
}

fn print_envelope(cli: &Cli, command: &str, params: Value, results: Value) {
    let envelope = json!({
        "command": command,
        "params": params,
        "results": results,
        "meta": { "seed": cli.seed, "version": env!("CARGO_PKG_VERSION") },
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&envelope).expect("serializable output")
    );
}

fn emit_rows(cli: &Cli, command: &str, params: Value, rows: &[[f64; 6]]) -> Result<(), Error> {
    match cli.format {
        Format::Csv => {
            let mut out = String::from("R,F_S,F_Sprime,F_I,P_success,ineq_residual\n");
            for row in rows {
                let cells: Vec<String> = row.iter().map(|&v| csv_cell(v)).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            print!("{out}");
        }
        Format::Json => {
            let objects: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let mut map = Map::new();
                    for (key, &v) in ROW_KEYS.iter().zip(row.iter()) {
                        map.insert((*key).into(), Value::from(sig12(v)));
                    }
                    Value::Object(map)
                })
                .collect();
            print_envelope(cli, command, params, Value::Array(objects));
        }
    }
    Ok(())
}

fn emit_clone_report(
    cli: &Cli,
    command: &str,
    params: Value,
    rep: &CloneReport,
) -> Result<(), Error> {
    match cli.format {
        Format::Csv => {
            let mut out = String::from("quantity,value\n");
            // The chain report carries the ancilla in per_mode_fidelities; the
            // dedicated F_I row below covers it for every report shape.
            for &(mode, f) in &rep.per_mode_fidelities {
                if mode != Mode::I {
                    out.push_str(&format!("F_{mode},{}\n", csv_cell(f)));
                }
            }
            out.push_str(&format!("F_I,{}\n", csv_cell(rep.fidelity_i_orthogonal)));
            out.push_str(&format!(
                "P_success,{}\n",
                csv_cell(rep.success_probability)
            ));
            print!("{out}");
        }
        Format::Json => {
            let clones: Vec<f64> = rep
                .per_mode_fidelities
                .iter()
                .filter(|&&(mode, _)| mode != Mode::I)
                .map(|&(_, f)| sig12(f))
                .collect();
            let results = json!({
                "clone_fidelities": clones,
                "anticlone_fidelity": sig12(rep.fidelity_i_orthogonal),
                "success_probability": sig12(rep.success_probability),
            });
            print_envelope(cli, command, params, results);
        }
    }
    Ok(())
}

fn emit_quantities(
    cli: &Cli,
    command: &str,
    params: Value,
    quantities: &[(&str, f64)],
) -> Result<(), Error> {
    match cli.format {
        Format::Csv => {
            let mut out = String::from("quantity,value\n");
            for (name, value) in quantities {
                out.push_str(&format!("{name},{}\n", csv_cell(*value)));
            }
            print!("{out}");
        }
        Format::Json => {
            let mut map = Map::new();
            for (name, value) in quantities {
                map.insert((*name).into(), Value::from(sig12(*value)));
            }
            print_envelope(cli, command, params, Value::Object(map));
        }
    }
    Ok(())
}

fn estimate_value(e: &Estimate) -> Value {
    json!({
        "mean": sig12(e.mean),
        "std_error": sig12(e.std_error),
        "n_accepted": e.n_accepted,
        "n_total": e.n_total,
    })
}

fn emit_estimates(
    cli: &Cli,
    command: &str,
    params: Value,
    entries: &[(&str, Estimate)],
) -> Result<(), Error> {
    match cli.format {
        Format::Csv => {
            let mut out = String::from("quantity,mean,std_error,n_accepted,n_total\n");
            for (name, e) in entries {
                out.push_str(&format!(
                    "{name},{},{},{},{}\n",
                    csv_cell(e.mean),
                    csv_cell(e.std_error),
                    e.n_accepted,
                    e.n_total
                ));
            }
            print!("{out}");
        }
        Format::Json => {
            let mut map = Map::new();
            for (name, e) in entries {
                map.insert((*name).into(), estimate_value(e));
            }
            print_envelope(cli, command, params, Value::Object(map));
        }
    }
    Ok(())
}
