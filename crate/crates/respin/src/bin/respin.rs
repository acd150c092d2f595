use clap::{Parser, Subcommand, ValueEnum};
use respin::adapt::{adapt_circuit_with, baseline_direct, build_circuit_model_with};
use respin::bench::{load_cost_model, rows_to_csv, run_experiment, ExperimentConfig};
use respin::circuit::{parse_circuit, serialize_circuit, Circuit};
use respin::model::{emit_smtlib, Objective};
use respin::noise::{noise_from_cost, simulate_distribution, statevector_probs};
use respin::rules::{load_rules, RuleLibrary};
use std::path::PathBuf;
use std::process::ExitCode;

/// Re-target quantum circuits to gate sets with multiple two-qubit
/// realizations.
#[derive(Parser)]
#[command(name = "respin", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Fidelity,
    Idle,
    Combined,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Objective {
        match o {
            ObjectiveArg::Fidelity => Objective::Fidelity,
            ObjectiveArg::Idle => Objective::IdleTime,
            ObjectiveArg::Combined => Objective::Combined,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Internal,
    EmitSmt,
}

#[derive(Subcommand)]
enum Command {
    /// Adapt a circuit to the target gate set of a cost model.
    Adapt {
        /// Circuit text file.
        circuit: PathBuf,
        /// Cost model: a preset name (spin_d0, spin_d1) or a JSON file.
        #[arg(long)]
        cost: String,
        #[arg(long, value_enum, default_value = "combined")]
        objective: ObjectiveArg,
        /// Solve internally or emit an SMT-LIB2 script instead.
        #[arg(long, value_enum, default_value = "internal")]
        solver: SolverArg,
        /// Extra substitution rules (JSON; verified on load).
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the optimization model as an SMT-LIB2 script.
    EmitSmt {
        circuit: PathBuf,
        #[arg(long)]
        cost: String,
        #[arg(long, value_enum, default_value = "combined")]
        objective: ObjectiveArg,
        /// Extra substitution rules (JSON; verified on load).
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the direct adaptation of a circuit under the cost model's
    /// noise; prints a JSON bitstring-to-probability map.
    Sim {
        circuit: PathBuf,
        #[arg(long)]
        cost: String,
        /// Print the ideal (noiseless) source distribution instead.
        #[arg(long)]
        ideal: bool,
    },
    /// Run a benchmark experiment from a JSON config and write CSV rows.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
}

fn read_circuit(path: &PathBuf) -> Result<Circuit, respin::Error> {
    parse_circuit(&std::fs::read_to_string(path)?)
}

fn write_out(out: &Option<PathBuf>, content: &str) -> Result<(), respin::Error> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn rule_library(rules: &Option<PathBuf>) -> Result<RuleLibrary, respin::Error> {
    let mut lib = RuleLibrary::standard();
    if let Some(path) = rules {
        lib = lib.with_rules(load_rules(&std::fs::read_to_string(path)?)?);
    }
    Ok(lib)
}

fn run() -> Result<(), respin::Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Adapt {
            circuit,
            cost,
            objective,
            solver,
            rules,
            out,
        } => {
            let c = read_circuit(&circuit)?;
            let cm = load_cost_model(&cost)?;
            let lib = rule_library(&rules)?;
            match solver {
                SolverArg::EmitSmt => {
                    let model = build_circuit_model_with(&c, &cm, objective.into(), &lib)?;
                    write_out(&out, &emit_smtlib(&model))?;
                }
                SolverArg::Internal => {
                    let outcome = adapt_circuit_with(&c, &cm, objective.into(), &lib)?;
                    let mut text = serialize_circuit(&outcome.adapted.circuit);
                    text.push('\n');
                    write_out(&out, &text)?;
                    eprintln!(
                        "chosen substitutions: {}",
                        outcome
                            .assignment
                            .chosen
                            .iter()
                            .map(|s| outcome.matches[*s].rule.clone())
                            .collect::<Vec<_>>()
                            .join(", ")
                    );
                    eprintln!(
                        "sum_log_fidelity: {:.6}  makespan_ns: {:.1}  idle_ns: {:.1}",
                        outcome.adapted.sum_log_fidelity,
                        outcome.adapted.makespan_ns,
                        outcome.adapted.idle_ns
                    );
                }
            }
        }
        Command::EmitSmt {
            circuit,
            cost,
            objective,
            rules,
            out,
        } => {
            let c = read_circuit(&circuit)?;
            let cm = load_cost_model(&cost)?;
            let lib = rule_library(&rules)?;
            let model = build_circuit_model_with(&c, &cm, objective.into(), &lib)?;
            write_out(&out, &emit_smtlib(&model))?;
        }
        Command::Sim {
            circuit,
            cost,
            ideal,
        } => {
            let c = read_circuit(&circuit)?;
            let cm = load_cost_model(&cost)?;
            let dist = if ideal {
                statevector_probs(&c)?
            } else {
                let adapted = baseline_direct(&c, &cm)?;
                let nm = noise_from_cost(&cm)?;
                simulate_distribution(&adapted, &nm)?
            };
            println!("{}", serde_json::to_string_pretty(&dist)?);
        }
        Command::Bench { config } => {
            let cfg: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(&config)?)?;
            let rows = run_experiment(&cfg)?;
            let csv = rows_to_csv(&rows);
            match &cfg.out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
