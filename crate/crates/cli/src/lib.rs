//! The `cvdv` command line: compile, budget, simulate, compare, lower, and
//! selftest over circuit JSON documents.
//!
//! Exit statuses: 0 on success, 1 when a measured quantity misses its
//! analytic budget (including the selftest), 2 on usage or input errors.

pub mod criteria;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cvdv::budget::{budget_report, choose_dimension, qubits_per_mode};
use cvdv::circuit::CvCircuit;
use cvdv::compare::{run_compare, ExperimentConfig};
use cvdv::dv::{self, QuditCircuit};
use cvdv::fock::{CvState, FockRep};
use cvdv::lowering;
use cvdv::measure::{pdf_cutoff, pdf_modular, pdf_realistic, BinOperators, Model};
use cvdv::simulate::{simulate_model, SimOptions};
use cvdv::ssd::{sanitize, ssd, QuadratureConfig};
use cvdv::{Error, Result};

pub fn cli_main(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too; only real parse failures
            // are usage errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[derive(Parser)]
#[command(name = "cvdv", version, about = "Continuous-variable to qudit transpiler and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a CV circuit document to a qudit circuit
    Compile(CompileArgs),
    /// Evaluate the analytic error and energy budget
    Budget(BudgetArgs),
    /// Evolve one model and print its outcome distribution
    Simulate(SimulateArgs),
    /// Compare the simulation models and check every bound
    Compare(CompareArgs),
    /// Lower a qudit circuit to a qubit circuit
    Lower(LowerArgs),
    /// Run the built-in verification suite
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct CompileArgs {
    /// CV circuit JSON file
    #[arg(long)]
    circuit: PathBuf,
    /// Qudit dimension
    #[arg(long)]
    d: usize,
    /// Write the result here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BudgetArgs {
    /// CV circuit JSON file (circuit mode)
    #[arg(long, conflicts_with_all = ["k", "n", "estar", "epsilon"])]
    circuit: Option<PathBuf>,
    /// Qudit dimension (circuit mode)
    #[arg(long, requires = "circuit")]
    d: Option<usize>,
    /// Input-state energy the ledger starts at; defaults to the vacuum
    #[arg(long, requires = "circuit")]
    energy: Option<f64>,
    /// Cubic rounds K (formula mode)
    #[arg(long = "K", requires = "epsilon")]
    k: Option<usize>,
    /// Mode count n (formula mode)
    #[arg(long, requires = "epsilon")]
    n: Option<usize>,
    /// Energy budget E* (formula mode)
    #[arg(long, requires = "epsilon")]
    estar: Option<f64>,
    /// Target accuracy; picks the smallest sufficient dimension
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    d: usize,
    /// Fock cutoff N_F
    #[arg(long)]
    nf: usize,
    /// Model to evolve: R, C, M, or D
    #[arg(long, value_parser = parse_model)]
    model: Model,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    d: usize,
    /// Fock cutoff N_F, pinned for every route
    #[arg(long)]
    nf: usize,
    /// Comma-separated models; adjacent pairs in chain order are compared
    #[arg(long, value_delimiter = ',', value_parser = parse_model,
          default_value = "R,C,M,D")]
    models: Vec<Model>,
    /// Torus quadrature nodes per axis (odd); defaults adapt to the size
    #[arg(long)]
    nodes: Option<usize>,
    /// Record wall-clock stage timings (makes the report non-reproducible)
    #[arg(long)]
    timings: bool,
    /// Lift the desk-scale caps d <= 64, N_F <= 200
    #[arg(long = "unsafe-large")]
    unsafe_large: bool,
    /// Test hook: corrupt the compiled qudit circuit so bounds must fail
    #[arg(long = "corrupt-dv")]
    corrupt_dv: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LowerArgs {
    /// Compiled qudit circuit JSON file
    #[arg(long, conflicts_with = "circuit")]
    qudit: Option<PathBuf>,
    /// CV circuit JSON file, compiled at --d first
    #[arg(long, requires = "d")]
    circuit: Option<PathBuf>,
    /// Qudit dimension (with --circuit); must be a power of two
    #[arg(long)]
    d: Option<usize>,
    /// Print the qubit circuit as OpenQASM instead of JSON
    #[arg(long)]
    qasm: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Run only these criteria (comma-separated ids 1-12)
    #[arg(long, value_delimiter = ',')]
    only: Vec<usize>,
}

fn parse_model(tag: &str) -> std::result::Result<Model, String> {
    match tag {
        "R" => Ok(Model::Realistic),
        "C" => Ok(Model::Cutoff),
        "M" => Ok(Model::Modular),
        "D" => Ok(Model::Discrete),
        other => Err(format!("unknown model {other:?}; use R, C, M, or D")),
    }
}

fn read_circuit(path: &Path) -> Result<CvCircuit> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    CvCircuit::from_json(&text)
}

fn emit(text: String, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Compile(a) => {
            let circuit = read_circuit(&a.circuit)?;
            let qc = dv::compile(&circuit, a.d)?;
            emit(to_pretty(&qc)?, a.out.as_ref())?;
            Ok(0)
        }
        Command::Budget(a) => run_budget(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Compare(a) => run_compare_cmd(a),
        Command::Lower(a) => run_lower(a),
        Command::Selftest(a) => Ok(run_selftest(&a.only)),
    }
}

fn run_budget(a: BudgetArgs) -> Result<i32> {
    match (a.circuit, a.epsilon) {
        (Some(path), None) => {
            let circuit = read_circuit(&path)?;
            let d = a.d.ok_or_else(|| {
                Error::InvalidArgument("budget over a circuit needs --d".into())
            })?;
            let energy = a.energy.unwrap_or(0.5 * circuit.modes as f64);
            let report = budget_report(&circuit, d, energy)?;
            emit(to_pretty(&report)?, a.out.as_ref())?;
            Ok(0)
        }
        (None, Some(epsilon)) => {
            let (k, n, estar) = match (a.k, a.n, a.estar) {
                (Some(k), Some(n), Some(estar)) => (k, n, estar),
                _ => {
                    return Err(Error::InvalidArgument(
                        "dimension selection needs --K, --n, --estar, --epsilon".into(),
                    ))
                }
            };
            let d = choose_dimension(epsilon, k, n, estar);
            let doc = json!({
                "epsilon": epsilon,
                "K": k,
                "n": n,
                "e_star": estar,
                "d": d,
                "qubits_per_mode": qubits_per_mode(epsilon, k, n, estar),
            });
            emit(to_pretty(&doc)?, a.out.as_ref())?;
            Ok(0)
        }
        _ => Err(Error::InvalidArgument(
            "pass either --circuit with --d, or the template shape with --epsilon".into(),
        )),
    }
}

fn run_simulate(a: SimulateArgs) -> Result<i32> {
    let circuit = read_circuit(&a.circuit)?;
    let opts = SimOptions {
        cutoff_single: a.nf,
        cutoff_two: a.nf,
        max_cutoff_single: a.nf,
        max_cutoff_two: a.nf,
    };
    let rep = FockRep::new(a.nf)?;
    let ops = BinOperators::new(&rep, a.d)?;
    let p = match a.model {
        Model::Realistic => {
            let (state, _) = simulate_model(&circuit, a.d, Model::Realistic, &opts)?;
            pdf_realistic(&state, &ops)?
        }
        Model::Cutoff => {
            let (state, _) = simulate_model(&circuit, a.d, Model::Cutoff, &opts)?;
            pdf_cutoff(&state, &ops)?
        }
        Model::Modular => {
            let (state, _) = simulate_model(&circuit, a.d, Model::Cutoff, &opts)?;
            pdf_modular(&state, &ops)?
        }
        Model::Discrete => {
            let mut input = CvState::vacuum(circuit.modes, a.nf);
            for mode in 0..circuit.modes {
                input.conjugate_on(&ops.window, &[mode]);
            }
            input.hermitize();
            input.renormalize();
            let qcfg = QuadratureConfig::defaults(circuit.modes, a.nf, a.d);
            let (raw, _) = ssd(&input, a.d, &qcfg)?;
            let (clean, _) = sanitize(&raw)?;
            let qc = dv::compile(&circuit, a.d)?;
            let evolved = dv::apply(&clean, &qc)?;
            dv::pdf_dv(&evolved)?
        }
    };
    emit(to_pretty(&p)?, a.out.as_ref())?;
    Ok(0)
}

fn run_compare_cmd(a: CompareArgs) -> Result<i32> {
    let circuit = read_circuit(&a.circuit)?;
    let quadrature = a.nodes.map(|nodes| QuadratureConfig {
        nodes,
        ..QuadratureConfig::defaults(circuit.modes, a.nf, a.d)
    });
    let cfg = ExperimentConfig {
        circuit,
        d: a.d,
        n_fock: a.nf,
        models: a.models,
        quadrature,
        deterministic: !a.timings,
        allow_large: a.unsafe_large,
        corrupt_dv: a.corrupt_dv,
    };
    let report = run_compare(&cfg)?;
    let passed = report.passed();
    emit(to_pretty(&report)?, a.out.as_ref())?;
    Ok(if passed { 0 } else { 1 })
}

fn run_lower(a: LowerArgs) -> Result<i32> {
    let qc: QuditCircuit = match (a.qudit, a.circuit) {
        (Some(path), None) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)?
        }
        (None, Some(path)) => {
            let d = a.d.ok_or_else(|| {
                Error::InvalidArgument("lowering a CV circuit needs --d".into())
            })?;
            dv::compile(&read_circuit(&path)?, d)?
        }
        _ => {
            return Err(Error::InvalidArgument(
                "pass exactly one of --qudit or --circuit".into(),
            ))
        }
    };
    if !qc.d.is_power_of_two() || qc.d < 2 {
        return Err(Error::InvalidArgument(format!(
            "qudit dimension {} is not a power of two",
            qc.d
        )));
    }
    let k = qc.d.trailing_zeros() as usize;
    let (qbc, report) = lowering::lower(&qc, k)?;
    let text = if a.qasm {
        qbc.to_qasm()
    } else {
        to_pretty(&json!({ "report": report, "circuit": qbc }))?
    };
    emit(text, a.out.as_ref())?;
    Ok(0)
}

fn run_selftest(only: &[usize]) -> i32 {
    let mut all_pass = true;
    for outcome in criteria::run_suite(only) {
        let verdict = if outcome.passed { "pass" } else { "FAIL" };
        println!("criterion {:02} {:<44} {} ({})", outcome.id, outcome.name, verdict, outcome.detail);
        all_pass &= outcome.passed;
    }
    if all_pass {
        0
    } else {
        1
    }
}
