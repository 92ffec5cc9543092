//! `qca`: compile circuits to lattice programs, run them and verify runs.

mod error;
mod files;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex;
use qca_core::compiler::compile;
use qca_core::dense::{
    sample_distribution, ColumnAssignment, StateVector, MAX_DENSE_QUBITS, SAMPLER_NAME,
};
use qca_core::factored::FactoredState;
use qca_core::gatekit::build_tau;
use qca_core::verify::{run_checks, Fault};
use qca_core::{LatticeSpec, QcaError, Topology};

use crate::error::{CliError, CliResult};
use crate::files::{
    amplitude_json, emit, matrix_dump, read_circuit, read_json, ProgramFile, RegisterOutput,
    RunOutput,
};

#[derive(Debug, Parser)]
#[command(
    name = "qca",
    version,
    about = "Programmable quantum cellular automaton toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile a circuit file into a program file.
    Compile {
        circuit: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve a program and report data register 0.
    Run {
        program: PathBuf,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Run the verification checks on a program and print a JSON report.
    Verify {
        program: PathBuf,
        #[arg(long, value_enum, default_value_t = TopologyArg::Torus)]
        topology: TopologyArg,
        /// Flip the qubit at COLUMN:ROW before checking (negative control).
        #[arg(long, value_name = "COLUMN:ROW")]
        flip_bit: Option<SitePair>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the 16x16 cell transition matrix.
    Tau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Dense,
    Factored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TopologyArg {
    Torus,
    Planar,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Torus => Topology::Torus,
            TopologyArg::Planar => Topology::Planar,
        }
    }
}

/// A step count or `auto` (= r).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Steps {
    Auto,
    Count(usize),
}

impl FromStr for Steps {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Steps::Auto);
        }
        s.parse()
            .map(Steps::Count)
            .map_err(|_| format!("expected a step count or \"auto\", got {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SitePair {
    column: usize,
    row: usize,
}

impl FromStr for SitePair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (c, r) = s
            .split_once(':')
            .ok_or_else(|| format!("expected COLUMN:ROW, got {s:?}"))?;
        let parse = |v: &str| v.parse().map_err(|_| format!("not an index: {v:?}"));
        Ok(SitePair {
            column: parse(c)?,
            row: parse(r)?,
        })
    }
}

#[derive(Debug, Args)]
struct RunConfig {
    #[arg(long, value_enum, default_value_t = Backend::Dense)]
    backend: Backend,
    #[arg(long, value_enum, default_value_t = TopologyArg::Torus)]
    topology: TopologyArg,
    /// Number of steps, or `auto` for r.
    #[arg(long, default_value = "auto")]
    steps: Steps,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report this many measurement samples instead of amplitudes.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_program(
    path: &Path,
    topology: Topology,
) -> CliResult<(LatticeSpec, ColumnAssignment<f64>)> {
    let file: ProgramFile = read_json(path)?;
    let programs = file.programs()?;
    let spec = LatticeSpec::new(file.s, file.r, topology)?;
    let assign = match file.registers() {
        Some(data) => ColumnAssignment { data, programs },
        None => ColumnAssignment::zero_data(&spec, programs),
    };
    assign.validate(&spec)?;
    Ok((spec, assign))
}

fn cmd_compile(circuit: &Path, out: Option<&Path>) -> CliResult<()> {
    let circuit = read_circuit(circuit)?;
    let compiled = compile(&circuit)?;
    let file = ProgramFile::from_programs(compiled.s(), &compiled.programs());
    let text = serde_json::to_string_pretty(&file).expect("program file serializes");
    emit(out, &text)
}

/// Rotates `v` so its largest-magnitude amplitude is real and positive.
fn fix_phase(v: &mut [Complex<f64>]) {
    let k = (0..v.len())
        .max_by(|&a, &b| v[a].norm_sqr().total_cmp(&v[b].norm_sqr()))
        .expect("non-empty register");
    let ph = v[k].conj() / v[k].norm();
    for a in v.iter_mut() {
        *a *= ph;
    }
}

fn cmd_run(program: &Path, config: &RunConfig) -> CliResult<()> {
    let topology = Topology::from(config.topology);
    if config.backend == Backend::Factored && topology == Topology::Planar {
        return Err(CliError::Config(
            "the factored backend only supports the torus topology".into(),
        ));
    }
    let (spec, assign) = load_program(program, topology)?;
    if config.backend == Backend::Dense && spec.num_qubits() > MAX_DENSE_QUBITS {
        return Err(QcaError::MemoryGuard {
            qubits: spec.num_qubits(),
            limit: MAX_DENSE_QUBITS,
        }
        .into());
    }
    let steps = match config.steps {
        Steps::Auto => spec.r(),
        Steps::Count(n) => n,
    };
    if topology == Topology::Planar && steps >= spec.width() {
        return Err(CliError::Config(format!(
            "on a planar sheet register 0 reaches the right edge after {} steps",
            spec.width() - 1
        )));
    }
    let column = steps % spec.width();

    let (mut vector, purity, probs) = match config.backend {
        Backend::Dense => {
            let mut state = StateVector::init(&assign, spec)?;
            state.run(steps);
            let rho = state.column_marginal(column)?;
            let (v, purity) = rho.dominant_state();
            let probs = state.column_probabilities(column)?;
            (v, purity, probs)
        }
        Backend::Factored => {
            let mut state = FactoredState::init(&assign, spec)?;
            state.run(steps);
            let v = state.output_register(true)?.to_vec();
            let probs = v.iter().map(|a| a.norm_sqr()).collect();
            (v, 1.0, probs)
        }
    };
    fix_phase(&mut vector);

    let height = spec.height();
    let (amplitudes, samples) = match config.samples {
        Some(n) => {
            let outcomes = sample_distribution(&probs, config.seed, n);
            let bits = outcomes
                .into_iter()
                .map(|k| {
                    (0..height)
                        .map(|y| if (k >> y) & 1 == 1 { '1' } else { '0' })
                        .collect()
                })
                .collect();
            (None, Some(bits))
        }
        None => (
            Some(vector.iter().map(|&a| amplitude_json(a)).collect()),
            None,
        ),
    };
    let output = RunOutput {
        backend: match config.backend {
            Backend::Dense => "dense".into(),
            Backend::Factored => "factored".into(),
        },
        topology: topology.to_string(),
        s: spec.s(),
        r: spec.r(),
        t: steps,
        seed: config.seed,
        sampler: SAMPLER_NAME.into(),
        register: RegisterOutput {
            index: 0,
            column,
            purity,
            amplitudes,
            samples,
        },
    };
    let text = serde_json::to_string_pretty(&output).expect("run output serializes");
    emit(config.out.as_deref(), &text)
}

fn cmd_verify(
    program: &Path,
    topology: TopologyArg,
    flip_bit: Option<SitePair>,
    out: Option<&Path>,
) -> CliResult<()> {
    let (spec, assign) = load_program(program, topology.into())?;
    let fault = flip_bit.map(|p| Fault {
        column: p.column,
        row: p.row,
    });
    let records = run_checks(&assign, spec, fault)?;
    let text = serde_json::to_string_pretty(&records).expect("report serializes");
    emit(out, &text)?;
    let mut failed: Vec<String> = records
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.check.clone())
        .collect();
    failed.sort();
    failed.dedup();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Compile { circuit, out } => cmd_compile(&circuit, out.as_deref()),
        Command::Run { program, config } => cmd_run(&program, &config),
        Command::Verify {
            program,
            topology,
            flip_bit,
            out,
        } => cmd_verify(&program, topology, flip_bit, out.as_deref()),
        Command::Tau => {
            print!("{}", matrix_dump(&build_tau::<f64>()));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
