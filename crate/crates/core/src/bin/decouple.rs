//! Command-line driver.
//!
//! Exit codes: 0 on success, 2 for bad input, 3 for numerical failure. Errors
//! are printed to stderr as a single line:
//!
//! ```text
//! error kind=<tag> code=<exit code> message="<json-escaped text>"
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use decoupling::aht::{avg_hamiltonian_report, theorem1_enumerate};
use decoupling::evolution::{curve_csv, resume, train, EvolutionConfig, TrainOptions, TrainOutcome};
use decoupling::harness::{evaluate_sequence, load_sequence, run_sweep, sweep_csv, write_sweep, SweepSpec};
use decoupling::quantum::{Boundary, CouplingGraph, DisorderRealization, SpinBasis};
use decoupling::sequence::{
    emit_sequence_file, phase_shift_pi, phase_shift_pi_all, rotate, symmetrize, yxx_expand, ImperfectionSet,
    PulseSequence,
};
use decoupling::{Error, Result};

#[derive(Parser)]
#[command(name = "decouple", version, about = "Decoupling sequence workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity and correlations of one sequence under one condition.
    Simulate(SimulateArgs),
    /// Run a SweepSpec file and emit CSV (or JSON for a .json output).
    Sweep {
        spec: PathBuf,
        /// Overrides the spec's output path; `-` prints CSV to stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train from an EvolutionConfig file, or resume a checkpoint directory.
    Train {
        config: Option<PathBuf>,
        /// Checkpoint directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["config", "out"])]
        resume: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Average-Hamiltonian report of a sequence (JSON).
    Aht {
        #[arg(long)]
        seq: String,
        /// Also compute first-order norms on an open chain of this many spins.
        #[arg(long)]
        first_order: Option<usize>,
        #[arg(long = "J-krad", default_value_t = 32.7)]
        j_krad: f64,
        #[arg(long)]
        tau_us: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        offset_krad: f64,
    },
    /// Exhaustive search over frame-cyclic sequences up to a length.
    Enumerate {
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[arg(long)]
        json: bool,
    },
    /// Rewrite a sequence file.
    Transform {
        #[command(subcommand)]
        op: TransformOp,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    seq: String,
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Periodic chain (default open).
    #[arg(long)]
    pbc: bool,
    #[arg(long = "J-krad", default_value_t = 32.7)]
    j_krad: f64,
    #[arg(long, default_value_t = 10.0)]
    tau_us: f64,
    #[arg(long, default_value_t = 0.0)]
    offset_krad: f64,
    /// Disorder width W, one realization drawn from `--seed`.
    #[arg(long, default_value_t = 0.0)]
    disorder_krad: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    angle_error: f64,
    #[arg(long, default_value_t = 0.0)]
    pulse_width_us: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha1: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha2: f64,
    /// Correlation time in units of tau.
    #[arg(long, default_value_t = 72)]
    total_tau: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum TransformOp {
    /// Append the time-reversed, phase-inverted copy.
    Symmetrize(TransformIo),
    /// Move the first `by` actions to the end.
    Rotate {
        #[command(flatten)]
        io: TransformIo,
        #[arg(long)]
        by: usize,
    },
    /// Flip the phase of the listed pulses, or of every pulse with --all.
    PhaseShift {
        #[command(flatten)]
        io: TransformIo,
        #[arg(long, value_delimiter = ',', required_unless_present = "all")]
        indices: Vec<usize>,
        #[arg(long)]
        all: bool,
    },
    /// Build a yxx sequence from a sign string such as `+--+-+`.
    YxxExpand {
        #[arg(long, allow_hyphen_values = true)]
        signs: String,
        #[arg(long, default_value_t = 5.0)]
        tau_us: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TransformIo {
    /// Library name or sequence file.
    input: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) if p != Path::new("-") => Ok(fs::write(p, text)?),
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let seq = load_sequence(&a.seq)?.with_tau(a.tau_us * 1e-6)?;
    let basis = SpinBasis::new(a.n, if a.pbc { Boundary::Periodic } else { Boundary::Open })?;
    let graph = CouplingGraph::nearest_neighbor(&basis, a.j_krad * 1e3);
    let mut imp = ImperfectionSet::ideal()
        .with_offset(a.offset_krad * 1e3)
        .with_angle_error(a.angle_error)
        .with_pulse_width(a.pulse_width_us * 1e-6)
        .with_transients(a.alpha1, a.alpha2);
    if a.disorder_krad != 0.0 {
        imp = imp.with_disorder(DisorderRealization::sample(a.n, a.disorder_krad * 1e3, a.seed)?);
    }
    let e = evaluate_sequence(&seq, &basis, &graph, &imp, a.total_tau)?;
    if a.json {
        println!("{}", serde_json::to_string(&e)?);
    } else {
        println!(
            "sequence={} fidelity={} infidelity={:e} c_xx={} c_yy={} c_zz={} c_avg={}",
            seq.name().unwrap_or(&a.seq),
            1.0 - e.infidelity,
            e.infidelity,
            e.correlations.xx,
            e.correlations.yy,
            e.correlations.zz,
            e.c_avg
        );
    }
    Ok(())
}

fn report_training(out: &TrainOutcome) {
    print!("{}", curve_csv(&out.records));
    eprintln!("best_reward={} best_sequence=\"{}\"", out.best_reward, out.best_sequence.tokens());
}

fn parse_signs(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '+' => Ok(true),
            '-' => Ok(false),
            other => Err(Error::InvalidArgument(format!("sign '{other}' is not + or -"))),
        })
        .collect()
}

fn transform(op: &TransformOp) -> Result<()> {
    let apply = |io: &TransformIo, f: &dyn Fn(&PulseSequence) -> Result<PulseSequence>| -> Result<()> {
        let seq = f(&load_sequence(&io.input)?)?;
        emit(&emit_sequence_file(&seq), io.output.as_deref())
    };
    match op {
        TransformOp::Symmetrize(io) => apply(io, &|s| Ok(symmetrize(s))),
        TransformOp::Rotate { io, by } => apply(io, &|s| rotate(s, *by)),
        TransformOp::PhaseShift { io, indices, all } => {
            apply(io, &|s| if *all { Ok(phase_shift_pi_all(s)) } else { phase_shift_pi(s, indices) })
        }
        TransformOp::YxxExpand { signs, tau_us, output } => {
            let seq = yxx_expand(&parse_signs(signs)?, tau_us * 1e-6)?;
            emit(&emit_sequence_file(&seq), output.as_deref())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Sweep { spec, output } => {
            let mut spec: SweepSpec = serde_json::from_slice(&fs::read(&spec)?)?;
            if output.is_some() {
                spec.output = output;
            }
            let result = run_sweep(&spec)?;
            match spec.output.as_deref() {
                Some(p) if p != Path::new("-") => write_sweep(&result, p),
                _ => emit(&sweep_csv(&result)?, None),
            }
        }
        Command::Train { config, out, resume: from, workers } => {
            let outcome = match (from, config) {
                (Some(dir), _) => resume(&dir, workers)?,
                (None, Some(path)) => {
                    let cfg: EvolutionConfig = serde_json::from_slice(&fs::read(&path)?)?;
                    train(&cfg, &TrainOptions { workers, checkpoint_dir: out })?
                }
                (None, None) => return Err(Error::InvalidArgument("train needs a config file or --resume".into())),
            };
            report_training(&outcome);
            Ok(())
        }
        Command::Aht { seq, first_order, j_krad, tau_us, offset_krad } => {
            let mut s = load_sequence(&seq)?;
            if let Some(t) = tau_us {
                s = s.with_tau(t * 1e-6)?;
            }
            let report = match first_order {
                Some(n) => {
                    let basis = SpinBasis::open(n)?;
                    let graph = CouplingGraph::nearest_neighbor(&basis, j_krad * 1e3);
                    let imp = ImperfectionSet::ideal().with_offset(offset_krad * 1e3);
                    avg_hamiltonian_report(&s, Some((&basis, &graph, &imp)))?
                }
                None => avg_hamiltonian_report(&s, None)?,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Enumerate { max_len, json } => {
            let report = theorem1_enumerate(max_len)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
                return Ok(());
            }
            println!("length,sequences,frame_cyclic,zeroth_cancelled,first_cancelled,passing");
            for r in &report.lengths {
                println!(
                    "{},{},{},{},{},{}",
                    r.length, r.sequences, r.frame_cyclic, r.zeroth_cancelled, r.first_cancelled, r.passing
                );
            }
            for r in report.lengths.iter().filter(|r| r.passing > 0) {
                for s in &r.passing_sequences {
                    println!("# passing L={}: {s}", r.length);
                }
            }
            println!("# holds={}", report.holds);
            Ok(())
        }
        Command::Transform { op } => transform(&op),
    }
}

fn fail(kind: &str, code: u8, message: &str) -> ExitCode {
    let quoted = serde_json::to_string(message).unwrap_or_else(|_| "\"\"".into());
    eprintln!("error kind={kind} code={code} message={quoted}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            return fail("usage", 2, line);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.exit_code() as u8, &e.to_string()),
    }
}
