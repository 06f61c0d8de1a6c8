use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use cptfit_core::generate::{generate, GenConfig};
use cptfit_core::{
    i_divergence, joint_from_network, marginal, parse_constraints, parse_network, run_d_ipfp_with,
    run_e_ipfp, run_ipfp, serialize_constraints, serialize_joint, serialize_network,
    serialize_report, Constraint, DecomposedOptions, FormatError, NetworkSpec, RunReport, Schedule,
    SolveError, StopPolicy, Termination, DENSE_VARIABLE_CEILING,
};

const EXIT_CODES: &str = "\
Exit codes:
  0  success (run: converged; check: every residual within epsilon)
  1  file could not be read or written
  2  invalid command line
  3  invalid input document (syntax, structure, or probabilities)
  4  run stopped because the constraints stopped making progress (oscillating)
  5  run hit --max-cycles before converging
  6  a constraint puts mass where the network has none (dominance)
  7  a constraint needs a subnet larger than --max-subnet
  8  check found a residual above epsilon
  9  dense computation refused: networks differ in variables, or exceed the size ceiling

Set RUST_LOG (error, warn, info, debug) to control log output on stderr.";

#[derive(Parser)]
#[command(
    name = "cptfit",
    version,
    about = "Fit Bayesian network CPTs to marginal constraints"
)]
#[command(after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a network to a constraint set.
    #[command(after_help = EXIT_CODES)]
    Run(RunArgs),
    /// Report how far a network is from satisfying a constraint set.
    #[command(after_help = EXIT_CODES)]
    Check(CheckArgs),
    /// I-divergence between two networks over the same variables, in nats.
    #[command(after_help = EXIT_CODES)]
    Divergence(DivergenceArgs),
    /// Write a random network and a consistent constraint set.
    #[command(after_help = EXIT_CODES)]
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Ipfp,
    EIpfp,
    DIpfp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    DocumentOrder,
    AncestorsFirst,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    constraints: PathBuf,
    #[arg(long, value_enum, default_value = "d-ipfp")]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = StopPolicy::DEFAULT_EPSILON, value_parser = positive)]
    epsilon: f64,
    #[arg(long, default_value_t = StopPolicy::DEFAULT_MAX_CYCLES as u64, value_parser = clap::value_parser!(u64).range(1..))]
    max_cycles: u64,
    #[arg(long, value_enum, default_value = "document-order")]
    schedule: ScheduleArg,
    /// Largest |Y| + |S| D-IPFP may work on.
    #[arg(long, default_value_t = DecomposedOptions::DEFAULT_MAX_SUBNET_VARS)]
    max_subnet: usize,
    /// Fitted network (for ipfp, the fitted joint table). Written only when the run converges.
    #[arg(long)]
    out: PathBuf,
    /// Run report, written whenever the run finishes.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    constraints: PathBuf,
    #[arg(long, default_value_t = StopPolicy::DEFAULT_EPSILON, value_parser = positive)]
    epsilon: f64,
}

#[derive(Args)]
struct DivergenceArgs {
    /// Give twice: I(first || second) is printed.
    #[arg(long, num_args = 1, required = true)]
    network: Vec<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 15)]
    nodes: usize,
    #[arg(long, default_value_t = 8)]
    num_constraints: usize,
    #[arg(long, default_value_t = 3)]
    max_in_degree: usize,
    /// Largest |Y| + |S| of a generated constraint.
    #[arg(long, default_value_t = 8)]
    max_subnet: usize,
    /// Perturb every CPT of the witness network, not only the constrained ones.
    #[arg(long)]
    perturb_all: bool,
    /// Generated network.
    #[arg(long)]
    out: PathBuf,
    /// Generated constraint set.
    #[arg(long)]
    constraints: PathBuf,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(x) => Err(format!("must be positive, got {x}")),
        Err(e) => Err(e.to_string()),
    }
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<FormatError> for Failure {
    fn from(err: FormatError) -> Self {
        Failure::new(3, err.to_string())
    }
}

impl From<SolveError> for Failure {
    fn from(err: SolveError) -> Self {
        let code = match err {
            SolveError::Dominance { .. } => 6,
            SolveError::SubnetTooLarge { .. } => 7,
            SolveError::DenseTooLarge { .. } => 9,
            SolveError::Schedule(_) | SolveError::StopPolicy(_) => 2,
            SolveError::Model(_) => 3,
        };
        Failure::new(code, err.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))
}

fn read_network(path: &Path) -> Result<NetworkSpec, Failure> {
    parse_network(&read(path)?).map_err(|e| Failure::new(3, format!("{}: {e}", path.display())))
}

fn read_constraints(path: &Path, net: &NetworkSpec) -> Result<Vec<Constraint>, Failure> {
    parse_constraints(&read(path)?, net)
        .map_err(|e| Failure::new(3, format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory, then renames it into place.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::new(1, format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let net = read_network(&args.network)?;
    let rs = read_constraints(&args.constraints, &net)?;
    let stop = StopPolicy::new(
        args.epsilon,
        args.max_cycles as usize,
        StopPolicy::DEFAULT_OSCILLATION_WINDOW,
    )?;
    let sched = match args.schedule {
        ScheduleArg::DocumentOrder => Schedule::document_order(rs.len()),
        ScheduleArg::AncestorsFirst => Schedule::ancestors_first(&net, &rs),
    };
    let (output, report): (String, RunReport) = match args.algorithm {
        AlgorithmArg::Ipfp => {
            let (joint, report) = run_ipfp(&net, &rs, &stop, &sched)?;
            (serialize_joint(&net, &joint), report)
        }
        AlgorithmArg::EIpfp => {
            let (fitted, report) = run_e_ipfp(&net, &rs, &stop, &sched)?;
            (serialize_network(&fitted), report)
        }
        AlgorithmArg::DIpfp => {
            let options = DecomposedOptions {
                max_subnet_vars: args.max_subnet,
                ..DecomposedOptions::default()
            };
            let (fitted, report) = run_d_ipfp_with(&net, &rs, &stop, &sched, &options)?;
            (serialize_network(&fitted), report)
        }
    };
    write_atomic(&args.report, &serialize_report(&report))?;
    info!(
        "{:?} after {} cycles, max residual {:.3e}",
        report.termination,
        report.cycles,
        report.max_residual()
    );
    match report.termination {
        Termination::Converged => write_atomic(&args.out, &output),
        Termination::Oscillating => Err(Failure::new(
            4,
            format!(
                "no progress after {} cycles (max residual {:.3e}); the constraints may be inconsistent. \
                 {} not written",
                report.cycles,
                report.max_residual(),
                args.out.display()
            ),
        )),
        Termination::MaxCycles => Err(Failure::new(
            5,
            format!(
                "not converged after {} cycles (max residual {:.3e}); {} not written",
                report.cycles,
                report.max_residual(),
                args.out.display()
            ),
        )),
    }
}

fn cmd_check(args: &CheckArgs) -> Result<(), Failure> {
    let net = read_network(&args.network)?;
    let rs = read_constraints(&args.constraints, &net)?;
    let mut failing = 0;
    for (i, r) in rs.iter().enumerate() {
        let residual = marginal(&net, r.scope())
            .and_then(|m| m.max_abs_diff(r.dist()))
            .map_err(|e| Failure::new(3, e.to_string()))?;
        let names: Vec<&str> = r.scope().iter().map(|&v| net.name(v)).collect();
        let ok = residual <= args.epsilon;
        failing += usize::from(!ok);
        println!(
            "constraint {i} [{}]: residual {residual:.3e} {}",
            names.join(", "),
            if ok { "ok" } else { "FAIL" }
        );
    }
    if net.len() <= DENSE_VARIABLE_CEILING {
        let joint = joint_from_network(&net);
        let residual = cptfit_core::structural_residual(&joint, &net)
            .map_err(|e| Failure::new(3, e.to_string()))?;
        println!("structural residual: {residual:.3e}");
    } else {
        println!("structural residual: omitted (more than {DENSE_VARIABLE_CEILING} variables)");
    }
    if failing > 0 {
        return Err(Failure::new(
            8,
            format!(
                "{failing} of {} constraints exceed epsilon {:e}",
                rs.len(),
                args.epsilon
            ),
        ));
    }
    Ok(())
}

fn cmd_divergence(args: &DivergenceArgs) -> Result<(), Failure> {
    let [first, second] = args.network.as_slice() else {
        return Err(Failure::new(2, "give --network exactly twice"));
    };
    let p = read_network(first)?;
    let q = read_network(second)?;
    let same_variables = p.len() == q.len()
        && p.ids()
            .all(|v| p.name(v) == q.name(v) && p.cardinality(v) == q.cardinality(v));
    if !same_variables {
        return Err(Failure::new(
            9,
            "scope mismatch: networks must declare the same variables in the same order",
        ));
    }
    if p.len() > DENSE_VARIABLE_CEILING {
        return Err(Failure::new(
            9,
            format!(
                "{} variables exceed the dense ceiling of {DENSE_VARIABLE_CEILING}",
                p.len()
            ),
        ));
    }
    let value = i_divergence(&joint_from_network(&p), &joint_from_network(&q))
        .map_err(|e| Failure::new(9, e.to_string()))?;
    if value.is_infinite() {
        warn!("second network assigns zero probability where the first does not");
    }
    println!("{}", cptfit_core::io::format_number(value));
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    if args.nodes == 0 {
        return Err(Failure::new(2, "--nodes must be at least 1"));
    }
    let config = GenConfig {
        nodes: args.nodes,
        max_in_degree: args.max_in_degree,
        num_constraints: args.num_constraints,
        max_subnet: args.max_subnet,
        perturb_all_cpts: args.perturb_all,
        ..GenConfig::default()
    };
    let instance = generate(&config, args.seed);
    if instance.constraints.len() < args.num_constraints {
        warn!(
            "only {} distinct constraint scopes found",
            instance.constraints.len()
        );
    }
    let network = serialize_network(&instance.network);
    let constraints = serialize_constraints(&instance.network, &instance.constraints);
    write_atomic(&args.out, &network)?;
    write_atomic(&args.constraints, &constraints)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Check(args) => cmd_check(args),
        Command::Divergence(args) => cmd_divergence(args),
        Command::Gen(args) => cmd_gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
