use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bellperm::bellstate::{werner, BellDiagonal};
use bellperm::gf2::{PauliVector, Subspace, SymplecticMatrix};
use bellperm::pipeline::{
    figure1_sweep, format_sig, linear_grid, optimize_schedule, run_recurrence, sweep_csv,
    OptimizeOptions, Schedule,
};
use bellperm::protocol::{apply_step, dej_step, proposed_step, DistillationStep};
use bellperm::search::{best_step, Objective, SearchOptions};
use bellperm::symplectic::{
    cnot_generators, cnot_symplectic, complete_isotropic, decompose_two_qubit, enumerate_sp4,
    gamma_table, generator_sequence_search, random_symplectic, recompose,
};
use bellperm::verify::{run_all, VerifyOptions};
use bellperm::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "bellperm",
    version,
    about = "Bell-product permutations and distillation schedules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply one distillation step to n copies of a state.
    Step(StepArgs),
    /// Run or optimize a recurrence schedule followed by hashing.
    Pipeline(PipelineArgs),
    /// Inverse-yield comparison over a grid of Werner fidelities (CSV).
    Sweep(SweepArgs),
    /// Exhaustive search over checked subspaces (CSV).
    Search(SearchArgs),
    /// Group utilities.
    #[command(subcommand)]
    Group(GroupCommand),
    /// Factor a symplectic matrix into two-pair operations.
    Decompose(DecomposeArgs),
    /// Run the built-in self-checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct StateArgs {
    /// Probabilities for labels 00,01,10,11.
    #[arg(long)]
    state: Option<String>,
    /// Werner state with this fidelity.
    #[arg(long)]
    werner: Option<f64>,
}

impl StateArgs {
    fn resolve(&self) -> Result<BellDiagonal, CliError> {
        match (&self.state, self.werner) {
            (Some(s), None) => s.parse().map_err(CliError::usage),
            (None, Some(f)) => werner(f).map_err(CliError::usage),
            _ => Err(CliError::Usage(
                "give exactly one of --state or --werner".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Dej,
    Proposed,
}

impl Scheme {
    fn step(self) -> DistillationStep {
        match self {
            Scheme::Dej => dej_step(),
            Scheme::Proposed => proposed_step(),
        }
    }
}

#[derive(Args)]
struct StepArgs {
    #[command(flatten)]
    input: StateArgs,
    #[arg(long, value_enum, conflicts_with = "file")]
    scheme: Option<Scheme>,
    /// Step file: "n m", the S basis rows, optionally the 2m output rows.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    input: StateArgs,
    /// Optimize k repetitions of this scheme (proposed may end with one dej step).
    #[arg(long, value_enum, default_value = "proposed", conflicts_with = "steps")]
    scheme: Scheme,
    /// Explicit comma-separated schedule, e.g. "proposed,proposed,dej".
    #[arg(long)]
    steps: Option<String>,
    #[arg(long, default_value_t = 25)]
    max_steps: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.55)]
    fmin: f64,
    #[arg(long, default_value_t = 0.95)]
    fmax: f64,
    #[arg(long, default_value_t = 9)]
    points: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[command(flatten)]
    input: StateArgs,
    /// fidelity | success | yield-proxy | fidelity-at-min-success:T
    #[arg(long, default_value = "fidelity")]
    objective: String,
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long, default_value_t = 1)]
    shards: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GroupCommand {
    /// Print all 720 4x4 symplectic matrices, blank-line separated.
    Sp4 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the transposition assigned to each nonzero 4-bit vector.
    Gamma,
    /// Print the CNOT action and its generator product.
    Cnot,
    /// Complete an isotropic basis to a symplectic matrix.
    Complete {
        #[arg(long)]
        n: usize,
        /// Comma-separated basis rows.
        #[arg(long)]
        rows: String,
        /// Comma-separated 1-based row positions.
        #[arg(long)]
        positions: String,
    },
    /// Shortest product of two-pair transvections equal to a matrix.
    Generators {
        /// Matrix file, one row per line.
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MatrixSource {
    /// Matrix file, one row per line.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Random symplectic matrix on this many pairs.
    #[arg(long)]
    random: Option<usize>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    source: MatrixSource,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Swap two entries of the transposition table (negative control).
    #[arg(long, hide = true)]
    tamper_gamma: bool,
}

enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn usage(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }

    fn failure(e: impl ToString) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Domain(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(CliError::failure),
    }
}

fn label(y: usize, m: usize) -> String {
    format!("{:0width$b}", y, width = 2 * m)
}

fn cmd_step(args: &StepArgs) -> Result<(), CliError> {
    let p = args.input.resolve()?;
    let step = match (&args.file, args.scheme) {
        (Some(path), _) => read(path)?.parse::<DistillationStep>()?,
        (None, Some(s)) => s.step(),
        (None, None) => return Err(CliError::Usage("give --scheme or --file".into())),
    };
    let out = apply_step(&p, &step)?;
    let mut text = String::new();
    for (y, q) in out.state.coefficients().iter().enumerate() {
        text.push_str(&format!("{} {}\n", label(y, step.m()), format_sig(*q)));
    }
    text.push_str(&format!("fidelity {}\n", format_sig(out.fidelity())));
    text.push_str(&format!("success {}\n", format_sig(out.success)));
    emit(&None, &text)
}

fn named_step(name: &str) -> Result<DistillationStep, CliError> {
    match name.trim() {
        "dej" => Ok(dej_step()),
        "proposed" => Ok(proposed_step()),
        other => Err(CliError::Usage(format!("unknown step {other:?}"))),
    }
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<(), CliError> {
    let p = args.input.resolve()?;
    let (schedule, result, flagged) = match &args.steps {
        Some(list) => {
            let mut s = Schedule::hashing_only();
            for name in list.split(',').filter(|n| !n.trim().is_empty()) {
                s.push(name.trim(), named_step(name)?);
            }
            let r = run_recurrence(&p, &s)?;
            (s, r, false)
        }
        None => {
            let mut opts = match args.scheme {
                Scheme::Proposed => OptimizeOptions::proposed(),
                Scheme::Dej => OptimizeOptions::dej(),
            };
            opts.max_steps = args.max_steps;
            let o = optimize_schedule(&p, &opts)?;
            (o.schedule, o.result, o.all_infinite)
        }
    };
    let mut text = format!("schedule {}\n", schedule.summary());
    text.push_str("step,name,fidelity,success,cost_multiplier\n");
    for (i, (rec, s)) in result.per_step.iter().zip(&schedule.steps).enumerate() {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            s.name,
            format_sig(rec.fidelity),
            format_sig(rec.success),
            format_sig(rec.cost_multiplier)
        ));
    }
    text.push_str(&format!(
        "final_fidelity {}\n",
        format_sig(result.final_state.fidelity())
    ));
    text.push_str(&format!(
        "hashing_yield {}\n",
        format_sig(result.hashing_yield)
    ));
    text.push_str(&format!("L {}\n", format_sig(result.l)));
    text.push_str(&format!("log10L {}\n", format_sig(result.log10_l)));
    if flagged {
        text.push_str("note: no schedule reaches positive hashing yield\n");
    }
    emit(&None, &text)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    if !(0.5 < args.fmin && args.fmin < args.fmax && args.fmax < 1.0) {
        return Err(CliError::Usage("need 0.5 < fmin < fmax < 1".into()));
    }
    if args.points < 2 {
        return Err(CliError::Usage("need at least 2 points".into()));
    }
    let rows = figure1_sweep(&linear_grid(args.fmin, args.fmax, args.points))?;
    emit(&args.out, &sweep_csv(&rows))
}

fn cmd_search(args: &SearchArgs) -> Result<(), CliError> {
    let p = args.input.resolve()?;
    let objective: Objective = args.objective.parse()?;
    if args.shards == 0 || args.top == 0 {
        return Err(CliError::Usage(
            "--shards and --top must be positive".into(),
        ));
    }
    let opts = SearchOptions {
        top_k: args.top,
        shards: args.shards,
        ..SearchOptions::default()
    };
    let report = best_step(&p, args.n, args.m, objective, &opts)?;
    eprintln!(
        "{} candidates in {:.3}s{}",
        report.states_evaluated,
        report.wall_time.as_secs_f64(),
        if report.degenerate {
            " (all scores equal)"
        } else {
            ""
        }
    );
    emit(&args.out, &report.to_csv())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad {what} {t:?}")))
        })
        .collect()
}

fn cmd_group(cmd: &GroupCommand) -> Result<(), CliError> {
    match cmd {
        GroupCommand::Sp4 { out } => {
            let text: Vec<String> = enumerate_sp4().iter().map(|m| m.to_string()).collect();
            emit(out, &(text.join("\n\n") + "\n"))
        }
        GroupCommand::Gamma => {
            let mut text = String::new();
            for (i, t) in gamma_table().iter().enumerate() {
                text.push_str(&format!("{:04b} {t}\n", i + 1));
            }
            emit(&None, &text)
        }
        GroupCommand::Cnot => {
            let gens: Vec<String> = cnot_generators().iter().map(|g| g.to_string()).collect();
            let product = bellperm::symplectic::compose(2, &cnot_generators())?;
            let ok = product == cnot_symplectic();
            emit(
                &None,
                &format!(
                    "{}\nproduct {} equal: {ok}\n",
                    cnot_symplectic(),
                    gens.join("·")
                ),
            )?;
            if ok {
                Ok(())
            } else {
                Err(CliError::Failure("CNOT identity does not hold".into()))
            }
        }
        GroupCommand::Complete { n, rows, positions } => {
            let vectors: Vec<PauliVector> = parse_list(rows, "row")?;
            let positions: Vec<usize> = parse_list(positions, "position")?;
            let s = Subspace::span(*n, &vectors)?;
            if s.dim() != vectors.len() {
                return Err(CliError::Failure("basis rows are dependent".into()));
            }
            let b = complete_isotropic(&s, &positions)?;
            emit(&None, &format!("{b}\n"))
        }
        GroupCommand::Generators { matrix, max_len } => {
            let a: SymplecticMatrix = read(matrix)?.parse()?;
            match generator_sequence_search(&a, *max_len)? {
                Some(seq) => {
                    let text: Vec<String> = seq.iter().map(|t| t.to_string()).collect();
                    emit(
                        &None,
                        &format!("length {}\n{}\n", seq.len(), text.join("\n")),
                    )
                }
                None => Err(CliError::Failure(format!(
                    "no product of at most {max_len} generators"
                ))),
            }
        }
    }
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<(), CliError> {
    let a = match (&args.source.matrix, args.source.random) {
        (Some(path), _) => read(path)?.parse::<SymplecticMatrix>()?,
        (None, Some(n)) => random_symplectic(n, &mut ChaCha8Rng::seed_from_u64(args.seed))?,
        _ => return Err(CliError::Usage("give --matrix or --random".into())),
    };
    let ops = decompose_two_qubit(&a)?;
    let mut text = format!("matrix\n{a}\nops {}\n", ops.len());
    for op in &ops {
        let (k, l) = op.pairs();
        let pairs = match l {
            Some(l) => format!("pairs {} {}", k + 1, l + 1),
            None => format!("pair {}", k + 1),
        };
        let rows: Vec<String> = op.block().rows().map(|r| r.to_string()).collect();
        text.push_str(&format!("{pairs}: {}\n", rows.join(" ")));
    }
    let ok = recompose(a.n_pairs(), &ops)? == a;
    text.push_str(&format!("recomposes {ok}\n"));
    emit(&None, &text)?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Failure("decomposition does not recompose".into()))
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let mut opts = VerifyOptions::default();
    if args.tamper_gamma {
        opts.gamma.swap(0, 1);
    }
    let results = run_all(&opts);
    let mut text = String::new();
    for r in &results {
        text.push_str(&format!("{r}\n"));
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    text.push_str(&format!(
        "{} passed, {failed} failed\n",
        results.len() - failed
    ));
    emit(&None, &text)?;
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Failure(format!("{failed} check(s) failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Step(a) => cmd_step(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Search(a) => cmd_search(a),
        Command::Group(c) => cmd_group(c),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
