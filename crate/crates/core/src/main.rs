use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use condsum::harness::{
    audit_query_scaling, run_and_report, verify_oracles, write_json, Algorithm, AuditConfig, Format,
    OracleCheckConfig, Overrides, RunConfig, UniverseSource,
};
use condsum::{generate, Error, GeneratorSpec, Result, SupportVariant};

#[derive(Parser)]
#[command(name = "condsum", version, about = "Sublinear sum and support-size estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated universe as JSON.
    Generate(GenerateArgs),
    /// Estimate the total weight of a non-increasing universe.
    SumMonotone(RunArgs),
    /// Estimate the total weight of a decreasing-then-increasing universe.
    SumUnimodal(RunArgs),
    /// Estimate the number of positive weights.
    SupportSize(RunArgs),
    /// Test whether the full-domain distribution is uniform.
    TestUniformity(RunArgs),
    /// Fit conditional-query counts over an (n, epsilon) grid.
    AuditQueries(AuditArgs),
    /// Chi-square conformance of the sampling oracles.
    VerifyOracles(VerifyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    generator: GeneratorSpec,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstantArgs {
    #[arg(long = "c-T")]
    c_t: Option<f64>,
    #[arg(long = "c-U")]
    c_u: Option<f64>,
    #[arg(long = "c-S")]
    c_s: Option<f64>,
    #[arg(long = "c-R")]
    c_r: Option<f64>,
    /// Fixed repetition count for each interval uniformity test.
    #[arg(long)]
    amplification: Option<usize>,
}

impl ConstantArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            c_t: self.c_t,
            c_u: self.c_u,
            c_s: self.c_s,
            c_r: self.c_r,
            amplification: self.amplification,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Generator spec such as `power-law:exponent=0.5`.
    #[arg(long, conflicts_with = "universe", required_unless_present = "universe")]
    generator: Option<GeneratorSpec>,
    /// Universe JSON file.
    #[arg(long)]
    universe: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value = "union")]
    variant: SupportVariant,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Run trials on all cores; output is unchanged.
    #[arg(long)]
    parallel: bool,
    /// Record wall-clock time per trial.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    constants: ConstantArgs,
}

impl RunArgs {
    fn config(&self, algorithm: Algorithm) -> RunConfig {
        let source = match (&self.generator, &self.universe) {
            (Some(g), _) => UniverseSource::Generator(g.clone()),
            (None, Some(p)) => UniverseSource::File(p.clone()),
            (None, None) => unreachable!("clap requires one source"),
        };
        let mut cfg = RunConfig::new(algorithm, source, self.n, self.epsilon, self.seed);
        cfg.trials = self.trials;
        cfg.variant = self.variant;
        cfg.overrides = self.constants.overrides();
        cfg.parallel = self.parallel;
        cfg.timing = self.timing;
        cfg
    }
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long = "grid-n", value_delimiter = ',', default_values_t = [1000, 10_000, 100_000])]
    grid_n: Vec<usize>,
    #[arg(long = "grid-epsilon", value_delimiter = ',', default_values_t = [0.2, 0.35, 0.5])]
    grid_epsilon: Vec<f64>,
    /// Defaults to `power-law:exponent=0.5`, or `strict-unimodal` with `--unimodal`.
    #[arg(long)]
    generator: Option<GeneratorSpec>,
    #[arg(long)]
    seed: u64,
    /// Audit the unimodal estimator, including the valley search budget.
    #[arg(long)]
    unimodal: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    constants: ConstantArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 30)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate(a) => {
            let u = generate(&a.generator, a.n, a.seed)?;
            match a.out {
                Some(p) => u.save(&p)?,
                None => println!("{}", u.to_json_string()),
            }
            Ok(true)
        }
        Command::SumMonotone(a) => report(&a, Algorithm::SumMonotone),
        Command::SumUnimodal(a) => report(&a, Algorithm::SumUnimodal),
        Command::SupportSize(a) => report(&a, Algorithm::SupportSize),
        Command::TestUniformity(a) => report(&a, Algorithm::TestUniformity),
        Command::AuditQueries(a) => {
            let default = if a.unimodal { "strict-unimodal" } else { "power-law:exponent=0.5" };
            let generator = match a.generator {
                Some(g) => g,
                None => default.parse()?,
            };
            let cfg = AuditConfig {
                grid_n: a.grid_n,
                grid_epsilon: a.grid_epsilon,
                generator,
                master_seed: a.seed,
                unimodal: a.unimodal,
                overrides: a.constants.overrides(),
            };
            let r = audit_query_scaling(&cfg)?;
            write_json(&r, a.out.as_deref())?;
            Ok(r.flagged == 0 && r.budgets_match && r.eval_within_bound != Some(false))
        }
        Command::VerifyOracles(a) => {
            let s = verify_oracles(&OracleCheckConfig::new(a.n, a.samples, a.seed))?;
            write_json(&s, a.out.as_deref())?;
            Ok(s.passed)
        }
    }
}

fn report(a: &RunArgs, algorithm: Algorithm) -> Result<bool> {
    run_and_report(&a.config(algorithm), a.out.as_deref(), a.format)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed; see report");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
