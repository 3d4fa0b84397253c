//! Command-line front end: simulate replicates, classify scaling families,
//! evaluate limit-law CDFs and validate simulations against them.
//!
//! Exit codes: 0 success, 1 statistical failure, 2 usage or configuration
//! error, 3 resource guard exceeded.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nested_growth::asymptotics::{LimitLaw, Rate};
use nested_growth::process::MutationEvent;
use nested_growth::regimes::{classify, format_exponent, parse_exponent, Exponent, ScalingFamily};
use nested_growth::rng::GENERATOR_NAME;
use nested_growth::stats::{
    run_validation, simulate_replicates, simulate_replicates_logged, write_cdf_csv, write_events_csv,
    write_replicates_csv,
};
use nested_growth::Error;
use serde_json::json;

use crate::config::{ExperimentConfig, Format};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "NESTED_GROWTH_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "results";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Resource(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Resource(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Resource(_) => 3,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ResourceLimit(g) => {
                let counts: Vec<String> = g
                    .counts
                    .iter()
                    .enumerate()
                    .map(|(j, c)| format!("type {}: {} generated, {} accepted", j + 1, c.generated, c.accepted))
                    .collect();
                CliError::Resource(format!(
                    "resource limit exceeded: {} at t = {} after {} candidates ({})",
                    g.reason,
                    g.time,
                    g.generated,
                    counts.join("; ")
                ))
            }
            Error::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "nested-growth", version, about = "Nested mutation growth on the torus: simulation and limit laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate replicates and write replicates.csv and meta.json.
    Simulate(SimulateArgs),
    /// Classify a power-law family and print its regime as JSON.
    Classify(ClassifyArgs),
    /// Run the validation targets of a config; exit 1 if any fails.
    Validate(RunArgs),
    /// Tabulate a limit-law CDF as CSV.
    Cdf(CdfArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override run.replicates.
    #[arg(long)]
    replicates: Option<usize>,
    /// Override run.master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override run.workers (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; defaults to output.dir, then $NESTED_GROWTH_OUTPUT_DIR, then ./results.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also write events.csv with every accepted mutation.
    #[arg(long)]
    events: bool,
}

fn exponent_arg(s: &str) -> Result<Exponent, String> {
    parse_exponent(s).map_err(|e| e.to_string())
}

fn rate_arg(s: &str) -> Result<Rate, String> {
    s.parse()
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// Torus dimension.
    #[arg(long)]
    d: usize,
    /// Target type.
    #[arg(long)]
    k: usize,
    /// Rate exponents a_1..a_k with mu_i = N^(a_i), e.g. --a=-2/3,-2/3.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = exponent_arg, required = true)]
    a: Vec<Exponent>,
    /// Spread exponent b with alpha = N^b.
    #[arg(long, allow_hyphen_values = true, value_parser = exponent_arg)]
    b: Exponent,
    /// Limits c_i = lim mu_i/mu_1, numbers or "inf".
    #[arg(long, value_delimiter = ',', value_parser = rate_arg)]
    c: Option<Vec<Rate>>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LawName {
    Exp1,
    /// Weibull-type law of sigma_k / beta_k (needs --d, --k).
    Thm3,
    /// Weibull-type law of sigma_k / beta_l (needs --d, --l).
    Thm4,
    /// Sum of exponentials (needs --rates).
    Hypoexponential,
    /// 1 - exp(-C t^m) (needs --coefficient, --exponent).
    Weibull,
    /// Rescaled inter-mutation distance law (needs --d).
    Distance,
}

#[derive(Args, Debug)]
struct CdfArgs {
    #[arg(long, value_enum)]
    law: LawName,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = rate_arg)]
    rates: Option<Vec<Rate>>,
    #[arg(long)]
    coefficient: Option<f64>,
    #[arg(long)]
    exponent: Option<u32>,
    /// Evaluation points.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to"])]
    at: Vec<f64>,
    /// Start of a uniform grid.
    #[arg(long, requires = "to")]
    from: Option<f64>,
    /// End of a uniform grid.
    #[arg(long, requires = "from")]
    to: Option<f64>,
    /// Grid points.
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Write to this file (e.g. cdf.csv) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Classify(args) => classify_cmd(args),
        Command::Validate(args) => validate(args),
        Command::Cdf(args) => cdf(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(m) = args.replicates {
        config.run.replicates = m;
    }
    if let Some(s) = args.seed {
        config.run.master_seed = s;
    }
    if let Some(w) = args.workers {
        config.run.workers = w;
    }
    if config.run.replicates == 0 {
        return Err(CliError::Usage("run.replicates must be positive".into()));
    }
    Ok(config)
}

fn output_dir(args: &RunArgs, config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let dir = args
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn meta(command: &str, config: &ExperimentConfig, started: Instant, files: &[&str], warnings: &[String]) -> serde_json::Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "master_seed": config.run.master_seed,
        "replicates": config.run.replicates,
        "generator": GENERATOR_NAME,
        "config": config,
        "files": files,
        "warnings": warnings,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    })
}

fn simulate(args: SimulateArgs) -> Result<ExitCode, CliError> {
    let started = Instant::now();
    let config = load(&args.run)?;
    let params = config.params()?;
    let dir = output_dir(&args.run, &config)?;
    let (m, seed, guards, workers) = (config.run.replicates, config.run.master_seed, config.guards(), config.run.workers);
    let mut files = Vec::new();
    let records = if args.events {
        let runs = simulate_replicates_logged(&params, seed, m, guards, workers)?;
        let logs: Vec<(u64, &[MutationEvent])> = runs.iter().map(|(r, l)| (r.seed.replicate, l.as_slice())).collect();
        let mut w = create(&dir.join("events.csv"))?;
        write_events_csv(&mut w, &logs)?;
        w.flush()?;
        files.push("events.csv");
        runs.into_iter().map(|(r, _)| r).collect()
    } else {
        simulate_replicates(&params, seed, m, guards, workers)?
    };
    if config.output.wants(Format::Csv) {
        let mut w = create(&dir.join("replicates.csv"))?;
        write_replicates_csv(&mut w, &records, &[])?;
        w.flush()?;
        files.push("replicates.csv");
    }
    if config.output.wants(Format::Json) {
        files.push("meta.json");
        write_json(&dir.join("meta.json"), &meta("simulate", &config, started, &files, &params.warnings()))?;
    }
    eprintln!("simulated {m} replicates into {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn validate(args: RunArgs) -> Result<ExitCode, CliError> {
    let started = Instant::now();
    let config = load(&args)?;
    let dir = output_dir(&args, &config)?;
    let run = run_validation(&config.validation()?)?;
    let report = &run.report;
    let mut files = vec!["report.json"];
    write_json(&dir.join("report.json"), &serde_json::to_value(report)?)?;
    if config.output.wants(Format::Csv) && !run.records.is_empty() {
        let extra: Vec<(String, Vec<f64>)> = report
            .targets
            .iter()
            .filter(|t| !t.sample.is_empty())
            .map(|t| (format!("rescaled_{}", t.target.name()), t.sample.clone()))
            .collect();
        let mut w = create(&dir.join("samples.csv"))?;
        write_replicates_csv(&mut w, &run.records, &extra)?;
        w.flush()?;
        files.push("samples.csv");
    }
    files.push("meta.json");
    write_json(&dir.join("meta.json"), &meta("validate", &config, started, &files, &report.warnings))?;

    for t in &report.targets {
        let verdict = if t.passed { "PASS" } else { "FAIL" };
        match t.ks {
            Some(ks) => println!(
                "{verdict} {}: KS = {ks:.5}, threshold {:.5}, critical {:.5}, n = {}",
                t.target.name(),
                t.threshold.unwrap_or(f64::NAN),
                t.critical_value.unwrap_or(f64::NAN),
                t.sample_size
            ),
            None => {
                let ratios: Vec<String> = t.volume.iter().map(|v| format!("{:.4}", v.mean_ratio)).collect();
                println!("{verdict} {}: mean ratios [{}]", t.target.name(), ratios.join(", "));
            }
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn classify_cmd(args: ClassifyArgs) -> Result<ExitCode, CliError> {
    let mut family = ScalingFamily::new(args.d, args.k, args.a, args.b)?;
    if let Some(c) = args.c {
        family = family.with_limits(c)?;
    }
    let regime = classify(&family)?;
    let out = json!({
        "kind": regime.kind,
        "l": regime.l,
        "scale": regime.scale.map(|s| s.describe()),
        "scale_exponent": regime.scale.map(|s| format_exponent(&s.exponent)),
        "law": regime.law,
        "reason": regime.reason,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

fn need<T>(value: Option<T>, flag: &str, law: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("--law {law} needs --{flag}")))
}

fn cdf(args: CdfArgs) -> Result<ExitCode, CliError> {
    let law = match args.law {
        LawName::Exp1 => LimitLaw::Exp1,
        LawName::Thm3 => LimitLaw::theorem3(need(args.d, "d", "thm3")?, need(args.k, "k", "thm3")?)?,
        LawName::Thm4 => LimitLaw::theorem4(need(args.d, "d", "thm4")?, need(args.l, "l", "thm4")?)?,
        LawName::Hypoexponential => LimitLaw::hypoexponential(need(args.rates, "rates", "hypoexponential")?)?,
        LawName::Weibull => LimitLaw::WeibullType {
            coefficient: need(args.coefficient, "coefficient", "weibull")?,
            exponent: need(args.exponent, "exponent", "weibull")?,
        },
        LawName::Distance => LimitLaw::DistanceLaw {
            dim: need(args.d, "d", "distance")?,
        },
    };
    law.validate()?;
    let grid: Vec<f64> = match (args.from, args.to) {
        (Some(a), Some(b)) => {
            if args.points < 2 || !(b > a) {
                return Err(CliError::Usage("a grid needs --to > --from and --points >= 2".into()));
            }
            (0..args.points).map(|i| a + (b - a) * i as f64 / (args.points - 1) as f64).collect()
        }
        _ if !args.at.is_empty() => args.at,
        _ => return Err(CliError::Usage("give --at or --from/--to".into())),
    };
    match args.out {
        Some(path) => {
            let mut w = create(&path)?;
            write_cdf_csv(&mut w, &law, &grid)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_cdf_csv(&mut lock, &law, &grid)?;
            lock.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
