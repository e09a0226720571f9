use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mubtomo::estimators::{run_estimator, BayesConfig, EstimatorKind, LeastBiasConfig, Measure};
use mubtomo::io::{self, EstimatorResultFile, Format, MubSetFile, RunConfig, CONFIG_ENV};
use mubtomo::negativity::NegativityConfig;
use mubtomo::reproduce::{self, ReproduceConfig, Target};
use mubtomo::{build_mub, verify_mub, Error};

/// Exit status when a reproduction target has failing rows.
const EXIT_MISMATCH: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "mubtomo", version, about = "Incomplete tomography with mutually unbiased bases")]
struct Cli {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct and verify a complete MUB set.
    BuildMub(BuildMub),
    /// Run an estimator on a table of measured probabilities.
    Estimate(Estimate),
    /// Most negative ULIN eigenvalue over pure states, for every M.
    LambdaMin(LambdaMin),
    /// Recompute a published table or figure and compare.
    Reproduce(Reproduce),
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args)]
struct BuildMub {
    #[arg(long)]
    dim: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Estimate {
    /// Probability table (.json or .csv).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Use only the first M rows of the table.
    #[arg(long)]
    measured: Option<usize>,
    /// Expected dimension; checked against the table.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    kind: Option<EstimatorKind>,
    #[arg(long)]
    measure: Option<Measure>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct LambdaMin {
    /// Comma-separated prime powers.
    #[arg(long, value_delimiter = ',', required = true)]
    dim: Vec<usize>,
    /// A single M; all of 1..=d+1 when absent.
    #[arg(long)]
    measured: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Reproduce {
    target: Target,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

enum Outcome {
    Done,
    Mismatch,
    NotConverged(String),
}

fn emit(output: &Output, text: &str) -> mubtomo::Result<()> {
    match &output.out {
        Some(p) => io::atomic_write(p, text.as_bytes()),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())?;
            s.flush()?;
            Ok(())
        }
    }
}

fn pick_format(output: &Output, cfg: &RunConfig, fallback: Format) -> Format {
    output.format.or(cfg.format).or_else(|| output.out.as_deref().and_then(Format::from_path)).unwrap_or(fallback)
}

fn build_mub_cmd(a: &BuildMub, cfg: &RunConfig) -> mubtomo::Result<Outcome> {
    let d = a.dim.or(cfg.dim).ok_or_else(|| Error::InvalidInput("--dim is required".into()))?;
    let m = build_mub(d)?;
    let report = verify_mub(&m, 1e-10);
    let format = pick_format(&a.output, cfg, Format::Json);
    let text = match format {
        Format::Json => io::to_json(&MubSetFile::new(&m, Some(report.clone())))?,
        Format::Csv => io::mub_csv(&m)?,
    };
    emit(&a.output, &text)?;
    eprintln!("d = {}: max deviation {:.3e} ({})", d, report.max_deviation, if report.pass { "pass" } else { "FAIL" });
    if !report.pass {
        return Err(Error::Inconsistent(format!("MUB verification failed with deviation {:.3e}", report.max_deviation)));
    }
    Ok(Outcome::Done)
}

fn estimate_cmd(a: &Estimate, cfg: &RunConfig) -> mubtomo::Result<Outcome> {
    let path = a.input.as_ref().or(cfg.input.as_ref()).ok_or_else(|| Error::InvalidInput("--in is required".into()))?;
    let mut t = io::read_table(path)?;
    if let Some(d) = a.dim.or(cfg.dim) {
        if d != t.dim {
            return Err(Error::DimensionMismatch(format!("--dim {} but the table has d = {}", d, t.dim)));
        }
    }
    if let Some(mm) = a.measured.or(cfg.measured) {
        if mm == 0 || mm > t.m {
            return Err(Error::InvalidInput(format!("--measured {} but the table has {} rows", mm, t.m)));
        }
        t = t.truncate(mm);
    }
    let m = build_mub(t.dim)?;
    let kind = a.kind.unwrap_or(cfg.kind);
    let lb = LeastBiasConfig {
        mu: a.mu.unwrap_or(cfg.mu),
        epsilon: a.epsilon.or(cfg.epsilon),
        tol: a.tol.unwrap_or(cfg.tol),
        max_iter: a.max_iter.unwrap_or(cfg.max_iter),
        measure: a.measure.unwrap_or(cfg.measure),
        ..LeastBiasConfig::default()
    };
    let bayes = BayesConfig { n_samples: a.samples.unwrap_or(cfg.samples), seed: a.seed.unwrap_or(cfg.seed), ..BayesConfig::default() };
    let r = run_estimator(kind, &t, &m, &lb, &bayes)?;
    let format = pick_format(&a.output, cfg, Format::Json);
    let text = match format {
        Format::Json => io::to_json(&EstimatorResultFile::from(&r))?,
        Format::Csv => io::matrix_csv(&r.estimator)?,
    };
    emit(&a.output, &text)?;
    if r.converged {
        Ok(Outcome::Done)
    } else {
        Ok(Outcome::NotConverged(format!("{} did not converge (residual {:.3e}); best estimate written", kind, r.residual)))
    }
}

fn lambda_min_cmd(a: &LambdaMin, cfg: &RunConfig) -> mubtomo::Result<Outcome> {
    let restarts = a.restarts.unwrap_or(cfg.restarts);
    let seed = a.seed.unwrap_or(cfg.seed);
    let ncfg = NegativityConfig { tol: a.tol.unwrap_or(cfg.tol), ..NegativityConfig::default() };
    let results = match a.measured.or(cfg.measured) {
        None => reproduce::lambda_min_table(&a.dim, restarts, seed, &ncfg)?,
        Some(mm) => {
            let mut out = Vec::new();
            for &d in &a.dim {
                let m = build_mub(d)?;
                if mm == 0 || mm > d + 1 {
                    return Err(Error::InvalidInput(format!("--measured {} outside 1..={} for d = {}", mm, d + 1, d)));
                }
                out.push(mubtomo::negativity::lambda_min_scan(&m, mm, restarts, seed, &ncfg)?);
            }
            out
        }
    };
    let format = pick_format(&a.output, cfg, Format::Csv);
    let text = match format {
        Format::Csv => io::lambda_min_csv(&results)?,
        Format::Json => io::to_json(&io::lambda_min_rows(&results))?,
    };
    emit(&a.output, &text)?;
    let stuck: Vec<String> = results.iter().filter(|r| !r.converged).map(|r| format!("d={} M={}", r.d, r.m)).collect();
    if stuck.is_empty() {
        Ok(Outcome::Done)
    } else {
        Ok(Outcome::NotConverged(format!("best restart did not converge at {}", stuck.join(", "))))
    }
}

fn reproduce_cmd(a: &Reproduce, cfg: &RunConfig) -> mubtomo::Result<Outcome> {
    let mut rc = ReproduceConfig { seed: a.seed.unwrap_or(cfg.seed), ..ReproduceConfig::default() };
    rc.restarts = a.restarts.unwrap_or(rc.restarts);
    rc.bayes.seed = rc.seed;
    rc.bayes.n_samples = a.samples.unwrap_or(rc.bayes.n_samples);
    let report = reproduce::reproduce(a.target, &rc)?;
    eprintln!("{}", report);
    let format = pick_format(&a.output, cfg, Format::Json);
    if format == Format::Csv {
        return Err(Error::InvalidInput("reproduce writes JSON only".into()));
    }
    emit(&a.output, &io::to_json(&report)?)?;
    Ok(if report.pass() { Outcome::Done } else { Outcome::Mismatch })
}

fn load_config(path: Option<&Path>) -> mubtomo::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_config(cli.config.as_deref()).and_then(|cfg| match &cli.command {
        Command::BuildMub(a) => build_mub_cmd(a, &cfg),
        Command::Estimate(a) => estimate_cmd(a, &cfg),
        Command::LambdaMin(a) => lambda_min_cmd(a, &cfg),
        Command::Reproduce(a) => reproduce_cmd(a, &cfg),
    });
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Mismatch) => ExitCode::from(EXIT_MISMATCH),
        Ok(Outcome::NotConverged(msg)) => {
            eprintln!("warning: {}", msg);
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
