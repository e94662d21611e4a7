use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use adclear::config::{self, ConfigDocument, ConfigError, InstanceConfig};
use adclear::duopoly::{self, EquilibriumKind};
use adclear::exante;
use adclear::hotelling;
use adclear::monopoly;
use adclear::report::{self, Format};
use adclear::simulation::{self, ScenarioConfig};
use adclear::verify;
use adclear::Supply;

const THREADS_ENV: &str = "ADCLEAR_THREADS";

#[derive(Parser)]
#[command(
    name = "adclear",
    version,
    about = "Sponsored-search market clearing and duopoly equilibria"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON scenario or instance file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimal price and allocation of a single engine.
    Monopoly {
        #[command(flatten)]
        common: Common,
    },
    /// Leader/follower price equilibrium.
    Duopoly {
        #[command(flatten)]
        common: Common,
    },
    /// Clearing price from uniform value and mean budget.
    Exante {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        advertisers: usize,
        #[arg(long)]
        expected_budget: f64,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long, default_value_t = 1.0)]
        supply: f64,
    },
    /// User shares when the follower sits opposite the leader.
    Hotelling {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        zeta: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1.0)]
        supply: f64,
    },
    /// Monte Carlo sweep over advertiser counts.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Randomized property checks.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Violation(String),
    #[error("cannot write output: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Output(_) => 1,
            CliError::Violation(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

fn solver<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Solver(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("adclear: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Monopoly { common } => run_monopoly(&common),
        Command::Duopoly { common } => run_duopoly(&common),
        Command::Exante {
            common,
            advertisers,
            expected_budget,
            lo,
            hi,
            supply,
        } => run_exante(&common, advertisers, expected_budget, lo, hi, supply),
        Command::Hotelling {
            common,
            zeta,
            q,
            supply,
        } => run_hotelling(&common, zeta, q, supply),
        Command::Sweep { common } => run_sweep(&common),
        Command::Verify { common, trials } => run_verify(&common, trials),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes a single table: CSV with a header row, or a JSON value.
fn write_table<T: Serialize>(
    common: &Common,
    header: &[&str],
    rows: &[Vec<String>],
    json: &T,
) -> Result<(), CliError> {
    let mut out = output(common.out.as_deref())?;
    match common.format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(header).map_err(io::Error::other)?;
            for row in rows {
                w.write_record(row).map_err(io::Error::other)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, json).map_err(io::Error::other)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    report::format_significant(x, 9)
}

fn load_instance(common: &Common) -> Result<InstanceConfig, CliError> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("--config is required".into()))?;
    match config::parse_config(path)? {
        ConfigDocument::Instance(inst) => Ok(inst),
        ConfigDocument::Scenario(_) => {
            Err(CliError::Config(ConfigError::Missing("advertisers".into())))
        }
    }
}

fn load_scenario(common: &Common) -> Result<ScenarioConfig, CliError> {
    let mut scenario = match common.config.as_deref() {
        Some(path) => match config::parse_config(path)? {
            ConfigDocument::Scenario(s) => s,
            ConfigDocument::Instance(_) => {
                return Err(CliError::Config(ConfigError::Unknown("advertisers".into())))
            }
        },
        None => ScenarioConfig::baseline(0),
    };
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn run_monopoly(common: &Common) -> Result<(), CliError> {
    let inst = load_instance(common)?;
    let outcome = monopoly::solve(&inst.pool, inst.supply()).map_err(solver)?;
    let rows: Vec<Vec<String>> = inst
        .pool
        .entries()
        .iter()
        .zip(outcome.allocation.quantities())
        .map(|(e, q)| {
            vec![
                e.id().0.to_string(),
                num(e.value()),
                num(e.effective_budget()),
                num(q),
                num(outcome.price),
            ]
        })
        .collect();
    write_table(common, &["id", "v", "B", "q", "price"], &rows, &outcome)
}

fn run_duopoly(common: &Common) -> Result<(), CliError> {
    let inst = load_instance(common)?;
    let scenario = inst.as_scenario(None);
    let (s1, s2) = scenario.engine_supplies();
    let eq = duopoly::solve_equilibrium(&inst.pool, s1, s2).map_err(solver)?;
    let metrics = duopoly::duopoly_metrics(&eq, &inst.pool, None);
    let verified = match eq.kind {
        EquilibriumKind::PureNe => {
            duopoly::verify_ne(&inst.pool, s1, s2, eq.p1, eq.p2).map_err(solver)?
        }
        _ => true,
    };
    let kind = serde_json::to_value(eq.kind).expect("kind serializes");
    let kind = kind.as_str().unwrap_or_default().to_string();
    let row = vec![
        num(eq.p1),
        num(eq.p2),
        num(eq.ratio),
        kind,
        num(metrics.r1),
        num(metrics.r2),
        num(metrics.advertiser_utility),
        num(metrics.social_welfare),
        eq.partition.split.map(|s| num(s.alpha)).unwrap_or_default(),
    ];
    let doc = json!({ "equilibrium": eq, "metrics": metrics, "verified": verified });
    write_table(
        common,
        &["p1", "p2", "ratio", "kind", "R1", "R2", "UA", "SW", "alpha"],
        &[row],
        &doc,
    )?;
    if verified {
        Ok(())
    } else {
        Err(CliError::Violation(
            "equilibrium failed verification".into(),
        ))
    }
}

fn positive_supply(total: f64) -> Result<Supply, CliError> {
    Supply::new(total)
        .ok()
        .filter(|s| s.total() > 0.0)
        .ok_or_else(|| CliError::Usage(format!("--supply must be positive, got {total}")))
}

fn run_exante(
    common: &Common,
    advertisers: usize,
    expected_budget: f64,
    lo: f64,
    hi: f64,
    supply: f64,
) -> Result<(), CliError> {
    let supply = positive_supply(supply)?;
    let clearing = exante::clearing_price_uniform(advertisers, expected_budget, lo, hi, supply)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let regime = serde_json::to_value(clearing.regime).expect("regime serializes");
    let row = vec![
        num(clearing.price),
        regime.as_str().unwrap_or_default().to_string(),
    ];
    write_table(common, &["price", "regime"], &[row], &clearing)
}

fn run_hotelling(common: &Common, zeta: f64, q: f64, supply: f64) -> Result<(), CliError> {
    let supply = positive_supply(supply)?;
    if !(0.0..=1.0).contains(&zeta) || q <= 0.0 {
        return Err(CliError::Usage(format!(
            "need zeta in [0, 1] and q > 0, got zeta={zeta}, q={q}"
        )));
    }
    let shares = hotelling::equilibrium_shares(zeta, q, supply);
    let row = vec![
        num(shares.n1),
        num(shares.n2),
        num(shares.s1),
        num(shares.s2),
    ];
    write_table(common, &["n1", "n2", "S1", "S2"], &[row], &shares)
}

fn run_sweep(common: &Common) -> Result<(), CliError> {
    let scenario = load_scenario(common)?;
    let summary = simulation::run_sweep(&scenario).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = output(common.out.as_deref())?;
    report::emit(&summary, common.format.into(), &mut out)?;
    out.flush()?;
    let failed: usize = summary.rows.iter().map(|r| r.errors).sum();
    if failed > 0 {
        return Err(CliError::Solver(format!(
            "{failed} instances failed to solve"
        )));
    }
    Ok(())
}

fn run_verify(common: &Common, trials: usize) -> Result<(), CliError> {
    let seed = common.seed.unwrap_or(0);
    let report = verify::verify_suite(trials, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let rows: Vec<Vec<String>> = report
        .properties
        .iter()
        .map(|p| {
            vec![
                p.property.clone(),
                p.checks.to_string(),
                p.violations.to_string(),
                p.errors.to_string(),
            ]
        })
        .collect();
    write_table(
        common,
        &["property", "checks", "violations", "errors"],
        &rows,
        &report,
    )?;
    if report.total_violations() > 0 {
        Err(CliError::Violation(format!(
            "{} property violations",
            report.total_violations()
        )))
    } else if report.total_errors() > 0 {
        Err(CliError::Solver(format!(
            "{} solver errors",
            report.total_errors()
        )))
    } else {
        Ok(())
    }
}
