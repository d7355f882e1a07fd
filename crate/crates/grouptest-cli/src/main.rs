//! Command-line front end: rate-bound curves, Monte Carlo sweeps,
//! single-instance decoding, and the Property-P audit.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, malformed
//! ranges, invalid configs), 3 for input errors (unreadable or
//! inconsistent design/outcome files), 1 for anything internal.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use grouptest::bounds::{
    locate_crossovers, theta_range, theta_star, CurveKind, OptimizerSettings, RateCurve,
};
use grouptest::decode::scomp_decode;
use grouptest::decode::TieRule;
use grouptest::design::{p_from_k, Outcomes, PMode, TestDesign};
use grouptest::sim::{decode_with, property_p_audit, run_sweep, Decoder, SweepConfig, SweepResult};

#[derive(Parser)]
#[command(
    name = "grouptest",
    version,
    about = "Bernoulli group testing: rate bounds, decoders, and simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the analytic rate curves over a theta grid.
    Bounds(BoundsArgs),
    /// Monte Carlo success-probability sweep over a T grid.
    Simulate(SimulateArgs),
    /// Decode a single instance from design and outcome files.
    Decode(DecodeArgs),
    /// Property-P audit: decoders must reproduce a satisfying DD output.
    Audit(AuditArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Theta grid as lo:hi:step, each in (0, 1).
    #[arg(long, default_value = "0.01:0.99:0.01")]
    theta: String,
    /// Comma-separated curves: capacity,dd_lower,dd_upper,comp,lipo.
    #[arg(long, default_value = "capacity,dd_lower,dd_upper,comp,lipo")]
    curves: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of items.
    #[arg(long)]
    n: usize,
    /// Number of defectives.
    #[arg(long)]
    k: usize,
    /// Bernoulli parameter: `auto` for 1/(k+1), `nu` or `nu:X` for
    /// min(X/k, 1), or an explicit probability.
    #[arg(long, default_value = "auto")]
    p: String,
    /// Test-count grid as lo:hi:step.
    #[arg(long)]
    t: String,
    /// Trials per grid point.
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Comma-separated decoders; any of comp, dd, scomp, lp-malioutov,
    /// lp-crude, lp-half, lp-randomized, oracle.
    #[arg(long, default_value = "comp,dd,scomp,lp-malioutov")]
    decoders: String,
    /// Master seed; every trial derives its own stream from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct DecodeArgs {
    /// Design file: first line `n t`, then t rows of n chars 0/1.
    #[arg(long)]
    design: PathBuf,
    /// Outcomes file: one line of t chars 0/1.
    #[arg(long)]
    outcomes: PathBuf,
    /// Decoder name (same set as `simulate --decoders`).
    #[arg(long)]
    decoder: String,
    /// SCOMP tie rule.
    #[arg(long, value_enum, default_value = "lowest")]
    tie: Tie,
    /// Seed for randomized rounding or random tie-breaking.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Tie {
    Lowest,
    Random,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Bernoulli parameter; same syntax as `simulate --p`.
    #[arg(long, default_value = "auto")]
    p: String,
    /// Number of tests per instance.
    #[arg(long)]
    t: usize,
    /// Number of random instances.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

enum CliError {
    Usage(String),
    Input(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Internal(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Internal(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(err: E) -> CliError {
    CliError::Usage(err.to_string())
}

fn input<E: std::fmt::Display>(err: E) -> CliError {
    CliError::Input(err.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bounds(args) => cmd_bounds(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Audit(args) => cmd_audit(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn parse_range_f64(spec: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("range '{spec}' is not lo:hi:step")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| s.parse().map_err(|_| CliError::Usage(format!("bad number '{s}' in range"))))
        .collect::<Result<_, _>>()?;
    Ok((nums[0], nums[1], nums[2]))
}

fn parse_range_usize(spec: &str) -> Result<Vec<usize>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("range '{spec}' is not lo:hi:step")));
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|s| s.parse().map_err(|_| CliError::Usage(format!("bad integer '{s}' in range"))))
        .collect::<Result<_, _>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if step == 0 || hi < lo {
        return Err(CliError::Usage(format!("empty or backwards range '{spec}'")));
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn parse_p_mode(spec: &str) -> Result<PMode, CliError> {
    if spec == "auto" {
        return Ok(PMode::Reciprocal);
    }
    if spec == "nu" {
        return Ok(PMode::NuOverK(1.0));
    }
    if let Some(rest) = spec.strip_prefix("nu:") {
        let nu: f64 =
            rest.parse().map_err(|_| CliError::Usage(format!("bad nu value '{rest}'")))?;
        if nu <= 0.0 {
            return Err(CliError::Usage(format!("nu must be positive, got {nu}")));
        }
        return Ok(PMode::NuOverK(nu));
    }
    let p: f64 = spec.parse().map_err(|_| {
        CliError::Usage(format!("bad probability '{spec}' (try auto, nu:X, or a number)"))
    })?;
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::Usage(format!("probability {p} outside [0, 1]")));
    }
    Ok(PMode::Explicit(p))
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display()))),
    }
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), CliError> {
    let (lo, hi, step) = parse_range_f64(&args.theta)?;
    let thetas = theta_range(lo, hi, step).map_err(usage)?;
    let kinds: Vec<CurveKind> = args
        .curves
        .split(',')
        .map(|name| CurveKind::from_str(name.trim()).map_err(usage))
        .collect::<Result<_, _>>()?;
    if kinds.is_empty() {
        return Err(CliError::Usage("no curves requested".into()));
    }

    let opt = OptimizerSettings::default();
    let curves: Vec<RateCurve> = kinds
        .iter()
        .map(|&kind| RateCurve::sample(kind, &thetas, &opt).map_err(usage))
        .collect::<Result<_, _>>()?;
    let cross = locate_crossovers(&opt);
    let metadata = [
        ("theta_star", theta_star()),
        ("capacity_flat_end", cross.capacity_flat_end),
        ("capacity_closed_form_start", cross.capacity_closed_form_start),
        ("dd_upper_plateau_end", cross.dd_upper_plateau_end),
        ("dd_optimal_start", cross.dd_optimal_start),
    ];

    let content = match args.output.format {
        Format::Csv => {
            let mut out = String::new();
            for (name, value) in metadata {
                out.push_str(&format!("# {name},{value:.6}\n"));
            }
            out.push_str("theta");
            for curve in &curves {
                out.push(',');
                out.push_str(&curve.name);
            }
            out.push('\n');
            for (row, &theta) in thetas.iter().enumerate() {
                out.push_str(&format!("{theta:.6}"));
                for curve in &curves {
                    out.push_str(&format!(",{:.6}", curve.samples[row].1));
                }
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let meta: serde_json::Map<String, serde_json::Value> =
                metadata.iter().map(|(name, value)| (name.to_string(), json!(value))).collect();
            let rows: Vec<serde_json::Value> = thetas
                .iter()
                .enumerate()
                .map(|(row, &theta)| {
                    let mut entry = serde_json::Map::new();
                    entry.insert("theta".into(), json!(theta));
                    for curve in &curves {
                        entry.insert(curve.name.clone(), json!(curve.samples[row].1));
                    }
                    serde_json::Value::Object(entry)
                })
                .collect();
            let doc = json!({ "metadata": meta, "samples": rows });
            format!(
                "{}\n",
                serde_json::to_string_pretty(&doc)
                    .map_err(|e| CliError::Internal(e.to_string()))?
            )
        }
    };
    write_output(&args.output.out, &content)
}

fn sweep_json(result: &SweepResult) -> serde_json::Value {
    // Mirrors the CSV columns one-to-one.
    let rows: Vec<serde_json::Value> = result
        .cells
        .iter()
        .map(|cell| {
            let (lo, hi) = cell.wilson_ci();
            json!({
                "decoder": cell.decoder.name(),
                "t": cell.t,
                "trials": cell.trials,
                "successes": cell.successes,
                "success_rate": cell.success_rate(),
                "ci_low": lo,
                "ci_high": hi,
            })
        })
        .collect();
    json!(rows)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let decoders: Vec<Decoder> = args
        .decoders
        .split(',')
        .map(|name| Decoder::from_str(name.trim()).map_err(usage))
        .collect::<Result<_, _>>()?;
    let config = SweepConfig {
        n: args.n,
        k: args.k,
        p_mode: parse_p_mode(&args.p)?,
        t_values: parse_range_usize(&args.t)?,
        trials: args.trials,
        decoders,
        master_seed: args.seed,
    };
    config.validate().map_err(usage)?;
    let result = run_sweep(&config).map_err(|e| CliError::Internal(e.to_string()))?;
    let content = match args.output.format {
        Format::Csv => result.to_csv(),
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&sweep_json(&result))
                .map_err(|e| CliError::Internal(e.to_string()))?
        ),
    };
    write_output(&args.output.out, &content)
}

fn cmd_decode(args: DecodeArgs) -> Result<(), CliError> {
    let decoder = Decoder::from_str(&args.decoder).map_err(usage)?;
    let design_text = fs::read_to_string(&args.design)
        .map_err(|e| CliError::Input(format!("reading {}: {e}", args.design.display())))?;
    let outcome_text = fs::read_to_string(&args.outcomes)
        .map_err(|e| CliError::Input(format!("reading {}: {e}", args.outcomes.display())))?;
    let design = TestDesign::from_text(&design_text).map_err(input)?;
    let outcomes = Outcomes::from_text(&outcome_text).map_err(input)?;

    let result = if decoder == Decoder::Scomp && args.tie == Tie::Random {
        scomp_decode(&design, &outcomes, TieRule::Random { seed: args.seed })
    } else {
        decode_with(decoder, &design, &outcomes, args.seed)
    };
    let result = result.map_err(|e| match e {
        grouptest::Error::OracleTooLarge { .. } => usage(e),
        other => input(other),
    })?;

    println!("estimate: {}", result.estimate);
    println!("satisfying: {}", result.satisfying);
    if matches!(decoder, Decoder::Dd | Decoder::Scomp) {
        println!("dd_core: {}", result.dd_core);
    }
    if result.diagnostics.failed {
        println!("failed: true");
    }
    Ok(())
}

fn cmd_audit(args: AuditArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    let p = p_from_k(args.k, parse_p_mode(&args.p)?);
    let report =
        property_p_audit(args.n, args.k, p, args.t, args.trials, args.seed).map_err(usage)?;
    let content = match args.output.format {
        Format::Csv => {
            let mut out = String::from("record,name,value\n");
            out.push_str(&format!("summary,instances,{}\n", report.instances));
            out.push_str(&format!("summary,dd_satisfying,{}\n", report.dd_satisfying));
            out.push_str(&format!("summary,lp_integral,{}\n", report.lp_integral));
            out.push_str(&format!("summary,oracle_enabled,{}\n", u8::from(report.oracle_enabled)));
            for stat in &report.stats {
                out.push_str(&format!("agreements,{},{}\n", stat.check, stat.agreements));
                out.push_str(&format!("violations,{},{}\n", stat.check, stat.violations));
            }
            out
        }
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?
        ),
    };
    write_output(&args.output.out, &content)?;
    if report.total_violations() > 0 {
        eprintln!("warning: {} violations found", report.total_violations());
    }
    Ok(())
}
