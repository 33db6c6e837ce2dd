//! Configuration-driven driver: reads one JSON model description, runs a
//! simulation or a certification command, and writes CSV traces and JSON
//! reports. Exit codes: 0 all gates passed, 1 a gated check failed,
//! 2 malformed input, 3 the model description is inconsistent.

mod checks;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use gyrostat_core::diagnostics::integral_family;
use gyrostat_core::integrate::simulate;

use checks::{CheckRow, RunContext};
use config::CliError;

#[derive(Parser)]
#[command(
    name = "gyrostat",
    version,
    about = "Simulation and certification for multidimensional gyrostat models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Model description file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for reports and traces.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Tolerance override, repeatable: --tol name=value.
    #[arg(long = "tol", global = true, value_parser = parse_tol)]
    tol: Vec<(String, f64)>,

    /// Suppresses the per-check summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured initial state and write trajectory.csv
    /// and drift.csv.
    Simulate,
    /// Polynomial-pair residual at random points.
    CheckLax,
    /// Bracket residuals of the asserted integral pairs.
    CheckInvolution,
    /// Casimir brackets against random probe functions.
    CheckCasimirs,
    /// Numeric rank of the integral gradients against the leaf count.
    CheckRank,
    /// Momentum translation as a bracket morphism.
    CheckPoissonMap,
    /// Matrix equations against the classical vector equations at n=3.
    CrosscheckSo3,
    /// Rolling-cone record along the configured trajectory, with
    /// zhukovskiy.csv output.
    ZhukovskiyTrace,
    /// Every check that applies to the configured model.
    CertifyAll,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got \"{s}\""))?;
    let value: f64 = value
        .parse()
        .map_err(|e| format!("bad tolerance value in \"{s}\": {e}"))?;
    Ok((name.to_string(), value))
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Schema("--config is required".into()))?;
    let cfg = config::load(config_path)?;
    let spec = config::build_spec(&cfg)?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let tolerances = checks::resolve_tolerances(&cfg, &cli.tol)?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Schema(format!("cannot create {}: {e}", cli.out.display())))?;
    let ctx = RunContext {
        spec,
        cfg,
        seed,
        tolerances,
    };

    let rows: Vec<CheckRow> = match cli.command {
        Command::Simulate => {
            let x0 = config::initial_point(&ctx.cfg, &ctx.spec)?;
            let method = config::integrator(&ctx.cfg)?;
            let (dt, span) = config::window(&ctx.cfg)?;
            let traj = simulate(method, &ctx.spec, &x0, dt, span)
                .map_err(|e| CliError::Model(e.to_string()))?;
            let fam = integral_family(&ctx.spec).map_err(|e| CliError::Model(e.to_string()))?;
            output::write_trajectory_csv(&cli.out.join("trajectory.csv"), &ctx.spec, &traj)?;
            output::write_drift_csv(&cli.out.join("drift.csv"), &fam, &traj)?;
            if !cli.quiet {
                println!(
                    "wrote {} samples to {}",
                    traj.points.len(),
                    cli.out.join("trajectory.csv").display()
                );
            }
            return Ok(0);
        }
        Command::CheckLax => vec![checks::lax_check(&ctx)?],
        Command::CheckInvolution => vec![checks::involution_check(&ctx)?],
        Command::CheckCasimirs => vec![checks::casimir_check(&ctx)?],
        Command::CheckRank => vec![checks::rank_check(&ctx)?],
        Command::CheckPoissonMap => vec![checks::poisson_map_row(&ctx)?],
        Command::CrosscheckSo3 => vec![checks::crosscheck_row(&ctx)?],
        Command::ZhukovskiyTrace => {
            let (trace, rows) = checks::rolling_cone_trace(&ctx)?;
            output::write_zh_csv(&cli.out.join("zhukovskiy.csv"), &trace)?;
            rows
        }
        Command::CertifyAll => checks::certify_all(&ctx)?,
    };

    let text = output::write_report(&cli.out.join("report.json"), &rows)?;
    if !cli.quiet {
        print!("{text}");
    }
    Ok(if rows.iter().all(|r| r.pass) { 0 } else { 1 })
}
