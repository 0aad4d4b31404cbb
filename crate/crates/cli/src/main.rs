use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use distreg_cli::report::format_table;
use distreg_cli::{run, simulate_to, CliResult, Command, LoadedConfig, RunOptions};

#[derive(Parser)]
#[command(name = "distreg", version, about = "Distributional regression analyses from a TOML config")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Analysis config (TOML).
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit the model and report fit and residual summaries.
    Fit(RunArgs),
    /// Residual diagnostics: summary, q-q plot, cluster check.
    Diagnose(RunArgs),
    /// Treatment effects on distributional functionals at the covariate profile.
    Effects(RunArgs),
    /// Effects with bootstrap standard errors and percentile intervals.
    Bootstrap(RunArgs),
    /// Two-stage residual inclusion for endogenous regressors.
    Iv(RunArgs),
    /// Sharp or fuzzy regression discontinuity.
    Rdd(RunArgs),
    /// Panel model with unit means and a unit random effect.
    Panel(RunArgs),
    /// Simulate a dataset from a data-generating config.
    Simulate {
        /// Data-generating config (TOML).
        dgp: PathBuf,
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; the truth sidecar goes next to it.
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn analysis(cmd: Command, a: RunArgs) -> CliResult<()> {
    let loaded = LoadedConfig::load(&a.config)?;
    let report = run(&loaded, cmd, &RunOptions { seed: a.seed, output: a.out })?;
    if let Some(e) = &report.effects {
        print!("{}", format_table(&e.table));
    }
    if let Some(sections) = &report.rdd {
        for s in sections {
            println!("bandwidth {}", s.bandwidth.map_or_else(|| "all".into(), |h| h.to_string()));
            match &s.error {
                Some(e) => println!("  {e}"),
                None => print!("{}", format_table(&s.rows.iter().map(|r| r.row.clone()).collect::<Vec<_>>())),
            }
        }
    }
    if let (Some(f), None) = (&report.fit, &report.effects) {
        println!("{} fit: n = {}, log-likelihood = {:.4}, AIC = {:.4}, converged = {}", f.family, f.n, f.loglik, f.aic, f.converged);
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Cmd::Fit(a) => analysis(Command::Fit, a),
        Cmd::Diagnose(a) => analysis(Command::Diagnose, a),
        Cmd::Effects(a) => analysis(Command::Effects, a),
        Cmd::Bootstrap(a) => analysis(Command::Bootstrap, a),
        Cmd::Iv(a) => analysis(Command::Iv, a),
        Cmd::Rdd(a) => analysis(Command::Rdd, a),
        Cmd::Panel(a) => analysis(Command::Panel, a),
        Cmd::Simulate { dgp, n, seed, out } => simulate_to(&dgp, n, seed, &out).map(|(csv, truth)| {
            println!("wrote {} and {}", csv.display(), truth.display());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
