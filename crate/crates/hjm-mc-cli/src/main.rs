//! `hjmmc` — Monte Carlo bond-contract pricing under HJM forward-rate
//! models, with a computable decomposition of the discretization error.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use hjm_mc_cli::commands::{
    self, run_error_estimate, run_oracle_check, run_price, run_strong_order, run_study,
    StrongDirection,
};
use hjm_mc_cli::config::{self, Overrides};
use hjm_mc_cli::table;

#[derive(Parser)]
#[command(
    name = "hjmmc",
    version,
    about = "Monte Carlo pricing of bond contracts under HJM forward-rate models, \
             with computable time- and maturity-discretization error estimates"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Price the configured contract; reports the error decomposition when
    /// the scheme supports it and the exact value when a closed form exists
    Price(RunArgs),
    /// Price and insist on the backward error estimate (efd scheme only)
    ErrorEstimate(RunArgs),
    /// One row per refinement level, scaling the base grid
    Study(StudyArgs),
    /// Strong-convergence sweep of the forward scheme against explicit
    /// solutions, refining one discretization direction
    StrongOrder(StrongArgs),
    /// Cross-check the closed-form reference values against independent
    /// derivations (and, optionally, an exact-dynamics simulation)
    OracleCheck(OracleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration (see configs/)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Benchmark preset: ho-lee, vasicek, cir or two-factor; replaces the
    /// model, payoff and geometry sections
    #[arg(long)]
    model: Option<String>,
    /// Forward scheme: efd (nodal coefficients) or efe (cell-averaged)
    #[arg(long)]
    scheme: Option<String>,
    /// Time steps on [0, t_max]
    #[arg(long = "N")]
    n: Option<usize>,
    /// Maturity cells beyond t_max (diagonal grids) or in total (uniform)
    #[arg(long = "L")]
    l: Option<usize>,
    /// Paths for the price estimate
    #[arg(long = "M")]
    m: Option<u64>,
    /// Paths for the backward error estimate (0 skips it)
    #[arg(long = "M-dual")]
    m_dual: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Confidence multiplier for the statistical bands
    #[arg(long)]
    c0: Option<f64>,
    /// Antithetic path pairing: on or off
    #[arg(long, value_name = "on|off")]
    antithetic: Option<String>,
    /// Target statistical band; the path count doubles until it is met
    #[arg(long)]
    tol_stat: Option<f64>,
    /// CSV destination for the result table
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            model: self.model.clone(),
            scheme: self.scheme.clone(),
            n: self.n,
            l: self.l,
            m: self.m,
            m_dual: self.m_dual,
            seed: self.seed,
            c0: self.c0,
            antithetic: self.antithetic.clone(),
            tol_stat: self.tol_stat,
            out: self.out.clone(),
        }
    }

    fn load(&self) -> Result<config::RunConfig> {
        config::load(self.config.as_deref(), &self.overrides())
    }
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated refinement levels (time steps per level), overriding
    /// the file's study section
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
}

#[derive(Args)]
struct StrongArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Which discretization direction to refine: time or maturity
    #[arg(long, default_value = "time")]
    direction: String,
}

#[derive(Args)]
struct OracleArgs {
    /// Also run the brute-force exact-dynamics simulation (slower)
    #[arg(long)]
    with_referee: bool,
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Price(args) => {
            let cfg = args.load()?;
            let row = run_price(&cfg)?;
            emit_rows(&cfg, std::slice::from_ref(&row))
        }
        Cmd::ErrorEstimate(args) => {
            let cfg = args.load()?;
            let row = run_error_estimate(&cfg)?;
            emit_rows(&cfg, std::slice::from_ref(&row))
        }
        Cmd::Study(args) => {
            let mut cfg = args.run.load()?;
            if let Some(levels) = args.levels {
                if levels.is_empty() {
                    bail!("--levels needs at least one level");
                }
                cfg.study = Some(config::StudySection { levels });
            }
            let rows = run_study(&cfg)?;
            emit_rows(&cfg, &rows)
        }
        Cmd::StrongOrder(args) => {
            let cfg = args.run.load()?;
            let direction = StrongDirection::parse(&args.direction)?;
            let (rows, slope) = run_strong_order(&cfg, direction)?;
            print!("{}", commands::strong_to_csv(&rows));
            println!("fitted slope: {slope:.4}");
            if let Some(path) = &cfg.run.output {
                commands::write_strong_csv(path, &rows)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Cmd::OracleCheck(args) => {
            for line in run_oracle_check(args.with_referee)? {
                println!("{line}");
            }
            Ok(())
        }
    }
}

fn emit_rows(cfg: &config::RunConfig, rows: &[table::TableRow]) -> Result<()> {
    print!("{}", table::render_text(rows));
    if let Some(path) = &cfg.run.output {
        table::write_csv(path, rows)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
