//! proctensor: sampling campaigns and closed-form evaluations for random
//! process tensors.

mod campaign;
mod config;
mod evals;
mod manifest;
mod records;
mod seeds;
mod svg;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{CommonArgs, ExperimentConfig, TailArgs};

#[derive(Parser)]
#[command(name = "proctensor", version, about = "Random process tensor experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean non-Markovianity estimate over a (k, d_E) grid with analytic
    /// bound overlays.
    Fig4(CommonArgs),
    /// Purity: Monte-Carlo scans and exact closed forms.
    #[command(subcommand)]
    Purity(PurityCommand),
    /// Tail exceedance fractions against the concentration curve.
    Tail(TailArgs),
    /// Paired fine vs coarse-grained estimates from shared unitary draws.
    Coarse(CommonArgs),
    /// Weingarten function values.
    #[command(subcommand)]
    Wg(WgCommand),
    /// Analytic distance bound and concentration constants.
    #[command(subcommand)]
    Bound(BoundCommand),
}

#[derive(Subcommand)]
enum PurityCommand {
    /// Sampled purity statistics over the configured grid.
    Scan(CommonArgs),
    /// Exact average purity for independently drawn step unitaries.
    Ergodic(PointArgs),
    /// Exact average purity for one shared step unitary.
    Ti(PointArgs),
    /// Average Choi state for one shared step unitary (k <= 2), as JSON.
    AvgState(PointArgs),
}

#[derive(Args)]
struct PointArgs {
    /// Environment dimension.
    #[arg(long)]
    d_e: usize,
    /// System dimension.
    #[arg(long, default_value_t = 2)]
    d_s: usize,
    /// Number of steps.
    #[arg(long, default_value_t = 1)]
    k: usize,
}

#[derive(Subcommand)]
enum WgCommand {
    /// Print exact rational and double values for S_n at dimension d.
    Eval(WgArgs),
}

#[derive(Args)]
struct WgArgs {
    /// Permutation degree n.
    #[arg(long)]
    n: usize,
    /// Unitary group dimension d.
    #[arg(long)]
    d: u64,
    /// Cycle type like "2+1" or "2,1"; all classes when omitted.
    #[arg(long)]
    cycle_type: Option<String>,
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Print the distance bound and concentration constants as JSON.
    Eval(BoundArgs),
}

#[derive(Args)]
struct BoundArgs {
    /// Environment dimension.
    #[arg(long)]
    d_e: usize,
    /// System dimension.
    #[arg(long, default_value_t = 2)]
    d_s: usize,
    /// Number of steps.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Interaction mode: random | constant.
    #[arg(long, default_value = "random")]
    mode: String,
    /// Average purity override; defaults to the mode's closed form.
    #[arg(long)]
    purity: Option<f64>,
}

fn parse_mode_arg(text: &str) -> Result<proctensor_core::process::InteractionMode> {
    use proctensor_core::process::InteractionMode;
    match text.to_ascii_lowercase().as_str() {
        "random" => Ok(InteractionMode::Random),
        "constant" => Ok(InteractionMode::Constant),
        other => anyhow::bail!("mode must be random or constant, got {other:?}"),
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Fig4(args) => {
            let cfg = ExperimentConfig::resolve("fig4", &args, None)?;
            campaign::run_fig4(&cfg)
        }
        Command::Purity(PurityCommand::Scan(args)) => {
            let cfg = ExperimentConfig::resolve("purity-scan", &args, None)?;
            campaign::run_purity_scan(&cfg)
        }
        Command::Purity(PurityCommand::Ergodic(p)) => {
            evals::purity_eval("ergodic", p.d_e, p.d_s, p.k)
        }
        Command::Purity(PurityCommand::Ti(p)) => evals::purity_eval("ti", p.d_e, p.d_s, p.k),
        Command::Purity(PurityCommand::AvgState(p)) => evals::avg_state_eval(p.d_e, p.d_s, p.k),
        Command::Tail(args) => {
            let cfg =
                ExperimentConfig::resolve("tail", &args.common, args.epsilons.as_deref())?;
            campaign::run_tail(&cfg)
        }
        Command::Coarse(args) => {
            let cfg = ExperimentConfig::resolve("coarse-grain", &args, None)?;
            campaign::run_coarse(&cfg)
        }
        Command::Wg(WgCommand::Eval(w)) => evals::wg_eval(w.n, w.d, w.cycle_type.as_deref()),
        Command::Bound(BoundCommand::Eval(b)) => {
            evals::bound_eval(b.d_e, b.d_s, b.k, parse_mode_arg(&b.mode)?, b.purity)
        }
    }
}
