use std::path::PathBuf;
use std::process::ExitCode;

use actinf::env::RewardSide;
use actinf::run::{run, Mode, ModelSource, RunConfig};
use actinf::Error;
use clap::Parser;

/// Simulate an active inference agent in a discrete environment.
#[derive(Debug, Parser)]
#[command(name = "actinf", version)]
struct Cli {
    /// Model file, or a built-in: `tmaze`, `tmaze-absorbing`.
    #[arg(long, default_value = "tmaze")]
    model: ModelSource,

    #[arg(long, default_value_t = 1)]
    episodes: usize,

    /// Required in sample mode; greedy runs default to 0.
    #[arg(long)]
    seed: Option<u64>,

    /// `sample` or `greedy`.
    #[arg(long, default_value = "sample")]
    mode: Mode,

    /// Update Dirichlet counts after every episode.
    #[arg(long)]
    learn: bool,

    /// Directory for the trajectory log and summary.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override whether preferences are normalised.
    #[arg(long, value_name = "true|false")]
    c_normalize: Option<bool>,

    /// Fix the rewarded arm of the built-in T-maze.
    #[arg(long, value_name = "left|right")]
    force_reward_side: Option<RewardSide>,

    /// Print policy posterior tables for every step.
    #[arg(long)]
    emit_tables: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = RunConfig {
        model: cli.model,
        episodes: cli.episodes,
        seed: cli.seed,
        mode: cli.mode,
        learn: cli.learn,
        out: cli.out,
        c_normalize: cli.c_normalize,
        force_reward_side: cli.force_reward_side,
        emit_tables: cli.emit_tables,
    };
    let output = match run(&config) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    if let Some(dir) = &config.out {
        if let Err(e) = output.write_to(dir) {
            return fail(&e);
        }
    }
    if config.emit_tables {
        print!("{}", output.tables());
    }
    match serde_json::to_string_pretty(&output.summary) {
        Ok(s) if config.out.is_none() => println!("{s}"),
        Ok(_) => {}
        Err(e) => return fail(&e.into()),
    }
    ExitCode::SUCCESS
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}
