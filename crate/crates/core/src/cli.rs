//! Command-line front end: `fraclab <command> --config <path> --out <dir>`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::error::Result;
use crate::experiment::{self as ex, parse_config, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CaputoCheck,
    SymbolBracket,
    CharSample,
    Lemma21,
    Garding,
    Lemma61,
    Solve,
    CarlemanSweep,
    UcpDemo,
    ContinuationPlan,
}

#[derive(Debug, Parser)]
#[command(name = "fraclab", version, about = "Fractional diffusion and Carleman-estimate experiments")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for CSV, JSON and plot data.
    #[arg(long)]
    pub out: PathBuf,
    /// RNG seed; overrides the `seed` field of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

fn dispatch<C, F>(text: &str, seed: Option<u64>, config_seed: fn(&C) -> Option<u64>, run: F) -> Result<Outcome>
where
    C: serde::de::DeserializeOwned,
    F: FnOnce(&C, u64) -> Result<Outcome>,
{
    let cfg: C = parse_config(text)?;
    let seed = seed.or_else(|| config_seed(&cfg)).unwrap_or(0);
    run(&cfg, seed)
}

/// Parses the config for `command`, runs it and returns the outcome without
/// writing anything.
pub fn execute(command: Command, config_text: &str, seed: Option<u64>) -> Result<Outcome> {
    match command {
        Command::CaputoCheck => dispatch(config_text, seed, |c: &ex::CaputoConfig| c.seed, ex::run_caputo_check),
        Command::SymbolBracket => dispatch(config_text, seed, |c: &ex::BracketConfig| c.seed, ex::run_symbol_bracket),
        Command::CharSample => dispatch(config_text, seed, |c: &ex::LemmaConfig| c.seed, ex::run_char_sample),
        Command::Lemma21 => dispatch(config_text, seed, |c: &ex::LemmaConfig| c.seed, ex::run_lemma21),
        Command::Garding => dispatch(config_text, seed, |c: &ex::GardingConfig| c.seed, ex::run_garding),
        Command::Lemma61 => dispatch(config_text, seed, |c: &ex::Lemma61Config| c.seed, ex::run_lemma61),
        Command::Solve => dispatch(config_text, seed, |c: &ex::SolveConfig| c.seed, ex::run_solve),
        Command::CarlemanSweep => {
            dispatch(config_text, seed, |c: &ex::CarlemanSweepConfig| c.seed, ex::run_carleman_sweep)
        }
        Command::UcpDemo => dispatch(config_text, seed, |c: &ex::UcpDemoConfig| c.seed, ex::run_ucp_demo),
        Command::ContinuationPlan => {
            dispatch(config_text, seed, |c: &ex::PlanConfig| c.seed, ex::run_continuation_plan)
        }
    }
}

/// Runs the parsed command line and writes artifacts. Returns whether every
/// configured check passed.
pub fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        // fails only if a global pool already exists, in which case it is reused
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let text = std::fs::read_to_string(&cli.config)?;
    let outcome = execute(cli.command, &text, cli.seed)?;
    outcome.write(&cli.out)?;
    for c in &outcome.summary.checks {
        let mark = if c.pass { "PASS" } else { "FAIL" };
        println!("{mark} {} = {:.6e}", c.name, c.value);
    }
    println!("{}", outcome.summary.status);
    Ok(outcome.pass())
}

/// Exit code 0 when all checks pass, 1 on check failure, 2 on errors.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_parses_flags() {
        let cli = Cli::try_parse_from([
            "fraclab", "lemma21", "--config", "c.json", "--out", "o", "--seed", "5", "--threads", "2",
        ])
        .unwrap();
        assert_eq!(cli.command, Command::Lemma21);
        assert_eq!(cli.seed, Some(5));
        assert!(Cli::try_parse_from(["fraclab", "nope", "--config", "c", "--out", "o"]).is_err());
    }

    #[test]
    fn seed_precedence() {
        let cfg = r#"{"n": 1, "X": 0.1, "s_max": 2, "samples": 10, "seed": 7}"#;
        assert_eq!(execute(Command::ContinuationPlan, cfg, None).unwrap().summary.seed, 7);
        assert_eq!(execute(Command::ContinuationPlan, cfg, Some(3)).unwrap().summary.seed, 3);
    }

    #[test]
    fn run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"alphas": [0.5], "n_steps": 64, "l1_tolerance": 0.1}"#).unwrap();
        let cli = Cli {
            command: Command::CaputoCheck,
            config: cfg,
            out: dir.path().join("out"),
            seed: None,
            threads: None,
        };
        assert!(run(&cli).unwrap());
        assert!(dir.path().join("out/caputo.csv").exists());
        assert!(dir.path().join("out/caputo_alpha_0.5.xy").exists());
    }
}
