use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use mico_core::adversary::{
    run_game, verify_consistency, Adversary, BisectStrategy, BitClass, CenterpointStrategy, ContAdversary, FamilySpec,
    MiAdversary, RandomStrategy, Strategy,
};
use mico_core::halving::ExactCenterpoint;
use mico_core::suite::{random_instance, GeneratorSpec};
use mico_core::{
    halving_solve, robustify, run_sweep, solve_recorded, write_outputs, ExperimentConfig, Instance, Noise, OracleMode,
    RobustAlgo, SolverConfig, StopRule,
};

type AnyError = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(name = "mico", version, about = "Oracle-based mixed-integer convex optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the centerpoint solver on one instance.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "exact", value_parser = ["exact", "bit", "dir"])]
        mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Stop at the theoretical budget instead of the empirical one.
        #[arg(long)]
        budget_stop: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON-lines transcript of every oracle query.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Play a strategy against the resisting oracle for `Z^n × R^d`.
    Game {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value = "bisect", value_parser = ["bisect", "random", "centerpoint"])]
        strategy: String,
        #[arg(long, default_value_t = 300)]
        max_rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Solve a hidden member of a finite family with binary queries only.
    Halving {
        /// Directory of instance files; members are ordered by file name.
        #[arg(long)]
        family: PathBuf,
        #[arg(long = "true")]
        truth: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "exact-centerpoint", value_parser = ["exact-centerpoint"])]
        wrapped: String,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an exact-oracle method through the inexact-oracle interface.
    Robustify {
        #[arg(long)]
        instance: PathBuf,
        /// `eta_f,eta_g`
        #[arg(long, default_value = "0.0005,0.0005")]
        noise: String,
        #[arg(long, default_value = "centerpoint", value_parser = ["subgradient", "centerpoint"])]
        algo: String,
        #[arg(long, default_value_t = 40)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded random instance of shape `(n, d)`.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Batch sweeps.
    Experiments {
        #[command(subcommand)]
        action: ExperimentsAction,
    },
}

#[derive(Subcommand)]
enum ExperimentsAction {
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), AnyError> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn parse_noise(s: &str) -> Result<Noise, AnyError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [f, g] = parts.as_slice() else {
        return Err(format!("noise must be `eta_f,eta_g`, got `{s}`").into());
    };
    let noise = Noise { eta_f: f.parse()?, eta_g: g.parse()? };
    if noise.eta_f < 0.0 || noise.eta_g < 0.0 {
        return Err("noise levels must be nonnegative".into());
    }
    Ok(noise)
}

fn load_family_dir(dir: &Path) -> Result<Vec<Instance>, AnyError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(format!("no instance files in {}", dir.display()).into());
    }
    files.iter().map(|p| Instance::load(p).map_err(|e| format!("{}: {e}", p.display()).into())).collect()
}

fn run(cli: Cli) -> Result<bool, AnyError> {
    match cli.command {
        Command::Solve { instance, eps, mode, seed, samples, budget_stop, out, transcript } => {
            let inst = Instance::load(&instance)?;
            let mode = OracleMode::parse(&mode).ok_or("unknown mode")?;
            let stop = if budget_stop { StopRule::Budget } else { StopRule::Empirical };
            let config = SolverConfig::new(eps, mode).with_seed(seed).with_samples(samples).with_stop(stop);
            let (report, log) = solve_recorded(&inst, &config)?;
            if let Some(p) = transcript {
                std::fs::write(p, log.to_jsonl())?;
            }
            emit(&report, out.as_deref())?;
            Ok(true)
        }
        Command::Game { family, n, eps, strategy, max_rounds, seed, out, transcript } => {
            let spec: FamilySpec = serde_json::from_str(&std::fs::read_to_string(&family)?)?;
            let fam = spec.build()?;
            let eps = eps.unwrap_or(fam.eps);
            let adversary = if n == 0 {
                Adversary::Cont(ContAdversary::new(&fam, None))
            } else {
                Adversary::Mi(MiAdversary::new(&fam, n, None, BitClass::Shifted)?)
            };
            let mut strat: Box<dyn Strategy> = match strategy.as_str() {
                "bisect" => Box::new(BisectStrategy),
                "random" => Box::new(RandomStrategy { seed }),
                _ => Box::new(CenterpointStrategy { seed, ..CenterpointStrategy::default() }),
            };
            let outcome = run_game(strat.as_mut(), adversary, eps, max_rounds)?;
            let consistency = verify_consistency(&outcome, &fam, 100, seed);
            if let Some(p) = transcript {
                std::fs::write(p, outcome.transcript.to_jsonl())?;
            }
            #[derive(Serialize)]
            struct GameReport {
                #[serde(flatten)]
                summary: mico_core::adversary::GameSummary,
                eps: f64,
                consistent: bool,
                consistency_error: Option<String>,
            }
            let report = GameReport {
                summary: outcome.summary(),
                eps,
                consistent: consistency.is_ok(),
                consistency_error: consistency.err(),
            };
            emit(&report, out.as_deref())?;
            Ok(report.consistent)
        }
        Command::Halving { family, truth, eps, wrapped: _, samples, seed, out } => {
            let members = load_family_dir(&family)?;
            let idx = members
                .iter()
                .position(|i| i.label == truth)
                .ok_or_else(|| format!("no member labelled `{truth}`"))?;
            let mut algo = ExactCenterpoint::new(&members[idx], eps, samples, seed)?;
            let report = halving_solve(&members, idx, &mut algo, eps)?;
            emit(&report, out.as_deref())?;
            Ok(report.gap <= eps + 1e-9)
        }
        Command::Robustify { instance, noise, algo, rounds, seed, out } => {
            let inst = Instance::load(&instance)?;
            let algo = RobustAlgo::parse(&algo).ok_or("unknown algorithm")?;
            let report = robustify(&inst, algo, parse_noise(&noise)?, rounds, seed)?;
            emit(&report, out.as_deref())?;
            Ok(report.within_bound && report.audit.ok())
        }
        Command::Generate { n, d, seed, out } => {
            random_instance(&GeneratorSpec::standard(n, d), seed).save(&out)?;
            Ok(true)
        }
        Command::Experiments { action: ExperimentsAction::Run { config, out } } => {
            let config = ExperimentConfig::load(&config)?;
            let result = run_sweep(&config)?;
            let manifest = write_outputs(&config, &result, &out)?;
            eprintln!("{} cells, {} failed; results in {}", manifest.cells, manifest.failed, out.display());
            Ok(result.all_ok())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
