use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dfw_core::fw::StepRule;
use dfw_core::harness::{
    exit_code, matrix_rows, run_experiment, synth_lasso, write_libsvm, DatasetSpec,
    ExperimentConfig, LambdaMaxRule, Mode, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK,
};

#[derive(Parser)]
#[command(
    name = "dfw",
    version,
    about = "Distributed Frank-Wolfe over a simulated network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Centralized Frank-Wolfe
    Solve(RunArgs),
    /// Distributed Frank-Wolfe
    Dfw(RunArgs),
    /// Distributed Frank-Wolfe over greedy cluster centers
    Approx(RunArgs),
    /// Random or local-FW one-shot baselines
    Baseline(RunArgs),
    /// Write a synthetic LASSO instance as LIBSVM text
    Synth(RunArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// TOML file with the same keys as the long flags (underscored)
    #[arg(long)]
    config: Option<PathBuf>,
    /// lasso, svm or adaboost
    #[arg(long)]
    objective: Option<String>,
    /// synth:D:N:SA:SALPHA, identity:D or libsvm:PATH
    #[arg(long)]
    dataset: Option<String>,
    /// One atom per LIBSVM feature (labels become the target)
    #[arg(long)]
    transpose: bool,
    /// star:N, tree:B:N, general:N:SEED or full:N
    #[arg(long)]
    topology: Option<String>,
    /// contiguous, random[:SEED] or unbalanced:FRACTION[:SEED]
    #[arg(long)]
    partition: Option<String>,
    /// flood, tree or star
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    hub_holds_atoms: bool,
    #[arg(long)]
    allow_empty: bool,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// harmonic or linesearch
    #[arg(long)]
    step: Option<StepRule>,
    /// Radius of the l1 ball
    #[arg(long, conflicts_with = "simplex")]
    beta: Option<f64>,
    /// Optimize over the unit simplex
    #[arg(long)]
    simplex: bool,
    /// Message drop probability
    #[arg(long)]
    drop: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// fixed:M, fixed:auto-balance or linear:RATE
    #[arg(long)]
    centers: Option<String>,
    /// Check every approximate selection against the exact one
    #[arg(long)]
    certify: bool,
    /// random[:SEED] or localfw
    #[arg(long)]
    baseline: Option<String>,
    /// Atoms per node, comma separated
    #[arg(long, value_delimiter = ',')]
    baseline_m: Option<Vec<usize>>,
    #[arg(long)]
    temperature: Option<f64>,
    /// linear or rbf
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    svm_c: Option<f64>,
    /// correlation or as-written
    #[arg(long)]
    lambda_rule: Option<LambdaMaxRule>,
    #[arg(long)]
    out: Option<PathBuf>,
}

macro_rules! overlay {
    ($cfg:ident, $args:ident; $($field:ident),*) => {
        $(if let Some(v) = $args.$field { $cfg.$field = v; })*
    };
}

impl RunArgs {
    fn into_config(self, mode: Mode) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::from_toml(&text)?
            }
            None => ExperimentConfig::default(),
        };
        cfg.mode = mode;
        let args = self;
        overlay!(cfg, args; objective, dataset, topology, partition, strategy, epsilon,
            max_iter, step, seed, centers, baseline, baseline_m, temperature, kernel,
            svm_c, lambda_rule);
        cfg.transpose |= args.transpose;
        cfg.hub_holds_atoms |= args.hub_holds_atoms;
        cfg.allow_empty |= args.allow_empty;
        cfg.certify |= args.certify;
        if args.simplex {
            cfg.simplex = true;
            cfg.beta = None;
        }
        if args.beta.is_some() {
            cfg.beta = args.beta;
            cfg.simplex = false;
        }
        cfg.drop = args.drop.or(cfg.drop);
        cfg.sigma = args.sigma.or(cfg.sigma);
        cfg.out = args.out.or(cfg.out);
        Ok(cfg)
    }
}

fn synth(cfg: &ExperimentConfig) -> anyhow::Result<i32> {
    let DatasetSpec::Synth(mut params) = cfg.dataset.parse()? else {
        anyhow::bail!("synth needs --dataset synth:D:N:SA:SALPHA");
    };
    params.seed = cfg.seed;
    let out = cfg.out.clone().context("synth needs --out")?;
    let inst = synth_lasso(&params, cfg.lambda_rule)?;
    fs::create_dir_all(&out)?;
    write_libsvm(
        fs::File::create(out.join("data.libsvm"))?,
        &inst.target,
        &matrix_rows(&inst.atoms),
    )?;
    let meta = serde_json::json!({
        "d": params.d,
        "n": params.n,
        "seed": params.seed,
        "lambda_max": inst.lambda_max,
        "beta": inst.beta,
        "alpha_true": inst.alpha_true,
    });
    fs::write(out.join("synth.json"), serde_json::to_string_pretty(&meta)?)?;
    println!("{}", serde_json::to_string_pretty(&meta["beta"])?);
    Ok(EXIT_OK)
}

fn run(cli: Cli) -> i32 {
    let (mode, args) = match cli.command {
        Command::Solve(a) => (Some(Mode::Solve), a),
        Command::Dfw(a) => (Some(Mode::Dfw), a),
        Command::Approx(a) => (Some(Mode::Approx), a),
        Command::Baseline(a) => (Some(Mode::Baseline), a),
        Command::Synth(a) => (None, a),
    };
    let cfg = match args.into_config(mode.unwrap_or_default()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    if mode.is_none() {
        return synth(&cfg).unwrap_or_else(|e| {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<dfw_core::Error>() {
                Some(err) => exit_code(err),
                None => EXIT_CONFIG,
            }
        });
    }
    match run_experiment(&cfg) {
        Ok(report) => {
            match serde_json::to_string_pretty(&report.summary) {
                Ok(s) => println!("{s}"),
                Err(e) => eprintln!("error: {e}"),
            }
            if report.summary.converged {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    let code = run(Cli::parse());
    ExitCode::from(code as u8)
}
