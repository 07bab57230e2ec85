//! `tvdise`: total variation estimation from the command line.
//!
//! Machine-readable results go to stdout as JSON; logs go to stderr.
//! Exit status is 0 on success, 2 for configuration and input errors, 3
//! for numerical failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tvdise::baselines::{self, KnnConfig, DEFAULT_N_MC};
use tvdise::dise;
use tvdise::experiments::{self, RankingTask, SimulationConfig};
use tvdise::oracle;
use tvdise::{DiseConfig, Distribution, FeatureMapSpec, FittedClassifier, Method, MixturePair, TvEstimate};

#[derive(Parser)]
#[command(name = "tvdise", version, about = "Total variation distance estimation between samples")]
struct Cli {
    /// Cap on worker threads (default: all logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// More log output on stderr; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation study from a TOML or JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Directory for records.csv, summary.csv and manifest.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate TV between two headerless CSV sample files.
    Estimate(EstimateArgs),
    /// Rank candidate embedding sets by their distance to real data.
    Rank {
        #[arg(long)]
        config: PathBuf,
    },
    /// Ground-truth TV for a pair of known distributions.
    Oracle {
        /// JSON file with fields `p` and `q`.
        #[arg(long)]
        spec: PathBuf,
        /// Defaults to the closed form when it applies, then quadrature in
        /// one dimension, then Monte Carlo.
        #[arg(long, value_enum)]
        method: Option<OracleMethod>,
        #[arg(long, default_value_t = 1_000_000)]
        n_mc: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    synth: PathBuf,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Dise)]
    method: EstimatorArg,
    /// Feature map tag for DisE, e.g. `gq:p=5` or `t1:exp-gamma`.
    #[arg(long)]
    features: Option<FeatureMapSpec>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Mixture draws for PE and KDE.
    #[arg(long, default_value_t = DEFAULT_N_MC)]
    n_mc: usize,
    /// Neighbour count for NNRE and EE (default: square-root rule).
    #[arg(long)]
    k: Option<usize>,
    /// DisE: ridge strength instead of the automatic choice.
    #[arg(long)]
    lambda: Option<f64>,
    /// DisE: write the fitted classifier to this file.
    #[arg(long, conflicts_with = "model")]
    save_model: Option<PathBuf>,
    /// DisE: score a saved classifier on the two files without fitting.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Dise,
    Pe,
    Kde,
    Nnre,
    Ee,
}

impl From<EstimatorArg> for Method {
    fn from(m: EstimatorArg) -> Self {
        match m {
            EstimatorArg::Dise => Method::Dise,
            EstimatorArg::Pe => Method::Pe,
            EstimatorArg::Kde => Method::Kde,
            EstimatorArg::Nnre => Method::Nnre,
            EstimatorArg::Ee => Method::Ee,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMethod {
    Mc,
    Quad,
    Closed,
}

fn print_json(v: &serde_json::Value) -> tvdise::Result<()> {
    println!("{}", serde_json::to_string(v)?);
    Ok(())
}

fn simulate(config: &Path, out: Option<&Path>) -> tvdise::Result<()> {
    let cfg: SimulationConfig = experiments::load_config(config)?;
    let result = experiments::run_simulation(&cfg)?;
    if let Some(dir) = out {
        result.write(dir, &cfg)?;
        log::info!("wrote results to {}", dir.display());
    }
    print_json(&json!({
        "base_seed": cfg.base_seed,
        "summary": result.summary,
    }))
}

fn estimate(a: &EstimateArgs) -> tvdise::Result<()> {
    let real = experiments::read_samples_csv(&a.real)?;
    let synth = experiments::read_samples_csv(&a.synth)?;
    let method = Method::from(a.method);
    let est: TvEstimate = match method {
        Method::Dise => {
            if let Some(path) = &a.model {
                let model = FittedClassifier::from_json(&std::fs::read_to_string(path)?)?;
                model.evaluate(&real, &synth)?
            } else {
                let cfg = DiseConfig {
                    feature_spec: a.features,
                    lambda: a.lambda.map(tvdise::Lambda::Fixed).unwrap_or_default(),
                    ..DiseConfig::default()
                };
                match &a.save_model {
                    Some(path) => {
                        let ((tr, ts), (er, es)) = dise::stratified_split(&real, &synth, cfg.eval_fraction, a.seed);
                        let model = dise::fit(&cfg, &tvdise::Dataset::stack_labeled(&tr, &ts)?)?;
                        std::fs::write(path, model.to_json()? + "\n")?;
                        model.evaluate(&er, &es)?
                    }
                    None => dise::estimate_tv(&cfg, &real, &synth, None, a.seed)?,
                }
            }
        }
        m => {
            let knn = a.k.map(KnnConfig::fixed).unwrap_or_default();
            baselines::estimate(m, &real, &synth, a.n_mc, &knn, a.seed)?
        }
    };
    print_json(&json!({
        "seed": a.seed,
        "estimate": est,
    }))
}

fn rank(config: &Path) -> tvdise::Result<()> {
    let mut task: RankingTask = experiments::load_config(config)?;
    task.resolve_paths(config.parent().unwrap_or(Path::new(".")));
    let report = experiments::run_ranking(&task)?;
    print_json(&serde_json::to_value(&report)?)
}

fn run_oracle(spec: &Path, method: Option<OracleMethod>, n_mc: usize, tol: f64, seed: u64) -> tvdise::Result<()> {
    let pair: MixturePair = experiments::load_config(spec)?;
    let method = match method {
        Some(OracleMethod::Mc) => Method::Mc,
        Some(OracleMethod::Quad) => Method::Quad,
        Some(OracleMethod::Closed) => Method::Closed,
        None => match (&pair.p, &pair.q) {
            (Distribution::Gaussian(a), Distribution::Gaussian(b))
                if oracle::closed_form_tv_equal_cov(a, b).is_ok() =>
            {
                Method::Closed
            }
            _ if pair.dim() == 1 => Method::Quad,
            _ => Method::Mc,
        },
    };
    let est = oracle::ground_truth(&pair, method, n_mc, seed, tol)?;
    print_json(&json!({
        "method": est.method,
        "tv": est.tv,
        "std_error": est.std_error(),
        "seed": seed,
    }))
}

fn run(cli: Cli) -> tvdise::Result<()> {
    match &cli.command {
        Command::Simulate { config, out } => simulate(config, out.as_deref()),
        Command::Estimate(a) => estimate(a),
        Command::Rank { config } => rank(config),
        Command::Oracle {
            spec,
            method,
            n_mc,
            tol,
            seed,
        } => run_oracle(spec, *method, *n_mc, *tol, *seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
