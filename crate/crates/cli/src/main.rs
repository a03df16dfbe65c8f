//! Command-line front end for the sparse additive-hazards toolkit.

mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use manifest::Manifest;
use sparsehaz::penalty::{
    DEFAULT_ENET_ALPHA, DEFAULT_MCP_A, DEFAULT_SCAD_A, DEFAULT_SICA_A,
};
use sparsehaz::report;
use sparsehaz::solver::{FitConfig, FitMethod};
use sparsehaz::{
    crossval, workflow, Error, Penalty, PseudoscoreSystem, Result, SelectionRule, SurvivalDataset,
};

#[derive(Parser)]
#[command(
    name = "sparsehaz",
    version,
    about = "Sparse additive-hazards regression: paths, cross-validation, simulation, evaluation"
)]
struct Cli {
    /// Thread budget for fold- and replicate-level parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory for documents and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a regularization path on a dataset and write a path document.
    Path(PathArgs),
    /// Cross-validate a penalty and write CV + path documents.
    Cv(CvArgs),
    /// Run a simulation study from a config file and write a study report.
    Simulate(SimulateArgs),
    /// Train/test evaluation: CV fit, prediction error, log-rank risk split.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Clone)]
struct PenaltyOpts {
    /// Penalty family: lasso, scad, mcp, sica or enet.
    #[arg(long)]
    penalty: String,
    /// Shape parameter for scad/mcp/sica.
    #[arg(long)]
    a: Option<f64>,
    /// Final SICA shape value; enables the staged path when below --a.
    #[arg(long)]
    a_final: Option<f64>,
    /// Elastic-net mixing weight in (0, 1].
    #[arg(long)]
    enet_alpha: Option<f64>,
}

#[derive(Args, Clone)]
struct FitOpts {
    /// Number of grid points on the path.
    #[arg(long, default_value_t = 100)]
    lambda_count: usize,
    /// Ratio of the smallest to the largest grid value.
    #[arg(long, default_value_t = 1e-3)]
    lambda_ratio: f64,
    /// Stop extending the path once more than this many coordinates are active.
    #[arg(long)]
    max_active: Option<usize>,
}

#[derive(Args)]
struct PathArgs {
    /// Input CSV with columns time, status, covariates...
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    penalty: PenaltyOpts,
    #[command(flatten)]
    fit: FitOpts,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    penalty: PenaltyOpts,
    #[command(flatten)]
    fit: FitOpts,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Selection rule: min or one_se.
    #[arg(long, default_value = "min")]
    rule: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Flat key = value study configuration file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Training CSV.
    #[arg(long)]
    data: PathBuf,
    /// Held-out test CSV with the same covariate columns.
    #[arg(long)]
    test: PathBuf,
    #[command(flatten)]
    penalty: PenaltyOpts,
    #[command(flatten)]
    fit: FitOpts,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value = "min")]
    rule: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn resolve_method(opts: &PenaltyOpts) -> Result<FitMethod> {
    match opts.penalty.as_str() {
        "lasso" => Ok(FitMethod::Single(Penalty::l1())),
        "scad" => Ok(FitMethod::Single(Penalty::scad(
            opts.a.unwrap_or(DEFAULT_SCAD_A),
        )?)),
        "mcp" => Ok(FitMethod::Single(Penalty::mcp(
            opts.a.unwrap_or(DEFAULT_MCP_A),
        )?)),
        "sica" => {
            let a = opts.a.unwrap_or(DEFAULT_SICA_A);
            match opts.a_final {
                Some(a_final) => FitMethod::sica_staged(vec![a, a_final]),
                None => Ok(FitMethod::Single(Penalty::sica(a)?)),
            }
        }
        "enet" => Ok(FitMethod::Single(Penalty::elastic_net(
            opts.enet_alpha.unwrap_or(DEFAULT_ENET_ALPHA),
        )?)),
        other => Err(Error::Config(format!(
            "unknown penalty {other:?}; expected lasso, scad, mcp, sica or enet"
        ))),
    }
}

fn fit_config(fit: &FitOpts) -> Result<FitConfig> {
    let cfg = FitConfig {
        grid_size: fit.lambda_count,
        grid_ratio: fit.lambda_ratio,
        max_active: fit.max_active,
        ..FitConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Load a dataset, detecting an optional header line by whether the first
/// cell parses as a number.
fn load_dataset(path: &Path) -> Result<SurvivalDataset> {
    let text = std::fs::read_to_string(path)?;
    let first = text
        .lines()
        .next()
        .ok_or_else(|| Error::Validation(format!("{}: empty file", path.display())))?;
    let has_header = first
        .split(',')
        .next()
        .map(|cell| cell.trim().parse::<f64>().is_err())
        .unwrap_or(true);
    SurvivalDataset::load_csv(path, has_header)
}

fn record_penalty_opts(man: &mut Manifest, opts: &PenaltyOpts, method: &FitMethod) {
    man.option("penalty", &opts.penalty);
    if let Some(a) = opts.a {
        man.option("a", a);
    }
    if let Some(a_final) = opts.a_final {
        man.option("a_final", a_final);
    }
    if let Some(alpha) = opts.enet_alpha {
        man.option("enet_alpha", alpha);
    }
    man.option("method", method.label());
}

fn record_fit_opts(man: &mut Manifest, fit: &FitOpts) {
    man.option("lambda_count", fit.lambda_count);
    man.option("lambda_ratio", fit.lambda_ratio);
    if let Some(m) = fit.max_active {
        man.option("max_active", m);
    }
}

fn finish(man: &mut Manifest, out_dir: &Path, started: Instant) -> Result<()> {
    man.wall_ms = started.elapsed().as_millis();
    let rendered = man.render();
    std::fs::write(out_dir.join("manifest.txt"), rendered)?;
    Ok(())
}

fn cmd_path(args: &PathArgs, out_dir: &Path) -> Result<()> {
    let started = Instant::now();
    let method = resolve_method(&args.penalty)?;
    let cfg = fit_config(&args.fit)?;
    let ds = load_dataset(&args.data)?;
    let sys = PseudoscoreSystem::from_dataset(&ds);
    let path = method.solve_path(&sys, &cfg)?;

    let mut man = Manifest::new("path", args.seed);
    man.option("data", args.data.display());
    record_penalty_opts(&mut man, &args.penalty, &method);
    record_fit_opts(&mut man, &args.fit);
    let doc = report::path_document(&path, ds.n(), ds.p());
    man.write_artifact(out_dir, "path.txt", &doc)?;
    finish(&mut man, out_dir, started)
}

fn cmd_cv(args: &CvArgs, out_dir: &Path) -> Result<()> {
    let started = Instant::now();
    let method = resolve_method(&args.penalty)?;
    let cfg = fit_config(&args.fit)?;
    let rule = SelectionRule::parse(&args.rule)?;
    let ds = load_dataset(&args.data)?;
    let cv = crossval::kfold_cv(&ds, &method, &cfg, args.folds, args.seed)?;
    let selected = crossval::select_index(&cv, rule);

    let mut man = Manifest::new("cv", args.seed);
    man.option("data", args.data.display());
    man.option("folds", args.folds);
    man.option("rule", rule.label());
    record_penalty_opts(&mut man, &args.penalty, &method);
    record_fit_opts(&mut man, &args.fit);

    let cv_doc = report::cv_document(&cv, rule, selected, args.seed, ds.feature_names());
    man.write_artifact(out_dir, "cv.txt", &cv_doc)?;
    let path_doc = report::path_document(&cv.full_path, ds.n(), ds.p());
    man.write_artifact(out_dir, "path.txt", &path_doc)?;
    finish(&mut man, out_dir, started)
}

fn cmd_simulate(args: &SimulateArgs, out_dir: &Path) -> Result<()> {
    let started = Instant::now();
    let study = config::load_study_config(&args.config)?;
    let report_data =
        sparsehaz::run_study(&study.sim, &study.methods, &study.fit, study.folds)?;

    let mut man = Manifest::new("simulate", study.sim.seed);
    man.option("config", args.config.display());
    man.option("methods", study.method_names.join(","));
    man.option("replicates", study.sim.replicates);
    man.option("folds", study.folds);

    let doc = report::study_document(&report_data);
    man.write_artifact(out_dir, "report.txt", &doc)?;
    finish(&mut man, out_dir, started)
}

fn cmd_evaluate(args: &EvaluateArgs, out_dir: &Path) -> Result<()> {
    let started = Instant::now();
    let method = resolve_method(&args.penalty)?;
    let cfg = fit_config(&args.fit)?;
    let rule = SelectionRule::parse(&args.rule)?;
    let train = load_dataset(&args.data)?;
    let test = load_dataset(&args.test)?;
    let outcome = workflow::evaluate_risk_stratification(
        &train, &test, &method, &cfg, args.folds, args.seed, rule,
    )?;

    let mut man = Manifest::new("evaluate", args.seed);
    man.option("data", args.data.display());
    man.option("test", args.test.display());
    man.option("folds", args.folds);
    man.option("rule", rule.label());
    record_penalty_opts(&mut man, &args.penalty, &method);
    record_fit_opts(&mut man, &args.fit);

    let doc = report::evaluation_document(&outcome, rule, args.folds, args.seed);
    man.write_artifact(out_dir, "evaluation.txt", &doc)?;
    finish(&mut man, out_dir, started)
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Path(args) => cmd_path(args, &cli.out),
        Command::Cv(args) => cmd_cv(args, &cli.out),
        Command::Simulate(args) => cmd_simulate(args, &cli.out),
        Command::Evaluate(args) => cmd_evaluate(args, &cli.out),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
