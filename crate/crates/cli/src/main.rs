use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use archboost::booster::{train, BoostConfig, StepMode, Stopping};
use archboost::datagen::{
    contaminate, load_csv, write_dataset, ContaminationKind, ContaminationSpec, CsvSchema, DatasetManifest,
    Generator, SelectionMode,
};
use archboost::diagnostics::{outlier_detect, DEFAULT_OUTLIER_FRACTION};
use archboost::experiments::{
    emit_plot_data, emit_results, run_plan, threads_from_env, ExperimentPlan, OutputFormat, ResultTable,
};
use archboost::losses::validate_arch_loss_default;
use archboost::{Dataset, Ensemble, Loss, ProbabilityEstimator, ProbabilityMode, TreeConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "archboost", version, about = "Robust boosting with non-convex losses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment plan and write result tables.
    Run(RunArgs),
    /// Write a preset experiment plan as JSON, as a starting point for `run`.
    InitPlan {
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long, value_delimiter = ',', default_value = "0.1")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a loss against the Arch boosting loss conditions.
    ValidateLoss {
        #[arg(long)]
        loss: String,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Flag training points that stay misclassified through most iterations.
    DetectOutliers(DetectArgs),
    /// Desk-scale reproductions of the standard studies.
    Bench {
        #[command(subcommand)]
        which: BenchCommand,
    },
    /// Generate a synthetic dataset (CSV plus manifest).
    Generate(GenerateArgs),
    /// Train an ensemble on a CSV file.
    Train(TrainArgs),
    /// Score a CSV file with a saved ensemble.
    Predict(PredictArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Comma-separated contamination levels.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args, Debug)]
struct CsvArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "y")]
    label_column: String,
    /// Label values read as +1 (comma-separated); defaults to 1/-1 coding.
    #[arg(long, value_delimiter = ',')]
    positive: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    negative: Option<Vec<String>>,
    /// Standardize features (statistics from this file).
    #[arg(long)]
    standardize: bool,
}

impl CsvArgs {
    fn load(&self) -> Result<Dataset> {
        let mut schema = CsvSchema::numeric(&self.label_column);
        if let Some(p) = &self.positive {
            schema.positive = p.clone();
        }
        if let Some(n) = &self.negative {
            schema.negative = n.clone();
        }
        let data = load_csv(&self.data, &schema).with_context(|| format!("loading {}", self.data.display()))?;
        if self.standardize {
            let s = archboost::datagen::Standardizer::fit(&data)?;
            return Ok(s.apply(&data)?);
        }
        Ok(data)
    }
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[command(flatten)]
    csv: CsvArgs,
    #[arg(long, default_value = "arb:2")]
    loss: String,
    #[arg(long, default_value_t = 800)]
    iters: usize,
    /// Fraction of iterations a point must be misclassified in.
    #[arg(long, default_value_t = DEFAULT_OUTLIER_FRACTION)]
    threshold: f64,
    /// Constant step; defaults to the loss's usual value.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// Per-sample counts as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum BenchCommand {
    LongServedio {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Hastie {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    LongServedio,
    Hastie,
    GammaSweep,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Corruption {
    LabelFlip,
    FeatureTNoise,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value = "hastie")]
    generator: String,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    contaminate: Option<Corruption>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Select rows independently with probability eps instead of a fixed subset.
    #[arg(long)]
    bernoulli: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    csv: CsvArgs,
    #[arg(long, default_value = "arb:2")]
    loss: String,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    /// Constant step; line search when omitted.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Stop at ceil(n^(1-eps)) iterations instead of --iters.
    #[arg(long)]
    consistency_eps: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    csv: CsvArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "product")]
    prob_mode: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = threads_from_env() {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run(args) => run(args),
        Command::InitPlan { preset, eps, reps, out } => init_plan(preset, eps, reps, &out),
        Command::ValidateLoss { loss, json } => validate(&loss, json),
        Command::DetectOutliers(args) => detect(args),
        Command::Bench { which } => bench(which),
        Command::Generate(args) => generate(args),
        Command::Train(args) => train_cmd(args),
        Command::Predict(args) => predict(args),
    }
}

fn parse_loss(id: &str) -> Result<Loss> {
    id.parse().with_context(|| format!("bad loss `{id}`"))
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut plan = ExperimentPlan::load(&args.plan).with_context(|| format!("reading {}", args.plan.display()))?;
    if let Some(r) = args.reps {
        plan.replications = r;
    }
    if let Some(s) = args.seed {
        plan.seed = s;
    }
    if let Some(m) = args.max_iter {
        plan.max_iter = m;
    }
    if let Some(e) = args.eps {
        plan.epsilons = e;
    }
    if let Some(d) = args.depth {
        plan.tree.max_depth = d;
    }
    let table = run_plan(&plan)?;
    write_tables(&table, &args.out)?;
    print_table(&table);
    Ok(ExitCode::SUCCESS)
}

fn init_plan(preset: Preset, eps: Vec<f64>, reps: usize, out: &Path) -> Result<ExitCode> {
    let plan = match preset {
        Preset::LongServedio => {
            let mut plan = ExperimentPlan::long_servedio_desk(eps[0], reps);
            plan.epsilons = eps;
            plan
        }
        Preset::Hastie => ExperimentPlan::hastie_sweep_desk(eps, reps),
        Preset::GammaSweep => ExperimentPlan::gamma_sweep(eps, reps),
    };
    plan.validate()?;
    fs::write(out, serde_json::to_string_pretty(&plan)?).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote plan `{}` to {}", plan.name, out.display());
    Ok(ExitCode::SUCCESS)
}

fn write_tables(table: &ResultTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    emit_results(table, dir.join("results.csv"), OutputFormat::Csv)?;
    emit_results(table, dir.join("results.json"), OutputFormat::Json)?;
    emit_plot_data(table, dir.join("plot.csv"))?;
    log::info!("wrote results to {}", dir.display());
    Ok(())
}

fn print_table(table: &ResultTable) {
    println!("plan {} ({})", table.metadata.plan, &table.metadata.plan_hash[..12]);
    println!("{:<12} {:>6} {:>10} {:>10} {:>6} {:>12}", "method", "eps", "mean", "std", "reps", "noisy mean");
    for r in &table.rows {
        let noisy = r.noisy_mean_error.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:<12} {:>6} {:>10.4} {:>10.4} {:>6} {:>12}",
            r.method, r.epsilon, r.mean_error, r.std_error, r.replications, noisy
        );
        if r.failed > 0 {
            println!("  {} failed cells", r.failed);
        }
    }
}

fn validate(id: &str, json: bool) -> Result<ExitCode> {
    let report = validate_arch_loss_default(&parse_loss(id)?);
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for c in &report.checks {
            println!("{:<28} {}  {}", format!("{:?}", c.condition), if c.passed { "pass" } else { "FAIL" }, c.detail);
        }
        println!(
            "{}: {}",
            report.loss,
            if report.is_arch_loss() { "Arch boosting loss" } else { "not an Arch boosting loss" }
        );
    }
    Ok(if report.is_arch_loss() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn detect(args: DetectArgs) -> Result<ExitCode> {
    let data = args.csv.load()?;
    let loss = parse_loss(&args.loss)?;
    let cfg = BoostConfig {
        max_iter: args.iters,
        step: StepMode::Constant(args.step),
        tree: TreeConfig::with_depth(args.depth),
        ..BoostConfig::new(loss)
    };
    let model = train(&data, &cfg)?;
    let score = outlier_detect(model.trace().context("no trace")?, args.threshold, data.mask())?;
    if let Some(out) = &args.out {
        score.write_csv(out)?;
    }
    println!(
        "{} of {} points misclassified in more than {} of {} iterations",
        score.flagged.len(),
        data.len(),
        score.cutoff,
        score.iterations
    );
    println!("flagged: {:?}", score.flagged);
    if let Some(ratio) = score.recovery_ratio {
        println!(
            "{} of the flagged points are marked outliers (ratio {ratio:.3})",
            score.true_outliers_flagged.unwrap_or(0)
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(which: BenchCommand) -> Result<ExitCode> {
    let (plan, out) = match which {
        BenchCommand::LongServedio { eps, reps, depth, out } => {
            let mut plan = ExperimentPlan::long_servedio_desk(eps, reps);
            if let Some(d) = depth {
                plan.tree.max_depth = d;
            }
            (plan, out)
        }
        BenchCommand::Hastie { eps, reps, out } => (ExperimentPlan::hastie_sweep_desk(eps, reps), out),
    };
    let start = std::time::Instant::now();
    let table = run_plan(&plan)?;
    if let Some(dir) = out {
        write_tables(&table, &dir)?;
    }
    print_table(&table);
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(ExitCode::SUCCESS)
}

fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let generator: Generator = args.generator.parse()?;
    let mut data = generator.generate(args.n, args.seed);
    let spec = match args.contaminate {
        Some(kind) => {
            let spec = ContaminationSpec {
                kind: match kind {
                    Corruption::LabelFlip => ContaminationKind::LabelFlip,
                    Corruption::FeatureTNoise => ContaminationKind::FeatureTNoise,
                },
                ..ContaminationSpec::label_flip(args.eps, args.seed.wrapping_add(1))
            };
            let spec = if args.bernoulli { spec.with_mode(SelectionMode::Bernoulli) } else { spec };
            data = contaminate(&data, &spec)?;
            Some(spec)
        }
        None => None,
    };
    let manifest = DatasetManifest::describe(generator.name(), args.seed, &data, spec);
    write_dataset(&args.out, &data, &manifest)?;
    println!(
        "wrote {} rows x {} features to {} (positive fraction {:.3}, {} flagged)",
        data.len(),
        data.n_features(),
        args.out.display(),
        data.positive_fraction(),
        data.n_flagged()
    );
    Ok(ExitCode::SUCCESS)
}

fn train_cmd(args: TrainArgs) -> Result<ExitCode> {
    let data = args.csv.load()?;
    let loss = parse_loss(&args.loss)?;
    let cfg = BoostConfig {
        max_iter: args.iters,
        step: match args.step {
            Some(a) => StepMode::Constant(Some(a)),
            None => StepMode::default(),
        },
        stopping: match args.consistency_eps {
            Some(epsilon) => Stopping::Consistency { epsilon },
            None => Stopping::Fixed,
        },
        tree: TreeConfig::with_depth(args.depth),
        ..BoostConfig::new(loss)
    };
    let model = train(&data, &cfg)?;
    model.save(&args.out)?;
    let trace = model.trace().context("no trace")?;
    println!(
        "{} stages, training error {:.4}, final risk {:.6}, stop {:?}",
        model.len(),
        model.error_rate(&data)?,
        trace.records.last().map_or(trace.initial_risk, |r| r.risk),
        trace.stop
    );
    Ok(ExitCode::SUCCESS)
}

fn predict(args: PredictArgs) -> Result<ExitCode> {
    let model = Ensemble::load(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let data = args.csv.load()?;
    let mode: ProbabilityMode = args.prob_mode.parse()?;
    let estimator = ProbabilityEstimator::new(&model, mode)?;
    let mut out = String::from("score,label,probability\n");
    for x in data.rows() {
        let (score, label) = model.predict(x)?;
        out.push_str(&format!("{score:?},{label},{:?}\n", estimator.estimate(x)?));
    }
    match &args.out {
        Some(path) => fs::write(path, out).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{out}"),
    }
    eprintln!("error rate {:.4} on {} rows", model.error_rate(&data)?, data.len());
    Ok(ExitCode::SUCCESS)
}
