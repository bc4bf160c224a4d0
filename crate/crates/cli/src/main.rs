//! `surgact` command-line tool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use surgact::crossval::save_plans;
use surgact::dataset::{build_catalog, validate_catalog, ArmSelection, Granularity};
use surgact::runner::{
    exit_code, load_report, render_aggregate, render_report, render_table, CvMode, Experiment, ExperimentConfig,
    FoldStatus, RunnerError, SynthOptions,
};
use surgact::Execution;

/// Like `print!`/`println!`, but a closed stdout (e.g. `| head`) is not an error.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout().lock(), $($t)*);
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(
    name = "surgact",
    version,
    about = "Surgical gesture and motion-primitive recognition experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load every trial and transcript of a catalog and report per-task counts
    Validate {
        /// Catalog manifest (TOML)
        catalog: PathBuf,
        /// Print the summary as JSON
        #[arg(long)]
        json: bool,
    },
    /// Write the fold plans of an experiment as JSON
    Folds {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Destination file; printed to stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and score a single fold, saving its checkpoint
    Train {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Fold name as listed by `folds`
        #[arg(long)]
        fold: String,
        /// Checkpoint destination
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run every fold of an experiment and write its report
    Experiment {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Generate a synthetic catalog with an experiment config
    Synth(SynthArgs),
    /// Combine saved reports into summary tables
    Report {
        /// report.json files or run directories
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Also write the tables to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Experiment settings; flags override the config file.
#[derive(Args, Clone, Default)]
struct ExperimentArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog manifest (TOML)
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// gesture, mp, mp-left, or mp-right; repeat to run several (experiment only)
    #[arg(long)]
    granularity: Vec<Granularity>,
    /// louo, loto, or loto-suite
    #[arg(long)]
    cv: Option<CvMode>,
    /// Task ids or combinations (S, NP, KT, PT, PaS, PoaP, SNP, PTPaS, JIGSAWS, ROSMA, All)
    #[arg(long, value_delimiter = ',')]
    tasks: Vec<String>,
    #[arg(long)]
    test_task: Option<String>,
    #[arg(long, value_delimiter = ',')]
    train_tasks: Vec<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Fixed kernel size instead of the one derived from training labels
    #[arg(long)]
    kernel_size: Option<usize>,
    /// Encoder widths, e.g. 32,64,96
    #[arg(long, value_delimiter = ',')]
    filters: Vec<usize>,
    /// both, left, or right
    #[arg(long, value_parser = parse_arms)]
    arms: Option<ArmSelection>,
    /// Column of the first left-arm kinematic channel
    #[arg(long)]
    feature_offset: Option<usize>,
    /// Feed raw kinematics instead of z-scored features
    #[arg(long)]
    no_standardize: bool,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Folds trained at once (0 = one per core)
    #[arg(long)]
    workers: Option<usize>,
    /// Disable data parallelism inside each fold
    #[arg(long)]
    sequential: bool,
}

fn parse_arms(s: &str) -> Result<ArmSelection, String> {
    match s {
        "both" => Ok(ArmSelection::Both),
        "left" => Ok(ArmSelection::Left),
        "right" => Ok(ArmSelection::Right),
        _ => Err(format!("expected both, left, or right, got {s:?}")),
    }
}

impl ExperimentArgs {
    /// Resolved configs, one per requested granularity.
    fn resolve(&self) -> anyhow::Result<Vec<ExperimentConfig>> {
        let mut cfg = match (&self.config, &self.catalog) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(catalog)) => ExperimentConfig::new(catalog),
            (None, None) => return Err(RunnerError::Config("either --config or --catalog is required".into()).into()),
        };
        if let Some(c) = &self.catalog {
            cfg.catalog = c.clone();
        }
        if let Some(cv) = self.cv {
            cfg.cv = cv;
        }
        if !self.tasks.is_empty() {
            cfg.tasks = self.tasks.clone();
        }
        if self.test_task.is_some() {
            cfg.test_task = self.test_task.clone();
        }
        if !self.train_tasks.is_empty() {
            cfg.train_tasks = self.train_tasks.clone();
        }
        let m = &mut cfg.model;
        m.epochs = self.epochs.or(m.epochs);
        m.learning_rate = self.learning_rate.or(m.learning_rate);
        m.weight_decay = self.weight_decay.or(m.weight_decay);
        m.kernel_size = self.kernel_size.or(m.kernel_size);
        if !self.filters.is_empty() {
            m.filters = Some(self.filters.clone());
        }
        if self.arms.is_some() {
            cfg.features.arms = self.arms;
        }
        if let Some(o) = self.feature_offset {
            cfg.features.offset = o;
        }
        if self.no_standardize {
            cfg.standardize = false;
        }
        if self.output.is_some() {
            cfg.output = self.output.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if self.sequential {
            cfg.execution = Execution::Sequential;
        }
        let grans = if self.granularity.is_empty() {
            vec![cfg.granularity]
        } else {
            self.granularity.clone()
        };
        let several = grans.len() > 1;
        grans
            .into_iter()
            .map(|g| {
                let mut c = cfg.clone();
                c.granularity = g;
                if several {
                    c.output = c.output.map(|o| o.join(g.as_str()));
                }
                c.validate()?;
                Ok(c)
            })
            .collect()
    }

    fn single(&self) -> anyhow::Result<ExperimentConfig> {
        let mut v = self.resolve()?;
        if v.len() != 1 {
            return Err(RunnerError::Config("this command takes a single --granularity".into()).into());
        }
        Ok(v.remove(0))
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    subjects: usize,
    #[arg(long, default_value_t = 2)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    tasks: usize,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 280)]
    min_length: usize,
    #[arg(long, default_value_t = 320)]
    max_length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
}

fn validate(catalog: &Path, json: bool) -> anyhow::Result<()> {
    let root = catalog.parent().unwrap_or(Path::new("."));
    let cat = build_catalog(root, catalog)?;
    let summary = validate_catalog(&cat)?;
    if json {
        outln!("{}", serde_json::to_string_pretty(&summary)?);
        return Ok(());
    }
    let header: Vec<String> = ["Task", "Dataset", "Trials", "Subjects", "Channels", "Minutes", "Labels"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = summary
        .tasks
        .iter()
        .map(|t| {
            vec![
                t.task.clone(),
                t.dataset.clone(),
                t.trials.to_string(),
                t.subjects.to_string(),
                t.channels.to_string(),
                format!("{:.1}", t.frames as f64 / surgact::dataset::SAMPLE_RATE_HZ / 60.0),
                t.granularities.iter().map(|g| g.as_str()).collect::<Vec<_>>().join(","),
            ]
        })
        .collect();
    out!("{}", render_table(&header, &rows));
    outln!(
        "{} trials, {} subjects: ok",
        summary.total_trials,
        summary.total_subjects
    );
    Ok(())
}

fn folds(exp: &ExperimentArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let experiment = Experiment::prepare(exp.single()?)?;
    match out {
        Some(path) => {
            save_plans(path, experiment.plans())?;
            outln!(
                "{} fold plan(s) written to {}",
                experiment.plans().len(),
                path.display()
            );
        }
        None => outln!("{}", serde_json::to_string_pretty(experiment.plans())?),
    }
    Ok(())
}

fn train(exp: &ExperimentArgs, fold: &str, checkpoint: &Path) -> anyhow::Result<()> {
    let experiment = Experiment::prepare(exp.single()?)?;
    let Some(plan) = experiment.plan(fold) else {
        let names: Vec<&str> = experiment.plans().iter().map(|p| p.name.as_str()).collect();
        return Err(RunnerError::Config(format!("no fold named {fold:?}; available: {}", names.join(", "))).into());
    };
    let outcome = experiment.run_fold(plan)?;
    let report = &outcome.report;
    if let FoldStatus::Diverged { message } = &report.status {
        bail!("fold {} diverged: {message}", report.name);
    }
    if let Some(ck) = &outcome.checkpoint {
        ck.save(checkpoint)?;
    }
    let sidecar = checkpoint.with_extension("fold.json");
    std::fs::write(&sidecar, serde_json::to_string_pretty(report)?)
        .with_context(|| format!("writing {}", sidecar.display()))?;
    match &report.metrics {
        Some(m) => outln!(
            "{}: kernel {} acc {:.2} edit {:.2} mAP {}",
            report.name,
            report.model.kernel_size,
            m.mean_accuracy,
            m.mean_edit,
            m.macro_map.map_or("N/A".into(), |v| format!("{v:.2}"))
        ),
        None => outln!("{}: no scorable test trials", report.name),
    }
    outln!("checkpoint written to {}", checkpoint.display());
    Ok(())
}

fn experiment(exp: &ExperimentArgs) -> anyhow::Result<()> {
    let configs = exp.resolve()?;
    let mut reports = Vec::with_capacity(configs.len());
    for cfg in configs {
        info!("running {} {}", cfg.cv.as_str(), cfg.granularity);
        let output = cfg.output.clone();
        let report = Experiment::prepare(cfg)?.run()?;
        out!("{}", render_report(&report));
        if let Some(dir) = &output {
            outln!("report written to {}", dir.display());
        }
        reports.push(report);
    }
    if reports.len() > 1 {
        let text = render_aggregate(&reports);
        outln!("\n{text}");
        if let Some(dir) = exp
            .resolve()?
            .first()
            .and_then(|c| c.output.clone())
            .and_then(|o| o.parent().map(Path::to_path_buf))
        {
            let path = dir.join("summary.txt");
            std::fs::write(&path, &text).map_err(|e| RunnerError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
        }
    }
    Ok(())
}

fn synth(a: &SynthArgs) -> anyhow::Result<()> {
    let opts = SynthOptions {
        subjects: a.subjects,
        trials_per_subject: a.trials,
        tasks: a.tasks,
        classes: a.classes,
        min_length: a.min_length,
        max_length: a.max_length,
        seed: a.seed,
        noise: a.noise,
        ..SynthOptions::default()
    };
    let ds = surgact::runner::generate_synthetic_dataset(&opts, &a.out)?;
    outln!("{} trials written to {}", ds.trials, a.out.display());
    outln!("manifest:   {}", ds.manifest.display());
    outln!("experiment: {}", ds.experiment.display());
    Ok(())
}

fn report(paths: &[PathBuf], out: Option<&Path>) -> anyhow::Result<()> {
    let reports = paths.iter().map(|p| load_report(p)).collect::<Result<Vec<_>, _>>()?;
    let text = if reports.len() == 1 {
        render_report(&reports[0])
    } else {
        render_aggregate(&reports)
    };
    out!("{text}");
    if let Some(path) = out {
        std::fs::write(path, &text).map_err(|e| RunnerError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Validate { catalog, json } => validate(catalog, *json),
        Command::Folds { exp, out } => folds(exp, out.as_deref()),
        Command::Train { exp, fold, checkpoint } => train(exp, fold, checkpoint),
        Command::Experiment { exp } => experiment(exp),
        Command::Synth(a) => synth(a),
        Command::Report { reports, out } => report(reports, out.as_deref()),
    }
}

/// Exit code for an error: the runner's classification when available,
/// otherwise a runtime failure.
fn classify(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<RunnerError>() {
            return e.exit_code();
        }
        if cause.downcast_ref::<surgact::dataset::DatasetError>().is_some() {
            return exit_code::DATA;
        }
        if let Some(e) = cause.downcast_ref::<surgact::crossval::CrossvalError>() {
            return RunnerError::Crossval(e.clone()).exit_code();
        }
        if let Some(e) = cause.downcast_ref::<surgact::tcn::TcnError>() {
            return RunnerError::Model(e.clone()).exit_code();
        }
    }
    exit_code::RUNTIME
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit_code::CONFIG
            } else {
                exit_code::OK
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e) as u8)
        }
    }
}
