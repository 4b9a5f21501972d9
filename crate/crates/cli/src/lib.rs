//! Command implementations behind the `samplebench` binary. Each `cmd_*`
//! function is usable on its own; [`run_cli`] parses arguments and maps
//! errors to exit codes.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use samplebench::harness::{build_teststatistic_iid, build_teststatistic_user, Role};
use samplebench::metrics::Metric;
use samplebench::report::{self, ReportDocument};
use samplebench::samplers::{metropolis_hastings, MhConfig};
use samplebench::store::{self, SampleBatch};
use samplebench::targets::{self, CatalogConfig};
use samplebench::{Error, Result};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DEVIATION: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;
pub const EXIT_UNSUPPORTED: i32 = 5;

pub const REPORT_FILE: &str = "report.json";
pub const OVERVIEW_FILE: &str = "overview.svg";
pub const DEFAULT_NBINS: usize = 20;

const ESS_MARGIN: f64 = 1.05;
const MAX_SIZING_ROUNDS: usize = 6;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parameter(_) => EXIT_USAGE,
        Error::Capacity { .. } => EXIT_CAPACITY,
        Error::UnsupportedMetric { .. } => EXIT_UNSUPPORTED,
        Error::NotFound(_) | Error::Format { .. } | Error::Degenerate(_) | Error::Progress(_) | Error::Io(_) => {
            EXIT_DATA
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputMode {
    File(PathBuf),
    BuiltinMh {
        config: MhConfig,
        /// Collapse repeated chain states into multiplicity weights.
        compact: bool,
        /// Lengthen the chains until the compacted output holds `m·n`
        /// effective samples; `config.n_steps` is the first attempt.
        size_to_ess: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub testcase: String,
    pub metrics: Vec<Metric>,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub input: InputMode,
    pub out_dir: PathBuf,
    pub sampler: Option<String>,
    pub catalog: CatalogConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(Error::Parameter("at least one --metric is required".into()));
        }
        for m in &self.metrics {
            m.validate()?;
        }
        Ok(())
    }
}

/// Default metric set when none is given on the command line.
pub fn default_metrics() -> Vec<Metric> {
    ["mean", "variance", "swd", "mmd_rff"]
        .iter()
        .map(|s| s.parse().expect("builtin metric"))
        .collect()
}

/// Text table of the catalog: name, dimension, properties.
pub fn cmd_list(catalog: &CatalogConfig) -> Result<String> {
    let entries = targets::catalog_with(catalog)?;
    let width = entries.iter().map(|t| t.name().len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>5}  properties", "name", "dim");
    for t in &entries {
        let _ = writeln!(out, "{:<width$}  {:>5}  {}", t.name(), t.dim(), t.properties());
    }
    Ok(out)
}

pub fn cmd_sample(testcase: &str, n: usize, seed: u64, out: &Path, catalog: &CatalogConfig) -> Result<()> {
    if n == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    let target = targets::lookup_with(testcase, catalog)?;
    store::write_csv(&target.sample_iid(n, seed)?, out)
}

fn user_batch(cfg: &RunConfig, target: &targets::TargetSpec) -> Result<(SampleBatch, String)> {
    match &cfg.input {
        InputMode::File(path) => {
            if !path.exists() {
                return Err(Error::NotFound(format!("input file {}", path.display())));
            }
            let batch = store::read_csv(path)?;
            let label = batch.label().to_owned();
            Ok((batch, label))
        }
        InputMode::BuiltinMh {
            config,
            compact,
            size_to_ess,
        } => {
            let label = format!("mh(std={},chains={})", config.proposal_std, config.n_chains);
            let run = |c: &MhConfig| -> Result<SampleBatch> {
                let chain = metropolis_hastings(target, c)?;
                Ok(if *compact { chain.collapse_repeats() } else { chain })
            };
            let mut config = config.clone();
            let mut batch = run(&config)?;
            if *size_to_ess {
                let required = (cfg.m * cfg.n) as f64 * ESS_MARGIN;
                for _ in 0..MAX_SIZING_ROUNDS {
                    let available = store::ess(&batch);
                    if available >= required {
                        break;
                    }
                    let kept = config.kept_per_chain() as f64 * required / available.max(1.0) * ESS_MARGIN;
                    let kept = kept.ceil() as usize;
                    config.burn_in = kept / 9;
                    config.n_steps = kept + config.burn_in;
                    batch = run(&config)?;
                }
            }
            Ok((batch, label))
        }
    }
}

/// Builds both sets of statistics and assembles the report without touching
/// the filesystem beyond reading the input.
pub fn build_report(cfg: &RunConfig) -> Result<ReportDocument> {
    cfg.validate()?;
    let target = targets::lookup_with(&cfg.testcase, &cfg.catalog)?;
    for metric in &cfg.metrics {
        metric.check_supported(&target)?;
    }
    let (user, label) = user_batch(cfg, &target)?;
    let reference = build_teststatistic_iid(&target, &cfg.metrics, cfg.m, cfg.n, cfg.seed)?;
    let theirs = build_teststatistic_user(&target, &cfg.metrics, cfg.m, cfg.n, &user, cfg.seed)?;
    let sampler = cfg.sampler.clone().unwrap_or(label);
    ReportDocument::new(target.name(), &sampler, cfg.seed, cfg.n, reference, theirs)
}

/// Writes `report.json` and `overview.svg` into the output directory and
/// returns the report with its exit code.
pub fn execute_run(cfg: &RunConfig) -> Result<(ReportDocument, i32)> {
    let doc = build_report(cfg)?;
    fs::create_dir_all(&cfg.out_dir)?;
    report::write_report(&doc, cfg.out_dir.join(REPORT_FILE))?;
    report::plot_overview(&doc.comparison, cfg.out_dir.join(OVERVIEW_FILE))?;
    let code = if doc.comparison.passes() { EXIT_PASS } else { EXIT_DEVIATION };
    Ok((doc, code))
}

/// 0 if every metric lies within three reference standard deviations,
/// 2 otherwise.
pub fn cmd_run(cfg: &RunConfig) -> Result<i32> {
    execute_run(cfg).map(|(_, code)| code)
}

pub fn cmd_plot(report_path: &Path, metric: &str, nbins: usize, out: &Path) -> Result<()> {
    let doc = report::read_report(report_path)?;
    let (Some(r), Some(u)) = (doc.statistic(Role::IidReference, metric), doc.statistic(Role::User, metric)) else {
        return Err(Error::Parameter(format!(
            "metric `{metric}` not in report; available: {}",
            doc.metric_names().join(", ")
        )));
    };
    report::plot_teststatistic(r, u, nbins, out)
}

pub fn summary_table(doc: &ReportDocument) -> String {
    let width = doc.comparison.entries.iter().map(|e| e.metric.chars().count()).max().unwrap_or(6).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  band", "metric", "z", "std ratio");
    for e in &doc.comparison.entries {
        let pad = width - e.metric.chars().count();
        let _ = writeln!(
            out,
            "{}{}  {:>9.3}  {:>9.3}  {}",
            e.metric,
            " ".repeat(pad),
            e.z,
            e.std_ratio,
            e.band.label()
        );
    }
    out
}

#[derive(Parser, Debug)]
#[command(name = "samplebench", version, about = "Benchmark Monte Carlo samples against IID draws from analytic targets")]
pub struct Cli {
    /// JSON file overriding catalog settings (eight-schools data, mixture offset, accept-reject cap).
    #[arg(long, global = true, env = "SAMPLEBENCH_CONFIG")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the catalog of test cases.
    List,
    /// Write IID samples of a test case to CSV.
    Sample {
        #[arg(long)]
        testcase: String,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Score a sample file or the built-in MH sampler against IID references.
    Run(RunArgs),
    /// Render the reference and user distributions of one metric from a report.
    Plot {
        report: PathBuf,
        #[arg(long)]
        metric: String,
        #[arg(long, default_value_t = DEFAULT_NBINS)]
        nbins: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub testcase: String,
    /// Metric with inline hyperparameters, e.g. `swd:p=1,L=50`; repeatable.
    /// Defaults to mean, variance, swd and mmd_rff.
    #[arg(long = "metric")]
    pub metrics: Vec<String>,
    /// Number of batches.
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    /// Effective samples per batch.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV of user samples; the built-in MH sampler is used when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Total MH steps per chain including burn-in. When absent the chains
    /// are lengthened until they hold m·n effective samples.
    #[arg(long)]
    pub mh_steps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub mh_chains: usize,
    #[arg(long, default_value_t = 1.0)]
    pub mh_proposal_std: f64,
    /// Defaults to 10% of the steps.
    #[arg(long)]
    pub mh_burn_in: Option<usize>,
    /// Keep every MH state with unit weight instead of collapsing repeated
    /// states into multiplicity weights.
    #[arg(long)]
    pub mh_raw: bool,
    /// Seed of the MH sampler; defaults to a child of --seed.
    #[arg(long)]
    pub mh_seed: Option<u64>,
    /// Label recorded in the report.
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long, default_value = "samplebench-out")]
    pub out_dir: PathBuf,
    /// Worker threads; defaults to available cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl RunArgs {
    pub fn to_config(&self, catalog: CatalogConfig) -> Result<RunConfig> {
        let metrics = if self.metrics.is_empty() {
            default_metrics()
        } else {
            self.metrics.iter().map(|s| s.parse()).collect::<Result<Vec<Metric>>>()?
        };
        let input = match &self.input {
            Some(p) => InputMode::File(p.clone()),
            None => {
                let chains = self.mh_chains.max(1);
                let kept = (self.m * self.n).div_ceil(chains);
                let steps = self.mh_steps.unwrap_or(kept + kept / 9 + 1);
                let mut config = MhConfig::new(
                    steps,
                    self.mh_proposal_std,
                    self.mh_seed.unwrap_or_else(|| samplebench::seed::child_seed(self.seed, 0, "mh")),
                )
                .with_chains(self.mh_chains);
                if let Some(b) = self.mh_burn_in {
                    config = config.with_burn_in(b);
                }
                config.validate()?;
                InputMode::BuiltinMh {
                    config,
                    compact: !self.mh_raw,
                    size_to_ess: self.mh_steps.is_none(),
                }
            }
        };
        Ok(RunConfig {
            testcase: self.testcase.clone(),
            metrics,
            m: self.m,
            n: self.n,
            seed: self.seed,
            input,
            out_dir: self.out_dir.clone(),
            sampler: self.sampler.clone(),
            catalog,
        })
    }
}

fn load_catalog(path: Option<&Path>) -> Result<CatalogConfig> {
    match path {
        Some(p) => CatalogConfig::from_json_file(p),
        None => Ok(CatalogConfig::default()),
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let catalog = load_catalog(cli.config.as_deref())?;
    match cli.command {
        Command::List => {
            print!("{}", cmd_list(&catalog)?);
            Ok(EXIT_PASS)
        }
        Command::Sample { testcase, n, seed, out } => {
            cmd_sample(&testcase, n, seed, &out, &catalog)?;
            Ok(EXIT_PASS)
        }
        Command::Run(args) => {
            let cfg = args.to_config(catalog)?;
            let run = || execute_run(&cfg);
            let (doc, code) = match args.threads {
                Some(t) => rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?
                    .install(run)?,
                None => run()?,
            };
            print!("{}", summary_table(&doc));
            println!(
                "{} -> {}",
                if code == EXIT_PASS { "PASS" } else { "DEVIATION" },
                cfg.out_dir.display()
            );
            Ok(code)
        }
        Command::Plot { report, metric, nbins, out } => {
            cmd_plot(&report, &metric, nbins, &out)?;
            Ok(EXIT_PASS)
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
