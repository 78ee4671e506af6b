//! Command-line front end: `ingest`, `fit`, `measure`, `validate`, `pipeline`.

pub mod config;
pub mod ingest;
pub mod pipeline;
pub mod synthetic;
pub mod validate;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{CoriskError, Result};
use config::{resolve_output_dir, CopulaChoice, LevelSpec, PipelineConfig};
use ingest::{ingest_prices, write_losses, MIN_LOSS_ROWS};
use pipeline::{
    ensure_dir, now, read_model, write_fit_outputs, write_json, write_measure_outputs, CopulaFitSummary, RunRecord,
};
use validate::{Fault, Suite, ValidationReport, ORACLE_DRAWS};

#[derive(Debug, Parser)]
#[command(name = "corisk", version, about = "Multivariate conditional systemic risk measures from price histories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a price CSV and write daily log-losses to losses.csv.
    Ingest(ConfigArgs),
    /// Fit GPD-tail marginals and candidate copulas; writes marginals, fitting errors and model.json.
    Fit(ConfigArgs),
    /// Compute risk measures from a fitted model.json.
    Measure(MeasureArgs),
    /// Run a validation suite and write validate.json.
    Validate(ValidateArgs),
    /// Ingest, fit and measure in one run.
    Pipeline(ConfigArgs),
    /// Write the bundled synthetic price dataset.
    #[command(hide = true)]
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON or TOML file with PipelineConfig keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Price CSV with a date column and one column per asset.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Asset columns in portfolio order, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub assets: Vec<String>,
    #[arg(long)]
    pub threshold_level: Option<f64>,
    /// A level `p` or a row `p1,p2,...`; repeat for several.
    #[arg(long = "level")]
    pub levels: Vec<String>,
    #[arg(long, value_enum)]
    pub copula: Option<CopulaChoice>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overridden by CORISK_OUTPUT_DIR.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    /// Config file first, then flags on top; the input path is required only when `need_input`.
    pub fn resolve(&self, need_input: bool) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::new(PathBuf::new()),
        };
        let configured_dir = self.config.as_ref().map(|_| cfg.output_dir.clone());
        if let Some(i) = &self.input {
            cfg.input_path = i.clone();
        }
        if !self.assets.is_empty() {
            cfg.asset_columns = self.assets.clone();
        }
        if let Some(t) = self.threshold_level {
            cfg.threshold_level = t;
        }
        if !self.levels.is_empty() {
            cfg.levels = self.levels.iter().map(|s| LevelSpec::parse(s)).collect::<Result<_>>()?;
        }
        if let Some(c) = self.copula {
            cfg.copula_choice = c;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.output_dir = resolve_output_dir(self.output_dir.as_deref(), configured_dir.as_deref());
        if need_input && cfg.input_path.as_os_str().is_empty() {
            return Err(CoriskError::Input("no input: pass --input or set input_path in --config".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    /// Fitted model; defaults to model.json in the output directory.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub common: ConfigArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Monte Carlo draws per oracle fixture.
    #[arg(long, default_value_t = ORACLE_DRAWS)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<Fault>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = synthetic::SYNTH_DAYS)]
    pub days: usize,
    #[arg(long, default_value_t = synthetic::SYNTH_SEED)]
    pub seed: u64,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

/// Parses the process arguments, runs the command, and returns the exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            let rec = ErrorRecord { error: e.kind(), message: e.to_string(), exit_code: e.exit_code() };
            eprintln!("{}", serde_json::to_string(&rec).unwrap_or_else(|_| e.to_string()));
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Ingest(a) => {
            let cfg = a.resolve(true)?;
            let dir = ensure_dir(&cfg.output_dir)?;
            let data = ingest_prices(&cfg.input_path, &cfg.asset_columns, MIN_LOSS_ROWS)?;
            write_losses(&dir.join("losses.csv"), &data)?;
            println!(
                "wrote {} ({} loss rows, {} price rows dropped)",
                dir.join("losses.csv").display(),
                data.stats.loss_rows,
                data.stats.dropped_rows
            );
            Ok(0)
        }
        Command::Fit(a) => {
            let cfg = a.resolve(true)?;
            let rec = run_fit(&cfg)?;
            report_outputs(&cfg.output_dir, &rec);
            Ok(0)
        }
        Command::Measure(a) => {
            let cfg = a.common.resolve(false)?;
            let dir = ensure_dir(&cfg.output_dir)?;
            let model_path = a.model.clone().unwrap_or_else(|| dir.join("model.json"));
            let model = read_model(&model_path)?;
            let (names, warnings) = write_measure_outputs(&dir, &model, &cfg.levels, cfg.mmme_weights.as_ref())?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            for n in names {
                println!("wrote {}", dir.join(n).display());
            }
            Ok(0)
        }
        Command::Validate(a) => {
            let dir = ensure_dir(&resolve_output_dir(a.output_dir.as_deref(), None))?;
            let report = validate::run_suite(a.suite, a.n, a.seed, a.inject_fault)?;
            write_json(&dir.join("validate.json"), &report)?;
            print_validation(&report);
            Ok(if report.passed { 0 } else { CoriskError::Validation(String::new()).exit_code() })
        }
        Command::Pipeline(a) => {
            let cfg = a.resolve(true)?;
            let rec = run_pipeline(&cfg)?;
            report_outputs(&cfg.output_dir, &rec);
            Ok(0)
        }
        Command::Synth(a) => {
            if a.days < 2 {
                return Err(CoriskError::Input("need at least two days".into()));
            }
            synthetic::write_synthetic_prices(&a.output, a.days, a.seed)?;
            println!("wrote {}", a.output.display());
            Ok(0)
        }
    }
}

fn print_validation(r: &ValidationReport) {
    for c in &r.checks {
        println!("{} {} (margin {:e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.margin);
    }
    let failed = r.checks.iter().filter(|c| !c.passed).count();
    println!("{}: {} checks, {failed} failed", r.suite.name(), r.checks.len());
}

fn report_outputs(dir: &Path, rec: &RunRecord) {
    for w in &rec.warnings {
        eprintln!("warning: {w}");
    }
    for o in &rec.outputs {
        println!("wrote {}", dir.join(o).display());
    }
}

fn fit_into(rec: &mut RunRecord, cfg: &PipelineConfig, dir: &Path) -> Result<pipeline::FittedModel> {
    let data = ingest_prices(&cfg.input_path, &cfg.asset_columns, MIN_LOSS_ROWS)?;
    write_losses(&dir.join("losses.csv"), &data)?;
    rec.outputs.push("losses.csv".into());
    rec.ingest = Some(data.stats.clone());
    let stage = pipeline::fit_stage(&data, cfg)?;
    rec.outputs.extend(write_fit_outputs(dir, &stage)?);
    rec.copula_family = Some(stage.model.copula_family);
    rec.fits = stage.fits.iter().filter_map(|(_, r)| r.as_ref().ok().map(CopulaFitSummary::from)).collect();
    rec.warnings.extend(stage.warnings.iter().cloned());
    Ok(stage.model)
}

fn finish(mut rec: RunRecord, dir: &Path) -> Result<RunRecord> {
    rec.outputs.push("run.json".into());
    rec.finished_at = now();
    write_json(&dir.join("run.json"), &rec)?;
    Ok(rec)
}

/// Ingest and fit; writes losses, marginal and copula fits, fitting errors, model.json, run.json.
pub fn run_fit(cfg: &PipelineConfig) -> Result<RunRecord> {
    let dir = ensure_dir(&cfg.output_dir)?;
    let mut rec = RunRecord::new("fit", cfg, now());
    fit_into(&mut rec, cfg, &dir)?;
    finish(rec, &dir)
}

/// The full run: ingest, fit, and one measures file per configured level.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunRecord> {
    let dir = ensure_dir(&cfg.output_dir)?;
    let mut rec = RunRecord::new("pipeline", cfg, now());
    let model = fit_into(&mut rec, cfg, &dir)?;
    let (names, warnings) = write_measure_outputs(&dir, &model, &cfg.levels, cfg.mmme_weights.as_ref())?;
    rec.outputs.extend(names);
    rec.warnings.extend(warnings);
    finish(rec, &dir)
}
