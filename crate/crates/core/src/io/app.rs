//! Command-line entry points. Each subcommand writes its outputs plus a
//! `manifest.json` into `--out-dir`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::{parse_weights, read_pool, RunConfig};
use super::csv::losses_to_string;
use super::dataset::{load_dataset, Dataset, DatasetPaths};
use super::manifest::{digest_file, FileDigest, RunWriter};
use super::report::{
    bernstein_csv, bernstein_summary, phase_csv, phase_summary, read_json, render_cv, render_diagnose, to_json,
    DiagnoseReport, StoredReport,
};
use crate::cv::{strict_nested_cv, CvReport};
use crate::diagnostics::diagnose;
use crate::synth::{bernstein_sweep, phase_sweep, BernsteinSweepSpec, PhaseSweepSpec};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "regime", version, about = "Regime diagnostics and strict nested CV for controller classes")]
pub struct Cli {
    /// Log verbosity (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Residual, viability and ceiling diagnostics with a predicted class.
    Diagnose(DataArgs),
    /// Strict nested cross-validation over a family pool.
    Cv(DataArgs),
    /// Synthetic sweeps.
    Synth(SynthArgs),
    /// Re-render a stored JSON report.
    Report {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Bernstein,
    Pi12,
    Pi3,
}

impl SynthKind {
    fn as_str(self) -> &'static str {
        match self {
            SynthKind::Bernstein => "bernstein",
            SynthKind::Pi12 => "pi12",
            SynthKind::Pi3 => "pi3",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Numeric feature table, one row per sample
    #[arg(long)]
    pub features: PathBuf,
    /// Per-row loss matrix, one `loss_<action>` column per action.
    #[arg(long, conflicts_with = "components", required_unless_present = "components")]
    pub losses: Option<PathBuf>,
    /// Per-row loss components (`c_`, `h_`, `k_` columns).
    #[arg(long)]
    pub components: Option<PathBuf>,
    /// Prior channel, one `z` column.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Loss weights as `w_c,w_h,w_k`.
    #[arg(long)]
    pub weights: Option<String>,
    /// Tail fraction of the selective subproblem
    #[arg(long)]
    pub q: Option<f64>,
    /// Failure probability of the viability bound
    #[arg(long)]
    pub delta: Option<f64>,
    /// Action compared against `direct` in the selective subproblem.
    #[arg(long)]
    pub fallback: Option<String>,
    /// JSON family pool.
    #[arg(long)]
    pub pool_config: Option<PathBuf>,
    /// Comma-separated CV seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Seed of the diagnostic learners
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub outer_folds: Option<usize>,
    #[arg(long)]
    pub inner_folds: Option<usize>,
    /// Directory for reports and the run manifest
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo replications per cell (bernstein only).
    #[arg(long)]
    pub replications: Option<usize>,
    /// Directory for reports and the run manifest
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => read_json::<RunConfig>(p)?,
            None => RunConfig::default(),
        };
        if let Some(w) = &self.weights {
            cfg.weights = parse_weights(w)?;
        }
        if let Some(p) = &self.pool_config {
            cfg.pool = read_pool(p)?;
        }
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = &self.$f { cfg.$f = v.clone(); })*};
        }
        set!(q, delta, fallback, seeds, seed, outer_folds, inner_folds);
        cfg.validate()?;
        Ok(cfg)
    }
}

impl DataArgs {
    pub fn paths(&self) -> DatasetPaths {
        DatasetPaths {
            features: self.features.clone(),
            losses: self.losses.clone(),
            components: self.components.clone(),
            prior: self.prior.clone(),
        }
    }

    fn input_digests(&self) -> Result<Vec<FileDigest>> {
        [Some(&self.features), self.losses.as_ref(), self.components.as_ref(), self.prior.as_ref()]
            .into_iter()
            .flatten()
            .map(|p| digest_file(p, p.display().to_string()))
            .collect()
    }
}

pub fn run_diagnose(data: &Dataset, cfg: &RunConfig) -> Result<DiagnoseReport> {
    let fallback = data
        .losses
        .actions()
        .index_of(&cfg.fallback)
        .ok_or_else(|| Error::invalid(format!("fallback action `{}` is not in the action set", cfg.fallback)))?;
    let dc = data.require_direct_correct()?;
    let diagnostics = diagnose(&data.features, &data.losses, dc, fallback, data.prior.is_some(), &cfg.diagnose_options())?;
    Ok(DiagnoseReport { dataset: data.name.clone(), fallback: cfg.fallback.clone(), diagnostics })
}

/// Runs the nested CV. The predicted class is attached when the dataset
/// carries direct correctness.
pub fn run_cv(data: &Dataset, cfg: &RunConfig) -> Result<CvReport> {
    let mut report = strict_nested_cv(&cfg.cv_config(), data.cv_data())?;
    if data.direct_correct.is_some() {
        report.predicted_class = Some(run_diagnose(data, cfg)?.diagnostics.predicted_class);
    }
    Ok(report)
}

fn diagnose_cmd(args: &DataArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let data = load_dataset(&args.paths(), &cfg.weights)?;
    let report = run_diagnose(&data, &cfg)?;
    let table = render_diagnose(&report);
    print!("{table}");
    let mut w = RunWriter::create(&args.common.out_dir)?;
    w.write("diagnose.json", &to_json(&StoredReport::Diagnose(report))?)?;
    w.write("diagnose.txt", &table)?;
    if args.components.is_some() {
        w.write("losses.csv", &losses_to_string(&data.losses, data.direct_correct.as_deref())?)?;
    }
    w.finish("diagnose", &cfg, vec![cfg.seed], args.input_digests()?)?;
    Ok(())
}

fn cv_cmd(args: &DataArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let data = load_dataset(&args.paths(), &cfg.weights)?;
    let report = run_cv(&data, &cfg)?;
    let table = render_cv(&report);
    print!("{table}");
    let mut w = RunWriter::create(&args.common.out_dir)?;
    w.write("cv.json", &to_json(&StoredReport::Cv(report))?)?;
    w.write("cv.txt", &table)?;
    w.finish("cv", &cfg, cfg.seeds.clone(), args.input_digests()?)?;
    Ok(())
}

pub fn synth_cmd(args: &SynthArgs) -> Result<()> {
    let mut w = RunWriter::create(&args.out_dir)?;
    let name = args.kind.as_str();
    match args.kind {
        SynthKind::Bernstein => {
            let mut spec = BernsteinSweepSpec { seed: args.seed, ..Default::default() };
            if let Some(r) = args.replications {
                spec.replications = r;
            }
            let sweep = bernstein_sweep(&spec)?;
            let csv = bernstein_csv(&sweep);
            print!("{csv}");
            w.write(&format!("{name}.csv"), &csv)?;
            w.write(&format!("{name}_summary.json"), &to_json(&bernstein_summary(&sweep))?)?;
            w.write(&format!("{name}.json"), &to_json(&StoredReport::Bernstein(sweep))?)?;
            w.finish(&format!("synth {name}"), &spec, vec![spec.seed], Vec::new())?;
        }
        SynthKind::Pi12 | SynthKind::Pi3 => {
            if args.replications.is_some() {
                return Err(Error::invalid("--replications applies to the bernstein sweep only"));
            }
            let base = if args.kind == SynthKind::Pi12 { PhaseSweepSpec::pi12() } else { PhaseSweepSpec::pi3() };
            let spec = PhaseSweepSpec { seed: args.seed, ..base };
            let sweep = phase_sweep(&spec)?;
            let csv = phase_csv(&sweep);
            print!("{csv}");
            w.write(&format!("{name}.csv"), &csv)?;
            w.write(&format!("{name}_summary.json"), &to_json(&phase_summary(&sweep))?)?;
            w.write(&format!("{name}.json"), &to_json(&StoredReport::Phase(sweep))?)?;
            w.finish(&format!("synth {name}"), &spec, vec![spec.seed], Vec::new())?;
        }
    }
    Ok(())
}

pub fn report_cmd(path: &Path) -> Result<String> {
    Ok(read_json::<StoredReport>(path)?.render())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Diagnose(a) => diagnose_cmd(a),
        Command::Cv(a) => cv_cmd(a),
        Command::Synth(a) => synth_cmd(a),
        Command::Report { path } => {
            print!("{}", report_cmd(path)?);
            Ok(())
        }
    }
}

/// Exit code 0 on success, 2 on validation errors, 3 otherwise.
pub fn exit_code(result: &Result<()>) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_validation() => ExitCode::from(2),
        Err(_) => ExitCode::from(3),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    let result = execute(&cli);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    exit_code(&result)
}
