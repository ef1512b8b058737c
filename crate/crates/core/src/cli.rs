//! Command-line front end. Every subcommand writes one run record (and any
//! data files) under the output directory and prints a short summary.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::binning::{BinningMethod, BinningScheme};
use crate::bounds::{self, BoundKind, BoundReport};
use crate::data::{load_scores, ScoreFormat};
use crate::error::{Error, Result};
use crate::experiment::{
    evaluate_recalibration, log_grid, run_scaling, split_for_recalibration,
    synthetic_recalibration_data, BinRule, RecalibVariant, ScalingConfig,
};
use crate::metrics::{cube_root_bins, ece, optimal_bins};
use crate::mi::{run_cmi_experiment, CmiExperimentConfig, MaskMode};
use crate::models::{SyntheticModel, TrainerConfig};
use crate::record::RunRecord;

#[derive(Debug, Parser)]
#[command(
    name = "calibound",
    version,
    about = "Binned ECE, calibration bounds, recalibration and CMI experiments"
)]
pub struct Cli {
    /// Directory for run records and data files.
    #[arg(long, global = true, env = "CALIBOUND_OUT", default_value = "runs")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Binned ECE of a score file.
    Ece(EceArgs),
    /// Evaluate one bound in closed form and print it as JSON.
    Bounds(BoundsArgs),
    /// TCE-gap scaling study on the synthetic family.
    Synthetic(SyntheticArgs),
    /// Histogram recalibration with held-out or reused training data.
    Recalibrate(RecalibrateArgs),
    /// Supersample CMI experiment over a grid of sample sizes.
    Cmi(CmiArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinsChoice {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for BinsChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(BinsChoice::Auto);
        }
        match s.parse() {
            Ok(0) | Err(_) => Err(format!(
                "expected a positive integer or \"auto\", got {s:?}"
            )),
            Ok(b) => Ok(BinsChoice::Fixed(b)),
        }
    }
}

#[derive(Debug, Args)]
pub struct EceArgs {
    /// CSV (`score,label`) or JSON score file.
    #[arg(long)]
    pub input: PathBuf,
    /// File format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<ScoreFormat>,
    /// Bin count, or `auto` for the bound-minimising count.
    #[arg(long, default_value = "auto")]
    pub bins: BinsChoice,
    #[arg(long, value_enum, default_value_t = BinningMethod::Uwb)]
    pub method: BinningMethod,
    /// Lipschitz constant used by `--bins auto`.
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BoundsArgs {
    #[arg(value_enum)]
    pub name: BoundKind,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub lipschitz: Option<f64>,
    #[arg(long, value_enum, default_value_t = BinningMethod::Uwb)]
    pub variant: BinningMethod,
    /// Confidence level for `high-prob`, covering radius for `metric-entropy`.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub ecmi: Option<f64>,
    #[arg(long)]
    pub fcmi: Option<f64>,
    #[arg(long)]
    pub i1: Option<f64>,
    #[arg(long)]
    pub i2: Option<f64>,
    #[arg(long)]
    pub n_re: Option<usize>,
    /// Log covering number for `metric-entropy`.
    #[arg(long)]
    pub log_cover: Option<f64>,
    /// Parameter dimension for `metric-entropy-parametric`.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Parameter-space Lipschitz constant for `metric-entropy-parametric`.
    #[arg(long)]
    pub l0: Option<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SyntheticArgs {
    #[arg(long, default_value_t = 0.5)]
    pub beta0: f64,
    #[arg(long, default_value_t = -1.5)]
    pub beta1: f64,
    /// Explicit sample sizes; overrides the log-spaced grid.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub n_min: usize,
    #[arg(long, default_value_t = 100_000)]
    pub n_max: usize,
    #[arg(long, default_value_t = 5)]
    pub n_points: usize,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// `optimal`, `cube_root`, or a fixed bin count.
    #[arg(long, default_value = "optimal")]
    pub bin_rule: BinRule,
    #[arg(long, default_value_t = 2_000_000)]
    pub n_mc: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VariantChoice {
    Holdout,
    Reuse,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RecalibrateArgs {
    /// Score file; synthetic data is generated when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<ScoreFormat>,
    #[arg(long, value_enum, default_value_t = VariantChoice::Holdout)]
    pub variant: VariantChoice,
    #[arg(long, default_value_t = 15)]
    pub bins: usize,
    /// Size of the held-out recalibration set.
    #[arg(long, default_value_t = 100)]
    pub n_re: usize,
    /// Test fraction when splitting a score file.
    #[arg(long, default_value_t = 0.2)]
    pub eval_split: f64,
    /// Synthetic training size.
    #[arg(long, default_value_t = 4000)]
    pub n: usize,
    /// Synthetic test size; defaults to `--n`.
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub beta0: f64,
    #[arg(long, default_value_t = -1.5)]
    pub beta1: f64,
    /// Information terms for the reuse bound.
    #[arg(long, default_value_t = 0.0)]
    pub i1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub i2: f64,
    /// Estimate the reuse-bound information terms with the CMI experiment
    /// (synthetic data only).
    #[arg(long)]
    pub estimate_mi: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CmiArgs {
    #[arg(long, value_delimiter = ',', default_value = "100,500,2000")]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub n_supersamples: usize,
    #[arg(long, default_value_t = 10)]
    pub n_masks: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Bin count; `floor(n^(1/3))` per grid point when omitted.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum, default_value_t = BinningMethod::Umb)]
    pub binning: BinningMethod,
    #[arg(long, default_value_t = 1.0)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub trainer_seed: u64,
    /// Enumerate all masks with this many trainer seeds each (n <= 12).
    #[arg(long)]
    pub exhaustive_seeds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// `x` with six significant digits.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (5 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn round6(x: f64) -> f64 {
    fmt6(x).parse().unwrap_or(x)
}

fn need<T>(v: Option<T>, flag: &str, name: BoundKind) -> Result<T> {
    v.ok_or_else(|| {
        let id = serde_json::to_value(name)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        Error::invalid(format!("bound {id} needs --{flag}"))
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ece(a) => cmd_ece(&a, &cli.out),
        Command::Bounds(a) => cmd_bounds(&a, &cli.out),
        Command::Synthetic(a) => cmd_synthetic(&a, &cli.out),
        Command::Recalibrate(a) => cmd_recalibrate(&a, &cli.out),
        Command::Cmi(a) => cmd_cmi(&a, &cli.out),
    }
}

fn format_for(path: &Path, format: Option<ScoreFormat>) -> ScoreFormat {
    format.unwrap_or_else(|| ScoreFormat::from_path(path))
}

pub fn cmd_ece(a: &EceArgs, out: &Path) -> Result<()> {
    let d = load_scores(&a.input, format_for(&a.input, a.format))?;
    let bins = match a.bins {
        BinsChoice::Fixed(b) => b,
        BinsChoice::Auto => optimal_bins(d.len(), a.lipschitz, a.method)?,
    };
    let scheme = match a.method {
        BinningMethod::Uwb => BinningScheme::uwb(bins)?,
        BinningMethod::Umb => BinningScheme::umb(&d.scores(), bins)?,
    };
    let e = ece(&d, &scheme);
    println!("ece     {}", fmt6(e.value));
    println!("bins    {}", scheme.n_bins());
    println!("method  {}", scheme.method());
    println!("n       {}", d.len());

    let mut rec = RunRecord::new(
        "ece",
        json!({"input": a.input, "bins": format!("{:?}", a.bins), "method": a.method, "lipschitz": a.lipschitz}),
    );
    rec.push(
        "ece",
        e.value,
        [
            ("bins", json!(scheme.n_bins())),
            ("n_e", json!(d.len())),
            ("edges", json!(scheme.edges())),
        ],
    );
    if scheme.tie_collapsed() {
        rec.note(format!(
            "tied scores reduced the bin count from {bins} to {}",
            scheme.n_bins()
        ));
    }
    rec.write(out)?;
    Ok(())
}

pub fn bound_from_args(a: &BoundsArgs) -> Result<BoundReport> {
    let k = a.name;
    let bins = || need(a.bins, "bins", k);
    let n = || need(a.n, "n", k);
    let l = || need(a.lipschitz, "lipschitz", k);
    match k {
        BoundKind::StatBias => bounds::stat_bias_bound(bins()?, n()?, a.variant),
        BoundKind::BinningBias => bounds::binning_bias_bound(bins()?, n()?, l()?, a.variant),
        BoundKind::TotalBias => bounds::total_bias_bound(bins()?, n()?, l()?, a.variant),
        BoundKind::HighProb => bounds::high_prob_bound(bins()?, n()?, need(a.delta, "delta", k)?),
        BoundKind::GenEce => bounds::gen_ece_bound(need(a.ecmi, "ecmi", k)?, bins()?, n()?),
        BoundKind::GenTce => bounds::gen_tce_bound(
            need(a.ecmi, "ecmi", k)?,
            a.fcmi,
            bins()?,
            n()?,
            l()?,
            a.variant,
        ),
        BoundKind::MetricEntropy => bounds::metric_entropy_bound(
            bins()?,
            n()?,
            l()?,
            need(a.delta, "delta", k)?,
            need(a.log_cover, "log-cover", k)?,
        ),
        BoundKind::MetricEntropyParametric => bounds::metric_entropy_parametric_bound(
            bins()?,
            n()?,
            l()?,
            need(a.dim, "dim", k)?,
            need(a.l0, "l0", k)?,
        ),
        BoundKind::RecalibReuse => {
            bounds::recalib_reuse_bound(need(a.i1, "i1", k)?, need(a.i2, "i2", k)?, bins()?, n()?)
        }
        BoundKind::RecalibHoldout => {
            bounds::recalib_holdout_bound(bins()?, need(a.n_re, "n-re", k)?)
        }
    }
}

pub fn cmd_bounds(a: &BoundsArgs, out: &Path) -> Result<()> {
    let report = bound_from_args(a)?;
    let mut shown = report.clone();
    shown.value = round6(shown.value);
    for v in shown.inputs.values_mut() {
        *v = round6(*v);
    }
    println!("{}", serde_json::to_string_pretty(&shown)?);
    let mut rec = RunRecord::new("bounds", serde_json::to_value(&report)?);
    rec.push_bound(report);
    rec.write(out)?;
    Ok(())
}

pub fn cmd_synthetic(a: &SyntheticArgs, out: &Path) -> Result<()> {
    let n_grid = if a.n_grid.is_empty() {
        log_grid(a.n_min, a.n_max, a.n_points)?
    } else {
        a.n_grid.clone()
    };
    let cfg = ScalingConfig {
        beta0: a.beta0,
        beta1: a.beta1,
        n_grid,
        reps: a.reps,
        bin_rule: a.bin_rule,
        n_mc: a.n_mc,
        seed: a.seed,
        ..Default::default()
    };
    let r = run_scaling(&cfg)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let csv_path = out.join("synthetic.csv");
    let file = File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    r.write_csv(BufWriter::new(file))?;

    println!("lipschitz  {}", fmt6(r.lipschitz));
    println!("tce        {} (se {})", fmt6(r.tce), fmt6(r.tce_std_error));
    println!("{:>8}  {:>5}  {:>12}", "n", "B", "mean_gap");
    for (&(n, gap), chunk) in r.mean_gaps.iter().zip(r.rows.chunks(cfg.reps)) {
        println!("{n:>8}  {:>5}  {:>12}", chunk[0].bins, fmt6(gap));
    }
    println!("slope      {}", fmt6(r.slope));
    println!("csv        {}", csv_path.display());

    let mut rec = RunRecord::new("synthetic", serde_json::to_value(&cfg)?);
    rec.push(
        "lipschitz",
        r.lipschitz,
        [("grid", json!(cfg.lipschitz_grid))],
    );
    rec.push(
        "tce",
        r.tce,
        [
            ("n_mc", json!(cfg.n_mc)),
            ("std_error", json!(r.tce_std_error)),
        ],
    );
    for &(n, gap) in &r.mean_gaps {
        rec.push(
            "mean_tce_gap",
            gap,
            [("n", json!(n)), ("reps", json!(cfg.reps))],
        );
    }
    rec.push(
        "log_log_slope",
        r.slope,
        [("points", json!(r.mean_gaps.len()))],
    );
    rec.write(out)?;
    Ok(())
}

pub fn cmd_recalibrate(a: &RecalibrateArgs, out: &Path) -> Result<()> {
    let variant = match a.variant {
        VariantChoice::Holdout => RecalibVariant::Holdout { n_re: a.n_re },
        VariantChoice::Reuse => RecalibVariant::Reuse,
    };
    let mut rec = RunRecord::new(
        "recalibrate",
        json!({
            "input": a.input, "variant": variant, "bins": a.bins, "eval_split": a.eval_split,
            "n": a.n, "n_test": a.n_test, "beta0": a.beta0, "beta1": a.beta1, "seed": a.seed,
        }),
    );
    let mut mi = (a.i1, a.i2);
    let (fit, test) = match &a.input {
        Some(path) => {
            if a.estimate_mi {
                return Err(Error::invalid(
                    "--estimate-mi is only available for synthetic data",
                ));
            }
            let d = load_scores(path, format_for(path, a.format))?;
            split_for_recalibration(&d, variant, a.eval_split, a.seed)?
        }
        None => {
            let model = SyntheticModel::new(a.beta0, a.beta1)?;
            let n_re = match variant {
                RecalibVariant::Holdout { n_re } => n_re,
                RecalibVariant::Reuse => 0,
            };
            let (train, recal, test) =
                synthetic_recalibration_data(&model, a.n, n_re, a.n_test.unwrap_or(a.n), a.seed)?;
            if a.estimate_mi && variant == RecalibVariant::Reuse {
                let cfg = CmiExperimentConfig {
                    n: a.n,
                    bins: a.bins,
                    binning: BinningMethod::Umb,
                    seed: a.seed,
                    ..Default::default()
                };
                let report = run_cmi_experiment(&cfg)?;
                mi = (report.i_delta1.clamped, report.i_delta2.clamped);
                rec.push("i_delta1", report.i_delta1.value, [("k", json!(cfg.k))]);
                rec.push("i_delta2", report.i_delta2.value, [("k", json!(cfg.k))]);
            }
            (recal.unwrap_or(train), test)
        }
    };
    let o = evaluate_recalibration(&fit, &test, a.bins, variant, mi)?;
    let name = match variant {
        RecalibVariant::Holdout { .. } => "holdout",
        RecalibVariant::Reuse => "reuse",
    };
    println!("variant     {name}");
    println!("bins        {}", o.recalibrator.scheme().n_bins());
    println!("n_fit       {}", o.n_fit);
    println!("n_test      {}", o.n_test);
    println!("ece_before  {}", fmt6(o.ece_before));
    println!("ece_after   {}", fmt6(o.ece_after));
    println!("bound       {}", fmt6(o.bound.value));

    let inputs = || {
        [
            ("n_fit", json!(o.n_fit)),
            ("n_test", json!(o.n_test)),
            ("bins", json!(o.bins)),
        ]
    };
    rec.push("ece_before", o.ece_before, inputs());
    rec.push("recalibrated_tce", o.ece_after, inputs());
    rec.config["recalibrator"] = serde_json::to_value(&o.recalibrator)?;
    rec.push_bound(o.bound);
    rec.write(out)?;
    Ok(())
}

pub fn cmd_cmi(a: &CmiArgs, out: &Path) -> Result<()> {
    if a.n_grid.is_empty() {
        return Err(Error::invalid("--n-grid must list at least one size"));
    }
    let trainer = TrainerConfig::new(a.learning_rate, a.epochs, a.trainer_seed)?;
    let mask_mode = match a.exhaustive_seeds {
        Some(s) => MaskMode::Exhaustive { seeds_per_mask: s },
        None => MaskMode::Sampled,
    };
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut rec = RunRecord::new("cmi", json!({"n_grid": a.n_grid, "mask_mode": mask_mode}));
    let summary_path = out.join("cmi.csv");
    let mut summary = csv::Writer::from_path(&summary_path)?;
    summary.write_record(["n", "bins", "mean_gap", "ecmi_est", "bound"])?;
    println!(
        "{:>6}  {:>4}  {:>10}  {:>10}  {:>10}",
        "n", "B", "mean_gap", "ecmi_est", "bound"
    );
    for &n in &a.n_grid {
        let cfg = CmiExperimentConfig {
            n,
            n_supersamples: a.n_supersamples,
            n_masks: a.n_masks,
            k: a.k,
            bins: a.bins.unwrap_or_else(|| cube_root_bins(n)),
            binning: a.binning,
            trainer,
            seed: a.seed,
            mask_mode,
            ..Default::default()
        };
        let r = run_cmi_experiment(&cfg)?;
        let bound = bounds::gen_ece_bound(r.ecmi.clamped, cfg.bins, n)?;
        summary.write_record([
            n.to_string(),
            cfg.bins.to_string(),
            r.mean_gap.to_string(),
            r.ecmi.value.to_string(),
            bound.value.to_string(),
        ])?;
        println!(
            "{n:>6}  {:>4}  {:>10}  {:>10}  {:>10}",
            cfg.bins,
            fmt6(r.mean_gap),
            fmt6(r.ecmi.value),
            fmt6(bound.value)
        );

        let cells_path = out.join(format!("cmi_cells_n{n}.csv"));
        let mut cells = csv::Writer::from_path(&cells_path)?;
        cells.write_record(["supersample_idx", "mask_idx", "statistic_name", "value"])?;
        for c in &r.cells {
            for (name, v) in [
                ("ece_gap", c.statistic),
                ("delta1", c.delta1),
                ("delta2", c.delta2),
            ] {
                cells.write_record([
                    c.supersample_idx.to_string(),
                    c.mask_idx.to_string(),
                    name.to_owned(),
                    v.to_string(),
                ])?;
            }
        }
        cells.flush().map_err(|e| Error::io(&cells_path, e))?;

        let tag = [("n", json!(n)), ("bins", json!(cfg.bins))];
        rec.push("mean_gap", r.mean_gap, tag.clone());
        for (name, est) in [
            ("ecmi", &r.ecmi),
            ("i_delta1", &r.i_delta1),
            ("i_delta2", &r.i_delta2),
        ] {
            rec.push(
                name,
                est.value,
                tag.clone()
                    .into_iter()
                    .chain([("estimate", serde_json::to_value(est)?)]),
            );
        }
        if let Some(o) = &r.oracle {
            rec.push(
                "ecmi_plugin",
                o.ecmi.value,
                tag.clone().into_iter().chain([("bins", json!(o.ecmi.k))]),
            );
        }
        for est in [&r.ecmi, &r.i_delta1, &r.i_delta2] {
            if let Some(w) = &est.warning {
                rec.note(format!("n = {n}: {w}"));
            }
        }
        rec.push_bound(bound);
    }
    summary.flush().map_err(|e| Error::io(&summary_path, e))?;
    rec.write(out)?;
    Ok(())
}
