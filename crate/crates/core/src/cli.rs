//! Command-line interface.
//!
//! Exit codes: 0 on success (and for `--help`), 1 for usage and input
//! errors, 2 for numerical failures. Every output file is written to a
//! temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{
    repeat_eval, train_two_view, Metrics, RepeatReport, RepetitionResult, TwoViewModel,
};
use crate::config::{FbmMethod, RunConfig};
use crate::error::{Error, Result};
use crate::fbm::{estimate_hurst, synth_fbm_exact, synth_fbm_spectral, FbmParams};
use crate::features::{
    features_from_layers, structural_view, textural_features, StructuralMode, TwoViewFeatures,
};
use crate::field::{read_image, read_raw, write_atomic, write_image, write_raw, GrayField};
use crate::manifest::{load_manifest, DatasetManifest};
use crate::rtv::rtv_decompose;
use crate::wavelet::{self_similarity_report, SelfSimReport};

#[derive(Debug, Parser)]
#[command(
    name = "twoview",
    version,
    about = "Stochastic-texture analysis and two-view classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize an fBm field.
    Synth(SynthArgs),
    /// Estimate the Hurst exponent of an image.
    EstimateHurst(EstimateArgs),
    /// Split an image into structure and texture layers.
    Decompose(DecomposeArgs),
    /// Wavelet self-similarity report.
    Selfsim(SelfsimArgs),
    /// Extract two-view features for every image of a manifest.
    Features(FeaturesArgs),
    /// Train a two-view model on one random split.
    Train(TrainArgs),
    /// Evaluate a trained model.
    Evaluate(EvaluateArgs),
    /// Repeated random-split evaluation with single-view baselines.
    Repeat(RepeatArgs),
    /// decompose, features, train and repeat in one run.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Spectral,
}

/// Unset flags fall back to the `fbm.*` keys of `--config`.
#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    hurst: Option<f64>,
    /// Scale σ_H of the structure function.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// PGM output, min-max scaled to the full 8-bit range.
    #[arg(long)]
    out: PathBuf,
    /// Unscaled samples in the raw f64 format.
    #[arg(long)]
    out_raw: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// PGM, PNG, or `.raw` field.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_structure: PathBuf,
    /// Texture is stored with a +0.5 offset.
    #[arg(long)]
    out_texture: PathBuf,
    /// Unoffset texture in the raw f64 format.
    #[arg(long)]
    out_raw: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    sigma_s: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelfsimArgs {
    #[arg(
        long = "in",
        conflicts_with = "manifest",
        required_unless_present = "manifest"
    )]
    input: Option<PathBuf>,
    /// Report every image of a manifest plus per-class means.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rows of `path,class,level,sigma_hat,kurtosis`.
    #[arg(long)]
    emit_csv: Option<PathBuf>,
    /// Tidy `path,class,metric,value` rows.
    #[arg(long)]
    emit_plot_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ViewArg {
    Texture,
    Structure,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StructuralArg {
    Pc,
    Sth,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = ViewArg::Both)]
    view: ViewArg,
    #[arg(long, value_enum)]
    structural_mode: Option<StructuralArg>,
    #[arg(long)]
    patch_size: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    /// Class count; defaults to one more than the largest label.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// Score only the rows held out by the model's split.
    #[arg(long)]
    test_split: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RepeatArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-repetition CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full report with mean and standard deviation.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Tidy `rep,column,metric,value` rows.
    #[arg(long)]
    emit_plot_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `out_dir` from the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::EstimateHurst(a) => estimate(a),
        Command::Decompose(a) => decompose(a),
        Command::Selfsim(a) => selfsim(a),
        Command::Features(a) => features(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Repeat(a) => repeat(a),
        Command::Pipeline(a) => pipeline(a),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)
        .map_err(|e| Error::numerical(format!("JSON serialization failed: {e}")))?;
    s.push(b'\n');
    Ok(s)
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn read_field(path: &Path) -> Result<GrayField> {
    if path.extension().is_some_and(|e| e == "raw") {
        read_raw(path)
    } else {
        read_image(path)
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let config = load_config(a.config.as_deref())?;
    let fb = &config.fbm;
    let params = FbmParams::new(a.hurst.unwrap_or(fb.hurst), a.sigma.unwrap_or(fb.sigma))?;
    let size = a.size.unwrap_or(fb.size);
    let seed = a.seed.unwrap_or(config.seed);
    let method = match a.method {
        Some(MethodArg::Exact) => FbmMethod::Exact,
        Some(MethodArg::Spectral) => FbmMethod::Spectral,
        None => fb.method,
    };
    let field = match method {
        FbmMethod::Exact => synth_fbm_exact(&params, size, seed)?,
        FbmMethod::Spectral => synth_fbm_spectral(&params, size, seed)?,
    };
    if let Some(p) = &a.out_raw {
        write_raw(&field, p)?;
    }
    write_image(&min_max_scaled(&field)?, &a.out)
}

fn min_max_scaled(field: &GrayField) -> Result<GrayField> {
    let lo = field.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = field
        .data()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    field.map(|v| (v - lo) / span)
}

#[derive(Serialize)]
struct HurstJson {
    h_hat: f64,
    slope: f64,
    intercept: f64,
    r_squared: f64,
    lags_used: Vec<f64>,
    clamped: bool,
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let max_lag = match a.max_lag {
        Some(l) => l,
        None => load_config(a.config.as_deref())?.fbm.max_lag,
    };
    let field = read_field(&a.input)?;
    let e = estimate_hurst(&field, max_lag)?;
    let json = HurstJson {
        h_hat: e.h_hat,
        slope: e.slope,
        intercept: e.intercept,
        r_squared: e.r_squared,
        lags_used: e.lags_used,
        clamped: e.clamped,
    };
    emit(a.out.as_deref(), &to_json(&json)?)
}

fn decompose(a: DecomposeArgs) -> Result<()> {
    let mut rtv = load_config(a.config.as_deref())?.features.rtv;
    if let Some(v) = a.lambda {
        rtv.lambda = v;
    }
    if let Some(v) = a.sigma_s {
        rtv.sigma_s = v;
    }
    if let Some(v) = a.iterations {
        rtv.iterations = v;
    }
    let field = read_field(&a.input)?;
    let (structure, texture) = rtv_decompose(&field, &rtv)?;
    write_image(&structure, &a.out_structure)?;
    write_image(&texture.map(|v| v + 0.5)?, &a.out_texture)?;
    if let Some(p) = &a.out_raw {
        write_raw(&texture, p)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SelfsimEntry {
    path: String,
    class: String,
    report: SelfSimReport,
}

#[derive(Serialize)]
struct ClassMean {
    class: String,
    images: usize,
    kl_12: f64,
    l1_13: f64,
    l2_13: f64,
    linf_13: f64,
}

#[derive(Serialize)]
struct SelfsimManifestJson {
    images: Vec<SelfsimEntry>,
    class_means: Vec<ClassMean>,
}

fn selfsim(a: SelfsimArgs) -> Result<()> {
    let entries: Vec<SelfsimEntry> = match (&a.input, &a.manifest) {
        (Some(p), _) => vec![SelfsimEntry {
            path: p.display().to_string(),
            class: String::new(),
            report: self_similarity_report(&read_field(p)?)?,
        }],
        (None, Some(m)) => {
            let manifest = load_manifest(m)?;
            manifest
                .entries
                .par_iter()
                .map(|e| {
                    Ok(SelfsimEntry {
                        path: e.path.clone(),
                        class: manifest.class_names[e.label].clone(),
                        report: self_similarity_report(&e.load()?)?,
                    })
                })
                .collect::<Result<_>>()?
        }
        (None, None) => return Err(Error::invalid("selfsim needs --in or --manifest")),
    };
    if let Some(p) = &a.emit_csv {
        let mut s = String::from("path,class,level,sigma_hat,kurtosis\n");
        for e in &entries {
            for l in &e.report.levels {
                let k = l.excess_kurtosis.map_or(String::new(), |v| v.to_string());
                let _ = writeln!(
                    s,
                    "{},{},{},{},{k}",
                    csv_field(&e.path),
                    csv_field(&e.class),
                    l.level,
                    l.sigma_hat
                );
            }
        }
        write_atomic(p, s.as_bytes())?;
    }
    if let Some(p) = &a.emit_plot_csv {
        let mut s = String::from("path,class,metric,value\n");
        for e in &entries {
            let r = &e.report;
            let mut rows = vec![
                ("kl_12".to_string(), r.kl_12),
                ("l1_13".to_string(), r.l1_13),
                ("l2_13".to_string(), r.l2_13),
                ("linf_13".to_string(), r.linf_13),
            ];
            for (j, v) in r.variance_ratios.iter().enumerate() {
                rows.push((format!("variance_ratio_{}", j + 1), *v));
            }
            for (m, v) in rows {
                let _ = writeln!(s, "{},{},{m},{v}", csv_field(&e.path), csv_field(&e.class));
            }
        }
        write_atomic(p, s.as_bytes())?;
    }
    let out = if a.manifest.is_some() {
        let class_means = class_means(&entries);
        to_json(&SelfsimManifestJson {
            images: entries,
            class_means,
        })?
    } else {
        to_json(&entries[0].report)?
    };
    emit(a.out.as_deref(), &out)
}

fn class_means(entries: &[SelfsimEntry]) -> Vec<ClassMean> {
    let mut classes: Vec<&str> = Vec::new();
    for e in entries {
        if !classes.contains(&e.class.as_str()) {
            classes.push(&e.class);
        }
    }
    classes
        .into_iter()
        .map(|c| {
            let rs: Vec<&SelfSimReport> = entries
                .iter()
                .filter(|e| e.class == c)
                .map(|e| &e.report)
                .collect();
            let n = rs.len() as f64;
            let mean = |f: fn(&SelfSimReport) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
            ClassMean {
                class: c.to_string(),
                images: rs.len(),
                kl_12: mean(|r| r.kl_12),
                l1_13: mean(|r| r.l1_13),
                l2_13: mean(|r| r.l2_13),
                linf_13: mean(|r| r.linf_13),
            }
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row of a features CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub path: String,
    pub label: usize,
    pub phi_t: Vec<f64>,
    pub phi_s: Vec<f64>,
}

/// `path,label,phi_t_0,…,phi_s_0,…`; either view may be empty, but must have
/// the same width on every row.
pub fn write_features_csv(rows: &[FeatureRow]) -> Result<String> {
    let (nt, ns) = rows
        .first()
        .map_or((0, 0), |r| (r.phi_t.len(), r.phi_s.len()));
    if rows
        .iter()
        .any(|r| r.phi_t.len() != nt || r.phi_s.len() != ns)
    {
        return Err(Error::invalid("feature rows have different widths"));
    }
    let mut s = String::from("path,label");
    for i in 0..nt {
        let _ = write!(s, ",phi_t_{i}");
    }
    for i in 0..ns {
        let _ = write!(s, ",phi_s_{i}");
    }
    s.push('\n');
    for r in rows {
        s.push_str(&csv_field(&r.path));
        let _ = write!(s, ",{}", r.label);
        for v in r.phi_t.iter().chain(&r.phi_s) {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn read_features_csv(text: &str) -> Result<Vec<FeatureRow>> {
    let bad = |d: String| Error::format("features CSV", d);
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.get(0) != Some("path") || header.get(1) != Some("label") {
        return Err(bad("header must start with path,label".into()));
    }
    let mut cols_t = Vec::new();
    let mut cols_s = Vec::new();
    for (i, h) in header.iter().enumerate().skip(2) {
        if let Some(n) = h.strip_prefix("phi_t_") {
            cols_t.push((
                n.parse::<usize>()
                    .map_err(|_| bad(format!("bad column {h}")))?,
                i,
            ));
        } else if let Some(n) = h.strip_prefix("phi_s_") {
            cols_s.push((
                n.parse::<usize>()
                    .map_err(|_| bad(format!("bad column {h}")))?,
                i,
            ));
        } else {
            return Err(bad(format!("unknown column {h}")));
        }
    }
    cols_t.sort();
    cols_s.sort();
    let mut rows = Vec::new();
    for (lineno, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: {:?} is not a number", lineno + 2, &rec[i])))
        };
        rows.push(FeatureRow {
            path: rec[0].to_string(),
            label: rec[1].parse().map_err(|_| {
                bad(format!(
                    "row {}: label {:?} is not a class index",
                    lineno + 2,
                    &rec[1]
                ))
            })?,
            phi_t: cols_t.iter().map(|&(_, i)| num(i)).collect::<Result<_>>()?,
            phi_s: cols_s.iter().map(|&(_, i)| num(i)).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

fn load_two_view(path: &Path) -> Result<Vec<TwoViewFeatures>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = read_features_csv(&text)?;
    if rows.is_empty() {
        return Err(Error::invalid(format!(
            "{}: no feature rows",
            path.display()
        )));
    }
    rows.into_iter()
        .map(|r| TwoViewFeatures::new(r.phi_t, r.phi_s, r.label))
        .collect()
}

fn class_count(data: &[TwoViewFeatures], k: Option<usize>) -> usize {
    k.unwrap_or_else(|| data.iter().map(|f| f.label).max().map_or(0, |m| m + 1))
}

fn feature_rows(
    manifest: &DatasetManifest,
    config: &RunConfig,
    view: ViewArg,
) -> Result<Vec<FeatureRow>> {
    let fc = &config.features;
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let (structure, texture) = rtv_decompose(&e.load()?, &fc.rtv)?;
            let phi_t = if view == ViewArg::Structure {
                Vec::new()
            } else {
                textural_features(&texture, fc.patch_size)?
            };
            let phi_s = if view == ViewArg::Texture {
                Vec::new()
            } else {
                structural_view(&structure, fc)?
            };
            Ok(FeatureRow {
                path: e.path.clone(),
                label: e.label,
                phi_t,
                phi_s,
            })
        })
        .collect()
}

fn features(a: FeaturesArgs) -> Result<()> {
    let mut config = load_config(a.config.as_deref())?;
    if let Some(m) = a.structural_mode {
        config.features.structural = match m {
            StructuralArg::Pc => StructuralMode::Pc,
            StructuralArg::Sth => StructuralMode::Sth,
        };
    }
    if let Some(p) = a.patch_size {
        config.features.patch_size = p;
    }
    config.validate()?;
    let manifest = load_manifest(&a.manifest)?;
    let rows = feature_rows(&manifest, &config, a.view)?;
    emit(a.out.as_deref(), write_features_csv(&rows)?.as_bytes())
}

fn train(a: TrainArgs) -> Result<()> {
    let config = load_config(a.config.as_deref())?;
    let data = load_two_view(&a.features)?;
    let k = class_count(&data, a.k);
    let model = train_two_view(&data, k, &config.two_view, a.seed.unwrap_or(config.seed))?;
    write_atomic(&a.out, &to_json(&model)?)
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.model).map_err(|e| Error::io(&a.model, e))?;
    let model: TwoViewModel =
        serde_json::from_str(&text).map_err(|e| Error::format("model JSON", e.to_string()))?;
    let data = load_two_view(&a.features)?;
    let rows: Vec<TwoViewFeatures> = if a.test_split {
        model
            .split
            .test
            .iter()
            .map(|&i| {
                data.get(i).cloned().ok_or_else(|| {
                    Error::invalid("features file is smaller than the model's split")
                })
            })
            .collect::<Result<_>>()?
    } else {
        data
    };
    let metrics = model.evaluate(&rows)?;
    emit(a.out.as_deref(), &to_json(&metrics)?)
}

const COLUMNS: [&str; 4] = ["T", "S", "TconcatS", "fused"];

fn columns(r: &RepetitionResult) -> [&Metrics; 4] {
    [&r.t, &r.s, &r.concat, &r.fused]
}

/// `rep,seed,T,S,TconcatS,fused` accuracies followed by every other metric
/// as `<column>_<metric>`.
pub fn repeat_csv(report: &RepeatReport) -> String {
    let mut s = String::from("rep,seed");
    for c in COLUMNS {
        let _ = write!(s, ",{c}");
    }
    for c in COLUMNS {
        for m in &Metrics::NAMES[1..] {
            let _ = write!(s, ",{c}_{m}");
        }
    }
    s.push('\n');
    for (i, r) in report.repetitions.iter().enumerate() {
        let _ = write!(s, "{},{}", i + 1, r.seed);
        for m in columns(r) {
            let _ = write!(s, ",{}", m.accuracy);
        }
        for m in columns(r) {
            for v in &m.values()[1..] {
                let _ = write!(s, ",{v}");
            }
        }
        s.push('\n');
    }
    s
}

fn repeat_plot_csv(report: &RepeatReport) -> String {
    let mut s = String::from("rep,column,metric,value\n");
    for (i, r) in report.repetitions.iter().enumerate() {
        for (c, m) in COLUMNS.iter().zip(columns(r)) {
            for (name, v) in Metrics::NAMES.iter().zip(m.values()) {
                let _ = writeln!(s, "{},{c},{name},{v}", i + 1);
            }
        }
    }
    s
}

fn repeat(a: RepeatArgs) -> Result<()> {
    let config = load_config(a.config.as_deref())?;
    let data = load_two_view(&a.features)?;
    let k = class_count(&data, a.k);
    let report = repeat_eval(
        &data,
        k,
        &config.two_view,
        a.reps,
        a.seed.unwrap_or(config.seed),
    )?;
    if let Some(p) = &a.out_json {
        write_atomic(p, &to_json(&report)?)?;
    }
    if let Some(p) = &a.emit_plot_csv {
        write_atomic(p, repeat_plot_csv(&report).as_bytes())?;
    }
    emit(a.out.as_deref(), repeat_csv(&report).as_bytes())
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let mut config = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(d) = a.out_dir {
        config.out_dir = d;
    }
    config.validate()?;
    let manifest = load_manifest(&a.manifest)?;
    let out = config.out_dir.clone();
    let layers = out.join("layers");
    std::fs::create_dir_all(&layers).map_err(|e| Error::io(&layers, e))?;
    write_atomic(&out.join("config.txt"), config.render().as_bytes())?;

    let fc = &config.features;
    let rows: Vec<FeatureRow> = manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let (structure, texture) = rtv_decompose(&e.load()?, &fc.rtv)?;
            write_image(&structure, layers.join(format!("{i:04}_structure.pgm")))?;
            write_image(
                &texture.map(|v| v + 0.5)?,
                layers.join(format!("{i:04}_texture.pgm")),
            )?;
            let f = features_from_layers(&structure, &texture, e.label, fc)?;
            Ok(FeatureRow {
                path: e.path.clone(),
                label: e.label,
                phi_t: f.phi_t,
                phi_s: f.phi_s,
            })
        })
        .collect::<Result<_>>()?;
    write_atomic(
        &out.join("features.csv"),
        write_features_csv(&rows)?.as_bytes(),
    )?;

    let data: Vec<TwoViewFeatures> = rows
        .into_iter()
        .map(|r| TwoViewFeatures::new(r.phi_t, r.phi_s, r.label))
        .collect::<Result<_>>()?;
    let k = manifest.class_count();
    let model = train_two_view(&data, k, &config.two_view, config.seed)?;
    write_atomic(&out.join("model.json"), &to_json(&model)?)?;

    let report = repeat_eval(&data, k, &config.two_view, a.reps, config.seed)?;
    write_atomic(&out.join("repeat.csv"), repeat_csv(&report).as_bytes())?;
    write_atomic(
        &out.join("repeat_plot.csv"),
        repeat_plot_csv(&report).as_bytes(),
    )?;
    write_atomic(&out.join("repeat.json"), &to_json(&report)?)?;

    let s = &report.summary;
    let mut summary = String::from("column,accuracy_mean,accuracy_std\n");
    for (c, col) in COLUMNS.iter().zip([&s.t, &s.s, &s.concat, &s.fused]) {
        let _ = writeln!(summary, "{c},{},{}", col.mean.accuracy, col.std.accuracy);
    }
    write_atomic(&out.join("summary.csv"), summary.as_bytes())?;
    eprint!("{summary}");
    Ok(())
}
