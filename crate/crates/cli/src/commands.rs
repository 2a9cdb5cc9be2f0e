//! Argument definitions and subcommand handlers. Every stage reads its inputs
//! from files and writes its outputs plus `manifest.txt` under `--out`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use shapfoil_core::dataset::{binarize, split, BinarizedMatrix, Dataset, Encoding, Schema};
use shapfoil_core::eval::{compare_report, evaluate, EvalReport, Predictor, ReportFormat};
use shapfoil_core::foil::{foil_induce, FoilParams, ThresholdStrategy};
use shapfoil_core::logic::{parse_prolog, serialize_prolog, Hypothesis, DEFAULT_DECIMALS};
use shapfoil_core::shap::{
    attribution_csv, attribution_report, shap_matrix, write_shap, Explained, ShapParams,
    SvmRetrainer, ValueFunctionMode, DEFAULT_EXACT_LIMIT,
};
use shapfoil_core::shapfoil::{
    background_rows, induce_both_classes, render_audit, shap_foil, IntervalSource, ShapFoilOutput,
    ShapFoilParams,
};
use shapfoil_core::svm::{
    read_model, train, write_model, GridSearch, Hyperparams, KernelSpec, SvmModel,
};
use shapfoil_core::synth;

use crate::config::Defaults;
use crate::manifest::RunManifest;
use crate::protocol::{fit_model, ModelChoice};

const DEFAULT_OUT: &str = "out";
const DEFAULT_THETA: f64 = 0.85;

#[derive(Debug, Parser)]
#[command(
    name = "shapfoil",
    version,
    about = "SVM rule extraction with SHAP-guided covering"
)]
pub struct Cli {
    /// Defaults file (`key = value`); also read from SHAPFOIL_CONFIG.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Ignore any defaults file.
    #[arg(long, global = true, hide = true)]
    pub no_config: bool,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dataset utilities.
    Dataset {
        #[command(subcommand)]
        action: DatasetCommand,
    },
    /// Train an SVM, optionally on a fresh train/test split.
    Train(TrainArgs),
    /// Shapley attributions for rows of a dataset under a trained model.
    Shap(ShapArgs),
    /// Induce a rule program from an SVM with SHAP-FOIL.
    Induce(InduceArgs),
    /// Induce a rule program with the FOIL baseline.
    Foil(FoilArgs),
    /// Score a rule program and/or a model on a labelled dataset.
    Eval(EvalArgs),
    /// Side-by-side report for an SVM and two rule programs.
    Compare(CompareArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    /// Class balance and feature ranges.
    Inspect(DataArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    /// Defaults to the data path with a `.schema` extension.
    #[arg(long, value_name = "PATH")]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    /// Hold out this fraction as a test set (no split when absent).
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Linear,
    Poly,
    Rbf,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "rbf")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Defaults to 1 / (encoded width).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    #[arg(long, default_value_t = 1.0)]
    pub coef0: f64,
    /// Choose C and gamma by stratified cross-validation.
    #[arg(long)]
    pub grid_search: bool,
    /// Keep numeric columns unscaled.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    /// Widest encoding explained exactly; wider ones are sampled.
    #[arg(long, default_value_t = DEFAULT_EXACT_LIMIT)]
    pub exact_limit: usize,
    #[arg(long, default_value_t = 200)]
    pub permutations: usize,
    /// Cap on background rows (all training rows when absent).
    #[arg(long)]
    pub background_limit: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RowsArg {
    /// True-positive support vectors.
    Tp,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapModeArg {
    Marginalize,
    Retrain,
}

#[derive(Debug, Clone, Args)]
pub struct ShapArgs {
    /// Training data the model was fitted on.
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Defaults to `encoding.txt` next to the model.
    #[arg(long, value_name = "PATH")]
    pub encoding: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tp")]
    pub rows: RowsArg,
    #[arg(long, value_enum, default_value = "marginalize")]
    pub shap_mode: ShapModeArg,
    /// C used when retraining on column subsets.
    #[arg(long)]
    pub c: Option<f64>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write a readable attribution listing for this row.
    #[arg(long, value_name = "ROW")]
    pub explain: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntervalArg {
    Annotated,
    AnnotatedPositives,
}

#[derive(Debug, Clone, Args)]
pub struct InduceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Use a trained model instead of fitting one (requires no split).
    #[arg(long = "model", value_name = "PATH", conflicts_with_all = ["grid_search", "test_fraction"])]
    pub model_file: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "model_file")]
    pub encoding: Option<PathBuf>,
    /// Minimum clause precision.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub max_literals: usize,
    #[arg(long, value_enum, default_value = "annotated-positives")]
    pub interval_source: IntervalArg,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Also learn a program for the negative class.
    #[arg(long, conflicts_with = "model_file")]
    pub both_classes: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FoilArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// `midpoints` or `quantiles:K`.
    #[arg(long, default_value = "midpoints", value_parser = parse_thresholds)]
    pub thresholds: ThresholdStrategy,
    #[arg(long, default_value_t = 10)]
    pub max_clause_length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "CSV")]
    pub test: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub schema: Option<PathBuf>,
    #[arg(long, value_name = "PATH", required_unless_present = "model")]
    pub rules: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "model")]
    pub encoding: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long, value_name = "PATH")]
    pub svm: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub encoding: Option<PathBuf>,
    /// SHAP-FOIL program.
    #[arg(long, value_name = "PATH")]
    pub rules: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub rules_foil: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub test: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub schema: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// clusters3, nested or xor4.
    pub name: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 200)]
    pub size: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
}

fn parse_thresholds(s: &str) -> Result<ThresholdStrategy, String> {
    match s {
        "midpoints" => Ok(ThresholdStrategy::Midpoints),
        _ => match s.strip_prefix("quantiles:").map(str::parse::<usize>) {
            Some(Ok(k)) if k > 0 => Ok(ThresholdStrategy::Quantiles(k)),
            _ => Err(format!(
                "expected `midpoints` or `quantiles:K` with K >= 1, got `{s}`"
            )),
        },
    }
}

fn thresholds_text(t: ThresholdStrategy) -> String {
    match t {
        ThresholdStrategy::Midpoints => "midpoints".into(),
        ThresholdStrategy::Quantiles(k) => format!("quantiles:{k}"),
    }
}

/// Global flags that are not part of a run's identity.
fn strip_globals(args: &[OsString]) -> Vec<String> {
    let mut kept = Vec::new();
    let mut it = args.iter().map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        match a.as_str() {
            "--out" | "--config" | "--threads" => {
                it.next();
            }
            "--no-config" => {}
            _ if ["--out=", "--config=", "--threads="]
                .iter()
                .any(|p| a.starts_with(p)) => {}
            _ => kept.push(a),
        }
    }
    kept
}

/// Shared state for one command: resolved globals and the manifest being
/// built.
struct Run {
    out: PathBuf,
    defaults: Defaults,
    manifest: RunManifest,
}

impl Run {
    /// Records a value that came from the defaults file as an explicit flag,
    /// so replay does not depend on the file.
    fn pin(&mut self, flag: &str, from_config: bool, value: impl ToString) {
        if from_config {
            self.manifest.set("arg", flag);
            self.manifest.set("arg", value);
        }
    }

    fn seed(&mut self, given: Option<u64>) -> u64 {
        let from_config = given.is_none() && self.defaults.seed.is_some();
        let seed = given.or(self.defaults.seed).unwrap_or(0);
        self.pin("--seed", from_config, seed);
        seed
    }

    fn test_fraction(&mut self, given: Option<f64>) -> Option<f64> {
        let from_config = given.is_none() && self.defaults.test_fraction.is_some();
        let f = given.or(self.defaults.test_fraction);
        if let Some(f) = f {
            self.pin("--test-fraction", from_config, f);
        }
        f
    }

    fn theta(&mut self, given: Option<f64>) -> f64 {
        let from_config = given.is_none() && self.defaults.theta.is_some();
        let t = given.or(self.defaults.theta).unwrap_or(DEFAULT_THETA);
        self.pin("--theta", from_config, t);
        t
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn finish(self) -> Result<()> {
        self.manifest.write(&self.out)
    }
}

pub fn run(cli: Cli, raw_args: &[OsString]) -> Result<()> {
    let defaults = if cli.no_config {
        Defaults::default()
    } else {
        Defaults::resolve(cli.config.as_deref())?
    };
    let threads = cli.threads.or(defaults.threads).unwrap_or(1);
    ensure!(threads >= 1, "--threads must be at least 1");
    // A second global pool cannot be built in the same process (replay);
    // the first one stays in effect.
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
    {
        log::debug!("thread pool already initialised: {e}");
    }
    let out = cli
        .out
        .clone()
        .or_else(|| defaults.out.clone())
        .unwrap_or_else(|| DEFAULT_OUT.into());

    if let Command::Replay(args) = &cli.command {
        return replay(args, &out, threads);
    }

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut manifest = RunManifest::new(command_name(&cli.command));
    for a in strip_globals(raw_args) {
        manifest.set("arg", a);
    }
    let mut run = Run {
        out,
        defaults,
        manifest,
    };
    match cli.command {
        Command::Dataset {
            action: DatasetCommand::Inspect(a),
        } => inspect(&mut run, &a)?,
        Command::Train(a) => train_cmd(&mut run, &a)?,
        Command::Shap(a) => shap_cmd(&mut run, &a)?,
        Command::Induce(a) => induce_cmd(&mut run, &a)?,
        Command::Foil(a) => foil_cmd(&mut run, &a)?,
        Command::Eval(a) => eval_cmd(&mut run, &a)?,
        Command::Compare(a) => compare_cmd(&mut run, &a)?,
        Command::Synth(a) => synth_cmd(&mut run, &a)?,
        Command::Replay(_) => unreachable!(),
    }
    run.manifest.set("threads", threads);
    run.finish()
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Dataset { .. } => "dataset inspect",
        Command::Train(_) => "train",
        Command::Shap(_) => "shap",
        Command::Induce(_) => "induce",
        Command::Foil(_) => "foil",
        Command::Eval(_) => "eval",
        Command::Compare(_) => "compare",
        Command::Synth(_) => "synth",
        Command::Replay(_) => "replay",
    }
}

fn replay(args: &ReplayArgs, out: &Path, threads: usize) -> Result<()> {
    let m = RunManifest::read(&args.manifest)?;
    let recorded: Vec<&str> = m.get_all("arg").collect();
    ensure!(
        !recorded.is_empty(),
        "{} records no arguments",
        args.manifest.display()
    );
    for (path_key, hash_key) in [
        ("data_path", "data_sha256"),
        ("schema_path", "schema_sha256"),
    ] {
        if let (Some(path), Some(want)) = (m.get(path_key), m.get(hash_key)) {
            let bytes = fs::read(path).with_context(|| format!("reading {path}"))?;
            ensure!(
                crate::manifest::sha256_hex(&bytes) == want,
                "{path} changed since the run was recorded"
            );
        }
    }
    let mut argv: Vec<OsString> = vec!["shapfoil".into(), "--no-config".into(), "--threads".into()];
    argv.push(threads.to_string().into());
    argv.push("--out".into());
    argv.push(out.as_os_str().to_owned());
    argv.extend(recorded.iter().map(OsString::from));
    let cli = Cli::try_parse_from(&argv).context("recorded arguments no longer parse")?;
    run(cli, &argv[1..])
}

fn schema_path(data: &Path, schema: Option<&Path>) -> PathBuf {
    schema.map_or_else(|| data.with_extension("schema"), Path::to_path_buf)
}

/// Loads a dataset and records its identity in the manifest.
fn load_data(run: &mut Run, data: &Path, schema: Option<&Path>, prefix: &str) -> Result<Dataset> {
    let schema = schema_path(data, schema);
    let ds = Dataset::load_csv(data, &schema).with_context(|| {
        format!(
            "loading {} with schema {}",
            data.display(),
            schema.display()
        )
    })?;
    let id = data
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    run.manifest.set(&format!("{prefix}dataset"), id);
    run.manifest
        .set(&format!("{prefix}data_path"), data.display());
    run.manifest
        .set_file_hash(&format!("{prefix}data_sha256"), data)?;
    run.manifest
        .set(&format!("{prefix}schema_path"), schema.display());
    run.manifest
        .set_file_hash(&format!("{prefix}schema_sha256"), &schema)?;
    Ok(ds)
}

fn load_encoding(schema: Arc<Schema>, path: &Path) -> Result<Encoding> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Encoding::from_scaling_text(schema, &text)
        .with_context(|| format!("parsing {}", path.display()))
}

fn encoding_path(model: &Path, given: Option<&Path>) -> PathBuf {
    given.map_or_else(|| model.with_file_name("encoding.txt"), Path::to_path_buf)
}

fn load_model(run: &mut Run, path: &Path) -> Result<SvmModel> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let model =
        read_model(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))?;
    run.manifest.set_file_hash("model_sha256", path)?;
    Ok(model)
}

fn load_rules(run: &mut Run, path: &Path, key: &str) -> Result<Hypothesis> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    run.manifest.set(
        &format!("{key}_sha256"),
        crate::manifest::sha256_hex(text.as_bytes()),
    );
    parse_prolog(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Splits when a test fraction is set; writes both parts with their schema.
fn maybe_split(
    run: &mut Run,
    data: Dataset,
    split_args: &SplitArgs,
) -> Result<(Dataset, Option<Dataset>, u64)> {
    let seed = run.seed(split_args.seed);
    run.manifest.set("split_seed", seed);
    match run.test_fraction(split_args.test_fraction) {
        Some(f) => {
            run.manifest.set("test_fraction", f);
            let (tr, te) = split(&data, f, seed)?;
            let schema = data.schema().to_text();
            tr.save_csv(run.path("train.csv"))?;
            te.save_csv(run.path("test.csv"))?;
            run.write("train.schema", &schema)?;
            run.write("test.schema", &schema)?;
            Ok((tr, Some(te), seed))
        }
        None => {
            run.manifest.set("test_fraction", "none");
            Ok((data, None, seed))
        }
    }
}

fn model_choice(args: &ModelArgs, width: usize, seed: u64) -> Result<ModelChoice> {
    let gamma = args.gamma.unwrap_or(1.0 / width.max(1) as f64);
    let kernel = match args.kernel {
        KernelArg::Linear => KernelSpec::Linear,
        KernelArg::Poly => KernelSpec::Polynomial {
            degree: args.degree,
            gamma,
            coef0: args.coef0,
        },
        KernelArg::Rbf => KernelSpec::Rbf { gamma },
    };
    let base = Hyperparams {
        c: args.c,
        kernel,
        seed,
        ..Default::default()
    };
    base.validate()?;
    Ok(if args.grid_search {
        ModelChoice::Grid {
            base,
            grid: GridSearch::default(),
        }
    } else {
        ModelChoice::Fixed(base)
    })
}

fn record_hyperparams(m: &mut RunManifest, h: &Hyperparams, grid: bool) {
    m.set("grid_search", grid);
    m.set("kernel", h.kernel.name());
    m.set("c", h.c);
    match h.kernel {
        KernelSpec::Linear => {}
        KernelSpec::Polynomial {
            degree,
            gamma,
            coef0,
        } => {
            m.set("gamma", gamma)
                .set("degree", degree)
                .set("coef0", coef0);
        }
        KernelSpec::Rbf { gamma } => {
            m.set("gamma", gamma);
        }
    }
}

/// Fits (or grid-searches) an SVM on `data` and writes model, encoding and
/// grid results.
fn fit_and_save(
    run: &mut Run,
    data: &Dataset,
    args: &ModelArgs,
    seed: u64,
) -> Result<(BinarizedMatrix, SvmModel, Hyperparams)> {
    let standardize = !args.no_standardize;
    run.manifest.set("standardize", standardize);
    let enc = binarize(data, standardize);
    let choice = model_choice(args, enc.width(), seed)?;
    if let ModelChoice::Grid { base, grid } = &choice {
        let found = shapfoil_core::svm::grid_search(
            &enc.rows,
            &data.labels(),
            base,
            &GridSearch {
                seed,
                ..grid.clone()
            },
        )?;
        let mut csv = String::from("c,kernel,cv_accuracy\n");
        for p in &found.points {
            let acc = p
                .cv_accuracy
                .map_or_else(String::new, |a| format!("{a:.6}"));
            csv.push_str(&format!("{},\"{}\",{acc}\n", p.c, p.kernel));
        }
        run.write("grid.csv", csv)?;
    }
    let (h, model) = fit_model(&enc.rows, data, &choice, seed)?;
    record_hyperparams(
        &mut run.manifest,
        &h,
        matches!(choice, ModelChoice::Grid { .. }),
    );
    save_model(run, &model, &enc.encoding)?;
    Ok((enc, model, h))
}

fn save_model(run: &Run, model: &SvmModel, encoding: &Encoding) -> Result<()> {
    let mut w = BufWriter::new(File::create(run.path("model.svm"))?);
    write_model(model, &mut w)?;
    w.flush()?;
    run.write("encoding.txt", encoding.scaling_text())
}

fn inspect(run: &mut Run, a: &DataArgs) -> Result<()> {
    let data = load_data(run, &a.data, a.schema.as_deref(), "")?;
    let summary = data.summary();
    run.write("summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

fn train_cmd(run: &mut Run, a: &TrainArgs) -> Result<()> {
    let data = load_data(run, &a.data.data, a.data.schema.as_deref(), "")?;
    let (train_set, test_set, seed) = maybe_split(run, data, &a.split)?;
    let (enc, model, _) = fit_and_save(run, &train_set, &a.model, seed)?;
    run.manifest.set("support_vectors", model.n_support());
    if let Some(test) = test_set {
        let r = evaluate(
            Predictor::Model {
                model: &model,
                encoding: &enc.encoding,
            },
            &test,
        )?;
        let text = compare_report(&[("svm".to_string(), r)], ReportFormat::Text);
        run.write("report.txt", &text)?;
        print!("{text}");
    }
    Ok(())
}

fn shap_params(run: &mut Run, s: &SamplingArgs, seed: u64) -> ShapParams {
    let p = ShapParams {
        exact_limit: s.exact_limit,
        n_permutations: s.permutations,
        seed,
    };
    run.manifest
        .set("shap_exact_limit", p.exact_limit)
        .set("shap_permutations", p.n_permutations)
        .set("shap_seed", p.seed)
        .set(
            "background_limit",
            s.background_limit
                .map_or_else(|| "all".to_string(), |b| b.to_string()),
        );
    p
}

fn shap_cmd(run: &mut Run, a: &ShapArgs) -> Result<()> {
    let data = load_data(run, &a.data.data, a.data.schema.as_deref(), "")?;
    let model = load_model(run, &a.model)?;
    let encoding = load_encoding(
        data.schema_arc(),
        &encoding_path(&a.model, a.encoding.as_deref()),
    )?;
    let x = encoding.encode_all(&data);
    let seed = run.seed(a.seed);
    let params = shap_params(run, &a.sampling, seed);

    let rows: Vec<usize> = match a.rows {
        RowsArg::Tp => {
            let tp = model.true_positive_svs(&data.labels());
            ensure!(
                !tp.is_empty(),
                "the model has no true-positive support vectors on this data"
            );
            tp.iter().map(|&k| model.sv_original_indices[k]).collect()
        }
        RowsArg::All => (0..data.len()).collect(),
    };
    ensure!(
        rows.iter().all(|&r| r < data.len()),
        "model support vectors refer to rows beyond this dataset; pass the training data"
    );
    run.manifest
        .set("rows", format!("{:?}", a.rows).to_lowercase());

    let labels = data.labels();
    let result = match a.shap_mode {
        ShapModeArg::Marginalize => {
            ensure!(a.c.is_none(), "--c only applies to --shap-mode retrain");
            run.manifest.set("shap_mode", "marginalize");
            let limit = a.sampling.background_limit.unwrap_or(usize::MAX);
            ensure!(limit > 0, "--background-limit must be at least 1");
            let background = background_rows(x.len(), limit, seed)
                .into_iter()
                .map(|i| x[i].clone())
                .collect();
            shap_matrix(
                Explained::Model(&model),
                &x,
                &rows,
                &ValueFunctionMode::Marginalize { background },
                &params,
                encoding.column_names(),
            )?
        }
        ShapModeArg::Retrain => {
            let Some(c) = a.c else {
                bail!("--shap-mode retrain needs --c (the model file does not store C)");
            };
            run.manifest.set("shap_mode", "retrain").set("c", c);
            let retrainer = SvmRetrainer {
                x: &x,
                y: &labels,
                hyperparams: Hyperparams {
                    c,
                    kernel: model.kernel,
                    seed,
                    ..Default::default()
                },
            };
            shap_matrix(
                Explained::Trainer(&retrainer),
                &x,
                &rows,
                &ValueFunctionMode::Retrain,
                &params,
                encoding.column_names(),
            )?
        }
    };
    let mut w = BufWriter::new(File::create(run.path("shap.csv"))?);
    write_shap(&result, &mut w)?;
    w.flush()?;

    if let Some(row) = a.explain {
        let Some(pos) = result.rows.iter().position(|&r| r == row) else {
            bail!("row {row} is not among the explained rows (try --rows all)");
        };
        let sample = &data.samples()[row];
        let text = attribution_report(&result, pos, &encoding, sample);
        run.write("explain.txt", &text)?;
        run.write(
            "explain.csv",
            attribution_csv(&result, pos, &encoding, sample),
        )?;
        print!("{text}");
    }
    Ok(())
}

fn write_induction(run: &Run, out: &ShapFoilOutput, suffix: &str) -> Result<()> {
    run.write(
        &format!("rules{suffix}.pl"),
        serialize_prolog(&out.hypothesis, DEFAULT_DECIMALS),
    )?;
    run.write(&format!("audit{suffix}.txt"), render_audit(&out.audit, 4))?;
    let mut w = BufWriter::new(File::create(run.path(&format!("shap{suffix}.csv")))?);
    write_shap(&out.shap, &mut w)?;
    w.flush()?;
    Ok(())
}

fn induce_cmd(run: &mut Run, a: &InduceArgs) -> Result<()> {
    let data = load_data(run, &a.data.data, a.data.schema.as_deref(), "")?;
    let (train_set, test_set, seed) = maybe_split(run, data, &a.split)?;
    let theta = run.theta(a.theta);
    let params = ShapFoilParams {
        theta,
        max_literals: a.max_literals,
        shap: shap_params(run, &a.sampling, seed),
        background_limit: a.sampling.background_limit,
        interval_source: match a.interval_source {
            IntervalArg::Annotated => IntervalSource::Annotated,
            IntervalArg::AnnotatedPositives => IntervalSource::AnnotatedPositives,
        },
    };
    params.validate()?;
    run.manifest
        .set("theta", theta)
        .set("max_literals", params.max_literals)
        .set("shap_mode", "marginalize")
        .set("interval_source", params.interval_source);

    let (enc, model, hyperparams) = match &a.model_file {
        Some(path) => {
            let model = load_model(run, path)?;
            let encoding = load_encoding(
                train_set.schema_arc(),
                &encoding_path(path, a.encoding.as_deref()),
            )?;
            let rows = encoding.encode_all(&train_set);
            run.manifest.set("kernel", model.kernel.name());
            save_model(run, &model, &encoding)?;
            (BinarizedMatrix { encoding, rows }, model, None)
        }
        None => {
            let (enc, model, h) = fit_and_save(run, &train_set, &a.model, seed)?;
            (enc, model, Some(h))
        }
    };

    let out = if a.both_classes {
        let h = hyperparams.expect("--both-classes conflicts with --model");
        let (pos, neg) =
            induce_both_classes(&train_set, !a.model.no_standardize, &params, |x, y| {
                train(x, y, &h)
            })?;
        write_induction(run, &neg, "_neg")?;
        pos
    } else {
        shap_foil(&model, &train_set, &enc, &params)?
    };
    write_induction(run, &out, "")?;
    run.manifest
        .set("clauses", out.hypothesis.len())
        .set("rejections", out.rejections());

    if let Some(test) = test_set {
        let svm = evaluate(
            Predictor::Model {
                model: &model,
                encoding: &enc.encoding,
            },
            &test,
        )?;
        let rules = evaluate(
            Predictor::Both {
                rules: &out.hypothesis,
                model: &model,
                encoding: &enc.encoding,
            },
            &test,
        )?;
        let text = compare_report(
            &[("svm".to_string(), svm), ("shap-foil".to_string(), rules)],
            ReportFormat::Text,
        );
        run.write("report.txt", &text)?;
    }
    print!("{}", serialize_prolog(&out.hypothesis, DEFAULT_DECIMALS));
    Ok(())
}

fn foil_cmd(run: &mut Run, a: &FoilArgs) -> Result<()> {
    let data = load_data(run, &a.data.data, a.data.schema.as_deref(), "")?;
    let (train_set, test_set, _) = maybe_split(run, data, &a.split)?;
    let params = FoilParams {
        max_clause_length: a.max_clause_length,
        thresholds: a.thresholds,
        ..Default::default()
    };
    run.manifest
        .set("thresholds", thresholds_text(params.thresholds))
        .set("max_clause_length", params.max_clause_length);
    let out = foil_induce(&train_set, &params)?;
    let text = serialize_prolog(&out.hypothesis, DEFAULT_DECIMALS);
    run.write("rules.pl", &text)?;
    let mut csv = String::from("clause,covered_pos,covered_neg,new_pos,pure\n");
    for (i, s) in out.stats.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            s.covered_pos,
            s.covered_neg,
            s.new_pos,
            s.pure
        ));
    }
    run.write("stats.csv", csv)?;
    run.manifest
        .set("clauses", out.hypothesis.len())
        .set("uncovered_pos", out.uncovered_pos);
    if let Some(test) = test_set {
        let r = evaluate(Predictor::Rules(&out.hypothesis), &test)?;
        run.write(
            "report.txt",
            compare_report(&[("foil".to_string(), r)], ReportFormat::Text),
        )?;
    }
    print!("{text}");
    Ok(())
}

fn report_name(format: FormatArg) -> &'static str {
    match format {
        FormatArg::Text => "report.txt",
        FormatArg::Csv => "report.csv",
    }
}

fn eval_cmd(run: &mut Run, a: &EvalArgs) -> Result<()> {
    let test = load_data(run, &a.test, a.schema.as_deref(), "test_")?;
    let rules = a
        .rules
        .as_deref()
        .map(|p| load_rules(run, p, "rules"))
        .transpose()?;
    let model = match &a.model {
        Some(p) => {
            let m = load_model(run, p)?;
            let e = load_encoding(test.schema_arc(), &encoding_path(p, a.encoding.as_deref()))?;
            Some((m, e))
        }
        None => None,
    };
    let (name, predictor) = match (&rules, &model) {
        (Some(r), Some((m, e))) => (
            "rules",
            Predictor::Both {
                rules: r,
                model: m,
                encoding: e,
            },
        ),
        (Some(r), None) => ("rules", Predictor::Rules(r)),
        (None, Some((m, e))) => (
            "svm",
            Predictor::Model {
                model: m,
                encoding: e,
            },
        ),
        (None, None) => bail!("give --rules, --model, or both"),
    };
    let report = evaluate(predictor, &test)?;
    let text = compare_report(&[(name.to_string(), report)], a.format.into());
    run.write(report_name(a.format), &text)?;
    print!("{text}");
    Ok(())
}

fn compare_cmd(run: &mut Run, a: &CompareArgs) -> Result<()> {
    let test = load_data(run, &a.test, a.schema.as_deref(), "test_")?;
    let model = load_model(run, &a.svm)?;
    let encoding = load_encoding(
        test.schema_arc(),
        &encoding_path(&a.svm, a.encoding.as_deref()),
    )?;
    let shapfoil = load_rules(run, &a.rules, "rules")?;
    let foil = load_rules(run, &a.rules_foil, "rules_foil")?;
    let model_only = Predictor::Model {
        model: &model,
        encoding: &encoding,
    };
    let rows: Vec<(String, EvalReport)> = vec![
        ("svm".into(), evaluate(model_only, &test)?),
        (
            "foil".into(),
            evaluate(
                Predictor::Both {
                    rules: &foil,
                    model: &model,
                    encoding: &encoding,
                },
                &test,
            )?,
        ),
        (
            "shap-foil".into(),
            evaluate(
                Predictor::Both {
                    rules: &shapfoil,
                    model: &model,
                    encoding: &encoding,
                },
                &test,
            )?,
        ),
    ];
    let text = compare_report(&rows, a.format.into());
    run.write(report_name(a.format), &text)?;
    print!("{text}");
    Ok(())
}

fn synth_cmd(run: &mut Run, a: &SynthArgs) -> Result<()> {
    let seed = run.seed(a.seed);
    let data = synth::generate(&a.name, seed, a.size)?;
    data.save_csv(run.path(&format!("{}.csv", a.name)))?;
    run.write(&format!("{}.schema", a.name), data.schema().to_text())?;
    run.manifest
        .set("generator", &a.name)
        .set("seed", seed)
        .set("size", a.size);
    Ok(())
}
