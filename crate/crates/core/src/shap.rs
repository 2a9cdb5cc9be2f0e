//! Shapley attributions of a model's continuous output over encoded columns.
//!
//! Two value functions are supported. `Marginalize` replaces absent columns
//! by background rows and averages the output; `Retrain` fits one model per
//! column subset. Exact attributions enumerate all `2^d` coalitions;
//! the sampled estimator averages marginal contributions over permutations.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{Encoding, Label, Sample};
use crate::svm::{self, Hyperparams, SvmModel};

pub const DEFAULT_EXACT_LIMIT: usize = 12;
/// Upper bound on features for retrain-mode enumeration.
pub const RETRAIN_LIMIT: usize = 10;
/// What the attributions explain: the pre-sign SVM decision value.
pub const MODEL_OUTPUT: &str = "decision_value";

#[derive(Debug, Error)]
pub enum ShapError {
    #[error(
        "{features} features exceed the exact enumeration limit {limit}; use permutation sampling"
    )]
    TooManyFeatures { features: usize, limit: usize },
    #[error("retrain mode is only available for exact enumeration")]
    RetrainNotSampled,
    #[error("retrain mode needs a subset trainer, marginalize mode needs a fixed model")]
    ModeMismatch,
    #[error("marginalize mode needs a non-empty background")]
    EmptyBackground,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("n_permutations must be >= 1")]
    NoPermutations,
    #[error("row {0} out of range")]
    RowOutOfRange(usize),
    #[error("subset training failed: {0}")]
    Training(#[from] svm::SvmError),
    #[error("shap file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ShapError>;

/// A model with a continuous output over dense feature vectors.
pub trait ValueModel: Sync {
    fn dim(&self) -> usize;
    fn output(&self, x: &[f64]) -> f64;

    /// An evaluator that updates its output in less than a full pass when a
    /// single coordinate changes. `None` falls back to direct evaluation.
    fn fast_walker(&self) -> Option<Box<dyn CoordinateWalker + '_>> {
        None
    }
}

/// Output of a model along a path of single-coordinate edits.
pub trait CoordinateWalker {
    fn reset(&mut self, x: &[f64]);
    fn set(&mut self, j: usize, value: f64);
    fn output(&self) -> f64;
}

struct DirectWalker<'a> {
    model: &'a dyn ValueModel,
    x: Vec<f64>,
}

impl CoordinateWalker for DirectWalker<'_> {
    fn reset(&mut self, x: &[f64]) {
        self.x.clear();
        self.x.extend_from_slice(x);
    }

    fn set(&mut self, j: usize, value: f64) {
        self.x[j] = value;
    }

    fn output(&self) -> f64 {
        self.model.output(&self.x)
    }
}

fn walker<'a>(model: &'a dyn ValueModel) -> Box<dyn CoordinateWalker + 'a> {
    model.fast_walker().unwrap_or_else(|| {
        Box::new(DirectWalker {
            model,
            x: Vec::with_capacity(model.dim()),
        })
    })
}

impl ValueModel for SvmModel {
    fn dim(&self) -> usize {
        SvmModel::dim(self)
    }

    fn output(&self, x: &[f64]) -> f64 {
        self.decision_unchecked(x)
    }

    fn fast_walker(&self) -> Option<Box<dyn CoordinateWalker + '_>> {
        Some(Box::new(SvmWalker {
            coef: self.signed_alphas(),
            stats: vec![0.0; self.n_support()],
            x: Vec::with_capacity(SvmModel::dim(self)),
            model: self,
        }))
    }
}

/// Keeps, per support vector, the dot product (linear, polynomial) or the
/// squared distance (rbf) to the current point.
struct SvmWalker<'a> {
    model: &'a SvmModel,
    coef: Vec<f64>,
    stats: Vec<f64>,
    x: Vec<f64>,
}

impl CoordinateWalker for SvmWalker<'_> {
    fn reset(&mut self, x: &[f64]) {
        self.x.clear();
        self.x.extend_from_slice(x);
        let dist = self.model.kernel.uses_distance();
        for (stat, sv) in self.stats.iter_mut().zip(&self.model.support_vectors) {
            *stat = if dist {
                sv.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum()
            } else {
                sv.iter().zip(x).map(|(a, b)| a * b).sum()
            };
        }
    }

    fn set(&mut self, j: usize, value: f64) {
        let old = self.x[j];
        if old == value {
            return;
        }
        self.x[j] = value;
        if self.model.kernel.uses_distance() {
            for (stat, sv) in self.stats.iter_mut().zip(&self.model.support_vectors) {
                let s = sv[j];
                *stat += (value - s) * (value - s) - (old - s) * (old - s);
            }
        } else {
            let delta = value - old;
            for (stat, sv) in self.stats.iter_mut().zip(&self.model.support_vectors) {
                *stat += delta * sv[j];
            }
        }
    }

    fn output(&self) -> f64 {
        let k = &self.model.kernel;
        self.coef
            .iter()
            .zip(&self.stats)
            .map(|(c, s)| c * k.from_statistic(*s))
            .sum::<f64>()
            + self.model.bias
    }
}

/// Fits a model restricted to a subset of columns (retrain value function).
pub trait SubsetTrainer: Sync {
    fn dim(&self) -> usize;
    /// The returned model takes full-width inputs and reads only `columns`.
    fn train_subset(&self, columns: &[usize]) -> Result<Box<dyn ValueModel + Send + Sync>>;
    /// Output of the model trained on no columns.
    fn empty_value(&self) -> f64;
}

struct ProjectedSvm {
    model: SvmModel,
    columns: Vec<usize>,
    width: usize,
}

impl ValueModel for ProjectedSvm {
    fn dim(&self) -> usize {
        self.width
    }

    fn output(&self, x: &[f64]) -> f64 {
        let projected: Vec<f64> = self.columns.iter().map(|&c| x[c]).collect();
        self.model.decision_unchecked(&projected)
    }
}

/// Retrains the SVM with fixed hyperparameters on each column subset. The
/// zero-column model predicts the mean training label.
pub struct SvmRetrainer<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [Label],
    pub hyperparams: Hyperparams,
}

impl SubsetTrainer for SvmRetrainer<'_> {
    fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    fn train_subset(&self, columns: &[usize]) -> Result<Box<dyn ValueModel + Send + Sync>> {
        let projected: Vec<Vec<f64>> = self
            .x
            .iter()
            .map(|row| columns.iter().map(|&c| row[c]).collect())
            .collect();
        let model = svm::train(&projected, self.y, &self.hyperparams)?;
        Ok(Box::new(ProjectedSvm {
            model,
            columns: columns.to_vec(),
            width: self.dim(),
        }))
    }

    fn empty_value(&self) -> f64 {
        self.y.iter().map(|l| l.as_f64()).sum::<f64>() / self.y.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValueFunctionMode {
    Retrain,
    Marginalize { background: Vec<Vec<f64>> },
}

impl ValueFunctionMode {
    pub fn kind(&self) -> ValueFunctionKind {
        match self {
            ValueFunctionMode::Retrain => ValueFunctionKind::Retrain,
            ValueFunctionMode::Marginalize { background } => ValueFunctionKind::Marginalize {
                background_rows: background.len(),
            },
        }
    }
}

/// Summary of the value function recorded alongside results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueFunctionKind {
    Retrain,
    Marginalize { background_rows: usize },
}

/// What is being explained.
#[derive(Clone, Copy)]
pub enum Explained<'a> {
    Model(&'a dyn ValueModel),
    Trainer(&'a dyn SubsetTrainer),
}

impl Explained<'_> {
    fn dim(&self) -> usize {
        match self {
            Explained::Model(m) => m.dim(),
            Explained::Trainer(t) => t.dim(),
        }
    }
}

/// Shapley values of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub phi: Vec<f64>,
    pub base_value: f64,
    /// Value of the full coalition, i.e. the model output at the instance.
    pub output: f64,
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(ShapError::DimensionMismatch {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

fn check_background(model: &dyn ValueModel, background: &[Vec<f64>]) -> Result<()> {
    if background.is_empty() {
        return Err(ShapError::EmptyBackground);
    }
    for b in background {
        check_dim(model.dim(), b)?;
    }
    Ok(())
}

/// `|S|! (d - |S| - 1)! / d!` for every coalition size.
fn shapley_weights(d: usize) -> Vec<f64> {
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    (0..d)
        .map(|s| fact(s) * fact(d - s - 1) / fact(d))
        .collect()
}

/// Shapley values from a fully tabulated coalition value function.
fn phi_from_values(values: &[f64], d: usize) -> Vec<f64> {
    let weights = shapley_weights(d);
    (0..d)
        .map(|i| {
            let bit = 1usize << i;
            (0..values.len())
                .filter(|mask| mask & bit == 0)
                .map(|mask| {
                    weights[mask.count_ones() as usize] * (values[mask | bit] - values[mask])
                })
                .sum()
        })
        .collect()
}

/// `v(S)` for every coalition mask: mean output with columns in `S` taken from
/// `x` and the rest from each background row. Walks the masks in Gray-code
/// order so each step changes one coordinate.
fn marginal_values(model: &dyn ValueModel, x: &[f64], background: &[Vec<f64>]) -> Vec<f64> {
    let d = x.len();
    let mut values = vec![0.0; 1 << d];
    let mut w = walker(model);
    for b in background {
        w.reset(b);
        values[0] += w.output();
        let mut mask = 0usize;
        for k in 1..(1usize << d) {
            let j = k.trailing_zeros() as usize;
            mask ^= 1 << j;
            w.set(j, if mask & (1 << j) != 0 { x[j] } else { b[j] });
            values[mask] += w.output();
        }
    }
    let n = background.len() as f64;
    values.iter_mut().for_each(|v| *v /= n);
    values
}

fn mean_output(model: &dyn ValueModel, background: &[Vec<f64>]) -> f64 {
    background.iter().map(|b| model.output(b)).sum::<f64>() / background.len() as f64
}

/// Trains every non-empty column subset once; index = coalition mask.
fn retrain_models(
    trainer: &dyn SubsetTrainer,
) -> Result<Vec<Option<Box<dyn ValueModel + Send + Sync>>>> {
    let d = trainer.dim();
    let trained: Vec<Result<Option<Box<dyn ValueModel + Send + Sync>>>> = (0..1usize << d)
        .into_par_iter()
        .map(|mask| {
            if mask == 0 {
                return Ok(None);
            }
            let cols: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
            trainer.train_subset(&cols).map(Some)
        })
        .collect();
    trained.into_iter().collect()
}

fn retrain_values(
    models: &[Option<Box<dyn ValueModel + Send + Sync>>],
    empty_value: f64,
    x: &[f64],
) -> Vec<f64> {
    models
        .iter()
        .map(|m| m.as_ref().map_or(empty_value, |m| m.output(x)))
        .collect()
}

/// Exact Shapley values by coalition enumeration.
pub fn shapley_exact(
    target: Explained<'_>,
    x: &[f64],
    mode: &ValueFunctionMode,
    exact_limit: usize,
) -> Result<Attribution> {
    let d = target.dim();
    check_dim(d, x)?;
    match (target, mode) {
        (Explained::Model(model), ValueFunctionMode::Marginalize { background }) => {
            if d > exact_limit {
                return Err(ShapError::TooManyFeatures {
                    features: d,
                    limit: exact_limit,
                });
            }
            check_background(model, background)?;
            let values = marginal_values(model, x, background);
            Ok(Attribution {
                phi: phi_from_values(&values, d),
                base_value: values[0],
                output: values[(1 << d) - 1],
            })
        }
        (Explained::Trainer(trainer), ValueFunctionMode::Retrain) => {
            let limit = exact_limit.min(RETRAIN_LIMIT);
            if d > limit {
                return Err(ShapError::TooManyFeatures { features: d, limit });
            }
            let models = retrain_models(trainer)?;
            let values = retrain_values(&models, trainer.empty_value(), x);
            Ok(Attribution {
                phi: phi_from_values(&values, d),
                base_value: values[0],
                output: values[(1 << d) - 1],
            })
        }
        _ => Err(ShapError::ModeMismatch),
    }
}

/// All permutations of `0..d` in lexicographic order.
fn all_permutations(d: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..d).collect();
    let mut out = vec![perm.clone()];
    loop {
        let Some(i) = (1..d).rev().find(|&i| perm[i - 1] < perm[i]) else {
            return out;
        };
        let j = (i..d).rev().find(|&j| perm[j] > perm[i - 1]).unwrap();
        perm.swap(i - 1, j);
        perm[i..].reverse();
        out.push(perm.clone());
    }
}

fn factorial_at_most(d: usize, cap: usize) -> Option<usize> {
    let mut f = 1usize;
    for k in 2..=d {
        f = f.checked_mul(k)?;
        if f > cap {
            return None;
        }
    }
    Some(f)
}

/// Permutation-sampling estimate of the marginalized Shapley values.
///
/// When `n_permutations >= d!` every permutation is visited exactly once,
/// which reproduces the exact values.
pub fn shapley_sampled(
    model: &dyn ValueModel,
    x: &[f64],
    mode: &ValueFunctionMode,
    n_permutations: usize,
    seed: u64,
) -> Result<Attribution> {
    let ValueFunctionMode::Marginalize { background } = mode else {
        return Err(ShapError::RetrainNotSampled);
    };
    if n_permutations == 0 {
        return Err(ShapError::NoPermutations);
    }
    let d = model.dim();
    check_dim(d, x)?;
    check_background(model, background)?;

    let perms: Vec<Vec<usize>> = match factorial_at_most(d, n_permutations) {
        Some(_) => all_permutations(d),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut base: Vec<usize> = (0..d).collect();
            (0..n_permutations)
                .map(|_| {
                    base.shuffle(&mut rng);
                    base.clone()
                })
                .collect()
        }
    };

    let mut contrib = vec![0.0; d];
    let mut base_sum = 0.0;
    let mut w = walker(model);
    for b in background {
        w.reset(b);
        base_sum += w.output();
    }
    for perm in &perms {
        for b in background {
            w.reset(b);
            let mut prev = w.output();
            for &j in perm {
                w.set(j, x[j]);
                let cur = w.output();
                contrib[j] += cur - prev;
                prev = cur;
            }
        }
    }
    let scale = (perms.len() * background.len()) as f64;
    Ok(Attribution {
        phi: contrib.into_iter().map(|c| c / scale).collect(),
        base_value: base_sum / background.len() as f64,
        output: model.output(x),
    })
}

/// How `shap_matrix` computes each row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapParams {
    /// Largest width handled by exact enumeration.
    pub exact_limit: usize,
    pub n_permutations: usize,
    pub seed: u64,
}

impl Default for ShapParams {
    fn default() -> Self {
        ShapParams {
            exact_limit: DEFAULT_EXACT_LIMIT,
            n_permutations: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Sampled { n_permutations: usize, seed: u64 },
}

/// Shapley matrix for a set of rows, sharing one base value.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapResult {
    pub base_value: f64,
    /// Row indices (into the explained matrix) in output order.
    pub rows: Vec<usize>,
    /// Model output at each row.
    pub outputs: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub mode: ValueFunctionKind,
    pub method: Method,
    pub column_names: Vec<String>,
}

impl ShapResult {
    pub fn row_of(&self, index: usize) -> Option<&[f64]> {
        self.rows
            .iter()
            .position(|&r| r == index)
            .map(|k| self.phi[k].as_slice())
    }
}

fn row_seed(seed: u64, row: usize) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = seed ^ (row as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Attributions for `rows` of `x`. Exact enumeration is used up to
/// `params.exact_limit` columns, permutation sampling beyond (marginalize
/// mode only). Per-row sampling seeds derive from `(params.seed, row)` so
/// results do not depend on which other rows are requested.
pub fn shap_matrix(
    target: Explained<'_>,
    x: &[Vec<f64>],
    rows: &[usize],
    mode: &ValueFunctionMode,
    params: &ShapParams,
    column_names: &[String],
) -> Result<ShapResult> {
    let d = target.dim();
    for &r in rows {
        let row = x.get(r).ok_or(ShapError::RowOutOfRange(r))?;
        check_dim(d, row)?;
    }
    let (base_value, method, attributions): (f64, Method, Vec<Attribution>) = match (target, mode) {
        (Explained::Model(model), ValueFunctionMode::Marginalize { background }) => {
            check_background(model, background)?;
            let base = mean_output(model, background);
            if d <= params.exact_limit {
                let attrs = rows
                    .par_iter()
                    .map(|&r| shapley_exact(target, &x[r], mode, params.exact_limit))
                    .collect::<Result<Vec<_>>>()?;
                (base, Method::Exact, attrs)
            } else {
                let attrs = rows
                    .par_iter()
                    .map(|&r| {
                        shapley_sampled(
                            model,
                            &x[r],
                            mode,
                            params.n_permutations,
                            row_seed(params.seed, r),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                (
                    base,
                    Method::Sampled {
                        n_permutations: params.n_permutations,
                        seed: params.seed,
                    },
                    attrs,
                )
            }
        }
        (Explained::Trainer(trainer), ValueFunctionMode::Retrain) => {
            let limit = params.exact_limit.min(RETRAIN_LIMIT);
            if d > limit {
                return Err(ShapError::TooManyFeatures { features: d, limit });
            }
            let models = retrain_models(trainer)?;
            let empty = trainer.empty_value();
            let attrs = rows
                .par_iter()
                .map(|&r| {
                    let values = retrain_values(&models, empty, &x[r]);
                    Attribution {
                        phi: phi_from_values(&values, d),
                        base_value: values[0],
                        output: values[(1 << d) - 1],
                    }
                })
                .collect();
            (empty, Method::Exact, attrs)
        }
        _ => return Err(ShapError::ModeMismatch),
    };
    let (outputs, phi) = attributions.into_iter().map(|a| (a.output, a.phi)).unzip();
    Ok(ShapResult {
        base_value,
        rows: rows.to_vec(),
        outputs,
        phi,
        mode: mode.kind(),
        method,
        column_names: column_names.to_vec(),
    })
}

/// Column indices sorted by signed φ descending, ties by column index.
pub fn order_by_phi(phi: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..phi.len()).collect();
    order.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
    order
}

struct ReportLine {
    column: String,
    feature: String,
    value: String,
    phi: f64,
}

fn report_lines(phi: &[f64], encoding: &Encoding, sample: &Sample) -> Vec<ReportLine> {
    order_by_phi(phi)
        .into_iter()
        .filter(|&c| phi[c] != 0.0)
        .map(|c| {
            let feature =
                encoding.schema().feature_names()[encoding.columns()[c].feature()].clone();
            ReportLine {
                column: encoding.column_names()[c].clone(),
                feature,
                value: encoding.describe_value(c, sample),
                phi: phi[c],
            }
        })
        .collect()
}

/// Text listing of one row: features pushing the output up, then down,
/// ordered by signed φ descending.
pub fn attribution_report(
    result: &ShapResult,
    position: usize,
    encoding: &Encoding,
    sample: &Sample,
) -> String {
    let phi = &result.phi[position];
    let lines = report_lines(phi, encoding, sample);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "row {}: {} {:.4}, base value {:.4}",
        result.rows[position], MODEL_OUTPUT, result.outputs[position], result.base_value
    );
    let _ = writeln!(out, "pushing positive:");
    for l in lines.iter().filter(|l| l.phi > 0.0) {
        let _ = writeln!(
            out,
            "  {} = {} [{}] {:+.4}",
            l.feature, l.value, l.column, l.phi
        );
    }
    let _ = writeln!(out, "pushing negative:");
    for l in lines.iter().filter(|l| l.phi < 0.0) {
        let _ = writeln!(
            out,
            "  {} = {} [{}] {:+.4}",
            l.feature, l.value, l.column, l.phi
        );
    }
    out
}

/// CSV variant of [`attribution_report`]; zero attributions are omitted.
pub fn attribution_csv(
    result: &ShapResult,
    position: usize,
    encoding: &Encoding,
    sample: &Sample,
) -> String {
    let mut out = String::from("column,feature,value,phi\n");
    for l in report_lines(&result.phi[position], encoding, sample) {
        let _ = writeln!(out, "{},{},{},{:.16e}", l.column, l.feature, l.value, l.phi);
    }
    out
}

/// Writes the matrix as a commented CSV with 17 significant digits.
pub fn write_shap<W: Write>(result: &ShapResult, mut w: W) -> Result<()> {
    writeln!(w, "# shap-matrix v1")?;
    writeln!(w, "# output {MODEL_OUTPUT}")?;
    writeln!(w, "# base_value {:.16e}", result.base_value)?;
    match result.mode {
        ValueFunctionKind::Retrain => writeln!(w, "# mode retrain")?,
        ValueFunctionKind::Marginalize { background_rows } => {
            writeln!(w, "# mode marginalize {background_rows}")?
        }
    }
    match result.method {
        Method::Exact => writeln!(w, "# method exact")?,
        Method::Sampled {
            n_permutations,
            seed,
        } => writeln!(w, "# method sampled {n_permutations} {seed}")?,
    }
    write!(w, "row,output")?;
    for name in &result.column_names {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for k in 0..result.rows.len() {
        write!(w, "{},{:.16e}", result.rows[k], result.outputs[k])?;
        for v in &result.phi[k] {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_shap<R: BufRead>(r: R) -> Result<ShapResult> {
    let err = |line: usize, message: &str| ShapError::Parse {
        line,
        message: message.to_string(),
    };
    let mut base_value = None;
    let mut mode = None;
    let mut method = None;
    let mut column_names: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut outputs = Vec::new();
    let mut phi = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let n = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let toks: Vec<&str> = meta.split_whitespace().collect();
            match toks.as_slice() {
                ["shap-matrix", "v1"] | ["output", _] => {}
                ["base_value", v] => {
                    base_value = Some(v.parse().map_err(|_| err(n, "bad base value"))?)
                }
                ["mode", "retrain"] => mode = Some(ValueFunctionKind::Retrain),
                ["mode", "marginalize", k] => {
                    mode = Some(ValueFunctionKind::Marginalize {
                        background_rows: k.parse().map_err(|_| err(n, "bad background size"))?,
                    })
                }
                ["method", "exact"] => method = Some(Method::Exact),
                ["method", "sampled", p, s] => {
                    method = Some(Method::Sampled {
                        n_permutations: p.parse().map_err(|_| err(n, "bad permutation count"))?,
                        seed: s.parse().map_err(|_| err(n, "bad seed"))?,
                    })
                }
                _ => return Err(err(n, "unknown header line")),
            }
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        match &column_names {
            None => {
                if cells.len() < 2 || cells[0] != "row" || cells[1] != "output" {
                    return Err(err(n, "expected `row,output,...` header"));
                }
                column_names = Some(cells[2..].iter().map(|s| s.to_string()).collect());
            }
            Some(names) => {
                if cells.len() != names.len() + 2 {
                    return Err(err(n, "wrong number of cells"));
                }
                rows.push(cells[0].parse().map_err(|_| err(n, "bad row index"))?);
                outputs.push(cells[1].parse().map_err(|_| err(n, "bad output"))?);
                phi.push(
                    cells[2..]
                        .iter()
                        .map(|c| c.parse().map_err(|_| err(n, "bad value")))
                        .collect::<Result<Vec<f64>>>()?,
                );
            }
        }
    }
    Ok(ShapResult {
        base_value: base_value.ok_or_else(|| err(0, "missing base_value"))?,
        rows,
        outputs,
        phi,
        mode: mode.ok_or_else(|| err(0, "missing mode"))?,
        method: method.ok_or_else(|| err(0, "missing method"))?,
        column_names: column_names.ok_or_else(|| err(0, "missing header"))?,
    })
}
