//! Soft-margin kernel SVM trained on the dual problem.
//!
//! The classifier is `f(x) = sign(sum_i a_i y_i K(x_i, x) + b)` over the
//! stored support vectors; [`SvmModel::decision_value`] returns the
//! bracketed pre-sign value and a zero decision maps to the positive class.

mod io;
mod kernel;
mod smo;
mod tuning;

use log::debug;
use thiserror::Error;

use crate::dataset::Label;

pub use io::{read_model, write_model};
pub use kernel::{kernel_eval, KernelSpec};
pub use tuning::{grid_search, GridPoint, GridSearch, GridSearchResult};

/// Dual coefficients at or below this value are treated as zero.
pub const SV_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training data contains a single class")]
    SingleClass,
    #[error("need at least two training samples, got {0}")]
    TooFewSamples(usize),
    #[error("non-finite value in training row {0}")]
    NonFinite(usize),
    #[error("{rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error(
        "solver did not converge within {iterations} iterations (KKT violation {violation:.3e}, dual objective {objective:.6})"
    )]
    NotConverged {
        iterations: usize,
        violation: f64,
        objective: f64,
    },
    #[error("support vector index {index} out of range ({count} stored)")]
    InvalidSupportVector { index: usize, count: usize },
    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub c: f64,
    pub kernel: KernelSpec,
    /// Stop when the maximal KKT violation pair gap drops below this.
    pub kkt_tolerance: f64,
    /// Iteration budget, in units of the training-set size.
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            c: 1.0,
            kernel: KernelSpec::Rbf { gamma: 1.0 },
            kkt_tolerance: 1e-3,
            max_passes: 1000,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvmError::InvalidHyperparams(format!(
                "C must be > 0, got {}",
                self.c
            )));
        }
        if !(self.kkt_tolerance > 0.0) {
            return Err(SvmError::InvalidHyperparams(format!(
                "kkt tolerance must be > 0, got {}",
                self.kkt_tolerance
            )));
        }
        if self.max_passes == 0 {
            return Err(SvmError::InvalidHyperparams(
                "max_passes must be >= 1".into(),
            ));
        }
        self.kernel.validate()
    }
}

/// A trained model: only points with non-zero dual coefficient are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub sv_labels: Vec<Label>,
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    /// Row of each support vector in the training matrix.
    pub sv_original_indices: Vec<usize>,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn n_support(&self) -> usize {
        self.support_vectors.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), SvmError> {
        if !self.support_vectors.is_empty() && x.len() != self.dim() {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `a_i * y_i` for every stored support vector.
    pub fn signed_alphas(&self) -> Vec<f64> {
        self.alphas
            .iter()
            .zip(&self.sv_labels)
            .map(|(a, y)| a * y.as_f64())
            .collect()
    }

    /// Unchecked decision value.
    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(self.alphas.iter().zip(&self.sv_labels))
            .map(|(sv, (a, y))| a * y.as_f64() * self.kernel.compute(sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        self.check_dim(x)?;
        Ok(self.decision_unchecked(x))
    }

    /// Sign of the decision value, with an exact zero mapped to positive.
    pub fn classify(&self, x: &[f64]) -> Result<Label, SvmError> {
        Ok(Label::from_sign(self.decision_value(x)?))
    }

    /// Contribution `a_i * y_i * K(x_i, x)` of support vector `sv_index`.
    pub fn similarity(&self, sv_index: usize, x: &[f64]) -> Result<f64, SvmError> {
        if sv_index >= self.n_support() {
            return Err(SvmError::InvalidSupportVector {
                index: sv_index,
                count: self.n_support(),
            });
        }
        self.check_dim(x)?;
        Ok(self.similarity_unchecked(sv_index, x))
    }

    pub(crate) fn similarity_unchecked(&self, sv_index: usize, x: &[f64]) -> f64 {
        self.alphas[sv_index]
            * self.sv_labels[sv_index].as_f64()
            * self.kernel.compute(&self.support_vectors[sv_index], x)
    }

    /// Support vectors labelled positive in training that the model also
    /// classifies as positive. `labels` are the training labels, indexed like
    /// the training matrix.
    pub fn true_positive_svs(&self, labels: &[Label]) -> Vec<usize> {
        (0..self.n_support())
            .filter(|&k| {
                let train_label = labels
                    .get(self.sv_original_indices[k])
                    .copied()
                    .unwrap_or(self.sv_labels[k]);
                train_label.is_positive()
                    && Label::from_sign(self.decision_unchecked(&self.support_vectors[k]))
                        .is_positive()
            })
            .collect()
    }

    /// Dense dual vector over the `n` training rows.
    pub fn dense_alphas(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&i, &a) in self.sv_original_indices.iter().zip(&self.alphas) {
            if i < n {
                out[i] = a;
            }
        }
        out
    }
}

/// Dual objective `sum a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)`.
pub fn dual_objective(alphas: &[f64], x: &[Vec<f64>], y: &[Label], kernel: &KernelSpec) -> f64 {
    let ay: Vec<f64> = alphas.iter().zip(y).map(|(a, l)| a * l.as_f64()).collect();
    let mut quad = 0.0;
    for i in 0..x.len() {
        if ay[i] == 0.0 {
            continue;
        }
        for j in 0..x.len() {
            if ay[j] != 0.0 {
                quad += ay[i] * ay[j] * kernel.compute(&x[i], &x[j]);
            }
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

const CACHE_BUDGET_BYTES: usize = 64 << 20;

/// Trains on the rows of `x` with labels `y`.
pub fn train(x: &[Vec<f64>], y: &[Label], h: &Hyperparams) -> Result<SvmModel, SvmError> {
    h.validate()?;
    if x.len() != y.len() {
        return Err(SvmError::LabelCount {
            rows: x.len(),
            labels: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(SvmError::TooFewSamples(x.len()));
    }
    let dim = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != dim {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFinite(i));
        }
    }
    let has_pos = y.iter().any(|l| l.is_positive());
    let has_neg = y.iter().any(|l| !l.is_positive());
    if !(has_pos && has_neg) {
        return Err(SvmError::SingleClass);
    }

    let yf: Vec<f64> = y.iter().map(|l| l.as_f64()).collect();
    let cache_rows = (CACHE_BUDGET_BYTES / (8 * x.len())).max(2);
    let outcome = smo::SmoProblem {
        x,
        y: &yf,
        c: h.c,
        kernel: h.kernel,
        tolerance: h.kkt_tolerance,
        max_iterations: h.max_passes.saturating_mul(x.len()),
        cache_rows,
    }
    .solve();
    if !outcome.converged {
        return Err(SvmError::NotConverged {
            iterations: outcome.iterations,
            violation: outcome.violation,
            objective: dual_objective(&outcome.alphas, x, y, &h.kernel),
        });
    }
    debug!("trained {} in {} iterations", h.kernel, outcome.iterations);

    let mut model = SvmModel {
        support_vectors: Vec::new(),
        sv_labels: Vec::new(),
        alphas: Vec::new(),
        bias: outcome.bias,
        kernel: h.kernel,
        sv_original_indices: Vec::new(),
    };
    for (i, &a) in outcome.alphas.iter().enumerate() {
        if a > SV_THRESHOLD {
            model.support_vectors.push(x[i].clone());
            model.sv_labels.push(y[i]);
            model.alphas.push(a);
            model.sv_original_indices.push(i);
        }
    }
    Ok(model)
}
