//! Seeded k-fold grid search over `C` and the kernel scale.

use rayon::prelude::*;

use super::{train, Hyperparams, KernelSpec, SvmError};
use crate::dataset::{stratified_fold_indices, Label};

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub cs: Vec<f64>,
    /// `None` stands for `1 / d`, resolved against the data width.
    pub gammas: Vec<Option<f64>>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for GridSearch {
    fn default() -> Self {
        GridSearch {
            cs: vec![0.1, 1.0, 10.0, 100.0],
            gammas: vec![None, Some(0.1), Some(1.0)],
            folds: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub c: f64,
    pub kernel: KernelSpec,
    /// Mean held-out accuracy; `None` when some fold failed to train.
    pub cv_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best: Hyperparams,
    pub best_accuracy: f64,
    pub points: Vec<GridPoint>,
}

fn with_gamma(kernel: KernelSpec, gamma: f64) -> KernelSpec {
    match kernel {
        KernelSpec::Linear => KernelSpec::Linear,
        KernelSpec::Polynomial { degree, coef0, .. } => KernelSpec::Polynomial {
            degree,
            gamma,
            coef0,
        },
        KernelSpec::Rbf { .. } => KernelSpec::Rbf { gamma },
    }
}

/// Picks the `(C, gamma)` pair with the best mean cross-validated accuracy.
/// Ties keep the earliest grid point (C ascending, then gamma list order).
/// The kernel family, degree and coef0 come from `base`.
pub fn grid_search(
    x: &[Vec<f64>],
    y: &[Label],
    base: &Hyperparams,
    grid: &GridSearch,
) -> Result<GridSearchResult, SvmError> {
    if x.len() != y.len() {
        return Err(SvmError::LabelCount {
            rows: x.len(),
            labels: y.len(),
        });
    }
    let dim = x.first().map_or(1, Vec::len).max(1);
    let mut candidates = Vec::new();
    for &c in &grid.cs {
        if matches!(base.kernel, KernelSpec::Linear) {
            candidates.push(Hyperparams { c, ..*base });
            continue;
        }
        for g in &grid.gammas {
            let gamma = g.unwrap_or(1.0 / dim as f64);
            candidates.push(Hyperparams {
                c,
                kernel: with_gamma(base.kernel, gamma),
                ..*base
            });
        }
    }
    let folds = stratified_fold_indices(y, grid.folds, grid.seed);

    let points: Vec<GridPoint> = candidates
        .par_iter()
        .map(|h| {
            let mut correct = 0usize;
            let mut total = 0usize;
            for (train_idx, test_idx) in &folds {
                if test_idx.is_empty() {
                    continue;
                }
                let tx: Vec<Vec<f64>> = train_idx.iter().map(|&i| x[i].clone()).collect();
                let ty: Vec<Label> = train_idx.iter().map(|&i| y[i]).collect();
                let Ok(model) = train(&tx, &ty, h) else {
                    return GridPoint {
                        c: h.c,
                        kernel: h.kernel,
                        cv_accuracy: None,
                    };
                };
                for &i in test_idx {
                    if Label::from_sign(model.decision_unchecked(&x[i])) == y[i] {
                        correct += 1;
                    }
                    total += 1;
                }
            }
            GridPoint {
                c: h.c,
                kernel: h.kernel,
                cv_accuracy: (total > 0).then(|| correct as f64 / total as f64),
            }
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (k, p) in points.iter().enumerate() {
        if let Some(acc) = p.cv_accuracy {
            if best.is_none_or(|(_, b)| acc > b) {
                best = Some((k, acc));
            }
        }
    }
    let (k, best_accuracy) = best
        .ok_or_else(|| SvmError::InvalidHyperparams("no grid point trained successfully".into()))?;
    Ok(GridSearchResult {
        best: candidates[k],
        best_accuracy,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_a_separating_configuration() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 20.0;
            x.push(vec![t, 1.0 - t]);
            y.push(if t < 0.5 {
                Label::Positive
            } else {
                Label::Negative
            });
        }
        let base = Hyperparams {
            kernel: KernelSpec::Rbf { gamma: 1.0 },
            ..Default::default()
        };
        let grid = GridSearch {
            folds: 4,
            ..Default::default()
        };
        let r = grid_search(&x, &y, &base, &grid).unwrap();
        assert_eq!(r.points.len(), 12);
        assert!(r.best_accuracy >= 0.9);
        let again = grid_search(&x, &y, &base, &grid).unwrap();
        assert_eq!(again, r);
        // 1/d resolved against width 2
        assert!(r
            .points
            .iter()
            .any(|p| p.kernel == KernelSpec::Rbf { gamma: 0.5 }));
    }
}
