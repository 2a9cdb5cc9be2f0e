//! One train/test split of the full comparison: SVM, SHAP-FOIL on that SVM,
//! and FOIL on the raw training rows, all scored on the held-out rows.

use anyhow::{Context, Result};
use shapfoil_core::dataset::{binarize, split, Dataset};
use shapfoil_core::eval::{evaluate, EvalReport, Predictor};
use shapfoil_core::foil::{foil_induce, FoilOutput, FoilParams};
use shapfoil_core::shapfoil::{shap_foil, ShapFoilOutput, ShapFoilParams};
use shapfoil_core::svm::{grid_search, train, GridSearch, Hyperparams, SvmModel};

/// Fixed hyperparameters, or a grid search seeded per split.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelChoice {
    Fixed(Hyperparams),
    /// Family, degree and coef0 come from `base`; C and gamma from the grid.
    Grid {
        base: Hyperparams,
        grid: GridSearch,
    },
}

#[derive(Debug, Clone)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub standardize: bool,
    pub model: ModelChoice,
    pub shapfoil: ShapFoilParams,
    pub foil: FoilParams,
}

pub struct SplitRun {
    pub seed: u64,
    pub hyperparams: Hyperparams,
    pub model: SvmModel,
    pub svm: EvalReport,
    pub shapfoil: EvalReport,
    pub foil: EvalReport,
    pub shapfoil_out: ShapFoilOutput,
    pub foil_out: FoilOutput,
}

pub fn fit_model(
    x: &[Vec<f64>],
    data: &Dataset,
    choice: &ModelChoice,
    seed: u64,
) -> Result<(Hyperparams, SvmModel)> {
    let y = data.labels();
    let h = match choice {
        ModelChoice::Fixed(h) => Hyperparams { seed, ..*h },
        ModelChoice::Grid { base, grid } => {
            let grid = GridSearch {
                seed,
                ..grid.clone()
            };
            let found =
                grid_search(x, &y, &Hyperparams { seed, ..*base }, &grid).context("grid search")?;
            found.best
        }
    };
    let model = train(x, &y, &h).context("training the svm")?;
    Ok((h, model))
}

pub fn run_split(data: &Dataset, seed: u64, cfg: &SplitConfig) -> Result<SplitRun> {
    let (train_set, test_set) = split(data, cfg.test_fraction, seed)?;
    let enc = binarize(&train_set, cfg.standardize);
    let (hyperparams, model) = fit_model(&enc.rows, &train_set, &cfg.model, seed)?;
    let sf_params = ShapFoilParams {
        shap: shapfoil_core::shap::ShapParams {
            seed,
            ..cfg.shapfoil.shap
        },
        ..cfg.shapfoil.clone()
    };
    let shapfoil_out = shap_foil(&model, &train_set, &enc, &sf_params)?;
    let foil_out = foil_induce(&train_set, &cfg.foil)?;

    let svm = evaluate(
        Predictor::Model {
            model: &model,
            encoding: &enc.encoding,
        },
        &test_set,
    )?;
    let shapfoil = evaluate(
        Predictor::Both {
            rules: &shapfoil_out.hypothesis,
            model: &model,
            encoding: &enc.encoding,
        },
        &test_set,
    )?;
    let foil = evaluate(Predictor::Rules(&foil_out.hypothesis), &test_set)?;
    Ok(SplitRun {
        seed,
        hyperparams,
        model,
        svm,
        shapfoil,
        foil,
        shapfoil_out,
        foil_out,
    })
}
