//! Explaining kernel SVMs with logic programs.
//!
//! The pipeline trains a soft-margin SVM on one-hot encoded tabular data,
//! attributes the decision value of each true-positive support vector to the
//! encoded columns with Shapley values, and grows one clause per support
//! vector from the features pushing it toward the positive class. A classic
//! FOIL learner over the same literal language serves as the baseline.

pub mod dataset;
pub mod eval;
pub mod foil;
pub mod logic;
pub mod shap;
pub mod shapfoil;
pub mod svm;
pub mod synth;
