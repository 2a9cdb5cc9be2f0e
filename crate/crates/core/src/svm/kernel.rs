use std::fmt;

use super::SvmError;

/// Kernel function family and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    /// `(gamma * <x, z> + coef0) ^ degree`
    Polynomial {
        degree: u32,
        gamma: f64,
        coef0: f64,
    },
    /// `exp(-gamma * |x - z|^2)`
    Rbf {
        gamma: f64,
    },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial {
                degree,
                gamma,
                coef0,
            } => {
                if degree < 1 {
                    return Err(SvmError::InvalidHyperparams("degree must be >= 1".into()));
                }
                if !(gamma > 0.0 && gamma.is_finite()) || !coef0.is_finite() {
                    return Err(SvmError::InvalidHyperparams(format!(
                        "polynomial kernel needs gamma > 0 and finite coef0, got gamma={gamma} coef0={coef0}"
                    )));
                }
                Ok(())
            }
            KernelSpec::Rbf { gamma } => {
                if gamma > 0.0 && gamma.is_finite() {
                    Ok(())
                } else {
                    Err(SvmError::InvalidHyperparams(format!(
                        "rbf kernel needs gamma > 0, got {gamma}"
                    )))
                }
            }
        }
    }

    /// Unchecked evaluation; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn compute(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Polynomial {
                degree,
                gamma,
                coef0,
            } => self.from_dot(gamma * dot(x, z) + coef0, degree),
            KernelSpec::Rbf { gamma } => (-gamma * sq_dist(x, z)).exp(),
        }
    }

    #[inline]
    fn from_dot(&self, base: f64, degree: u32) -> f64 {
        base.powi(degree as i32)
    }

    /// Kernel value given the sufficient statistic the family depends on:
    /// the dot product for linear/polynomial, the squared distance for rbf.
    #[inline]
    pub(crate) fn from_statistic(&self, stat: f64) -> f64 {
        match *self {
            KernelSpec::Linear => stat,
            KernelSpec::Polynomial {
                degree,
                gamma,
                coef0,
            } => self.from_dot(gamma * stat + coef0, degree),
            KernelSpec::Rbf { gamma } => (-gamma * stat).exp(),
        }
    }

    pub(crate) fn uses_distance(&self) -> bool {
        matches!(self, KernelSpec::Rbf { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Polynomial { .. } => "poly",
            KernelSpec::Rbf { .. } => "rbf",
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Polynomial {
                degree,
                gamma,
                coef0,
            } => {
                write!(f, "poly(degree={degree}, gamma={gamma}, coef0={coef0})")
            }
            KernelSpec::Rbf { gamma } => write!(f, "rbf(gamma={gamma})"),
        }
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], z: &[f64]) -> f64 {
    x.iter()
        .zip(z)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum()
}

/// Checked kernel evaluation.
pub fn kernel_eval(kernel: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64, SvmError> {
    if x.len() != z.len() {
        return Err(SvmError::DimensionMismatch {
            expected: x.len(),
            found: z.len(),
        });
    }
    Ok(kernel.compute(x, z))
}
