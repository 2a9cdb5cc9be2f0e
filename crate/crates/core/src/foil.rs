//! Propositional FOIL: greedy sequential covering with information gain.

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{Dataset, FeatureKind, Label};
use crate::logic::{clause_head, BoundLiteral, Clause, Hypothesis, Literal, LogicError};

#[derive(Debug, Error)]
pub enum FoilError {
    #[error("no positive examples to cover")]
    NoPositives,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdStrategy {
    /// Midpoints between consecutive distinct values.
    Midpoints,
    /// `k` evenly spaced order statistics.
    Quantiles(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoilParams {
    pub max_clause_length: usize,
    pub min_gain: f64,
    pub thresholds: ThresholdStrategy,
}

impl Default for FoilParams {
    fn default() -> Self {
        FoilParams {
            max_clause_length: 10,
            min_gain: 0.0,
            thresholds: ThresholdStrategy::Midpoints,
        }
    }
}

impl FoilParams {
    pub fn validate(&self) -> Result<(), FoilError> {
        if self.max_clause_length == 0 {
            return Err(FoilError::InvalidParams(
                "max_clause_length must be >= 1".into(),
            ));
        }
        if !(self.min_gain >= 0.0) {
            return Err(FoilError::InvalidParams("min_gain must be >= 0".into()));
        }
        if self.thresholds == ThresholdStrategy::Quantiles(0) {
            return Err(FoilError::InvalidParams(
                "quantile count must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

fn thresholds(values: &[f64], strategy: ThresholdStrategy) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    match strategy {
        ThresholdStrategy::Midpoints => sorted.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect(),
        ThresholdStrategy::Quantiles(k) => {
            if sorted.len() < 2 {
                return Vec::new();
            }
            let n = values.len();
            let mut all = values.to_vec();
            all.sort_by(f64::total_cmp);
            let mut out: Vec<f64> = (1..=k).map(|j| all[(j * n / (k + 1)).min(n - 1)]).collect();
            out.dedup();
            out
        }
    }
}

/// The refinement pool: equality and negated equality for every categorical
/// value, then `f =< t` and `f >= t` for every numeric threshold, in schema
/// order.
pub fn candidate_literals(data: &Dataset, strategy: ThresholdStrategy) -> Vec<Literal> {
    let schema = data.schema();
    let mut out = Vec::new();
    for (f, name) in schema.feature_names().iter().enumerate() {
        match schema.kind(f) {
            FeatureKind::Categorical { domain } => {
                for value in domain {
                    out.push(Literal::CatEq {
                        feature: name.clone(),
                        value: value.clone(),
                    });
                    out.push(Literal::NegCatEq {
                        feature: name.clone(),
                        value: value.clone(),
                    });
                }
            }
            FeatureKind::Numeric => {
                let values: Vec<f64> = data
                    .samples()
                    .iter()
                    .filter_map(|s| s.values[f].as_number())
                    .collect();
                for t in thresholds(&values, strategy) {
                    out.push(Literal::NumRange {
                        feature: name.clone(),
                        lo: f64::NEG_INFINITY,
                        hi: t,
                    });
                    out.push(Literal::NumRange {
                        feature: name.clone(),
                        lo: t,
                        hi: f64::INFINITY,
                    });
                }
            }
        }
    }
    out
}

/// `t * (log2(p1 / (p1 + n1)) - log2(p0 / (p0 + n0)))`, or `-inf` when
/// either clause covers no positives.
pub fn info_gain_counts(p0: usize, n0: usize, p1: usize, n1: usize, t: usize) -> f64 {
    if p0 == 0 || p1 == 0 {
        return f64::NEG_INFINITY;
    }
    let info = |p: usize, n: usize| (p as f64 / (p + n) as f64).log2();
    t as f64 * (info(p1, n1) - info(p0, n0))
}

/// Gain of adding `lit` to `clause`, measured on `pos` and `neg`.
pub fn info_gain(
    lit: &Literal,
    clause: &Clause,
    data: &Dataset,
    pos: &[usize],
    neg: &[usize],
) -> Result<f64, FoilError> {
    let schema = data.schema();
    let before = clause.bind(schema)?;
    let Some(refined) = clause.with_literal(lit.clone()) else {
        return Ok(f64::NEG_INFINITY);
    };
    let after = refined.bind(schema)?;
    let count = |idx: &[usize], c: &crate::logic::BoundClause| {
        idx.iter()
            .filter(|&&i| c.covers(&data.samples()[i]))
            .count()
    };
    let (p0, n0) = (count(pos, &before), count(neg, &before));
    let (p1, n1) = (count(pos, &after), count(neg, &after));
    Ok(info_gain_counts(p0, n0, p1, n1, p1))
}

/// Per-clause coverage on the full training set.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseStats {
    pub covered_pos: usize,
    pub covered_neg: usize,
    /// Positives newly covered when the clause was added.
    pub new_pos: usize,
    /// False when specialization stopped with negatives still covered.
    pub pure: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoilOutput {
    pub hypothesis: Hypothesis,
    pub stats: Vec<ClauseStats>,
    /// Positives left uncovered when the outer loop stopped.
    pub uncovered_pos: usize,
}

/// Sequential covering. The negative set is reset to all negatives at the
/// start of each clause; ties on gain keep the earliest candidate.
pub fn foil_induce(data: &Dataset, params: &FoilParams) -> Result<FoilOutput, FoilError> {
    params.validate()?;
    let schema = data.schema();
    let head = clause_head(schema);
    let samples = data.samples();
    let all_neg: Vec<usize> = (0..samples.len())
        .filter(|&i| samples[i].label == Label::Negative)
        .collect();
    let mut pos: Vec<usize> = (0..samples.len())
        .filter(|&i| samples[i].label == Label::Positive)
        .collect();
    if pos.is_empty() {
        return Err(FoilError::NoPositives);
    }

    let candidates = candidate_literals(data, params.thresholds);
    let bound: Vec<BoundLiteral> = candidates
        .iter()
        .map(|l| l.bind(schema))
        .collect::<Result<_, _>>()?;

    let mut clauses = Vec::new();
    let mut stats = Vec::new();
    while !pos.is_empty() {
        let mut clause = Clause::new(head.clone());
        let mut cur_pos = pos.clone();
        let mut neg = all_neg.clone();
        while !neg.is_empty() && clause.body.len() < params.max_clause_length {
            let (p0, n0) = (cur_pos.len(), neg.len());
            let gains: Vec<f64> = bound
                .par_iter()
                .map(|lit| {
                    let p1 = cur_pos
                        .iter()
                        .filter(|&&i| lit.satisfied(&samples[i]))
                        .count();
                    let n1 = neg.iter().filter(|&&i| lit.satisfied(&samples[i])).count();
                    if p1 == p0 && n1 == n0 {
                        // no refinement at all
                        return f64::NEG_INFINITY;
                    }
                    info_gain_counts(p0, n0, p1, n1, p1)
                })
                .collect();
            let mut best: Option<(usize, f64)> = None;
            for (k, &g) in gains.iter().enumerate() {
                if g > params.min_gain && best.is_none_or(|(_, b)| g > b) {
                    best = Some((k, g));
                }
            }
            let Some((k, _)) = best else { break };
            let Some(next) = clause.with_literal(candidates[k].clone()) else {
                break;
            };
            clause = next;
            cur_pos.retain(|&i| bound[k].satisfied(&samples[i]));
            neg.retain(|&i| bound[k].satisfied(&samples[i]));
        }
        if clause.body.is_empty() && !neg.is_empty() {
            // nothing separates the remaining positives
            break;
        }
        let b = clause.bind(schema)?;
        let covered_pos = samples
            .iter()
            .filter(|s| s.label == Label::Positive && b.covers(s))
            .count();
        let covered_neg = samples
            .iter()
            .filter(|s| s.label == Label::Negative && b.covers(s))
            .count();
        stats.push(ClauseStats {
            covered_pos,
            covered_neg,
            new_pos: cur_pos.len(),
            pure: neg.is_empty(),
        });
        pos.retain(|i| !cur_pos.contains(i));
        clauses.push(clause);
    }
    Ok(FoilOutput {
        hypothesis: Hypothesis::new(clauses),
        uncovered_pos: pos.len(),
        stats,
    })
}
