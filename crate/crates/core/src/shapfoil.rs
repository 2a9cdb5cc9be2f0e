//! Support-vector driven sequential covering.
//!
//! Each round annotates every remaining sample with its most similar true
//! positive support vector, picks the vector that attracted the most samples,
//! and grows a clause from the columns whose Shapley values push that vector
//! toward the positive class. Clauses below the purity threshold are
//! discarded; the vector is retired either way.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{
    binarize, BinarizedMatrix, Column, Dataset, DatasetError, FeatureKind, Label,
};
use crate::logic::{clause_head, BoundLiteral, Clause, Hypothesis, Literal, LogicError};
use crate::shap::{self, Explained, ShapError, ShapParams, ShapResult, ValueFunctionMode};
use crate::svm::{SvmError, SvmModel};

#[derive(Debug, Error)]
pub enum ShapFoilError {
    #[error("the model has no true-positive support vectors")]
    NoTruePositiveSvs,
    #[error("no support vectors to annotate with")]
    EmptySupportSet,
    #[error("no column has a positive attribution")]
    NoExplainingFeatures,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("attribution rows missing for support vector at training row {0}")]
    MissingShapRow(usize),
    #[error(transparent)]
    Shap(#[from] ShapError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

pub type Result<T> = std::result::Result<T, ShapFoilError>;

/// Which annotated samples bound a numeric interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalSource {
    /// Every sample annotated to the support vector.
    Annotated,
    /// Only the positive samples annotated to it.
    AnnotatedPositives,
}

impl fmt::Display for IntervalSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntervalSource::Annotated => "annotated",
            IntervalSource::AnnotatedPositives => "annotated-positives",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapFoilParams {
    /// Purity a clause must reach on the remaining samples.
    pub theta: f64,
    pub max_literals: usize,
    pub shap: ShapParams,
    /// Cap on background rows for the marginalized value function; larger
    /// training sets are subsampled with `shap.seed`. `None` uses every row.
    pub background_limit: Option<usize>,
    pub interval_source: IntervalSource,
}

impl Default for ShapFoilParams {
    fn default() -> Self {
        ShapFoilParams {
            theta: 0.85,
            max_literals: 10,
            shap: ShapParams::default(),
            background_limit: None,
            interval_source: IntervalSource::AnnotatedPositives,
        }
    }
}

impl ShapFoilParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(ShapFoilError::InvalidParams(format!(
                "theta {} not in (0, 1]",
                self.theta
            )));
        }
        if self.max_literals == 0 {
            return Err(ShapFoilError::InvalidParams(
                "max_literals must be >= 1".into(),
            ));
        }
        if self.background_limit == Some(0) {
            return Err(ShapFoilError::InvalidParams(
                "background_limit must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Support vector index (into the model) → annotated sample indices.
/// Every vector in the support set has an entry, possibly empty.
pub type SimMap = BTreeMap<usize, Vec<usize>>;

/// Assigns each sample in `remaining` to the support vector in `support`
/// with the largest similarity; ties go to the lowest vector index.
pub fn annotate_samples(
    model: &SvmModel,
    support: &[usize],
    x: &[Vec<f64>],
    remaining: &[usize],
) -> Result<SimMap> {
    if support.is_empty() {
        return Err(ShapFoilError::EmptySupportSet);
    }
    let mut order = support.to_vec();
    order.sort_unstable();
    order.dedup();
    let owners: Vec<usize> = remaining
        .par_iter()
        .map(|&i| {
            let mut best = order[0];
            let mut best_sim = model.similarity_unchecked(best, &x[i]);
            for &s in &order[1..] {
                let sim = model.similarity_unchecked(s, &x[i]);
                if sim > best_sim {
                    best = s;
                    best_sim = sim;
                }
            }
            best
        })
        .collect();
    let mut map: SimMap = order.iter().map(|&s| (s, Vec::new())).collect();
    for (&i, owner) in remaining.iter().zip(owners) {
        map.get_mut(&owner)
            .expect("owner is in the support set")
            .push(i);
    }
    Ok(map)
}

/// The vector with the most annotated samples, lowest index on ties.
pub fn select_support_vector(map: &SimMap) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for (&sv, list) in map {
        if best.is_none_or(|(_, n)| list.len() > n) {
            best = Some((sv, list.len()));
        }
    }
    best.map(|(sv, _)| sv)
}

/// Literals for the columns with positive attribution, strongest first
/// (column index on ties). Indicators become equality or negated equality
/// depending on the support vector's value; numeric columns become the
/// interval spanned by `interval_rows` in original units. A literal implied
/// by earlier ones on the same feature is skipped.
pub fn build_literals_for_sv(
    sv_row: &[f64],
    phi: &[f64],
    encoded: &BinarizedMatrix,
    data: &Dataset,
    interval_rows: &[usize],
) -> Result<Vec<Literal>> {
    let schema = data.schema();
    let columns = encoded.column_map();
    let mut allowed: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
    let mut out = Vec::new();
    for c in shap::order_by_phi(phi) {
        if phi[c] <= 0.0 {
            break;
        }
        match columns[c] {
            Column::Indicator { feature, value } => {
                let FeatureKind::Categorical { domain } = schema.kind(feature) else {
                    unreachable!("indicator columns come from categorical features");
                };
                let name = schema.feature_names()[feature].clone();
                let token = domain[value as usize].clone();
                let set = allowed
                    .entry(feature)
                    .or_insert_with(|| vec![true; domain.len()]);
                let before = set.iter().filter(|&&a| a).count();
                let lit = if sv_row[c] > 0.5 {
                    set.iter_mut()
                        .enumerate()
                        .for_each(|(k, a)| *a &= k == value as usize);
                    Literal::CatEq {
                        feature: name,
                        value: token,
                    }
                } else {
                    set[value as usize] = false;
                    Literal::NegCatEq {
                        feature: name,
                        value: token,
                    }
                };
                if set.iter().filter(|&&a| a).count() < before {
                    out.push(lit);
                }
            }
            Column::Numeric { feature } => {
                let values = interval_rows
                    .iter()
                    .filter_map(|&i| data.samples()[i].values[feature].as_number());
                let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
                let (lo, hi) = if lo <= hi {
                    (lo, hi)
                } else {
                    let own = encoded.encoding.decode_numeric(c, sv_row[c]);
                    (own, own)
                };
                out.push(Literal::NumRange {
                    feature: schema.feature_names()[feature].clone(),
                    lo,
                    hi,
                });
            }
        }
    }
    if out.is_empty() {
        return Err(ShapFoilError::NoExplainingFeatures);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Specialized {
    Accepted {
        clause: Clause,
        precision: f64,
        covered_pos: Vec<usize>,
        covered_neg: usize,
    },
    Rejected {
        /// The most specific clause tried.
        clause: Clause,
        /// Precision of that clause; `None` when it covered nothing.
        precision: Option<f64>,
        covered_pos: usize,
        covered_neg: usize,
    },
}

/// Adds literals in order until the clause's precision on `remaining`
/// reaches `theta`. Rejected when the budget runs out first or the clause
/// covers no positive.
pub fn specialize(
    head: &str,
    literals: &[Literal],
    data: &Dataset,
    remaining: &[usize],
    theta: f64,
    max_literals: usize,
) -> Result<Specialized> {
    let schema = data.schema();
    let samples = data.samples();
    let mut clause = Clause::new(head);
    let mut covered: Vec<usize> = remaining.to_vec();
    let mut precision = None;
    for lit in literals.iter().take(max_literals) {
        let bound: BoundLiteral = lit.bind(schema)?;
        clause = clause.with_literal(lit.clone()).unwrap_or(clause);
        covered.retain(|&i| bound.satisfied(&samples[i]));
        let pos = covered
            .iter()
            .filter(|&&i| samples[i].label.is_positive())
            .count();
        if pos == 0 {
            precision = (!covered.is_empty()).then_some(0.0);
            break;
        }
        let p = pos as f64 / covered.len() as f64;
        precision = Some(p);
        if p >= theta {
            let (covered_pos, negs): (Vec<usize>, Vec<usize>) = covered
                .iter()
                .partition(|&&i| samples[i].label.is_positive());
            return Ok(Specialized::Accepted {
                clause,
                precision: p,
                covered_pos,
                covered_neg: negs.len(),
            });
        }
    }
    let covered_pos = covered
        .iter()
        .filter(|&&i| samples[i].label.is_positive())
        .count();
    Ok(Specialized::Rejected {
        clause,
        precision,
        covered_pos,
        covered_neg: covered.len() - covered_pos,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accepted,
    Rejected,
    NoExplainingFeatures,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Accepted => "accepted",
            Outcome::Rejected => "rejected",
            Outcome::NoExplainingFeatures => "no-explaining-features",
        })
    }
}

/// One round of the covering loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditEntry {
    pub round: usize,
    /// Index of the support vector in the model.
    pub sv: usize,
    /// Training row of the support vector.
    pub row: usize,
    pub annotated: usize,
    pub annotated_pos: usize,
    /// Positively attributed columns, strongest first.
    pub phi_order: Vec<(String, f64)>,
    pub clause: Option<Clause>,
    pub outcome: Outcome,
    pub precision: Option<f64>,
    pub covered_pos: usize,
    pub covered_neg: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapFoilOutput {
    pub hypothesis: Hypothesis,
    pub audit: Vec<AuditEntry>,
    pub shap: ShapResult,
    /// Positives no accepted clause covers.
    pub uncovered_pos: usize,
}

impl ShapFoilOutput {
    pub fn rejections(&self) -> usize {
        self.audit
            .iter()
            .filter(|a| a.outcome == Outcome::Rejected)
            .count()
    }
}

/// Training rows used as the marginalization background.
pub fn background_rows(n: usize, limit: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if n > limit {
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        idx.truncate(limit);
        idx.sort_unstable();
    }
    idx
}

/// Attributions for the model's true-positive support vectors, keyed by
/// training row.
pub fn support_vector_shap(
    model: &SvmModel,
    data: &Dataset,
    encoded: &BinarizedMatrix,
    params: &ShapFoilParams,
) -> Result<ShapResult> {
    let labels = data.labels();
    let tp = model.true_positive_svs(&labels);
    if tp.is_empty() {
        return Err(ShapFoilError::NoTruePositiveSvs);
    }
    let rows: Vec<usize> = tp.iter().map(|&k| model.sv_original_indices[k]).collect();
    let background = background_rows(
        encoded.rows.len(),
        params.background_limit.unwrap_or(usize::MAX),
        params.shap.seed,
    )
    .into_iter()
    .map(|i| encoded.rows[i].clone())
    .collect();
    Ok(shap::shap_matrix(
        Explained::Model(model),
        &encoded.rows,
        &rows,
        &ValueFunctionMode::Marginalize { background },
        &params.shap,
        encoded.encoding.column_names(),
    )?)
}

/// Runs the covering loop with attributions computed on the fly.
pub fn shap_foil(
    model: &SvmModel,
    data: &Dataset,
    encoded: &BinarizedMatrix,
    params: &ShapFoilParams,
) -> Result<ShapFoilOutput> {
    params.validate()?;
    let shap = support_vector_shap(model, data, encoded, params)?;
    shap_foil_with(model, data, encoded, shap, params)
}

/// Runs the covering loop with precomputed attributions for (at least) the
/// true-positive support vectors.
pub fn shap_foil_with(
    model: &SvmModel,
    data: &Dataset,
    encoded: &BinarizedMatrix,
    shap: ShapResult,
    params: &ShapFoilParams,
) -> Result<ShapFoilOutput> {
    params.validate()?;
    let labels = data.labels();
    let mut support = model.true_positive_svs(&labels);
    if support.is_empty() {
        return Err(ShapFoilError::NoTruePositiveSvs);
    }
    for &k in &support {
        let row = model.sv_original_indices[k];
        if shap.row_of(row).is_none() {
            return Err(ShapFoilError::MissingShapRow(row));
        }
    }
    let head = clause_head(data.schema());
    let names = encoded.encoding.column_names();
    let samples = data.samples();
    let mut remaining: Vec<usize> = (0..samples.len()).collect();
    let positives_left = |r: &[usize]| {
        r.iter()
            .filter(|&&i| samples[i].label.is_positive())
            .count()
    };
    let mut clauses = Vec::new();
    let mut audit = Vec::new();

    while !support.is_empty() && positives_left(&remaining) > 0 {
        let map = annotate_samples(model, &support, &encoded.rows, &remaining)?;
        let sv = select_support_vector(&map).expect("support set is non-empty");
        let row = model.sv_original_indices[sv];
        let phi = shap.row_of(row).expect("checked above");
        let annotated = &map[&sv];
        let annotated_pos: Vec<usize> = annotated
            .iter()
            .copied()
            .filter(|&i| samples[i].label.is_positive())
            .collect();
        let interval_rows = match params.interval_source {
            IntervalSource::Annotated => annotated.as_slice(),
            IntervalSource::AnnotatedPositives => annotated_pos.as_slice(),
        };
        let phi_order: Vec<(String, f64)> = shap::order_by_phi(phi)
            .into_iter()
            .filter(|&c| phi[c] > 0.0)
            .map(|c| (names[c].clone(), phi[c]))
            .collect();
        let mut entry = AuditEntry {
            round: audit.len() + 1,
            sv,
            row,
            annotated: annotated.len(),
            annotated_pos: annotated_pos.len(),
            phi_order,
            clause: None,
            outcome: Outcome::NoExplainingFeatures,
            precision: None,
            covered_pos: 0,
            covered_neg: 0,
        };
        match build_literals_for_sv(
            &model.support_vectors[sv],
            phi,
            encoded,
            data,
            interval_rows,
        ) {
            Err(ShapFoilError::NoExplainingFeatures) => {}
            Err(e) => return Err(e),
            Ok(literals) => match specialize(
                &head,
                &literals,
                data,
                &remaining,
                params.theta,
                params.max_literals,
            )? {
                Specialized::Accepted {
                    clause,
                    precision,
                    covered_pos,
                    covered_neg,
                } => {
                    entry.outcome = Outcome::Accepted;
                    entry.precision = Some(precision);
                    entry.covered_pos = covered_pos.len();
                    entry.covered_neg = covered_neg;
                    entry.clause = Some(clause.clone());
                    remaining.retain(|i| covered_pos.binary_search(i).is_err());
                    clauses.push(clause);
                }
                Specialized::Rejected {
                    clause,
                    precision,
                    covered_pos,
                    covered_neg,
                } => {
                    entry.outcome = Outcome::Rejected;
                    entry.precision = precision;
                    entry.covered_pos = covered_pos;
                    entry.covered_neg = covered_neg;
                    entry.clause = Some(clause);
                }
            },
        }
        audit.push(entry);
        support.retain(|&s| s != sv);
    }
    Ok(ShapFoilOutput {
        hypothesis: Hypothesis::new(clauses),
        uncovered_pos: positives_left(&remaining),
        audit,
        shap,
    })
}

/// Plain-text audit, one block per round.
pub fn render_audit(audit: &[AuditEntry], decimals: usize) -> String {
    let mut out = String::new();
    for a in audit {
        let _ = writeln!(
            out,
            "round {} sv {} (row {}) annotated {} ({} positive): {}",
            a.round, a.sv, a.row, a.annotated, a.annotated_pos, a.outcome
        );
        let order: Vec<String> = a
            .phi_order
            .iter()
            .map(|(n, p)| format!("{n}={p:.4}"))
            .collect();
        let _ = writeln!(
            out,
            "  phi order: {}",
            if order.is_empty() {
                "-".into()
            } else {
                order.join(" ")
            }
        );
        if let Some(c) = &a.clause {
            let _ = writeln!(
                out,
                "  clause: {}",
                crate::logic::serialize_clause(c, decimals)
            );
        }
        match a.precision {
            Some(p) => {
                let _ = writeln!(
                    out,
                    "  precision {p:.4} covered {} positive {} negative",
                    a.covered_pos, a.covered_neg
                );
            }
            None => {
                let _ = writeln!(out, "  precision -");
            }
        }
    }
    out
}

/// Learns a hypothesis for each class: as given, then with labels swapped
/// and a freshly trained model.
pub fn induce_both_classes<F>(
    data: &Dataset,
    standardize: bool,
    params: &ShapFoilParams,
    train: F,
) -> Result<(ShapFoilOutput, ShapFoilOutput)>
where
    F: Fn(&[Vec<f64>], &[Label]) -> std::result::Result<SvmModel, SvmError>,
{
    data.require_both_classes(1)?;
    let encoded = binarize(data, standardize);
    let model = train(&encoded.rows, &data.labels())?;
    let pos = shap_foil(&model, data, &encoded, params)?;
    let flipped = data.flipped();
    let model = train(&encoded.rows, &flipped.labels())?;
    let neg = shap_foil(&model, &flipped, &encoded, params)?;
    Ok((pos, neg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Sample, Schema, Value};
    use crate::svm::KernelSpec;
    use std::sync::Arc;

    fn model(svs: Vec<Vec<f64>>, alphas: Vec<f64>) -> SvmModel {
        let n = svs.len();
        SvmModel {
            support_vectors: svs,
            sv_labels: vec![Label::Positive; n],
            alphas,
            bias: 0.0,
            kernel: KernelSpec::Rbf { gamma: 1.0 },
            sv_original_indices: (0..n).collect(),
        }
    }

    #[test]
    fn annotation_examples() {
        let m = model(vec![vec![0.0, 0.0], vec![5.0, 5.0]], vec![1.0, 1.0]);
        let x = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.2],
            vec![5.0, 5.0],
            vec![4.0, 5.5],
        ];
        let map = annotate_samples(&m, &[0, 1], &x, &[0, 1, 2, 3]).unwrap();
        assert_eq!(map[&0], vec![0, 1]);
        assert_eq!(map[&1], vec![2, 3]);
        let single = annotate_samples(&m, &[1], &x, &[0, 1, 2, 3]).unwrap();
        assert_eq!(single[&1], vec![0, 1, 2, 3]);
        assert!(matches!(
            annotate_samples(&m, &[], &x, &[0]),
            Err(ShapFoilError::EmptySupportSet)
        ));
    }

    #[test]
    fn selection_examples() {
        let map: SimMap = [
            (0, vec![1, 2, 3]),
            (1, vec![4, 5, 6, 7, 8]),
            (2, vec![9, 10]),
        ]
        .into();
        assert_eq!(select_support_vector(&map), Some(1));
        let empty: SimMap = [(3, vec![]), (5, vec![])].into();
        assert_eq!(select_support_vector(&empty), Some(3));
        let tie: SimMap = [(2, vec![0, 1, 2, 3]), (7, vec![4, 5, 6, 8])].into();
        assert_eq!(select_support_vector(&tie), Some(2));
    }

    fn heartish() -> (Dataset, BinarizedMatrix) {
        let schema = Schema::new(
            vec![
                (
                    "thal".into(),
                    FeatureKind::categorical(["3", "6", "7"]).unwrap(),
                ),
                (
                    "major_vessels".into(),
                    FeatureKind::categorical(["0", "1", "2", "3"]).unwrap(),
                ),
                ("age".into(), FeatureKind::Numeric),
            ],
            "heart_disease",
            "yes",
            None,
        )
        .unwrap();
        let mk = |t: u32, v: u32, a: f64, p: bool| Sample {
            values: vec![Value::Category(t), Value::Category(v), Value::Number(a)],
            label: if p { Label::Positive } else { Label::Negative },
        };
        let data = Dataset::new(
            Arc::new(schema),
            vec![
                mk(2, 1, 40.0, true),
                mk(2, 2, 52.0, true),
                mk(0, 0, 35.0, false),
                mk(1, 0, 60.0, false),
            ],
        )
        .unwrap();
        let enc = binarize(&data, true);
        (data, enc)
    }

    #[test]
    fn literal_construction() {
        let (data, enc) = heartish();
        // columns: thal_3 thal_6 thal_7 mv_0 mv_1 mv_2 mv_3 age
        let phi = [0.0, -0.1, 0.9, 0.5, 0.0, 0.0, 0.0, 0.3];
        let lits = build_literals_for_sv(&enc.rows[0], &phi, &enc, &data, &[0, 1]).unwrap();
        assert_eq!(
            lits,
            vec![
                Literal::CatEq {
                    feature: "thal".into(),
                    value: "7".into()
                },
                Literal::NegCatEq {
                    feature: "major_vessels".into(),
                    value: "0".into()
                },
                Literal::NumRange {
                    feature: "age".into(),
                    lo: 40.0,
                    hi: 52.0
                },
            ]
        );
        assert!(matches!(
            build_literals_for_sv(&enc.rows[0], &[-1.0; 8], &enc, &data, &[0]),
            Err(ShapFoilError::NoExplainingFeatures)
        ));
        // thal = 7 already implies thal != 3
        let phi = [0.2, 0.0, 0.9, 0.0, 0.0, 0.0, 0.0, 0.0];
        let lits = build_literals_for_sv(&enc.rows[0], &phi, &enc, &data, &[0]).unwrap();
        assert_eq!(lits.len(), 1);
    }

    #[test]
    fn specialization_stops_early_or_rejects() {
        let (data, _) = heartish();
        let thal7 = Literal::CatEq {
            feature: "thal".into(),
            value: "7".into(),
        };
        let wide = Literal::NumRange {
            feature: "age".into(),
            lo: 30.0,
            hi: 70.0,
        };
        match specialize(
            "h",
            &[thal7.clone(), wide.clone()],
            &data,
            &[0, 1, 2, 3],
            0.85,
            10,
        )
        .unwrap()
        {
            Specialized::Accepted {
                clause, precision, ..
            } => {
                assert_eq!(clause.body, vec![thal7]);
                assert_eq!(precision, 1.0);
            }
            other => panic!("{other:?}"),
        }
        match specialize("h", &[wide], &data, &[0, 1, 2, 3], 0.85, 10).unwrap() {
            Specialized::Rejected {
                precision,
                covered_pos,
                covered_neg,
                ..
            } => assert_eq!((precision, covered_pos, covered_neg), (Some(0.5), 2, 2)),
            other => panic!("{other:?}"),
        }
    }
}
