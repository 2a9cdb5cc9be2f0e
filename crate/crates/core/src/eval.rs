//! Confusion-matrix metrics, rule/model fidelity and side-by-side reports.
//!
//! Zero denominators resolve to 0: a classifier that never predicts the
//! positive class has precision 0, and F1 is 0 whenever P + R = 0.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dataset::{Dataset, Encoding, Label};
use crate::logic::{serialize_prolog, Hypothesis, LogicError, DEFAULT_DECIMALS};
use crate::svm::{SvmError, SvmModel};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error("encoding was fitted on features {expected:?}, test data has {found:?}")]
    SchemaMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("invalid report csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    /// Counts `(predicted, actual)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut c = Confusion::default();
        for (pred, actual) in pairs {
            match (pred.is_positive(), actual.is_positive()) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProgramSize {
    pub clauses: usize,
    pub literals: usize,
    /// Lines of the serialized program (one clause per line).
    pub lines: usize,
}

impl ProgramSize {
    pub fn of(h: &Hypothesis) -> Self {
        ProgramSize {
            clauses: h.len(),
            literals: h.literal_count(),
            lines: serialize_prolog(h, DEFAULT_DECIMALS).lines().count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    /// Share of samples where the rules agree with the model; needs both.
    pub fidelity: Option<f64>,
    pub program_size: Option<ProgramSize>,
}

impl EvalReport {
    pub fn from_confusion(confusion: Confusion) -> Self {
        EvalReport {
            confusion,
            precision: confusion.precision(),
            recall: confusion.recall(),
            accuracy: confusion.accuracy(),
            f1: confusion.f1(),
            fidelity: None,
            program_size: None,
        }
    }

    /// Element-wise mean over several runs. Counts are summed, rates are
    /// averaged per run (macro average), program sizes are averaged and
    /// rounded to the nearest integer.
    pub fn mean(reports: &[EvalReport]) -> Option<EvalReport> {
        let n = reports.len();
        if n == 0 {
            return None;
        }
        let avg = |f: &dyn Fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n as f64;
        let mut confusion = Confusion::default();
        for r in reports {
            confusion.tp += r.confusion.tp;
            confusion.fp += r.confusion.fp;
            confusion.tn += r.confusion.tn;
            confusion.fn_ += r.confusion.fn_;
        }
        let all = |pick: fn(&EvalReport) -> Option<f64>| -> Option<f64> {
            let vals: Option<Vec<f64>> = reports.iter().map(pick).collect();
            vals.map(|v| v.iter().sum::<f64>() / n as f64)
        };
        let sizes: Option<Vec<ProgramSize>> = reports.iter().map(|r| r.program_size).collect();
        let program_size = sizes.map(|s| {
            let mean = |f: fn(&ProgramSize) -> usize| {
                (s.iter().map(f).sum::<usize>() as f64 / n as f64).round() as usize
            };
            ProgramSize {
                clauses: mean(|p| p.clauses),
                literals: mean(|p| p.literals),
                lines: mean(|p| p.lines),
            }
        });
        Some(EvalReport {
            confusion,
            precision: avg(&|r| r.precision),
            recall: avg(&|r| r.recall),
            accuracy: avg(&|r| r.accuracy),
            f1: avg(&|r| r.f1),
            fidelity: all(|r| r.fidelity),
            program_size,
        })
    }
}

/// What to score against the test labels.
#[derive(Debug, Clone, Copy)]
pub enum Predictor<'a> {
    Rules(&'a Hypothesis),
    Model {
        model: &'a SvmModel,
        encoding: &'a Encoding,
    },
    /// Metrics come from the rules; fidelity compares them with the model.
    Both {
        rules: &'a Hypothesis,
        model: &'a SvmModel,
        encoding: &'a Encoding,
    },
}

pub fn rule_predictions(h: &Hypothesis, data: &Dataset) -> Result<Vec<Label>, EvalError> {
    let bound = h.bind(data.schema())?;
    Ok(data.samples().iter().map(|s| bound.predict(s)).collect())
}

pub fn model_predictions(
    model: &SvmModel,
    encoding: &Encoding,
    data: &Dataset,
) -> Result<Vec<Label>, EvalError> {
    let expected = encoding.schema().feature_names();
    let found = data.schema().feature_names();
    if expected != found {
        return Err(EvalError::SchemaMismatch {
            expected: expected.to_vec(),
            found: found.to_vec(),
        });
    }
    data.samples()
        .iter()
        .map(|s| Ok(model.classify(&encoding.encode(s))?))
        .collect()
}

/// Accuracy of the rules measured against the model's predictions.
pub fn fidelity(
    h: &Hypothesis,
    model: &SvmModel,
    encoding: &Encoding,
    data: &Dataset,
) -> Result<f64, EvalError> {
    let rules = rule_predictions(h, data)?;
    let svm = model_predictions(model, encoding, data)?;
    Ok(Confusion::from_pairs(rules.into_iter().zip(svm)).accuracy())
}

pub fn evaluate(predictor: Predictor<'_>, test: &Dataset) -> Result<EvalReport, EvalError> {
    let actual = test.labels();
    let score = |pred: Vec<Label>| {
        EvalReport::from_confusion(Confusion::from_pairs(
            pred.into_iter().zip(actual.iter().copied()),
        ))
    };
    Ok(match predictor {
        Predictor::Rules(h) => EvalReport {
            program_size: Some(ProgramSize::of(h)),
            ..score(rule_predictions(h, test)?)
        },
        Predictor::Model { model, encoding } => score(model_predictions(model, encoding, test)?),
        Predictor::Both {
            rules,
            model,
            encoding,
        } => EvalReport {
            fidelity: Some(fidelity(rules, model, encoding, test)?),
            program_size: Some(ProgramSize::of(rules)),
            ..score(rule_predictions(rules, test)?)
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

pub const CSV_HEADER: [&str; 13] = [
    "system",
    "tp",
    "fp",
    "tn",
    "fn",
    "precision",
    "recall",
    "accuracy",
    "f1",
    "fidelity",
    "clauses",
    "literals",
    "lines",
];

/// Side-by-side comparison of labelled reports: a metrics table, then a
/// program-size table for every report that carries rules. CSV mode emits a
/// single table with one row per system; absent values are empty cells.
pub fn compare_report(reports: &[(String, EvalReport)], format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => text_report(reports),
        ReportFormat::Csv => csv_report(reports),
    }
}

fn text_report(reports: &[(String, EvalReport)]) -> String {
    let width = reports
        .iter()
        .map(|(l, _)| l.len())
        .max()
        .unwrap_or(0)
        .max(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>6}  {:>8}  {:>5}  {:>8}",
        "system", "precision", "recall", "accuracy", "f1", "fidelity"
    );
    for (label, r) in reports {
        let fid = r
            .fidelity
            .map_or_else(|| "-".to_string(), |f| format!("{f:.3}"));
        let _ = writeln!(
            out,
            "{label:<width$}  {:>9.3}  {:>6.3}  {:>8.3}  {:>5.3}  {fid:>8}",
            r.precision, r.recall, r.accuracy, r.f1
        );
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "{:<width$}  {:>7}  {:>8}  {:>5}",
        "system", "clauses", "literals", "lines"
    );
    for (label, r) in reports {
        if let Some(p) = r.program_size {
            let _ = writeln!(
                out,
                "{label:<width$}  {:>7}  {:>8}  {:>5}",
                p.clauses, p.literals, p.lines
            );
        }
    }
    out
}

fn csv_report(reports: &[(String, EvalReport)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for (label, r) in reports {
        let c = r.confusion;
        let opt = |v: Option<String>| v.unwrap_or_default();
        let p = r.program_size;
        w.write_record([
            label.clone(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            c.fn_.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.accuracy.to_string(),
            r.f1.to_string(),
            opt(r.fidelity.map(|f| f.to_string())),
            opt(p.map(|p| p.clauses.to_string())),
            opt(p.map(|p| p.literals.to_string())),
            opt(p.map(|p| p.lines.to_string())),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Parses the output of [`compare_report`] in CSV mode.
pub fn read_compare_csv(text: &str) -> Result<Vec<(String, EvalReport)>, EvalError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| EvalError::Csv(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(EvalError::Csv(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| EvalError::Csv(e.to_string()))?;
        let bad = |i: usize| EvalError::Csv(format!("bad `{}` value `{}`", CSV_HEADER[i], &rec[i]));
        let count = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(i));
        let real = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(i));
        let program_size = if rec[10].is_empty() {
            None
        } else {
            Some(ProgramSize {
                clauses: count(10)?,
                literals: count(11)?,
                lines: count(12)?,
            })
        };
        out.push((
            rec[0].to_string(),
            EvalReport {
                confusion: Confusion {
                    tp: count(1)?,
                    fp: count(2)?,
                    tn: count(3)?,
                    fn_: count(4)?,
                },
                precision: real(5)?,
                recall: real(6)?,
                accuracy: real(7)?,
                f1: real(8)?,
                fidelity: if rec[9].is_empty() {
                    None
                } else {
                    Some(real(9)?)
                },
                program_size,
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pairs(tp: usize, fp: usize, tn: usize, fn_: usize) -> Vec<(Label, Label)> {
        use Label::*;
        let mut v = vec![(Positive, Positive); tp];
        v.extend(vec![(Positive, Negative); fp]);
        v.extend(vec![(Negative, Negative); tn]);
        v.extend(vec![(Negative, Positive); fn_]);
        v
    }

    #[test]
    fn hand_built_confusion() {
        let c = Confusion::from_pairs(pairs(3, 1, 4, 2));
        assert_eq!(
            c,
            Confusion {
                tp: 3,
                fp: 1,
                tn: 4,
                fn_: 2
            }
        );
        assert_abs_diff_eq!(c.precision(), 0.75);
        assert_abs_diff_eq!(c.recall(), 0.6);
        assert_abs_diff_eq!(c.accuracy(), 0.7);
        assert_abs_diff_eq!(c.f1(), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn perfect_and_degenerate() {
        let c = Confusion::from_pairs(pairs(5, 0, 5, 0));
        assert_eq!(
            (c.precision(), c.recall(), c.accuracy(), c.f1()),
            (1.0, 1.0, 1.0, 1.0)
        );
        // always negative on balanced data
        let c = Confusion::from_pairs(pairs(0, 0, 5, 5));
        assert_eq!(
            (c.precision(), c.recall(), c.accuracy(), c.f1()),
            (0.0, 0.0, 0.5, 0.0)
        );
        assert_eq!(Confusion::default().accuracy(), 0.0);
    }

    #[test]
    fn empty_report_is_header_only() {
        let text = compare_report(&[], ReportFormat::Text);
        assert_eq!(text.lines().filter(|l| !l.trim().is_empty()).count(), 2);
        assert_eq!(compare_report(&[], ReportFormat::Csv).lines().count(), 1);
        assert!(read_compare_csv(&compare_report(&[], ReportFormat::Csv))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let mut a = EvalReport::from_confusion(Confusion::from_pairs(pairs(7, 2, 9, 3)));
        a.fidelity = Some(0.9123456789);
        a.program_size = Some(ProgramSize {
            clauses: 4,
            literals: 9,
            lines: 4,
        });
        let b = EvalReport::from_confusion(Confusion::from_pairs(pairs(1, 0, 0, 1)));
        let reports = vec![
            ("shap, foil".to_string(), a),
            ("svm \"rbf\"".to_string(), b),
        ];
        let csv = compare_report(&reports, ReportFormat::Csv);
        assert_eq!(read_compare_csv(&csv).unwrap(), reports);
        let text = compare_report(&reports, ReportFormat::Text);
        assert!(text.contains("0.778"), "{text}");
        assert!(text.contains("0.912"));
    }

    #[test]
    fn mean_of_runs() {
        let mut a = EvalReport::from_confusion(Confusion::from_pairs(pairs(1, 0, 1, 0)));
        a.program_size = Some(ProgramSize {
            clauses: 2,
            literals: 4,
            lines: 2,
        });
        let mut b = EvalReport::from_confusion(Confusion::from_pairs(pairs(0, 0, 1, 1)));
        b.program_size = Some(ProgramSize {
            clauses: 3,
            literals: 5,
            lines: 3,
        });
        let m = EvalReport::mean(&[a, b]).unwrap();
        assert_abs_diff_eq!(m.f1, 0.5);
        assert_abs_diff_eq!(m.accuracy, 0.75);
        assert_eq!(m.confusion.total(), 4);
        assert_eq!(m.program_size.unwrap().literals, 5);
        assert_eq!(m.fidelity, None);
        assert!(EvalReport::mean(&[]).is_none());
    }
}
