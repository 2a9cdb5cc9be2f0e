//! Independent reference implementations used as test oracles, plus the
//! comparisons that run them against the library. The oracles themselves
//! never call into the code they check.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapfoil_core::dataset::{Dataset, FeatureKind, Label, Sample, Value};
use shapfoil_core::logic::{Hypothesis, Literal};
use shapfoil_core::svm::{dual_objective, train, Hyperparams, KernelSpec};

// ---------------------------------------------------------------- kernels

#[derive(Debug, Clone, Copy)]
pub enum Family {
    Linear,
    Poly,
    Rbf,
}

pub const FAMILIES: [Family; 3] = [Family::Linear, Family::Poly, Family::Rbf];

/// Plain kernel formulas, written out separately from the library's.
pub fn kernel(family: Family, a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    match family {
        Family::Linear => dot,
        Family::Poly => (0.5 * dot + 1.0).powi(3),
        Family::Rbf => {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (-0.5 * d2).exp()
        }
    }
}

/// The same three families as library kernel specs.
pub fn kernel_spec(family: Family) -> KernelSpec {
    match family {
        Family::Linear => KernelSpec::Linear,
        Family::Poly => KernelSpec::Polynomial {
            degree: 3,
            gamma: 0.5,
            coef0: 1.0,
        },
        Family::Rbf => KernelSpec::Rbf { gamma: 0.5 },
    }
}

/// Relative gap between the SMO and projected-gradient dual optima, and the
/// worst KKT/feasibility violation of the SMO solution.
pub fn check_smo(seed: u64, family: Family) -> (f64, f64) {
    let (x, y, c) = random_problem(seed);
    let h = Hyperparams {
        c,
        kernel: kernel_spec(family),
        ..Default::default()
    };
    let model = train(&x, &y, &h).unwrap();
    let alpha = model.dense_alphas(x.len());
    let w_smo = dual_objective(&alpha, &x, &y, &h.kernel);
    let (_, w_ref) = projected_gradient_dual(&x, &y, family, c);
    let gap = (w_smo - w_ref).abs() / w_ref.abs().max(1e-12);

    let s: Vec<f64> = y.iter().map(|l| l.as_f64()).collect();
    let mut worst: f64 = alpha.iter().zip(&s).map(|(a, s)| a * s).sum::<f64>().abs();
    for (i, &a) in alpha.iter().enumerate() {
        worst = worst.max((-a).max(a - c).max(0.0));
        let margin = s[i] * model.decision_value(&x[i]).unwrap();
        // complementary slackness, with the solver's stopping tolerance
        let v = if a <= 1e-8 {
            (1.0 - margin).max(0.0)
        } else if a >= c - 1e-8 {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v - h.kkt_tolerance).max(0.0);
    }
    (gap, worst)
}

/// Random dataset with 4..=12 points, 2..=4 features, both labels present.
pub fn random_problem(seed: u64) -> (Vec<Vec<f64>>, Vec<Label>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=12);
    let d = rng.gen_range(2..=4);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let mut y: Vec<Label> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    y[0] = Label::Positive;
    y[1] = Label::Negative;
    let c = [0.5, 1.0, 10.0][rng.gen_range(0..3)];
    (x, y, c)
}

pub fn dual_value(alpha: &[f64], q: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * q[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

pub fn q_matrix(x: &[Vec<f64>], y: &[Label], family: Family) -> Vec<Vec<f64>> {
    let s: Vec<f64> = y
        .iter()
        .map(|l| if l.is_positive() { 1.0 } else { -1.0 })
        .collect();
    (0..x.len())
        .map(|i| {
            (0..x.len())
                .map(|j| s[i] * s[j] * kernel(family, &x[i], &x[j]))
                .collect()
        })
        .collect()
}

/// Euclidean projection onto `{0 <= a <= c, sum y_i a_i = 0}` by bisection
/// on the multiplier of the equality constraint.
fn project(v: &[f64], s: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> {
        v.iter()
            .zip(s)
            .map(|(vi, si)| (vi - lam * si).clamp(0.0, c))
            .collect()
    };
    let g = |a: &[f64]| a.iter().zip(s).map(|(ai, si)| ai * si).sum::<f64>();
    let bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Maximizes the dual by accelerated projected gradient ascent.
pub fn projected_gradient_dual(
    x: &[Vec<f64>],
    y: &[Label],
    family: Family,
    c: f64,
) -> (Vec<f64>, f64) {
    let n = x.len();
    let q = q_matrix(x, y, family);
    let s: Vec<f64> = y
        .iter()
        .map(|l| if l.is_positive() { 1.0 } else { -1.0 })
        .collect();
    // Gershgorin bound on the largest eigenvalue
    let lip = q
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(1e-12, f64::max);
    let step = 1.0 / lip;
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    let mut best = (a.clone(), dual_value(&a, &q));
    for _ in 0..200_000 {
        let grad: Vec<f64> = (0..n)
            .map(|i| 1.0 - (0..n).map(|j| q[i][j] * z[j]).sum::<f64>())
            .collect();
        let v: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi + step * gi).collect();
        let next = project(&v, &s, c);
        let val = dual_value(&next, &q);
        if val > best.1 {
            best = (next.clone(), val);
        }
        let moved: f64 = next
            .iter()
            .zip(&a)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // restart momentum when the objective drops
        let restart = val < dual_value(&a, &q);
        z = if restart {
            next.clone()
        } else {
            next.iter()
                .zip(&a)
                .map(|(p, q)| p + (t - 1.0) / t_next * (p - q))
                .collect()
        };
        t = if restart { 1.0 } else { t_next };
        a = next;
        if moved < 1e-14 {
            break;
        }
    }
    best
}

// ---------------------------------------------------------------- shapley

/// Shapley values straight from the weighted-subset formula with a
/// marginalizing value function `v(S) = mean_b f(x_S, b_rest)`.
pub fn brute_force_shapley(
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    background: &[Vec<f64>],
) -> (Vec<f64>, f64) {
    let d = x.len();
    let value = |mask: u32| -> f64 {
        background
            .iter()
            .map(|b| {
                let z: Vec<f64> = (0..d)
                    .map(|j| if mask >> j & 1 == 1 { x[j] } else { b[j] })
                    .collect();
                f(&z)
            })
            .sum::<f64>()
            / background.len() as f64
    };
    let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    let mut phi = vec![0.0; d];
    for (i, p) in phi.iter_mut().enumerate() {
        for mask in 0u32..(1 << d) {
            if mask >> i & 1 == 1 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let w = fact(s) * fact(d - s - 1) / fact(d);
            *p += w * (value(mask | 1 << i) - value(mask));
        }
    }
    (phi, value(0))
}

// ---------------------------------------------------------------- logic

/// Reads a sample's value of `feature` as its schema token or number,
/// resolving the feature by name on every call.
fn raw(data: &Dataset, s: &Sample, feature: &str) -> Option<RawValue> {
    let schema = data.schema();
    let f = schema.feature_names().iter().position(|n| n == feature)?;
    match (schema.kind(f), s.values[f]) {
        (FeatureKind::Categorical { domain }, Value::Category(c)) => {
            domain.get(c as usize).map(|t| RawValue::Token(t.clone()))
        }
        (FeatureKind::Numeric, Value::Number(x)) => Some(RawValue::Number(x)),
        _ => None,
    }
}

enum RawValue {
    Token(String),
    Number(f64),
}

/// Top-down evaluation of `target(X)` as a Prolog interpreter would: try
/// each clause in order, fail a clause at its first false body literal,
/// succeed as soon as one clause's body holds.
pub fn naive_predict(h: &Hypothesis, data: &Dataset, s: &Sample) -> Label {
    'clauses: for clause in &h.clauses {
        for lit in &clause.body {
            let holds = match lit {
                Literal::CatEq { feature, value } => {
                    matches!(raw(data, s, feature), Some(RawValue::Token(t)) if &t == value)
                }
                Literal::NegCatEq { feature, value } => {
                    // negation as failure: holds unless the positive fact is provable
                    !matches!(raw(data, s, feature), Some(RawValue::Token(t)) if &t == value)
                }
                Literal::NumRange { feature, lo, hi } => {
                    matches!(raw(data, s, feature), Some(RawValue::Number(v)) if *lo <= v && v <= *hi)
                }
            };
            if !holds {
                continue 'clauses;
            }
        }
        return Label::Positive;
    }
    Label::Negative
}

// ---------------------------------------------------------------- metrics

/// `(tp, fp, tn, fn)` by four separate filters.
pub fn naive_counts(pred: &[Label], actual: &[Label]) -> (usize, usize, usize, usize) {
    let n = |p: Label, a: Label| {
        pred.iter()
            .zip(actual)
            .filter(|(x, y)| **x == p && **y == a)
            .count()
    };
    (
        n(Label::Positive, Label::Positive),
        n(Label::Positive, Label::Negative),
        n(Label::Negative, Label::Negative),
        n(Label::Negative, Label::Positive),
    )
}

// ---------------------------------------------------------------- fixtures

/// Six-clause heart program in the two-line interval style, without the
/// clause numbering.
pub const HEART_LISTING: &str = "\
heart_disease(X) :- thallium_test(X,7),
                    chest_pain(X,4),
                    exercise_induced_angina(X).

heart_disease(X) :- maximum_heart_rate_achieved(X,F1),
                    106 =< F1, F1 =< 154,
                    not major_vessels(X,0),
                    oldpeak(X,F2),
                    1 =< F2, F2 =< 4.
heart_disease(X) :- not major_vessels(X,0),
                    thallium_test(X,7),
                    chest_pain(X,4).
heart_disease(X) :- thallium_test(X,7),
                    age(X,F1),
                    35 =< F1, F1 =< 52,
                    chest_pain(X,4).
heart_disease(X) :- maximum_heart_rate_achieved(X,F1),
                    120 =< F1, F1 =< 147,
                    exercise_induced_angina(X),
                    chest_pain(X,4).
heart_disease(X) :- not major_vessels(X,0),
                    chest_pain(X,4),
                    male(X).
";

/// Three-box program written with chained bounds.
pub const CLUSTER_LISTING: &str = "\
red(X):- f1(X,F1), 12.02 =< F1 <= 17.97,
         f2(X,F2), 12.25 =< F2 <= 16.1 .
red(X):- f1(X,F1), 5.82 =< F1 <= 8.22,
         f2(X,F2), 4.8 =< F2 <= 6.45 .
red(X):- f1(X,F1), 23.62 =< F1 <= 26.72,
         f2(X,F2), 4.6 =< F2 <= 6.85 .
";

pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn load(name: &str) -> Dataset {
    let dir = data_dir();
    Dataset::load_csv(
        dir.join(format!("{name}.csv")),
        dir.join(format!("{name}.schema")),
    )
    .expect("bundled dataset loads")
}
