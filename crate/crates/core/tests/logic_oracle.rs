mod common;

use common::{load, naive_predict, CLUSTER_LISTING, HEART_LISTING};
use proptest::prelude::*;
use shapfoil_core::dataset::{Dataset, FeatureKind};
use shapfoil_core::foil::{foil_induce, FoilParams};
use shapfoil_core::logic::{
    covered_partition, hypothesis_predict, parse_prolog, serialize_prolog, Clause, Hypothesis,
    Literal, DEFAULT_DECIMALS,
};
use shapfoil_core::synth;

fn fixpoint(text: &str) -> String {
    let once = serialize_prolog(&parse_prolog(text).unwrap(), DEFAULT_DECIMALS);
    let twice = serialize_prolog(&parse_prolog(&once).unwrap(), DEFAULT_DECIMALS);
    assert_eq!(once, twice);
    once
}

fn agree_everywhere(h: &Hypothesis, data: &Dataset) {
    for (i, s) in data.samples().iter().enumerate() {
        assert_eq!(
            hypothesis_predict(h, data.schema(), s).unwrap(),
            naive_predict(h, data, s),
            "row {i}"
        );
    }
}

#[test]
fn heart_listing_round_trips() {
    let h = parse_prolog(HEART_LISTING).unwrap();
    assert_eq!(h.len(), 6);
    assert_eq!(h.literal_count(), 6 * 3);
    let text = fixpoint(HEART_LISTING);
    assert_eq!(text.lines().count(), 6);
    assert_eq!(
        text.lines().next().unwrap(),
        "heart_disease(X) :- thallium_test(X,7), chest_pain(X,4), exercise_induced_angina(X)."
    );
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "heart_disease(X) :- maximum_heart_rate_achieved(X,F1), 106 =< F1, F1 =< 154, \
         not major_vessels(X,0), oldpeak(X,F2), 1 =< F2, F2 =< 4."
    );
    assert!(text.ends_with("not major_vessels(X,0), chest_pain(X,4), male(X).\n"));
}

#[test]
fn cluster_listing_round_trips() {
    let h = parse_prolog(CLUSTER_LISTING).unwrap();
    assert_eq!(h.len(), 3);
    assert_eq!(
        h.clauses[0].body[0],
        Literal::NumRange {
            feature: "f1".into(),
            lo: 12.02,
            hi: 17.97
        }
    );
    let text = fixpoint(CLUSTER_LISTING);
    assert!(text.starts_with(
        "red(X) :- f1(X,F1), 12.02 =< F1, F1 =< 17.97, f2(X,F2), 12.25 =< F2, F2 =< 16.1.\n"
    ));
}

#[test]
fn heart_listing_agrees_with_naive_interpreter() {
    let data = load("heart");
    let h = parse_prolog(HEART_LISTING).unwrap();
    agree_everywhere(&h, &data);
    // the listing is a plausible program on this data, not a trivial one
    let covered = data
        .samples()
        .iter()
        .filter(|s| {
            hypothesis_predict(&h, data.schema(), s)
                .unwrap()
                .is_positive()
        })
        .count();
    assert!(covered > 0 && covered < data.len());
}

#[test]
fn induced_programs_agree_with_naive_interpreter() {
    for data in [
        load("heart"),
        load("breast-w"),
        synth::clusters3(42, 200),
        synth::nested(0, 200),
    ] {
        let out = foil_induce(&data, &FoilParams::default()).unwrap();
        agree_everywhere(&out.hypothesis, &data);
        let text = serialize_prolog(&out.hypothesis, DEFAULT_DECIMALS);
        assert_eq!(fixpoint(&text), text);
    }
}

fn literal_strategy(data: &Dataset) -> BoxedStrategy<Literal> {
    let schema = data.schema();
    let mut options: Vec<BoxedStrategy<Literal>> = Vec::new();
    for (f, name) in schema.feature_names().iter().enumerate() {
        let name = name.clone();
        match schema.kind(f) {
            FeatureKind::Categorical { domain } => {
                let domain = domain.clone();
                options.push(
                    (0..domain.len(), any::<bool>())
                        .prop_map(move |(v, neg)| {
                            let (feature, value) = (name.clone(), domain[v].clone());
                            if neg {
                                Literal::NegCatEq { feature, value }
                            } else {
                                Literal::CatEq { feature, value }
                            }
                        })
                        .boxed(),
                );
            }
            FeatureKind::Numeric => {
                let vals: Vec<f64> = data
                    .samples()
                    .iter()
                    .filter_map(|s| s.values[f].as_number())
                    .collect();
                let (min, max) = vals
                    .iter()
                    .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
                options.push(
                    (min..=max, min..=max, 0u8..4)
                        .prop_map(move |(a, b, open)| {
                            let r2 = |v: f64| (v * 100.0).round() / 100.0;
                            let (lo, hi) = (r2(a.min(b)), r2(a.max(b)));
                            let lo = if open == 1 { f64::NEG_INFINITY } else { lo };
                            let hi = if open == 2 { f64::INFINITY } else { hi };
                            Literal::NumRange {
                                feature: name.clone(),
                                lo,
                                hi,
                            }
                        })
                        .boxed(),
                );
            }
        }
    }
    proptest::strategy::Union::new(options).boxed()
}

fn hypothesis_strategy(data: &Dataset) -> impl Strategy<Value = Hypothesis> {
    let head = data.schema().target_name().to_string();
    prop::collection::vec(prop::collection::vec(literal_strategy(data), 0..5), 0..5).prop_map(
        move |bodies| {
            Hypothesis::new(
                bodies
                    .into_iter()
                    .map(|body| Clause {
                        head: head.clone(),
                        body,
                    })
                    .collect(),
            )
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_heart_programs_match_oracle_and_round_trip(h in hypothesis_strategy(&load("heart"))) {
        let data = load("heart");
        for s in data.samples() {
            prop_assert_eq!(hypothesis_predict(&h, data.schema(), s).unwrap(), naive_predict(&h, &data, s));
        }
        let text = serialize_prolog(&h, DEFAULT_DECIMALS);
        let back = parse_prolog(&text).unwrap();
        prop_assert_eq!(serialize_prolog(&back, DEFAULT_DECIMALS), text);
    }

    #[test]
    fn specializing_never_grows_coverage(
        lits in prop::collection::vec(literal_strategy(&load("heart")), 1..6)
    ) {
        let data = load("heart");
        let mut clause = Clause::new("heart_disease");
        let mut covered = data.len();
        for lit in lits {
            let Some(next) = clause.with_literal(lit) else { break };
            let part = covered_partition(&next, &data).unwrap();
            let now = part.covered_pos.len() + part.covered_neg.len();
            prop_assert!(now <= covered);
            covered = now;
            clause = next;
        }
    }
}
