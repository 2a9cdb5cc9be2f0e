mod common;

use common::brute_force_shapley;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapfoil_core::dataset::Label;
use shapfoil_core::shap::{
    shapley_exact, shapley_sampled, Explained, ValueFunctionMode, ValueModel,
};
use shapfoil_core::svm::{train, Hyperparams, KernelSpec};

struct FnModel<F> {
    d: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> ValueModel for FnModel<F> {
    fn dim(&self) -> usize {
        self.d
    }
    fn output(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Nonlinear model with pairwise interactions; ignores column `d - 1`.
fn interacting(d: usize, seed: u64) -> FnModel<impl Fn(&[f64]) -> f64 + Sync> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    FnModel {
        d,
        f: move |x: &[f64]| {
            let live = &x[..d - 1];
            let lin: f64 = live.iter().zip(&w).map(|(a, b)| a * b).sum();
            let pair: f64 = live.windows(2).map(|p| p[0] * p[1]).sum();
            lin.tanh() + 0.3 * pair + (live[0] - 0.5).powi(2)
        },
    }
}

fn rows(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect())
        .collect()
}

fn factorial(d: usize) -> usize {
    (1..=d).product()
}

#[test]
fn efficiency_dummy_and_oracle_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in 2..=8 {
        for seed in 0..4 {
            let model = interacting(d, seed);
            let x = rows(1, d, &mut rng).remove(0);
            let background = rows(4, d, &mut rng);
            let mode = ValueFunctionMode::Marginalize {
                background: background.clone(),
            };
            let a = shapley_exact(Explained::Model(&model), &x, &mode, 12).unwrap();
            let total: f64 = a.phi.iter().sum();
            assert!(
                (total - (a.output - a.base_value)).abs() <= 1e-6,
                "efficiency d={d}"
            );
            assert_eq!(
                a.phi[d - 1],
                0.0,
                "dummy column must be exactly zero, d={d}"
            );

            let (oracle, base) = brute_force_shapley(&|z| model.output(z), &x, &background);
            assert!((a.base_value - base).abs() <= 1e-9);
            for (got, want) in a.phi.iter().zip(&oracle) {
                assert!((got - want).abs() <= 1e-9, "d={d}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn symmetric_columns_get_equal_credit() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in 2..=8 {
        // symmetric in columns 0 and 1
        let model = FnModel {
            d,
            f: |x: &[f64]| (x[0] * x[1]) + (x[0] + x[1]).sin() + x[2..].iter().sum::<f64>(),
        };
        let mut x = rows(1, d, &mut rng).remove(0);
        x[1] = x[0];
        let mut background = rows(3, d, &mut rng);
        for b in &mut background {
            b[1] = b[0];
        }
        let mode = ValueFunctionMode::Marginalize { background };
        let a = shapley_exact(Explained::Model(&model), &x, &mode, 12).unwrap();
        assert!((a.phi[0] - a.phi[1]).abs() <= 1e-9, "d={d}: {:?}", a.phi);
    }
}

#[test]
fn all_permutations_reproduce_exact_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for d in 2..=7 {
        let model = interacting(d, d as u64);
        let x = rows(1, d, &mut rng).remove(0);
        let mode = ValueFunctionMode::Marginalize {
            background: rows(3, d, &mut rng),
        };
        let exact = shapley_exact(Explained::Model(&model), &x, &mode, 12).unwrap();
        let sampled = shapley_sampled(&model, &x, &mode, factorial(d), 99).unwrap();
        for (e, s) in exact.phi.iter().zip(&sampled.phi) {
            assert!((e - s).abs() <= 1e-9, "d={d}: {e} vs {s}");
        }
    }
}

#[test]
fn svm_walker_agrees_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = rows(30, 5, &mut rng);
    let y: Vec<Label> = x
        .iter()
        .map(|r| Label::from_sign(r[0] * r[1] + r[2] - 0.1))
        .collect();
    for kernel in [
        KernelSpec::Linear,
        KernelSpec::Polynomial {
            degree: 2,
            gamma: 0.5,
            coef0: 1.0,
        },
        KernelSpec::Rbf { gamma: 0.7 },
    ] {
        let model = train(
            &x,
            &y,
            &Hyperparams {
                c: 5.0,
                kernel,
                ..Default::default()
            },
        )
        .unwrap();
        let background = x[..6].to_vec();
        let mode = ValueFunctionMode::Marginalize {
            background: background.clone(),
        };
        let a = shapley_exact(Explained::Model(&model), &x[10], &mode, 12).unwrap();
        let (oracle, _) =
            brute_force_shapley(&|z| model.decision_value(z).unwrap(), &x[10], &background);
        for (got, want) in a.phi.iter().zip(&oracle) {
            assert!((got - want).abs() <= 1e-9, "{kernel:?}: {got} vs {want}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn efficiency_holds_for_random_models(
        seed in any::<u64>(),
        d in 1usize..=6,
        n_bg in 1usize..=4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let model = FnModel { d, f: |x: &[f64]| x.iter().zip(&w).map(|(a, b)| (a * b).exp()).product::<f64>() };
        let x = rows(1, d, &mut rng).remove(0);
        let mode = ValueFunctionMode::Marginalize { background: rows(n_bg, d, &mut rng) };
        let a = shapley_exact(Explained::Model(&model), &x, &mode, 12).unwrap();
        let total: f64 = a.phi.iter().sum();
        prop_assert!((total - (a.output - a.base_value)).abs() <= 1e-6 * (1.0 + a.output.abs()));
    }

    #[test]
    fn scaling_the_model_scales_attributions(seed in any::<u64>(), k in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = interacting(4, seed);
        let scaled = FnModel { d: 4, f: |x: &[f64]| k * base.output(x) };
        let x = rows(1, 4, &mut rng).remove(0);
        let mode = ValueFunctionMode::Marginalize { background: rows(3, 4, &mut rng) };
        let a = shapley_exact(Explained::Model(&base), &x, &mode, 12).unwrap();
        let b = shapley_exact(Explained::Model(&scaled), &x, &mode, 12).unwrap();
        for (p, q) in a.phi.iter().zip(&b.phi) {
            prop_assert!((k * p - q).abs() <= 1e-9 * (1.0 + q.abs()));
        }
    }
}
