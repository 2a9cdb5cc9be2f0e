mod common;

use common::{check_smo, FAMILIES};
use shapfoil_core::dataset::Label;
use shapfoil_core::svm::{train, Hyperparams, KernelSpec};

#[test]
fn smo_matches_projected_gradient_on_fifty_problems() {
    for family in FAMILIES {
        for seed in 0..50 {
            let (gap, kkt) = check_smo(seed, family);
            assert!(
                gap <= 1e-4,
                "{family:?} seed {seed}: relative dual gap {gap:e}"
            );
            assert!(kkt <= 1e-6, "{family:?} seed {seed}: kkt violation {kkt:e}");
        }
    }
}

#[test]
fn single_pair_has_closed_form() {
    // two points at distance 2 on a line, linear kernel: alpha = 1/2 each
    let x = vec![vec![1.0], vec![-1.0]];
    let y = vec![Label::Positive, Label::Negative];
    let h = Hyperparams {
        c: 10.0,
        kernel: KernelSpec::Linear,
        ..Default::default()
    };
    let m = train(&x, &y, &h).unwrap();
    let a = m.dense_alphas(2);
    assert!(
        (a[0] - 0.5).abs() < 1e-6 && (a[1] - 0.5).abs() < 1e-6,
        "{a:?}"
    );
    assert!(m.bias.abs() < 1e-6);
}
