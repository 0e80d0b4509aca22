mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relemb::cbow::{cbow_gradient, cbow_objective};
use relemb::params::{Block, Matrix};

use common::{gaussian_matrix, max_rel_err, FLOOR, H};

#[test]
fn pretraining_gradient_matches_finite_differences() {
    let err = common::pretrain_gradient_error(5, 2, 3, 25, 11);
    assert!(err < 1e-4, "max relative error {err:e}");
}

#[test]
fn pretraining_gradient_wide_window() {
    let err = common::pretrain_gradient_error(3, 4, 5, 10, 12);
    assert!(err < 1e-4, "max relative error {err:e}");
}

#[test]
fn supervised_gradient_matches_finite_differences() {
    let err = common::supervised_gradient_error(4, 1, 4, 25, 13);
    assert!(err < 1e-4, "max relative error {err:e}");
}

#[test]
fn cbow_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (n, d) = (9, 5);
    for _ in 0..20 {
        let input = gaussian_matrix(n, d, 0.5, &mut rng);
        let output = gaussian_matrix(n, d, 0.5, &mut rng);
        let context: Vec<usize> = (0..rng.random_range(1..6))
            .map(|_| rng.random_range(0..n))
            .collect();
        let target = rng.random_range(0..n);
        let noise: Vec<usize> = (0..3).map(|_| rng.random_range(0..n)).collect();
        let grad = cbow_gradient(&context, target, &noise, &input, &output);

        let numeric = |m: &Matrix, which: bool| {
            let mut m = m.clone();
            (0..m.as_slice().len())
                .map(|k| {
                    let x = m.as_slice()[k];
                    let eval = |v: f64, m: &mut Matrix| {
                        m.as_mut_slice()[k] = v;
                        if which {
                            cbow_objective(&context, target, &noise, m, &output)
                        } else {
                            cbow_objective(&context, target, &noise, &input, m)
                        }
                    };
                    let g = (eval(x + H, &mut m) - eval(x - H, &mut m)) / (2.0 * H);
                    m.as_mut_slice()[k] = x;
                    g
                })
                .collect::<Vec<_>>()
        };
        let dense = |block: Block| {
            (0..n)
                .flat_map(|r| {
                    grad.row(block, r)
                        .map(<[f64]>::to_vec)
                        .unwrap_or(vec![0.0; d])
                })
                .collect::<Vec<_>>()
        };
        assert!(max_rel_err(&dense(Block::Words), &numeric(&input, true), FLOOR) < 1e-4);
        assert!(max_rel_err(&dense(Block::Out), &numeric(&output, false), FLOOR) < 1e-4);
    }
}
