use proptest::prelude::*;
use schurdyn::measures::{
    down_kernel, l_matrix, m_alpha_n, m_alpha_xi, m_alpha_xi_mixture, neg_binomial, neg_binomial_tail, plancherel_n,
    plancherel_theta, truncation_level, up_kernel, WeightFunction,
};
use schurdyn::partitions::{enumerate, StrictPartition};
use schurdyn::pfaffian::det;
use schurdyn::specfun::{ModelParams, PlancherelParams};

fn sp(parts: &[u32]) -> StrictPartition {
    StrictPartition::new(parts.to_vec()).unwrap()
}

fn params(alpha: f64, xi: f64) -> ModelParams {
    ModelParams::new(alpha, xi).unwrap()
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}

#[test]
fn plancherel_examples() {
    close(plancherel_n(&sp(&[2])), 1.0, 1e-15);
    close(plancherel_n(&sp(&[3])), 2.0 / 3.0, 1e-15);
    close(plancherel_n(&sp(&[2, 1])), 1.0 / 3.0, 1e-15);
    for n in 0..=10 {
        let total: f64 = enumerate(n).unwrap().iter().map(plancherel_n).sum();
        close(total, 1.0, 1e-12);
    }
}

#[test]
fn deformed_examples() {
    close(m_alpha_n(&sp(&[3]), 2.0), 8.0 / 9.0, 1e-15);
    close(m_alpha_n(&sp(&[2, 1]), 2.0), 1.0 / 9.0, 1e-15);
    close(m_alpha_n(&StrictPartition::empty(), 0.7), 1.0, 0.0);
    for alpha in [0.3, 5.0] {
        for n in 0..=9 {
            let total: f64 = enumerate(n).unwrap().iter().map(|l| m_alpha_n(l, alpha)).sum();
            close(total, 1.0, 1e-12);
        }
    }
    for lambda in enumerate(6).unwrap() {
        close(m_alpha_n(&lambda, 1e6), plancherel_n(&lambda), 1e-4);
    }
}

#[test]
fn negative_binomial_examples() {
    let p = params(3.0, 0.4);
    let base = 0.6f64.powf(1.5);
    close(neg_binomial(0, &p), base, 1e-15);
    close(neg_binomial(1, &p), base * 1.5 * 0.4, 1e-15);
    let n = truncation_level(1e-10, &p);
    let head: f64 = (0..=n).map(|k| neg_binomial(k, &p)).sum();
    assert!(head >= 1.0 - 1e-10);
    close(head + neg_binomial_tail(n, &p), 1.0, 1e-14);
}

#[test]
fn mixed_measure_examples() {
    let p = params(2.5, 0.35);
    let empty = 0.65f64.powf(1.25);
    close(m_alpha_xi(&StrictPartition::empty(), &p), empty, 1e-15);
    let w = WeightFunction::Hypergeometric(p);
    close(w.eval(1), 0.35 * 2.5 / 2.0, 1e-15);
    close(m_alpha_xi(&sp(&[1]), &p), empty * w.eval(1), 1e-15);
}

#[test]
fn product_and_mixture_forms_agree() {
    for (alpha, xi) in [(0.5, 0.2), (2.0, 0.5), (7.0, 0.8)] {
        let p = params(alpha, xi);
        for n in 0..=8 {
            for lambda in enumerate(n).unwrap() {
                let a = m_alpha_xi(&lambda, &p);
                let b = m_alpha_xi_mixture(&lambda, &p);
                assert!((a - b).abs() <= 1e-12 * a.max(b), "{lambda}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn poissonized_plancherel_is_normalized() {
    let q = PlancherelParams::new(2.0).unwrap();
    let total: f64 = (0..=40).flat_map(|n| enumerate(n).unwrap()).map(|l| plancherel_theta(&l, &q)).sum();
    close(total, 1.0, 1e-12);
}

#[test]
fn transition_examples() {
    let dk = down_kernel(&sp(&[2, 1]));
    assert_eq!(dk.len(), 1);
    assert_eq!(dk[0].0, sp(&[2]));
    close(dk[0].1, 1.0, 1e-15);
    let dk = down_kernel(&sp(&[3, 1]));
    assert_eq!(dk.len(), 2);
    for (mu, pr) in &dk {
        assert!(*mu == sp(&[3]) || *mu == sp(&[2, 1]));
        close(*pr, 0.5, 1e-15);
    }
    let uk = up_kernel(&StrictPartition::empty(), 1.7);
    assert_eq!(uk.len(), 1);
    close(uk[0].1, 1.0, 1e-15);
}

#[test]
fn coherency_and_up_push_forward() {
    let alpha = 1.3;
    for n in 0..=7 {
        for lambda in enumerate(n).unwrap() {
            let pulled: f64 = lambda
                .up_neighbors()
                .iter()
                .map(|(kappa, _)| {
                    let pr = down_kernel(kappa).into_iter().find(|(mu, _)| *mu == lambda).unwrap().1;
                    m_alpha_n(kappa, alpha) * pr
                })
                .sum();
            close(pulled, m_alpha_n(&lambda, alpha), 1e-12);
        }
        for kappa in enumerate(n + 1).unwrap() {
            let pushed: f64 = kappa
                .down_neighbors()
                .iter()
                .map(|(lambda, _)| {
                    let pr = up_kernel(lambda, alpha).into_iter().find(|(k, _)| *k == kappa).unwrap().1;
                    m_alpha_n(lambda, alpha) * pr
                })
                .sum();
            close(pushed, m_alpha_n(&kappa, alpha), 1e-12);
        }
    }
}

#[test]
fn l_matrix_examples() {
    let p = params(2.0, 0.5);
    let w = WeightFunction::Hypergeometric(p);
    let l = l_matrix(&w, 12);
    for x in 0..12 {
        close(l[(x, x)], w.eval(x as u32 + 1), 1e-15 * l[(x, x)].max(1.0));
        for y in 0..12 {
            assert_eq!(l[(x, y)], l[(y, x)]);
        }
    }
}

#[test]
fn l_ensemble_identity() {
    let p = params(1.5, 0.4);
    let n = 40;
    let l = l_matrix(&WeightFunction::Hypergeometric(p), n);
    let norm = det(&(nalgebra::DMatrix::identity(n, n) + &l));
    for k in 0..=4 {
        for lambda in enumerate(k).unwrap() {
            let idx: Vec<usize> = lambda.parts().iter().map(|&x| x as usize - 1).collect();
            let sub = nalgebra::DMatrix::from_fn(idx.len(), idx.len(), |i, j| l[(idx[i], idx[j])]);
            let v = det(&sub) / norm;
            close(v, m_alpha_xi(&lambda, &p), 1e-8);
        }
    }
}

proptest! {
    #[test]
    fn prop_kernels_are_distributions(parts in proptest::collection::btree_set(1u32..15, 0..5), alpha in 0.05f64..20.0) {
        let lambda = StrictPartition::new(parts.into_iter().collect()).unwrap();
        let up: f64 = up_kernel(&lambda, alpha).iter().map(|(_, p)| p).sum();
        prop_assert!((up - 1.0).abs() < 1e-12);
        if !lambda.is_empty() {
            let down: f64 = down_kernel(&lambda).iter().map(|(_, p)| p).sum();
            prop_assert!((down - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn prop_dual_forms(parts in proptest::collection::btree_set(1u32..30, 0..6), alpha in 0.05f64..20.0, xi in 0.01f64..0.95) {
        let lambda = StrictPartition::new(parts.into_iter().collect()).unwrap();
        let p = params(alpha, xi);
        let a = m_alpha_xi(&lambda, &p);
        let b = m_alpha_xi_mixture(&lambda, &p);
        prop_assert!((a - b).abs() <= 1e-11 * a.max(b));
    }
}
