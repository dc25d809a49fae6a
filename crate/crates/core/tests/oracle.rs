use proptest::prelude::*;
use schurdyn::kernels::{det_plancherel, det_static};
use schurdyn::oracle::{
    dynamic_correlation_on, exact_dynamic_correlation, exact_static_correlation, exact_static_correlation_filtered,
    exact_static_correlation_plancherel, semigroup, TruncatedStateSpace,
};
use schurdyn::pfaffian::{assemble_dynamic, assemble_static, pfaffian};
use schurdyn::specfun::{ModelParams, PlancherelParams};
use schurdyn::Error;

fn params(alpha: f64, xi: f64) -> ModelParams {
    ModelParams::new(alpha, xi).unwrap()
}

#[test]
fn static_examples() {
    let p = params(1.0, 0.2);
    let o = exact_static_correlation(&[1], &p, 1e-12).unwrap();
    assert!((o.value - det_static(1, 1, &p).unwrap()).abs() <= o.error_bound + 1e-8);
    let f = exact_static_correlation_filtered(&[1], &p, 1e-12).unwrap();
    assert!((o.value - f.value).abs() <= 1e-15);
    let far = exact_static_correlation(&[o.cap as u32 + 1], &p, 1e-12).unwrap();
    assert!(far.value <= o.error_bound);
    assert!(matches!(exact_static_correlation(&[1], &params(1.0, 0.95), 1e-14), Err(Error::CapExceeded { .. })));
}

#[test]
fn triple_agreement() {
    for alpha in [0.2, 1.0, 3.0] {
        for xi in [0.1, 0.3, 0.5] {
            let p = params(alpha, xi);
            for xs in [vec![2u32], vec![1, 4], vec![2, 3, 6]] {
                let o = exact_static_correlation(&xs, &p, 1e-12).unwrap();
                let pf = pfaffian(&assemble_static(&xs, &p).unwrap()).unwrap();
                let k = nalgebra::DMatrix::from_fn(xs.len(), xs.len(), |i, j| {
                    det_static(xs[i] as i64, xs[j] as i64, &p).unwrap()
                });
                let d = schurdyn::pfaffian::det(&k);
                assert!((pf - d).abs() <= 1e-10);
                assert!((pf - o.value).abs() <= 1e-6 + o.error_bound, "α={alpha} ξ={xi} {xs:?}");
            }
        }
    }
}

#[test]
fn plancherel_enumeration() {
    let q = PlancherelParams::new(1.5).unwrap();
    for x in 1..=4u32 {
        let o = exact_static_correlation_plancherel(&[x], &q, 1e-12).unwrap();
        assert!((o.value - det_plancherel(x as i64, x as i64, &q).unwrap()).abs() <= o.error_bound + 1e-10);
    }
}

#[test]
fn dynamic_examples() {
    let p = params(1.0, 0.2);
    let stat = exact_static_correlation(&[1, 2], &p, 1e-10).unwrap();
    let same = exact_dynamic_correlation(&[(0.4, 1), (0.4, 2)], &p, 1e-10).unwrap();
    assert!((stat.value - same.value).abs() <= 1e-14);
    let one = exact_dynamic_correlation(&[(3.0, 2)], &p, 1e-10).unwrap();
    let base = exact_static_correlation(&[2], &p, 1e-10).unwrap();
    assert!((one.value - base.value).abs() <= one.error_bound);
    let pts = [(0.0, 1), (0.5, 2)];
    let dynv = exact_dynamic_correlation(&pts, &params(1.0, 0.2), 1e-8).unwrap();
    let pf = pfaffian(&assemble_dynamic(&pts, &p).unwrap()).unwrap();
    assert!((pf - dynv.value).abs() <= dynv.error_bound + 1e-6);
}

#[test]
fn semigroup_properties() {
    let p = params(1.0, 0.2);
    let space = TruncatedStateSpace::for_tolerance(&p, 1e-10).unwrap();
    let n = space.states().len();
    assert_eq!(semigroup(0.0, &space).unwrap(), nalgebra::DMatrix::identity(n, n));
    assert!(semigroup(-1.0, &space).is_err());
    let (s, t) = (0.4, 0.9);
    let ps = semigroup(s, &space).unwrap();
    let pt = semigroup(t, &space).unwrap();
    let pst = semigroup(s + t, &space).unwrap();
    let diff = &pst - &ps * &pt;
    let inf_norm = (0..n).map(|i| diff.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    assert!(inf_norm <= 1e-9, "{inf_norm:e}");
    for i in 0..n {
        let row: f64 = pt.row(i).sum();
        assert!(row <= 1.0 + 1e-12 && row >= 0.0);
        assert!(pt.row(i).iter().all(|&v| (-1e-15..=1.0 + 1e-15).contains(&v)));
    }
    let m = space.measure();
    let interior: Vec<usize> = (0..n).filter(|&i| space.states()[i].weight() + 2 <= space.cap()).collect();
    for &i in interior.iter().take(40) {
        for &j in interior.iter().take(40) {
            assert!((m[i] * pt[(i, j)] - m[j] * pt[(j, i)]).abs() <= 1e-9);
        }
    }
    let propagated = space.propagate(t, &nalgebra::DVector::from_element(n, 1.0));
    assert!((propagated - pt * nalgebra::DVector::from_element(n, 1.0)).amax() <= 1e-12);
}

#[test]
fn generator_structure() {
    let p = params(2.0, 0.5);
    let space = TruncatedStateSpace::new(&p, 10).unwrap();
    let q = space.generator();
    for i in 0..space.states().len() {
        let row: f64 = q.row(i).sum();
        assert!(row <= 1e-12);
        for j in 0..space.states().len() {
            if i != j {
                assert!(q[(i, j)] >= 0.0);
            }
        }
    }
    let empty = space.index_of(&Default::default()).unwrap();
    assert!((q.row(empty).sum()).abs() <= 1e-14);
}

#[test]
fn convergence_in_cap() {
    let p = params(1.0, 0.3);
    let pts = [(0.0, 1), (1.0, 3)];
    let small = TruncatedStateSpace::new(&p, 14).unwrap();
    let large = TruncatedStateSpace::new(&p, 18).unwrap();
    let a = dynamic_correlation_on(&small, &pts).unwrap();
    let b = dynamic_correlation_on(&large, &pts).unwrap();
    assert!((a.value - b.value).abs() <= a.error_bound);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn prop_static_forms_agree(alpha in 0.2f64..4.0, xi in 0.05f64..0.4, x in 1u32..6, y in 1u32..6) {
        prop_assume!(x != y);
        let p = params(alpha, xi);
        let a = exact_static_correlation(&[x, y], &p, 1e-10).unwrap();
        let b = exact_static_correlation_filtered(&[x, y], &p, 1e-10).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-14);
    }
}
