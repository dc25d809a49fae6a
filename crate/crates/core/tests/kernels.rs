use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use schurdyn::kernels::{
    det_plancherel, det_plancherel_integrable, det_static, det_static_integrable, det_static_series, pf_dynamic,
    pf_dynamic_series, pf_plancherel, pf_plancherel_static, pf_static, pf_static_closed, pf_static_series, series_cutoff,
    zz_dynamic, zz_static, zz_static_closed, KernelKind, KernelTable,
};
use schurdyn::measures::{l_matrix, WeightFunction};
use schurdyn::oracle::exact_dynamic_correlation;
use schurdyn::pfaffian::{assemble_dynamic, pfaffian};
use schurdyn::specfun::{difference_operator, HalfInt, ModelParams, PlancherelParams, ZPair};
use schurdyn::Error;

fn params(alpha: f64, xi: f64) -> ModelParams {
    ModelParams::new(alpha, xi).unwrap()
}

fn h(k: i64) -> HalfInt {
    HalfInt::from_floor(k)
}

fn parity(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

const SETTINGS: [(f64, f64); 3] = [(1.0, 0.3), (2.0, 0.5), (0.4, 0.8)];

#[test]
fn cutoff_rule() {
    assert_eq!(series_cutoff(1e-15, 0.01), 16);
    assert_eq!(series_cutoff(1e-15, 0.5), (2.0 * 1e-15f64.ln() / 0.5f64.ln()).ceil() as usize);
}

#[test]
fn reduction_formulas() {
    for (alpha, xi) in SETTINGS {
        let p = params(alpha, xi);
        for x in 1..=3 {
            assert!(pf_static(x, x, &p).unwrap().abs() <= 1e-12);
            assert!(pf_static(-x, -x, &p).unwrap().abs() <= 1e-12);
        }
        for x in 1..=5 {
            for y in 1..=5 {
                let a = pf_static(x, -y, &p).unwrap();
                assert!((a - pf_static(y, -x, &p).unwrap()).abs() <= 1e-10);
                if x != y {
                    let lhs = (x + y) as f64 * pf_static(x, y, &p).unwrap();
                    let rhs = (x - y) as f64 * pf_static(x, -y, &p).unwrap();
                    assert!((lhs - rhs).abs() <= 1e-10, "({x},{y})");
                    assert!((pf_static(x, -y, &p).unwrap() + pf_static(-x, y, &p).unwrap()).abs() <= 1e-10);
                }
            }
        }
        for x in -6..=6i64 {
            for y in (-6..=6i64).filter(|&y| y != -x) {
                let a = pf_static(x, y, &p).unwrap();
                assert!((a + pf_static(y, x, &p).unwrap()).abs() <= 1e-12, "skew at ({x},{y})");
            }
        }
    }
}

#[test]
fn closed_form_agrees_with_series() {
    for (alpha, xi) in SETTINGS {
        let p = params(alpha, xi);
        for x in -6..=6i64 {
            for y in -6..=6i64 {
                let s = pf_static(x, y, &p).unwrap();
                let c = pf_static_closed(x, y, &p).unwrap();
                assert!((s - c).abs() <= 1e-9, "({x},{y}) {s} vs {c}");
            }
        }
        assert_eq!(pf_static_closed(1, -1, &p).unwrap(), pf_static(1, -1, &p).unwrap());
    }
}

#[test]
fn dynamic_kernel_limits() {
    let p = params(2.0, 0.5);
    for x in -4..=4 {
        for y in -4..=4 {
            let d = pf_dynamic(1.0, x, 1.0, y, &p).unwrap();
            assert!((d - pf_static(x, y, &p).unwrap()).abs() <= 1e-14);
        }
    }
    assert!(matches!(pf_dynamic(2.0, 1, 1.0, 1, &p), Err(Error::UnorderedTimes { .. })));
    // the t → ∞ limit keeps only the m = 0 term; the remainder shrinks with the gap
    let limit = pf_dynamic(0.0, 2, 200.0, -3, &p).unwrap();
    let mut last = f64::INFINITY;
    for gap in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let r = (pf_dynamic(0.0, 2, gap, -3, &p).unwrap() - limit).abs();
        assert!(r < last);
        last = r;
    }
}

#[test]
fn large_gap_decorrelates() {
    let p = params(2.0, 0.5);
    for (x1, x2) in [(1, 1), (1, 3), (2, 5)] {
        let pf = pfaffian(&assemble_dynamic(&[(0.0, x1), (50.0, x2)], &p).unwrap()).unwrap();
        let rho = |x: u32| det_static(x as i64, x as i64, &p).unwrap();
        assert!((pf - rho(x1) * rho(x2)).abs() <= 1e-8);
    }
}

#[test]
fn determinantal_kernel_forms() {
    for (alpha, xi) in SETTINGS {
        let p = params(alpha, xi);
        for x in 1..=8i64 {
            for y in 1..=8i64 {
                let k = det_static(x, y, &p).unwrap();
                assert_eq!(k, det_static(y, x, &p).unwrap());
                let via_pf = 2.0 * ((x * y) as f64).sqrt() / (x + y) as f64 * pf_static(x, -y, &p).unwrap();
                assert!((k - via_pf).abs() <= 1e-10);
                let integ = det_static_integrable(x, y, &p).unwrap();
                assert!((k - integ).abs() <= 1e-9, "({x},{y}) {k} vs {integ}");
            }
        }
        assert!(matches!(det_static_series(0, 1, &p), Err(Error::InvalidParameters(_))));
    }
}

#[test]
fn l_ensemble_resolvent() {
    let p = params(1.5, 0.5);
    let n = 60;
    let l = l_matrix(&WeightFunction::Hypergeometric(p), n);
    let k = &l * (DMatrix::identity(n, n) + &l).try_inverse().unwrap();
    for x in 0..n {
        for y in 0..n {
            let want = det_static(x as i64 + 1, y as i64 + 1, &p).unwrap();
            assert!((k[(x, y)] - want).abs() <= 1e-6, "({x},{y})");
        }
    }
    let kt = DMatrix::from_fn(n, n, |i, j| det_static(i as i64 + 1, j as i64 + 1, &p).unwrap());
    let eig = SymmetricEigen::new(kt);
    assert!(eig.eigenvalues.iter().all(|&e| (-1e-8..=1.0 + 1e-8).contains(&e)));
}

#[test]
fn spectral_projection() {
    let p = params(1.0, 0.4);
    let reach = 70i64;
    let size = (2 * reach + 1) as usize;
    let idx = |x: i64| (x + reach) as usize;
    let mut d = DMatrix::zeros(size, size);
    for y in -reach..=reach {
        for x in (y - 1).max(-reach)..=(y + 1).min(reach) {
            d[(idx(x), idx(y))] = difference_operator(|z| if z == y { 1.0 } else { 0.0 }, x, &p, true);
        }
    }
    assert!((&d - d.transpose()).norm() < 1e-12);
    let gap = 0.5 * (1.0 - p.xi());
    let eig = SymmetricEigen::new(d);
    let mut proj = DMatrix::zeros(size, size);
    for (k, &e) in eig.eigenvalues.iter().enumerate() {
        let w = if e > gap {
            1.0
        } else if e.abs() <= gap {
            0.5
        } else {
            continue;
        };
        let v = eig.eigenvectors.column(k);
        proj += w * v * v.transpose();
    }
    let inner = 10i64;
    let mut dist = 0.0;
    for x in -inner..=inner {
        for y in -inner..=inner {
            let r = pf_static(x, -y, &p).unwrap() - proj[(idx(x), idx(y))];
            dist += r * r;
        }
    }
    assert!(dist.sqrt() <= 1e-6, "Frobenius distance {:e}", dist.sqrt());
}

#[test]
fn plancherel_kernels() {
    let q = PlancherelParams::new(2.0).unwrap();
    for x in 1..=8 {
        for y in 1..=8 {
            let k = det_plancherel(x, y, &q).unwrap();
            if x != y {
                assert!((k - det_plancherel_integrable(x, y, &q).unwrap()).abs() <= 1e-10);
            }
            let a = 1e4;
            let hyper = det_static(x, y, &params(a, 2.0 / a)).unwrap();
            assert!((k - hyper).abs() <= 1e-3, "({x},{y}) {k} vs {hyper}");
        }
    }
    for x in -4..=4 {
        for y in -4..=4 {
            let a = pf_plancherel(0.7, x, 0.7, y, &q).unwrap();
            assert!((a - pf_plancherel_static(x, y, &q).unwrap()).abs() <= 1e-14);
        }
    }
}

#[test]
fn hypergeometric_kernel_identities() {
    for (alpha, xi) in SETTINGS {
        let p = params(alpha, xi);
        let (z0, zm) = (ZPair::new(0), ZPair::new(-1));
        for x in 1..=5i64 {
            for y in 1..=5i64 {
                let lhs = ((x as f64) / (y as f64)).sqrt() * det_static(x, y, &p).unwrap();
                let rhs = zz_static(h(x - 1), h(y - 1), z0, &p).unwrap()
                    + parity(y) * zz_static(h(x), h(-y), zm, &p).unwrap();
                assert!((lhs - rhs).abs() <= 1e-8, "({x},{y})");
            }
        }
        for x in -4..=4i64 {
            for y in -4..=4i64 {
                let sign = parity(x.min(0) + y.max(0));
                let rhs = 0.5 * sign * (zz_static(h(x), h(-y), zm, &p).unwrap() + zz_static(h(x - 1), h(-y - 1), z0, &p).unwrap());
                assert!((pf_static(x, y, &p).unwrap() - rhs).abs() <= 1e-8, "({x},{y})");
                for gap in [0.0, 0.5, 2.0] {
                    let rhs = 0.5
                        * sign
                        * ((-gap / 2.0f64).exp() * zz_dynamic(gap, h(x), 0.0, h(-y), zm, &p).unwrap()
                            + (gap / 2.0f64).exp() * zz_dynamic(gap, h(x - 1), 0.0, h(-y - 1), z0, &p).unwrap());
                    let lhs = pf_dynamic(0.0, x, gap, y, &p).unwrap();
                    assert!((lhs - rhs).abs() <= 1e-8, "({x},{y}) gap {gap}");
                }
            }
        }
    }
}

#[test]
fn extended_kernel_one_sided_limits() {
    let p = params(1.3, 0.45);
    for d in [-1, 0] {
        let z = ZPair::new(d);
        for x in -3..=3 {
            for y in -3..=3 {
                let k = zz_static(h(x), h(y), z, &p).unwrap();
                let after = zz_dynamic(1.0, h(x), 1.0, h(y), z, &p).unwrap();
                assert!((after - k).abs() <= 1e-13);
                let before = zz_dynamic(1.0 - 1e-10, h(x), 1.0, h(y), z, &p).unwrap();
                let delta = if x == y { 1.0 } else { 0.0 };
                assert!((before - (k - delta)).abs() <= 1e-8, "d={d} ({x},{y})");
                assert!((k - zz_static_closed(h(x), h(y), z, &p).unwrap()).abs() <= 1e-9);
            }
        }
    }
}

/// Two-time correlations at one site exceed ρ(x)²; any symmetric 2×2 kernel
/// would give ρ(x)² − k² ≤ ρ(x)², so no such kernel reproduces them.
#[test]
fn two_time_correlations_are_not_symmetric_determinants() {
    let p = params(2.0, 0.5);
    for x in [1u32, 2] {
        let rho = det_static(x as i64, x as i64, &p).unwrap();
        let pts = [(0.0, x), (0.3, x)];
        let pf = pfaffian(&assemble_dynamic(&pts, &p).unwrap()).unwrap();
        let oracle = exact_dynamic_correlation(&pts, &p, 1e-10).unwrap();
        assert!((pf - oracle.value).abs() <= oracle.error_bound + 1e-10);
        assert!(pf > rho * rho + 1e-3, "x={x}: {pf} vs {}", rho * rho);
    }
}

#[test]
fn tables() {
    let p = params(1.0, 0.3);
    let t = KernelTable::static_grid(KernelKind::DetStatic, &[1, 2, 3], Some(p), None).unwrap();
    assert_eq!(t.entries.len(), 9);
    assert!(t.est_tail < 1e-12);
    assert!(t.truncation_terms >= series_cutoff(p.series_tol(), p.xi()).min(16));
    let csv = t.to_csv();
    assert_eq!(csv.lines().next().unwrap(), "x,y,value,est_tail");
    assert_eq!(csv.lines().count(), 10);
    let json: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
    assert_eq!(json["entries"].as_array().unwrap().len(), 9);
    let s = pf_static_series(2, -3, &p).unwrap();
    assert!(s.est_tail < 1e-15 && s.terms > 0);
    let d = pf_dynamic_series(0.0, 2, 1.0, -3, &p).unwrap();
    assert!(d.est_tail < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prop_pf_static_skew(alpha in 0.1f64..5.0, xi in 0.05f64..0.9, x in -10i64..10, y in -10i64..10) {
        let p = params(alpha, xi);
        let a = pf_static(x, y, &p).unwrap();
        let b = pf_static(y, x, &p).unwrap();
        if x == -y {
            // completeness of the φ_m
            prop_assert!((a + b - 1.0).abs() < 1e-11);
        } else {
            prop_assert!((a + b).abs() < 1e-11);
        }
    }

    #[test]
    fn prop_density_in_unit_interval(alpha in 0.1f64..5.0, xi in 0.05f64..0.9, x in 1i64..15) {
        let p = params(alpha, xi);
        let rho = det_static(x, x, &p).unwrap();
        prop_assert!((-1e-12..=1.0).contains(&rho));
    }

    #[test]
    fn prop_dynamic_damps(alpha in 0.1f64..5.0, xi in 0.05f64..0.9, x in 1i64..6, gap in 0.0f64..3.0) {
        // on the diagonal every mode enters with a square weight
        let p = params(alpha, xi);
        let limit = pf_dynamic(0.0, x, 1e3, -x, &p).unwrap();
        let a = pf_dynamic(0.0, x, gap, -x, &p).unwrap() - limit;
        let b = pf_dynamic(0.0, x, gap + 0.5, -x, &p).unwrap() - limit;
        prop_assert!(b >= -1e-14 && b <= a + 1e-14, "{a} {b}");
    }
}
