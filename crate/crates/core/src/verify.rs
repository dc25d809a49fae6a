//! The acceptance suite: twelve families of numerical checks with their
//! tolerances, measured residuals and runtimes.

use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::dynamics::{birth_death_rates, estimate_correlation};
use crate::error::Result;
use crate::io::to_json_string;
use crate::kernels::{
    det_plancherel, det_plancherel_integrable, det_static, det_static_integrable, pf_dynamic, pf_plancherel,
    pf_static, pf_static_closed, zz_dynamic, zz_static_closed,
};
use crate::kerov::{apply_d, apply_h, apply_u, measure_from_operators, z_n, Gauge, TruncatedVector};
use crate::measures::{
    down_kernel, l_matrix, m_alpha_n, neg_binomial, plancherel_n, WeightFunction,
};
use crate::oracle::{dynamic_correlation_on, exact_static_correlation, semigroup, TruncatedStateSpace};
use crate::partitions::{enumerate, enumerate_up_to};
use crate::pfaffian::{
    assemble_dynamic, assemble_static, det, involution_matrix, pf_to_det, pfaffian, pfaffian_dense, Labeling,
    SkewMatrix,
};
use crate::specfun::{difference_operator, phi, psi, HalfInt, ModelParams, PlancherelParams, ZPair};

/// Default seed of the Monte Carlo family.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// One named comparison with its worst case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub tolerance: f64,
    pub residual: f64,
    pub passed: bool,
    /// Where the worst case occurred.
    pub worst_case: String,
}

/// One acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub family: &'static str,
    pub description: &'static str,
    pub runtime_limit: f64,
    pub seconds: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        to_json_string(&serde_json::to_value(self).expect("serializable"))
    }
}

/// Accumulates the case with the largest residual-to-tolerance ratio.
struct Worst {
    name: String,
    tolerance: f64,
    residual: f64,
    ratio: f64,
    case: String,
    failed: bool,
}

impl Worst {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            tolerance: f64::NAN,
            residual: 0.0,
            ratio: -1.0,
            case: String::new(),
            failed: false,
        }
    }

    fn add(&mut self, residual: f64, tolerance: f64, case: impl FnOnce() -> String) {
        let ratio = residual / tolerance;
        let bad = !(residual <= tolerance);
        if ratio > self.ratio || (bad && !self.failed) || ratio.is_nan() {
            self.ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
            self.residual = residual;
            self.tolerance = tolerance;
            self.case = case();
        }
        self.failed |= bad;
    }

    fn finish(self) -> Check {
        Check {
            name: self.name,
            tolerance: self.tolerance,
            residual: self.residual,
            passed: !self.failed && self.ratio >= 0.0,
            worst_case: self.case,
        }
    }
}

fn single(name: &str, residual: f64, tolerance: f64, case: String) -> Check {
    let mut w = Worst::new(name);
    w.add(residual, tolerance, || case);
    w.finish()
}

struct Family {
    id: u8,
    name: &'static str,
    description: &'static str,
    runtime_limit: f64,
    run: fn(u64) -> Result<Vec<Check>>,
}

const FAMILIES: [Family; 12] = [
    Family {
        id: 1,
        name: "coherency",
        description: "measure normalization and coherency",
        runtime_limit: 5.0,
        run: coherency,
    },
    Family {
        id: 2,
        name: "kerov",
        description: "Kerov operator algebra and measure reconstruction",
        runtime_limit: 5.0,
        run: kerov_algebra,
    },
    Family {
        id: 3,
        name: "specfun",
        description: "orthonormality, recurrences and symmetries of the special functions",
        runtime_limit: 10.0,
        run: special_functions,
    },
    Family {
        id: 4,
        name: "triple",
        description: "enumeration oracle = Pfaffian = determinant for static correlations",
        runtime_limit: 60.0,
        run: triple_agreement,
    },
    Family {
        id: 5,
        name: "dual-form",
        description: "series and closed forms of the kernels agree",
        runtime_limit: 10.0,
        run: dual_forms,
    },
    Family {
        id: 6,
        name: "z-kernels",
        description: "kernels expressed through the discrete hypergeometric kernel",
        runtime_limit: 20.0,
        run: z_kernels,
    },
    Family {
        id: 7,
        name: "dynamic",
        description: "extended Pfaffian kernel against the semigroup oracle",
        runtime_limit: 120.0,
        run: dynamic_pfaffian,
    },
    Family {
        id: 8,
        name: "monte-carlo",
        description: "Monte Carlo estimates against Pfaffian predictions",
        runtime_limit: 300.0,
        run: monte_carlo,
    },
    Family {
        id: 9,
        name: "plancherel",
        description: "Plancherel degeneration of the kernels",
        runtime_limit: 10.0,
        run: plancherel_limit,
    },
    Family {
        id: 10,
        name: "linear-algebra",
        description: "Pfaffian identities and the reduction to determinants",
        runtime_limit: 5.0,
        run: linear_algebra,
    },
    Family {
        id: 11,
        name: "l-ensemble",
        description: "K = L(1+L)^{-1} and 0 ≤ K ≤ 1",
        runtime_limit: 5.0,
        run: l_ensemble,
    },
    Family {
        id: 12,
        name: "stationarity",
        description: "invariance, reversibility and the semigroup property",
        runtime_limit: 30.0,
        run: stationarity,
    },
];

/// Names accepted by [`run`] as family filters.
pub fn family_names() -> Vec<&'static str> {
    FAMILIES.iter().map(|f| f.name).collect()
}

/// Runs the selected families (all when `only` is empty), in order.
pub fn run(only: &[String], seed: u64) -> std::result::Result<Report, String> {
    for name in only {
        if !FAMILIES.iter().any(|f| f.name == name || f.id.to_string() == *name) {
            return Err(format!("unknown check family {name:?}; known: {}", family_names().join(", ")));
        }
    }
    let criteria: Vec<CriterionReport> = FAMILIES
        .iter()
        .filter(|f| only.is_empty() || only.iter().any(|n| n == f.name || *n == f.id.to_string()))
        .map(|f| run_family(f, seed))
        .collect();
    Ok(Report {
        seed,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    })
}

/// Runs criterion `id` (1-based).
pub fn run_one(id: u8, seed: u64) -> CriterionReport {
    run_family(&FAMILIES[id as usize - 1], seed)
}

fn run_family(f: &Family, seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = (f.run)(seed);
    let seconds = start.elapsed().as_secs_f64();
    let (checks, error) = match outcome {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let mut checks = checks;
    checks.push(single("runtime", seconds, f.runtime_limit, "seconds".into()));
    CriterionReport {
        id: f.id,
        family: f.name,
        description: f.description,
        runtime_limit: f.runtime_limit,
        seconds,
        passed: error.is_none() && checks.iter().all(|c| c.passed),
        checks,
        error,
    }
}

const ALPHAS: [f64; 3] = [0.2, 1.0, 3.0];
const XIS: [f64; 3] = [0.1, 0.3, 0.5];

fn grid() -> Vec<ModelParams> {
    ALPHAS
        .iter()
        .flat_map(|&a| XIS.iter().map(move |&x| ModelParams::new(a, x).expect("valid grid")))
        .collect()
}

fn coherency(_: u64) -> Result<Vec<Check>> {
    let mut norm = Worst::new("normalization of Pl_n and M_{α,n}, n ≤ 7");
    let mut coh = Worst::new("coherency M_n = M_{n+1} ∘ p↓, n ≤ 7");
    for n in 0..=7 {
        let level = enumerate(n)?;
        let s: f64 = level.iter().map(plancherel_n).sum();
        norm.add((s - 1.0).abs(), 1e-10, || format!("Pl_{n}"));
        for &a in &ALPHAS {
            let s: f64 = level.iter().map(|l| m_alpha_n(l, a)).sum();
            norm.add((s - 1.0).abs(), 1e-10, || format!("M_{{{a},{n}}}"));
            let mut pushed = std::collections::HashMap::new();
            for kappa in enumerate(n + 1)? {
                let mk = m_alpha_n(&kappa, a);
                for (mu, pr) in down_kernel(&kappa) {
                    *pushed.entry(mu).or_insert(0.0) += mk * pr;
                }
            }
            for lambda in &level {
                let r = (pushed.get(lambda).copied().unwrap_or(0.0) - m_alpha_n(lambda, a)).abs();
                coh.add(r, 1e-10, || format!("α={a}, λ={lambda}"));
            }
        }
    }
    Ok(vec![norm.finish(), coh.finish()])
}

fn kerov_algebra(_: u64) -> Result<Vec<Check>> {
    let mut comm = Worst::new("[H,U]=2U, [H,D]=−2D, [D,U]=H on weights ≤ 6");
    let mut zn = Worst::new("Z_n = n!(α/2)_n");
    let mut rec = Worst::new("operator reconstruction of M_{α,n}, n ≤ 6");
    let cap = 7;
    for &a in &ALPHAS {
        for gauge in [Gauge::Symmetric, Gauge::Twisted] {
            for lambda in enumerate_up_to(6)? {
                let v = TruncatedVector::basis(lambda.clone(), cap)?;
                let u = apply_u(&v, a, gauge)?;
                let d = apply_d(&v, a, gauge);
                let hu = apply_h(&u, a).sub(&apply_u(&apply_h(&v, a), a, gauge)?).sub(&u.scaled(2.0));
                let hd = apply_h(&d, a).sub(&apply_d(&apply_h(&v, a), a, gauge)).sub(&d.scaled(-2.0));
                let du = apply_d(&u, a, gauge).sub(&apply_u(&d, a, gauge)?).sub(&apply_h(&v, a));
                let r = hu.max_abs().max(hd.max_abs()).max(du.max_abs());
                comm.add(r, 1e-10, || format!("α={a}, {gauge:?}, λ={lambda}"));
                let m = measure_from_operators(&lambda, a, gauge)?;
                rec.add((m - m_alpha_n(&lambda, a)).abs(), 1e-10, || format!("α={a}, {gauge:?}, λ={lambda}"));
            }
        }
        for n in 0..=10 {
            let want = (ln_gamma(n as f64 + 1.0) + ln_gamma(a / 2.0 + n as f64) - ln_gamma(a / 2.0)).exp();
            zn.add((z_n(n, a) - want).abs() / want, 1e-10, || format!("α={a}, n={n}"));
        }
    }
    Ok(vec![comm.finish(), zn.finish(), rec.finish()])
}

fn special_functions(_: u64) -> Result<Vec<Check>> {
    let mut ortho = Worst::new("orthonormality of φ_m, |m|,|l| ≤ 5");
    let mut three = Worst::new("three-term relation in m, (m,x) ∈ [−8,8]²");
    let mut sym = Worst::new("φ_m(x) = φ_x(m) = (−1)^{m+x} φ_{−m}(−x)");
    let mut eig = Worst::new("difference-operator eigenrelation");
    let mut psi_id = Worst::new("φ_m(x) = ψ_{m+½+d}(x−½−d), d ∈ {−1,0,1}");
    for p in grid() {
        let xi = p.xi();
        let reach = crate::kernels::series_cutoff(1e-16, xi) as i64 + 12;
        let cols: Vec<Vec<f64>> = (-5..=5)
            .map(|m| (-reach..=reach).map(|x| phi(m, x, &p)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        for (i, ci) in cols.iter().enumerate() {
            for (j, cj) in cols.iter().enumerate().skip(i) {
                let s: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                ortho.add((s - want).abs(), 1e-6, || format!("α={}, ξ={xi}, m={}, l={}", p.alpha(), i as i64 - 5, j as i64 - 5));
            }
        }
        let pf = |k: i64| crate::specfun::pair_factor(k, p.alpha());
        for m in -8..=8i64 {
            for x in -8..=8i64 {
                let f = |k: i64| phi(k, x, &p);
                let lhs = (1.0 - xi) * x as f64 * f(m)?;
                let rhs = (xi * pf(m - 1)).sqrt() * f(m - 1)? + (xi * pf(m)).sqrt() * f(m + 1)? - m as f64 * (1.0 + xi) * f(m)?;
                three.add((lhs - rhs).abs(), 1e-10, || format!("α={}, ξ={xi}, m={m}, x={x}", p.alpha()));
            }
        }
        for m in -6..=6i64 {
            for x in -6..=6i64 {
                let v = phi(m, x, &p)?;
                let sign = if (m + x) % 2 == 0 { 1.0 } else { -1.0 };
                let r = (v - phi(x, m, &p)?).abs().max((v - sign * phi(-m, -x, &p)?).abs());
                sym.add(r, 1e-12, || format!("α={}, ξ={xi}, m={m}, x={x}", p.alpha()));
            }
        }
        for m in -5..=5i64 {
            for x in -8..=8i64 {
                let near = [phi(m, x - 1, &p)?, phi(m, x, &p)?, phi(m, x + 1, &p)?];
                let d = difference_operator(|y| near[(y - x + 1) as usize], x, &p, false);
                let r = (d - m as f64 * (1.0 - xi) * phi(m, x, &p)?).abs();
                eig.add(r, 1e-9, || format!("α={}, ξ={xi}, m={m}, x={x}", p.alpha()));
            }
        }
        for d in -1..=1i64 {
            for m in -5..=5i64 {
                for x in -5..=5i64 {
                    let v = psi(HalfInt::from_floor(m + d), HalfInt::from_floor(x - 1 - d), ZPair::new(d), &p)?;
                    psi_id.add((v - phi(m, x, &p)?).abs(), 1e-10, || format!("α={}, ξ={xi}, d={d}, m={m}, x={x}", p.alpha()));
                }
            }
        }
    }
    Ok(vec![ortho.finish(), three.finish(), sym.finish(), eig.finish(), psi_id.finish()])
}

/// All nonempty subsets of {1, …, 6} with at most three elements.
fn small_subsets() -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for mask in 1u32..64 {
        if mask.count_ones() <= 3 {
            out.push((1..=6).filter(|x| mask & (1 << (x - 1)) != 0).collect());
        }
    }
    out
}

fn det_kernel_matrix(xs: &[u32], p: &ModelParams) -> Result<DMatrix<f64>> {
    let n = xs.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = det_static(xs[i] as i64, xs[j] as i64, p)?;
        }
    }
    Ok(m)
}

fn triple_agreement(_: u64) -> Result<Vec<Check>> {
    let mut op = Worst::new("enumeration oracle vs Pfaffian");
    let mut od = Worst::new("enumeration oracle vs determinant");
    let mut pd = Worst::new("Pfaffian vs determinant");
    for p in grid() {
        for xs in small_subsets() {
            let oracle = exact_static_correlation(&xs, &p, 1e-10)?;
            let pf = pfaffian(&assemble_static(&xs, &p)?)?;
            let dt = det(&det_kernel_matrix(&xs, &p)?);
            let case = || format!("α={}, ξ={}, X={xs:?}", p.alpha(), p.xi());
            op.add((oracle.value - pf).abs(), oracle.error_bound + 1e-6, case);
            od.add((oracle.value - dt).abs(), oracle.error_bound + 1e-6, case);
            pd.add((pf - dt).abs(), 1e-6, case);
        }
    }
    Ok(vec![op.finish(), od.finish(), pd.finish()])
}

fn dual_forms(_: u64) -> Result<Vec<Check>> {
    let mut det_w = Worst::new("determinantal kernel: sum vs integrable form");
    let mut pf_w = Worst::new("Pfaffian kernel: series vs closed form");
    let mut bes = Worst::new("Bessel kernel: series vs integrable form");
    for p in grid() {
        for x in 1..=8i64 {
            for y in 1..=8i64 {
                if x != y {
                    let r = (det_static(x, y, &p)? - det_static_integrable(x, y, &p)?).abs();
                    det_w.add(r, 1e-9, || format!("α={}, ξ={}, x={x}, y={y}", p.alpha(), p.xi()));
                }
            }
        }
        for x in -6..=6i64 {
            for y in -6..=6i64 {
                if x != -y {
                    let r = (pf_static(x, y, &p)? - pf_static_closed(x, y, &p)?).abs();
                    pf_w.add(r, 1e-9, || format!("α={}, ξ={}, x={x}, y={y}", p.alpha(), p.xi()));
                }
            }
        }
    }
    for theta in [0.5, 2.0, 10.0] {
        let p = PlancherelParams::new(theta)?;
        for x in 1..=10i64 {
            for y in 1..=10i64 {
                if x != y {
                    let r = (det_plancherel(x, y, &p)? - det_plancherel_integrable(x, y, &p)?).abs();
                    bes.add(r, 1e-9, || format!("θ={theta}, x={x}, y={y}"));
                }
            }
        }
    }
    Ok(vec![det_w.finish(), pf_w.finish(), bes.finish()])
}

fn pf_sign(x: i64, y: i64) -> f64 {
    if (x.min(0) + y.max(0)) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn z_kernels(_: u64) -> Result<Vec<Check>> {
    let mut knuxi = Worst::new("√(x/y)·K(x,y) through the discrete hypergeometric kernel");
    let mut stat = Worst::new("static Pfaffian kernel through the discrete hypergeometric kernel");
    let mut dynm = Worst::new("extended Pfaffian kernel through the extended discrete hypergeometric kernel");
    let (lower, upper) = (ZPair::new(-1), ZPair::new(0));
    let h = HalfInt::from_floor;
    let settings = [(0.2, 0.3), (1.0, 0.5), (3.0, 0.1), (1.0, 0.2)];
    for (a, xi) in settings {
        let p = ModelParams::new(a, xi)?;
        for x in 1..=4i64 {
            for y in 1..=4i64 {
                let lhs = ((x as f64) / (y as f64)).sqrt() * det_static(x, y, &p)?;
                let sign = if y % 2 == 0 { 1.0 } else { -1.0 };
                let rhs = zz_static_closed(h(x - 1), h(y - 1), upper, &p)? + sign * zz_static_closed(h(x), h(-y), lower, &p)?;
                knuxi.add((lhs - rhs).abs(), 1e-8, || format!("α={a}, ξ={xi}, x={x}, y={y}"));
            }
        }
        for x in -4..=4i64 {
            for y in -4..=4i64 {
                let rhs = 0.5
                    * pf_sign(x, y)
                    * (zz_static_closed(h(x), h(-y), lower, &p)? + zz_static_closed(h(x - 1), h(-y - 1), upper, &p)?);
                stat.add((pf_static(x, y, &p)? - rhs).abs(), 1e-8, || format!("α={a}, ξ={xi}, x={x}, y={y}"));
                for dt in [0.0, 0.5, 2.0] {
                    let lhs = pf_dynamic(0.0, x, dt, y, &p)?;
                    let rhs = 0.5
                        * pf_sign(x, y)
                        * ((-dt / 2.0).exp() * zz_dynamic(dt, h(x), 0.0, h(-y), lower, &p)?
                            + (dt / 2.0).exp() * zz_dynamic(dt, h(x - 1), 0.0, h(-y - 1), upper, &p)?);
                    dynm.add((lhs - rhs).abs(), 1e-8, || format!("α={a}, ξ={xi}, x={x}, y={y}, Δt={dt}"));
                }
            }
        }
    }
    Ok(vec![knuxi.finish(), stat.finish(), dynm.finish()])
}

fn dynamic_pfaffian(_: u64) -> Result<Vec<Check>> {
    let p = ModelParams::new(1.0, 0.2)?;
    let space = TruncatedStateSpace::for_tolerance(&p, 1e-9)?;
    let mut w = Worst::new("Pfaffian vs semigroup oracle, n ∈ {2,3}");
    for dt in [0.1, 0.5, 2.0] {
        let configs: [Vec<(f64, u32)>; 5] = [
            vec![(0.0, 1), (dt, 2)],
            vec![(0.0, 1), (dt, 1)],
            vec![(0.0, 2), (dt, 1)],
            vec![(0.0, 1), (dt, 2), (2.0 * dt, 1)],
            vec![(0.0, 1), (0.0, 3), (dt, 2)],
        ];
        for pts in configs {
            let oracle = dynamic_correlation_on(&space, &pts)?;
            let pf = pfaffian(&assemble_dynamic(&pts, &p)?)?;
            w.add((oracle.value - pf).abs(), oracle.error_bound + 1e-5, || format!("points={pts:?}"));
        }
    }
    let far = pfaffian(&assemble_dynamic(&[(0.0, 1), (50.0, 2)], &p)?)?;
    let product = det_static(1, 1, &p)? * det_static(2, 2, &p)?;
    Ok(vec![w.finish(), single("Δt = 50 factorization", (far - product).abs(), 1e-8, "x=(1,2)".into())])
}

fn monte_carlo(seed: u64) -> Result<Vec<Check>> {
    let p = ModelParams::new(2.0, 0.5)?;
    let r = 100_000;
    let configs: [Vec<(f64, u32)>; 3] = [vec![(0.0, 1), (0.0, 2)], vec![(0.0, 1), (0.5, 1)], vec![(0.0, 1), (1.0, 2)]];
    let mut w = Worst::new("estimate within 4 standard errors of the Pfaffian");
    for pts in &configs {
        let target = pfaffian(&assemble_dynamic(pts, &p)?)?;
        let est = estimate_correlation(pts, &p, r, seed)?;
        w.add((est.estimate - target).abs(), 4.0 * est.std_error, || {
            format!("points={pts:?}, estimate={}, target={target}", est.estimate)
        });
    }
    let a = estimate_correlation(&configs[2], &p, 2000, seed)?;
    let b = estimate_correlation(&configs[2], &p, 2000, seed)?;
    Ok(vec![w.finish(), single("determinism under a fixed seed", (a.estimate - b.estimate).abs(), 0.0, format!("seed={seed}"))])
}

fn plancherel_limit(_: u64) -> Result<Vec<Check>> {
    let mut st = Worst::new("K_{α,ξ} → K_θ at α = 10⁴");
    let mut dy = Worst::new("Φ_{α,ξ} → Φ_θ at α = 10⁴, Δt = 1");
    for theta in [0.5, 2.0] {
        let p = ModelParams::new(1e4, theta / 1e4)?;
        let q = PlancherelParams::new(theta)?;
        for x in 1..=8i64 {
            for y in 1..=8i64 {
                let r = (det_static(x, y, &p)? - det_plancherel(x, y, &q)?).abs();
                st.add(r, 1e-3, || format!("θ={theta}, x={x}, y={y}"));
            }
        }
        for x in -8..=8i64 {
            for y in -8..=8i64 {
                let r = (pf_dynamic(0.0, x, 1.0, y, &p)? - pf_plancherel(0.0, x, 1.0, y, &q)?).abs();
                dy.add(r, 1e-3, || format!("θ={theta}, x={x}, y={y}"));
            }
        }
    }
    Ok(vec![st.finish(), dy.finish()])
}

fn random_skew(dim: usize, rng: &mut ChaCha8Rng) -> SkewMatrix {
    SkewMatrix::from_upper(dim, Labeling::Plain, |_, _| rng.gen_range(-1.0..1.0)).expect("even dimension")
}

fn linear_algebra(_: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sq = Worst::new("Pf² = det, dim ≤ 12 (relative)");
    for dim in (2..=12).step_by(2) {
        for _ in 0..20 {
            let a = random_skew(dim, &mut rng);
            let pf = pfaffian(&a)?;
            let d = det(a.as_matrix());
            sq.add((pf * pf - d).abs() / d.abs(), 1e-8, || format!("dim={dim}"));
        }
    }
    let mut congruence = Worst::new("Pf(BABᵀ) = det B · Pf A, dim 6");
    for _ in 0..20 {
        let a = random_skew(6, &mut rng);
        let b = DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
        let bab = SkewMatrix::from_dense(&(&b * a.as_matrix() * b.transpose()), Labeling::Plain)?;
        let want = det(&b) * pfaffian(&a)?;
        congruence.add((pfaffian(&bab)? - want).abs(), 1e-8 * want.abs().max(1.0), || "random".into());
    }
    let mut block = Worst::new("block Pfaffian = (−1)^{n(n−1)/2} det M, n ≤ 5");
    for n in 1..=5usize {
        for _ in 0..10 {
            let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let mut full = DMatrix::zeros(2 * n, 2 * n);
            full.view_mut((0, n), (n, n)).copy_from(&m);
            full.view_mut((n, 0), (n, n)).copy_from(&(-m.transpose()));
            let sign = if (n * (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            block.add((pfaffian_dense(&full)? - sign * det(&m)).abs(), 1e-9, || format!("n={n}"));
        }
    }
    let mut kernel_red = Worst::new("reduction with the Pfaffian kernel reproduces det K");
    for p in [ModelParams::new(1.0, 0.2)?, ModelParams::new(3.0, 0.5)?] {
        for xs in [vec![1i64], vec![1, 2], vec![2, 5, 3], vec![1, 4, 6, 2]] {
            let k = pf_to_det(
                |a: &i64, b: &i64| pf_static(*a, *b, &p).unwrap_or(f64::NAN),
                |a| -a,
                |a| *a as f64,
                &xs,
            )?;
            let direct = DMatrix::from_fn(xs.len(), xs.len(), |i, j| det_static(xs[i], xs[j], &p).unwrap_or(f64::NAN));
            let pf = pfaffian(&involution_matrix(|a: &i64, b: &i64| pf_static(*a, *b, &p).unwrap_or(f64::NAN), |a| -a, &xs))?;
            let r = (det(&k) - pf).abs().max((&k - &direct).abs().max());
            kernel_red.add(r, 1e-9, || format!("α={}, ξ={}, X={xs:?}", p.alpha(), p.xi()));
        }
    }
    let mut random_red = Worst::new("reduction on randomly built compliant kernels");
    for n in 1..=5usize {
        for _ in 0..10 {
            let (f, kernel) = random_compliant(n, &mut rng);
            let pts: Vec<(usize, bool)> = (0..n).map(|i| (i, true)).collect();
            let k = pf_to_det(&kernel, |a| (a.0, !a.1), |a| f[a.0], &pts)?;
            let pf = pfaffian(&involution_matrix(&kernel, |a| (a.0, !a.1), &pts))?;
            random_red.add((det(&k) - pf).abs(), 1e-9, || format!("n={n}"));
        }
    }
    Ok(vec![
        sq.finish(),
        congruence.finish(),
        block.finish(),
        kernel_red.finish(),
        random_red.finish(),
    ])
}

/// A kernel on {1..n} × {±} satisfying the three reduction properties,
/// obtained by undoing the hyperbolic rotation applied to a random
/// symmetric block.
pub fn random_compliant(n: usize, rng: &mut impl Rng) -> (Vec<f64>, impl Fn(&(usize, bool), &(usize, bool)) -> f64) {
    let f: Vec<f64> = (0..n).map(|i| i as f64 + 0.5 + rng.gen_range(0.0..0.4)).collect();
    let mut g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    g = (&g + g.transpose()) * 0.5;
    let fc = f.clone();
    let kernel = move |a: &(usize, bool), b: &(usize, bool)| {
        let (i, j) = (a.0, b.0);
        let ratio = (fc[i] - fc[j]) / (fc[i] + fc[j]);
        match (a.1, b.1) {
            (true, true) => ratio * g[(i, j)],
            (true, false) => g[(i, j)],
            (false, true) => -g[(i, j)],
            (false, false) => -ratio * g[(i, j)],
        }
    };
    (f, kernel)
}

fn l_ensemble(_: u64) -> Result<Vec<Check>> {
    let size = 60;
    let mut ent = Worst::new("K = L(1+L)^{-1} entrywise on [1,60]²");
    let mut spec = Worst::new("spectrum of truncated K in [−1e−8, 1+1e−8]");
    for p in [ModelParams::new(1.0, 0.2)?, ModelParams::new(3.0, 0.5)?, ModelParams::new(0.2, 0.7)?] {
        let l = l_matrix(&WeightFunction::Hypergeometric(p), size);
        let one_plus = &l + DMatrix::identity(size, size);
        let k_l = one_plus
            .lu()
            .solve(&l)
            .ok_or_else(|| crate::Error::InvalidParameters("1 + L is singular".into()))?;
        let mut k = DMatrix::zeros(size, size);
        for i in 0..size {
            for j in i..size {
                let v = det_static(i as i64 + 1, j as i64 + 1, &p)?;
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        let r = (&k - &k_l).abs().max();
        ent.add(r, 1e-6, || format!("α={}, ξ={}", p.alpha(), p.xi()));
        let eig = SymmetricEigen::new(k).eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        let out = (-lo).max(hi - 1.0).max(0.0);
        spec.add(out, 1e-8, || format!("α={}, ξ={}, range=[{lo:e}, {hi}]", p.alpha(), p.xi()));
    }
    Ok(vec![ent.finish(), spec.finish()])
}

fn stationarity(_: u64) -> Result<Vec<Check>> {
    let mut inv = Worst::new("M_{α,ξ} ∘ Q = 0 on weights ≤ 6");
    let mut db = Worst::new("detailed balance of the partition process");
    let mut bd = Worst::new("detailed balance of the weight chain, n ≤ 30");
    for p in [ModelParams::new(1.0, 0.2)?, ModelParams::new(3.0, 0.5)?, ModelParams::new(0.2, 0.3)?] {
        let space = TruncatedStateSpace::new(&p, 8)?;
        let q = space.generator();
        let m = space.measure();
        let flow = q.tr_mul(m);
        for (j, s) in space.states().iter().enumerate() {
            if s.weight() <= 6 {
                inv.add(flow[j].abs(), 1e-10, || format!("α={}, ξ={}, μ={s}", p.alpha(), p.xi()));
            }
            for i in 0..j {
                let r = (m[i] * q[(i, j)] - m[j] * q[(j, i)]).abs();
                db.add(r, 1e-10, || format!("α={}, ξ={}, {} ↔ {s}", p.alpha(), p.xi(), space.states()[i]));
            }
        }
        for n in 0..30 {
            let (up, _) = birth_death_rates(n, &p);
            let (_, down) = birth_death_rates(n + 1, &p);
            let r = (neg_binomial(n, &p) * up - neg_binomial(n + 1, &p) * down).abs();
            bd.add(r, 1e-10, || format!("α={}, ξ={}, n={n}", p.alpha(), p.xi()));
        }
    }
    let p = ModelParams::new(1.0, 0.2)?;
    let space = TruncatedStateSpace::for_tolerance(&p, 1e-10)?;
    let mut ck = Worst::new("Chapman–Kolmogorov ‖P(s+t) − P(s)P(t)‖_∞");
    let mut sdb = Worst::new("detailed balance of the semigroup on interior states");
    for (s, t) in [(0.3, 0.7), (1.0, 1.0), (0.1, 0.5)] {
        let ps = semigroup(s, &space)?;
        let pt = semigroup(t, &space)?;
        let pst = semigroup(s + t, &space)?;
        let diff = &pst - &ps * &pt;
        let norm = diff.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max);
        ck.add(norm, 1e-9, || format!("s={s}, t={t}"));
        let m = space.measure();
        let interior: Vec<usize> = (0..space.states().len())
            .filter(|&i| space.states()[i].weight() + 4 <= space.cap())
            .collect();
        for &i in &interior {
            for &j in &interior {
                let r = (m[i] * ps[(i, j)] - m[j] * ps[(j, i)]).abs();
                sdb.add(r, 1e-9, || format!("t={s}, {} ↔ {}", space.states()[i], space.states()[j]));
            }
        }
    }
    Ok(vec![inv.finish(), db.finish(), bd.finish(), ck.finish(), sdb.finish()])
}

/// One PASS/FAIL line per criterion.
pub fn summary_lines(report: &Report) -> Vec<String> {
    report
        .criteria
        .iter()
        .map(|c| {
            format!(
                "{} criterion {:>2} [{}] {:.2}s{}",
                if c.passed { "PASS" } else { "FAIL" },
                c.id,
                c.family,
                c.seconds,
                c.error.as_ref().map_or(String::new(), |e| format!(" error: {e}"))
            )
        })
        .collect()
}
