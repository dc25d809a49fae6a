//! Probability measures on strict partitions and the kernels linking
//! consecutive levels of the Schur graph.

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::partitions::{log_dim_schur, StrictPartition};
use crate::specfun::{log_pair_shift, ModelParams, PlancherelParams};

/// Weight w(x) on Z_{>0} of an L-ensemble with kernel 2√(xy w(x)w(y))/(x+y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum WeightFunction {
    Hypergeometric(ModelParams),
    Plancherel(PlancherelParams),
}

impl WeightFunction {
    pub fn log_eval(&self, x: u32) -> f64 {
        match self {
            Self::Hypergeometric(p) => {
                x as f64 * p.xi().ln() - std::f64::consts::LN_2 + log_pair_shift(x as i64, p.alpha())
                    - 2.0 * ln_factorial(x as u64)
            }
            Self::Plancherel(p) => x as f64 * p.theta().ln() - std::f64::consts::LN_2 - 2.0 * ln_factorial(x as u64),
        }
    }

    pub fn eval(&self, x: u32) -> f64 {
        self.log_eval(x).exp()
    }

    /// Upper bound on Σ_{y ≥ x} w(y) from a geometric majorant of the
    /// ratios w(y+1)/w(y); infinite when no majorant below 1 is available.
    pub fn tail_bound(&self, x: u32) -> f64 {
        let xf = x as f64;
        let ratio = match self {
            Self::Hypergeometric(p) => p.xi() * ((xf * xf + xf + p.alpha()) / ((xf + 1.0) * (xf + 1.0))).max(1.0),
            Self::Plancherel(p) => p.theta() / ((xf + 1.0) * (xf + 1.0)),
        };
        if ratio < 1.0 {
            self.eval(x) / (1.0 - ratio)
        } else {
            f64::INFINITY
        }
    }
}

fn log_cross(parts: &[u32]) -> f64 {
    let mut v = 0.0;
    for (k, &a) in parts.iter().enumerate() {
        for &b in &parts[k + 1..] {
            v += 2.0 * ((a - b) as f64 / (a + b) as f64).ln();
        }
    }
    v
}

fn log_pochhammer(a: f64, n: usize) -> f64 {
    (0..n).map(|i| (a + i as f64).ln()).sum()
}

pub fn log_plancherel_n(lambda: &StrictPartition) -> f64 {
    let n = lambda.weight();
    let mut v = (n - lambda.len()) as f64 * std::f64::consts::LN_2 + ln_factorial(n as u64);
    for &p in lambda.parts() {
        v -= 2.0 * ln_factorial(p as u64);
    }
    v + log_cross(lambda.parts())
}

/// Pl_n(λ) with n = |λ|.
pub fn plancherel_n(lambda: &StrictPartition) -> f64 {
    log_plancherel_n(lambda).exp()
}

pub fn log_m_alpha_n(lambda: &StrictPartition, alpha: f64) -> f64 {
    let n = lambda.weight();
    let boxes: f64 = lambda.parts().iter().map(|&p| log_pair_shift(p as i64, alpha)).sum();
    let norm: f64 = (0..n).map(|i| (alpha + 2.0 * i as f64).ln()).sum();
    log_plancherel_n(lambda) + boxes - norm
}

/// M_{α,n}(λ) with n = |λ|.
pub fn m_alpha_n(lambda: &StrictPartition, alpha: f64) -> f64 {
    log_m_alpha_n(lambda, alpha).exp()
}

pub fn log_neg_binomial(n: usize, p: &ModelParams) -> f64 {
    let a = p.alpha() / 2.0;
    a * (1.0 - p.xi()).ln() + log_pochhammer(a, n) + n as f64 * p.xi().ln() - ln_factorial(n as u64)
}

/// π_{α,ξ}(n) = (1−ξ)^{α/2} (α/2)_n ξ^n / n!.
pub fn neg_binomial(n: usize, p: &ModelParams) -> f64 {
    log_neg_binomial(n, p).exp()
}

/// Σ_{n > cap} π_{α,ξ}(n), summed directly.
pub fn neg_binomial_tail(cap: usize, p: &ModelParams) -> f64 {
    let mut sum = 0.0;
    let mut n = cap + 1;
    let mut term = neg_binomial(n, p);
    loop {
        sum += term;
        let ratio = p.xi() * (p.alpha() / 2.0 + n as f64) / (n + 1) as f64;
        term *= ratio;
        n += 1;
        if term < 1e-18 * sum.max(f64::MIN_POSITIVE) && ratio < 1.0 || term == 0.0 {
            return sum;
        }
    }
}

/// Least N with Σ_{n > N} π_{α,ξ}(n) < `tail_tol`.
pub fn truncation_level(tail_tol: f64, p: &ModelParams) -> usize {
    let mut n = 0;
    while neg_binomial_tail(n, p) >= tail_tol {
        n += 1;
    }
    n
}

pub fn log_m_alpha_xi(lambda: &StrictPartition, p: &ModelParams) -> f64 {
    let w = WeightFunction::Hypergeometric(*p);
    let singles: f64 = lambda.parts().iter().map(|&x| w.log_eval(x)).sum();
    0.5 * p.alpha() * (1.0 - p.xi()).ln() + singles + log_cross(lambda.parts())
}

/// M_{α,ξ}(λ) in product form.
pub fn m_alpha_xi(lambda: &StrictPartition, p: &ModelParams) -> f64 {
    let v = log_m_alpha_xi(lambda, p).exp();
    #[cfg(feature = "dual-path-check")]
    {
        let other = m_alpha_xi_mixture(lambda, p);
        assert!(
            (v - other).abs() <= 1e-12 * v.max(other).max(1e-300),
            "product and mixture forms disagree at {lambda}: {v} vs {other}"
        );
    }
    v
}

/// M_{α,ξ}(λ) = π_{α,ξ}(|λ|) · M_{α,|λ|}(λ).
pub fn m_alpha_xi_mixture(lambda: &StrictPartition, p: &ModelParams) -> f64 {
    (log_neg_binomial(lambda.weight(), p) + log_m_alpha_n(lambda, p.alpha())).exp()
}

/// Pl_θ(λ) = (θ/2)^n e^{−θ/2} / n! · Pl_n(λ).
pub fn plancherel_theta(lambda: &StrictPartition, p: &PlancherelParams) -> f64 {
    let n = lambda.weight();
    let t = p.theta();
    (n as f64 * (t / 2.0).ln() - t / 2.0 - ln_factorial(n as u64) + log_plancherel_n(lambda)).exp()
}

/// p↓(λ, μ) = dim μ / dim λ over the down neighbors of λ.
pub fn down_kernel(lambda: &StrictPartition) -> Vec<(StrictPartition, f64)> {
    let ld = log_dim_schur(lambda);
    lambda
        .down_neighbors()
        .into_iter()
        .map(|(mu, _)| {
            let pr = (log_dim_schur(&mu) - ld).exp();
            (mu, pr)
        })
        .collect()
}

/// p↑(λ, κ) = M_{n+1}(κ) p↓(κ, λ) / M_n(λ) over the up neighbors of λ.
pub fn up_kernel(lambda: &StrictPartition, alpha: f64) -> Vec<(StrictPartition, f64)> {
    let base = log_m_alpha_n(lambda, alpha) - log_dim_schur(lambda);
    lambda
        .up_neighbors()
        .into_iter()
        .map(|(kappa, _)| {
            let pr = (log_m_alpha_n(&kappa, alpha) - log_dim_schur(&kappa) - base).exp();
            (kappa, pr)
        })
        .collect()
}

/// L(x, y) = 2√(xy w(x) w(y))/(x+y) on 1 ≤ x, y ≤ size.
pub fn l_matrix(w: &WeightFunction, size: usize) -> DMatrix<f64> {
    let lw: Vec<f64> = (1..=size as u32).map(|x| w.log_eval(x)).collect();
    DMatrix::from_fn(size, size, |i, j| {
        let (x, y) = ((i + 1) as f64, (j + 1) as f64);
        2.0 * (x * y).sqrt() / (x + y) * (0.5 * (lw[i] + lw[j])).exp()
    })
}
