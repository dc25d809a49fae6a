//! Kerov's raising, lowering and grading operators on finitely supported
//! functions of strict partitions with weight at most a cap.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::partitions::{DiagramBox, StrictPartition};

/// Choice between the symmetric operators (U, D) and the gauge-transformed
/// pair (Û, D̂) whose lowering coefficients are all one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Gauge {
    #[default]
    Symmetric,
    Twisted,
}

/// A vector Σ c_λ 1_λ supported on partitions of weight ≤ cap.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedVector {
    cap: usize,
    coefficients: BTreeMap<StrictPartition, f64>,
}

impl TruncatedVector {
    pub fn zero(cap: usize) -> Self {
        Self {
            cap,
            coefficients: BTreeMap::new(),
        }
    }

    /// The basis vector 1_λ.
    pub fn basis(lambda: StrictPartition, cap: usize) -> Result<Self> {
        if lambda.weight() > cap {
            return Err(Error::CapExceeded {
                required: lambda.weight(),
                limit: cap,
            });
        }
        let mut v = Self::zero(cap);
        v.coefficients.insert(lambda, 1.0);
        Ok(v)
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// (v, 1_λ).
    pub fn coefficient(&self, lambda: &StrictPartition) -> f64 {
        self.coefficients.get(lambda).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StrictPartition, &f64)> {
        self.coefficients.iter()
    }

    fn add(&mut self, lambda: StrictPartition, c: f64) {
        *self.coefficients.entry(lambda).or_insert(0.0) += c;
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            cap: self.cap,
            coefficients: self.coefficients.iter().map(|(k, v)| (k.clone(), v * s)).collect(),
        }
    }

    /// self − other.
    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.coefficients {
            out.add(k.clone(), -v);
        }
        out
    }

    /// (self, other) in ℓ².
    pub fn dot(&self, other: &Self) -> f64 {
        self.coefficients.iter().map(|(k, v)| v * other.coefficient(k)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coefficients.values().fold(0.0, |a, b| a.max(b.abs()))
    }
}

fn content_factor(b: DiagramBox, alpha: f64) -> f64 {
    let c = b.content() as f64;
    c * (c + 1.0) + alpha
}

/// q_α(i, j) = 2^{−δ(j−i)/2} √((j−i)(j−i+1)+α).
pub fn q_alpha(b: DiagramBox, alpha: f64) -> f64 {
    let s = content_factor(b, alpha).sqrt();
    if b.content() == 0 {
        s * std::f64::consts::FRAC_1_SQRT_2
    } else {
        s
    }
}

fn up_coefficient(b: DiagramBox, alpha: f64, gauge: Gauge) -> f64 {
    match gauge {
        Gauge::Symmetric => q_alpha(b, alpha),
        Gauge::Twisted => {
            let f = content_factor(b, alpha);
            if b.content() == 0 {
                f / 2.0
            } else {
                f
            }
        }
    }
}

fn down_coefficient(b: DiagramBox, alpha: f64, gauge: Gauge) -> f64 {
    match gauge {
        Gauge::Symmetric => q_alpha(b, alpha),
        Gauge::Twisted => 1.0,
    }
}

/// Raising operator U (or Û).
pub fn apply_u(v: &TruncatedVector, alpha: f64, gauge: Gauge) -> Result<TruncatedVector> {
    let mut out = TruncatedVector::zero(v.cap);
    for (lambda, &c) in &v.coefficients {
        if c == 0.0 {
            continue;
        }
        if lambda.weight() >= v.cap {
            return Err(Error::CapBoundary { cap: v.cap });
        }
        for (kappa, b) in lambda.up_neighbors() {
            out.add(kappa, c * up_coefficient(b, alpha, gauge));
        }
    }
    Ok(out)
}

/// Lowering operator D (or D̂).
pub fn apply_d(v: &TruncatedVector, alpha: f64, gauge: Gauge) -> TruncatedVector {
    let mut out = TruncatedVector::zero(v.cap);
    for (lambda, &c) in &v.coefficients {
        for (mu, b) in lambda.down_neighbors() {
            out.add(mu, c * down_coefficient(b, alpha, gauge));
        }
    }
    out
}

/// Grading operator H 1_λ = (2|λ| + α/2) 1_λ.
pub fn apply_h(v: &TruncatedVector, alpha: f64) -> TruncatedVector {
    TruncatedVector {
        cap: v.cap,
        coefficients: v
            .coefficients
            .iter()
            .map(|(k, c)| (k.clone(), c * (2.0 * k.weight() as f64 + alpha / 2.0)))
            .collect(),
    }
}

/// Z_n = n! (α/2)_n.
pub fn z_n(n: usize, alpha: f64) -> f64 {
    (0..n).map(|i| (i + 1) as f64 * (alpha / 2.0 + i as f64)).product()
}

/// (U^n 1_∅, 1_λ)(D^n 1_λ, 1_∅) / Z_n with n = |λ|.
pub fn measure_from_operators(lambda: &StrictPartition, alpha: f64, gauge: Gauge) -> Result<f64> {
    let n = lambda.weight();
    let mut up = TruncatedVector::basis(StrictPartition::empty(), n)?;
    for _ in 0..n {
        up = apply_u(&up, alpha, gauge)?;
    }
    let mut down = TruncatedVector::basis(lambda.clone(), n)?;
    for _ in 0..n {
        down = apply_d(&down, alpha, gauge);
    }
    Ok(up.coefficient(lambda) * down.coefficient(&StrictPartition::empty()) / z_n(n, alpha))
}
