//! Ground truth for correlation functions: direct summation of the measure
//! over enumerated partitions, and the semigroup of the truncated generator.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::dynamics::{birth_death_rates, jump_rates};
use crate::error::{Error, Result};
use crate::measures::{m_alpha_xi, plancherel_theta, neg_binomial, neg_binomial_tail, truncation_level};
use crate::partitions::{enumerate, enumerate_up_to, StrictPartition, ENUMERATION_CAP};
use crate::specfun::{ModelParams, PlancherelParams};

/// Poisson mass discarded by uniformization.
pub const POISSON_TAIL: f64 = 1e-12;

/// Largest number of states for which the dense generator is built.
pub const DENSE_STATE_LIMIT: usize = 6000;

/// A value with a rigorous-in-spirit bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue {
    pub value: f64,
    pub error_bound: f64,
    pub cap: usize,
}

/// All strict partitions of weight ≤ N with the generator of the jump
/// process restricted to them; up-moves leaving the space are dropped.
#[derive(Debug, Clone)]
pub struct TruncatedStateSpace {
    cap: usize,
    params: ModelParams,
    states: Vec<StrictPartition>,
    index: HashMap<StrictPartition, usize>,
    generator: DMatrix<f64>,
    measure: DVector<f64>,
    tail_mass: f64,
}

impl TruncatedStateSpace {
    pub fn new(p: &ModelParams, cap: usize) -> Result<Self> {
        let states = enumerate_up_to(cap)?;
        if states.len() > DENSE_STATE_LIMIT {
            return Err(Error::CapExceeded {
                required: states.len(),
                limit: DENSE_STATE_LIMIT,
            });
        }
        let index: HashMap<_, _> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let n = states.len();
        let mut q = DMatrix::zeros(n, n);
        for (i, s) in states.iter().enumerate() {
            let r = jump_rates(s, p);
            q[(i, i)] = -r.total;
            for (t, rate) in r.up.iter().chain(&r.down) {
                if let Some(&j) = index.get(t) {
                    q[(i, j)] = *rate;
                }
            }
        }
        let measure = DVector::from_iterator(n, states.iter().map(|s| m_alpha_xi(s, p)));
        Ok(Self {
            cap,
            params: *p,
            states,
            index,
            generator: q,
            measure,
            tail_mass: neg_binomial_tail(cap, p),
        })
    }

    /// The space whose cap leaves a weight tail below `tail_tol`.
    pub fn for_tolerance(p: &ModelParams, tail_tol: f64) -> Result<Self> {
        Self::new(p, required_cap(p, tail_tol)?)
    }

    pub fn cap(&self) -> usize {
        self.cap
    }
    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn states(&self) -> &[StrictPartition] {
        &self.states
    }
    pub fn index_of(&self, s: &StrictPartition) -> Option<usize> {
        self.index.get(s).copied()
    }
    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }
    /// M_{α,ξ} on the states.
    pub fn measure(&self) -> &DVector<f64> {
        &self.measure
    }
    /// Σ_{n > N} π_{α,ξ}(n).
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Largest exit rate, the uniformization constant.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.states.len()).map(|i| -self.generator[(i, i)]).fold(0.0, f64::max)
    }

    /// Stationary outflow through the truncation boundary per unit time.
    pub fn boundary_flux(&self) -> f64 {
        neg_binomial(self.cap, &self.params) * birth_death_rates(self.cap, &self.params).0
    }

    /// e^{ΔtQ} v.
    pub fn propagate(&self, dt: f64, v: &DVector<f64>) -> DVector<f64> {
        let lam = self.max_exit_rate();
        if dt == 0.0 || lam == 0.0 {
            return v.clone();
        }
        let kernel = &self.generator / lam + DMatrix::identity(self.states.len(), self.states.len());
        let weights = poisson_weights(lam * dt);
        let mut term = v.clone();
        let mut out = &term * weights[0];
        for &w in &weights[1..] {
            term = &kernel * term;
            out += &term * w;
        }
        out
    }

    fn indicator(&self, x: u32) -> DVector<f64> {
        DVector::from_iterator(self.states.len(), self.states.iter().map(|s| s.contains(x) as u8 as f64))
    }
}

fn required_cap(p: &ModelParams, tail_tol: f64) -> Result<usize> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidParameters(format!("tail tolerance must be positive, got {tail_tol}")));
    }
    let n = truncation_level(tail_tol, p);
    if n > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            required: n,
            limit: ENUMERATION_CAP,
        });
    }
    Ok(n)
}

/// Poisson(μ) probabilities for k = 0, 1, … until the remaining mass is
/// below [`POISSON_TAIL`].
fn poisson_weights(mu: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    let mut k = 0u64;
    loop {
        let w = (-mu + k as f64 * mu.ln() - ln_factorial(k)).exp();
        out.push(w);
        acc += w;
        if k as f64 > mu && 1.0 - acc < POISSON_TAIL {
            return out;
        }
        k += 1;
    }
}

fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Σ_{|λ| ≤ N, λ ⊇ X} M_{α,ξ}(λ), enumerating everything and filtering.
pub fn exact_static_correlation(xs: &[u32], p: &ModelParams, tail_tol: f64) -> Result<OracleValue> {
    let cap = required_cap(p, tail_tol)?;
    let terms = enumerate_up_to(cap)?
        .into_iter()
        .filter(|l| xs.iter().all(|&x| l.contains(x)))
        .map(|l| m_alpha_xi(&l, p))
        .collect();
    Ok(OracleValue {
        value: sorted_sum(terms),
        error_bound: neg_binomial_tail(cap, p),
        cap,
    })
}

/// The same sum, enumerating only λ = X ∪ μ with μ disjoint from X.
pub fn exact_static_correlation_filtered(xs: &[u32], p: &ModelParams, tail_tol: f64) -> Result<OracleValue> {
    let cap = required_cap(p, tail_tol)?;
    let base = StrictPartition::new(xs.to_vec())?;
    let mut terms = Vec::new();
    for n in 0..=cap.saturating_sub(base.weight()) {
        if base.weight() > cap {
            break;
        }
        for mu in enumerate(n)? {
            if mu.parts().iter().any(|&q| base.contains(q)) {
                continue;
            }
            let mut parts = mu.parts().to_vec();
            parts.extend_from_slice(base.parts());
            terms.push(m_alpha_xi(&StrictPartition::new(parts)?, p));
        }
    }
    Ok(OracleValue {
        value: sorted_sum(terms),
        error_bound: neg_binomial_tail(cap, p),
        cap,
    })
}

/// Σ_{λ ⊇ X} Pl_θ(λ) over weights up to the level where the Poisson(θ/2)
/// tail drops below `tail_tol`.
pub fn exact_static_correlation_plancherel(xs: &[u32], p: &PlancherelParams, tail_tol: f64) -> Result<OracleValue> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidParameters(format!("tail tolerance must be positive, got {tail_tol}")));
    }
    let mu = p.theta() / 2.0;
    let pois = |n: usize| (-mu + n as f64 * mu.ln() - ln_factorial(n as u64)).exp();
    let (mut cap, mut acc) = (0, pois(0));
    while 1.0 - acc >= tail_tol || (cap as f64) < mu {
        cap += 1;
        acc += pois(cap);
        if cap > ENUMERATION_CAP {
            return Err(Error::CapExceeded {
                required: cap,
                limit: ENUMERATION_CAP,
            });
        }
    }
    let terms = enumerate_up_to(cap)?
        .into_iter()
        .filter(|l| xs.iter().all(|&x| l.contains(x)))
        .map(|l| plancherel_theta(&l, p))
        .collect();
    Ok(OracleValue {
        value: sorted_sum(terms),
        error_bound: (1.0 - acc).max(0.0),
        cap,
    })
}

/// (Δ_{x₁} P(t₂−t₁) Δ_{x₂} ⋯ Δ_{x_n} 𝟙, 𝟙) in ℓ²(M_{α,ξ}) on a truncated space.
pub fn dynamic_correlation_on(space: &TruncatedStateSpace, points: &[(f64, u32)]) -> Result<OracleValue> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.is_empty() {
        return Ok(OracleValue {
            value: space.measure.sum(),
            error_bound: space.tail_mass,
            cap: space.cap,
        });
    }
    let n = space.states.len();
    let mut v = DVector::from_element(n, 1.0);
    let mut leak = 0.0;
    for j in (0..pts.len()).rev() {
        v.component_mul_assign(&space.indicator(pts[j].1));
        if j > 0 {
            let dt = pts[j].0 - pts[j - 1].0;
            if dt > 0.0 {
                v = space.propagate(dt, &v);
                leak += dt * space.boundary_flux() + POISSON_TAIL;
            }
        }
    }
    Ok(OracleValue {
        value: space.measure.dot(&v),
        error_bound: space.tail_mass + leak,
        cap: space.cap,
    })
}

/// Dynamical correlation by the truncated-generator semigroup.
pub fn exact_dynamic_correlation(points: &[(f64, u32)], p: &ModelParams, tail_tol: f64) -> Result<OracleValue> {
    if points.iter().any(|q| !q.0.is_finite()) {
        return Err(Error::InvalidParameters("times must be finite".into()));
    }
    let space = TruncatedStateSpace::for_tolerance(p, tail_tol)?;
    dynamic_correlation_on(&space, points)
}

/// e^{ΔtQ} on the truncated space, by uniformization.
pub fn semigroup(dt: f64, space: &TruncatedStateSpace) -> Result<DMatrix<f64>> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidParameters(format!("time step must be nonnegative, got {dt}")));
    }
    let n = space.states.len();
    let lam = space.max_exit_rate();
    if dt == 0.0 || lam == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let kernel = &space.generator / lam + DMatrix::identity(n, n);
    let weights = poisson_weights(lam * dt);
    let mut power = DMatrix::identity(n, n);
    let mut out = &power * weights[0];
    for &w in &weights[1..] {
        power = &power * &kernel;
        out += &power * w;
    }
    Ok(out)
}
