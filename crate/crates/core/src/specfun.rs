//! Special functions of the model: the orthonormal family φ_m(x), its
//! twisted version, the z-measure functions ψ_a(x) restricted to the
//! ν-family of parameters, and Bessel functions J_k(2√θ).
//!
//! Everything is evaluated in real arithmetic. Products of conjugate
//! Pochhammer symbols (½+ν+k)(½−ν+k) are rewritten as k(k+1)+α, which is
//! strictly positive for every integer k whenever α > 0.
//!
//! Two evaluation paths exist for φ and ψ:
//!
//! * the Gauss hypergeometric series (with the Euler transformation and the
//!   reflection symmetry used to pick the best-conditioned variant), and
//! * a three-term recurrence in the index, solved from both tails toward a
//!   twist point. This path is used when every series variant suffers from
//!   cancellation, when ξ ≥ ½, and for whole columns consumed by kernels.

use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Largest tolerated ratio between the biggest series term and the sum.
const MAX_CANCELLATION: f64 = 1e3;

/// Parameters (α, ξ) of the hypergeometric model plus numeric controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    alpha: f64,
    xi: f64,
    nu_sq: f64,
    cos_pi_nu: f64,
    series_tol: f64,
    max_terms: usize,
}

impl ModelParams {
    pub fn new(alpha: f64, xi: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameters(format!("alpha must be positive, got {alpha}")));
        }
        if !(xi > 0.0 && xi < 1.0) {
            return Err(Error::InvalidParameters(format!("xi must lie in (0,1), got {xi}")));
        }
        let nu_sq = (1.0 - 4.0 * alpha) / 4.0;
        let cos_pi_nu = if nu_sq >= 0.0 {
            (std::f64::consts::PI * nu_sq.sqrt()).cos()
        } else {
            (std::f64::consts::PI * (-nu_sq).sqrt()).cosh()
        };
        Ok(Self {
            alpha,
            xi,
            nu_sq,
            cos_pi_nu,
            series_tol: 1e-15,
            max_terms: 10_000,
        })
    }

    /// Replaces the series stopping tolerance and term budget.
    pub fn with_series(mut self, series_tol: f64, max_terms: usize) -> Result<Self> {
        if !(series_tol > 0.0) || max_terms == 0 {
            return Err(Error::InvalidParameters("series_tol and max_terms must be positive".into()));
        }
        self.series_tol = series_tol;
        self.max_terms = max_terms;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    /// ν² = (1 − 4α)/4, negative when ν is imaginary.
    pub fn nu_sq(&self) -> f64 {
        self.nu_sq
    }
    /// cos(πν), read as cosh(π|ν|) for imaginary ν.
    pub fn cos_pi_nu(&self) -> f64 {
        self.cos_pi_nu
    }
    pub fn series_tol(&self) -> f64 {
        self.series_tol
    }
    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

/// Parameter θ of the poissonized Plancherel limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlancherelParams {
    theta: f64,
    series_tol: f64,
    max_terms: usize,
}

impl PlancherelParams {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameters(format!("theta must be positive, got {theta}")));
        }
        Ok(Self {
            theta,
            series_tol: 1e-15,
            max_terms: 10_000,
        })
    }

    pub fn with_series(mut self, series_tol: f64, max_terms: usize) -> Result<Self> {
        if !(series_tol > 0.0) || max_terms == 0 {
            return Err(Error::InvalidParameters("series_tol and max_terms must be positive".into()));
        }
        self.series_tol = series_tol;
        self.max_terms = max_terms;
        Ok(self)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn series_tol(&self) -> f64 {
        self.series_tol
    }
    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

/// k(k+1) + α, the product (½+ν+k)(½−ν+k).
#[inline]
pub(crate) fn pair_factor(k: i64, alpha: f64) -> f64 {
    let k = k as f64;
    k * (k + 1.0) + alpha
}

/// ln g(k) − ln g(0).
pub(crate) fn log_pair_shift(k: i64, alpha: f64) -> f64 {
    if k >= 0 {
        (0..k).map(|j| pair_factor(j, alpha).ln()).sum()
    } else {
        -(0..-k).map(|j| pair_factor(j, alpha).ln()).sum::<f64>()
    }
}

/// g(x) = Γ(½+ν+x)Γ(½−ν+x) via the forward and backward recurrences.
pub fn gamma_pair(x: i64, p: &ModelParams) -> Result<f64> {
    let mut g = std::f64::consts::PI / p.cos_pi_nu;
    if x >= 0 {
        for j in 0..x {
            g *= pair_factor(j, p.alpha);
            if !g.is_finite() {
                return Err(Error::Overflow { what: "gamma_pair" });
            }
        }
    } else {
        for j in (x..0).rev() {
            g /= pair_factor(j, p.alpha);
            if g < f64::MIN_POSITIVE {
                return Err(Error::Overflow { what: "gamma_pair" });
            }
        }
    }
    Ok(g)
}

/// ln g(x); finite for every |x| ≤ 10^6.
pub fn log_gamma_pair(x: i64, p: &ModelParams) -> f64 {
    (std::f64::consts::PI / p.cos_pi_nu).ln() + log_pair_shift(x, p.alpha)
}

/// Regularized series Σ_n Π_{j<n} pair(base+j) · w^n / (Γ(c+n) n!).
///
/// The value is `sign_sum · exp(log_scale)`; `cancellation` is the ratio of
/// the largest term magnitude to the magnitude of the sum.
#[derive(Debug, Clone, Copy)]
struct SeriesOut {
    log_scale: f64,
    sum: f64,
    cancellation: f64,
}

fn regularized_series(
    base: i64,
    c: i64,
    w: f64,
    pair: impl Fn(i64) -> f64,
    tol: f64,
    max_terms: usize,
) -> Result<SeriesOut> {
    // Terms with c + n ≤ 0 vanish because 1/Γ has poles there.
    let n0 = if c <= 0 { (1 - c) as usize } else { 0 };
    let mut log_scale = -ln_factorial((c + n0 as i64 - 1) as u64) - ln_factorial(n0 as u64);
    let mut sign = 1.0;
    for j in 0..n0 as i64 {
        let f = pair(base + j);
        log_scale += f.abs().ln() + w.abs().ln();
        if f * w < 0.0 {
            sign = -sign;
        }
    }
    let mut term: f64 = sign;
    let mut sum = 0.0;
    let mut biggest: f64 = 0.0;
    let mut small_run = 0;
    for k in 0..max_terms {
        sum += term;
        biggest = biggest.max(term.abs());
        let n = (n0 + k) as i64;
        let ratio = pair(base + n) * w / (((c + n) as f64) * ((n + 1) as f64));
        term *= ratio;
        if term.abs() < tol * (sum.abs() + 1.0) && ratio.abs() < 1.0 {
            small_run += 1;
            if small_run == 3 {
                let cancellation = if sum == 0.0 { f64::INFINITY } else { biggest / sum.abs() };
                return Ok(SeriesOut {
                    log_scale,
                    sum,
                    cancellation,
                });
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence {
        what: "hypergeometric series",
        terms: max_terms,
    })
}

/// One series representation of a φ- or ψ-type value.
struct Route {
    sign: f64,
    base: i64,
    c: i64,
    log_prefactor: f64,
}

fn evaluate_routes(
    mut routes: Vec<Route>,
    w: f64,
    pair: impl Fn(i64) -> f64 + Copy,
    tol: f64,
    max_terms: usize,
) -> Option<f64> {
    routes.sort_by(|a, b| {
        let ka = (a.base as f64 + 0.5).abs();
        let kb = (b.base as f64 + 0.5).abs();
        ka.total_cmp(&kb)
    });
    for r in routes {
        if let Ok(s) = regularized_series(r.base, r.c, w, pair, tol, max_terms) {
            if s.cancellation <= MAX_CANCELLATION {
                return Some(r.sign * s.sum * (s.log_scale + r.log_prefactor).exp());
            }
        }
    }
    None
}

fn phi_routes(m: i64, x: i64, p: &ModelParams) -> Vec<Route> {
    let (lxi, l1xi) = (p.xi.ln(), (1.0 - p.xi).ln());
    let mut routes = Vec::with_capacity(4);
    for (mm, xx, sign) in [(m, x, 1.0), (-m, -x, if (m + x) % 2 == 0 { 1.0 } else { -1.0 })] {
        let pre = 0.5 * (log_pair_shift(xx, p.alpha) + log_pair_shift(mm, p.alpha))
            + 0.5 * (xx + mm) as f64 * lxi
            - mm as f64 * l1xi;
        let c = xx + mm + 1;
        routes.push(Route {
            sign,
            base: mm,
            c,
            log_prefactor: pre,
        });
        routes.push(Route {
            sign,
            base: xx,
            c,
            log_prefactor: pre + (mm - xx) as f64 * l1xi,
        });
    }
    routes
}

/// φ_m(x; α, ξ) by the hypergeometric series only.
///
/// Returns `Ok(None)` when every series variant loses too many digits to
/// cancellation, or when ξ ≥ ½ (the series argument leaves the unit disc).
pub fn phi_series(m: i64, x: i64, p: &ModelParams) -> Result<Option<f64>> {
    if p.xi >= 0.5 {
        return Ok(None);
    }
    let w = p.xi / (p.xi - 1.0);
    let alpha = p.alpha;
    Ok(evaluate_routes(phi_routes(m, x, p), w, move |k| pair_factor(k, alpha), p.series_tol, p.max_terms))
}

/// φ_m(x; α, ξ).
pub fn phi(m: i64, x: i64, p: &ModelParams) -> Result<f64> {
    if let Some(v) = phi_series(m, x, p)? {
        return Ok(v);
    }
    Ok(phi_column(x, m, m, p)?[0])
}

/// φ̃_m(x) = (−1)^{min(x,0)} φ_m(x).
pub fn phi_twisted(m: i64, x: i64, p: &ModelParams) -> Result<f64> {
    let v = phi(m, x, p)?;
    Ok(if x < 0 && x % 2 != 0 { -v } else { v })
}

/// Classically allowed index window of a three-term family with diagonal
/// −k(1+ξ) + shift and off-diagonal ≈ √ξ·|k|, at eigenvalue `lam`.
fn allowed_window(lam: f64, xi: f64) -> (i64, i64) {
    let s = xi.sqrt();
    let t1 = lam.abs() / (1.0 + s).powi(2);
    let t2 = lam.abs() / (1.0 - s).powi(2);
    if lam >= 0.0 {
        ((-t2).floor() as i64 - 1, (-t1).ceil() as i64 + 1)
    } else {
        (t1.floor() as i64 - 1, t2.ceil() as i64 + 1)
    }
}

/// Eigenvector of a symmetric Jacobi operator on Z which decays at both
/// ends, normalized to unit ℓ² norm and positive at +∞.
///
/// `coupling(k)` links k and k+1, `diag(k)` is the diagonal entry. The
/// returned slice covers `lo..=hi`.
fn decaying_eigvec(
    lo: i64,
    hi: i64,
    window: (i64, i64),
    xi: f64,
    lam: f64,
    coupling: impl Fn(i64) -> f64,
    diag: impl Fn(i64) -> f64,
) -> Result<Vec<f64>> {
    const MAX_LEN: i64 = 4_000_000;
    let mut margin = (45.0 / -xi.ln()).ceil() as i64 + 16;
    loop {
        let first = lo.min(window.0) - margin;
        let last = hi.max(window.1) + margin;
        let len = (last - first + 1) as usize;
        // r[i] = v(k−1)/v(k) from the lower tail, s[i] = v(k+1)/v(k) from the upper tail.
        let mut r = vec![0.0; len];
        for i in 1..len {
            let k = first + i as i64;
            let den = coupling(k - 2) * r[i - 1] + diag(k - 1) - lam;
            r[i] = -coupling(k - 1) / den;
        }
        let mut s = vec![0.0; len];
        for i in (0..len - 1).rev() {
            let k = first + i as i64;
            let den = diag(k + 1) - lam + coupling(k + 1) * s[i + 1];
            s[i] = -coupling(k) / den;
        }
        let mut twist = 0;
        let mut best = f64::INFINITY;
        for i in 0..len {
            let k = first + i as i64;
            let scale = (diag(k) - lam).abs() + coupling(k) + coupling(k - 1);
            let gamma = (coupling(k - 1) * r[i] + diag(k) - lam + coupling(k) * s[i]).abs() / scale;
            if gamma < best {
                best = gamma;
                twist = i;
            }
        }
        let mut v = vec![0.0; len];
        v[twist] = 1.0;
        for i in (1..=twist).rev() {
            v[i - 1] = r[i] * v[i];
        }
        for i in twist..len - 1 {
            v[i + 1] = s[i] * v[i];
        }
        let peak = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let edge = v[0].abs().max(v[len - 1].abs());
        if edge <= 1e-30 * peak {
            let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            let tail_sign = v.iter().rev().find(|t| **t != 0.0).map_or(1.0, |t| t.signum());
            let f = tail_sign / norm;
            let a = (lo - first) as usize;
            let b = (hi - first) as usize;
            return Ok(v[a..=b].iter().map(|t| t * f).collect());
        }
        margin *= 2;
        if last - first > MAX_LEN {
            return Err(Error::NonConvergence {
                what: "three-term recurrence window",
                terms: len,
            });
        }
    }
}

/// φ_m(x) for all m in `lo..=hi` at fixed x, via the recurrence in m.
pub fn phi_column(x: i64, lo: i64, hi: i64, p: &ModelParams) -> Result<Vec<f64>> {
    if lo > hi {
        return Ok(Vec::new());
    }
    let (xi, alpha) = (p.xi, p.alpha);
    let lam = (1.0 - xi) * x as f64;
    decaying_eigvec(
        lo,
        hi,
        allowed_window(lam, xi),
        xi,
        lam,
        move |k| (xi * pair_factor(k, alpha)).sqrt(),
        move |k| -(k as f64) * (1.0 + xi),
    )
}

/// Applies the second-order difference operator of the φ family (or its
/// twisted conjugate) to `f` at the point x.
pub fn difference_operator(f: impl Fn(i64) -> f64, x: i64, p: &ModelParams, twisted: bool) -> f64 {
    let xi = p.xi;
    let up = (xi * pair_factor(x, p.alpha)).sqrt();
    let down = (xi * pair_factor(x - 1, p.alpha)).sqrt();
    let (su, sd) = if twisted {
        (if x < 0 { -1.0 } else { 1.0 }, if x <= 0 { -1.0 } else { 1.0 })
    } else {
        (1.0, 1.0)
    };
    su * up * f(x + 1) + sd * down * f(x - 1) - x as f64 * (1.0 + xi) * f(x)
}

/// A half-integer k + ½.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct HalfInt(i64);

impl HalfInt {
    /// The half-integer `floor + ½`.
    pub const fn from_floor(floor: i64) -> Self {
        Self(floor)
    }
    /// Parses a value such as 2.5 or −0.5; fails if it is not in Z + ½.
    pub fn try_from_f64(v: f64) -> Result<Self> {
        let f = v - 0.5;
        if (f - f.round()).abs() > 1e-12 {
            return Err(Error::InvalidParameters(format!("{v} is not a half-integer")));
        }
        Ok(Self(f.round() as i64))
    }
    pub const fn floor(self) -> i64 {
        self.0
    }
    pub fn value(self) -> f64 {
        self.0 as f64 + 0.5
    }
    pub const fn neg(self) -> Self {
        Self(-self.0 - 1)
    }
    pub const fn shift(self, k: i64) -> Self {
        Self(self.0 + k)
    }
}

/// A parameter pair (z, z') = (ν+½+d, −ν+½+d) of the supported family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ZPair {
    d: i64,
}

impl ZPair {
    pub const fn new(d: i64) -> Self {
        Self { d }
    }

    /// Recognizes (z, z') given as complex numbers `(re, im)`; either order
    /// of the two members is accepted.
    pub fn try_from_values(z: (f64, f64), zp: (f64, f64), p: &ModelParams) -> Result<Self> {
        let nu = if p.nu_sq >= 0.0 { (p.nu_sq.sqrt(), 0.0) } else { (0.0, (-p.nu_sq).sqrt()) };
        let close = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9;
        let d = ((z.0 + zp.0) / 2.0 - 0.5).round();
        let cand = (d + 0.5 + nu.0, nu.1);
        let cand_p = (d + 0.5 - nu.0, -nu.1);
        if (close(z, cand) && close(zp, cand_p)) || (close(z, cand_p) && close(zp, cand)) {
            Ok(Self { d: d as i64 })
        } else {
            Err(Error::InvalidParameters(format!(
                "(z, z') = ({z:?}, {zp:?}) is not of the form (ν+½+d, −ν+½+d)"
            )))
        }
    }

    pub const fn d(self) -> i64 {
        self.d
    }

    /// The pair (−z, −z'), which stays in the family with d ↦ −d−1.
    pub const fn negated(self) -> Self {
        Self { d: -self.d - 1 }
    }

    /// z + z'.
    pub fn sum(self) -> f64 {
        1.0 + 2.0 * self.d as f64
    }

    /// z·z' = (½+d)² − ν².
    pub fn product(self, p: &ModelParams) -> f64 {
        let h = self.d as f64 + 0.5;
        h * h - p.nu_sq
    }
}

/// (k+½)² − ν², the product (½+ν+k)(½−ν+k) written through ν².
#[inline]
fn half_pair(k: i64, nu_sq: f64) -> f64 {
    let h = k as f64 + 0.5;
    h * h - nu_sq
}

fn log_half_pair_shift(k: i64, nu_sq: f64) -> f64 {
    if k >= 0 {
        (0..k).map(|j| half_pair(j, nu_sq).ln()).sum()
    } else {
        -(k..0).map(|j| half_pair(j, nu_sq).ln()).sum::<f64>()
    }
}

fn psi_routes(a: i64, x: i64, d: i64, p: &ModelParams) -> Vec<Route> {
    let (lxi, l1xi) = (p.xi.ln(), (1.0 - p.xi).ln());
    let nu_sq = p.nu_sq;
    let mut routes = Vec::with_capacity(4);
    let flip = if (x + a + 1) % 2 == 0 { 1.0 } else { -1.0 };
    for (aa, xx, dd, sign) in [(a, x, d, 1.0), (-a - 1, -x - 1, -d - 1, flip)] {
        let pre = 0.5 * (log_half_pair_shift(xx + dd + 1, nu_sq) - log_half_pair_shift(dd - aa, nu_sq))
            + 0.5 * (xx + aa + 1) as f64 * lxi
            + (dd - aa) as f64 * l1xi;
        let c = xx + aa + 2;
        routes.push(Route {
            sign,
            base: aa - dd,
            c,
            log_prefactor: pre,
        });
        routes.push(Route {
            sign,
            base: xx + dd + 1,
            c,
            log_prefactor: pre - (xx - aa + 2 * dd + 1) as f64 * l1xi,
        });
    }
    routes
}

/// ψ_a(x; z, z', ξ) by the hypergeometric series only; `None` when every
/// variant is ill-conditioned or ξ ≥ ½.
pub fn psi_series(a: HalfInt, x: HalfInt, z: ZPair, p: &ModelParams) -> Result<Option<f64>> {
    if p.xi >= 0.5 {
        return Ok(None);
    }
    let w = p.xi / (p.xi - 1.0);
    let nu_sq = p.nu_sq;
    Ok(evaluate_routes(
        psi_routes(a.floor(), x.floor(), z.d, p),
        w,
        move |k| half_pair(k, nu_sq),
        p.series_tol,
        p.max_terms,
    ))
}

/// ψ_a(x; z, z', ξ) for (z, z') in the ν-family.
pub fn psi(a: HalfInt, x: HalfInt, z: ZPair, p: &ModelParams) -> Result<f64> {
    if let Some(v) = psi_series(a, x, z, p)? {
        return Ok(v);
    }
    Ok(psi_column(x, a, a, z, p)?[0])
}

/// ψ_a(x) for all a in `lo..=hi` at fixed x, via the recurrence in a.
pub fn psi_column(x: HalfInt, lo: HalfInt, hi: HalfInt, z: ZPair, p: &ModelParams) -> Result<Vec<f64>> {
    if lo > hi {
        return Ok(Vec::new());
    }
    let xi = p.xi;
    let nu_sq = p.nu_sq;
    let d = z.d;
    let lam = (1.0 - xi) * x.value();
    let zsum = z.sum();
    // Index k stands for a = k + ½.
    let (w0, w1) = allowed_window(lam - xi * zsum, xi);
    decaying_eigvec(
        lo.floor(),
        hi.floor(),
        (w0.min(w0 + d) - 1, w1.max(w1 + d) + 1),
        xi,
        lam,
        move |k| (xi * half_pair(d - k - 1, nu_sq)).sqrt(),
        move |k| {
            let a = k as f64 + 0.5;
            -a + xi * (zsum - a)
        },
    )
}

/// J_k(2√θ) by its power series.
pub fn bessel_j(k: i64, theta: f64) -> Result<f64> {
    bessel_j_with(k, theta, 1e-17, 10_000)
}

pub(crate) fn bessel_j_with(k: i64, theta: f64, tol: f64, max_terms: usize) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParameters(format!("theta must be positive, got {theta}")));
    }
    if k < 0 {
        let v = bessel_j_with(-k, theta, tol, max_terms)?;
        return Ok(if k % 2 == 0 { v } else { -v });
    }
    let log_first = 0.5 * k as f64 * theta.ln() - ln_factorial(k as u64);
    let mut term = 1.0;
    let mut sum = 0.0;
    let mut small_run = 0;
    for r in 0..max_terms {
        sum += term;
        let ratio = -theta / (((r + 1) as f64) * ((r + 1) as f64 + k as f64));
        term *= ratio;
        if term.abs() < tol * (sum.abs() + 1.0) && ratio.abs() < 1.0 {
            small_run += 1;
            if small_run == 3 {
                return Ok(sum * log_first.exp());
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence {
        what: "Bessel series",
        terms: max_terms,
    })
}
