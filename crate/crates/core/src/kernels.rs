//! Correlation kernels: the static determinantal kernel K_{α,ξ}, the static
//! and extended Pfaffian kernels Φ_{α,ξ}, their Plancherel (Bessel) limits,
//! and the discrete hypergeometric kernels of the z-measures.
//!
//! Series kernels sum whole columns of φ (or ψ, or J) computed by the
//! recurrence path; closed and integrable forms use pointwise values from
//! the hypergeometric series path, so the two evaluations are independent.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::io::{format_f64, to_json_string};
use crate::specfun::{bessel_j, phi, phi_column, psi, psi_column, HalfInt, ModelParams, PlancherelParams, ZPair};

/// A truncated series value with its truncation metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
    pub est_tail: f64,
}

impl SeriesValue {
    fn scaled(self, s: f64) -> Self {
        Self {
            value: self.value * s,
            est_tail: self.est_tail * s.abs(),
            ..self
        }
    }
}

/// m* = max(16, ⌈2 ln(tol)/ln(ξ)⌉).
pub fn series_cutoff(tol: f64, xi: f64) -> usize {
    ((2.0 * tol.ln() / xi.ln()).ceil() as usize).max(16)
}

#[inline]
fn parity(k: i64) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// (−1)^{min(x,0) + max(y,0)}.
#[inline]
fn pf_sign(x: i64, y: i64) -> f64 {
    parity(x.min(0) + y.max(0))
}

/// Upper end of the index range where a column at eigenvalue (1−ξ)·x is
/// not yet geometrically decaying.
fn column_reach(x: f64, xi: f64) -> usize {
    if x >= 0.0 {
        0
    } else {
        ((1.0 - xi) * -x / (1.0 - xi.sqrt()).powi(2)).ceil() as usize + 1
    }
}

/// Sums Σ_{m=0}^{M} c_m · f(m) · g(m) with columns produced by `columns`,
/// doubling M until the last three terms are negligible.
fn column_sum(
    initial: usize,
    tol: f64,
    weight: impl Fn(usize) -> f64,
    columns: impl Fn(usize) -> Result<(Vec<f64>, Vec<f64>)>,
) -> Result<SeriesValue> {
    let mut m_max = initial.max(16);
    loop {
        let (a, b) = columns(m_max)?;
        let terms: Vec<f64> = (0..=m_max).map(|m| weight(m) * a[m] * b[m]).collect();
        let sum: f64 = terms.iter().sum();
        let tail: f64 = terms[m_max - 2..].iter().map(|t| t.abs()).sum();
        if tail <= tol * (sum.abs() + tol) || tail == 0.0 {
            return Ok(SeriesValue {
                value: sum,
                terms: m_max + 1,
                est_tail: tail,
            });
        }
        if m_max > 1 << 20 {
            return Err(Error::NonConvergence {
                what: "kernel series",
                terms: m_max,
            });
        }
        m_max *= 2;
    }
}

/// Σ_{m≥0} 2^{−δ(m)} e^{−m·gap} φ_m(u) φ_m(v).
fn phi_pair_sum(u: i64, v: i64, gap: f64, p: &ModelParams) -> Result<SeriesValue> {
    let xi = p.xi();
    let cutoff = series_cutoff(p.series_tol(), xi);
    let reach = column_reach(u as f64, xi).min(column_reach(v as f64, xi));
    column_sum(
        reach + cutoff,
        p.series_tol(),
        |m| if m == 0 { 0.5 } else { (-(m as f64) * gap).exp() },
        |m_max| Ok((phi_column(u, 0, m_max as i64, p)?, phi_column(v, 0, m_max as i64, p)?)),
    )
}

/// Static Pfaffian kernel Φ(x, y) as a series over m.
pub fn pf_static(x: i64, y: i64, p: &ModelParams) -> Result<f64> {
    Ok(pf_static_series(x, y, p)?.value)
}

pub fn pf_static_series(x: i64, y: i64, p: &ModelParams) -> Result<SeriesValue> {
    Ok(phi_pair_sum(x, -y, 0.0, p)?.scaled(pf_sign(x, y)))
}

/// Closed form of Φ(x, y); on x = −y the series is used instead.
pub fn pf_static_closed(x: i64, y: i64, p: &ModelParams) -> Result<f64> {
    if x == -y {
        return pf_static(x, y, p);
    }
    let q = |u: i64| -> Result<f64> { Ok(phi(1, u, p)? - phi(-1, u, p)?) };
    let num = phi(0, x, p)? * q(y)? - phi(0, y, p)? * q(x)?;
    let sign = parity(x.min(0) + y.min(0));
    Ok(sign * (p.alpha() * p.xi()).sqrt() / (2.0 * (1.0 - p.xi())) * num / (x + y) as f64)
}

/// Extended Pfaffian kernel Φ(s, x; t, y) for s ≤ t.
pub fn pf_dynamic(s: f64, x: i64, t: f64, y: i64, p: &ModelParams) -> Result<f64> {
    Ok(pf_dynamic_series(s, x, t, y, p)?.value)
}

pub fn pf_dynamic_series(s: f64, x: i64, t: f64, y: i64, p: &ModelParams) -> Result<SeriesValue> {
    if s > t {
        return Err(Error::UnorderedTimes { s, t });
    }
    Ok(phi_pair_sum(x, -y, t - s, p)?.scaled(pf_sign(x, y)))
}

fn require_positive(x: i64, y: i64) -> Result<()> {
    if x < 1 || y < 1 {
        return Err(Error::InvalidParameters(format!(
            "determinantal kernels live on positive integers, got ({x}, {y})"
        )));
    }
    Ok(())
}

/// K_{α,ξ}(x, y) in sum form.
pub fn det_static(x: i64, y: i64, p: &ModelParams) -> Result<f64> {
    Ok(det_static_series(x, y, p)?.value)
}

pub fn det_static_series(x: i64, y: i64, p: &ModelParams) -> Result<SeriesValue> {
    require_positive(x, y)?;
    let f = 2.0 * ((x * y) as f64).sqrt() / (x + y) as f64;
    Ok(phi_pair_sum(x, y, 0.0, p)?.scaled(f))
}

/// K_{α,ξ}(x, y) in integrable form; the diagonal uses the sum form.
pub fn det_static_integrable(x: i64, y: i64, p: &ModelParams) -> Result<f64> {
    require_positive(x, y)?;
    if x == y {
        return det_static(x, y, p);
    }
    let pq = |u: i64| -> Result<(f64, f64)> { Ok((phi(0, u, p)?, phi(1, u, p)? - phi(-1, u, p)?)) };
    let ((px, qx), (py, qy)) = (pq(x)?, pq(y)?);
    let (xf, yf) = (x as f64, y as f64);
    Ok((p.alpha() * p.xi() * xf * yf).sqrt() / (1.0 - p.xi()) * (px * qy - qx * py) / (xf * xf - yf * yf))
}

/// J_k(2√θ) for k in lo..=hi.
fn bessel_range(lo: i64, hi: i64, theta: f64) -> Result<Vec<f64>> {
    (lo..=hi).map(|k| bessel_j(k, theta)).collect()
}

/// Σ_{m≥0} 2^{−δ(m)} e^{−m·gap} J_{m+u} J_{m+v}.
fn bessel_pair_sum(u: i64, v: i64, gap: f64, p: &PlancherelParams) -> Result<SeriesValue> {
    let start = (2.0 * p.theta().sqrt()).ceil() as usize + u.unsigned_abs().max(v.unsigned_abs()) as usize;
    column_sum(
        start + 16,
        p.series_tol(),
        |m| if m == 0 { 0.5 } else { (-(m as f64) * gap).exp() },
        |m_max| {
            Ok((
                bessel_range(u, u + m_max as i64, p.theta())?,
                bessel_range(v, v + m_max as i64, p.theta())?,
            ))
        },
    )
}

/// K_θ(x, y) in series form.
pub fn det_plancherel(x: i64, y: i64, p: &PlancherelParams) -> Result<f64> {
    Ok(det_plancherel_series(x, y, p)?.value)
}

pub fn det_plancherel_series(x: i64, y: i64, p: &PlancherelParams) -> Result<SeriesValue> {
    require_positive(x, y)?;
    let f = 2.0 * ((x * y) as f64).sqrt() / (x + y) as f64;
    Ok(bessel_pair_sum(x, y, 0.0, p)?.scaled(f))
}

/// K_θ(x, y) in integrable form; the diagonal uses the series form.
pub fn det_plancherel_integrable(x: i64, y: i64, p: &PlancherelParams) -> Result<f64> {
    require_positive(x, y)?;
    if x == y {
        return det_plancherel(x, y, p);
    }
    let th = p.theta();
    let st = th.sqrt();
    let (jx, jy) = (bessel_j(x, th)?, bessel_j(y, th)?);
    let (jx1, jy1) = (bessel_j(x - 1, th)?, bessel_j(y - 1, th)?);
    let (xf, yf) = (x as f64, y as f64);
    Ok(2.0 * (xf * yf).sqrt() / (xf * xf - yf * yf) * (st * jx1 * jy - st * jy1 * jx - 0.5 * (xf - yf) * jx * jy))
}

/// Extended Pfaffian Bessel kernel Φ_θ(s, x; t, y) for s ≤ t.
pub fn pf_plancherel(s: f64, x: i64, t: f64, y: i64, p: &PlancherelParams) -> Result<f64> {
    Ok(pf_plancherel_series(s, x, t, y, p)?.value)
}

pub fn pf_plancherel_series(s: f64, x: i64, t: f64, y: i64, p: &PlancherelParams) -> Result<SeriesValue> {
    if s > t {
        return Err(Error::UnorderedTimes { s, t });
    }
    Ok(bessel_pair_sum(x, -y, t - s, p)?.scaled(pf_sign(x, y)))
}

/// Static Pfaffian Bessel kernel Φ_θ(x, y).
pub fn pf_plancherel_static(x: i64, y: i64, p: &PlancherelParams) -> Result<f64> {
    pf_plancherel(0.0, x, 0.0, y, p)
}

fn psi_reach(x: HalfInt, z: ZPair, xi: f64) -> usize {
    column_reach(x.value() - xi * z.sum() / (1.0 - xi), xi) + z.d().unsigned_abs() as usize
}

/// Σ over a = ±½, ±3/2, … (sign chosen by `negative`) of e^{−|a|·gap} ψ_a(x) ψ_a(y).
fn psi_pair_sum(x: HalfInt, y: HalfInt, gap: f64, negative: bool, z: ZPair, p: &ModelParams) -> Result<SeriesValue> {
    let xi = p.xi();
    let cutoff = series_cutoff(p.series_tol(), xi);
    let reach = if negative {
        psi_reach(x.neg(), z.negated(), xi).min(psi_reach(y.neg(), z.negated(), xi))
    } else {
        psi_reach(x, z, xi).min(psi_reach(y, z, xi))
    };
    column_sum(
        reach + cutoff,
        p.series_tol(),
        |m| (-(m as f64 + 0.5) * gap).exp(),
        |m_max| {
            let hi = HalfInt::from_floor(m_max as i64);
            if negative {
                let lo = HalfInt::from_floor(-(m_max as i64) - 1);
                let top = HalfInt::from_floor(-1);
                let mut a = psi_column(x, lo, top, z, p)?;
                let mut b = psi_column(y, lo, top, z, p)?;
                a.reverse();
                b.reverse();
                Ok((a, b))
            } else {
                let lo = HalfInt::from_floor(0);
                Ok((psi_column(x, lo, hi, z, p)?, psi_column(y, lo, hi, z, p)?))
            }
        },
    )
}

/// Discrete hypergeometric kernel K̲_{z,z',ξ}(x̂, ŷ) = Σ_{â>0} ψ_â(x̂) ψ_â(ŷ).
pub fn zz_static(x: HalfInt, y: HalfInt, z: ZPair, p: &ModelParams) -> Result<f64> {
    Ok(psi_pair_sum(x, y, 0.0, false, z, p)?.value)
}

pub fn zz_static_series(x: HalfInt, y: HalfInt, z: ZPair, p: &ModelParams) -> Result<SeriesValue> {
    psi_pair_sum(x, y, 0.0, false, z, p)
}

/// Closed form of K̲_{z,z',ξ}(x̂, ŷ); the diagonal uses the series.
pub fn zz_static_closed(x: HalfInt, y: HalfInt, z: ZPair, p: &ModelParams) -> Result<f64> {
    if x == y {
        return zz_static(x, y, z, p);
    }
    let (m, h) = (HalfInt::from_floor(-1), HalfInt::from_floor(0));
    let num = psi(m, x, z, p)? * psi(h, y, z, p)? - psi(h, x, z, p)? * psi(m, y, z, p)?;
    let xi = p.xi();
    Ok((z.product(p) * xi).sqrt() / (1.0 - xi) * num / (x.value() - y.value()))
}

/// Extended kernel K̲_{z,z',ξ}(t, x̂; s, ŷ): the sum over positive indices
/// for t ≥ s and minus the sum over negative indices for t < s.
pub fn zz_dynamic(t: f64, x: HalfInt, s: f64, y: HalfInt, z: ZPair, p: &ModelParams) -> Result<f64> {
    Ok(zz_dynamic_series(t, x, s, y, z, p)?.value)
}

pub fn zz_dynamic_series(t: f64, x: HalfInt, s: f64, y: HalfInt, z: ZPair, p: &ModelParams) -> Result<SeriesValue> {
    if t >= s {
        psi_pair_sum(x, y, t - s, false, z, p)
    } else {
        Ok(psi_pair_sum(x, y, s - t, true, z, p)?.scaled(-1.0))
    }
}

/// Which kernel a table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    DetStatic,
    PfStatic,
    PfDynamic,
    DetPlancherel,
    PfPlancherel,
    ZzStatic,
    ZzDynamic,
}

impl KernelKind {
    pub fn arg_names(self) -> &'static [&'static str] {
        match self {
            Self::DetStatic | Self::PfStatic | Self::DetPlancherel | Self::ZzStatic => &["x", "y"],
            Self::PfDynamic | Self::PfPlancherel => &["s", "x", "t", "y"],
            Self::ZzDynamic => &["t", "x", "s", "y"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelEntry {
    pub args: Vec<f64>,
    pub value: f64,
    pub est_tail: f64,
}

/// Evaluated kernel values with truncation metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelTable {
    pub kind: KernelKind,
    pub params: Value,
    pub entries: Vec<KernelEntry>,
    /// Largest number of series terms used by any entry.
    pub truncation_terms: usize,
    /// Largest truncation-tail estimate over the entries.
    pub est_tail: f64,
}

impl KernelTable {
    /// Evaluates `f` on every argument tuple, in parallel; entry order
    /// follows `args`.
    pub fn build(
        kind: KernelKind,
        params: Value,
        args: Vec<Vec<f64>>,
        f: impl Fn(&[f64]) -> Result<SeriesValue> + Sync,
    ) -> Result<Self> {
        let values: Vec<SeriesValue> = args.par_iter().map(|a| f(a)).collect::<Result<_>>()?;
        let truncation_terms = values.iter().map(|v| v.terms).max().unwrap_or(0);
        let est_tail = values.iter().fold(0.0f64, |a, v| a.max(v.est_tail));
        let entries = args
            .into_iter()
            .zip(values)
            .map(|(args, v)| KernelEntry {
                args,
                value: v.value,
                est_tail: v.est_tail,
            })
            .collect();
        Ok(Self {
            kind,
            params,
            entries,
            truncation_terms,
            est_tail,
        })
    }

    /// Static tables over a square grid of integers.
    pub fn static_grid(kind: KernelKind, grid: &[i64], model: Option<ModelParams>, plancherel: Option<PlancherelParams>) -> Result<Self> {
        let args: Vec<Vec<f64>> = grid
            .iter()
            .flat_map(|&x| grid.iter().map(move |&y| vec![x as f64, y as f64]))
            .collect();
        let params = params_json(model, plancherel);
        match (kind, model, plancherel) {
            (KernelKind::DetStatic, Some(p), _) => {
                Self::build(kind, params, args, |a| det_static_series(a[0] as i64, a[1] as i64, &p))
            }
            (KernelKind::PfStatic, Some(p), _) => {
                Self::build(kind, params, args, |a| pf_static_series(a[0] as i64, a[1] as i64, &p))
            }
            (KernelKind::DetPlancherel, _, Some(p)) => {
                Self::build(kind, params, args, |a| det_plancherel_series(a[0] as i64, a[1] as i64, &p))
            }
            (KernelKind::PfPlancherel, _, Some(p)) => Self::build(kind, params, args, |a| {
                pf_plancherel_series(0.0, a[0] as i64, 0.0, a[1] as i64, &p)
            }),
            _ => Err(Error::InvalidParameters(format!("{kind:?} is not a static kernel for the given parameters"))),
        }
    }

    /// CSV with header `args…, value, est_tail`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.kind.arg_names().to_vec();
        header.extend(["value", "est_tail"]);
        w.write_record(&header).expect("in-memory write");
        for e in &self.entries {
            let mut row: Vec<String> = e
                .args
                .iter()
                .map(|a| format!("{a}"))
                .collect();
            row.push(format_f64(e.value));
            row.push(format_f64(e.est_tail));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn to_json(&self) -> String {
        let names = self.kind.arg_names();
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|e| {
                let mut obj = serde_json::Map::new();
                for (n, a) in names.iter().zip(&e.args) {
                    let arg = if a.fract() == 0.0 && a.abs() < 1e15 { json!(*a as i64) } else { json!(a) };
                    obj.insert((*n).to_owned(), arg);
                }
                obj.insert("value".into(), json!(e.value));
                obj.insert("est_tail".into(), json!(e.est_tail));
                Value::Object(obj)
            })
            .collect();
        to_json_string(&json!({
            "kind": self.kind,
            "params": self.params,
            "truncation_terms": self.truncation_terms,
            "est_tail": self.est_tail,
            "entries": entries,
        }))
    }
}

/// JSON description of the active parameters.
pub fn params_json(model: Option<ModelParams>, plancherel: Option<PlancherelParams>) -> Value {
    match (model, plancherel) {
        (Some(p), _) => json!({"alpha": p.alpha(), "xi": p.xi(), "series_tol": p.series_tol()}),
        (None, Some(p)) => json!({"theta": p.theta(), "series_tol": p.series_tol()}),
        (None, None) => Value::Null,
    }
}
