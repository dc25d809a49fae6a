//! Strict partitions, shifted diagrams and path counts in the Schur graph.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Largest weight accepted by [`enumerate`].
pub const ENUMERATION_CAP: usize = 60;

/// Largest weight for which [`dim_schur`] is computed exactly.
pub const EXACT_DIM_CAP: usize = 20;

/// A partition with pairwise distinct parts, stored in decreasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct StrictPartition {
    parts: Vec<u32>,
}

impl StrictPartition {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a partition from parts in any order; rejects zeros and repeats.
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        if parts.last() == Some(&0) {
            return Err(Error::InvalidParameters("parts must be positive".into()));
        }
        if parts.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameters(format!("parts must be distinct: {parts:?}")));
        }
        Ok(Self { parts })
    }

    /// Trusted constructor for already strictly decreasing positive parts.
    pub(crate) fn from_sorted(parts: Vec<u32>) -> Self {
        debug_assert!(parts.windows(2).all(|w| w[0] > w[1]) && parts.last().is_none_or(|&p| p > 0));
        Self { parts }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// |λ|.
    pub fn weight(&self) -> usize {
        self.parts.iter().map(|&p| p as usize).sum()
    }

    /// ℓ(λ).
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Whether x is one of the parts, i.e. the point configuration contains x.
    pub fn contains(&self, x: u32) -> bool {
        self.parts.binary_search_by(|p| x.cmp(p)).is_ok()
    }

    /// Inclusion of shifted diagrams.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.len() <= other.len() && self.parts.iter().zip(&other.parts).all(|(a, b)| a <= b)
    }

    /// All partitions obtained by adding one box, with the added box.
    pub fn up_neighbors(&self) -> Vec<(StrictPartition, DiagramBox)> {
        let mut out = Vec::with_capacity(self.len() + 1);
        for i in 0..self.len() {
            if i == 0 || self.parts[i - 1] > self.parts[i] + 1 {
                let mut parts = self.parts.clone();
                parts[i] += 1;
                let row = i as u32 + 1;
                out.push((Self::from_sorted(parts), DiagramBox::new_unchecked(row, row + self.parts[i])));
            }
        }
        if self.parts.last().is_none_or(|&p| p > 1) {
            let mut parts = self.parts.clone();
            parts.push(1);
            let row = self.len() as u32 + 1;
            out.push((Self::from_sorted(parts), DiagramBox::new_unchecked(row, row)));
        }
        out
    }

    /// All partitions obtained by removing one box, with the removed box.
    pub fn down_neighbors(&self) -> Vec<(StrictPartition, DiagramBox)> {
        let mut out = Vec::with_capacity(self.len());
        let l = self.len();
        for i in 0..l {
            let next = if i + 1 < l { self.parts[i + 1] } else { 0 };
            if self.parts[i] - 1 > next || (i + 1 == l && self.parts[i] == 1) {
                let mut parts = self.parts.clone();
                parts[i] -= 1;
                if parts[i] == 0 {
                    parts.pop();
                }
                let row = i as u32 + 1;
                out.push((Self::from_sorted(parts), DiagramBox::new_unchecked(row, row + self.parts[i] - 1)));
            }
        }
        out
    }

    /// Boxes of the shifted diagram, row by row.
    pub fn boxes(&self) -> impl Iterator<Item = DiagramBox> + '_ {
        self.parts.iter().enumerate().flat_map(|(i, &p)| {
            let row = i as u32 + 1;
            (row..row + p).map(move |col| DiagramBox::new_unchecked(row, col))
        })
    }
}

impl TryFrom<Vec<u32>> for StrictPartition {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<StrictPartition> for Vec<u32> {
    fn from(p: StrictPartition) -> Self {
        p.parts
    }
}

impl fmt::Display for StrictPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("∅");
        }
        let mut first = true;
        for p in &self.parts {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for StrictPartition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "∅" || s.is_empty() {
            return Ok(Self::empty());
        }
        let parts = s
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|e| Error::Parse(format!("bad part {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if parts.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Parse(format!("parts must be strictly decreasing: {s:?}")));
        }
        Self::new(parts).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// A box (i, j) of a shifted diagram; always j ≥ i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DiagramBox {
    row: u32,
    col: u32,
}

impl DiagramBox {
    pub fn new(row: u32, col: u32) -> Result<Self> {
        if row == 0 || col < row {
            return Err(Error::InvalidParameters(format!("({row},{col}) is not a shifted box")));
        }
        Ok(Self { row, col })
    }

    const fn new_unchecked(row: u32, col: u32) -> Self {
        Self { row, col }
    }

    pub fn row(&self) -> u32 {
        self.row
    }
    pub fn col(&self) -> u32 {
        self.col
    }
    /// j − i.
    pub fn content(&self) -> u32 {
        self.col - self.row
    }
}

/// All strict partitions of `weight`, in decreasing lexicographic order.
pub fn enumerate(weight: usize) -> Result<Vec<StrictPartition>> {
    if weight > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            required: weight,
            limit: ENUMERATION_CAP,
        });
    }
    let mut out = Vec::new();
    let mut stack = Vec::new();
    fill(weight as u32, weight as u32, &mut stack, &mut out);
    Ok(out)
}

fn fill(rest: u32, max_part: u32, stack: &mut Vec<u32>, out: &mut Vec<StrictPartition>) {
    if rest == 0 {
        out.push(StrictPartition::from_sorted(stack.clone()));
        return;
    }
    // The largest total reachable with distinct parts ≤ max_part.
    if max_part * (max_part + 1) / 2 < rest {
        return;
    }
    for p in (1..=max_part.min(rest)).rev() {
        stack.push(p);
        fill(rest - p, p - 1, stack, out);
        stack.pop();
    }
}

/// All strict partitions of weight at most `cap`, grouped by weight.
pub fn enumerate_up_to(cap: usize) -> Result<Vec<StrictPartition>> {
    let mut all = Vec::new();
    for n in 0..=cap {
        all.extend(enumerate(n)?);
    }
    Ok(all)
}

fn cross_factors(parts: &[u32]) -> impl Iterator<Item = (u32, u32)> + '_ {
    parts
        .iter()
        .enumerate()
        .flat_map(move |(k, &a)| parts[k + 1..].iter().map(move |&b| (a - b, a + b)))
}

/// Number of paths ∅ → λ in the Schur graph, exact for |λ| ≤ 20.
pub fn dim_schur(lambda: &StrictPartition) -> Result<u128> {
    let n = lambda.weight();
    if n > EXACT_DIM_CAP {
        return Err(Error::Overflow { what: "dim_schur" });
    }
    let fact = |k: u32| (1..=k as u128).product::<u128>();
    let mut num = fact(n as u32);
    let mut den: u128 = lambda.parts.iter().map(|&p| fact(p)).product();
    for (d, s) in cross_factors(&lambda.parts) {
        num *= d as u128;
        den *= s as u128;
    }
    debug_assert_eq!(num % den, 0);
    Ok(num / den)
}

/// ln dim_S(λ) for any λ.
pub fn log_dim_schur(lambda: &StrictPartition) -> f64 {
    let mut v = ln_factorial(lambda.weight() as u64);
    for &p in &lambda.parts {
        v -= ln_factorial(p as u64);
    }
    for (d, s) in cross_factors(&lambda.parts) {
        v += (d as f64 / s as f64).ln();
    }
    v
}

/// Number of paths μ → λ, by dynamic programming over the graph.
pub fn dim_schur_skew(mu: &StrictPartition, lambda: &StrictPartition) -> Result<u128> {
    if !mu.is_subset_of(lambda) {
        return Ok(0);
    }
    let mut level: HashMap<StrictPartition, u128> = HashMap::from([(mu.clone(), 1)]);
    for _ in mu.weight()..lambda.weight() {
        let mut next: HashMap<StrictPartition, u128> = HashMap::new();
        for (nu, count) in &level {
            for (kappa, _) in nu.up_neighbors() {
                if kappa.is_subset_of(lambda) {
                    let e = next.entry(kappa).or_insert(0);
                    *e = e.checked_add(*count).ok_or(Error::Overflow { what: "dim_schur_skew" })?;
                }
            }
        }
        level = next;
    }
    Ok(level.get(lambda).copied().unwrap_or(0))
}
