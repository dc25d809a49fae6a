//! Skew-symmetric matrices, Pfaffians and the reduction of Pfaffians with
//! a compatible involution to determinants.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{pf_dynamic, pf_static};
use crate::specfun::ModelParams;

/// Index ordering of a 2n × 2n correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labeling {
    /// Rows indexed by 1, …, n, −n, …, −1.
    Static(usize),
    /// Rows indexed by 1, −1, …, n, −n.
    Dynamic(usize),
    Plain,
}

impl Labeling {
    fn name(self) -> &'static str {
        match self {
            Self::Static(_) => "static_order",
            Self::Dynamic(_) => "dynamic_order",
            Self::Plain => "plain",
        }
    }

    /// Signed label of row `i` (1-based point index, negative for the mirrored copy).
    pub fn label(self, i: usize) -> Option<i64> {
        match self {
            Self::Static(n) if i < n => Some(i as i64 + 1),
            Self::Static(n) if i < 2 * n => Some(-((2 * n - i) as i64)),
            Self::Dynamic(n) if i < 2 * n => {
                let k = (i / 2) as i64 + 1;
                Some(if i.is_multiple_of(2) { k } else { -k })
            }
            _ => None,
        }
    }
}

impl fmt::Display for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An even-dimensional skew-symmetric matrix with its row labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    data: DMatrix<f64>,
    labels: Labeling,
}

impl SkewMatrix {
    /// Builds the matrix whose (i, j) entry above the diagonal is `upper(i, j)`.
    pub fn from_upper(dim: usize, labels: Labeling, mut upper: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if dim % 2 == 1 {
            return Err(Error::OddDimension(dim));
        }
        let mut data = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i + 1..dim {
                let v = upper(i, j);
                data[(i, j)] = v;
                data[(j, i)] = -v;
            }
        }
        Ok(Self { data, labels })
    }

    /// Wraps a dense matrix, taking its strict upper triangle as authoritative.
    pub fn from_dense(m: &DMatrix<f64>, labels: Labeling) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidParameters(format!("matrix is {}×{}", m.nrows(), m.ncols())));
        }
        Self::from_upper(m.nrows(), labels, |i, j| m[(i, j)])
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn labels(&self) -> Labeling {
        self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Dense CSV with a header row of index labels.
    pub fn to_csv(&self) -> String {
        let dim = self.dim();
        let names: Vec<String> = (0..dim)
            .map(|i| self.labels.label(i).map_or_else(|| (i + 1).to_string(), |l| l.to_string()))
            .collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&names).expect("in-memory write");
        for i in 0..dim {
            let row: Vec<String> = (0..dim).map(|j| crate::io::format_f64(self.data[(i, j)])).collect();
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Pfaffian by skew-symmetric Gaussian elimination with pivoting.
pub fn pfaffian(a: &SkewMatrix) -> Result<f64> {
    let pf = pfaffian_dense(&a.data)?;
    debug_assert!(a.dim() > 12 || {
        let det = a.data.clone().determinant();
        let scale: f64 = a.data.row_iter().map(|r| r.norm().max(1e-300)).product();
        (pf * pf - det).abs() <= 1e-8 * det.abs().max(scale * 1e-8)
    });
    Ok(pf)
}

/// Pfaffian of a dense matrix assumed skew-symmetric.
pub fn pfaffian_dense(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    let mut a = m.clone();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let (mut piv, mut best) = (k + 1, a[(k, k + 1)].abs());
        for i in k + 2..n {
            if a[(k, i)].abs() > best {
                piv = i;
                best = a[(k, i)].abs();
            }
        }
        if best == 0.0 {
            return Ok(0.0);
        }
        if piv != k + 1 {
            a.swap_rows(k + 1, piv);
            a.swap_columns(k + 1, piv);
            pf = -pf;
        }
        let head = a[(k, k + 1)];
        pf *= head;
        let tau: Vec<f64> = (k + 2..n).map(|i| a[(k, i)] / head).collect();
        let pivot_row: Vec<f64> = (k + 2..n).map(|j| a[(k + 1, j)]).collect();
        for (ii, i) in (k + 2..n).enumerate() {
            for (jj, j) in (k + 2..n).enumerate() {
                a[(i, j)] += tau[jj] * pivot_row[ii] - tau[ii] * pivot_row[jj];
            }
        }
        k += 2;
    }
    Ok(pf)
}

/// Pfaffian by expansion along the first row; exponential cost, dim ≤ 8.
pub fn pfaffian_expansion(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if n > 8 {
        return Err(Error::CapExceeded { required: n, limit: 8 });
    }
    let idx: Vec<usize> = (0..n).collect();
    Ok(expand(m, &idx))
}

fn expand(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    let first = idx[0];
    let mut total = 0.0;
    for k in 1..idx.len() {
        let rest: Vec<usize> = idx[1..].iter().copied().filter(|&i| i != idx[k]).collect();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * m[(first, idx[k])] * expand(m, &rest);
    }
    total
}

/// Determinant through LU.
pub fn det(m: &DMatrix<f64>) -> f64 {
    m.clone().determinant()
}

fn check_distinct(xs: &[u32]) -> Result<()> {
    let mut sorted = xs.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicatePoints(w[0] as i64));
    }
    Ok(())
}

/// The matrix [kernel(x_i, x_j)] in static order, x_{−k} = −x_k.
pub fn assemble_static_with(xs: &[u32], mut kernel: impl FnMut(i64, i64) -> Result<f64>) -> Result<SkewMatrix> {
    check_distinct(xs)?;
    let n = xs.len();
    let labels = Labeling::Static(n);
    let point = |i: usize| {
        let l = labels.label(i).expect("index in range");
        l.signum() * xs[l.unsigned_abs() as usize - 1] as i64
    };
    let mut err = None;
    let m = SkewMatrix::from_upper(2 * n, labels, |i, j| match kernel(point(i), point(j)) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    })?;
    err.map_or(Ok(m), Err)
}

/// Static Pfaffian matrix of the hypergeometric model.
pub fn assemble_static(xs: &[u32], p: &ModelParams) -> Result<SkewMatrix> {
    assemble_static_with(xs, |x, y| pf_static(x, y, p))
}

/// The matrix [kernel(t_i, x_i; t_j, x_j)] in dynamic order. Points are
/// stably sorted by time first.
pub fn assemble_dynamic_with(
    points: &[(f64, u32)],
    mut kernel: impl FnMut(f64, i64, f64, i64) -> Result<f64>,
) -> Result<SkewMatrix> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len();
    let labels = Labeling::Dynamic(n);
    let point = |i: usize| {
        let (t, x) = pts[i / 2];
        (t, if i.is_multiple_of(2) { x as i64 } else { -(x as i64) })
    };
    let mut err = None;
    let m = SkewMatrix::from_upper(2 * n, labels, |i, j| {
        let ((s, x), (t, y)) = (point(i), point(j));
        match kernel(s, x, t, y) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        }
    })?;
    err.map_or(Ok(m), Err)
}

/// Extended Pfaffian matrix of the equilibrium dynamics.
pub fn assemble_dynamic(points: &[(f64, u32)], p: &ModelParams) -> Result<SkewMatrix> {
    assemble_dynamic_with(points, |s, x, t, y| pf_dynamic(s, x, t, y, p))
}

/// Dynamic position of the row at static position `i`.
fn static_to_dynamic(i: usize, n: usize) -> usize {
    if i < n {
        2 * i
    } else {
        2 * (2 * n - i - 1) + 1
    }
}

/// Sign of the permutation relating the two orderings.
pub fn ordering_sign(n: usize) -> f64 {
    let perm: Vec<usize> = (0..2 * n).map(|i| static_to_dynamic(i, n)).collect();
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        inversions += perm[i + 1..].iter().filter(|&&q| q < perm[i]).count();
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Re-indexes a dynamic-order matrix into static order; the Pfaffian is unchanged.
pub fn conjugate_to_block(a: &SkewMatrix) -> Result<SkewMatrix> {
    let Labeling::Dynamic(n) = a.labels else {
        return Err(Error::WrongLabeling {
            expected: "dynamic_order",
            found: a.labels.name(),
        });
    };
    SkewMatrix::from_upper(2 * n, Labeling::Static(n), |i, j| {
        a.data[(static_to_dynamic(i, n), static_to_dynamic(j, n))]
    })
}

/// Inverse of [`conjugate_to_block`].
pub fn conjugate_to_dynamic(a: &SkewMatrix) -> Result<SkewMatrix> {
    let Labeling::Static(n) = a.labels else {
        return Err(Error::WrongLabeling {
            expected: "static_order",
            found: a.labels.name(),
        });
    };
    let mut back = vec![0; 2 * n];
    for i in 0..2 * n {
        back[static_to_dynamic(i, n)] = i;
    }
    SkewMatrix::from_upper(2 * n, Labeling::Dynamic(n), |i, j| a.data[(back[i], back[j])])
}

const PROPERTY_TOL: f64 = 1e-9;

/// Reduces Pf F⟦a₁,…,a_n,â_n,…,â₁⟧ to det K with
/// K(u, v) = 2F(u, v̂)√(f(u)f(v))/(f(u)+f(v)), after checking the three
/// compatibility properties on the supplied points.
pub fn pf_to_det<P: Clone + PartialEq>(
    kernel: impl Fn(&P, &P) -> f64,
    hat: impl Fn(&P) -> P,
    f: impl Fn(&P) -> f64,
    points: &[P],
) -> Result<DMatrix<f64>> {
    let fs: Vec<f64> = points.iter().map(&f).collect();
    for (i, &fa) in fs.iter().enumerate() {
        if !(fa > 0.0) {
            return Err(Error::PropertyViolated {
                index: 3,
                residual: fa,
            });
        }
        if fs[..i].contains(&fa) {
            return Err(Error::PropertyViolated { index: 3, residual: 0.0 });
        }
    }
    let all: Vec<P> = points.iter().cloned().chain(points.iter().map(&hat)).collect();
    let scale = all
        .iter()
        .flat_map(|a| all.iter().map(|b| kernel(a, b).abs()))
        .fold(1.0f64, f64::max);
    let check = |index: u8, residual: f64| {
        if residual > PROPERTY_TOL * scale || residual.is_nan() {
            Err(Error::PropertyViolated { index, residual })
        } else {
            Ok(())
        }
    };
    for a in &all {
        for b in &all {
            check(1, (kernel(a, &hat(b)) - kernel(b, &hat(a))).abs())?;
            if *a != hat(b) {
                check(2, (kernel(a, b) + kernel(b, a)).abs())?;
            }
        }
    }
    for (a, &fa) in points.iter().zip(&fs) {
        for (b, &fb) in points.iter().zip(&fs) {
            check(3, ((fa - fb) * kernel(a, &hat(b)) - (fa + fb) * kernel(a, b)).abs())?;
        }
    }
    let n = points.len();
    Ok(DMatrix::from_fn(n, n, |r, s| {
        2.0 * kernel(&points[r], &hat(&points[s])) * (fs[r] * fs[s]).sqrt() / (fs[r] + fs[s])
    }))
}

/// F⟦a₁,…,a_n,â_n,…,â₁⟧ for a kernel on an abstract point set.
pub fn involution_matrix<P: Clone>(kernel: impl Fn(&P, &P) -> f64, hat: impl Fn(&P) -> P, points: &[P]) -> SkewMatrix {
    let n = points.len();
    let seq: Vec<P> = points.iter().cloned().chain(points.iter().rev().map(&hat)).collect();
    SkewMatrix::from_upper(2 * n, Labeling::Static(n), |i, j| kernel(&seq[i], &seq[j])).expect("even dimension")
}
