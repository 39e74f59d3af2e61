//! Dense linear algebra helpers on top of nalgebra: a sign-normalized thin
//! SVD, deterministic orthonormal completion and a few matrix utilities.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative cut-off below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-12;

const SVD_MAX_ITERS: usize = 10_000;

/// Thin SVD `a = u * diag(s) * v^T` with singular values in descending order.
///
/// Every column of `u` is sign-fixed so that its largest-magnitude entry is
/// positive (lowest index wins on ties); the matching column of `v` is
/// flipped with it.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let (n, p) = a.shape();
        let k = n.min(p);
        if k == 0 {
            return Ok(Svd {
                u: DMatrix::zeros(n, 0),
                s: DVector::zeros(0),
                v: DMatrix::zeros(p, 0),
            });
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("matrix contains non-finite entries".into()));
        }
        let mut svd = nalgebra::SVD::try_new_unordered(
            a.clone(),
            true,
            true,
            f64::EPSILON,
            SVD_MAX_ITERS,
        )
        .ok_or_else(|| Error::Numerical("SVD failed to converge".into()))?;
        svd.sort_by_singular_values();
        let mut u = svd.u.expect("u requested");
        let mut v = svd.v_t.expect("v requested").transpose();
        let s = svd.singular_values;
        fix_signs(&mut u, &mut v);
        Ok(Svd { u, s, v })
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(mut self, k: usize) -> Self {
        let k = k.min(self.s.len());
        self.u = self.u.columns(0, k).into_owned();
        self.v = self.v.columns(0, k).into_owned();
        self.s = self.s.rows(0, k).into_owned();
        self
    }

    /// Number of singular values above `RANK_TOL * s_max`.
    pub fn numerical_rank(&self) -> usize {
        let smax = self.s.iter().cloned().fold(0.0, f64::max);
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&x| x >= RANK_TOL * smax).count()
    }
}

fn fix_signs(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for j in 0..u.ncols() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, x) in u.column(j).iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if u[(best, j)] < 0.0 {
            u.column_mut(j).neg_mut();
            v.column_mut(j).neg_mut();
        }
    }
}

/// `count` orthonormal vectors orthogonal to the (orthonormal) columns of
/// `basis`, built by Gram-Schmidt on the identity columns e_0, e_1, ... in
/// order, skipping any whose residual is numerically zero.
pub fn orthonormal_complement(basis: &DMatrix<f64>, count: usize) -> Result<DMatrix<f64>> {
    let n = basis.nrows();
    if basis.ncols() + count > n {
        return Err(Error::InvalidRank(format!(
            "cannot complete {} columns with {} more in dimension {}",
            basis.ncols(),
            count,
            n
        )));
    }
    let mut out = DMatrix::zeros(n, count);
    let mut filled = 0;
    for i in 0..n {
        if filled == count {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for b in basis.column_iter() {
                let c = b.dot(&v);
                v.axpy(-c, &b, 1.0);
            }
            for j in 0..filled {
                let col = out.column(j);
                let c = col.dot(&v);
                v.axpy(-c, &col, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            out.set_column(filled, &(v / norm));
            filled += 1;
        }
    }
    if filled < count {
        return Err(Error::Numerical(
            "orthonormal completion ran out of directions".into(),
        ));
    }
    Ok(out)
}

/// Binds matrices with equal column counts row-wise.
pub fn stack_rows(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = blocks.first().map_or(0, |b| b.ncols());
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(n, p);
    let mut row = 0;
    for b in blocks {
        out.rows_mut(row, b.nrows()).copy_from(b);
        row += b.nrows();
    }
    out
}

/// Binds matrices with equal row counts column-wise.
pub fn stack_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Largest absolute entry of `a^T a - I`.
pub fn gram_identity_residual(a: &DMatrix<f64>) -> f64 {
    let mut g = a.transpose() * a;
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    max_abs(&g)
}

/// Indices of the `k` largest `|values|`, ties broken by the lower index.
pub fn top_k_by_magnitude(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}
