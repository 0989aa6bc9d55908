//! Dense factor-matrix kernels: leverage scores, sampled-KRP assembly,
//! sketched least squares, Gram/Hadamard products, MTTKRP, and column
//! normalization.
//!
//! Factor matrices are column-major dense `f64` matrices ([`nalgebra`]'s
//! `DMatrix`). Everything here is a pure function of its inputs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::tensor::{SparseRhs, SparseTensor};

/// An `n_k x r` factor matrix.
pub type FactorMatrix = DMatrix<f64>;

/// A CP model: `d+1` unit-column factor matrices plus a weight vector.
#[derive(Debug, Clone)]
pub struct KruskalModel {
    pub factors: Vec<FactorMatrix>,
    pub lambda: DVector<f64>,
}

impl KruskalModel {
    pub fn new(factors: Vec<FactorMatrix>, lambda: DVector<f64>) -> Result<Self> {
        let r = lambda.len();
        for f in &factors {
            if f.ncols() != r {
                return Err(Error::RankMismatch(f.ncols(), r));
            }
        }
        Ok(KruskalModel { factors, lambda })
    }

    /// Builds a model from raw factors, normalizing columns and absorbing
    /// the norms into the weight vector.
    pub fn from_factors(factors: Vec<FactorMatrix>) -> Result<Self> {
        let r = factors.first().map(|f| f.ncols()).unwrap_or(0);
        let mut lambda = DVector::from_element(r, 1.0);
        let mut normed = Vec::with_capacity(factors.len());
        for f in factors {
            if f.ncols() != r {
                return Err(Error::RankMismatch(f.ncols(), r));
            }
            let (u, l) = normalize_columns(&f);
            lambda.component_mul_assign(&l);
            normed.push(u);
        }
        Ok(KruskalModel {
            factors: normed,
            lambda,
        })
    }

    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    /// Model value at a 1-based multi-index over all modes.
    pub fn eval(&self, multi: &[usize]) -> f64 {
        let r = self.rank();
        let mut acc = 0.0;
        for j in 0..r {
            let mut p = self.lambda[j];
            for (k, &i) in multi.iter().enumerate() {
                p *= self.factors[k][(i - 1, j)];
            }
            acc += p;
        }
        acc
    }

    /// Squared Frobenius norm of the model tensor:
    /// `lambda' (Hadamard of Gram matrices) lambda`.
    pub fn norm_sq(&self) -> f64 {
        let refs: Vec<&FactorMatrix> = self.factors.iter().collect();
        let v = gram_hadamard(&refs);
        (self.lambda.transpose() * v * &self.lambda)[(0, 0)].max(0.0)
    }
}

/// Leverage scores of the rows of `a` plus the numerical rank used.
///
/// Computed from a thin SVD with singular values below
/// `max(n, r) * eps * sigma_max` treated as zero; the reported rank replaces
/// `r` when the matrix is rank-deficient.
pub fn leverage_scores(a: &FactorMatrix) -> (DVector<f64>, usize) {
    let n = a.nrows();
    let r = a.ncols();
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("svd with u requested");
    let sigma = &svd.singular_values;
    let smax = sigma.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = (n.max(r) as f64) * f64::EPSILON * smax;
    let rank = sigma.iter().filter(|&&s| s > cutoff).count();
    let mut scores = DVector::zeros(n);
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..rank {
            let uij = u[(i, j)];
            acc += uij * uij;
        }
        scores[i] = acc.min(1.0);
    }
    (scores, rank)
}

/// Assembles the sampled KRP matrix: row `j` is
/// `wgt[j] * (A1(i_1,:) .* ... .* Ad(i_d,:))` for multi-index `idx[j]`,
/// with factors ordered to match the multi-index entries.
pub fn krp_samp(
    factors: &[&FactorMatrix],
    idx: &[MultiIndex],
    wgt: &[f64],
) -> Result<DMatrix<f64>> {
    debug_assert_eq!(idx.len(), wgt.len());
    let r = factors.first().map(|f| f.ncols()).unwrap_or(0);
    let mut out = DMatrix::zeros(idx.len(), r);
    for (j, (multi, &w)) in idx.iter().zip(wgt).enumerate() {
        if multi.len() != factors.len() {
            return Err(Error::DimMismatch(format!(
                "multi-index arity {} vs {} factors",
                multi.len(),
                factors.len()
            )));
        }
        for c in 0..r {
            let mut p = w;
            for (k, &i) in multi.iter().enumerate() {
                let f = factors[k];
                if i < 1 || i > f.nrows() {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        size: f.nrows(),
                    });
                }
                p *= f[(i - 1, c)];
            }
            out[(j, c)] = p;
        }
    }
    Ok(out)
}

/// Explicitly forms the full KRP `A_d (krp) ... (krp) A_1` with rows ordered
/// by the linear-index bijection. Only sensible at tiny dimensions; used as
/// an oracle against the implicit sampled path.
pub fn explicit_krp(factors: &[&FactorMatrix]) -> DMatrix<f64> {
    let r = factors.first().map(|f| f.ncols()).unwrap_or(0);
    let shape: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let n: usize = shape.iter().product();
    let mut out = DMatrix::zeros(n, r);
    for lin in 1..=n {
        let multi = crate::index::from_linear(lin as u128, &shape);
        for c in 0..r {
            let mut p = 1.0;
            for (k, &i) in multi.iter().enumerate() {
                p *= factors[k][(i - 1, c)];
            }
            out[(lin - 1, c)] = p;
        }
    }
    out
}

/// Solves `min_B || Zs B' - Xs' ||_F` for a tall dense `Zs` (s x r) and a
/// sparse right-hand side `Xs` (s x n), returning `B` (n x r) and a flag set
/// when `Zs` was numerically rank-deficient (minimum-norm solution used).
///
/// Uses QR of `Zs`; the product `Q' Xs'` is accumulated by streaming the
/// sparse entries so the right-hand side is never densified.
pub fn solve_lsq(zs: &DMatrix<f64>, xs: &SparseRhs) -> Result<(DMatrix<f64>, bool)> {
    let s = zs.nrows();
    let r = zs.ncols();
    let n = xs.ncols;
    if xs.nrows != s {
        return Err(Error::DimMismatch(format!(
            "Zs has {} rows, Xs has {}",
            s, xs.nrows
        )));
    }
    if s < r {
        return Err(Error::DimMismatch(format!(
            "underdetermined sketch: {} rows < rank {}",
            s, r
        )));
    }
    let qr = zs.clone().qr();
    let q = qr.q();
    let rr = qr.r();
    let rmax = (0..r).map(|j| rr[(j, j)].abs()).fold(0.0f64, f64::max);
    let deficient = (0..r).any(|j| rr[(j, j)].abs() <= (s.max(r) as f64) * f64::EPSILON * rmax);
    if !deficient {
        // C = Q' Xs'  (r x n), streamed over the sparse entries
        let mut c = DMatrix::zeros(r, n);
        for &(row, col, v) in &xs.entries {
            for l in 0..r {
                c[(l, col)] += v * q[(row, l)];
            }
        }
        let bt = rr
            .solve_upper_triangular(&c)
            .ok_or_else(|| Error::NonFinite("triangular solve".into()))?;
        return Ok((bt.transpose(), false));
    }
    // minimum-norm solution via truncated SVD
    let svd = zs.clone().svd(true, true);
    let u = svd.u.expect("u");
    let vt = svd.v_t.expect("v_t");
    let sigma = &svd.singular_values;
    let smax = sigma.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = (s.max(r) as f64) * f64::EPSILON * smax;
    let mut c = DMatrix::zeros(r, n);
    for &(row, col, v) in &xs.entries {
        for l in 0..r {
            c[(l, col)] += v * u[(row, l)];
        }
    }
    for l in 0..r {
        let inv = if sigma[l] > cutoff { 1.0 / sigma[l] } else { 0.0 };
        for j in 0..n {
            c[(l, j)] *= inv;
        }
    }
    let bt = vt.transpose() * c;
    Ok((bt.transpose(), true))
}

/// Hadamard product of the Gram matrices of `factors`.
pub fn gram_hadamard(factors: &[&FactorMatrix]) -> DMatrix<f64> {
    let r = factors.first().map(|f| f.ncols()).unwrap_or(0);
    let mut v = DMatrix::from_element(r, r, 1.0);
    for f in factors {
        let g = f.transpose() * *f;
        v.component_mul_assign(&g);
    }
    v
}

/// Matricized tensor times Khatri-Rao product for `mode`, streamed over the
/// nonzeros in `O(nnz * r)`.
pub fn mttkrp(t: &SparseTensor, factors: &[FactorMatrix], mode: usize) -> Result<DMatrix<f64>> {
    let order = t.order();
    if factors.len() != order {
        return Err(Error::DimMismatch(format!(
            "{} factors for order-{} tensor",
            factors.len(),
            order
        )));
    }
    for (k, f) in factors.iter().enumerate() {
        if f.nrows() != t.shape()[k] {
            return Err(Error::DimMismatch(format!(
                "factor {} has {} rows, mode size is {}",
                k,
                f.nrows(),
                t.shape()[k]
            )));
        }
    }
    let r = factors[0].ncols();
    let mut out = DMatrix::zeros(t.shape()[mode], r);
    let mut row = vec![0.0f64; r];
    for nz in 0..t.nnz() {
        let c = t.coord(nz);
        let v = t.values()[nz];
        row.iter_mut().for_each(|x| *x = v);
        for (k, f) in factors.iter().enumerate() {
            if k == mode {
                continue;
            }
            let i = c[k] - 1;
            for (j, x) in row.iter_mut().enumerate() {
                *x *= f[(i, j)];
            }
        }
        let i = c[mode] - 1;
        for (j, &x) in row.iter().enumerate() {
            out[(i, j)] += x;
        }
    }
    Ok(out)
}

/// Rescales columns to unit 2-norm, returning the unit matrix and the norms.
/// A zero column gets weight 0 and is replaced by the first canonical basis
/// vector so downstream leverage scores stay well-defined.
pub fn normalize_columns(a: &FactorMatrix) -> (FactorMatrix, DVector<f64>) {
    let mut out = a.clone();
    let mut lambda = DVector::zeros(a.ncols());
    for j in 0..a.ncols() {
        let norm = out.column(j).norm();
        lambda[j] = norm;
        if norm == 0.0 {
            out[(0, j)] = 1.0;
        } else {
            out.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    (out, lambda)
}
