//! Multi-index to linear-index bijection.
//!
//! A multi-index `(i_1, ..., i_d)` with 1-based components addresses one row
//! of a Khatri-Rao product (equivalently, one fiber of an unfolded tensor).
//! The linear index is
//!
//! ```text
//! i = i_1 + sum_{k=2}^{d} (n_1 * ... * n_{k-1}) * (i_k - 1)
//! ```
//!
//! which runs over `[1, N]` with `N = n_1 * ... * n_d`. Linear indices are
//! carried as `u128` throughout: the full linear index of a large tensor can
//! exceed `u64` even when every per-mode product fits.

use crate::error::{Error, Result};

/// 1-based multi-index; entry `k` lies in `[1, n_k]`.
pub type MultiIndex = Vec<usize>;

/// Total number of linear indices for `shape`, i.e. the product of mode sizes.
pub fn linear_count(shape: &[usize]) -> Result<u128> {
    let mut n: u128 = 1;
    for &s in shape {
        n = n.checked_mul(s as u128).ok_or(Error::IndexOverflow)?;
    }
    Ok(n)
}

/// Maps a 1-based multi-index to its 1-based linear index.
pub fn to_linear(multi: &[usize], shape: &[usize]) -> Result<u128> {
    debug_assert_eq!(multi.len(), shape.len());
    let mut lin: u128 = 0;
    let mut stride: u128 = 1;
    for (&i, &n) in multi.iter().zip(shape) {
        if i < 1 || i > n {
            return Err(Error::IndexOutOfRange { index: i, size: n });
        }
        lin = lin
            .checked_add(stride.checked_mul((i - 1) as u128).ok_or(Error::IndexOverflow)?)
            .ok_or(Error::IndexOverflow)?;
        stride = stride.checked_mul(n as u128).ok_or(Error::IndexOverflow)?;
    }
    Ok(lin + 1)
}

/// Inverse of [`to_linear`].
pub fn from_linear(lin: u128, shape: &[usize]) -> MultiIndex {
    let mut rem = lin - 1;
    shape
        .iter()
        .map(|&n| {
            let i = (rem % n as u128) as usize + 1;
            rem /= n as u128;
            i
        })
        .collect()
}
