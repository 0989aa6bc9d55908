//! Coordinate-format sparse tensors.
//!
//! Stores the nonzeros of an order-`(d+1)` tensor as 1-based coordinates plus
//! values, mirroring the FROSTT `.tns` text format. After
//! [`SparseTensor::precompute_mode_linearization`], each mode additionally
//! carries the linear index of every nonzero over the *other* modes together
//! with a fiber lookup table, so that sampled right-hand sides can be gathered
//! in time proportional to their own size rather than to `nnz`.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::index::{linear_count, to_linear};

/// Sparse tensor in coordinate format. Immutable once built (the
/// linearization precompute fills caches but never changes the nonzeros).
#[derive(Debug, Clone)]
pub struct SparseTensor {
    shape: Vec<usize>,
    /// Flat nnz x order array of 1-based coordinates.
    coords: Vec<usize>,
    values: Vec<f64>,
    /// Per mode: linear index of each nonzero over the remaining modes.
    mode_lin: Vec<Option<Vec<u128>>>,
    /// Per mode: excluded-mode linear index -> (mode coordinate 0-based, value).
    fibers: Vec<Option<HashMap<u128, Vec<(usize, f64)>>>>,
}

/// Sampled right-hand side produced by [`SparseTensor::tnsr_samp`]:
/// a sparse `nrows x ncols` matrix in coordinate form.
#[derive(Debug, Clone)]
pub struct SparseRhs {
    pub nrows: usize,
    pub ncols: usize,
    /// (row, col, value), 0-based.
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseTensor {
    /// Builds a tensor from explicit entries, validating ranges, nonzero
    /// values, and coordinate uniqueness.
    pub fn from_entries(shape: Vec<usize>, entries: &[(Vec<usize>, f64)]) -> Result<Self> {
        let order = shape.len();
        let mut coords = Vec::with_capacity(entries.len() * order);
        let mut values = Vec::with_capacity(entries.len());
        for (multi, v) in entries {
            if multi.len() != order {
                return Err(Error::DimMismatch(format!(
                    "coordinate arity {} vs order {}",
                    multi.len(),
                    order
                )));
            }
            for (mode, (&i, &n)) in multi.iter().zip(&shape).enumerate() {
                if i < 1 || i > n {
                    return Err(Error::CoordinateOutOfRange {
                        mode: mode + 1,
                        index: i,
                        size: n,
                    });
                }
            }
            if *v == 0.0 {
                continue;
            }
            coords.extend_from_slice(multi);
            values.push(*v);
        }
        let t = SparseTensor {
            mode_lin: vec![None; order],
            fibers: vec![None; order],
            shape,
            coords,
            values,
        };
        t.check_duplicates()?;
        Ok(t)
    }

    fn check_duplicates(&self) -> Result<()> {
        let mut lins: Vec<(u128, usize)> = (0..self.nnz())
            .map(|nz| {
                let lin = to_linear(self.coord(nz), &self.shape).expect("validated coords");
                (lin, nz)
            })
            .collect();
        lins.sort_unstable();
        for w in lins.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateCoordinate { line: w[1].1 + 1 });
            }
        }
        Ok(())
    }

    /// Parses FROSTT `.tns` text: one nonzero per line, `order` 1-based
    /// integer coordinates followed by one value; `#` lines are comments.
    /// The shape is inferred from per-mode maxima unless `shape_override` is
    /// given. Zero-valued entries are dropped; the count of dropped entries
    /// is returned alongside the tensor.
    pub fn parse_frostt<R: BufRead>(
        reader: R,
        shape_override: Option<&[usize]>,
    ) -> Result<(Self, usize)> {
        let mut coords: Vec<usize> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut order: Option<usize> = None;
        let mut dropped = 0usize;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = trimmed.split_whitespace().collect();
            if toks.len() < 2 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected at least 2 tokens, got {}", toks.len()),
                });
            }
            let d1 = toks.len() - 1;
            match order {
                None => order = Some(d1),
                Some(o) if o != d1 => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected {} coordinates, got {}", o, d1),
                    })
                }
                _ => {}
            }
            let mut multi = Vec::with_capacity(d1);
            for tok in &toks[..d1] {
                let c: usize = tok.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("non-integer coordinate '{}'", tok),
                })?;
                if c < 1 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "coordinate must be >= 1".into(),
                    });
                }
                multi.push(c);
            }
            let v: f64 = toks[d1].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("non-numeric value '{}'", toks[d1]),
            })?;
            if v == 0.0 {
                dropped += 1;
                continue;
            }
            coords.extend_from_slice(&multi);
            values.push(v);
        }
        let order = order.ok_or(Error::EmptyInput)?;
        let shape: Vec<usize> = match shape_override {
            Some(s) => {
                if s.len() != order {
                    return Err(Error::DimMismatch(format!(
                        "shape override has {} modes, data has {}",
                        s.len(),
                        order
                    )));
                }
                s.to_vec()
            }
            None => (0..order)
                .map(|k| {
                    (0..values.len())
                        .map(|nz| coords[nz * order + k])
                        .max()
                        .unwrap_or(1)
                })
                .collect(),
        };
        for nz in 0..values.len() {
            for k in 0..order {
                let i = coords[nz * order + k];
                if i > shape[k] {
                    return Err(Error::CoordinateOutOfRange {
                        mode: k + 1,
                        index: i,
                        size: shape[k],
                    });
                }
            }
        }
        let t = SparseTensor {
            mode_lin: vec![None; order],
            fibers: vec![None; order],
            shape,
            coords,
            values,
        };
        t.check_duplicates()?;
        Ok((t, dropped))
    }

    /// Writes the tensor back out in FROSTT `.tns` text form.
    pub fn write_tns<W: Write>(&self, w: &mut W) -> Result<()> {
        for nz in 0..self.nnz() {
            for &c in self.coord(nz) {
                write!(w, "{} ", c)?;
            }
            writeln!(w, "{}", self.values[nz])?;
        }
        Ok(())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Tensor order, i.e. `d + 1`.
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// 1-based coordinates of nonzero `nz`.
    pub fn coord(&self, nz: usize) -> &[usize] {
        &self.coords[nz * self.order()..(nz + 1) * self.order()]
    }

    /// Mode sizes with mode `k` removed, in increasing mode order.
    pub fn excluded_shape(&self, mode: usize) -> Vec<usize> {
        self.shape
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != mode)
            .map(|(_, &n)| n)
            .collect()
    }

    /// Frobenius norm: sqrt of the sum of squared nonzero values.
    pub fn frob_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Precomputes, for every mode, the excluded-mode linear index of each
    /// nonzero together with a fiber lookup table keyed by that index.
    pub fn precompute_mode_linearization(&mut self) -> Result<()> {
        let order = self.order();
        for mode in 0..order {
            if self.mode_lin[mode].is_some() {
                continue;
            }
            let excl = self.excluded_shape(mode);
            linear_count(&excl)?;
            let mut lins = Vec::with_capacity(self.nnz());
            let mut fibers: HashMap<u128, Vec<(usize, f64)>> = HashMap::new();
            let mut multi = vec![0usize; order - 1];
            for nz in 0..self.nnz() {
                let c = self.coord(nz);
                let mut j = 0;
                for (k, &ck) in c.iter().enumerate() {
                    if k != mode {
                        multi[j] = ck;
                        j += 1;
                    }
                }
                let lin = to_linear(&multi, &excl)?;
                lins.push(lin);
                fibers
                    .entry(lin)
                    .or_default()
                    .push((c[mode] - 1, self.values[nz]));
            }
            self.mode_lin[mode] = Some(lins);
            self.fibers[mode] = Some(fibers);
        }
        Ok(())
    }

    /// Precomputed excluded-mode linear indices for `mode`.
    pub fn mode_lin(&self, mode: usize) -> Result<&[u128]> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        self.mode_lin[mode]
            .as_deref()
            .ok_or(Error::MissingLinearization { mode })
    }

    fn fiber_map(&self, mode: usize) -> Result<&HashMap<u128, Vec<(usize, f64)>>> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        self.fibers[mode]
            .as_ref()
            .ok_or(Error::MissingLinearization { mode })
    }

    /// Excluded-mode linear indices of all nonempty mode-`mode` fibers,
    /// sorted for deterministic iteration.
    pub fn nonempty_fibers(&self, mode: usize) -> Result<Vec<u128>> {
        let mut keys: Vec<u128> = self.fiber_map(mode)?.keys().copied().collect();
        keys.sort_unstable();
        Ok(keys)
    }

    /// Entries (0-based mode coordinate, value) of one mode-`mode` fiber.
    pub fn fiber(&self, mode: usize, lin: u128) -> Result<&[(usize, f64)]> {
        Ok(self
            .fiber_map(mode)?
            .get(&lin)
            .map(|v| v.as_slice())
            .unwrap_or(&[]))
    }

    /// Extracts the sampled right-hand side for a mode-`mode` least squares
    /// subproblem: row `j` holds `wgt[j] * x(...)` over the fiber addressed
    /// by `idx[j]`. Duplicate fiber indices are grouped before the gather so
    /// each fiber is touched once; fibers without nonzeros yield empty rows.
    pub fn tnsr_samp(&self, mode: usize, idx: &[u128], wgt: &[f64]) -> Result<SparseRhs> {
        debug_assert_eq!(idx.len(), wgt.len());
        let fibers = self.fiber_map(mode)?;
        let mut groups: HashMap<u128, Vec<usize>> = HashMap::new();
        for (j, &lin) in idx.iter().enumerate() {
            groups.entry(lin).or_default().push(j);
        }
        let mut entries = Vec::new();
        for (lin, rows) in groups {
            if let Some(fib) = fibers.get(&lin) {
                for &j in &rows {
                    for &(col, v) in fib {
                        entries.push((j, col, wgt[j] * v));
                    }
                }
            }
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Ok(SparseRhs {
            nrows: idx.len(),
            ncols: self.shape[mode],
            entries,
        })
    }
}
