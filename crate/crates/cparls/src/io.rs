//! Text serialization: Kruskal models and convergence-trace CSVs.
//!
//! Model format: one line of `r` weights, then one block per factor with a
//! `n r` header line followed by `n` rows of `r` values. Values print in
//! Rust's shortest round-trip form, so write then read is lossless.

use nalgebra::{DMatrix, DVector};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::kernels::{FactorMatrix, KruskalModel};
use crate::solver::TraceRecord;

pub fn write_model<W: Write>(model: &KruskalModel, w: &mut W) -> Result<()> {
    let lambda: Vec<String> = model.lambda.iter().map(|v| v.to_string()).collect();
    writeln!(w, "{}", lambda.join(" "))?;
    for f in &model.factors {
        writeln!(w, "{} {}", f.nrows(), f.ncols())?;
        for i in 0..f.nrows() {
            let row: Vec<String> = (0..f.ncols()).map(|j| f[(i, j)].to_string()).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
    }
    Ok(())
}

pub fn read_model<R: BufRead>(r: R) -> Result<KruskalModel> {
    let mut lines = r.lines().enumerate();
    let parse_err = |line: usize, msg: &str| Error::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };
    let (lnum, first) = loop {
        match lines.next() {
            Some((n, l)) => {
                let l = l?;
                if !l.trim().is_empty() {
                    break (n, l);
                }
            }
            None => return Err(Error::EmptyInput),
        }
    };
    let lambda: Vec<f64> = first
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(lnum, "bad weight line"))?;
    let rank = lambda.len();
    let mut factors: Vec<FactorMatrix> = Vec::new();
    while let Some((hnum, header)) = lines.next() {
        let header = header?;
        if header.trim().is_empty() {
            continue;
        }
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(hnum, "bad factor header"))?;
        if dims.len() != 2 {
            return Err(parse_err(hnum, "factor header needs two integers"));
        }
        let (n, r) = (dims[0], dims[1]);
        if r != rank {
            return Err(Error::RankMismatch(r, rank));
        }
        let mut f = DMatrix::zeros(n, r);
        for i in 0..n {
            let (rnum, row) = lines
                .next()
                .ok_or_else(|| parse_err(hnum, "truncated factor block"))?;
            let row = row?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_err(rnum, "bad factor row"))?;
            if vals.len() != r {
                return Err(parse_err(rnum, "wrong number of columns"));
            }
            for (j, v) in vals.into_iter().enumerate() {
                f[(i, j)] = v;
            }
        }
        factors.push(f);
    }
    if factors.is_empty() {
        return Err(Error::EmptyInput);
    }
    KruskalModel::new(factors, DVector::from_vec(lambda))
}

/// Trace CSV: one line per (epoch, mode); records without per-mode stats
/// (the deterministic baseline) emit one line with mode 0 and zero stats.
pub fn write_trace_csv<W: Write>(traces: &[TraceRecord], w: &mut W) -> Result<()> {
    writeln!(w, "epoch,time_s,fit,fit_kind,mode,s_bar,s_det,p_det")?;
    for t in traces {
        if t.per_mode.is_empty() {
            writeln!(
                w,
                "{},{},{},{},0,0,0,0",
                t.epoch,
                t.time_s,
                t.fit,
                t.fit_kind.as_str()
            )?;
        } else {
            for (k, s) in t.per_mode.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    t.epoch,
                    t.time_s,
                    t.fit,
                    t.fit_kind.as_str(),
                    k + 1,
                    s.s_bar,
                    s.s_det,
                    s.p_det
                )?;
            }
        }
    }
    Ok(())
}
