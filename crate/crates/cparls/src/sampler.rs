//! Sketch construction for Khatri-Rao least squares: per-mode multinomial
//! sampling, deterministic enumeration of high-probability rows, bulk
//! rejection sampling for the remainder, and combining of repeated rows.
//!
//! The sampling probability of KRP row `i` with multi-index `(i_1,...,i_d)`
//! is the product of normalized per-mode leverage scores, so rows can be
//! drawn by sampling each mode independently and never materializing the
//! length-`N` distribution.

use rand::Rng;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::kernels::{leverage_scores, FactorMatrix};

/// Cap on the candidate cartesian product inspected by deterministic
/// enumeration; guards pathologically small thresholds.
const DIDX_PRODUCT_CAP: u128 = 10_000_000;

/// Acceptance-probability floor below which rejection sampling is refused
/// and the plan degenerates to its deterministic part.
const ACCEPT_FLOOR: f64 = 1e-6;

const REJECTION_MAX_ROUNDS: usize = 100;

/// Normalized per-mode leverage-score distributions; each vector sums to 1.
#[derive(Debug, Clone)]
pub struct ModeDistribution {
    probs: Vec<Vec<f64>>,
    cums: Vec<Vec<f64>>,
}

impl ModeDistribution {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        for p in &probs {
            if p.is_empty() {
                return Err(Error::InvalidConfig("empty mode distribution".into()));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidConfig(format!(
                    "mode distribution sums to {}, expected 1",
                    sum
                )));
            }
            if p.iter().any(|&x| !(0.0..=1.0 + 1e-12).contains(&x)) {
                return Err(Error::InvalidConfig("probability outside [0,1]".into()));
            }
        }
        let cums = probs
            .iter()
            .map(|p| {
                let mut acc = 0.0;
                let mut c: Vec<f64> = p
                    .iter()
                    .map(|&x| {
                        acc += x;
                        acc
                    })
                    .collect();
                if let Some(last) = c.last_mut() {
                    *last = 1.0;
                }
                c
            })
            .collect();
        Ok(ModeDistribution { probs, cums })
    }

    /// Builds the distributions `l(A_k) / rank(A_k)` for each factor.
    pub fn from_factors(factors: &[&FactorMatrix]) -> Result<Self> {
        let probs = factors
            .iter()
            .map(|f| {
                let (l, rank) = leverage_scores(f);
                l.iter().map(|&x| x / rank as f64).collect()
            })
            .collect();
        ModeDistribution::new(probs)
    }

    pub fn num_modes(&self) -> usize {
        self.probs.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.probs.iter().map(|p| p.len()).collect()
    }

    pub fn mode_probs(&self, k: usize) -> &[f64] {
        &self.probs[k]
    }

    /// Joint probability of a 1-based multi-index.
    pub fn prob(&self, multi: &[usize]) -> f64 {
        multi
            .iter()
            .zip(&self.probs)
            .map(|(&i, p)| p[i - 1])
            .product()
    }
}

/// Draws a multi-index by sampling each mode independently from its
/// multinomial; the joint probability is the product of the per-mode ones.
pub fn draw_multi_index<R: Rng + ?Sized>(dist: &ModeDistribution, rng: &mut R) -> MultiIndex {
    dist.cums
        .iter()
        .map(|cum| {
            let u: f64 = rng.random();
            cum.partition_point(|&c| c < u).min(cum.len() - 1) + 1
        })
        .collect()
}

/// Deterministic index set: all multi-indices with joint probability
/// strictly above `tau`, found by per-mode candidate pruning followed by an
/// exhaustive check of the (small) candidate product.
pub fn didx(dist: &ModeDistribution, tau: f64) -> Result<(Vec<MultiIndex>, usize, f64)> {
    debug_assert!(tau > 0.0);
    let alphas: Vec<f64> = dist
        .probs
        .iter()
        .map(|p| p.iter().cloned().fold(0.0, f64::max))
        .collect();
    let alpha_star: f64 = alphas.iter().product();
    if alpha_star <= tau {
        return Ok((Vec::new(), 0, 0.0));
    }
    // candidate rows per mode: p_k(i) > tau * alpha_k / alpha_star
    let candidates: Vec<Vec<usize>> = dist
        .probs
        .iter()
        .zip(&alphas)
        .map(|(p, &a)| {
            let thresh = tau * a / alpha_star;
            p.iter()
                .enumerate()
                .filter(|&(_, &x)| x > thresh)
                .map(|(i, _)| i + 1)
                .collect()
        })
        .collect();
    let mut count: u128 = 1;
    for c in &candidates {
        count = count.saturating_mul(c.len() as u128);
    }
    if count > DIDX_PRODUCT_CAP {
        return Err(Error::CandidateCapExceeded {
            count,
            cap: DIDX_PRODUCT_CAP,
        });
    }
    let mut det = Vec::new();
    let mut p_det = 0.0;
    let mut cursor = vec![0usize; candidates.len()];
    if candidates.iter().all(|c| !c.is_empty()) {
        'outer: loop {
            let multi: MultiIndex = cursor
                .iter()
                .zip(&candidates)
                .map(|(&j, c)| c[j])
                .collect();
            let p = dist.prob(&multi);
            if p > tau {
                p_det += p;
                det.push(multi);
            }
            // advance odometer
            for k in 0..cursor.len() {
                cursor[k] += 1;
                if cursor[k] < candidates[k].len() {
                    continue 'outer;
                }
                cursor[k] = 0;
            }
            break;
        }
    }
    let s_det = det.len();
    Ok((det, s_det, p_det))
}

/// Random index sampling with rejection of the deterministic set: draws
/// multi-indices in bulk, rejects any with probability above `tau`, and
/// weights accepted sample `j` by `sqrt((1 - p_det) / (p_j * s_rnd))`.
pub fn sidx<R: Rng + ?Sized>(
    dist: &ModeDistribution,
    s_rnd: usize,
    tau: f64,
    p_det: f64,
    rng: &mut R,
) -> Result<(Vec<MultiIndex>, Vec<f64>)> {
    let accept = 1.0 - p_det;
    if accept < ACCEPT_FLOOR {
        return Err(Error::DegenerateTau(accept));
    }
    let mut idx = Vec::with_capacity(s_rnd);
    let mut wgt = Vec::with_capacity(s_rnd);
    let mut rounds = 0;
    while idx.len() < s_rnd {
        if rounds >= REJECTION_MAX_ROUNDS {
            return Err(Error::RejectionStalled {
                needed: s_rnd - idx.len(),
                rounds,
            });
        }
        rounds += 1;
        let need = s_rnd - idx.len();
        let batch = ((need as f64) * (1.1 / accept)).ceil() as usize;
        for _ in 0..batch.max(need) {
            if idx.len() == s_rnd {
                break;
            }
            let multi = draw_multi_index(dist, rng);
            let p = dist.prob(&multi);
            if p <= tau {
                wgt.push((accept / (p * s_rnd as f64)).sqrt());
                idx.push(multi);
            }
        }
    }
    Ok((idx, wgt))
}

/// Combines repeated multi-indices: multiplicity `c` collapses to one row
/// with weight scaled by `sqrt(c)`, preserving the sketched norm exactly.
/// First-occurrence order is kept. Returns the multiplicities alongside.
pub fn cidx(
    idx: Vec<MultiIndex>,
    wgt: Vec<f64>,
) -> (Vec<MultiIndex>, Vec<f64>, Vec<usize>) {
    let mut pos: HashMap<MultiIndex, usize> = HashMap::new();
    let mut out_idx: Vec<MultiIndex> = Vec::new();
    let mut base_wgt: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for (m, w) in idx.into_iter().zip(wgt) {
        match pos.get(&m) {
            Some(&j) => counts[j] += 1,
            None => {
                pos.insert(m.clone(), out_idx.len());
                out_idx.push(m);
                base_wgt.push(w);
                counts.push(1);
            }
        }
    }
    let out_wgt = base_wgt
        .iter()
        .zip(&counts)
        .map(|(w, &c)| w * (c as f64).sqrt())
        .collect();
    (out_idx, out_wgt, counts)
}

/// Output of [`skrp_lev`]: the row multi-indices and weights of the implicit
/// sampling matrix, with the deterministic rows first.
#[derive(Debug, Clone)]
pub struct SketchPlan {
    pub idx: Vec<MultiIndex>,
    pub wgt: Vec<f64>,
    /// Repeat count behind each row (1 for deterministic rows).
    pub multiplicity: Vec<usize>,
    pub s_det: usize,
    pub p_det: f64,
    pub s_requested: usize,
}

impl SketchPlan {
    /// Number of rows in the sketched system, `s_bar <= s_requested`.
    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    /// Diagnostics text: one line per row with multi-index, weight,
    /// det/rnd flag, and multiplicity.
    pub fn write_diagnostics<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (j, multi) in self.idx.iter().enumerate() {
            let flag = if j < self.s_det { "det" } else { "rnd" };
            let coords: Vec<String> = multi.iter().map(|i| i.to_string()).collect();
            writeln!(
                w,
                "{} {} {} {}",
                coords.join(","),
                self.wgt[j],
                flag,
                self.multiplicity[j]
            )?;
        }
        Ok(())
    }
}

/// Hybrid deterministic/random sketch construction: deterministic rows above
/// the threshold (weight 1), then combined rejection-sampled random rows.
///
/// If the deterministic set alone reaches `s`, the `s` highest-probability
/// deterministic indices are returned. If it captures essentially all
/// probability mass, the plan is the deterministic set alone rather than
/// stalling rejection sampling. `combine = false` skips the repeated-row
/// collapse (diagnostics only; the sketched system is equivalent).
pub fn skrp_lev<R: Rng + ?Sized>(
    dist: &ModeDistribution,
    s: usize,
    tau: f64,
    combine: bool,
    rng: &mut R,
) -> Result<SketchPlan> {
    if s < 1 {
        return Err(Error::InvalidConfig("s must be >= 1".into()));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidConfig(format!("tau {} outside (0,1]", tau)));
    }
    let (mut det, s_det, p_det) = didx(dist, tau)?;
    if s_det >= s {
        det.sort_by(|a, b| {
            dist.prob(b)
                .partial_cmp(&dist.prob(a))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        det.truncate(s);
        let p_det: f64 = det.iter().map(|m| dist.prob(m)).sum();
        let n = det.len();
        return Ok(SketchPlan {
            idx: det,
            wgt: vec![1.0; n],
            multiplicity: vec![1; n],
            s_det: n,
            p_det,
            s_requested: s,
        });
    }
    if 1.0 - p_det < ACCEPT_FLOOR {
        // essentially all mass is deterministic
        let n = det.len();
        return Ok(SketchPlan {
            idx: det,
            wgt: vec![1.0; n],
            multiplicity: vec![1; n],
            s_det: n,
            p_det,
            s_requested: s,
        });
    }
    let s_rnd = s - s_det;
    let (idx_rnd, wgt_rnd) = sidx(dist, s_rnd, tau, p_det, rng)?;
    let (idx_rnd, wgt_rnd, counts) = if combine {
        cidx(idx_rnd, wgt_rnd)
    } else {
        let n = idx_rnd.len();
        (idx_rnd, wgt_rnd, vec![1; n])
    };
    let mut idx = det;
    let mut wgt = vec![1.0; s_det];
    let mut multiplicity = vec![1usize; s_det];
    idx.extend(idx_rnd);
    wgt.extend(wgt_rnd);
    multiplicity.extend(counts);
    Ok(SketchPlan {
        idx,
        wgt,
        multiplicity,
        s_det,
        p_det,
        s_requested: s,
    })
}
