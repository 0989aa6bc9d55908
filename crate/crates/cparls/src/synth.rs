//! Synthetic low-rank tensors with leverage-score-concentrated factors, and
//! factor match scoring for recovery experiments.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::index::{from_linear, linear_count};
use crate::kernels::{FactorMatrix, KruskalModel};
use crate::tensor::SparseTensor;

/// Parameters of one synthetic instance.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub shape: Vec<usize>,
    pub rank: usize,
    /// Number of leading factor columns carrying concentrated mass.
    pub n_concentrated: usize,
    /// Nonzero rows per concentrated column; rows are disjoint across the
    /// concentrated columns of one factor.
    pub spread: usize,
    /// Base magnitude of concentrated entries.
    pub magnitude: f64,
    /// Uniform jitter added on top of `magnitude`, drawn from `U(0, ampl)`.
    pub seed_noise: f64,
    /// Relative Gaussian noise level on the formed tensor.
    pub rel_noise: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(shape: Vec<usize>, rank: usize) -> Self {
        SynthSpec {
            shape,
            rank,
            n_concentrated: 3,
            spread: 5,
            magnitude: 3.0,
            seed_noise: 0.05,
            rel_noise: 0.05,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let min_n = self.shape.iter().copied().min().unwrap_or(0);
        if self.shape.is_empty() || self.rank < 1 {
            return Err(Error::InvalidConfig("empty shape or zero rank".into()));
        }
        if self.n_concentrated > self.rank {
            return Err(Error::InvalidConfig(
                "more concentrated columns than rank".into(),
            ));
        }
        if self.spread * self.n_concentrated > min_n {
            return Err(Error::InvalidConfig(format!(
                "spread {} x {} concentrated columns exceeds smallest mode size {}",
                self.spread, self.n_concentrated, min_n
            )));
        }
        if self.magnitude <= 0.0 || self.seed_noise < 0.0 || self.rel_noise < 0.0 {
            return Err(Error::InvalidConfig(
                "magnitude must be positive, noise levels nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Generates a full rank-`r` tensor with concentrated factor columns plus
/// element-wise Gaussian noise, stored with explicit coordinates.
///
/// Each factor is standard Gaussian except its first `n_concentrated`
/// columns, which are zero apart from `spread` disjoint rows each, set to
/// `magnitude + U(0, seed_noise)`. The noise tensor is i.i.d. Gaussian
/// scaled so its norm is `rel_noise` times the norm of the noiseless tensor.
pub fn gen_synthetic(spec: &SynthSpec) -> Result<(SparseTensor, KruskalModel)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let r = spec.rank;
    let mut factors: Vec<FactorMatrix> = Vec::with_capacity(spec.shape.len());
    for &n in &spec.shape {
        let mut a = DMatrix::from_fn(n, r, |_, _| rng.sample::<f64, _>(StandardNormal));
        for c in 0..spec.n_concentrated {
            for i in 0..n {
                a[(i, c)] = 0.0;
            }
        }
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        for c in 0..spec.n_concentrated {
            for &i in &rows[c * spec.spread..(c + 1) * spec.spread] {
                a[(i, c)] = spec.magnitude + rng.random_range(0.0..spec.seed_noise);
            }
        }
        factors.push(a);
    }
    let truth = KruskalModel::from_factors(factors)?;

    let n_total = linear_count(&spec.shape)?;
    let mut clean = Vec::with_capacity(n_total as usize);
    let mut clean_sq = 0.0;
    for lin in 1..=n_total {
        let v = truth.eval(&from_linear(lin, &spec.shape));
        clean_sq += v * v;
        clean.push(v);
    }
    let mut entries = Vec::with_capacity(clean.len());
    if spec.rel_noise > 0.0 {
        let noise: Vec<f64> = (0..clean.len())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let noise_sq: f64 = noise.iter().map(|g| g * g).sum();
        let scale = if noise_sq > 0.0 {
            spec.rel_noise * (clean_sq / noise_sq).sqrt()
        } else {
            0.0
        };
        for (j, (&v, &g)) in clean.iter().zip(&noise).enumerate() {
            entries.push((from_linear(j as u128 + 1, &spec.shape), v + scale * g));
        }
    } else {
        for (j, &v) in clean.iter().enumerate() {
            entries.push((from_linear(j as u128 + 1, &spec.shape), v));
        }
    }
    let mut t = SparseTensor::from_entries(spec.shape.clone(), &entries)?;
    t.precompute_mode_linearization()?;
    Ok((t, truth))
}

fn unit_columns(model: &KruskalModel) -> (Vec<FactorMatrix>, DVector<f64>) {
    let mut lambda = model.lambda.map(f64::abs);
    let mut factors = Vec::with_capacity(model.factors.len());
    for f in &model.factors {
        let mut g = f.clone();
        for j in 0..g.ncols() {
            let norm = g.column(j).norm();
            if norm > 0.0 {
                lambda[j] *= norm;
                let mut col = g.column_mut(j);
                col /= norm;
            }
        }
        factors.push(g);
    }
    (factors, lambda)
}

/// Factor match score in `[0, 1]`: greedy column matching maximizing the
/// product over modes of absolute cosine similarities, each matched pair
/// weighted by the agreement of its combined weights,
/// `(1 - |la - lb| / max(la, lb))`. Equals 1 exactly when the models agree
/// up to column permutation and sign.
pub fn factor_match_score(a: &KruskalModel, b: &KruskalModel) -> Result<f64> {
    if a.rank() != b.rank() {
        return Err(Error::RankMismatch(a.rank(), b.rank()));
    }
    if a.shape() != b.shape() {
        return Err(Error::DimMismatch(format!(
            "model shapes {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let r = a.rank();
    let (fa, la) = unit_columns(a);
    let (fb, lb) = unit_columns(b);
    let mut pair_score = DMatrix::zeros(r, r);
    for ja in 0..r {
        for jb in 0..r {
            let mut cos_prod = 1.0;
            for (ma, mb) in fa.iter().zip(&fb) {
                cos_prod *= ma.column(ja).dot(&mb.column(jb)).abs();
            }
            let (wa, wb) = (la[ja], lb[jb]);
            let penalty = if wa.max(wb) > 0.0 {
                1.0 - (wa - wb).abs() / wa.max(wb)
            } else {
                1.0
            };
            pair_score[(ja, jb)] = penalty * cos_prod;
        }
    }
    let mut used_a = vec![false; r];
    let mut used_b = vec![false; r];
    let mut total = 0.0;
    for _ in 0..r {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for ja in 0..r {
            if used_a[ja] {
                continue;
            }
            for jb in 0..r {
                if !used_b[jb] && pair_score[(ja, jb)] > best.2 {
                    best = (ja, jb, pair_score[(ja, jb)]);
                }
            }
        }
        used_a[best.0] = true;
        used_b[best.1] = true;
        total += best.2;
    }
    Ok((total / r as f64).clamp(0.0, 1.0))
}
