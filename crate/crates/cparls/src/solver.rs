//! CP decomposition drivers: the randomized alternating least squares solver
//! with leverage-score sketching, the deterministic ALS baseline, exact and
//! stratified-estimated fit, and randomized-range-finder initialization.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::HashSet;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::index::{from_linear, linear_count, to_linear, MultiIndex};
use crate::kernels::{
    gram_hadamard, krp_samp, leverage_scores, mttkrp, normalize_columns, solve_lsq, FactorMatrix,
    KruskalModel,
};
use crate::sampler::{skrp_lev, ModeDistribution};
use crate::tensor::SparseTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    Exact,
    Estimated,
}

impl FitKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitKind::Exact => "exact",
            FitKind::Estimated => "estimated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    Gaussian,
    Rrf,
}

/// Configuration of one randomized solver run.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub rank: usize,
    pub samples: usize,
    pub tau: f64,
    pub epoch_size: usize,
    pub fail_epochs: usize,
    pub tol: f64,
    pub max_epochs: usize,
    pub fit_mode: FitKind,
    pub fit_samples: usize,
    pub fit_alpha: f64,
    pub init: InitMethod,
    pub init_samples: usize,
    pub seed: u64,
    pub combine: bool,
}

impl SolverConfig {
    pub fn new(rank: usize, samples: usize) -> Self {
        SolverConfig {
            rank,
            samples,
            tau: 1.0,
            epoch_size: 5,
            fail_epochs: 3,
            tol: 1e-4,
            max_epochs: 50,
            fit_mode: FitKind::Exact,
            fit_samples: 4096,
            fit_alpha: 0.5,
            init: InitMethod::Gaussian,
            init_samples: 128,
            seed: 0,
            combine: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank < 1 || self.samples < 1 || self.epoch_size < 1 || self.fail_epochs < 1 {
            return Err(Error::InvalidConfig(
                "rank, samples, epoch_size, fail_epochs must be >= 1".into(),
            ));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tau {} outside (0,1]",
                self.tau
            )));
        }
        if !(self.fit_alpha > 0.0 && self.fit_alpha < 1.0) && self.fit_mode == FitKind::Estimated {
            return Err(Error::InvalidConfig(format!(
                "fit_alpha {} outside (0,1)",
                self.fit_alpha
            )));
        }
        if self.tol <= 0.0 {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
        Ok(())
    }
}

/// Mean sketch statistics of one mode over the iterations of one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEpochStats {
    /// Mean number of sketch rows after combining.
    pub s_bar: f64,
    /// Mean deterministic row count.
    pub s_det: f64,
    /// Mean deterministic probability mass.
    pub p_det: f64,
}

/// Convergence trace entry; one per epoch (one per iteration for ALS).
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub epoch: usize,
    pub time_s: f64,
    pub fit: f64,
    pub fit_kind: FitKind,
    pub per_mode: Vec<ModeEpochStats>,
}

/// Standard-Gaussian factor matrices for `shape`, `r` columns each.
pub fn gaussian_init<R: Rng + ?Sized>(shape: &[usize], r: usize, rng: &mut R) -> Vec<FactorMatrix> {
    shape
        .iter()
        .map(|&n| DMatrix::from_fn(n, r, |_, _| rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

/// Randomized range finder initialization for one mode: random linear
/// combinations of `s_init` uniformly sampled nonempty mode-`mode` fibers.
/// The result lies in the span of the sampled fibers.
pub fn rrf_init<R: Rng + ?Sized>(
    t: &SparseTensor,
    mode: usize,
    r: usize,
    s_init: usize,
    rng: &mut R,
) -> Result<FactorMatrix> {
    let fibers = t.nonempty_fibers(mode)?;
    if fibers.is_empty() {
        return Err(Error::NoFibers { mode });
    }
    let n = t.shape()[mode];
    let mut f: DMatrix<f64> = DMatrix::zeros(n, s_init);
    for j in 0..s_init {
        let lin = fibers[rng.random_range(0..fibers.len())];
        for &(row, v) in t.fiber(mode, lin)? {
            f[(row, j)] += v;
        }
    }
    let g = DMatrix::from_fn(s_init, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(f * g)
}

/// Initial factors per `cfg.init`; the RNG stream is shared with the solver
/// so a (tensor, config, seed) triple fixes the whole run.
pub fn initial_factors<R: Rng + ?Sized>(
    t: &SparseTensor,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<Vec<FactorMatrix>> {
    match cfg.init {
        InitMethod::Gaussian => Ok(gaussian_init(t.shape(), cfg.rank, rng)),
        InitMethod::Rrf => (0..t.order())
            .map(|k| rrf_init(t, k, cfg.rank, cfg.init_samples, rng))
            .collect(),
    }
}

/// Exact fit `1 - ||X - M|| / ||X||`, computed without densifying:
/// `||X - M||^2 = ||X||^2 - 2<X,M> + ||M||^2` with the inner product
/// streamed over the nonzeros.
pub fn exact_fit(t: &SparseTensor, model: &KruskalModel) -> Result<f64> {
    let x_sq: f64 = t.values().iter().map(|v| v * v).sum();
    if x_sq == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mut inner = 0.0;
    for nz in 0..t.nnz() {
        inner += t.values()[nz] * model.eval(t.coord(nz));
    }
    let resid_sq = (x_sq - 2.0 * inner + model.norm_sq()).max(0.0);
    Ok(1.0 - (resid_sq / x_sq).sqrt())
}

/// Frozen stratified sample of tensor positions for cheap fit estimation.
///
/// The nonzero stratum holds `ceil(alpha * s_fit)` nonzeros with weight
/// `phi = nnz / |stratum|`; the zero stratum holds up to
/// `floor((1 - alpha) * s_fit)` distinct zero positions found by rejection
/// sampling, with weight `(N - nnz) / |stratum|`.
#[derive(Debug, Clone)]
pub struct FitEstimator {
    nonzero: Vec<(MultiIndex, f64)>,
    zero: Vec<MultiIndex>,
    phi_nonzero: f64,
    phi_zero: f64,
    x_norm_sq: f64,
}

impl FitEstimator {
    pub fn nonzero_len(&self) -> usize {
        self.nonzero.len()
    }

    pub fn zero_len(&self) -> usize {
        self.zero.len()
    }

    /// Stratified residual estimate `F_hat` for `model`.
    pub fn estimate_residual_sq(&self, model: &KruskalModel) -> f64 {
        let mut f = 0.0;
        for (multi, x) in &self.nonzero {
            let d = model.eval(multi) - x;
            f += self.phi_nonzero * d * d;
        }
        for multi in &self.zero {
            let m = model.eval(multi);
            f += self.phi_zero * m * m;
        }
        f
    }

    /// Estimated fit `1 - sqrt(max(F_hat, 0)) / ||X||`.
    pub fn estimated_fit(&self, model: &KruskalModel) -> f64 {
        1.0 - (self.estimate_residual_sq(model).max(0.0) / self.x_norm_sq).sqrt()
    }
}

/// Builds a [`FitEstimator`]. Nonzeros are sampled without replacement when
/// the stratum fits, with replacement otherwise; zero positions are uniform
/// rejection samples against the nonzero set, kept distinct.
pub fn build_fit_estimator<R: Rng + ?Sized>(
    t: &SparseTensor,
    s_fit: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<FitEstimator> {
    if s_fit < 1 || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(
            "fit sampling needs s_fit >= 1 and alpha in [0,1]".into(),
        ));
    }
    let x_sq: f64 = t.values().iter().map(|v| v * v).sum();
    if x_sq == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let n_total = linear_count(t.shape())?;
    let nnz = t.nnz();
    let s_nz = ((alpha * s_fit as f64).ceil() as usize).max(1);
    let mut nonzero = Vec::with_capacity(s_nz.min(nnz));
    if s_nz <= nnz {
        for i in rand::seq::index::sample(rng, nnz, s_nz) {
            nonzero.push((t.coord(i).to_vec(), t.values()[i]));
        }
    } else {
        for _ in 0..s_nz {
            let i = rng.random_range(0..nnz);
            nonzero.push((t.coord(i).to_vec(), t.values()[i]));
        }
    }
    let phi_nonzero = nnz as f64 / nonzero.len() as f64;

    let n_zero_cells = n_total - nnz as u128;
    let want_zero = ((1.0 - alpha) * s_fit as f64).floor() as usize;
    let s_zero = (want_zero as u128).min(n_zero_cells) as usize;
    let mut occupied: HashSet<u128> = HashSet::with_capacity(nnz);
    for nz in 0..nnz {
        occupied.insert(to_linear(t.coord(nz), t.shape())?);
    }
    let mut zero = Vec::with_capacity(s_zero);
    let mut attempts: u64 = 0;
    let max_attempts = 1000 * (s_zero as u64 + 1);
    while zero.len() < s_zero {
        if attempts >= max_attempts {
            return Err(Error::RejectionStalled {
                needed: s_zero - zero.len(),
                rounds: attempts as usize,
            });
        }
        attempts += 1;
        let lin = rng.random_range(1..=n_total);
        if occupied.insert(lin) {
            zero.push(from_linear(lin, t.shape()));
        }
    }
    let phi_zero = if zero.is_empty() {
        0.0
    } else {
        n_zero_cells as f64 / zero.len() as f64
    };
    Ok(FitEstimator {
        nonzero,
        zero,
        phi_nonzero,
        phi_zero,
        x_norm_sq: x_sq,
    })
}

fn check_finite(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.into()));
    }
    Ok(())
}

fn validate_init(t: &SparseTensor, r: usize, init: &KruskalModel) -> Result<()> {
    if init.rank() != r {
        return Err(Error::RankMismatch(init.rank(), r));
    }
    if init.shape() != t.shape() {
        return Err(Error::DimMismatch(format!(
            "init shape {:?} vs tensor shape {:?}",
            init.shape(),
            t.shape()
        )));
    }
    Ok(())
}

/// CP decomposition by alternating randomized least squares with
/// leverage-score sampling.
///
/// Per inner iteration over each mode: build the hybrid sketch plan from the
/// other modes' leverage distributions, assemble the sampled KRP and fibers,
/// solve, renormalize, and refresh that mode's leverage scores. The fit is
/// checked once per epoch of `epoch_size` iterations; the run stops after
/// `fail_epochs` consecutive epochs without a `tol` improvement over the
/// best fit seen, or at `max_epochs`. The best-fit model is returned.
pub fn cp_arls_lev(
    t: &SparseTensor,
    cfg: &SolverConfig,
    init: &KruskalModel,
) -> Result<(KruskalModel, Vec<TraceRecord>)> {
    cfg.validate()?;
    validate_init(t, cfg.rank, init)?;
    let start = Instant::now();
    let order = t.order();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let estimator = match cfg.fit_mode {
        FitKind::Estimated => Some(build_fit_estimator(t, cfg.fit_samples, cfg.fit_alpha, &mut rng)?),
        FitKind::Exact => None,
    };
    let mut factors = init.factors.clone();
    let mut lambda = init.lambda.clone();
    let mut probs: Vec<Vec<f64>> = factors
        .iter()
        .map(|f| {
            let (l, rank) = leverage_scores(f);
            l.iter().map(|&x| x / rank as f64).collect()
        })
        .collect();

    let mut traces = Vec::new();
    let mut best_fit = f64::NEG_INFINITY;
    let mut best_model = KruskalModel::new(factors.clone(), lambda.clone())?;
    let mut fails = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let mut stats = vec![
            ModeEpochStats {
                s_bar: 0.0,
                s_det: 0.0,
                p_det: 0.0
            };
            order
        ];
        for _ in 0..cfg.epoch_size {
            for k in 0..order {
                let other_probs: Vec<Vec<f64>> = (0..order)
                    .filter(|&j| j != k)
                    .map(|j| probs[j].clone())
                    .collect();
                let dist = ModeDistribution::new(other_probs)?;
                let plan = skrp_lev(&dist, cfg.samples, cfg.tau, cfg.combine, &mut rng)?;
                stats[k].s_bar += plan.len() as f64;
                stats[k].s_det += plan.s_det as f64;
                stats[k].p_det += plan.p_det;
                let others: Vec<&FactorMatrix> = (0..order)
                    .filter(|&j| j != k)
                    .map(|j| &factors[j])
                    .collect();
                let zs = krp_samp(&others, &plan.idx, &plan.wgt)?;
                let excl = t.excluded_shape(k);
                let lins: Vec<u128> = plan
                    .idx
                    .iter()
                    .map(|m| to_linear(m, &excl))
                    .collect::<Result<_>>()?;
                let xs = t.tnsr_samp(k, &lins, &plan.wgt)?;
                let (b, _) = solve_lsq(&zs, &xs)?;
                check_finite(&b, "sketched mode solve")?;
                let (u, l) = normalize_columns(&b);
                factors[k] = u;
                lambda = l;
                let (lev, rank) = leverage_scores(&factors[k]);
                probs[k] = lev.iter().map(|&x| x / rank as f64).collect();
            }
        }
        for s in &mut stats {
            let d = cfg.epoch_size as f64;
            s.s_bar /= d;
            s.s_det /= d;
            s.p_det /= d;
        }
        let model = KruskalModel::new(factors.clone(), lambda.clone())?;
        let fit = match &estimator {
            Some(est) => est.estimated_fit(&model),
            None => exact_fit(t, &model)?,
        };
        traces.push(TraceRecord {
            epoch,
            time_s: start.elapsed().as_secs_f64(),
            fit,
            fit_kind: cfg.fit_mode,
            per_mode: stats,
        });
        let improved = fit > best_fit + cfg.tol;
        if fit > best_fit {
            best_fit = fit;
            best_model = model;
        }
        if improved {
            fails = 0;
        } else {
            fails += 1;
            if fails >= cfg.fail_epochs {
                break;
            }
        }
    }
    Ok((best_model, traces))
}

/// Deterministic CP-ALS baseline. Each mode solve is the exact normal
/// equation `B V = MTTKRP(X, k)` with `V` the Hadamard product of the other
/// Gram matrices; Cholesky with a pseudo-inverse fallback when `V` is
/// singular (reported in the returned flag). Exact fit each iteration,
/// monotone nondecreasing; stops when the improvement drops below `tol`.
pub fn cp_als(
    t: &SparseTensor,
    r: usize,
    tol: f64,
    max_iters: usize,
    init: &KruskalModel,
) -> Result<(KruskalModel, Vec<TraceRecord>, bool)> {
    validate_init(t, r, init)?;
    let start = Instant::now();
    let order = t.order();
    let mut factors = init.factors.clone();
    let mut lambda = init.lambda.clone();
    let mut traces = Vec::new();
    let mut prev_fit = f64::NEG_INFINITY;
    let mut used_pinv = false;
    for iter in 1..=max_iters {
        for k in 0..order {
            let others: Vec<&FactorMatrix> = (0..order)
                .filter(|&j| j != k)
                .map(|j| &factors[j])
                .collect();
            let v = gram_hadamard(&others);
            let m = mttkrp(t, &factors, k)?;
            // B = M V^{-1}, via Cholesky of V; V is r x r
            let b = match v.clone().cholesky() {
                Some(chol) => chol.solve(&m.transpose()).transpose(),
                None => {
                    used_pinv = true;
                    let pinv = v
                        .clone()
                        .svd(true, true)
                        .pseudo_inverse(1e-12)
                        .map_err(|e| Error::NonFinite(format!("pseudo-inverse: {e}")))?;
                    m * pinv
                }
            };
            check_finite(&b, "als mode solve")?;
            let (u, l) = normalize_columns(&b);
            factors[k] = u;
            lambda = l;
        }
        let model = KruskalModel::new(factors.clone(), lambda.clone())?;
        let fit = exact_fit(t, &model)?;
        traces.push(TraceRecord {
            epoch: iter,
            time_s: start.elapsed().as_secs_f64(),
            fit,
            fit_kind: FitKind::Exact,
            per_mode: Vec::new(),
        });
        if fit - prev_fit < tol {
            break;
        }
        prev_fit = fit;
    }
    let model = KruskalModel::new(factors, lambda)?;
    Ok((model, traces, used_pinv))
}

/// Exact minimizer of the mode-`mode` subproblem `min_B ||Z B' - X'||`,
/// by the normal equations with the Hadamard-of-Grams matrix.
pub fn exact_mode_solve(
    t: &SparseTensor,
    factors: &[FactorMatrix],
    mode: usize,
) -> Result<DMatrix<f64>> {
    let others: Vec<&FactorMatrix> = (0..t.order())
        .filter(|&j| j != mode)
        .map(|j| &factors[j])
        .collect();
    let v = gram_hadamard(&others);
    let m = mttkrp(t, factors, mode)?;
    match v.clone().cholesky() {
        Some(chol) => Ok(chol.solve(&m.transpose()).transpose()),
        None => {
            let pinv = v
                .svd(true, true)
                .pseudo_inverse(1e-12)
                .map_err(|e| Error::NonFinite(format!("pseudo-inverse: {e}")))?;
            Ok(m * pinv)
        }
    }
}

/// Squared residual `||Z B' - X'||^2` of the mode-`mode` subproblem, without
/// densification: `||X||^2 - 2 <Z B', X'> + trace(B V B')` with the inner
/// product streamed over nonzeros.
pub fn mode_residual_sq(
    t: &SparseTensor,
    factors: &[FactorMatrix],
    mode: usize,
    b: &DMatrix<f64>,
) -> Result<f64> {
    let order = t.order();
    if b.nrows() != t.shape()[mode] {
        return Err(Error::DimMismatch(format!(
            "B has {} rows, mode size is {}",
            b.nrows(),
            t.shape()[mode]
        )));
    }
    let r = b.ncols();
    let x_sq: f64 = t.values().iter().map(|v| v * v).sum();
    let mut inner = 0.0;
    for nz in 0..t.nnz() {
        let c = t.coord(nz);
        let row = c[mode] - 1;
        let mut m = 0.0;
        for j in 0..r {
            let mut p = b[(row, j)];
            for (k, &ck) in c.iter().enumerate() {
                if k != mode {
                    p *= factors[k][(ck - 1, j)];
                }
            }
            m += p;
        }
        inner += t.values()[nz] * m;
    }
    let others: Vec<&FactorMatrix> = (0..order)
        .filter(|&j| j != mode)
        .map(|j| &factors[j])
        .collect();
    let v = gram_hadamard(&others);
    let bv = b * v;
    let mut zb_sq = 0.0;
    for i in 0..b.nrows() {
        for j in 0..r {
            zb_sq += bv[(i, j)] * b[(i, j)];
        }
    }
    Ok((x_sq - 2.0 * inner + zb_sq).max(0.0))
}

/// Relative residual difference between a sketched mode solution and the
/// exact one: `|r_sketch^2 - r_exact^2| / max(1, r_exact^2)`.
pub fn residual_rel_diff(
    t: &SparseTensor,
    factors: &[FactorMatrix],
    mode: usize,
    b_sketch: &DMatrix<f64>,
    b_exact: &DMatrix<f64>,
) -> Result<f64> {
    let r_sketch = mode_residual_sq(t, factors, mode, b_sketch)?;
    let r_exact = mode_residual_sq(t, factors, mode, b_exact)?;
    Ok((r_sketch - r_exact).abs() / r_exact.max(1.0))
}
