//! CP decomposition of large sparse tensors by alternating randomized least
//! squares with leverage-score sampling of Khatri-Rao products.
//!
//! The usual alternating least squares subproblem for one mode has the
//! Khatri-Rao product of all other factor matrices as its design matrix,
//! with one row per cell of the partially unfolded tensor. This crate never
//! forms that matrix: each subproblem is solved on a small row sketch drawn
//! from the product of per-mode leverage-score distributions, with
//! high-probability rows included deterministically and repeated sampled
//! rows combined. The right-hand side gathers only the tensor fibers the
//! sketch touches.
//!
//! Entry points:
//!
//! - [`tensor::SparseTensor`] for coordinate-format tensors and FROSTT text,
//! - [`solver::cp_arls_lev`] for the randomized solver and
//!   [`solver::cp_als`] for the deterministic baseline,
//! - [`sampler::skrp_lev`] for standalone sketch plans,
//! - [`synth::gen_synthetic`] and [`synth::factor_match_score`] for
//!   recovery experiments.
//!
//! ```
//! use cparls::kernels::KruskalModel;
//! use cparls::solver::{cp_arls_lev, exact_fit, gaussian_init, SolverConfig};
//! use cparls::tensor::SparseTensor;
//! use rand::SeedableRng;
//!
//! // a tiny exactly rank-one tensor
//! let mut entries = Vec::new();
//! for i in 1..=4usize {
//!     for j in 1..=4usize {
//!         for k in 1..=4usize {
//!             entries.push((vec![i, j, k], (i * j * k) as f64));
//!         }
//!     }
//! }
//! let mut x = SparseTensor::from_entries(vec![4, 4, 4], &entries)?;
//! x.precompute_mode_linearization()?;
//!
//! let mut cfg = SolverConfig::new(1, 64);
//! cfg.max_epochs = 10;
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let init = KruskalModel::from_factors(gaussian_init(x.shape(), 1, &mut rng))?;
//! let (model, _trace) = cp_arls_lev(&x, &cfg, &init)?;
//! assert!(exact_fit(&x, &model)? > 0.999);
//! # Ok::<(), cparls::Error>(())
//! ```

pub mod error;
pub mod index;
pub mod io;
pub mod kernels;
pub mod sampler;
pub mod solver;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};

// the guide's code blocks double as tests so the book stays in sync
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sparse-tensors.md")]
    mod sparse_tensors {}
    #[doc = include_str!("../../../book/src/leverage-scores.md")]
    mod leverage_scores {}
    #[doc = include_str!("../../../book/src/hybrid-sketching.md")]
    mod hybrid_sketching {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver_chapter {}
    #[doc = include_str!("../../../book/src/fit-estimation.md")]
    mod fit_estimation {}
}
