//! Sparse Fast Johnson-Lindenstrauss embeddings `k^{-1/2} P H D x`, with a
//! Monte Carlo harness for the tail bounds behind the sparsity choice and a
//! small benchmark against dense Gaussian projections.

// `!(x >= a)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod dataset;
pub mod error;
pub mod instances;
pub mod rng;
pub mod sparsity;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use sparsity::{
    choose_k, q_ailon_chazelle, q_lower_threshold, q_theorem1, Budget, Scheduler, SparsitySpec,
};
pub use transform::{embed, DenseGaussian, Embedder, FastJl, JlParams, NormCriterion};
