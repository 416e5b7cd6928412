//! The `k^{-1/2} P H D` pipeline and the dense Gaussian baseline.

mod embed;
mod hadamard;
mod projection;

pub use embed::{
    dense_embed_reference, embed, DenseGaussian, EmbeddedVector, Embedder, FastJl, JlParams,
    NormCriterion,
};
pub use hadamard::{apply_signs, fwht_inplace, SignDiagonal};
pub use projection::{count_nnz, project, sample_projection, SparseProjection};
