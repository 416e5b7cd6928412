use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::hadamard::{fwht_inplace, SignDiagonal};
use super::projection::{sample_projection, SparseProjection};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, tag};

/// Which quantity must land in `(1 - eps, 1 + eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormCriterion {
    #[default]
    SquaredNorm,
    Norm,
}

impl NormCriterion {
    /// `ratio_sq` is `|f(x)|^2 / |x|^2`.
    pub fn preserved(self, ratio_sq: f64, eps: f64) -> bool {
        let r = match self {
            NormCriterion::SquaredNorm => ratio_sq,
            NormCriterion::Norm => ratio_sq.sqrt(),
        };
        r > 1.0 - eps && r < 1.0 + eps
    }

    pub fn name(self) -> &'static str {
        match self {
            NormCriterion::SquaredNorm => "squared",
            NormCriterion::Norm => "norm",
        }
    }
}

/// Full configuration of one embedding draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JlParams {
    pub d: usize,
    pub k: usize,
    pub eps: f64,
    pub q: f64,
    pub seed: u64,
    #[serde(default)]
    pub norm_criterion: NormCriterion,
}

impl JlParams {
    pub fn new(d: usize, k: usize, eps: f64, q: f64, seed: u64) -> Result<Self> {
        let p = JlParams {
            d,
            k,
            eps,
            q,
            seed,
            norm_criterion: NormCriterion::SquaredNorm,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_criterion(mut self, criterion: NormCriterion) -> Self {
        self.norm_criterion = criterion;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || !self.d.is_power_of_two() {
            return Err(Error::dim(format!(
                "d must be a power of two, got {}",
                self.d
            )));
        }
        if self.k == 0 || self.k > self.d {
            return Err(Error::param(format!(
                "k must satisfy 1 <= k <= d (k={}, d={})",
                self.k, self.d
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::param(format!(
                "eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::param(format!(
                "q must lie in (0, 1], got {}",
                self.q
            )));
        }
        Ok(())
    }
}

/// Output of an embedding: `k` finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedVector {
    pub values: Vec<f64>,
}

impl EmbeddedVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// A sampled linear map `R^d -> R^k`.
///
/// Implementations are registered by name in [`crate::bench::EmbedMethod`];
/// the verification and benchmark code only sees this trait.
pub trait Embedder: Send + Sync {
    fn name(&self) -> &'static str;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// Number of stored random entries backing the map.
    fn stored_entries(&self) -> usize;

    /// Embeds `x` into `out`, using `scratch` as working memory.
    fn embed_into(&self, x: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<()>;

    fn embed(&self, x: &[f64]) -> Result<EmbeddedVector> {
        let mut out = vec![0.0; self.output_dim()];
        self.embed_into(x, &mut Vec::new(), &mut out)?;
        Ok(EmbeddedVector { values: out })
    }
}

/// One draw of `(D, P)`, reusable across many input vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FastJl {
    signs: SignDiagonal,
    projection: SparseProjection,
    label: &'static str,
}

impl FastJl {
    pub fn sample(params: &JlParams) -> Result<Self> {
        params.validate()?;
        let signs = SignDiagonal::sample(params.d, params.seed);
        let projection = sample_projection(params.k, params.d, params.q, params.seed)?;
        Ok(FastJl {
            signs,
            projection,
            label: "fastjl",
        })
    }

    /// Wraps pre-sampled factors; `P` must be `k x d` with `d = |D|`.
    pub fn from_parts(signs: SignDiagonal, projection: SparseProjection) -> Result<Self> {
        if signs.len() != projection.d() || !signs.len().is_power_of_two() {
            return Err(Error::dim(format!(
                "sign diagonal of length {} does not fit a {}x{} projection",
                signs.len(),
                projection.k(),
                projection.d()
            )));
        }
        Ok(FastJl {
            signs,
            projection,
            label: "fastjl",
        })
    }

    pub(crate) fn labelled(mut self, label: &'static str) -> Self {
        self.label = label;
        self
    }

    pub fn signs(&self) -> &SignDiagonal {
        &self.signs
    }

    pub fn projection(&self) -> &SparseProjection {
        &self.projection
    }

    /// Computes `H D x` into `buf`.
    pub fn rotate_into(&self, x: &[f64], buf: &mut Vec<f64>) -> Result<()> {
        if x.len() != self.signs.len() {
            return Err(Error::dim(format!(
                "input has length {}, embedding expects {}",
                x.len(),
                self.signs.len()
            )));
        }
        buf.clear();
        buf.extend_from_slice(x);
        self.signs.apply_inplace(buf)?;
        fwht_inplace(buf)
    }
}

impl Embedder for FastJl {
    fn name(&self) -> &'static str {
        self.label
    }

    fn input_dim(&self) -> usize {
        self.projection.d()
    }

    fn output_dim(&self) -> usize {
        self.projection.k()
    }

    fn stored_entries(&self) -> usize {
        self.projection.nnz()
    }

    fn embed_into(&self, x: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<()> {
        self.rotate_into(x, scratch)?;
        self.projection.project_into(scratch, out)?;
        let scale = 1.0 / (self.projection.k() as f64).sqrt();
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(())
    }
}

/// Dense i.i.d. Gaussian map `k^{-1/2} A`, the classic JL baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGaussian {
    k: usize,
    d: usize,
    matrix: Vec<f64>,
}

impl DenseGaussian {
    pub fn sample(k: usize, d: usize, seed: u64) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::param(format!(
                "dense map needs k, d >= 1 (k={k}, d={d})"
            )));
        }
        let row_seed = derive_seed(seed, tag::DENSE);
        let mut matrix = Vec::with_capacity(k * d);
        for i in 0..k {
            let mut rng = stream_rng(row_seed, i as u64);
            matrix.extend((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        }
        Ok(DenseGaussian { k, d, matrix })
    }
}

impl Embedder for DenseGaussian {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.k
    }

    fn stored_entries(&self) -> usize {
        self.matrix.len()
    }

    fn embed_into(&self, x: &[f64], _scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<()> {
        if x.len() != self.d || out.len() != self.k {
            return Err(Error::dim(format!(
                "dense map is {}x{}, got input {} and output {}",
                self.k,
                self.d,
                x.len(),
                out.len()
            )));
        }
        let scale = 1.0 / (self.k as f64).sqrt();
        for (o, row) in out.iter_mut().zip(self.matrix.chunks_exact(self.d)) {
            *o = scale * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(())
    }
}

/// `k^{-1/2} P H D x` with `(D, P)` drawn from `params.seed`.
///
/// Sample a [`FastJl`] once instead when embedding several vectors under the
/// same draw.
pub fn embed(x: &[f64], params: &JlParams) -> Result<EmbeddedVector> {
    if x.len() != params.d {
        return Err(Error::dim(format!(
            "input has length {}, params declare d = {}",
            x.len(),
            params.d
        )));
    }
    FastJl::sample(params)?.embed(x)
}

/// `k^{-1/2} A x` with dense Gaussian `A` drawn from `seed`.
pub fn dense_embed_reference(x: &[f64], k: usize, seed: u64) -> Result<EmbeddedVector> {
    DenseGaussian::sample(k, x.len(), seed)?.embed(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_zero() {
        let p = JlParams::new(16, 4, 0.2, 0.5, 1).unwrap();
        let e = embed(&[0.0; 16], &p).unwrap();
        assert_eq!(e.values, vec![0.0; 4]);
        assert_eq!(
            dense_embed_reference(&[0.0; 16], 4, 1).unwrap().values,
            vec![0.0; 4]
        );
    }

    #[test]
    fn scaling_commutes() {
        let p = JlParams::new(32, 8, 0.2, 0.3, 4).unwrap();
        let x: Vec<f64> = (0..32).map(|i| (i as f64).sin()).collect();
        let ax: Vec<f64> = x.iter().map(|v| -2.5 * v).collect();
        let e = embed(&x, &p).unwrap();
        let ea = embed(&ax, &p).unwrap();
        for (a, b) in e.values.iter().zip(&ea.values) {
            assert!((-2.5 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_is_replayable() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(
            dense_embed_reference(&x, 2, 9).unwrap(),
            dense_embed_reference(&x, 2, 9).unwrap()
        );
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(
            JlParams::new(12, 4, 0.1, 0.5, 0),
            Err(Error::Dimension(_))
        ));
        assert!(JlParams::new(16, 17, 0.1, 0.5, 0).is_err());
        assert!(JlParams::new(16, 0, 0.1, 0.5, 0).is_err());
        assert!(JlParams::new(16, 4, 1.0, 0.5, 0).is_err());
        assert!(JlParams::new(16, 4, 0.1, 0.0, 0).is_err());
        let p = JlParams::new(16, 4, 0.1, 0.5, 0).unwrap();
        assert!(matches!(embed(&[1.0; 8], &p), Err(Error::Dimension(_))));
    }

    #[test]
    fn criterion_intervals() {
        assert!(NormCriterion::SquaredNorm.preserved(1.2, 0.25));
        assert!(!NormCriterion::SquaredNorm.preserved(1.3, 0.25));
        // sqrt(1.5) = 1.2247 lies inside (0.75, 1.25)
        assert!(NormCriterion::Norm.preserved(1.5, 0.25));
        assert!(!NormCriterion::SquaredNorm.preserved(1.5, 0.25));
    }
}
