//! Test-vector generators: the lower-bound hard instance, random unit
//! vectors and sparse unit vectors.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, tag};
use crate::transform::fwht_inplace;

/// Largest `d` for which the support of `Hx` is read off the transform
/// itself rather than the index rule.
pub const DIRECT_SUPPORT_MAX_D: usize = 4096;

/// Unit vector with `2^l` equal leading coordinates.
///
/// Under the Sylvester ordering, `u = Hx` is non-zero exactly on the
/// 0-based indices that are multiples of `2^l` (1-based `i = 1 mod 2^l`),
/// each entry equal to `sqrt(2^l / d)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardInstance {
    pub d: usize,
    pub delta: f64,
    pub l: u32,
    pub x: Vec<f64>,
    /// 0-based indices of the non-zeros of `Hx`.
    pub predicted_support: Vec<usize>,
    pub predicted_magnitude: f64,
    /// `d / 2^l`, the support size.
    pub m: usize,
}

impl HardInstance {
    pub fn block(&self) -> usize {
        1 << self.l
    }

    /// Probability `2^{-2^l}` that a Rademacher diagonal fixes `x`.
    pub fn sign_event_probability(&self) -> f64 {
        (-(self.block() as f64) * std::f64::consts::LN_2).exp()
    }
}

/// The level `l` with `l <= log2(log2(1/sqrt(2 delta))) <= l + 1`.
pub fn hard_level(delta: f64) -> Result<u32> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::param(format!(
            "hard instance needs 0 < delta < 1/2, got {delta}"
        )));
    }
    let level = (1.0 / (2.0 * delta).sqrt()).log2().log2();
    if level < 0.0 {
        return Err(Error::param(format!(
            "delta = {delta} gives a negative level log2(log2(1/sqrt(2 delta))) = {level:.4}; \
             need delta <= 1/8"
        )));
    }
    Ok(level.floor() as u32)
}

pub fn hard_vector(delta: f64, d: usize) -> Result<HardInstance> {
    let l = hard_level(delta)?;
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::dim(format!("d must be a power of two, got {d}")));
    }
    let block = 1usize.checked_shl(l).filter(|&b| b <= d).ok_or_else(|| {
        Error::Instance(format!(
            "2^{l} exceeds d = {d}; delta = {delta} is too small"
        ))
    })?;
    let mut x = vec![0.0; d];
    let value = 1.0 / (block as f64).sqrt();
    x[..block].iter_mut().for_each(|v| *v = value);
    let m = d / block;
    let predicted_magnitude = (block as f64 / d as f64).sqrt();

    let predicted_support = if d <= DIRECT_SUPPORT_MAX_D {
        let mut u = x.clone();
        fwht_inplace(&mut u)?;
        let tol = 1e-9 * predicted_magnitude;
        u.iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > tol)
            .map(|(i, _)| i)
            .collect()
    } else {
        (0..m).map(|j| j * block).collect()
    };

    Ok(HardInstance {
        d,
        delta,
        l,
        x,
        predicted_support,
        predicted_magnitude,
        m,
    })
}

/// `H x` by explicit dense multiplication with `H_ij = (-1)^{popcount(i & j)} / sqrt(d)`.
///
/// `O(d^2)`; an oracle for the butterfly transform, not a replacement.
pub fn dense_hadamard_apply(x: &[f64]) -> Result<Vec<f64>> {
    let d = x.len();
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::dim(format!("d must be a power of two, got {d}")));
    }
    let scale = 1.0 / (d as f64).sqrt();
    Ok((0..d)
        .map(|i| {
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(j, &v)| if (i & j).count_ones() % 2 == 0 { v } else { -v })
                .sum();
            s * scale
        })
        .collect())
}

/// Result of checking a hard instance against the dense oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportCheck {
    pub nonzeros: usize,
    pub expected: usize,
    /// Largest deviation of `Hx` from the predicted vector.
    pub max_error: f64,
    pub support_matches: bool,
}

impl HardInstance {
    /// Recomputes `Hx` densely and compares it with the predictions.
    pub fn check_support(&self) -> Result<SupportCheck> {
        let u = dense_hadamard_apply(&self.x)?;
        let mut predicted = vec![0.0; self.d];
        for &i in &self.predicted_support {
            predicted[i] = self.predicted_magnitude;
        }
        let max_error = u
            .iter()
            .zip(&predicted)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let tol = 1e-9 * self.predicted_magnitude;
        let support: Vec<usize> = (0..self.d).filter(|&i| u[i].abs() > tol).collect();
        Ok(SupportCheck {
            nonzeros: support.len(),
            expected: self.m,
            max_error,
            support_matches: support == self.predicted_support,
        })
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Uniformly random direction in `R^d`.
pub fn random_unit_vector(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, tag::VECTOR);
    normalize((0..d).map(|_| rng.sample(StandardNormal)).collect())
}

/// Unit vector supported on `nnz` random coordinates with Gaussian values.
pub fn sparse_unit_vector(d: usize, nnz: usize, seed: u64) -> Result<Vec<f64>> {
    if nnz == 0 || nnz > d {
        return Err(Error::param(format!(
            "need 1 <= nnz <= d (nnz={nnz}, d={d})"
        )));
    }
    let mut rng = stream_rng(seed, tag::VECTOR);
    let mut v = vec![0.0; d];
    for i in index::sample(&mut rng, d, nnz) {
        v[i] = rng.sample(StandardNormal);
    }
    Ok(normalize(v))
}

/// Zero-pads `v` to the next power of two.
pub fn pad_to_power_of_two(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.resize(v.len().max(1).next_power_of_two(), 0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_from_delta() {
        assert_eq!(hard_level(0.01).unwrap(), 1);
        assert_eq!(hard_level(1e-6).unwrap(), 3);
        assert_eq!(hard_level(0.05).unwrap(), 0);
        assert!(matches!(hard_level(0.5), Err(Error::Parameter(_))));
        assert!(matches!(hard_level(0.3), Err(Error::Parameter(_))));
    }

    #[test]
    fn small_hard_vector() {
        let h = hard_vector(0.01, 8).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert_eq!(h.x, vec![r, r, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        // 1-based {1, 3, 5, 7}
        assert_eq!(h.predicted_support, vec![0, 2, 4, 6]);
        assert_eq!(h.m, 4);
        assert!((h.predicted_magnitude - 0.5).abs() < 1e-15);

        let h = hard_vector(1e-6, 64).unwrap();
        assert_eq!(h.l, 3);
        assert!(h.x[..8]
            .iter()
            .all(|&v| (v - 1.0 / 8f64.sqrt()).abs() < 1e-15));
        assert!(h.x[8..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn index_rule_above_direct_range() {
        let big = hard_vector(1e-6, 8192).unwrap();
        assert_eq!(big.predicted_support.len(), 1024);
        assert!(big.predicted_support.iter().all(|i| i % 8 == 0));
        let direct = hard_vector(1e-6, 4096).unwrap();
        assert!(direct.predicted_support.iter().all(|i| i % 8 == 0));
    }

    #[test]
    fn too_small_delta_for_dimension() {
        // l = 3 needs d >= 8
        assert!(matches!(hard_vector(1e-6, 4), Err(Error::Instance(_))));
    }

    #[test]
    fn unit_vectors() {
        let v = random_unit_vector(100, 3);
        let n: f64 = v.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert_eq!(v, random_unit_vector(100, 3));
        let s = sparse_unit_vector(100, 5, 3).unwrap();
        assert_eq!(s.iter().filter(|&&x| x != 0.0).count(), 5);
        assert!(sparse_unit_vector(4, 5, 0).is_err());
    }

    #[test]
    fn dense_oracle_agrees_with_butterfly() {
        let x: Vec<f64> = (0..32).map(|i| (i as f64 * 0.37).cos()).collect();
        let mut fast = x.clone();
        fwht_inplace(&mut fast).unwrap();
        let dense = dense_hadamard_apply(&x).unwrap();
        for (a, b) in fast.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn support_check_on_small_instance() {
        let c = hard_vector(0.01, 64).unwrap().check_support().unwrap();
        assert_eq!((c.nonzeros, c.expected), (32, 32));
        assert!(c.support_matches && c.max_error < 1e-12);
    }

    #[test]
    fn padding() {
        assert_eq!(
            pad_to_power_of_two(&[1.0, 2.0, 3.0]),
            vec![1.0, 2.0, 3.0, 0.0]
        );
        assert_eq!(pad_to_power_of_two(&[1.0; 4]).len(), 4);
    }
}
