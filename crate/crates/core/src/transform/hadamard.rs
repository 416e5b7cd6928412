use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, tag};

/// In-place normalized Walsh-Hadamard transform.
///
/// Uses the Sylvester ordering `H_d = [[H, H], [H, -H]] / sqrt(2)`, so the
/// first row of the unnormalized matrix is all ones. `O(d log d)` time and no
/// allocation.
pub fn fwht_inplace(v: &mut [f64]) -> Result<()> {
    let d = v.len();
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::dim(format!(
            "Walsh-Hadamard transform needs a power-of-two length, got {d}"
        )));
    }
    let mut h = 1;
    while h < d {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (d as f64).sqrt();
    v.iter_mut().for_each(|x| *x *= scale);
    Ok(())
}

/// Rademacher diagonal `D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignDiagonal {
    signs: Vec<i8>,
    seed: u64,
}

impl SignDiagonal {
    /// Draws `d` independent fair signs from `seed`.
    pub fn sample(d: usize, seed: u64) -> Self {
        let mut rng = stream_rng(seed, tag::SIGNS);
        let mut signs = Vec::with_capacity(d);
        while signs.len() < d {
            let bits: u64 = rng.random();
            let take = (d - signs.len()).min(64);
            signs.extend((0..take).map(|b| if bits >> b & 1 == 1 { 1 } else { -1 }));
        }
        SignDiagonal { signs, seed }
    }

    /// Builds a diagonal from explicit signs; every entry must be +1 or -1.
    pub fn from_signs(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::param(format!(
                "sign entries must be +1 or -1, got {bad}"
            )));
        }
        Ok(SignDiagonal { signs, seed: 0 })
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn apply_inplace(&self, v: &mut [f64]) -> Result<()> {
        if v.len() != self.signs.len() {
            return Err(Error::dim(format!(
                "sign diagonal has length {}, vector has length {}",
                self.signs.len(),
                v.len()
            )));
        }
        for (x, &s) in v.iter_mut().zip(&self.signs) {
            if s < 0 {
                *x = -*x;
            }
        }
        Ok(())
    }
}

/// Returns `D v`.
pub fn apply_signs(v: &[f64], signs: &SignDiagonal) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    signs.apply_inplace(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_hadamard(d: usize) -> Vec<Vec<f64>> {
        let mut h = vec![vec![1.0]];
        let mut n = 1;
        while n < d {
            let mut next = vec![vec![0.0; 2 * n]; 2 * n];
            for i in 0..n {
                for j in 0..n {
                    let v = h[i][j] / 2f64.sqrt();
                    next[i][j] = v;
                    next[i][j + n] = v;
                    next[i + n][j] = v;
                    next[i + n][j + n] = -v;
                }
            }
            h = next;
            n *= 2;
        }
        h
    }

    #[test]
    fn two_point_transform() {
        let mut v = [1.0, 0.0];
        fwht_inplace(&mut v).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((v[0] - r).abs() < 1e-15 && (v[1] - r).abs() < 1e-15);
    }

    #[test]
    fn first_column_of_h4() {
        let mut v = [1.0, 0.0, 0.0, 0.0];
        fwht_inplace(&mut v).unwrap();
        assert_eq!(v, [0.5; 4]);
    }

    #[test]
    fn matches_dense_recursion() {
        let mut d = 1;
        while d <= 64 {
            let h = dense_hadamard(d);
            let x: Vec<f64> = (0..d).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
            let mut fast = x.clone();
            fwht_inplace(&mut fast).unwrap();
            for i in 0..d {
                let expect: f64 = (0..d).map(|j| h[i][j] * x[j]).sum();
                assert!((fast[i] - expect).abs() < 1e-12, "d={d} i={i}");
            }
            d *= 2;
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(
            fwht_inplace(&mut [0.0; 6]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(fwht_inplace(&mut []), Err(Error::Dimension(_))));
    }

    #[test]
    fn sign_examples() {
        let id = SignDiagonal::from_signs(vec![1, 1]).unwrap();
        assert_eq!(apply_signs(&[3.0, -2.0], &id).unwrap(), vec![3.0, -2.0]);
        let flip = SignDiagonal::from_signs(vec![-1, 1]).unwrap();
        assert_eq!(apply_signs(&[3.0, -2.0], &flip).unwrap(), vec![-3.0, -2.0]);
        assert!(apply_signs(&[1.0], &flip).is_err());
        assert!(SignDiagonal::from_signs(vec![1, 0]).is_err());
    }

    #[test]
    fn sampled_signs_are_fair_and_replayable() {
        let a = SignDiagonal::sample(10_000, 9);
        assert_eq!(a, SignDiagonal::sample(10_000, 9));
        let plus = a.signs().iter().filter(|&&s| s == 1).count() as f64;
        // 3 sigma of Binomial(10^4, 1/2) is 150
        assert!((plus - 5000.0).abs() < 150.0);
    }
}
