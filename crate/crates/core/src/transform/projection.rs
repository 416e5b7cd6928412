use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, tag};

/// Sparse `k x d` matrix `P` in compressed-row form.
///
/// Entry `(i, j)` is stored with probability `q` and carries `N_ij / sqrt(q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseProjection {
    k: usize,
    d: usize,
    q: f64,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f64>,
}

/// Rows are generated in parallel once the expected work passes this.
const PARALLEL_NNZ: f64 = 65_536.0;

fn sample_row(k_seed: u64, row: usize, d: usize, q: f64) -> (Vec<u32>, Vec<f64>) {
    let mut rng = stream_rng(k_seed, row as u64);
    let scale = 1.0 / q.sqrt();
    let mut cols = Vec::with_capacity((d as f64 * q * 1.2) as usize + 4);
    let mut weights = Vec::with_capacity(cols.capacity());
    // Gaps between successive successes are Geometric(q).
    let log_fail = (-q).ln_1p();
    let mut col = 0usize;
    while col < d {
        if q < 1.0 {
            let u: f64 = 1.0 - rng.random::<f64>();
            let gap = (u.ln() / log_fail).floor();
            if gap >= (d - col) as f64 {
                break;
            }
            col += gap as usize;
        }
        let n: f64 = rng.sample(StandardNormal);
        cols.push(col as u32);
        weights.push(n * scale);
        col += 1;
    }
    (cols, weights)
}

/// Samples `P` with Bernoulli rate `q` from `seed`.
///
/// Each row uses its own stream, so the result does not depend on whether the
/// rows were built sequentially or in parallel.
pub fn sample_projection(k: usize, d: usize, q: f64, seed: u64) -> Result<SparseProjection> {
    if k == 0 || d == 0 {
        return Err(Error::param(format!(
            "projection needs k, d >= 1 (k={k}, d={d})"
        )));
    }
    if d > u32::MAX as usize {
        return Err(Error::param(format!(
            "d={d} exceeds the supported column range"
        )));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::param(format!(
            "sparsity q must lie in (0, 1], got {q}"
        )));
    }
    let row_seed = derive_seed(seed, tag::PROJECTION);
    let rows: Vec<(Vec<u32>, Vec<f64>)> = if k as f64 * d as f64 * q > PARALLEL_NNZ {
        (0..k)
            .into_par_iter()
            .map(|i| sample_row(row_seed, i, d, q))
            .collect()
    } else {
        (0..k).map(|i| sample_row(row_seed, i, d, q)).collect()
    };
    let nnz = rows.iter().map(|(c, _)| c.len()).sum();
    let mut row_ptr = Vec::with_capacity(k + 1);
    let mut cols = Vec::with_capacity(nnz);
    let mut weights = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for (c, w) in rows {
        cols.extend(c);
        weights.extend(w);
        row_ptr.push(cols.len());
    }
    Ok(SparseProjection {
        k,
        d,
        q,
        row_ptr,
        cols,
        weights,
    })
}

impl SparseProjection {
    /// A `k x d` projection with no stored entries (the `q = 0` limit).
    pub fn empty(k: usize, d: usize) -> Self {
        SparseProjection {
            k,
            d,
            q: 0.0,
            row_ptr: vec![0; k + 1],
            cols: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Builds a projection from explicit rows of `(column, weight)` pairs.
    pub fn from_rows(d: usize, q: f64, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut p = SparseProjection::empty(rows.len(), d);
        p.q = q;
        p.row_ptr.clear();
        p.row_ptr.push(0);
        for (i, row) in rows.into_iter().enumerate() {
            let mut prev: Option<usize> = None;
            for (c, w) in row {
                if c >= d || prev.is_some_and(|p| p >= c) {
                    return Err(Error::param(format!(
                        "row {i}: column indices must be strictly increasing and below {d}"
                    )));
                }
                if !w.is_finite() {
                    return Err(Error::param(format!("row {i}: non-finite weight")));
                }
                prev = Some(c);
                p.cols.push(c as u32);
                p.weights.push(w);
            }
            p.row_ptr.push(p.cols.len());
        }
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Entries of row `i` as `(column, weight)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.weights[span])
            .map(|(&c, &w)| (c as usize, w))
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Writes `P v` into `out`.
    pub fn project_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        if v.len() != self.d || out.len() != self.k {
            return Err(Error::dim(format!(
                "projection is {}x{}, got input {} and output {}",
                self.k,
                self.d,
                v.len(),
                out.len()
            )));
        }
        for (i, o) in out.iter_mut().enumerate() {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            *o = self.cols[span.clone()]
                .iter()
                .zip(&self.weights[span])
                .map(|(&c, &w)| w * v[c as usize])
                .sum();
        }
        Ok(())
    }
}

/// Returns `P v`.
pub fn project(p: &SparseProjection, v: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; p.k];
    p.project_into(v, &mut out)?;
    Ok(out)
}

/// Number of stored entries of `P`.
pub fn count_nnz(p: &SparseProjection) -> usize {
    p.nnz()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_rate_fills_every_row() {
        let p = sample_projection(2, 4, 1.0, 3).unwrap();
        for i in 0..2 {
            let cols: Vec<usize> = p.row(i).map(|(c, _)| c).collect();
            assert_eq!(cols, vec![0, 1, 2, 3]);
        }
        assert_eq!(count_nnz(&p), 8);
    }

    #[test]
    fn replay_is_bit_identical() {
        let a = sample_projection(17, 300, 0.05, 11).unwrap();
        let b = sample_projection(17, 300, 0.05, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_projection(17, 300, 0.05, 12).unwrap());
    }

    #[test]
    fn parallel_and_sequential_rows_agree() {
        // 512 * 512 * 0.5 is above the parallel cut-over
        let p = sample_projection(512, 512, 0.5, 5).unwrap();
        let row_seed = derive_seed(5, tag::PROJECTION);
        for i in [0, 1, 255, 511] {
            let (c, w) = sample_row(row_seed, i, 512, 0.5);
            let got: Vec<(usize, f64)> = p.row(i).collect();
            let want: Vec<(usize, f64)> = c
                .iter()
                .map(|&c| c as usize)
                .zip(w.iter().copied())
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn rows_are_sorted_and_finite() {
        let p = sample_projection(50, 1000, 0.03, 1).unwrap();
        for i in 0..p.k() {
            let row: Vec<_> = p.row(i).collect();
            assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            assert!(row.iter().all(|&(c, w)| c < 1000 && w.is_finite()));
        }
    }

    #[test]
    fn rejects_bad_rate() {
        for q in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                sample_projection(2, 4, q, 0),
                Err(Error::Parameter(_))
            ));
        }
    }

    #[test]
    fn single_entry_and_empty_rows() {
        let p = SparseProjection::from_rows(4, 1.0, vec![vec![(2, 1.5)], vec![]]).unwrap();
        assert_eq!(project(&p, &[0.0, 0.0, 3.0, 0.0]).unwrap(), vec![4.5, 0.0]);
        assert!(project(&p, &[1.0; 3]).is_err());
        assert_eq!(count_nnz(&SparseProjection::empty(3, 8)), 0);
        assert!(SparseProjection::from_rows(4, 1.0, vec![vec![(2, 1.0), (1, 1.0)]]).is_err());
    }

    #[test]
    fn nnz_matches_binomial_mean() {
        // k d q = 1000, Binomial sd per draw ~31.5, mean of 100 draws sd ~3.15
        let total: usize = (0..100)
            .map(|s| sample_projection(100, 1000, 0.01, s).unwrap().nnz())
            .sum();
        let mean = total as f64 / 100.0;
        let sd = (1e5 * 0.01 * 0.99f64).sqrt() / 10.0;
        assert!((mean - 1000.0).abs() < 3.0 * sd, "mean nnz {mean}");
    }
}
