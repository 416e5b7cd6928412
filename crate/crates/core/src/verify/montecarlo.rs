use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::TailEstimate;
use crate::error::{Error, Result};
use crate::instances::random_unit_vector;
use crate::rng::trial_seed;
use crate::transform::{Embedder, FastJl, JlParams, SignDiagonal};

/// Where the vectors embedded in each trial come from.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorSource {
    /// The same vector every trial.
    Fixed(Vec<f64>),
    /// A fresh uniformly random unit vector per trial.
    RandomUnit,
    /// A fixed point set; a trial fails if any pairwise distance is distorted.
    Pairwise(Vec<Vec<f64>>),
}

impl VectorSource {
    pub fn label(&self) -> &'static str {
        match self {
            VectorSource::Fixed(_) => "fixed",
            VectorSource::RandomUnit => "random_unit",
            VectorSource::Pairwise(_) => "pairwise",
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        let check = |v: &[f64]| -> Result<()> {
            if v.len() != d {
                return Err(Error::dim(format!(
                    "vector of length {} for d = {d}",
                    v.len()
                )));
            }
            Ok(())
        };
        match self {
            VectorSource::Fixed(v) => {
                check(v)?;
                if v.iter().all(|&x| x == 0.0) {
                    return Err(Error::param("zero vector: the norm criterion is undefined"));
                }
            }
            VectorSource::RandomUnit => {}
            VectorSource::Pairwise(points) => {
                if points.len() < 2 {
                    return Err(Error::param("pairwise mode needs at least two points"));
                }
                for p in points {
                    check(p)?;
                }
                for (i, a) in points.iter().enumerate() {
                    for b in &points[i + 1..] {
                        if a == b {
                            return Err(Error::param(
                                "duplicate points: a zero difference has no norm criterion",
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn squared_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn trial_fails(params: &JlParams, source: &VectorSource, seed: u64) -> Result<bool> {
    let map = FastJl::sample(&params.with_seed(seed))?;
    let eps = params.eps;
    let crit = params.norm_criterion;
    let mut scratch = Vec::with_capacity(params.d);
    let mut out = vec![0.0; params.k];
    match source {
        VectorSource::Fixed(x) => {
            map.embed_into(x, &mut scratch, &mut out)?;
            Ok(!crit.preserved(squared_norm(&out) / squared_norm(x), eps))
        }
        VectorSource::RandomUnit => {
            let x = random_unit_vector(params.d, seed);
            map.embed_into(&x, &mut scratch, &mut out)?;
            Ok(!crit.preserved(squared_norm(&out) / squared_norm(&x), eps))
        }
        VectorSource::Pairwise(points) => {
            let images = points
                .iter()
                .map(|p| map.embed(p).map(|e| e.values))
                .collect::<Result<Vec<_>>>()?;
            for i in 0..points.len() {
                for j in i + 1..points.len() {
                    let orig: f64 = points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    let emb: f64 = images[i]
                        .iter()
                        .zip(&images[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    if !crit.preserved(emb / orig, eps) {
                        return Ok(true);
                    }
                }
            }
            Ok(false)
        }
    }
}

/// Fraction of independent `(D, P)` draws that distort the source vectors
/// by more than `params.eps`. Trial `t` uses seed `trial_seed(params.seed, t)`.
pub fn estimate_failure_rate(
    params: &JlParams,
    source: &VectorSource,
    trials: u64,
) -> Result<TailEstimate> {
    params.validate()?;
    source.validate(params.d)?;
    if trials == 0 {
        return Err(Error::param("trials must be >= 1"));
    }
    let failures = (0..trials)
        .into_par_iter()
        .map(|t| trial_fails(params, source, trial_seed(params.seed, t)).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    TailEstimate::new(failures, trials)
}

/// `sqrt(c ln(n) / d)`, the coordinate level checked by [`coord_exceedance_rate`].
pub fn coord_threshold(threshold_c: f64, n: f64, d: usize) -> f64 {
    (threshold_c * n.ln() / d as f64).sqrt()
}

/// Hoeffding plus a union bound: `P[max_i |(HDx)_i| > s] <= 2 d n^{-c/2}`.
pub fn coord_exceedance_bound(threshold_c: f64, n: f64, d: usize) -> f64 {
    2.0 * d as f64 * n.powf(-threshold_c / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceEstimate {
    pub threshold: f64,
    pub estimate: TailEstimate,
    pub max_seen: f64,
}

/// Fraction of sign draws for which some `|(HDx)_i|` exceeds
/// `sqrt(threshold_c ln(n) / d)`.
pub fn coord_exceedance_rate(
    x: &[f64],
    threshold_c: f64,
    n: f64,
    trials: u64,
    seed: u64,
) -> Result<ExceedanceEstimate> {
    let d = x.len();
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::dim(format!("d must be a power of two, got {d}")));
    }
    if (squared_norm(x).sqrt() - 1.0).abs() > 1e-9 {
        return Err(Error::param("x must have unit norm"));
    }
    if !(threshold_c > 0.0) || !(n >= 2.0) || trials == 0 {
        return Err(Error::param(format!(
            "need threshold_c > 0, n >= 2, trials >= 1 (c={threshold_c}, n={n}, trials={trials})"
        )));
    }
    let threshold = coord_threshold(threshold_c, n, d);
    let maxima = (0..trials)
        .into_par_iter()
        .map(|t| {
            let signs = SignDiagonal::sample(d, trial_seed(seed, t));
            let mut u = x.to_vec();
            signs.apply_inplace(&mut u)?;
            crate::transform::fwht_inplace(&mut u)?;
            Ok(u.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        })
        .collect::<Result<Vec<f64>>>()?;
    let hits = maxima.iter().filter(|&&m| m > threshold).count() as u64;
    Ok(ExceedanceEstimate {
        threshold,
        estimate: TailEstimate::new(hits, trials)?,
        max_seen: maxima.iter().copied().fold(0.0, f64::max),
    })
}
