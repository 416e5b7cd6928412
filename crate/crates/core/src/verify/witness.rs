//! The lower-bound mechanism on the hard instance.
//!
//! Conditioned on the sign event `Dx = x`, `u = Hx` has `m` entries equal to
//! `m^{-1/2}`, and `|Pu|^2` is distributed as `sum_i Z_i N_i^2 / q` with
//! `Z_i = Binomial(m, q)/m` and independent standard normals `N_i`. The
//! witness samples that sum directly rather than rejection-sampling `D`.
//! A trial fails when `|Pu|^2 / k` leaves `(1 - eps, 1 + eps)`; the typical
//! failure below the threshold is a single row whose mass `Z_1 N_1^2 / q`
//! alone exceeds `eps k` while the other rows behave.

use rand::Rng;
use rand_distr::{Binomial, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean_and_variance, NeumaierSum, TailEstimate};
use super::zstats::draw_z;
use crate::error::{Error, Result};
use crate::instances::hard_vector;
use crate::rng::{stream_rng, trial_seed};
use crate::sparsity::{choose_k, Budget};
use crate::transform::NormCriterion;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessTrial {
    /// `Z_1 N_1^2 / q`.
    pub first_term: f64,
    /// `sum_{i >= 2} Z_i N_i^2 / q`.
    pub rest_sum: f64,
    /// All `k` terms summed together.
    pub total: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub eps: f64,
    pub delta: f64,
    pub d: usize,
    pub q: f64,
    pub k: usize,
    pub l: u32,
    pub m: usize,
    pub seed: u64,
    pub trials: Vec<WitnessTrial>,
    pub failure: TailEstimate,
}

impl WitnessReport {
    /// Failing trials where the first row alone overshoots (`first_term > eps k`)
    /// while the remainder stays at least `(1 - 3 eps)(k - 1)`.
    pub fn single_row_failures(&self) -> usize {
        let first_min = self.eps * self.k as f64;
        let rest_min = (1.0 - 3.0 * self.eps) * (self.k as f64 - 1.0);
        self.trials
            .iter()
            .filter(|t| t.failed && t.first_term > first_min && t.rest_sum >= rest_min)
            .count()
    }

    /// [`Self::single_row_failures`] as a fraction of all failing trials.
    pub fn single_row_fraction(&self) -> f64 {
        match self.failure.successes {
            0 => 0.0,
            f => self.single_row_failures() as f64 / f as f64,
        }
    }

    /// Fraction of all trials with `rest_sum >= (1 - 3 eps)(k - 1)`.
    pub fn rest_concentration_rate(&self) -> f64 {
        let rest_min = (1.0 - 3.0 * self.eps) * (self.k as f64 - 1.0);
        let n = self
            .trials
            .iter()
            .filter(|t| t.rest_sum >= rest_min)
            .count();
        n as f64 / self.trials.len() as f64
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("q must lie in (0, 1], got {q}")))
    }
}

/// Simulates `|Pu|^2` on the hard instance for `(eps, delta, d)` at sparsity `q`
/// with `k = ceil(ln(1/delta) / eps^2)`.
pub fn lower_bound_witness(
    eps: f64,
    delta: f64,
    d: usize,
    q: f64,
    trials: u64,
    seed: u64,
) -> Result<WitnessReport> {
    let instance = hard_vector(delta, d)?;
    let k = choose_k(eps, Budget::FailureProb(delta), 1.0)?;
    check_q(q)?;
    if trials == 0 {
        return Err(Error::param("trials must be >= 1"));
    }
    let m = instance.m as u64;
    let binomial = Binomial::new(m, q).map_err(|e| Error::param(e.to_string()))?;
    let records: Vec<WitnessTrial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(trial_seed(seed, t), 0);
            let mut all = NeumaierSum::default();
            let mut rest = NeumaierSum::default();
            let mut first_term = 0.0;
            for i in 0..k {
                let z = draw_z(&binomial, m, &mut rng);
                let n: f64 = rng.sample(StandardNormal);
                let term = z * n * n / q;
                all.add(term);
                if i == 0 {
                    first_term = term;
                } else {
                    rest.add(term);
                }
            }
            let total = all.value();
            WitnessTrial {
                first_term,
                rest_sum: rest.value(),
                total,
                failed: !NormCriterion::SquaredNorm.preserved(total / k as f64, eps),
            }
        })
        .collect();
    let failures = records.iter().filter(|r| r.failed).count() as u64;
    Ok(WitnessReport {
        eps,
        delta,
        d,
        q,
        k,
        l: instance.l,
        m: instance.m,
        seed,
        failure: TailEstimate::new(failures, trials)?,
        trials: records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalMassReport {
    pub k: usize,
    pub l: u32,
    /// `k + sqrt(max(ln(1/(4^4 delta)), 0) 2^l k / (8 d q))`.
    pub threshold: f64,
    pub estimate: TailEstimate,
    pub mean: f64,
    pub variance: f64,
    /// `k 2^l (1 - q) / (d q)`.
    pub expected_variance: f64,
}

/// Samples the scaled total mass `T = (2^l/(d q)) Binomial(k d / 2^l, q)`
/// (mean `k`) and counts trials with `T > k` and `T >= threshold`.
pub fn total_mass_statistic(
    eps: f64,
    delta: f64,
    d: usize,
    q: f64,
    trials: u64,
    seed: u64,
) -> Result<TotalMassReport> {
    let instance = hard_vector(delta, d)?;
    let k = choose_k(eps, Budget::FailureProb(delta), 1.0)?;
    check_q(q)?;
    if trials < 2 {
        return Err(Error::param("trials must be >= 2"));
    }
    let block = instance.block() as f64;
    let r = (k * instance.m) as u64;
    let scale = block / (d as f64 * q);
    let log_term = (1.0 / (256.0 * delta)).ln().max(0.0);
    let threshold = k as f64 + (log_term * block * k as f64 / (8.0 * d as f64 * q)).sqrt();
    let binomial = Binomial::new(r, q).map_err(|e| Error::param(e.to_string()))?;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(trial_seed(seed, t), 0);
            scale * rng.sample(binomial) as f64
        })
        .collect();
    let hits = samples
        .iter()
        .filter(|&&s| s > k as f64 && s >= threshold)
        .count() as u64;
    let (mean, variance) = mean_and_variance(&samples);
    Ok(TotalMassReport {
        k,
        l: instance.l,
        threshold,
        estimate: TailEstimate::new(hits, trials)?,
        mean,
        variance,
        expected_variance: k as f64 * block * (1.0 - q) / (d as f64 * q),
    })
}
