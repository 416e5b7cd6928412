use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.96;

/// Monte Carlo probability estimate with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl TailEstimate {
    pub fn new(successes: u64, trials: u64) -> Result<Self> {
        let (wilson_lo, wilson_hi) = wilson_interval(successes, trials, Z95)?;
        let p_hat = successes as f64 / trials as f64;
        Ok(TailEstimate {
            successes,
            trials,
            p_hat,
            wilson_lo: wilson_lo.min(p_hat),
            wilson_hi: wilson_hi.max(p_hat),
        })
    }

    pub fn contains(&self, p: f64) -> bool {
        self.wilson_lo <= p && p <= self.wilson_hi
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials || !(z > 0.0) {
        return Err(Error::param(format!(
            "Wilson interval needs 0 <= successes <= trials, trials >= 1, z > 0 \
             (successes={successes}, trials={trials}, z={z})"
        )));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    Ok((lo, hi))
}

/// Largest `r` accepted by [`binomial_tail_exact`].
pub const BINOMIAL_MAX_TRIALS: u64 = 10_000;

/// Exact `P[Binomial(r, q) >= s]`, summed in log space.
pub fn binomial_tail_exact(r: u64, q: f64, s: u64) -> Result<f64> {
    if r > BINOMIAL_MAX_TRIALS || s > r || !(0.0..=1.0).contains(&q) {
        return Err(Error::param(format!(
            "binomial tail needs 0 <= s <= r <= {BINOMIAL_MAX_TRIALS} and q in [0, 1] \
             (r={r}, q={q}, s={s})"
        )));
    }
    if s == 0 {
        return Ok(1.0);
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    if q == 1.0 {
        return Ok(1.0);
    }
    // ln(i!) for i = 0..=r
    let mut ln_fact = Vec::with_capacity(r as usize + 1);
    ln_fact.push(0.0f64);
    let mut acc = 0.0;
    for i in 1..=r {
        acc += (i as f64).ln();
        ln_fact.push(acc);
    }
    let (lq, lp) = (q.ln(), (-q).ln_1p());
    let ln_term = |i: u64| {
        ln_fact[r as usize] - ln_fact[i as usize] - ln_fact[(r - i) as usize]
            + i as f64 * lq
            + (r - i) as f64 * lp
    };
    let terms: Vec<f64> = (s..=r).map(ln_term).collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = NeumaierSum::default();
    for t in &terms {
        sum.add((t - peak).exp());
    }
    Ok((peak.exp() * sum.value()).min(1.0))
}

/// `P[chi^2_dof >= x]`.
pub fn chi_square_sf(dof: f64, x: f64) -> f64 {
    ChiSquared::new(dof)
        .expect("chi-square degrees of freedom must be positive")
        .sf(x)
}

/// `P[chi^2_dof <= x]`.
pub fn chi_square_cdf(dof: f64, x: f64) -> f64 {
    ChiSquared::new(dof)
        .expect("chi-square degrees of freedom must be positive")
        .cdf(x)
}

/// `P[N^2 >= x]` for standard normal `N`, i.e. `erfc(sqrt(x/2))`.
pub fn gaussian_square_sf(x: f64) -> f64 {
    erfc((x / 2.0).sqrt())
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean and sample variance of a slice, with compensated sums.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut s = NeumaierSum::default();
    xs.iter().for_each(|&x| s.add(x));
    let mean = s.value() / n;
    let mut ss = NeumaierSum::default();
    xs.iter().for_each(|&x| ss.add((x - mean) * (x - mean)));
    (mean, ss.value() / (n - 1.0).max(1.0))
}

/// `|mean - target|` measured in standard errors of the sample mean.
pub fn standard_errors_from(xs: &[f64], target: f64) -> f64 {
    let (mean, var) = mean_and_variance(xs);
    (mean - target).abs() / (var / xs.len() as f64).sqrt()
}
