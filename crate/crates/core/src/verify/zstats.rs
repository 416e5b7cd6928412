//! Sampling of the row masses `Z_i = Binomial(m, q) / m`.
//!
//! These are the `Z_i` of a projection row applied to the worst-case
//! rotated vector, which has exactly `m` coordinates of value `m^{-1/2}`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{NeumaierSum, TailEstimate};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, trial_seed};

/// The three statistics of one draw of `(Z_1, ..., Z_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZSample {
    pub max_z: f64,
    pub sum_z: f64,
    pub sum_zsq: f64,
}

/// Above this `k / (m + 1)` ratio a draw is sampled as a histogram over the
/// `m + 1` possible values instead of `k` separate binomials. The two paths
/// have the same distribution.
const HISTOGRAM_RATIO: usize = 8;

fn check(m: u64, q: f64, k: usize) -> Result<()> {
    if m == 0 || k == 0 || !(q > 0.0 && q <= 1.0) {
        return Err(Error::param(format!(
            "z statistics need m >= 1, k >= 1, q in (0, 1] (m={m}, q={q}, k={k})"
        )));
    }
    Ok(())
}

struct Sampler {
    m: u64,
    k: usize,
    binomial: Binomial,
    /// `P[X = v] / P[X >= v]` for the histogram path.
    conditional: Option<Vec<f64>>,
}

impl Sampler {
    fn new(m: u64, q: f64, k: usize) -> Result<Self> {
        check(m, q, k)?;
        let binomial = Binomial::new(m, q).map_err(|e| Error::param(e.to_string()))?;
        let conditional = (k > HISTOGRAM_RATIO * (m as usize + 1)).then(|| conditional_pmf(m, q));
        Ok(Sampler {
            m,
            k,
            binomial,
            conditional,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> ZSample {
        let m = self.m as f64;
        let mut max = 0u64;
        let mut sum = 0u64;
        let mut sum_sq = 0u128;
        match &self.conditional {
            None => {
                for _ in 0..self.k {
                    let b = self.binomial.sample(rng);
                    max = max.max(b);
                    sum += b;
                    sum_sq += (b as u128) * (b as u128);
                }
            }
            Some(cond) => {
                let mut left = self.k as u64;
                for (v, &p) in cond.iter().enumerate() {
                    if left == 0 {
                        break;
                    }
                    let c = if p >= 1.0 {
                        left
                    } else if p <= 0.0 {
                        0
                    } else {
                        Binomial::new(left, p).unwrap().sample(rng)
                    };
                    if c > 0 {
                        let v = v as u64;
                        max = v;
                        sum += c * v;
                        sum_sq += c as u128 * (v as u128) * (v as u128);
                        left -= c;
                    }
                }
                debug_assert_eq!(left, 0, "histogram must place all {} rows", self.k);
            }
        }
        ZSample {
            max_z: max as f64 / m,
            sum_z: sum as f64 / m,
            sum_zsq: sum_sq as f64 / (m * m),
        }
    }
}

fn conditional_pmf(m: u64, q: f64) -> Vec<f64> {
    let n = m as usize;
    let (lq, lp) = (q.ln(), (-q).ln_1p());
    let mut ln_fact = vec![0.0f64; n + 1];
    for i in 1..=n {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let pmf: Vec<f64> = (0..=n)
        .map(|v| {
            if q == 1.0 {
                return if v == n { 1.0 } else { 0.0 };
            }
            (ln_fact[n] - ln_fact[v] - ln_fact[n - v] + v as f64 * lq + (n - v) as f64 * lp).exp()
        })
        .collect();
    let mut cond = vec![0.0; n + 1];
    let mut tail = NeumaierSum::default();
    for v in (0..=n).rev() {
        tail.add(pmf[v]);
        let t = tail.value();
        cond[v] = if t > 0.0 { (pmf[v] / t).min(1.0) } else { 0.0 };
    }
    // the last value with any mass absorbs every remaining row
    if let Some(last) = (0..=n).rev().find(|&v| pmf[v] > 0.0) {
        cond[last] = 1.0;
    }
    cond
}

/// Draws `trials` independent samples of `(max, sum, sum of squares)` of
/// `k` i.i.d. `Binomial(m, q)/m` variables.
pub fn simulate_z_statistics(
    m: u64,
    q: f64,
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<ZSample>> {
    let sampler = Sampler::new(m, q, k)?;
    Ok((0..trials)
        .into_par_iter()
        .map(|t| sampler.draw(&mut stream_rng(trial_seed(seed, t), 0)))
        .collect())
}

/// Events on a [`ZSample`] that the tail lemmas bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "threshold", rename_all = "snake_case")]
pub enum ZEvent {
    /// `max_i Z_i > threshold`.
    MaxAbove(f64),
    /// `Z > threshold` for a single variable; needs `k = 1` samples.
    SingleAbove(f64),
    /// `sum_i Z_i^2 > threshold`.
    SumSqAbove(f64),
}

impl ZEvent {
    pub fn occurs(&self, s: &ZSample) -> bool {
        match *self {
            ZEvent::MaxAbove(t) | ZEvent::SingleAbove(t) => s.max_z > t,
            ZEvent::SumSqAbove(t) => s.sum_zsq > t,
        }
    }

    pub fn threshold(&self) -> f64 {
        match *self {
            ZEvent::MaxAbove(t) | ZEvent::SingleAbove(t) | ZEvent::SumSqAbove(t) => t,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ZEvent::MaxAbove(_) => "max_z",
            ZEvent::SingleAbove(_) => "single_z",
            ZEvent::SumSqAbove(_) => "sum_zsq",
        }
    }
}

/// A tail estimate tagged with the event it measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventEstimate {
    pub event: ZEvent,
    pub estimate: TailEstimate,
}

/// Frequency of `event` among `samples`, which were drawn with `k` rows.
pub fn estimate_event(event: ZEvent, samples: &[ZSample], k: usize) -> Result<EventEstimate> {
    if matches!(event, ZEvent::SingleAbove(_)) && k != 1 {
        return Err(Error::param(format!(
            "single-variable event needs samples with k = 1, got k = {k}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::param("no samples"));
    }
    let hits = samples.iter().filter(|s| event.occurs(s)).count() as u64;
    Ok(EventEstimate {
        event,
        estimate: TailEstimate::new(hits, samples.len() as u64)?,
    })
}

/// Draws one `Binomial(m, q) / m` value.
pub(crate) fn draw_z(binomial: &Binomial, m: u64, rng: &mut impl Rng) -> f64 {
    binomial.sample(rng) as f64 / m as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::stats::mean_and_variance;

    #[test]
    fn full_rate_is_deterministic() {
        for s in simulate_z_statistics(1, 1.0, 5, 50, 3).unwrap() {
            assert_eq!(
                s,
                ZSample {
                    max_z: 1.0,
                    sum_z: 5.0,
                    sum_zsq: 5.0
                }
            );
        }
        // histogram path
        for s in simulate_z_statistics(1, 1.0, 500, 20, 3).unwrap() {
            assert_eq!(
                s,
                ZSample {
                    max_z: 1.0,
                    sum_z: 500.0,
                    sum_zsq: 500.0
                }
            );
        }
    }

    #[test]
    fn ordering_invariants() {
        for (m, q, k) in [(16, 0.25, 8), (4, 0.5, 200), (64, 0.05, 64)] {
            for s in simulate_z_statistics(m, q, k, 2000, 1).unwrap() {
                assert!(0.0 <= s.max_z && s.max_z <= 1.0);
                assert!(0.0 <= s.sum_zsq && s.sum_zsq <= s.sum_z + 1e-12);
                assert!(s.sum_z <= k as f64 + 1e-9);
            }
        }
    }

    #[test]
    fn histogram_path_matches_moments() {
        // k = 400 > 8 (m + 1) takes the histogram path
        let (m, q, k) = (10u64, 0.3, 400usize);
        let samples = simulate_z_statistics(m, q, k, 20_000, 9).unwrap();
        let sums: Vec<f64> = samples.iter().map(|s| s.sum_z).collect();
        let (mean, var) = mean_and_variance(&sums);
        let want_var = k as f64 * q * (1.0 - q) / m as f64;
        assert!((mean - k as f64 * q).abs() < 3.0 * (want_var / 20_000.0).sqrt());
        assert!((var / want_var - 1.0).abs() < 0.05);
        let sq: Vec<f64> = samples.iter().map(|s| s.sum_zsq).collect();
        let ez2 = q * q + q * (1.0 - q) / m as f64;
        let (mean_sq, var_sq) = mean_and_variance(&sq);
        assert!((mean_sq - k as f64 * ez2).abs() < 4.0 * (var_sq / 20_000.0).sqrt());
    }

    #[test]
    fn single_event_needs_one_row() {
        let s = simulate_z_statistics(4, 0.5, 3, 10, 0).unwrap();
        assert!(estimate_event(ZEvent::SingleAbove(0.5), &s, 3).is_err());
        assert!(estimate_event(ZEvent::MaxAbove(0.5), &s, 3).is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(simulate_z_statistics(0, 0.5, 3, 1, 0).is_err());
        assert!(simulate_z_statistics(4, 0.0, 3, 1, 0).is_err());
        assert!(simulate_z_statistics(4, 0.5, 0, 1, 0).is_err());
    }
}
