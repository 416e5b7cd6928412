use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{binomial_tail_exact, gaussian_square_sf, mean_and_variance, TailEstimate};
use super::Verdict;
use crate::error::{Error, Result};
use crate::instances::HardInstance;
use crate::rng::{stream_rng, trial_seed};
use crate::transform::SignDiagonal;

/// An exact probability compared against an analytic lower bound on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactCheck {
    pub exact: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

impl ExactCheck {
    fn lower_bound(exact: f64, bound: f64) -> Self {
        let verdict = if exact >= bound {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        ExactCheck {
            exact,
            bound,
            verdict,
        }
    }
}

/// Smallest integer `s` with `s >= x`, ignoring round-off just above an integer.
fn integer_threshold(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * x.abs().max(1.0) {
        nearest as u64
    } else {
        x.ceil() as u64
    }
}

/// `P[Bin(r, q) >= (1 + alpha) q r]` against `(1/4) exp(-2 alpha^2 q r)`.
pub fn reverse_chernoff_check(r: u64, q: f64, alpha: f64) -> Result<ExactCheck> {
    if !(q > 0.0 && q <= 0.25) || !(alpha >= 0.0) || alpha * q > 0.25 {
        return Err(Error::Domain(format!(
            "reverse Chernoff needs 0 < q <= 1/4 and 0 <= alpha q <= 1/4 (q={q}, alpha={alpha})"
        )));
    }
    let mean = q * r as f64;
    let s = integer_threshold((1.0 + alpha) * mean).min(r + 1);
    let exact = if s > r {
        0.0
    } else {
        binomial_tail_exact(r, q, s)?
    };
    let bound = 0.25 * (-2.0 * alpha * alpha * mean).exp();
    Ok(ExactCheck::lower_bound(exact, bound))
}

/// `P[N^2 >= x]` against `1 - sqrt(1 - exp(-2x/pi))`.
pub fn gaussian_square_tail_check(x: f64) -> Result<ExactCheck> {
    if !(x >= 0.0) {
        return Err(Error::param(format!("x must be non-negative, got {x}")));
    }
    let exact = gaussian_square_sf(x);
    let bound = 1.0 - (1.0 - (-2.0 * x / std::f64::consts::PI).exp()).sqrt();
    Ok(ExactCheck::lower_bound(exact, bound))
}

/// `(1 - x)^a <= 1 - a x / 2` for `0 <= x <= 1`, `0 <= a x <= 1`.
pub fn elementary_ineq_check(x: f64, a: f64) -> Result<Verdict> {
    if !(0.0..=1.0).contains(&x) || !(a >= 0.0) || a * x > 1.0 {
        return Err(Error::Domain(format!(
            "need 0 <= x <= 1 and 0 <= a x <= 1 (x={x}, a={a})"
        )));
    }
    let lhs = (1.0 - x).powf(a);
    let rhs = 1.0 - a * x / 2.0;
    Ok(if lhs <= rhs + 1e-12 {
        Verdict::Pass
    } else {
        Verdict::Fail
    })
}

/// Monte Carlo lower-tail check of a weighted centred chi-square sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareCheck {
    pub estimate: TailEstimate,
    pub bound: f64,
    pub verdict: Verdict,
}

/// Estimates `P[sum u_i (g_i^2 - 1) >= x]` and compares its Wilson upper end
/// with `c3 exp(-C3 x^2 / |u|^2)`. `c3` and `big_c3` are caller assumptions.
pub fn chisq_lower_tail_check(
    weights: &[f64],
    x: f64,
    trials: u64,
    c3: f64,
    big_c3: f64,
    seed: u64,
) -> Result<ChiSquareCheck> {
    if weights.is_empty() || weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::param(
            "weights must be a non-empty sequence of non-negative numbers",
        ));
    }
    if !(x >= 0.0) || trials == 0 {
        return Err(Error::param(format!(
            "need x >= 0 and trials >= 1 (x={x}, trials={trials})"
        )));
    }
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = stream_rng(trial_seed(seed, t), 0);
            let s: f64 = weights
                .iter()
                .map(|&u| {
                    let g: f64 = rng.sample(StandardNormal);
                    u * (g * g - 1.0)
                })
                .sum();
            s >= x
        })
        .count() as u64;
    let estimate = TailEstimate::new(hits, trials)?;
    let norm_sq: f64 = weights.iter().map(|u| u * u).sum();
    let bound = if norm_sq > 0.0 {
        c3 * (-big_c3 * x * x / norm_sq).exp()
    } else {
        c3
    };
    let verdict = if estimate.wilson_hi >= bound {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ChiSquareCheck {
        estimate,
        bound,
        verdict,
    })
}

/// Empirical `E[exp(c (N^2 - 1))]` next to its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfCheck {
    pub c: f64,
    pub draws: u64,
    pub mean: f64,
    pub std_error: f64,
    /// `(1 - 2c)^{-1/2} e^{-c}`.
    pub exact: f64,
    pub verdict: Verdict,
}

impl MgfCheck {
    pub fn standard_errors(&self) -> f64 {
        (self.mean - self.exact).abs() / self.std_error
    }
}

/// Sub-exponential premise: `E[exp(c (N^2 - 1))] <= e`, checked by Monte Carlo.
pub fn chi_square_mgf_check(c: f64, draws: u64, seed: u64) -> Result<MgfCheck> {
    if !(c > 0.0 && c < 0.5) || draws < 2 {
        return Err(Error::param(format!(
            "need 0 < c < 1/2 and draws >= 2 (c={c}, draws={draws})"
        )));
    }
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|t| {
            let g: f64 = stream_rng(trial_seed(seed, t), 0).sample(StandardNormal);
            (c * (g * g - 1.0)).exp()
        })
        .collect();
    let (mean, var) = mean_and_variance(&values);
    let std_error = (var / draws as f64).sqrt();
    let exact = (1.0 - 2.0 * c).powf(-0.5) * (-c).exp();
    let verdict = if mean <= std::f64::consts::E + 3.0 * std_error {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(MgfCheck {
        c,
        draws,
        mean,
        std_error,
        exact,
        verdict,
    })
}

/// Frequency with which a fresh sign diagonal fixes the hard instance,
/// i.e. the first `2^l` signs are all `+1`.
pub fn sign_event_rate(instance: &HardInstance, trials: u64, seed: u64) -> Result<TailEstimate> {
    let block = instance.block();
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            SignDiagonal::sample(block, trial_seed(seed, t))
                .signs()
                .iter()
                .all(|&s| s == 1)
        })
        .count() as u64;
    TailEstimate::new(hits, trials)
}
