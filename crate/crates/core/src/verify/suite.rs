//! Default experiment grids, each producing [`ExperimentRecord`]s.
//!
//! These are what the `verify-*` commands run. Every random experiment gets
//! its own seed derived from the suite seed and the grid index, so any
//! single record can be regenerated in isolation.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::*;
use crate::error::Result;
use crate::instances::{hard_vector, random_unit_vector};
use crate::rng::derive_seed;
use crate::transform::{JlParams, NormCriterion};

pub const GRID_M: [u64; 3] = [16, 64, 256];
pub const GRID_Q: [f64; 3] = [0.05, 0.25, 0.5];
pub const GRID_K: [usize; 2] = [8, 64];
pub const GRID_ALPHA: [f64; 3] = [0.05, 0.1, 0.25];
/// Multiples of the smallest admissible `t` for the sum-of-squares bound.
pub const GRID_SUM_ZSQ_T: [f64; 3] = [1.0, 2.0, 4.0];
/// Multiples of `q` used as `t` for the single-variable bound.
pub const GRID_SINGLE_Z_T: [f64; 3] = [1.5, std::f64::consts::E, 2.0 * std::f64::consts::E];

pub const RC_R: [u64; 5] = [4, 8, 16, 32, 64];
pub const RC_Q: [f64; 3] = [0.05, 0.1, 0.25];
pub const RC_ALPHA: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

pub const GAUSSIAN_SQUARE_X: [f64; 9] = [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 10.0];

pub const HARD_D: [usize; 10] = [8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096];
pub const HARD_DELTA: [f64; 4] = [0.1, 0.01, 1e-4, 1e-6];

/// `(n, c1, c2, eps, d)` points of the alternative sum-of-squares bound.
pub const SUM_ZSQ_ALT_POINTS: [(f64, f64, f64, f64, usize); 2] = [
    (100.0, 1.0, 1.0, 0.01, 4096),
    (1000.0, 1.0, 2.0, 0.05, 4096),
];

fn lemma_record(spec: &BoundSpec, measured: &EventEstimate, seed: u64) -> Result<ExperimentRecord> {
    let check = check_bound(spec, measured)?;
    let mut rec = ExperimentRecord::new(format!("lemma:{}", spec.lemma.name()), seed)
        .param("event", measured.event.label())
        .param("threshold", measured.event.threshold());
    for (k, v) in &spec.params {
        rec = rec.param(k, *v);
    }
    Ok(rec
        .estimate(&measured.estimate)
        .bound(check.bound)
        .verdict(check.verdict))
}

/// Checks each tail bound on every grid point that satisfies its hypotheses.
/// Points violating a hypothesis are skipped, not reported.
pub fn lemma_grid(trials: u64, seed: u64) -> Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    let mut index = 0u64;
    for &m in &GRID_M {
        for &q in &GRID_Q {
            for &k in &GRID_K {
                index += 1;
                let s = derive_seed(seed, index);
                let started = Instant::now();
                let samples = simulate_z_statistics(m, q, k, trials, s)?;
                for &alpha in &GRID_ALPHA {
                    let spec = BoundSpec::max_z(m, q, k, alpha);
                    if !lemma_bound(&spec)?.hypotheses_hold {
                        continue;
                    }
                    let event = spec.lemma.bound().event(&spec)?;
                    let measured = estimate_event(event, &samples, k)?;
                    out.push(lemma_record(&spec, &measured, s)?.timed(started));
                }
                for &mult in &GRID_SUM_ZSQ_T {
                    let spec = BoundSpec::sum_zsq(m, q, k, mult * sum_zsq_min_t(q, k));
                    if !lemma_bound(&spec)?.hypotheses_hold {
                        continue;
                    }
                    let event = spec.lemma.bound().event(&spec)?;
                    let measured = estimate_event(event, &samples, k)?;
                    out.push(lemma_record(&spec, &measured, s)?.timed(started));
                }
            }
            index += 1;
            let s = derive_seed(seed, index);
            let started = Instant::now();
            let singles = simulate_z_statistics(m, q, 1, trials, s)?;
            for &mult in &GRID_SINGLE_Z_T {
                let spec = BoundSpec::single_z(m, q, mult * q);
                let event = spec.lemma.bound().event(&spec)?;
                let measured = estimate_event(event, &singles, 1)?;
                out.push(lemma_record(&spec, &measured, s)?.timed(started));
            }
        }
    }
    for &(n, c1, c2, eps, d) in &SUM_ZSQ_ALT_POINTS {
        index += 1;
        let s = derive_seed(seed, index);
        let started = Instant::now();
        let m = (c2 * d as f64 / n.ln()).floor() as u64;
        let t = 2.0 * c1.powi(3) * std::f64::consts::E.powi(8) * n.ln();
        let spec = BoundSpec::sum_zsq_alt(n, c1, c2, eps, t, m);
        let shape = spec.lemma.bound().shape(&spec)?;
        let samples = simulate_z_statistics(shape.m, shape.q, shape.k, trials, s)?;
        let measured = estimate_event(spec.lemma.bound().event(&spec)?, &samples, shape.k)?;
        out.push(
            lemma_record(&spec, &measured, s)?
                .param("d", d)
                .param("k", shape.k)
                .param("q", shape.q)
                .timed(started),
        );
    }
    Ok(out)
}

pub fn reverse_chernoff_grid() -> Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    for &r in &RC_R {
        for &q in &RC_Q {
            for &alpha in &RC_ALPHA {
                if alpha * q > 0.25 {
                    continue;
                }
                let started = Instant::now();
                let c = reverse_chernoff_check(r, q, alpha)?;
                out.push(
                    ExperimentRecord::new("reverse_chernoff", 0)
                        .param("r", r)
                        .param("q", q)
                        .param("alpha", alpha)
                        .param("exact", c.exact)
                        .bound(c.bound)
                        .verdict(c.verdict)
                        .timed(started),
                );
            }
        }
    }
    Ok(out)
}

pub fn gaussian_square_grid() -> Result<Vec<ExperimentRecord>> {
    GAUSSIAN_SQUARE_X
        .iter()
        .map(|&x| {
            let started = Instant::now();
            let c = gaussian_square_tail_check(x)?;
            Ok(ExperimentRecord::new("gaussian_square_tail", 0)
                .param("x", x)
                .param("exact", c.exact)
                .bound(c.bound)
                .verdict(c.verdict)
                .timed(started))
        })
        .collect()
}

/// The admissible `100 x 100` grid: `x = i/99`, `a = j/99 * min(1/x, 100)`.
pub fn elementary_grid_points() -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(10_000);
    for i in 0..100 {
        let x = i as f64 / 99.0;
        let a_max = if x > 0.0 { (1.0 / x).min(100.0) } else { 100.0 };
        for j in 0..100 {
            pts.push((x, (j as f64 / 99.0 * a_max).min(a_max)));
        }
    }
    pts
}

pub fn elementary_grid() -> Result<ExperimentRecord> {
    let started = Instant::now();
    let pts = elementary_grid_points();
    let mut failures = 0u64;
    for &(x, a) in &pts {
        if elementary_ineq_check(x, a)?.is_fail() {
            failures += 1;
        }
    }
    let verdict = if failures == 0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ExperimentRecord::new("elementary_inequality", 0)
        .param("points", pts.len())
        .param("failures", failures)
        .verdict(verdict)
        .timed(started))
}

/// Weight vectors and `x / |u|` multiples for the chi-square lower tail.
pub const CHISQ_WEIGHTS: [&[f64]; 3] = [&[1.0], &[1.0, 1.0, 1.0, 1.0], &[0.5, 1.0, 2.0]];
pub const CHISQ_X_OVER_NORM: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

pub fn chisq_lower_tail_grid(
    trials: u64,
    seed: u64,
    c3: f64,
    big_c3: f64,
) -> Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    let mut index = 1000u64;
    for w in CHISQ_WEIGHTS {
        let norm = w.iter().map(|u| u * u).sum::<f64>().sqrt();
        for &mult in &CHISQ_X_OVER_NORM {
            index += 1;
            let s = derive_seed(seed, index);
            let started = Instant::now();
            let x = mult * norm;
            let c = chisq_lower_tail_check(w, x, trials, c3, big_c3, s)?;
            out.push(
                ExperimentRecord::new("chisq_lower_tail", s)
                    .param("weights", w.to_vec())
                    .param("x", x)
                    .param("c3", c3)
                    .param("C3", big_c3)
                    .param("constants", "assumed")
                    .estimate(&c.estimate)
                    .bound(c.bound)
                    .verdict(c.verdict)
                    .timed(started),
            );
        }
    }
    Ok(out)
}

pub fn mgf_record(draws: u64, seed: u64) -> Result<ExperimentRecord> {
    let started = Instant::now();
    let s = derive_seed(seed, 2000);
    let c = chi_square_mgf_check(0.3, draws, s)?;
    Ok(ExperimentRecord::new("subexponential_mgf", s)
        .param("c", c.c)
        .param("draws", c.draws)
        .param("mean", c.mean)
        .param("std_error", c.std_error)
        .param("exact", c.exact)
        .param("standard_errors_from_exact", c.standard_errors())
        .bound(std::f64::consts::E)
        .verdict(c.verdict)
        .timed(started))
}

/// Dense-oracle structure checks on every `(d, delta)` with `2^l <= d`, and
/// sign-event frequencies at `l = 1, 2`.
pub fn hard_instance_grid(sign_trials: u64, seed: u64) -> Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    for &delta in &HARD_DELTA {
        for &d in &HARD_D {
            let started = Instant::now();
            let inst = match hard_vector(delta, d) {
                Ok(i) => i,
                Err(crate::Error::Instance(_)) => continue,
                Err(e) => return Err(e),
            };
            let c = inst.check_support()?;
            let ok = c.support_matches && c.nonzeros == c.expected && c.max_error < 1e-12;
            out.push(
                ExperimentRecord::new("hard_instance_support", 0)
                    .param("d", d)
                    .param("delta", delta)
                    .param("l", inst.l)
                    .param("nonzeros", c.nonzeros)
                    .param("expected", c.expected)
                    .param("max_error", c.max_error)
                    .verdict(if ok { Verdict::Pass } else { Verdict::Fail })
                    .timed(started),
            );
        }
    }
    for (i, delta) in [0.01, 1e-4].into_iter().enumerate() {
        let started = Instant::now();
        let s = derive_seed(seed, 3000 + i as u64);
        let inst = hard_vector(delta, 64)?;
        let e = sign_event_rate(&inst, sign_trials, s)?;
        let p = inst.sign_event_probability();
        let sigma = (p * (1.0 - p) / sign_trials as f64).sqrt();
        let ok = (e.p_hat - p).abs() <= 3.0 * sigma;
        out.push(
            ExperimentRecord::new("sign_event", s)
                .param("delta", delta)
                .param("l", inst.l)
                .param("probability", p)
                .param("sigma", sigma)
                .estimate(&e)
                .verdict(if ok { Verdict::Pass } else { Verdict::Fail })
                .timed(started),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuite {
    pub trials: u64,
    pub seed: u64,
    pub c3: f64,
    pub big_c3: f64,
    pub mgf_draws: u64,
    pub sign_trials: u64,
}

impl Default for LemmaSuite {
    fn default() -> Self {
        LemmaSuite {
            trials: 100_000,
            seed: 0,
            c3: 0.1,
            big_c3: 2.0,
            mgf_draws: 1_000_000,
            sign_trials: 100_000,
        }
    }
}

pub fn run_lemma_suite(cfg: &LemmaSuite) -> Result<Vec<ExperimentRecord>> {
    let mut out = lemma_grid(cfg.trials, cfg.seed)?;
    out.extend(reverse_chernoff_grid()?);
    out.extend(gaussian_square_grid()?);
    out.push(elementary_grid()?);
    out.extend(chisq_lower_tail_grid(
        cfg.trials, cfg.seed, cfg.c3, cfg.big_c3,
    )?);
    out.push(mgf_record(cfg.mgf_draws, cfg.seed)?);
    out.extend(hard_instance_grid(cfg.sign_trials, cfg.seed)?);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperSuite {
    pub d: usize,
    pub k: usize,
    pub eps: f64,
    pub n: f64,
    pub q: f64,
    pub trials: u64,
    pub seed: u64,
    /// Points in the pairwise experiment.
    pub points: usize,
    pub threshold_c: f64,
    pub criterion: NormCriterion,
}

/// Failure rates for a random unit vector and a random point set, plus the
/// coordinate-flattening check on `HDx`.
pub fn run_upper_suite(cfg: &UpperSuite) -> Result<Vec<ExperimentRecord>> {
    let params =
        JlParams::new(cfg.d, cfg.k, cfg.eps, cfg.q, cfg.seed)?.with_criterion(cfg.criterion);
    let mut out = Vec::new();
    let base = |name: &str, seed: u64| {
        ExperimentRecord::new(name, seed)
            .param("d", cfg.d)
            .param("k", cfg.k)
            .param("eps", cfg.eps)
            .param("n", cfg.n)
            .param("q", cfg.q)
            .param("criterion", cfg.criterion.name())
    };

    let started = Instant::now();
    let e = estimate_failure_rate(&params, &VectorSource::RandomUnit, cfg.trials)?;
    out.push(
        base("failure_rate:random_unit", cfg.seed)
            .param("target", 1.0 / cfg.n)
            .estimate(&e)
            .timed(started),
    );

    if cfg.points >= 2 {
        let started = Instant::now();
        let s = derive_seed(cfg.seed, 1);
        let pts = (0..cfg.points)
            .map(|i| random_unit_vector(cfg.d, derive_seed(s, i as u64)))
            .collect();
        let e = estimate_failure_rate(
            &params.with_seed(s),
            &VectorSource::Pairwise(pts),
            cfg.trials,
        )?;
        out.push(
            base("failure_rate:pairwise", s)
                .param("points", cfg.points)
                .param("target", 1.0 / cfg.n)
                .estimate(&e)
                .timed(started),
        );
    }

    let started = Instant::now();
    let s = derive_seed(cfg.seed, 2);
    let x = random_unit_vector(cfg.d, s);
    let ex = coord_exceedance_rate(&x, cfg.threshold_c, cfg.n, cfg.trials, s)?;
    let bound = coord_exceedance_bound(cfg.threshold_c, cfg.n, cfg.d);
    out.push(
        base("coord_exceedance", s)
            .param("threshold_c", cfg.threshold_c)
            .param("threshold", ex.threshold)
            .param("max_seen", ex.max_seen)
            .estimate(&ex.estimate)
            .bound(bound)
            .verdict(verdict_for(bound, &ex.estimate))
            .timed(started),
    );
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerSuite {
    pub eps: f64,
    pub delta: f64,
    pub d: usize,
    /// Sparsity under test, typically below the threshold.
    pub q: f64,
    /// Sparsity at the threshold, for comparison.
    pub reference_q: f64,
    pub trials: u64,
    pub seed: u64,
}

fn witness_record(name: &str, w: &WitnessReport) -> ExperimentRecord {
    ExperimentRecord::new(name, w.seed)
        .param("eps", w.eps)
        .param("delta", w.delta)
        .param("d", w.d)
        .param("q", w.q)
        .param("k", w.k)
        .param("l", w.l)
        .param("m", w.m)
        .param("single_row_failures", w.single_row_failures())
        .param("single_row_fraction", w.single_row_fraction())
        .param("rest_concentration_rate", w.rest_concentration_rate())
        .estimate(&w.failure)
}

/// Lower-bound demonstration: witness failure rates at `q` and at the
/// reference sparsity, and the total-mass deviation statistic. All records
/// are descriptive.
pub fn run_lower_suite(cfg: &LowerSuite) -> Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    let started = Instant::now();
    let low = lower_bound_witness(cfg.eps, cfg.delta, cfg.d, cfg.q, cfg.trials, cfg.seed)?;
    out.push(witness_record("lower_witness", &low).timed(started));

    let started = Instant::now();
    let s = derive_seed(cfg.seed, 1);
    let reference = lower_bound_witness(cfg.eps, cfg.delta, cfg.d, cfg.reference_q, cfg.trials, s)?;
    let ratio = low.failure.wilson_lo / reference.failure.p_hat;
    out.push(
        witness_record("lower_witness:reference", &reference)
            .param("failure_ratio_lo", ratio)
            .timed(started),
    );

    let started = Instant::now();
    let s = derive_seed(cfg.seed, 2);
    let tm = total_mass_statistic(cfg.eps, cfg.delta, cfg.d, cfg.q, cfg.trials, s)?;
    out.push(
        ExperimentRecord::new("total_mass", s)
            .param("eps", cfg.eps)
            .param("delta", cfg.delta)
            .param("d", cfg.d)
            .param("q", cfg.q)
            .param("k", tm.k)
            .param("threshold", tm.threshold)
            .param("mean", tm.mean)
            .param("variance", tm.variance)
            .param("expected_variance", tm.expected_variance)
            .estimate(&tm.estimate)
            .timed(started),
    );
    Ok(out)
}
