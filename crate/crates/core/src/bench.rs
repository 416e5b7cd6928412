//! Apply-path timings for dense Gaussian JL and the two Fast JL sparsities.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::random_unit_vector;
use crate::rng::derive_seed;
use crate::transform::{
    sample_projection, DenseGaussian, Embedder, FastJl, SignDiagonal, SparseProjection,
};
use crate::verify::write_atomically;

pub const MIN_REPS: usize = 3;
/// Untimed applications before the timed reps.
pub const WARMUP: usize = 2;
pub const CSV_HEADER: &str = "method,d,k,q,nnz,reps,median_ns,setup_ns";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EmbedMethod {
    #[serde(rename = "dense")]
    Dense,
    #[serde(rename = "fastjl-ac")]
    FastJlAc,
    #[serde(rename = "fastjl-new")]
    FastJlNew,
}

impl EmbedMethod {
    pub const ALL: [EmbedMethod; 3] = [
        EmbedMethod::Dense,
        EmbedMethod::FastJlAc,
        EmbedMethod::FastJlNew,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EmbedMethod::Dense => "dense",
            EmbedMethod::FastJlAc => "fastjl-ac",
            EmbedMethod::FastJlNew => "fastjl-new",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn is_sparse(self) -> bool {
        self != EmbedMethod::Dense
    }

    /// Samples the operator. `q` is ignored for [`EmbedMethod::Dense`];
    /// `q = 0` yields a projection with no stored entries.
    pub fn build(self, d: usize, k: usize, q: f64, seed: u64) -> Result<Box<dyn Embedder>> {
        if k > d {
            return Err(Error::param(format!("k = {k} exceeds d = {d}")));
        }
        match self {
            EmbedMethod::Dense => Ok(Box::new(DenseGaussian::sample(k, d, seed)?)),
            _ => {
                let signs = SignDiagonal::sample(d, seed);
                let projection = if q == 0.0 {
                    SparseProjection::empty(k, d)
                } else {
                    sample_projection(k, d, q, seed)?
                };
                Ok(Box::new(
                    FastJl::from_parts(signs, projection)?.labelled(self.name()),
                ))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub method: EmbedMethod,
    pub d: usize,
    pub k: usize,
    pub q: f64,
}

impl BenchConfig {
    pub fn new(method: EmbedMethod, d: usize, k: usize, q: f64) -> Self {
        BenchConfig { method, d, k, q }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: EmbedMethod,
    pub d: usize,
    pub k: usize,
    pub q: f64,
    pub nnz_observed: usize,
    pub reps: usize,
    pub median_embed_time_ns: u64,
    pub setup_time_ns: u64,
}

impl BenchRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method.name(),
            self.d,
            self.k,
            self.q,
            self.nnz_observed,
            self.reps,
            self.median_embed_time_ns,
            self.setup_time_ns
        )
    }
}

/// How the apply path is driven during timing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ApplyMode {
    /// One vector per rep on the calling thread.
    #[default]
    Sequential,
    /// `batch` vectors per rep spread over the rayon pool; the recorded time
    /// is wall time per vector.
    Parallel { batch: usize },
}

fn median(mut xs: Vec<u64>) -> u64 {
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}

fn elapsed_ns(start: Instant) -> u64 {
    start.elapsed().as_nanos().min(u64::MAX as u128) as u64
}

fn bench_one(cfg: &BenchConfig, reps: usize, seed: u64, mode: ApplyMode) -> Result<BenchRecord> {
    let started = Instant::now();
    let op = cfg.method.build(cfg.d, cfg.k, cfg.q, seed)?;
    let setup_time_ns = elapsed_ns(started);

    let x = random_unit_vector(cfg.d, derive_seed(seed, 1));
    let mut scratch = Vec::with_capacity(cfg.d);
    let mut out = vec![0.0; cfg.k];
    let apply = |scratch: &mut Vec<f64>, out: &mut [f64]| -> Result<()> {
        match mode {
            ApplyMode::Sequential => op.embed_into(&x, scratch, out),
            ApplyMode::Parallel { batch } => (0..batch.max(1)).into_par_iter().try_for_each_init(
                || (Vec::with_capacity(cfg.d), vec![0.0; cfg.k]),
                |(s, o), _| op.embed_into(&x, s, o),
            ),
        }
    };
    for _ in 0..WARMUP {
        apply(&mut scratch, &mut out)?;
    }
    let per = match mode {
        ApplyMode::Sequential => 1,
        ApplyMode::Parallel { batch } => batch.max(1) as u64,
    };
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        apply(&mut scratch, &mut out)?;
        times.push(elapsed_ns(t) / per);
    }
    std::hint::black_box(&out);

    Ok(BenchRecord {
        method: cfg.method,
        d: cfg.d,
        k: cfg.k,
        q: if cfg.method.is_sparse() { cfg.q } else { 1.0 },
        nnz_observed: op.stored_entries(),
        reps,
        median_embed_time_ns: median(times),
        setup_time_ns,
    })
}

/// Times each configuration; the `i`-th operator is sampled from
/// `derive_seed(seed, i)`, so nnz counts are reproducible.
pub fn run_bench(configs: &[BenchConfig], reps: usize, seed: u64) -> Result<Vec<BenchRecord>> {
    run_bench_with(configs, reps, seed, ApplyMode::Sequential)
}

pub fn run_bench_with(
    configs: &[BenchConfig],
    reps: usize,
    seed: u64,
    mode: ApplyMode,
) -> Result<Vec<BenchRecord>> {
    if reps < MIN_REPS {
        return Err(Error::param(format!(
            "reps = {reps}, at least {MIN_REPS} required"
        )));
    }
    for c in configs {
        if c.k > c.d {
            return Err(Error::param(format!("k = {} exceeds d = {}", c.k, c.d)));
        }
    }
    configs
        .iter()
        .enumerate()
        .map(|(i, c)| bench_one(c, reps, derive_seed(seed, i as u64), mode))
        .collect()
}

pub fn bench_csv(records: &[BenchRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

pub fn write_bench_csv(path: &Path, records: &[BenchRecord]) -> Result<()> {
    write_atomically(path, bench_csv(records).as_bytes())
}

/// Median-time ratios `ac / new` and `dense / ac` at one `(d, k)`. Values
/// above one mean the ordering holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingOrder {
    pub ac_over_new: f64,
    pub dense_over_ac: f64,
}

impl TimingOrder {
    pub fn holds(&self) -> bool {
        self.ac_over_new >= 1.0 && self.dense_over_ac >= 1.0
    }
}

pub fn timing_order(records: &[BenchRecord], d: usize, k: usize) -> Option<TimingOrder> {
    let t = |m: EmbedMethod| {
        records
            .iter()
            .find(|r| r.method == m && r.d == d && r.k == k)
            .map(|r| r.median_embed_time_ns.max(1) as f64)
    };
    let (dense, ac, new) = (
        t(EmbedMethod::Dense)?,
        t(EmbedMethod::FastJlAc)?,
        t(EmbedMethod::FastJlNew)?,
    );
    Some(TimingOrder {
        ac_over_new: ac / new,
        dense_over_ac: dense / ac,
    })
}

/// Writes `records` as CSV to any sink, for stdout use.
pub fn print_bench_csv<W: Write>(mut w: W, records: &[BenchRecord]) -> Result<()> {
    w.write_all(bench_csv(records).as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_k_above_d() {
        let c = BenchConfig::new(EmbedMethod::Dense, 8, 16, 1.0);
        assert!(matches!(run_bench(&[c], 3, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn rejects_too_few_reps() {
        let c = BenchConfig::new(EmbedMethod::Dense, 8, 4, 1.0);
        assert!(run_bench(&[c], 2, 0).is_err());
    }

    #[test]
    fn zero_q_projects_nothing() {
        let op = EmbedMethod::FastJlNew.build(64, 8, 0.0, 5).unwrap();
        assert_eq!(op.stored_entries(), 0);
        let y = op.embed(&random_unit_vector(64, 1)).unwrap();
        assert!(y.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nnz_within_three_sigma() {
        let (d, k, q) = (1024, 64, 0.05);
        let c = BenchConfig::new(EmbedMethod::FastJlNew, d, k, q);
        let r = &run_bench(&[c], 3, 17).unwrap()[0];
        let n = (k * d) as f64;
        let sigma = (n * q * (1.0 - q)).sqrt();
        assert!((r.nnz_observed as f64 - n * q).abs() <= 3.0 * sigma);
    }

    #[test]
    fn nnz_is_replayable() {
        let cs = [
            BenchConfig::new(EmbedMethod::FastJlAc, 256, 16, 0.2),
            BenchConfig::new(EmbedMethod::Dense, 256, 16, 0.0),
        ];
        let a = run_bench(&cs, 3, 9).unwrap();
        let b = run_bench(&cs, 3, 9).unwrap();
        assert_eq!(a[0].nnz_observed, b[0].nnz_observed);
        assert_eq!(a[1].nnz_observed, 256 * 16);
    }

    #[test]
    fn csv_layout() {
        let c = BenchConfig::new(EmbedMethod::FastJlAc, 16, 4, 0.5);
        let recs = run_bench_with(&[c], 3, 1, ApplyMode::Parallel { batch: 4 }).unwrap();
        let s = bench_csv(&recs);
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 8);
        assert_eq!(row[0], "fastjl-ac");
        assert_eq!(row[5], "3");
    }

    #[test]
    fn method_names_round_trip() {
        for m in EmbedMethod::ALL {
            assert_eq!(EmbedMethod::from_name(m.name()), Some(m));
        }
    }
}
