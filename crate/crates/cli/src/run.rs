//! Command execution. Every report line carries the echoed configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use fastjl::bench::{bench_csv, run_bench_with, timing_order, ApplyMode, BenchConfig, EmbedMethod};
use fastjl::dataset::{read_vectors, write_vectors, VectorDataset};
use fastjl::instances::pad_to_power_of_two;
use fastjl::sparsity::{
    q_ailon_chazelle, q_lower_threshold, q_theorem1, scheduler, Budget, SparsitySpec, SCHEDULERS,
};
use fastjl::verify::suite::{
    run_lemma_suite, run_lower_suite, run_upper_suite, LemmaSuite, LowerSuite, UpperSuite,
};
use fastjl::verify::{write_atomically, write_report, ExperimentRecord, Verdict};
use fastjl::{choose_k, Embedder, FastJl, JlParams, NormCriterion};
use serde_json::{json, Value};

use crate::config::{Command, ConfigError, QChoice, RunConfig};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Lib(fastjl::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Lib(e) => e.fmt(f),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<fastjl::Error> for RunError {
    fn from(e: fastjl::Error) -> Self {
        RunError::Lib(e)
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// What a finished run reports back to `main`.
#[derive(Debug, Default)]
pub struct Outcome {
    pub failures: usize,
}

fn bad(key: &str, value: impl fmt::Display, reason: &str) -> RunError {
    RunError::Config(ConfigError::BadValue {
        key: key.into(),
        value: value.to_string(),
        reason: reason.into(),
    })
}

fn check_paths(cfg: &RunConfig) -> Result<()> {
    let k = &cfg.knobs;
    if let Some(p) = &k.input {
        if !p.is_file() {
            return Err(RunError::Lib(fastjl::Error::Io {
                path: p.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
            }));
        }
    }
    for (key, p) in [("out", &k.output), ("report", &k.report)] {
        if let Some(p) = p {
            let parent = p
                .parent()
                .filter(|d| !d.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            if !parent.is_dir() {
                return Err(bad(key, p.display(), "parent directory does not exist"));
            }
        }
    }
    Ok(())
}

fn criterion(cfg: &RunConfig) -> Result<NormCriterion> {
    match cfg.knobs.criterion.as_deref() {
        None | Some("squared") => Ok(NormCriterion::SquaredNorm),
        Some("norm") => Ok(NormCriterion::Norm),
        Some(other) => Err(bad("criterion", other, "expected `squared` or `norm`")),
    }
}

/// Resolves `q` from the explicit value or the named scheduler, then applies
/// `q-scale`.
fn resolve_q(cfg: &RunConfig, spec: &SparsitySpec, default_scheduler: &str) -> Result<f64> {
    let base = match &cfg.q_choice {
        Some(QChoice::Fixed(q)) => *q,
        Some(QChoice::Scheduler(name)) => named_q(name, spec)?,
        None => named_q(default_scheduler, spec)?,
    };
    let scale = cfg.knobs.q_scale.unwrap_or(1.0);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(bad("q-scale", scale, "must be positive"));
    }
    Ok((base * scale).min(1.0))
}

fn named_q(name: &str, spec: &SparsitySpec) -> Result<f64> {
    let s = scheduler(name).ok_or_else(|| {
        bad(
            "scheduler",
            name,
            &format!("expected one of {}", SCHEDULERS.join(", ")),
        )
    })?;
    Ok(s.q(spec)?)
}

fn emit(
    cfg: &RunConfig,
    mut records: Vec<ExperimentRecord>,
    resolved: &BTreeMap<String, Value>,
) -> Result<Outcome> {
    let echo = cfg.echo(resolved);
    for r in &mut records {
        r.config = Some(echo.clone());
    }
    match &cfg.knobs.report {
        Some(p) => write_report(p, &records)?,
        None => {
            let mut out = std::io::stdout().lock();
            for r in &records {
                writeln!(out, "{}", r.to_json_line()).map_err(|e| fastjl::Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })?;
            }
        }
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &records {
        *counts.entry(r.verdict.as_str()).or_default() += 1;
        if r.verdict == Verdict::Fail {
            eprintln!("FAIL {} {}", r.experiment, json!(r.params));
        }
    }
    let summary: Vec<String> = counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!(
        "{}: {} records ({})",
        cfg.command.name(),
        records.len(),
        summary.join(", ")
    );
    Ok(Outcome {
        failures: counts.get("FAIL").copied().unwrap_or(0),
    })
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    check_paths(cfg)?;
    match cfg.command {
        Command::Embed => embed(cfg),
        Command::VerifyUpper => verify_upper(cfg),
        Command::VerifyLemmas => verify_lemmas(cfg),
        Command::VerifyLower => verify_lower(cfg),
        Command::Bench => bench(cfg),
    }
}

fn embed(cfg: &RunConfig) -> Result<Outcome> {
    let k = &cfg.knobs;
    let input = cfg.require(&k.input, "in")?;
    let output = cfg.require(&k.output, "out")?;
    let eps = cfg.require(&k.eps, "eps")?;
    let data = read_vectors(&input)?;
    let d = data.d.next_power_of_two();
    let budget = match (k.n, k.delta) {
        (Some(n), _) => Budget::Points(n),
        (None, Some(delta)) => Budget::FailureProb(delta),
        (None, None) => Budget::Points(data.len().max(2) as f64),
    };
    let spec = SparsitySpec::new(eps, budget, d)
        .with_constants(k.c_q.unwrap_or(1.0), k.c_k.unwrap_or(1.0));
    let out_k = match k.k {
        Some(v) => v,
        None => choose_k(eps, budget, spec.c_k)?,
    };
    let q = resolve_q(cfg, &spec, "theorem1")?;
    let params = JlParams::new(d, out_k, eps, q, cfg.seed)?;
    let op = FastJl::sample(&params)?;
    let mut scratch = Vec::with_capacity(d);
    let mut embedded = Vec::with_capacity(data.len());
    for v in &data.vectors {
        let x = if v.len() == d {
            v.clone()
        } else {
            pad_to_power_of_two(v)
        };
        let mut y = vec![0.0; out_k];
        op.embed_into(&x, &mut scratch, &mut y)?;
        embedded.push(y);
    }
    write_vectors(
        &output,
        &VectorDataset::new(out_k, embedded, output.display().to_string())?,
    )?;

    let mut resolved = BTreeMap::new();
    resolved.insert("d".to_string(), json!(d));
    resolved.insert("k".to_string(), json!(out_k));
    resolved.insert("q".to_string(), json!(q));
    eprintln!(
        "embedded {} vectors: d={} (padded from {}), k={}, q={}, nnz={}",
        data.len(),
        d,
        data.d,
        out_k,
        q,
        op.stored_entries()
    );
    if k.report.is_some() {
        let rec = ExperimentRecord::new("embed", cfg.seed)
            .param("vectors", data.len())
            .param("d_input", data.d)
            .param("d", d)
            .param("k", out_k)
            .param("q", q)
            .param("nnz", op.stored_entries());
        return emit(cfg, vec![rec], &resolved);
    }
    Ok(Outcome::default())
}

fn verify_upper(cfg: &RunConfig) -> Result<Outcome> {
    let k = &cfg.knobs;
    let eps = k.eps.unwrap_or(0.25);
    let n = k.n.unwrap_or(100.0);
    let d = k.d.unwrap_or(1024);
    if !d.is_power_of_two() {
        return Err(bad("d", d, "must be a power of two"));
    }
    let spec = SparsitySpec::new(eps, Budget::Points(n), d)
        .with_constants(k.c_q.unwrap_or(1.0), k.c_k.unwrap_or(1.0));
    let out_k = match k.k {
        Some(v) => v,
        None => spec.k()?,
    };
    let q = resolve_q(cfg, &spec, "theorem1")?;
    let suite = UpperSuite {
        d,
        k: out_k,
        eps,
        n,
        q,
        trials: k.trials.unwrap_or(10_000),
        seed: cfg.seed,
        points: k.points.unwrap_or(8),
        threshold_c: k.threshold_c.unwrap_or(4.0),
        criterion: criterion(cfg)?,
    };
    let records = run_upper_suite(&suite)?;
    let mut resolved = BTreeMap::new();
    resolved.insert("k".to_string(), json!(out_k));
    resolved.insert("q".to_string(), json!(q));
    emit(cfg, records, &resolved)
}

fn verify_lemmas(cfg: &RunConfig) -> Result<Outcome> {
    let k = &cfg.knobs;
    let defaults = LemmaSuite::default();
    let trials = k.trials.unwrap_or(defaults.trials);
    let suite = LemmaSuite {
        trials,
        seed: cfg.seed,
        c3: k.chisq_c3.unwrap_or(defaults.c3),
        big_c3: k.chisq_big_c3.unwrap_or(defaults.big_c3),
        mgf_draws: k.mgf_draws.unwrap_or(defaults.mgf_draws),
        sign_trials: k.sign_trials.unwrap_or(defaults.sign_trials),
    };
    emit(cfg, run_lemma_suite(&suite)?, &BTreeMap::new())
}

fn verify_lower(cfg: &RunConfig) -> Result<Outcome> {
    let k = &cfg.knobs;
    let eps = k.eps.unwrap_or(0.25);
    let delta = k.delta.unwrap_or(0.05);
    let d = k.d.unwrap_or(1024);
    let c_q = k.c_q.unwrap_or(1.0);
    let spec = SparsitySpec::new(eps, Budget::FailureProb(delta), d).with_constants(c_q, 1.0);
    let q = resolve_q(cfg, &spec, "lower")?;
    let reference_q = q_lower_threshold(eps, delta, d, c_q)?;
    let suite = LowerSuite {
        eps,
        delta,
        d,
        q,
        reference_q,
        trials: k.trials.unwrap_or(20_000),
        seed: cfg.seed,
    };
    let mut resolved = BTreeMap::new();
    resolved.insert("q".to_string(), json!(q));
    resolved.insert("reference_q".to_string(), json!(reference_q));
    emit(cfg, run_lower_suite(&suite)?, &resolved)
}

fn parse_list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| bad(key, p.trim(), "not a valid list entry"))
        })
        .collect()
}

fn bench(cfg: &RunConfig) -> Result<Outcome> {
    let k = &cfg.knobs;
    if let Some(QChoice::Scheduler(s)) = &cfg.q_choice {
        return Err(bad(
            "scheduler",
            s,
            "bench derives q per method; pass --q to fix it instead",
        ));
    }
    let eps = k.eps.unwrap_or(0.1);
    let n = k.n.unwrap_or(1e6);
    let c_q = k.c_q.unwrap_or(1.0);
    let out_k = k.k.unwrap_or(512);
    let dims: Vec<usize> = match &k.dims {
        Some(s) => parse_list("dims", s)?,
        None => vec![k.d.unwrap_or(1 << 14)],
    };
    let methods: Vec<EmbedMethod> = match &k.methods {
        Some(s) => s
            .split(',')
            .map(|m| {
                EmbedMethod::from_name(m.trim())
                    .ok_or_else(|| bad("methods", m, "expected dense, fastjl-ac or fastjl-new"))
            })
            .collect::<Result<_>>()?,
        None => EmbedMethod::ALL.to_vec(),
    };
    let mut configs = Vec::new();
    let mut resolved = BTreeMap::new();
    for &d in &dims {
        if !d.is_power_of_two() {
            return Err(bad("dims", d, "must be a power of two"));
        }
        for &m in &methods {
            let q = match (m, &cfg.q_choice) {
                (EmbedMethod::Dense, _) => 1.0,
                (_, Some(QChoice::Fixed(q))) => *q,
                (EmbedMethod::FastJlAc, _) => q_ailon_chazelle(n, d, c_q)?,
                (EmbedMethod::FastJlNew, _) => q_theorem1(eps, n, d, c_q)?,
            };
            resolved.insert(format!("q:{}:{d}", m.name()), json!(q));
            configs.push(BenchConfig::new(m, d, out_k, q));
        }
    }
    let mode = if k.parallel {
        ApplyMode::Parallel {
            batch: 4 * rayon::current_num_threads(),
        }
    } else {
        ApplyMode::Sequential
    };
    let records = run_bench_with(&configs, k.reps.unwrap_or(5), cfg.seed, mode)?;
    for &d in &dims {
        if let Some(order) = timing_order(&records, d, out_k) {
            if !order.holds() {
                eprintln!(
                    "warning: timing order not observed at d={d}, k={out_k}: ac/new={:.3}, dense/ac={:.3}",
                    order.ac_over_new, order.dense_over_ac
                );
            } else {
                eprintln!(
                    "d={d}, k={out_k}: ac/new={:.3}, dense/ac={:.3}",
                    order.ac_over_new, order.dense_over_ac
                );
            }
        }
    }
    let mut text = format!("# config={}\n", cfg.echo(&resolved));
    text.push_str(&bench_csv(&records));
    match k.report.as_ref().or(k.output.as_ref()) {
        Some(p) => write_atomically(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(Outcome::default())
}
