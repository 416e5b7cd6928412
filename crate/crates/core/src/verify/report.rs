use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::stats::TailEstimate;
use super::Verdict;
use crate::error::{Error, Result};

/// One JSON-lines report entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub params: BTreeMap<String, Value>,
    pub trials: Option<u64>,
    pub successes: Option<u64>,
    pub p_hat: Option<f64>,
    pub wilson_lo: Option<f64>,
    pub wilson_hi: Option<f64>,
    pub bound: Option<f64>,
    pub verdict: Verdict,
    pub seed: u64,
    pub wall_time_ms: f64,
    /// The resolved run configuration, echoed so the record can be replayed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

impl ExperimentRecord {
    pub fn new(experiment: impl Into<String>, seed: u64) -> Self {
        ExperimentRecord {
            experiment: experiment.into(),
            params: BTreeMap::new(),
            trials: None,
            successes: None,
            p_hat: None,
            wilson_lo: None,
            wilson_hi: None,
            bound: None,
            verdict: Verdict::Info,
            seed,
            wall_time_ms: 0.0,
            config: None,
        }
    }

    pub fn param(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.params.insert(name.to_string(), value.into());
        self
    }

    pub fn estimate(mut self, e: &TailEstimate) -> Self {
        self.trials = Some(e.trials);
        self.successes = Some(e.successes);
        self.p_hat = Some(e.p_hat);
        self.wilson_lo = Some(e.wilson_lo);
        self.wilson_hi = Some(e.wilson_hi);
        self
    }

    pub fn bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self
    }

    pub fn timed(mut self, started: std::time::Instant) -> Self {
        self.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
        self
    }

    /// The record with its timing zeroed, for replay comparisons.
    pub fn without_timing(&self) -> Self {
        ExperimentRecord {
            wall_time_ms: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize to JSON")
    }
}

/// Writes `records` as JSON lines via a temporary file and a rename.
pub fn write_report(path: impl AsRef<Path>, records: &[ExperimentRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut body = String::new();
    for r in records {
        body.push_str(&r.to_json_line());
        body.push('\n');
    }
    write_atomically(path, body.as_bytes())
}

/// Replaces `path` with `bytes` through a sibling temporary file.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::param(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes)
        .and_then(|_| f.sync_all())
        .map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ExperimentRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.into(),
                row: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_hat_survives_json() {
        let e = TailEstimate::new(7, 30_011).unwrap();
        let r = ExperimentRecord::new("x", 1)
            .estimate(&e)
            .verdict(Verdict::Pass);
        let back: ExperimentRecord = serde_json::from_str(&r.to_json_line()).unwrap();
        let p = back.successes.unwrap() as f64 / back.trials.unwrap() as f64;
        assert_eq!(p.to_bits(), back.p_hat.unwrap().to_bits());
        assert_eq!(back, r);
    }

    #[test]
    fn atomic_write_and_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let recs = vec![
            ExperimentRecord::new("a", 1).param("m", 16).bound(0.5),
            ExperimentRecord::new("b", 2).verdict(Verdict::Vacuous),
        ];
        write_report(&path, &recs).unwrap();
        assert_eq!(read_report(&path).unwrap(), recs);
        let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 1);
    }
}
