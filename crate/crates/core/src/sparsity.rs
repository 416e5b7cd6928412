//! Closed-form choices of the sparsity `q` and target dimension `k`.
//!
//! The asymptotic statements these come from hide their constants; here the
//! constants are the explicit multipliers `c_q` and `c_k`. Agreement with the
//! asymptotics is only claimed for `eps, delta <= 0.5`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest `q` any scheduler returns.
pub const Q_FLOOR: f64 = 1.0 / 4_294_967_296.0;

/// The failure budget a scheduler is tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Preserve all pairwise distances of `n` points.
    Points(f64),
    /// Preserve one fixed vector except with probability `delta`.
    FailureProb(f64),
}

impl Budget {
    /// `ln n` or `ln(1/delta)`.
    pub fn log_term(self) -> Result<f64> {
        match self {
            Budget::Points(n) => {
                check_points(n)?;
                Ok(n.ln())
            }
            Budget::FailureProb(delta) => {
                check_delta(delta)?;
                Ok(-delta.ln())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsitySpec {
    pub eps: f64,
    pub budget: Budget,
    pub d: usize,
    pub c_q: f64,
    pub c_k: f64,
}

impl SparsitySpec {
    pub fn new(eps: f64, budget: Budget, d: usize) -> Self {
        SparsitySpec {
            eps,
            budget,
            d,
            c_q: 1.0,
            c_k: 1.0,
        }
    }

    pub fn with_constants(mut self, c_q: f64, c_k: f64) -> Self {
        self.c_q = c_q;
        self.c_k = c_k;
        self
    }

    pub fn k(&self) -> Result<usize> {
        choose_k(self.eps, self.budget, self.c_k)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("eps must lie in (0, 1), got {eps}")))
    }
}

fn check_points(n: f64) -> Result<()> {
    if n >= 2.0 && n.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!(
            "number of points must be >= 2, got {n}"
        )))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "delta must lie in (0, 1), got {delta}"
        )))
    }
}

fn check_constant(name: &str, c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!(
            "{name} must be positive and finite, got {c}"
        )))
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d >= 1 {
        Ok(())
    } else {
        Err(Error::param("dimension d must be >= 1"))
    }
}

fn clamp_q(q: f64) -> f64 {
    q.clamp(Q_FLOOR, 1.0)
}

/// `min{eps, (L/d) max{1, eps L / ln(1/eps)}}` with `L` the log term.
fn rate(eps: f64, log_term: f64, d: usize) -> f64 {
    let ratio = eps * log_term / (1.0 / eps).ln();
    eps.min(log_term / d as f64 * ratio.max(1.0))
}

/// Sparsity sufficient for `n` points: `c_q min{eps, (ln n/d) max{1, eps ln n/ln(1/eps)}}`.
pub fn q_theorem1(eps: f64, n: f64, d: usize, c_q: f64) -> Result<f64> {
    check_eps(eps)?;
    check_points(n)?;
    check_dim(d)?;
    check_constant("c_q", c_q)?;
    Ok(clamp_q(c_q * rate(eps, n.ln(), d)))
}

/// The classic rate `c_q ln^2(n) / d`.
pub fn q_ailon_chazelle(n: f64, d: usize, c_q: f64) -> Result<f64> {
    check_points(n)?;
    check_dim(d)?;
    check_constant("c_q", c_q)?;
    let ln_n = n.ln();
    Ok(clamp_q(c_q * ln_n * ln_n / d as f64))
}

/// Sparsity below which a single hard vector fails with probability above `delta`.
pub fn q_lower_threshold(eps: f64, delta: f64, d: usize, c_q: f64) -> Result<f64> {
    check_eps(eps)?;
    check_delta(delta)?;
    check_dim(d)?;
    check_constant("c_q", c_q)?;
    Ok(clamp_q(c_q * rate(eps, -delta.ln(), d)))
}

/// `ceil(c_k eps^-2 L)` with `L = ln n` or `ln(1/delta)`.
pub fn choose_k(eps: f64, budget: Budget, c_k: f64) -> Result<usize> {
    check_eps(eps)?;
    check_constant("c_k", c_k)?;
    let k = (c_k * budget.log_term()? / (eps * eps)).ceil();
    if !(k >= 1.0 && k < usize::MAX as f64) {
        return Err(Error::param(format!(
            "target dimension {k} is out of range"
        )));
    }
    Ok(k as usize)
}

pub fn expected_nnz(k: usize, d: usize, q: f64) -> f64 {
    k as f64 * d as f64 * q
}

/// A named rule mapping a [`SparsitySpec`] to `q`.
pub trait Scheduler: Send + Sync {
    fn name(&self) -> &'static str;
    fn q(&self, spec: &SparsitySpec) -> Result<f64>;
}

impl fmt::Debug for dyn Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scheduler({})", self.name())
    }
}

fn points(spec: &SparsitySpec, who: &str) -> Result<f64> {
    match spec.budget {
        Budget::Points(n) => Ok(n),
        Budget::FailureProb(_) => Err(Error::MissingParam(format!("n (required by {who})"))),
    }
}

pub struct Theorem1;

impl Scheduler for Theorem1 {
    fn name(&self) -> &'static str {
        "theorem1"
    }

    fn q(&self, spec: &SparsitySpec) -> Result<f64> {
        match spec.budget {
            Budget::Points(n) => q_theorem1(spec.eps, n, spec.d, spec.c_q),
            // the two rates coincide at delta = 1/n
            Budget::FailureProb(delta) => q_lower_threshold(spec.eps, delta, spec.d, spec.c_q),
        }
    }
}

pub struct AilonChazelle;

impl Scheduler for AilonChazelle {
    fn name(&self) -> &'static str {
        "ac"
    }

    fn q(&self, spec: &SparsitySpec) -> Result<f64> {
        q_ailon_chazelle(points(spec, self.name())?, spec.d, spec.c_q)
    }
}

pub struct LowerThreshold;

impl Scheduler for LowerThreshold {
    fn name(&self) -> &'static str {
        "lower"
    }

    fn q(&self, spec: &SparsitySpec) -> Result<f64> {
        let delta = match spec.budget {
            Budget::FailureProb(delta) => delta,
            Budget::Points(n) => {
                check_points(n)?;
                1.0 / n
            }
        };
        q_lower_threshold(spec.eps, delta, spec.d, spec.c_q)
    }
}

pub const SCHEDULERS: &[&str] = &["theorem1", "ac", "lower"];

/// Looks up a scheduler by its registered name.
pub fn scheduler(name: &str) -> Option<Box<dyn Scheduler>> {
    match name {
        "theorem1" | "new" => Some(Box::new(Theorem1)),
        "ac" | "ailon-chazelle" => Some(Box::new(AilonChazelle)),
        "lower" => Some(Box::new(LowerThreshold)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn theorem1_hand_values() {
        let q = q_theorem1(0.1, 1e6, 65536, 1.0).unwrap();
        assert!(close(q, 2.1081e-4, 1e-4), "{q}");
        let q = q_theorem1(0.5, 1e9, 4096, 1.0).unwrap();
        assert!(close(q, 0.075637, 1e-4), "{q}");
    }

    #[test]
    fn ailon_chazelle_hand_values() {
        let q = q_ailon_chazelle(10f64.exp(), 10_000, 1.0).unwrap();
        assert!(close(q, 0.01, 1e-12));
        assert_eq!(q_ailon_chazelle(1f64.exp(), 1, 1.0).unwrap(), 1.0);
        let a = q_ailon_chazelle(100.0, 1 << 16, 1.0).unwrap();
        let b = q_ailon_chazelle(100.0, 1 << 16, 2.0).unwrap();
        assert!(close(b, 2.0 * a, 1e-12));
    }

    #[test]
    fn lower_threshold_hand_values() {
        let q = q_lower_threshold(0.25, 0.05, 1024, 1.0).unwrap();
        assert!(close(q, 2.9255e-3, 1e-4), "{q}");
        let q = q_lower_threshold(0.25, (-40f64).exp(), 1024, 1.0).unwrap();
        assert!(close(q, 0.25, 1e-12), "{q}");
    }

    #[test]
    fn choose_k_hand_values() {
        assert_eq!(choose_k(0.1, Budget::Points(1e6), 1.0).unwrap(), 1382);
        assert_eq!(choose_k(0.25, Budget::FailureProb(0.05), 1.0).unwrap(), 48);
        assert!(choose_k(0.25, Budget::FailureProb(0.05), 0.0).is_err());
    }

    #[test]
    fn nnz_products() {
        assert!(close(expected_nnz(266, 1024, 0.016), 4358.144, 1e-12));
        assert_eq!(expected_nnz(10, 10, 0.0), 0.0);
        let q = q_theorem1(0.1, 1e6, 65536, 1.0).unwrap();
        assert!(close(expected_nnz(1382, 65536, q), 1.9093e4, 1e-3));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(q_theorem1(0.0, 10.0, 16, 1.0).is_err());
        assert!(q_theorem1(1.0, 10.0, 16, 1.0).is_err());
        assert!(q_theorem1(0.1, 1.0, 16, 1.0).is_err());
        assert!(q_lower_threshold(0.1, 1.0, 16, 1.0).is_err());
        assert!(q_ailon_chazelle(10.0, 16, -1.0).is_err());
    }

    #[test]
    fn registry_lookup() {
        for name in SCHEDULERS {
            assert_eq!(scheduler(name).unwrap().name(), *name);
        }
        assert!(scheduler("nope").is_none());
        let spec = SparsitySpec::new(0.25, Budget::FailureProb(0.05), 1024);
        assert!(matches!(
            AilonChazelle.q(&spec),
            Err(Error::MissingParam(_))
        ));
        let q = LowerThreshold.q(&spec).unwrap();
        assert_eq!(q, Theorem1.q(&spec).unwrap());
    }

    #[test]
    fn floor_applies() {
        let q = q_theorem1(0.1, 2.0, usize::MAX >> 1, 1.0).unwrap();
        assert_eq!(q, Q_FLOOR);
    }
}
