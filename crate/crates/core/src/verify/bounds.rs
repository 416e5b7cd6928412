//! Analytic tail bounds on the row masses `Z_i`, each behind [`TailBound`]
//! and registered by [`Lemma`].

use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::stats::TailEstimate;
use super::zstats::{EventEstimate, ZEvent};
use super::Verdict;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    /// `P[max_i Z_i > q/(2 alpha)] <= k exp(-m q ln(1/alpha) / (32 alpha))`.
    MaxZ,
    /// `P[Z > t] < (t/(e q))^{-m t}` for `t > q`.
    SingleZ,
    /// `P[sum Z_i^2 > t] < 14 exp(-m sqrt(t) ln(sqrt(t/8)/(e q)) / (200 * 44 * 2^{5/2}))`.
    SumZsq,
    /// `P[sum Z_i^2 > t] <= 3 n^{-4 c1}` in the `q = c1 eps` regime.
    SumZsqAlt,
}

impl Lemma {
    pub const ALL: [Lemma; 4] = [Lemma::MaxZ, Lemma::SingleZ, Lemma::SumZsq, Lemma::SumZsqAlt];

    pub fn name(self) -> &'static str {
        self.bound().name()
    }

    pub fn from_name(name: &str) -> Option<Lemma> {
        Lemma::ALL.into_iter().find(|l| l.name() == name)
    }

    /// The registered implementation.
    pub fn bound(self) -> &'static dyn TailBound {
        match self {
            Lemma::MaxZ => &MaxZBound,
            Lemma::SingleZ => &SingleZBound,
            Lemma::SumZsq => &SumZsqBound,
            Lemma::SumZsqAlt => &SumZsqAltBound,
        }
    }
}

pub type Params = BTreeMap<String, f64>;

/// One lemma instantiated at named parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub lemma: Lemma,
    pub params: Params,
}

fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

impl BoundSpec {
    pub fn new(lemma: Lemma, params: Params) -> Self {
        BoundSpec { lemma, params }
    }

    pub fn max_z(m: u64, q: f64, k: usize, alpha: f64) -> Self {
        let p = params(&[("m", m as f64), ("q", q), ("k", k as f64), ("alpha", alpha)]);
        BoundSpec::new(Lemma::MaxZ, p)
    }

    pub fn single_z(m: u64, q: f64, t: f64) -> Self {
        BoundSpec::new(
            Lemma::SingleZ,
            params(&[("m", m as f64), ("q", q), ("t", t)]),
        )
    }

    pub fn sum_zsq(m: u64, q: f64, k: usize, t: f64) -> Self {
        let p = params(&[("m", m as f64), ("q", q), ("k", k as f64), ("t", t)]);
        BoundSpec::new(Lemma::SumZsq, p)
    }

    /// `q = c1 eps` and `k = ceil(c1 ln(n) / eps^2)` are implied.
    pub fn sum_zsq_alt(n: f64, c1: f64, c2: f64, eps: f64, t: f64, m: u64) -> Self {
        let p = params(&[
            ("n", n),
            ("c1", c1),
            ("c2", c2),
            ("eps", eps),
            ("t", t),
            ("m", m as f64),
        ]);
        BoundSpec::new(Lemma::SumZsqAlt, p)
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingParam(format!("{name} (for {})", self.lemma.name())))
    }

    fn opt(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }
}

/// A lemma's right-hand side together with its hypothesis status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaBound {
    pub value: f64,
    pub hypotheses_hold: bool,
    pub violations: Vec<String>,
}

/// The Z-variable shape a bound talks about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZShape {
    pub m: u64,
    pub q: f64,
    pub k: usize,
}

impl ZShape {
    fn new(m: f64, q: f64, k: usize) -> Self {
        ZShape { m: m as u64, q, k }
    }
}

pub trait TailBound: Send + Sync {
    fn name(&self) -> &'static str;
    fn required(&self) -> &'static [&'static str];
    /// Hypotheses of the lemma that fail at `spec`, in words.
    fn violations(&self, spec: &BoundSpec) -> Result<Vec<String>>;
    fn value(&self, spec: &BoundSpec) -> Result<f64>;
    /// The event whose probability the lemma bounds.
    fn event(&self, spec: &BoundSpec) -> Result<ZEvent>;
    /// `(m, q, k)` of the Z variables to simulate.
    fn shape(&self, spec: &BoundSpec) -> Result<ZShape>;
}

fn basic_violations(spec: &BoundSpec, out: &mut Vec<String>) -> Result<(f64, f64)> {
    let m = spec.get("m")?;
    let q = spec.get("q")?;
    if !(m >= 1.0 && m.fract() == 0.0) {
        out.push(format!("m = {m} is not a positive integer"));
    }
    if !(q > 0.0 && q <= 1.0) {
        out.push(format!("q = {q} is outside (0, 1]"));
    }
    if let Some(k) = spec.opt("k") {
        if !(k >= 1.0 && k.fract() == 0.0) {
            out.push(format!("k = {k} is not a positive integer"));
        }
    }
    Ok((m, q))
}

pub struct MaxZBound;

impl TailBound for MaxZBound {
    fn name(&self) -> &'static str {
        "max-z"
    }

    fn required(&self) -> &'static [&'static str] {
        &["m", "q", "k", "alpha"]
    }

    fn violations(&self, spec: &BoundSpec) -> Result<Vec<String>> {
        let mut v = Vec::new();
        basic_violations(spec, &mut v)?;
        let alpha = spec.get("alpha")?;
        if !(alpha > 0.0 && alpha <= 0.25) {
            v.push(format!("alpha = {alpha} is outside (0, 1/4]"));
        }
        Ok(v)
    }

    fn value(&self, spec: &BoundSpec) -> Result<f64> {
        let (m, q, k, alpha) = (
            spec.get("m")?,
            spec.get("q")?,
            spec.get("k")?,
            spec.get("alpha")?,
        );
        Ok(k * (-(m * q * (1.0 / alpha).ln()) / (32.0 * alpha)).exp())
    }

    fn event(&self, spec: &BoundSpec) -> Result<ZEvent> {
        Ok(ZEvent::MaxAbove(
            spec.get("q")? / (2.0 * spec.get("alpha")?),
        ))
    }

    fn shape(&self, spec: &BoundSpec) -> Result<ZShape> {
        Ok(ZShape::new(
            spec.get("m")?,
            spec.get("q")?,
            spec.get("k")? as usize,
        ))
    }
}

pub struct SingleZBound;

impl TailBound for SingleZBound {
    fn name(&self) -> &'static str {
        "single-z"
    }

    fn required(&self) -> &'static [&'static str] {
        &["m", "q", "t"]
    }

    fn violations(&self, spec: &BoundSpec) -> Result<Vec<String>> {
        let mut v = Vec::new();
        let (_, q) = basic_violations(spec, &mut v)?;
        let t = spec.get("t")?;
        if !(t > q) {
            v.push(format!("t = {t} is not above q = {q}"));
        }
        Ok(v)
    }

    fn value(&self, spec: &BoundSpec) -> Result<f64> {
        let (m, q, t) = (spec.get("m")?, spec.get("q")?, spec.get("t")?);
        Ok((-m * t * (t / (E * q)).ln()).exp())
    }

    fn event(&self, spec: &BoundSpec) -> Result<ZEvent> {
        Ok(ZEvent::SingleAbove(spec.get("t")?))
    }

    fn shape(&self, spec: &BoundSpec) -> Result<ZShape> {
        Ok(ZShape::new(spec.get("m")?, spec.get("q")?, 1))
    }
}

/// `64 * 24 * e^3 q^2 k`, the smallest admissible `t` for [`Lemma::SumZsq`].
pub fn sum_zsq_min_t(q: f64, k: usize) -> f64 {
    64.0 * 24.0 * E.powi(3) * q * q * k as f64
}

pub struct SumZsqBound;

impl TailBound for SumZsqBound {
    fn name(&self) -> &'static str {
        "sum-zsq"
    }

    fn required(&self) -> &'static [&'static str] {
        &["m", "q", "k", "t"]
    }

    fn violations(&self, spec: &BoundSpec) -> Result<Vec<String>> {
        let mut v = Vec::new();
        let (m, q) = basic_violations(spec, &mut v)?;
        let (k, t) = (spec.get("k")?, spec.get("t")?);
        let t_min = sum_zsq_min_t(q, k as usize);
        if !(t >= t_min) {
            v.push(format!("t = {t} is below 64*24*e^3*q^2*k = {t_min}"));
        }
        if !(q >= 8.0 / (E * m)) {
            v.push(format!("q = {q} is below 8/(e m) = {}", 8.0 / (E * m)));
        }
        Ok(v)
    }

    fn value(&self, spec: &BoundSpec) -> Result<f64> {
        let (m, q, t) = (spec.get("m")?, spec.get("q")?, spec.get("t")?);
        let denom = 200.0 * 44.0 * 2f64.powf(2.5);
        let rate = m * t.sqrt() * ((t / 8.0).sqrt() / (E * q)).ln() / denom;
        Ok(14.0 * (-rate).exp())
    }

    fn event(&self, spec: &BoundSpec) -> Result<ZEvent> {
        Ok(ZEvent::SumSqAbove(spec.get("t")?))
    }

    fn shape(&self, spec: &BoundSpec) -> Result<ZShape> {
        Ok(ZShape::new(
            spec.get("m")?,
            spec.get("q")?,
            spec.get("k")? as usize,
        ))
    }
}

/// `ceil(c1 ln(n) / eps^2)`, the target dimension of [`Lemma::SumZsqAlt`].
pub fn sum_zsq_alt_k(n: f64, c1: f64, eps: f64) -> usize {
    (c1 * n.ln() / (eps * eps)).ceil() as usize
}

pub struct SumZsqAltBound;

impl TailBound for SumZsqAltBound {
    fn name(&self) -> &'static str {
        "sum-zsq-alt"
    }

    fn required(&self) -> &'static [&'static str] {
        &["n", "c1"]
    }

    fn violations(&self, spec: &BoundSpec) -> Result<Vec<String>> {
        let mut v = Vec::new();
        let (n, c1) = (spec.get("n")?, spec.get("c1")?);
        if !(n >= 2.0) {
            v.push(format!("n = {n} is below 2"));
        }
        if !(c1 > 0.0) {
            v.push(format!("c1 = {c1} is not positive"));
        }
        match spec.opt("c2") {
            Some(c2) if c1 >= 1.0 / c2 => {}
            Some(c2) => v.push(format!("c1 = {c1} is below 1/c2 = {}", 1.0 / c2)),
            None => v.push("c2 not given; c1 >= 1/c2 unverified".into()),
        }
        match spec.opt("eps") {
            // the stricter reading of the eps precondition: eps <= 1/(4 e c1)
            Some(eps) if eps > 0.0 && eps <= 1.0 / (4.0 * E * c1) => {}
            Some(eps) => v.push(format!(
                "eps = {eps} exceeds 1/(4 e c1) = {}",
                1.0 / (4.0 * E * c1)
            )),
            None => v.push("eps not given; eps <= 1/(4 e c1) unverified".into()),
        }
        let t_min = 2.0 * c1.powi(3) * E.powi(8) * n.ln();
        match spec.opt("t") {
            Some(t) if t >= t_min => {}
            Some(t) => v.push(format!("t = {t} is below 2 c1^3 e^8 ln n = {t_min}")),
            None => v.push("t not given".into()),
        }
        Ok(v)
    }

    fn value(&self, spec: &BoundSpec) -> Result<f64> {
        let (n, c1) = (spec.get("n")?, spec.get("c1")?);
        Ok(3.0 * n.powf(-4.0 * c1))
    }

    fn event(&self, spec: &BoundSpec) -> Result<ZEvent> {
        Ok(ZEvent::SumSqAbove(spec.get("t")?))
    }

    fn shape(&self, spec: &BoundSpec) -> Result<ZShape> {
        let (n, c1, eps) = (spec.get("n")?, spec.get("c1")?, spec.get("eps")?);
        Ok(ZShape::new(
            spec.get("m")?,
            c1 * eps,
            sum_zsq_alt_k(n, c1, eps),
        ))
    }
}

/// Evaluates the lemma's right-hand side and records any failed hypotheses.
pub fn lemma_bound(spec: &BoundSpec) -> Result<LemmaBound> {
    let bound = spec.lemma.bound();
    for name in bound.required() {
        spec.get(name)?;
    }
    let violations = bound.violations(spec)?;
    Ok(LemmaBound {
        value: bound.value(spec)?,
        hypotheses_hold: violations.is_empty(),
        violations,
    })
}

/// One-sided comparison of an upper bound with an estimate: the bound must
/// not sit below the lower end of the estimate's Wilson interval.
pub fn verdict_for(bound: f64, estimate: &TailEstimate) -> Verdict {
    if bound >= 1.0 {
        Verdict::Vacuous
    } else if estimate.wilson_lo <= bound {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub bound: f64,
    pub verdict: Verdict,
}

pub fn check_bound(spec: &BoundSpec, measured: &EventEstimate) -> Result<BoundCheck> {
    let lb = lemma_bound(spec)?;
    if !lb.hypotheses_hold {
        return Err(Error::Domain(format!(
            "{}: {}",
            spec.lemma.name(),
            lb.violations.join("; ")
        )));
    }
    let expected = spec.lemma.bound().event(spec)?;
    let same_kind = std::mem::discriminant(&expected) == std::mem::discriminant(&measured.event);
    let same_threshold = (expected.threshold() - measured.event.threshold()).abs()
        <= 1e-12 * expected.threshold().abs().max(1.0);
    if !(same_kind && same_threshold) {
        return Err(Error::EventMismatch {
            lemma: spec.lemma.name().into(),
            event: format!(
                "{} > {}",
                measured.event.label(),
                measured.event.threshold()
            ),
        });
    }
    Ok(BoundCheck {
        bound: lb.value,
        verdict: verdict_for(lb.value, &measured.estimate),
    })
}
