//! Layered run configuration: command-line flags over a flat `key=value`
//! file over built-in defaults. `FASTJL_SEED` is consulted only when neither
//! layer sets a seed.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, ValueEnum};
use serde_json::{json, Map, Value};

pub const SEED_ENV: &str = "FASTJL_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Embed,
    VerifyUpper,
    VerifyLemmas,
    VerifyLower,
    Bench,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Embed => "embed",
            Command::VerifyUpper => "verify-upper",
            Command::VerifyLemmas => "verify-lemmas",
            Command::VerifyLower => "verify-lower",
            Command::Bench => "bench",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Command::value_variants()
            .iter()
            .copied()
            .find(|c| c.name() == s)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fastjl",
    version,
    about = "Sparse Fast Johnson-Lindenstrauss embeddings and checks"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[command(flatten)]
    pub knobs: Knobs,
}

/// Every tunable value. Each field is also a config-file key, spelled as
/// the long flag without the leading dashes.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct Knobs {
    /// Flat key=value file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long = "out")]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Multiplies the scheduler's q.
    #[arg(long)]
    pub q_scale: Option<f64>,
    #[arg(long)]
    pub scheduler: Option<String>,
    #[arg(long)]
    pub c_q: Option<f64>,
    #[arg(long)]
    pub c_k: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// squared or norm.
    #[arg(long)]
    pub criterion: Option<String>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub threshold_c: Option<f64>,
    #[arg(long)]
    pub sign_trials: Option<u64>,
    #[arg(long)]
    pub mgf_draws: Option<u64>,
    #[arg(long)]
    pub chisq_c3: Option<f64>,
    #[arg(long)]
    pub chisq_big_c3: Option<f64>,
    /// Comma-separated dimensions for bench.
    #[arg(long)]
    pub dims: Option<String>,
    /// Comma-separated bench methods.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Time a parallel batch apply instead of one vector per rep.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug)]
pub enum ConfigError {
    UnknownKey {
        key: String,
        line: usize,
    },
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    Conflict(String),
    Missing(String),
    Io {
        path: PathBuf,
        reason: String,
    },
    Malformed {
        path: PathBuf,
        line: usize,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownKey { key, line } => {
                write!(f, "unknown config key `{key}` on line {line}")
            }
            ConfigError::BadValue { key, value, reason } => {
                write!(f, "invalid value `{value}` for `{key}`: {reason}")
            }
            ConfigError::Conflict(msg) => write!(f, "conflicting parameters: {msg}"),
            ConfigError::Missing(key) => write!(f, "missing required parameter `{key}`"),
            ConfigError::Io { path, reason } => write!(f, "{}: {reason}", path.display()),
            ConfigError::Malformed { path, line } => {
                write!(f, "{}:{line}: expected key=value", path.display())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

/// Parses a config file. Blank lines and `#` comments are skipped; keys may
/// use `-` or `_`. A `command` key must match the subcommand.
pub fn read_config_file(path: &Path, command: Command) -> Result<Knobs, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut k = Knobs::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        let key = key.as_str();
        match key {
            "command" => {
                if Command::from_name(v) != Some(command) {
                    return Err(ConfigError::Conflict(format!(
                        "config file is for `{v}`, running `{}`",
                        command.name()
                    )));
                }
            }
            "config" => {
                return Err(ConfigError::BadValue {
                    key: key.into(),
                    value: v.into(),
                    reason: "config files cannot include other config files".into(),
                })
            }
            "in" => k.input = Some(v.into()),
            "out" => k.output = Some(v.into()),
            "report" => k.report = Some(v.into()),
            "eps" => k.eps = Some(parse(key, v)?),
            "n" => k.n = Some(parse(key, v)?),
            "delta" => k.delta = Some(parse(key, v)?),
            "d" => k.d = Some(parse(key, v)?),
            "k" => k.k = Some(parse(key, v)?),
            "q" => k.q = Some(parse(key, v)?),
            "q-scale" => k.q_scale = Some(parse(key, v)?),
            "scheduler" => k.scheduler = Some(v.into()),
            "c-q" => k.c_q = Some(parse(key, v)?),
            "c-k" => k.c_k = Some(parse(key, v)?),
            "trials" => k.trials = Some(parse(key, v)?),
            "seed" => k.seed = Some(parse(key, v)?),
            "workers" => k.workers = Some(parse(key, v)?),
            "criterion" => k.criterion = Some(v.into()),
            "points" => k.points = Some(parse(key, v)?),
            "threshold-c" => k.threshold_c = Some(parse(key, v)?),
            "sign-trials" => k.sign_trials = Some(parse(key, v)?),
            "mgf-draws" => k.mgf_draws = Some(parse(key, v)?),
            "chisq-c3" => k.chisq_c3 = Some(parse(key, v)?),
            "chisq-big-c3" => k.chisq_big_c3 = Some(parse(key, v)?),
            "dims" => k.dims = Some(v.into()),
            "methods" => k.methods = Some(v.into()),
            "reps" => k.reps = Some(parse(key, v)?),
            "parallel" => k.parallel = parse(key, v)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                    line: i + 1,
                })
            }
        }
    }
    Ok(k)
}

/// How `q` is chosen; exactly one source per run.
#[derive(Debug, Clone, PartialEq)]
pub enum QChoice {
    Fixed(f64),
    Scheduler(String),
}

/// The fully resolved configuration. `Option` fields are those a command
/// may leave unset; defaults are filled per command in `run`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub knobs: Knobs,
    pub q_choice: Option<QChoice>,
    pub seed: u64,
}

macro_rules! overlay {
    ($top:expr, $base:expr; $($f:ident),*) => {
        Knobs {
            $($f: $top.$f.clone().or($base.$f.clone()),)*
            parallel: $top.parallel || $base.parallel,
        }
    };
}

fn q_choice(k: &Knobs, layer: &str) -> Result<Option<QChoice>, ConfigError> {
    match (k.q, &k.scheduler) {
        (Some(q), Some(s)) => Err(ConfigError::Conflict(format!(
            "q = {q} and scheduler = {s} are both set in the {layer}; give one"
        ))),
        (Some(q), None) => Ok(Some(QChoice::Fixed(q))),
        (None, Some(s)) => Ok(Some(QChoice::Scheduler(s.clone()))),
        (None, None) => Ok(None),
    }
}

/// Merges flags over the optional config file. `q` and `scheduler` conflict
/// when set in the same layer; a flag for one replaces a file value for the
/// other.
pub fn resolve(cli: Cli, env_seed: Option<&str>) -> Result<RunConfig, ConfigError> {
    let file = match &cli.knobs.config {
        Some(p) => read_config_file(p, cli.command)?,
        None => Knobs::default(),
    };
    let choice = match q_choice(&cli.knobs, "command line")? {
        Some(c) => Some(c),
        None => q_choice(&file, "config file")?,
    };
    let mut knobs = overlay!(cli.knobs, file;
        config, input, output, report, eps, n, delta, d, k, q, q_scale, scheduler, c_q, c_k,
        trials, seed, workers, criterion, points, threshold_c, sign_trials, mgf_draws,
        chisq_c3, chisq_big_c3, dims, methods, reps);
    match &choice {
        Some(QChoice::Fixed(_)) => knobs.scheduler = None,
        Some(QChoice::Scheduler(_)) => knobs.q = None,
        None => {}
    }
    let seed = match (knobs.seed, env_seed) {
        (Some(s), _) => s,
        (None, Some(v)) => parse(SEED_ENV, v)?,
        (None, None) => 0,
    };
    knobs.seed = Some(seed);
    Ok(RunConfig {
        command: cli.command,
        knobs,
        q_choice: choice,
        seed,
    })
}

impl RunConfig {
    pub fn require<T: Clone>(&self, value: &Option<T>, key: &str) -> Result<T, ConfigError> {
        value
            .clone()
            .ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    /// The resolved knobs as a JSON object whose keys are config-file keys,
    /// plus any values derived at run time under `resolved`.
    pub fn echo(&self, resolved: &BTreeMap<String, Value>) -> Value {
        let k = &self.knobs;
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command.name()));
        let mut put = |key: &str, v: Value| {
            if !v.is_null() {
                m.insert(key.into(), v);
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        put("in", json!(path(&k.input)));
        put("out", json!(path(&k.output)));
        put("report", json!(path(&k.report)));
        put("eps", json!(k.eps));
        put("n", json!(k.n));
        put("delta", json!(k.delta));
        put("d", json!(k.d));
        put("k", json!(k.k));
        put("q", json!(k.q));
        put("q-scale", json!(k.q_scale));
        put("scheduler", json!(k.scheduler));
        put("c-q", json!(k.c_q));
        put("c-k", json!(k.c_k));
        put("trials", json!(k.trials));
        put("seed", json!(self.seed));
        put("workers", json!(k.workers));
        put("criterion", json!(k.criterion));
        put("points", json!(k.points));
        put("threshold-c", json!(k.threshold_c));
        put("sign-trials", json!(k.sign_trials));
        put("mgf-draws", json!(k.mgf_draws));
        put("chisq-c3", json!(k.chisq_c3));
        put("chisq-big-c3", json!(k.chisq_big_c3));
        put("dims", json!(k.dims));
        put("methods", json!(k.methods));
        put("reps", json!(k.reps));
        if k.parallel {
            put("parallel", json!(true));
        }
        if !resolved.is_empty() {
            put("resolved", json!(resolved));
        }
        Value::Object(m)
    }
}

/// Renders an echoed config back into config-file text, dropping the
/// `resolved` block. Replaying this file reproduces the run.
#[cfg(test)]
pub fn echo_to_config_text(echo: &Value) -> String {
    let mut s = String::new();
    if let Some(obj) = echo.as_object() {
        for (k, v) in obj {
            match v {
                Value::Object(_) => continue,
                Value::String(t) => s.push_str(&format!("{k}={t}\n")),
                other => s.push_str(&format!("{k}={other}\n")),
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn cli(args: &[&str]) -> Cli {
        let mut v = vec!["fastjl"];
        v.extend_from_slice(args);
        Cli::try_parse_from(v).unwrap()
    }

    fn file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn embed_flags_map_directly() {
        let c = resolve(
            cli(&[
                "embed",
                "--in",
                "x.fjlv",
                "--out",
                "y.fjlv",
                "--eps",
                "0.1",
                "--n",
                "1000000",
                "--scheduler",
                "theorem1",
                "--seed",
                "7",
            ]),
            None,
        )
        .unwrap();
        assert_eq!(c.command, Command::Embed);
        assert_eq!(c.seed, 7);
        assert_eq!(c.knobs.eps, Some(0.1));
        assert_eq!(c.q_choice, Some(QChoice::Scheduler("theorem1".into())));
    }

    #[test]
    fn q_and_scheduler_conflict() {
        let e = resolve(cli(&["embed", "--q", "0.01", "--scheduler", "ac"]), None).unwrap_err();
        assert!(matches!(e, ConfigError::Conflict(_)));
        assert!(e.to_string().contains("scheduler"));

        let f = file("q=0.01\nscheduler=ac\n");
        let p = f.path().to_str().unwrap();
        assert!(matches!(
            resolve(cli(&["embed", "--config", p]), None),
            Err(ConfigError::Conflict(_))
        ));
    }

    #[test]
    fn flag_for_one_replaces_file_value_of_other() {
        let f = file("scheduler=ac\n");
        let p = f.path().to_str().unwrap();
        let c = resolve(cli(&["embed", "--config", p, "--q", "0.5"]), None).unwrap();
        assert_eq!(c.q_choice, Some(QChoice::Fixed(0.5)));
        assert_eq!(c.knobs.scheduler, None);
    }

    #[test]
    fn flags_override_file() {
        let f = file("# comment\ntrials = 10000\nc_q=2\n");
        let p = f.path().to_str().unwrap();
        let c = resolve(
            cli(&["verify-lemmas", "--config", p, "--trials", "500"]),
            None,
        )
        .unwrap();
        assert_eq!(c.knobs.trials, Some(500));
        assert_eq!(c.knobs.c_q, Some(2.0));
    }

    #[test]
    fn unknown_key_is_named() {
        let f = file("trials=5\nbogus=1\n");
        let p = f.path().to_str().unwrap();
        let e = resolve(cli(&["verify-lemmas", "--config", p]), None).unwrap_err();
        assert_eq!(e.to_string(), "unknown config key `bogus` on line 2");
    }

    #[test]
    fn unknown_flag_rejected() {
        assert!(Cli::try_parse_from(["fastjl", "bench", "--bogus", "1"]).is_err());
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve(cli(&["bench"]), Some("11")).unwrap().seed, 11);
        assert_eq!(
            resolve(cli(&["bench", "--seed", "3"]), Some("11"))
                .unwrap()
                .seed,
            3
        );
        assert_eq!(resolve(cli(&["bench"]), None).unwrap().seed, 0);
        assert!(matches!(
            resolve(cli(&["bench"]), Some("x")),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn command_key_must_match() {
        let f = file("command=bench\n");
        let p = f.path().to_str().unwrap();
        assert!(resolve(cli(&["verify-lemmas", "--config", p]), None).is_err());
        assert!(resolve(cli(&["bench", "--config", p]), None).is_ok());
    }

    #[test]
    fn echo_replays_to_same_config() {
        let c = resolve(
            cli(&[
                "verify-upper",
                "--eps",
                "0.25",
                "--scheduler",
                "ac",
                "--trials",
                "9",
                "--seed",
                "4",
            ]),
            None,
        )
        .unwrap();
        let mut resolved = BTreeMap::new();
        resolved.insert("q".to_string(), json!(0.1));
        let text = echo_to_config_text(&c.echo(&resolved));
        assert!(!text.contains("resolved"));
        let f = file(&text);
        let again = resolve(
            cli(&["verify-upper", "--config", f.path().to_str().unwrap()]),
            None,
        )
        .unwrap();
        assert_eq!(again.knobs.eps, c.knobs.eps);
        assert_eq!(again.q_choice, c.q_choice);
        assert_eq!(again.seed, c.seed);
        assert_eq!(again.knobs.trials, c.knobs.trials);
    }
}
