//! Run configuration: JSON file checked against the shipped schema, merged under the flags.

use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use errw::walk::Representative;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA: &str = include_str!("../schema/run_config.schema.json");
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GridChoice {
    Default,
    Doubled,
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Trees,
    Gibbs,
    Scaling,
    Rwre,
    Lemma31,
    Bounds,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Samples,
    Tails,
    Gamma,
    SigmaMoment,
    Single,
    Check,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Option<String>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub n: Option<usize>,
    pub a: Option<f64>,
    pub eta: Option<Vec<f64>>,
    pub steps: Option<u64>,
    pub replicas: Option<usize>,
    pub start: Option<usize>,
    pub j: Option<usize>,
    pub samples: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub grid: Option<GridChoice>,
    pub doubling: Option<bool>,
    pub suite: Option<Suite>,
    pub mode: Option<Mode>,
    pub ns: Option<Vec<usize>>,
    pub ks: Option<Vec<u64>>,
    pub cases: Option<Vec<[usize; 3]>>,
    pub weights: Option<Vec<f64>>,
    pub count: Option<usize>,
    pub nodes: Option<usize>,
    pub fit_range: Option<[usize; 2]>,
    pub representative: Option<Representative>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or output path: exit 2.
    Config(String),
    /// Failure while running: exit 1.
    Run(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Run(m) => write!(f, "run error: {m}"),
        }
    }
}

impl From<errw::Error> for CliError {
    fn from(e: errw::Error) -> Self {
        match e {
            errw::Error::Domain(m) => CliError::Config(m),
            other => CliError::Run(other.to_string()),
        }
    }
}

pub fn validate_config(doc: &Value) -> Result<RunConfig, CliError> {
    let schema: Value = serde_json::from_str(SCHEMA).expect("shipped schema parses");
    let validator = jsonschema::validator_for(&schema).map_err(|e| CliError::Config(format!("schema: {e}")))?;
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    if !errors.is_empty() {
        return Err(CliError::Config(errors.join("; ")));
    }
    serde_json::from_value(doc.clone()).map_err(|e| CliError::Config(e.to_string()))
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    validate_config(&doc)
}

/// flag > config > default.
pub fn pick<T: Clone>(flag: &Option<T>, cfg: &Option<T>, default: T) -> T {
    flag.clone().or_else(|| cfg.clone()).unwrap_or(default)
}

/// A check with its observed value and the rule it was held to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Value,
    pub rule: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, value: impl Serialize, rule: &str) -> Self {
        Check { name: name.into(), passed, value: serde_json::to_value(value).unwrap_or(Value::Null), rule: rule.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }
    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub struct Outcome {
    pub effective: Value,
    pub result: Value,
    pub table: Option<Table>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self, command: &str) -> Value {
        let failures: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config": self.effective,
            "result": self.result,
            "checks": self.checks,
            "failures": failures,
            "passed": self.passed(),
        })
    }
}

pub fn write_csv(w: &mut dyn Write, command: &str, effective: &Value, t: &Table) -> io::Result<()> {
    writeln!(w, "# errw-csv v{SCHEMA_VERSION}")?;
    writeln!(w, "# command: {command}")?;
    writeln!(w, "# config: {effective}")?;
    writeln!(w, "{}", t.columns.join(","))?;
    for r in &t.rows {
        writeln!(w, "{}", r.join(","))?;
    }
    Ok(())
}

pub fn open_output(path: &Option<PathBuf>) -> Result<Option<File>, CliError> {
    match path {
        None => Ok(None),
        Some(p) => File::create(p).map(Some).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
    }
}
