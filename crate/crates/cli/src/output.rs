use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chtest::fmt::num;
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::Global;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<chtest::Error> for CliError {
    fn from(e: chtest::Error) -> Self {
        use chtest::Error as E;
        let input = e.is_configuration() || matches!(e, E::DegenerateProjection(_) | E::CovarianceNotPsd(_));
        if input {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Rounds every float to twelve significant digits, the display precision.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            num(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(Value::Number(n), Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub package: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub seed: Option<u64>,
    pub config: Value,
}

impl Provenance {
    pub fn new(args: &[String], seed: Option<u64>, config: Value) -> Self {
        Provenance {
            package: "chtest",
            version: env!("CARGO_PKG_VERSION"),
            command: args.to_vec(),
            seed,
            config,
        }
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".provenance.json");
    PathBuf::from(name)
}

fn write_target(global: &Global, body: &str) -> CliResult<()> {
    match &global.output {
        Some(path) => fs::write(path, body)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Config(format!("cannot write to stdout: {e}")))
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

/// Writes a result. JSON output embeds the provenance block; CSV output puts
/// it in a sidecar next to `--output`, or on stderr when writing to stdout.
pub fn emit(global: &Global, format: Format, provenance: Provenance, result: Value, csv: impl FnOnce() -> String) -> CliResult<()> {
    let provenance = round_json(serde_json::to_value(&provenance).expect("provenance serializes"));
    match format {
        Format::Json => write_target(
            global,
            &pretty(&json!({ "provenance": provenance, "result": round_json(result) })),
        ),
        Format::Csv => {
            write_target(global, &csv())?;
            match &global.output {
                Some(path) => {
                    let side = sidecar(path);
                    fs::write(&side, pretty(&provenance))
                        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", side.display())))
                }
                None => {
                    eprintln!("provenance: {}", serde_json::to_string(&provenance).expect("serializes"));
                    Ok(())
                }
            }
        }
    }
}

/// Quotes a CSV field only when it needs it.
pub fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
