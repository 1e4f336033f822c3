//! Run manifests, stack files and report output.

use std::fs;
use std::path::{Path, PathBuf};

use fringe_info::grid::write_atomic;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Format;
use crate::error::{CliError, CliResult};

pub const TOOL: &str = "fringe-info";
pub const MANIFEST: &str = "manifest.json";

/// Written next to every run's outputs. Passing it back as `--config`
/// reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Value,
    pub outputs: Vec<String>,
}

pub fn write_manifest<C: Serialize>(
    out: &Path,
    command: &str,
    config: &C,
    outputs: &[String],
) -> CliResult<()> {
    let manifest = Manifest {
        tool: TOOL.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        config: serde_json::to_value(config).expect("config serializes"),
        outputs: outputs.to_vec(),
    };
    write_json(&out.join(MANIFEST), &manifest)
}

/// Reads a config file, or the config echoed in a manifest of the same
/// command.
pub fn load_config<C: DeserializeOwned>(path: &Path, command: &str) -> CliResult<C> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let value = match value {
        Value::Object(ref map) if map.get("tool").and_then(Value::as_str) == Some(TOOL) => {
            let found = map.get("command").and_then(Value::as_str).unwrap_or("");
            if found != command {
                return Err(CliError::config(format!(
                    "{} is a manifest of '{found}', not '{command}'",
                    path.display()
                )));
            }
            map.get("config").cloned().unwrap_or(Value::Null)
        }
        other => other,
    };
    serde_json::from_value(value).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Frame list of a phase-shifted stack; paths are relative to the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackFile {
    #[serde(rename = "M")]
    pub frame_count: usize,
    pub frames: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<PathBuf>,
}

impl StackFile {
    pub fn load(path: &Path) -> CliResult<(Self, PathBuf)> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let stack: StackFile = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if stack.frame_count != stack.frames.len() {
            return Err(CliError::config(format!(
                "{}: declares M = {} but lists {} frames",
                path.display(),
                stack.frame_count,
                stack.frames.len()
            )));
        }
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((stack, dir))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_atomic(path, to_json(value).as_bytes())?;
    Ok(())
}

/// One header row and one value row; nested fields become dotted columns.
pub fn to_csv<T: Serialize>(value: &T) -> String {
    let mut columns = Vec::new();
    flatten(
        "",
        &serde_json::to_value(value).expect("report serializes"),
        &mut columns,
    );
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(columns.iter().map(|c| c.0.as_str()))
        .and_then(|_| writer.write_record(columns.iter().map(|c| c.1.as_str())))
        .expect("in-memory CSV");
    String::from_utf8(writer.into_inner().expect("in-memory CSV")).expect("UTF-8")
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            let joined = items.iter().map(scalar).collect::<Vec<_>>().join(";");
            out.push((prefix.to_string(), joined));
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Prints the report and stores it as `report.json` or `report.csv`.
pub fn emit_report<T: Serialize>(out: &Path, value: &T, format: Format) -> CliResult<String> {
    let (name, text) = match format {
        Format::Json => ("report.json", to_json(value)),
        Format::Csv => ("report.csv", to_csv(value)),
    };
    write_atomic(&out.join(name), text.as_bytes())?;
    print!("{text}");
    Ok(name.to_string())
}
