//! Layered run configuration: built-in defaults, then a JSON config file (or
//! the `resolved` section of a previous run's sidecar), then command-line
//! flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::{self, DeserializeOwned, Deserializer};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] opo_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use opo_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 5,
            CliError::Core(e) => match e {
                E::Singularity(_) => 3,
                E::DivergenceBudget { .. } | E::Divergence { .. } | E::TrajectoryDiverged { .. } => 4,
                _ => 2,
            },
        }
    }
}

pub fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses an angle: a bare number is radians, a `deg` suffix means degrees.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let (number, degrees) = match text.strip_suffix("deg") {
        Some(rest) => (rest.trim(), true),
        None => (text, false),
    };
    let value: f64 = number
        .parse()
        .map_err(|_| format!("`{text}` is not an angle (radians, or degrees with a `deg` suffix)"))?;
    Ok(if degrees { value.to_radians() } else { value })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AngleRepr {
    Number(f64),
    Text(String),
}

impl AngleRepr {
    fn radians<E: de::Error>(self) -> Result<f64, E> {
        match self {
            AngleRepr::Number(v) => Ok(v),
            AngleRepr::Text(s) => parse_angle(&s).map_err(E::custom),
        }
    }
}

pub fn angle<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    AngleRepr::deserialize(d)?.radians()
}

pub fn angles<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Vec::<AngleRepr>::deserialize(d)?
        .into_iter()
        .map(AngleRepr::radians)
        .collect()
}

/// Merges defaults, config file and flags into the resolved config for
/// `command`. Unknown keys are rejected.
pub fn resolve<T>(command: &str, config: Option<&Path>, flags: Value) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned + Default,
{
    let Value::Object(mut merged) = serde_json::to_value(T::default()).expect("defaults serialize") else {
        unreachable!("resolved configs are structs");
    };
    if let Some(path) = config {
        let text = fs::read_to_string(path).map_err(io_error(path))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        overlay(&mut merged, file_section(command, value, path)?, "config file")?;
    }
    let Value::Object(flags) = flags else {
        unreachable!("flag sets serialize to objects");
    };
    overlay(&mut merged, flags, "flags")?;
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(e.to_string()))
}

fn file_section(command: &str, value: Value, path: &Path) -> Result<Map<String, Value>, CliError> {
    let Value::Object(mut obj) = value else {
        return Err(CliError::Config(format!("{}: expected a JSON object", path.display())));
    };
    // a sidecar from an earlier run
    if let Some(resolved) = obj.remove("resolved") {
        let recorded = obj.get("command").and_then(Value::as_str).unwrap_or_default();
        if recorded != command {
            return Err(CliError::Config(format!(
                "{} was written by `{recorded}`, not `{command}`",
                path.display()
            )));
        }
        return match resolved {
            Value::Object(map) => Ok(map),
            _ => Err(CliError::Config(format!("{}: `resolved` must be an object", path.display()))),
        };
    }
    Ok(obj)
}

fn overlay(base: &mut Map<String, Value>, layer: Map<String, Value>, source: &str) -> Result<(), CliError> {
    for (key, value) in layer {
        if !base.contains_key(&key) {
            let mut known: Vec<&str> = base.keys().map(String::as_str).collect();
            known.sort_unstable();
            return Err(CliError::Config(format!(
                "unknown key `{key}` in {source}; expected one of: {}",
                known.join(", ")
            )));
        }
        base.insert(key, value);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Sidecar<'a, T: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub resolved: &'a T,
    pub output: &'a Path,
    pub log: Value,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn write_outputs<T: Serialize>(command: &str, resolved: &T, out: &Path, csv: &str, log: Value) -> Result<(), CliError> {
    fs::write(out, csv).map_err(io_error(out))?;
    let meta = Sidecar {
        command,
        version: env!("CARGO_PKG_VERSION"),
        resolved,
        output: out,
        log,
    };
    let path = sidecar_path(out);
    let text = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
    fs::write(&path, text + "\n").map_err(io_error(&path))
}
