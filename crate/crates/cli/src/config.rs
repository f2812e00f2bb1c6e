//! Layered configuration: defaults, then a JSON config file, then flags.
//! Every command resolves to a typed, fully populated config whose JSON form
//! is what the manifest records and what a replay runs from.

use std::io::Read;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use anisoperim_core::carnot::{McConfig, Which};
use anisoperim_core::functionals::{PerimeterForm, DEFAULT_EPSILON_LADDER};
use anisoperim_core::measures::SpecFile;
use anisoperim_core::{ProblemSpec, QuadratureConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeConfig {
    pub spec: ProblemSpec,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    pub c: Option<f64>,
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerimeterConfig {
    pub spec: ProblemSpec,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    pub c: Option<f64>,
    pub form: PerimeterForm,
    pub epsilon_ladder: Vec<f64>,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketConfig {
    pub spec: ProblemSpec,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    pub epsilon_ladder: Vec<f64>,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C1")]
    pub c1: Option<f64>,
    #[serde(rename = "C2")]
    pub c2: Option<f64>,
    #[serde(rename = "C3")]
    pub c3: Option<f64>,
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Where `data` was read from; `-` for stdin.
    pub input: String,
    /// The CSV text itself, so that the fit replays without its input.
    pub data: String,
    pub column: Option<String>,
    pub beta: f64,
    pub predicted: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioConfig {
    pub spec: ProblemSpec,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    pub r: Option<f64>,
    pub format: Format,
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McRunConfig {
    pub spec: ProblemSpec,
    pub which: Which,
    pub expect_clean: bool,
    pub mc: McConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub r: f64,
    pub t: Vec<f64>,
    pub log_t: Vec<f64>,
}

/// Recursive merge of JSON objects; anything else in `over` replaces `base`.
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// A grid given as `a..b` (inclusive integer range, when `range` holds) or
/// as a comma list of reals.
pub fn parse_grid(text: &str, range: bool) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        if !range {
            return Err(format!("ranges are not accepted here: {text:?}"));
        }
        let a: i64 = a
            .trim()
            .parse()
            .map_err(|_| format!("range bounds must be integers: {text:?}"))?;
        let b: i64 = b
            .trim()
            .parse()
            .map_err(|_| format!("range bounds must be integers: {text:?}"))?;
        if b < a {
            return Err(format!("empty range {text:?}"));
        }
        return Ok((a..=b).map(|v| v as f64).collect());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number: {:?}", s.trim()))
        })
        .collect()
}

/// Replaces a string grid at `key` by the list it denotes.
fn normalise_grid(obj: &mut Map<String, Value>, key: &str, range: bool) -> Result<(), CliError> {
    if let Some(Value::String(s)) = obj.get(key) {
        let grid = parse_grid(s, range).map_err(|e| CliError::Invalid(format!("{key}: {e}")))?;
        obj.insert(key.to_string(), json!(grid));
    }
    Ok(())
}

fn spec_defaults(setting: &str) -> Value {
    match setting {
        "group" => json!({"setting": "group", "p": 4.0, "n": 2, "m": 1}),
        _ => json!({"setting": "grushin", "gamma": 1.0, "p": 4.0, "n": 1, "m": 1}),
    }
}

fn default_k() -> Value {
    json!((5..=10).map(f64::from).collect::<Vec<_>>())
}

fn quadrature_defaults() -> Value {
    serde_json::to_value(QuadratureConfig::default()).expect("serialisable")
}

fn command_defaults(command: &str, setting: &str) -> Value {
    let spec = spec_defaults(setting);
    match command {
        "volume" => json!({"spec": spec, "K": default_k(), "c": null, "quadrature": quadrature_defaults()}),
        "perimeter" => json!({
            "spec": spec, "K": default_k(), "c": null, "form": "exact",
            "epsilon_ladder": DEFAULT_EPSILON_LADDER, "C0": 1.0, "quadrature": quadrature_defaults()
        }),
        "bracket" => json!({
            "spec": spec, "K": default_k(), "epsilon_ladder": DEFAULT_EPSILON_LADDER,
            "C0": 1.0, "C1": null, "C2": null, "C3": null, "quadrature": quadrature_defaults()
        }),
        "ratio" => {
            json!({"spec": spec, "K": default_k(), "r": null, "format": "json", "quadrature": quadrature_defaults()})
        }
        "mc" => json!({
            "spec": spec, "which": "outer", "expect_clean": false,
            "mc": serde_json::to_value(McConfig::default()).expect("serialisable")
        }),
        "profile" => json!({"t": [], "log_t": []}),
        "fit" => json!({"input": "-", "column": null, "predicted": null}),
        _ => json!({}),
    }
}

fn default_setting(command: &str) -> &'static str {
    match command {
        "bracket" | "mc" => "group",
        _ => "grushin",
    }
}

fn typed<T: DeserializeOwned + Serialize>(value: Value) -> Result<(T, Value), CliError> {
    let t: T = serde_json::from_value(value).map_err(|e| CliError::Invalid(format!("invalid configuration: {e}")))?;
    let resolved = serde_json::to_value(&t).expect("serialisable");
    Ok((t, resolved))
}

fn require(user: &Map<String, Value>, path: &[&str], flag: &str) -> Result<(), CliError> {
    let mut cur = user;
    for (i, key) in path.iter().enumerate() {
        match cur.get(*key) {
            Some(Value::Object(o)) if i + 1 < path.len() => cur = o,
            Some(v) if i + 1 == path.len() && !v.is_null() => return Ok(()),
            _ => break,
        }
    }
    Err(CliError::Invalid(format!("{flag} is required")))
}

fn read_input(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Io(format!("reading stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {path}: {e}")))
    }
}

/// Combines the user-supplied partial configuration with the defaults of
/// `command` and returns the resolved configuration.
pub fn resolve(command: &str, user: Value) -> Result<Value, CliError> {
    let Value::Object(mut user) = user else {
        return Err(CliError::Invalid("the configuration must be a JSON object".into()));
    };
    normalise_grid(&mut user, "K", command != "mc")?;
    for key in ["epsilon_ladder", "t", "log_t"] {
        normalise_grid(&mut user, key, false)?;
    }
    let setting = user
        .get("spec")
        .and_then(|s| s.get("setting"))
        .and_then(Value::as_str)
        .unwrap_or_else(|| default_setting(command))
        .to_string();
    let mut merged = command_defaults(command, &setting);
    match command {
        "mc" => require(&user, &["mc", "seed"], "--seed")?,
        "fit" => require(&user, &["beta"], "--beta")?,
        "profile" => require(&user, &["r"], "--r")?,
        _ => {}
    }
    if command == "fit" && !user.contains_key("data") {
        let input = user.get("input").and_then(Value::as_str).unwrap_or("-").to_string();
        user.insert("data".into(), Value::String(read_input(&input)?));
    }
    merge(&mut merged, Value::Object(user));
    if let Some(spec) = merged.get("spec") {
        let file: SpecFile =
            serde_json::from_value(spec.clone()).map_err(|e| CliError::Invalid(format!("invalid spec: {e}")))?;
        let parsed = ProblemSpec::try_from(file).map_err(CliError::from)?;
        merged["spec"] = serde_json::to_value(parsed).expect("serialisable");
    }
    let resolved = match command {
        "volume" => typed::<VolumeConfig>(merged)?.1,
        "perimeter" => typed::<PerimeterConfig>(merged)?.1,
        "bracket" => typed::<BracketConfig>(merged)?.1,
        "fit" => typed::<FitConfig>(merged)?.1,
        "ratio" => typed::<RatioConfig>(merged)?.1,
        "mc" => typed::<McRunConfig>(merged)?.1,
        "profile" => typed::<ProfileConfig>(merged)?.1,
        other => return Err(CliError::Invalid(format!("unknown command {other:?}"))),
    };
    Ok(resolved)
}

/// Deserialises a resolved configuration.
pub fn load<T: DeserializeOwned>(config: &Value) -> Result<T, CliError> {
    serde_json::from_value(config.clone()).map_err(|e| CliError::Invalid(format!("invalid configuration: {e}")))
}
