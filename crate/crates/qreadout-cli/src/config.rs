//! Per-command configuration: built-in defaults, then a JSON file, then flags.

use std::path::{Path, PathBuf};

use qreadout::bench::Regularity;
use qreadout::burgers_tsr::{BurgersConfig, ReferenceKind};
use qreadout::cfd::{FieldFormat, Quantity};
use qreadout::readout_sampling::{Average, Method};
use qreadout::spline::SplineOrder;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Paper shot list `10^4 * 4^(0..6)`.
pub fn paper_shots() -> Vec<u64> {
    (0..7).map(|i| 10_000 * 4u64.pow(i)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostprocConfig {
    pub function: String,
    pub grid_qubits: Vec<usize>,
    pub shots: u64,
    pub averages: Vec<Average>,
    pub spline: SplineOrder,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for PostprocConfig {
    fn default() -> Self {
        Self {
            function: "gaussian2d".into(),
            grid_qubits: (3..=10).collect(),
            shots: 2_560_000,
            averages: Average::DEFAULT_SET.to_vec(),
            spline: SplineOrder::Linear,
            repeats: 5,
            seed: 2024,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    /// `taylor-green`, `cavity-analog` or a file path.
    pub field: String,
    pub format: FieldFormat,
    pub qubits: usize,
    pub periodic: bool,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            field: "taylor-green".into(),
            format: FieldFormat::Matrix,
            qubits: 9,
            periodic: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfdScalingConfig {
    #[serde(flatten)]
    pub field: FieldConfig,
    pub quantity: Quantity,
    pub shots: Vec<u64>,
    pub methods: Vec<Method>,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for CfdScalingConfig {
    fn default() -> Self {
        Self {
            field: FieldConfig::default(),
            quantity: Quantity::Stream,
            shots: paper_shots(),
            methods: vec![Method::Rsr, Method::Arsr, Method::Fsr],
            repeats: 5,
            seed: 2024,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisualizeConfig {
    #[serde(flatten)]
    pub field: FieldConfig,
    pub quantities: Vec<Quantity>,
    pub method: Option<Method>,
    pub shots: u64,
    pub seed: u64,
    pub dump_field: bool,
}

impl Default for VisualizeConfig {
    fn default() -> Self {
        Self {
            field: FieldConfig::default(),
            quantities: vec![Quantity::Ux, Quantity::Uy, Quantity::Curl, Quantity::Stream],
            method: None,
            shots: 160_000,
            seed: 2024,
            dump_field: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutCommandConfig {
    pub input: Option<PathBuf>,
    pub function: String,
    pub qubits: usize,
    pub method: Method,
    /// `None` reads exact probabilities.
    pub shots: Option<u64>,
    pub seed: u64,
    /// Fixed block sizes; adaptive for sampling methods when absent, 8 per
    /// dimension (capped at the grid) for the amplitude-estimation methods.
    pub truncation: Option<Vec<usize>>,
    pub eps: f64,
    pub spline: SplineOrder,
    pub engine: String,
    pub shift: f64,
}

impl Default for ReadoutCommandConfig {
    fn default() -> Self {
        Self {
            input: None,
            function: "gaussian2d".into(),
            qubits: 6,
            method: Method::Fsr,
            shots: Some(160_000),
            seed: 2024,
            truncation: None,
            eps: 0.01,
            spline: SplineOrder::Cubic,
            engine: "analytic".into(),
            shift: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurgersCommandConfig {
    #[serde(flatten)]
    pub run: BurgersConfig,
    pub reference: ReferenceKind,
    pub dump_fields: bool,
}

impl Default for BurgersCommandConfig {
    fn default() -> Self {
        Self {
            run: BurgersConfig::default(),
            reference: ReferenceKind::MatrixFree,
            dump_fields: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub classes: Vec<Regularity>,
    pub dims: Vec<usize>,
    pub eps: Vec<f64>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            classes: vec![Regularity::W11, Regularity::W21],
            dims: vec![1, 2, 3],
            eps: vec![0.01, 0.001],
        }
    }
}

/// Values read from `--config`. A run manifest is accepted as well; its
/// `config` object is used and its `command` must match.
#[derive(Clone, Debug, Default)]
pub struct FileValues {
    pub command: Option<String>,
    pub values: Map<String, Value>,
}

pub fn load_file(path: &Path) -> Result<FileValues, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(mut obj) = value else {
        return Err(CliError::Usage(format!("config {} must hold a JSON object", path.display())));
    };
    if let Some(Value::Object(inner)) = obj.remove("config") {
        let command = obj.get("command").and_then(Value::as_str).map(str::to_owned);
        return Ok(FileValues { command, values: inner });
    }
    Ok(FileValues { command: None, values: obj })
}

/// Layers file values and flags over `base`. Keys unknown to the command
/// are usage errors.
pub fn resolve<C: Serialize + DeserializeOwned>(
    command: &str,
    base: C,
    file: Option<&FileValues>,
    flags: Map<String, Value>,
) -> Result<C, CliError> {
    let Value::Object(mut merged) = serde_json::to_value(base).expect("configs serialize to objects") else {
        unreachable!("configs serialize to objects")
    };
    if let Some(f) = file {
        if let Some(c) = &f.command {
            if c != command {
                return Err(CliError::Usage(format!("manifest is for `{c}`, not `{command}`")));
            }
        }
        for (k, v) in &f.values {
            if !merged.contains_key(k) {
                let known: Vec<&String> = merged.keys().collect();
                return Err(CliError::Usage(format!("unknown config key {k:?} for `{command}`; known keys: {known:?}")));
            }
            merged.insert(k.clone(), v.clone());
        }
    }
    merged.extend(flags);
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))
}

/// Collects the flags that were given.
#[derive(Default)]
pub struct Flags(pub Map<String, Value>);

impl Flags {
    pub fn set<V: Serialize>(&mut self, key: &str, v: Option<V>) -> &mut Self {
        if let Some(v) = v {
            self.0.insert(key.into(), serde_json::to_value(v).expect("flag values serialize"));
        }
        self
    }

    pub fn set_if(&mut self, key: &str, on: bool, v: Value) -> &mut Self {
        if on {
            self.0.insert(key.into(), v);
        }
        self
    }

    pub fn take(&mut self) -> Map<String, Value> {
        std::mem::take(&mut self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn file(v: Value) -> FileValues {
        FileValues {
            command: None,
            values: v.as_object().unwrap().clone(),
        }
    }

    #[test]
    fn flags_win_over_file_and_file_over_defaults() {
        let f = file(json!({"seed": 5, "repeats": 2}));
        let mut flags = Flags::default();
        flags.set("seed", Some(7u64));
        let c: PostprocConfig = resolve("bench postproc", PostprocConfig::default(), Some(&f), flags.take()).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.repeats, 2);
        assert_eq!(c.shots, 2_560_000);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_usage_errors() {
        let f = file(json!({"sede": 5}));
        let r: Result<PostprocConfig, _> = resolve("x", PostprocConfig::default(), Some(&f), Map::new());
        assert!(matches!(r, Err(CliError::Usage(_))));
        let f = file(json!({"seed": "five"}));
        let r: Result<PostprocConfig, _> = resolve("x", PostprocConfig::default(), Some(&f), Map::new());
        assert!(matches!(r, Err(CliError::Usage(_))));
    }

    #[test]
    fn manifest_for_another_command_is_rejected() {
        let f = FileValues {
            command: Some("bench example1".into()),
            values: Map::new(),
        };
        let r: Result<PostprocConfig, _> = resolve("bench postproc", PostprocConfig::default(), Some(&f), Map::new());
        assert!(matches!(r, Err(CliError::Usage(_))));
    }

    #[test]
    fn flattened_configs_round_trip() {
        let c = BurgersCommandConfig::default();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["kappa"], json!(0.51));
        assert_eq!(v["reference"], json!("matrix-free"));
        let back: BurgersCommandConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }
}
