//! Scenario configuration. Parsing goes through a raw JSON value first so
//! every validation error can name the offending field.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use super::registry;
use super::tasks::Task;
use crate::fixedpoint::{MapKind, MappingClass, Tolerances};
use crate::gauge::BodySpec;
use crate::pcore::PExponent;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), message: message.into() }
    }

    /// Process exit status: 2 for unreadable files, 3 for invalid content.
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::Io { .. } => 2,
            ConfigError::Invalid { .. } => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Space {
    pub dim: usize,
    pub p: PExponent,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapConfig {
    pub kind: MapKind,
    pub class: MappingClass,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskConfig {
    pub op: String,
    pub task: Task,
    /// Task-level overrides merged over the scenario tolerances.
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub space: Space,
    pub body: BodySpec,
    pub map: Option<MapConfig>,
    pub tolerances: Tolerances,
    pub traces: bool,
    pub tasks: Vec<TaskConfig>,
}

pub(crate) fn parse_as<T: DeserializeOwned>(field: &str, v: Value) -> Result<T, ConfigError> {
    serde_json::from_value(v).map_err(|e| ConfigError::invalid(field, e.to_string()))
}

fn object<'a>(field: &str, v: &'a Value) -> Result<&'a Map<String, Value>, ConfigError> {
    v.as_object().ok_or_else(|| ConfigError::invalid(field, "expected an object"))
}

fn required<'a>(obj: &'a Map<String, Value>, parent: &str, key: &str) -> Result<&'a Value, ConfigError> {
    obj.get(key).ok_or_else(|| ConfigError::invalid(join(parent, key), "missing field"))
}

fn join(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

/// Builds `{"kind": key, ...params}` so the registry enums can deserialize it.
fn tagged(key: &str, params: Option<&Value>, field: &str) -> Result<Value, ConfigError> {
    let mut m = match params {
        None | Some(Value::Null) => Map::new(),
        Some(v) => object(field, v)?.clone(),
    };
    m.insert("kind".into(), Value::String(key.to_string()));
    Ok(Value::Object(m))
}

fn merge_tolerances(base: &Tolerances, v: Option<&Value>, field: &str) -> Result<Tolerances, ConfigError> {
    let Some(v) = v else { return Ok(*base) };
    let mut merged = serde_json::to_value(base).expect("tolerances serialize");
    for (k, val) in object(field, v)? {
        if !matches!(k.as_str(), "gauge" | "solver" | "identity") {
            return Err(ConfigError::invalid(join(field, k), "unknown tolerance"));
        }
        if !val.as_f64().is_some_and(|x| x > 0.0 && x.is_finite()) {
            return Err(ConfigError::invalid(join(field, k), "tolerance must be a positive number"));
        }
        merged[k] = val.clone();
    }
    parse_as(field, merged)
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let v: Value = serde_json::from_str(text).map_err(|e| ConfigError::invalid("<config>", e.to_string()))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, ConfigError> {
        let root = object("<config>", v)?;
        for k in root.keys() {
            if !matches!(k.as_str(), "name" | "seed" | "space" | "body" | "map" | "tolerances" | "traces" | "tasks") {
                return Err(ConfigError::invalid(k.as_str(), "unknown field"));
            }
        }
        let name = match root.get("name") {
            None => "scenario".to_string(),
            Some(n) => n.as_str().ok_or_else(|| ConfigError::invalid("name", "expected a string"))?.to_string(),
        };
        let seed = required(root, "", "seed")?
            .as_u64()
            .ok_or_else(|| ConfigError::invalid("seed", "expected a non-negative integer"))?;

        let space = object("space", required(root, "", "space")?)?;
        let dim = required(space, "space", "dim")?
            .as_u64()
            .filter(|d| *d >= 1)
            .ok_or_else(|| ConfigError::invalid("space.dim", "dim must be an integer ≥ 1"))? as usize;
        let p = required(space, "space", "p")?
            .as_f64()
            .and_then(|p| PExponent::new(p).ok())
            .ok_or_else(|| ConfigError::invalid("space.p", "p must lie in (0,1]"))?;

        let body_v = object("body", required(root, "", "body")?)?;
        let key = required(body_v, "body", "key")?.as_str().ok_or_else(|| ConfigError::invalid("body.key", "expected a string"))?;
        if !registry::BODIES.iter().any(|e| e.name == key) {
            return Err(ConfigError::invalid("body.key", format!("unknown body \"{key}\"")));
        }
        let body_params = match (key, body_v.get("params")) {
            ("pball", None) => Some(serde_json::json!({ "weights": vec![1.0; dim] })),
            ("euclidean_disk", None) => Some(serde_json::json!({ "radius": 1.0 })),
            (_, other) => other.cloned(),
        };
        let body: BodySpec = parse_as("body.params", tagged(key, body_params.as_ref(), "body.params")?)?;
        body.build(dim, p).map_err(|e| ConfigError::invalid("body.params", e.to_string()))?;

        let map = match root.get("map") {
            None | Some(Value::Null) => None,
            Some(m) => {
                let m = object("map", m)?;
                let key = required(m, "map", "key")?.as_str().ok_or_else(|| ConfigError::invalid("map.key", "expected a string"))?;
                if !registry::MAPS.iter().any(|e| e.name == key) {
                    return Err(ConfigError::invalid("map.key", format!("unknown map \"{key}\"")));
                }
                let kind: MapKind = parse_as("map.params", tagged(key, m.get("params"), "map.params")?)?;
                let class: MappingClass = parse_as("map.class", required(m, "map", "class")?.clone())?;
                crate::fixedpoint::MapSpec::from_kind(kind.clone(), dim, class)
                    .map_err(|e| ConfigError::invalid("map.params", e.to_string()))?;
                Some(MapConfig { kind, class })
            }
        };

        let tolerances = merge_tolerances(&Tolerances::default(), root.get("tolerances"), "tolerances")?;
        let traces = match root.get("traces") {
            None => true,
            Some(t) => t.as_bool().ok_or_else(|| ConfigError::invalid("traces", "expected a boolean"))?,
        };

        let tasks_v = required(root, "", "tasks")?.as_array().ok_or_else(|| ConfigError::invalid("tasks", "expected an array"))?;
        let mut tasks = Vec::with_capacity(tasks_v.len());
        for (i, t) in tasks_v.iter().enumerate() {
            let field = format!("tasks[{i}]");
            let t = object(&field, t)?;
            let op = required(t, &field, "op")?.as_str().ok_or_else(|| ConfigError::invalid(format!("{field}.op"), "expected a string"))?;
            let mut params = match t.get("params") {
                None | Some(Value::Null) => Map::new(),
                Some(v) => object(&format!("{field}.params"), v)?.clone(),
            };
            let tol_v = params.remove("tolerances");
            let tol = merge_tolerances(&tolerances, tol_v.as_ref(), &format!("{field}.params.tolerances"))?;
            let task = Task::parse(op, Value::Object(params), &field)?;
            if task.needs_map() && map.is_none() {
                return Err(ConfigError::invalid("map", format!("task {op} needs a map")));
            }
            tasks.push(TaskConfig { op: op.to_string(), task, tolerances: tol });
        }
        Ok(ScenarioConfig { name, seed, space: Space { dim, p }, body, map, tolerances, traces, tasks })
    }
}
