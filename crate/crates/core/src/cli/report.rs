//! Report assembly and output.
//!
//! The report is one JSON document. Everything except the `timing` key is
//! a deterministic function of (config, seed).

use std::path::Path;

use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: &str = "pconvex-report/1";

#[derive(Clone, Debug, PartialEq)]
pub struct TaskRecord {
    pub index: usize,
    pub op: String,
    pub seed: u64,
    pub status: Result<Value, Value>,
    pub traces: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub scenario: Value,
    pub seed: u64,
    pub tasks: Vec<TaskRecord>,
    pub started_unix_ms: u128,
    pub wall_clock_ms: u128,
}

impl Report {
    pub fn failed_tasks(&self) -> usize {
        self.tasks.iter().filter(|t| t.status.is_err()).count()
    }

    /// The report without `timing`.
    pub fn body(&self) -> Value {
        let tasks: Vec<Value> = self
            .tasks
            .iter()
            .map(|t| {
                let mut m = Map::new();
                m.insert("index".into(), json!(t.index));
                m.insert("op".into(), json!(t.op));
                m.insert("seed".into(), json!(t.seed));
                match &t.status {
                    Ok(v) => {
                        m.insert("status".into(), json!("ok"));
                        m.insert("result".into(), v.clone());
                    }
                    Err(e) => {
                        m.insert("status".into(), json!("error"));
                        m.insert("error".into(), e.clone());
                    }
                }
                m.insert("traces".into(), json!(t.traces));
                Value::Object(m)
            })
            .collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "generator": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
            "scenario": self.scenario,
            "seed": self.seed,
            "tasks": tasks,
            "summary": {
                "tasks": self.tasks.len(),
                "ok": self.tasks.len() - self.failed_tasks(),
                "errors": self.failed_tasks(),
            },
        })
    }

    pub fn to_value(&self) -> Value {
        let mut v = self.body();
        v["timing"] = json!({ "started_unix_ms": self.started_unix_ms as u64, "wall_clock_ms": self.wall_clock_ms as u64 });
        v
    }

    pub fn body_string(&self) -> String {
        serde_json::to_string_pretty(&self.body()).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("report serializes");
        s.push('\n');
        std::fs::write(path, s)
    }
}

/// Strips `timing` from a parsed report.
pub fn body_of(report: &Value) -> Value {
    let mut v = report.clone();
    if let Some(m) = v.as_object_mut() {
        m.remove("timing");
    }
    v
}
