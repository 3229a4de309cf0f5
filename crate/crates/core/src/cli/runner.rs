use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::RngCore;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use super::config::{ConfigError, ScenarioConfig, TaskConfig};
use super::report::{Report, TaskRecord};
use super::tasks::Context;
use crate::error::Error;
use crate::fixedpoint::MapSpec;
use crate::gauge::PBody;
use crate::sampling;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(c) => c.exit_code(),
            RunError::Output(_) => 1,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub parallel: bool,
}

/// Seed handed to task `index`; independent of execution order.
pub fn task_seed(seed: u64, index: usize) -> u64 {
    sampling::substream(seed, index as u64).next_u64()
}

fn error_value(e: &Error) -> Value {
    match e {
        Error::Precondition { reason, witness } => json!({ "kind": "precondition", "message": e.to_string(), "reason": reason, "witness": witness }),
        _ => json!({ "kind": "error", "message": e.to_string() }),
    }
}

fn run_one(cfg: &ScenarioConfig, body: &PBody, map: Option<&MapSpec>, seed: u64, index: usize, t: &TaskConfig) -> (Result<Value, Value>, Vec<(String, String)>) {
    let ctx = Context {
        p: cfg.space.p,
        dim: cfg.space.dim,
        body,
        map,
        map_kind: cfg.map.as_ref().map(|m| &m.kind),
        tol: t.tolerances,
        seed: task_seed(seed, index),
    };
    match t.task.run(&ctx) {
        Ok(o) => (Ok(o.result), o.traces),
        Err(e) => (Err(error_value(&e)), Vec::new()),
    }
}

/// Runs every task of `cfg` and writes `report.json` plus CSV traces to
/// `opts.out_dir` when set.
pub fn run_config(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<Report, RunError> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let clock = Instant::now();
    let seed = opts.seed.unwrap_or(cfg.seed);
    let mut cfg = cfg.clone();
    cfg.seed = seed;
    let body = cfg.body.build(cfg.space.dim, cfg.space.p).map_err(|e| ConfigError::invalid("body.params", e.to_string()))?;
    let map = match &cfg.map {
        Some(m) => Some(MapSpec::from_kind(m.kind.clone(), cfg.space.dim, m.class).map_err(|e| ConfigError::invalid("map.params", e.to_string()))?),
        None => None,
    };
    let results: Vec<_> = if opts.parallel {
        cfg.tasks.par_iter().enumerate().map(|(i, t)| run_one(&cfg, &body, map.as_ref(), seed, i, t)).collect()
    } else {
        cfg.tasks.iter().enumerate().map(|(i, t)| run_one(&cfg, &body, map.as_ref(), seed, i, t)).collect()
    };
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir.join("traces"))?;
    }
    let mut tasks = Vec::with_capacity(results.len());
    for (i, ((status, traces), t)) in results.into_iter().zip(&cfg.tasks).enumerate() {
        let mut names = Vec::new();
        for (suffix, csv) in traces {
            if !cfg.traces {
                continue;
            }
            let rel = format!("traces/{i:02}_{}_{suffix}.csv", t.op);
            if let Some(dir) = &opts.out_dir {
                std::fs::write(dir.join(&rel), csv)?;
            }
            names.push(rel);
        }
        tasks.push(TaskRecord { index: i, op: t.op.clone(), seed: task_seed(seed, i), status, traces: names });
    }
    let report = Report {
        scenario: serde_json::to_value(&cfg).expect("config serializes"),
        seed,
        tasks,
        started_unix_ms: started,
        wall_clock_ms: clock.elapsed().as_millis(),
    };
    if let Some(dir) = &opts.out_dir {
        report.write(&dir.join("report.json"))?;
    }
    Ok(report)
}

/// Loads `path` and runs it.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<Report, RunError> {
    let cfg = ScenarioConfig::load(path)?;
    run_config(&cfg, opts)
}
