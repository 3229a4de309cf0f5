//! Task catalogue: every operation a scenario can invoke, with its
//! parameters and defaults.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{parse_as, ConfigError};
use crate::error::{Error, Result};
use crate::fixedpoint::{
    self, BkOptions, BoundaryCondition, BoundarySampling, EpsOptions, Homotopy, HomotopyKind, HomotopyOptions, InnerOptions,
    MapKind, MapSpec, NonSelfCondition, PowerParams, Schedule, SolveOptions, Tolerances,
};
use crate::gauge::{self, PBody};
use crate::kkm::{self, KkmFamily, Predicate, SimplexGrid};
use crate::mnc::{self, DiagOperator, SeqSet, SeqSetKind, Sequence};
use crate::pcore::{self, PExponent, PointSet};
use crate::retract::{self, SetRef};
use crate::sampling;
use crate::vector::Vector;

fn d_samples() -> usize {
    256
}
fn d_trials() -> usize {
    1000
}
fn d_truncation() -> usize {
    1000
}
fn d_r_max() -> f64 {
    10.0
}
fn d_resolution() -> f64 {
    1e-4
}
fn d_r_grid() -> f64 {
    1e-3
}
fn d_max_step() -> f64 {
    1e-3
}
fn d_steps() -> usize {
    30
}
fn d_kkm_resolution() -> usize {
    30
}
fn d_starts() -> usize {
    16
}
fn d_lambda_max() -> f64 {
    1e6
}
fn d_eps_r_max() -> f64 {
    1e6
}
fn d_boundary_samples() -> usize {
    128
}
fn d_inward_samples() -> usize {
    256
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsDomain {
    #[default]
    Body,
    WholeSpace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `G_i = {t_i ≥ c}` on `Δ_n`.
    Threshold { n: usize, c: f64 },
    Custom { generators: Vec<Vector>, predicates: Vec<Predicate> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "key", rename_all = "snake_case", deny_unknown_fields)]
pub enum HomotopyChoice {
    /// `t F(x)` for the scenario map.
    LinearScaling,
    /// `F(x) + t v` for the scenario map.
    AffinePath { v: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    CheckPConvex {
        #[serde(default = "d_trials")]
        trials: usize,
        /// Smaller exponents to recheck the body at.
        #[serde(default)]
        s_grid: Vec<f64>,
    },
    EvalGauge { points: Vec<Vector> },
    GaugeAxioms {
        #[serde(default = "d_samples")]
        samples: usize,
    },
    BallSandwich {
        #[serde(default = "d_samples")]
        samples: usize,
    },
    Retract { points: Vec<Vector> },
    ContinuityProbe {
        #[serde(default = "d_samples")]
        samples: usize,
        #[serde(default = "d_max_step")]
        max_step: f64,
    },
    AdmissibleRScan {
        #[serde(default = "d_r_max")]
        r_max: f64,
        #[serde(default = "d_resolution")]
        resolution: f64,
    },
    InwardMembership {
        x: Vector,
        z: Vector,
        #[serde(default = "d_r_grid")]
        r_grid: f64,
    },
    OutwardMembership {
        x: Vector,
        z: Vector,
        #[serde(default = "d_r_grid")]
        r_grid: f64,
    },
    FiniteHullMembership { generators: Vec<Vector>, q: Vector },
    HausdorffMnc {
        set: SeqSetKind,
        #[serde(default = "d_truncation")]
        truncation: usize,
    },
    KuratowskiMnc {
        set: SeqSetKind,
        #[serde(default = "d_truncation")]
        truncation: usize,
    },
    ClassifyOperator {
        coefficients: Sequence,
        set: SeqSetKind,
        #[serde(default = "d_truncation")]
        truncation: usize,
    },
    KkmVerify {
        family: FamilySpec,
        #[serde(default = "d_kkm_resolution")]
        resolution: usize,
    },
    ApproximateFixedPoint {
        #[serde(default = "d_steps")]
        steps: usize,
        #[serde(default)]
        schedule: Option<Vec<f64>>,
        #[serde(default)]
        inner: InnerOptions,
    },
    BestApproxCertificate {
        #[serde(default = "d_steps")]
        steps: usize,
        #[serde(default)]
        inner: InnerOptions,
        #[serde(default = "d_inward_samples")]
        inward_samples: usize,
    },
    CheckBoundaryConditions {
        conditions: Vec<BoundaryCondition>,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        beta: Option<f64>,
        #[serde(default = "d_boundary_samples")]
        samples: usize,
        /// Run the solver when every condition holds.
        #[serde(default)]
        solve: bool,
    },
    BirkhoffKelloggScan {
        #[serde(default = "d_starts")]
        starts: usize,
        #[serde(default = "d_lambda_max")]
        lambda_max: f64,
    },
    LeraySchauderEpsScan {
        #[serde(default)]
        lambdas: Option<Vec<f64>>,
        #[serde(default = "d_eps_r_max")]
        r_max: f64,
        #[serde(default)]
        domain: EpsDomain,
    },
    RotheFixedPoint {
        #[serde(default = "d_boundary_samples")]
        samples: usize,
    },
    HomotopySolve {
        homotopy: HomotopyChoice,
        #[serde(default)]
        eps: Option<Vec<f64>>,
    },
    NonselfCondition {
        condition: NonSelfCondition,
        #[serde(default = "d_boundary_samples")]
        samples: usize,
    },
}

pub const OPS: &[&str] = &[
    "check_p_convex",
    "eval_gauge",
    "gauge_axioms",
    "ball_sandwich",
    "retract",
    "continuity_probe",
    "admissible_r_scan",
    "inward_membership",
    "outward_membership",
    "finite_hull_membership",
    "hausdorff_mnc",
    "kuratowski_mnc",
    "classify_operator",
    "kkm_verify",
    "approximate_fixed_point",
    "best_approx_certificate",
    "check_boundary_conditions",
    "birkhoff_kellogg_scan",
    "leray_schauder_eps_scan",
    "rothe_fixed_point",
    "homotopy_solve",
    "nonself_condition",
];

impl Task {
    pub fn parse(op: &str, mut params: Value, field: &str) -> std::result::Result<Self, ConfigError> {
        if !OPS.contains(&op) {
            return Err(ConfigError::invalid(format!("{field}.op"), format!("unknown operation \"{op}\"")));
        }
        params["op"] = Value::String(op.to_string());
        let task: Task = parse_as(&format!("{field}.params"), params)?;
        if let Task::CheckBoundaryConditions { alpha, beta, conditions, .. } = &task {
            if let Some(a) = alpha {
                PowerParams::new(*a, beta.unwrap_or(0.0)).map_err(|e| ConfigError::invalid(format!("{field}.params.alpha"), e.to_string()))?;
            }
            if alpha.is_none() && conditions.iter().any(|c| c.needs_params()) {
                return Err(ConfigError::invalid(format!("{field}.params.alpha"), "power conditions need alpha > 1"));
            }
        }
        Ok(task)
    }

    pub fn needs_map(&self) -> bool {
        matches!(
            self,
            Task::ApproximateFixedPoint { .. }
                | Task::BestApproxCertificate { .. }
                | Task::CheckBoundaryConditions { .. }
                | Task::BirkhoffKelloggScan { .. }
                | Task::LeraySchauderEpsScan { .. }
                | Task::RotheFixedPoint { .. }
                | Task::HomotopySolve { .. }
                | Task::NonselfCondition { .. }
        )
    }
}

/// Everything a task needs from its scenario.
pub struct Context<'a> {
    pub p: PExponent,
    pub dim: usize,
    pub body: &'a PBody,
    pub map: Option<&'a MapSpec>,
    pub map_kind: Option<&'a MapKind>,
    pub tol: Tolerances,
    pub seed: u64,
}

pub struct TaskOutput {
    pub result: Value,
    /// `(suffix, csv)` pairs written next to the report.
    pub traces: Vec<(String, String)>,
}

fn out(v: impl Serialize) -> TaskOutput {
    TaskOutput { result: serde_json::to_value(v).expect("results serialize"), traces: Vec::new() }
}

fn schedule_from(steps: usize, explicit: Option<&Vec<f64>>) -> Result<Schedule> {
    match explicit {
        Some(v) => Schedule::new(v.clone()),
        None => Ok(Schedule::geometric(steps)),
    }
}

impl Task {
    pub fn run(&self, ctx: &Context<'_>) -> Result<TaskOutput> {
        let tol = ctx.tol;
        let map = || ctx.map.ok_or_else(|| Error::Parameter("task needs a map".into()));
        Ok(match self {
            Task::CheckPConvex { trials, s_grid } => {
                let member = ctx.body.membership();
                let r = ctx.body.bound_radius();
                let half = vec![r; ctx.dim];
                let mut reports = Vec::new();
                let mut exps = vec![ctx.p.get()];
                exps.extend(s_grid.iter().copied());
                for s in exps {
                    let s = PExponent::new(s)?;
                    let m = member.clone();
                    let h = half.clone();
                    reports.push(pcore::check_p_convex(move |x: &[f64]| m(x), s, move |rng| sampling::uniform_box(rng, &h), ctx.seed, *trials));
                }
                out(reports)
            }
            Task::EvalGauge { points } => {
                let vals = points.iter().map(|x| gauge::eval_gauge(ctx.body, x, tol.gauge)).collect::<Result<Vec<_>>>()?;
                out(vals)
            }
            Task::GaugeAxioms { samples } => out(gauge::verify_gauge_axioms(ctx.body, *samples, ctx.seed, tol.gauge)?),
            Task::BallSandwich { samples } => out(gauge::ball_sandwich_check(ctx.body, *samples, ctx.seed, tol.gauge)?),
            Task::Retract { points } => {
                let vals = points.iter().map(|x| retract::radial_retract(ctx.body, x, tol.gauge)).collect::<Result<Vec<_>>>()?;
                out(vals)
            }
            Task::ContinuityProbe { samples, max_step } => {
                out(retract::continuity_probe(ctx.body, *samples, ctx.seed, *max_step, tol.gauge)?)
            }
            Task::AdmissibleRScan { r_max, resolution } => out(retract::admissible_r_scan(ctx.p, *r_max, *resolution)?),
            Task::InwardMembership { x, z, r_grid } => {
                out(retract::inward_membership(SetRef::Body(ctx.body), x, z, ctx.p, *r_grid, tol.gauge)?)
            }
            Task::OutwardMembership { x, z, r_grid } => {
                out(retract::outward_membership(SetRef::Body(ctx.body), x, z, ctx.p, *r_grid, tol.gauge)?)
            }
            Task::FiniteHullMembership { generators, q } => {
                let ps = PointSet::new(generators.clone())?;
                let opts = pcore::HullSearch { seed: ctx.seed, ..pcore::HullSearch::default() };
                out(pcore::finite_hull_membership(&ps, q, ctx.p, &opts)?)
            }
            Task::HausdorffMnc { set, truncation } => {
                let s = SeqSet::new(set.clone(), ctx.p)?;
                out(json!({ "bracket": mnc::hausdorff_mnc(&s, *truncation, tol.gauge)?, "compact": s.is_compact() }))
            }
            Task::KuratowskiMnc { set, truncation } => {
                let s = SeqSet::new(set.clone(), ctx.p)?;
                out(json!({ "bracket": mnc::kuratowski_mnc(&s, *truncation, tol.gauge)?, "compact": s.is_compact() }))
            }
            Task::ClassifyOperator { coefficients, set, truncation } => {
                let op = DiagOperator::new(coefficients.clone())?;
                let s = SeqSet::new(set.clone(), ctx.p)?;
                out(mnc::classify_operator(&op, &s, ctx.p, *truncation, tol.gauge)?)
            }
            Task::KkmVerify { family, resolution } => {
                let fam = match family {
                    FamilySpec::Threshold { n, c } => kkm::threshold_family(*n, *c)?,
                    FamilySpec::Custom { generators, predicates } => KkmFamily::new(PointSet::new(generators.clone())?, predicates.clone())?,
                };
                let grid = SimplexGrid::new(fam.generators.len() - 1, *resolution)?;
                out(kkm::kkm_verify(&fam, &grid, ctx.p)?)
            }
            Task::ApproximateFixedPoint { steps, schedule, inner } => {
                let sched = schedule_from(*steps, schedule.as_ref())?;
                let t = fixedpoint::approximate_fixed_point(map()?, ctx.body, &sched, inner, &tol)?;
                let csv = t.to_csv();
                TaskOutput {
                    result: json!({
                        "steps": t.steps.len(),
                        "failed_steps": t.failed_steps(),
                        "bound_violations": t.bound_violations(),
                        "last": t.steps.last(),
                    }),
                    traces: vec![("trace".into(), csv)],
                }
            }
            Task::BestApproxCertificate { steps, inner, inward_samples } => {
                let opts = SolveOptions {
                    schedule: Schedule::geometric(*steps),
                    inner: inner.clone(),
                    tol,
                    inward_samples: *inward_samples,
                    seed: ctx.seed,
                };
                let (c, t) = fixedpoint::best_approx_certificate(map()?, ctx.body, &opts)?;
                TaskOutput { result: json!({ "certificate": c, "revalidated": c.revalidate() }), traces: vec![("trace".into(), t.to_csv())] }
            }
            Task::CheckBoundaryConditions { conditions, alpha, beta, samples, solve } => {
                let params = alpha.map(|a| PowerParams::new(a, beta.unwrap_or(0.0))).transpose()?;
                let m = map()?;
                let report = fixedpoint::check_boundary_conditions(m, ctx.body, conditions, params, *samples, ctx.seed, &tol)?;
                let conclusions: Vec<Value> = report
                    .results
                    .iter()
                    .filter(|r| r.satisfied)
                    .map(|r| json!({ "condition": r.condition, "conclusion": format!("fixed point exists under {}", r.condition.name()), "regime": m.class.regime() }))
                    .collect();
                let all = report.results.iter().all(|r| r.satisfied);
                let certificate = if *solve && all {
                    let opts = SolveOptions { tol, seed: ctx.seed, ..SolveOptions::default() };
                    Some(fixedpoint::best_approx_certificate(m, ctx.body, &opts)?.0)
                } else {
                    None
                };
                out(json!({ "report": report, "conclusions": conclusions, "certificate": certificate }))
            }
            Task::BirkhoffKelloggScan { starts, lambda_max } => {
                if !(*lambda_max > 1.0) {
                    return Err(Error::Parameter("lambda_max must exceed 1".into()));
                }
                let opts = BkOptions {
                    starts: *starts,
                    lambda_max: *lambda_max,
                    seed: ctx.seed,
                    solve: SolveOptions { tol, seed: ctx.seed, ..SolveOptions::default() },
                    ..BkOptions::default()
                };
                let scan = fixedpoint::birkhoff_kellogg_scan(map()?, ctx.body, &opts)?;
                out(json!({ "scan": scan, "resolved": scan.resolved() }))
            }
            Task::LeraySchauderEpsScan { lambdas, r_max, domain } => {
                let mut opts = EpsOptions { r_max: *r_max, ..EpsOptions::default() };
                if let Some(l) = lambdas {
                    opts.lambdas = l.clone();
                }
                let dom = (*domain == EpsDomain::Body).then_some(ctx.body);
                let r = fixedpoint::leray_schauder_eps_scan(map()?, dom, &opts)?;
                let csv = r.to_csv();
                TaskOutput { result: serde_json::to_value(&r).expect("results serialize"), traces: vec![("eps".into(), csv)] }
            }
            Task::RotheFixedPoint { samples } => {
                let s = BoundarySampling { samples: *samples, seed: ctx.seed };
                let opts = SolveOptions { tol, seed: ctx.seed, ..SolveOptions::default() };
                let c = fixedpoint::rothe_fixed_point(map()?, ctx.body, &s, &opts)?;
                out(json!({ "certificate": c, "revalidated": c.revalidate() }))
            }
            Task::HomotopySolve { homotopy, eps } => {
                let kind = ctx.map_kind.cloned().ok_or_else(|| Error::Parameter("homotopy needs a registry map".into()))?;
                let hk = match homotopy {
                    HomotopyChoice::LinearScaling => HomotopyKind::LinearScaling { map: kind },
                    HomotopyChoice::AffinePath { v } => HomotopyKind::AffinePath { map: kind, v: v.clone() },
                };
                let h = Homotopy::from_kind(hk, ctx.dim)?;
                let mut opts = HomotopyOptions { tol, seed: ctx.seed, ..HomotopyOptions::default() };
                if let Some(e) = eps {
                    opts.eps = e.clone();
                }
                let r = fixedpoint::homotopy_solve(&h, ctx.body, map()?.class, &opts)?;
                let csv = r.path_csv();
                TaskOutput {
                    result: json!({ "certificate": r.certificate, "revalidated": r.certificate.revalidate(), "assumptions": r.assumptions, "stages": r.stages.len(), "final_stage": r.stages.last() }),
                    traces: vec![("path".into(), csv)],
                }
            }
            Task::NonselfCondition { condition, samples } => {
                let s = BoundarySampling { samples: *samples, seed: ctx.seed };
                let opts = SolveOptions { tol, seed: ctx.seed, ..SolveOptions::default() };
                let o = fixedpoint::nonself_fixed_point(map()?, ctx.body, *condition, &s, &opts)?;
                let ok = o.certificate.revalidate();
                out(json!({ "outcome": o, "revalidated": ok }))
            }
        })
    }
}
