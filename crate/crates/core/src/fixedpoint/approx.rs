//! The approximating scheme `x_n = r(z_n)`, `z_n = λ_n F(r(z_n))` with
//! `λ_n ↑ 1`, solved by damped Picard iteration.

use serde::{Deserialize, Serialize};

use super::map::MapSpec;
use super::Tolerances;
use crate::error::{Error, Result};
use crate::gauge::{self, PBody};
use crate::retract;
use crate::sampling;
use crate::vector::{self, Vector};

/// Strictly increasing sequence in `(0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Schedule(Vec<f64>);

impl Schedule {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidSchedule("schedule is empty".into()));
        }
        if lambdas.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(Error::InvalidSchedule("every λ_n must lie in (0, 1)".into()));
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSchedule("schedule must be strictly increasing".into()));
        }
        Ok(Schedule(lambdas))
    }

    /// `λ_n = 1 - 2^(-n)`, `n = 1..=steps`.
    pub fn geometric(steps: usize) -> Self {
        Schedule((1..=steps.clamp(1, 52)).map(|n| 1.0 - 0.5f64.powi(n as i32)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::geometric(30)
    }
}

impl TryFrom<Vec<f64>> for Schedule {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Schedule::new(v)
    }
}

impl From<Schedule> for Vec<f64> {
    fn from(s: Schedule) -> Self {
        s.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerOptions {
    /// Damping `γ` in `z ← (1-γ) z + γ G(z)`.
    pub gamma: f64,
    pub max_iter: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions { gamma: 0.5, max_iter: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerResult {
    pub z: Vector,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub last_delta: f64,
}

/// Damped Picard iteration for `z = G(z)`.
///
/// Once the step falls below `tol` the iteration keeps polishing for as
/// long as the step keeps shrinking, so the result sits at the rounding floor
/// rather than at `tol`.
pub fn damped_picard<G>(g: G, z0: Vector, gamma: f64, max_iter: usize, tol: f64, diverge_radius: f64) -> Result<InnerResult>
where
    G: Fn(&[f64]) -> Result<Vector>,
{
    let mut z = z0;
    let mut reached = false;
    let mut prev = f64::INFINITY;
    let mut last = f64::INFINITY;
    for k in 1..=max_iter {
        let w = g(&z)?;
        let next: Vector = z.iter().zip(&w).map(|(a, b)| (1.0 - gamma) * a + gamma * b).collect();
        let delta = vector::dist_max(&next, &z);
        z = next;
        last = delta;
        if !vector::is_finite(&z) || vector::norm2(&z) > diverge_radius {
            return Ok(InnerResult { z, iterations: k, converged: false, diverged: true, last_delta: delta });
        }
        if delta <= f64::MIN_POSITIVE {
            return Ok(InnerResult { z, iterations: k, converged: true, diverged: false, last_delta: delta });
        }
        if delta <= tol * vector::max_abs(&z).max(1.0) {
            reached = true;
        }
        if reached && delta >= prev {
            return Ok(InnerResult { z, iterations: k, converged: true, diverged: false, last_delta: delta });
        }
        prev = delta;
    }
    Ok(InnerResult { z, iterations: max_iter, converged: reached, diverged: false, last_delta: last })
}

/// Radius beyond which the inner iteration is declared divergent: ten times
/// the larger of the body's bound radius and the largest `|F|` seen on
/// probe points of the body.
pub fn divergence_radius(map: &MapSpec, body: &PBody, seed: u64) -> f64 {
    let mut rng = sampling::rng(seed);
    let mut m = vector::norm2(&map.eval(&vector::zeros(body.dim())));
    for _ in 0..64 {
        let y = body.sample_member(&mut rng);
        let v = vector::norm2(&map.eval(&y));
        if v.is_finite() {
            m = m.max(v);
        }
    }
    10.0 * body.bound_radius().max(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepCase {
    /// `z_n` is a member, so `x_n = z_n = λ_n F(x_n)`.
    Interior,
    /// `z_n` lies outside and `x_n` is its retraction to the boundary.
    Boundary,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterStep {
    pub n: usize,
    pub lambda: f64,
    pub x: Vector,
    pub z: Vector,
    /// `P_U(F(x_n) - x_n)`
    pub residual: f64,
    /// `((1 - λ_n) / λ_n)^p`
    pub bound: f64,
    pub case: StepCase,
    pub inner_iterations: usize,
    /// Interior steps only: `residual ≤ bound + 10·solver_tol`.
    pub bound_respected: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterTrace {
    pub map: String,
    pub p: f64,
    pub steps: Vec<IterStep>,
}

impl IterTrace {
    pub fn last_good(&self) -> Option<&IterStep> {
        self.steps.iter().rev().find(|s| s.case != StepCase::Failed)
    }

    pub fn failed_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.case == StepCase::Failed).count()
    }

    /// Interior steps violating the residual bound.
    pub fn bound_violations(&self) -> usize {
        self.steps.iter().filter(|s| s.bound_respected == Some(false)).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,lambda,case,residual,bound,inner_iterations");
        let dim = self.steps.first().map_or(0, |s| s.x.len());
        for i in 0..dim {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for s in &self.steps {
            let case = match s.case {
                StepCase::Interior => "interior",
                StepCase::Boundary => "boundary",
                StepCase::Failed => "failed",
            };
            out.push_str(&format!("{},{:e},{},{:e},{:e},{}", s.n, s.lambda, case, s.residual, s.bound, s.inner_iterations));
            for v in &s.x {
                out.push_str(&format!(",{v:e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the scheme over `schedule`, warm-starting each inner solve from the
/// previous `z` (the first from 0).
pub fn approximate_fixed_point(
    map: &MapSpec,
    body: &PBody,
    schedule: &Schedule,
    inner: &InnerOptions,
    tol: &Tolerances,
) -> Result<IterTrace> {
    if map.dim != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: map.dim });
    }
    if !(inner.gamma > 0.0 && inner.gamma <= 1.0) {
        return Err(Error::Parameter("damping gamma must lie in (0, 1]".into()));
    }
    let p = body.p();
    let radius = divergence_radius(map, body, 0);
    let mut z = vector::zeros(body.dim());
    let mut steps = Vec::with_capacity(schedule.as_slice().len());
    for (k, &lambda) in schedule.as_slice().iter().enumerate() {
        let g = |v: &[f64]| -> Result<Vector> {
            let x = retract::retract_point(body, v, tol.gauge)?;
            Ok(vector::scale(&map.eval(&x), lambda))
        };
        let res = damped_picard(g, z.clone(), inner.gamma, inner.max_iter, tol.solver, radius)?;
        let bound = ((1.0 - lambda) / lambda).powf(p.get());
        let ok = res.converged && !res.diverged;
        let x = if ok { retract::retract_point(body, &res.z, tol.gauge)? } else { res.z.clone() };
        let case = if !ok {
            StepCase::Failed
        } else if body.contains(&res.z) {
            StepCase::Interior
        } else {
            StepCase::Boundary
        };
        let residual = if vector::is_finite(&x) {
            gauge::gauge(body, &vector::sub(&map.eval(&x), &x), tol.gauge)?
        } else {
            f64::INFINITY
        };
        let bound_respected = (case == StepCase::Interior).then_some(residual <= bound + 10.0 * tol.solver);
        steps.push(IterStep {
            n: k + 1,
            lambda,
            x,
            z: res.z.clone(),
            residual,
            bound,
            case,
            inner_iterations: res.iterations,
            bound_respected,
        });
        z = if ok { res.z } else { vector::zeros(body.dim()) };
    }
    Ok(IterTrace { map: map.name.clone(), p: p.get(), steps })
}
