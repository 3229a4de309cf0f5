//! Boundary conditions on `F` evaluated through the gauges
//! `P(F(x))`, `P(x)`, `P(F(x) - x)` and `P(F(x) + x)` at boundary points.

use serde::{Deserialize, Serialize};

use super::certificate::{best_approx_certificate, Certificate, SolveOptions};
use super::map::MapSpec;
use crate::error::{Error, Result};
use crate::gauge::{self, PBody};
use crate::sampling;
use crate::vector::{self, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// `P(F) ≤ P(x)`
    Rothe,
    /// `P(F) ≤ P(F - x)`
    Petryshyn,
    /// `P(F)^(2/p) ≤ P(F - x)^(2/p) + P(x)^(2/p)`
    Altman,
    ImageLePoint,
    ImageLeDisplacement,
    /// `P(F + x) ≤ P(F)`
    SumLeImage,
    /// `P(F + x) ≤ P(x)`
    SumLePoint,
    /// `P(F + x) ≤ P(F - x)`
    SumLeDisplacement,
    /// `P(F) P(F + x) ≤ P(x)^2`
    ImageSumLePointSq,
    /// `P(F) P(F + x) ≤ P(F - x) P(x)`
    ImageSumLeDisplacementPoint,
    /// `P(F - x)^(α/p) ≥ P(F)^((α+β)/p) P(x)^(-β/p) - P(x)^(α/p)`
    DisplacementPower,
    /// `P(F + x)^((α+β)/p) ≤ P(F)^(α/p) P(x)^(β/p) + P(x)^((α+β)/p)`
    SumPower,
    /// `P(F - x)^(α/p) P(x)^(β/p) ≥ P(F)^(α/p) P(F + x)^(β/p) - P(x)^((α+β)/p)`
    MixedPower,
    /// `P(F + x)^((α+β)/p) ≤ P(F - x)^(α/p) P(x)^(β/p) + P(F)^(β/p) P(x)^(α/p)`
    SumDisplacementPower,
}

impl BoundaryCondition {
    pub const ALL: [BoundaryCondition; 14] = [
        BoundaryCondition::Rothe,
        BoundaryCondition::Petryshyn,
        BoundaryCondition::Altman,
        BoundaryCondition::ImageLePoint,
        BoundaryCondition::ImageLeDisplacement,
        BoundaryCondition::SumLeImage,
        BoundaryCondition::SumLePoint,
        BoundaryCondition::SumLeDisplacement,
        BoundaryCondition::ImageSumLePointSq,
        BoundaryCondition::ImageSumLeDisplacementPoint,
        BoundaryCondition::DisplacementPower,
        BoundaryCondition::SumPower,
        BoundaryCondition::MixedPower,
        BoundaryCondition::SumDisplacementPower,
    ];

    pub fn needs_params(self) -> bool {
        matches!(
            self,
            BoundaryCondition::DisplacementPower
                | BoundaryCondition::SumPower
                | BoundaryCondition::MixedPower
                | BoundaryCondition::SumDisplacementPower
        )
    }

    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
    }
}

/// Exponents of the power conditions; `α > 1`, `β ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub alpha: f64,
    pub beta: f64,
}

impl PowerParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::Parameter(format!("alpha must exceed 1, got {alpha}")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Parameter(format!("beta must be non-negative, got {beta}")));
        }
        Ok(PowerParams { alpha, beta })
    }
}

/// `(t - 1)^α - t^(α+β) + 1`, decreasing on `t ≥ 1`.
pub fn displacement_gap_function(alpha: f64, beta: f64, t: f64) -> f64 {
    (t - 1.0).powf(alpha) - t.powf(alpha + beta) + 1.0
}

/// `(t + 1)^(α+β) - t^α - 1`, increasing on `t ≥ 0`.
pub fn sum_gap_function(alpha: f64, beta: f64, t: f64) -> f64 {
    (t + 1.0).powf(alpha + beta) - t.powf(alpha) - 1.0
}

/// Checks monotonicity of `f` on an `n`-point grid over `[lo, hi]`.
pub fn is_monotone_on(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, decreasing: bool) -> bool {
    let n = n.max(2);
    let vals: Vec<f64> = (0..n).map(|k| f(lo + (hi - lo) * k as f64 / (n - 1) as f64)).collect();
    vals.windows(2).all(|w| {
        let slack = 1e-12 * w[0].abs().max(1.0);
        if decreasing {
            w[1] <= w[0] + slack
        } else {
            w[1] >= w[0] - slack
        }
    })
}

/// Gauge values at one boundary point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeQuad {
    pub point: f64,
    pub image: f64,
    pub displacement: f64,
    pub sum: f64,
}

impl GaugeQuad {
    pub fn at(map: &MapSpec, body: &PBody, x: &[f64], tol: f64) -> Result<Self> {
        let fx = map.eval(x);
        Ok(GaugeQuad {
            point: gauge::gauge(body, x, tol)?,
            image: gauge::gauge(body, &fx, tol)?,
            displacement: gauge::gauge(body, &vector::sub(&fx, x), tol)?,
            sum: gauge::gauge(body, &vector::add(&fx, x), tol)?,
        })
    }
}

/// `(lhs, rhs)` of the condition written as `lhs ≤ rhs`.
pub fn condition_sides(c: BoundaryCondition, g: &GaugeQuad, p: f64, params: Option<PowerParams>) -> Result<(f64, f64)> {
    let e = 1.0 / p;
    let (f, x, d, s) = (g.image, g.point, g.displacement, g.sum);
    let pw = || params.ok_or_else(|| Error::Parameter(format!("{} needs alpha and beta", c.name())));
    Ok(match c {
        BoundaryCondition::Rothe | BoundaryCondition::ImageLePoint => (f, x),
        BoundaryCondition::Petryshyn | BoundaryCondition::ImageLeDisplacement => (f, d),
        BoundaryCondition::Altman => (f.powf(2.0 * e), d.powf(2.0 * e) + x.powf(2.0 * e)),
        BoundaryCondition::SumLeImage => (s, f),
        BoundaryCondition::SumLePoint => (s, x),
        BoundaryCondition::SumLeDisplacement => (s, d),
        BoundaryCondition::ImageSumLePointSq => (f * s, x * x),
        BoundaryCondition::ImageSumLeDisplacementPoint => (f * s, d * x),
        BoundaryCondition::DisplacementPower => {
            let PowerParams { alpha: a, beta: b } = pw()?;
            (f.powf((a + b) * e) * x.powf(-b * e) - x.powf(a * e), d.powf(a * e))
        }
        BoundaryCondition::SumPower => {
            let PowerParams { alpha: a, beta: b } = pw()?;
            (s.powf((a + b) * e), f.powf(a * e) * x.powf(b * e) + x.powf((a + b) * e))
        }
        BoundaryCondition::MixedPower => {
            let PowerParams { alpha: a, beta: b } = pw()?;
            (f.powf(a * e) * s.powf(b * e) - x.powf((a + b) * e), d.powf(a * e) * x.powf(b * e))
        }
        BoundaryCondition::SumDisplacementPower => {
            let PowerParams { alpha: a, beta: b } = pw()?;
            (s.powf((a + b) * e), d.powf(a * e) * x.powf(b * e) + f.powf(b * e) * x.powf(a * e))
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition: BoundaryCondition,
    pub satisfied: bool,
    pub violations: usize,
    /// Smallest `rhs - lhs` over the samples.
    pub worst_margin: f64,
    pub witness: Option<Vector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub samples: usize,
    pub params: Option<PowerParams>,
    pub results: Vec<ConditionResult>,
}

impl ConditionReport {
    pub fn get(&self, c: BoundaryCondition) -> Option<&ConditionResult> {
        self.results.iter().find(|r| r.condition == c)
    }
}

/// Evaluates `conditions` on `samples` random boundary points. A sample
/// passes when `lhs ≤ rhs + tol · max(1, |lhs|, |rhs|)`.
pub fn check_boundary_conditions(
    map: &MapSpec,
    body: &PBody,
    conditions: &[BoundaryCondition],
    params: Option<PowerParams>,
    samples: usize,
    seed: u64,
    tol: &super::Tolerances,
) -> Result<ConditionReport> {
    if map.dim != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: map.dim });
    }
    if let Some(pp) = params {
        PowerParams::new(pp.alpha, pp.beta)?;
    }
    if let Some(c) = conditions.iter().find(|c| c.needs_params()) {
        if params.is_none() {
            return Err(Error::Parameter(format!("{} needs alpha and beta", c.name())));
        }
    }
    let p = body.p().get();
    let mut rng = sampling::rng(seed);
    let mut results: Vec<ConditionResult> = conditions
        .iter()
        .map(|&c| ConditionResult { condition: c, satisfied: true, violations: 0, worst_margin: f64::INFINITY, witness: None })
        .collect();
    for _ in 0..samples {
        let x = body.sample_boundary(&mut rng, tol.gauge)?;
        let g = GaugeQuad::at(map, body, &x, tol.gauge)?;
        for r in results.iter_mut() {
            let (lhs, rhs) = condition_sides(r.condition, &g, p, params)?;
            let margin = rhs - lhs;
            let slack = tol.identity * lhs.abs().max(rhs.abs()).max(1.0);
            if margin < r.worst_margin {
                r.worst_margin = margin;
            }
            if !(margin >= -slack) {
                r.violations += 1;
                r.satisfied = false;
                if r.witness.is_none() {
                    r.witness = Some(x.clone());
                }
            }
        }
    }
    Ok(ConditionReport { samples, params, results })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionOutcome {
    pub condition: BoundaryCondition,
    pub report: ConditionReport,
    pub certificate: Certificate,
}

/// Checks `condition` on boundary samples and, if it holds, runs the
/// best-approximation solver. A violated condition is a precondition error
/// carrying the first offending point.
pub fn fixed_point_under(
    map: &MapSpec,
    body: &PBody,
    condition: BoundaryCondition,
    params: Option<PowerParams>,
    samples: usize,
    opts: &SolveOptions,
) -> Result<ConditionOutcome> {
    let report = check_boundary_conditions(map, body, &[condition], params, samples, opts.seed, &opts.tol)?;
    let r = &report.results[0];
    if !r.satisfied {
        return Err(Error::Precondition {
            reason: format!("{} fails on {} of {} boundary samples", condition.name(), r.violations, samples),
            witness: r.witness.clone().unwrap_or_default(),
        });
    }
    let (certificate, _) = best_approx_certificate(map, body, opts)?;
    Ok(ConditionOutcome { condition, report, certificate })
}
