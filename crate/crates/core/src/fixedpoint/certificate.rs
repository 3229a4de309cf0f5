//! Certificates: the numeric witness for a conclusion, with enough stored
//! fields to recheck every identity without rerunning the solver.

use serde::{Deserialize, Serialize};

use super::approx::{approximate_fixed_point, damped_picard, divergence_radius, InnerOptions, IterTrace, Schedule};
use super::map::{MapSpec, MappingClass};
use super::Tolerances;
use crate::error::Result;
use crate::gauge::{self, PBody};
use crate::retract;
use crate::sampling;
use crate::vector::{self, Vector};

/// Stored and recomputed values may differ by this much before
/// [`Certificate::revalidate`] rejects a certificate.
pub const REVALIDATE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    FixedPoint,
    BestApproximation,
    InvariantDirection,
    BoundarySolution,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    /// `P(F(x0) - x0)` against 0.
    FixedPointResidual,
    /// `P(F(x0) - x0)` against `(P(F(x0))^(1/p) - 1)^p`.
    BestApproximationIdentity,
    /// `P(x0)` against 1.
    BoundaryGauge,
    /// `λ` against `P(F(x0))^(1/p)`.
    InvariantLambda,
    /// `max |λ x0 - F(x0)|` against 0.
    InvariantResidual,
    /// `max |x0 - H(λ, x0)|` against 0.
    BoundarySolutionResidual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: CheckName,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub allowed: f64,
    pub passed: bool,
}

impl IdentityCheck {
    pub(crate) fn new(name: CheckName, lhs: f64, rhs: f64, allowed: f64) -> Self {
        let gap = (lhs - rhs).abs();
        IdentityCheck { name, lhs, rhs, gap, allowed, passed: gap <= allowed }
    }
}

/// Sampled check that no candidate point beats `x0` as an approximation
/// of `F(x0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InwardCheck {
    pub samples: usize,
    pub best_distance: f64,
    pub best_point: Vector,
    /// A candidate closer than `residual - identity_tol` was found.
    pub beaten: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub map: String,
    pub p: f64,
    pub point: Vector,
    /// `F(x0)`, or `H(λ, x0)` for boundary solutions.
    pub image: Vector,
    pub gauge_point: f64,
    pub gauge_image: f64,
    /// `P(image - point)`
    pub residual: f64,
    pub lambda: Option<f64>,
    /// Rounding floor added to the fixed-point tolerance.
    pub floor: f64,
    pub class: MappingClass,
    pub regime: String,
    pub checks: Vec<IdentityCheck>,
    pub inward_check: Option<InwardCheck>,
    pub diagnostics: Vec<String>,
}

impl Certificate {
    pub fn is_conclusive(&self) -> bool {
        self.kind != CertificateKind::Inconclusive
    }

    fn recompute(&self, name: CheckName) -> Option<(f64, f64)> {
        let inv = 1.0 / self.p;
        Some(match name {
            CheckName::FixedPointResidual => (self.residual, 0.0),
            CheckName::BestApproximationIdentity => {
                (self.residual, (self.gauge_image.powf(inv) - 1.0).max(0.0).powf(self.p))
            }
            CheckName::BoundaryGauge => (self.gauge_point, 1.0),
            CheckName::InvariantLambda => (self.lambda?, self.gauge_image.powf(inv)),
            CheckName::InvariantResidual => {
                let l = self.lambda?;
                (vector::dist_max(&vector::scale(&self.point, l), &self.image), 0.0)
            }
            CheckName::BoundarySolutionResidual => (vector::dist_max(&self.point, &self.image), 0.0),
        })
    }

    /// Recomputes every identity from the stored fields. Fails if a stored
    /// value drifted by more than [`REVALIDATE_TOL`], if a pass flag is
    /// inconsistent, or if a conclusive certificate carries a failed check.
    pub fn revalidate(&self) -> bool {
        for c in &self.checks {
            let Some((lhs, rhs)) = self.recompute(c.name) else {
                return false;
            };
            let gap = (lhs - rhs).abs();
            if (lhs - c.lhs).abs() > REVALIDATE_TOL || (rhs - c.rhs).abs() > REVALIDATE_TOL || (gap - c.gap).abs() > REVALIDATE_TOL {
                return false;
            }
            if c.passed != (c.gap <= c.allowed) {
                return false;
            }
            if self.is_conclusive() && !c.passed {
                return false;
            }
        }
        !(self.is_conclusive() && self.checks.is_empty())
    }
}

/// Options for the best-approximation solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub schedule: Schedule,
    pub inner: InnerOptions,
    pub tol: Tolerances,
    /// Candidates in the sampled best-approximation check.
    pub inward_samples: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            schedule: Schedule::default(),
            inner: InnerOptions::default(),
            tol: Tolerances::default(),
            inward_samples: 256,
            seed: 0,
        }
    }
}

/// `P(v)` for tiny `v`, computed as `|v|_∞^p · P(v / |v|_∞)` so the gauge
/// tolerance does not swamp it.
pub(crate) fn small_gauge(body: &PBody, v: &[f64], tol: f64) -> Result<f64> {
    let m = vector::max_abs(v);
    if m == 0.0 {
        return Ok(0.0);
    }
    Ok(m.powf(body.p().get()) * gauge::gauge(body, &vector::scale(v, 1.0 / m), tol)?)
}

/// Rounding floor `P(4 ε (|x0| + |F(x0)|))`.
fn residual_floor(body: &PBody, x0: &[f64], fx: &[f64], tol: f64) -> Result<f64> {
    let v: Vector = x0.iter().zip(fx).map(|(a, b)| 4.0 * f64::EPSILON * (a.abs() + b.abs())).collect();
    small_gauge(body, &v, tol)
}

fn inward_check(body: &PBody, fx: &[f64], residual: f64, opts: &SolveOptions) -> Result<InwardCheck> {
    let mut rng = sampling::rng(opts.seed);
    let mut best = f64::INFINITY;
    let mut best_point = vector::zeros(body.dim());
    for k in 0..opts.inward_samples {
        let y = if k % 2 == 0 { body.sample_member(&mut rng) } else { body.sample_boundary(&mut rng, opts.tol.gauge)? };
        let d = gauge::gauge(body, &vector::sub(fx, &y), opts.tol.gauge)?;
        if d < best {
            best = d;
            best_point = y;
        }
    }
    Ok(InwardCheck {
        samples: opts.inward_samples,
        best_distance: best,
        best_point,
        beaten: best < residual - opts.tol.identity,
    })
}

/// Classifies `x0` for `map`: a fixed point if the residual is below
/// tolerance, a best approximation if `x0` sits on the boundary, otherwise
/// inconclusive.
pub fn certify_point(map: &MapSpec, body: &PBody, x0: &[f64], opts: &SolveOptions) -> Result<Certificate> {
    let tol = &opts.tol;
    let p = body.p().get();
    let fx = map.eval(x0);
    let residual = gauge::gauge(body, &vector::sub(&fx, x0), tol.gauge)?;
    let gauge_point = gauge::gauge(body, x0, tol.gauge)?;
    let gauge_image = gauge::gauge(body, &fx, tol.gauge)?;
    let floor = residual_floor(body, x0, &fx, tol.gauge)?;
    let mut cert = Certificate {
        kind: CertificateKind::Inconclusive,
        map: map.name.clone(),
        p,
        point: x0.to_vec(),
        image: fx.clone(),
        gauge_point,
        gauge_image,
        residual,
        lambda: None,
        floor,
        class: map.class,
        regime: map.class.regime().to_string(),
        checks: Vec::new(),
        inward_check: None,
        diagnostics: Vec::new(),
    };
    if residual <= tol.solver + floor {
        cert.kind = CertificateKind::FixedPoint;
        cert.checks.push(IdentityCheck::new(CheckName::FixedPointResidual, residual, 0.0, tol.solver + floor));
        return Ok(cert);
    }
    if (gauge_point - 1.0).abs() <= tol.identity {
        let (lhs, rhs) = cert.recompute(CheckName::BestApproximationIdentity).unwrap_or_default();
        let identity = IdentityCheck::new(CheckName::BestApproximationIdentity, lhs, rhs, tol.identity);
        let boundary = IdentityCheck::new(CheckName::BoundaryGauge, gauge_point, 1.0, tol.identity);
        let ok = identity.passed && boundary.passed;
        cert.checks.push(identity);
        cert.checks.push(boundary);
        let ic = inward_check(body, &fx, residual, opts)?;
        if ic.beaten {
            cert.diagnostics.push(format!("sampled candidate at distance {} beats the residual {}", ic.best_distance, residual));
        }
        cert.inward_check = Some(ic);
        if ok {
            cert.kind = CertificateKind::BestApproximation;
        } else {
            cert.diagnostics.push("boundary point fails the best-approximation identity".into());
        }
        return Ok(cert);
    }
    cert.diagnostics.push(format!("residual {residual} above tolerance and P(x0) = {gauge_point} off the boundary"));
    Ok(cert)
}

/// Damped Picard on `z = F(r(z))` from the last iterate. The schedule stops
/// at `λ_n < 1`, which in a p-gauge leaves a residual of order
/// `(1 - λ_n)^p`; this closes the gap when the iteration converges.
fn polish(map: &MapSpec, body: &PBody, z0: &[f64], opts: &SolveOptions) -> Result<Option<Vector>> {
    let radius = divergence_radius(map, body, opts.seed);
    let tol = opts.tol.gauge;
    let g = |v: &[f64]| -> Result<Vector> { Ok(map.eval(&retract::retract_point(body, v, tol)?)) };
    let r = damped_picard(g, z0.to_vec(), opts.inner.gamma, opts.inner.max_iter, opts.tol.solver, radius)?;
    if !r.converged || r.diverged {
        return Ok(None);
    }
    Ok(Some(retract::retract_point(body, &r.z, tol)?))
}

/// Runs the approximating scheme and certifies its last good iterate.
pub fn best_approx_certificate(map: &MapSpec, body: &PBody, opts: &SolveOptions) -> Result<(Certificate, IterTrace)> {
    let trace = approximate_fixed_point(map, body, &opts.schedule, &opts.inner, &opts.tol)?;
    let cert = match trace.last_good() {
        Some(step) => {
            let mut c = certify_point(map, body, &step.x, opts)?;
            if c.kind != CertificateKind::FixedPoint {
                if let Some(x) = polish(map, body, &step.z, opts)? {
                    let polished = certify_point(map, body, &x, opts)?;
                    if polished.kind == CertificateKind::FixedPoint {
                        c = polished;
                        c.diagnostics.push("final iterate polished at λ = 1".into());
                    }
                }
            }
            if trace.failed_steps() > 0 {
                c.diagnostics.push(format!("{} schedule steps failed to converge", trace.failed_steps()));
            }
            c
        }
        None => Certificate {
            kind: CertificateKind::Inconclusive,
            map: map.name.clone(),
            p: body.p().get(),
            point: Vec::new(),
            image: Vec::new(),
            gauge_point: f64::NAN,
            gauge_image: f64::NAN,
            residual: f64::NAN,
            lambda: None,
            floor: 0.0,
            class: map.class,
            regime: map.class.regime().to_string(),
            checks: Vec::new(),
            inward_check: None,
            diagnostics: vec!["every schedule step failed".into()],
        },
    };
    Ok((cert, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::map::MapKind;
    use crate::pcore::PExponent;

    fn ball(pv: f64) -> PBody {
        PBody::pball(vec![1.0, 1.0], PExponent::new(pv).unwrap()).unwrap()
    }

    #[test]
    fn translation_gives_best_approximation() {
        for pv in [0.5, 1.0] {
            let m = MapSpec::from_kind(MapKind::Translation { v: vec![0.5, 0.0] }, 2, MappingClass::OneSetContractive).unwrap();
            let (c, _) = best_approx_certificate(&m, &ball(pv), &SolveOptions::default()).unwrap();
            assert_eq!(c.kind, CertificateKind::BestApproximation, "{c:?}");
            assert!(c.revalidate());
            assert!(!c.inward_check.as_ref().unwrap().beaten);
        }
    }

    #[test]
    fn tampered_certificate_fails() {
        let m = MapSpec::from_kind(MapKind::Scale { c: 0.5 }, 2, MappingClass::Condensing).unwrap();
        let (mut c, _) = best_approx_certificate(&m, &ball(0.5), &SolveOptions::default()).unwrap();
        assert_eq!(c.kind, CertificateKind::FixedPoint);
        assert!(c.revalidate());
        c.residual = 1e-3;
        assert!(!c.revalidate());
    }

    #[test]
    fn round_trip_revalidates() {
        let m = MapSpec::from_kind(MapKind::Scale { c: 2.0 }, 2, MappingClass::Condensing).unwrap();
        let (c, _) = best_approx_certificate(&m, &ball(0.5), &SolveOptions::default()).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        let back: Certificate = serde_json::from_str(&s).unwrap();
        assert!(back.revalidate());
    }
}
