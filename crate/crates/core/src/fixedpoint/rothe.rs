//! Rothe-type existence and the non-self conditions for `F: Ū → E`.

use serde::{Deserialize, Serialize};

use super::certificate::{best_approx_certificate, Certificate, SolveOptions};
use super::map::MapSpec;
use crate::error::{Error, Result};
use crate::gauge::{self, PBody};
use crate::retract::{self, SetRef};
use crate::sampling;
use crate::vector::{self, Vector};

/// Boundary sampling budget for precondition checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundarySampling {
    pub samples: usize,
    pub seed: u64,
}

impl Default for BoundarySampling {
    fn default() -> Self {
        BoundarySampling { samples: 128, seed: 0 }
    }
}

fn boundary_points(body: &PBody, s: &BoundarySampling, tol: f64) -> Result<Vec<Vector>> {
    let mut rng = sampling::rng(s.seed);
    (0..s.samples).map(|_| body.sample_boundary(&mut rng, tol)).collect()
}

/// Checks `F(∂U) ⊆ Ū` on boundary samples, then runs the
/// best-approximation solver.
pub fn rothe_fixed_point(map: &MapSpec, body: &PBody, sampling: &BoundarySampling, opts: &SolveOptions) -> Result<Certificate> {
    if map.dim != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: map.dim });
    }
    for x in boundary_points(body, sampling, opts.tol.gauge)? {
        let g = gauge::gauge(body, &map.eval(&x), opts.tol.gauge)?;
        if g > 1.0 + opts.tol.gauge {
            return Err(Error::Precondition { reason: format!("F maps a boundary point outside the body (P(F(x)) = {g})"), witness: x });
        }
    }
    Ok(best_approx_certificate(map, body, opts)?.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonSelfCondition {
    /// Some inward point is strictly closer to `F(x)` than `x` is.
    CloserInwardPoint,
    /// `λx + (1-λ)F(x)` is inward for some `λ ∈ (-1, 1)`.
    InwardSegment,
    /// `F(x)` is inward.
    InwardImage,
    /// `F(x) = λx` never happens with `λ > 1`.
    NoOutwardRay,
    /// `P(F(x)) ≤ 1`.
    ImageInClosure,
    /// `P(F(x))^(1/p) - 1 ≤ P(F(x) - x)^(1/p)` with `P(F(x)) ≤ 1`.
    IdentityGap,
}

impl NonSelfCondition {
    pub const ALL: [NonSelfCondition; 6] = [
        NonSelfCondition::CloserInwardPoint,
        NonSelfCondition::InwardSegment,
        NonSelfCondition::InwardImage,
        NonSelfCondition::NoOutwardRay,
        NonSelfCondition::ImageInClosure,
        NonSelfCondition::IdentityGap,
    ];

    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
    }
}

const R_GRID: f64 = 1e-3;
const SEGMENT_GRID: usize = 40;
const COLLINEAR_TOL: f64 = 1e-9;

fn inward(body: &PBody, x: &[f64], z: &[f64], tol: f64) -> Result<bool> {
    Ok(retract::inward_membership(SetRef::Body(body), x, z, body.p(), R_GRID, tol)?.member)
}

/// Evaluates `cond` at the boundary point `x`.
pub fn nonself_holds_at(map: &MapSpec, body: &PBody, cond: NonSelfCondition, x: &[f64], opts: &SolveOptions) -> Result<bool> {
    let tol = opts.tol.gauge;
    let fx = map.eval(x);
    Ok(match cond {
        NonSelfCondition::CloserInwardPoint => {
            let own = gauge::gauge(body, &vector::sub(&fx, x), tol)?;
            if own <= opts.tol.solver {
                return Ok(true);
            }
            let mut candidates = vec![retract::retract_point(body, &fx, tol)?];
            if body.p().is_one() {
                for k in 1..=8 {
                    candidates.push(vector::lerp(x, &fx, k as f64 / 8.0));
                }
            }
            let mut rng = sampling::rng(opts.seed ^ 0x5eed);
            for _ in 0..32 {
                candidates.push(body.sample_member(&mut rng));
            }
            let mut found = false;
            for y in candidates {
                if !inward(body, x, &y, tol)? {
                    continue;
                }
                if gauge::gauge(body, &vector::sub(&fx, &y), tol)? < own - tol {
                    found = true;
                    break;
                }
            }
            found
        }
        NonSelfCondition::InwardSegment => {
            let mut found = false;
            for k in 1..SEGMENT_GRID {
                let l = -1.0 + 2.0 * k as f64 / SEGMENT_GRID as f64;
                let z: Vector = x.iter().zip(&fx).map(|(a, b)| l * a + (1.0 - l) * b).collect();
                if inward(body, x, &z, tol)? {
                    found = true;
                    break;
                }
            }
            found
        }
        NonSelfCondition::InwardImage => inward(body, x, &fx, tol)? || gauge::gauge(body, &fx, tol)? <= 1.0 + tol,
        NonSelfCondition::NoOutwardRay => {
            let l = vector::dot(&fx, x) / vector::dot(x, x);
            let off = vector::dist_max(&vector::scale(x, l), &fx);
            !(l > 1.0 && off <= COLLINEAR_TOL * vector::max_abs(&fx).max(1.0))
        }
        NonSelfCondition::ImageInClosure => gauge::gauge(body, &fx, tol)? <= 1.0 + tol,
        NonSelfCondition::IdentityGap => gauge::gauge(body, &fx, tol)? <= 1.0 + tol,
    })
}

/// `P(F)^(1/p) - 1 ≤ P(F - x)^(1/p)` at `x`.
pub fn gap_hypothesis_at(map: &MapSpec, body: &PBody, x: &[f64], tol: f64) -> Result<bool> {
    let fx = map.eval(x);
    let e = body.p().inv();
    let lhs = gauge::gauge(body, &fx, tol)?.powf(e) - 1.0;
    let rhs = gauge::gauge(body, &vector::sub(&fx, x), tol)?.powf(e);
    Ok(lhs <= rhs + 1e-6 * rhs.max(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonSelfOutcome {
    pub condition: NonSelfCondition,
    pub samples: usize,
    /// The additional gap hypothesis held at every sample.
    pub gap_hypothesis: bool,
    pub certificate: Certificate,
}

/// Checks `cond` on boundary samples; on success runs the
/// best-approximation solver and returns its certificate.
pub fn nonself_fixed_point(
    map: &MapSpec,
    body: &PBody,
    cond: NonSelfCondition,
    sampling: &BoundarySampling,
    opts: &SolveOptions,
) -> Result<NonSelfOutcome> {
    if map.dim != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: map.dim });
    }
    let mut gap = true;
    for x in boundary_points(body, sampling, opts.tol.gauge)? {
        if !nonself_holds_at(map, body, cond, &x, opts)? {
            return Err(Error::Precondition { reason: format!("{} fails at a boundary point", cond.name()), witness: x });
        }
        gap &= gap_hypothesis_at(map, body, &x, opts.tol.gauge)?;
    }
    let (certificate, _) = best_approx_certificate(map, body, opts)?;
    Ok(NonSelfOutcome { condition: cond, samples: sampling.samples, gap_hypothesis: gap, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::certificate::CertificateKind;
    use crate::fixedpoint::map::{MapKind, MappingClass};
    use crate::pcore::PExponent;

    fn ball(pv: f64) -> PBody {
        PBody::pball(vec![1.0, 1.0], PExponent::new(pv).unwrap()).unwrap()
    }

    fn map(kind: MapKind) -> MapSpec {
        MapSpec::from_kind(kind, 2, MappingClass::OneSetContractive).unwrap()
    }

    #[test]
    fn rothe_precondition() {
        let s = BoundarySampling { samples: 16, seed: 3 };
        let c = rothe_fixed_point(&map(MapKind::Scale { c: 0.5 }), &ball(0.5), &s, &SolveOptions::default()).unwrap();
        assert_eq!(c.kind, CertificateKind::FixedPoint);
        let e = rothe_fixed_point(&map(MapKind::Scale { c: 2.0 }), &ball(0.5), &s, &SolveOptions::default());
        assert!(matches!(e, Err(Error::Precondition { .. })));
    }

    #[test]
    fn half_scale_meets_every_nonself_condition() {
        let s = BoundarySampling { samples: 16, seed: 3 };
        for pv in [0.5, 1.0] {
            for c in NonSelfCondition::ALL {
                let o = nonself_fixed_point(&map(MapKind::Scale { c: 0.5 }), &ball(pv), c, &s, &SolveOptions::default()).unwrap();
                assert_eq!(o.certificate.kind, CertificateKind::FixedPoint, "{c:?} p={pv}");
            }
        }
    }

    #[test]
    fn doubling_has_outward_ray() {
        let s = BoundarySampling { samples: 4, seed: 3 };
        let e = nonself_fixed_point(&map(MapKind::Scale { c: 2.0 }), &ball(1.0), NonSelfCondition::NoOutwardRay, &s, &SolveOptions::default());
        assert!(matches!(e, Err(Error::Precondition { .. })));
    }
}
