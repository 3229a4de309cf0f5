//! Search for invariant directions `F(x0) = λ x0`, `x0` on the boundary,
//! `λ > 1`, by normalized power iteration from many boundary starts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::certificate::{best_approx_certificate, Certificate, CertificateKind, CheckName, IdentityCheck, SolveOptions};
use super::map::MapSpec;
use crate::error::{Error, Result};
use crate::gauge::{self, PBody};
use crate::sampling;
use crate::vector::{self, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BkOptions {
    pub starts: usize,
    pub gamma: f64,
    pub max_iter: usize,
    /// Eigenvalues above this are discarded.
    pub lambda_max: f64,
    pub dedup: f64,
    pub seed: u64,
    pub solve: SolveOptions,
}

impl Default for BkOptions {
    fn default() -> Self {
        BkOptions { starts: 16, gamma: 0.5, max_iter: 2000, lambda_max: 1e6, dedup: 1e-6, seed: 0, solve: SolveOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BkScan {
    pub starts: usize,
    pub certificates: Vec<Certificate>,
    /// Best-approximation run made when no direction was found.
    pub alternative: Option<Certificate>,
}

impl BkScan {
    /// Either a direction was certified or the alternative found a fixed point.
    pub fn resolved(&self) -> bool {
        !self.certificates.is_empty()
            || self.alternative.as_ref().is_some_and(|c| c.kind == CertificateKind::FixedPoint)
    }
}

/// `v / P(v)^(1/p)`, or `None` for a vector with zero gauge.
fn normalize(body: &PBody, v: &[f64], tol: f64) -> Result<Option<Vector>> {
    let g = gauge::gauge(body, v, tol)?;
    if !(g > 0.0) || !g.is_finite() {
        return Ok(None);
    }
    Ok(Some(vector::scale(v, g.powf(-body.p().inv()))))
}

fn power_iterate(map: &MapSpec, body: &PBody, start: Vector, opts: &BkOptions) -> Result<Option<Vector>> {
    let tol = opts.solve.tol.gauge;
    let mut x = start;
    for _ in 0..opts.max_iter {
        let fx = map.eval(&x);
        if !vector::is_finite(&fx) {
            return Ok(None);
        }
        let Some(y) = normalize(body, &fx, tol)? else { return Ok(None) };
        let mix = vector::lerp(&x, &y, opts.gamma);
        let Some(next) = normalize(body, &mix, tol)? else { return Ok(None) };
        let delta = vector::dist_max(&next, &x);
        x = next;
        if delta <= 1e-13 {
            break;
        }
    }
    Ok(Some(x))
}

/// Builds an invariant-direction certificate at `x0`, or `None` if `x0` is
/// not an eigenvector with `1 < λ ≤ lambda_max`.
pub fn invariant_certificate(map: &MapSpec, body: &PBody, x0: &[f64], opts: &BkOptions) -> Result<Option<Certificate>> {
    let tol = &opts.solve.tol;
    let fx = map.eval(x0);
    let lambda = vector::dot(&fx, x0) / vector::dot(x0, x0);
    if !(lambda > 1.0 && lambda <= opts.lambda_max) {
        return Ok(None);
    }
    let res = vector::dist_max(&vector::scale(x0, lambda), &fx);
    let allowed = tol.solver * vector::max_abs(&fx).max(1.0);
    if res > allowed {
        return Ok(None);
    }
    let p = body.p().get();
    let gauge_point = gauge::gauge(body, x0, tol.gauge)?;
    let gauge_image = gauge::gauge(body, &fx, tol.gauge)?;
    let residual = gauge::gauge(body, &vector::sub(&fx, x0), tol.gauge)?;
    let checks = vec![
        IdentityCheck::new(CheckName::InvariantLambda, lambda, gauge_image.powf(1.0 / p), tol.identity),
        IdentityCheck::new(CheckName::InvariantResidual, res, 0.0, allowed),
        IdentityCheck::new(CheckName::BoundaryGauge, gauge_point, 1.0, tol.identity),
    ];
    let ok = checks.iter().all(|c| c.passed);
    Ok(Some(Certificate {
        kind: if ok { CertificateKind::InvariantDirection } else { CertificateKind::Inconclusive },
        map: map.name.clone(),
        p,
        point: x0.to_vec(),
        image: fx,
        gauge_point,
        gauge_image,
        residual,
        lambda: Some(lambda),
        floor: 0.0,
        class: map.class,
        regime: map.class.regime().to_string(),
        checks,
        inward_check: None,
        diagnostics: if ok { Vec::new() } else { vec!["eigenpair found but identity checks failed".into()] },
    }))
}

/// Multistart scan for invariant directions. Each start draws from its own
/// substream, so the result does not depend on thread scheduling. When
/// nothing is found the best-approximation solver runs as the alternative.
pub fn birkhoff_kellogg_scan(map: &MapSpec, body: &PBody, opts: &BkOptions) -> Result<BkScan> {
    if map.dim != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: map.dim });
    }
    if !(opts.gamma > 0.0 && opts.gamma <= 1.0) {
        return Err(Error::Parameter("damping gamma must lie in (0, 1]".into()));
    }
    let found: Vec<Option<Certificate>> = (0..opts.starts)
        .into_par_iter()
        .map(|i| -> Result<Option<Certificate>> {
            let mut rng = sampling::substream(opts.seed, i as u64);
            let start = body.sample_boundary(&mut rng, opts.solve.tol.gauge)?;
            match power_iterate(map, body, start, opts)? {
                Some(x) => invariant_certificate(map, body, &x, opts),
                None => Ok(None),
            }
        })
        .collect::<Result<_>>()?;
    let mut certificates: Vec<Certificate> = Vec::new();
    for c in found.into_iter().flatten() {
        if c.kind != CertificateKind::InvariantDirection {
            continue;
        }
        let dup = certificates.iter().any(|d| {
            vector::dist_max(&d.point, &c.point) <= opts.dedup
                && (d.lambda.unwrap_or(0.0) - c.lambda.unwrap_or(0.0)).abs() <= opts.dedup
        });
        if !dup {
            certificates.push(c);
        }
    }
    let alternative = if certificates.is_empty() {
        Some(best_approx_certificate(map, body, &opts.solve)?.0)
    } else {
        None
    };
    Ok(BkScan { starts: opts.starts, certificates, alternative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::map::{MapKind, MappingClass};
    use crate::pcore::PExponent;

    fn ball(pv: f64) -> PBody {
        PBody::pball(vec![1.0, 1.0], PExponent::new(pv).unwrap()).unwrap()
    }

    fn map(kind: MapKind) -> MapSpec {
        MapSpec::from_kind(kind, 2, MappingClass::OneSetContractive).unwrap()
    }

    #[test]
    fn doubling_has_lambda_two() {
        let s = birkhoff_kellogg_scan(&map(MapKind::Scale { c: 2.0 }), &ball(0.5), &BkOptions::default()).unwrap();
        assert!(!s.certificates.is_empty());
        for c in &s.certificates {
            assert!((c.lambda.unwrap() - 2.0).abs() < 1e-8);
            assert!(c.revalidate());
        }
    }

    #[test]
    fn rotation_has_none_and_falls_back() {
        let s = birkhoff_kellogg_scan(&map(MapKind::Rotation { degrees: 30.0, c: 2.0 }), &ball(1.0), &BkOptions::default()).unwrap();
        assert!(s.certificates.is_empty());
        assert_eq!(s.alternative.as_ref().unwrap().kind, CertificateKind::FixedPoint);
    }

    #[test]
    fn translation_direction() {
        let s = birkhoff_kellogg_scan(&map(MapKind::Translation { v: vec![0.5, 0.0] }), &ball(1.0), &BkOptions::default()).unwrap();
        assert_eq!(s.certificates.len(), 1);
        let c = &s.certificates[0];
        assert!((c.point[0] - 1.0).abs() < 1e-6 && (c.lambda.unwrap() - 1.5).abs() < 1e-6);
    }

    #[test]
    fn scan_is_deterministic() {
        let m = map(MapKind::Scale { c: 3.0 });
        let a = birkhoff_kellogg_scan(&m, &ball(0.7), &BkOptions::default()).unwrap();
        let b = birkhoff_kellogg_scan(&m, &ball(0.7), &BkOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
