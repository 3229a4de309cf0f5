//! Homotopy solver: fixed points of `H(1, ·)` reached through the maps
//!
//! `F_n(x) = H((1 - P(x))/ε_n, x / P(x)^(1/p))` if `P(x) ≥ 1 - ε_n`,
//! `F_n(x) = H(1, x / (1 - ε_n)^(1/p))` otherwise.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::approx::{damped_picard, divergence_radius, InnerOptions};
use super::certificate::{certify_point, Certificate, CertificateKind, CheckName, IdentityCheck, SolveOptions};
use super::ls::newton;
use super::map::{MapKind, MapSpec, MappingClass};
use super::Tolerances;
use crate::error::{Error, Result};
use crate::gauge::{self, PBody};
use crate::retract;
use crate::sampling;
use crate::vector::{self, Vector};

pub type HomotopyFn = Arc<dyn Fn(f64, &[f64]) -> Vector + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HomotopyKind {
    /// `H(t, x) = t F(x)`
    LinearScaling { map: MapKind },
    /// `H(t, x) = F(x) + t v`
    AffinePath { map: MapKind, v: Vec<f64> },
}

#[derive(Clone)]
pub struct Homotopy {
    pub name: String,
    pub dim: usize,
    pub kind: Option<HomotopyKind>,
    h: HomotopyFn,
}

impl fmt::Debug for Homotopy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Homotopy").field("name", &self.name).field("dim", &self.dim).field("kind", &self.kind).finish()
    }
}

impl Homotopy {
    pub fn from_kind(kind: HomotopyKind, dim: usize) -> Result<Self> {
        let (h, name): (HomotopyFn, String) = match &kind {
            HomotopyKind::LinearScaling { map } => {
                let m = MapSpec::from_kind(map.clone(), dim, MappingClass::Condensing)?;
                let name = format!("linear_scaling({})", m.name);
                (Arc::new(move |t: f64, x: &[f64]| vector::scale(&m.eval(x), t)), name)
            }
            HomotopyKind::AffinePath { map, v } => {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
                }
                let m = MapSpec::from_kind(map.clone(), dim, MappingClass::Condensing)?;
                let name = format!("affine_path({}, {v:?})", m.name);
                let v = v.clone();
                (Arc::new(move |t: f64, x: &[f64]| vector::add(&m.eval(x), &vector::scale(&v, t))), name)
            }
        };
        Ok(Homotopy { name, dim, kind: Some(kind), h })
    }

    pub fn custom(name: impl Into<String>, dim: usize, h: HomotopyFn) -> Self {
        Homotopy { name: name.into(), dim, kind: None, h }
    }

    #[inline]
    pub fn eval(&self, t: f64, x: &[f64]) -> Vector {
        (self.h)(t, x)
    }

    /// `H(t, ·)` as a map.
    pub fn at(&self, t: f64, class: MappingClass) -> MapSpec {
        let h = Arc::clone(&self.h);
        MapSpec::custom(format!("{}@t={t}", self.name), self.dim, class, Arc::new(move |x: &[f64]| h(t, x)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HomotopyOptions {
    /// `ε_n`, strictly decreasing in `(0, 1)`.
    pub eps: Vec<f64>,
    pub inner: InnerOptions,
    pub tol: Tolerances,
    /// Boundary samples for the assumption checks.
    pub samples: usize,
    /// Grid of `t` for the assumption checks and the traced path.
    pub t_steps: usize,
    pub seed: u64,
}

impl Default for HomotopyOptions {
    fn default() -> Self {
        HomotopyOptions {
            eps: (1..=20).map(|n| 0.5f64.powi(n + 1)).collect(),
            inner: InnerOptions::default(),
            tol: Tolerances::default(),
            samples: 64,
            t_steps: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Interior,
    Collar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyStage {
    pub eps: f64,
    pub u: Vector,
    pub gauge: f64,
    pub branch: Branch,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionChecks {
    /// Smallest `max |H(t, x) - x|` over boundary samples and the `t` grid.
    pub min_boundary_gap: f64,
    /// No sampled boundary point is fixed and the traced path stays inside.
    pub no_boundary_fixed_point: bool,
    /// `H(0, x) ∈ U` on every boundary sample.
    pub start_maps_into_body: bool,
    pub witness: Option<Vector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: f64,
    pub x: Option<Vector>,
    pub gauge: Option<f64>,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyResult {
    pub certificate: Certificate,
    pub assumptions: AssumptionChecks,
    pub stages: Vec<HomotopyStage>,
    pub path: Vec<PathPoint>,
}

impl HomotopyResult {
    pub fn path_csv(&self) -> String {
        let mut out = String::from("t,gauge,residual");
        let dim = self.certificate.point.len();
        for i in 0..dim {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for p in &self.path {
            out.push_str(&format!("{:e},{},{:e}", p.t, p.gauge.map(|g| format!("{g:e}")).unwrap_or_default(), p.residual));
            match &p.x {
                Some(x) => x.iter().for_each(|v| out.push_str(&format!(",{v:e}"))),
                None => (0..dim).for_each(|_| out.push(',')),
            }
            out.push('\n');
        }
        out
    }
}

fn f_n(h: &Homotopy, body: &PBody, eps: f64, x: &[f64], tol: f64) -> Result<Vector> {
    let p = body.p();
    let g = gauge::gauge(body, x, tol)?;
    if g >= 1.0 - eps {
        if g == 0.0 {
            return Ok(h.eval(1.0, x));
        }
        let t = ((1.0 - g) / eps).clamp(0.0, 1.0);
        Ok(h.eval(t, &vector::scale(x, g.powf(-p.inv()))))
    } else {
        Ok(h.eval(1.0, &vector::scale(x, (1.0 - eps).powf(-p.inv()))))
    }
}

fn check_assumptions(h: &Homotopy, body: &PBody, opts: &HomotopyOptions) -> Result<AssumptionChecks> {
    let mut rng = sampling::rng(opts.seed);
    let mut min_gap = f64::INFINITY;
    let mut into = true;
    let mut witness = None;
    for _ in 0..opts.samples {
        let x = body.sample_boundary(&mut rng, opts.tol.gauge)?;
        if gauge::gauge(body, &h.eval(0.0, &x), opts.tol.gauge)? > 1.0 + opts.tol.gauge {
            into = false;
            witness.get_or_insert_with(|| x.clone());
        }
        for k in 0..=opts.t_steps {
            let t = k as f64 / opts.t_steps.max(1) as f64;
            let gap = vector::dist_max(&h.eval(t, &x), &x);
            if gap < min_gap {
                min_gap = gap;
            }
        }
    }
    Ok(AssumptionChecks {
        min_boundary_gap: min_gap,
        no_boundary_fixed_point: min_gap > opts.tol.solver,
        start_maps_into_body: into,
        witness,
    })
}

fn trace_path(h: &Homotopy, body: &PBody, opts: &HomotopyOptions) -> Result<Vec<PathPoint>> {
    let n = opts.t_steps.max(1);
    let mut start = vector::zeros(h.dim);
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let sol = newton(|x: &[f64]| vector::sub(x, &h.eval(t, x)), &start, 100, 1e-12);
        match sol {
            Some((x, r)) => {
                let g = gauge::gauge(body, &x, opts.tol.gauge).ok();
                start = x.clone();
                out.push(PathPoint { t, x: Some(x), gauge: g, residual: r });
            }
            None => out.push(PathPoint { t, x: None, gauge: None, residual: f64::INFINITY }),
        }
    }
    Ok(out)
}

/// Runs the `F_n` scheme, then certifies the limit as a fixed point of
/// `H(1, ·)` (interior branch) or as a boundary solution `H(t, x) = x`
/// (collar branch).
pub fn homotopy_solve(h: &Homotopy, body: &PBody, class: MappingClass, opts: &HomotopyOptions) -> Result<HomotopyResult> {
    if h.dim != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: h.dim });
    }
    if opts.eps.is_empty()
        || opts.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0))
        || opts.eps.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidSchedule("ε_n must be strictly decreasing in (0, 1)".into()));
    }
    let tol = opts.tol;
    let end = h.at(1.0, class);
    let mut assumptions = check_assumptions(h, body, opts)?;
    let radius = divergence_radius(&end, body, opts.seed).max(divergence_radius(&h.at(0.0, class), body, opts.seed));
    let mut u = vector::zeros(h.dim);
    let mut stages = Vec::with_capacity(opts.eps.len());
    for &eps in &opts.eps {
        let g = |v: &[f64]| -> Result<Vector> {
            let x = retract::retract_point(body, v, tol.gauge)?;
            f_n(h, body, eps, &x, tol.gauge)
        };
        let r = damped_picard(g, u.clone(), opts.inner.gamma, opts.inner.max_iter, tol.solver, radius)?;
        let ok = r.converged && !r.diverged;
        let x = retract::retract_point(body, &r.z, tol.gauge)?;
        let gx = gauge::gauge(body, &x, tol.gauge)?;
        let branch = if gx >= 1.0 - eps { Branch::Collar } else { Branch::Interior };
        stages.push(HomotopyStage { eps, u: r.z.clone(), gauge: gx, branch, converged: ok });
        if ok {
            u = r.z;
        }
    }
    let path = trace_path(h, body, opts)?;
    if let Some((_, x)) = path_crossing(h, body, &path, &tol) {
        assumptions.no_boundary_fixed_point = false;
        assumptions.witness.get_or_insert(x);
    }
    let solve_opts = SolveOptions { tol, seed: opts.seed, ..SolveOptions::default() };
    let last = stages.iter().rev().find(|s| s.converged).cloned();
    let mut fixed = None;
    if let Some(s) = &last {
        let x = retract::retract_point(body, &s.u, tol.gauge)?;
        let polished = newton(|y: &[f64]| vector::sub(y, &end.eval(y)), &x, 100, 1e-13)
            .map(|(y, _)| y)
            .filter(|y| gauge::gauge(body, y, tol.gauge).is_ok_and(|g| g <= 1.0 + tol.gauge));
        fixed = Some(certify_point(&end, body, polished.as_deref().unwrap_or(&x), &solve_opts)?);
    }
    let certificate = match fixed {
        Some(c) if c.kind == CertificateKind::FixedPoint => c,
        other => {
            let collar = last.as_ref().filter(|s| s.branch == Branch::Collar);
            if collar.is_some() || path_crossing(h, body, &path, &tol).is_some() {
                let (x, g, eps) = match collar {
                    Some(s) => (retract::retract_point(body, &s.u, tol.gauge)?, s.gauge, s.eps),
                    None => (vector::zeros(h.dim), 0.0, 1.0),
                };
                boundary_solution(h, &end, body, &x, g, eps, &path, &tol)?
            } else {
                other.unwrap_or_else(|| inconclusive(&end, body, "no homotopy stage converged"))
            }
        }
    };
    Ok(HomotopyResult { certificate, assumptions, stages, path })
}

fn inconclusive(end: &MapSpec, body: &PBody, why: &str) -> Certificate {
    Certificate {
        kind: CertificateKind::Inconclusive,
        map: end.name.clone(),
        p: body.p().get(),
        point: Vec::new(),
        image: Vec::new(),
        gauge_point: f64::NAN,
        gauge_image: f64::NAN,
        residual: f64::NAN,
        lambda: None,
        floor: 0.0,
        class: end.class,
        regime: end.class.regime().to_string(),
        checks: Vec::new(),
        inward_check: None,
        diagnostics: vec![why.to_string()],
    }
}

/// Locates `t` where the solution path `x(t) = H(t, x(t))` crosses the
/// boundary, by bisection between consecutive path points.
fn path_crossing(h: &Homotopy, body: &PBody, path: &[PathPoint], tol: &Tolerances) -> Option<(f64, Vector)> {
    let solve = |t: f64, start: &[f64]| newton(|x: &[f64]| vector::sub(x, &h.eval(t, x)), start, 100, 1e-13).map(|(x, _)| x);
    let pair = path.windows(2).find(|w| matches!((w[0].gauge, w[1].gauge), (Some(a), Some(b)) if a <= 1.0 && b > 1.0))?;
    let (mut lo, mut hi) = (pair[0].t, pair[1].t);
    let mut x = pair[0].x.clone()?;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let xm = solve(mid, &x)?;
        if gauge::gauge(body, &xm, tol.gauge).ok()? <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        x = xm;
        if hi - lo <= 1e-15 {
            break;
        }
    }
    let x = solve(lo, &x)?;
    Some((lo, x))
}

#[allow(clippy::too_many_arguments)]
fn boundary_solution(
    h: &Homotopy,
    end: &MapSpec,
    body: &PBody,
    x: &[f64],
    g: f64,
    eps: f64,
    path: &[PathPoint],
    tol: &Tolerances,
) -> Result<Certificate> {
    let (t, xb) = path_crossing(h, body, path, tol).unwrap_or_else(|| {
        let t = ((1.0 - g) / eps).clamp(0.0, 1.0);
        (t, if g > 0.0 { vector::scale(x, g.powf(-body.p().inv())) } else { x.to_vec() })
    });
    let image = h.eval(t, &xb);
    let gauge_point = gauge::gauge(body, &xb, tol.gauge)?;
    let gauge_image = gauge::gauge(body, &image, tol.gauge)?;
    let residual = gauge::gauge(body, &vector::sub(&image, &xb), tol.gauge)?;
    let res = vector::dist_max(&xb, &image);
    let checks = vec![
        IdentityCheck::new(CheckName::BoundarySolutionResidual, res, 0.0, tol.solver * vector::max_abs(&xb).max(1.0)),
        IdentityCheck::new(CheckName::BoundaryGauge, gauge_point, 1.0, tol.identity),
    ];
    let ok = checks.iter().all(|c| c.passed);
    Ok(Certificate {
        kind: if ok { CertificateKind::BoundarySolution } else { CertificateKind::Inconclusive },
        map: end.name.clone(),
        p: body.p().get(),
        point: xb,
        image,
        gauge_point,
        gauge_image,
        residual,
        lambda: Some(t),
        floor: 0.0,
        class: end.class,
        regime: end.class.regime().to_string(),
        checks,
        inward_check: None,
        diagnostics: if ok { Vec::new() } else { vec!["limit sits in the collar but H(t, x) = x does not hold".into()] },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcore::PExponent;

    fn ball(pv: f64) -> PBody {
        PBody::pball(vec![1.0, 1.0], PExponent::new(pv).unwrap()).unwrap()
    }

    #[test]
    fn linear_scaling_of_affine() {
        let kind = MapKind::Affine { a: vec![vec![0.5, 0.0], vec![0.0, 0.5]], b: vec![0.2, 0.0] };
        let h = Homotopy::from_kind(HomotopyKind::LinearScaling { map: kind }, 2).unwrap();
        let r = homotopy_solve(&h, &ball(0.5), MappingClass::Condensing, &HomotopyOptions::default()).unwrap();
        assert!(r.assumptions.no_boundary_fixed_point && r.assumptions.start_maps_into_body);
        assert_eq!(r.certificate.kind, CertificateKind::FixedPoint);
        assert!((r.certificate.point[0] - 0.4).abs() < 1e-8);
        let end = r.path.last().unwrap();
        assert!((end.x.as_ref().unwrap()[0] - 0.4).abs() < 1e-10);
        assert!(r.certificate.revalidate());
    }

    #[test]
    fn affine_path_to_boundary_hit() {
        // H(t, x) = x/2 + t (1, 0): H(1, ·) has its fixed point (2, 0) outside
        // the unit ball, and x = H(t, x) meets the boundary at t = 1/2.
        let h = Homotopy::from_kind(HomotopyKind::AffinePath { map: MapKind::Scale { c: 0.5 }, v: vec![1.0, 0.0] }, 2).unwrap();
        let r = homotopy_solve(&h, &ball(1.0), MappingClass::Condensing, &HomotopyOptions::default()).unwrap();
        assert!(!r.assumptions.no_boundary_fixed_point);
        assert_eq!(r.certificate.kind, CertificateKind::BoundarySolution, "{:?}", r.certificate);
        assert!((r.certificate.lambda.unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn eps_schedule_validated() {
        let h = Homotopy::from_kind(HomotopyKind::LinearScaling { map: MapKind::Negation }, 2).unwrap();
        let o = HomotopyOptions { eps: vec![0.1, 0.2], ..HomotopyOptions::default() };
        assert!(matches!(homotopy_solve(&h, &ball(1.0), MappingClass::Condensing, &o), Err(Error::InvalidSchedule(_))));
    }
}
