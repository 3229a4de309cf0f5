//! Minkowski p-gauge of a body given only by a membership oracle.
//!
//! `P_A(x) = inf{α > 0 : x ∈ α^(1/p) A}`. For a star-shaped body the predicate
//! "`α^(-1/p) x ∈ A`" is monotone in `α`, so the infimum is found by bisection.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pcore::{self, PExponent};
use crate::sampling::{self, Rng};
use crate::vector::{self, Vector};

pub type Membership = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Largest upper bracket tried before declaring the body unbounded.
pub const BRACKET_CAP: f64 = 1_152_921_504_606_846_976.0; // 2^60

const CONSTRUCTION_SEED: u64 = 0x5eed_b0d1;
const CONSTRUCTION_TRIALS: usize = 256;

/// Registry description of a built-in body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodySpec {
    /// `{Σ w_i |x_i|^p ≤ 1}`
    Pball { weights: Vec<f64> },
    /// `{|x|_2 ≤ r}`
    EuclideanDisk { radius: f64 },
    /// `{|x_i| ≤ h_i}`
    Box { half_widths: Vec<f64> },
}

impl BodySpec {
    pub fn build(&self, dim: usize, p: PExponent) -> Result<PBody> {
        match self {
            BodySpec::Pball { weights } => {
                if weights.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: weights.len() });
                }
                PBody::pball(weights.clone(), p)
            }
            BodySpec::EuclideanDisk { radius } => PBody::euclidean_disk(dim, *radius, p),
            BodySpec::Box { half_widths } => {
                if half_widths.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: half_widths.len() });
                }
                PBody::box_body(half_widths.clone(), p)
            }
        }
    }
}

/// A bounded p-convex body with `0` in its interior.
#[derive(Clone)]
pub struct PBody {
    name: String,
    membership: Membership,
    p: PExponent,
    bound_radius: f64,
    dim: usize,
    circled: bool,
    interior_radius: f64,
}

impl fmt::Debug for PBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PBody")
            .field("name", &self.name)
            .field("p", &self.p.get())
            .field("dim", &self.dim)
            .field("bound_radius", &self.bound_radius)
            .field("interior_radius", &self.interior_radius)
            .finish()
    }
}

impl PBody {
    /// Weighted p-ball `{Σ w_i |x_i|^p ≤ 1}`.
    pub fn pball(weights: Vec<f64>, p: PExponent) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidBody("p-ball weights must be positive".into()));
        }
        let bound = weights.iter().map(|w| w.powf(-p.inv())).fold(0.0_f64, f64::max);
        let dim = weights.len();
        let name = format!("pball(weights={weights:?}, p={})", p.get());
        let w = weights.clone();
        let membership: Membership = Arc::new(move |x: &[f64]| pcore::weighted_power_sum(&w, x, p) <= 1.0);
        PBody::validated(name, dim, p, bound, true, membership)
    }

    /// Euclidean ball of radius `r`, viewed as a p-convex body (convex sets
    /// containing 0 are p-convex for every p).
    pub fn euclidean_disk(dim: usize, radius: f64, p: PExponent) -> Result<Self> {
        if dim == 0 || !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidBody("disk needs dim >= 1 and radius > 0".into()));
        }
        let name = format!("euclidean_disk(r={radius}, dim={dim}, p={})", p.get());
        let membership: Membership = Arc::new(move |x: &[f64]| vector::norm2(x) <= radius);
        PBody::validated(name, dim, p, radius, true, membership)
    }

    /// Axis-aligned box `{|x_i| ≤ h_i}`.
    pub fn box_body(half_widths: Vec<f64>, p: PExponent) -> Result<Self> {
        if half_widths.is_empty() || half_widths.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::InvalidBody("box half-widths must be positive".into()));
        }
        let bound = vector::norm2(&half_widths);
        let dim = half_widths.len();
        let name = format!("box(half_widths={half_widths:?}, p={})", p.get());
        let h = half_widths.clone();
        let membership: Membership = Arc::new(move |x: &[f64]| x.iter().zip(&h).all(|(xi, hi)| xi.abs() <= *hi));
        PBody::validated(name, dim, p, bound, true, membership)
    }

    /// A user body. `circled` declares symmetry under `x ↦ -x`.
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        p: PExponent,
        bound_radius: f64,
        circled: bool,
        membership: Membership,
    ) -> Result<Self> {
        if dim == 0 || !(bound_radius.is_finite() && bound_radius > 0.0) {
            return Err(Error::InvalidBody("custom body needs dim >= 1 and a positive bound radius".into()));
        }
        PBody::validated(name.into(), dim, p, bound_radius, circled, membership)
    }

    fn validated(name: String, dim: usize, p: PExponent, bound_radius: f64, circled: bool, membership: Membership) -> Result<Self> {
        let mut body = PBody { name, membership, p, bound_radius, dim, circled, interior_radius: 0.0 };
        let origin = vector::zeros(dim);
        if !body.contains(&origin) {
            return Err(Error::InvalidBody(format!("{}: 0 is not a member", body.name)));
        }

        // 2·dim axis probes at a radius found by halving from the bound radius.
        let mut delta = bound_radius;
        let mut found = false;
        for _ in 0..64 {
            if body.axis_probes_inside(delta) {
                found = true;
                break;
            }
            delta *= 0.5;
        }
        if !found {
            return Err(Error::InvalidBody(format!("{}: 0 is not an interior point", body.name)));
        }
        body.interior_radius = delta;

        let mut rng = sampling::rng(CONSTRUCTION_SEED);
        let outside = bound_radius * (1.0 + 1e-9);
        let mut probes: Vec<Vector> = Vec::new();
        for i in 0..dim {
            for sign in [-1.0, 1.0] {
                let mut e = vector::zeros(dim);
                e[i] = sign * outside;
                probes.push(e);
            }
        }
        for _ in 0..64 {
            let d = sampling::gaussian(&mut rng, dim);
            probes.push(vector::scale(&d, outside / vector::norm2(&d)));
        }
        if let Some(bad) = probes.iter().find(|x| body.contains(x)) {
            return Err(Error::InvalidBody(format!(
                "{}: member {:?} lies outside the declared bound radius {}",
                body.name, bad, bound_radius
            )));
        }

        let report = pcore::check_p_convex(
            |x: &[f64]| body.contains(x),
            p,
            |r: &mut Rng| body.sample_member(r),
            CONSTRUCTION_SEED,
            CONSTRUCTION_TRIALS,
        );
        if let Some(v) = report.violation {
            return Err(Error::InvalidBody(format!(
                "{}: not {}-convex (x={:?}, y={:?}, u={})",
                body.name,
                p.get(),
                v.x,
                v.y,
                v.u
            )));
        }
        Ok(body)
    }

    fn axis_probes_inside(&self, delta: f64) -> bool {
        (0..self.dim).all(|i| {
            [-1.0, 1.0].iter().all(|sign| {
                let mut e = vector::zeros(self.dim);
                e[i] = sign * delta;
                self.contains(&e)
            })
        })
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        (self.membership)(x)
    }

    pub fn membership(&self) -> Membership {
        Arc::clone(&self.membership)
    }

    pub fn p(&self) -> PExponent {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound_radius(&self) -> f64 {
        self.bound_radius
    }

    pub fn interior_radius(&self) -> f64 {
        self.interior_radius
    }

    pub fn is_circled(&self) -> bool {
        self.circled
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Largest member on the ray through `d`, by bisection (member side).
    pub fn radial_extent(&self, d: &[f64]) -> f64 {
        let n = vector::norm2(d);
        if n == 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, self.bound_radius * (1.0 + 1e-9) / n);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.contains(&vector::scale(d, mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// A member drawn along a uniformly random ray at a uniform fraction of
    /// the radial extent.
    pub fn sample_member(&self, rng: &mut Rng) -> Vector {
        let d = sampling::gaussian(rng, self.dim);
        let t = self.radial_extent(&d);
        vector::scale(&d, sampling::unit(rng) * t)
    }

    /// A boundary point `d · P(d)^(-1/p)` for a random direction `d`.
    pub fn sample_boundary(&self, rng: &mut Rng, tol: f64) -> Result<Vector> {
        let d = sampling::gaussian(rng, self.dim);
        let g = eval_gauge(self, &d, tol)?;
        Ok(scaled_point(&d, g.upper, self.p))
    }
}

/// `α^(-1/p) · x`; the point whose membership decides `P(x) ≤ α`.
#[inline]
pub fn scaled_point(x: &[f64], alpha: f64, p: PExponent) -> Vector {
    vector::scale(x, alpha.powf(-p.inv()))
}

/// Result of a gauge bisection: `lower ≤ P(x) ≤ upper`, `upper - lower ≤ tol`.
/// `scaled_point(x, upper)` is always a member.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaugeValue {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub tol: f64,
}

/// Evaluates `P_A(x)` to absolute accuracy `tol`.
///
/// The bracket starts at `[0, 1]`, the upper end doubles until the predicate
/// holds (capped at 2^60), then bisects. A bracket straddling 1 is reported as
/// exactly 1.
pub fn eval_gauge(body: &PBody, x: &[f64], tol: f64) -> Result<GaugeValue> {
    if !(tol > 0.0) {
        return Err(Error::Parameter("gauge tolerance must be positive".into()));
    }
    if x.len() != body.dim {
        return Err(Error::DimensionMismatch { expected: body.dim, got: x.len() });
    }
    if vector::is_zero(x) {
        return Ok(GaugeValue { value: 0.0, lower: 0.0, upper: 0.0, tol });
    }
    if !vector::is_finite(x) {
        return Err(Error::Domain("gauge of a non-finite vector".into()));
    }
    let p = body.p;
    let inside = |alpha: f64| body.contains(&scaled_point(x, alpha, p));
    let (mut lo, mut hi) = (0.0, 1.0);
    if !inside(hi) {
        loop {
            lo = hi;
            hi *= 2.0;
            if hi > BRACKET_CAP {
                return Err(Error::UnboundedBody);
            }
            if inside(hi) {
                break;
            }
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let value = if lo <= 1.0 && 1.0 <= hi { 1.0 } else { 0.5 * (lo + hi) };
    Ok(GaugeValue { value, lower: lo, upper: hi, tol })
}

/// Convenience: the gauge value only.
pub fn gauge(body: &PBody, x: &[f64], tol: f64) -> Result<f64> {
    eval_gauge(body, x, tol).map(|g| g.value)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomogeneityWitness {
    pub x: Vector,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubadditivityWitness {
    pub x: Vector,
    pub y: Vector,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub samples: usize,
    pub zero_ok: bool,
    pub negative_scalars_checked: bool,
    pub homogeneity_violations: usize,
    pub homogeneity_witness: Option<HomogeneityWitness>,
    pub subadditivity_violations: usize,
    pub subadditivity_witness: Option<SubadditivityWitness>,
    pub note: Option<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.zero_ok && self.homogeneity_violations == 0 && self.subadditivity_violations == 0
    }
}

/// Samples the gauge axioms: `P(0) = 0`, p-homogeneity, subadditivity on
/// pairs drawn from the body. Negative scalars are only used for circled bodies.
pub fn verify_gauge_axioms(body: &PBody, samples: usize, seed: u64, tol: f64) -> Result<AxiomReport> {
    let mut rng = sampling::rng(seed);
    let zero_ok = eval_gauge(body, &vector::zeros(body.dim), tol)?.value == 0.0;
    let pv = body.p.get();
    let mut report = AxiomReport {
        samples,
        zero_ok,
        negative_scalars_checked: body.circled,
        homogeneity_violations: 0,
        homogeneity_witness: None,
        subadditivity_violations: 0,
        subadditivity_witness: None,
        note: (!body.circled).then(|| "body not circled: homogeneity checked for λ ≥ 0 only".to_string()),
    };
    for _ in 0..samples.max(1) {
        let base = body.sample_member(&mut rng);
        let x = vector::scale(&base, 3.0 * sampling::unit(&mut rng));
        let mut lambda = 4.0 * sampling::unit(&mut rng);
        if body.circled && sampling::unit(&mut rng) < 0.5 {
            lambda = -lambda;
        }
        let lhs = gauge(body, &vector::scale(&x, lambda), tol)?;
        let rhs = lambda.abs().powf(pv) * gauge(body, &x, tol)?;
        if (lhs - rhs).abs() > 2.0 * tol * (1.0 + lambda.abs().powf(pv)) {
            report.homogeneity_violations += 1;
            report.homogeneity_witness.get_or_insert(HomogeneityWitness { x: x.clone(), lambda, lhs, rhs });
        }

        let y = body.sample_member(&mut rng);
        let lhs = gauge(body, &vector::add(&base, &y), tol)?;
        let rhs = gauge(body, &base, tol)? + gauge(body, &y, tol)?;
        if lhs > rhs + 3.0 * tol {
            report.subadditivity_violations += 1;
            report
                .subadditivity_witness
                .get_or_insert(SubadditivityWitness { x: base.clone(), y, lhs, rhs });
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SandwichClass {
    pub gauge: f64,
    pub member: bool,
    /// Member of the open unit gauge ball `{P < 1}`.
    pub in_open_ball: bool,
}

pub fn classify_point(body: &PBody, x: &[f64], tol: f64) -> Result<SandwichClass> {
    let g = eval_gauge(body, x, tol)?;
    Ok(SandwichClass { gauge: g.value, member: body.contains(x), in_open_ball: g.value < 1.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub samples: usize,
    pub open_ball_members: usize,
    pub body_members: usize,
    /// Points with `P < 1` that are not members.
    pub inner_violations: usize,
    /// Members with `P > 1`.
    pub outer_violations: usize,
    pub witness: Option<Vector>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.inner_violations == 0 && self.outer_violations == 0
    }
}

/// Checks `{P < 1} ⊂ A ⊂ {P ≤ 1}` on points scattered around the boundary.
pub fn ball_sandwich_check(body: &PBody, samples: usize, seed: u64, tol: f64) -> Result<SandwichReport> {
    let mut rng = sampling::rng(seed);
    let mut report = SandwichReport {
        samples,
        open_ball_members: 0,
        body_members: 0,
        inner_violations: 0,
        outer_violations: 0,
        witness: None,
    };
    for _ in 0..samples.max(1) {
        let b = body.sample_boundary(&mut rng, tol)?;
        let x = vector::scale(&b, 0.5 + sampling::unit(&mut rng));
        let c = classify_point(body, &x, tol)?;
        if c.in_open_ball {
            report.open_ball_members += 1;
        }
        if c.member {
            report.body_members += 1;
        }
        let inner = c.in_open_ball && !c.member;
        let outer = c.member && c.gauge > 1.0;
        if inner {
            report.inner_violations += 1;
        }
        if outer {
            report.outer_violations += 1;
        }
        if (inner || outer) && report.witness.is_none() {
            report.witness = Some(x);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> PExponent {
        PExponent::new(v).unwrap()
    }

    fn unit_ball(pv: f64) -> PBody {
        PBody::pball(vec![1.0, 1.0], p(pv)).unwrap()
    }

    #[test]
    fn gauge_examples() {
        let b = unit_ball(0.5);
        let g = eval_gauge(&b, &[0.25, 0.25], 1e-12).unwrap();
        assert!((g.value - 1.0).abs() <= 1e-12);
        assert_eq!(eval_gauge(&b, &[0.0, 0.0], 1e-12).unwrap().value, 0.0);
        let g = eval_gauge(&b, &[4.0, 0.0], 1e-12).unwrap();
        assert!((g.value - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn gauge_of_small_and_large_points() {
        let b = unit_ball(0.5);
        let g = gauge(&b, &[1e-6, 0.0], 1e-12).unwrap();
        assert!((g - 1e-3).abs() < 1e-11);
        let g = gauge(&b, &[1e6, 0.0], 1e-9).unwrap();
        assert!((g - 1e3).abs() < 1e-8);
    }

    #[test]
    fn upper_bracket_is_member() {
        let b = unit_ball(0.25);
        let x = [0.7, -0.3];
        let g = eval_gauge(&b, &x, 1e-12).unwrap();
        assert!(b.contains(&scaled_point(&x, g.upper, b.p())));
    }

    #[test]
    fn bracket_cap_reports_unbounded_body() {
        // A half-plane never absorbs (1, 0); construction would reject it,
        // so build it directly.
        let half = PBody {
            name: "half-plane".into(),
            membership: Arc::new(|x: &[f64]| x[0] <= 0.0),
            p: p(1.0),
            bound_radius: 1.0,
            dim: 2,
            circled: true,
            interior_radius: 1.0,
        };
        assert_eq!(eval_gauge(&half, &[1.0, 0.0], 1e-9).unwrap_err(), Error::UnboundedBody);
    }

    #[test]
    fn construction_validation() {
        let shifted = PBody::custom(
            "shifted",
            2,
            p(0.5),
            6.0,
            false,
            Arc::new(|x: &[f64]| ((x[0] - 5.0).powi(2) + x[1].powi(2)).sqrt() <= 0.1),
        );
        assert!(matches!(shifted, Err(Error::InvalidBody(_))));

        let lying = PBody::custom("big", 2, p(1.0), 0.5, true, Arc::new(|x: &[f64]| vector::norm2(x) <= 1.0));
        assert!(matches!(lying, Err(Error::InvalidBody(_))));

        // Euclidean disk is convex, hence p-convex at every p.
        assert!(PBody::euclidean_disk(2, 1.0, p(0.5)).is_ok());
        // A 0.5-ball is not convex.
        let nonconvex = PBody::custom(
            "half-ball-as-convex",
            2,
            p(1.0),
            1.0,
            true,
            Arc::new(|x: &[f64]| x[0].abs().sqrt() + x[1].abs().sqrt() <= 1.0),
        );
        assert!(matches!(nonconvex, Err(Error::InvalidBody(_))));
    }

    #[test]
    fn axiom_examples() {
        let b = unit_ball(0.5);
        let lhs = gauge(&b, &[0.25, 0.25], 1e-12).unwrap();
        let rhs = gauge(&b, &[0.25, 0.0], 1e-12).unwrap() + gauge(&b, &[0.0, 0.25], 1e-12).unwrap();
        assert!((lhs - 1.0).abs() < 1e-11 && (rhs - 1.0).abs() < 1e-11);
        let g = gauge(&b, &[-0.5, 0.0], 1e-12).unwrap();
        assert!((g - 2f64.sqrt() * 0.5).abs() < 1e-11);

        let report = verify_gauge_axioms(&b, 1000, 3, 1e-10).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.negative_scalars_checked);
    }

    #[test]
    fn asymmetric_body_notes_positive_scalars_only() {
        let tri = PBody::custom(
            "shifted-disk",
            2,
            p(1.0),
            2.0,
            false,
            Arc::new(|x: &[f64]| ((x[0] - 0.5).powi(2) + x[1].powi(2)).sqrt() <= 1.0),
        )
        .unwrap();
        let report = verify_gauge_axioms(&tri, 200, 1, 1e-10).unwrap();
        assert!(!report.negative_scalars_checked);
        assert!(report.note.is_some());
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn sandwich_classification() {
        let b = unit_ball(0.5);
        // x = (s, 0) has gauge sqrt(s).
        let c = classify_point(&b, &[0.999f64.powi(2), 0.0], 1e-12).unwrap();
        assert!(c.member && c.in_open_ball);
        let c = classify_point(&b, &[1.0, 0.0], 1e-12).unwrap();
        assert!(c.member && !c.in_open_ball && c.gauge == 1.0);
        let c = classify_point(&b, &[1.001f64.powi(2), 0.0], 1e-12).unwrap();
        assert!(!c.member && !c.in_open_ball);

        let report = ball_sandwich_check(&b, 2000, 9, 1e-12).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.body_members > 0 && report.body_members < 2000);
    }

    #[test]
    fn body_spec_dimension_checked() {
        let spec = BodySpec::Pball { weights: vec![1.0, 2.0] };
        assert!(spec.build(3, p(0.5)).is_err());
        assert!(spec.build(2, p(0.5)).is_ok());
    }
}
