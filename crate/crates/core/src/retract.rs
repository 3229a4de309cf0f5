//! Radial retraction onto a p-convex body, p-gauge distances, and
//! inward/outward set membership.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::{self, GaugeValue, PBody};
use crate::pcore::{PExponent, PointSet};
use crate::sampling;
use crate::vector::{self, Vector};

/// Tolerance on the weight equations defining admissible `r`.
pub const WEIGHT_EQUATION_TOL: f64 = 1e-10;
/// Admissible values closer than this are merged.
pub const WITNESS_DEDUP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RetractionResult {
    pub point: Vector,
    pub was_inside: bool,
    /// Gauge of the input.
    pub gauge: GaugeValue,
}

/// `r(x) = x / max{1, P(x)^(1/p)}`.
///
/// Members are returned unchanged. Outside points are divided by the
/// member-side bracket `upper^(1/p)`, so the result is always a member and
/// `r(r(x)) = r(x)` holds exactly.
pub fn radial_retract(body: &PBody, x: &[f64], tol: f64) -> Result<RetractionResult> {
    let g = gauge::eval_gauge(body, x, tol)?;
    if body.contains(x) {
        return Ok(RetractionResult { point: x.to_vec(), was_inside: true, gauge: g });
    }
    Ok(RetractionResult { point: gauge::scaled_point(x, g.upper, body.p()), was_inside: false, gauge: g })
}

/// Same map as [`radial_retract`] but skips the gauge evaluation for members.
pub fn retract_point(body: &PBody, x: &[f64], tol: f64) -> Result<Vector> {
    if body.contains(x) {
        return Ok(x.to_vec());
    }
    let g = gauge::eval_gauge(body, x, tol)?;
    Ok(gauge::scaled_point(x, g.upper, body.p()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub samples: usize,
    pub max_step: f64,
    /// `max |r(x+h) - r(x)| / |h|`
    pub lipschitz_ratio: f64,
    /// `max |r(x+h) - r(x)| / |h|^p`
    pub holder_ratio: f64,
    /// Samples whose Hölder ratio exceeds `jump_threshold`.
    pub jumps: usize,
    pub jump_threshold: f64,
}

/// Perturbs points scattered around the boundary by steps of size at most
/// `max_step` and records how far the retraction moves.
///
/// For `p < 1` the retraction is only p-Hölder near rays where the gauge is
/// not differentiable, so both ratios are recorded and jumps are judged on
/// the Hölder one.
pub fn continuity_probe(body: &PBody, samples: usize, seed: u64, max_step: f64, tol: f64) -> Result<ContinuityReport> {
    let mut rng = sampling::rng(seed);
    let p = body.p().get();
    let jump_threshold = 1e3 * (1.0 + body.bound_radius() / body.interior_radius());
    let mut report = ContinuityReport {
        samples,
        max_step,
        lipschitz_ratio: 0.0,
        holder_ratio: 0.0,
        jumps: 0,
        jump_threshold,
    };
    for _ in 0..samples {
        let b = body.sample_boundary(&mut rng, tol)?;
        let x = vector::scale(&b, 0.9 + 0.2 * sampling::unit(&mut rng));
        let d = sampling::gaussian(&mut rng, body.dim());
        let h = vector::scale(&d, max_step * sampling::unit(&mut rng).max(1e-3) / vector::norm2(&d));
        let hn = vector::norm2(&h);
        let r0 = retract_point(body, &x, tol)?;
        let r1 = retract_point(body, &vector::add(&x, &h), tol)?;
        let dr = vector::norm2(&vector::sub(&r1, &r0));
        report.lipschitz_ratio = report.lipschitz_ratio.max(dr / hn);
        let holder = dr / hn.powf(p);
        report.holder_ratio = report.holder_ratio.max(holder);
        if holder > jump_threshold {
            report.jumps += 1;
        }
    }
    Ok(report)
}

/// Where the distance infimum is taken.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Body(&'a PBody),
    Points(&'a [Vector]),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceBudget {
    pub samples: usize,
    pub refine_iters: usize,
    pub seed: u64,
}

impl Default for DistanceBudget {
    fn default() -> Self {
        DistanceBudget { samples: 512, refine_iters: 2000, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceEstimate {
    /// Best value found. An upper bound on the infimum unless `exact`.
    pub value: f64,
    pub argmin: Vector,
    pub exact: bool,
}

/// `d(x, C) = inf{P_U(x - y) : y ∈ C}` where `P_U` is the gauge of `seminorm`.
///
/// Finite targets are scanned exhaustively. Body targets are searched from the
/// radial projection, boundary and interior samples, then refined by a
/// compass search over `z` with `y = r_C(z)`.
pub fn p_distance(seminorm: &PBody, x: &[f64], target: Target<'_>, budget: &DistanceBudget, tol: f64) -> Result<DistanceEstimate> {
    let dist = |y: &[f64]| gauge::gauge(seminorm, &vector::sub(x, y), tol);
    match target {
        Target::Points(points) => {
            let mut best: Option<(f64, &Vector)> = None;
            for y in points {
                if y.len() != x.len() {
                    return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
                }
                let d = dist(y)?;
                if best.is_none_or(|(b, _)| d < b) {
                    best = Some((d, y));
                }
            }
            let (value, y) = best.ok_or(Error::EmptyTarget)?;
            Ok(DistanceEstimate { value, argmin: y.clone(), exact: true })
        }
        Target::Body(c) => {
            if c.dim() != x.len() {
                return Err(Error::DimensionMismatch { expected: c.dim(), got: x.len() });
            }
            if c.contains(x) {
                return Ok(DistanceEstimate { value: 0.0, argmin: x.to_vec(), exact: true });
            }
            let mut rng = sampling::rng(budget.seed);
            let mut best_y = retract_point(c, x, tol)?;
            let mut best = dist(&best_y)?;
            for k in 0..budget.samples {
                let y = if k % 2 == 0 { c.sample_boundary(&mut rng, tol)? } else { c.sample_member(&mut rng) };
                let d = dist(&y)?;
                if d < best {
                    best = d;
                    best_y = y;
                }
            }
            let mut z = best_y.clone();
            let mut step = 0.25 * c.bound_radius();
            let floor = 1e-12 * c.bound_radius();
            let mut iters = 0;
            while step > floor && iters < budget.refine_iters {
                let mut improved = false;
                for i in 0..z.len() {
                    for sign in [1.0, -1.0] {
                        iters += 1;
                        let mut cand = z.clone();
                        cand[i] += sign * step;
                        let y = retract_point(c, &cand, tol)?;
                        let d = dist(&y)?;
                        if d < best {
                            best = d;
                            best_y = y;
                            z = cand;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            Ok(DistanceEstimate { value: best, argmin: best_y, exact: false })
        }
    }
}

/// `|(1-r)^p + r^p - 1|` on `[0, 1]`, `|(1/r)^p + (1-1/r)^p - 1|` above.
pub fn weight_equation_gap(r: f64, p: PExponent) -> f64 {
    let pv = p.get();
    if r < 0.0 {
        return f64::INFINITY;
    }
    if r <= 1.0 {
        ((1.0 - r).powf(pv) + r.powf(pv) - 1.0).abs()
    } else {
        ((1.0 / r).powf(pv) + (1.0 - 1.0 / r).powf(pv) - 1.0).abs()
    }
}

pub fn is_admissible(r: f64, p: PExponent) -> bool {
    weight_equation_gap(r, p) <= WEIGHT_EQUATION_TOL
}

/// Closed intervals `[lo, hi]`; isolated values have `lo == hi`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibleSet {
    pub intervals: Vec<(f64, f64)>,
    pub resolution: f64,
}

impl AdmissibleSet {
    pub fn is_dense(&self) -> bool {
        self.intervals.iter().any(|(lo, hi)| hi - lo > self.resolution)
    }

    pub fn points(&self) -> Vec<f64> {
        self.intervals.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

/// Scans `[0, r_max]` at step `resolution` for values of `r` satisfying the
/// weight equations. Grid hits are kept; local minima of the gap between
/// grid points are refined by ternary search so isolated roots off the grid
/// are not missed.
pub fn admissible_r_scan(p: PExponent, r_max: f64, resolution: f64) -> Result<AdmissibleSet> {
    if !(resolution > 0.0) || !(r_max > 0.0) {
        return Err(Error::Parameter("admissible scan needs r_max > 0 and resolution > 0".into()));
    }
    let n = (r_max / resolution).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| (k as f64 * resolution).min(r_max)).collect();
    let gaps: Vec<f64> = grid.iter().map(|r| weight_equation_gap(*r, p)).collect();
    let mut hits: Vec<f64> = Vec::new();
    for k in 0..grid.len() {
        if gaps[k] <= WEIGHT_EQUATION_TOL {
            hits.push(grid[k]);
        } else if k > 0 && k + 1 < grid.len() && gaps[k] < gaps[k - 1] && gaps[k] <= gaps[k + 1] {
            let (mut a, mut b) = (grid[k - 1], grid[k + 1]);
            for _ in 0..200 {
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                if weight_equation_gap(m1, p) < weight_equation_gap(m2, p) {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            let r = 0.5 * (a + b);
            if weight_equation_gap(r, p) <= WEIGHT_EQUATION_TOL {
                hits.push(r);
            }
        }
    }
    hits.sort_by(f64::total_cmp);
    hits.dedup_by(|a, b| (*a - *b).abs() <= WITNESS_DEDUP_TOL);

    // Consecutive grid hits form one interval.
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for r in hits {
        match intervals.last_mut() {
            Some((_, hi)) if r - *hi <= resolution * (1.0 + 1e-9) => *hi = r,
            _ => intervals.push((r, r)),
        }
    }
    Ok(AdmissibleSet { intervals, resolution })
}

/// The set `C` in inward/outward membership queries.
#[derive(Clone, Copy, Debug)]
pub enum SetRef<'a> {
    Body(&'a PBody),
    Points(&'a PointSet),
}

impl SetRef<'_> {
    fn contains(&self, z: &[f64], tol: f64) -> bool {
        match self {
            SetRef::Body(b) => b.contains(z),
            SetRef::Points(ps) => ps.points().iter().any(|y| vector::dist_max(y, z) <= tol),
        }
    }

    fn dim(&self) -> usize {
        match self {
            SetRef::Body(b) => b.dim(),
            SetRef::Points(ps) => ps.dim(),
        }
    }

    fn any_member(&self) -> Vector {
        match self {
            SetRef::Body(b) => vector::zeros(b.dim()),
            SetRef::Points(ps) => ps.points()[0].clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InwardWitness {
    /// Signed step: `z = x + r (y - x)`. Negative for outward witnesses.
    pub r: f64,
    pub endpoint: Vector,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetMembership {
    pub member: bool,
    pub witness: Option<InwardWitness>,
}

fn witness(r: f64, endpoint: Vector, p: PExponent) -> Option<InwardWitness> {
    Some(InwardWitness { r, endpoint, admissible: is_admissible(r.abs(), p) })
}

/// Membership of `z` in the inward set `{x + r(y - x) : y ∈ C, r admissible}`.
///
/// For `p < 1` only `r ∈ {0, 1}` is admissible and the set is `{x} ∪ C`.
/// For `p = 1` every `r ≥ 0` is admissible and the ray search looks for
/// `s = 1/r > 0` with `x + s(z - x) ∈ C`; `r_grid` is the step in `s`.
pub fn inward_membership(c: SetRef<'_>, x: &[f64], z: &[f64], p: PExponent, r_grid: f64, tol: f64) -> Result<SetMembership> {
    directional_membership(c, x, z, p, r_grid, tol, 1.0)
}

/// Outward set membership.
///
/// For `p < 1` this follows the characterisation `{x} ∪ {2x} ∪ (-C)`. The
/// weight equations with `r = -1` give `x - (y - x) = 2x - y`, i.e. the set
/// `2x - C`; the two agree when `x = 0` and differ in general.
/// For `p = 1` the ray search mirrors the inward case with `r ≤ 0`.
pub fn outward_membership(c: SetRef<'_>, x: &[f64], z: &[f64], p: PExponent, r_grid: f64, tol: f64) -> Result<SetMembership> {
    if !p.is_one() {
        check_dims(c, x, z)?;
        if vector::dist_max(x, z) <= tol {
            return Ok(SetMembership { member: true, witness: witness(0.0, c.any_member(), p) });
        }
        if vector::dist_max(&vector::scale(x, 2.0), z) <= tol {
            return Ok(SetMembership { member: true, witness: witness(-1.0, vector::zeros(x.len()), p) });
        }
        let neg = vector::scale(z, -1.0);
        if c.contains(&neg, tol) {
            return Ok(SetMembership { member: true, witness: witness(-1.0, neg, p) });
        }
        return Ok(SetMembership { member: false, witness: None });
    }
    directional_membership(c, x, z, p, r_grid, tol, -1.0)
}

fn check_dims(c: SetRef<'_>, x: &[f64], z: &[f64]) -> Result<()> {
    for v in [x, z] {
        if v.len() != c.dim() {
            return Err(Error::DimensionMismatch { expected: c.dim(), got: v.len() });
        }
    }
    Ok(())
}

fn directional_membership(
    c: SetRef<'_>,
    x: &[f64],
    z: &[f64],
    p: PExponent,
    r_grid: f64,
    tol: f64,
    sign: f64,
) -> Result<SetMembership> {
    if !(r_grid > 0.0) {
        return Err(Error::Parameter("r_grid must be positive".into()));
    }
    check_dims(c, x, z)?;
    if vector::dist_max(x, z) <= tol {
        return Ok(SetMembership { member: true, witness: witness(0.0, c.any_member(), p) });
    }
    if !p.is_one() {
        if c.contains(z, tol) {
            return Ok(SetMembership { member: true, witness: witness(1.0, z.to_vec(), p) });
        }
        return Ok(SetMembership { member: false, witness: None });
    }

    let d = vector::sub(z, x);
    match c {
        SetRef::Points(ps) => {
            // z - x = r (y - x) with sign(r) = sign.
            for y in ps.points() {
                let e = vector::sub(y, x);
                let ee = vector::dot(&e, &e);
                if ee == 0.0 {
                    continue;
                }
                let r = vector::dot(&d, &e) / ee;
                if r * sign >= 0.0 && vector::dist_max(&vector::scale(&e, r), &d) <= tol {
                    return Ok(SetMembership { member: true, witness: witness(r, y.clone(), p) });
                }
            }
            Ok(SetMembership { member: false, witness: None })
        }
        SetRef::Body(b) => {
            // y(s) = x + sign * s * (z - x); r = sign / s.
            let dn = vector::norm2(&d);
            let s_max = (b.bound_radius() + vector::norm2(x)) / dn * (1.0 + 1e-9);
            let steps = ((s_max / r_grid).ceil() as usize).clamp(1, 1_000_000);
            let mut candidates: Vec<f64> = (1..=steps).map(|k| s_max * k as f64 / steps as f64).collect();
            // Small s puts y near x; probe those geometrically, stopping well
            // above rounding level so tangent directions are not accepted.
            candidates.extend((1..=30).map(|k| s_max * 0.5f64.powi(k)));
            for s in candidates {
                let y = vector::add(x, &vector::scale(&d, sign * s));
                if b.contains(&y) {
                    return Ok(SetMembership { member: true, witness: witness(sign / s, y, p) });
                }
            }
            Ok(SetMembership { member: false, witness: None })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> PExponent {
        PExponent::new(v).unwrap()
    }

    fn ball(pv: f64) -> PBody {
        PBody::pball(vec![1.0, 1.0], p(pv)).unwrap()
    }

    #[test]
    fn retraction_examples() {
        let b = ball(0.5);
        let r = radial_retract(&b, &[1.0, 1.0], 1e-12).unwrap();
        assert!(!r.was_inside);
        assert!((r.gauge.value - 2.0).abs() < 1e-10);
        assert!((r.point[0] - 0.25).abs() < 1e-12 && (r.point[1] - 0.25).abs() < 1e-12);

        let r = radial_retract(&b, &[0.25, 0.25], 1e-12).unwrap();
        assert!(r.was_inside);
        assert_eq!(r.point, vec![0.25, 0.25]);

        let r = radial_retract(&b, &[0.0, 0.0], 1e-12).unwrap();
        assert_eq!(r.point, vec![0.0, 0.0]);
    }

    #[test]
    fn retraction_is_idempotent() {
        let b = ball(0.3);
        let mut rng = sampling::rng(5);
        for _ in 0..200 {
            let x = vector::scale(&sampling::gaussian(&mut rng, 2), 3.0);
            let r1 = retract_point(&b, &x, 1e-12).unwrap();
            let r2 = retract_point(&b, &r1, 1e-12).unwrap();
            assert_eq!(r1, r2);
        }
    }

    #[test]
    fn continuity_has_no_jumps() {
        let b = ball(0.5);
        let report = continuity_probe(&b, 300, 1, 1e-6, 1e-13).unwrap();
        assert_eq!(report.jumps, 0, "{report:?}");
        assert!(report.holder_ratio.is_finite());
    }

    #[test]
    fn distance_examples() {
        let l1 = ball(1.0);
        let d = p_distance(&l1, &[2.0, 0.0], Target::Body(&l1), &DistanceBudget::default(), 1e-12).unwrap();
        assert!((d.value - 1.0).abs() < 1e-9, "{d:?}");

        let half = ball(0.5);
        let d = p_distance(&half, &[4.0, 0.0], Target::Body(&half), &DistanceBudget::default(), 1e-12).unwrap();
        assert!((d.value - 3f64.sqrt()).abs() < 1e-9, "{d:?}");

        let d = p_distance(&half, &[0.1, 0.1], Target::Body(&half), &DistanceBudget::default(), 1e-12).unwrap();
        assert_eq!(d.value, 0.0);

        let pts = vec![vec![1.0, 0.0], vec![0.0, 3.0]];
        let d = p_distance(&l1, &[0.0, 0.0], Target::Points(&pts), &DistanceBudget::default(), 1e-12).unwrap();
        assert!(d.exact && (d.value - 1.0).abs() < 1e-9);
        assert_eq!(
            p_distance(&l1, &[0.0, 0.0], Target::Points(&[]), &DistanceBudget::default(), 1e-12).unwrap_err(),
            Error::EmptyTarget
        );
    }

    #[test]
    fn inward_examples() {
        let b = ball(0.5);
        let m = inward_membership(SetRef::Body(&b), &[1.0, 0.0], &[0.0, 1.0], p(0.5), 1e-3, 1e-12).unwrap();
        assert!(m.member);
        let w = m.witness.unwrap();
        assert_eq!(w.r, 1.0);
        assert!(w.admissible);

        let m = inward_membership(SetRef::Body(&b), &[1.0, 0.0], &[1.0, 0.0], p(0.5), 1e-3, 1e-12).unwrap();
        assert!(m.member && m.witness.unwrap().r == 0.0);

        let m = inward_membership(SetRef::Body(&b), &[1.0, 0.0], &[2.0, 0.0], p(0.5), 1e-3, 1e-12).unwrap();
        assert!(!m.member);
    }

    #[test]
    fn inward_ray_search_at_p_one() {
        // Halpern-Bergman inward set of the ℓ1 ball at (1, 0): z = x + r(y - x).
        let b = ball(1.0);
        let x = [1.0, 0.0];
        // Far outside the ball, but reachable along a ray through it.
        let m = inward_membership(SetRef::Body(&b), &x, &[-3.0, 1.0], p(1.0), 1e-3, 1e-12).unwrap();
        assert!(m.member);
        let w = m.witness.unwrap();
        assert!(w.r >= 0.0 && b.contains(&w.endpoint));
        let rebuilt = vector::lerp(&x, &w.endpoint, w.r);
        assert!(vector::dist_max(&rebuilt, &[-3.0, 1.0]) < 1e-9);
        // Tangent to the face through x, leaving the ball.
        let m = inward_membership(SetRef::Body(&b), &x, &[0.0, 5.0], p(1.0), 1e-3, 1e-12).unwrap();
        assert!(!m.member);
        // Straight outward is not inward.
        let m = inward_membership(SetRef::Body(&b), &x, &[3.0, 0.0], p(1.0), 1e-3, 1e-12).unwrap();
        assert!(!m.member);
    }

    #[test]
    fn outward_sets() {
        let b = ball(0.5);
        let x = [0.5, 0.0];
        for z in [[0.5, 0.0], [1.0, 0.0], [0.0, -0.5]] {
            assert!(outward_membership(SetRef::Body(&b), &x, &z, p(0.5), 1e-3, 1e-12).unwrap().member);
        }
        assert!(!outward_membership(SetRef::Body(&b), &x, &[3.0, 3.0], p(0.5), 1e-3, 1e-12).unwrap().member);

        let l1 = ball(1.0);
        let m = outward_membership(SetRef::Body(&l1), &[1.0, 0.0], &[3.0, 0.0], p(1.0), 1e-3, 1e-12).unwrap();
        assert!(m.member && m.witness.unwrap().r <= 0.0);
    }

    #[test]
    fn admissible_scan() {
        for pv in [0.25, 0.5, 0.75] {
            let s = admissible_r_scan(p(pv), 10.0, 1e-3).unwrap();
            let pts = s.points();
            assert_eq!(pts.len(), 2, "p={pv}: {s:?}");
            assert!(pts[0].abs() < 1e-3 && (pts[1] - 1.0).abs() < 1e-3);
            assert!(!s.is_dense());
        }
        let s = admissible_r_scan(p(1.0), 10.0, 1e-3).unwrap();
        assert!(s.is_dense());
        assert_eq!(s.intervals, vec![(0.0, 10.0)]);
    }

    #[test]
    fn point_set_inward() {
        let ps = PointSet::new(vec![vec![0.0, 1.0], vec![2.0, 2.0]]).unwrap();
        let x = [1.0, 1.0];
        let m = inward_membership(SetRef::Points(&ps), &x, &[3.0, 3.0], p(1.0), 1e-3, 1e-12).unwrap();
        assert!(m.member);
        assert!((m.witness.unwrap().r - 2.0).abs() < 1e-12);
        let m = inward_membership(SetRef::Points(&ps), &x, &[3.0, 3.0], p(0.5), 1e-3, 1e-12).unwrap();
        assert!(!m.member);
    }
}
