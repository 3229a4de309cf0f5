//! p-convex arithmetic: exponents, admissible weights, p-convex combinations,
//! sampled p-convexity testing and hull membership.
//!
//! A set `A` is p-convex when `s x + t y ∈ A` for all `x, y ∈ A` and all
//! `s, t ≥ 0` with `s^p + t^p = 1`. At `p = 1` this is ordinary convexity.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{self, Rng};
use crate::vector::{self, Vector};

/// Representation tolerance for `Σ t_i^p = 1`.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Collinearity tolerance used by singleton hull membership.
pub const COLLINEAR_TOL: f64 = 1e-10;

/// The exponent `p ∈ (0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PExponent(f64);

impl PExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 && p <= 1.0 {
            Ok(PExponent(p))
        } else {
            Err(Error::InvalidExponent(p))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `1/p`
    #[inline]
    pub fn inv(self) -> f64 {
        1.0 / self.0
    }

    #[inline]
    pub fn is_one(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for PExponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        PExponent::new(p)
    }
}

impl From<PExponent> for f64 {
    fn from(p: PExponent) -> f64 {
        p.0
    }
}

/// Non-negative weights with `Σ t_i^p = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightVector {
    t: Vec<f64>,
    p: PExponent,
}

impl WeightVector {
    pub fn new(t: Vec<f64>, p: PExponent) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::Domain("weight vector is empty".into()));
        }
        if let Some(bad) = t.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::Domain(format!("weight {bad} is negative or not finite")));
        }
        let sum = power_sum(&t, p);
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::WeightValidation { sum });
        }
        Ok(WeightVector { t, p })
    }

    /// Rescales `t` onto `Σ t_i^p = 1`. Fails for the zero vector.
    pub fn normalized(t: Vec<f64>, p: PExponent) -> Result<Self> {
        let sum = power_sum(&t, p);
        if !(sum > 0.0) {
            return Err(Error::WeightValidation { sum });
        }
        let k = sum.powf(-p.inv());
        WeightVector::new(t.into_iter().map(|w| w * k).collect(), p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.t
    }

    pub fn p(&self) -> PExponent {
        self.p
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

fn power_sum(t: &[f64], p: PExponent) -> f64 {
    t.iter().map(|w| w.abs().powf(p.get())).sum()
}

/// A non-empty list of points of equal dimension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSet {
    points: Vec<Vector>,
}

impl PointSet {
    pub fn new(points: Vec<Vector>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::Domain("point set is empty".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::Domain("points must have dimension >= 1".into()));
        }
        for pt in &points {
            if pt.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: pt.len() });
            }
        }
        Ok(PointSet { points })
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }
}

/// Splits `u ∈ [0,1]` into the weight pair `(u^(1/p), (1-u)^(1/p))`.
pub fn admissible_pair(p: PExponent, u: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("u = {u} outside [0,1]")));
    }
    Ok((u.powf(p.inv()), (1.0 - u).powf(p.inv())))
}

/// `Σ t_i x_i` for validated weights.
pub fn p_combination(points: &PointSet, weights: &WeightVector) -> Result<Vector> {
    if points.len() != weights.len() {
        return Err(Error::LengthMismatch { expected: points.len(), got: weights.len() });
    }
    let mut out = vector::zeros(points.dim());
    for (x, t) in points.points().iter().zip(weights.as_slice()) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o += t * xi;
        }
    }
    Ok(out)
}

/// A replayable counterexample to p-convexity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityViolation {
    pub x: Vector,
    pub y: Vector,
    pub u: f64,
    pub s: f64,
    pub t: f64,
    pub combination: Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub p: f64,
    pub trials: usize,
    /// Trials where both sampled points were members.
    pub tested: usize,
    pub violation: Option<ConvexityViolation>,
}

impl ConvexityReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Tests one triple; returns the violation when the combination leaves the set.
pub fn check_triple<M>(membership: &M, p: PExponent, x: &[f64], y: &[f64], u: f64) -> Option<ConvexityViolation>
where
    M: Fn(&[f64]) -> bool + ?Sized,
{
    let (s, t) = admissible_pair(p, u.clamp(0.0, 1.0)).ok()?;
    let combination: Vector = x.iter().zip(y).map(|(a, b)| s * a + t * b).collect();
    if membership(&combination) {
        None
    } else {
        Some(ConvexityViolation { x: x.to_vec(), y: y.to_vec(), u, s, t, combination })
    }
}

/// Sampled p-convexity check. `sampler` proposes candidate points; only pairs
/// where both candidates are members are tested. Stops at the first violation.
pub fn check_p_convex<M, S>(membership: M, p: PExponent, mut sampler: S, seed: u64, trials: usize) -> ConvexityReport
where
    M: Fn(&[f64]) -> bool,
    S: FnMut(&mut Rng) -> Vector,
{
    let mut rng = sampling::rng(seed);
    let mut tested = 0;
    for _ in 0..trials.max(1) {
        let x = sampler(&mut rng);
        let y = sampler(&mut rng);
        let u: f64 = rng.random();
        if !(membership(&x) && membership(&y)) {
            continue;
        }
        tested += 1;
        if let Some(v) = check_triple(&membership, p, &x, &y, u) {
            return ConvexityReport { p: p.get(), trials, tested, violation: Some(v) };
        }
    }
    ConvexityReport { p: p.get(), trials, tested, violation: None }
}

/// Membership of `q` in the p-convex hull of the singleton `{x}` (`p < 1`):
/// the segment `{t x : t ∈ (0,1]}`, or `t ∈ [0,1]` for its closure.
pub fn singleton_hull_membership(x: &[f64], q: &[f64], p: PExponent, closed: bool) -> Result<bool> {
    if p.is_one() {
        return Err(Error::UnsupportedRegime(
            "the hull of a singleton at p = 1 is the point itself; compare for equality".into(),
        ));
    }
    if x.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: q.len() });
    }
    let xx = vector::dot(x, x);
    if xx == 0.0 {
        return Ok(vector::max_abs(q) <= COLLINEAR_TOL);
    }
    let t = vector::dot(q, x) / xx;
    let off_line = q
        .iter()
        .zip(x)
        .fold(0.0_f64, |m, (qi, xi)| m.max((qi - t * xi).abs()));
    if off_line > COLLINEAR_TOL * vector::max_abs(x).max(1.0) {
        return Ok(false);
    }
    let upper = t <= 1.0 + COLLINEAR_TOL;
    Ok(if closed { t >= -COLLINEAR_TOL && upper } else { t > 0.0 && upper })
}

/// Options for [`finite_hull_membership`].
#[derive(Clone, Debug)]
pub struct HullSearch {
    pub tol: f64,
    pub multistart: usize,
    pub seed: u64,
    /// Grid resolution for the two-generator rank-deficient case.
    pub grid: usize,
}

impl Default for HullSearch {
    fn default() -> Self {
        HullSearch { tol: 1e-9, multistart: 16, seed: 0, grid: 20_000 }
    }
}

/// Expresses `q` as a p-convex combination of (possibly repeated) generators.
///
/// `coefficients[j]` is the total weight on generator `j`. When
/// `Σ coefficients^p < 1` the weight of one generator is split over repeated
/// copies so that `weights` satisfies `Σ t^p = 1` exactly; `generator_index[k]`
/// names the generator carrying `weights[k]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HullWitness {
    pub coefficients: Vec<f64>,
    pub generator_index: Vec<usize>,
    pub weights: Option<WeightVector>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HullMembership {
    pub member: bool,
    /// True when the answer came from the unique least-squares solution
    /// (full column rank), so a negative answer is definitive.
    pub decided: bool,
    pub residual: f64,
    pub witness: Option<HullWitness>,
}

const SPLIT_CAP: usize = 100_000;

/// Membership of `q` in the p-convex hull of a finite generator set.
///
/// For `p < 1` the hull is `{Σ c_j x_j : c ≥ 0, 0 < Σ c_j^p ≤ 1}` (coefficients
/// below the constraint are reached by repeating generators); for `p = 1` it is
/// the convex hull. Full-column-rank generator sets are decided exactly from
/// the least-squares solution. Otherwise a seeded multistart projected search
/// runs, with a dense one-parameter grid when there are two generators; there
/// a `false` only means nothing was found at this budget.
pub fn finite_hull_membership(points: &PointSet, q: &[f64], p: PExponent, opts: &HullSearch) -> Result<HullMembership> {
    if opts.tol <= 0.0 {
        return Err(Error::Parameter("tol must be positive".into()));
    }
    if q.len() != points.dim() {
        return Err(Error::DimensionMismatch { expected: points.dim(), got: q.len() });
    }
    let n = points.len();
    let dim = points.dim();
    let x = DMatrix::from_fn(dim, n, |i, j| points.points()[j][i]);
    let qv = DVector::from_column_slice(q);

    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-12 * smax.max(1e-300)).count();

    if rank == n {
        let c = svd
            .solve(&qv, 1e-12 * smax)
            .map_err(|e| Error::Domain(e.to_string()))?;
        let c: Vec<f64> = c.iter().copied().collect();
        let residual = (&x * DVector::from_column_slice(&c) - &qv).amax();
        let feasible = residual <= opts.tol && coefficients_feasible(&c, p, opts.tol);
        let witness = if feasible { build_witness(clip(&c), p) } else { None };
        return Ok(HullMembership { member: feasible && witness.is_some(), decided: true, residual, witness });
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |c: Vec<f64>| {
        let r = (&x * DVector::from_column_slice(&c) - &qv).amax();
        if best.as_ref().is_none_or(|(br, _)| r < *br) {
            best = Some((r, c));
        }
    };

    if n == 2 {
        for k in 0..=opts.grid {
            let u = k as f64 / opts.grid as f64;
            let w = [u.powf(p.inv()), (1.0 - u).powf(p.inv())];
            let s = best_scale(&x, &qv, &w, p);
            consider(vec![s * w[0], s * w[1]]);
        }
    }

    let mut rng = sampling::rng(opts.seed);
    for _ in 0..opts.multistart.max(1) {
        let w0 = random_simplex(&mut rng, n);
        consider(projected_search(&x, &qv, w0, p));
    }

    let (residual, c) = best.expect("at least one candidate");
    let feasible = residual <= opts.tol && coefficients_feasible(&c, p, opts.tol);
    let witness = if feasible { build_witness(clip(&c), p) } else { None };
    Ok(HullMembership { member: feasible && witness.is_some(), decided: false, residual, witness })
}

fn clip(c: &[f64]) -> Vec<f64> {
    c.iter().map(|v| v.max(0.0)).collect()
}

fn coefficients_feasible(c: &[f64], p: PExponent, tol: f64) -> bool {
    if c.iter().any(|v| *v < -tol) {
        return false;
    }
    let s = power_sum(&clip(c), p);
    if p.is_one() {
        (s - 1.0).abs() <= tol.max(1e-9)
    } else {
        s > 0.0 && s <= 1.0 + 1e-9
    }
}

/// Least-squares scale `s ∈ (0,1]` for coefficient direction `w` (`s = 1` at `p = 1`).
fn best_scale(x: &DMatrix<f64>, q: &DVector<f64>, w: &[f64], p: PExponent) -> f64 {
    if p.is_one() {
        return 1.0;
    }
    let v = x * DVector::from_column_slice(w);
    let vv = v.dot(&v);
    if vv == 0.0 {
        return 1.0;
    }
    (v.dot(q) / vv).clamp(f64::MIN_POSITIVE, 1.0)
}

fn random_simplex(rng: &mut Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (k, ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (k as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|vi| (vi - theta).max(0.0)).collect()
}

/// Alternating search over `c = s · w^(1/p)` with `w` on the simplex.
fn projected_search(x: &DMatrix<f64>, q: &DVector<f64>, mut w: Vec<f64>, p: PExponent) -> Vec<f64> {
    let coeffs = |w: &[f64], s: f64| -> Vec<f64> { w.iter().map(|wi| s * wi.powf(p.inv())).collect() };
    let loss = |c: &[f64]| -> f64 { (x * DVector::from_column_slice(c) - q).norm_squared() };
    let mut step = 1.0;
    let mut s = best_scale(x, q, &w.iter().map(|wi| wi.powf(p.inv())).collect::<Vec<_>>(), p);
    let mut c = coeffs(&w, s);
    let mut f = loss(&c);
    for _ in 0..2000 {
        if f < 1e-30 {
            break;
        }
        let r = x * DVector::from_column_slice(&c) - q;
        let g = x.transpose() * r;
        let grad: Vec<f64> = w
            .iter()
            .zip(g.iter())
            .map(|(wi, gi)| s * p.inv() * wi.max(1e-300).powf(p.inv() - 1.0) * gi)
            .collect();
        let mut improved = false;
        while step > 1e-16 {
            let cand = project_simplex(&w.iter().zip(&grad).map(|(wi, gi)| wi - step * gi).collect::<Vec<_>>());
            let dir: Vec<f64> = cand.iter().map(|v| v.powf(p.inv())).collect();
            let sc = best_scale(x, q, &dir, p);
            let cc = coeffs(&cand, sc);
            let fc = loss(&cc);
            if fc < f {
                w = cand;
                s = sc;
                c = cc;
                f = fc;
                step *= 2.0;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    c
}

/// Turns aggregate coefficients into an explicit weight vector over a multiset
/// of generators with `Σ t^p = 1`.
fn build_witness(c: Vec<f64>, p: PExponent) -> Option<HullWitness> {
    let n = c.len();
    let total = power_sum(&c, p);
    if !(total > 0.0) {
        return None;
    }
    if p.is_one() || (total - 1.0).abs() <= 1e-9 {
        let weights = WeightVector::normalized(c.clone(), p).ok()?;
        return Some(HullWitness { coefficients: c, generator_index: (0..n).collect(), weights: Some(weights) });
    }

    // Split the largest coefficient c_j into k pieces so that the pieces'
    // p-th powers make up the missing mass.
    let (j, cj) = c
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let pv = p.get();
    let rest: f64 = c.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, v)| v.powf(pv)).sum();
    let need = 1.0 - rest;
    let ratio = need / cj.powf(pv);
    let k_real = ratio.powf(1.0 / (1.0 - pv)).ceil();
    if !k_real.is_finite() || k_real > SPLIT_CAP as f64 {
        return Some(HullWitness { coefficients: c, generator_index: (0..n).collect(), weights: None });
    }
    let k = (k_real as usize).max(2);
    let km1 = (k - 1) as f64;
    let g = |b: f64| km1 * b.powf(pv) + (cj - km1 * b).max(0.0).powf(pv) - need;
    let (mut lo, mut hi) = (0.0, cj / k as f64);
    if g(hi) < 0.0 {
        return Some(HullWitness { coefficients: c, generator_index: (0..n).collect(), weights: None });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b = hi;
    let mut index: Vec<usize> = (0..n).filter(|i| *i != j).collect();
    let mut t: Vec<f64> = index.iter().map(|i| c[*i]).collect();
    for _ in 0..k - 1 {
        index.push(j);
        t.push(b);
    }
    index.push(j);
    t.push((cj - km1 * b).max(0.0));
    let weights = WeightVector::normalized(t, p).ok()?;
    Some(HullWitness { coefficients: c, generator_index: index, weights: Some(weights) })
}

/// Membership oracle of the weighted p-ball `{Σ w_i |x_i|^p ≤ 1}`.
pub fn pball_member(weights: &[f64], p: PExponent) -> impl Fn(&[f64]) -> bool + Clone + '_ {
    move |x: &[f64]| weighted_power_sum(weights, x, p) <= 1.0
}

pub fn weighted_power_sum(weights: &[f64], x: &[f64], p: PExponent) -> f64 {
    weights.iter().zip(x).map(|(w, xi)| w * xi.abs().powf(p.get())).sum()
}
