//! Grid verification of KKM covering and the finite intersection property on
//! simplices mapped into the space by `t ↦ Σ t_i^(1/p) x_i`.
//!
//! An intersection point is reported as realized at the grid resolution; not
//! finding one at some resolution does not refute its existence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pcore::{PExponent, PointSet};
use crate::vector::{self, Vector};

/// Boundary slack for closed predicates.
pub const PREDICATE_BAND: f64 = 1e-12;
const BARYCENTRIC_TOL: f64 = 1e-12;

/// Barycentric grid `{k / R : k ∈ ℕ^(n+1), Σ k_i = R}` on `Δ_n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexGrid {
    pub n: usize,
    pub resolution: usize,
    counts: Vec<Vec<usize>>,
}

impl SimplexGrid {
    pub fn new(n: usize, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::Parameter("grid resolution must be at least 1".into()));
        }
        let mut counts = Vec::new();
        let mut current = vec![0; n + 1];
        compositions(resolution, 0, &mut current, &mut counts);
        Ok(SimplexGrid { n, resolution, counts })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn point(&self, idx: usize) -> Vector {
        let r = self.resolution as f64;
        self.counts[idx].iter().map(|k| *k as f64 / r).collect()
    }

    pub fn points(&self) -> Vec<Vector> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

fn compositions(remaining: usize, pos: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        compositions(remaining - k, pos + 1, current, out);
    }
}

fn check_barycentric(t: &[f64]) -> Result<()> {
    if t.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::Domain("barycentric coordinates must be non-negative".into()));
    }
    let s: f64 = t.iter().sum();
    if (s - 1.0).abs() > BARYCENTRIC_TOL {
        return Err(Error::Domain(format!("barycentric coordinates sum to {s}, not 1")));
    }
    Ok(())
}

/// `φ(t) = Σ t_i^(1/p) x_i`. The weights `t_i^(1/p)` have `Σ (t_i^(1/p))^p = 1`.
pub fn phi_simplex(generators: &PointSet, t: &[f64], p: PExponent) -> Result<Vector> {
    if t.len() != generators.len() {
        return Err(Error::LengthMismatch { expected: generators.len(), got: t.len() });
    }
    check_barycentric(t)?;
    let mut out = vector::zeros(generators.dim());
    for (ti, x) in t.iter().zip(generators.points()) {
        let w = ti.powf(p.inv());
        for (o, xi) in out.iter_mut().zip(x) {
            *o += w * xi;
        }
    }
    Ok(out)
}

/// Closed-set predicates. `coord_ge` reads the barycentric coordinate, the
/// geometric ones read the image point `φ(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    /// `t_index ≥ value`
    CoordGe { index: usize, value: f64 },
    /// `|φ(t) - center|_2 ≤ radius`
    Ball { center: Vec<f64>, radius: f64 },
    /// `normal · φ(t) ≤ offset`
    Halfspace { normal: Vec<f64>, offset: f64 },
    And { terms: Vec<Predicate> },
    Or { terms: Vec<Predicate> },
    /// Complement; not closed in general.
    Not { term: Box<Predicate> },
    All,
    Empty,
}

impl Predicate {
    pub fn eval(&self, t: &[f64], image: &[f64]) -> bool {
        match self {
            Predicate::CoordGe { index, value } => t.get(*index).is_some_and(|ti| *ti >= value - PREDICATE_BAND),
            Predicate::Ball { center, radius } => vector::norm2(&vector::sub(image, center)) <= radius + PREDICATE_BAND,
            Predicate::Halfspace { normal, offset } => vector::dot(normal, image) <= offset + PREDICATE_BAND,
            Predicate::And { terms } => terms.iter().all(|q| q.eval(t, image)),
            Predicate::Or { terms } => terms.iter().any(|q| q.eval(t, image)),
            Predicate::Not { term } => !term.eval(t, image),
            Predicate::All => true,
            Predicate::Empty => false,
        }
    }

    /// Re-indexes barycentric coordinates onto the face spanned by `face`.
    /// Coordinates outside the face are zero there.
    pub fn restrict(&self, face: &[usize]) -> Predicate {
        match self {
            Predicate::CoordGe { index, value } => match face.iter().position(|j| j == index) {
                Some(k) => Predicate::CoordGe { index: k, value: *value },
                None if *value <= PREDICATE_BAND => Predicate::All,
                None => Predicate::Empty,
            },
            Predicate::And { terms } => Predicate::And { terms: terms.iter().map(|q| q.restrict(face)).collect() },
            Predicate::Or { terms } => Predicate::Or { terms: terms.iter().map(|q| q.restrict(face)).collect() },
            Predicate::Not { term } => Predicate::Not { term: Box::new(term.restrict(face)) },
            other => other.clone(),
        }
    }
}

/// Generators `x_0..x_n` with one predicate `G_i` per generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KkmFamily {
    pub generators: PointSet,
    pub predicates: Vec<Predicate>,
}

impl KkmFamily {
    pub fn new(generators: PointSet, predicates: Vec<Predicate>) -> Result<Self> {
        if generators.len() != predicates.len() {
            return Err(Error::LengthMismatch { expected: generators.len(), got: predicates.len() });
        }
        Ok(KkmFamily { generators, predicates })
    }

    /// The sub-family on the face spanned by `face`.
    pub fn restrict(&self, face: &[usize]) -> Result<Self> {
        if face.is_empty() || face.iter().any(|j| *j >= self.predicates.len()) {
            return Err(Error::Parameter("face indices out of range".into()));
        }
        let generators = PointSet::new(face.iter().map(|j| self.generators.points()[*j].clone()).collect())?;
        let predicates = face.iter().map(|j| self.predicates[*j].restrict(face)).collect();
        KkmFamily::new(generators, predicates)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KkmViolation {
    /// Support of the offending grid point, the smallest face containing it.
    pub face: Vec<usize>,
    pub t: Vector,
    pub image: Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KkmReport {
    pub resolution: usize,
    pub checked_points: usize,
    pub is_kkm: bool,
    pub violation: Option<KkmViolation>,
    /// Grid points in every `G_i`; searched only when covering holds.
    pub intersection_witnesses: Vec<Vector>,
}

/// Checks `φ(Δ_J) ⊂ ∪_{i∈J} G_i` for every face `J` on the grid, then lists
/// grid points lying in all `G_i`.
///
/// A grid point lies in every face containing its support, and the covering
/// requirement is tightest on the support itself, so one test per point
/// covers all faces.
pub fn kkm_verify(family: &KkmFamily, grid: &SimplexGrid, p: PExponent) -> Result<KkmReport> {
    kkm_verify_on(family, grid, p, None)
}

/// The covering check restricted to grid points of the face `face`.
pub fn kkm_verify_face(family: &KkmFamily, grid: &SimplexGrid, p: PExponent, face: &[usize]) -> Result<KkmReport> {
    kkm_verify_on(family, grid, p, Some(face))
}

fn kkm_verify_on(family: &KkmFamily, grid: &SimplexGrid, p: PExponent, face: Option<&[usize]>) -> Result<KkmReport> {
    if grid.n + 1 != family.predicates.len() {
        return Err(Error::DimensionMismatch { expected: family.predicates.len(), got: grid.n + 1 });
    }
    if grid.resolution < 2 {
        return Err(Error::Parameter("grid resolution must be at least 2".into()));
    }
    let in_face = |c: &Vec<usize>| match face {
        Some(f) => c.iter().enumerate().all(|(i, k)| *k == 0 || f.contains(&i)),
        None => true,
    };
    let indices: Vec<usize> = (0..grid.len()).filter(|i| in_face(&grid.counts[*i])).collect();

    struct Eval {
        t: Vector,
        image: Vector,
        covered: bool,
        in_all: bool,
    }
    let evals: Vec<Eval> = indices
        .par_iter()
        .map(|&i| {
            let t = grid.point(i);
            let image = phi_simplex(&family.generators, &t, p)?;
            let covered = t
                .iter()
                .enumerate()
                .filter(|(_, ti)| **ti > 0.0)
                .any(|(j, _)| family.predicates[j].eval(&t, &image));
            let in_all = family.predicates.iter().all(|g| g.eval(&t, &image));
            Ok(Eval { t, image, covered, in_all })
        })
        .collect::<Result<_>>()?;

    // Report the most central uncovered point.
    let spread = |t: &Vector| t.iter().fold(0.0_f64, |m, v| m.max(*v));
    let violation = evals
        .iter()
        .filter(|e| !e.covered)
        .min_by(|a, b| spread(&a.t).total_cmp(&spread(&b.t)))
        .map(|e| KkmViolation {
        face: e.t.iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(j, _)| j).collect(),
        t: e.t.clone(),
        image: e.image.clone(),
    });
    let is_kkm = violation.is_none();
    let intersection_witnesses = if is_kkm {
        evals.iter().filter(|e| e.in_all).map(|e| e.t.clone()).collect()
    } else {
        Vec::new()
    };
    Ok(KkmReport {
        resolution: grid.resolution,
        checked_points: evals.len(),
        is_kkm,
        violation,
        intersection_witnesses,
    })
}

/// `G_i = {t_i ≥ c}` on `Δ_n` with the standard basis as generators.
pub fn threshold_family(n: usize, c: f64) -> Result<KkmFamily> {
    let generators = PointSet::new(
        (0..=n)
            .map(|i| {
                let mut e = vector::zeros(n + 1);
                e[i] = 1.0;
                e
            })
            .collect(),
    )?;
    KkmFamily::new(generators, (0..=n).map(|i| Predicate::CoordGe { index: i, value: c }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> PExponent {
        PExponent::new(v).unwrap()
    }

    fn basis2() -> PointSet {
        PointSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn phi_examples() {
        let g = basis2();
        assert_eq!(phi_simplex(&g, &[0.5, 0.5], p(0.5)).unwrap(), vec![0.25, 0.25]);
        assert_eq!(phi_simplex(&g, &[1.0, 0.0], p(0.5)).unwrap(), vec![1.0, 0.0]);
        let v = phi_simplex(&g, &[0.3, 0.7], p(1.0)).unwrap();
        assert!((v[0] - 0.3).abs() < 1e-15 && (v[1] - 0.7).abs() < 1e-15);
        assert!(phi_simplex(&g, &[-0.1, 1.1], p(1.0)).is_err());
        assert!(phi_simplex(&g, &[0.5, 0.6], p(1.0)).is_err());
    }

    #[test]
    fn grid_size() {
        let g = SimplexGrid::new(2, 60).unwrap();
        assert_eq!(g.len(), 61 * 62 / 2);
        for t in g.points() {
            assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_families() {
        let fam = threshold_family(2, 1.0 / 3.0).unwrap();
        for r in [3, 6, 60] {
            let rep = kkm_verify(&fam, &SimplexGrid::new(2, r).unwrap(), p(1.0)).unwrap();
            assert!(rep.is_kkm);
            assert_eq!(rep.intersection_witnesses.len(), 1);
            for v in &rep.intersection_witnesses[0] {
                assert!((v - 1.0 / 3.0).abs() < 1e-12);
            }
        }
        let rep = kkm_verify(&fam, &SimplexGrid::new(2, 4).unwrap(), p(1.0)).unwrap();
        assert!(rep.is_kkm && rep.intersection_witnesses.is_empty());

        let fam = threshold_family(2, 0.6).unwrap();
        let rep = kkm_verify(&fam, &SimplexGrid::new(2, 60).unwrap(), p(1.0)).unwrap();
        assert!(!rep.is_kkm);
        let v = rep.violation.unwrap();
        assert!(v.t.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12), "{v:?}");
    }

    #[test]
    fn whole_space_family() {
        let g = PointSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let fam = KkmFamily::new(g, vec![Predicate::All; 3]).unwrap();
        let grid = SimplexGrid::new(2, 10).unwrap();
        let rep = kkm_verify(&fam, &grid, p(0.5)).unwrap();
        assert!(rep.is_kkm);
        assert_eq!(rep.intersection_witnesses.len(), grid.len());
    }

    #[test]
    fn face_check_matches_restricted_family() {
        let fam = threshold_family(2, 0.45).unwrap();
        let grid = SimplexGrid::new(2, 20).unwrap();
        for face in [vec![0, 1], vec![1, 2], vec![0, 2]] {
            let full = kkm_verify_face(&fam, &grid, p(1.0), &face).unwrap();
            let sub = fam.restrict(&face).unwrap();
            let sub_rep = kkm_verify(&sub, &SimplexGrid::new(1, 20).unwrap(), p(1.0)).unwrap();
            assert_eq!(full.is_kkm, sub_rep.is_kkm);
            assert_eq!(full.checked_points, sub_rep.checked_points);
        }
    }

    #[test]
    fn geometric_predicates() {
        let t = [0.5, 0.5];
        let img = [0.25, 0.25];
        assert!(Predicate::Ball { center: vec![0.0, 0.0], radius: 0.5 }.eval(&t, &img));
        assert!(Predicate::Halfspace { normal: vec![1.0, 1.0], offset: 0.5 }.eval(&t, &img));
        assert!(!Predicate::Halfspace { normal: vec![1.0, 1.0], offset: 0.49 }.eval(&t, &img));
        let q = Predicate::And {
            terms: vec![
                Predicate::CoordGe { index: 0, value: 0.5 },
                Predicate::Not { term: Box::new(Predicate::CoordGe { index: 1, value: 0.6 }) },
            ],
        };
        assert!(q.eval(&t, &img));
    }
}
