//! Benchmark maps `F: ℝ^n → ℝ^n` and their registry.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::PBody;
use crate::sampling;
use crate::vector::{self, Vector};

pub type MapFn = Arc<dyn Fn(&[f64]) -> Vector + Send + Sync>;

/// Asserted class of a map. It selects the cited result in reports; the
/// numerics are the same for every class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingClass {
    OneSetContractive,
    SemiclosedOneSetContractive,
    Condensing,
    Nonexpansive,
}

impl MappingClass {
    /// Family of results the conclusions are drawn from.
    pub fn regime(self) -> &'static str {
        match self {
            MappingClass::SemiclosedOneSetContractive => "semiclosed 1-set contractive",
            MappingClass::Condensing => "condensing",
            MappingClass::OneSetContractive | MappingClass::Nonexpansive => "1-set contractive",
        }
    }
}

/// Registry description of a built-in map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapKind {
    /// `A x + b`, `a` row-major.
    Affine { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// `c x`
    Scale { c: f64 },
    /// `c · R(θ) x` rotating the first two coordinates by `degrees`; the
    /// remaining coordinates are scaled by `c`.
    Rotation { degrees: f64, c: f64 },
    /// `x + v`
    Translation { v: Vec<f64> },
    /// `-x`
    Negation,
    /// Componentwise `Σ_k coeffs[k] x_i^k`.
    Polynomial { coeffs: Vec<f64> },
    /// Applies `maps` left to right.
    Compose { maps: Vec<MapKind> },
}

impl MapKind {
    fn check(&self, dim: usize) -> Result<()> {
        let finite = |v: &[f64]| {
            if vector::is_finite(v) {
                Ok(())
            } else {
                Err(Error::Parameter("map parameters must be finite".into()))
            }
        };
        match self {
            MapKind::Affine { a, b } => {
                if a.len() != dim || a.iter().any(|r| r.len() != dim) {
                    return Err(Error::DimensionMismatch { expected: dim, got: a.len() });
                }
                if b.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: b.len() });
                }
                a.iter().try_for_each(|r| finite(r))?;
                finite(b)
            }
            MapKind::Scale { c } => finite(&[*c]),
            MapKind::Rotation { degrees, c } => {
                if dim < 2 {
                    return Err(Error::Parameter("rotation needs dim >= 2".into()));
                }
                finite(&[*degrees, *c])
            }
            MapKind::Translation { v } => {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
                }
                finite(v)
            }
            MapKind::Negation => Ok(()),
            MapKind::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::Parameter("polynomial needs coefficients".into()));
                }
                finite(coeffs)
            }
            MapKind::Compose { maps } => {
                if maps.is_empty() {
                    return Err(Error::Parameter("compose needs at least one map".into()));
                }
                maps.iter().try_for_each(|m| m.check(dim))
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vector {
        match self {
            MapKind::Affine { a, b } => a.iter().zip(b).map(|(row, bi)| vector::dot(row, x) + bi).collect(),
            MapKind::Scale { c } => vector::scale(x, *c),
            MapKind::Rotation { degrees, c } => {
                let (s, co) = degrees.to_radians().sin_cos();
                let mut y = vector::scale(x, *c);
                y[0] = c * (co * x[0] - s * x[1]);
                y[1] = c * (s * x[0] + co * x[1]);
                y
            }
            MapKind::Translation { v } => vector::add(x, v),
            MapKind::Negation => vector::scale(x, -1.0),
            MapKind::Polynomial { coeffs } => x
                .iter()
                .map(|xi| coeffs.iter().rev().fold(0.0, |acc, c| acc * xi + c))
                .collect(),
            MapKind::Compose { maps } => maps.iter().fold(x.to_vec(), |y, m| m.eval(&y)),
        }
    }

    /// `(A, b)` when the map is affine.
    fn affine_parts(&self, dim: usize) -> Option<(DMatrix<f64>, DVector<f64>)> {
        match self {
            MapKind::Affine { a, b } => Some((
                DMatrix::from_fn(dim, dim, |i, j| a[i][j]),
                DVector::from_column_slice(b),
            )),
            MapKind::Scale { c } => Some((DMatrix::identity(dim, dim) * *c, DVector::zeros(dim))),
            MapKind::Negation => Some((-DMatrix::identity(dim, dim), DVector::zeros(dim))),
            MapKind::Translation { v } => Some((DMatrix::identity(dim, dim), DVector::from_column_slice(v))),
            MapKind::Rotation { .. } => {
                let a = DMatrix::from_fn(dim, dim, |i, j| {
                    let mut e = vector::zeros(dim);
                    e[j] = 1.0;
                    self.eval(&e)[i]
                });
                Some((a, DVector::zeros(dim)))
            }
            MapKind::Polynomial { coeffs } => match coeffs.len() {
                1 => Some((DMatrix::zeros(dim, dim), DVector::from_element(dim, coeffs[0]))),
                2 => Some((DMatrix::identity(dim, dim) * coeffs[1], DVector::from_element(dim, coeffs[0]))),
                _ => None,
            },
            MapKind::Compose { maps } => {
                let mut acc = (DMatrix::identity(dim, dim), DVector::zeros(dim));
                for m in maps {
                    let (a, b) = m.affine_parts(dim)?;
                    acc = (&a * &acc.0, &a * &acc.1 + b);
                }
                Some(acc)
            }
        }
    }

    /// Fixed points in closed form: `Some(vec![])` when provably none,
    /// `None` when unknown or not isolated.
    fn analytic_fixed_points(&self, dim: usize) -> Option<Vec<Vector>> {
        let (a, b) = self.affine_parts(dim)?;
        let m = DMatrix::identity(dim, dim) - a;
        match m.clone().lu().solve(&b) {
            Some(x) if (&m * &x - &b).amax() <= 1e-12 * (1.0 + b.amax()) => Some(vec![x.iter().copied().collect()]),
            _ => {
                // Singular I - A: inconsistent systems have no solution.
                let svd = m.svd(true, true);
                let x = svd.solve(&b, 1e-12).ok()?;
                let res = (&svd.recompose().ok()? * &x - &b).amax();
                if res > 1e-9 { Some(Vec::new()) } else { None }
            }
        }
    }
}

/// A benchmark map with its asserted class.
#[derive(Clone)]
pub struct MapSpec {
    pub name: String,
    pub dim: usize,
    pub class: MappingClass,
    pub kind: Option<MapKind>,
    /// Closed-form fixed points; `None` when not known.
    pub known_fixed_points: Option<Vec<Vector>>,
    f: MapFn,
}

impl fmt::Debug for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("class", &self.class)
            .field("kind", &self.kind)
            .finish()
    }
}

impl MapSpec {
    pub fn from_kind(kind: MapKind, dim: usize, class: MappingClass) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("map dimension must be at least 1".into()));
        }
        kind.check(dim)?;
        let name = describe(&kind);
        let known_fixed_points = kind.analytic_fixed_points(dim);
        let k = kind.clone();
        Ok(MapSpec {
            name,
            dim,
            class,
            kind: Some(kind),
            known_fixed_points,
            f: Arc::new(move |x: &[f64]| k.eval(x)),
        })
    }

    pub fn custom(name: impl Into<String>, dim: usize, class: MappingClass, f: MapFn) -> Self {
        MapSpec { name: name.into(), dim, class, kind: None, known_fixed_points: None, f }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> Vector {
        (self.f)(x)
    }

    pub fn function(&self) -> MapFn {
        Arc::clone(&self.f)
    }

    /// Checks that `F` is finite on samples from the body's bounding box.
    pub fn probe_finite(&self, body: &PBody, samples: usize, seed: u64) -> Result<()> {
        if body.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: body.dim() });
        }
        let mut rng = sampling::rng(seed);
        let half = vec![body.bound_radius(); self.dim];
        for _ in 0..samples {
            let x = sampling::uniform_box(&mut rng, &half);
            let y = self.eval(&x);
            if y.len() != self.dim || !vector::is_finite(&y) {
                return Err(Error::Precondition { reason: format!("{} is not finite on the body", self.name), witness: x });
            }
        }
        Ok(())
    }
}

fn describe(kind: &MapKind) -> String {
    match kind {
        MapKind::Affine { a, b } => format!("affine(A={a:?}, b={b:?})"),
        MapKind::Scale { c } => format!("scale({c})"),
        MapKind::Rotation { degrees, c } => format!("rotation({degrees}deg, {c})"),
        MapKind::Translation { v } => format!("translation({v:?})"),
        MapKind::Negation => "negation".to_string(),
        MapKind::Polynomial { coeffs } => format!("polynomial({coeffs:?})"),
        MapKind::Compose { maps } => {
            let parts: Vec<String> = maps.iter().map(describe).collect();
            format!("compose({})", parts.join(", "))
        }
    }
}
