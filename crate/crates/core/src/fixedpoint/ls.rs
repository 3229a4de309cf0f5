//! The set `ε(F) = {x : x = λF(x), 0 < λ < 1}` sampled on a grid of `λ`,
//! with a growth verdict as `λ → 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::approx::damped_picard;
use super::map::MapSpec;
use crate::error::{Error, Result};
use crate::gauge::{self, PBody};
use crate::vector::{self, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsOptions {
    pub lambdas: Vec<f64>,
    /// Solutions with norm above this count as growth.
    pub r_max: f64,
    pub newton_max: usize,
    pub picard_max: usize,
    pub tol: f64,
}

impl Default for EpsOptions {
    fn default() -> Self {
        let mut lambdas: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        lambdas.extend([0.95, 0.99, 0.995, 0.999]);
        EpsOptions { lambdas, r_max: 1e6, newton_max: 100, picard_max: 10_000, tol: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Newton,
    Picard,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsPoint {
    pub lambda: f64,
    pub x: Option<Vector>,
    pub norm: Option<f64>,
    /// Gauge of the solution when a body was supplied.
    pub gauge: Option<f64>,
    pub method: SolveMethod,
    /// `max |x - λF(x)|`
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsVerdict {
    Bounded,
    Growth,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsReport {
    pub points: Vec<EpsPoint>,
    pub max_norm: f64,
    pub max_gauge: Option<f64>,
    /// Least-squares slope of `log |x|` against `log(1 - λ)` for `λ ≥ 0.5`.
    pub growth_slope: Option<f64>,
    pub r_max: f64,
    pub verdict: EpsVerdict,
}

impl EpsReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,method,norm,gauge,residual\n");
        for p in &self.points {
            let m = match p.method {
                SolveMethod::Newton => "newton",
                SolveMethod::Picard => "picard",
                SolveMethod::Unresolved => "unresolved",
            };
            let opt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
            out.push_str(&format!("{:e},{},{},{},{:e}\n", p.lambda, m, opt(p.norm), opt(p.gauge), p.residual));
        }
        out
    }
}

/// Newton's method for `G(x) = 0` with a forward-difference Jacobian and
/// backtracking. Returns the root and its residual when converged.
pub fn newton<G>(g: G, x0: &[f64], max_iter: usize, tol: f64) -> Option<(Vector, f64)>
where
    G: Fn(&[f64]) -> Vector,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut gx = g(&x);
    let mut res = vector::max_abs(&gx);
    for _ in 0..max_iter {
        if !res.is_finite() {
            return None;
        }
        if res <= tol * vector::max_abs(&x).max(1.0) {
            return Some((x, res));
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let h = 1e-7 * x[j].abs().max(1.0);
            let mut xh = x.clone();
            xh[j] += h;
            let gh = g(&xh);
            for i in 0..n {
                jac[(i, j)] = (gh[i] - gx[i]) / h;
            }
        }
        let rhs = DVector::from_iterator(n, gx.iter().map(|v| -v));
        let step = jac.lu().solve(&rhs)?;
        let mut t = 1.0;
        loop {
            let xn: Vector = x.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            let gn = g(&xn);
            let rn = vector::max_abs(&gn);
            if rn < res || t < 1e-10 {
                if !(rn < res) {
                    return (res <= tol * vector::max_abs(&x).max(1.0)).then_some((x, res));
                }
                x = xn;
                gx = gn;
                res = rn;
                break;
            }
            t *= 0.5;
        }
    }
    (res <= tol * vector::max_abs(&x).max(1.0)).then_some((x, res))
}

/// Solves `x = λF(x)` starting from `x0`: Newton first, damped Picard as the
/// fallback.
pub fn solve_scaled(map: &MapSpec, lambda: f64, x0: &[f64], opts: &EpsOptions) -> (Option<Vector>, SolveMethod, f64) {
    let g = |x: &[f64]| vector::sub(x, &vector::scale(&map.eval(x), lambda));
    if let Some((x, r)) = newton(g, x0, opts.newton_max, opts.tol) {
        return (Some(x), SolveMethod::Newton, r);
    }
    let radius = 10.0 * opts.r_max.max(1.0);
    let pic = damped_picard(
        |z: &[f64]| Ok(vector::scale(&map.eval(z), lambda)),
        x0.to_vec(),
        0.5,
        opts.picard_max,
        opts.tol,
        radius,
    );
    if let Ok(r) = pic {
        let res = vector::max_abs(&g(&r.z));
        if r.converged && res <= 1e-8 * vector::max_abs(&r.z).max(1.0) {
            return (Some(r.z), SolveMethod::Picard, res);
        }
    }
    (None, SolveMethod::Unresolved, f64::INFINITY)
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Scans `ε(F)` over `opts.lambdas`, continuing each solve from the previous
/// solution. With `domain` set, each solution's gauge is reported too.
pub fn leray_schauder_eps_scan(map: &MapSpec, domain: Option<&PBody>, opts: &EpsOptions) -> Result<EpsReport> {
    if let Some(b) = domain {
        if b.dim() != map.dim {
            return Err(Error::DimensionMismatch { expected: b.dim(), got: map.dim });
        }
    }
    if opts.lambdas.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
        return Err(Error::Parameter("every λ must lie in (0, 1)".into()));
    }
    let mut start = vector::zeros(map.dim);
    let mut points = Vec::with_capacity(opts.lambdas.len());
    for &lambda in &opts.lambdas {
        let (x, method, residual) = solve_scaled(map, lambda, &start, opts);
        let norm = x.as_ref().map(|v| vector::norm2(v));
        let g = match (&x, domain) {
            (Some(v), Some(b)) => match gauge::gauge(b, v, 1e-9) {
                Ok(g) => Some(g),
                Err(Error::UnboundedBody) => Some(f64::INFINITY),
                Err(e) => return Err(e),
            },
            _ => None,
        };
        if let Some(v) = &x {
            start = v.clone();
        }
        points.push(EpsPoint { lambda, x, norm, gauge: g, method, residual });
    }
    let max_norm = points.iter().filter_map(|p| p.norm).fold(0.0, f64::max);
    let max_gauge = domain.map(|_| points.iter().filter_map(|p| p.gauge).fold(0.0, f64::max));
    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.lambda >= 0.5)
        .filter_map(|p| p.norm.filter(|n| *n > 1e-300).map(|n| ((1.0 - p.lambda).ln(), n.ln())))
        .collect();
    let growth_slope = slope(&fit);
    let unresolved = points.iter().any(|p| p.method == SolveMethod::Unresolved);
    let verdict = if max_norm > opts.r_max || growth_slope.is_some_and(|s| s < -0.5) {
        EpsVerdict::Growth
    } else if unresolved {
        EpsVerdict::Unresolved
    } else {
        EpsVerdict::Bounded
    };
    Ok(EpsReport { points, max_norm, max_gauge, growth_slope, r_max: opts.r_max, verdict })
}
