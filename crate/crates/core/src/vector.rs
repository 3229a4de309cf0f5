//! Small dense-vector helpers. Points are plain `Vec<f64>` throughout the crate.

pub type Vector = Vec<f64>;

pub fn zeros(dim: usize) -> Vector {
    vec![0.0; dim]
}

pub fn add(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vector {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * (b - a)`
pub fn lerp(a: &[f64], b: &[f64], s: f64) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn dist_max(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn is_zero(a: &[f64]) -> bool {
    a.iter().all(|x| *x == 0.0)
}

pub fn is_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}
