//! Named benchmark maps on the plane.

use super::conditions::BoundaryCondition;
use super::map::{MapKind, MapSpec, MappingClass};
use super::rothe::NonSelfCondition;

pub struct Benchmark {
    pub key: &'static str,
    pub kind: MapKind,
    pub class: MappingClass,
}

impl Benchmark {
    pub fn map(&self) -> MapSpec {
        MapSpec::from_kind(self.kind.clone(), 2, self.class).expect("benchmark maps are planar")
    }
}

pub fn benchmarks() -> Vec<Benchmark> {
    let b = |key, kind, class| Benchmark { key, kind, class };
    vec![
        b("scale_half", MapKind::Scale { c: 0.5 }, MappingClass::Condensing),
        b("scale_two", MapKind::Scale { c: 2.0 }, MappingClass::Condensing),
        b("negation", MapKind::Negation, MappingClass::Nonexpansive),
        b("rotation_30", MapKind::Rotation { degrees: 30.0, c: 1.0 }, MappingClass::Nonexpansive),
        b("rotation_scale_2", MapKind::Rotation { degrees: 30.0, c: 2.0 }, MappingClass::Condensing),
        b("rotation_contract", MapKind::Rotation { degrees: 15.0, c: 0.9 }, MappingClass::Condensing),
        b("translation", MapKind::Translation { v: vec![0.5, 0.0] }, MappingClass::Nonexpansive),
        b(
            "affine_shift",
            MapKind::Affine { a: vec![vec![0.5, 0.0], vec![0.0, 0.5]], b: vec![0.2, 0.0] },
            MappingClass::Condensing,
        ),
        b(
            "rotation_shift",
            MapKind::Compose {
                maps: vec![MapKind::Rotation { degrees: 30.0, c: 0.5 }, MapKind::Translation { v: vec![0.2, 0.1] }],
            },
            MappingClass::Condensing,
        ),
        b("polynomial", MapKind::Polynomial { coeffs: vec![0.1, 0.3, -0.2] }, MappingClass::Condensing),
    ]
}

pub fn benchmark(key: &str) -> Option<Benchmark> {
    benchmarks().into_iter().find(|b| b.key == key)
}

/// Benchmark map known to satisfy each boundary condition on unit p-balls.
pub fn condition_benchmark(c: BoundaryCondition) -> &'static str {
    match c {
        BoundaryCondition::Rothe | BoundaryCondition::ImageLePoint => "scale_half",
        _ => "negation",
    }
}

/// Benchmark map known to satisfy each non-self condition on unit p-balls.
pub fn nonself_benchmark(_c: NonSelfCondition) -> &'static str {
    "scale_half"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_unique() {
        let b = benchmarks();
        for (i, x) in b.iter().enumerate() {
            assert!(b[i + 1..].iter().all(|y| y.key != x.key));
            let m = x.map();
            assert_eq!(m.eval(&[0.1, 0.2]).len(), 2);
        }
        assert!(benchmark("negation").is_some() && benchmark("nope").is_none());
    }
}
