//! Built-in registry listing.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Entry {
    pub category: &'static str,
    pub name: &'static str,
    pub signature: &'static str,
}

const fn e(category: &'static str, name: &'static str, signature: &'static str) -> Entry {
    Entry { category, name, signature }
}

pub const BODIES: &[Entry] = &[
    e("body", "box", "half_widths: [f64; dim]"),
    e("body", "euclidean_disk", "radius: f64 = 1"),
    e("body", "pball", "weights: [f64; dim] = ones"),
];

pub const MAPS: &[Entry] = &[
    e("map", "affine", "a: [[f64]], b: [f64]"),
    e("map", "compose", "maps: [map]"),
    e("map", "negation", ""),
    e("map", "polynomial", "coeffs: [f64]"),
    e("map", "rotation", "degrees: f64, c: f64"),
    e("map", "scale", "c: f64"),
    e("map", "translation", "v: [f64; dim]"),
];

pub const HOMOTOPIES: &[Entry] = &[
    e("homotopy", "affine_path", "v: [f64; dim]"),
    e("homotopy", "linear_scaling", ""),
];

pub const SEQUENCES: &[Entry] = &[
    e("sequence", "constant", "value: f64"),
    e("sequence", "geometric", "ratio: f64, scale: f64 = 1"),
    e("sequence", "mobius", "scale: f64 = 1"),
    e("sequence", "power", "exponent: f64, scale: f64 = 1"),
    e("sequence", "product", "factors: [sequence]"),
];

pub const PREDICATES: &[Entry] = &[
    e("predicate", "all", ""),
    e("predicate", "and", "terms: [predicate]"),
    e("predicate", "ball", "center: [f64], radius: f64"),
    e("predicate", "coord_ge", "index: usize, value: f64"),
    e("predicate", "empty", ""),
    e("predicate", "halfspace", "normal: [f64], offset: f64"),
    e("predicate", "not", "term: predicate"),
    e("predicate", "or", "terms: [predicate]"),
];

/// Every entry whose name contains `filter`, sorted by category then name.
pub fn list_builtins(filter: Option<&str>) -> Vec<Entry> {
    let mut all: Vec<Entry> = [BODIES, MAPS, HOMOTOPIES, SEQUENCES, PREDICATES]
        .iter()
        .flat_map(|s| s.iter().copied())
        .filter(|e| filter.is_none_or(|f| e.name.contains(f)))
        .collect();
    all.sort();
    all
}

pub fn format_listing(entries: &[Entry]) -> String {
    entries.iter().map(|e| format!("{:<10} {}({})\n", e.category, e.name, e.signature)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_filter() {
        let names: Vec<_> = list_builtins(Some("ball")).iter().map(|e| e.name).collect();
        assert_eq!(names, ["pball", "ball"]);
    }

    #[test]
    fn full_listing_is_sorted() {
        let all = list_builtins(None);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        for n in ["pball", "affine", "geometric", "coord_ge"] {
            assert!(all.iter().any(|e| e.name == n));
        }
        assert_eq!(list_builtins(Some("")).len(), all.len());
    }
}
