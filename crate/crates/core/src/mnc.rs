//! Kuratowski and Hausdorff measures of noncompactness for a family of sets in
//! the sequence metric `d_p(x, y) = Σ |x_i - y_i|^p`, and the classification
//! of diagonal operators by how they scale those measures.
//!
//! Every value comes as a bracket `[lower, upper]` backed by explicit
//! constructions at a truncation level `N`: truncated nets and diameter
//! covers give upper bounds, infinite separated families give lower bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pcore::PExponent;

/// Terms summed explicitly before the integral remainder bound.
const EXPLICIT_TAIL_TERMS: usize = 1000;

fn one() -> f64 {
    1.0
}

/// Closed-form sequence `a_1, a_2, ...`. Only `|a_i|` enters the measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sequence {
    /// `scale · ratio^i`
    Geometric {
        ratio: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · i^(-exponent)`
    Power {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Constant { value: f64 },
    /// `scale · i / (i + 1)`
    Mobius {
        #[serde(default = "one")]
        scale: f64,
    },
    /// Termwise product.
    Product { factors: Vec<Sequence> },
}

impl Sequence {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("sequence {what} must be finite")))
            }
        };
        match self {
            Sequence::Geometric { ratio, scale } => {
                finite(*ratio, "ratio")?;
                finite(*scale, "scale")?;
                if *ratio < 0.0 {
                    return Err(Error::Parameter("geometric ratio must be non-negative".into()));
                }
                Ok(())
            }
            Sequence::Power { exponent, scale } => {
                finite(*exponent, "exponent")?;
                finite(*scale, "scale")
            }
            Sequence::Constant { value } => finite(*value, "value"),
            Sequence::Mobius { scale } => finite(*scale, "scale"),
            Sequence::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::Parameter("product needs at least one factor".into()));
                }
                factors.iter().try_for_each(Sequence::validate)
            }
        }
    }

    /// `a_i` for `i ≥ 1`.
    pub fn term(&self, i: usize) -> f64 {
        let fi = i as f64;
        match self {
            Sequence::Geometric { ratio, scale } => scale * ratio.powf(fi),
            Sequence::Power { exponent, scale } => scale * fi.powf(-exponent),
            Sequence::Constant { value } => *value,
            Sequence::Mobius { scale } => scale * fi / (fi + 1.0),
            Sequence::Product { factors } => factors.iter().map(|f| f.term(i)).product(),
        }
    }

    /// Multiplies every term by `k`.
    pub fn scaled(&self, k: f64) -> Sequence {
        match self {
            Sequence::Geometric { ratio, scale } => Sequence::Geometric { ratio: *ratio, scale: scale * k },
            Sequence::Power { exponent, scale } => Sequence::Power { exponent: *exponent, scale: scale * k },
            Sequence::Constant { value } => Sequence::Constant { value: value * k },
            Sequence::Mobius { scale } => Sequence::Mobius { scale: scale * k },
            Sequence::Product { factors } => {
                let mut f = factors.clone();
                f[0] = f[0].scaled(k);
                Sequence::Product { factors: f }
            }
        }
    }

    /// `sup_{i > n} |a_i|` (an upper bound for products).
    pub fn tail_sup(&self, n: usize) -> f64 {
        let m = (n + 1) as f64;
        match self {
            Sequence::Geometric { ratio, scale } => {
                if *scale == 0.0 {
                    0.0
                } else if *ratio <= 1.0 {
                    scale.abs() * ratio.powf(m)
                } else {
                    f64::INFINITY
                }
            }
            Sequence::Power { exponent, scale } => {
                if *scale == 0.0 {
                    0.0
                } else if *exponent >= 0.0 {
                    scale.abs() * m.powf(-exponent)
                } else {
                    f64::INFINITY
                }
            }
            Sequence::Constant { value } => value.abs(),
            Sequence::Mobius { scale } => scale.abs(),
            Sequence::Product { factors } => factors.iter().map(|f| f.tail_sup(n)).product(),
        }
    }

    /// `inf_{i > n} |a_i|` (a lower bound for products).
    pub fn tail_inf(&self, n: usize) -> f64 {
        let m = (n + 1) as f64;
        match self {
            Sequence::Geometric { ratio, scale } => {
                if *ratio >= 1.0 {
                    scale.abs() * ratio.powf(m)
                } else {
                    0.0
                }
            }
            Sequence::Power { exponent, scale } => {
                if *exponent <= 0.0 {
                    scale.abs() * m.powf(-exponent)
                } else {
                    0.0
                }
            }
            Sequence::Constant { value } => value.abs(),
            Sequence::Mobius { scale } => scale.abs() * m / (m + 1.0),
            Sequence::Product { factors } => factors.iter().map(|f| f.tail_inf(n)).product(),
        }
    }

    /// `limsup |a_i|` (an upper bound for products).
    pub fn limsup(&self) -> f64 {
        match self {
            Sequence::Geometric { ratio, scale } => {
                if *scale == 0.0 || *ratio < 1.0 {
                    0.0
                } else if *ratio == 1.0 {
                    scale.abs()
                } else {
                    f64::INFINITY
                }
            }
            Sequence::Power { exponent, scale } => {
                if *scale == 0.0 || *exponent > 0.0 {
                    0.0
                } else if *exponent == 0.0 {
                    scale.abs()
                } else {
                    f64::INFINITY
                }
            }
            Sequence::Constant { value } => value.abs(),
            Sequence::Mobius { scale } => scale.abs(),
            Sequence::Product { factors } => factors.iter().map(Sequence::limsup).product(),
        }
    }

    /// `sup_i |a_i|` over all indices.
    pub fn sup(&self) -> f64 {
        self.tail_sup(0)
    }

    /// Whether some finite index reaches `sup_i |a_i|`. Products report false.
    pub fn sup_attained(&self) -> bool {
        match self {
            Sequence::Geometric { ratio, scale } => *scale == 0.0 || *ratio <= 1.0,
            Sequence::Power { exponent, scale } => *scale == 0.0 || *exponent >= 0.0,
            Sequence::Constant { .. } => true,
            Sequence::Mobius { scale } => *scale == 0.0,
            Sequence::Product { .. } => false,
        }
    }

    /// Certified upper bound on `Σ_{i > n} |a_i|^p`; infinite when divergent.
    pub fn tail_power_sum(&self, n: usize, p: PExponent) -> f64 {
        let pv = p.get();
        match self {
            Sequence::Geometric { ratio, scale } => {
                if *scale == 0.0 || *ratio == 0.0 {
                    0.0
                } else if *ratio < 1.0 {
                    let rp = ratio.powf(pv);
                    scale.abs().powf(pv) * rp.powf((n + 1) as f64) / (1.0 - rp)
                } else {
                    f64::INFINITY
                }
            }
            Sequence::Power { exponent, scale } => {
                let q = exponent * pv;
                if *scale == 0.0 {
                    0.0
                } else if q > 1.0 {
                    let explicit: f64 = (n + 1..=n + EXPLICIT_TAIL_TERMS).map(|i| (i as f64).powf(-q)).sum();
                    let m = (n + EXPLICIT_TAIL_TERMS) as f64;
                    scale.abs().powf(pv) * (explicit + m.powf(1.0 - q) / (q - 1.0))
                } else {
                    f64::INFINITY
                }
            }
            Sequence::Constant { value } => {
                if *value == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Sequence::Mobius { scale } => {
                if *scale == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Sequence::Product { factors } => (0..factors.len())
                .map(|j| {
                    let rest: f64 = factors
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, f)| f.tail_sup(n).powf(pv))
                        .product();
                    let s = factors[j].tail_power_sum(n, p);
                    if rest == 0.0 {
                        0.0
                    } else {
                        s * rest
                    }
                })
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Sets with analytic nets and packings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeqSetKind {
    /// `{x : |x_i| ≤ a_i}` with `Σ a_i^p < ∞`.
    TailBox { edges: Sequence },
    /// `κ · {x : Σ |x_i|^p ≤ 1}`
    ScaledBall { kappa: f64 },
    /// `{(a_i y_i) : Σ |y_i|^p ≤ 1}`, the image of the unit ball under a
    /// diagonal operator.
    WeightedBall { weights: Sequence },
    Union { sets: Vec<SeqSetKind> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeqSet {
    pub kind: SeqSetKind,
    pub p: PExponent,
}

impl SeqSet {
    pub fn new(kind: SeqSetKind, p: PExponent) -> Result<Self> {
        validate_kind(&kind, p)?;
        Ok(SeqSet { kind, p })
    }

    pub fn tail_box(edges: Sequence, p: PExponent) -> Result<Self> {
        SeqSet::new(SeqSetKind::TailBox { edges }, p)
    }

    pub fn scaled_ball(kappa: f64, p: PExponent) -> Result<Self> {
        SeqSet::new(SeqSetKind::ScaledBall { kappa }, p)
    }

    pub fn weighted_ball(weights: Sequence, p: PExponent) -> Result<Self> {
        SeqSet::new(SeqSetKind::WeightedBall { weights }, p)
    }

    pub fn union(sets: Vec<SeqSet>) -> Result<Self> {
        let p = sets.first().ok_or_else(|| Error::Parameter("empty union".into()))?.p;
        if sets.iter().any(|s| s.p != p) {
            return Err(Error::Parameter("union members must share p".into()));
        }
        SeqSet::new(SeqSetKind::Union { sets: sets.into_iter().map(|s| s.kind).collect() }, p)
    }

    /// `κ · A`.
    pub fn scaled(&self, kappa: f64) -> Result<Self> {
        SeqSet::new(scale_kind(&self.kind, kappa), self.p)
    }

    /// True when the set is compact, i.e. both measures vanish.
    pub fn is_compact(&self) -> bool {
        kind_is_compact(&self.kind)
    }
}

fn validate_kind(kind: &SeqSetKind, p: PExponent) -> Result<()> {
    match kind {
        SeqSetKind::TailBox { edges } => {
            edges.validate()?;
            if !edges.tail_power_sum(0, p).is_finite() {
                return Err(Error::UnboundedSet(format!("edge sequence {edges:?} is not p-summable at p={}", p.get())));
            }
            Ok(())
        }
        SeqSetKind::ScaledBall { kappa } => {
            if kappa.is_finite() && *kappa > 0.0 {
                Ok(())
            } else {
                Err(Error::Parameter("scaled ball needs kappa > 0".into()))
            }
        }
        SeqSetKind::WeightedBall { weights } => {
            weights.validate()?;
            if !weights.sup().is_finite() {
                return Err(Error::UnboundedSet(format!("ball weights {weights:?} are unbounded")));
            }
            Ok(())
        }
        SeqSetKind::Union { sets } => {
            if sets.is_empty() {
                return Err(Error::Parameter("empty union".into()));
            }
            sets.iter().try_for_each(|s| validate_kind(s, p))
        }
    }
}

fn scale_kind(kind: &SeqSetKind, k: f64) -> SeqSetKind {
    match kind {
        SeqSetKind::TailBox { edges } => SeqSetKind::TailBox { edges: edges.scaled(k.abs()) },
        SeqSetKind::ScaledBall { kappa } => SeqSetKind::ScaledBall { kappa: kappa * k.abs() },
        SeqSetKind::WeightedBall { weights } => SeqSetKind::WeightedBall { weights: weights.scaled(k.abs()) },
        SeqSetKind::Union { sets } => SeqSetKind::Union { sets: sets.iter().map(|s| scale_kind(s, k)).collect() },
    }
}

fn kind_is_compact(kind: &SeqSetKind) -> bool {
    match kind {
        SeqSetKind::TailBox { .. } => true,
        SeqSetKind::ScaledBall { .. } => false,
        SeqSetKind::WeightedBall { weights } => weights.limsup() == 0.0,
        SeqSetKind::Union { sets } => sets.iter().all(kind_is_compact),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MncBracket {
    pub lower: f64,
    pub upper: f64,
    pub truncation_level: usize,
    /// Midpoint, reported only when `upper - lower ≤ tol`.
    pub value: Option<f64>,
}

impl MncBracket {
    fn new(lower: f64, upper: f64, truncation_level: usize, tol: f64) -> Self {
        let value = (upper - lower <= tol).then_some(0.5 * (lower + upper));
        MncBracket { lower, upper, truncation_level, value }
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

fn check_truncation(truncation: usize) -> Result<()> {
    if truncation == 0 {
        return Err(Error::Parameter("truncation must be at least 1".into()));
    }
    Ok(())
}

/// `(lower, upper)` for the Hausdorff measure at truncation `n`.
fn hausdorff_bounds(kind: &SeqSetKind, n: usize, p: PExponent) -> (f64, f64) {
    let pv = p.get();
    match kind {
        // Net: drop coordinates past n, cover the compact head finely.
        SeqSetKind::TailBox { edges } => (0.0, edges.tail_power_sum(n, p)),
        // Packing κ e_i (pairwise 2κ^p) against the truncation net.
        SeqSetKind::ScaledBall { kappa } => {
            let v = kappa.powf(pv);
            (v, v)
        }
        SeqSetKind::WeightedBall { weights } => (weights.tail_inf(n).powf(pv), weights.tail_sup(n).powf(pv)),
        SeqSetKind::Union { sets } => sets
            .iter()
            .map(|s| hausdorff_bounds(s, n, p))
            .fold((0.0, 0.0), |(l, u), (a, b)| (l.max(a), u.max(b))),
    }
}

fn kuratowski_bounds(kind: &SeqSetKind, n: usize, p: PExponent) -> (f64, f64) {
    let pv = p.get();
    match kind {
        // Tail piece diameter: Σ_{i>n} (2 a_i)^p.
        SeqSetKind::TailBox { edges } => (0.0, 2f64.powf(pv) * edges.tail_power_sum(n, p)),
        SeqSetKind::ScaledBall { .. } | SeqSetKind::WeightedBall { .. } => {
            let (l, u) = hausdorff_bounds(kind, n, p);
            (2.0 * l, 2.0 * u)
        }
        SeqSetKind::Union { sets } => sets
            .iter()
            .map(|s| kuratowski_bounds(s, n, p))
            .fold((0.0, 0.0), |(l, u), (a, b)| (l.max(a), u.max(b))),
    }
}

/// Hausdorff measure `β_H` (infimum of radii of finite nets).
pub fn hausdorff_mnc(set: &SeqSet, truncation: usize, tol: f64) -> Result<MncBracket> {
    check_truncation(truncation)?;
    let (l, u) = hausdorff_bounds(&set.kind, truncation, set.p);
    Ok(MncBracket::new(l, u, truncation, tol))
}

/// Kuratowski measure `β_K` (infimum of diameters of finite covers).
pub fn kuratowski_mnc(set: &SeqSet, truncation: usize, tol: f64) -> Result<MncBracket> {
    check_truncation(truncation)?;
    let (l, u) = kuratowski_bounds(&set.kind, truncation, set.p);
    Ok(MncBracket::new(l, u, truncation, tol))
}

/// Whether the brackets admit values with `β_H ≤ β_K ≤ 2 β_H`.
pub fn ordering_consistent(h: &MncBracket, k: &MncBracket) -> bool {
    let slack = 1e-12 * (1.0 + h.upper.max(k.upper));
    h.lower <= k.upper + slack && k.lower <= 2.0 * h.upper + slack
}

/// Diagonal operator `(Tx)_i = c_i x_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagOperator {
    pub coefficients: Sequence,
}

impl DiagOperator {
    pub fn new(coefficients: Sequence) -> Result<Self> {
        coefficients.validate()?;
        if !coefficients.sup().is_finite() {
            return Err(Error::UnboundedOperator(format!("coefficients {coefficients:?} are unbounded")));
        }
        Ok(DiagOperator { coefficients })
    }

    /// Image of a set; diagonal maps send balls and boxes to weighted balls
    /// and boxes.
    pub fn image(&self, set: &SeqSet) -> Result<SeqSet> {
        SeqSet::new(self.image_kind(&set.kind), set.p)
    }

    fn image_kind(&self, kind: &SeqSetKind) -> SeqSetKind {
        let c = &self.coefficients;
        match kind {
            SeqSetKind::TailBox { edges } => SeqSetKind::TailBox {
                edges: Sequence::Product { factors: vec![edges.clone(), c.clone()] },
            },
            SeqSetKind::ScaledBall { kappa } => SeqSetKind::WeightedBall { weights: c.scaled(*kappa) },
            SeqSetKind::WeightedBall { weights } => SeqSetKind::WeightedBall {
                weights: Sequence::Product { factors: vec![weights.clone(), c.clone()] },
            },
            SeqSetKind::Union { sets } => SeqSetKind::Union { sets: sets.iter().map(|s| self.image_kind(s)).collect() },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorClass {
    KSetContraction,
    OneSetContractive,
    Expansive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    /// `limsup |c_i|^p`
    pub k: f64,
    pub class: OperatorClass,
    pub condensing: bool,
    /// Whether `sup |c_i|` is reached at a finite index.
    pub sup_attained: bool,
    pub set_bracket: MncBracket,
    pub image_bracket: MncBracket,
}

/// Classifies a diagonal operator by its noncompactness constant
/// `k = limsup |c_i|^p`, cross-checked against the measures of `set` and of
/// its image.
pub fn classify_operator(op: &DiagOperator, set: &SeqSet, p: PExponent, truncation: usize, tol: f64) -> Result<Classification> {
    if set.p != p {
        return Err(Error::Parameter("set and operator must use the same p".into()));
    }
    let k = op.coefficients.limsup().powf(p.get());
    if !k.is_finite() {
        return Err(Error::UnboundedOperator("limsup of coefficients is infinite".into()));
    }
    let class = if k < 1.0 {
        OperatorClass::KSetContraction
    } else if k == 1.0 {
        OperatorClass::OneSetContractive
    } else {
        OperatorClass::Expansive
    };
    let image = op.image(set)?;
    Ok(Classification {
        k,
        class,
        condensing: class == OperatorClass::KSetContraction,
        sup_attained: op.coefficients.sup_attained(),
        set_bracket: hausdorff_mnc(set, truncation, tol)?,
        image_bracket: hausdorff_mnc(&image, truncation, tol)?,
    })
}
