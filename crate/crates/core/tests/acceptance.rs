//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::time::Instant;

use pconvex::cli::{self, RunOptions, ScenarioConfig};
use pconvex::fixedpoint::bench::{self, condition_benchmark};
use pconvex::fixedpoint::{
    self, BkOptions, BoundaryCondition, CertificateKind, EpsOptions, EpsVerdict, InnerOptions, Schedule, SolveOptions, StepCase, Tolerances,
};
use pconvex::gauge::{self, PBody};
use pconvex::kkm::{self, SimplexGrid};
use pconvex::mnc::{self, DiagOperator, OperatorClass, SeqSet, Sequence};
use pconvex::pcore::{self, PExponent};
use pconvex::retract;
use pconvex::sampling;
use rand::Rng;

fn pe(p: f64) -> PExponent {
    PExponent::new(p).unwrap()
}

/// Closed-form weighted p-ball gauge `Σ w_i |x_i|^p`.
fn pball_oracle(w: &[f64], x: &[f64], p: f64) -> f64 {
    w.iter().zip(x).map(|(wi, xi)| wi * xi.abs().powf(p)).sum()
}

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn c1_gauge_agreement() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut rng = sampling::rng(101);
    for dim in [1usize, 2, 4, 8] {
        for p in [0.25, 0.5, 0.75, 1.0] {
            let w: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..2.0)).collect();
            let body = PBody::pball(w.clone(), pe(p)).unwrap();
            for _ in 0..1000 {
                let scale = rng.random_range(0.01..3.0);
                let x: Vec<f64> = sampling::gaussian(&mut rng, dim).iter().map(|v| v * scale).collect();
                let g = gauge::eval_gauge(&body, &x, 1e-9).unwrap().value;
                worst = worst.max((g - pball_oracle(&w, &x, p)).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-8 && secs < 10.0, format!("max |gauge - closed form| = {worst:.2e}, runtime {secs:.2}s"))
}

fn builtin_bodies(p: f64) -> Vec<PBody> {
    vec![
        PBody::pball(vec![1.0, 1.0], pe(p)).unwrap(),
        PBody::pball(vec![2.0, 0.5, 1.0], pe(p)).unwrap(),
        PBody::euclidean_disk(2, 1.5, pe(p)).unwrap(),
        PBody::box_body(vec![1.0, 0.5], pe(p)).unwrap(),
    ]
}

fn c2_retraction_laws() -> Outcome {
    let mut failures = Vec::new();
    let mut worst_boundary = 0.0f64;
    for p in [0.5, 1.0] {
        for (bi, body) in builtin_bodies(p).into_iter().enumerate() {
            let mut rng = sampling::rng(200 + bi as u64);
            let half = vec![2.0 * body.bound_radius(); body.dim()];
            for _ in 0..10_000 {
                let x = sampling::uniform_box(&mut rng, &half);
                let r = retract::radial_retract(&body, &x, 1e-9).unwrap();
                let inside = body.contains(&x);
                if inside && (r.point != x || !r.was_inside) {
                    failures.push(format!("identity fails at {x:?}"));
                }
                if !inside {
                    let g = gauge::eval_gauge(&body, &r.point, 1e-9).unwrap().value;
                    worst_boundary = worst_boundary.max((g - 1.0).abs());
                    if (g - 1.0).abs() > 1e-9 || !body.contains(&r.point) {
                        failures.push(format!("boundary law fails at {x:?}"));
                    }
                    if gauge::eval_gauge(&body, &x, 1e-9).unwrap().value <= 1.0 {
                        failures.push(format!("outside point with gauge ≤ 1 at {x:?}"));
                    }
                }
                let rr = retract::radial_retract(&body, &r.point, 1e-9).unwrap();
                if rr.point != r.point {
                    failures.push(format!("idempotence fails at {x:?}"));
                }
            }
        }
    }
    outcome(failures.is_empty(), format!("{} failures, max boundary gauge error {worst_boundary:.2e}", failures.len()))
}

fn c3_residual_bound() -> Outcome {
    let mut checked = 0usize;
    let mut bad = Vec::new();
    for p in [0.25, 0.5, 0.75, 1.0] {
        let body = PBody::pball(vec![1.0, 1.0], pe(p)).unwrap();
        for b in bench::benchmarks() {
            let m = b.map();
            let t = fixedpoint::approximate_fixed_point(&m, &body, &Schedule::default(), &InnerOptions::default(), &Tolerances::default())
                .unwrap();
            for s in t.steps.iter().filter(|s| s.case == StepCase::Interior) {
                checked += 1;
                let fx = m.eval(&s.x);
                let d: Vec<f64> = fx.iter().zip(&s.x).map(|(a, b)| a - b).collect();
                let residual = pball_oracle(&[1.0, 1.0], &d, p);
                let bound = ((1.0 - s.lambda) / s.lambda).powf(p);
                if residual > bound + 1e-7 {
                    bad.push(format!("{} p={p} n={}: {residual:.3e} > {bound:.3e}", b.key, s.n));
                }
            }
        }
    }
    outcome(bad.is_empty() && checked > 0, format!("{checked} interior steps checked, {} violations {:?}", bad.len(), bad.first()))
}

fn c4_best_approx_identity() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for p in [0.5, 1.0] {
        let body = PBody::pball(vec![1.0, 1.0], pe(p)).unwrap();
        let m = bench::benchmark("translation").unwrap().map();
        let (c, _) = fixedpoint::best_approx_certificate(&m, &body, &SolveOptions::default()).unwrap();
        // x0 = (1, 0), F(x0) = (1.5, 0): residual 0.5^p, identity (1.5 - 1)^p.
        let identity = (c.gauge_image.powf(1.0 / p) - 1.0).powf(p);
        let gap = (c.residual - identity).abs();
        let oracle_gap = (c.residual - 0.5f64.powf(p)).abs();
        ok &= c.kind == CertificateKind::BestApproximation && gap <= 1e-6 && oracle_gap <= 1e-6 && c.revalidate();
        details.push(format!("p={p}: {:?}, identity gap {gap:.2e}", c.kind));
    }
    outcome(ok, details.join("; "))
}

fn c5_birkhoff_kellogg() -> Outcome {
    let body = PBody::pball(vec![1.0, 1.0], pe(0.5)).unwrap();
    let doubling = bench::benchmark("scale_two").unwrap().map();
    let scan = fixedpoint::birkhoff_kellogg_scan(&doubling, &body, &BkOptions::default()).unwrap();
    let worst = scan.certificates.iter().map(|c| (c.lambda.unwrap() - 2.0).abs()).fold(0.0, f64::max);
    let ok1 = !scan.certificates.is_empty() && worst <= 1e-8;
    let rot = bench::benchmark("rotation_contract").unwrap().map();
    let scan2 = fixedpoint::birkhoff_kellogg_scan(&rot, &body, &BkOptions::default()).unwrap();
    let alt = scan2.alternative.as_ref();
    let ok2 = scan2.certificates.is_empty()
        && alt.is_some_and(|c| c.kind == CertificateKind::FixedPoint && c.residual <= 1e-8 && c.point.iter().all(|v| v.abs() <= 1e-8));
    outcome(
        ok1 && ok2,
        format!(
            "scale 2: {} directions, max |λ - 2| = {worst:.2e}; 0.9·rot(15°): {} directions, alternative {:?} residual {:.2e}",
            scan.certificates.len(),
            scan2.certificates.len(),
            alt.map(|c| c.kind),
            alt.map_or(f64::NAN, |c| c.residual)
        ),
    )
}

fn c6_leray_schauder() -> Outcome {
    let v = 0.5;
    let tr = bench::benchmark("translation").unwrap().map();
    let r = fixedpoint::leray_schauder_eps_scan(&tr, None, &EpsOptions::default()).unwrap();
    let lower_ok = r.points.iter().all(|pt| pt.norm.is_some_and(|n| n >= 0.9 * pt.lambda / (1.0 - pt.lambda) * v));
    let half = bench::benchmark("scale_half").unwrap().map();
    let r2 = fixedpoint::leray_schauder_eps_scan(&half, None, &EpsOptions::default()).unwrap();
    let ok = lower_ok && r.verdict == EpsVerdict::Growth && r2.verdict == EpsVerdict::Bounded && r2.max_norm <= 1e-8;
    outcome(
        ok,
        format!(
            "translation: verdict {:?}, slope {:.3}; contraction: verdict {:?}, max |x| = {:.1e}",
            r.verdict,
            r.growth_slope.unwrap_or(f64::NAN),
            r2.verdict,
            r2.max_norm
        ),
    )
}

fn c7_mnc_values() -> Outcome {
    let tol = 1e-9;
    let mut ok = true;
    let mut notes = Vec::new();
    let ball = SeqSet::scaled_ball(1.0, pe(0.5)).unwrap();
    let h = mnc::hausdorff_mnc(&ball, 1000, tol).unwrap();
    let k = mnc::kuratowski_mnc(&ball, 1000, tol).unwrap();
    ok &= h.lower <= 1.0 && 1.0 <= h.upper && h.gap() <= tol;
    ok &= k.lower <= 2.0 && 2.0 <= k.upper && k.gap() <= tol;
    notes.push(format!("β_H(B) ∈ [{}, {}], β_K(B) ∈ [{}, {}]", h.lower, h.upper, k.lower, k.upper));
    let mut pairs = 0;
    for p in [0.25, 0.5, 0.75, 1.0] {
        let unit_h = mnc::hausdorff_mnc(&SeqSet::scaled_ball(1.0, pe(p)).unwrap(), 1000, tol).unwrap();
        let unit_k = mnc::kuratowski_mnc(&SeqSet::scaled_ball(1.0, pe(p)).unwrap(), 1000, tol).unwrap();
        for kappa in [0.5, 2.0, 3.0] {
            let s = SeqSet::scaled_ball(kappa, pe(p)).unwrap();
            let hs = mnc::hausdorff_mnc(&s, 1000, tol).unwrap();
            let ks = mnc::kuratowski_mnc(&s, 1000, tol).unwrap();
            let f = kappa.powf(p);
            ok &= (hs.lower - f * unit_h.lower).abs() <= 1e-15 * f && (hs.upper - f * unit_h.upper).abs() <= 1e-15 * f;
            ok &= (ks.lower - f * unit_k.lower).abs() <= 1e-15 * f && (ks.upper - f * unit_k.upper).abs() <= 1e-15 * f;
            ok &= mnc::ordering_consistent(&hs, &ks);
            pairs += 1;
        }
        for set in [
            SeqSet::tail_box(Sequence::Geometric { ratio: 0.5, scale: 1.0 }, pe(p)).unwrap(),
            SeqSet::weighted_ball(Sequence::Mobius { scale: 1.0 }, pe(p)).unwrap(),
        ] {
            for n in [10, 100, 1000] {
                ok &= mnc::ordering_consistent(&mnc::hausdorff_mnc(&set, n, tol).unwrap(), &mnc::kuratowski_mnc(&set, n, tol).unwrap());
                pairs += 1;
            }
        }
    }
    notes.push(format!("scaling law and ordering on {pairs} pairs"));
    outcome(ok, notes.join("; "))
}

fn c8_operator_classification() -> Outcome {
    let ball = SeqSet::scaled_ball(1.0, pe(1.0)).unwrap();
    let half = mnc::classify_operator(&DiagOperator::new(Sequence::Constant { value: 0.5 }).unwrap(), &ball, pe(1.0), 1000, 1e-9).unwrap();
    let mob = mnc::classify_operator(&DiagOperator::new(Sequence::Mobius { scale: 1.0 }).unwrap(), &ball, pe(1.0), 1000, 1e-9).unwrap();
    let ok = half.class == OperatorClass::KSetContraction
        && (half.k - 0.5).abs() <= 1e-12
        && mob.class == OperatorClass::OneSetContractive
        && (mob.k - 1.0).abs() <= 1e-12
        && !mob.condensing;
    outcome(
        ok,
        format!("c=0.5: {:?} k={}; c_i=i/(i+1): {:?} k={} condensing={}", half.class, half.k, mob.class, mob.k, mob.condensing),
    )
}

fn c9_scaling_and_monotone() -> Outcome {
    let mut violations = 0usize;
    let mut instances = 0usize;
    for (bi, body) in builtin_bodies(0.5).into_iter().enumerate() {
        let member = body.membership();
        let mut rng = sampling::rng(900 + bi as u64);
        // x ∈ A ⇒ αx ∈ A for α ∈ (0, 1]
        let mut tested = 0;
        while tested < 10_000 {
            let x = body.sample_member(&mut rng);
            let a: f64 = 1.0 - rng.random::<f64>();
            tested += 1;
            if !member(&x.iter().map(|v| a * v).collect::<Vec<_>>()) {
                violations += 1;
            }
        }
        instances += tested;
        // p-convex ⇒ s-convex for s ∈ (0, p]
        for (k, s) in [0.1, 0.25, 0.4, 0.5].into_iter().enumerate() {
            let m = member.clone();
            let rep = pcore::check_p_convex(move |x: &[f64]| m(x), pe(s), |r| body.sample_member(r), 77 + k as u64, 2500);
            instances += rep.tested;
            if !rep.passed() {
                violations += 1;
            }
        }
    }
    // A disk not containing 0 is convex but not p-convex for p < 1.
    let shifted = |x: &[f64]| (x[0] - 2.0).powi(2) + x[1] * x[1] <= 1.0;
    let rep = pcore::check_p_convex(shifted, pe(0.5), |r| sampling::uniform_box(r, &[3.0, 1.0]), 5, 10_000);
    let witness_ok = rep.violation.as_ref().is_some_and(|v| shifted(&v.x) && shifted(&v.y) && !shifted(&v.combination));
    outcome(
        violations == 0 && witness_ok,
        format!(
            "{instances} instances, {violations} violations; shifted disk witness {:?}",
            rep.violation.as_ref().map(|v| (v.x.clone(), v.y.clone(), v.u))
        ),
    )
}

fn c10_admissible_scan() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [0.25, 0.5, 0.75] {
        let set = retract::admissible_r_scan(pe(p), 10.0, 1e-4).unwrap();
        let pts = set.points();
        let exact = pts.len() == 2 && pts[0].abs() <= 1e-4 && (pts[1] - 1.0).abs() <= 1e-4 && !set.is_dense();
        ok &= exact;
        notes.push(format!("p={p}: {pts:?}"));
    }
    let dense = retract::admissible_r_scan(pe(1.0), 10.0, 1e-4).unwrap();
    ok &= dense.is_dense();
    notes.push(format!("p=1: dense={}", dense.is_dense()));
    outcome(ok, notes.join("; "))
}

fn c11_kkm() -> Outcome {
    let start = Instant::now();
    let bary = [1.0 / 3.0; 3];
    let near = |t: &[f64]| t.iter().zip(&bary).all(|(a, b)| (a - b).abs() <= 1e-12);
    let fam = kkm::threshold_family(2, 1.0 / 3.0).unwrap();
    let mut ok = true;
    let mut at60 = 0.0;
    for res in (3..=60).step_by(3) {
        let t0 = Instant::now();
        let r = kkm::kkm_verify(&fam, &SimplexGrid::new(2, res).unwrap(), pe(0.5)).unwrap();
        if res == 60 {
            at60 = t0.elapsed().as_secs_f64();
        }
        ok &= r.is_kkm && r.intersection_witnesses.iter().any(|w| near(w));
    }
    let bad = kkm::threshold_family(2, 0.6).unwrap();
    let r = kkm::kkm_verify(&bad, &SimplexGrid::new(2, 60).unwrap(), pe(0.5)).unwrap();
    let rejected = !r.is_kkm && r.violation.as_ref().is_some_and(|v| near(&v.t));
    outcome(
        ok && rejected && at60 < 5.0,
        format!("1/3-threshold covers at all 20 resolutions; 0.6-threshold rejected={rejected}; resolution 60 in {at60:.3}s (total {:.2}s)", start.elapsed().as_secs_f64()),
    )
}

fn c12_condition_implication() -> Outcome {
    let named = [
        BoundaryCondition::Rothe,
        BoundaryCondition::Petryshyn,
        BoundaryCondition::Altman,
        BoundaryCondition::ImageLePoint,
        BoundaryCondition::ImageLeDisplacement,
        BoundaryCondition::SumLeImage,
        BoundaryCondition::SumLePoint,
        BoundaryCondition::SumLeDisplacement,
        BoundaryCondition::ImageSumLePointSq,
        BoundaryCondition::ImageSumLeDisplacementPoint,
    ];
    let mut failed = Vec::new();
    for p in [0.5, 1.0] {
        let body = PBody::pball(vec![1.0, 1.0], pe(p)).unwrap();
        for c in named {
            let m = bench::benchmark(condition_benchmark(c)).unwrap().map();
            match fixedpoint::fixed_point_under(&m, &body, c, None, 1000, &SolveOptions::default()) {
                Ok(o) if o.certificate.kind == CertificateKind::FixedPoint && o.report.results[0].satisfied => {}
                other => failed.push(format!("{} p={p}: {:?}", c.name(), other.map(|o| o.certificate.kind))),
            }
        }
    }
    outcome(failed.is_empty(), format!("{} conditions × 2 exponents, failures: {failed:?}", named.len()))
}

fn c13_determinism() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut paths: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|e| e == "json")).collect();
    paths.sort();
    let mut same = true;
    for path in &paths {
        let cfg = ScenarioConfig::load(path).unwrap();
        let a = cli::run_config(&cfg, &RunOptions { seed: Some(2024), ..RunOptions::default() }).unwrap();
        let b = cli::run_config(&cfg, &RunOptions { seed: Some(2024), parallel: true, ..RunOptions::default() }).unwrap();
        same &= a.body_string() == b.body_string();
    }
    outcome(same && !paths.is_empty(), format!("{} scenarios, sequential vs parallel bodies identical={same}", paths.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("gauge agreement", c1_gauge_agreement),
        ("retraction laws", c2_retraction_laws),
        ("residual bound", c3_residual_bound),
        ("best-approximation identity", c4_best_approx_identity),
        ("Birkhoff-Kellogg scan", c5_birkhoff_kellogg),
        ("Leray-Schauder eps(F)", c6_leray_schauder),
        ("MNC values", c7_mnc_values),
        ("operator classification", c8_operator_classification),
        ("scaling and monotone regime", c9_scaling_and_monotone),
        ("admissible r scan", c10_admissible_scan),
        ("KKM", c11_kkm),
        ("boundary-condition implication", c12_condition_implication),
        ("determinism", c13_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let o = f();
        println!("criterion {:>2} {} {name}: {}", i + 1, if o.ok { "PASS" } else { "FAIL" }, o.detail);
        if !o.ok {
            failed += 1;
        }
    }
    println!("acceptance: {} of 13 criteria passed", 13 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
