//! Exact-algebra checks for one root system: group structure, reduced
//! words, the projection `π`, facets and fibers, and the chamber distance.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::Result;
use crate::folding::{
    distance_oracle, enumerate_facets, face_point, facet_signature, fold_facet, fold_signs_symbolic,
    orbit_project_oracle, FoldingOperator, Sign, DEFAULT_SIGNATURE_TOL,
};
use crate::rng::{stream_rng, SimRng};
use crate::rootsys::{
    generate_group, longest_element, max_abs_diff, random_reduced_word_w0, RootSystem, Vector, WeylGroup,
};

pub const WORD_TOL: f64 = 1e-11;
pub const ORBIT_TOL: f64 = 1e-10;
pub const DISTANCE_TOL: f64 = 1e-9;
pub const FACET_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AlgebraConfig {
    /// Random points per sampled check.
    pub points: usize,
    /// Random reduced words compared against the default one.
    pub words: usize,
    pub seed: u64,
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        Self { points: 1000, words: 8, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    fn exact(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, max_deviation: None, tolerance: None, detail: detail.into() }
    }

    fn within(name: &str, dev: f64, tol: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: dev < tol,
            max_deviation: Some(dev),
            tolerance: Some(tol),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraReport {
    pub family: String,
    pub dim: usize,
    pub rank: usize,
    pub group_order: usize,
    pub positive_roots: usize,
    pub facets: usize,
    pub longest_word: Vec<usize>,
    pub config: AlgebraConfig,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

fn gaussian_point(rng: &mut SimRng, dim: usize, scale: f64) -> Vector {
    Vector::from_iterator(dim, (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)))
}

pub fn run_algebra_suite(rs: &RootSystem, cfg: AlgebraConfig) -> Result<AlgebraReport> {
    let w = generate_group(rs)?;
    let op = FoldingOperator::new(rs)?;
    let mut checks = vec![
        check_group(rs, &w),
        check_longest(rs, &w, &op)?,
        check_simple_permutes_positive(rs),
        check_word_independence(rs, &op, cfg)?,
        check_projection(rs, &w, &op, cfg)?,
        check_contraction(rs, &op, cfg),
        check_hyperplanes(rs, &op, cfg),
    ];
    let facets = enumerate_facets(rs, &w, DEFAULT_SIGNATURE_TOL)?;
    checks.push(check_facet_reflection(rs, &facets));
    checks.push(check_fold_facet(rs, &facets)?);
    checks.push(check_fibers(rs, &w, &op, &facets, cfg));
    if rs.rank() <= 4 {
        checks.push(check_distance(rs, &w, &op, cfg)?);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(AlgebraReport {
        family: rs.family().to_string(),
        dim: rs.dim(),
        rank: rs.rank(),
        group_order: w.len(),
        positive_roots: rs.positive().len(),
        facets: facets.len(),
        longest_word: op.word().to_vec(),
        config: cfg,
        checks,
        passed,
    })
}

fn check_group(rs: &RootSystem, w: &WeylGroup) -> CheckResult {
    let tol = 1e-10;
    let mut ok = true;
    for g in w.elements() {
        ok &= g.is_orthogonal(tol);
        ok &= rs.roots().iter().all(|r| rs.root_index(g.apply(r.as_slice()).as_slice(), tol).is_some());
    }
    CheckResult::exact("group_orthogonal_and_permutes_roots", ok, format!("|W| = {}", w.len()))
}

fn check_longest(rs: &RootSystem, w: &WeylGroup, op: &FoldingOperator) -> Result<CheckResult> {
    let len_ok = op.word().len() == rs.positive().len();
    let w0 = longest_element(rs, w)?;
    let flips = rs.positive().iter().all(|a| {
        let img = w0.apply(a.as_slice());
        rs.positive().iter().any(|b| max_abs_diff(b.as_slice(), (-img.clone()).as_slice()) < 1e-10)
    });
    Ok(CheckResult::exact(
        "longest_word",
        len_ok && flips,
        format!("length {} vs |R+| = {}, w0(R+) = -R+: {flips}", op.word().len(), rs.positive().len()),
    ))
}

fn check_simple_permutes_positive(rs: &RootSystem) -> CheckResult {
    let tol = 1e-10;
    let mut ok = true;
    for (ai, a) in rs.simple().iter().enumerate() {
        for (bi, b) in rs.positive().iter().enumerate() {
            if ai == bi {
                continue;
            }
            let img = a.reflect(b.vector());
            ok &= rs.positive().iter().enumerate().any(|(ci, c)| ci != ai && max_abs_diff(c.as_slice(), img.as_slice()) < tol);
        }
    }
    CheckResult::exact("simple_reflection_permutes_positive", ok, "s_a(R+ \\ {a}) = R+ \\ {a}")
}

fn check_word_independence(rs: &RootSystem, op: &FoldingOperator, cfg: AlgebraConfig) -> Result<CheckResult> {
    let mut rng = stream_rng(cfg.seed, 1);
    let mut others = Vec::new();
    for _ in 0..cfg.words {
        let word = random_reduced_word_w0(rs, &mut rng)?;
        others.push(FoldingOperator::with_word(rs, word)?);
    }
    let mut dev: f64 = 0.0;
    for _ in 0..cfg.points {
        let x = gaussian_point(&mut rng, rs.dim(), 2.0);
        let base = op.project(&x);
        for o in &others {
            dev = dev.max(max_abs_diff(base.as_slice(), o.project(&x).as_slice()));
        }
    }
    let distinct = {
        let mut ws: Vec<&[usize]> = others.iter().map(|o| o.word()).collect();
        ws.push(op.word());
        ws.sort();
        ws.dedup();
        ws.len()
    };
    Ok(CheckResult::within("word_independence", dev, WORD_TOL, format!("{distinct} distinct reduced words")))
}

fn check_projection(rs: &RootSystem, w: &WeylGroup, op: &FoldingOperator, cfg: AlgebraConfig) -> Result<CheckResult> {
    let mut rng = stream_rng(cfg.seed, 2);
    let mut dev: f64 = 0.0;
    let mut inside = true;
    for _ in 0..cfg.points {
        let x = gaussian_point(&mut rng, rs.dim(), 2.0);
        let p = op.project(&x);
        inside &= rs.in_closed_chamber(p.as_slice(), 1e-12);
        dev = dev.max(max_abs_diff(p.as_slice(), orbit_project_oracle(w, rs, &x)?.as_slice()));
        dev = dev.max(max_abs_diff(p.as_slice(), op.project(&p).as_slice()));
    }
    let mut res = CheckResult::within("projection_is_orbit_representative", dev, ORBIT_TOL, format!("in closed chamber: {inside}"));
    res.passed &= inside;
    Ok(res)
}

fn check_contraction(rs: &RootSystem, op: &FoldingOperator, cfg: AlgebraConfig) -> CheckResult {
    let mut rng = stream_rng(cfg.seed, 3);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cfg.points {
        let x = gaussian_point(&mut rng, rs.dim(), 2.0);
        let y = gaussian_point(&mut rng, rs.dim(), 2.0);
        worst = worst.max((op.project(&x) - op.project(&y)).norm() - (x - y).norm());
    }
    CheckResult::exact("contraction", worst <= 1e-12, format!("max |pi(x)-pi(y)| - |x-y| = {worst:.3e}"))
}

/// Points on hyperplanes stay on the arrangement under each `r_α` and fold
/// onto the chamber boundary; generic points fold into the open chamber.
fn check_hyperplanes(rs: &RootSystem, op: &FoldingOperator, cfg: AlgebraConfig) -> CheckResult {
    let tol = 1e-9;
    let mut rng = stream_rng(cfg.seed, 4);
    let on_arrangement = |x: &Vector| rs.positive().iter().any(|b| b.dot(x.as_slice()).abs() < tol);
    let mut ok = true;
    for k in 0..cfg.points {
        let beta = &rs.positive()[k % rs.positive().len()];
        let g = gaussian_point(&mut rng, rs.dim(), 2.0);
        let x = &g - beta.vector() * beta.dot(g.as_slice());
        for a in rs.simple() {
            ok &= on_arrangement(&crate::folding::r_alpha(a, &x));
        }
        let p = op.project(&x);
        ok &= rs.simple().iter().any(|a| a.dot(p.as_slice()).abs() < tol);
        if !on_arrangement(&g) {
            let pg = op.project(&g);
            ok &= rs.simple().iter().all(|a| a.dot(pg.as_slice()) > 0.0);
        }
    }
    CheckResult::exact("hyperplane_arrangement_preserved", ok, "x on some H_b <=> pi(x) on the chamber boundary")
}

/// Reflections map `𝓕` to itself with the stated support.
fn check_facet_reflection(rs: &RootSystem, facets: &[crate::folding::FacetEntry]) -> CheckResult {
    let mut ok = true;
    for f in facets {
        let beta = &rs.positive()[f.support];
        for (ai, a) in rs.simple().iter().enumerate() {
            let img = a.reflect(&f.signature.witness);
            let sig = facet_signature(rs, &img, DEFAULT_SIGNATURE_TOL);
            let want = if f.support == ai {
                Some(ai)
            } else {
                rs.positive_index_up_to_sign(a.reflect(beta.vector()).as_slice(), 1e-10).map(|(j, _)| j)
            };
            ok &= want.is_some() && sig.support() == want && facets.iter().any(|e| e.signature.same_facet(&sig));
        }
    }
    CheckResult::exact("facet_reflection_support", ok, format!("{} facets x {} simple roots", facets.len(), rs.rank()))
}

/// Folding a facet by `r_α`: witness image against the sign case table.
fn check_fold_facet(rs: &RootSystem, facets: &[crate::folding::FacetEntry]) -> Result<CheckResult> {
    let mut ok = true;
    let mut cases = [0usize; 3];
    for f in facets {
        for alpha in 0..rs.rank() {
            let numeric = fold_facet(rs, alpha, &f.signature, FACET_TOL)?;
            let symbolic = fold_signs_symbolic(rs, alpha, &f.signature.signs)?;
            ok &= numeric.signs == symbolic;
            match f.signature.signs[alpha] {
                Sign::Plus | Sign::Zero => {
                    cases[if f.signature.signs[alpha] == Sign::Plus { 0 } else { 1 }] += 1;
                    ok &= numeric.signs == f.signature.signs;
                    if f.signature.signs[alpha] == Sign::Zero {
                        ok &= f.support == alpha;
                    }
                }
                Sign::Minus => {
                    cases[2] += 1;
                    let beta = &rs.positive()[f.support];
                    let gamma = rs.simple()[alpha].reflect(beta.vector());
                    ok &= numeric.support().is_some_and(|s| max_abs_diff(rs.positive()[s].as_slice(), gamma.as_slice()) < 1e-10);
                }
            }
        }
    }
    Ok(CheckResult::exact(
        "fold_facet_case_table",
        ok,
        format!("cases a in I+: {}, I0 = {{a}}: {}, a in I-: {}", cases[0], cases[1], cases[2]),
    ))
}

/// Fibers partition `𝓕`, each `F_α` is in its own fiber, and random points
/// of every fiber facet project into `F_α`.
fn check_fibers(
    rs: &RootSystem,
    w: &WeylGroup,
    op: &FoldingOperator,
    facets: &[crate::folding::FacetEntry],
    cfg: AlgebraConfig,
) -> CheckResult {
    let mut rng = stream_rng(cfg.seed, 5);
    let mut ok = true;
    for (i, a) in facets.iter().enumerate() {
        ok &= facets[i + 1..].iter().all(|b| !a.signature.same_facet(&b.signature));
    }
    for alpha in 0..rs.rank() {
        let own = facet_signature(rs, &crate::folding::face_witness(rs, alpha), DEFAULT_SIGNATURE_TOL);
        ok &= facets.iter().any(|e| e.fiber == alpha && e.signature.same_facet(&own));
    }
    let samples = (cfg.points / facets.len().max(1)).clamp(4, 64);
    for f in facets {
        let g = &w.elements()[f.element];
        for _ in 0..samples {
            let weights: Vec<f64> = (0..rs.rank() - 1).map(|_| rng.random_range(0.05..3.0)).collect();
            let y = g.apply(face_point(rs, f.fiber, &weights).as_slice());
            ok &= facet_signature(rs, &y, DEFAULT_SIGNATURE_TOL).same_facet(&f.signature);
            let p = op.project(&y);
            ok &= rs.simple().iter().enumerate().all(|(j, b)| {
                let d = b.dot(p.as_slice());
                if j == f.fiber { d.abs() < FACET_TOL } else { d > FACET_TOL }
            });
        }
    }
    let sizes: Vec<usize> = (0..rs.rank()).map(|a| facets.iter().filter(|e| e.fiber == a).count()).collect();
    CheckResult::exact("fibers_partition_facets", ok, format!("|F| = {}, fiber sizes {sizes:?}", facets.len()))
}

fn check_distance(rs: &RootSystem, w: &WeylGroup, op: &FoldingOperator, cfg: AlgebraConfig) -> Result<CheckResult> {
    let mut rng = stream_rng(cfg.seed, 6);
    let n = (cfg.points / rs.rank()).max(10);
    let mut dev: f64 = 0.0;
    for alpha in 0..rs.rank() {
        for _ in 0..n {
            let x = gaussian_point(&mut rng, rs.dim(), 2.0);
            let d = distance_oracle(rs, w, alpha, &x)?;
            dev = dev.max((op.chamber_distance(alpha, x.as_slice()) - d).abs());
        }
    }
    Ok(CheckResult::within("chamber_distance_matches_oracle", dev, DISTANCE_TOL, format!("{n} points per simple root")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{build_classical, build_dihedral, ClassicalFamily};

    #[test]
    fn suite_passes_on_small_systems() {
        let cfg = AlgebraConfig { points: 200, words: 4, seed: 1 };
        for rs in [
            build_dihedral(3).unwrap(),
            build_dihedral(4).unwrap(),
            build_dihedral(5).unwrap(),
            build_classical(ClassicalFamily::A, 2).unwrap(),
            build_classical(ClassicalFamily::B, 3).unwrap(),
        ] {
            let rep = run_algebra_suite(&rs, cfg).unwrap();
            for c in &rep.checks {
                assert!(c.passed, "{} {}: {}", rep.family, c.name, c.detail);
            }
        }
    }

    #[test]
    fn counts_for_a2() {
        let rs = build_classical(ClassicalFamily::A, 2).unwrap();
        let rep = run_algebra_suite(&rs, AlgebraConfig { points: 50, words: 2, seed: 0 }).unwrap();
        assert_eq!((rep.group_order, rep.positive_roots, rep.facets), (6, 3, 6));
    }
}
