//! One-root foldings `r_α`, the chamber projection `π = r_{w₀}`, facets of
//! the reflection arrangement, and the chamber-distance identity
//! `α·π(x) = d(x, K_α)`.

use std::fmt;

use nalgebra::Cholesky;

use crate::error::{invalid, Error, Result};
use crate::rootsys::{
    dot, max_abs_diff, reduced_word_w0, word_matrix, Root, RootSystem, Tolerances, Vector, WeylGroup,
};

/// Default band for deciding that a point lies on a hyperplane.
pub const DEFAULT_SIGNATURE_TOL: f64 = 1e-9;

/// `r_α(x) = x + 2(α·x)⁻ α`.
pub fn r_alpha(alpha: &Root, x: &Vector) -> Vector {
    let d = alpha.dot(x.as_slice());
    if d < 0.0 {
        x - alpha.vector() * (2.0 * d)
    } else {
        x.clone()
    }
}

/// The composition `r_{α_l} ⋯ r_{α_1}` along a reduced word for `w₀`.
///
/// The word is evaluated left to right: `word[0]` is applied first.
#[derive(Debug, Clone)]
pub struct FoldingOperator {
    simple: Vec<Root>,
    word: Vec<usize>,
}

impl FoldingOperator {
    pub fn new(rs: &RootSystem) -> Result<Self> {
        Ok(Self { simple: rs.simple().to_vec(), word: reduced_word_w0(rs)? })
    }

    /// Uses `word`, which must be a reduced word for `w₀`.
    pub fn with_word(rs: &RootSystem, word: Vec<usize>) -> Result<Self> {
        if word.len() != rs.positive().len() || word.iter().any(|&i| i >= rs.rank()) {
            return Err(invalid(format!("word {word:?} is not a reduced word for w0")));
        }
        let reference = word_matrix(rs, &reduced_word_w0(rs)?);
        if (word_matrix(rs, &word) - reference).amax() > Tolerances::default().identity {
            return Err(invalid(format!("word {word:?} does not represent w0")));
        }
        Ok(Self { simple: rs.simple().to_vec(), word })
    }

    pub fn word(&self) -> &[usize] {
        &self.word
    }

    pub fn simple(&self) -> &[Root] {
        &self.simple
    }

    pub fn dim(&self) -> usize {
        self.simple[0].dim()
    }

    pub fn project(&self, x: &Vector) -> Vector {
        let mut y = x.clone();
        self.fold_in_place(y.as_mut_slice());
        y
    }

    #[inline]
    pub fn fold_in_place(&self, x: &mut [f64]) {
        for &i in &self.word {
            let a = &self.simple[i];
            if a.dot(x) < 0.0 {
                a.reflect_in_place(x);
            }
        }
    }

    /// Folds `x` and returns a bit mask of the word positions whose
    /// reflection fired. The mask identifies the group element `w` with
    /// `w(x) = π(x)`; see [`apply_fired`](Self::apply_fired).
    #[inline]
    pub fn fold_tracking(&self, x: &mut [f64]) -> u64 {
        let mut mask = 0u64;
        for (k, &i) in self.word.iter().enumerate() {
            let a = &self.simple[i];
            if a.dot(x) < 0.0 {
                a.reflect_in_place(x);
                mask |= 1 << k;
            }
        }
        mask
    }

    /// Applies the linear map selected by `mask` to `v`.
    pub fn apply_fired(&self, mask: u64, v: &mut [f64]) {
        for (k, &i) in self.word.iter().enumerate() {
            if mask & (1 << k) != 0 {
                self.simple[i].reflect_in_place(v);
            }
        }
    }

    /// `α·π(x)` for the simple root with index `alpha`.
    pub fn chamber_distance(&self, alpha: usize, x: &[f64]) -> f64 {
        let mut y = x.to_vec();
        self.fold_in_place(&mut y);
        self.simple[alpha].dot(&y)
    }
}

/// Independent projection: scans the orbit `W·x` for its point in `C̄`.
pub fn orbit_project_oracle(w: &WeylGroup, rs: &RootSystem, x: &Vector) -> Result<Vector> {
    let tol = 1e-12 * x.norm().max(1.0);
    w.elements()
        .iter()
        .map(|g| g.apply(x.as_slice()))
        .find(|y| rs.in_closed_chamber(y.as_slice(), tol))
        .ok_or_else(|| Error::Internal("no orbit point lies in the closed chamber".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Zero,
    Minus,
}

impl Sign {
    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Zero => '0',
            Sign::Minus => '-',
        }
    }
}

/// Sign pattern `(I₊, I₀, I₋)` of a facet over `R₊`, with a witness point.
#[derive(Debug, Clone)]
pub struct FacetSignature {
    pub signs: Vec<Sign>,
    pub witness: Vector,
}

impl FacetSignature {
    pub fn zero_count(&self) -> usize {
        self.signs.iter().filter(|&&s| s == Sign::Zero).count()
    }

    /// Index of the supporting root when the facet lies on exactly one
    /// hyperplane.
    pub fn support(&self) -> Option<usize> {
        match self.zero_count() {
            1 => self.signs.iter().position(|&s| s == Sign::Zero),
            _ => None,
        }
    }

    pub fn sign_string(&self) -> String {
        self.signs.iter().map(|s| s.as_char()).collect()
    }

    pub fn same_facet(&self, other: &FacetSignature) -> bool {
        self.signs == other.signs
    }
}

impl fmt::Display for FacetSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.sign_string())
    }
}

pub fn facet_signature(rs: &RootSystem, x: &Vector, tol: f64) -> FacetSignature {
    let signs = rs
        .positive()
        .iter()
        .map(|a| {
            let d = a.dot(x.as_slice());
            if d.abs() <= tol {
                Sign::Zero
            } else if d > 0.0 {
                Sign::Plus
            } else {
                Sign::Minus
            }
        })
        .collect();
    FacetSignature { signs, witness: x.clone() }
}

/// Signature of `r_α(F)` for a facet `F` lying on exactly one hyperplane,
/// computed by folding the witness point.
pub fn fold_facet(rs: &RootSystem, alpha: usize, f: &FacetSignature, tol: f64) -> Result<FacetSignature> {
    if f.support().is_none() {
        return Err(invalid(format!("facet {f} does not lie on exactly one hyperplane")));
    }
    if alpha >= rs.rank() {
        return Err(invalid(format!("simple root index {alpha} out of range")));
    }
    let image = r_alpha(&rs.simple()[alpha], &f.witness);
    Ok(facet_signature(rs, &image, tol))
}

/// Symbolic image of a facet's sign pattern under `r_α`.
///
/// When `α ∈ I₋(F)` each positive `δ ≠ α` carries its sign to `s_α(δ)` and
/// `α` itself becomes positive; otherwise `r_α` fixes `F`.
pub fn fold_signs_symbolic(rs: &RootSystem, alpha: usize, signs: &[Sign]) -> Result<Vec<Sign>> {
    if signs[alpha] != Sign::Minus {
        return Ok(signs.to_vec());
    }
    let a = &rs.simple()[alpha];
    let mut out = vec![Sign::Plus; signs.len()];
    for (j, delta) in rs.positive().iter().enumerate() {
        if j == alpha {
            continue;
        }
        let img = a.reflect(delta.vector());
        let k = rs
            .positive()
            .iter()
            .position(|r| max_abs_diff(r.as_slice(), img.as_slice()) <= Tolerances::default().identity)
            .ok_or_else(|| Error::Internal("simple reflection does not permute R+ \\ {α}".into()))?;
        out[k] = signs[j];
    }
    out[alpha] = Sign::Plus;
    Ok(out)
}

/// A point of the face `F_α`: `α·x = 0` and `β·x = 1` for the other simple
/// roots.
pub fn face_witness(rs: &RootSystem, alpha: usize) -> Vector {
    (0..rs.rank())
        .filter(|&j| j != alpha)
        .fold(Vector::zeros(rs.dim()), |acc, j| acc + rs.coweight(j))
}

/// A point of `F_α` with the given positive weights on the other coweights.
pub fn face_point(rs: &RootSystem, alpha: usize, weights: &[f64]) -> Vector {
    (0..rs.rank())
        .filter(|&j| j != alpha)
        .zip(weights)
        .fold(Vector::zeros(rs.dim()), |acc, (j, &c)| acc + rs.coweight(j) * c)
}

#[derive(Debug, Clone)]
pub struct FacetEntry {
    pub signature: FacetSignature,
    /// Index into `R₊` of the supporting root.
    pub support: usize,
    /// Index of the simple root `α` with `π(F) = F_α`.
    pub fiber: usize,
    /// Index into `W` of an element `w` with `F = w(F_α)`.
    pub element: usize,
}

impl fmt::Display for FacetEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "facet {} support {} fiber {} witness", self.signature, self.support, self.fiber)?;
        for c in self.signature.witness.iter() {
            write!(f, " {c:.16e}")?;
        }
        Ok(())
    }
}

/// All facets lying on exactly one hyperplane, as images `w(F_α)`, grouped
/// into fibers over the simple roots.
pub fn enumerate_facets(rs: &RootSystem, w: &WeylGroup, tol: f64) -> Result<Vec<FacetEntry>> {
    let mut out: Vec<FacetEntry> = Vec::new();
    for alpha in 0..rs.rank() {
        let base = face_witness(rs, alpha);
        for (gi, g) in w.elements().iter().enumerate() {
            let sig = facet_signature(rs, &g.apply(base.as_slice()), tol);
            let support = sig
                .support()
                .ok_or_else(|| Error::Internal(format!("image of F_{alpha} has signature {sig}")))?;
            if let Some(prev) = out.iter().find(|e| e.signature.same_facet(&sig)) {
                if prev.fiber != alpha {
                    return Err(Error::Internal(format!(
                        "facet {sig} lies over both F_{} and F_{alpha}",
                        prev.fiber
                    )));
                }
                continue;
            }
            out.push(FacetEntry { signature: sig, support, fiber: alpha, element: gi });
        }
    }
    Ok(out)
}

/// Euclidean projection of `x` onto the polyhedral cone
/// `{z : e·z = 0 ∀e ∈ eq, b·z ≥ 0 ∀b ∈ ineq}` by enumerating active sets.
///
/// Every candidate is the projection onto the subspace cut out by the
/// equalities plus one subset of the inequalities; the nearest feasible
/// candidate is the projection.
pub fn project_onto_cone(x: &Vector, eq: &[Vector], ineq: &[Vector]) -> Result<Vector> {
    if ineq.len() > 16 {
        return Err(invalid("too many inequality constraints for active-set enumeration"));
    }
    let tol = 1e-12 * x.norm().max(1.0);
    let mut best: Option<(f64, Vector)> = None;
    for subset in 0u32..(1 << ineq.len()) {
        let rows: Vec<&Vector> = eq
            .iter()
            .chain(ineq.iter().enumerate().filter(|(k, _)| subset & (1 << k) != 0).map(|(_, b)| b))
            .collect();
        let z = if rows.is_empty() {
            x.clone()
        } else {
            let gram = nalgebra::DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i].dot(rows[j]));
            let rhs = Vector::from_iterator(rows.len(), rows.iter().map(|r| r.dot(x)));
            let Some(chol) = Cholesky::new(gram) else { continue };
            let lambda = chol.solve(&rhs);
            rows.iter().zip(lambda.iter()).fold(x.clone(), |acc, (r, &l)| acc - *r * l)
        };
        if ineq.iter().all(|b| b.dot(&z) >= -tol) {
            let d = (x - &z).norm();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, z));
            }
        }
    }
    best.map(|(_, z)| z)
        .ok_or_else(|| Error::Internal("no feasible active set for a cone containing 0".into()))
}

/// `d(x, K_α)` as the minimum over `w ∈ W` of the distance from `x` to the
/// closed cone `w(F̄_α)`.
pub fn distance_oracle(rs: &RootSystem, w: &WeylGroup, alpha: usize, x: &Vector) -> Result<f64> {
    if rs.rank() > 4 {
        return Err(invalid("distance oracle supports rank <= 4"));
    }
    let mut best = f64::INFINITY;
    for g in w.elements() {
        let eq = [g.apply(rs.simple()[alpha].as_slice())];
        let ineq: Vec<Vector> = (0..rs.rank())
            .filter(|&j| j != alpha)
            .map(|j| g.apply(rs.simple()[j].as_slice()))
            .collect();
        let z = project_onto_cone(x, &eq, &ineq)?;
        best = best.min((x - z).norm());
    }
    Ok(best)
}

/// Indices into `R₊` of the positive roots in the orbit `W·α`.
pub fn root_orbit(w: &WeylGroup, rs: &RootSystem, alpha: usize) -> Vec<usize> {
    let tol = Tolerances::default().identity;
    let mut out: Vec<usize> = w
        .elements()
        .iter()
        .filter_map(|g| {
            let img = g.apply(rs.simple()[alpha].as_slice());
            rs.positive()
                .iter()
                .position(|r| max_abs_diff(r.as_slice(), img.as_slice()) <= tol)
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// The orbit of `α` in `R₊`, provided `α` is the only simple root in it.
pub fn single_orbit_roots(w: &WeylGroup, rs: &RootSystem, alpha: usize) -> Result<Vec<usize>> {
    let orbit = root_orbit(w, rs, alpha);
    if let Some(&other) = orbit.iter().find(|&&j| j < rs.rank() && j != alpha) {
        let coords: Vec<String> = rs.simple()[other].as_slice().iter().map(|c| format!("{c:.6}")).collect();
        return Err(Error::Precondition(format!(
            "simple root {other} ({}) is conjugate to simple root {alpha}: there is only one orbit",
            coords.join(", ")
        )));
    }
    Ok(orbit)
}

/// Direct inner products `α·x` for each simple root.
pub fn simple_products(op: &FoldingOperator, x: &[f64]) -> Vec<f64> {
    op.simple().iter().map(|a| dot(a.as_slice(), x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{build_classical, build_dihedral, generate_group, ClassicalFamily};
    use proptest::prelude::*;

    fn v(c: &[f64]) -> Vector {
        Vector::from_column_slice(c)
    }

    #[test]
    fn r_alpha_examples() {
        let a = Root::new(v(&[0.0, 1.0])).unwrap();
        assert_eq!(r_alpha(&a, &v(&[1.0, -2.0])).as_slice(), &[1.0, 2.0]);
        assert_eq!(r_alpha(&a, &v(&[3.0, 0.5])).as_slice(), &[3.0, 0.5]);
        assert_eq!(r_alpha(&a, &v(&[3.0, 0.0])).as_slice(), &[3.0, 0.0]);
    }

    #[test]
    fn d3_rotated_point_folds_back() {
        let rs = build_dihedral(3).unwrap();
        let op = FoldingOperator::new(&rs).unwrap();
        let p = v(&[1.0, 2.0]);
        // (1,2) sits at about 63.4°, just outside the wedge [0, π/3], so use
        // the point of the same radius at 30°.
        assert!(!rs.in_closed_chamber(p.as_slice(), 0.0));
        let r = p.norm();
        let q = v(&[r * (PI6).cos(), r * (PI6).sin()]);
        assert!(rs.in_closed_chamber(q.as_slice(), 0.0));
        let (s, c) = (2.0 * std::f64::consts::PI / 3.0).sin_cos();
        let rotated = v(&[c * q[0] - s * q[1], s * q[0] + c * q[1]]);
        assert!(max_abs_diff(op.project(&rotated).as_slice(), q.as_slice()) < 1e-14);
    }
    const PI6: f64 = std::f64::consts::FRAC_PI_6;

    #[test]
    fn d3_signature_on_alpha_wall() {
        let rs = build_dihedral(3).unwrap();
        let sig = facet_signature(&rs, &v(&[1.0, 0.0]), DEFAULT_SIGNATURE_TOL);
        assert_eq!(sig.sign_string(), "0++");
        assert_eq!(facet_signature(&rs, &v(&[0.0, 0.0]), 1e-9).sign_string(), "000");
        assert_eq!(facet_signature(&rs, &rs.chamber_point(), 1e-9).sign_string(), "+++");
    }

    #[test]
    fn d3_fold_facet_moves_support() {
        let rs = build_dihedral(3).unwrap();
        // On H_γ with α negative: the ray at angle 120° rotated... take the
        // point at angle 300°, where γ·x = 0 and α·x < 0.
        let a300 = (-std::f64::consts::FRAC_PI_3).sin_cos();
        let x = v(&[a300.1, a300.0]);
        let f = facet_signature(&rs, &x, 1e-9);
        assert_eq!(f.support(), Some(2));
        assert_eq!(f.signs[0], Sign::Minus);
        let g = fold_facet(&rs, 0, &f, 1e-9).unwrap();
        let s_gamma = rs.simple()[0].reflect(rs.positive()[2].vector());
        let (idx, _) = rs.positive_index_up_to_sign(s_gamma.as_slice(), 1e-12).unwrap();
        assert_eq!(g.support(), Some(idx));
        assert_eq!(g.signs, fold_signs_symbolic(&rs, 0, &f.signs).unwrap());
    }

    #[test]
    fn fold_facet_rejects_non_single_hyperplane() {
        let rs = build_dihedral(3).unwrap();
        let f = facet_signature(&rs, &v(&[0.0, 0.0]), 1e-9);
        assert!(fold_facet(&rs, 0, &f, 1e-9).is_err());
        let f = facet_signature(&rs, &rs.chamber_point(), 1e-9);
        assert!(fold_facet(&rs, 0, &f, 1e-9).is_err());
    }

    #[test]
    fn d3_has_six_facets() {
        let rs = build_dihedral(3).unwrap();
        let w = generate_group(&rs).unwrap();
        let facets = enumerate_facets(&rs, &w, 1e-9).unwrap();
        assert_eq!(facets.len(), 6);
        let line = facets[0].to_string();
        assert!(line.starts_with("facet "), "{line}");
        assert!(line.contains(" support ") && line.contains(" fiber ") && line.contains(" witness "));
    }

    #[test]
    fn cone_projection_small_cases() {
        // Half-plane {y ≥ 0} in the plane, no equalities.
        let z = project_onto_cone(&v(&[1.0, -2.0]), &[], &[v(&[0.0, 1.0])]).unwrap();
        assert!(max_abs_diff(z.as_slice(), &[1.0, 0.0]) < 1e-15);
        // Ray {y = 0, x ≥ 0}: a point behind the apex projects to 0.
        let z = project_onto_cone(&v(&[-1.0, 3.0]), &[v(&[0.0, 1.0])], &[v(&[1.0, 0.0])]).unwrap();
        assert!(z.norm() < 1e-15);
    }

    #[test]
    fn d3_distance_below_the_wall() {
        let rs = build_dihedral(3).unwrap();
        let w = generate_group(&rs).unwrap();
        let op = FoldingOperator::new(&rs).unwrap();
        let x = v(&[0.0, -1.0]);
        let a = op.chamber_distance(0, x.as_slice());
        let b = distance_oracle(&rs, &w, 0, &x).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn orbits_of_simple_roots() {
        let d3 = build_dihedral(3).unwrap();
        let w3 = generate_group(&d3).unwrap();
        assert_eq!(root_orbit(&w3, &d3, 0), vec![0, 1, 2]);
        assert!(matches!(single_orbit_roots(&w3, &d3, 1), Err(Error::Precondition(_))));

        let d4 = build_dihedral(4).unwrap();
        let w4 = generate_group(&d4).unwrap();
        for alpha in 0..2 {
            let orbit = single_orbit_roots(&w4, &d4, alpha).unwrap();
            assert_eq!(orbit.len(), 2);
            assert!(!orbit.contains(&(1 - alpha)));
        }

        let a2 = build_classical(ClassicalFamily::A, 2).unwrap();
        let wa = generate_group(&a2).unwrap();
        assert_eq!(root_orbit(&wa, &a2, 0).len(), 3);
    }

    #[test]
    fn with_word_validates() {
        let rs = build_dihedral(3).unwrap();
        assert!(FoldingOperator::with_word(&rs, vec![0, 1, 0]).is_ok());
        assert!(FoldingOperator::with_word(&rs, vec![1, 0, 1]).is_ok());
        assert!(FoldingOperator::with_word(&rs, vec![0, 1]).is_err());
        assert!(FoldingOperator::with_word(&rs, vec![0, 0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn projection_lands_in_chamber_and_is_idempotent(x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
            let rs = build_classical(ClassicalFamily::B, 3).unwrap();
            let op = FoldingOperator::new(&rs).unwrap();
            let p = op.project(&v(&[x, y, z]));
            prop_assert!(rs.in_closed_chamber(p.as_slice(), 1e-12));
            prop_assert!(max_abs_diff(op.project(&p).as_slice(), p.as_slice()) < 1e-14);
            prop_assert!((p.norm() - v(&[x, y, z]).norm()).abs() < 1e-12);
        }

        #[test]
        fn projection_is_a_contraction(a in prop::array::uniform4(-3.0f64..3.0)) {
            let rs = build_dihedral(5).unwrap();
            let op = FoldingOperator::new(&rs).unwrap();
            let x = v(&a[..2]);
            let y = v(&a[2..]);
            prop_assert!((op.project(&x) - op.project(&y)).norm() <= (x - y).norm() + 1e-12);
        }

        #[test]
        fn r_alpha_is_idempotent_and_lands_on_positive_side(x in -4.0f64..4.0, y in -4.0f64..4.0) {
            let a = Root::normalized(v(&[0.3, -0.8])).unwrap();
            let once = r_alpha(&a, &v(&[x, y]));
            prop_assert!(a.dot(once.as_slice()) >= -1e-15);
            prop_assert_eq!(r_alpha(&a, &once), once);
        }
    }
}
