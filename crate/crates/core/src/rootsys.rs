//! Root systems of finite reflection groups and their Weyl groups.
//!
//! Every root is stored with unit norm, including the families whose
//! conventional presentation uses roots of length √2 or mixed lengths. The
//! positive roots of a [`RootSystem`] are kept with the simple roots first, so
//! `simple()` is a prefix of `positive()` and indices into either list agree
//! for simple roots.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Largest rank built by [`build_classical`].
pub const MAX_CLASSICAL_RANK: u32 = 4;

/// Default cap on the number of elements produced by [`generate_group`].
pub const DEFAULT_GROUP_CAP: usize = 100_000;

/// Tolerances for floating point comparisons in algebraic checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Algebraic identities (orthogonality, closure, membership).
    pub identity: f64,
    /// Matrix deduplication during group generation.
    pub dedup: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { identity: 1e-10, dedup: 1e-9 }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A unit vector of the ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct Root(Vector);

impl Root {
    const UNIT_TOL: f64 = 1e-12;

    /// Wraps `v`, which must already have unit norm.
    pub fn new(v: Vector) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > Self::UNIT_TOL {
            return Err(invalid(format!("root must have unit norm, got |α| = {n}")));
        }
        Ok(Self(v))
    }

    pub fn normalized(v: Vector) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self(v / n))
    }

    pub fn vector(&self) -> &Vector {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn dot(&self, x: &[f64]) -> f64 {
        dot(self.0.as_slice(), x)
    }

    /// `s_α(x) = x − 2(α·x)α`.
    pub fn reflect(&self, x: &Vector) -> Vector {
        x - &self.0 * (2.0 * self.dot(x.as_slice()))
    }

    pub fn reflect_in_place(&self, x: &mut [f64]) {
        let c = 2.0 * self.dot(x);
        for (xi, ai) in x.iter_mut().zip(self.0.iter()) {
            *xi -= c * ai;
        }
    }

    pub fn reflection_matrix(&self) -> Matrix {
        let n = self.dim();
        Matrix::identity(n, n) - &self.0 * self.0.transpose() * 2.0
    }
}

impl std::ops::Neg for &Root {
    type Output = Root;
    fn neg(self) -> Root {
        Root(-&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Dihedral(u32),
    A(u32),
    B(u32),
    D(u32),
    /// Loaded from text without a family annotation.
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Dihedral(m) => write!(f, "dihedral({m})"),
            Family::A(n) => write!(f, "A{n}"),
            Family::B(n) => write!(f, "B{n}"),
            Family::D(n) => write!(f, "D{n}"),
            Family::Custom => write!(f, "custom"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "custom" {
            return Ok(Family::Custom);
        }
        if let Some(m) = s.strip_prefix("dihedral(").and_then(|r| r.strip_suffix(')')) {
            return m.parse().map(Family::Dihedral).map_err(|_| invalid(format!("bad family {s:?}")));
        }
        let (head, rank) = s.split_at(s.len().min(1));
        let n: u32 = rank.parse().map_err(|_| invalid(format!("bad family {s:?}")))?;
        match head {
            "A" => Ok(Family::A(n)),
            "B" => Ok(Family::B(n)),
            "D" => Ok(Family::D(n)),
            _ => Err(invalid(format!("bad family {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalFamily {
    A,
    B,
    D,
}

/// A reduced root system `R = R₊ ∪ (−R₊)` with simple roots `S ⊂ R₊`.
///
/// Only full-rank systems are represented: the simple roots form a basis of
/// the ambient space. Type `A_n` is realized in the `n`-dimensional subspace
/// of coordinate-sum-zero vectors of `ℝ^{n+1}`.
#[derive(Debug, Clone)]
pub struct RootSystem {
    dim: usize,
    rank: usize,
    positive: Vec<Root>,
    roots: Vec<Root>,
    family: Family,
    /// Row `i` is the fundamental coweight `ω_i` with `α_i·ω_j = δ_ij`.
    coweights: Matrix,
}

impl RootSystem {
    /// Builds and validates a root system from its simple roots and the
    /// remaining positive roots. All vectors are normalized to unit length.
    pub fn from_roots(
        dim: usize,
        simple: Vec<Vector>,
        other_positive: Vec<Vector>,
        family: Family,
    ) -> Result<Self> {
        let rank = simple.len();
        if rank != dim {
            return Err(invalid(format!("{rank} simple roots do not span dimension {dim}")));
        }
        let positive = simple
            .into_iter()
            .chain(other_positive)
            .map(|v| {
                if v.len() != dim {
                    Err(invalid(format!("root of length {} in dimension {dim}", v.len())))
                } else {
                    Root::normalized(v)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let roots = positive.iter().cloned().chain(positive.iter().map(|r| -r)).collect();

        let simple_mat = Matrix::from_fn(rank, dim, |i, j| positive[i].0[j]);
        let inv = simple_mat
            .clone()
            .try_inverse()
            .ok_or_else(|| invalid("simple roots are linearly dependent"))?;
        let coweights = inv.transpose();

        let rs = Self { dim, rank, positive, roots, family, coweights };
        rs.validate(Tolerances::default().identity)?;
        Ok(rs)
    }

    fn validate(&self, tol: f64) -> Result<()> {
        for (i, a) in self.positive.iter().enumerate() {
            for b in &self.positive[..i] {
                if (a.dot(b.as_slice()).abs() - 1.0).abs() < tol {
                    return Err(invalid("two positive roots are parallel"));
                }
            }
        }
        for a in &self.roots {
            for b in &self.roots {
                let img = a.reflect(b.vector());
                if self.root_index(img.as_slice(), tol).is_none() {
                    return Err(invalid("root set is not closed under its reflections"));
                }
            }
        }
        for a in &self.positive {
            let c = self.simple_coordinates(a.as_slice());
            if c.iter().any(|&ci| ci < -tol) {
                return Err(invalid("positive root is not a nonnegative combination of simple roots"));
            }
        }
        let simple = self.simple();
        for (i, a) in simple.iter().enumerate() {
            for b in &simple[i + 1..] {
                if a.dot(b.as_slice()) > tol {
                    return Err(invalid("simple roots must have pairwise nonpositive products"));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// All roots: the positive ones followed by their negatives.
    pub fn roots(&self) -> &[Root] {
        &self.roots
    }

    pub fn positive(&self) -> &[Root] {
        &self.positive
    }

    pub fn simple(&self) -> &[Root] {
        &self.positive[..self.rank]
    }

    /// Coefficients of `x` in the basis of simple roots.
    pub fn simple_coordinates(&self, x: &[f64]) -> Vec<f64> {
        // α_i·ω_j = δ_ij, so the coefficient on α_i is ω_i·x.
        (0..self.rank).map(|i| dot(self.coweights.row(i).transpose().as_slice(), x)).collect()
    }

    /// Fundamental coweight `ω_i`: `α_j·ω_i = δ_ij`.
    pub fn coweight(&self, i: usize) -> Vector {
        self.coweights.row(i).transpose()
    }

    /// Index into [`roots`](Self::roots) of the root equal to `v`.
    pub fn root_index(&self, v: &[f64], tol: f64) -> Option<usize> {
        self.roots.iter().position(|r| max_abs_diff(r.as_slice(), v) <= tol)
    }

    /// Index into [`positive`](Self::positive) of `±v`, with the sign that
    /// lands in `R₊`.
    pub fn positive_index_up_to_sign(&self, v: &[f64], tol: f64) -> Option<(usize, f64)> {
        self.positive.iter().enumerate().find_map(|(i, r)| {
            let d = r.dot(v);
            if (d - 1.0).abs() <= tol {
                Some((i, 1.0))
            } else if (d + 1.0).abs() <= tol {
                Some((i, -1.0))
            } else {
                None
            }
        })
    }

    pub fn simple_products(&self, x: &[f64]) -> Vec<f64> {
        self.simple().iter().map(|a| a.dot(x)).collect()
    }

    /// `x ∈ C̄` up to `tol`.
    pub fn in_closed_chamber(&self, x: &[f64], tol: f64) -> bool {
        self.simple().iter().all(|a| a.dot(x) >= -tol)
    }

    /// A point of the open chamber: the sum of the fundamental coweights.
    pub fn chamber_point(&self) -> Vector {
        (0..self.rank).map(|i| self.coweight(i)).fold(Vector::zeros(self.dim), |acc, w| acc + w)
    }

    /// Plain-text form: a `dim N` line followed by one `root ...` line per
    /// root, labelled `simple`, `positive` or `negative`.
    pub fn to_text(&self) -> String {
        let mut out = format!("# family {}\ndim {}\n", self.family, self.dim);
        for (i, r) in self.roots.iter().enumerate() {
            let label = if i < self.rank {
                "simple"
            } else if i < self.positive.len() {
                "positive"
            } else {
                "negative"
            };
            out.push_str("root");
            for c in r.0.iter() {
                out.push_str(&format!(" {c:.16e}"));
            }
            out.push(' ');
            out.push_str(label);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut family = Family::Custom;
        let mut simple = Vec::new();
        let mut positive = Vec::new();
        let mut negative = 0usize;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: &str| Error::Parse { line: no + 1, msg: msg.to_string() };
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some(f) = c.trim().strip_prefix("family ") {
                    family = f.parse().map_err(|_| err("unknown family"))?;
                }
                continue;
            }
            let mut toks = line.split_whitespace();
            match toks.next() {
                Some("dim") => {
                    let n: usize = toks
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err("expected `dim N`"))?;
                    dim = Some(n);
                }
                Some("root") => {
                    let n = dim.ok_or_else(|| err("`root` before `dim`"))?;
                    let rest: Vec<&str> = toks.collect();
                    if rest.len() != n + 1 {
                        return Err(err("expected N coordinates and a label"));
                    }
                    let coords = rest[..n]
                        .iter()
                        .map(|t| t.parse::<f64>().map_err(|_| err("bad coordinate")))
                        .collect::<Result<Vec<_>>>()?;
                    let v = Vector::from_vec(coords);
                    match rest[n] {
                        "simple" => {
                            if !positive.is_empty() {
                                return Err(err("simple roots must precede other positive roots"));
                            }
                            simple.push(v)
                        }
                        "positive" => positive.push(v),
                        "negative" => negative += 1,
                        _ => return Err(err("label must be simple, positive or negative")),
                    }
                }
                _ => return Err(err("expected `dim` or `root`")),
            }
        }
        let dim = dim.ok_or(Error::Parse { line: 0, msg: "missing `dim` line".into() })?;
        if negative != simple.len() + positive.len() {
            return Err(Error::Parse { line: 0, msg: "negative roots do not mirror positive roots".into() });
        }
        Self::from_roots(dim, simple, positive, family)
    }
}

/// Dihedral root system `I₂(m)` in the plane.
///
/// The simple roots are `(0, 1)` and `(sin(π/m), −cos(π/m))`, so that the
/// closed chamber is the wedge of angles `[0, π/m]`. For `m = 3` these are
/// `α = (0,1)` and `β = (√3/2, −1/2)` with third positive root
/// `γ = (√3/2, 1/2)`.
pub fn build_dihedral(m: u32) -> Result<RootSystem> {
    if m < 2 {
        return Err(invalid(format!("dihedral order must be m >= 2, got {m}")));
    }
    let mf = f64::from(m);
    let inside = (PI / (2.0 * mf)).sin_cos();
    let inside = [inside.1, inside.0];
    let mut positive: Vec<Vector> = (0..m)
        .map(|k| {
            let phi = f64::from(k) * PI / mf;
            let mut n = [-phi.sin(), phi.cos()];
            if dot(&n, &inside) < 0.0 {
                n = [-n[0], -n[1]];
            }
            // Exact zeros keep printed roots readable.
            Vector::from_iterator(2, n.iter().map(|&c| if c.abs() < 1e-15 { 0.0 } else { c }))
        })
        .collect();
    let others = positive.split_off(2);
    RootSystem::from_roots(2, positive, others, Family::Dihedral(m))
}

fn unit(n: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[i] = 1.0;
    v
}

/// Classical root systems `A_n`, `B_n`, `D_n` for ranks up to
/// [`MAX_CLASSICAL_RANK`].
pub fn build_classical(family: ClassicalFamily, n: u32) -> Result<RootSystem> {
    let min = match family {
        ClassicalFamily::A | ClassicalFamily::B => 2,
        ClassicalFamily::D => 3,
    };
    if n < min || n > MAX_CLASSICAL_RANK {
        return Err(invalid(format!(
            "unsupported rank {n} for {family:?}; supported ranks are {min}..={MAX_CLASSICAL_RANK}"
        )));
    }
    let n = n as usize;
    match family {
        ClassicalFamily::A => {
            // e_i − e_j in ℝ^{n+1}, expressed in an orthonormal (Helmert)
            // basis of the sum-zero hyperplane.
            let basis: Vec<Vector> = (1..=n)
                .map(|k| {
                    let s = ((k * (k + 1)) as f64).sqrt();
                    Vector::from_fn(n + 1, |i, _| match i.cmp(&k) {
                        std::cmp::Ordering::Less => 1.0 / s,
                        std::cmp::Ordering::Equal => -(k as f64) / s,
                        std::cmp::Ordering::Greater => 0.0,
                    })
                })
                .collect();
            let to_span = |v: Vector| Vector::from_iterator(n, basis.iter().map(|b| b.dot(&v)));
            let diff = |i: usize, j: usize| to_span(unit(n + 1, i) - unit(n + 1, j));
            let simple = (0..n).map(|i| diff(i, i + 1)).collect();
            let others = pairs(n + 1).filter(|&(i, j)| j > i + 1).map(|(i, j)| diff(i, j)).collect();
            RootSystem::from_roots(n, simple, others, Family::A(n as u32))
        }
        ClassicalFamily::B => {
            let mut simple: Vec<Vector> = (0..n - 1).map(|i| unit(n, i) - unit(n, i + 1)).collect();
            simple.push(unit(n, n - 1));
            let mut others: Vec<Vector> = pairs(n)
                .filter(|&(i, j)| j > i + 1)
                .map(|(i, j)| unit(n, i) - unit(n, j))
                .collect();
            others.extend(pairs(n).map(|(i, j)| unit(n, i) + unit(n, j)));
            others.extend((0..n - 1).map(|i| unit(n, i)));
            RootSystem::from_roots(n, simple, others, Family::B(n as u32))
        }
        ClassicalFamily::D => {
            let mut simple: Vec<Vector> = (0..n - 1).map(|i| unit(n, i) - unit(n, i + 1)).collect();
            simple.push(unit(n, n - 2) + unit(n, n - 1));
            let mut others: Vec<Vector> = pairs(n)
                .filter(|&(i, j)| j > i + 1)
                .map(|(i, j)| unit(n, i) - unit(n, j))
                .collect();
            others.extend(pairs(n).filter(|&(i, j)| (i, j) != (n - 2, n - 1)).map(|(i, j)| unit(n, i) + unit(n, j)));
            RootSystem::from_roots(n, simple, others, Family::D(n as u32))
        }
    }
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// The rank-one system `{±1}` on the line.
pub fn build_rank_one() -> RootSystem {
    RootSystem::from_roots(1, vec![Vector::from_element(1, 1.0)], vec![], Family::A(1))
        .expect("rank one system is valid")
}

/// An orthogonal transformation, optionally with a word in the simple
/// reflections. The word `[i₁, …, i_k]` denotes the product
/// `s_{i₁} s_{i₂} ⋯ s_{i_k}`.
#[derive(Debug, Clone)]
pub struct GroupElement {
    pub matrix: Matrix,
    pub word: Option<Vec<usize>>,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self { matrix: Matrix::identity(n, n), word: Some(Vec::new()) }
    }

    pub fn apply(&self, x: &[f64]) -> Vector {
        &self.matrix * Vector::from_column_slice(x)
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let n = self.matrix.nrows();
        let p = self.matrix.transpose() * &self.matrix;
        (p - Matrix::identity(n, n)).amax() <= tol
    }

    pub fn approx_eq(&self, other: &Matrix, tol: f64) -> bool {
        max_abs_diff(self.matrix.as_slice(), other.as_slice()) <= tol
    }
}

/// The reflection `s_α` as a group element. `alpha` must have unit norm.
pub fn reflection(alpha: &Vector) -> Result<GroupElement> {
    let r = Root::new(alpha.clone())?;
    Ok(GroupElement { matrix: r.reflection_matrix(), word: None })
}

/// Product `s_{w[0]} s_{w[1]} ⋯` of simple reflections.
pub fn word_matrix(rs: &RootSystem, word: &[usize]) -> Matrix {
    let n = rs.dim();
    word.iter()
        .fold(Matrix::identity(n, n), |acc, &i| acc * rs.simple()[i].reflection_matrix())
}

#[derive(Debug, Clone)]
pub struct WeylGroup {
    elements: Vec<GroupElement>,
    identity: usize,
    longest: GroupElement,
}

impl WeylGroup {
    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn identity_index(&self) -> usize {
        self.identity
    }

    pub fn longest(&self) -> &GroupElement {
        &self.longest
    }

    /// Index of the element whose matrix equals `m` within `tol`.
    pub fn find(&self, m: &Matrix, tol: f64) -> Option<usize> {
        self.elements.iter().position(|g| g.approx_eq(m, tol))
    }

    /// The one-element group on `ℝ^n`.
    pub fn trivial(n: usize) -> Self {
        let id = GroupElement::identity(n);
        Self { elements: vec![id.clone()], identity: 0, longest: id }
    }
}

/// Breadth-first closure of `generators` under right multiplication.
///
/// Elements carry the shortest word found by the search, which is therefore
/// reduced.
pub fn close_generators(generators: &[Matrix], n: usize, cap: usize, tol: f64) -> Result<Vec<GroupElement>> {
    let mut elements: Vec<GroupElement> = Vec::new();
    let mut queue = VecDeque::from([GroupElement::identity(n)]);
    while let Some(next) = queue.pop_front() {
        if elements.iter().any(|g| g.approx_eq(&next.matrix, tol)) {
            continue;
        }
        for (i, g) in generators.iter().enumerate() {
            let mut word = next.word.clone().unwrap_or_default();
            word.push(i);
            queue.push_back(GroupElement { matrix: &next.matrix * g, word: Some(word) });
        }
        elements.push(next);
        if elements.len() > cap {
            return Err(Error::GroupExplosion { cap });
        }
    }
    Ok(elements)
}

/// Generates `W` from the simple reflections with the default cap.
pub fn generate_group(rs: &RootSystem) -> Result<WeylGroup> {
    generate_group_with(rs, DEFAULT_GROUP_CAP, Tolerances::default())
}

pub fn generate_group_with(rs: &RootSystem, cap: usize, tol: Tolerances) -> Result<WeylGroup> {
    let gens: Vec<Matrix> = rs.simple().iter().map(Root::reflection_matrix).collect();
    let elements = close_generators(&gens, rs.dim(), cap, tol.dedup)?;
    let mut w = WeylGroup { elements, identity: 0, longest: GroupElement::identity(rs.dim()) };
    w.longest = longest_element(rs, &w)?;
    Ok(w)
}

/// Greedy descent from a point of `−C` to `C̄` through simple reflections.
/// Returns the recorded sequence of simple-root indices, in the order they
/// were applied.
fn greedy_descent(
    rs: &RootSystem,
    start: &Vector,
    mut choose: impl FnMut(&[usize]) -> usize,
) -> Result<Vec<usize>> {
    let mut x = start.clone();
    let mut seq = Vec::new();
    let limit = rs.positive().len() + 1;
    loop {
        let negative: Vec<usize> =
            (0..rs.rank()).filter(|&i| rs.simple()[i].dot(x.as_slice()) < 0.0).collect();
        if negative.is_empty() {
            return Ok(seq);
        }
        if seq.len() >= limit {
            return Err(Error::Internal("greedy descent did not terminate".into()));
        }
        let i = negative[choose(&negative)];
        rs.simple()[i].reflect_in_place(x.as_mut_slice());
        seq.push(i);
    }
}

/// A reduced word for the longest element `w₀`, found by greedy descent from
/// `−Σ ωᵢ` choosing the first available simple root at each step.
pub fn reduced_word_w0(rs: &RootSystem) -> Result<Vec<usize>> {
    let start = -rs.chamber_point();
    let mut seq = greedy_descent(rs, &start, |_| 0)?;
    seq.reverse();
    Ok(seq)
}

/// A reduced word for `w₀` from a random start in `−C` and random choices
/// among the descending simple roots.
pub fn random_reduced_word_w0<R: Rng + ?Sized>(rs: &RootSystem, rng: &mut R) -> Result<Vec<usize>> {
    let start = (0..rs.rank())
        .map(|i| rs.coweight(i) * rng.random_range(0.05..1.0))
        .fold(Vector::zeros(rs.dim()), |acc, v| acc - v);
    let mut seq = greedy_descent(rs, &start, |cands| rng.random_range(0..cands.len()))?;
    seq.reverse();
    Ok(seq)
}

/// The longest element `w₀` with a reduced word of length `Card(R₊)`.
pub fn longest_element(rs: &RootSystem, w: &WeylGroup) -> Result<GroupElement> {
    let word = reduced_word_w0(rs)?;
    if word.len() != rs.positive().len() {
        return Err(Error::Internal(format!(
            "reduced word for w0 has length {} but Card(R+) = {}",
            word.len(),
            rs.positive().len()
        )));
    }
    let matrix = word_matrix(rs, &word);
    if !w.elements.is_empty() && w.find(&matrix, Tolerances::default().dedup).is_none() {
        return Err(Error::Internal("w0 is not an element of the generated group".into()));
    }
    let image = &matrix * rs.chamber_point();
    if rs.simple().iter().any(|a| a.dot(image.as_slice()) >= 0.0) {
        return Err(Error::Internal("w0 does not map C onto -C".into()));
    }
    Ok(GroupElement { matrix, word: Some(word) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> Vector {
        Vector::from_column_slice(c)
    }

    fn contains(roots: &[Root], x: &[f64]) -> bool {
        roots.iter().any(|r| max_abs_diff(r.as_slice(), x) < 1e-12)
    }

    #[test]
    fn dihedral_three_matches_triangular_lattice_roots() {
        let rs = build_dihedral(3).unwrap();
        let h = 3f64.sqrt() / 2.0;
        assert!(contains(rs.positive(), &[0.0, 1.0]));
        assert!(contains(rs.positive(), &[h, -0.5]));
        assert!(contains(rs.positive(), &[h, 0.5]));
        assert_eq!(rs.simple()[0].as_slice(), &[0.0, 1.0]);
        assert!(max_abs_diff(rs.simple()[1].as_slice(), &[h, -0.5]) < 1e-15);
        assert_eq!(rs.roots().len(), 6);
    }

    #[test]
    fn dihedral_four_simple_roots() {
        let rs = build_dihedral(4).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(contains(rs.simple(), &[s, -s]));
        assert!(contains(rs.simple(), &[0.0, 1.0]));
        assert_eq!(rs.positive().len(), 4);
    }

    #[test]
    fn dihedral_two_is_orthogonal_pair() {
        let rs = build_dihedral(2).unwrap();
        assert!(contains(rs.simple(), &[1.0, 0.0]));
        assert!(contains(rs.simple(), &[0.0, 1.0]));
        for x in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            assert!(contains(rs.roots(), &x));
        }
        assert_eq!(rs.roots().len(), 4);
    }

    #[test]
    fn dihedral_rejects_small_order() {
        assert!(matches!(build_dihedral(1), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_dihedral(0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn classical_rank_limits() {
        assert!(build_classical(ClassicalFamily::A, 1).is_err());
        assert!(build_classical(ClassicalFamily::D, 2).is_err());
        assert!(build_classical(ClassicalFamily::B, 5).is_err());
        for n in 2..=4 {
            build_classical(ClassicalFamily::A, n).unwrap();
            build_classical(ClassicalFamily::B, n).unwrap();
        }
        build_classical(ClassicalFamily::D, 4).unwrap();
    }

    #[test]
    fn positive_root_counts() {
        let counts = [
            (ClassicalFamily::A, 2, 3),
            (ClassicalFamily::A, 3, 6),
            (ClassicalFamily::A, 4, 10),
            (ClassicalFamily::B, 2, 4),
            (ClassicalFamily::B, 3, 9),
            (ClassicalFamily::B, 4, 16),
            (ClassicalFamily::D, 3, 6),
            (ClassicalFamily::D, 4, 12),
        ];
        for (f, n, k) in counts {
            assert_eq!(build_classical(f, n).unwrap().positive().len(), k, "{f:?}{n}");
        }
    }

    #[test]
    fn reflection_examples() {
        let s = reflection(&v(&[0.0, 1.0])).unwrap();
        assert_eq!(s.apply(&[1.0, -2.0]).as_slice(), &[1.0, 2.0]);
        let h = 3f64.sqrt() / 2.0;
        let sb = reflection(&v(&[h, -0.5])).unwrap();
        let img = sb.apply(&[0.0, 1.0]);
        assert!(max_abs_diff(img.as_slice(), &[h, 0.5]) < 1e-15);
        let on_wall = sb.apply(&[0.5, h]);
        assert!(max_abs_diff(on_wall.as_slice(), &[0.5, h]) < 1e-15);
        let sq = &sb.matrix * &sb.matrix;
        assert!((sq - Matrix::identity(2, 2)).amax() < 1e-15);
        assert!(matches!(reflection(&v(&[1.0, 1.0])), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn group_orders() {
        assert_eq!(generate_group(&build_dihedral(3).unwrap()).unwrap().len(), 6);
        assert_eq!(generate_group(&build_dihedral(4).unwrap()).unwrap().len(), 8);
        assert_eq!(generate_group(&build_dihedral(5).unwrap()).unwrap().len(), 10);
        let b2 = build_classical(ClassicalFamily::B, 2).unwrap();
        assert_eq!(generate_group(&b2).unwrap().len(), 8);
        let a3 = build_classical(ClassicalFamily::A, 3).unwrap();
        assert_eq!(generate_group(&a3).unwrap().len(), 24);
        assert_eq!(generate_group(&build_rank_one()).unwrap().len(), 2);
    }

    #[test]
    fn explosion_is_reported() {
        // Mirrors at an angle of one radian generate an infinite group.
        let a = Root::new(v(&[1.0, 0.0])).unwrap();
        let b = Root::new(v(&[1f64.cos(), 1f64.sin()])).unwrap();
        let gens = [a.reflection_matrix(), b.reflection_matrix()];
        let err = close_generators(&gens, 2, 500, 1e-9).unwrap_err();
        assert!(matches!(err, Error::GroupExplosion { cap: 500 }));
    }

    #[test]
    fn longest_word_lengths_and_d3_words() {
        let d3 = build_dihedral(3).unwrap();
        let w = generate_group(&d3).unwrap();
        let word = w.longest().word.clone().unwrap();
        assert!(word == vec![0, 1, 0] || word == vec![1, 0, 1], "{word:?}");
        let d4 = build_dihedral(4).unwrap();
        assert_eq!(generate_group(&d4).unwrap().longest().word.as_ref().unwrap().len(), 4);
        let a2 = build_classical(ClassicalFamily::A, 2).unwrap();
        assert_eq!(generate_group(&a2).unwrap().longest().word.as_ref().unwrap().len(), 3);
    }

    #[test]
    fn longest_element_is_longest_bfs_word() {
        for rs in [
            build_classical(ClassicalFamily::B, 3).unwrap(),
            build_classical(ClassicalFamily::D, 4).unwrap(),
            build_dihedral(6).unwrap(),
        ] {
            let w = generate_group(&rs).unwrap();
            let max = w.elements().iter().map(|g| g.word.as_ref().unwrap().len()).max().unwrap();
            assert_eq!(max, rs.positive().len());
            let i = w.find(&w.longest().matrix, 1e-9).unwrap();
            assert_eq!(w.elements()[i].word.as_ref().unwrap().len(), max);
        }
    }

    #[test]
    fn random_words_are_reduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rs = build_classical(ClassicalFamily::B, 4).unwrap();
        let w0 = word_matrix(&rs, &reduced_word_w0(&rs).unwrap());
        for _ in 0..50 {
            let word = random_reduced_word_w0(&rs, &mut rng).unwrap();
            assert_eq!(word.len(), 16);
            assert!((word_matrix(&rs, &word) - &w0).amax() < 1e-10);
        }
    }

    #[test]
    fn simple_reflections_permute_other_positive_roots() {
        for rs in [build_dihedral(5).unwrap(), build_classical(ClassicalFamily::D, 4).unwrap()] {
            for (i, a) in rs.simple().iter().enumerate() {
                let mut img: Vec<usize> = rs
                    .positive()
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, b)| {
                        let r = a.reflect(b.vector());
                        rs.positive().iter().position(|c| max_abs_diff(c.as_slice(), r.as_slice()) < 1e-10).unwrap()
                    })
                    .collect();
                img.sort();
                let expected: Vec<usize> = (0..rs.positive().len()).filter(|&j| j != i).collect();
                assert_eq!(img, expected);
            }
        }
    }

    #[test]
    fn elements_are_orthogonal_and_permute_roots() {
        let rs = build_classical(ClassicalFamily::B, 3).unwrap();
        let w = generate_group(&rs).unwrap();
        for g in w.elements() {
            assert!(g.is_orthogonal(1e-10));
            assert!((word_matrix(&rs, g.word.as_ref().unwrap()) - &g.matrix).amax() < 1e-10);
            for r in rs.roots() {
                assert!(rs.root_index(g.apply(r.as_slice()).as_slice(), 1e-10).is_some());
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let rs = build_classical(ClassicalFamily::A, 3).unwrap();
        let a = generate_group(&rs).unwrap();
        let b = generate_group(&rs).unwrap();
        for (x, y) in a.elements().iter().zip(b.elements()) {
            assert_eq!(x.matrix, y.matrix);
            assert_eq!(x.word, y.word);
        }
    }

    #[test]
    fn text_round_trip() {
        let rs = build_classical(ClassicalFamily::B, 3).unwrap();
        let text = rs.to_text();
        assert!(text.contains("\ndim 3\n"));
        let back = RootSystem::from_text(&text).unwrap();
        assert_eq!(back.family(), Family::B(3));
        for (a, b) in rs.roots().iter().zip(back.roots()) {
            assert!(max_abs_diff(a.as_slice(), b.as_slice()) < 1e-15);
        }
        assert!(RootSystem::from_text("dim 2\nroot 1 0\n").is_err());
    }

    #[test]
    fn family_parsing() {
        for f in [Family::Dihedral(7), Family::A(3), Family::B(2), Family::D(4), Family::Custom] {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert!("E8".parse::<Family>().is_err());
    }
}
