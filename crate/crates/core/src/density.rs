//! The reflected heat kernel
//! `p_t(x, y) = (c₀ t^{N/2})⁻¹ exp(−(|x|² + |y|²)/2t) Σ_{w∈W} exp(x·w(y)/t)`
//! on the closed chamber, and checks of it against folded Gaussian samples,
//! the Neumann condition and the heat equation.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};
use crate::folding::FoldingOperator;
use crate::rng::stream_rng;
use crate::rootsys::{dot, Matrix, Root, RootSystem, WeylGroup};

/// Tolerance for the chamber-membership precondition.
pub const CHAMBER_TOL: f64 = 1e-9;

/// `(2π)^{N/2}`.
pub fn normalizing_constant(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("dimension must be >= 1"));
    }
    Ok((2.0 * PI).powf(n as f64 / 2.0))
}

#[derive(Debug, Clone)]
pub struct HeatKernel {
    dim: usize,
    /// Group elements, row-major.
    elements: Vec<Vec<f64>>,
    simple: Vec<Root>,
    t: f64,
    c0: f64,
}

impl HeatKernel {
    pub fn new(rs: &RootSystem, w: &WeylGroup, t: f64) -> Result<Self> {
        let mats: Vec<Matrix> = w.elements().iter().map(|g| g.matrix.clone()).collect();
        Self::from_parts(rs.dim(), &mats, rs.simple().to_vec(), t)
    }

    /// Kernel of the trivial group: the free Gaussian on `ℝ^N`.
    pub fn free(dim: usize, t: f64) -> Result<Self> {
        Self::from_parts(dim, &[Matrix::identity(dim, dim)], Vec::new(), t)
    }

    pub fn from_parts(dim: usize, elements: &[Matrix], simple: Vec<Root>, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("t must be positive, got {t}")));
        }
        if elements.is_empty() || elements.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(invalid("group elements do not match the dimension"));
        }
        let elements = elements.iter().map(|m| m.transpose().as_slice().to_vec()).collect();
        Ok(Self { dim, elements, simple, t, c0: normalizing_constant(dim)? })
    }

    pub fn with_time(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("t must be positive, got {t}")));
        }
        Ok(Self { t, ..self.clone() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn group_order(&self) -> usize {
        self.elements.len()
    }

    pub fn simple(&self) -> &[Root] {
        &self.simple
    }

    pub fn in_chamber(&self, x: &[f64], tol: f64) -> bool {
        self.simple.iter().all(|a| a.dot(x) >= -tol)
    }

    fn check(&self, x: &[f64], name: &str) -> Result<()> {
        if x.len() != self.dim {
            return Err(invalid(format!("{name} has dimension {}, expected {}", x.len(), self.dim)));
        }
        if !self.in_chamber(x, CHAMBER_TOL) {
            return Err(invalid(format!("{name} = {x:?} lies outside the closed chamber")));
        }
        Ok(())
    }

    /// `p_t(x, y)` for `x, y` in the closed chamber.
    pub fn density(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x, "x")?;
        self.check(y, "y")?;
        Ok(self.density_extended(x, y))
    }

    /// The same formula without the chamber precondition; outside the chamber
    /// it is the `W`-invariant extension in `y`.
    pub fn density_extended(&self, x: &[f64], y: &[f64]) -> f64 {
        self.log_density_at(x, y, self.t).exp()
    }

    fn log_density_at(&self, x: &[f64], y: &[f64], t: f64) -> f64 {
        let base = -(dot(x, x) + dot(y, y)) / (2.0 * t);
        let mut exps = [0.0f64; 64];
        let mut heap;
        let terms: &mut [f64] = if self.elements.len() <= exps.len() {
            &mut exps[..self.elements.len()]
        } else {
            heap = vec![0.0; self.elements.len()];
            &mut heap
        };
        let d = self.dim;
        for (slot, m) in terms.iter_mut().zip(&self.elements) {
            let mut s = 0.0;
            for r in 0..d {
                let row = &m[r * d..(r + 1) * d];
                s += x[r] * dot(row, y);
            }
            *slot = s / t;
        }
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|a| (a - max).exp()).sum();
        -self.c0.ln() - 0.5 * d as f64 * t.ln() + base + max + sum.ln()
    }

    /// `p_s(x, y)` at another time `s`, without the chamber check.
    pub fn density_at_time(&self, x: &[f64], y: &[f64], s: f64) -> f64 {
        self.log_density_at(x, y, s).exp()
    }
}

/// Parameters of a chamber in one or two dimensions used for quadrature.
#[derive(Debug, Clone, Copy)]
enum ChamberShape {
    HalfLine { dir: f64 },
    Wedge { theta0: f64, width: f64 },
    Plane,
}

fn chamber_shape(k: &HeatKernel) -> Result<ChamberShape> {
    match (k.dim, k.simple.len()) {
        (1, 1) => Ok(ChamberShape::HalfLine { dir: k.simple[0].as_slice()[0].signum() }),
        (2, 2) => {
            // Edge rays are perpendicular to one simple root and on the
            // positive side of the other.
            let a = k.simple[0].as_slice();
            let b = k.simple[1].as_slice();
            let mut e0 = [-a[1], a[0]];
            if dot(&e0, b) < 0.0 {
                e0 = [a[1], -a[0]];
            }
            let mut e1 = [-b[1], b[0]];
            if dot(&e1, a) < 0.0 {
                e1 = [b[1], -b[0]];
            }
            let t0 = e0[1].atan2(e0[0]);
            let t1 = e1[1].atan2(e1[0]);
            let mut width = (t1 - t0).rem_euclid(2.0 * PI);
            let mut theta0 = t0;
            let mid = [(t0 + width / 2.0).cos(), (t0 + width / 2.0).sin()];
            if !k.in_chamber(&mid, 0.0) {
                theta0 = t1;
                width = 2.0 * PI - width;
            }
            Ok(ChamberShape::Wedge { theta0, width })
        }
        (2, 0) => Ok(ChamberShape::Plane),
        (d, r) => Err(invalid(format!("chamber quadrature supports full-rank systems in dimension 1 or 2, got dimension {d}, rank {r}"))),
    }
}

fn simpson_weights(n: usize) -> Vec<f64> {
    // n even panels, n + 1 nodes.
    (0..=n)
        .map(|i| if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 })
        .collect()
}

/// `∫_{C̄ ∩ B(0, radius)} f(y) dy` by composite Simpson in polar coordinates
/// (or on the half-line in one dimension), with `n` panels per axis.
pub fn integrate_chamber<F>(k: &HeatKernel, radius: f64, n: usize, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = n.max(2) + n % 2;
    let w = simpson_weights(n);
    let hr = radius / n as f64;
    match chamber_shape(k)? {
        ChamberShape::HalfLine { dir } => {
            let s: f64 = (0..=n).map(|i| w[i] * f(&[dir * i as f64 * hr])).sum();
            Ok(s * hr / 3.0)
        }
        shape => {
            let (theta0, width) = match shape {
                ChamberShape::Wedge { theta0, width } => (theta0, width),
                _ => (0.0, 2.0 * PI),
            };
            let ht = width / n as f64;
            let s: f64 = (0..=n)
                .into_par_iter()
                .map(|j| {
                    let th = theta0 + j as f64 * ht;
                    let (c, sn) = (th.cos(), th.sin());
                    let inner: f64 = (1..=n)
                        .map(|i| {
                            let r = i as f64 * hr;
                            w[i] * r * f(&[r * c, r * sn])
                        })
                        .sum();
                    w[j] * inner
                })
                .sum();
            Ok(s * hr * ht / 9.0)
        }
    }
}

/// Radius beyond which the folded Gaussian from `x` has mass below `1e-12`.
pub fn tail_radius(k: &HeatKernel, x: &[f64]) -> f64 {
    dot(x, x).sqrt() + 8.0 * k.t.sqrt()
}

/// `∫_{C̄} p_t(x, y) dy`.
pub fn total_mass(k: &HeatKernel, x: &[f64], panels: usize) -> Result<f64> {
    k.check(x, "x")?;
    integrate_chamber(k, tail_radius(k, x), panels, |y| k.density_extended(x, y))
}

/// `∫_{C̄} p_s(x, z) p_t(z, y) dz`.
pub fn chapman_kolmogorov(k: &HeatKernel, x: &[f64], y: &[f64], s: f64, t: f64, panels: usize) -> Result<f64> {
    k.check(x, "x")?;
    k.check(y, "y")?;
    let radius = dot(x, x).sqrt().max(dot(y, y).sqrt()) + 8.0 * s.max(t).sqrt();
    integrate_chamber(k, radius, panels, |z| k.density_at_time(x, z, s) * k.density_at_time(z, y, t))
}

/// `π(x + √t Z)` for `n` standard normal draws, generated in parallel
/// chunks, each with its own stream.
pub fn sample_folded(op: &FoldingOperator, x: &[f64], t: f64, n: usize, seed: u64) -> Vec<f64> {
    const CHUNK: usize = 1 << 14;
    let d = x.len();
    let sd = t.sqrt();
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let count = CHUNK.min(n - c * CHUNK);
            let mut out = Vec::with_capacity(count * d);
            for _ in 0..count {
                let start = out.len();
                for &xi in x {
                    let z: f64 = rng.sample(StandardNormal);
                    out.push(xi + sd * z);
                }
                op.fold_in_place(&mut out[start..]);
            }
            out
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityCell {
    /// Centroid of the part of the bin inside the chamber.
    pub y: Vec<f64>,
    /// Bin-averaged kernel.
    pub p_formula: f64,
    /// Sample count over `n · area`.
    pub p_histogram: f64,
    pub abs_err: f64,
    pub expected_prob: f64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct McDensityReport {
    pub n_samples: usize,
    pub bins: usize,
    pub extent: f64,
    pub tv_distance: f64,
    pub chi2: f64,
    pub dof: usize,
    pub pvalue: f64,
    /// Kernel mass beyond the binned region, kept as one extra bin.
    pub outside_prob: f64,
    pub outside_count: u64,
    pub cells: Vec<DensityCell>,
}

impl McDensityReport {
    pub fn write_csv<W: Write>(&self, mut out: W, header: &str) -> std::io::Result<()> {
        for line in header.lines() {
            writeln!(out, "# {line}")?;
        }
        let dim = self.cells.first().map_or(0, |c| c.y.len());
        let cols: Vec<String> = (1..=dim).map(|i| format!("y{i}")).collect();
        writeln!(out, "{},p_formula,p_histogram,abs_err", cols.join(","))?;
        for c in &self.cells {
            let ys: Vec<String> = c.y.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "{},{:.8e},{:.8e},{:.8e}", ys.join(","), c.p_formula, c.p_histogram, c.abs_err)?;
        }
        Ok(())
    }
}

/// Compares the empirical law of `π(X_t)`, `X_0 = x`, with the kernel.
///
/// Bins form a `bins^N` grid over a box whose intersection with `C̄`
/// contains `C̄ ∩ B(0, extent)`. Each bin is clipped exactly against the
/// chamber walls and the kernel is integrated over the clipped cell; the
/// mass outside the box is one further bin. Bins with expected count below
/// 5 are pooled for the χ² statistic.
pub fn mc_density_check(
    k: &HeatKernel,
    op: &FoldingOperator,
    x: &[f64],
    n_samples: usize,
    bins: usize,
    extent: f64,
    seed: u64,
) -> Result<McDensityReport> {
    k.check(x, "x")?;
    if n_samples < 100_000 {
        return Err(invalid(format!("Monte Carlo density check needs >= 1e5 samples, got {n_samples}")));
    }
    if bins == 0 || !(extent > 0.0) {
        return Err(invalid("bins and extent must be positive"));
    }
    let (lo, side) = bounding_box(k, extent)?;
    let d = k.dim;
    let width = side / bins as f64;
    let n_bins = bins.pow(d as u32);

    let geometry: Vec<CellGeometry> = (0..n_bins)
        .into_par_iter()
        .map(|b| {
            let (i, j) = (b % bins, b / bins);
            let x0 = lo[0] + i as f64 * width;
            if d == 1 {
                cell_geometry_1d(k, x, x0, x0 + width)
            } else {
                let y0 = lo[1] + j as f64 * width;
                let square = vec![[x0, y0], [x0 + width, y0], [x0 + width, y0 + width], [x0, y0 + width]];
                cell_geometry_2d(k, x, clip_to_chamber(k, square))
            }
        })
        .collect();

    let samples = sample_folded(op, x, k.t, n_samples, seed);
    let mut counts = vec![0u64; n_bins];
    let mut outside_count = 0u64;
    for y in samples.chunks_exact(d) {
        let mut idx = 0usize;
        let mut stride = 1usize;
        let mut ok = true;
        for c in 0..d {
            let i = ((y[c] - lo[c]) / width).floor();
            if !(0.0..bins as f64).contains(&i) {
                ok = false;
                break;
            }
            idx += i as usize * stride;
            stride *= bins;
        }
        if ok && geometry[idx].area > 0.0 {
            counts[idx] += 1;
        } else {
            outside_count += 1;
        }
    }

    let n = n_samples as f64;
    let inside_prob: f64 = geometry.iter().map(|g| g.mass).sum();
    let outside_prob = (1.0 - inside_prob).max(0.0);
    let mut cells = Vec::new();
    let mut pairs: Vec<(f64, u64)> = Vec::new();
    for (g, &count) in geometry.iter().zip(&counts) {
        if g.area <= 0.0 {
            continue;
        }
        let p_formula = g.mass / g.area;
        let p_histogram = count as f64 / (n * g.area);
        cells.push(DensityCell {
            y: g.centroid.clone(),
            p_formula,
            p_histogram,
            abs_err: (p_formula - p_histogram).abs(),
            expected_prob: g.mass,
            count,
        });
        pairs.push((g.mass, count));
    }
    pairs.push((outside_prob, outside_count));

    let tv_distance = 0.5 * pairs.iter().map(|(p, c)| (p - *c as f64 / n).abs()).sum::<f64>();
    let (chi2, dof) = chi2_pooled(&pairs, n);
    let pvalue = if dof > 0 { ChiSquared::new(dof as f64).map(|c| c.sf(chi2)).unwrap_or(f64::NAN) } else { f64::NAN };

    Ok(McDensityReport {
        n_samples,
        bins,
        extent,
        tv_distance,
        chi2,
        dof,
        pvalue,
        outside_prob,
        outside_count,
        cells,
    })
}

struct CellGeometry {
    area: f64,
    mass: f64,
    centroid: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, five points.
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

fn cell_geometry_1d(k: &HeatKernel, x: &[f64], a: f64, b: f64) -> CellGeometry {
    let dir = k.simple.first().map_or(1.0, |r| r.as_slice()[0].signum());
    let (a, b) = if dir > 0.0 { (a.max(0.0), b) } else { (a, b.min(0.0)) };
    if b <= a {
        return CellGeometry { area: 0.0, mass: 0.0, centroid: vec![a] };
    }
    let mut mass = 0.0;
    let panels = 8;
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (t, w) in GL5 {
            mass += w * h / 2.0 * k.density_extended(x, &[mid + t * h / 2.0]);
        }
    }
    CellGeometry { area: b - a, mass, centroid: vec![(a + b) / 2.0] }
}

/// Clips a convex polygon to `{y : α·y ≥ 0}` for every simple root.
fn clip_to_chamber(k: &HeatKernel, mut poly: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    for a in &k.simple {
        let a = a.as_slice();
        let f = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1];
        let mut out = Vec::with_capacity(poly.len() + 1);
        for i in 0..poly.len() {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            let (fp, fq) = (f(&p), f(&q));
            if fp >= 0.0 {
                out.push(p);
            }
            if (fp >= 0.0) != (fq >= 0.0) {
                let s = fp / (fp - fq);
                out.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
            }
        }
        poly = out;
        if poly.len() < 3 {
            return Vec::new();
        }
    }
    poly
}

/// Degree-5 rule on the reference triangle: barycentric point and weight.
const TRI7: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([0.059_715_871_789_770, 0.470_142_064_105_115, 0.470_142_064_105_115], 0.132_394_152_788_506),
    ([0.470_142_064_105_115, 0.059_715_871_789_770, 0.470_142_064_105_115], 0.132_394_152_788_506),
    ([0.470_142_064_105_115, 0.470_142_064_105_115, 0.059_715_871_789_770], 0.132_394_152_788_506),
    ([0.797_426_985_353_087, 0.101_286_507_323_456, 0.101_286_507_323_456], 0.125_939_180_544_827),
    ([0.101_286_507_323_456, 0.797_426_985_353_087, 0.101_286_507_323_456], 0.125_939_180_544_827),
    ([0.101_286_507_323_456, 0.101_286_507_323_456, 0.797_426_985_353_087], 0.125_939_180_544_827),
];

fn triangle_integral(a: [f64; 2], b: [f64; 2], c: [f64; 2], f: &dyn Fn(&[f64]) -> f64, depth: u32) -> f64 {
    if depth > 0 {
        let mid = |p: [f64; 2], q: [f64; 2]| [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        return triangle_integral(a, ab, ca, f, depth - 1)
            + triangle_integral(ab, b, bc, f, depth - 1)
            + triangle_integral(ca, bc, c, f, depth - 1)
            + triangle_integral(ab, bc, ca, f, depth - 1);
    }
    let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    TRI7.iter()
        .map(|(l, w)| {
            let p = [l[0] * a[0] + l[1] * b[0] + l[2] * c[0], l[0] * a[1] + l[1] * b[1] + l[2] * c[1]];
            w * f(&p)
        })
        .sum::<f64>()
        * area
}

fn cell_geometry_2d(k: &HeatKernel, x: &[f64], poly: Vec<[f64; 2]>) -> CellGeometry {
    if poly.len() < 3 {
        return CellGeometry { area: 0.0, mass: 0.0, centroid: vec![0.0, 0.0] };
    }
    let (mut area, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let cross = p[0] * q[1] - q[0] * p[1];
        area += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    area /= 2.0;
    if area.abs() < 1e-300 {
        return CellGeometry { area: 0.0, mass: 0.0, centroid: vec![0.0, 0.0] };
    }
    let centroid = vec![cx / (6.0 * area), cy / (6.0 * area)];
    let f = |y: &[f64]| k.density_extended(x, y);
    let mass = (1..poly.len() - 1).map(|i| triangle_integral(poly[0], poly[i], poly[i + 1], &f, 2)).sum();
    CellGeometry { area: area.abs(), mass, centroid }
}

/// Pearson χ² over `(probability, count)` pairs after pooling every pair
/// with expected count below 5.
pub fn chi2_pooled(pairs: &[(f64, u64)], n: f64) -> (f64, usize) {
    let mut kept: Vec<(f64, f64)> = Vec::new();
    let (mut pool_e, mut pool_o) = (0.0, 0.0);
    for &(p, c) in pairs {
        let e = p * n;
        if e < 5.0 {
            pool_e += e;
            pool_o += c as f64;
        } else {
            kept.push((e, c as f64));
        }
    }
    if pool_e > 0.0 || pool_o > 0.0 {
        if pool_e >= 5.0 || kept.is_empty() {
            kept.push((pool_e, pool_o));
        } else {
            // Fold the pool into the smallest kept bin.
            let i = (0..kept.len()).min_by(|&a, &b| kept[a].0.total_cmp(&kept[b].0)).unwrap();
            kept[i].0 += pool_e;
            kept[i].1 += pool_o;
        }
    }
    let chi2 = kept.iter().filter(|(e, _)| *e > 0.0).map(|(e, o)| (o - e).powi(2) / e).sum();
    (chi2, kept.len().saturating_sub(1))
}

fn bounding_box(k: &HeatKernel, extent: f64) -> Result<(Vec<f64>, f64)> {
    match chamber_shape(k)? {
        ChamberShape::HalfLine { dir } => Ok((vec![if dir > 0.0 { 0.0 } else { -extent }], extent)),
        ChamberShape::Plane => Ok((vec![-extent, -extent], 2.0 * extent)),
        ChamberShape::Wedge { theta0, width } => {
            let mut pts = vec![[0.0, 0.0]];
            let mut add = |th: f64| pts.push([extent * th.cos(), extent * th.sin()]);
            add(theta0);
            add(theta0 + width);
            for q in 0..8 {
                let axis = q as f64 * PI / 2.0;
                let rel = (axis - theta0).rem_euclid(2.0 * PI);
                if rel < width {
                    add(axis);
                }
            }
            let min = |c: usize| pts.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min);
            let max = |c: usize| pts.iter().map(|p| p[c]).fold(f64::NEG_INFINITY, f64::max);
            let side = (max(0) - min(0)).max(max(1) - min(1));
            Ok((vec![min(0), min(1)], side))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NeumannReport {
    /// Largest `|∂p/∂n| / p` over the checked points.
    pub max_relative_normal: f64,
    /// Largest `|∂p/∂τ| / p` along the wall.
    pub max_relative_tangential: f64,
    pub checked: usize,
    /// Points not in the relative interior of exactly one face.
    pub skipped: usize,
}

/// Centered differences of `y ↦ p_t(x, y)` across and along the wall at
/// each sample, using the extended kernel just outside the chamber.
pub fn neumann_check(k: &HeatKernel, x: &[f64], wall_points: &[Vec<f64>], h: f64) -> Result<NeumannReport> {
    k.check(x, "x")?;
    if !(h > 0.0) {
        return Err(invalid("step must be positive"));
    }
    let mut rep = NeumannReport { max_relative_normal: 0.0, max_relative_tangential: 0.0, checked: 0, skipped: 0 };
    for y in wall_points {
        if y.len() != k.dim || !k.in_chamber(y, CHAMBER_TOL) {
            return Err(invalid(format!("wall point {y:?} is not in the closed chamber")));
        }
        let on: Vec<&Root> = k.simple.iter().filter(|a| a.dot(y).abs() <= CHAMBER_TOL).collect();
        if on.len() != 1 {
            rep.skipped += 1;
            continue;
        }
        let a = on[0].as_slice();
        let p = k.density_extended(x, y);
        let shifted = |dir: &[f64], s: f64| -> f64 {
            let z: Vec<f64> = y.iter().zip(dir).map(|(yi, di)| yi + s * di).collect();
            k.density_extended(x, &z)
        };
        let dn = (shifted(a, h) - shifted(a, -h)) / (2.0 * h);
        rep.max_relative_normal = rep.max_relative_normal.max(dn.abs() / p);
        let ay = dot(a, y);
        let mut tau: Vec<f64> = y.iter().zip(a).map(|(yi, ai)| yi - ay * ai).collect();
        let norm = dot(&tau, &tau).sqrt();
        if norm > 0.0 {
            tau.iter_mut().for_each(|v| *v /= norm);
            let dt = (shifted(&tau, h) - shifted(&tau, -h)) / (2.0 * h);
            rep.max_relative_tangential = rep.max_relative_tangential.max(dt.abs() / p);
        }
        rep.checked += 1;
    }
    Ok(rep)
}

/// Random points in the relative interior of the faces: `Σ_{j≠α} c_j ω_j`
/// with `c_j` uniform in `[lo, hi]`, cycling through the simple roots.
pub fn random_wall_points<R: Rng + ?Sized>(rs: &RootSystem, n: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let r = rs.rank();
    (0..n)
        .map(|i| {
            let alpha = i % r;
            let mut y = vec![0.0; rs.dim()];
            for j in (0..r).filter(|&j| j != alpha) {
                let c = rng.random_range(lo..hi);
                let w = rs.coweight(j);
                for (yi, wi) in y.iter_mut().zip(w.iter()) {
                    *yi += c * wi;
                }
            }
            y
        })
        .collect()
}

/// Largest `|∂_t p − ½Δ_y p| / (|∂_t p| + p/t)` over the samples, with
/// central differences of width `h` in `t` and in each coordinate of `y`.
pub fn heat_equation_residual(k: &HeatKernel, x: &[f64], samples: &[Vec<f64>], h: f64) -> Result<f64> {
    k.check(x, "x")?;
    if !(h > 0.0 && h < k.t) {
        return Err(invalid("step must lie in (0, t)"));
    }
    let mut worst: f64 = 0.0;
    for y in samples {
        if y.len() != k.dim {
            return Err(invalid("sample has the wrong dimension"));
        }
        if k.simple.iter().any(|a| a.dot(y) < 3.0 * h) {
            return Err(Error::Precondition(format!("sample {y:?} is within 3h of a wall")));
        }
        let p = |z: &[f64], t: f64| k.density_at_time(x, z, t);
        let t = k.t;
        let p0 = p(y, t);
        let dpdt = (p(y, t + h) - p(y, t - h)) / (2.0 * h);
        let mut lap = 0.0;
        let mut z = y.clone();
        for c in 0..k.dim {
            z[c] = y[c] + h;
            let up = p(&z, t);
            z[c] = y[c] - h;
            let down = p(&z, t);
            z[c] = y[c];
            lap += (up - 2.0 * p0 + down) / (h * h);
        }
        worst = worst.max((dpdt - 0.5 * lap).abs() / (dpdt.abs() + p0 / t));
    }
    Ok(worst)
}
