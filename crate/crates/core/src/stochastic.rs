//! Brownian paths, their folded images, and local-time estimators.
//!
//! Local-time conventions:
//!
//! * a two-sided scalar path `Z` has `L_t(Z) ≈ (1/2ε) ∫₀ᵗ 1{|Z_s| < ε} ds`
//!   ([`Band::Symmetric`]), which is the local time in `Z⁻ = Z₀⁻ − ∫1{Z≤0}dZ + ½L`;
//! * a nonnegative reflected coordinate `α·π(X)` has boundary process
//!   `L^α = ½ L(α·π(X)) ≈ (1/2ε) ∫₀ᵗ 1{0 ≤ α·π(X_s) < ε} ds`
//!   ([`Band::OneSided`]).
//!
//! Stochastic integrals are left-endpoint sums.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::folding::{single_orbit_roots, FoldingOperator};
use crate::rng::stream_rng;
use crate::rootsys::{dot, max_abs_diff, Family, RootSystem, WeylGroup};

/// Default bandwidth multiplier: `ε = 5√dt`.
pub const DEFAULT_EPS_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    pub n_paths: usize,
    pub x0: Vec<f64>,
}

impl SimConfig {
    pub fn new(x0: Vec<f64>, t_end: f64, dt: f64, seed: u64, n_paths: usize) -> Result<Self> {
        let cfg = Self { t_end, dt, seed, n_paths, x0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("T must be positive, got {}", self.t_end)));
        }
        let ratio = self.t_end / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(invalid(format!("T/dt = {ratio} is not an integer")));
        }
        if self.n_paths < 1 {
            return Err(invalid("n_paths must be >= 1"));
        }
        if self.x0.is_empty() {
            return Err(invalid("starting point must have dimension >= 1"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn default_epsilon(&self) -> f64 {
        DEFAULT_EPS_FACTOR * self.dt.sqrt()
    }
}

/// A trajectory sampled on the grid `0, dt, …, n·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    dim: usize,
    dt: f64,
    points: Vec<f64>,
}

impl Path {
    pub fn from_points(dim: usize, dt: f64, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) || points.is_empty() {
            return Err(invalid("path data does not match its dimension"));
        }
        Ok(Self { dim, dt, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of grid points (steps + 1).
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// The scalar path `u·X_t`.
    pub fn project_onto(&self, u: &[f64]) -> Vec<f64> {
        self.points().map(|p| dot(p, u)).collect()
    }

    fn same_grid(&self, other: &Path) -> bool {
        self.dim == other.dim && self.len() == other.len() && self.dt == other.dt
    }
}

/// Brownian motion from `cfg.x0` with i.i.d. `N(0, dt·Id)` increments, drawn
/// from stream `path_index` of the run seed.
pub fn simulate_bm(cfg: &SimConfig, path_index: u64) -> Path {
    let mut rng = stream_rng(cfg.seed, path_index);
    let n = cfg.n_steps();
    let d = cfg.dim();
    let sd = cfg.dt.sqrt();
    let mut points = Vec::with_capacity((n + 1) * d);
    points.extend_from_slice(&cfg.x0);
    for k in 0..n {
        for c in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            let prev = points[k * d + c];
            points.push(prev + sd * z);
        }
    }
    Path { dim: d, dt: cfg.dt, points }
}

/// Pointwise `π` along a path.
pub fn fold_path(op: &FoldingOperator, p: &Path) -> Path {
    let mut points = p.points.clone();
    for chunk in points.chunks_exact_mut(p.dim) {
        op.fold_in_place(chunk);
    }
    Path { dim: p.dim, dt: p.dt, points }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Band {
    /// `(−ε, ε)`.
    Symmetric,
    /// `[0, ε)`.
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalTimeKind {
    OccupationSymmetric,
    OccupationOneSided,
    TanakaDiscrete,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalTimeEstimate {
    pub kind: LocalTimeKind,
    /// Bandwidth; zero for the Tanaka estimator.
    pub epsilon: f64,
    pub dt: f64,
    /// Cumulative estimate at each grid time.
    pub values: Vec<f64>,
    /// Set when `ε < √dt`: the band is narrower than a typical step.
    pub coarse_bandwidth: bool,
}

impl LocalTimeEstimate {
    pub fn final_value(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.first().is_none_or(|&v| v == 0.0) && self.values.windows(2).all(|w| w[1] >= w[0])
    }
}

fn in_band(z: f64, eps: f64, band: Band) -> bool {
    match band {
        Band::Symmetric => z.abs() < eps,
        // Folded coordinates are ≥ 0 up to rounding.
        Band::OneSided => z < eps && z >= -1e-12,
    }
}

fn occupation_curve(n: usize, dt: f64, eps: f64, mut hit: impl FnMut(usize) -> bool) -> Vec<f64> {
    let w = dt / (2.0 * eps);
    let mut values = Vec::with_capacity(n);
    let mut acc = 0.0;
    values.push(0.0);
    for k in 0..n.saturating_sub(1) {
        if hit(k) {
            acc += w;
        }
        values.push(acc);
    }
    values
}

/// Occupation-time local time `(1/2ε) Σ 1{z_s ∈ band} dt` over left
/// endpoints.
pub fn local_time_occupation(z: &[f64], dt: f64, eps: f64, band: Band) -> Result<LocalTimeEstimate> {
    if !(eps > 0.0) {
        return Err(invalid(format!("bandwidth must be positive, got {eps}")));
    }
    let values = occupation_curve(z.len(), dt, eps, |k| in_band(z[k], eps, band));
    Ok(LocalTimeEstimate {
        kind: match band {
            Band::Symmetric => LocalTimeKind::OccupationSymmetric,
            Band::OneSided => LocalTimeKind::OccupationOneSided,
        },
        epsilon: eps,
        dt,
        values,
        coarse_bandwidth: eps < dt.sqrt(),
    })
}

/// Local time read off the discrete Tanaka identity
/// `L_t = 2(z_t⁻ − z_0⁻ + Σ_{s<t} 1{z_s ≤ 0} Δz_s)`.
///
/// The step increment is `2 z_{k+1}⁺` when `z_k ≤ 0` and `2 z_{k+1}⁻`
/// otherwise; summing those keeps the curve nondecreasing in floating point.
pub fn local_time_tanaka(z: &[f64], dt: f64) -> LocalTimeEstimate {
    let mut values = Vec::with_capacity(z.len());
    let mut acc = 0.0;
    values.push(0.0);
    for k in 1..z.len() {
        acc += 2.0 * if z[k - 1] <= 0.0 { z[k].max(0.0) } else { (-z[k]).max(0.0) };
        values.push(acc);
    }
    LocalTimeEstimate { kind: LocalTimeKind::TanakaDiscrete, epsilon: 0.0, dt, values, coarse_bandwidth: false }
}

/// `max_t |z_t⁻ − z_0⁻ + Σ_{s<t} 1{z_s ≤ 0} Δz_s − ½ L_t|` for a symmetric
/// occupation estimate `lt` of the local time of `z`.
pub fn tanaka_residual(z: &[f64], lt: &LocalTimeEstimate) -> Result<f64> {
    if lt.kind != LocalTimeKind::OccupationSymmetric {
        return Err(invalid("Tanaka residual needs a symmetric occupation estimate"));
    }
    if lt.values.len() != z.len() {
        return Err(invalid("local time and path have different grids"));
    }
    let neg = |x: f64| (-x).max(0.0);
    let mut ito = 0.0;
    let mut worst = (neg(z[0]) - neg(z[0]) - 0.5 * lt.values[0]).abs();
    for k in 1..z.len() {
        if z[k - 1] <= 0.0 {
            ito += z[k] - z[k - 1];
        }
        let r = neg(z[k]) - neg(z[0]) + ito - 0.5 * lt.values[k];
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    /// Realized covariation `⟨M⟩_T`, row-major `N×N`.
    pub qv: Vec<f64>,
    /// `max |⟨M⟩_T − T·Id|` entrywise.
    pub qv_error: f64,
    /// Largest off-diagonal `|⟨M⟩_T|`.
    pub qv_offdiag: f64,
    /// Fraction of the discrete finite-variation mass `Σ|Δπ(X) − w ΔX|`
    /// accrued at steps where every `α·π(X)` exceeds `eps_support`.
    pub boundary_support_leak: f64,
    /// Boundary processes `L^α`, one per simple root.
    pub local_times: Vec<LocalTimeEstimate>,
}

impl DecompositionReport {
    pub fn final_local_times(&self) -> Vec<f64> {
        self.local_times.iter().map(LocalTimeEstimate::final_value).collect()
    }
}

/// Splits `π(X)` into `π(X₀) + M + Σ_α L^α α` with `L^α` the one-sided
/// occupation estimate, and measures how far `M` is from a Brownian motion
/// through its realized covariation.
pub fn decompose_folded(
    op: &FoldingOperator,
    raw: &Path,
    folded: &Path,
    eps: f64,
    eps_support: f64,
) -> Result<DecompositionReport> {
    if !raw.same_grid(folded) || raw.dim != op.dim() {
        return Err(invalid("raw and folded paths have inconsistent grids"));
    }
    if !(eps > 0.0 && eps_support > 0.0) {
        return Err(invalid("bandwidths must be positive"));
    }
    let d = raw.dim;
    let n = raw.len();
    let simple = op.simple();

    let mut masks = Vec::with_capacity(n);
    let mut buf = vec![0.0; d];
    for k in 0..n {
        buf.copy_from_slice(raw.point(k));
        masks.push(op.fold_tracking(&mut buf));
        if max_abs_diff(&buf, folded.point(k)) > 1e-12 * (1.0 + dot(&buf, &buf).sqrt()) {
            return Err(invalid("folded path is not the pointwise projection of the raw path"));
        }
    }

    let local_times: Vec<LocalTimeEstimate> = simple
        .iter()
        .map(|a| local_time_occupation(&folded.project_onto(a.as_slice()), raw.dt, eps, Band::OneSided))
        .collect::<Result<_>>()?;

    let mut qv = DMatrix::<f64>::zeros(d, d);
    let mut dm = vec![0.0; d];
    let mut fv = vec![0.0; d];
    let (mut leak_mass, mut total_mass) = (0.0, 0.0);
    for k in 0..n - 1 {
        let (p0, p1) = (folded.point(k), folded.point(k + 1));
        for c in 0..d {
            dm[c] = p1[c] - p0[c];
        }
        for (a, lt) in simple.iter().zip(&local_times) {
            let dl = lt.values[k + 1] - lt.values[k];
            if dl != 0.0 {
                for c in 0..d {
                    dm[c] -= dl * a.as_slice()[c];
                }
            }
        }
        for r in 0..d {
            for c in 0..d {
                qv[(r, c)] += dm[r] * dm[c];
            }
        }

        let (x0, x1) = (raw.point(k), raw.point(k + 1));
        for c in 0..d {
            fv[c] = x1[c] - x0[c];
        }
        op.apply_fired(masks[k], &mut fv);
        for c in 0..d {
            fv[c] = (p1[c] - p0[c]) - fv[c];
        }
        let mass = dot(&fv, &fv).sqrt();
        if mass > 0.0 {
            total_mass += mass;
            if simple.iter().all(|a| a.dot(p0) > eps_support) {
                leak_mass += mass;
            }
        }
    }

    let t = raw.time(n - 1);
    let mut qv_error: f64 = 0.0;
    let mut qv_offdiag: f64 = 0.0;
    for r in 0..d {
        for c in 0..d {
            let target = if r == c { t } else { 0.0 };
            qv_error = qv_error.max((qv[(r, c)] - target).abs());
            if r != c {
                qv_offdiag = qv_offdiag.max(qv[(r, c)].abs());
            }
        }
    }
    let boundary_support_leak = if total_mass > 0.0 { leak_mass / total_mass } else { 0.0 };
    Ok(DecompositionReport {
        qv: qv.transpose().as_slice().to_vec(),
        qv_error,
        qv_offdiag,
        boundary_support_leak,
        local_times,
    })
}

/// `L^α ≈ (1/2ε) Σ 1{d(X_s, K_α) < ε} dt` with `d(x, K_α) = α·π(x)`.
pub fn boundary_via_distance(op: &FoldingOperator, raw: &Path, alpha: usize, eps: f64) -> Result<LocalTimeEstimate> {
    if alpha >= op.simple().len() {
        return Err(invalid(format!("simple root index {alpha} out of range")));
    }
    let dist: Vec<f64> = raw.points().map(|p| op.chamber_distance(alpha, p)).collect();
    local_time_occupation(&dist, raw.dt, eps, Band::OneSided)
}

/// `Σ_{γ ∈ W·α ∩ R₊} L(γ·X)` with symmetric occupation estimates. Requires
/// `α` to be the only simple root in its orbit.
pub fn orbit_sum_local_times(
    w: &WeylGroup,
    rs: &RootSystem,
    raw: &Path,
    alpha: usize,
    eps: f64,
) -> Result<LocalTimeEstimate> {
    let orbit = single_orbit_roots(w, rs, alpha)?;
    let series: Vec<Vec<f64>> = orbit.iter().map(|&g| raw.project_onto(rs.positive()[g].as_slice())).collect();
    let mut est = local_time_occupation(&series[0], raw.dt, eps, Band::Symmetric)?;
    let per_hit = raw.dt / (2.0 * eps);
    let mut acc = 0.0;
    for k in 0..raw.len() {
        est.values[k] = acc;
        acc += per_hit * series.iter().filter(|s| s[k].abs() < eps).count() as f64;
    }
    Ok(est)
}

/// Both sides of the order-six dihedral identity expressing `L^β` as a sum
/// of local times of `γ·X` restricted to half-lines.
#[derive(Debug, Clone, Serialize)]
pub struct IndicatorIdentity {
    /// `L^β_T` from the chamber distance.
    pub boundary: f64,
    /// Sum of the three indicator-restricted local times at `T`.
    pub indicator_sum: f64,
    /// `|boundary − indicator_sum| / max(boundary, indicator_sum, 0.1)`.
    pub relative: f64,
}

/// Half-lines making up `K_β` for the order-six dihedral group with simple
/// roots `α = (0, 1)`, `β = (√3/2, −1/2)`: for each positive root, the
/// direction of the ray of its hyperplane that lies in `K_β`.
pub fn d3_beta_rays() -> [([f64; 2], [f64; 2]); 3] {
    let h = 3f64.sqrt() / 2.0;
    [
        // H_β, ray at angle π/3.
        ([h, -0.5], [0.5, h]),
        // H_α, ray at angle π.
        ([0.0, 1.0], [-1.0, 0.0]),
        // H_γ, ray at angle 5π/3.
        ([h, 0.5], [0.5, -h]),
    ]
}

pub fn d3_indicator_identity(op: &FoldingOperator, rs: &RootSystem, raw: &Path, eps: f64) -> Result<IndicatorIdentity> {
    let h = 3f64.sqrt() / 2.0;
    let ok = rs.family() == Family::Dihedral(3)
        && max_abs_diff(rs.simple()[0].as_slice(), &[0.0, 1.0]) < 1e-12
        && max_abs_diff(rs.simple()[1].as_slice(), &[h, -0.5]) < 1e-12;
    if !ok {
        return Err(Error::Precondition("identity is stated for dihedral(3) with S = {(0,1), (√3/2,−1/2)}".into()));
    }
    let boundary = boundary_via_distance(op, raw, 1, eps)?.final_value();
    let per_hit = raw.dt / (2.0 * eps);
    let rays = d3_beta_rays();
    let mut indicator_sum = 0.0;
    for p in raw.points().take(raw.len() - 1) {
        for (root, dir) in &rays {
            if dot(root, p).abs() < eps && dot(dir, p) >= 0.0 {
                indicator_sum += per_hit;
            }
        }
    }
    let relative = (boundary - indicator_sum).abs() / boundary.max(indicator_sum).max(0.1);
    Ok(IndicatorIdentity { boundary, indicator_sum, relative })
}

/// `(1/2ε) ∫ 1{|γ₁·X| < ε, |γ₂·X| < ε} ds` at time `T`.
pub fn pair_occupation(raw: &Path, g1: &[f64], g2: &[f64], eps: f64) -> f64 {
    let per_hit = raw.dt / (2.0 * eps);
    raw.points()
        .take(raw.len() - 1)
        .filter(|p| dot(g1, p).abs() < eps && dot(g2, p).abs() < eps)
        .count() as f64
        * per_hit
}

/// Simulates `cfg.n_paths` paths in parallel and maps each through `f`;
/// results are in path order.
pub fn map_paths<T, F>(cfg: &SimConfig, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &Path) -> T + Sync,
{
    (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let p = simulate_bm(cfg, i);
            f(i, &p)
        })
        .collect()
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::build_dihedral;

    fn line_cfg(dt: f64, seed: u64, n: usize) -> SimConfig {
        SimConfig::new(vec![0.0], 1.0, dt, seed, n).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(vec![0.0], 1.0, 0.0, 1, 1).is_err());
        assert!(SimConfig::new(vec![0.0], 1.0, 0.3, 1, 1).is_err());
        assert!(SimConfig::new(vec![0.0], 1.0, 0.25, 1, 0).is_err());
        assert_eq!(SimConfig::new(vec![0.0], 1.0, 1e-5, 1, 1).unwrap().n_steps(), 100_000);
    }

    #[test]
    fn simulation_is_deterministic_and_starts_at_x0() {
        let cfg = SimConfig::new(vec![0.5, -1.0], 0.1, 1e-3, 9, 1).unwrap();
        let a = simulate_bm(&cfg, 0);
        let b = simulate_bm(&cfg, 0);
        assert_eq!(a, b);
        assert_eq!(a.point(0), &[0.5, -1.0]);
        assert_eq!(a.len(), 101);
        assert_ne!(a, simulate_bm(&cfg, 1));
    }

    #[test]
    fn increments_have_covariance_dt_identity() {
        let cfg = SimConfig::new(vec![0.0, 0.0], 1.0, 1e-6, 4, 1).unwrap();
        let p = simulate_bm(&cfg, 0);
        let mut c = [0.0; 3];
        for k in 0..p.len() - 1 {
            let (a, b) = (p.point(k), p.point(k + 1));
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            c[0] += dx * dx;
            c[1] += dy * dy;
            c[2] += dx * dy;
        }
        let n = (p.len() - 1) as f64;
        assert!((c[0] / n / cfg.dt - 1.0).abs() < 0.02);
        assert!((c[1] / n / cfg.dt - 1.0).abs() < 0.02);
        assert!((c[2] / n / cfg.dt).abs() < 0.02);
    }

    #[test]
    fn fold_path_stays_in_chamber_and_contracts() {
        let rs = build_dihedral(3).unwrap();
        let op = FoldingOperator::new(&rs).unwrap();
        let cfg = SimConfig::new(vec![0.0, 0.0], 1.0, 1e-4, 2, 1).unwrap();
        let raw = simulate_bm(&cfg, 0);
        let f = fold_path(&op, &raw);
        for k in 0..f.len() {
            assert!(rs.in_closed_chamber(f.point(k), 1e-12));
        }
        for k in 0..f.len() - 1 {
            let d = |p: &Path| {
                let (a, b) = (p.point(k), p.point(k + 1));
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            };
            assert!(d(&f) <= d(&raw) + 1e-12);
        }
        // Already inside: unchanged.
        let inside = Path::from_points(2, 0.1, vec![1.0, 0.1, 2.0, 0.2]).unwrap();
        assert_eq!(fold_path(&op, &inside), inside);
    }

    #[test]
    fn occupation_zero_away_from_band() {
        let z = vec![1.0; 50];
        let lt = local_time_occupation(&z, 0.01, 0.1, Band::Symmetric).unwrap();
        assert_eq!(lt.final_value(), 0.0);
        assert!(lt.is_nondecreasing());
        assert!(local_time_occupation(&z, 0.01, 0.0, Band::Symmetric).is_err());
        assert!(local_time_occupation(&z, 0.01, 0.05, Band::Symmetric).unwrap().coarse_bandwidth);
    }

    #[test]
    fn tanaka_residual_vanishes_for_positive_paths() {
        let z: Vec<f64> = (0..100).map(|k| 1.0 + k as f64 * 0.01).collect();
        let lt = local_time_occupation(&z, 0.01, 0.5, Band::Symmetric).unwrap();
        assert_eq!(tanaka_residual(&z, &lt).unwrap(), 0.0);
    }

    #[test]
    fn tanaka_residual_for_a_ramp_shrinks_with_dt() {
        let res = |n: usize| {
            let dt = 1.0 / n as f64;
            let z: Vec<f64> = (0..=n).map(|k| k as f64 * dt - 0.5).collect();
            let zero = LocalTimeEstimate {
                kind: LocalTimeKind::OccupationSymmetric,
                epsilon: 1.0,
                dt,
                values: vec![0.0; n + 1],
                coarse_bandwidth: false,
            };
            tanaka_residual(&z, &zero).unwrap()
        };
        let (a, b) = (res(100), res(1000));
        assert!(b < a && b <= 1e-3 + 1e-12, "{a} {b}");
    }

    #[test]
    fn tanaka_discrete_is_nondecreasing() {
        let cfg = line_cfg(1e-4, 3, 1);
        let z = simulate_bm(&cfg, 0).project_onto(&[1.0]);
        let lt = local_time_tanaka(&z, cfg.dt);
        assert!(lt.is_nondecreasing());
        assert!(lt.final_value() > 0.0);
        let neg = |x: f64| (-x).max(0.0);
        let ito: f64 = (0..z.len() - 1).filter(|&k| z[k] <= 0.0).map(|k| z[k + 1] - z[k]).sum();
        let closed = 2.0 * (neg(*z.last().unwrap()) - neg(z[0]) + ito);
        assert!((lt.final_value() - closed).abs() < 1e-9);
    }

    #[test]
    fn mean_local_time_of_linear_bm() {
        // E[L_1] = E|B_1| = √(2/π).
        let cfg = line_cfg(1e-4, 21, 10_000);
        let eps = cfg.default_epsilon();
        let finals = map_paths(&cfg, |_, p| {
            local_time_occupation(&p.project_onto(&[1.0]), cfg.dt, eps, Band::Symmetric).unwrap().final_value()
        });
        let absb = map_paths(&cfg, |_, p| p.point(p.len() - 1)[0].abs());
        let target = (2.0 / std::f64::consts::PI).sqrt();
        let (m, _) = mean_se(&finals);
        let (mb, _) = mean_se(&absb);
        assert!((m / target - 1.0).abs() < 0.05, "{m}");
        assert!((mb / target - 1.0).abs() < 0.05, "{mb}");
    }

    #[test]
    fn decomposition_far_from_walls_is_trivial() {
        let rs = build_dihedral(4).unwrap();
        let op = FoldingOperator::new(&rs).unwrap();
        let start = (rs.chamber_point() * 50.0).as_slice().to_vec();
        let cfg = SimConfig::new(start, 1.0, 1e-4, 8, 1).unwrap();
        let raw = simulate_bm(&cfg, 0);
        let folded = fold_path(&op, &raw);
        assert_eq!(folded, raw);
        let rep = decompose_folded(&op, &raw, &folded, cfg.default_epsilon(), cfg.default_epsilon()).unwrap();
        assert!(rep.final_local_times().iter().all(|&l| l == 0.0));
        assert_eq!(rep.boundary_support_leak, 0.0);
        assert!(rep.qv_error < 0.05);
    }

    #[test]
    fn decomposition_rejects_mismatched_paths() {
        let rs = build_dihedral(3).unwrap();
        let op = FoldingOperator::new(&rs).unwrap();
        let cfg = SimConfig::new(vec![0.0, 0.0], 0.01, 1e-4, 8, 1).unwrap();
        let raw = simulate_bm(&cfg, 0);
        let short = SimConfig::new(vec![0.0, 0.0], 0.02, 1e-4, 8, 1).unwrap();
        let other = fold_path(&op, &simulate_bm(&short, 0));
        assert!(decompose_folded(&op, &raw, &other, 0.05, 0.05).is_err());
        assert!(decompose_folded(&op, &raw, &raw, 0.05, 0.05).is_err());
    }

    #[test]
    fn distance_route_matches_folded_one_sided() {
        let rs = build_dihedral(3).unwrap();
        let op = FoldingOperator::new(&rs).unwrap();
        let cfg = SimConfig::new(vec![0.0, 0.0], 1.0, 1e-4, 5, 1).unwrap();
        let raw = simulate_bm(&cfg, 0);
        let eps = cfg.default_epsilon();
        let rep = decompose_folded(&op, &raw, &fold_path(&op, &raw), eps, eps).unwrap();
        for a in 0..2 {
            let via = boundary_via_distance(&op, &raw, a, eps).unwrap();
            assert_eq!(via.values, rep.local_times[a].values);
        }
    }

    #[test]
    fn inside_chamber_path_has_zero_boundary() {
        let rs = build_dihedral(3).unwrap();
        let op = FoldingOperator::new(&rs).unwrap();
        let pts: Vec<f64> = (0..20).flat_map(|k| [3.0 + 0.01 * k as f64, 1.0]).collect();
        let raw = Path::from_points(2, 0.01, pts).unwrap();
        assert_eq!(boundary_via_distance(&op, &raw, 0, 0.1).unwrap().final_value(), 0.0);
        let id = d3_indicator_identity(&op, &rs, &raw, 0.1).unwrap();
        assert_eq!((id.boundary, id.indicator_sum, id.relative), (0.0, 0.0, 0.0));
    }

    #[test]
    fn orbit_sum_rejects_single_orbit_system() {
        let rs = build_dihedral(3).unwrap();
        let w = crate::rootsys::generate_group(&rs).unwrap();
        let raw = Path::from_points(2, 0.1, vec![0.0, 0.0, 0.1, 0.1]).unwrap();
        let err = orbit_sum_local_times(&w, &rs, &raw, 0, 0.1).unwrap_err();
        assert!(err.to_string().contains("only one orbit"));
    }

    #[test]
    fn mean_se_basics() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
