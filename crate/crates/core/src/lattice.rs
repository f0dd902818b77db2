//! Simple random walk on the triangular lattice and its image under the
//! dihedral group of order six.
//!
//! The site `(i, j)` sits at `(i + j/2, (√3/2) j)`. With simple roots
//! `α = (0, 1)` and `β = (√3/2, −1/2)` the closed chamber meets the lattice in
//! `{i ≥ 0, j ≥ 0}`, and the folded walk is the walk normally reflected on
//! the two walls.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};
use crate::folding::FoldingOperator;
use crate::rng::{stream_rng, RNG_NAME};
use crate::rootsys::{build_dihedral, RootSystem, Vector};

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LatticeSite {
    pub i: i64,
    pub j: i64,
}

impl LatticeSite {
    pub const fn new(i: i64, j: i64) -> Self {
        Self { i, j }
    }

    pub fn embed(self) -> Vector {
        let (i, j) = (self.i as f64, self.j as f64);
        Vector::from_column_slice(&[i + 0.5 * j, SQRT3_2 * j])
    }

    /// The six nearest neighbors, all at embedded distance one.
    pub fn neighbors(self) -> [LatticeSite; 6] {
        let Self { i, j } = self;
        [
            Self::new(i + 1, j),
            Self::new(i - 1, j),
            Self::new(i, j + 1),
            Self::new(i, j - 1),
            Self::new(i + 1, j - 1),
            Self::new(i - 1, j + 1),
        ]
    }

    /// The lattice site at `p`, if `p` is within `tol` of one.
    pub fn from_point(p: &[f64], tol: f64) -> Result<Self> {
        let jf = p[1] / SQRT3_2;
        let fi = p[0] - 0.5 * jf;
        let (i, j) = (fi.round(), jf.round());
        let site = Self::new(i as i64, j as i64);
        let back = site.embed();
        if (back[0] - p[0]).abs() > tol || (back[1] - p[1]).abs() > tol {
            return Err(Error::Internal(format!("point ({}, {}) is not a lattice site", p[0], p[1])));
        }
        Ok(site)
    }

    pub fn in_chamber(self) -> bool {
        self.i >= 0 && self.j >= 0
    }
}

impl fmt::Display for LatticeSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// One step of the simple random walk: a uniformly chosen neighbor.
pub fn step_walk<R: Rng + ?Sized>(site: LatticeSite, rng: &mut R) -> LatticeSite {
    site.neighbors()[rng.random_range(0..6)]
}

/// The folding `π` of the order-six dihedral group acting on lattice sites.
#[derive(Debug, Clone)]
pub struct TriangularFold {
    rs: RootSystem,
    op: FoldingOperator,
}

impl TriangularFold {
    pub fn new() -> Self {
        let rs = build_dihedral(3).expect("dihedral(3) is valid");
        let op = FoldingOperator::new(&rs).expect("dihedral(3) has a reduced word");
        Self { rs, op }
    }

    /// Uses the reduced word `word` (`[0,1,0]` for `r_α r_β r_α` or
    /// `[1,0,1]` for `r_β r_α r_β`).
    pub fn with_word(word: Vec<usize>) -> Result<Self> {
        let rs = build_dihedral(3)?;
        let op = FoldingOperator::with_word(&rs, word)?;
        Ok(Self { rs, op })
    }

    pub fn root_system(&self) -> &RootSystem {
        &self.rs
    }

    pub fn operator(&self) -> &FoldingOperator {
        &self.op
    }

    pub fn fold_site(&self, site: LatticeSite) -> Result<LatticeSite> {
        self.fold_site_tracking(site).map(|(s, _)| s)
    }

    /// Folds `site` and also returns the mask of fired reflections, which
    /// labels the pre-image chamber.
    pub fn fold_site_tracking(&self, site: LatticeSite) -> Result<(LatticeSite, u64)> {
        let mut p = site.embed();
        let mask = self.op.fold_tracking(p.as_mut_slice());
        let folded = LatticeSite::from_point(p.as_slice(), 1e-9)?;
        if !folded.in_chamber() {
            return Err(Error::Internal(format!("{site} folded to {folded} outside the chamber")));
        }
        Ok((folded, mask))
    }
}

impl Default for TriangularFold {
    fn default() -> Self {
        Self::new()
    }
}

/// Position of a folded state relative to the chamber walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum StateClass {
    /// `i > 0, j > 0`.
    Interior,
    /// `i > 0, j = 0`.
    WallJ,
    /// `i = 0, j > 0`.
    WallI,
    /// `(0, 0)`.
    Corner,
}

impl StateClass {
    pub const ALL: [StateClass; 4] = [StateClass::Interior, StateClass::WallJ, StateClass::WallI, StateClass::Corner];

    pub fn of(site: LatticeSite) -> Self {
        match (site.i > 0, site.j > 0) {
            (true, true) => StateClass::Interior,
            (true, false) => StateClass::WallJ,
            (false, true) => StateClass::WallI,
            (false, false) => StateClass::Corner,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StateClass::Interior => "interior",
            StateClass::WallJ => "wall_j0",
            StateClass::WallI => "wall_i0",
            StateClass::Corner => "corner",
        }
    }

    /// The reflected transition table: allowed moves and their probabilities.
    pub fn expected_moves(self) -> Vec<(Move, f64)> {
        let m = Move::new;
        match self {
            StateClass::Interior => LatticeSite::new(0, 0)
                .neighbors()
                .iter()
                .map(|s| (m(s.i, s.j), 1.0 / 6.0))
                .collect(),
            StateClass::WallJ => vec![
                (m(0, 1), 1.0 / 3.0),
                (m(-1, 1), 1.0 / 3.0),
                (m(1, 0), 1.0 / 6.0),
                (m(-1, 0), 1.0 / 6.0),
            ],
            StateClass::WallI => vec![
                (m(1, 0), 1.0 / 3.0),
                (m(1, -1), 1.0 / 3.0),
                (m(0, 1), 1.0 / 6.0),
                (m(0, -1), 1.0 / 6.0),
            ],
            StateClass::Corner => vec![(m(0, 1), 0.5), (m(1, 0), 0.5)],
        }
    }

    pub fn expected(self, mv: Move) -> f64 {
        self.expected_moves().into_iter().find(|&(m, _)| m == mv).map_or(0.0, |(_, p)| p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Move {
    pub di: i64,
    pub dj: i64,
}

impl Move {
    pub const fn new(di: i64, dj: i64) -> Self {
        Self { di, dj }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.di, self.dj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChainConfig {
    /// Total number of transitions across all chains.
    pub steps: u64,
    pub seed: u64,
    pub start: LatticeSite,
    /// Each chain runs this many steps before a fresh chain restarts at
    /// `start`; keeps the corner and the walls well sampled.
    pub restart_every: u64,
}

impl ChainConfig {
    pub const DEFAULT_RESTART: u64 = 64;

    pub fn new(steps: u64, seed: u64) -> Self {
        Self { steps, seed, start: LatticeSite::new(0, 0), restart_every: Self::DEFAULT_RESTART }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(invalid("steps must be >= 1"));
        }
        if self.restart_every < 1 {
            return Err(invalid("restart_every must be >= 1"));
        }
        Ok(())
    }
}

/// Minimum visits per class for a row to be considered adequately sampled.
pub const MIN_CLASS_VISITS: u64 = 10_000;

#[derive(Debug, Clone, Serialize)]
pub struct TransitionRow {
    pub class: StateClass,
    pub mv: Move,
    pub count: u64,
    pub frequency: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionReport {
    pub config: ChainConfig,
    pub rows: Vec<TransitionRow>,
    pub visits: BTreeMap<StateClass, u64>,
    pub undersampled: Vec<StateClass>,
    /// Largest `|frequency − expected|` over adequately sampled classes.
    pub max_abs_deviation: f64,
    /// p-value of the χ² homogeneity test of the move distribution across
    /// pre-image chambers, per adequately sampled class.
    pub homogeneity_pvalues: BTreeMap<StateClass, f64>,
}

impl TransitionReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_abs_deviation <= tol
    }

    /// One-line description of the run for file headers.
    pub fn header(&self) -> String {
        format!(
            "weylfold {} walk seed={} steps={} start={},{} restart_every={} rng={RNG_NAME}",
            env!("CARGO_PKG_VERSION"),
            self.config.seed,
            self.config.steps,
            self.config.start.i,
            self.config.start.j,
            self.config.restart_every
        )
    }

    /// Writes `header` as `#` comment lines followed by the table.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &str) -> std::io::Result<()> {
        for line in header.lines() {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "class,move,count,frequency,expected")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{:.6},{:.6}", r.class.name(), r.mv, r.count, r.frequency, r.expected)?;
        }
        Ok(())
    }
}

type Tally = BTreeMap<(StateClass, u64, Move), u64>;

fn run_chain(fold: &TriangularFold, start: LatticeSite, steps: u64, seed: u64, stream: u64) -> Result<Tally> {
    let mut rng = stream_rng(seed, stream);
    let mut tally = Tally::new();
    let mut raw = start;
    let (mut folded, mut mask) = fold.fold_site_tracking(raw)?;
    for _ in 0..steps {
        raw = step_walk(raw, &mut rng);
        let (next, next_mask) = fold.fold_site_tracking(raw)?;
        let mv = Move::new(next.i - folded.i, next.j - folded.j);
        *tally.entry((StateClass::of(folded), mask, mv)).or_default() += 1;
        folded = next;
        mask = next_mask;
    }
    Ok(tally)
}

/// Runs the folded walk and tabulates its transitions by state class.
pub fn empirical_reflected_transitions(cfg: &ChainConfig) -> Result<TransitionReport> {
    cfg.validate()?;
    let fold = TriangularFold::new();
    let n_chains = cfg.steps.div_ceil(cfg.restart_every);
    let tallies: Vec<Tally> = (0..n_chains)
        .into_par_iter()
        .map(|c| {
            let len = cfg.restart_every.min(cfg.steps - c * cfg.restart_every);
            run_chain(&fold, cfg.start, len, cfg.seed, c)
        })
        .collect::<Result<_>>()?;
    let mut tally = Tally::new();
    for t in tallies {
        for (k, v) in t {
            *tally.entry(k).or_default() += v;
        }
    }

    let mut by_move: BTreeMap<(StateClass, Move), u64> = BTreeMap::new();
    let mut visits: BTreeMap<StateClass, u64> = StateClass::ALL.iter().map(|&c| (c, 0)).collect();
    for (&(class, _, mv), &n) in &tally {
        *by_move.entry((class, mv)).or_default() += n;
        *visits.entry(class).or_default() += n;
    }
    for class in StateClass::ALL {
        for (mv, _) in class.expected_moves() {
            by_move.entry((class, mv)).or_default();
        }
    }

    let undersampled: Vec<StateClass> =
        StateClass::ALL.iter().copied().filter(|c| visits[c] < MIN_CLASS_VISITS).collect();
    let rows: Vec<TransitionRow> = by_move
        .iter()
        .map(|(&(class, mv), &count)| {
            let total = visits[&class];
            let frequency = if total > 0 { count as f64 / total as f64 } else { 0.0 };
            TransitionRow { class, mv, count, frequency, expected: class.expected(mv) }
        })
        .collect();
    let max_abs_deviation = rows
        .iter()
        .filter(|r| !undersampled.contains(&r.class))
        .map(|r| (r.frequency - r.expected).abs())
        .fold(0.0, f64::max);

    let mut homogeneity_pvalues = BTreeMap::new();
    for class in StateClass::ALL.iter().copied().filter(|c| !undersampled.contains(c)) {
        if let Some(p) = homogeneity_pvalue(&tally, class) {
            homogeneity_pvalues.insert(class, p);
        }
    }

    Ok(TransitionReport { config: *cfg, rows, visits, undersampled, max_abs_deviation, homogeneity_pvalues })
}

/// χ² test that the move distribution from `class` does not depend on the
/// pre-image chamber. `None` when there is only one pre-image label.
fn homogeneity_pvalue(tally: &Tally, class: StateClass) -> Option<f64> {
    let mut table: BTreeMap<u64, BTreeMap<Move, u64>> = BTreeMap::new();
    for (&(c, mask, mv), &n) in tally {
        if c == class {
            *table.entry(mask).or_default().entry(mv).or_default() += n;
        }
    }
    let moves: Vec<Move> = class.expected_moves().into_iter().map(|(m, _)| m).collect();
    let rows: Vec<Vec<f64>> = table
        .values()
        .map(|r| moves.iter().map(|m| *r.get(m).unwrap_or(&0) as f64).collect::<Vec<f64>>())
        .filter(|r| r.iter().sum::<f64>() >= 5.0 * moves.len() as f64)
        .collect();
    chi2_homogeneity(&rows)
}

/// Pearson χ² homogeneity test on a contingency table (rows are groups).
pub fn chi2_homogeneity(rows: &[Vec<f64>]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let k = rows[0].len();
    let col: Vec<f64> = (0..k).map(|j| rows.iter().map(|r| r[j]).sum()).collect();
    let total: f64 = col.iter().sum();
    let used: Vec<usize> = (0..k).filter(|&j| col[j] > 0.0).collect();
    if used.len() < 2 {
        return None;
    }
    let mut stat = 0.0;
    for r in rows {
        let rs: f64 = r.iter().sum();
        for &j in &used {
            let e = rs * col[j] / total;
            stat += (r[j] - e).powi(2) / e;
        }
    }
    let df = ((rows.len() - 1) * (used.len() - 1)) as f64;
    let chi = ChiSquared::new(df).ok()?;
    Some(1.0 - chi.cdf(stat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn embedding_examples() {
        assert_eq!(LatticeSite::new(1, 0).embed().as_slice(), &[1.0, 0.0]);
        let p = LatticeSite::new(0, 1).embed();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(LatticeSite::new(0, 0).embed().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn neighbors_at_unit_distance_and_symmetric() {
        let o = LatticeSite::new(0, 0);
        for n in o.neighbors() {
            assert!((n.embed().norm() - 1.0).abs() < 1e-14);
            assert!(n.neighbors().contains(&o));
        }
        assert!(o.neighbors().contains(&LatticeSite::new(1, 0)));
        assert!(o.neighbors().contains(&LatticeSite::new(0, 1)));
    }

    #[test]
    fn step_frequencies_are_uniform() {
        let mut rng = stream_rng(11, 0);
        let o = LatticeSite::new(0, 0);
        let mut counts = [0u32; 6];
        let n = 600_000;
        for _ in 0..n {
            let s = step_walk(o, &mut rng);
            let k = o.neighbors().iter().position(|&x| x == s).unwrap();
            counts[k] += 1;
            assert!(((s.embed() - o.embed()).norm() - 1.0).abs() < 1e-14);
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 6.0).abs() < 0.01);
        }
    }

    #[test]
    fn walk_is_seed_deterministic() {
        let walk = |seed| {
            let mut rng = stream_rng(seed, 0);
            let mut s = LatticeSite::new(0, 0);
            (0..100).map(|_| { s = step_walk(s, &mut rng); s }).collect::<Vec<_>>()
        };
        assert_eq!(walk(5), walk(5));
    }

    #[test]
    fn folding_sites() {
        let fold = TriangularFold::new();
        assert_eq!(fold.fold_site(LatticeSite::new(3, 2)).unwrap(), LatticeSite::new(3, 2));
        let alt = TriangularFold::with_word(vec![1, 0, 1]).unwrap();
        let base = TriangularFold::with_word(vec![0, 1, 0]).unwrap();
        for i in -8..=8 {
            for j in -8..=8 {
                let s = LatticeSite::new(i, j);
                let f = base.fold_site(s).unwrap();
                assert!(f.in_chamber());
                assert_eq!(f, alt.fold_site(s).unwrap());
                assert!((f.embed().norm() - s.embed().norm()).abs() < 1e-12);
            }
        }
        // A site below H_β folds into the chamber.
        let z = LatticeSite::new(-3, 1);
        assert!(fold.root_system().simple()[1].dot(z.embed().as_slice()) < 0.0);
        assert!(fold.fold_site(z).unwrap().in_chamber());
    }

    #[test]
    fn from_point_rejects_off_lattice() {
        assert!(LatticeSite::from_point(&[0.3, 0.1], 1e-9).is_err());
        assert_eq!(LatticeSite::from_point(&[1.5, SQRT3_2], 1e-9).unwrap(), LatticeSite::new(1, 1));
    }

    #[test]
    fn expected_rows_sum_to_one() {
        for c in StateClass::ALL {
            let s: f64 = c.expected_moves().iter().map(|(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn short_run_is_flagged_not_failed() {
        let report = empirical_reflected_transitions(&ChainConfig::new(100, 1)).unwrap();
        assert!(!report.undersampled.is_empty());
        let mut buf = Vec::new();
        report.write_csv(&mut buf, &report.header()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap() == "class,move,count,frequency,expected");
    }

    #[test]
    fn chi2_homogeneity_detects_difference() {
        let same = vec![vec![100.0, 200.0], vec![110.0, 190.0]];
        assert!(chi2_homogeneity(&same).unwrap() > 0.1);
        let diff = vec![vec![100.0, 200.0], vec![200.0, 100.0]];
        assert!(chi2_homogeneity(&diff).unwrap() < 1e-6);
    }
}
