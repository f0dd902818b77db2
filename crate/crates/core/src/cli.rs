//! The `weylfold` experiment driver.
//!
//! Settings are resolved as flags over a flat `key=value` config file over
//! `WEYLFOLD_SEED` (seed only) over per-command defaults. Exit codes: 0 when
//! every check passes, 1 on a verification failure, 2 on a usage or
//! configuration error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::algebra::{run_algebra_suite, AlgebraConfig};
use crate::density::{
    heat_equation_residual, mc_density_check, neumann_check, random_wall_points, total_mass, HeatKernel,
};
use crate::error::{invalid, Error, Result};
use crate::folding::FoldingOperator;
use crate::lattice::{empirical_reflected_transitions, ChainConfig, StateClass};
use crate::rng::stream_rng;
use crate::rootsys::{build_classical, build_dihedral, build_rank_one, generate_group, ClassicalFamily, RootSystem};
use crate::stochastic::{
    boundary_via_distance, d3_indicator_identity, decompose_folded, fold_path, map_paths, mean_se,
    orbit_sum_local_times, SimConfig,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SEED_ENV: &str = "WEYLFOLD_SEED";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const WALK_TOL: f64 = 0.01;
pub const QV_TOL: f64 = 0.05;
pub const OFFDIAG_TOL: f64 = 0.02;
pub const LEAK_TOL: f64 = 0.02;
pub const ORBIT_REL_TOL: f64 = 0.15;
pub const INDICATOR_REL_TOL: f64 = 0.15;
pub const TV_TOL: f64 = 0.02;
pub const NEUMANN_TOL: f64 = 1e-8;
pub const C0_TOL: f64 = 1e-3;
pub const HEAT_TOL: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "weylfold", version, about = "Folding onto Weyl chambers and reflected-process checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact checks on a root system, its group and the projection.
    Algebra(AlgebraArgs),
    /// Folded triangular-lattice walk against its transition table.
    Walk(WalkArgs),
    /// Folded Brownian paths and their boundary processes.
    Reflect(ReflectArgs),
    /// Reflected heat kernel against samples, Neumann condition, normalization.
    Density(DensityArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// dihedral, A, B, D, rank1, or a full name such as A2 or dihedral(4).
    #[arg(long)]
    family: Option<String>,
    /// Order parameter of a dihedral family.
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    rank: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for all output files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread cap; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    /// Flat key=value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write a gnuplot script for the CSV output.
    #[arg(long)]
    plot: bool,
}

#[derive(Debug, Args)]
struct AlgebraArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Random points per sampled check.
    #[arg(long)]
    points: Option<usize>,
    /// Random reduced words compared against the default one.
    #[arg(long)]
    words: Option<usize>,
}

#[derive(Debug, Args)]
struct WalkArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long = "restart-every")]
    restart_every: Option<u64>,
}

#[derive(Debug, Args)]
struct ReflectArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Occupation bandwidth; defaults to 5*sqrt(dt).
    #[arg(long)]
    eps: Option<f64>,
    /// Interior threshold for the boundary-support leak; defaults to eps.
    #[arg(long = "eps-support")]
    eps_support: Option<f64>,
    /// Starting point, comma separated; defaults to the origin.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Compare orbit-sum local times with the boundary processes.
    #[arg(long = "orbit-check")]
    orbit_check: bool,
}

#[derive(Debug, Args)]
struct DensityArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Radius of the binned region; defaults to 4*sqrt(t).
    #[arg(long)]
    extent: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Normal derivative at wall points instead of the Monte Carlo check.
    #[arg(long)]
    neumann: bool,
    /// Print c0 and the quadrature deviation of the total mass.
    #[arg(long = "check-c0")]
    check_c0: bool,
    /// Heat-equation residual at interior points.
    #[arg(long)]
    heat: bool,
    #[arg(long = "wall-points")]
    wall_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Algebra,
    Walk,
    Reflect,
    Density,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Algebra => "algebra",
            CommandKind::Walk => "walk",
            CommandKind::Reflect => "reflect",
            CommandKind::Density => "density",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "algebra" => Ok(CommandKind::Algebra),
            "walk" => Ok(CommandKind::Walk),
            "reflect" => Ok(CommandKind::Reflect),
            "density" => Ok(CommandKind::Density),
            _ => Err(invalid(format!("unknown command {s:?}"))),
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub family: String,
    pub m: u32,
    pub rank: u32,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: usize,
    pub plot: bool,
    pub points: usize,
    pub words: usize,
    pub steps: u64,
    pub restart_every: u64,
    pub t_end: f64,
    pub dt: f64,
    pub paths: usize,
    pub eps: Option<f64>,
    pub eps_support: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub orbit_check: bool,
    pub t: f64,
    pub bins: usize,
    pub extent: Option<f64>,
    pub neumann: bool,
    pub check_c0: bool,
    pub heat: bool,
    pub wall_points: usize,
}

const KEYS: &[&str] = &[
    "command", "family", "m", "rank", "seed", "out", "threads", "plot", "points", "words", "steps", "restart_every", "T",
    "dt", "paths", "eps", "eps_support", "x0", "orbit_check", "t", "bins", "extent", "neumann", "check_c0", "heat",
    "wall_points",
];

/// Keys that affect the results of `cmd`; file headers list only these.
fn result_keys(cmd: CommandKind) -> &'static [&'static str] {
    match cmd {
        CommandKind::Algebra => &["command", "family", "m", "rank", "seed", "points", "words"],
        CommandKind::Walk => &["command", "seed", "steps", "restart_every"],
        CommandKind::Reflect => {
            &["command", "family", "m", "rank", "seed", "T", "dt", "paths", "eps", "eps_support", "x0", "orbit_check"]
        }
        CommandKind::Density => &[
            "command", "family", "m", "rank", "seed", "t", "paths", "bins", "extent", "x0", "neumann", "check_c0", "heat",
            "wall_points",
        ],
    }
}

fn defaults(cmd: CommandKind) -> BTreeMap<String, String> {
    let paths = if cmd == CommandKind::Density { "1000000" } else { "100" };
    let family = if cmd == CommandKind::Density { "A" } else { "dihedral" };
    [
        ("command", cmd.name()),
        ("family", family),
        ("m", "3"),
        ("rank", "2"),
        ("seed", "0"),
        ("out", "."),
        ("threads", "0"),
        ("plot", "false"),
        ("points", "1000"),
        ("words", "8"),
        ("steps", "1000000"),
        ("restart_every", "64"),
        ("T", "1"),
        ("dt", "0.00001"),
        ("paths", paths),
        ("eps", "auto"),
        ("eps_support", "auto"),
        ("x0", "origin"),
        ("orbit_check", "false"),
        ("t", "1"),
        ("bins", "20"),
        ("extent", "auto"),
        ("neumann", "false"),
        ("check_c0", "false"),
        ("heat", "false"),
        ("wall_points", "50"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// Parses a flat `key=value` file; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: n + 1, msg: format!("expected key=value, got {line:?}") })?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(Error::Parse { line: n + 1, msg: format!("unknown key {k:?}") });
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn get<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = &map[key];
    raw.parse().map_err(|_| invalid(format!("bad value for {key}: {raw:?}")))
}

fn get_auto(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    match map[key].as_str() {
        "auto" => Ok(None),
        _ => get(map, key).map(Some),
    }
}

fn parse_point(s: &str) -> Result<Option<Vec<f64>>> {
    if s == "origin" {
        return Ok(None);
    }
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| invalid(format!("bad coordinate in {s:?}"))))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

impl RunConfig {
    /// Builds and validates a config from a complete key map.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        for k in KEYS {
            if !map.contains_key(*k) {
                return Err(invalid(format!("missing key {k}")));
            }
        }
        let cfg = Self {
            command: CommandKind::parse(&map["command"])?,
            family: map["family"].clone(),
            m: get(map, "m")?,
            rank: get(map, "rank")?,
            seed: get(map, "seed")?,
            out: PathBuf::from(&map["out"]),
            threads: get(map, "threads")?,
            plot: get(map, "plot")?,
            points: get(map, "points")?,
            words: get(map, "words")?,
            steps: get(map, "steps")?,
            restart_every: get(map, "restart_every")?,
            t_end: get(map, "T")?,
            dt: get(map, "dt")?,
            paths: get(map, "paths")?,
            eps: get_auto(map, "eps")?,
            eps_support: get_auto(map, "eps_support")?,
            x0: parse_point(&map["x0"])?,
            orbit_check: get(map, "orbit_check")?,
            t: get(map, "t")?,
            bins: get(map, "bins")?,
            extent: get_auto(map, "extent")?,
            neumann: get(map, "neumann")?,
            check_c0: get(map, "check_c0")?,
            heat: get(map, "heat")?,
            wall_points: get(map, "wall_points")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        let auto = |v: Option<f64>| v.map_or("auto".to_string(), |x| x.to_string());
        let point = self.x0.as_ref().map_or("origin".to_string(), |p| {
            p.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        });
        [
            ("command", self.command.name().to_string()),
            ("family", self.family.clone()),
            ("m", self.m.to_string()),
            ("rank", self.rank.to_string()),
            ("seed", self.seed.to_string()),
            ("out", self.out.display().to_string()),
            ("threads", self.threads.to_string()),
            ("plot", self.plot.to_string()),
            ("points", self.points.to_string()),
            ("words", self.words.to_string()),
            ("steps", self.steps.to_string()),
            ("restart_every", self.restart_every.to_string()),
            ("T", self.t_end.to_string()),
            ("dt", self.dt.to_string()),
            ("paths", self.paths.to_string()),
            ("eps", auto(self.eps)),
            ("eps_support", auto(self.eps_support)),
            ("x0", point),
            ("orbit_check", self.orbit_check.to_string()),
            ("t", self.t.to_string()),
            ("bins", self.bins.to_string()),
            ("extent", auto(self.extent)),
            ("neumann", self.neumann.to_string()),
            ("check_c0", self.check_c0.to_string()),
            ("heat", self.heat.to_string()),
            ("wall_points", self.wall_points.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// The on-disk `key=value` form.
    pub fn to_text(&self) -> String {
        self.to_map().iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k}={v}");
            s
        })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_map(&parse_kv(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("T", self.t_end)?;
        positive("dt", self.dt)?;
        positive("t", self.t)?;
        for (name, v) in [("eps", self.eps), ("eps_support", self.eps_support), ("extent", self.extent)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if self.paths == 0 || self.bins == 0 || self.steps == 0 || self.restart_every == 0 || self.points == 0 {
            return Err(invalid("paths, bins, steps, restart_every and points must be >= 1"));
        }
        self.root_system()?;
        Ok(())
    }

    pub fn root_system(&self) -> Result<RootSystem> {
        let fam = self.family.as_str();
        match fam.to_ascii_lowercase().as_str() {
            "dihedral" | "i2" => build_dihedral(self.m),
            "a" => build_classical(ClassicalFamily::A, self.rank),
            "b" => build_classical(ClassicalFamily::B, self.rank),
            "d" => build_classical(ClassicalFamily::D, self.rank),
            "rank1" | "a1" => Ok(build_rank_one()),
            _ => match fam.parse::<crate::rootsys::Family>()? {
                crate::rootsys::Family::Dihedral(m) => build_dihedral(m),
                crate::rootsys::Family::A(n) => build_classical(ClassicalFamily::A, n),
                crate::rootsys::Family::B(n) => build_classical(ClassicalFamily::B, n),
                crate::rootsys::Family::D(n) => build_classical(ClassicalFamily::D, n),
                crate::rootsys::Family::Custom => Err(invalid("custom families are not available from the command line")),
            },
        }
    }

    /// Header lines for output files: version plus every result-affecting key.
    pub fn metadata_lines(&self) -> Vec<String> {
        let mut lines = vec![format!("weylfold {VERSION}"), format!("rng={}", crate::rng::RNG_NAME)];
        lines.extend(self.result_map().into_iter().map(|(k, v)| format!("{k}={v}")));
        lines
    }

    fn result_map(&self) -> BTreeMap<String, String> {
        let keys = result_keys(self.command);
        self.to_map().into_iter().filter(|(k, _)| keys.contains(&k.as_str())).collect()
    }

    fn metadata_json(&self) -> serde_json::Value {
        json!({ "weylfold": VERSION, "rng": crate::rng::RNG_NAME, "config": self.result_map() })
    }

    fn csv_header(&self) -> String {
        self.metadata_lines().iter().fold(String::new(), |mut s, l| {
            let _ = writeln!(s, "# {l}");
            s
        })
    }

    fn epsilon(&self) -> f64 {
        self.eps.unwrap_or(crate::stochastic::DEFAULT_EPS_FACTOR * self.dt.sqrt())
    }
}

/// Layers flags over the config file over the environment seed over the
/// defaults of `cmd`.
fn resolve(cmd: CommandKind, common: &CommonArgs, flags: Vec<(&str, Option<String>)>) -> Result<RunConfig> {
    let mut map = defaults(cmd);
    let file = match &common.config {
        Some(path) => parse_kv(&fs::read_to_string(path)?)?,
        None => BTreeMap::new(),
    };
    if let Some(c) = file.get("command") {
        if c != cmd.name() {
            return Err(invalid(format!("config file is for command {c:?}, not {:?}", cmd.name())));
        }
    }
    if !file.contains_key("seed") {
        if let Ok(s) = std::env::var(SEED_ENV) {
            map.insert("seed".into(), s);
        }
    }
    map.extend(file);
    let common_flags = [
        ("family", common.family.clone()),
        ("m", common.m.map(|v| v.to_string())),
        ("rank", common.rank.map(|v| v.to_string())),
        ("seed", common.seed.map(|v| v.to_string())),
        ("out", common.out.as_ref().map(|p| p.display().to_string())),
        ("threads", common.threads.map(|v| v.to_string())),
        ("plot", common.plot.then(|| "true".to_string())),
    ];
    for (k, v) in common_flags.into_iter().chain(flags) {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    }
    RunConfig::from_map(&map)
}

fn flag<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|x| x.to_string())
}

fn switch(on: bool) -> Option<String> {
    on.then(|| "true".to_string())
}

fn resolve_cli(cli: &Cli) -> Result<RunConfig> {
    match &cli.command {
        Command::Algebra(a) => resolve(
            CommandKind::Algebra,
            &a.common,
            vec![("points", flag(a.points)), ("words", flag(a.words))],
        ),
        Command::Walk(a) => resolve(
            CommandKind::Walk,
            &a.common,
            vec![("steps", flag(a.steps)), ("restart_every", flag(a.restart_every))],
        ),
        Command::Reflect(a) => resolve(
            CommandKind::Reflect,
            &a.common,
            vec![
                ("T", flag(a.t_end)),
                ("dt", flag(a.dt)),
                ("paths", flag(a.paths)),
                ("eps", flag(a.eps)),
                ("eps_support", flag(a.eps_support)),
                ("x0", a.x0.clone()),
                ("orbit_check", switch(a.orbit_check)),
            ],
        ),
        Command::Density(a) => resolve(
            CommandKind::Density,
            &a.common,
            vec![
                ("t", flag(a.t)),
                ("paths", flag(a.paths)),
                ("bins", flag(a.bins)),
                ("extent", flag(a.extent)),
                ("x0", a.x0.clone()),
                ("neumann", switch(a.neumann)),
                ("check_c0", switch(a.check_c0)),
                ("heat", switch(a.heat)),
                ("wall_points", flag(a.wall_points)),
            ],
        ),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let cfg = match resolve_cli(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match execute(&cfg) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Internal(_) => EXIT_FAIL,
                _ => EXIT_USAGE,
            }
        }
    }
}

/// Runs a resolved config on a pool of `cfg.threads` workers; returns
/// whether every check passed.
pub fn execute(cfg: &RunConfig) -> Result<bool> {
    fs::create_dir_all(&cfg.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| match cfg.command {
        CommandKind::Algebra => cmd_algebra(cfg),
        CommandKind::Walk => cmd_walk(cfg),
        CommandKind::Reflect => cmd_reflect(cfg),
        CommandKind::Density => cmd_density(cfg),
    })
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Internal(e.to_string()))
}

pub fn cmd_algebra(cfg: &RunConfig) -> Result<bool> {
    let rs = cfg.root_system()?;
    let rep = run_algebra_suite(&rs, AlgebraConfig { points: cfg.points, words: cfg.words, seed: cfg.seed })?;
    println!(
        "{}: |W| = {}, |R+| = {}, |F| = {}, w0 word {:?}",
        rep.family, rep.group_order, rep.positive_roots, rep.facets, rep.longest_word
    );
    for c in &rep.checks {
        match c.max_deviation {
            Some(d) => println!("{} {} max deviation {d:.3e} ({})", pass_word(c.passed), c.name, c.detail),
            None => println!("{} {} ({})", pass_word(c.passed), c.name, c.detail),
        }
    }
    write_json(&cfg.out.join("algebra_report.json"), &json!({ "meta": cfg.metadata_json(), "report": to_json(&rep)? }))?;
    Ok(rep.passed)
}

pub fn cmd_walk(cfg: &RunConfig) -> Result<bool> {
    let chain = ChainConfig {
        steps: cfg.steps,
        seed: cfg.seed,
        start: crate::lattice::LatticeSite::new(0, 0),
        restart_every: cfg.restart_every,
    };
    let rep = empirical_reflected_transitions(&chain)?;
    let csv = cfg.out.join("walk_transitions.csv");
    let mut file = fs::File::create(&csv)?;
    rep.write_csv(&mut file, &cfg.metadata_lines().join("\n"))?;

    let warnings: Vec<String> = rep
        .undersampled
        .iter()
        .map(|c| format!("class {} visited {} times, below {}", c.name(), rep.visits[c], crate::lattice::MIN_CLASS_VISITS))
        .collect();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    for class in StateClass::ALL {
        let rows: Vec<String> = rep
            .rows
            .iter()
            .filter(|r| r.class == class && r.count > 0)
            .map(|r| format!("{} {:.4}/{:.4}", r.mv, r.frequency, r.expected))
            .collect();
        println!("{:<8} visits {:>8}  {}", class.name(), rep.visits.get(&class).unwrap_or(&0), rows.join("  "));
    }
    let passed = rep.passes(WALK_TOL);
    let checked = StateClass::ALL.len() - rep.undersampled.len();
    if checked == 0 {
        println!("{} no class reached {} visits, nothing compared", pass_word(passed), crate::lattice::MIN_CLASS_VISITS);
    } else {
        println!(
            "{} max |frequency - q| = {:.4} over {checked} classes (tolerance {WALK_TOL})",
            pass_word(passed),
            rep.max_abs_deviation
        );
    }
    write_json(
        &cfg.out.join("walk_summary.json"),
        &json!({
            "meta": cfg.metadata_json(),
            "max_abs_deviation": rep.max_abs_deviation,
            "tolerance": WALK_TOL,
            "passed": passed,
            "visits": rep.visits.iter().map(|(c, v)| (c.name(), *v)).collect::<BTreeMap<_, _>>(),
            "homogeneity_pvalues": rep.homogeneity_pvalues.iter().map(|(c, v)| (c.name(), *v)).collect::<BTreeMap<_, _>>(),
            "warnings": warnings,
        }),
    )?;
    if cfg.plot {
        write_plot(
            &cfg.out.join("walk_transitions.gp"),
            "walk_transitions.csv",
            &["set datafile separator ','", "set style data histogram", "set ylabel 'probability'"],
            "plot FILE using 4:xtic(sprintf('%s %s', stringcolumn(1), stringcolumn(2))) title 'empirical', '' using 5 title 'q'",
        )?;
    }
    Ok(passed)
}

fn write_plot(path: &Path, csv: &str, setup: &[&str], plot: &str) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "# weylfold {VERSION}");
    let _ = writeln!(s, "FILE = '{csv}'");
    for l in setup {
        let _ = writeln!(s, "{l}");
    }
    let _ = writeln!(s, "{plot}");
    fs::write(path, s)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct PathRecord {
    path: u64,
    qv: Vec<f64>,
    qv_error: f64,
    qv_offdiag: f64,
    boundary_support_leak: f64,
    local_times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    orbit_sum: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    indicator: Option<crate::stochastic::IndicatorIdentity>,
}

pub fn cmd_reflect(cfg: &RunConfig) -> Result<bool> {
    let rs = cfg.root_system()?;
    let eps = cfg.epsilon();
    if eps < cfg.dt.sqrt() {
        return Err(invalid(format!("eps = {eps} is below sqrt(dt) = {}; the grid is too coarse", cfg.dt.sqrt())));
    }
    let eps_support = cfg.eps_support.unwrap_or(eps);
    let x0 = cfg.x0.clone().unwrap_or_else(|| vec![0.0; rs.dim()]);
    if x0.len() != rs.dim() {
        return Err(invalid(format!("x0 has dimension {}, expected {}", x0.len(), rs.dim())));
    }
    let w = generate_group(&rs)?;
    if cfg.orbit_check {
        for a in 0..rs.rank() {
            crate::folding::single_orbit_roots(&w, &rs, a)?;
        }
    }
    let sim = SimConfig::new(x0, cfg.t_end, cfg.dt, cfg.seed, cfg.paths)?;
    let op = FoldingOperator::new(&rs)?;
    let is_d3 = rs.family() == crate::rootsys::Family::Dihedral(3) && rs.dim() == 2;
    let records: Vec<PathRecord> = map_paths(&sim, |i, raw| -> Result<PathRecord> {
        let folded = fold_path(&op, raw);
        let rep = decompose_folded(&op, raw, &folded, eps, eps_support)?;
        let orbit_sum = if cfg.orbit_check {
            Some(
                (0..rs.rank())
                    .map(|a| orbit_sum_local_times(&w, &rs, raw, a, eps).map(|l| l.final_value()))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        let indicator = if is_d3 { Some(d3_indicator_identity(&op, &rs, raw, eps)?) } else { None };
        Ok(PathRecord {
            path: i,
            local_times: rep.final_local_times(),
            qv: rep.qv,
            qv_error: rep.qv_error,
            qv_offdiag: rep.qv_offdiag,
            boundary_support_leak: rep.boundary_support_leak,
            orbit_sum,
            indicator,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mut jsonl = String::new();
    let _ = writeln!(jsonl, "{}", json!({ "meta": cfg.metadata_json() }));
    for r in &records {
        let _ = writeln!(jsonl, "{}", serde_json::to_string(r).map_err(|e| Error::Internal(e.to_string()))?);
    }
    fs::write(cfg.out.join("reflect_paths.jsonl"), jsonl)?;

    let col = |f: &dyn Fn(&PathRecord) -> f64| -> Vec<f64> { records.iter().map(f).collect() };
    let row = |name: &str, xs: Vec<f64>, tol: f64| {
        let (m, se) = mean_se(&xs);
        (name.to_string(), m, se, tol, m < tol)
    };
    let mut summary = vec![
        row("qv_error", col(&|r| r.qv_error), QV_TOL),
        row("qv_offdiag", col(&|r| r.qv_offdiag), OFFDIAG_TOL),
        row("boundary_support_leak", col(&|r| r.boundary_support_leak), LEAK_TOL),
    ];
    if cfg.orbit_check {
        for a in 0..rs.rank() {
            let (lo, _) = mean_se(&col(&|r| r.orbit_sum.as_ref().unwrap()[a]));
            let (lb, _) = mean_se(&col(&|r| r.local_times[a]));
            let rel = (lo - lb).abs() / lb.max(lo).max(1e-12);
            summary.push((format!("orbit_sum_relative_{a}"), rel, f64::NAN, ORBIT_REL_TOL, rel < ORBIT_REL_TOL));
        }
    }
    if is_d3 {
        summary.push(row("indicator_relative", col(&|r| r.indicator.as_ref().unwrap().relative), INDICATOR_REL_TOL));
    }
    let mut csv = cfg.csv_header();
    csv.push_str("quantity,mean,std_error,tolerance,passed\n");
    for (name, m, se, tol, ok) in &summary {
        let _ = writeln!(csv, "{name},{m:.6e},{se:.6e},{tol},{ok}");
        println!("{} {name} mean {m:.4e} (se {se:.1e}, tolerance {tol})", pass_word(*ok));
    }
    fs::write(cfg.out.join("reflect_summary.csv"), csv)?;
    if cfg.plot {
        write_plot(
            &cfg.out.join("reflect_summary.gp"),
            "reflect_summary.csv",
            &["set datafile separator ','", "set style data histogram", "set logscale y"],
            "plot FILE every ::1 using 2:xtic(1) title 'mean', '' every ::1 using 4 title 'tolerance'",
        )?;
    }
    Ok(summary.iter().all(|s| s.4))
}

/// `|E[orbit sum] − E[L^α]| / max(·)` with both sides averaged over paths.
pub fn orbit_relative(
    rs: &RootSystem,
    sim: &SimConfig,
    alpha: usize,
    eps: f64,
) -> Result<f64> {
    let w = generate_group(rs)?;
    crate::folding::single_orbit_roots(&w, rs, alpha)?;
    let op = FoldingOperator::new(rs)?;
    let pairs: Vec<(f64, f64)> = map_paths(sim, |_, raw| -> Result<(f64, f64)> {
        let o = orbit_sum_local_times(&w, rs, raw, alpha, eps)?.final_value();
        let b = boundary_via_distance(&op, raw, alpha, eps)?.final_value();
        Ok((o, b))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let lo = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
    let lb = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
    Ok((lo - lb).abs() / lb.max(lo).max(1e-12))
}

pub fn cmd_density(cfg: &RunConfig) -> Result<bool> {
    let rs = cfg.root_system()?;
    let w = generate_group(&rs)?;
    let kernel = HeatKernel::new(&rs, &w, cfg.t)?;
    let x = cfg.x0.clone().unwrap_or_else(|| vec![0.0; rs.dim()]);
    if x.len() != rs.dim() || !rs.in_closed_chamber(&x, crate::density::CHAMBER_TOL) {
        return Err(invalid(format!("x0 = {x:?} is not a point of the closed chamber")));
    }
    let mut passed = true;
    let mut report = serde_json::Map::new();
    report.insert("meta".into(), cfg.metadata_json());
    report.insert("c0".into(), json!(kernel.c0()));

    if cfg.check_c0 {
        println!("c0 = (2*pi)^({}/2) = {:.12}", rs.dim(), kernel.c0());
        let mut rows = Vec::new();
        for t in [0.5, 1.0, 2.0] {
            let k = kernel.with_time(t)?;
            let dev = (total_mass(&k, &x, 400)? - 1.0).abs();
            let ok = dev < C0_TOL;
            passed &= ok;
            println!("{} t = {t}: |integral - 1| = {dev:.3e} (tolerance {C0_TOL})", pass_word(ok));
            rows.push(json!({ "t": t, "deviation": dev, "passed": ok }));
        }
        report.insert("normalization".into(), json!(rows));
    }
    if cfg.neumann {
        let mut rng = stream_rng(cfg.seed, 0);
        let pts = random_wall_points(&rs, cfg.wall_points, 0.05, 3.0, &mut rng);
        let rep = neumann_check(&kernel, &x, &pts, 1e-4)?;
        let ok = rep.max_relative_normal < NEUMANN_TOL;
        passed &= ok;
        println!(
            "{} max relative normal derivative {:.3e} over {} wall points ({} skipped; tangential {:.3e})",
            pass_word(ok),
            rep.max_relative_normal,
            rep.checked,
            rep.skipped,
            rep.max_relative_tangential
        );
        report.insert("neumann".into(), to_json(&rep)?);
    }
    if cfg.heat {
        let h = 1e-3;
        let mut rng = stream_rng(cfg.seed, 1);
        let pts: Vec<Vec<f64>> = random_wall_points(&rs, cfg.wall_points, 0.2, 2.0, &mut rng)
            .into_iter()
            .map(|y| {
                let shift = rs.chamber_point() * 0.3;
                y.iter().zip(shift.iter()).map(|(a, b)| a + b).collect()
            })
            .collect();
        let res = heat_equation_residual(&kernel, &x, &pts, h)?;
        let ok = res < HEAT_TOL;
        passed &= ok;
        println!("{} heat-equation relative residual {res:.3e} (h = {h}, tolerance {HEAT_TOL})", pass_word(ok));
        report.insert("heat_residual".into(), json!(res));
    }
    if !(cfg.check_c0 || cfg.neumann || cfg.heat) {
        let op = FoldingOperator::new(&rs)?;
        let extent = cfg.extent.unwrap_or(4.0 * cfg.t.sqrt() + crate::rootsys::dot(&x, &x).sqrt());
        let rep = mc_density_check(&kernel, &op, &x, cfg.paths, cfg.bins, extent, cfg.seed)?;
        let ok = rep.tv_distance < TV_TOL;
        passed &= ok;
        println!(
            "{} TV distance {:.4} (tolerance {TV_TOL}); chi2 {:.1} on {} dof, p = {:.3}; {} samples",
            pass_word(ok),
            rep.tv_distance,
            rep.chi2,
            rep.dof,
            rep.pvalue,
            rep.n_samples
        );
        let mut file = fs::File::create(cfg.out.join("density.csv"))?;
        rep.write_csv(&mut file, &cfg.metadata_lines().join("\n"))?;
        report.insert(
            "monte_carlo".into(),
            json!({
                "tv_distance": rep.tv_distance,
                "chi2": rep.chi2,
                "dof": rep.dof,
                "pvalue": rep.pvalue,
                "outside_prob": rep.outside_prob,
                "outside_count": rep.outside_count,
                "passed": ok,
            }),
        );
        if cfg.plot {
            let setup = ["set datafile separator ','", "set xlabel 'y1'", "set ylabel 'y2'"];
            let plot = if rs.dim() == 1 {
                "plot FILE using 1:2 with lines title 'kernel', '' using 1:3 with points title 'histogram'"
            } else {
                "splot FILE using 1:2:3 title 'kernel', '' using 1:2:4 title 'histogram'"
            };
            write_plot(&cfg.out.join("density.gp"), "density.csv", &setup, plot)?;
        }
    }
    report.insert("passed".into(), json!(passed));
    write_json(&cfg.out.join("density_report.json"), &serde_json::Value::Object(report))?;
    Ok(passed)
}
