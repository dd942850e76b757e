//! The `carpet` command line: validation, constants tables, exponent fits,
//! the condition (B) check and exports.
//!
//! Every command writes deterministic bytes for a fixed spec, seed and
//! version, whatever `--threads` says. Exit codes: 0 ok, 1 a checked
//! condition fails, 2 bad input, 3 node budget exceeded, 4 insufficient
//! data, 5 the carpet is in neither class covered by the bump
//! constructions.

mod cache;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::carpet::spec::{builtin, CarpetSpec};
use crate::carpet::validate::{validate_with_budget, ValidationReport};
use crate::carpet::Carpet;
use crate::cellgraph::partition::partition;
use crate::cellgraph::{CellGraph, Word};
use crate::constants::fit::fit_series;
use crate::constants::poincare::{r_const, sigma_const};
use crate::constants::table::{constants_row, sig12, DEFAULT_NODE_BUDGET};
use crate::constants::{fit_exponents, ConstantsConfig, ConstantsTable, Evaluator, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::functions::{corner_bump, separator_bump, LinearBuilder};

pub use cache::Cache;

/// Largest accepted max/min ratio for the check-b bands.
pub const BAND_LIMIT: f64 = 20.0;

#[derive(Parser, Debug)]
#[command(name = "carpet", version, about = "Cell graphs and Poincare constants of self-similar polygon carpets")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Cache directory; overrides CARPET_CACHE_DIR.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the carpet conditions and print the report.
    Validate(Common),
    /// Compute λ, σ, δ, R for m = 1..m_max.
    Constants(Common),
    /// Fit r, θ, α from a constants CSV.
    Fit {
        #[command(flatten)]
        common: Common,
        /// CSV written by `constants`.
        #[arg(long)]
        table: PathBuf,
    },
    /// Compare σ_m with R_m and certify bumps.
    CheckB(Common),
    /// Export a graph, a bump or a partition.
    Export {
        kind: ExportKind,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        level: usize,
        /// Cell word for `bump`, letters separated by commas.
        #[arg(long, default_value = "0")]
        word: String,
        #[arg(long, default_value_t = 2)]
        m: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExportKind {
    Graph,
    Bump,
    Partition,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Spec JSON path (same as --spec).
    path: Option<PathBuf>,
    #[arg(long)]
    spec: Option<PathBuf>,
    /// One of sc, hsc, gasket.
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 3)]
    m_max: usize,
    #[arg(long, default_value_t = 2)]
    n_cap: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: usize,
    /// Output directory; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

/// Where the carpet spec comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecSource {
    Builtin(String),
    Path(PathBuf),
}

/// Resolved settings of one command.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source: SpecSource,
    pub depth: usize,
    pub m_max: usize,
    pub n_cap: usize,
    pub node_budget: usize,
    pub out: Option<PathBuf>,
    pub cache: Cache,
    pub seed: u64,
}

impl RunConfig {
    fn from_common(c: &Common, cache: Cache) -> Result<RunConfig> {
        let source = match (&c.builtin, c.spec.as_ref().or(c.path.as_ref())) {
            (Some(b), None) => SpecSource::Builtin(b.clone()),
            (None, Some(p)) => SpecSource::Path(p.clone()),
            (Some(_), Some(_)) => return Err(Error::InvalidArgument("give either --builtin or a spec path".into())),
            (None, None) => return Err(Error::InvalidArgument("no carpet given; use --builtin or --spec".into())),
        };
        if c.depth == 0 || c.m_max == 0 || c.n_cap == 0 || c.node_budget == 0 {
            return Err(Error::InvalidArgument("budgets must be positive".into()));
        }
        Ok(RunConfig {
            source,
            depth: c.depth,
            m_max: c.m_max,
            n_cap: c.n_cap,
            node_budget: c.node_budget,
            out: c.out.clone(),
            cache,
            seed: c.seed,
        })
    }

    pub fn load_spec(&self) -> Result<CarpetSpec> {
        match &self.source {
            SpecSource::Builtin(name) => builtin(name),
            SpecSource::Path(p) => {
                let text = std::fs::read_to_string(p)?;
                CarpetSpec::from_json(&text).map_err(|e| match e {
                    Error::Json(j) => Error::InvalidSpec(format!("{}: {j}", p.display())),
                    other => other,
                })
            }
        }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidSpec(_)
        | Error::InvalidPolygon(_)
        | Error::InvalidArgument(_)
        | Error::InvalidWord(_)
        | Error::Json(_)
        | Error::Io(_) => 2,
        Error::BudgetExceeded { .. } => 3,
        Error::InsufficientData(_) => 4,
        _ => 1,
    }
}

/// Parse `args` (including the program name), run, and return the exit
/// code. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 2;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    if let Some(k) = cli.threads {
        set_threads(k);
    }
    let cache = Cache::new(cli.cache_dir.clone().unwrap_or_else(Cache::default_dir));
    match dispatch(&cli.cmd, cache, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(feature = "parallel")]
fn set_threads(k: usize) {
    // a global pool can be set once per process; later calls keep the first
    let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) {}

fn dispatch(cmd: &Command, cache: Cache, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Validate(c) => cmd_validate(&RunConfig::from_common(c, cache)?, out),
        Command::Constants(c) => cmd_constants(&RunConfig::from_common(c, cache)?, out, err),
        Command::Fit { common, table } => cmd_fit(&RunConfig::from_common(common, cache)?, table, out),
        Command::CheckB(c) => cmd_check_b(&RunConfig::from_common(c, cache)?, out, err),
        Command::Export { kind, common, level, word, m } => {
            let cfg = RunConfig::from_common(common, cache)?;
            match kind {
                ExportKind::Graph => export_graph(&cfg, *level, out),
                ExportKind::Partition => export_partition(&cfg, *level, out),
                ExportKind::Bump => export_bump(&cfg, &parse_word(word)?, *m, out, err),
            }
        }
    }
}

fn parse_word(s: &str) -> Result<Word> {
    let letters: std::result::Result<Vec<usize>, _> =
        s.split([',', '.']).filter(|t| !t.trim().is_empty()).map(|t| t.trim().parse::<usize>()).collect();
    letters.map(|l| Word::from_slice(&l)).map_err(|_| Error::InvalidWord(s.into()))
}

/// Write `bytes` to `dir/name`, or to `out` when no directory is set.
fn emit(cfg: &RunConfig, name: &str, bytes: &[u8], out: &mut dyn Write) -> Result<()> {
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), bytes)?;
        }
        None => out.write_all(bytes)?,
    }
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

fn load(cfg: &RunConfig) -> Result<Carpet> {
    Carpet::new(cfg.load_spec()?)
}

fn cmd_validate(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let carpet = load(cfg)?;
    let report = validate_with_budget(&carpet, cfg.depth, cfg.node_budget.max(300_000))?;
    emit(cfg, "validation.json", &pretty(&report)?, out)?;
    let d = carpet.spec.declared;
    Ok(if report.declared_ok(d.perfect, d.bordered) { 0 } else { 1 })
}

fn cmd_constants(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let carpet = load(cfg)?;
    let config =
        ConstantsConfig { m_min: 1, m_max: cfg.m_max, n_cap: cfg.n_cap, node_budget: cfg.node_budget, seed: cfg.seed };
    let ev = Evaluator::new(&carpet, config.node_budget, config.seed);
    let mut rows = Vec::new();
    let mut failure = None;
    for m in 1..=cfg.m_max {
        match constants_row(&ev, m, cfg.n_cap) {
            Ok(r) => rows.push(r),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let table =
        ConstantsTable { name: carpet.spec.name.clone(), d_h: carpet.dh, rho_min: carpet.rho_min, config, rows };
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    emit(cfg, "constants.csv", &csv, out)?;
    if let Some(e) = failure {
        writeln!(err, "error: {e}; table is partial ({} rows)", table.rows.len())?;
        return Ok(exit_code(&e));
    }
    match fit_exponents(&table) {
        Ok(fit) => {
            if cfg.out.is_some() {
                emit(cfg, "fit.json", &pretty(&fit)?, out)?;
            }
            Ok(0)
        }
        Err(e) => {
            writeln!(err, "error: {e}")?;
            Ok(exit_code(&e))
        }
    }
}

/// `(m, λ, σ, δ, R)` columns of a constants CSV.
fn read_table(path: &Path) -> Result<Vec<(usize, [f64; 4])>> {
    let bad = |what: String| Error::InvalidSpec(format!("{}: {what}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| bad(format!("missing column {name}")));
    let idx = [col("m")?, col("lambda")?, col("sigma")?, col("delta")?, col("R")?];
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let m: usize = field(0).parse().map_err(|_| bad(format!("row {}: bad m", line + 1)))?;
        let mut v = [0.0; 4];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = field(k + 1).parse().map_err(|_| bad(format!("row {}: bad number", line + 1)))?;
        }
        rows.push((m, v));
    }
    Ok(rows)
}

fn cmd_fit(cfg: &RunConfig, table: &Path, out: &mut dyn Write) -> Result<i32> {
    let carpet = load(cfg)?;
    let rows = read_table(table)?;
    let series = |k: usize| rows.iter().map(|(m, v)| (*m, v[k])).collect::<Vec<_>>();
    let others = vec![("lambda", series(0)), ("delta", series(2)), ("R", series(3))];
    let fit = fit_series(&series(1), &others, carpet.rho_min, carpet.dh)?;
    emit(cfg, "fit.json", &pretty(&fit)?, out)?;
    Ok(0)
}

/// Which bump certifies the resistance lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpPath {
    Corner,
    Separator,
}

/// The class gate: perfect carpets use corner bumps, hollow bordered
/// carpets with the corner condition use the separator bump.
pub fn bump_path(report: &ValidationReport) -> Option<BumpPath> {
    if report.passes("perfect") {
        Some(BumpPath::Corner)
    } else if ["bordered", "hollow", "corner"].iter().all(|c| report.passes(c)) {
        Some(BumpPath::Separator)
    } else {
        None
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckBRow {
    pub m: usize,
    pub sigma: f64,
    pub r: f64,
    pub sigma_over_r: f64,
    pub bump_energy: Option<f64>,
    /// Bump energy times `σ_m`.
    pub bump_ratio: Option<f64>,
    pub bump_constraints_hold: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckBReport {
    pub name: Option<String>,
    pub path: BumpPath,
    pub word: Word,
    pub rows: Vec<CheckBRow>,
    pub sigma_over_r_band: f64,
    pub bump_band: Option<f64>,
    pub limit: f64,
    pub verdict: String,
}

fn band(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (lo, hi, k) = values.fold((f64::INFINITY, f64::NEG_INFINITY, 0), |(a, b, k), v| (a.min(v), b.max(v), k + 1));
    (k > 0).then(|| hi / lo)
}

fn measured_c0(report: &ValidationReport) -> Result<f64> {
    report.c0.ok_or_else(|| Error::InsufficientData("separation constant not measured".into()))
}

fn cmd_check_b(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let carpet = load(cfg)?;
    let report = validate_with_budget(&carpet, cfg.depth, cfg.node_budget.max(300_000))?;
    let Some(path) = bump_path(&report) else {
        writeln!(
            err,
            "error: carpet is neither perfect nor bordered with the hollow and corner conditions; \
             the comparison σ_m ≤ C R_m is only established for those classes"
        )?;
        return Ok(5);
    };
    let ev = Evaluator::new(&carpet, cfg.node_budget, cfg.seed);
    let coarse = partition(&carpet, 1, cfg.node_budget)?;
    let w = coarse.cells.first().map(|c| c.word.clone()).ok_or_else(|| Error::InsufficientData("empty Λ_1".into()))?;
    let (builder, c0) = match path {
        BumpPath::Separator => (Some(LinearBuilder::new(&carpet, cfg.node_budget)?), measured_c0(&report)?),
        BumpPath::Corner => (None, 0.0),
    };
    let mut rows = Vec::new();
    for m in 1..=cfg.m_max {
        let sigma = sigma_const(&ev, m, cfg.n_cap)?.value;
        let r = r_const(&ev, m, cfg.n_cap)?.value;
        let bump = match (&builder, path) {
            (_, BumpPath::Corner) => corner_bump(&carpet, 1, &w, m, cfg.node_budget).map(|b| b.g),
            (Some(b), BumpPath::Separator) => separator_bump(b, 1, &w, m, c0).map(|s| s.h),
            (None, BumpPath::Separator) => unreachable!("builder exists on the separator path"),
        };
        let row = match bump {
            Ok(f) => CheckBRow {
                m,
                sigma,
                r,
                sigma_over_r: sigma / r,
                bump_energy: Some(f.energy()),
                bump_ratio: Some(f.energy() * sigma),
                bump_constraints_hold: Some(f.constraints_hold()),
                note: None,
            },
            Err(Error::ThresholdNotReached(need)) => CheckBRow {
                m,
                sigma,
                r,
                sigma_over_r: sigma / r,
                bump_energy: None,
                bump_ratio: None,
                bump_constraints_hold: None,
                note: Some(format!("bump needs m >= {need}")),
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    let sigma_over_r_band = band(rows.iter().map(|r| r.sigma_over_r)).unwrap_or(f64::NAN);
    let bump_band = band(rows.iter().filter_map(|r| r.bump_ratio));
    let constraints = rows.iter().all(|r| r.bump_constraints_hold != Some(false));
    let ok = sigma_over_r_band <= BAND_LIMIT && bump_band.is_some_and(|b| b <= BAND_LIMIT) && constraints;
    let verdict = if ok { "bounded-within-range" } else { "not-bounded-within-range" };
    let rep = CheckBReport {
        name: carpet.spec.name.clone(),
        path,
        word: w,
        rows,
        sigma_over_r_band,
        bump_band,
        limit: BAND_LIMIT,
        verdict: verdict.into(),
    };
    emit(cfg, "check_b.json", &pretty(&rep)?, out)?;
    Ok(if ok { 0 } else { 1 })
}

fn graph_key(cfg: &RunConfig, spec: &CarpetSpec, what: &str, level: usize) -> String {
    Cache::key(&[&spec.to_json(), what, &level.to_string(), &cfg.node_budget.to_string()])
}

fn export_graph(cfg: &RunConfig, level: usize, out: &mut dyn Write) -> Result<i32> {
    let spec = cfg.load_spec()?;
    let key = graph_key(cfg, &spec, "graph", level);
    let bytes = cfg.cache.get_or_insert(&key, || {
        let carpet = Carpet::new(spec.clone())?;
        let g = CellGraph::from_partition(&carpet, &partition(&carpet, level, cfg.node_budget)?)?;
        let mut b = serde_json::to_vec(&g.export_json())?;
        b.push(b'\n');
        Ok(b)
    })?;
    emit(cfg, &format!("graph_{level}.json"), &bytes, out)?;
    Ok(0)
}

fn export_partition(cfg: &RunConfig, level: usize, out: &mut dyn Write) -> Result<i32> {
    let spec = cfg.load_spec()?;
    let key = graph_key(cfg, &spec, "partition", level);
    let bytes = cfg.cache.get_or_insert(&key, || {
        let carpet = Carpet::new(spec.clone())?;
        let p = partition(&carpet, level, cfg.node_budget)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
        w.write_record(["word", "rho", "mu"]).map_err(io)?;
        for c in &p.cells {
            let word = c.word.letters().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(".");
            w.write_record([word, sig12(c.rho), sig12(c.rho.powf(carpet.dh))]).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    })?;
    emit(cfg, &format!("partition_{level}.csv"), &bytes, out)?;
    Ok(0)
}

fn export_bump(cfg: &RunConfig, w: &Word, m: usize, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let carpet = load(cfg)?;
    let report = validate_with_budget(&carpet, cfg.depth, cfg.node_budget.max(300_000))?;
    let n = w.len();
    let f = match bump_path(&report) {
        Some(BumpPath::Corner) => corner_bump(&carpet, n, w, m, cfg.node_budget)?.g,
        Some(BumpPath::Separator) => {
            let c0 = measured_c0(&report)?;
            let b = LinearBuilder::new(&carpet, cfg.node_budget)?;
            separator_bump(&b, n, w, m, c0)?.h
        }
        None => {
            writeln!(err, "error: no bump construction for this carpet class")?;
            return Ok(5);
        }
    };
    let mut bytes = serde_json::to_vec(&f.export_json())?;
    bytes.push(b'\n');
    emit(cfg, "bump.json", &bytes, out)?;
    Ok(if f.constraints_hold() { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let dir = tempfile::tempdir().unwrap();
        let mut full = vec!["carpet", "--cache-dir", dir.path().to_str().unwrap()];
        full.extend_from_slice(args);
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn words_parse() {
        assert_eq!(parse_word("0,3").unwrap(), Word::from_slice(&[0, 3]));
        assert_eq!(parse_word("2").unwrap(), Word::from_slice(&[2]));
        assert!(parse_word("a").is_err());
    }

    #[test]
    fn missing_carpet_is_an_input_error() {
        assert_eq!(run_str(&["validate"]).0, 2);
        assert_eq!(run_str(&["export", "nonsense", "--builtin", "sc"]).0, 2);
        assert_eq!(run_str(&["validate", "--builtin", "nope"]).0, 2);
    }

    #[test]
    fn sc_graph_export() {
        let (code, out, _) = run_str(&["export", "graph", "--level", "2", "--builtin", "sc"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["nodes"].as_array().unwrap().len(), 64);
    }
}
