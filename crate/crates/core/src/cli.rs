//! Command-line front end. `run` parses argv, executes one command and
//! returns the process exit code: 0 on success, 1 when a `--verify` check
//! fails, 2 on usage or module errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use num::BigUint;
use serde_json::{json, Value};

use crate::emulator::{self, build_emulator, emulator_sssp, Emulator};
use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::graph::{all_pairs_exact, exact_distances, generate_graph, load_graph, load_graph_compacted, Graph, GraphKind, Vertex};
use crate::hopset::{self, build_hopset, verify_hopset, Hopset};
use crate::mpc::{Engine, MpcConfig};
use crate::shortest_paths::{max_stretch, multi_source, sssp, within_stretch, Mode};
use crate::sketch::{self, build_oracle, Oracle};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "mpc-hopsets", version, about = "Hopsets, emulators, shortest paths and distance oracles on a simulated MPC engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GraphSource {
    /// edge-list file, one `u v` pair per line
    #[arg(long, conflicts_with = "gen")]
    pub graph: Option<PathBuf>,
    /// generator spec: path:N, cycle:N, star:N, grid:RxC, gnp:N:P
    #[arg(long)]
    pub gen: Option<GraphKind>,
    /// relabel sparse vertex ids densely
    #[arg(long)]
    pub compact: bool,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, default_value = "0")]
    pub seed: u64,
    #[arg(long, default_value = "1/2", value_parser = parse_rational)]
    pub rho: Rational,
    #[arg(long, default_value = "1/2", value_parser = parse_rational)]
    pub gamma: Rational,
    /// write the JSON report here instead of printing a summary
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// print the JSON report on standard output
    #[arg(long)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a graph and write it as an edge list
    Gen {
        #[arg(long)]
        gen: GraphKind,
        #[arg(long, default_value = "0")]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a limited-scale hopset
    BuildHopset {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_rational)]
        eps: Rational,
        /// distance range; defaults to n
        #[arg(long)]
        t: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value = "2000")]
        pair_sample: usize,
    },
    /// Build a near-additive emulator (and the hopset it needs)
    BuildEmulator {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_rational)]
        eps: Rational,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        verify: bool,
    },
    /// Approximate single-source shortest paths
    Sssp {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        common: Common,
        #[arg(long = "source")]
        vertex: Vertex,
        #[arg(long, value_parser = parse_rational)]
        eps: Rational,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        verify: bool,
    },
    /// Approximate shortest paths from several sources
    MultiSssp {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        common: Common,
        /// comma-separated source vertices
        #[arg(long, value_delimiter = ',')]
        sources: Vec<Vertex>,
        #[arg(long, value_parser = parse_rational)]
        eps: Rational,
        #[arg(long, default_value = "heterogeneous")]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        verify: bool,
    },
    /// Build a distance oracle and write it as JSON
    BuildOracle {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = parse_rational)]
        eps: Rational,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        verify: bool,
    },
    /// Answer distance queries from a saved oracle
    Query {
        #[arg(long)]
        oracle: PathBuf,
        /// pairs such as "0 5, 2 7"
        #[arg(long)]
        pairs: String,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Check a saved hopset, emulator or oracle against its graph
    Verify {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, conflicts_with_all = ["emulator", "oracle"])]
        hopset: Option<PathBuf>,
        #[arg(long, conflicts_with = "oracle")]
        emulator: Option<PathBuf>,
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[arg(long, default_value = "2000")]
        pair_sample: usize,
        #[arg(long, default_value = "0")]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Graph statistics and the MPC configuration it induces
    Stats {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    exact::parse(s).map_err(|e| e.to_string())
}

/// Parses `"0 5, 2 7"` into `[(0, 5), (2, 7)]`.
pub fn parse_pairs(text: &str) -> Result<Vec<(Vertex, Vertex)>> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let nums: Vec<&str> = p.split_whitespace().collect();
            match nums.as_slice() {
                [a, b] => match (a.parse(), b.parse()) {
                    (Ok(u), Ok(v)) => Ok((u, v)),
                    _ => Err(Error::InvalidParams(format!("bad pair {p:?}"))),
                },
                _ => Err(Error::InvalidParams(format!("bad pair {p:?}: expected two vertex ids"))),
            }
        })
        .collect()
}

struct Loaded {
    graph: Graph,
    origin: Value,
}

fn load(source: &GraphSource, seed: u64) -> Result<Loaded> {
    match (&source.graph, &source.gen) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let graph = if source.compact { load_graph_compacted(&text)?.0 } else { load_graph(&text)? };
            Ok(Loaded { graph, origin: json!({ "file": path.display().to_string(), "compact": source.compact }) })
        }
        (None, Some(kind)) => Ok(Loaded { graph: generate_graph(kind, seed)?, origin: json!({ "generator": kind.to_string() }) }),
        _ => Err(Error::InvalidParams("exactly one of --graph or --gen is required".into())),
    }
}

fn engine(g: &Graph, common: &Common) -> Result<Engine> {
    Ok(Engine::new(MpcConfig::for_graph(g, common.gamma.clone(), common.rho.clone())?))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// What a command produced before it is written out.
struct Outcome {
    report: Value,
    summary: Vec<String>,
    verdict: Option<bool>,
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn verdict_json(pass: bool, details: Value) -> Value {
    json!({ "verdict": if pass { "PASS" } else { "FAIL" }, "details": details })
}

/// Runs with process arguments; output goes to stdout/stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run_with(argv, &mut out, &mut err)
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let (report_path, as_json) = report_target(&cli.command);
    match execute(&cli.command) {
        Ok(mut outcome) => {
            outcome.report["timestamp"] = json!(timestamp());
            if let Some(path) = report_path {
                if let Err(e) = write_json(&path, &outcome.report) {
                    let _ = writeln!(err, "error: {e}");
                    return EXIT_USAGE;
                }
            }
            if as_json {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&outcome.report).unwrap_or_default());
            } else {
                for line in &outcome.summary {
                    let _ = writeln!(out, "{line}");
                }
            }
            match outcome.verdict {
                Some(false) => EXIT_VERIFY_FAIL,
                _ => EXIT_OK,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn report_target(cmd: &Command) -> (Option<PathBuf>, bool) {
    match cmd {
        Command::Gen { .. } => (None, false),
        Command::BuildHopset { common, .. }
        | Command::BuildEmulator { common, .. }
        | Command::Sssp { common, .. }
        | Command::MultiSssp { common, .. }
        | Command::BuildOracle { common, .. }
        | Command::Stats { common, .. } => (common.report.clone(), common.json),
        Command::Query { report, json, .. } | Command::Verify { report, json, .. } => (report.clone(), *json),
    }
}

fn inputs(loaded: &Loaded, common: &Common, extra: Value) -> Value {
    let mut v = json!({
        "graph": loaded.origin,
        "n": loaded.graph.n(),
        "m": loaded.graph.m(),
        "seed": common.seed,
        "rho": exact::render(&common.rho),
        "gamma": exact::render(&common.gamma),
    });
    if let (Value::Object(base), Value::Object(more)) = (&mut v, extra) {
        base.extend(more);
    }
    v
}

fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Gen { gen, seed, out } => {
            let g = generate_graph(gen, *seed)?;
            let text = g.to_edge_list();
            let mut summary = vec![format!("generated {gen}: n = {}, m = {}", g.n(), g.m())];
            match out {
                Some(path) => {
                    std::fs::write(path, &text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    summary.push(format!("wrote {}", path.display()));
                }
                None => summary.push(text.trim_end().to_string()),
            }
            let report = json!({ "command": "gen", "inputs": { "generator": gen.to_string(), "seed": seed }, "outputs": { "n": g.n(), "m": g.m() } });
            Ok(Outcome { report, summary, verdict: None })
        }
        Command::BuildHopset { source, common, eps, t, out, verify, pair_sample } => {
            let loaded = load(source, common.seed)?;
            let g = &loaded.graph;
            let t = BigUint::from(t.unwrap_or(g.n().max(2) as u64));
            let mut e = engine(g, common)?;
            let h = build_hopset(&mut e, g, eps, &common.rho, &t, common.seed)?;
            if let Some(path) = out {
                write_json(path, &h)?;
            }
            let mut report = json!({
                "command": "build-hopset",
                "inputs": inputs(&loaded, common, json!({ "eps": exact::render(eps), "t": t.to_string() })),
                "outputs": hopset_summary(&h, g.n()),
                "stats": e.stats(),
            });
            let mut summary = vec![format!("hopset: {} edges, beta_H = {}, scales run = {}", h.len(), h.beta_h, h.scales.len())];
            let mut verdict = None;
            if *verify {
                let r = verify_hopset(g, &h, *pair_sample, common.seed);
                summary.push(format!("verify: {} ({} pairs, max stretch {:.4})", r.verdict, r.pairs_checked, r.max_stretch));
                verdict = Some(r.passed());
                report["verification"] = verdict_json(r.passed(), serde_json::to_value(&r)?);
            }
            Ok(Outcome { report, summary, verdict })
        }
        Command::BuildEmulator { source, common, eps, out, verify } => {
            let loaded = load(source, common.seed)?;
            let g = &loaded.graph;
            let mut e = engine(g, common)?;
            let (m, h) = build_emulator(&mut e, g, eps, &common.rho, common.seed)?;
            if let Some(path) = out {
                write_json(path, &m)?;
            }
            let mut report = json!({
                "command": "build-emulator",
                "inputs": inputs(&loaded, common, json!({ "eps": exact::render(eps) })),
                "outputs": {
                    "size": m.len(),
                    "size_bound": emulator::size_bound(g.n()),
                    "beta_m": m.beta_m.to_string(),
                    "t": m.t.to_string(),
                    "levels": m.ell_em,
                    "rho_used": exact::render(&m.rho),
                    "hopset": hopset_summary(&h, g.n()),
                },
                "stats": e.stats(),
            });
            let mut summary = vec![format!("emulator: {} edges, beta_M = {}", m.len(), m.beta_m)];
            let mut verdict = None;
            if *verify {
                let (pass, details) = check_emulator(g, &m);
                summary.push(format!("verify: {}", if pass { "PASS" } else { "FAIL" }));
                verdict = Some(pass);
                report["verification"] = verdict_json(pass, details);
            }
            Ok(Outcome { report, summary, verdict })
        }
        Command::Sssp { source, common, vertex, eps, out, verify } => {
            let loaded = load(source, common.seed)?;
            let g = &loaded.graph;
            let mut e = engine(g, common)?;
            let r = sssp(&mut e, g, *vertex, eps, &common.rho, common.seed)?;
            if let Some(path) = out {
                write_json(path, &r)?;
            }
            let reached = r.estimate.iter().flatten().count();
            let mut report = json!({
                "command": "sssp",
                "inputs": inputs(&loaded, common, json!({ "source": vertex, "eps": exact::render(eps) })),
                "outputs": { "reached": reached, "estimate": r.estimate, "branch": r.branch },
                "stats": r.stats,
            });
            let mut summary = vec![format!("sssp from {vertex}: {reached} vertices reached, {} rounds", r.stats.rounds)];
            let mut verdict = None;
            if *verify {
                let bfs = exact_distances(g, *vertex).dist;
                let pass = within_stretch(&bfs, &r.estimate, eps);
                let stretch = max_stretch(&bfs, &r.estimate);
                summary.push(format!("verify: {} (max stretch {stretch:.4})", if pass { "PASS" } else { "FAIL" }));
                verdict = Some(pass);
                report["verification"] = verdict_json(pass, json!({ "max_stretch": stretch, "bound": exact::to_f64(&(exact::one() + eps)) }));
            }
            Ok(Outcome { report, summary, verdict })
        }
        Command::MultiSssp { source, common, sources, eps, mode, out, verify } => {
            let loaded = load(source, common.seed)?;
            let g = &loaded.graph;
            let mut e = engine(g, common)?;
            let r = multi_source(&mut e, g, sources, eps, &common.rho, *mode, common.seed)?;
            if let Some(path) = out {
                write_json(path, &r)?;
            }
            let mut report = json!({
                "command": "multi-sssp",
                "inputs": inputs(&loaded, common, json!({ "sources": sources, "eps": exact::render(eps), "mode": mode })),
                "outputs": { "rows": r.rows.iter().map(|row| json!({ "source": row.source, "estimate": row.estimate })).collect::<Vec<_>>(), "near_linear_slots": r.near_linear_slots },
                "stats": r.stats,
            });
            let mut summary = vec![format!("multi-sssp: {} sources, {} rounds", sources.len(), r.stats.rounds)];
            let mut verdict = None;
            if *verify {
                let mut worst: f64 = 1.0;
                let mut pass = true;
                for row in &r.rows {
                    let bfs = exact_distances(g, row.source).dist;
                    pass &= within_stretch(&bfs, &row.estimate, eps);
                    worst = worst.max(max_stretch(&bfs, &row.estimate));
                }
                summary.push(format!("verify: {} (max stretch {worst:.4})", if pass { "PASS" } else { "FAIL" }));
                verdict = Some(pass);
                report["verification"] = verdict_json(pass, json!({ "max_stretch": worst }));
            }
            Ok(Outcome { report, summary, verdict })
        }
        Command::BuildOracle { source, common, k, eps, out, verify } => {
            let loaded = load(source, common.seed)?;
            let g = &loaded.graph;
            let mut e = engine(g, common)?;
            let o = build_oracle(&mut e, g, *k, eps, &common.rho, common.seed)?;
            if let Some(path) = out {
                o.save(path)?;
            }
            let mut report = json!({
                "command": "build-oracle",
                "inputs": inputs(&loaded, common, json!({ "k": k, "eps": exact::render(eps) })),
                "outputs": oracle_summary(&o),
                "stats": e.stats(),
            });
            let mut summary = vec![format!("oracle: {} entries, mean bunch {:.2}", o.entry_count(), o.sketch.mean_bunch_size())];
            let mut verdict = None;
            if *verify {
                let (pass, details) = check_oracle(g, &o);
                summary.push(format!("verify: {}", if pass { "PASS" } else { "FAIL" }));
                verdict = Some(pass);
                report["verification"] = verdict_json(pass, details);
            }
            Ok(Outcome { report, summary, verdict })
        }
        Command::Query { oracle, pairs, .. } => {
            let o = Oracle::load(oracle)?;
            let pairs = parse_pairs(pairs)?;
            let mut rows = Vec::new();
            let mut summary = Vec::new();
            for &(u, v) in &pairs {
                o.check_vertex(u)?;
                o.check_vertex(v)?;
                let est = sketch::oracle_query(&o, u, v);
                summary.push(match est {
                    Some(d) => format!("{u} {v} {d}"),
                    None => format!("{u} {v} unreachable"),
                });
                rows.push(json!({ "u": u, "v": v, "estimate": est }));
            }
            let report = json!({ "command": "query", "inputs": { "oracle": oracle.display().to_string(), "pairs": pairs }, "outputs": { "answers": rows } });
            Ok(Outcome { report, summary, verdict: None })
        }
        Command::Verify { source, hopset, emulator, oracle, pair_sample, seed, .. } => {
            let loaded = load(source, *seed)?;
            let g = &loaded.graph;
            let (kind, pass, details) = if let Some(path) = hopset {
                let h: Hopset = read_json(path)?;
                let r = verify_hopset(g, &h, *pair_sample, *seed);
                ("hopset", r.passed(), serde_json::to_value(&r)?)
            } else if let Some(path) = emulator {
                let m: Emulator = read_json(path)?;
                let (pass, details) = check_emulator(g, &m);
                ("emulator", pass, details)
            } else if let Some(path) = oracle {
                let (pass, details) = check_oracle(g, &Oracle::load(path)?);
                ("oracle", pass, details)
            } else {
                return Err(Error::InvalidParams("one of --hopset, --emulator or --oracle is required".into()));
            };
            let report = json!({
                "command": "verify",
                "inputs": { "graph": loaded.origin, "artifact": kind },
                "verification": verdict_json(pass, details),
            });
            Ok(Outcome { report, summary: vec![format!("{kind}: {}", if pass { "PASS" } else { "FAIL" })], verdict: Some(pass) })
        }
        Command::Stats { source, common } => {
            let loaded = load(source, common.seed)?;
            let g = &loaded.graph;
            let cfg = MpcConfig::for_graph(g, common.gamma.clone(), common.rho.clone())?;
            let degrees: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
            let max_degree = degrees.iter().copied().max().unwrap_or(0);
            let isolated = degrees.iter().filter(|&&d| d == 0).count();
            let report = json!({
                "command": "stats",
                "inputs": inputs(&loaded, common, json!({})),
                "outputs": {
                    "max_degree": max_degree,
                    "isolated": isolated,
                    "machine_capacity": cfg.machine_capacity,
                    "total_capacity": cfg.total_capacity.to_string(),
                    "round_unit": cfg.round_unit(),
                },
            });
            let summary = vec![
                format!("n = {}, m = {}, max degree {max_degree}, isolated {isolated}", g.n(), g.m()),
                format!("S = {} words, ceil(1/gamma) = {}", cfg.machine_capacity, cfg.round_unit()),
            ];
            Ok(Outcome { report, summary, verdict: None })
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn hopset_summary(h: &Hopset, n: usize) -> Value {
    json!({
        "size": h.len(),
        "size_bound": hopset::size_bound(n, &h.rho),
        "beta_h": h.beta_h.to_string(),
        "eps_h": exact::render(&h.eps_h),
        "t": h.t.to_string(),
        "levels": h.ell,
        "scales": h.scales,
    })
}

fn oracle_summary(o: &Oracle) -> Value {
    let meta = o.sketch.limited.as_ref();
    json!({
        "entries": o.entry_count(),
        "size_bound": sketch::oracle_size_bound(o.n(), o.k),
        "emulator_edges": o.emulator.len(),
        "hopset_edges": o.hopset.len(),
        "sketch_entries": o.sketch.entry_count(),
        "mean_bunch": o.sketch.mean_bunch_size(),
        "range_d": meta.map(|m| m.d.to_string()),
    })
}

/// `d_G <= d_M <= (1+2ε_M)d_G + β_M` on all pairs, plus the size bound.
fn check_emulator(g: &Graph, m: &Emulator) -> (bool, Value) {
    let mult = exact::one() + exact::int(2) * &m.eps_m;
    let add = exact::from_big(&m.beta_m);
    let mut violations = 0usize;
    for u in 0..g.n() {
        let bfs = exact_distances(g, u).dist;
        let dm = emulator_sssp(m, u).dist;
        for (a, b) in bfs.iter().zip(&dm) {
            let ok = match (a, b) {
                (None, None) => true,
                (Some(d), Some(e)) => e >= d && exact::int(*e as i64) <= &mult * exact::int(*d as i64) + &add,
                _ => false,
            };
            violations += usize::from(!ok);
        }
    }
    let bound = emulator::size_bound(g.n());
    let size_ok = (m.len() as f64) <= bound;
    (violations == 0 && size_ok, json!({ "violations": violations, "size": m.len(), "size_bound": bound }))
}

/// `d_G <= est <= (1+ε)(2k-1)d_G` on all pairs, plus the entry bound.
fn check_oracle(g: &Graph, o: &Oracle) -> (bool, Value) {
    let mult = (exact::one() + &o.eps) * exact::int(2 * o.k as i64 - 1);
    let exact_d = all_pairs_exact(g);
    let mut violations = 0usize;
    let mut worst: f64 = 1.0;
    for u in 0..g.n() {
        let row = o.query_row(u);
        for v in 0..g.n() {
            let ok = match (exact_d[u][v], row[v]) {
                (None, None) => true,
                (Some(d), Some(e)) => {
                    if d > 0 {
                        worst = worst.max(e as f64 / d as f64);
                    }
                    e >= d && hopset::within_factor(e, d, &mult)
                }
                _ => false,
            };
            violations += usize::from(!ok);
        }
    }
    let bound = sketch::oracle_size_bound(o.n(), o.k);
    let size_ok = (o.entry_count() as f64) <= bound;
    (violations == 0 && size_ok, json!({ "violations": violations, "max_stretch": worst, "entries": o.entry_count(), "size_bound": bound }))
}
