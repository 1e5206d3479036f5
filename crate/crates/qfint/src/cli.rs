//! Instance file format, JSON reports, and the subcommand drivers behind the
//! `qfint` binary.
//!
//! Instance files are UTF-8 JSON:
//!
//! ```json
//! { "n": 2, "forms": [ { "triplets": [[0, 0, 0.02], [0, 1, -0.02], [1, 1, 0.02]] } ] }
//! ```
//!
//! with 0-based indices `i ≤ j`; each triplet contributes `v` to entries
//! `(i, j)` and `(j, i)` (diagonal once). NaN/Inf values, out-of-range
//! indices and duplicate positions are rejected. Triplets keep instances in
//! the sparse regime audit-friendly: the supports, and hence the interaction
//! graph, are visible in the file.
//!
//! Reports go to stdout, diagnostics to stderr. Identical inputs produce
//! byte-identical reports except for the `timing_ms` line. Exit codes:
//! 0 success, 1 usage, 2 admissibility failure, 3 unreadable/invalid input,
//! 4 enumeration budget exceeded, 5 oracle guard violation, 6 normalization
//! violation.

use crate::apps::{
    self, build_potential_instance, complete_edges, EdgeAlpha, FeasBackend, PotentialSpec,
};
use crate::cluster::{ClusterOptions, EnumStats};
use crate::interp::{self, Estimate, InterpPlan};
use crate::jsonfmt::Json;
use crate::model::{build_instance, check_admissible, AdmissibilityReport, Instance, Mode,
    ToleranceConfig};
use crate::oracle::{self, MCResult};
use crate::symmat::SymMatrix;
use crate::Error;
use num_complex::Complex64;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INADMISSIBLE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_GUARD: i32 = 5;
pub const EXIT_NORMALIZATION: i32 = 6;

/// Every failure maps to exactly one documented exit code.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Dimension(_) | Error::Parse(_) | Error::Invalid(_) => EXIT_PARSE,
        Error::Admissibility(_) => EXIT_INADMISSIBLE,
        Error::Budget { .. } | Error::NonFinite { .. } => EXIT_BUDGET,
        Error::Guard(_) => EXIT_GUARD,
        Error::Normalization(_) => EXIT_NORMALIZATION,
    }
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileInstance {
    n: usize,
    forms: Vec<FileForm>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileForm {
    triplets: Vec<(usize, usize, f64)>,
}

/// Parses the instance file format from a string.
pub fn parse_instance_str(text: &str) -> Result<Instance, Error> {
    let file: FileInstance =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.n == 0 {
        return Err(Error::Parse("n must be positive".into()));
    }
    let mats: Result<Vec<SymMatrix>, Error> = file
        .forms
        .iter()
        .map(|f| SymMatrix::from_triplets(file.n, &f.triplets))
        .collect();
    build_instance(file.n, mats?)
}

pub fn load_instance(path: &Path) -> Result<Instance, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_instance_str(&text)
}

/// Serializes an instance losslessly (17 significant digits per value).
pub fn instance_to_json(inst: &Instance) -> Json {
    let forms: Vec<Json> = inst
        .matrices()
        .map(|q| {
            let n = q.n();
            let mut triplets = Vec::new();
            for i in 0..n {
                for j in i..n {
                    let v = q.get(i, j);
                    if v != 0.0 {
                        triplets.push(Json::Arr(vec![
                            Json::UInt(i as u64),
                            Json::UInt(j as u64),
                            Json::Num(v),
                        ]));
                    }
                }
            }
            Json::Obj(vec![("triplets", Json::Arr(triplets))])
        })
        .collect();
    Json::Obj(vec![
        ("n", Json::UInt(inst.n() as u64)),
        ("forms", Json::Arr(forms)),
    ])
}

fn admissibility_json(r: &AdmissibilityReport) -> Json {
    Json::Obj(vec![
        ("mode", Json::Str(r.mode.as_str().into())),
        ("gamma_prime", Json::Num(r.gamma_prime)),
        ("beta", Json::Num(r.beta)),
        ("r_dep", Json::UInt(r.locality.r_dep as u64)),
        ("r_int", Json::UInt(r.locality.r_int as u64)),
        ("r", Json::UInt(r.locality.r as u64)),
        ("divisor", Json::UInt(r.divisor as u64)),
        ("bound", Json::Num(r.bound)),
        ("pass", Json::Bool(r.pass)),
        ("margins", Json::nums(&r.margins)),
    ])
}

fn plan_json(plan: &InterpPlan) -> Json {
    Json::Obj(vec![
        ("k", Json::UInt(plan.k as u64)),
        ("beta", Json::Num(plan.beta)),
        ("epsilon", Json::Num(plan.epsilon)),
        ("bound", Json::Num(plan.bound)),
    ])
}

fn estimate_json(est: &Estimate) -> Json {
    Json::Obj(vec![
        ("value", Json::Num(est.value)),
        ("log_value", Json::Num(est.log_value)),
        ("additive_log_error_bound", Json::Num(est.additive_log_error_bound)),
        ("coeffs", Json::nums(&est.coeffs.c)),
        ("log_coeffs", Json::nums(&est.f)),
    ])
}

fn budget_json(stats: &EnumStats, max: u64) -> Json {
    Json::Obj(vec![
        ("max_collections", Json::UInt(max)),
        ("total_collections", Json::UInt(stats.total_collections)),
        ("collections_per_level", Json::uints(&stats.collections_per_level)),
        ("tuples", Json::UInt(stats.tuples)),
        ("comp_residual", Json::Num(stats.comp_residual)),
    ])
}

fn mc_json(r: &MCResult) -> Json {
    Json::Obj(vec![
        ("mean", Json::Num(r.mean)),
        ("stderr", Json::Num(r.stderr)),
        ("samples", Json::UInt(r.samples)),
        ("seed", Json::UInt(r.seed)),
    ])
}

fn fail(err: &Error) -> i32 {
    eprintln!("error: {err}");
    exit_code_for(err)
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub struct IntegrateOpts {
    pub instance: PathBuf,
    pub epsilon: f64,
    pub gamma_prime: f64,
    pub mode: Mode,
    pub max_collections: u64,
}

pub fn cmd_integrate(opts: &IntegrateOpts) -> i32 {
    let start = Instant::now();
    let inst = match load_instance(&opts.instance) {
        Ok(i) => i,
        Err(e) => return fail(&e),
    };
    let cfg = match ToleranceConfig::new(opts.gamma_prime, opts.mode) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let adm = check_admissible(&inst, &cfg);
    if !adm.pass {
        let report = Json::Obj(vec![
            ("status", Json::Str("inadmissible".into())),
            ("estimate", Json::Null),
            ("plan", Json::Null),
            ("admissibility", admissibility_json(&adm)),
            ("budget", Json::Null),
            ("timing_ms", Json::Num(elapsed_ms(start))),
        ]);
        print!("{}", report.render());
        eprintln!(
            "error: instance violates the admissibility bound ({} of {} forms fail)",
            adm.failing(),
            adm.margins.len()
        );
        return EXIT_INADMISSIBLE;
    }
    let cluster_opts = ClusterOptions {
        max_collections: opts.max_collections,
    };
    match interp::integrate_with(&inst, &cfg, opts.epsilon, &cluster_opts) {
        Ok(est) => {
            let report = Json::Obj(vec![
                ("status", Json::Str("ok".into())),
                ("estimate", estimate_json(&est)),
                ("plan", plan_json(&est.plan)),
                ("admissibility", admissibility_json(&adm)),
                ("budget", budget_json(&est.stats, opts.max_collections)),
                ("timing_ms", Json::Num(elapsed_ms(start))),
            ]);
            print!("{}", report.render());
            EXIT_OK
        }
        Err(e @ (Error::Budget { .. } | Error::NonFinite { .. })) => {
            let plan = interp::choose_order(inst.m(), opts.epsilon, cfg.beta()).ok();
            let report = Json::Obj(vec![
                ("status", Json::Str("budget_exceeded".into())),
                ("error", Json::Str(e.to_string())),
                ("estimate", Json::Null),
                ("plan", plan.as_ref().map_or(Json::Null, plan_json)),
                ("admissibility", admissibility_json(&adm)),
                ("timing_ms", Json::Num(elapsed_ms(start))),
            ]);
            print!("{}", report.render());
            eprintln!("error: {e}");
            EXIT_BUDGET
        }
        Err(e) => fail(&e),
    }
}

pub enum OracleAction {
    Value { re: f64, im: f64 },
    Mc { samples: u64, seed: u64 },
    ZeroScan { radius: f64, grid: usize },
}

pub struct OracleOpts {
    pub instance: PathBuf,
    pub action: OracleAction,
}

pub fn cmd_oracle(opts: &OracleOpts) -> i32 {
    let start = Instant::now();
    let inst = match load_instance(&opts.instance) {
        Ok(i) => i,
        Err(e) => return fail(&e),
    };
    let head = vec![
        ("m", Json::UInt(inst.m() as u64)),
        ("n", Json::UInt(inst.n() as u64)),
    ];
    match &opts.action {
        OracleAction::Value { re, im } => {
            let omega = Complex64::new(*re, *im);
            match oracle::exact_value(&inst, omega) {
                Ok(value) => {
                    let mut fields = head;
                    fields.push(("omega", Json::nums(&[omega.re, omega.im])));
                    fields.push(("value", Json::nums(&[value.re, value.im])));
                    fields.push(("modulus", Json::Num(value.norm())));
                    fields.push(("timing_ms", Json::Num(elapsed_ms(start))));
                    print!("{}", Json::Obj(fields).render());
                    EXIT_OK
                }
                Err(e) => fail(&e),
            }
        }
        OracleAction::Mc { samples, seed } => {
            let r = oracle::mc_estimate(&inst, *samples, *seed);
            let mut fields = head;
            if let Json::Obj(mc_fields) = mc_json(&r) {
                fields.extend(mc_fields);
            }
            fields.push(("timing_ms", Json::Num(elapsed_ms(start))));
            print!("{}", Json::Obj(fields).render());
            EXIT_OK
        }
        OracleAction::ZeroScan { radius, grid } => match oracle::zero_scan(&inst, *radius, *grid) {
            Ok(scan) => {
                let mut fields = head;
                fields.push(("radius", Json::Num(scan.radius)));
                fields.push(("grid", Json::UInt(scan.grid as u64)));
                fields.push(("min_modulus", Json::Num(scan.min_modulus)));
                fields.push(("argmin", Json::nums(&[scan.argmin.re, scan.argmin.im])));
                fields.push(("timing_ms", Json::Num(elapsed_ms(start))));
                print!("{}", Json::Obj(fields).render());
                EXIT_OK
            }
            Err(e) => fail(&e),
        },
    }
}

pub enum EdgeSource {
    Complete,
    File(PathBuf),
}

pub enum AlphaSpec {
    Auto,
    Value(f64),
}

pub struct BuildPotentialOpts {
    pub d: usize,
    pub points: usize,
    pub edges: EdgeSource,
    pub alpha: AlphaSpec,
    pub out: Option<PathBuf>,
    pub gamma_prime: f64,
    pub mode: Mode,
}

/// Edge list files: one `i j` pair of 1-based point indices per line; blank
/// lines and `#` comments are ignored.
fn parse_edge_file(path: &Path, points: usize) -> Result<Vec<(usize, usize)>, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse_one = |tok: Option<&str>| -> Result<usize, Error> {
            tok.ok_or_else(|| Error::Parse(format!("line {}: expected \"i j\"", lineno + 1)))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
        };
        let i = parse_one(parts.next())?;
        let j = parse_one(parts.next())?;
        if parts.next().is_some() {
            return Err(Error::Parse(format!(
                "line {}: expected exactly two indices",
                lineno + 1
            )));
        }
        if i == 0 || j == 0 || i > points || j > points || i == j {
            return Err(Error::Parse(format!(
                "line {}: edge ({i}, {j}) is not a pair of distinct 1-based indices ≤ {points}",
                lineno + 1
            )));
        }
        edges.push((i.min(j) - 1, i.max(j) - 1));
    }
    Ok(edges)
}

pub fn cmd_build_potential(opts: &BuildPotentialOpts) -> i32 {
    let edges = match &opts.edges {
        EdgeSource::Complete => complete_edges(opts.points),
        EdgeSource::File(path) => match parse_edge_file(path, opts.points) {
            Ok(e) => e,
            Err(e) => return fail(&e),
        },
    };
    let cfg = match ToleranceConfig::new(opts.gamma_prime, opts.mode) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let probe = match PotentialSpec::new(opts.d, opts.points, edges, EdgeAlpha::Uniform(1.0)) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let alpha = match opts.alpha {
        AlphaSpec::Value(a) => a,
        AlphaSpec::Auto => match apps::max_alpha_admissible(&probe, &cfg) {
            Ok(a) => a,
            Err(e) => return fail(&e),
        },
    };
    let spec = probe.with_alpha(alpha);
    let inst = match build_potential_instance(&spec) {
        Ok(i) => i,
        Err(e) => return fail(&e),
    };
    let doc = instance_to_json(&inst);
    eprintln!("alpha = {}", crate::jsonfmt::fmt_f64(alpha));
    match &opts.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, doc.render()) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_PARSE;
            }
            let note = Json::Obj(vec![
                ("alpha", Json::Num(alpha)),
                ("n", Json::UInt(inst.n() as u64)),
                ("m", Json::UInt(inst.m() as u64)),
                ("out", Json::Str(path.display().to_string())),
            ]);
            print!("{}", note.render());
        }
        None => print!("{}", doc.render()),
    }
    EXIT_OK
}

pub struct FeasibilityOpts {
    pub instance: PathBuf,
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma_prime: f64,
    pub mode: Mode,
    pub backend: FeasBackend,
}

pub fn cmd_feasibility(opts: &FeasibilityOpts) -> i32 {
    let start = Instant::now();
    let inst = match load_instance(&opts.instance) {
        Ok(i) => i,
        Err(e) => return fail(&e),
    };
    let cfg = match ToleranceConfig::new(opts.gamma_prime, opts.mode) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match apps::feasibility_report(&inst, opts.alpha, opts.epsilon, &cfg, opts.backend) {
        Ok(report) => {
            let doc = Json::Obj(vec![
                ("status", Json::Str("ok".into())),
                ("score", Json::Num(report.score)),
                ("log_score", Json::Num(report.log_score)),
                ("integral", Json::Num(report.integral)),
                ("log_integral", Json::Num(report.log_integral)),
                ("v_max_log", Json::Num(report.params.log_v_max)),
                ("beta", Json::Num(report.params.beta)),
                ("t", Json::Num(report.params.t)),
                ("alpha", Json::Num(report.params.alpha)),
                ("m", Json::UInt(report.m as u64)),
                ("n", Json::UInt(report.n as u64)),
                ("backend", Json::Str(report.backend.into())),
                ("interpretation", Json::Str(report.interpretation.into())),
                (
                    "estimate",
                    report.estimate.as_ref().map_or(Json::Null, estimate_json),
                ),
                ("mc", report.mc.as_ref().map_or(Json::Null, mc_json)),
                ("timing_ms", Json::Num(elapsed_ms(start))),
            ]);
            print!("{}", doc.render());
            EXIT_OK
        }
        Err(e) => fail(&e),
    }
}
