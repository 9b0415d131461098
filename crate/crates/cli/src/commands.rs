//! The four subcommands. Each returns a JSON report and a pass flag; errors
//! carry their exit code.

use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use qstiefel_core::fock::{FockError, QParam, RelationReport, Window};
use qstiefel_core::odqs::{check_odqs, rank_of, OdqsError};
use qstiefel_core::qgrp::{enumerate_am, to_turns, turn_distance, weyl_word, AngleVector};
use qstiefel_core::stiefel::{
    build_generators, check_relations, check_vanishing, classify, odqs_agreement, row_tuple,
    StiefelError, StiefelGenerators, StiefelParam,
};

use crate::bundle::{self, BundleInfo};
use crate::config::{self, Overrides, RawConfig, RunConfig};
use crate::report::{num, nums};
use crate::CliError;

/// The angle convention used for `t`: the level-`i` angle is `t_i`.
pub const ANGLE_CONVENTION: &str = "t_i";

pub struct Outcome {
    pub report: Value,
    pub pass: bool,
}

/// Where the generators of a `check` or `classify` run come from.
pub enum Source {
    Built,
    Bundle(BundleInfo),
}

pub fn read_config(path: Option<&Path>) -> Result<RawConfig, CliError> {
    match path {
        None => Ok(RawConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", p.display())))?;
            config::parse(&text)
        }
    }
}

pub fn read_bundle(path: &Path) -> Result<(StiefelGenerators, BundleInfo), CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Io(format!("cannot open bundle {}: {e}", path.display())))?;
    bundle::read(&mut std::io::BufReader::new(file))
}

/// Fills `n`, `m`, `q` and `D` from a bundle header; explicit values must agree.
pub fn resolve_for_bundle(mut raw: RawConfig, over: &Overrides, info: &BundleInfo) -> Result<RunConfig, CliError> {
    let n = over.n.or(raw.n);
    let m = over.m.or(raw.m);
    let q = over.q.or(raw.q);
    if n.is_some_and(|x| x != info.n) || m.is_some_and(|x| x != info.m) || q.is_some_and(|x| x != info.q) {
        return Err(CliError::Config(format!(
            "config (n, m, q) = ({n:?}, {m:?}, {q:?}) disagrees with the bundle ({}, {}, {})",
            info.n, info.m, info.q
        )));
    }
    raw.n = Some(info.n);
    raw.m = Some(info.m);
    raw.q = Some(info.q);
    let fock_dim = info.shape.iter().copied().filter(|&d| d > 1).min();
    let margin = over.margin.or(raw.margin).unwrap_or(config::DEFAULT_MARGIN);
    if let Some(d) = fock_dim {
        if d < config::MIN_CUTOFF || 2 * margin >= d {
            return Err(CliError::Truncation {
                message: format!("the bundle has Fock cutoff {d}, too small for window margin {margin}"),
                suggested: config::MIN_CUTOFF.max(2 * margin + 1),
            });
        }
    }
    if over.cutoff.is_none() && raw.cutoff.is_none() {
        raw.cutoff = fock_dim;
    }
    let cfg = raw.resolve(over)?;
    if let Some(d) = fock_dim {
        if d != cfg.cutoff {
            return Err(CliError::Config(format!("D = {} disagrees with the bundle cutoff {d}", cfg.cutoff)));
        }
    }
    Ok(cfg)
}

fn q_param(cfg: &RunConfig) -> Result<QParam, CliError> {
    QParam::new(cfg.q).map_err(|e| CliError::Config(e.to_string()))
}

/// Maps a library error to the CLI contract. With `classification` set, a
/// failed representation-theoretic step is a classification failure rather
/// than a configuration error.
fn lift(e: StiefelError, cfg: &RunConfig, classification: bool) -> CliError {
    let suggested = |d: usize| d.max(cfg.cutoff + 1);
    match e {
        StiefelError::TruncationTooSmall { suggested: s, .. } => CliError::Truncation {
            message: e.to_string(),
            suggested: suggested(s),
        },
        StiefelError::Fock(FockError::WindowTooWide { margin, .. })
        | StiefelError::Odqs(OdqsError::Fock(FockError::WindowTooWide { margin, .. })) => CliError::Truncation {
            message: e.to_string(),
            suggested: suggested(2 * margin + 1),
        },
        StiefelError::Odqs(OdqsError::TruncationTooSmall { needed, .. }) => CliError::Truncation {
            message: e.to_string(),
            suggested: suggested(needed + 2),
        },
        StiefelError::InvalidParam(_) | StiefelError::Qgrp(_) => CliError::Config(e.to_string()),
        _ if classification => CliError::Classification(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

fn param(cfg: &RunConfig) -> Result<StiefelParam, CliError> {
    let (Some(a), Some(t)) = (&cfg.a, &cfg.t) else {
        return Err(CliError::Config("a and t are required".into()));
    };
    StiefelParam::new(cfg.n, cfg.m, a.clone(), AngleVector::from_turns(t)).map_err(|e| CliError::Config(e.to_string()))
}

/// Builds the generators described by `cfg`.
pub fn generators(cfg: &RunConfig) -> Result<StiefelGenerators, CliError> {
    let p = param(cfg)?;
    cfg.check_size(p.a())?;
    build_generators(&p, q_param(cfg)?, cfg.cutoff).map_err(|e| lift(e, cfg, false))
}

fn config_echo(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn source_echo(source: &Source) -> Value {
    match source {
        Source::Built => json!({"kind": "config"}),
        Source::Bundle(info) => json!({
            "kind": "bundle",
            "version": info.version,
            "shape": info.shape,
            "dim": info.dim,
            "labeled": info.labeled,
            "encoding": info.encoding_name(),
        }),
    }
}

fn relation_table(r: &RelationReport) -> Value {
    let rows: Vec<Value> = r
        .families
        .iter()
        .map(|f| {
            json!({
                "family": f.family,
                "instances": f.instances,
                "residual": num(f.residual),
                "worst": f.worst,
                "pass": f.residual <= r.tol,
            })
        })
        .collect();
    json!({
        "margin": r.margin,
        "tol": num(r.tol),
        "max_residual": num(r.max_residual()),
        "families": rows,
        "failing": r.failing(),
        "pass": r.pass(),
    })
}

fn word_summary(cfg: &RunConfig, a: &[usize], g: &StiefelGenerators) -> Result<Value, CliError> {
    let word = weyl_word(a, cfg.n).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(json!({
        "word": word.letters(),
        "word_length": word.len(),
        "factor_count": g.frame().shape().fock_factors(),
        "ranks": StiefelParam::new(cfg.n, cfg.m, a.to_vec(), AngleVector::ones(cfg.m))
            .map_err(|e| CliError::Config(e.to_string()))?
            .ranks(),
    }))
}

pub fn build(cfg: &RunConfig) -> Result<(Outcome, StiefelGenerators), CliError> {
    let g = generators(cfg)?;
    let a = cfg.a.as_deref().unwrap_or_default();
    let encoding = bundle::Encoding::choose(&g);
    let report = json!({
        "command": "build",
        "config": config_echo(cfg),
        "angle_convention": ANGLE_CONVENTION,
        "representation": word_summary(cfg, a, &g)?,
        "bundle": {
            "dim": g.dim(),
            "shape": g.frame().shape().dims(),
            "operators": g.n() * g.m(),
            "encoding": match encoding {
                bundle::Encoding::Dense => "dense",
                bundle::Encoding::Coo => "coo",
            },
        },
        "verdict": "pass",
    });
    Ok((Outcome { report, pass: true }, g))
}

pub fn check(cfg: &RunConfig, g: &StiefelGenerators, source: &Source) -> Result<Outcome, CliError> {
    let w = Window::new(cfg.margin);
    let rel = check_relations(g, w, cfg.tol_relation).map_err(|e| lift(e, cfg, false))?;
    let mut pass = rel.pass();
    let mut report = json!({
        "command": "check",
        "config": config_echo(cfg),
        "input": source_echo(source),
        "dim": g.dim(),
        "relations": relation_table(&rel),
    });
    if g.m() == 1 {
        let tuple = row_tuple(g, g.n()).map_err(|e| lift(e, cfg, false))?;
        let odqs = check_odqs(&tuple, w, cfg.tol_relation).map_err(|e| lift(e.into(), cfg, false))?;
        let agreement = odqs_agreement(g, w, cfg.tol_relation).map_err(|e| lift(e, cfg, false))?;
        let rank = match rank_of(&tuple, w, cfg.tol_relation) {
            Ok(r) => json!(r),
            Err(e) => json!({"error": e.to_string()}),
        };
        pass &= odqs.pass();
        report["odqs_cross_check"] = json!({
            "row": g.n(),
            "relations": relation_table(&odqs),
            "rank": rank,
            "engine_disagreement": num(agreement),
        });
    }
    report["verdict"] = json!(if pass { "pass" } else { "fail" });
    Ok(Outcome { report, pass })
}

pub fn classify_cmd(cfg: &RunConfig, g: &StiefelGenerators, source: &Source) -> Result<Outcome, CliError> {
    let w = Window::new(cfg.margin);
    let rel = check_relations(g, w, cfg.tol_relation).map_err(|e| lift(e, cfg, true))?;
    if !rel.pass() {
        return Err(CliError::Classification(format!(
            "input violates the relations: {}",
            rel.failing().join(", ")
        )));
    }
    let (cls, tower) = classify(g, w, cfg.tol_relation, cfg.tol_eig).map_err(|e| lift(e, cfg, true))?;
    let vanishing = check_vanishing(g, &tower, w).map_err(|e| lift(e, cfg, true))?;
    let turns = cls.t.turns();
    let levels: Vec<Value> = tower
        .levels
        .iter()
        .map(|l| {
            json!({
                "level": l.level,
                "rank": l.rank,
                "c": l.c,
                "t_turns": num(to_turns(l.angle)),
                "columns": l.columns,
                "space_dim": l.tuple.dim(),
                "max_residual": num(l.relations.max_residual()),
            })
        })
        .collect();
    let kernels: Vec<Value> = vanishing
        .kernels
        .iter()
        .map(|k| json!({"level": k.level, "min_singular": num(k.min_singular), "threshold": num(k.threshold)}))
        .collect();
    let vanishing_pass = vanishing.pass(cfg.tol_relation);
    let mut pass = vanishing_pass;
    let mut report = json!({
        "command": "classify",
        "config": config_echo(cfg),
        "input": source_echo(source),
        "angle_convention": ANGLE_CONVENTION,
        "classification": {
            "a": cls.a,
            "t_turns": nums(&turns),
            "multiplicity": cls.multiplicity,
        },
        "tower": levels,
        "vanishing": {
            "chosen_columns": num(vanishing.chosen_columns),
            "low_columns": num(vanishing.low_columns),
            "ground_state": num(vanishing.ground_state),
            "kernels": kernels,
            "instances": vanishing.instances,
            "pass": vanishing_pass,
        },
    });
    if let (Some(a), Some(t)) = (&cfg.a, &cfg.t) {
        let err = turns
            .iter()
            .zip(t)
            .map(|(x, y)| turn_distance(*x, *y))
            .fold(0.0, f64::max);
        let ok = &cls.a == a && turns.len() == t.len() && err <= cfg.tol_eig;
        pass &= ok;
        report["round_trip"] = json!({
            "expected_a": a,
            "expected_t_turns": nums(t),
            "max_turn_error": num(err),
            "pass": ok,
        });
    }
    report["verdict"] = json!(if pass { "pass" } else { "fail" });
    Ok(Outcome { report, pass })
}

/// Number of worker threads from `QSTIEFEL_THREADS`, if set.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("QSTIEFEL_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Some(k)),
            _ => Err(CliError::Config(format!("QSTIEFEL_THREADS = {s:?} is not a positive integer"))),
        },
    }
}

fn atlas_row(cfg: &RunConfig, a: &[usize]) -> Result<(Value, bool), CliError> {
    let mut one = cfg.clone();
    one.a = Some(a.to_vec());
    one.t = Some(vec![0.0; cfg.m]);
    let g = generators(&one)?;
    let rel = check_relations(&g, Window::new(cfg.margin), cfg.tol_relation).map_err(|e| lift(e, cfg, false))?;
    let summary = word_summary(cfg, a, &g)?;
    let expected: usize = a.iter().enumerate().map(|(j, &aj)| cfg.n - j - aj).sum();
    let length_ok = summary["word_length"] == json!(expected) && summary["factor_count"] == json!(expected);
    let pass = rel.pass() && length_ok;
    let mut row = summary;
    row["a"] = json!(a);
    row["expected_word_length"] = json!(expected);
    row["dim"] = json!(g.dim());
    row["max_residual"] = num(rel.max_residual());
    row["failing"] = json!(rel.failing());
    row["verdict"] = json!(if pass { "pass" } else { "fail" });
    Ok((row, pass))
}

pub fn atlas(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let all = enumerate_am(cfg.n, cfg.m);
    for a in &all {
        cfg.check_size(a)?;
    }
    let run = || all.par_iter().map(|a| atlas_row(cfg, a)).collect::<Vec<_>>();
    let results = match thread_cap()? {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {k} threads: {e}")))?
            .install(run),
        None => run(),
    };
    let mut rows = Vec::with_capacity(results.len());
    let mut pass = true;
    for r in results {
        let (row, ok) = r?;
        pass &= ok;
        rows.push(row);
    }
    let mut echo = cfg.clone();
    echo.a = None;
    echo.t = None;
    let report = json!({
        "command": "atlas",
        "config": config_echo(&echo),
        "angle_convention": ANGLE_CONVENTION,
        "count": rows.len(),
        "rows": rows,
        "verdict": if pass { "pass" } else { "fail" },
    });
    Ok(Outcome { report, pass })
}
