//! The subcommands, producing JSON values or CSV tables.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use hyperfit_core::evaluation::{kfold_cv, strip_metrics, synthetic_generate, Corruption, FitRequest};
use hyperfit_core::geometry::residuals;
use hyperfit_core::omp1d::gcod;
use hyperfit_core::solvers::{disjunct_models, Formulation, SolverTag};
use hyperfit_core::{fit, Dataset, Hyperplane, SolverHints};
use serde_json::{json, Value};

use crate::config::{CriterionSpec, Residual};
use crate::error::CliError;
use crate::input::Table;

pub const SCHEMA: &str = "1";

/// One fit configuration.
#[derive(Debug, Clone)]
pub struct Job {
    pub criterion: CriterionSpec,
    pub residual: Residual,
}

/// Settings shared by every fit of a run.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub input: String,
    pub hints: SolverHints,
    pub strip_eps: Vec<f64>,
    /// Residual for the strip metrics; the fitting residual when `None`.
    pub strip_residual: Option<Residual>,
    pub timing: bool,
}

/// A finished fit: the JSON record and whether optimality was proven.
pub struct Outcome {
    pub record: Value,
    pub tag: SolverTag,
}

fn echo(job: &Job, settings: &RunSettings, table: &Table) -> Value {
    let h = &settings.hints;
    json!({
        "input": settings.input,
        "columns": table.headers,
        "n": table.dataset.len(),
        "d": table.dataset.dim(),
        "criterion": job.criterion.name(),
        "param": job.criterion.param(),
        "residual": job.residual.label(),
        "N": h.approx_vertices,
        "multistart": h.multistart,
        "seed": h.seed,
        "node_limit": h.node_limit,
    })
}

pub fn run_fit(job: &Job, settings: &RunSettings, table: &Table) -> Result<Outcome, CliError> {
    let data = &table.dataset;
    let criterion = job.criterion.build(data.len())?;
    let norm = job.residual.norm()?;
    let started = Instant::now();
    let r = fit(data, &criterion, &norm, &settings.hints)?;
    let elapsed = started.elapsed().as_secs_f64();

    let strip_norm = match &settings.strip_residual {
        Some(res) => res.norm()?,
        None => norm,
    };
    let strip = strip_metrics(data.points(), &r.hyperplane, &strip_norm, &settings.strip_eps)?;
    let vertical = r.hyperplane.vertical_form().ok();
    let mut record = echo(job, settings, table);
    let fields = json!({
        "status": "ok",
        "beta": r.hyperplane.beta(),
        "beta_vertical": vertical.as_ref().map(Hyperplane::beta),
        "phi": r.phi,
        "gcod": r.gcod,
        "bounds": r.bounds.map(|(lo, hi)| [lo, hi]),
        "sd": r.sd,
        "strip": {
            "residual": settings.strip_residual.as_ref().unwrap_or(&job.residual).label(),
            "coverage": strip.coverage.iter().map(|(e, c)| json!({"eps": e, "fraction": c})).collect::<Vec<_>>(),
            "eps90": strip.eps90,
        },
        "tag": r.tag.as_str(),
        "subproblems": r.subproblems,
    });
    merge(&mut record, fields);
    if settings.timing {
        record["seconds"] = json!(elapsed);
    }
    Ok(Outcome { record, tag: r.tag })
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

/// Whether a tag proves optimality of the model that was solved (descent
/// counts: its convex problems are solved to tolerance).
pub fn certified(tag: SolverTag) -> bool {
    tag.is_exact() || tag == SolverTag::Descent
}

/// Fits every job, in parallel, keeping the job order. Failures become
/// records with `"status": "error"`.
pub fn run_grid(jobs: &[Job], settings: &RunSettings, table: &Table) -> Vec<Value> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Value>>> = Mutex::new(vec![None; jobs.len()]);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let record = match run_fit(job, settings, table) {
                    Ok(o) => o.record,
                    Err(e) => {
                        let mut rec = echo(job, settings, table);
                        merge(&mut rec, json!({"status": "error", "error": e.to_string()}));
                        rec
                    }
                };
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(record);
            });
        }
    });
    slots.into_inner().expect("workers joined").into_iter().map(|r| r.expect("every job ran")).collect()
}

pub fn document(command: &str, body: Value) -> Value {
    let mut doc = json!({"schema": SCHEMA, "command": command});
    merge(&mut doc, body);
    doc
}

/// Flat CSV rows for fit and batch records.
pub fn records_to_csv(records: &[Value]) -> Result<String, CliError> {
    let dim = records.iter().filter_map(|r| r["d"].as_u64()).max().unwrap_or(0) as usize;
    let eps: Vec<f64> = records
        .iter()
        .find_map(|r| r["strip"]["coverage"].as_array())
        .map(|c| c.iter().filter_map(|x| x["eps"].as_f64()).collect())
        .unwrap_or_default();
    let mut header: Vec<String> = ["criterion", "param", "residual", "status", "tag", "phi", "gcod", "lower", "upper"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..=dim).map(|k| format!("beta{k}")));
    header.extend((0..=dim).map(|k| format!("beta_vertical{k}")));
    header.extend(eps.iter().map(|e| format!("coverage@{e}")));
    header.extend(["eps90", "seconds", "error"].map(String::from));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(|e| CliError::Input(e.to_string()))?;
    let text = |v: &Value| match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    for r in records {
        let mut row = vec![
            text(&r["criterion"]),
            text(&r["param"]),
            text(&r["residual"]),
            text(&r["status"]),
            text(&r["tag"]),
            text(&r["phi"]),
            text(&r["gcod"]),
            text(&r["bounds"][0]),
            text(&r["bounds"][1]),
        ];
        for key in ["beta", "beta_vertical"] {
            row.extend((0..=dim).map(|k| text(&r[key][k])));
        }
        let cov = &r["strip"]["coverage"];
        row.extend((0..eps.len()).map(|k| text(&cov[k]["fraction"])));
        row.extend([text(&r["strip"]["eps90"]), text(&r["seconds"]), text(&r["error"])]);
        w.write_record(&row).map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

/// Writes the LP model of every slice; several models get `_k` suffixes.
pub fn emit_lp(job: &Job, data: &Dataset, path: &Path) -> Result<Vec<PathBuf>, CliError> {
    let criterion = job.criterion.build(data.len())?;
    let models = disjunct_models(data, &criterion, &job.residual.norm()?, Formulation::Compact)?;
    let paths: Vec<PathBuf> = if models.len() == 1 {
        vec![path.to_path_buf()]
    } else {
        let stem = path.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
        let ext = path.extension().map_or("lp".into(), |s| s.to_string_lossy().into_owned());
        (0..models.len()).map(|k| path.with_file_name(format!("{stem}_{k}.{ext}"))).collect()
    };
    for (m, p) in models.iter().zip(&paths) {
        hyperfit_lp::export_lp_file(m, p).map_err(|e| CliError::io(p, e))?;
    }
    Ok(paths)
}

pub fn run_cv(jobs: &[Job], settings: &RunSettings, table: &Table, k: usize) -> Result<Vec<Value>, CliError> {
    jobs.iter()
        .map(|job| {
            let request = FitRequest {
                criterion: job.criterion.build(table.dataset.len())?,
                norm: job.residual.norm()?,
                hints: settings.hints.clone(),
            };
            let cv = kfold_cv(&table.dataset, k, &request, settings.hints.seed)?;
            let mut rec = echo(job, settings, table);
            merge(
                &mut rec,
                json!({
                    "k": k,
                    "fold_sizes": cv.folds.iter().map(Vec::len).collect::<Vec<_>>(),
                    "eps90": cv.eps90,
                    "min": cv.min,
                    "max": cv.max,
                    "median": cv.median,
                    "mean": cv.mean,
                }),
            );
            Ok(rec)
        })
        .collect()
}

pub fn cv_to_csv(records: &[Value]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(["criterion", "param", "residual", "k", "min", "max", "median", "mean"]).map_err(err)?;
    for r in records {
        let row: Vec<String> = ["criterion", "param", "residual", "k", "min", "max", "median", "mean"]
            .iter()
            .map(|key| match &r[*key] {
                Value::Null => String::new(),
                Value::String(s) => s.clone(),
                v => v.to_string(),
            })
            .collect();
        w.write_record(&row).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

/// Synthetic sample as CSV (header `x1,…,x{d-1},y`) plus the corrupted rows.
pub fn run_gen(n: usize, d: usize, corruption: Corruption, seed: u64) -> Result<(String, Vec<usize>), CliError> {
    let s = synthetic_generate(n, d, corruption, seed)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Input(e.to_string());
    let mut header: Vec<String> = (1..d).map(|k| format!("x{k}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(err)?;
    for row in &s.rows {
        w.write_record(row.iter().map(f64::to_string)).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok((String::from_utf8(bytes).expect("CSV of UTF-8 fields"), s.corrupted))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Re-evaluates `Φ` and GCoD of every successful record from its `β`.
/// Returns the number of records checked and the mismatches.
pub fn run_verify(doc: &Value, table: &Table, rel: f64) -> Result<(usize, Vec<Value>), CliError> {
    let records: Vec<&Value> = match doc["rows"].as_array() {
        Some(rows) => rows.iter().collect(),
        None => vec![doc],
    };
    let data = &table.dataset;
    let mut checked = 0;
    let mut failures = Vec::new();
    for r in records {
        if r["status"] != "ok" {
            continue;
        }
        let field = |k: &str| CliError::Input(format!("record lacks a valid {k:?}"));
        let name = r["criterion"].as_str().ok_or_else(|| field("criterion"))?;
        let spec = CriterionSpec::parse(name, r["param"].as_f64())?;
        let residual = Residual::parse(r["residual"].as_str().ok_or_else(|| field("residual"))?, None)?;
        let beta: Vec<f64> =
            r["beta"].as_array().and_then(|b| b.iter().map(Value::as_f64).collect()).ok_or_else(|| field("beta"))?;
        let criterion = spec.build(data.len())?;
        let norm = residual.norm()?;
        let h = Hyperplane::new(beta)?;
        let phi = criterion.evaluate(&residuals(&h, data.points(), &norm)?)?;
        let g = gcod(phi, data, &criterion, &norm).ok();
        checked += 1;
        let want_phi = r["phi"].as_f64().ok_or_else(|| field("phi"))?;
        let gcod_ok = match (g, r["gcod"].as_f64()) {
            (Some(a), Some(b)) => close(a, b, rel) || (a - b).abs() <= rel,
            (None, None) => true,
            _ => false,
        };
        if !close(phi, want_phi, rel) || !gcod_ok {
            failures.push(json!({
                "criterion": name,
                "residual": residual.label(),
                "phi": want_phi,
                "phi_recomputed": phi,
                "gcod": r["gcod"],
                "gcod_recomputed": g,
            }));
        }
    }
    Ok((checked, failures))
}
