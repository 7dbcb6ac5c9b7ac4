//! `hyperfit`: ordered-median hyperplane fitting from the command line.
//!
//! Exit codes: 0 success, 1 a fit without optimality certificate or a failed
//! verification, 2 input error.

mod commands;
mod config;
mod error;
mod input;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperfit_core::evaluation::Corruption;
use hyperfit_core::SolverHints;
use serde_json::{json, Value};

use commands::{certified, document, Job, RunSettings};
use config::{CriterionSpec, Residual, GRID_CRITERIA, GRID_RESIDUALS};
use error::CliError;
use input::{read_table, Table};

#[derive(Parser)]
#[command(name = "hyperfit", version, about = "Fit hyperplanes under ordered-median criteria")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one criterion/residual combination.
    Fit(FitArgs),
    /// Fit the full criterion × residual grid.
    Batch(BatchArgs),
    /// k-fold cross validation of the held-out ε₉₀.
    Cv(CvArgs),
    /// Generate a corrupted synthetic sample.
    Gen(GenArgs),
    /// Recompute Φ and GCoD of saved results from their coefficients.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct InputArgs {
    /// CSV file with a header row; the last column is the response.
    input: PathBuf,
    /// Response column (header name or 1-based index) if not the last.
    #[arg(long)]
    dependent_col: Option<String>,
}

#[derive(Args)]
struct ModelArgs {
    /// SUM, MAX, MED, kC, AkC, SOS, 1.5SUM, LQS, LMS or LTS.
    #[arg(long, default_value = "SUM")]
    criterion: String,
    /// K for kC/AkC (count ≥ 1 or fraction < 1), r for LQS, α for LTS.
    #[arg(long)]
    param: Option<f64>,
    /// vertical, l1, linf, ltau:τ (or l<τ>), block:<vertex file>.
    #[arg(long, default_value = "vertical")]
    residual: String,
    /// Norm index for `--residual ltau`.
    #[arg(long)]
    tau: Option<String>,
}

#[derive(Args)]
struct HintArgs {
    /// Polygon vertices approximating an ℓτ ball.
    #[arg(long = "N", default_value_t = 320)]
    n_vertices: usize,
    #[arg(long, default_value_t = 16)]
    multistart: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Branch-and-bound node budget.
    #[arg(long, default_value_t = 100_000)]
    node_limit: usize,
}

impl HintArgs {
    fn hints(&self) -> SolverHints {
        SolverHints {
            approx_vertices: self.n_vertices,
            multistart: self.multistart,
            seed: self.seed,
            node_limit: self.node_limit,
            ..SolverHints::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Include wall-clock seconds (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct StripArgs {
    /// Strip widths for coverage fractions.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    strip_eps: Vec<f64>,
    /// Residual measuring strip width (default: the fitting residual).
    #[arg(long)]
    strip_residual: Option<String>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    hints: HintArgs,
    #[command(flatten)]
    strip: StripArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Also write the LP/MILP model(s) to this path.
    #[arg(long)]
    emit_lp: Option<PathBuf>,
    /// Run k-fold cross validation instead of a single fit.
    #[arg(long)]
    cv: Option<usize>,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    hints: HintArgs,
    #[command(flatten)]
    strip: StripArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Criteria to run (default: the seven grid criteria).
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<String>,
    /// Residuals to run (default: the six grid residuals).
    #[arg(long, value_delimiter = ',')]
    residuals: Vec<String>,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    hints: HintArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Number of folds.
    #[arg(long, default_value_t = 7)]
    cv: usize,
    /// Cross-validate the whole criterion × residual grid.
    #[arg(long)]
    all: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorruptionArg {
    X,
    Y,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Dimension including the response.
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, value_enum, default_value = "y")]
    corruption: CorruptionArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination (stdout if absent; the summary then goes to stderr).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    input: InputArgs,
    /// JSON produced by `fit` or `batch`.
    #[arg(long)]
    record: PathBuf,
    /// Relative tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let body = json!({"schema": commands::SCHEMA, "error": {"kind": e.kind(), "message": e.to_string()}});
            eprintln!("{body}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(args: &InputArgs) -> Result<Table, CliError> {
    read_table(&args.input, args.dependent_col.as_deref())
}

fn settings(
    input: &InputArgs,
    hints: &HintArgs,
    strip: Option<&StripArgs>,
    output: &OutputArgs,
) -> Result<RunSettings, CliError> {
    Ok(RunSettings {
        input: input.input.display().to_string(),
        hints: hints.hints(),
        strip_eps: strip.map_or_else(|| vec![10.0], |s| s.strip_eps.clone()),
        strip_residual: strip
            .and_then(|s| s.strip_residual.as_deref())
            .map(|r| Residual::parse(r, None))
            .transpose()?,
        timing: output.timing,
    })
}

fn job(model: &ModelArgs) -> Result<Job, CliError> {
    Ok(Job {
        criterion: CriterionSpec::parse(&model.criterion, model.param)?,
        residual: Residual::parse(&model.residual, model.tau.as_deref())?,
    })
}

fn grid(criteria: &[String], residuals: &[String]) -> Result<Vec<Job>, CliError> {
    let cs: Vec<CriterionSpec> = if criteria.is_empty() {
        GRID_CRITERIA.iter().map(|c| CriterionSpec::parse(c, None)).collect::<Result<_, _>>()?
    } else {
        criteria.iter().map(|c| CriterionSpec::parse(c, None)).collect::<Result<_, _>>()?
    };
    let names: Vec<&str> =
        if residuals.is_empty() { GRID_RESIDUALS.to_vec() } else { residuals.iter().map(String::as_str).collect() };
    let rs: Vec<Residual> = names.iter().map(|r| Residual::parse(r, None)).collect::<Result<_, _>>()?;
    Ok(cs.iter().flat_map(|c| rs.iter().map(|r| Job { criterion: *c, residual: r.clone() })).collect())
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Input(format!("stdout: {e}")))
        }
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Fit(a) => {
            let table = load(&a.input)?;
            let job = job(&a.model)?;
            let settings = settings(&a.input, &a.hints, Some(&a.strip), &a.output)?;
            if let Some(k) = a.cv {
                return cv(&[job], &settings, &table, k, &a.output);
            }
            if let Some(path) = &a.emit_lp {
                for p in commands::emit_lp(&job, &table.dataset, path)? {
                    eprintln!("wrote {}", p.display());
                }
            }
            let outcome = commands::run_fit(&job, &settings, &table)?;
            let text = match a.output.format {
                Format::Json => json_text(&document("fit", outcome.record)),
                Format::Csv => commands::records_to_csv(&[outcome.record])?,
            };
            write_out(a.output.output.as_deref(), &text)?;
            if certified(outcome.tag) {
                Ok(0)
            } else {
                let e = CliError::NotOptimal(outcome.tag.as_str());
                eprintln!("warning: {e}");
                Ok(e.exit_code())
            }
        }
        Command::Batch(a) => {
            let table = load(&a.input)?;
            let jobs = grid(&a.criteria, &a.residuals)?;
            let settings = settings(&a.input, &a.hints, Some(&a.strip), &a.output)?;
            let rows = commands::run_grid(&jobs, &settings, &table);
            let text = match a.output.format {
                Format::Json => json_text(&document("batch", json!({"rows": rows}))),
                Format::Csv => commands::records_to_csv(&rows)?,
            };
            write_out(a.output.output.as_deref(), &text)?;
            Ok(0)
        }
        Command::Cv(a) => {
            let table = load(&a.input)?;
            let jobs = if a.all { grid(&[], &[])? } else { vec![job(&a.model)?] };
            let settings = settings(&a.input, &a.hints, None, &a.output)?;
            cv(&jobs, &settings, &table, a.cv, &a.output)
        }
        Command::Gen(a) => {
            let corruption = match a.corruption {
                CorruptionArg::X => Corruption::X,
                CorruptionArg::Y => Corruption::Y,
            };
            let (csv, corrupted) = commands::run_gen(a.n, a.d, corruption, a.seed)?;
            let summary = json!({
                "schema": commands::SCHEMA,
                "command": "gen",
                "n": a.n,
                "d": a.d,
                "seed": a.seed,
                "corrupted": corrupted,
            });
            match &a.output {
                Some(p) => {
                    write_out(Some(p), &csv)?;
                    write_out(None, &json_text(&summary))?;
                }
                None => {
                    write_out(None, &csv)?;
                    eprintln!("{summary}");
                }
            }
            Ok(0)
        }
        Command::Verify(a) => {
            let table = load(&a.input)?;
            let text = fs::read_to_string(&a.record).map_err(|e| CliError::io(&a.record, e))?;
            let doc: Value =
                serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", a.record.display())))?;
            let (checked, failures) = commands::run_verify(&doc, &table, a.tolerance)?;
            let ok = failures.is_empty();
            let report = document("verify", json!({"checked": checked, "failures": failures}));
            write_out(None, &json_text(&report))?;
            if ok {
                Ok(0)
            } else {
                let e = CliError::Verify(format!(
                    "{} of {checked} records differ",
                    report["failures"].as_array().map_or(0, Vec::len)
                ));
                eprintln!("{e}");
                Ok(e.exit_code())
            }
        }
    }
}

fn cv(jobs: &[Job], settings: &RunSettings, table: &Table, k: usize, output: &OutputArgs) -> Result<u8, CliError> {
    let rows = commands::run_cv(jobs, settings, table, k)?;
    let text = match output.format {
        Format::Json => json_text(&document("cv", json!({"rows": rows}))),
        Format::Csv => commands::cv_to_csv(&rows)?,
    };
    write_out(output.output.as_deref(), &text)?;
    Ok(0)
}
