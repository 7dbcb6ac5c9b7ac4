//! CSV datasets and block-norm vertex files.

use std::fs;
use std::path::Path;

use hyperfit_core::{BlockNorm, Dataset};

use crate::error::CliError;

/// A dataset with its column names, response last.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub dataset: Dataset,
}

/// Reads a CSV file with a header row. Every field must be numeric; the
/// response is the last column unless `dependent` names another one (by
/// header or 1-based position), which is then moved to the end.
pub fn read_table(path: &Path, dependent: Option<&str>) -> Result<Table, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_table(&text, dependent).map_err(|msg| CliError::Input(format!("{}: {msg}", path.display())))
}

pub fn parse_table(text: &str, dependent: Option<&str>) -> Result<Table, String> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut headers: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(str::to_owned).collect();
    let width = headers.len();
    if width < 2 {
        return Err("need at least two columns".into());
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(format!("line {line}: expected {width} fields, found {}", record.len()));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(k, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("line {line}: column {} ({:?}) is not a finite number: {field:?}", k + 1, headers[k])),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("no data rows".into());
    }
    if let Some(dep) = dependent {
        let col = match headers.iter().position(|h| h == dep) {
            Some(c) => c,
            None => match dep.parse::<usize>() {
                Ok(k) if (1..=width).contains(&k) => k - 1,
                _ => return Err(format!("no column {dep:?}")),
            },
        };
        let h = headers.remove(col);
        headers.push(h);
        for row in &mut rows {
            let v = row.remove(col);
            row.push(v);
        }
    }
    let dataset = Dataset::from_rows(rows).map_err(|e| e.to_string())?;
    Ok(Table { headers, dataset })
}

/// Block-norm unit ball from a vertex file: one vertex per line as
/// whitespace-separated reals; blank lines and `#` comments are skipped.
/// Missing reflections `−v` are added, with a warning on stderr.
pub fn read_block_norm(path: &Path) -> Result<BlockNorm, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (vertices, added) =
        parse_vertices(&text).map_err(|msg| CliError::Input(format!("{}: {msg}", path.display())))?;
    if added > 0 {
        eprintln!("warning: {}: added {added} reflected vertices to make the ball symmetric", path.display());
    }
    BlockNorm::from_vertices(vertices).map_err(CliError::Core)
}

/// Parsed vertices with reflections completed, and how many were added.
pub fn parse_vertices(text: &str) -> Result<(Vec<Vec<f64>>, usize), String> {
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let v = content
            .split_whitespace()
            .map(|t| t.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| format!("line {}: not a list of numbers", k + 1))?;
        if let Some(first) = vertices.first() {
            if first.len() != v.len() {
                return Err(format!("line {}: expected {} coordinates, found {}", k + 1, first.len(), v.len()));
            }
        }
        vertices.push(v);
    }
    if vertices.is_empty() {
        return Err("no vertices".into());
    }
    let scale = vertices.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * scale);
    let mut added = 0;
    for i in 0..vertices.len() {
        let neg: Vec<f64> = vertices[i].iter().map(|x| -x).collect();
        if !vertices.iter().any(|w| same(w, &neg)) {
            vertices.push(neg);
            added += 1;
        }
    }
    Ok((vertices, added))
}
