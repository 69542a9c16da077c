//! Reading vectors, matrices, set functions and configs from disk.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use struktnorm::SetFunctionSpec;

fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    let t = text.trim();
    if t.starts_with('[') {
        return serde_json::from_str(t).context("expected a JSON array of numbers");
    }
    t.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| anyhow!("not a number: \"{s}\"")))
        .collect()
}

/// A vector given inline (`1,2,3` or `[1,2,3]`) or as a CSV/JSON file.
pub fn vector(arg: &str) -> Result<Vec<f64>> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
        // a single non-numeric first line is a header
        if let Some(first) = lines.peek() {
            if !first.trim_start().starts_with('[') && parse_numbers(first).is_err() {
                lines.next();
            }
        }
        let body: Vec<&str> = lines.collect();
        return parse_numbers(&body.join("\n")).with_context(|| format!("parsing {arg}"));
    }
    parse_numbers(arg).with_context(|| format!("\"{arg}\" is neither a file nor an inline vector"))
}

/// A numeric CSV matrix, with an optional header row.
pub fn matrix(path: &str) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {path}"))?;
    let mut rows: Vec<Vec<f64>> = vec![];
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{path}: row {}", k + 1))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if k == 0 => continue,
            Err(_) => bail!("{path}: row {} is not numeric", k + 1),
        }
    }
    let ncols = rows.first().map(Vec::len).ok_or_else(|| anyhow!("{path}: no data rows"))?;
    if let Some(k) = rows.iter().position(|r| r.len() != ncols) {
        bail!("{path}: row {} has {} columns, expected {ncols}", k + 1, rows[k].len());
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// A response vector from a one-column CSV (or any vector form).
pub fn column(arg: &str) -> Result<DVector<f64>> {
    Ok(DVector::from_vec(vector(arg)?))
}

pub fn set_function(path: &str) -> Result<SetFunctionSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    Ok(SetFunctionSpec::from_json_str(&text)?)
}

/// JSON or TOML by extension; JSON is tried for anything else.
pub fn config<T: DeserializeOwned>(path: &str) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    if path.ends_with(".toml") {
        toml::from_str(&text).with_context(|| format!("parsing {path}"))
    } else {
        serde_json::from_str(&text).with_context(|| format!("parsing {path}"))
    }
}
