//! Reading samples from text or CSV files.

use std::path::Path;

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<f64>,
    /// sha256 of the raw file bytes, lowercase hex.
    pub digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_sample(path: &Path, column: Option<&str>) -> Result<Sample, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| format!("{}: not valid UTF-8", path.display()))?;
    let values = match column {
        None => parse_lines(&text),
        Some(col) => parse_csv(&text, col),
    }
    .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(Sample {
        values,
        digest: sha256_hex(&bytes),
    })
}

/// One value per line; blank lines and `#` comments are skipped.
pub fn parse_lines(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| format!("line {}: `{t}` is not a number", i + 1))?;
        if !v.is_finite() {
            return Err(format!("line {}: `{t}` is not finite", i + 1));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err("no values found".into());
    }
    Ok(out)
}

/// Values from the named column of a headed CSV file.
pub fn parse_csv(text: &str, column: &str) -> Result<Vec<f64>, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| format!("line 1: {e}"))?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| format!("line 1: no column named `{column}`"))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = rec.get(idx).unwrap_or("");
        if field.is_empty() {
            continue;
        }
        let v: f64 = field
            .parse()
            .map_err(|_| format!("line {line}: `{field}` is not a number"))?;
        if !v.is_finite() {
            return Err(format!("line {line}: `{field}` is not finite"));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(format!("column `{column}` has no values"));
    }
    Ok(out)
}
