//! CSV and JSON input/output.
//!
//! Floats are written as `{:.16e}` (17 significant digits, no locale) so the
//! same run produces byte-identical files on every platform.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Explicit flag first, then the output extension, then `fallback`.
    pub fn resolve(flag: Option<Format>, out: Option<&Path>, fallback: Format) -> Format {
        if let Some(f) = flag {
            return f;
        }
        match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => fallback,
        }
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header plus string cells, written through the `csv` crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner()?)
    }

    /// Array of objects; numeric-looking cells become JSON numbers.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let obj = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(h, v)| (h.clone(), cell_value(v)))
                    .collect::<serde_json::Map<_, _>>();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

fn cell_value(v: &str) -> serde_json::Value {
    if let Ok(i) = v.parse::<i64>() {
        return i.into();
    }
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => serde_json::Number::from_f64(x).map_or_else(|| v.into(), Into::into),
        _ => v.into(),
    }
}

/// Column names `x1 .. xd`.
pub fn coord_header(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

/// Points with an optional weight column.
pub fn points_table(points: &[Vec<f64>], weights: Option<&[f64]>) -> Table {
    let d = points.first().map_or(0, |p| p.len());
    let mut header = coord_header(d);
    if weights.is_some() {
        header.push("w".into());
    }
    let mut t = Table::new(&header);
    for (i, p) in points.iter().enumerate() {
        let mut row: Vec<String> = p.iter().map(|v| num(*v)).collect();
        if let Some(w) = weights {
            row.push(num(w[i]));
        }
        t.push(row);
    }
    t
}

/// Writes to `path`, or stdout when `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            Ok(out.flush()?)
        }
    }
}

pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// A table in the requested format.
pub fn emit_table(path: Option<&Path>, format: Format, table: &Table) -> Result<()> {
    match format {
        Format::Csv => emit(path, &table.to_csv()?),
        Format::Json => emit(path, &json_bytes(&table.to_json())?),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("{}: row {} is not numeric", path.display(), line + 1))?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Reads columns `x1 .. xd` and an optional `w` (or `weight`) column.
pub fn read_points(path: &Path) -> Result<(Vec<Vec<f64>>, Option<Vec<f64>>)> {
    let (header, rows) = read_csv(path)?;
    let coords: Vec<usize> = (1..)
        .map_while(|i| header.iter().position(|h| *h == format!("x{i}")))
        .collect();
    if coords.is_empty() {
        bail!("{}: expected columns x1, x2, ...", path.display());
    }
    let wcol = header.iter().position(|h| h == "w" || h == "weight");
    let points = rows.iter().map(|r| coords.iter().map(|&c| r[c]).collect()).collect();
    let weights = wcol.map(|c| rows.iter().map(|r| r[c]).collect());
    Ok((points, weights))
}

/// Column `f` if present, else the first column.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let (header, rows) = read_csv(path)?;
    let col = header.iter().position(|h| h == "f").unwrap_or(0);
    Ok(rows.iter().map(|r| r[col]).collect())
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn format_resolution() {
        let p = Path::new("a/sel.json");
        assert_eq!(Format::resolve(None, Some(p), Format::Csv), Format::Json);
        assert_eq!(Format::resolve(Some(Format::Csv), Some(p), Format::Json), Format::Csv);
        assert_eq!(Format::resolve(None, None, Format::Json), Format::Json);
    }

    #[test]
    fn points_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let pts = vec![vec![0.25, -1.0 / 3.0], vec![1e-300, 0.5]];
        let t = points_table(&pts, Some(&[0.4, 0.6]));
        emit(Some(&path), &t.to_csv().unwrap()).unwrap();
        let (back, w) = read_points(&path).unwrap();
        assert_eq!(back, pts);
        assert_eq!(w.unwrap(), vec![0.4, 0.6]);
    }

    #[test]
    fn json_cells_are_typed() {
        let mut t = Table::new(&["i", "v", "s"]);
        t.push(vec!["3".into(), num(0.5), "qr".into()]);
        assert_eq!(t.to_json(), serde_json::json!([{"i": 3, "v": 0.5, "s": "qr"}]));
    }
}
