//! Tabular artifacts and ψ grids.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use qsym_core::gs::Grid2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Shortest round-trip text, in exponent form outside [1e-4, 1e15).
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// A numeric table with string metadata, written as CSV or JSON.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Vec<(String, String)>,
    /// Set when the run failed and the table is partial.
    pub failure: Option<String>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), ..Default::default() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn meta_f64(&mut self, key: &str, value: f64) {
        self.meta(key, fmt_f64(value));
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Write `<dir>/<stem>.<ext>`.
    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> io::Result<()> {
        let path = dir.join(format!("{stem}.{}", format.ext()));
        match format {
            Format::Csv => fs::write(path, self.to_csv()?),
            Format::Json => fs::write(path, self.to_json()),
        }
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut out = Vec::new();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.columns)?;
            for row in &self.rows {
                w.write_record(row.iter().map(|x| fmt_f64(*x)))?;
            }
            w.flush()?;
        }
        if let Some(f) = &self.failure {
            writeln!(out, "# FAILED: {f}")?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let meta: Map<String, Value> = self.metadata.iter().map(|(k, v)| (k.clone(), Value::from(v.as_str()))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(|x| if x.is_finite() { json!(x) } else { Value::Null }).collect()))
            .collect();
        let doc = json!({
            "metadata": meta,
            "status": if self.failure.is_some() { "failed" } else { "complete" },
            "error": self.failure,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serialises");
        s.push('\n');
        s
    }
}

#[derive(Serialize)]
struct GridHeader<'a> {
    schema_version: u32,
    nr: usize,
    nz: usize,
    r: [f64; 2],
    zeta: [f64; 2],
    dtype: &'static str,
    /// Node (i, j) is value number j·nr + i.
    layout: &'static str,
    data_file: &'a str,
    metadata: &'a [(String, String)],
}

/// Write a nodal ψ grid as `<stem>.csv` (r, zeta, psi rows) or as `<stem>.json` plus raw
/// little-endian f64 values in `<stem>.bin`.
pub fn write_grid(dir: &Path, stem: &str, format: Format, grid: &Grid2D, psi: &[f64], metadata: &[(String, String)]) -> io::Result<()> {
    match format {
        Format::Csv => {
            let mut t = Table::new(&["r", "zeta", "psi"]);
            t.metadata = metadata.to_vec();
            for j in 0..grid.nz {
                for i in 0..grid.nr {
                    t.push(vec![grid.r(i), grid.zeta(j), psi[grid.index(i, j)]]);
                }
            }
            t.write(dir, stem, Format::Csv)
        }
        Format::Json => {
            let bin = format!("{stem}.bin");
            let header = GridHeader {
                schema_version: crate::report::SCHEMA_VERSION,
                nr: grid.nr,
                nz: grid.nz,
                r: [grid.r_min, grid.r_max],
                zeta: [grid.zeta_min, grid.zeta_max],
                dtype: "f64le",
                layout: "row j*nr + i (zeta outer, r inner)",
                data_file: &bin,
                metadata,
            };
            let mut s = serde_json::to_string_pretty(&header).expect("header serialises");
            s.push('\n');
            fs::write(dir.join(format!("{stem}.json")), s)?;
            let bytes: Vec<u8> = psi.iter().flat_map(|v| v.to_le_bytes()).collect();
            fs::write(dir.join(bin), bytes)
        }
    }
}

/// Read back a grid written in the JSON + binary form.
pub fn read_grid_bin(dir: &Path, stem: &str) -> io::Result<(usize, usize, Vec<f64>)> {
    let header: Value = serde_json::from_slice(&fs::read(dir.join(format!("{stem}.json")))?)?;
    let get = |k: &str| header[k].as_u64().map(|v| v as usize).ok_or_else(|| io::Error::other(format!("missing {k}")));
    let (nr, nz) = (get("nr")?, get("nz")?);
    let file = header["data_file"].as_str().ok_or_else(|| io::Error::other("missing data_file"))?;
    let bytes = fs::read(dir.join(file))?;
    if bytes.len() != nr * nz * 8 {
        return Err(io::Error::other("grid size mismatch"));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((nr, nz, data))
}
