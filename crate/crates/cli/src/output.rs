//! CSV, JSON and PGM writers.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use synsamp_core::harness::{LogEvent, MetricTable};

/// Header line, then one line per row. Numbers use the shortest text that
/// parses back to the same `f64`.
pub fn csv_text(table: &MetricTable) -> String {
    let mut s = table.columns.join(",");
    s.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn events_csv_text(events: &[LogEvent]) -> String {
    let mut s = String::from("time_ms,kind,detail\n");
    for e in events {
        s.push_str(&format!("{},{},{}\n", e.time_ms, e.kind, e.detail.replace([',', '\n'], " ")));
    }
    s
}

/// Writes via a temporary file so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Binary (P5) gray map of `values` in `[0, 1]`, row-major.
pub fn pgm_bytes(width: usize, height: usize, values: &[f64]) -> Result<Vec<u8>> {
    if values.len() != width * height {
        bail!("{} values for a {width}x{height} image", values.len());
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

/// Parses a P5 gray map back to width, height and pixels.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            bail!("truncated PGM header");
        }
        fields.push(std::str::from_utf8(&bytes[start..i])?.to_string());
    }
    if fields[0] != "P5" || fields[3] != "255" {
        bail!("not an 8-bit P5 gray map");
    }
    let (w, h): (usize, usize) = (fields[1].parse()?, fields[2].parse()?);
    let data = &bytes[i + 1..];
    if data.len() != w * h {
        bail!("PGM has {} pixels, header says {w}x{h}", data.len());
    }
    Ok((w, h, data.to_vec()))
}
