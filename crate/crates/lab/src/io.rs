//! Atomic report writers: every file is written to a temporary sibling and
//! renamed into place, so readers never see a partial report.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use fracmax::lipschitz::CharacterizationReport;
use fracmax::maximal::RatioRow;
use serde::Serialize;
use tempfile::NamedTempFile;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))
}

/// `(ball_id, center_0.., radius, value)` rows.
pub fn characterization_csv(report: &CharacterizationReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let dim = report.per_ball.first().map_or(0, |b| b.center.len());
    let mut header = vec!["ball_id".to_string()];
    header.extend((0..dim).map(|k| format!("center_{k}")));
    header.extend(["radius".to_string(), "value".to_string()]);
    w.write_record(&header)?;
    for b in &report.per_ball {
        let mut row = vec![b.ball_id.to_string()];
        row.extend(b.center.iter().map(|c| c.to_string()));
        row.push(b.radius.to_string());
        row.push(b.value.to_string());
        w.write_record(&row)?;
    }
    finish_csv(w)
}

/// `(fixture_id, p_norm, q_norm, ratio)` rows.
pub fn ratio_csv(rows: &[RatioRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["fixture_id", "p_norm", "q_norm", "ratio"])?;
    for r in rows {
        w.write_record([r.fixture_id.clone(), r.p_norm.to_string(), r.q_norm.to_string(), r.ratio.to_string()])?;
    }
    finish_csv(w)
}

/// Per-node rows: coordinates, value and the argmax ball (empty when the
/// node is uncovered).
pub fn node_csv(coords: &[Vec<f64>], values: &[f64], argmax: &[Option<usize>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let dim = coords.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (0..dim).map(|k| format!("x_{k}")).collect();
    header.extend(["value".to_string(), "argmax".to_string()]);
    w.write_record(&header)?;
    for ((c, v), a) in coords.iter().zip(values).zip(argmax) {
        let mut row: Vec<String> = c.iter().map(|x| x.to_string()).collect();
        row.push(v.to_string());
        row.push(a.map(|i| i.to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    finish_csv(w)
}
