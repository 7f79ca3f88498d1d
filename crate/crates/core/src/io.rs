//! On-disk formats: raw little-endian field dumps with a text sidecar,
//! trajectory directories with an index of recorded times, and deterministic
//! CSV writing.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::wigner::WignerField;

/// Sidecar metadata of a field dump.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FieldMeta {
    pub shape: Vec<usize>,
    pub x0: f64,
    pub dx: f64,
    pub xi0: f64,
    pub dxi: f64,
    pub hbar: f64,
}

/// Write a real field as row-major 64-bit little-endian floats at
/// `<base>.f64` with the metadata record at `<base>.meta.toml`.
pub fn write_field(base: &Path, values: &[f64], meta: &FieldMeta) -> Result<()> {
    let expected: usize = meta.shape.iter().product();
    if expected != values.len() {
        return Err(Error::Config(format!(
            "shape {:?} does not match {} samples",
            meta.shape,
            values.len()
        )));
    }
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(base.with_extension("f64"), bytes)?;
    let text = toml::to_string_pretty(meta)
        .map_err(|e| Error::Config(format!("metadata serialization failed: {e}")))?;
    std::fs::write(base.with_extension("meta.toml"), text)?;
    Ok(())
}

pub fn read_field(base: &Path) -> Result<(Vec<f64>, FieldMeta)> {
    let text = std::fs::read_to_string(base.with_extension("meta.toml"))?;
    let meta: FieldMeta =
        toml::from_str(&text).map_err(|e| Error::Config(format!("bad metadata: {e}")))?;
    let bytes = std::fs::read(base.with_extension("f64"))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Config("field byte length is not a multiple of 8".into()));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let expected: usize = meta.shape.iter().product();
    if values.len() != expected {
        return Err(Error::Config(format!(
            "expected {expected} samples from shape {:?}, found {}",
            meta.shape,
            values.len()
        )));
    }
    Ok((values, meta))
}

pub fn wigner_meta(w: &WignerField) -> FieldMeta {
    FieldMeta {
        shape: vec![w.grid.x.n(), w.grid.xi.n()],
        x0: w.grid.x.origin(),
        dx: w.grid.x.spacing(),
        xi0: w.grid.xi.frequency(0),
        dxi: w.grid.xi.spacing(),
        hbar: w.hbar,
    }
}

pub fn write_wigner(base: &Path, w: &WignerField) -> Result<()> {
    let flat: Vec<f64> = w.values.iter().copied().collect();
    write_field(base, &flat, &wigner_meta(w))
}

/// Dump a recorded trajectory as one field file per frame plus an index
/// listing the frame times.
pub fn write_trajectory(dir: &Path, traj: &Trajectory<WignerField>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut rows = Vec::new();
    for (i, (t, frame)) in traj.times.iter().zip(&traj.frames).enumerate() {
        let name = format!("frame_{i:06}");
        write_wigner(&dir.join(&name), frame)?;
        rows.push(vec![i.to_string(), fmt_float(*t), format!("{name}.f64")]);
    }
    let index = dir.join("index.csv");
    write_csv(&index, &["frame", "time", "file"], &rows)?;
    Ok(index)
}

/// Fixed-width scientific formatting so identical runs emit identical bytes.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Read a 2-D dumped field back as an array (for round trips and plots).
pub fn field_as_array2(values: Vec<f64>, meta: &FieldMeta) -> Result<Array2<f64>> {
    if meta.shape.len() != 2 {
        return Err(Error::Config(format!("expected a 2-d shape, got {:?}", meta.shape)));
    }
    Array2::from_shape_vec((meta.shape[0], meta.shape[1]), values)
        .map_err(|e| Error::Config(format!("shape mismatch: {e}")))
}
