//! Grid snapshots: `key: value` header lines ended by a blank line, then `N^{2n}`
//! little-endian `f64` values in lattice order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{CalabiError, Result};
use crate::lattice::{ScalarField, TorusLattice};

use super::csv::format_g17;

pub const SNAPSHOT_MAGIC: &str = "CFGRD1";

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub n: usize,
    pub size: usize,
    pub period: f64,
    pub t: f64,
    pub field_name: String,
}

impl SnapshotHeader {
    pub fn for_field(field: &ScalarField<f64>, t: f64, field_name: impl Into<String>) -> Self {
        let lat = field.lattice();
        Self { n: lat.n(), size: lat.size(), period: lat.period(), t, field_name: field_name.into() }
    }
}

pub fn write_snapshot_to<W: Write>(mut out: W, field: &ScalarField<f64>, header: &SnapshotHeader) -> Result<()> {
    let lat = field.lattice();
    if (lat.n(), lat.size()) != (header.n, header.size) || lat.period().to_bits() != header.period.to_bits() {
        return Err(CalabiError::Format("header does not describe the field's lattice".into()));
    }
    if header.field_name.contains('\n') || header.field_name.trim() != header.field_name {
        return Err(CalabiError::Format(format!("field name {:?} is not a single trimmed line", header.field_name)));
    }
    let text = format!(
        "magic: {SNAPSHOT_MAGIC}\nn: {}\nN: {}\nL: {}\nt: {}\nfield_name: {}\nbyte_order: little\n\n",
        header.n,
        header.size,
        format_g17(header.period),
        format_g17(header.t),
        header.field_name
    );
    let mut buf = Vec::with_capacity(text.len() + 8 * field.len());
    buf.extend_from_slice(text.as_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn write_snapshot(path: &Path, field: &ScalarField<f64>, header: &SnapshotHeader) -> Result<()> {
    write_snapshot_to(std::io::BufWriter::new(std::fs::File::create(path)?), field, header)
}

pub fn read_snapshot_from<R: Read>(mut input: R) -> Result<(ScalarField<f64>, SnapshotHeader)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let end = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| CalabiError::Format("header is not terminated by a blank line".into()))?;
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| CalabiError::Format("header is not UTF-8".into()))?;
    let payload = &bytes[end + 2..];

    let mut entries: Vec<(&str, &str)> = Vec::new();
    for line in text.lines() {
        let (k, v) = line
            .split_once(": ")
            .ok_or_else(|| CalabiError::Format(format!("malformed header line `{line}`")))?;
        entries.push((k, v));
    }
    let get = |key: &str| {
        entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| CalabiError::Format(format!("header lacks `{key}`")))
    };
    let magic = get("magic")?;
    if magic != SNAPSHOT_MAGIC {
        return Err(CalabiError::Format(format!("bad magic `{magic}`, expected {SNAPSHOT_MAGIC}")));
    }
    if get("byte_order")? != "little" {
        return Err(CalabiError::Format("only little-endian payloads are supported".into()));
    }
    let num = |key: &str| -> Result<f64> {
        let v = get(key)?;
        v.parse().map_err(|_| CalabiError::Format(format!("cannot parse {key} = `{v}`")))
    };
    let int = |key: &str| -> Result<usize> {
        let v = get(key)?;
        v.parse().map_err(|_| CalabiError::Format(format!("cannot parse {key} = `{v}`")))
    };
    let header = SnapshotHeader {
        n: int("n")?,
        size: int("N")?,
        period: num("L")?,
        t: num("t")?,
        field_name: get("field_name")?.to_string(),
    };
    let lat = TorusLattice::new(header.n, header.size, header.period).map_err(|e| CalabiError::Format(e.to_string()))?;
    let expected = 8 * lat.len();
    if payload.len() != expected {
        return Err(CalabiError::Format(format!(
            "payload has {} bytes but n = {}, N = {} needs {expected}",
            payload.len(),
            header.n,
            header.size
        )));
    }
    let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let field = ScalarField::from_values(lat, values).map_err(|e| CalabiError::Format(e.to_string()))?;
    Ok((field, header))
}

pub fn read_snapshot(path: &Path) -> Result<(ScalarField<f64>, SnapshotHeader)> {
    read_snapshot_from(std::fs::File::open(path)?)
}
