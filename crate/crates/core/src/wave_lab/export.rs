//! Snapshot dumps (JSON header + little-endian `f64` body) and energy CSV.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EnergySeries, Grid, Snapshot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub t: f64,
    pub h: f64,
    pub half_width: f64,
    pub n: usize,
    pub radius: f64,
    pub epsilon: f64,
    /// Arrays in the body, each `n * n` values, row-major in `x2`.
    pub fields: Vec<String>,
    pub byte_order: String,
}

/// Writes `<stem>.json` and `<stem>.bin` into `dir`; returns both paths.
pub fn write_snapshot(dir: &Path, stem: &str, snap: &Snapshot, radius: f64, epsilon: f64) -> io::Result<[PathBuf; 2]> {
    let header = SnapshotHeader {
        t: snap.t,
        h: snap.grid.h,
        half_width: snap.grid.half_width,
        n: snap.grid.n,
        radius,
        epsilon,
        fields: vec!["u".into(), "u_t".into()],
        byte_order: "little".into(),
    };
    let json_path = dir.join(format!("{stem}.json"));
    let bin_path = dir.join(format!("{stem}.bin"));
    fs::write(&json_path, serde_json::to_string_pretty(&header)?)?;
    let mut body = Vec::with_capacity(16 * snap.u.len());
    for v in snap.u.iter().chain(&snap.ut) {
        body.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin_path, body)?;
    Ok([json_path, bin_path])
}

pub fn read_snapshot(json_path: &Path) -> io::Result<(SnapshotHeader, Snapshot)> {
    let header: SnapshotHeader = serde_json::from_str(&fs::read_to_string(json_path)?)?;
    let body = fs::read(json_path.with_extension("bin"))?;
    let m = header.n * header.n;
    if body.len() != 16 * m {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "snapshot body has the wrong size"));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let grid = Grid { n: header.n, h: header.h, half_width: header.half_width };
    let snap = Snapshot { t: header.t, grid, u: values[..m].to_vec(), ut: values[m..].to_vec() };
    Ok((header, snap))
}

/// Columns `t,E,E_bound`, the bound being `C eps / (1 + eps^2 log(t+2))^lambda`.
pub fn energy_csv(series: &EnergySeries, bound: Option<(f64, f64, f64)>) -> String {
    let mut out = String::from("t,E,E_bound\n");
    for (t, e) in series.times.iter().zip(&series.values) {
        let b = bound
            .map(|(c, eps, lambda)| format!("{:.12e}", c * eps / (1.0 + eps * eps * (t + 2.0).ln()).powf(lambda)))
            .unwrap_or_default();
        let _ = writeln!(out, "{:.12e},{:.12e},{}", t, e, b);
    }
    out
}
