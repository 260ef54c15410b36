//! Data emission: CSV tables, JSON reports and the run manifest.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) so a table
//! round-trips bit for bit. Every file goes to a temporary sibling first and
//! is renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::TrajectoryRecord;
use crate::error::Result;
use crate::nonrel::NRRecord;
use crate::stats::Ensemble;

const AXES: [&str; 3] = ["x", "y", "z"];

fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// `sigma,particle,t,x[,y,z],v_t,v_x[,v_y,v_z],tau,tau_valid,q_over_m2c2,interval_class`.
///
/// `t` is coordinate time `X^0 / c` and `v_t` is `dT/dsigma`.
pub fn trajectory_csv(record: &TrajectoryRecord, c: f64) -> String {
    let dim = record.states[0].positions[0].dim();
    let mut out = String::from("sigma,particle,t,");
    for a in &AXES[..dim] {
        let _ = write!(out, "{a},");
    }
    out.push_str("v_t,");
    for a in &AXES[..dim] {
        let _ = write!(out, "v_{a},");
    }
    out.push_str("tau,tau_valid,q_over_m2c2,interval_class\n");
    for st in &record.states {
        for (i, (x, v)) in st.positions.iter().zip(&st.velocities).enumerate() {
            num(&mut out, st.sigma);
            let _ = write!(out, ",{i},");
            num(&mut out, x.temporal() / c);
            for s in x.spatial() {
                out.push(',');
                num(&mut out, *s);
            }
            out.push(',');
            num(&mut out, v.temporal() / c);
            for s in v.spatial() {
                out.push(',');
                num(&mut out, *s);
            }
            out.push(',');
            num(&mut out, st.proper_times[i]);
            let _ = write!(out, ",{},", st.tau_valid[i]);
            num(&mut out, st.quantum_ratio[i]);
            let _ = writeln!(out, ",{}", st.interval_class[i].as_str());
        }
    }
    out
}

/// `sigma,particle,x[,y,z],vx[,vy,vz]`.
pub fn nr_trajectory_csv(record: &NRRecord) -> String {
    let dim = record.states[0].positions[0].len();
    let mut out = String::from("sigma,particle");
    for a in &AXES[..dim] {
        let _ = write!(out, ",{a}");
    }
    for a in &AXES[..dim] {
        let _ = write!(out, ",v{a}");
    }
    out.push('\n');
    for st in &record.states {
        for (i, (x, v)) in st.positions.iter().zip(&st.velocities).enumerate() {
            num(&mut out, st.sigma);
            let _ = write!(out, ",{i}");
            for s in x.iter().chain(v) {
                out.push(',');
                num(&mut out, *s);
            }
            out.push('\n');
        }
    }
    out
}

/// `sample_id,particle,t,x[,y,z]`, with `t = X^0 / c`.
pub fn ensemble_csv(ensemble: &Ensemble, c: f64) -> String {
    let dim = ensemble.samples.first().map(|s| s[0].dim()).unwrap_or(1);
    let mut out = String::from("sample_id,particle,t");
    for a in &AXES[..dim] {
        let _ = write!(out, ",{a}");
    }
    out.push('\n');
    for (j, s) in ensemble.samples.iter().enumerate() {
        for (i, x) in s.iter().enumerate() {
            let _ = write!(out, "{j},{i},");
            num(&mut out, x.temporal() / c);
            for v in x.spatial() {
                out.push(',');
                num(&mut out, *v);
            }
            out.push('\n');
        }
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance of one command run. Not byte-stable: it carries wall time.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub scenario: String,
    /// SHA-256 of the effective scenario (after overrides), as canonical JSON.
    pub scenario_sha256: String,
    pub seed: Option<u64>,
    pub overrides: Vec<String>,
    pub version: String,
    pub outputs: Vec<PathBuf>,
    pub exit_code: i32,
    pub wall_time_seconds: f64,
}
