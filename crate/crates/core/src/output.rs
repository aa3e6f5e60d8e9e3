//! Deterministic serialization: CSV and JSON emitters plus atomic file
//! writes. Floats print through the shortest-roundtrip formatter, so equal
//! runs give byte-equal files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::experiments::scaling::ScalingBand;
use crate::lines::LinesTrajectory;
use crate::spatial::SpatialTrajectory;
use crate::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// One row per grid time per replicate.
pub fn lines_trajectories_csv(trajs: &[LinesTrajectory]) -> String {
    let mut out = String::from("t,population,max_line,replicate,seed\n");
    for (r, traj) in trajs.iter().enumerate() {
        for i in 0..traj.sample_times.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                traj.sample_times[i], traj.population_at[i], traj.max_line_at[i], r, traj.seed
            );
        }
    }
    out
}

pub fn spatial_trajectories_csv(trajs: &[SpatialTrajectory]) -> String {
    let mut out = String::from("t,population,max_position,replicate,seed\n");
    for (r, traj) in trajs.iter().enumerate() {
        for i in 0..traj.sample_times.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                traj.sample_times[i], traj.population_at[i], traj.max_position_at[i], r, traj.seed
            );
        }
    }
    out
}

pub fn band_csv(band: &ScalingBand) -> String {
    let mut out = String::from("t,ratio,replicate\n");
    for row in &band.rows {
        let _ = writeln!(out, "{},{},{}", row.t, row.ratio, row.replicate);
    }
    out
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    kind: &'a str,
    payload: &'a T,
}

/// Pretty JSON wrapped in a schema envelope. Key order follows struct
/// declaration and BTreeMap order, so output is deterministic.
pub fn report_json<T: Serialize>(kind: &str, payload: &T) -> Result<String> {
    let envelope = Envelope { schema_version: SCHEMA_VERSION, kind, payload };
    let mut text = serde_json::to_string_pretty(&envelope).map_err(std::io::Error::other)?;
    text.push('\n');
    Ok(text)
}

#[derive(Serialize)]
struct LinesRunRow<'a> {
    replicate: usize,
    seed: u64,
    final_population: u64,
    final_max_line: u32,
    cap_hit: bool,
    rate_drift: f64,
    halted_at: f64,
    first_hit: &'a std::collections::BTreeMap<u32, f64>,
}

pub fn lines_runs_json(trajs: &[LinesTrajectory]) -> Result<String> {
    let rows: Vec<LinesRunRow> = trajs
        .iter()
        .enumerate()
        .map(|(r, t)| LinesRunRow {
            replicate: r,
            seed: t.seed,
            final_population: *t.population_at.last().unwrap(),
            final_max_line: *t.max_line_at.last().unwrap(),
            cap_hit: t.cap_hit,
            rate_drift: t.rate_drift,
            halted_at: t.halted_at,
            first_hit: &t.first_hit,
        })
        .collect();
    report_json("lines_runs", &rows)
}

#[derive(Serialize)]
struct SpatialRunRow<'a> {
    replicate: usize,
    seed: u64,
    final_population: u64,
    final_max_position: f64,
    root_final_position: f64,
    cap_hit: bool,
    rate_drift: f64,
    halted_at: f64,
    strip_first_hit: &'a std::collections::BTreeMap<u32, f64>,
}

pub fn spatial_runs_json(trajs: &[SpatialTrajectory]) -> Result<String> {
    let rows: Vec<SpatialRunRow> = trajs
        .iter()
        .enumerate()
        .map(|(r, t)| SpatialRunRow {
            replicate: r,
            seed: t.seed,
            final_population: *t.population_at.last().unwrap(),
            final_max_position: *t.max_position_at.last().unwrap(),
            root_final_position: t.root_final_position,
            cap_hit: t.cap_hit,
            rate_drift: t.rate_drift,
            halted_at: t.halted_at,
            strip_first_hit: &t.strip_first_hit,
        })
        .collect();
    report_json("spatial_runs", &rows)
}

/// Writes through a sibling temp file and renames into place, so readers
/// never observe a half-written file.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
    }
    match fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e.into())
        }
    }
}
