// Copyright 2026 The landau-lab authors
//
// Licensed under the Apache license, version 2.0 (the "license");
// you may not use this file except in compliance with the license.
// You may obtain a copy of the license at
//
//     http://www.apache.org/licenses/license-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the license is distributed on an "as is" basis,
// without warranties or conditions of any kind, either express or implied.
// See the license for the specific language governing permissions and
// limitations under the license.

//! Run directories: layout, persistence and plot data.
//!
//! ```text
//! <run>/config.yaml            byte copy of the input config
//! <run>/diagnostics.csv        one row per accepted step
//! <run>/steps.csv              step sizes, clamping, coercivity
//! <run>/snapshots/t_0007.f64   little-endian f64, x fastest
//! <run>/snapshots/t_0007.meta  n, half_width, time, sha256
//! <run>/run.summary            key = value: outcome, resolved config, checksums
//! ```
//!
//! Verification adds `verdicts.csv` (or `verdicts-<suite>.csv`) and the fit
//! tables under `fits/<suite>/`; plot data lands in `plot/`. Nothing is ever
//! overwritten: new files are appended to the checksum list in run.summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{parse_config_str, RunConfig};
use crate::diagnostics::{DiagnosticsRecord, Snapshot};
use crate::error::{Error, Result};
use crate::exponents::smoothing_exponent;
use crate::grid::{ScalarField, VelocityGrid};
use crate::harness::{degiorgi_empirical, EstimateVerdict, Suite};
use crate::solver::{Outcome, StepRecord, Trajectory};

pub const CONFIG_FILE: &str = "config.yaml";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const STEPS_FILE: &str = "steps.csv";
pub const SUMMARY_FILE: &str = "run.summary";
const FILES_MARKER: &str = "[files]";

pub const PLOT_KINDS: [&str; 3] = ["smoothing", "entropy", "degiorgi"];

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn format_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Creates `root` (or accepts an existing empty directory).
fn claim_directory(root: &Path) -> Result<()> {
    if root.exists() {
        if fs::read_dir(root)?.next().is_some() {
            return Err(Error::RunDirectoryNotEmpty(root.to_path_buf()));
        }
    } else {
        fs::create_dir_all(root)?;
    }
    Ok(())
}

/// Writes `bytes` to the new file `root/rel` and returns its checksum line.
fn write_new(root: &Path, rel: &str, bytes: &[u8]) -> Result<String> {
    let path = root.join(rel);
    if path.exists() {
        return Err(format_error(&path, "refusing to overwrite an existing run file"));
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, bytes)?;
    Ok(format!("{rel} = {}", sha256_hex(bytes)))
}

fn append_to_summary(root: &Path, lines: &[String]) -> Result<()> {
    let path = root.join(SUMMARY_FILE);
    let mut text = fs::read_to_string(&path)?;
    for line in lines {
        text.push_str(line);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn snapshot_bytes(field: &ScalarField) -> Vec<u8> {
    field.values().iter().flat_map(|x| x.to_le_bytes()).collect()
}

fn outcome_name(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::Completed => "completed",
        Outcome::GuardTripped => "guard_tripped",
    }
}

/// Persists a finished trajectory. `config_text` is copied verbatim.
pub fn write_run(root: &Path, config_text: &str, traj: &Trajectory) -> Result<()> {
    claim_directory(root)?;
    let mut files = vec![write_new(root, CONFIG_FILE, config_text.as_bytes())?];

    let spec = traj.config.diagnostics_spec();
    let mut csv = DiagnosticsRecord::csv_header(&spec);
    csv.push('\n');
    for r in &traj.records {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    files.push(write_new(root, DIAGNOSTICS_FILE, csv.as_bytes())?);

    let mut steps = String::from(StepRecord::CSV_HEADER);
    steps.push('\n');
    for s in &traj.steps {
        steps.push_str(&s.csv_row());
        steps.push('\n');
    }
    files.push(write_new(root, STEPS_FILE, steps.as_bytes())?);

    for (j, snap) in traj.snapshots.iter().enumerate() {
        let bytes = snapshot_bytes(&snap.field);
        let grid = snap.field.grid();
        let checksum = sha256_hex(&bytes);
        let meta = format!(
            "n = {}\nhalf_width = {}\ntime = {}\nsha256 = {checksum}\n",
            grid.n(),
            grid.half_width(),
            snap.time
        );
        files.push(write_new(root, &format!("snapshots/t_{j:04}.f64"), &bytes)?);
        files.push(write_new(root, &format!("snapshots/t_{j:04}.meta"), meta.as_bytes())?);
    }

    let mut summary = String::from("# landau run summary\n");
    let _ = writeln!(summary, "outcome = {}", outcome_name(traj.outcome));
    let _ = writeln!(summary, "steps = {}", traj.steps.len());
    let _ = writeln!(summary, "end_time = {}", traj.end_time());
    summary.push_str("[config]\n");
    for line in traj.config.to_yaml().lines() {
        let _ = writeln!(summary, "  {line}");
    }
    summary.push_str(FILES_MARKER);
    summary.push('\n');
    for line in &files {
        summary.push_str(line);
        summary.push('\n');
    }
    fs::write(root.join(SUMMARY_FILE), summary)?;
    Ok(())
}

/// (checksum, relative path) pairs listed in run.summary.
pub fn summary_files(root: &Path) -> Result<Vec<(String, String)>> {
    let path = root.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| format_error(&path, e.to_string()))?;
    let mut lines = text.lines().skip_while(|l| *l != FILES_MARKER);
    if lines.next().is_none() {
        return Err(format_error(&path, "no file list"));
    }
    lines
        .map(|l| {
            l.split_once(" = ")
                .map(|(rel, sum)| (sum.to_string(), rel.to_string()))
                .ok_or_else(|| format_error(&path, format!("malformed file entry `{l}`")))
        })
        .collect()
}

/// Every listed file exists and matches its checksum.
pub fn verify_checksums(root: &Path) -> Result<()> {
    for (sum, rel) in summary_files(root)? {
        let path = root.join(&rel);
        let bytes = fs::read(&path).map_err(|e| format_error(&path, e.to_string()))?;
        if sha256_hex(&bytes) != sum {
            return Err(format_error(&path, "checksum mismatch"));
        }
    }
    Ok(())
}

fn summary_value(root: &Path, key: &str) -> Result<String> {
    let path = root.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path)?;
    let prefix = format!("{key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .map(str::to_string)
        .ok_or_else(|| format_error(&path, format!("missing `{key}`")))
}

fn parse_f64(path: &Path, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| format_error(path, format!("bad number `{s}`")))
}

fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = fs::read_to_string(path).map_err(|e| format_error(path, e.to_string()))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| format_error(path, "empty file"))?
        .split(',')
        .collect();
    let keyed = |prefix: &str| -> Result<Vec<(usize, f64)>> {
        header
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.strip_prefix(prefix).map(|x| (i, x)))
            .map(|(i, x)| Ok((i, parse_f64(path, x)?)))
            .collect()
    };
    let (lp, moments, dissipation) = (keyed("lp_")?, keyed("moment_")?, keyed("dissipation_")?);
    let column = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| format_error(path, format!("missing column `{name}`")))
    };
    let fixed: Vec<usize> = [
        "time",
        "mass",
        "momentum_x",
        "momentum_y",
        "momentum_z",
        "energy",
        "entropy",
        "linf",
    ]
    .iter()
    .map(|c| column(c))
    .collect::<Result<_>>()?;
    lines
        .map(|line| {
            let cells: Vec<f64> = line.split(',').map(|c| parse_f64(path, c)).collect::<Result<_>>()?;
            if cells.len() != header.len() {
                return Err(format_error(path, "ragged row"));
            }
            let pick = |cols: &[(usize, f64)]| cols.iter().map(|&(i, key)| (key, cells[i])).collect();
            Ok(DiagnosticsRecord {
                time: cells[fixed[0]],
                mass: cells[fixed[1]],
                momentum: [cells[fixed[2]], cells[fixed[3]], cells[fixed[4]]],
                energy: cells[fixed[5]],
                entropy: cells[fixed[6]],
                lp: pick(&lp),
                linf: cells[fixed[7]],
                moments: pick(&moments),
                dissipation: pick(&dissipation),
            })
        })
        .collect()
}

fn read_steps(path: &Path) -> Result<Vec<StepRecord>> {
    let text = fs::read_to_string(path).map_err(|e| format_error(path, e.to_string()))?;
    let mut lines = text.lines();
    if lines.next() != Some(StepRecord::CSV_HEADER) {
        return Err(format_error(path, "unexpected header"));
    }
    lines
        .map(|line| {
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 6 {
                return Err(format_error(path, "ragged row"));
            }
            Ok(StepRecord {
                time: parse_f64(path, c[0])?,
                dt: parse_f64(path, c[1])?,
                clamped_mass: parse_f64(path, c[2])?,
                c0_empirical: parse_f64(path, c[3])?,
                sup_a: parse_f64(path, c[4])?,
                linear_iterations: c[5]
                    .parse()
                    .map_err(|_| format_error(path, format!("bad count `{}`", c[5])))?,
            })
        })
        .collect()
}

pub fn read_snapshot(data: &Path, meta: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(meta).map_err(|e| format_error(meta, e.to_string()))?;
    let value = |key: &str| {
        text.lines()
            .find_map(|l| l.split_once(" = ").filter(|(k, _)| *k == key).map(|(_, v)| v))
            .ok_or_else(|| format_error(meta, format!("missing `{key}`")))
    };
    let n: usize = value("n")?.parse().map_err(|_| format_error(meta, "bad `n`"))?;
    let half_width = parse_f64(meta, value("half_width")?)?;
    let time = parse_f64(meta, value("time")?)?;
    let bytes = fs::read(data).map_err(|e| format_error(data, e.to_string()))?;
    if sha256_hex(&bytes) != value("sha256")? {
        return Err(format_error(data, "checksum mismatch"));
    }
    if bytes.len() != 8 * n * n * n {
        return Err(format_error(
            data,
            format!("expected {} bytes for n = {n}", 8 * n * n * n),
        ));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = ScalarField::new(VelocityGrid::new(n, half_width)?, values)?;
    Ok(Snapshot { time, field })
}

/// Reads a run directory back into a trajectory, checking every checksum.
pub fn load_run(root: &Path) -> Result<Trajectory> {
    verify_checksums(root)?;
    let config_text = fs::read_to_string(root.join(CONFIG_FILE))?;
    let config = parse_config_str(&config_text)?;
    let mut datum = config.datum.build()?;
    if config.normalize {
        datum = datum.normalized()?;
    }
    let records = read_diagnostics(&root.join(DIAGNOSTICS_FILE))?;
    let steps = read_steps(&root.join(STEPS_FILE))?;
    let mut snapshots = Vec::new();
    for j in 0.. {
        let data = root.join(format!("snapshots/t_{j:04}.f64"));
        if !data.exists() {
            break;
        }
        snapshots.push(read_snapshot(&data, &data.with_extension("meta"))?);
    }
    if snapshots.is_empty() || records.is_empty() {
        return Err(format_error(root, "run directory holds no data"));
    }
    let outcome = match summary_value(root, "outcome")?.as_str() {
        "completed" => Outcome::Completed,
        "guard_tripped" => Outcome::GuardTripped,
        other => {
            return Err(format_error(
                &root.join(SUMMARY_FILE),
                format!("unknown outcome `{other}`"),
            ))
        }
    };
    Ok(Trajectory {
        config,
        datum,
        snapshots,
        records,
        steps,
        outcome,
    })
}

/// Writes the verdict table and one CSV per fit; fills in the artifacts.
/// Returns the path of the verdict table.
pub fn write_verdicts(root: &Path, suite: Suite, verdicts: &mut [EstimateVerdict]) -> Result<PathBuf> {
    let name = suite.name();
    let table = if suite == Suite::All {
        "verdicts.csv".to_string()
    } else {
        format!("verdicts-{name}.csv")
    };
    let mut files = Vec::new();
    for v in verdicts.iter_mut() {
        if v.data.rows.is_empty() {
            continue;
        }
        let rel = format!("fits/{name}/{}.csv", v.id);
        files.push(write_new(root, &rel, v.data.to_csv().as_bytes())?);
        v.artifacts.push(rel);
    }
    let mut csv = String::from(EstimateVerdict::CSV_HEADER);
    csv.push('\n');
    for v in verdicts.iter() {
        csv.push_str(&v.csv_row());
        csv.push('\n');
    }
    files.push(write_new(root, &table, csv.as_bytes())?);
    append_to_summary(root, &files)?;
    Ok(root.join(table))
}

/// Writes `plot/<kind>.csv` and returns its path.
pub fn emit_plotdata(root: &Path, kind: &str) -> Result<PathBuf> {
    if !PLOT_KINDS.contains(&kind) {
        return Err(Error::UnknownPlotKind(kind.to_string()));
    }
    let traj = load_run(root)?;
    let h = &traj.config.harness;
    let mut csv = String::new();
    match kind {
        "smoothing" => {
            let beta_star = smoothing_exponent(h.p, h.m)?.beta_star;
            // reference line through the first stored time after t = 0
            let anchor = traj.snapshots.iter().find(|s| s.time > 0.0);
            csv.push_str("time,linf,reference\n");
            for s in &traj.snapshots {
                let reference = match anchor {
                    Some(a) if s.time > 0.0 => a.field.max() * (s.time / a.time).powf(-beta_star),
                    _ => f64::NAN,
                };
                let _ = writeln!(csv, "{:e},{:e},{:e}", s.time, s.field.max(), reference);
            }
        }
        "entropy" => {
            csv.push_str("time,entropy\n");
            for r in &traj.records {
                let _ = writeln!(csv, "{:e},{:e}", r.time, r.entropy);
            }
        }
        _ => {
            let v = degiorgi_empirical(&traj, h.p, h.m, h)?;
            csv.push_str("n,a_n,barrier\n");
            for row in &v.data.rows {
                let _ = writeln!(csv, "{},{:e},{:e}", row[0] as usize, row[2], row[3]);
            }
        }
    }
    let rel = format!("plot/{kind}.csv");
    let line = write_new(root, &rel, csv.as_bytes())?;
    append_to_summary(root, &[line])?;
    Ok(root.join(rel))
}

/// Convenience for callers holding a parsed config and its source text.
pub fn read_config(path: &Path) -> Result<(String, RunConfig)> {
    let text = fs::read_to_string(path).map_err(|e| format_error(path, e.to_string()))?;
    let config = parse_config_str(&text)?;
    Ok((text, config))
}
