//! On-disk artifacts of a run or a cluster dump.
//!
//! Every float is written as `{:.8e}` (9 significant digits, locale free), so
//! identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evaluation::{jerk_statistics_of, nn_distances, profile_series, Constraint};
use crate::sampling::TrajectoryCluster;
use crate::sim::{Mode, SimLog};

pub const SIMLOG: &str = "simlog.json";
pub const PROFILES: &str = "profiles.csv";
pub const JERK_STATS: &str = "jerk_stats.csv";
pub const ENDPOINT_NN: &str = "endpoint_nn.csv";
pub const FEASIBILITY: &str = "feasibility.csv";
pub const MANIFEST: &str = "manifest.json";

pub const ENDPOINTS: &str = "endpoints.csv";
pub const FULL: &str = "full.csv";
pub const NN_HISTOGRAM: &str = "nn_histogram.csv";
pub const HISTOGRAM_BIN: f64 = 0.05;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub scenario_path: String,
    /// SHA-256 of the scenario file as read.
    pub scenario_sha256: String,
    pub mode: Mode,
    pub seed: u64,
    pub files: Vec<String>,
    /// Wall-clock seconds; the only field that differs between reruns.
    pub duration_s: f64,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self, OutputError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|source| OutputError::Json { path, source })
    }

    /// True when the scenario file still hashes to the recorded digest.
    pub fn verify_scenario(&self) -> Result<bool, OutputError> {
        let path = PathBuf::from(&self.scenario_path);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        Ok(sha256_hex(&bytes) == self.scenario_sha256)
    }
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), OutputError> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(io_err(&path))
}

pub fn profiles_csv(log: &SimLog) -> String {
    let mut out = String::from("t,s,d,s_dot,s_ddot,jerk_s,d_dot,d_ddot,jerk_d\n");
    for r in profile_series(&log.executed_trajectory()) {
        let row = [r.t, r.s, r.d, r.s_dot, r.s_ddot, r.jerk_s, r.d_dot, r.d_ddot, r.jerk_d];
        out.push_str(&row.map(num).join(","));
        out.push('\n');
    }
    out
}

pub fn jerk_stats_csv(log: &SimLog) -> String {
    let stats = jerk_statistics_of(&log.executed_trajectory());
    let mut out = String::from("axis,samples,median,iqr,rms,max\n");
    for (axis, series, s) in [
        ("longitudinal", &stats.lon_series, stats.lon),
        ("lateral", &stats.lat_series, stats.lat),
    ] {
        let _ = writeln!(
            out,
            "{axis},{},{},{},{},{}",
            series.len(),
            num(s.median),
            num(s.iqr),
            num(s.rms),
            num(s.max)
        );
    }
    out
}

pub fn endpoint_nn_csv(log: &SimLog) -> String {
    let mut out = String::from("cycle,endpoints,nn_mean,nn_std,nn_min,nn_max,budget_exhausted\n");
    for c in &log.cycles {
        let s = c.cluster_stats;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.cycle,
            c.candidates.len(),
            opt_num(s.map(|s| s.nn_mean)),
            opt_num(s.map(|s| s.nn_std)),
            opt_num(s.map(|s| s.nn_min)),
            opt_num(s.map(|s| s.nn_max)),
            c.budget_exhausted
        );
    }
    out
}

pub fn feasibility_csv(log: &SimLog) -> String {
    let mut out = String::from("cycle,candidate,selected,horizon,s_dot_end,d_end,refined,cost,feasible");
    for c in Constraint::ALL {
        let _ = write!(out, ",{}", c.name());
    }
    for c in Constraint::ALL {
        let _ = write!(out, ",margin_{}", c.name());
    }
    out.push('\n');
    for cycle in &log.cycles {
        for (i, r) in cycle.candidates.iter().enumerate() {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                cycle.cycle,
                i,
                i == cycle.selected,
                num(r.horizon),
                num(r.terminal.s_dot),
                num(r.terminal.d),
                r.refined,
                num(r.cost),
                r.feasibility.feasible
            );
            for c in Constraint::ALL {
                let _ = write!(out, ",{}", u8::from(r.feasibility.violations.contains(&c)));
            }
            for c in Constraint::ALL {
                let _ = write!(out, ",{}", num(r.feasibility.margin(c)));
            }
            out.push('\n');
        }
    }
    out
}

pub fn simlog_json(log: &SimLog) -> String {
    let mut s = serde_json::to_string_pretty(log).expect("log serializes");
    s.push('\n');
    s
}

/// Writes the five data files and then the manifest.
pub fn write_run(
    dir: &Path,
    log: &SimLog,
    scenario_path: &Path,
    scenario_bytes: &[u8],
    mode: Mode,
    duration_s: f64,
) -> Result<RunManifest, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files = [
        (SIMLOG, simlog_json(log)),
        (PROFILES, profiles_csv(log)),
        (JERK_STATS, jerk_stats_csv(log)),
        (ENDPOINT_NN, endpoint_nn_csv(log)),
        (FEASIBILITY, feasibility_csv(log)),
    ];
    for (name, content) in &files {
        write_file(dir, name, content)?;
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario_path: scenario_path.display().to_string(),
        scenario_sha256: sha256_hex(scenario_bytes),
        mode,
        seed: log.seed,
        files: files.iter().map(|(n, _)| n.to_string()).collect(),
        duration_s,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(dir, MANIFEST, &text)?;
    Ok(manifest)
}

/// Diagnostics of a run that stopped early. No manifest is written.
pub fn write_partial(dir: &Path, log: &SimLog) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(dir, SIMLOG, &simlog_json(log))
}

/// Terminal states in chain order with the gap to the next one.
pub fn endpoints_csv(cluster: &TrajectoryCluster) -> String {
    let gaps = cluster.consecutive_gaps();
    let mut out = String::from("index,horizon,s,s_dot,s_ddot,d,d_dot,d_ddot,gap_next\n");
    for (i, c) in cluster.candidates.iter().enumerate() {
        let t = c.terminal;
        let row = [c.horizon, t.s, t.s_dot, t.s_ddot, t.d, t.d_dot, t.d_ddot];
        let _ = writeln!(
            out,
            "{i},{},{}",
            row.map(num).join(","),
            opt_num(gaps.get(i).copied())
        );
    }
    out
}

pub fn full_csv(cluster: &TrajectoryCluster) -> String {
    let mut out = String::from("candidate,k,t,s,s_dot,s_ddot,d,d_dot,d_ddot,jerk_s,jerk_d\n");
    for (i, c) in cluster.candidates.iter().enumerate() {
        for (k, p) in c.samples.iter().enumerate() {
            let st = p.state;
            let row = [p.t, st.s, st.s_dot, st.s_ddot, st.d, st.d_dot, st.d_ddot, p.jerk[0], p.jerk[1]];
            let _ = writeln!(out, "{i},{k},{}", row.map(num).join(","));
        }
    }
    out
}

/// Counts per bin `[k·width, (k+1)·width)`, from zero up to the largest value.
pub fn histogram(values: &[f64], width: f64) -> Vec<usize> {
    let top = values.iter().copied().fold(0.0, f64::max);
    let mut counts = vec![0; (top / width).floor() as usize + 1];
    for v in values {
        counts[(v / width).floor() as usize] += 1;
    }
    counts
}

pub fn nn_histogram_csv(cluster: &TrajectoryCluster) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    // A lone endpoint has no neighbor.
    if cluster.len() < 2 {
        return out;
    }
    let d = nn_distances(&cluster.terminals());
    for (k, n) in histogram(&d, HISTOGRAM_BIN).iter().enumerate() {
        let lo = k as f64 * HISTOGRAM_BIN;
        let _ = writeln!(out, "{},{},{n}", num(lo), num(lo + HISTOGRAM_BIN));
    }
    out
}

/// Shannon entropy (nats) of a histogram's normalized counts.
pub fn histogram_entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.ln()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dump {
    Endpoints,
    Full,
}

/// Writes the dump and the NN histogram; returns the file names.
pub fn write_cluster(dir: &Path, cluster: &TrajectoryCluster, dump: Dump) -> Result<Vec<String>, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let (name, content) = match dump {
        Dump::Endpoints => (ENDPOINTS, endpoints_csv(cluster)),
        Dump::Full => (FULL, full_csv(cluster)),
    };
    write_file(dir, name, &content)?;
    write_file(dir, NN_HISTOGRAM, &nn_histogram_csv(cluster))?;
    Ok(vec![name.to_string(), NN_HISTOGRAM.to_string()])
}
