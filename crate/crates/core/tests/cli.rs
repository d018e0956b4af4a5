use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use frenet_planner::output::{self, histogram, histogram_entropy, RunManifest};
use frenet_planner::scenario::{s2_curved_bumps, straight_empty, Scenario};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_frenet-planner"));
    c.env("PLANNER_THREADS", "2");
    c
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_scenario(dir: &Path, s: &Scenario) -> PathBuf {
    let p = dir.join("scenario.json");
    fs::write(&p, s.to_json()).unwrap();
    p
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .filter_map(|l| l.split(',').nth(k).and_then(|v| v.parse().ok()))
        .collect()
}

#[test]
fn validate_accepts_bundled_scenarios() {
    for name in ["s1_crossing", "s2_curved_bumps", "s3_narrow_oncoming", "straight_empty"] {
        let o = exec(&["validate", bundled(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}

#[test]
fn validate_names_the_bad_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = straight_empty();
    s.regulation.delta0 = s.regulation.epsilon_min / 2.0;
    s.grid.dt = -1.0;
    let p = write_scenario(dir.path(), &s);
    let o = exec(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("regulation.delta0"), "{e}");
    assert!(e.contains("grid: ") && e.contains("dt must be positive"), "{e}");
}

#[test]
fn malformed_json_reports_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{\n  \"schema_version\": 1,\n  \"path\": [[0, 0],\n").unwrap();
    let o = exec(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(exec(&["validate", "/nonexistent/scenario.json"]).status.code(), Some(2));
    assert_eq!(exec(&["run", bundled("s1_crossing").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(exec(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(exec(&["--help"]).status.code(), Some(0));
    let o = bin().arg("validate").arg(bundled("s1_crossing")).env("PLANNER_THREADS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_writes_all_files_in_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = bundled("s2_curved_bumps");
    let mut nn_std = Vec::new();
    for mode in ["proposed", "baseline"] {
        let out = dir.path().join(mode);
        let o = exec(&["run", scenario.to_str().unwrap(), "--mode", mode, "--seed", "5", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        for f in [
            output::SIMLOG,
            output::PROFILES,
            output::JERK_STATS,
            output::ENDPOINT_NN,
            output::FEASIBILITY,
            output::MANIFEST,
        ] {
            assert!(out.join(f).is_file(), "{mode}: missing {f}");
        }
        let m = RunManifest::read(&out).unwrap();
        assert_eq!(m.seed, 5);
        assert_eq!(m.mode.to_string(), mode);
        assert!(m.verify_scenario().unwrap());
        let col = csv_column(&out.join(output::ENDPOINT_NN), "nn_std");
        assert_eq!(col.len(), s2_curved_bumps().sim.n_cycles);
        nn_std.push(col.iter().sum::<f64>() / col.len() as f64);
    }
    assert!(nn_std[0] < nn_std[1], "proposed {} vs baseline {}", nn_std[0], nn_std[1]);
}

#[test]
fn cluster_dump_of_a_single_cell_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = straight_empty();
    s.grid.lateral_offsets = vec![0.0];
    let p = write_scenario(dir.path(), &s);
    let o = exec(&["cluster", p.to_str().unwrap(), "--dump", "endpoints", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join(output::ENDPOINTS)).unwrap();
    assert_eq!(text.lines().count(), 2);
    let hist = fs::read_to_string(dir.path().join(output::NN_HISTOGRAM)).unwrap();
    assert_eq!(hist.lines().count(), 1);

    let o = exec(&["cluster", p.to_str().unwrap(), "--dump", "full", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let steps = (s.grid.horizons[0] / s.grid.dt).round() as usize;
    let text = fs::read_to_string(dir.path().join(output::FULL)).unwrap();
    assert_eq!(text.lines().count(), steps + 2);
}

fn eight_offsets() -> Scenario {
    let mut s = straight_empty();
    s.grid.lateral_offsets = (0..8).map(|i| -1.0 + 2.0 * i as f64 / 7.0).collect();
    s
}

#[test]
fn dumped_gaps_respect_delta0() {
    let dir = tempfile::tempdir().unwrap();
    let s = eight_offsets();
    let gaps = csv_column(&cluster_dump(&s, "proposed", dir.path()).join(output::ENDPOINTS), "gap_next");
    assert!(gaps.len() > 7);
    for g in gaps {
        assert!(g <= s.regulation.delta0 * (1.0 + 1e-8), "gap {g}");
    }
}

fn uneven_grid() -> Scenario {
    let mut s = straight_empty();
    s.grid.lateral_offsets = vec![-1.0, -0.9, -0.35, 0.1, 0.15, 0.8, 1.2];
    s
}

fn cluster_dump(s: &Scenario, mode: &str, dir: &Path) -> PathBuf {
    let p = write_scenario(dir, s);
    let out = dir.join(mode);
    let o = exec(&["cluster", p.to_str().unwrap(), "--dump", "endpoints", "--mode", mode, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    out
}

#[test]
fn regulated_endpoints_cover_space_more_evenly() {
    // Lateral endpoint positions in 0.05 bins: filled gaps occupy more bins.
    let dir = tempfile::tempdir().unwrap();
    let s = uneven_grid();
    let entropy = |mode: &str| {
        let d = csv_column(&cluster_dump(&s, mode, dir.path()).join(output::ENDPOINTS), "d");
        let shifted: Vec<f64> = d.iter().map(|x| x + 2.0).collect();
        histogram_entropy(&histogram(&shifted, output::HISTOGRAM_BIN))
    };
    let (reg, raw) = (entropy("proposed"), entropy("baseline"));
    assert!(reg > raw, "regulated {reg} vs raw {raw}");
}

#[test]
fn regulated_nn_distances_are_more_concentrated() {
    // Evenly filled chains put every nearest-neighbor distance in a few
    // bins, so the entropy of the dumped nn histogram drops.
    let dir = tempfile::tempdir().unwrap();
    let s = uneven_grid();
    let entropy = |mode: &str| {
        let counts = csv_column(&cluster_dump(&s, mode, dir.path()).join(output::NN_HISTOGRAM), "count");
        histogram_entropy(&counts.iter().map(|c| *c as usize).collect::<Vec<_>>())
    };
    let (reg, raw) = (entropy("proposed"), entropy("baseline"));
    assert!(reg < raw, "regulated {reg} vs raw {raw}");
}

#[test]
fn infeasible_limits_leave_a_partial_log() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = straight_empty();
    s.limits.v_max = 0.2;
    let p = write_scenario(dir.path(), &s);
    let out = dir.path().join("run");
    let o = exec(&["run", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("no feasible candidate"), "{}", stderr(&o));
    assert!(out.join(output::SIMLOG).is_file());
    assert!(!out.join(output::MANIFEST).exists());
}
