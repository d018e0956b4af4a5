//! Runs a bundled scenario and writes the metric tables, as `run` does.
//!
//! `cargo run --example metrics_export -- [OUT_DIR]`

use std::path::{Path, PathBuf};
use std::time::Instant;

use frenet_planner::output::{write_run, RunManifest};
use frenet_planner::scenario::Scenario;
use frenet_planner::sim::{run, Mode};

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("target/metrics_export"));
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/s2_curved_bumps.json");
    let (scenario, bytes) = Scenario::load(&file).unwrap();
    for mode in [Mode::Baseline, Mode::Proposed] {
        let clock = Instant::now();
        let log = run(&scenario, mode).unwrap();
        let dir = out.join(mode.to_string());
        let manifest = write_run(&dir, &log, &file, &bytes, mode, clock.elapsed().as_secs_f64()).unwrap();
        println!("{}: {:?}", dir.display(), manifest.files);
        let again = RunManifest::read(&dir).unwrap();
        println!("  scenario hash verifies: {}", again.verify_scenario().unwrap());
        let nn = std::fs::read_to_string(dir.join("endpoint_nn.csv")).unwrap();
        for line in nn.lines().take(3) {
            println!("  {line}");
        }
    }
}
