//! Closed-loop runs of the synthetic suite in both modes.

use frenet_planner::evaluation::jerk_statistics_of;
use frenet_planner::scenario::synthetic_suite;
use frenet_planner::sim::{run, Mode};

fn main() {
    for scenario in synthetic_suite() {
        for mode in [Mode::Baseline, Mode::Proposed] {
            let log = run(&scenario, mode).unwrap();
            let nn: Vec<f64> = log.cycles.iter().filter_map(|c| c.cluster_stats.map(|s| s.nn_std)).collect();
            let jerk = jerk_statistics_of(&log.executed_trajectory());
            let worst_splice = log.splices.iter().map(|s| s.acceleration_jump).fold(0.0, f64::max);
            println!(
                "{:<19} {mode:<8} nn_std {:.4}  jerk median lon {:.4} lat {:.4}  s_end {:.2}  splice jump {worst_splice:.1e}",
                scenario.name,
                nn.iter().sum::<f64>() / nn.len() as f64,
                jerk.lon.median,
                jerk.lat.median,
                log.final_state.s
            );
        }
    }
}
