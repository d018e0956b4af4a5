//! Endpoint spacing repair: raw grid cluster vs regulated cluster.

use frenet_planner::evaluation::nn_distance_stats;
use frenet_planner::regulation::{regulated_cluster, unregulated_cluster, RegulationConfig};
use frenet_planner::sampling::{FrenetState, SamplingGrid};
use frenet_planner::scenario::s1_crossing;

fn main() {
    let scenario = s1_crossing();
    let path = scenario.reference_path().unwrap();
    let grid = SamplingGrid {
        terminal_speeds: vec![0.8, 1.2],
        lateral_offsets: vec![-0.9, -0.5, -0.1, 0.2, 0.8],
        horizons: vec![3.0],
        dt: 0.05,
    };
    let initial = FrenetState::new(1.0, 1.0, 0.0, 0.1, 0.0, 0.0);
    let config = RegulationConfig {
        delta0: 0.25,
        ..RegulationConfig::default()
    };

    for (label, cluster) in [
        ("raw", unregulated_cluster(&initial, &path, &grid, &config).unwrap()),
        ("regulated", regulated_cluster(&initial, &path, &grid, &config).unwrap()),
    ] {
        let stats = nn_distance_stats(&cluster).unwrap();
        let gaps = cluster.consecutive_gaps();
        let widest = gaps.iter().copied().fold(0.0, f64::max);
        println!(
            "{label:>9}: {:2} endpoints, nn mean {:.3} std {:.3}, widest gap {widest:.3}, reference #{}",
            cluster.len(),
            stats.nn_mean,
            stats.nn_std,
            cluster.reference_index
        );
    }
}
