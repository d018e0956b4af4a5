//! Kinematic checks over a cluster on a tight curve.

use frenet_planner::evaluation::{check_candidate, feasibility_breakdown, Constraint, KinematicLimits};
use frenet_planner::geometry::ReferencePath;
use frenet_planner::regulation::{regulated_cluster, RegulationConfig};
use frenet_planner::sampling::{FrenetState, SamplingGrid};
use frenet_planner::vec2::Vec2;

fn main() {
    let pts: Vec<Vec2> = (0..=16)
        .map(|i| {
            let a = std::f64::consts::PI * i as f64 / 16.0;
            Vec2::new(3.0 * a.sin(), 3.0 - 3.0 * a.cos())
        })
        .collect();
    let path = ReferencePath::new(&pts).unwrap();
    let grid = SamplingGrid {
        terminal_speeds: vec![0.8, 1.4],
        lateral_offsets: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
        horizons: vec![2.0, 3.0],
        dt: 0.05,
    };
    let initial = FrenetState::new(0.5, 1.0, 0.0, 0.0, 0.0, 0.0);
    let cluster = regulated_cluster(&initial, &path, &grid, &RegulationConfig::default()).unwrap();
    let limits = KinematicLimits::default();

    let reports: Vec<_> = cluster.candidates.iter().map(|c| check_candidate(c, &path, &limits)).collect();
    for (c, r) in cluster.candidates.iter().zip(&reports).take(6) {
        println!(
            "T {:.1} v {:.2} d {:+.2}: feasible {}  {:?}",
            c.horizon, c.terminal.s_dot, c.terminal.d, r.feasible, r.violations
        );
    }

    let b = feasibility_breakdown(&reports).unwrap();
    println!("{} candidates, {:.1}% feasible", b.total, 100.0 * b.overall);
    for c in Constraint::ALL {
        println!("  {:<15} {:5.1}%", c.name(), 100.0 * b.rate(c));
    }
}
