//! Refines one candidate against the momentum-aware objective and shows the
//! cost history and what moved.

use frenet_planner::evaluation::jerk_statistics;
use frenet_planner::optimizer::{optimize_trajectory, CostModel, ScenarioContext};
use frenet_planner::sim::{cycle_cluster, Mode, Switches};
use frenet_planner::scenario::s1_crossing;

fn main() {
    let scenario = s1_crossing();
    let path = scenario.reference_path().unwrap();
    let cluster = cycle_cluster(&scenario, &path, &scenario.initial, 0, Switches::for_mode(Mode::Proposed)).unwrap();
    let neighbors = scenario.agents_at(0.0);
    let model = CostModel {
        ctx: ScenarioContext {
            path: &path,
            neighbors: &neighbors,
            assistive: &scenario.assistive,
            interaction: &scenario.interaction,
            sigma_baseline: scenario.sigma_baseline,
        },
        config: &scenario.optimizer,
        regulation: &scenario.regulation,
        reference: &cluster.candidates[cluster.reference_index],
    };

    let seed = &cluster.candidates[cluster.len() / 2];
    let out = optimize_trajectory(seed, &model);
    let h = &out.cost_history;
    println!("{:?} after {} steps", out.termination, h.len() - 1);
    println!("cost {:.6} -> {:.6}", h[0], h[h.len() - 1]);

    let moved = seed
        .samples
        .iter()
        .zip(&out.candidate.samples)
        .map(|(a, b)| (a.state.s - b.state.s).hypot(a.state.d - b.state.d))
        .fold(0.0, f64::max);
    println!("largest node displacement {moved:.2e} m");
    let n = seed.samples.len() - 1;
    println!(
        "endpoints unchanged: {}",
        seed.samples[0].state == out.candidate.samples[0].state && seed.samples[n].state == out.candidate.samples[n].state
    );

    let (before, after) = (jerk_statistics(seed), jerk_statistics(&out.candidate));
    println!("lateral jerk rms {:.4} -> {:.4}", before.lat.rms, after.lat.rms);
    println!("longitudinal jerk rms {:.4} -> {:.4}", before.lon.rms, after.lon.rms);
}
