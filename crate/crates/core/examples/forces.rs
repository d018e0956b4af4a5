//! Assistive shaping and interaction repulsion at a few states.

use frenet_planner::forces::{assistive_force, interaction_force, AssistiveParams, Bump, InteractionParams, Neighbor};
use frenet_planner::sampling::FrenetState;
use frenet_planner::vec2::Vec2;

fn main() {
    let params = AssistiveParams {
        bumps: vec![Bump {
            center: 5.0,
            width: 1.0,
            amplitude: 0.8,
        }],
        ..AssistiveParams::default()
    };
    for s in [0.0, 4.0, 5.0, 6.0] {
        let st = FrenetState::new(s, 1.4, 0.0, 0.3, 0.1, 0.0);
        let f = assistive_force(&st, &params);
        println!("s {s:.1}: beta {:.3}  F_asst ({:+.3}, {:+.3})", params.beta(s), f.x, f.y);
    }

    let neighbor = Neighbor {
        position: Vec2::new(-1.0, 0.0),
        velocity: Vec2::ZERO,
        covariance_trace: 0.0,
    };
    let p = InteractionParams::default();
    for speed in [0.0, 0.5, 1.0] {
        let f = interaction_force(Vec2::ZERO, Vec2::new(-speed, 0.0), &[neighbor], &p).unwrap();
        println!("closing at {speed:.1} m/s: F_int ({:+.4}, {:+.4})", f.x, f.y);
    }
}
