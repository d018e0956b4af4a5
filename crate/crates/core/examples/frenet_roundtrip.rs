//! Frenet <-> Cartesian conversion on a curved reference path.

use frenet_planner::geometry::ReferencePath;
use frenet_planner::vec2::Vec2;

fn main() {
    // Quarter circle of radius 4 followed by a straight run.
    let mut pts: Vec<Vec2> = (0..=12)
        .map(|i| {
            let a = std::f64::consts::FRAC_PI_2 * i as f64 / 12.0;
            Vec2::new(4.0 * a.sin(), 4.0 - 4.0 * a.cos())
        })
        .collect();
    pts.extend((1..=4).map(|i| Vec2::new(4.0, 4.0 + i as f64)));
    let path = ReferencePath::new(&pts).unwrap();
    println!("length {:.4} m", path.total_length());

    for (s, d) in [(1.0, 0.0), (3.0, 0.5), (5.0, -0.8), (8.0, 0.3)] {
        let p = path.frenet_to_cartesian(s, d).unwrap();
        let (s2, d2) = path.cartesian_to_frenet(p).unwrap();
        let f = path.frame(s).unwrap();
        println!(
            "s {s:.2} d {d:+.2} -> ({:.4}, {:.4}) -> s {s2:.6} d {d2:+.6}  kappa {:.4}",
            p.x, p.y, f.curvature
        );
    }
}
