//! Rest-to-rest quintic over one second and its jerk profile.

use frenet_planner::quintic::{solve_quintic, Boundary};

fn main() {
    let q = solve_quintic(Boundary::new(0.0, 0.0, 0.0), Boundary::new(1.0, 0.0, 0.0), 1.0).unwrap();
    println!("coefficients {:?}", q.c);
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let e = q.eval(t);
        println!("t {t:.1}  x {:.4}  v {:.4}  a {:+.4}  j {:+.3}", e.value, e.d1, e.d2, e.d3);
    }

    // Any boundary pair works; the residual is the worst of the six conditions.
    let (a, b) = (Boundary::new(2.0, 1.2, -0.3), Boundary::new(5.5, 0.8, 0.0));
    let q = solve_quintic(a, b, 3.0).unwrap();
    println!("residual {:.1e}", q.residual(a, b, 3.0));
}
