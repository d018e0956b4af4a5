use frenet_planner::output::simlog_json;
use frenet_planner::scenario::{s1_crossing, s2_curved_bumps, s3_narrow_oncoming, straight_empty};
use frenet_planner::sim::{run, run_with, Mode, Switches};

#[test]
fn empty_corridor_holds_desired_speed() {
    let s = straight_empty();
    assert_eq!(s.initial.s_dot, s.assistive.v_des);
    let log = run(&s, Mode::Proposed).unwrap();
    let v_des = s.assistive.v_des;
    for c in &log.cycles[5..] {
        let end = c.executed.last().unwrap().state;
        assert!((end.s_dot - v_des).abs() <= 0.05 * v_des, "cycle {}: {}", c.cycle, end.s_dot);
    }
}

#[test]
fn slow_start_approaches_desired_speed() {
    let mut s = straight_empty();
    s.initial.s_dot = 0.5;
    let log = run(&s, Mode::Proposed).unwrap();
    let v: Vec<f64> = log.cycles.iter().map(|c| c.executed.last().unwrap().state.s_dot).collect();
    assert!(v.windows(2).all(|w| w[1] > w[0] && w[1] <= s.assistive.v_des));
    assert!(s.assistive.v_des - v[v.len() - 1] < 0.05 * s.assistive.v_des);
}

#[test]
fn progress_is_strictly_forward() {
    for s in [s1_crossing(), s2_curved_bumps(), s3_narrow_oncoming()] {
        for mode in [Mode::Proposed, Mode::Baseline] {
            let log = run(&s, mode).unwrap();
            let traj = log.executed_trajectory();
            assert!(traj.windows(2).all(|w| w[1].state.s > w[0].state.s && w[1].t > w[0].t), "{} {mode}", s.name);
        }
    }
}

#[test]
fn agents_move_at_constant_velocity() {
    let s = s3_narrow_oncoming();
    for t in [0.0, 1.0, 2.5, 9.0] {
        for (a, now) in s.agents.iter().zip(s.agents_at(t)) {
            assert_eq!(now.position.x, a.position.x + a.velocity.x * t);
            assert_eq!(now.position.y, a.position.y + a.velocity.y * t);
            assert_eq!(now.velocity, a.velocity);
        }
    }
}

#[test]
fn modes_are_switch_presets() {
    let s = s1_crossing();
    for mode in [Mode::Proposed, Mode::Baseline] {
        assert_eq!(run(&s, mode).unwrap(), run_with(&s, Switches::for_mode(mode)).unwrap());
    }
    let all_off = Switches {
        spacing: false,
        optimize: false,
        momentum: false,
        terminal: false,
    };
    assert_eq!(Switches::for_mode(Mode::Baseline), all_off);
}

#[test]
fn spacing_alone_changes_the_run() {
    let s = s2_curved_bumps();
    let only_spacing = Switches {
        spacing: true,
        ..Switches::for_mode(Mode::Baseline)
    };
    let a = run_with(&s, only_spacing).unwrap();
    let b = run(&s, Mode::Baseline).unwrap();
    assert_ne!(a.cycles[0].candidates.len(), 0);
    assert!(a.cycles.iter().zip(&b.cycles).any(|(x, y)| x.candidates.len() != y.candidates.len()
        || x.cluster_stats != y.cluster_stats));
}

#[test]
fn logs_serialize_identically() {
    let s = s2_curved_bumps().with_seed(3);
    let a = simlog_json(&run(&s, Mode::Proposed).unwrap());
    let b = simlog_json(&run(&s, Mode::Proposed).unwrap());
    assert_eq!(a, b);
}

#[test]
fn splices_are_continuous() {
    let log = run(&s2_curved_bumps(), Mode::Proposed).unwrap();
    assert_eq!(log.splices.len(), log.cycles.len() - 1);
    for sp in &log.splices {
        assert_eq!(sp.position_jump, 0.0);
        assert_eq!(sp.velocity_jump, 0.0);
        assert!(sp.acceleration_jump <= 1e-9);
    }
}
