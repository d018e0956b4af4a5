//! Feasibility checks and the metric families: smoothness, endpoint density
//! and infeasibility breakdown.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::ReferencePath;
use crate::sampling::{FrenetState, TrajectoryCandidate, TrajectoryCluster, TrajectorySample};
use crate::vec2::Vec2;

/// Below this Cartesian speed, curvature is undefined and its checks are skipped.
pub const DEGENERATE_SPEED: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluationError {
    #[error("nearest-neighbor statistics need at least two endpoints, got {0}")]
    TooFewEndpoints(usize),
    #[error("no reports to aggregate")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KinematicLimits {
    pub v_max: f64,
    pub a_max: f64,
    pub j_max: f64,
    pub kappa_max: f64,
    pub yaw_rate_max: f64,
    pub kappa_rate_max: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        Self {
            v_max: 2.0,
            a_max: 1.5,
            j_max: 4.0,
            kappa_max: 1.0,
            yaw_rate_max: 1.0,
            kappa_rate_max: 2.0,
        }
    }
}

impl KinematicLimits {
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        Constraint::ALL
            .iter()
            .filter(|c| {
                let v = self.limit(**c);
                !(v.is_finite() && v > 0.0)
            })
            .map(|c| (c.limit_field(), "must be positive".to_string()))
            .collect()
    }

    pub fn limit(&self, c: Constraint) -> f64 {
        match c {
            Constraint::Velocity => self.v_max,
            Constraint::Acceleration => self.a_max,
            Constraint::Jerk => self.j_max,
            Constraint::Curvature => self.kappa_max,
            Constraint::YawRate => self.yaw_rate_max,
            Constraint::CurvatureRate => self.kappa_rate_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Constraint {
    Velocity,
    Acceleration,
    Jerk,
    Curvature,
    YawRate,
    CurvatureRate,
}

impl Constraint {
    pub const ALL: [Constraint; 6] = [
        Constraint::Velocity,
        Constraint::Acceleration,
        Constraint::Jerk,
        Constraint::Curvature,
        Constraint::YawRate,
        Constraint::CurvatureRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::Velocity => "velocity",
            Constraint::Acceleration => "acceleration",
            Constraint::Jerk => "jerk",
            Constraint::Curvature => "curvature",
            Constraint::YawRate => "yaw_rate",
            Constraint::CurvatureRate => "curvature_rate",
        }
    }

    fn limit_field(self) -> &'static str {
        match self {
            Constraint::Velocity => "v_max",
            Constraint::Acceleration => "a_max",
            Constraint::Jerk => "j_max",
            Constraint::Curvature => "kappa_max",
            Constraint::YawRate => "yaw_rate_max",
            Constraint::CurvatureRate => "kappa_rate_max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: BTreeSet<Constraint>,
    /// Largest `|value| / limit` per constraint.
    pub worst_margins: BTreeMap<Constraint, f64>,
    /// Samples whose speed was too low for a curvature estimate.
    pub degenerate_samples: Vec<usize>,
}

impl FeasibilityReport {
    pub fn margin(&self, c: Constraint) -> f64 {
        self.worst_margins.get(&c).copied().unwrap_or(0.0)
    }
}

/// First and second time derivatives of a uniformly sampled series, central
/// in the interior and second-order one-sided at the ends.
fn differentiate(p: &[Vec2], dt: f64) -> (Vec<Vec2>, Vec<Vec2>) {
    let n = p.len();
    let mut v = vec![Vec2::ZERO; n];
    let mut a = vec![Vec2::ZERO; n];
    if n < 4 {
        return (v, a);
    }
    for k in 1..n - 1 {
        v[k] = (p[k + 1] - p[k - 1]) * (0.5 / dt);
        a[k] = (p[k + 1] - p[k] * 2.0 + p[k - 1]) * (1.0 / (dt * dt));
    }
    let l = n - 1;
    v[0] = (p[0] * -3.0 + p[1] * 4.0 - p[2]) * (0.5 / dt);
    v[l] = (p[l] * 3.0 - p[l - 1] * 4.0 + p[l - 2]) * (0.5 / dt);
    a[0] = (p[0] * 2.0 - p[1] * 5.0 + p[2] * 4.0 - p[3]) * (1.0 / (dt * dt));
    a[l] = (p[l] * 2.0 - p[l - 1] * 5.0 + p[l - 2] * 4.0 - p[l - 3]) * (1.0 / (dt * dt));
    (v, a)
}

/// Cartesian kinematics of a candidate along its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianProfile {
    pub position: Vec<Vec2>,
    pub speed: Vec<f64>,
    pub accel: Vec<f64>,
    /// `None` where the speed is degenerate.
    pub curvature: Vec<Option<f64>>,
    pub yaw_rate: Vec<Option<f64>>,
    pub curvature_rate: Vec<Option<f64>>,
}

pub fn cartesian_profile(samples: &[TrajectorySample], dt: f64, path: &ReferencePath) -> CartesianProfile {
    let position: Vec<Vec2> = samples
        .iter()
        .map(|p| {
            let f = path.frame_clamped(p.state.s);
            f.point + p.state.d * f.normal
        })
        .collect();
    let (vel, acc) = differentiate(&position, dt);
    let speed: Vec<f64> = vel.iter().map(|v| v.norm()).collect();
    let curvature: Vec<Option<f64>> = vel
        .iter()
        .zip(&acc)
        .zip(&speed)
        .map(|((v, a), sp)| (*sp >= DEGENERATE_SPEED).then(|| v.cross(*a) / sp.powi(3)))
        .collect();
    let yaw_rate = curvature.iter().zip(&speed).map(|(k, sp)| k.map(|k| k * sp)).collect();
    let n = curvature.len();
    let curvature_rate = (0..n)
        .map(|k| {
            let lo = k.saturating_sub(1);
            let hi = (k + 1).min(n.saturating_sub(1));
            match (curvature[lo], curvature[hi], curvature[k]) {
                (Some(a), Some(b), Some(_)) if hi > lo => Some((b - a) / ((hi - lo) as f64 * dt)),
                _ => None,
            }
        })
        .collect();
    CartesianProfile {
        position,
        speed,
        accel: acc.iter().map(|a| a.norm()).collect(),
        curvature,
        yaw_rate,
        curvature_rate,
    }
}

/// Tests every sample of `candidate` against `limits`.
pub fn check_candidate(candidate: &TrajectoryCandidate, path: &ReferencePath, limits: &KinematicLimits) -> FeasibilityReport {
    check_samples(&candidate.samples, candidate.dt, path, limits)
}

pub fn check_samples(
    samples: &[TrajectorySample],
    dt: f64,
    path: &ReferencePath,
    limits: &KinematicLimits,
) -> FeasibilityReport {
    let prof = cartesian_profile(samples, dt, path);
    let mut worst: BTreeMap<Constraint, f64> = Constraint::ALL.iter().map(|c| (*c, 0.0)).collect();
    let mut bump = |c: Constraint, value: f64| {
        let r = value.abs() / limits.limit(c);
        let slot = worst.get_mut(&c).expect("all constraints present");
        // NaN compares false and would be lost; treat it as a breach.
        if r.is_nan() {
            *slot = f64::MAX;
        } else if r > *slot {
            *slot = r;
        }
    };
    let mut degenerate_samples = Vec::new();
    for (k, sample) in samples.iter().enumerate() {
        bump(Constraint::Velocity, prof.speed[k]);
        bump(Constraint::Acceleration, prof.accel[k]);
        bump(Constraint::Jerk, sample.jerk[0].abs().max(sample.jerk[1].abs()));
        match prof.curvature[k] {
            Some(kappa) => {
                bump(Constraint::Curvature, kappa);
                bump(Constraint::YawRate, prof.yaw_rate[k].unwrap_or(0.0));
                if let Some(rate) = prof.curvature_rate[k] {
                    bump(Constraint::CurvatureRate, rate);
                }
            }
            None => degenerate_samples.push(k),
        }
    }
    let violations: BTreeSet<Constraint> = worst.iter().filter(|(_, m)| **m > 1.0).map(|(c, _)| *c).collect();
    FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
        worst_margins: worst,
        degenerate_samples,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub nn_mean: f64,
    pub nn_std: f64,
    pub nn_min: f64,
    pub nn_max: f64,
}

/// Distance from each state to its nearest other state.
pub fn nn_distances(states: &[FrenetState]) -> Vec<f64> {
    states
        .iter()
        .enumerate()
        .map(|(i, a)| {
            states
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| a.distance(b))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn endpoint_stats(states: &[FrenetState]) -> Result<ClusterStats, EvaluationError> {
    if states.len() < 2 {
        return Err(EvaluationError::TooFewEndpoints(states.len()));
    }
    let d = nn_distances(states);
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(ClusterStats {
        nn_mean: mean,
        nn_std: var.sqrt(),
        nn_min: d.iter().copied().fold(f64::INFINITY, f64::min),
        nn_max: d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Nearest-neighbor statistics of the cluster's terminal states.
pub fn nn_distance_stats(cluster: &TrajectoryCluster) -> Result<ClusterStats, EvaluationError> {
    endpoint_stats(&cluster.terminals())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisJerkStats {
    /// Median of `|j|`.
    pub median: f64,
    /// Interquartile range of `|j|`.
    pub iqr: f64,
    pub rms: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct JerkStats {
    pub lon_series: Vec<f64>,
    pub lat_series: Vec<f64>,
    pub lon: AxisJerkStats,
    pub lat: AxisJerkStats,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn axis_stats(series: &[f64]) -> AxisJerkStats {
    if series.is_empty() {
        return AxisJerkStats::default();
    }
    let mut mag: Vec<f64> = series.iter().map(|v| v.abs()).collect();
    mag.sort_by(f64::total_cmp);
    let n = mag.len() as f64;
    AxisJerkStats {
        median: quantile(&mag, 0.5),
        iqr: quantile(&mag, 0.75) - quantile(&mag, 0.25),
        rms: (mag.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
        max: *mag.last().expect("non-empty"),
    }
}

pub fn jerk_statistics_of(samples: &[TrajectorySample]) -> JerkStats {
    let lon_series: Vec<f64> = samples.iter().map(|p| p.jerk[0]).collect();
    let lat_series: Vec<f64> = samples.iter().map(|p| p.jerk[1]).collect();
    JerkStats {
        lon: axis_stats(&lon_series),
        lat: axis_stats(&lat_series),
        lon_series,
        lat_series,
    }
}

pub fn jerk_statistics(candidate: &TrajectoryCandidate) -> JerkStats {
    jerk_statistics_of(&candidate.samples)
}

/// One row of the velocity/acceleration/jerk profile along the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub t: f64,
    pub s: f64,
    pub d: f64,
    pub s_dot: f64,
    pub s_ddot: f64,
    pub jerk_s: f64,
    pub d_dot: f64,
    pub d_ddot: f64,
    pub jerk_d: f64,
}

pub fn profile_series(samples: &[TrajectorySample]) -> Vec<ProfileRow> {
    samples
        .iter()
        .map(|p| ProfileRow {
            t: p.t,
            s: p.state.s,
            d: p.state.d,
            s_dot: p.state.s_dot,
            s_ddot: p.state.s_ddot,
            jerk_s: p.jerk[0],
            d_dot: p.state.d_dot,
            d_ddot: p.state.d_ddot,
            jerk_d: p.jerk[1],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityBreakdown {
    pub total: usize,
    pub overall: f64,
    /// Fraction of reports violating each constraint; one report may count
    /// toward several.
    pub per_constraint: BTreeMap<Constraint, f64>,
}

impl FeasibilityBreakdown {
    pub fn rate(&self, c: Constraint) -> f64 {
        self.per_constraint.get(&c).copied().unwrap_or(0.0)
    }
}

pub fn feasibility_breakdown(reports: &[FeasibilityReport]) -> Result<FeasibilityBreakdown, EvaluationError> {
    if reports.is_empty() {
        return Err(EvaluationError::EmptyInput);
    }
    let n = reports.len() as f64;
    let feasible = reports.iter().filter(|r| r.feasible).count();
    let per_constraint = Constraint::ALL
        .iter()
        .map(|c| {
            let k = reports.iter().filter(|r| r.violations.contains(c)).count();
            (*c, k as f64 / n)
        })
        .collect();
    Ok(FeasibilityBreakdown {
        total: reports.len(),
        overall: feasible as f64 / n,
        per_constraint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::build_candidate;

    fn straight() -> ReferencePath {
        let pts: Vec<Vec2> = (0..5).map(|i| Vec2::new(10.0 * i as f64, 0.0)).collect();
        ReferencePath::new(&pts).unwrap()
    }

    fn report(violations: &[Constraint]) -> FeasibilityReport {
        FeasibilityReport {
            feasible: violations.is_empty(),
            violations: violations.iter().copied().collect(),
            worst_margins: BTreeMap::new(),
            degenerate_samples: Vec::new(),
        }
    }

    #[test]
    fn constant_speed_is_feasible() {
        let path = straight();
        let c = build_candidate(
            &FrenetState::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0),
            &FrenetState::new(3.0, 1.0, 0.0, 0.0, 0.0, 0.0),
            3.0,
            0.05,
            &path,
        )
        .unwrap();
        let r = check_candidate(&c, &path, &KinematicLimits::default());
        assert!(r.feasible);
        assert!(r.violations.is_empty());
        assert!((r.margin(Constraint::Velocity) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn overspeed_is_flagged() {
        let path = straight();
        let lim = KinematicLimits::default();
        let v = 1.2 * lim.v_max;
        let c = build_candidate(
            &FrenetState::new(0.0, v, 0.0, 0.0, 0.0, 0.0),
            &FrenetState::new(2.0 * v, v, 0.0, 0.0, 0.0, 0.0),
            2.0,
            0.05,
            &path,
        )
        .unwrap();
        let r = check_candidate(&c, &path, &lim);
        assert!(!r.feasible);
        assert_eq!(r.violations, [Constraint::Velocity].into_iter().collect());
        assert!((r.margin(Constraint::Velocity) - 1.2).abs() < 1e-9);
    }

    #[test]
    fn nn_examples() {
        let a = FrenetState::default();
        let b = FrenetState { d: 1.0, ..a };
        let st = endpoint_stats(&[a, b]).unwrap();
        assert_eq!((st.nn_mean, st.nn_std, st.nn_min, st.nn_max), (1.0, 0.0, 1.0, 1.0));
        let three: Vec<FrenetState> = (0..3).map(|i| FrenetState { d: 0.5 * i as f64, ..a }).collect();
        let st = endpoint_stats(&three).unwrap();
        assert!((st.nn_mean - 0.5).abs() < 1e-15 && st.nn_std < 1e-15);
        assert_eq!(endpoint_stats(&[a]), Err(EvaluationError::TooFewEndpoints(1)));
    }

    #[test]
    fn breakdown_examples() {
        let all = vec![report(&[]); 3];
        let b = feasibility_breakdown(&all).unwrap();
        assert_eq!(b.overall, 1.0);
        assert!(b.per_constraint.values().all(|v| *v == 0.0));

        let curv = [
            report(&[]),
            report(&[Constraint::Curvature]),
            report(&[]),
            report(&[Constraint::Curvature]),
        ];
        let b = feasibility_breakdown(&curv).unwrap();
        assert_eq!(b.overall, 0.5);
        assert_eq!(b.rate(Constraint::Curvature), 0.5);
        assert_eq!(b.rate(Constraint::YawRate), 0.0);

        let mixed = [
            report(&[Constraint::Velocity]),
            report(&[Constraint::Velocity, Constraint::YawRate]),
            report(&[]),
            report(&[]),
        ];
        let b = feasibility_breakdown(&mixed).unwrap();
        assert_eq!(b.rate(Constraint::Velocity), 0.5);
        assert_eq!(b.rate(Constraint::YawRate), 0.25);
        assert_eq!(feasibility_breakdown(&[]), Err(EvaluationError::EmptyInput));
    }

    #[test]
    fn unit_quintic_jerk() {
        let path = straight();
        let c = build_candidate(
            &FrenetState::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            &FrenetState::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            1.0,
            0.05,
            &path,
        )
        .unwrap();
        let js = jerk_statistics(&c);
        assert!((js.lon_series[0] - 60.0).abs() < 1e-9);
        assert!((js.lon.max - 60.0).abs() < 1e-9);
        // j(t) = 60 − 360 t + 360 t².
        for (k, j) in js.lon_series.iter().enumerate() {
            let t = k as f64 * 0.05;
            assert!((j - (60.0 - 360.0 * t + 360.0 * t * t)).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_velocity_has_no_jerk() {
        let path = straight();
        let c = build_candidate(
            &FrenetState::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0),
            &FrenetState::new(2.0, 1.0, 0.0, 0.0, 0.0, 0.0),
            2.0,
            0.05,
            &path,
        )
        .unwrap();
        let js = jerk_statistics(&c);
        assert!(js.lon.max < 1e-9 && js.lat.max < 1e-9);
    }
}
