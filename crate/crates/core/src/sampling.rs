//! Trajectory candidates and cluster generation over a terminal-state grid.
//!
//! Longitudinal motion is a quintic in time; lateral motion is a quintic in
//! longitudinal displacement from the cluster's starting arc length. Lateral
//! time derivatives come from the chain rule:
//! `ḋ = d'ṡ`, `d̈ = d''ṡ² + d's̈`, `d⃛ = d'''ṡ³ + 3d''ṡs̈ + d's⃛`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::FeasibilityReport;
use crate::geometry::ReferencePath;
use crate::quintic::{Boundary, QuinticCoeffs, QuinticError};

/// Below this longitudinal speed, lateral slopes `d'`, `d''` are taken as zero.
const MIN_SLOPE_SPEED: f64 = 1e-6;
const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("every sampled terminal configuration was discarded")]
    EmptyCluster,
    #[error("terminal arc length {s_end} exceeds path length {length}")]
    PathTooShort { s_end: f64, length: f64 },
    #[error("longitudinal span {0} is not positive")]
    NonPositiveSpan(f64),
    #[error("candidate moves backwards at t = {t}")]
    Backwards { t: f64 },
    #[error("lateral rate cannot be represented at zero longitudinal speed")]
    LateralAtRest,
    #[error("horizon {horizon} shorter than four samples of {dt}")]
    HorizonTooShort { horizon: f64, dt: f64 },
    #[error("invalid sampling grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Quintic(#[from] QuinticError),
}

/// `[s, ṡ, s̈, d, ḋ, d̈]` in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrenetState {
    pub s: f64,
    pub s_dot: f64,
    pub s_ddot: f64,
    pub d: f64,
    pub d_dot: f64,
    pub d_ddot: f64,
}

impl FrenetState {
    pub const fn new(s: f64, s_dot: f64, s_ddot: f64, d: f64, d_dot: f64, d_ddot: f64) -> Self {
        Self {
            s,
            s_dot,
            s_ddot,
            d,
            d_dot,
            d_ddot,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.s, self.s_dot, self.s_ddot, self.d, self.d_dot, self.d_ddot]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Unweighted Euclidean distance over the full 6-vector.
    pub fn distance(&self, other: &FrenetState) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn lerp(&self, other: &FrenetState, f: f64) -> FrenetState {
        let a = self.to_array();
        let b = other.to_array();
        FrenetState::from_array(std::array::from_fn(|i| a[i] + (b[i] - a[i]) * f))
    }
}

/// Terminal grid for one planning cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub terminal_speeds: Vec<f64>,
    pub lateral_offsets: Vec<f64>,
    pub horizons: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_dt() -> f64 {
    0.05
}

impl SamplingGrid {
    pub fn validate(&self) -> Result<(), SamplingError> {
        let bad = |m: &str| Err(SamplingError::InvalidGrid(m.to_string()));
        if self.terminal_speeds.is_empty() || self.lateral_offsets.is_empty() || self.horizons.is_empty() {
            return bad("grid lists must be non-empty");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        let all = self
            .terminal_speeds
            .iter()
            .chain(&self.lateral_offsets)
            .chain(&self.horizons);
        if all.into_iter().any(|v| !v.is_finite()) {
            return bad("grid values must be finite");
        }
        if self.horizons.iter().any(|h| *h < 4.0 * self.dt - 1e-12) {
            return bad("every horizon must cover at least four samples");
        }
        Ok(())
    }

    /// Horizon snapped to a whole number of samples.
    pub fn quantize(&self, horizon: f64) -> f64 {
        (horizon / self.dt).round() * self.dt
    }
}

/// One sampled instant of a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: FrenetState,
    /// Longitudinal and lateral jerk (m/s³).
    pub jerk: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCandidate {
    /// Longitudinal quintic over `t ∈ [0, horizon]`.
    pub lon: QuinticCoeffs,
    /// Lateral quintic over displacement `s - s(0)`.
    pub lat: QuinticCoeffs,
    pub horizon: f64,
    pub dt: f64,
    pub samples: Vec<TrajectorySample>,
    pub terminal: FrenetState,
    pub cost: Option<f64>,
    pub regulation_energy: Option<f64>,
    pub feasibility: Option<FeasibilityReport>,
    /// True once samples were moved by the optimizer; the quintics then only
    /// describe the seed trajectory.
    pub refined: bool,
}

impl TrajectoryCandidate {
    pub fn initial(&self) -> &FrenetState {
        &self.samples[0].state
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    /// Index of the sample at time `t` (nearest grid point).
    pub fn index_at(&self, t: f64) -> usize {
        ((t / self.dt).round() as usize).min(self.samples.len() - 1)
    }
}

/// Lateral slope and curvature in the displacement domain.
fn lateral_slopes(state: &FrenetState) -> Result<(f64, f64), SamplingError> {
    if state.s_dot.abs() > MIN_SLOPE_SPEED {
        let d1 = state.d_dot / state.s_dot;
        let d2 = (state.d_ddot - d1 * state.s_ddot) / (state.s_dot * state.s_dot);
        Ok((d1, d2))
    } else if state.d_dot.abs() > BOUNDARY_TOL || state.d_ddot.abs() > BOUNDARY_TOL {
        Err(SamplingError::LateralAtRest)
    } else {
        Ok((0.0, 0.0))
    }
}

/// Solves both quintics from `initial` to `terminal` over `horizon` and samples
/// them every `dt`. `horizon` must be a whole number of steps.
pub fn build_candidate(
    initial: &FrenetState,
    terminal: &FrenetState,
    horizon: f64,
    dt: f64,
    path: &ReferencePath,
) -> Result<TrajectoryCandidate, SamplingError> {
    let steps = (horizon / dt).round() as usize;
    if steps < 4 {
        return Err(SamplingError::HorizonTooShort { horizon, dt });
    }
    let horizon = steps as f64 * dt;
    let span = terminal.s - initial.s;
    if !(span > 0.0) {
        return Err(SamplingError::NonPositiveSpan(span));
    }
    if terminal.s > path.total_length() + 1e-9 {
        return Err(SamplingError::PathTooShort {
            s_end: terminal.s,
            length: path.total_length(),
        });
    }
    let lon = QuinticCoeffs::solve(
        Boundary::new(initial.s, initial.s_dot, initial.s_ddot),
        Boundary::new(terminal.s, terminal.s_dot, terminal.s_ddot),
        horizon,
    )?;
    let (d1_0, d2_0) = lateral_slopes(initial)?;
    let (d1_t, d2_t) = lateral_slopes(terminal)?;
    let lat = QuinticCoeffs::solve(
        Boundary::new(initial.d, d1_0, d2_0),
        Boundary::new(terminal.d, d1_t, d2_t),
        span,
    )?;

    let mut samples = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let l = lon.eval(t);
        if l.d1 < -BOUNDARY_TOL {
            return Err(SamplingError::Backwards { t });
        }
        let q = lat.eval(l.value - initial.s);
        let state = FrenetState {
            s: l.value,
            s_dot: l.d1,
            s_ddot: l.d2,
            d: q.value,
            d_dot: q.d1 * l.d1,
            d_ddot: q.d2 * l.d1 * l.d1 + q.d1 * l.d2,
        };
        let lat_jerk = q.d3 * l.d1.powi(3) + 3.0 * q.d2 * l.d1 * l.d2 + q.d1 * l.d3;
        samples.push(TrajectorySample {
            t,
            state,
            jerk: [l.d3, lat_jerk],
        });
    }
    let end = samples[steps].state;
    let mismatch = end
        .to_array()
        .iter()
        .zip(terminal.to_array())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs() / (1.0 + b.abs())));
    debug_assert!(mismatch < 1e-6, "terminal mismatch {mismatch}");
    samples[0].state = *initial;
    samples[steps].state = *terminal;

    Ok(TrajectoryCandidate {
        lon,
        lat,
        horizon,
        dt,
        samples,
        terminal: *terminal,
        cost: None,
        regulation_energy: None,
        feasibility: None,
        refined: false,
    })
}

/// Candidate set produced in one planning cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCluster {
    pub candidates: Vec<TrajectoryCandidate>,
    pub reference_index: usize,
    pub initial: FrenetState,
    /// Set when spacing repair could not close every gap.
    pub budget_exhausted: bool,
}

impl TrajectoryCluster {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn terminals(&self) -> Vec<FrenetState> {
        self.candidates.iter().map(|c| c.terminal).collect()
    }

    /// Stable sort by terminal lateral offset, then terminal speed.
    pub fn sort(&mut self) {
        self.candidates.sort_by(|a, b| {
            a.terminal
                .d
                .total_cmp(&b.terminal.d)
                .then(a.terminal.s_dot.total_cmp(&b.terminal.s_dot))
        });
    }

    pub fn is_sorted(&self) -> bool {
        self.candidates.windows(2).all(|w| {
            let (a, b) = (&w[0].terminal, &w[1].terminal);
            a.d < b.d || (a.d == b.d && a.s_dot <= b.s_dot)
        })
    }

    /// Euclidean distance between consecutive terminal states.
    pub fn consecutive_gaps(&self) -> Vec<f64> {
        self.candidates
            .windows(2)
            .map(|w| w[1].terminal.distance(&w[0].terminal))
            .collect()
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One candidate per (horizon, terminal speed, lateral offset), in that
/// lexicographic order. Terminal progress follows the trapezoidal rule
/// `s(t_τ) = s(0) + (ṡ(0) + v_T) t_τ / 2`; terminal accelerations and lateral
/// rates are zero.
pub fn generate_cluster(
    initial: &FrenetState,
    path: &ReferencePath,
    grid: &SamplingGrid,
) -> Result<TrajectoryCluster, SamplingError> {
    grid.validate()?;
    let mut candidates = Vec::new();
    for horizon in sorted(&grid.horizons) {
        let horizon = grid.quantize(horizon);
        for speed in sorted(&grid.terminal_speeds) {
            let s_end = initial.s + 0.5 * (initial.s_dot + speed) * horizon;
            if s_end - initial.s <= 0.0 {
                continue;
            }
            if s_end > path.total_length() + 1e-9 {
                return Err(SamplingError::PathTooShort {
                    s_end,
                    length: path.total_length(),
                });
            }
            for offset in sorted(&grid.lateral_offsets) {
                let terminal = FrenetState::new(s_end, speed, 0.0, offset, 0.0, 0.0);
                match build_candidate(initial, &terminal, horizon, grid.dt, path) {
                    Ok(c) => candidates.push(c),
                    Err(SamplingError::PathTooShort { s_end, length }) => {
                        return Err(SamplingError::PathTooShort { s_end, length })
                    }
                    Err(SamplingError::LateralAtRest) => return Err(SamplingError::LateralAtRest),
                    Err(_) => {}
                }
            }
        }
    }
    if candidates.is_empty() {
        return Err(SamplingError::EmptyCluster);
    }
    Ok(TrajectoryCluster {
        candidates,
        reference_index: 0,
        initial: *initial,
        budget_exhausted: false,
    })
}
