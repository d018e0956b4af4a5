//! Endpoint regulation: the weighted terminal-deviation energy against a
//! reference candidate, and spacing repair of the sorted terminal chain.
//!
//! Spacing repair enforces two bounds on consecutive terminal distances: an
//! upper bound `delta0` (gaps are filled with candidates re-solved toward
//! linearly interpolated terminal states) and a floor `epsilon_min` (near
//! duplicates are dropped).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::ReferencePath;
use crate::sampling::{
    build_candidate, generate_cluster, SamplingError, SamplingGrid, TrajectoryCandidate,
    TrajectoryCluster,
};

/// Most candidates inserted into a single gap.
pub const GAP_INSERT_BUDGET: usize = 8;
/// Slack on both spacing bounds.
pub const SPACING_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegulationError {
    #[error("cluster is empty")]
    EmptyCluster,
    #[error("invalid regulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Terminal `[ṡ, s̈, ḋ, d̈]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalKinematics {
    pub eta: [f64; 4],
}

impl From<&TrajectoryCandidate> for TerminalKinematics {
    fn from(c: &TrajectoryCandidate) -> Self {
        let t = &c.terminal;
        Self {
            eta: [t.s_dot, t.s_ddot, t.d_dot, t.d_ddot],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegulationConfig {
    /// Diagonal of the terminal weighting matrix.
    pub w_ep: [f64; 4],
    pub delta0: f64,
    pub epsilon_min: f64,
    pub lambda_ep: f64,
}

impl Default for RegulationConfig {
    fn default() -> Self {
        Self {
            w_ep: [1.0, 0.5, 1.0, 0.5],
            delta0: 0.5,
            epsilon_min: 0.02,
            lambda_ep: 1.0,
        }
    }
}

impl RegulationConfig {
    /// Every violated invariant as `(field, message)`.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.w_ep.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            out.push(("w_ep", "weights must be finite and nonnegative".to_string()));
        }
        if !(self.epsilon_min.is_finite() && self.epsilon_min >= 0.0) {
            out.push(("epsilon_min", "must be finite and nonnegative".to_string()));
        }
        if !(self.delta0.is_finite() && self.delta0 > self.epsilon_min) {
            out.push((
                "delta0",
                format!(
                    "must exceed epsilon_min ({} <= {})",
                    self.delta0, self.epsilon_min
                ),
            ));
        }
        if !(self.lambda_ep.is_finite() && self.lambda_ep >= 0.0) {
            out.push(("lambda_ep", "must be finite and nonnegative".to_string()));
        }
        out
    }

    pub fn validate(&self) -> Result<(), RegulationError> {
        match self.violations().first() {
            None => Ok(()),
            Some((field, msg)) => Err(RegulationError::InvalidConfig(format!("{field}: {msg}"))),
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Candidate whose terminal `(d, ṡ)` is nearest `(0, median terminal speed)`.
/// Distances within `1e-9` count as ties and go to the smaller index.
pub fn select_reference_candidate(cluster: &TrajectoryCluster) -> Result<usize, RegulationError> {
    if cluster.is_empty() {
        return Err(RegulationError::EmptyCluster);
    }
    let mut speeds: Vec<f64> = cluster.candidates.iter().map(|c| c.terminal.s_dot).collect();
    let target = median(&mut speeds);
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, c) in cluster.candidates.iter().enumerate() {
        let dist = c.terminal.d.hypot(c.terminal.s_dot - target);
        if dist < best_dist - 1e-9 {
            best = i;
            best_dist = dist;
        }
    }
    Ok(best)
}

/// `‖W_ep (η_i − η_ref)‖²`.
pub fn regulation_energy(
    candidate: &TrajectoryCandidate,
    reference: &TrajectoryCandidate,
    config: &RegulationConfig,
) -> f64 {
    let a = TerminalKinematics::from(candidate).eta;
    let b = TerminalKinematics::from(reference).eta;
    (0..4)
        .map(|i| {
            let r = config.w_ep[i] * (a[i] - b[i]);
            r * r
        })
        .sum()
}

/// Reselects the reference and stores each candidate's energy against it.
pub fn annotate_energies(
    cluster: &mut TrajectoryCluster,
    config: &RegulationConfig,
) -> Result<(), RegulationError> {
    cluster.reference_index = select_reference_candidate(cluster)?;
    let reference = cluster.candidates[cluster.reference_index].clone();
    for c in &mut cluster.candidates {
        c.regulation_energy = Some(regulation_energy(c, &reference, config));
    }
    Ok(())
}

/// Drops near-duplicate terminals and fills over-wide gaps in the sorted
/// chain. Returns a new cluster; `budget_exhausted` is set when some gap could
/// not be brought within bounds.
pub fn enforce_spacing(
    cluster: &TrajectoryCluster,
    config: &RegulationConfig,
    path: &ReferencePath,
    grid: &SamplingGrid,
) -> Result<TrajectoryCluster, RegulationError> {
    config.validate()?;
    if cluster.is_empty() {
        return Err(RegulationError::EmptyCluster);
    }

    let mut kept: Vec<TrajectoryCandidate> = Vec::with_capacity(cluster.len());
    for c in &cluster.candidates {
        match kept.last() {
            Some(prev) if c.terminal.distance(&prev.terminal) < config.epsilon_min - SPACING_TOL => {}
            _ => kept.push(c.clone()),
        }
    }

    let mut budget_exhausted = cluster.budget_exhausted;
    let mut out: Vec<TrajectoryCandidate> = Vec::with_capacity(kept.len() * 2);
    let mut iter = kept.into_iter();
    let first = iter.next().ok_or(RegulationError::EmptyCluster)?;
    out.push(first);
    for next in iter {
        let prev = out.last().expect("non-empty").clone();
        let gap = next.terminal.distance(&prev.terminal);
        if gap > config.delta0 + SPACING_TOL {
            let pieces = (gap / config.delta0 - 1e-12).ceil() as usize;
            let mut inserts = pieces - 1;
            if inserts > GAP_INSERT_BUDGET {
                inserts = GAP_INSERT_BUDGET;
                budget_exhausted = true;
            }
            if gap / ((inserts + 1) as f64) < config.epsilon_min - SPACING_TOL {
                budget_exhausted = true;
            }
            for k in 1..=inserts {
                let f = k as f64 / (inserts + 1) as f64;
                let terminal = prev.terminal.lerp(&next.terminal, f);
                let horizon = grid.quantize(prev.horizon + (next.horizon - prev.horizon) * f);
                match build_candidate(&cluster.initial, &terminal, horizon, grid.dt, path) {
                    Ok(c) => out.push(c),
                    Err(_) => budget_exhausted = true,
                }
            }
        }
        out.push(next);
    }

    let mut result = TrajectoryCluster {
        candidates: out,
        reference_index: 0,
        initial: cluster.initial,
        budget_exhausted,
    };
    result.sort();
    annotate_energies(&mut result, config)?;
    Ok(result)
}

/// `generate_cluster` → sort → `enforce_spacing`, with energies attached.
pub fn regulated_cluster(
    initial: &crate::sampling::FrenetState,
    path: &ReferencePath,
    grid: &SamplingGrid,
    config: &RegulationConfig,
) -> Result<TrajectoryCluster, RegulationError> {
    let mut cluster = generate_cluster(initial, path, grid)?;
    cluster.sort();
    enforce_spacing(&cluster, config, path, grid)
}

/// Same pipeline without spacing repair.
pub fn unregulated_cluster(
    initial: &crate::sampling::FrenetState,
    path: &ReferencePath,
    grid: &SamplingGrid,
    config: &RegulationConfig,
) -> Result<TrajectoryCluster, RegulationError> {
    let mut cluster = generate_cluster(initial, path, grid)?;
    cluster.sort();
    annotate_energies(&mut cluster, config)?;
    Ok(cluster)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quintic::QuinticCoeffs;
    use crate::sampling::FrenetState;
    use crate::vec2::Vec2;

    fn stub(terminal: FrenetState) -> TrajectoryCandidate {
        TrajectoryCandidate {
            lon: QuinticCoeffs::default(),
            lat: QuinticCoeffs::default(),
            horizon: 2.0,
            dt: 0.05,
            samples: Vec::new(),
            terminal,
            cost: None,
            regulation_energy: None,
            feasibility: None,
            refined: false,
        }
    }

    fn cluster_of(terms: &[FrenetState]) -> TrajectoryCluster {
        TrajectoryCluster {
            candidates: terms.iter().copied().map(stub).collect(),
            reference_index: 0,
            initial: FrenetState::default(),
            budget_exhausted: false,
        }
    }

    fn line() -> ReferencePath {
        let pts: Vec<Vec2> = (0..=10).map(|i| Vec2::new(3.0 * i as f64, 0.0)).collect();
        ReferencePath::new(&pts).unwrap()
    }

    #[test]
    fn reference_selection() {
        let one = cluster_of(&[FrenetState::new(2.0, 1.0, 0.0, 0.4, 0.0, 0.0)]);
        assert_eq!(select_reference_candidate(&one).unwrap(), 0);

        let three = cluster_of(&[
            FrenetState::new(2.0, 1.0, 0.0, -1.0, 0.0, 0.0),
            FrenetState::new(2.0, 1.0, 0.0, 0.0, 0.0, 0.0),
            FrenetState::new(2.0, 1.0, 0.0, 1.0, 0.0, 0.0),
        ]);
        assert_eq!(select_reference_candidate(&three).unwrap(), 1);

        let four = cluster_of(&[
            FrenetState::new(2.0, 0.8, 0.0, 0.0, 0.0, 0.0),
            FrenetState::new(2.0, 1.0, 0.0, 0.0, 0.0, 0.0),
            FrenetState::new(2.0, 1.2, 0.0, 0.0, 0.0, 0.0),
            FrenetState::new(2.0, 1.4, 0.0, 0.0, 0.0, 0.0),
        ]);
        assert_eq!(select_reference_candidate(&four).unwrap(), 1);

        assert_eq!(
            select_reference_candidate(&cluster_of(&[])),
            Err(RegulationError::EmptyCluster)
        );
    }

    #[test]
    fn energy_examples() {
        let base = FrenetState::new(3.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        let a = stub(base);
        let mut cfg = RegulationConfig {
            w_ep: [1.0; 4],
            ..Default::default()
        };
        assert_eq!(regulation_energy(&a, &a, &cfg), 0.0);
        let b = stub(FrenetState { s_dot: 2.0, ..base });
        assert_eq!(regulation_energy(&b, &a, &cfg), 1.0);
        cfg.w_ep = [2.0, 1.0, 1.0, 1.0];
        let c = stub(FrenetState {
            s_dot: 2.0,
            s_ddot: 1.0,
            ..base
        });
        assert_eq!(regulation_energy(&c, &a, &cfg), 5.0);
    }

    #[test]
    fn duplicates_removed() {
        let path = line();
        let grid = SamplingGrid {
            terminal_speeds: vec![1.0],
            lateral_offsets: vec![0.0],
            horizons: vec![2.0],
            dt: 0.05,
        };
        let init = FrenetState::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        let term = FrenetState::new(2.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        let c = build_candidate(&init, &term, 2.0, 0.05, &path).unwrap();
        let cluster = TrajectoryCluster {
            candidates: vec![c.clone(), c],
            reference_index: 0,
            initial: init,
            budget_exhausted: false,
        };
        let cfg = RegulationConfig {
            epsilon_min: 0.01,
            ..Default::default()
        };
        let out = enforce_spacing(&cluster, &cfg, &path, &grid).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn wide_gap_is_filled() {
        let path = line();
        let grid = SamplingGrid {
            terminal_speeds: vec![1.0],
            lateral_offsets: vec![0.0, 1.0],
            horizons: vec![2.0],
            dt: 0.05,
        };
        let init = FrenetState::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        let mut cluster = generate_cluster(&init, &path, &grid).unwrap();
        cluster.sort();
        let cfg = RegulationConfig {
            delta0: 0.3,
            ..Default::default()
        };
        let out = enforce_spacing(&cluster, &cfg, &path, &grid).unwrap();
        // ceil(1 / 0.3) - 1 = 3 insertions.
        assert_eq!(out.len(), 5);
        assert!(out.consecutive_gaps().iter().all(|g| *g <= 0.3 + SPACING_TOL));
        assert!(out.is_sorted());
        assert!(!out.budget_exhausted);
    }

    #[test]
    fn satisfied_cluster_unchanged() {
        let path = line();
        let grid = SamplingGrid {
            terminal_speeds: vec![1.0],
            lateral_offsets: vec![-0.4, 0.0, 0.3],
            horizons: vec![2.0],
            dt: 0.05,
        };
        let init = FrenetState::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        let mut cluster = generate_cluster(&init, &path, &grid).unwrap();
        cluster.sort();
        let out = enforce_spacing(&cluster, &RegulationConfig::default(), &path, &grid).unwrap();
        assert_eq!(out.terminals(), cluster.terminals());
        assert_eq!(out.reference_index, 1);
    }

    #[test]
    fn config_violations_name_fields() {
        let cfg = RegulationConfig {
            delta0: 0.01,
            epsilon_min: 0.02,
            ..Default::default()
        };
        let v = cfg.violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].0, "delta0");
    }
}
