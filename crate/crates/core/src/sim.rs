//! Closed-loop receding-horizon simulation.
//!
//! Each cycle samples a cluster from the current state, optionally regulates
//! and refines it, keeps feasible candidates, commits the cheapest one for
//! `commit_horizon` seconds and hands its exact end state to the next cycle.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{
    check_candidate, feasibility_breakdown, nn_distance_stats, ClusterStats, FeasibilityBreakdown, FeasibilityReport,
};
use crate::geometry::ReferencePath;
use crate::optimizer::{optimize_trajectory, CostModel, OptimizerConfig, ScenarioContext};
use crate::regulation::{enforce_spacing, RegulationConfig, RegulationError};
use crate::sampling::{generate_cluster, FrenetState, TrajectoryCandidate, TrajectoryCluster, TrajectorySample};
use crate::scenario::{Scenario, ScenarioError};

/// Costs closer than this are ties.
pub const COST_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Proposed,
    Baseline,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Proposed => "proposed",
            Mode::Baseline => "baseline",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proposed" => Ok(Mode::Proposed),
            "baseline" => Ok(Mode::Baseline),
            other => Err(format!("unknown mode {other:?}, expected proposed or baseline")),
        }
    }
}

/// The ablation switches separating the two modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Switches {
    /// Spacing repair of the endpoint chain.
    pub spacing: bool,
    /// Gradient refinement of every candidate.
    pub optimize: bool,
    /// Keep `λ_s`; zero it otherwise.
    pub momentum: bool,
    /// Keep `λ_ep`; zero it otherwise.
    pub terminal: bool,
}

impl Switches {
    pub fn for_mode(mode: Mode) -> Self {
        let on = mode == Mode::Proposed;
        Self {
            spacing: on,
            optimize: on,
            momentum: on,
            terminal: on,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("cycle {cycle}: no feasible candidate among {candidates}")]
    NoFeasibleCandidate {
        cycle: usize,
        candidates: usize,
        log: Box<SimLog>,
    },
    #[error("cycle {cycle}: {source}")]
    Cluster {
        cycle: usize,
        source: RegulationError,
        log: Box<SimLog>,
    },
}

impl SimError {
    /// Log up to the failing cycle, if the run got that far.
    pub fn partial_log(&self) -> Option<&SimLog> {
        match self {
            SimError::NoFeasibleCandidate { log, .. } | SimError::Cluster { log, .. } => Some(log),
            SimError::Scenario(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub terminal: FrenetState,
    pub horizon: f64,
    pub cost: f64,
    pub regulation_energy: f64,
    pub refined: bool,
    pub feasibility: FeasibilityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub t_start: f64,
    pub initial: FrenetState,
    pub selected: usize,
    pub cost: f64,
    pub budget_exhausted: bool,
    pub cluster_stats: Option<ClusterStats>,
    pub breakdown: FeasibilityBreakdown,
    pub candidates: Vec<CandidateRecord>,
    /// Committed prefix, times absolute.
    pub executed: Vec<TrajectorySample>,
}

/// State mismatch at a commit point between the executed end state and the
/// next cycle's start. `fd_acceleration_jump` compares one-sided second
/// differences of position on both sides of the splice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpliceRecord {
    pub cycle: usize,
    pub t: f64,
    pub position_jump: f64,
    pub velocity_jump: f64,
    pub acceleration_jump: f64,
    pub fd_acceleration_jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub scenario: String,
    pub switches: Switches,
    pub seed: u64,
    pub initial: FrenetState,
    pub cycles: Vec<CycleRecord>,
    pub splices: Vec<SpliceRecord>,
    pub final_state: FrenetState,
}

impl SimLog {
    /// Concatenated executed samples with jerk re-estimated as central
    /// differences of the executed acceleration series, so refined and
    /// analytic segments are measured alike.
    pub fn executed_trajectory(&self) -> Vec<TrajectorySample> {
        let mut out: Vec<TrajectorySample> = Vec::new();
        for c in &self.cycles {
            let skip = usize::from(!out.is_empty());
            out.extend(c.executed.iter().skip(skip).copied());
        }
        let n = out.len();
        if n < 2 {
            return out;
        }
        let acc: Vec<[f64; 2]> = out.iter().map(|p| [p.state.s_ddot, p.state.d_ddot]).collect();
        for k in 0..n {
            let (lo, hi) = (k.saturating_sub(1), (k + 1).min(n - 1));
            let span = out[hi].t - out[lo].t;
            out[k].jerk = [(acc[hi][0] - acc[lo][0]) / span, (acc[hi][1] - acc[lo][1]) / span];
        }
        out
    }

    pub fn feasibility_reports(&self) -> impl Iterator<Item = &FeasibilityReport> {
        self.cycles.iter().flat_map(|c| c.candidates.iter().map(|r| &r.feasibility))
    }
}

/// Minimum-cost feasible candidate; ties within [`COST_TIE`] go to the
/// smaller index.
pub fn select_candidate(costs: &[f64], reports: &[FeasibilityReport]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (c, r)) in costs.iter().zip(reports).enumerate() {
        if !r.feasible || !c.is_finite() {
            continue;
        }
        match best {
            Some((_, b)) if *c >= b - COST_TIE => {}
            _ => best = Some((i, *c)),
        }
    }
    best.map(|(i, _)| i)
}

/// Cluster of one cycle, regulated or not.
pub fn cycle_cluster(
    scenario: &Scenario,
    path: &ReferencePath,
    initial: &FrenetState,
    cycle: usize,
    switches: Switches,
) -> Result<TrajectoryCluster, RegulationError> {
    let grid = scenario.cycle_grid(cycle);
    let reg = effective_regulation(scenario, switches);
    let mut cluster = generate_cluster(initial, path, &grid)?;
    cluster.sort();
    if switches.spacing {
        enforce_spacing(&cluster, &reg, path, &grid)
    } else {
        crate::regulation::annotate_energies(&mut cluster, &reg)?;
        Ok(cluster)
    }
}

fn effective_regulation(scenario: &Scenario, switches: Switches) -> RegulationConfig {
    let mut reg = scenario.regulation.clone();
    if !switches.terminal {
        reg.lambda_ep = 0.0;
    }
    reg
}

fn effective_optimizer(scenario: &Scenario, switches: Switches) -> OptimizerConfig {
    let mut cfg = scenario.optimizer.clone();
    if !switches.momentum {
        cfg.lambda_s = 0.0;
    }
    cfg
}

fn fd_acceleration(a: &TrajectorySample, b: &TrajectorySample, c: &TrajectorySample) -> [f64; 2] {
    let dt = b.t - a.t;
    [
        (a.state.s - 2.0 * b.state.s + c.state.s) / (dt * dt),
        (a.state.d - 2.0 * b.state.d + c.state.d) / (dt * dt),
    ]
}

pub fn run(scenario: &Scenario, mode: Mode) -> Result<SimLog, SimError> {
    run_with(scenario, Switches::for_mode(mode))
}

pub fn run_with(scenario: &Scenario, switches: Switches) -> Result<SimLog, SimError> {
    scenario.validate()?;
    let path = scenario
        .reference_path()
        .map_err(|e| ScenarioError::Invalid(vec![crate::scenario::Violation {
            field: "path".into(),
            message: e.to_string(),
        }]))?;
    let reg = effective_regulation(scenario, switches);
    let opt = effective_optimizer(scenario, switches);
    let commit = scenario.sim.commit_horizon;

    let mut log = SimLog {
        scenario: scenario.name.clone(),
        switches,
        seed: scenario.sim.seed,
        initial: scenario.initial,
        cycles: Vec::new(),
        splices: Vec::new(),
        final_state: scenario.initial,
    };
    let mut state = scenario.initial;

    for cycle in 0..scenario.sim.n_cycles {
        let t_start = cycle as f64 * scenario.sim.cycle_period;
        let cluster = match cycle_cluster(scenario, &path, &state, cycle, switches) {
            Ok(c) => c,
            Err(source) => {
                return Err(SimError::Cluster {
                    cycle,
                    source,
                    log: Box::new(log),
                })
            }
        };
        let neighbors = scenario.agents_at(t_start);
        let ctx = ScenarioContext {
            path: &path,
            neighbors: &neighbors,
            assistive: &scenario.assistive,
            interaction: &scenario.interaction,
            sigma_baseline: scenario.sigma_baseline,
        };
        let reference = &cluster.candidates[cluster.reference_index];
        let model = CostModel {
            ctx,
            config: &opt,
            regulation: &reg,
            reference,
        };
        let candidates: Vec<TrajectoryCandidate> = cluster
            .candidates
            .par_iter()
            .map(|c| {
                let mut c = if switches.optimize {
                    optimize_trajectory(c, &model).candidate
                } else {
                    let mut c = c.clone();
                    c.cost = Some(model.total_cost(&c));
                    c
                };
                c.feasibility = Some(check_candidate(&c, &path, &scenario.limits));
                c
            })
            .collect();

        let costs: Vec<f64> = candidates.iter().map(|c| c.cost.unwrap_or(f64::INFINITY)).collect();
        let reports: Vec<FeasibilityReport> = candidates
            .iter()
            .map(|c| c.feasibility.clone().expect("checked above"))
            .collect();
        let records: Vec<CandidateRecord> = candidates
            .iter()
            .zip(&reports)
            .map(|(c, r)| CandidateRecord {
                terminal: c.terminal,
                horizon: c.horizon,
                cost: c.cost.unwrap_or(f64::INFINITY),
                regulation_energy: c.regulation_energy.unwrap_or(0.0),
                refined: c.refined,
                feasibility: r.clone(),
            })
            .collect();
        let breakdown = feasibility_breakdown(&reports).expect("cluster is non-empty");
        let cluster_stats = nn_distance_stats(&cluster).ok();

        let Some(selected) = select_candidate(&costs, &reports) else {
            log.cycles.push(CycleRecord {
                cycle,
                t_start,
                initial: state,
                selected: usize::MAX,
                cost: f64::INFINITY,
                budget_exhausted: cluster.budget_exhausted,
                cluster_stats,
                breakdown,
                candidates: records,
                executed: Vec::new(),
            });
            return Err(SimError::NoFeasibleCandidate {
                cycle,
                candidates: candidates.len(),
                log: Box::new(log),
            });
        };

        let chosen = &candidates[selected];
        let m = chosen.index_at(commit);
        let executed: Vec<TrajectorySample> = chosen.samples[..=m]
            .iter()
            .map(|p| TrajectorySample {
                t: t_start + p.t,
                ..*p
            })
            .collect();
        let end = executed[m].state;

        if let Some(prev) = log.cycles.last() {
            let prev_end = prev.executed.last().expect("committed cycles are non-empty");
            let a = &prev.executed[prev.executed.len().saturating_sub(3)..];
            let b = &executed[..3.min(executed.len())];
            let fd_jump = if a.len() == 3 && b.len() == 3 {
                let back = fd_acceleration(&a[0], &a[1], &a[2]);
                let fwd = fd_acceleration(&b[0], &b[1], &b[2]);
                (back[0] - fwd[0]).hypot(back[1] - fwd[1])
            } else {
                0.0
            };
            let (p, q) = (prev_end.state, executed[0].state);
            log.splices.push(SpliceRecord {
                cycle: cycle - 1,
                t: t_start,
                position_jump: (p.s - q.s).hypot(p.d - q.d),
                velocity_jump: (p.s_dot - q.s_dot).hypot(p.d_dot - q.d_dot),
                acceleration_jump: (p.s_ddot - q.s_ddot).hypot(p.d_ddot - q.d_ddot),
                fd_acceleration_jump: fd_jump,
            });
        }

        log.cycles.push(CycleRecord {
            cycle,
            t_start,
            initial: state,
            selected,
            cost: costs[selected],
            budget_exhausted: cluster.budget_exhausted,
            cluster_stats,
            breakdown,
            candidates: records,
            executed,
        });
        state = end;
        log.final_state = state;
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn report(feasible: bool) -> FeasibilityReport {
        FeasibilityReport {
            feasible,
            violations: BTreeSet::new(),
            worst_margins: BTreeMap::new(),
            degenerate_samples: Vec::new(),
        }
    }

    #[test]
    fn selection_rules() {
        assert_eq!(select_candidate(&[5.0], &[report(true)]), Some(0));
        assert_eq!(select_candidate(&[3.0, 2.0], &[report(true), report(true)]), Some(1));
        assert_eq!(select_candidate(&[2.0, 2.0 + 1e-13], &[report(true), report(true)]), Some(0));
        assert_eq!(select_candidate(&[2.0 + 1e-13, 2.0], &[report(true), report(true)]), Some(0));
        assert_eq!(select_candidate(&[1.0, 2.0], &[report(false), report(true)]), Some(1));
        assert_eq!(select_candidate(&[1.0], &[report(false)]), None);
    }

    #[test]
    fn zero_cycles_echo_initial_state() {
        let mut s = crate::scenario::straight_empty();
        s.sim.n_cycles = 0;
        let log = run(&s, Mode::Proposed).unwrap();
        assert!(log.cycles.is_empty() && log.splices.is_empty());
        assert_eq!(log.final_state, s.initial);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("baseline".parse::<Mode>(), Ok(Mode::Baseline));
        assert!("other".parse::<Mode>().is_err());
    }
}
