//! Momentum-aware refinement of a sampled candidate.
//!
//! The running cost is discretized on the candidate's own time grid.
//! Boundary nodes use their stored states; interior velocities and
//! accelerations are central differences of positions, so the decision vector
//! is positions only. Nodes `0, 1, N-1, N` never move, which keeps both
//! boundary states (and their difference estimates) intact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forces::{assistive_generic, interaction_generic, AssistiveParams, InteractionParams, Jet, Neighbor, Scalar};
use crate::geometry::{PathFrame, ReferencePath};
use crate::regulation::{regulation_energy, RegulationConfig};
use crate::sampling::{FrenetState, TrajectoryCandidate, TrajectorySample};
use crate::vec2::Vec2;

/// Double-integrator chain per Frenet axis, state `[s, ṡ, s̈, d, ḋ, d̈]`, input
/// `u = (s⃛, d⃛)`, full-state output.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicModel {
    pub a: [[f64; 6]; 6],
    pub b: [[f64; 2]; 6],
    pub c: [[f64; 6]; 6],
    pub d: [[f64; 2]; 6],
}

impl Default for KinematicModel {
    fn default() -> Self {
        let mut a = [[0.0; 6]; 6];
        let mut b = [[0.0; 2]; 6];
        let mut c = [[0.0; 6]; 6];
        for axis in 0..2 {
            let o = 3 * axis;
            a[o][o + 1] = 1.0;
            a[o + 1][o + 2] = 1.0;
            b[o + 2][axis] = 1.0;
        }
        for (i, row) in c.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self {
            a,
            b,
            c,
            d: [[0.0; 2]; 6],
        }
    }
}

impl KinematicModel {
    /// `A ξ + B u`.
    pub fn derivative(&self, xi: &[f64; 6], u: [f64; 2]) -> [f64; 6] {
        std::array::from_fn(|i| {
            (0..6).map(|j| self.a[i][j] * xi[j]).sum::<f64>() + self.b[i][0] * u[0] + self.b[i][1] * u[1]
        })
    }

    /// `C ξ + D u`.
    pub fn output(&self, xi: &[f64; 6], u: [f64; 2]) -> [f64; 6] {
        std::array::from_fn(|i| {
            (0..6).map(|j| self.c[i][j] * xi[j]).sum::<f64>() + self.d[i][0] * u[0] + self.d[i][1] * u[1]
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub mass_m: f64,
    pub lambda_s: f64,
    pub lambda_u: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub step_shrink: f64,
    pub grad_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            mass_m: 1.0,
            lambda_s: 0.1,
            lambda_u: 0.05,
            max_iters: 50,
            armijo_c: 1e-4,
            step_shrink: 0.5,
            grad_tol: 1e-6,
        }
    }
}

impl OptimizerConfig {
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.mass_m.is_finite() && self.mass_m > 0.0) {
            out.push(("mass_m", "must be positive".to_string()));
        }
        for (name, v) in [("lambda_s", self.lambda_s), ("lambda_u", self.lambda_u), ("grad_tol", self.grad_tol)] {
            if !(v.is_finite() && v >= 0.0) {
                out.push((name, "must be non-negative".to_string()));
            }
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            out.push(("armijo_c", "must lie in (0, 1)".to_string()));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            out.push(("step_shrink", "must lie in (0, 1)".to_string()));
        }
        out
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        match self.violations().first() {
            None => Ok(()),
            Some((field, msg)) => Err(OptimizerError::InvalidConfig(format!("{field}: {msg}"))),
        }
    }
}

/// `½ m ‖v‖² − F_ext·v + λ_s ‖v̇‖² + λ_u σ` with `v = (ṡ, ḋ)`.
pub fn lagrangian_at(
    state: &FrenetState,
    v_dot: Vec2,
    f_ext: Vec2,
    sigma_trace: f64,
    config: &OptimizerConfig,
) -> f64 {
    let v = Vec2::new(state.s_dot, state.d_dot);
    0.5 * config.mass_m * v.dot(v) - f_ext.dot(v) + config.lambda_s * v_dot.dot(v_dot) + config.lambda_u * sigma_trace
}

/// Read-only environment of one optimization.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioContext<'a> {
    pub path: &'a ReferencePath,
    /// Neighbor states at the candidate's `t = 0`.
    pub neighbors: &'a [Neighbor],
    pub assistive: &'a AssistiveParams,
    pub interaction: &'a InteractionParams,
    /// Uncertainty trace not attributed to any neighbor.
    pub sigma_baseline: f64,
}

impl ScenarioContext<'_> {
    pub fn sigma_trace(&self) -> f64 {
        self.sigma_baseline + self.neighbors.iter().map(|n| n.covariance_trace).sum::<f64>()
    }

    /// External modulation in Frenet components at time `t`: the assistive
    /// shaping plus the interaction repulsion projected on the local frame.
    pub fn external_force(&self, state: &FrenetState, t: f64) -> Vec2 {
        let frame = self.frame_at::<f64>(state.s, |v, _| v);
        let [fs, fd] = external_generic(self, &frame, state.s, state.s_dot, state.d, state.d_dot, t);
        Vec2::new(fs, fd)
    }
}

impl ScenarioContext<'_> {
    /// Only the interaction term needs the frame; skip the arc-length
    /// inversion when nobody is around.
    fn frame_at<S: Scalar>(&self, s: f64, lift: impl Fn(f64, f64) -> S) -> [S; 5] {
        if self.neighbors.is_empty() {
            [S::cst(0.0); 5]
        } else {
            frame_scalars(&self.path.frame_clamped(s), lift)
        }
    }
}

/// Frame quantities lifted to a scalar type: `[r.x, r.y, t.x, t.y, κ]`.
fn frame_scalars<S: Scalar>(f: &PathFrame, lift: impl Fn(f64, f64) -> S) -> [S; 5] {
    let k = f.curvature;
    // Along s: r' = t, t' = κ n.
    [
        lift(f.point.x, f.tangent.x),
        lift(f.point.y, f.tangent.y),
        lift(f.tangent.x, k * f.normal.x),
        lift(f.tangent.y, k * f.normal.y),
        lift(k, f.curvature_rate),
    ]
}

fn external_generic<S: Scalar>(
    ctx: &ScenarioContext,
    frame: &[S; 5],
    s: S,
    s_dot: S,
    d: S,
    d_dot: S,
    t: f64,
) -> [S; 2] {
    let [fa_s, fa_d] = assistive_generic(ctx.assistive, s, s_dot, d, d_dot);
    if ctx.neighbors.is_empty() {
        return [fa_s, fa_d];
    }
    let [rx, ry, tx, ty, kappa] = *frame;
    // Left normal.
    let (nx, ny) = (-ty, tx);
    let pos = [rx + d * nx, ry + d * ny];
    let along = (S::cst(1.0) - kappa * d) * s_dot;
    let vel = [along * tx + d_dot * nx, along * ty + d_dot * ny];
    let (fi, _) = interaction_generic(
        pos,
        vel,
        ctx.neighbors.iter().map(|n| (n.position_at(t), n.velocity)),
        ctx.interaction,
    );
    let fi_s = fi[0] * tx + fi[1] * ty;
    let fi_d = fi[0] * nx + fi[1] * ny;
    [fa_s + fi_s, fa_d + fi_d]
}

/// Lagrangian without the acceleration and uncertainty terms.
fn velocity_terms<S: Scalar>(
    ctx: &ScenarioContext,
    config: &OptimizerConfig,
    frame: &[S; 5],
    x: [S; 4],
    t: f64,
) -> S {
    let [s, s_dot, d, d_dot] = x;
    let [fs, fd] = external_generic(ctx, frame, s, s_dot, d, d_dot, t);
    S::cst(0.5 * config.mass_m) * (s_dot * s_dot + d_dot * d_dot) - (fs * s_dot + fd * d_dot)
}

/// Node states seen by the discretized functional.
fn node_states(positions: &[[f64; 2]], first: &FrenetState, last: &FrenetState, dt: f64) -> Vec<FrenetState> {
    let n = positions.len() - 1;
    (0..=n)
        .map(|k| {
            if k == 0 {
                *first
            } else if k == n {
                *last
            } else {
                let (p, c, q) = (positions[k - 1], positions[k], positions[k + 1]);
                FrenetState {
                    s: c[0],
                    s_dot: (q[0] - p[0]) / (2.0 * dt),
                    s_ddot: (q[0] - 2.0 * c[0] + p[0]) / (dt * dt),
                    d: c[1],
                    d_dot: (q[1] - p[1]) / (2.0 * dt),
                    d_ddot: (q[1] - 2.0 * c[1] + p[1]) / (dt * dt),
                }
            }
        })
        .collect()
}

fn trapezoid_weight(k: usize, n: usize, dt: f64) -> f64 {
    if k == 0 || k == n {
        0.5 * dt
    } else {
        dt
    }
}

/// Running cost plus `λ_ep` times the regulation energy against `reference`.
#[derive(Debug, Clone, Copy)]
pub struct CostModel<'a> {
    pub ctx: ScenarioContext<'a>,
    pub config: &'a OptimizerConfig,
    pub regulation: &'a RegulationConfig,
    pub reference: &'a TrajectoryCandidate,
}

impl CostModel<'_> {
    fn running(&self, positions: &[[f64; 2]], first: &FrenetState, last: &FrenetState, dt: f64) -> f64 {
        let n = positions.len() - 1;
        let sigma = self.ctx.sigma_trace();
        node_states(positions, first, last, dt)
            .iter()
            .enumerate()
            .map(|(k, st)| {
                let t = k as f64 * dt;
                let f_ext = self.ctx.external_force(st, t);
                let l = lagrangian_at(st, Vec2::new(st.s_ddot, st.d_ddot), f_ext, sigma, self.config);
                trapezoid_weight(k, n, dt) * l
            })
            .sum()
    }

    fn terminal(&self, candidate: &TrajectoryCandidate) -> f64 {
        self.regulation.lambda_ep * regulation_energy(candidate, self.reference, self.regulation)
    }

    /// Discretized objective of a candidate as stored.
    pub fn total_cost(&self, candidate: &TrajectoryCandidate) -> f64 {
        let positions = positions_of(candidate);
        let n = positions.len() - 1;
        self.running(&positions, &candidate.samples[0].state, &candidate.samples[n].state, candidate.dt)
            + self.terminal(candidate)
    }

    /// Gradient of the running cost with respect to every node position.
    /// Entries for fixed nodes are computed but ignored by the optimizer.
    fn position_gradient(&self, positions: &[[f64; 2]], first: &FrenetState, last: &FrenetState, dt: f64) -> Vec<[f64; 2]> {
        let n = positions.len() - 1;
        let mut grad = vec![[0.0; 2]; n + 1];
        let states = node_states(positions, first, last, dt);
        for k in 1..n {
            let st = &states[k];
            let t = k as f64 * dt;
            let frame = self.ctx.frame_at::<Jet<4>>(st.s, |v, ds| Jet::with_grad(v, [ds, 0.0, 0.0, 0.0]));
            let x = [
                Jet::var(st.s, 0),
                Jet::var(st.s_dot, 1),
                Jet::var(st.d, 2),
                Jet::var(st.d_dot, 3),
            ];
            let g = velocity_terms(&self.ctx, self.config, &frame, x, t).g;
            let w = trapezoid_weight(k, n, dt);
            let l_acc = [2.0 * self.config.lambda_s * st.s_ddot, 2.0 * self.config.lambda_s * st.d_ddot];
            let l_pos = [g[0], g[2]];
            let l_vel = [g[1], g[3]];
            for axis in 0..2 {
                let dv = w * l_vel[axis] / (2.0 * dt);
                let da = w * l_acc[axis] / (dt * dt);
                grad[k + 1][axis] += dv + da;
                grad[k - 1][axis] += -dv + da;
                grad[k][axis] += w * l_pos[axis] - 2.0 * da;
            }
        }
        grad
    }
}

/// `total_cost` with a freshly built [`CostModel`].
pub fn total_cost(
    candidate: &TrajectoryCandidate,
    ctx: &ScenarioContext,
    reference: &TrajectoryCandidate,
    config: &OptimizerConfig,
    reg: &RegulationConfig,
) -> f64 {
    CostModel {
        ctx: *ctx,
        config,
        regulation: reg,
        reference,
    }
    .total_cost(candidate)
}

fn positions_of(candidate: &TrajectoryCandidate) -> Vec<[f64; 2]> {
    candidate.samples.iter().map(|p| [p.state.s, p.state.d]).collect()
}

/// Indices of movable nodes.
fn free_range(n_nodes: usize) -> std::ops::Range<usize> {
    if n_nodes < 5 {
        0..0
    } else {
        2..n_nodes - 2
    }
}

/// Flattened decision vector `[s_2, d_2, s_3, d_3, ...]`.
pub fn decision_vars(candidate: &TrajectoryCandidate) -> Vec<f64> {
    let positions = positions_of(candidate);
    free_range(positions.len()).flat_map(|k| positions[k]).collect()
}

fn with_vars(base: &[[f64; 2]], vars: &[f64]) -> Vec<[f64; 2]> {
    let mut p = base.to_vec();
    for (j, k) in free_range(base.len()).enumerate() {
        p[k] = [vars[2 * j], vars[2 * j + 1]];
    }
    p
}

impl CostModel<'_> {
    /// Objective as a function of the decision vector around `candidate`.
    pub fn cost_at(&self, candidate: &TrajectoryCandidate, vars: &[f64]) -> f64 {
        let p = with_vars(&positions_of(candidate), vars);
        let n = p.len() - 1;
        self.running(&p, &candidate.samples[0].state, &candidate.samples[n].state, candidate.dt)
            + self.terminal(candidate)
    }

    /// Exact gradient of [`Self::cost_at`].
    pub fn cost_gradient(&self, candidate: &TrajectoryCandidate, vars: &[f64]) -> Vec<f64> {
        let p = with_vars(&positions_of(candidate), vars);
        let n = p.len() - 1;
        let g = self.position_gradient(&p, &candidate.samples[0].state, &candidate.samples[n].state, candidate.dt);
        free_range(p.len()).flat_map(|k| g[k]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIters,
    LineSearchFailed,
    NothingToOptimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationOutcome {
    pub candidate: TrajectoryCandidate,
    /// Objective after each accepted iterate, starting with the input.
    pub cost_history: Vec<f64>,
    pub termination: Termination,
}

const MIN_STEP: f64 = 1e-14;

/// Projected gradient descent with Armijo backtracking on interior positions.
/// `s` is kept within the path. The returned candidate carries its cost.
pub fn optimize_trajectory(
    candidate: &TrajectoryCandidate,
    model: &CostModel,
) -> OptimizationOutcome {
    let config = model.config;
    let length = model.ctx.path.total_length();
    let mut x = decision_vars(candidate);
    let mut cost = model.cost_at(candidate, &x);
    let mut history = vec![cost];
    let mut out = candidate.clone();
    out.cost = Some(cost);
    if x.is_empty() || config.max_iters == 0 {
        let termination = if x.is_empty() {
            Termination::NothingToOptimize
        } else {
            Termination::MaxIters
        };
        return OptimizationOutcome {
            candidate: out,
            cost_history: history,
            termination,
        };
    }

    let mut step = 1.0;
    let mut termination = Termination::MaxIters;
    for _ in 0..config.max_iters {
        let g = model.cost_gradient(candidate, &x);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm <= config.grad_tol {
            termination = Termination::Converged;
            break;
        }
        let mut accepted = None;
        while step >= MIN_STEP {
            let trial: Vec<f64> = x
                .iter()
                .zip(&g)
                .enumerate()
                .map(|(i, (xi, gi))| {
                    let v = xi - step * gi;
                    if i % 2 == 0 {
                        v.clamp(0.0, length)
                    } else {
                        v
                    }
                })
                .collect();
            let decrease: f64 = g.iter().zip(trial.iter().zip(&x)).map(|(gi, (a, b))| gi * (b - a)).sum();
            let c = model.cost_at(candidate, &trial);
            if c.is_finite() && c <= cost - config.armijo_c * decrease && decrease > 0.0 {
                accepted = Some((trial, c));
                break;
            }
            step *= config.step_shrink;
        }
        match accepted {
            Some((trial, c)) => {
                x = trial;
                cost = c;
                history.push(c);
                step /= config.step_shrink;
            }
            None => {
                termination = Termination::LineSearchFailed;
                break;
            }
        }
    }

    if history.len() > 1 {
        out = refined_candidate(candidate, &x);
    }
    out.cost = Some(cost);
    OptimizationOutcome {
        candidate: out,
        cost_history: history,
        termination,
    }
}

/// Writes optimized positions back, with interior rates from central
/// differences and jerk from differences of the acceleration series.
fn refined_candidate(candidate: &TrajectoryCandidate, vars: &[f64]) -> TrajectoryCandidate {
    let p = with_vars(&positions_of(candidate), vars);
    let n = p.len() - 1;
    let dt = candidate.dt;
    let states = node_states(&p, &candidate.samples[0].state, &candidate.samples[n].state, dt);
    let mut out = candidate.clone();
    out.samples = states
        .iter()
        .enumerate()
        .map(|(k, st)| TrajectorySample {
            t: candidate.samples[k].t,
            state: *st,
            jerk: [0.0; 2],
        })
        .collect();
    let acc: Vec<[f64; 2]> = states.iter().map(|s| [s.s_ddot, s.d_ddot]).collect();
    for k in 0..=n {
        let (lo, hi) = (k.saturating_sub(1), (k + 1).min(n));
        let span = (hi - lo) as f64 * dt;
        out.samples[k].jerk = [(acc[hi][0] - acc[lo][0]) / span, (acc[hi][1] - acc[lo][1]) / span];
    }
    out.refined = true;
    out
}
