//! Sampling-based local trajectory planning in the Frenet frame with
//! endpoint regulation and momentum-aware refinement.
//!
//! The pipeline per planning cycle: sample quintic candidates toward a grid of
//! terminal states ([`sampling`]), regulate the spread of their endpoints
//! ([`regulation`]), refine each candidate against a momentum-aware objective
//! ([`optimizer`]), check kinematic feasibility ([`evaluation`]) and commit a
//! prefix of the best one ([`sim`]).

pub mod cli;
pub mod evaluation;
pub mod forces;
pub mod geometry;
pub mod optimizer;
pub mod output;
pub mod quintic;
pub mod regulation;
pub mod scenario;
pub mod sim;
pub mod sampling;
mod spline;
pub mod vec2;

pub use evaluation::{
    check_candidate, feasibility_breakdown, jerk_statistics, nn_distance_stats, ClusterStats, Constraint,
    FeasibilityReport, JerkStats, KinematicLimits,
};
pub use forces::{assistive_force, interaction_force, AssistiveParams, Bump, InteractionParams, Neighbor};
pub use geometry::{GeometryError, PathFrame, ReferencePath};
pub use optimizer::{
    lagrangian_at, optimize_trajectory, total_cost, CostModel, KinematicModel, OptimizerConfig, ScenarioContext,
};
pub use quintic::{eval_quintic, solve_quintic, Boundary, QuinticCoeffs, QuinticEval};
pub use regulation::{enforce_spacing, regulated_cluster, regulation_energy, select_reference_candidate, RegulationConfig};
pub use sampling::{generate_cluster, FrenetState, SamplingGrid, TrajectoryCandidate, TrajectoryCluster};
pub use vec2::Vec2;
