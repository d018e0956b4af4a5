//! Scenario files (JSON, `schema_version` 1) and the bundled synthetic suite.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::KinematicLimits;
use crate::forces::{AssistiveParams, Bump, InteractionParams, Neighbor};
use crate::geometry::ReferencePath;
use crate::optimizer::OptimizerConfig;
use crate::regulation::RegulationConfig;
use crate::sampling::{FrenetState, SamplingGrid};
use crate::vec2::Vec2;

pub const SCHEMA_VERSION: u32 = 1;

/// Smallest terminal speed a jittered grid may produce.
const MIN_JITTERED_SPEED: f64 = 0.05;

/// One failed check, addressed by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] serde_json::Error),
    #[error("scenario invalid:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

/// Per-cycle random perturbation of the sampling grid (half-widths).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Jitter {
    pub speed: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub cycle_period: f64,
    pub commit_horizon: f64,
    pub n_cycles: usize,
    pub seed: u64,
    #[serde(default)]
    pub jitter: Jitter,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            cycle_period: 1.0,
            commit_horizon: 1.0,
            n_cycles: 10,
            seed: 0,
            jitter: Jitter::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    /// Reference path waypoints `[x, y]`.
    pub path: Vec<[f64; 2]>,
    pub initial: FrenetState,
    #[serde(default)]
    pub agents: Vec<Neighbor>,
    /// Uncertainty trace not attributed to any agent.
    #[serde(default)]
    pub sigma_baseline: f64,
    #[serde(default)]
    pub limits: KinematicLimits,
    pub grid: SamplingGrid,
    #[serde(default)]
    pub regulation: RegulationConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub assistive: AssistiveParams,
    #[serde(default)]
    pub interaction: InteractionParams,
    #[serde(default)]
    pub sim: SimConfig,
}

fn prefixed<'a>(section: &'a str, v: Vec<(&'static str, String)>) -> impl Iterator<Item = Violation> + 'a {
    v.into_iter().map(move |(f, message)| Violation {
        field: format!("{section}.{f}"),
        message,
    })
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads and parses a file, returning the raw bytes alongside.
    pub fn read(path: &Path) -> Result<(Self, Vec<u8>), ScenarioError> {
        let bytes = std::fs::read(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let text = String::from_utf8_lossy(&bytes);
        let scenario = Self::from_json(&text)?;
        Ok((scenario, bytes))
    }

    /// Reads, parses and validates.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ScenarioError> {
        let (s, bytes) = Self::read(path)?;
        s.validate()?;
        Ok((s, bytes))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes") + "\n"
    }

    pub fn reference_path(&self) -> Result<ReferencePath, crate::geometry::GeometryError> {
        let pts: Vec<Vec2> = self.path.iter().map(|p| Vec2::from(*p)).collect();
        ReferencePath::new(&pts)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(v))
        }
    }

    /// Every schema and invariant breach found.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field: &str, message: String| {
            out.push(Violation {
                field: field.to_string(),
                message,
            })
        };
        if self.schema_version != SCHEMA_VERSION {
            push(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            );
        }
        let length = match self.reference_path() {
            Ok(p) => Some(p.total_length()),
            Err(e) => {
                push("path", e.to_string());
                None
            }
        };
        if !self.initial.is_finite() {
            push("initial", "state must be finite".to_string());
        } else if let Some(len) = length {
            if !(0.0..=len).contains(&self.initial.s) {
                push("initial.s", format!("{} outside path [0, {len}]", self.initial.s));
            }
        }
        for (i, a) in self.agents.iter().enumerate() {
            if !(a.position.is_finite() && a.velocity.is_finite()) {
                push(&format!("agents[{i}]"), "position and velocity must be finite".to_string());
            }
            if !(a.covariance_trace >= 0.0 && a.covariance_trace.is_finite()) {
                push(&format!("agents[{i}].covariance_trace"), "must be non-negative".to_string());
            }
        }
        if !(self.sigma_baseline >= 0.0 && self.sigma_baseline.is_finite()) {
            push("sigma_baseline", "must be non-negative".to_string());
        }
        if let Err(e) = self.grid.validate() {
            push("grid", e.to_string());
        }
        let sim = &self.sim;
        if !(sim.commit_horizon.is_finite() && sim.commit_horizon > 0.0) {
            push("sim.commit_horizon", "must be positive".to_string());
        } else {
            let shortest = self.grid.horizons.iter().copied().fold(f64::INFINITY, f64::min);
            if sim.commit_horizon > shortest + 1e-9 {
                push(
                    "sim.commit_horizon",
                    format!("{} exceeds the shortest horizon {shortest}", sim.commit_horizon),
                );
            }
            let steps = sim.commit_horizon / self.grid.dt;
            if self.grid.dt > 0.0 && (steps - steps.round()).abs() > 1e-6 {
                push("sim.commit_horizon", "must be a whole number of grid steps".to_string());
            }
        }
        if (sim.cycle_period - sim.commit_horizon).abs() > 1e-12 {
            push("sim.cycle_period", "must equal sim.commit_horizon".to_string());
        }
        if !(sim.jitter.speed >= 0.0 && sim.jitter.offset >= 0.0) {
            push("sim.jitter", "half-widths must be non-negative".to_string());
        }
        out.extend(prefixed("limits", self.limits.violations()));
        out.extend(prefixed("regulation", self.regulation.violations()));
        out.extend(prefixed("optimizer", self.optimizer.violations()));
        out.extend(prefixed("assistive", self.assistive.violations()));
        out.extend(prefixed("interaction", self.interaction.violations()));
        out
    }

    /// Sampling grid of one planning cycle. Every cycle draws its own
    /// perturbation from `(seed, cycle)`, so runs are reproducible and
    /// independent of what earlier cycles did.
    pub fn cycle_grid(&self, cycle: usize) -> SamplingGrid {
        let j = &self.sim.jitter;
        let mut grid = self.grid.clone();
        if j.speed == 0.0 && j.offset == 0.0 {
            return grid;
        }
        let stream = self.sim.seed ^ (cycle as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        for v in &mut grid.terminal_speeds {
            if j.speed > 0.0 {
                *v = (*v + rng.gen_range(-j.speed..=j.speed)).max(MIN_JITTERED_SPEED);
            }
        }
        for d in &mut grid.lateral_offsets {
            if j.offset > 0.0 {
                *d += rng.gen_range(-j.offset..=j.offset);
            }
        }
        grid
    }

    /// Agents at absolute time `t`.
    pub fn agents_at(&self, t: f64) -> Vec<Neighbor> {
        self.agents
            .iter()
            .map(|a| Neighbor {
                position: a.position_at(t),
                ..*a
            })
            .collect()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sim.seed = seed;
        self
    }
}

fn base(name: &str, path: Vec<[f64; 2]>) -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        path,
        initial: FrenetState::new(0.5, 1.0, 0.0, 0.0, 0.0, 0.0),
        agents: Vec::new(),
        sigma_baseline: 0.05,
        limits: KinematicLimits::default(),
        grid: SamplingGrid {
            terminal_speeds: vec![1.0],
            lateral_offsets: vec![-0.6, -0.3, 0.0, 0.3, 0.6],
            horizons: vec![3.0],
            dt: 0.05,
        },
        regulation: RegulationConfig {
            delta0: 0.2,
            ..RegulationConfig::default()
        },
        // Momentum-change suppression on the order of the kinetic term.
        optimizer: OptimizerConfig {
            lambda_s: 1.0,
            ..OptimizerConfig::default()
        },
        assistive: AssistiveParams::default(),
        interaction: InteractionParams::default(),
        sim: SimConfig {
            cycle_period: 1.0,
            commit_horizon: 1.0,
            n_cycles: 10,
            seed: 7,
            jitter: Jitter {
                speed: 0.1,
                offset: 0.15,
            },
        },
    }
}

fn polyline(points: impl Iterator<Item = (f64, f64)>) -> Vec<[f64; 2]> {
    points.map(|(x, y)| [x, y]).collect()
}

/// Straight corridor crossed by one agent.
pub fn s1_crossing() -> Scenario {
    let mut s = base("s1_crossing", polyline((0..=8).map(|i| (5.0 * i as f64, 0.0))));
    s.agents = vec![Neighbor {
        position: Vec2::new(7.0, -4.0),
        velocity: Vec2::new(0.0, 0.6),
        covariance_trace: 0.1,
    }];
    s
}

/// Quarter-circle corridor with surface bumps.
pub fn s2_curved_bumps() -> Scenario {
    let radius = 12.0;
    let pts = polyline((0..=16).map(|i| {
        let a = std::f64::consts::FRAC_PI_2 * i as f64 / 16.0;
        (radius * a.sin(), radius * (1.0 - a.cos()))
    }));
    // Straight run-out so the last horizons stay on the path.
    let mut pts = pts;
    for i in 1..=4 {
        pts.push([radius, radius + 3.0 * i as f64]);
    }
    let mut s = base("s2_curved_bumps", pts);
    s.assistive.bumps = vec![
        Bump {
            center: 4.0,
            width: 0.6,
            amplitude: 0.8,
        },
        Bump {
            center: 9.0,
            width: 0.8,
            amplitude: 1.0,
        },
    ];
    s
}

/// Narrow corridor with two oncoming agents.
pub fn s3_narrow_oncoming() -> Scenario {
    let mut s = base("s3_narrow_oncoming", polyline((0..=8).map(|i| (5.0 * i as f64, 0.0))));
    s.grid.lateral_offsets = vec![-0.4, -0.2, 0.0, 0.2, 0.4];
    s.agents = vec![
        Neighbor {
            position: Vec2::new(14.0, 0.6),
            velocity: Vec2::new(-0.8, 0.0),
            covariance_trace: 0.1,
        },
        Neighbor {
            position: Vec2::new(20.0, -0.5),
            velocity: Vec2::new(-0.6, 0.0),
            covariance_trace: 0.1,
        },
    ];
    s
}

/// Empty straight corridor.
pub fn straight_empty() -> Scenario {
    let mut s = base("straight_empty", polyline((0..=8).map(|i| (5.0 * i as f64, 0.0))));
    s.sim.jitter = Jitter::default();
    s
}

pub fn synthetic_suite() -> Vec<Scenario> {
    vec![s1_crossing(), s2_curved_bumps(), s3_narrow_oncoming()]
}

pub fn builtin(name: &str) -> Option<Scenario> {
    match name {
        "s1_crossing" => Some(s1_crossing()),
        "s2_curved_bumps" => Some(s2_curved_bumps()),
        "s3_narrow_oncoming" => Some(s3_narrow_oncoming()),
        "straight_empty" => Some(straight_empty()),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 4] = ["s1_crossing", "s2_curved_bumps", "s3_narrow_oncoming", "straight_empty"];
