//! External modulation terms: bounded assistive shaping toward a pace and the
//! corridor center, and bounded repulsive interaction with neighbors.
//!
//! The force functions are generic over [`Scalar`] so the optimizer can run
//! them on [`Jet`]s and read exact partial derivatives off the result.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::FrenetState;
use crate::vec2::Vec2;

const COINCIDENT_DIST: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForceError {
    #[error("neighbor {index} coincides with the agent")]
    CoincidentNeighbor { index: usize },
}

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn val(self) -> f64;
    fn exp(self) -> Self;
    /// Square root with a zero subgradient at the origin.
    fn sqrt(self) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn val(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// Value plus gradient with respect to `N` seed variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
}

impl<const N: usize> Jet<N> {
    pub fn var(v: f64, i: usize) -> Self {
        let mut g = [0.0; N];
        g[i] = 1.0;
        Self { v, g }
    }

    pub fn with_grad(v: f64, g: [f64; N]) -> Self {
        Self { v, g }
    }

    fn map(self, v: f64, dv: f64) -> Self {
        Self {
            v,
            g: self.g.map(|x| x * dv),
        }
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            g: std::array::from_fn(|i| self.g[i] + o.g[i]),
        }
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            g: std::array::from_fn(|i| self.g[i] - o.g[i]),
        }
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            g: std::array::from_fn(|i| self.g[i] * o.v + self.v * o.g[i]),
        }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        Self {
            v: self.v * inv,
            g: std::array::from_fn(|i| (self.g[i] - self.v * inv * o.g[i]) * inv),
        }
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            v: -self.v,
            g: self.g.map(|x| -x),
        }
    }
}

impl<const N: usize> Scalar for Jet<N> {
    fn cst(v: f64) -> Self {
        Self { v, g: [0.0; N] }
    }
    fn val(self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.map(e, e)
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        if r > 0.0 {
            self.map(r, 0.5 / r)
        } else {
            Self::cst(0.0)
        }
    }
}

/// Gaussian surface bump centered at arc length `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssistiveParams {
    pub v_des: f64,
    pub k_s: f64,
    pub k_d: f64,
    pub c_d: f64,
    /// Saturation bound on the returned vector norm.
    pub f_bar_asst: f64,
    pub bumps: Vec<Bump>,
}

impl Default for AssistiveParams {
    fn default() -> Self {
        Self {
            v_des: 1.0,
            k_s: 1.0,
            k_d: 1.0,
            c_d: 0.5,
            f_bar_asst: 2.0,
            bumps: Vec::new(),
        }
    }
}

impl AssistiveParams {
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.f_bar_asst.is_finite() && self.f_bar_asst > 0.0) {
            out.push(("f_bar_asst", "must be positive".to_string()));
        }
        for (name, v) in [("v_des", self.v_des), ("k_s", self.k_s), ("k_d", self.k_d), ("c_d", self.c_d)] {
            if !v.is_finite() {
                out.push((name, "must be finite".to_string()));
            }
        }
        for b in &self.bumps {
            if !(b.amplitude >= 0.0 && b.amplitude <= 1.0) {
                out.push(("bumps", format!("amplitude {} outside [0, 1]", b.amplitude)));
            }
            if !(b.width.is_finite() && b.width > 0.0) {
                out.push(("bumps", format!("width {} must be positive", b.width)));
            }
        }
        out
    }

    /// Surface irregularity in `[0, 1]`.
    pub fn beta(&self, s: f64) -> f64 {
        beta_generic(self, s)
    }
}

pub(crate) fn beta_generic<S: Scalar>(params: &AssistiveParams, s: S) -> S {
    let mut sum = S::cst(0.0);
    for b in &params.bumps {
        let z = (s - S::cst(b.center)) / S::cst(b.width);
        sum = sum + S::cst(b.amplitude) * (-(z * z) * S::cst(0.5)).exp();
    }
    if sum.val() > 1.0 {
        S::cst(1.0)
    } else {
        sum
    }
}

pub(crate) fn assistive_generic<S: Scalar>(
    params: &AssistiveParams,
    s: S,
    s_dot: S,
    d: S,
    d_dot: S,
) -> [S; 2] {
    let beta = beta_generic(params, s);
    let fs = -(S::cst(params.k_s) * (s_dot - S::cst(params.v_des)) * (S::cst(1.0) + beta));
    let fd = -(S::cst(params.k_d) * d) - S::cst(params.c_d) * d_dot;
    let norm = (fs * fs + fd * fd).sqrt();
    if norm.val() > params.f_bar_asst {
        let k = S::cst(params.f_bar_asst) / norm;
        [fs * k, fd * k]
    } else {
        [fs, fd]
    }
}

/// Pace and corridor shaping `[f_s, f_d]`, saturated to `f_bar_asst`.
pub fn assistive_force(state: &FrenetState, params: &AssistiveParams) -> Vec2 {
    let [fs, fd] = assistive_generic(params, state.s, state.s_dot, state.d, state.d_dot);
    Vec2::new(fs, fd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InteractionParams {
    pub alpha_bar: f64,
    pub r0: f64,
    pub v0: f64,
    pub cutoff: f64,
}

impl Default for InteractionParams {
    fn default() -> Self {
        Self {
            alpha_bar: 1.0,
            r0: 1.0,
            v0: 1.0,
            cutoff: 5.0,
        }
    }
}

impl InteractionParams {
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        for (name, v) in [
            ("alpha_bar", self.alpha_bar),
            ("r0", self.r0),
            ("v0", self.v0),
            ("cutoff", self.cutoff),
        ] {
            if !(v.is_finite() && v > 0.0) {
                out.push((name, "must be positive".to_string()));
            }
        }
        out
    }

    /// Interaction intensity `min(ᾱ, ᾱ e^{-r/r0} (1 + Δv/v0))`, zero past the cutoff.
    pub fn intensity(&self, distance: f64, relative_speed: f64) -> f64 {
        if distance > self.cutoff {
            return 0.0;
        }
        intensity_generic(self, distance, relative_speed)
    }
}

fn intensity_generic<S: Scalar>(p: &InteractionParams, r: S, dv: S) -> S {
    let a = S::cst(p.alpha_bar) * (-(r / S::cst(p.r0))).exp() * (S::cst(1.0) + dv / S::cst(p.v0));
    if a.val() > p.alpha_bar {
        S::cst(p.alpha_bar)
    } else {
        a
    }
}

/// Another agent, with its position at the reference time of the context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub position: Vec2,
    pub velocity: Vec2,
    #[serde(default)]
    pub covariance_trace: f64,
}

impl Neighbor {
    pub fn position_at(&self, t: f64) -> Vec2 {
        self.position + t * self.velocity
    }
}

/// Sum of repulsions; coincident neighbors are skipped and reported.
pub(crate) fn interaction_generic<S: Scalar>(
    pos: [S; 2],
    vel: [S; 2],
    neighbors: impl Iterator<Item = (Vec2, Vec2)>,
    params: &InteractionParams,
) -> ([S; 2], Option<usize>) {
    let mut f = [S::cst(0.0), S::cst(0.0)];
    let mut coincident = None;
    for (index, (npos, nvel)) in neighbors.enumerate() {
        let dx = pos[0] - S::cst(npos.x);
        let dy = pos[1] - S::cst(npos.y);
        let r = (dx * dx + dy * dy).sqrt();
        if r.val() > params.cutoff {
            continue;
        }
        if r.val() < COINCIDENT_DIST {
            coincident.get_or_insert(index);
            continue;
        }
        let ux = vel[0] - S::cst(nvel.x);
        let uy = vel[1] - S::cst(nvel.y);
        let dv = (ux * ux + uy * uy).sqrt();
        let alpha = intensity_generic(params, r, dv);
        f[0] = f[0] + alpha * dx / r;
        f[1] = f[1] + alpha * dy / r;
    }
    (f, coincident)
}

/// Repulsion on an agent from its neighbors, in Cartesian coordinates. The
/// direction of each term is the unit vector from the neighbor to the agent.
pub fn interaction_force(
    agent_pos: Vec2,
    agent_vel: Vec2,
    neighbors: &[Neighbor],
    params: &InteractionParams,
) -> Result<Vec2, ForceError> {
    let (f, coincident) = interaction_generic(
        [agent_pos.x, agent_pos.y],
        [agent_vel.x, agent_vel.y],
        neighbors.iter().map(|n| (n.position, n.velocity)),
        params,
    );
    match coincident {
        Some(index) => Err(ForceError::CoincidentNeighbor { index }),
        None => Ok(Vec2::new(f[0], f[1])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn equilibrium_params() -> AssistiveParams {
        AssistiveParams {
            v_des: 1.2,
            k_s: 2.0,
            k_d: 1.0,
            c_d: 0.0,
            f_bar_asst: 5.0,
            bumps: Vec::new(),
        }
    }

    #[test]
    fn assistive_equilibrium_is_zero() {
        let st = FrenetState::new(3.0, 1.2, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(assistive_force(&st, &equilibrium_params()), Vec2::ZERO);
    }

    #[test]
    fn assistive_lateral_restoring() {
        let st = FrenetState::new(3.0, 1.2, 0.0, 0.5, 0.0, 0.0);
        let f = assistive_force(&st, &equilibrium_params());
        assert!(f.x.abs() < 1e-15);
        assert!((f.y + 0.5).abs() < 1e-15);
    }

    #[test]
    fn assistive_saturates() {
        let p = AssistiveParams {
            f_bar_asst: 0.3,
            ..equilibrium_params()
        };
        // Raw lateral component -3.0 = 10 * f_bar.
        let st = FrenetState::new(0.0, 1.2, 0.0, 3.0, 0.0, 0.0);
        let f = assistive_force(&st, &p);
        assert!((f.norm() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn bumps_amplify_longitudinal_term() {
        let p = AssistiveParams {
            bumps: vec![Bump {
                center: 5.0,
                width: 1.0,
                amplitude: 1.0,
            }],
            ..equilibrium_params()
        };
        let on = assistive_force(&FrenetState::new(5.0, 1.0, 0.0, 0.0, 0.0, 0.0), &p);
        let off = assistive_force(&FrenetState::new(-5.0, 1.0, 0.0, 0.0, 0.0, 0.0), &p);
        assert!((on.x - 2.0 * off.x).abs() < 1e-9);
        assert!((p.beta(5.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interaction_examples() {
        let p = InteractionParams {
            alpha_bar: 2.0,
            r0: 1.5,
            v0: 1.0,
            cutoff: 4.0,
        };
        let f = interaction_force(Vec2::ZERO, Vec2::ZERO, &[], &p).unwrap();
        assert_eq!(f, Vec2::ZERO);
        let far = Neighbor {
            position: Vec2::new(4.5, 0.0),
            velocity: Vec2::ZERO,
            covariance_trace: 0.0,
        };
        assert_eq!(interaction_force(Vec2::ZERO, Vec2::ZERO, &[far], &p).unwrap(), Vec2::ZERO);
        // Static neighbor one decay length behind an agent heading along +x.
        let behind = Neighbor {
            position: Vec2::new(-1.5, 0.0),
            ..far
        };
        let f = interaction_force(Vec2::ZERO, Vec2::ZERO, &[behind], &p).unwrap();
        assert!((f.x - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
        assert!(f.y.abs() < 1e-15);
        let on_top = Neighbor {
            position: Vec2::ZERO,
            ..far
        };
        assert_eq!(
            interaction_force(Vec2::ZERO, Vec2::ZERO, &[on_top], &p),
            Err(ForceError::CoincidentNeighbor { index: 0 })
        );
    }

    #[test]
    fn jet_matches_finite_differences() {
        let p = AssistiveParams {
            bumps: vec![Bump {
                center: 1.0,
                width: 0.7,
                amplitude: 0.6,
            }],
            c_d: 0.4,
            ..equilibrium_params()
        };
        let x = [0.8, 0.9, 0.3, -0.2];
        let jet: [Jet<4>; 4] = std::array::from_fn(|i| Jet::var(x[i], i));
        let out = assistive_generic(&p, jet[0], jet[1], jet[2], jet[3]);
        let h = 1e-6;
        for i in 0..4 {
            let mut a = x;
            let mut b = x;
            a[i] += h;
            b[i] -= h;
            let fa = assistive_generic(&p, a[0], a[1], a[2], a[3]);
            let fb = assistive_generic(&p, b[0], b[1], b[2], b[3]);
            for k in 0..2 {
                let fd = (fa[k] - fb[k]) / (2.0 * h);
                assert!((fd - out[k].g[i]).abs() < 1e-6, "{i} {k}");
            }
        }
    }

    proptest! {
        #[test]
        fn assistive_norm_bounded(
            s in -10.0..10.0f64, v in -3.0..3.0f64, d in -3.0..3.0f64, dv in -2.0..2.0f64,
            k_s in 0.0..5.0f64, fbar in 0.05..3.0f64,
        ) {
            let p = AssistiveParams {
                k_s,
                f_bar_asst: fbar,
                bumps: vec![Bump { center: 0.0, width: 2.0, amplitude: 0.8 }],
                ..equilibrium_params()
            };
            let f = assistive_force(&FrenetState::new(s, v, 0.0, d, dv, 0.0), &p);
            prop_assert!(f.norm() <= fbar + 1e-12);
        }

        #[test]
        fn intensity_bounded(r in 1e-6..10.0f64, dv in 0.0..10.0f64, abar in 0.1..5.0f64) {
            let p = InteractionParams { alpha_bar: abar, r0: 0.8, v0: 0.5, cutoff: 6.0 };
            let a = p.intensity(r, dv);
            prop_assert!((0.0..=abar).contains(&a));
        }
    }
}
