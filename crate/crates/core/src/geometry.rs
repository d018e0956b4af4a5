//! Reference path and Frenet-frame conversions.
//!
//! The path is a pair of natural cubic splines `x(u)`, `y(u)` fitted against a
//! knot parameter that approximates arc length (fit on chord length, measure
//! arc length, refit). Queries are made by true arc length `s`: a dense
//! cumulative-length table plus a Newton step maps `s` back to the spline
//! parameter, so `|dr/ds| = 1` holds to quadrature precision.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spline::CubicSpline;
use crate::vec2::Vec2;

/// Tolerance for treating `s` slightly outside `[0, L]` as on the boundary.
const S_RANGE_TOL: f64 = 1e-9;
const COARSE_STEPS: usize = 512;
/// Sub-intervals per spline segment in the arc-length lookup table.
const TABLE_SUBDIV: usize = 16;
const AMBIGUITY_TOL: f64 = 1e-3;

const GL5_X: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("reference path needs at least 4 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("waypoint {index} duplicates its predecessor")]
    DuplicateWaypoint { index: usize },
    #[error("waypoint {index} is not finite")]
    NonFiniteWaypoint { index: usize },
    #[error("arc length {s} outside [0, {length}]")]
    OutOfRangeS { s: f64, length: f64 },
    #[error("lateral offset {d} at s = {s} leaves the validity region (|d·κ| = {product})")]
    InvalidLateralOffset { s: f64, d: f64, product: f64 },
    #[error("projection ambiguous: s = {s0} and s = {s1} are equally close")]
    ProjectionAmbiguous { s0: f64, s1: f64 },
    #[error("point ({x}, {y}) lies outside the path tube")]
    OutsideTube { x: f64, y: f64 },
}

/// Local differential geometry of the path at one arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathFrame {
    pub point: Vec2,
    pub tangent: Vec2,
    /// Tangent rotated by +90 degrees (left of travel).
    pub normal: Vec2,
    pub curvature: f64,
    /// dκ/ds.
    pub curvature_rate: f64,
}

/// Arc-length parameterized planar reference curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec2>", into = "Vec<Vec2>")]
pub struct ReferencePath {
    waypoints: Vec<Vec2>,
    arc_length_knots: Vec<f64>,
    param_knots: Vec<f64>,
    sx: CubicSpline,
    sy: CubicSpline,
    table_u: Vec<f64>,
    table_s: Vec<f64>,
    coarse: Vec<(f64, Vec2)>,
    total_length: f64,
}

impl TryFrom<Vec<Vec2>> for ReferencePath {
    type Error = GeometryError;
    fn try_from(w: Vec<Vec2>) -> Result<Self, Self::Error> {
        ReferencePath::new(&w)
    }
}

impl From<ReferencePath> for Vec<Vec2> {
    fn from(p: ReferencePath) -> Self {
        p.waypoints
    }
}

fn fit(knots: &[f64], pts: &[Vec2]) -> (CubicSpline, CubicSpline) {
    let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
    (
        CubicSpline::natural(knots, &xs),
        CubicSpline::natural(knots, &ys),
    )
}

fn speed(sx: &CubicSpline, sy: &CubicSpline, seg: usize, u: f64) -> f64 {
    sx.eval_in(seg, u)[1].hypot(sy.eval_in(seg, u)[1])
}

fn gl5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * GL5_X
        .iter()
        .zip(GL5_W)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

/// Adaptive Gauss–Legendre length of `[a, b]` within one spline segment.
fn adaptive_length(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = gl5(f, a, m);
    let right = gl5(f, m, b);
    let refined = left + right;
    if depth == 0 || (refined - whole).abs() <= 1e-12 * refined.abs().max(1e-300) {
        refined
    } else {
        adaptive_length(f, a, m, left, depth - 1) + adaptive_length(f, m, b, right, depth - 1)
    }
}

fn segment_length(sx: &CubicSpline, sy: &CubicSpline, seg: usize, a: f64, b: f64) -> f64 {
    let f = |u: f64| speed(sx, sy, seg, u);
    adaptive_length(&f, a, b, gl5(f, a, b), 20)
}

impl ReferencePath {
    /// Fits the path through `waypoints` (meters).
    pub fn new(waypoints: &[Vec2]) -> Result<Self, GeometryError> {
        if waypoints.len() < 4 {
            return Err(GeometryError::TooFewWaypoints(waypoints.len()));
        }
        for (index, w) in waypoints.iter().enumerate() {
            if !w.is_finite() {
                return Err(GeometryError::NonFiniteWaypoint { index });
            }
            if index > 0 && (*w - waypoints[index - 1]).norm() < 1e-12 {
                return Err(GeometryError::DuplicateWaypoint { index });
            }
        }

        // Chord-length fit, then one refit against measured arc length.
        let mut knots = Vec::with_capacity(waypoints.len());
        knots.push(0.0);
        for pair in waypoints.windows(2) {
            knots.push(knots.last().unwrap() + (pair[1] - pair[0]).norm());
        }
        let (sx, sy) = fit(&knots, waypoints);
        let mut arc = vec![0.0];
        for i in 0..knots.len() - 1 {
            let len = segment_length(&sx, &sy, i, knots[i], knots[i + 1]);
            arc.push(arc[i] + len);
        }
        let param_knots = arc;
        let (sx, sy) = fit(&param_knots, waypoints);

        let mut table_u = Vec::with_capacity((param_knots.len() - 1) * TABLE_SUBDIV + 1);
        let mut table_s = Vec::with_capacity(table_u.capacity());
        let mut arc_length_knots = vec![0.0];
        table_u.push(param_knots[0]);
        table_s.push(0.0);
        for seg in 0..param_knots.len() - 1 {
            let (u0, u1) = (param_knots[seg], param_knots[seg + 1]);
            for k in 1..=TABLE_SUBDIV {
                let a = u0 + (u1 - u0) * (k - 1) as f64 / TABLE_SUBDIV as f64;
                let b = if k == TABLE_SUBDIV {
                    u1
                } else {
                    u0 + (u1 - u0) * k as f64 / TABLE_SUBDIV as f64
                };
                let len = segment_length(&sx, &sy, seg, a, b);
                table_s.push(table_s.last().unwrap() + len);
                table_u.push(b);
            }
            arc_length_knots.push(*table_s.last().unwrap());
        }
        let total_length = *table_s.last().unwrap();

        let mut path = Self {
            waypoints: waypoints.to_vec(),
            arc_length_knots,
            param_knots,
            sx,
            sy,
            table_u,
            table_s,
            coarse: Vec::new(),
            total_length,
        };
        path.coarse = (0..=COARSE_STEPS)
            .map(|j| {
                let s = total_length * j as f64 / COARSE_STEPS as f64;
                (s, path.frame_clamped(s).point)
            })
            .collect();
        Ok(path)
    }

    pub fn waypoints(&self) -> &[Vec2] {
        &self.waypoints
    }

    /// Arc length at each waypoint.
    pub fn arc_length_knots(&self) -> &[f64] {
        &self.arc_length_knots
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    fn check_s(&self, s: f64) -> Result<f64, GeometryError> {
        if !s.is_finite() || s < -S_RANGE_TOL || s > self.total_length + S_RANGE_TOL {
            return Err(GeometryError::OutOfRangeS {
                s,
                length: self.total_length,
            });
        }
        Ok(s.clamp(0.0, self.total_length))
    }

    /// Spline parameter and segment for arc length `s` (already clamped).
    fn param_at(&self, s: f64) -> (usize, f64) {
        let j = match self
            .table_s
            .binary_search_by(|v| v.partial_cmp(&s).expect("finite"))
        {
            Ok(j) => j.min(self.table_s.len() - 2),
            Err(0) => 0,
            Err(j) => (j - 1).min(self.table_s.len() - 2),
        };
        let seg = j / TABLE_SUBDIV;
        let (u0, s0) = (self.table_u[j], self.table_s[j]);
        let (u1, s1) = (self.table_u[j + 1], self.table_s[j + 1]);
        let mut u = u0 + (u1 - u0) * (s - s0) / (s1 - s0);
        for _ in 0..4 {
            let f = s0 + gl5(|x| speed(&self.sx, &self.sy, seg, x), u0, u) - s;
            let step = f / speed(&self.sx, &self.sy, seg, u);
            u -= step;
            if step.abs() < 1e-15 * (1.0 + u.abs()) {
                break;
            }
        }
        (seg, u)
    }

    /// Frame at `s` clamped into `[0, L]`; never fails.
    pub fn frame_clamped(&self, s: f64) -> PathFrame {
        let s = if s.is_finite() {
            s.clamp(0.0, self.total_length)
        } else {
            0.0
        };
        let (seg, u) = self.param_at(s);
        let [x, x1, x2, x3] = self.sx.eval_in(seg, u);
        let [y, y1, y2, y3] = self.sy.eval_in(seg, u);
        let sp2 = x1 * x1 + y1 * y1;
        let sp = sp2.sqrt();
        let tangent = Vec2::new(x1 / sp, y1 / sp);
        let cross = x1 * y2 - y1 * x2;
        let curvature = cross / (sp2 * sp);
        let dk_du = (x1 * y3 - y1 * x3) / (sp2 * sp) - 3.0 * cross * (x1 * x2 + y1 * y2) / (sp2 * sp2 * sp);
        PathFrame {
            point: Vec2::new(x, y),
            tangent,
            normal: tangent.perp(),
            curvature,
            curvature_rate: dk_du / sp,
        }
    }

    pub fn frame(&self, s: f64) -> Result<PathFrame, GeometryError> {
        Ok(self.frame_clamped(self.check_s(s)?))
    }

    pub fn point(&self, s: f64) -> Result<Vec2, GeometryError> {
        Ok(self.frame(s)?.point)
    }

    /// Signed curvature (positive when turning left).
    pub fn curvature_at(&self, s: f64) -> Result<f64, GeometryError> {
        Ok(self.frame(s)?.curvature)
    }

    /// `r(s) + d·n(s)`.
    pub fn frenet_to_cartesian(&self, s: f64, d: f64) -> Result<Vec2, GeometryError> {
        let f = self.frame(s)?;
        let product = (d * f.curvature).abs();
        if !d.is_finite() || product >= 1.0 {
            return Err(GeometryError::InvalidLateralOffset { s, d, product });
        }
        Ok(f.point + d * f.normal)
    }

    fn refine_projection(&self, p: Vec2, mut s: f64) -> f64 {
        for _ in 0..50 {
            let f = self.frame_clamped(s);
            let rel = p - f.point;
            let g = rel.dot(f.tangent);
            let dg = -1.0 + f.curvature * rel.dot(f.normal);
            if dg > -1e-6 {
                break;
            }
            let next = (s - g / dg).clamp(0.0, self.total_length);
            let step = (next - s).abs();
            s = next;
            if step < 1e-14 * (1.0 + self.total_length) {
                break;
            }
        }
        s
    }

    /// Closest-point projection of `point` onto the path.
    pub fn cartesian_to_frenet(&self, point: Vec2) -> Result<(f64, f64), GeometryError> {
        let outside = || GeometryError::OutsideTube {
            x: point.x,
            y: point.y,
        };
        if !point.is_finite() {
            return Err(outside());
        }
        let dist: Vec<f64> = self.coarse.iter().map(|(_, q)| (point - *q).norm()).collect();
        let n = dist.len();
        let mut candidates: Vec<(f64, f64)> = Vec::new();
        for j in 0..n {
            let left = if j > 0 { dist[j - 1] } else { f64::INFINITY };
            let right = if j + 1 < n { dist[j + 1] } else { f64::INFINITY };
            if dist[j] <= left && dist[j] <= right {
                let s = self.refine_projection(point, self.coarse[j].0);
                let q = self.frame_clamped(s).point;
                candidates.push((s, (point - q).norm()));
            }
        }
        // Smaller distance first; ties resolved toward smaller s.
        candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        let (s_best, d_best) = candidates[0];
        let separation = 2.0 * self.total_length / COARSE_STEPS as f64;
        if let Some(&(s_other, _)) = candidates[1..]
            .iter()
            .find(|(s, d)| (d - d_best).abs() < AMBIGUITY_TOL && (s - s_best).abs() > separation)
        {
            return Err(GeometryError::ProjectionAmbiguous {
                s0: s_best.min(s_other),
                s1: s_best.max(s_other),
            });
        }
        let f = self.frame_clamped(s_best);
        let rel = point - f.point;
        let d = rel.dot(f.normal);
        let tangential = rel.dot(f.tangent).abs();
        if tangential > 1e-6 || (d * f.curvature).abs() >= 1.0 {
            return Err(outside());
        }
        Ok((s_best, d))
    }

    /// Cartesian velocity of a Frenet state moving along this path.
    pub fn cartesian_velocity(&self, s: f64, s_dot: f64, d: f64, d_dot: f64) -> Vec2 {
        let f = self.frame_clamped(s);
        (1.0 - f.curvature * d) * s_dot * f.tangent + d_dot * f.normal
    }

    #[allow(dead_code)]
    pub(crate) fn param_knots(&self) -> &[f64] {
        &self.param_knots
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use std::f64::consts::PI;

    pub(crate) fn circle(radius: f64, sweep: f64, n: usize, ccw: bool) -> ReferencePath {
        let pts: Vec<Vec2> = (0..n)
            .map(|i| {
                let a = sweep * i as f64 / (n - 1) as f64;
                let a = if ccw { a } else { -a };
                Vec2::new(radius * a.cos(), radius * a.sin())
            })
            .collect();
        ReferencePath::new(&pts).unwrap()
    }

    fn straight() -> ReferencePath {
        let pts: Vec<Vec2> = (0..4).map(|i| Vec2::new(i as f64, 0.0)).collect();
        ReferencePath::new(&pts).unwrap()
    }

    #[test]
    fn straight_path_length() {
        assert!((straight().total_length() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn quadrant_length() {
        let p = circle(1.0, PI / 2.0, 64, true);
        assert!((p.total_length() - PI / 2.0).abs() < 1e-4);
    }

    #[test]
    fn too_few_and_duplicates() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)];
        assert_eq!(
            ReferencePath::new(&pts).unwrap_err(),
            GeometryError::TooFewWaypoints(3)
        );
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
        ];
        assert_eq!(
            ReferencePath::new(&pts).unwrap_err(),
            GeometryError::DuplicateWaypoint { index: 2 }
        );
    }

    #[test]
    fn straight_conversions() {
        let p = straight();
        let q = p.frenet_to_cartesian(3.0, 1.0).unwrap();
        assert!((q - Vec2::new(3.0, 1.0)).norm() < 1e-12);
        let q = p.frenet_to_cartesian(3.0, 0.0).unwrap();
        assert!((q - Vec2::new(3.0, 0.0)).norm() < 1e-12);
        let (s, d) = p.cartesian_to_frenet(Vec2::new(2.0, 0.7)).unwrap();
        assert!((s - 2.0).abs() < 1e-9 && (d - 0.7).abs() < 1e-9);
        let q = p.frenet_to_cartesian(1.2, -0.3).unwrap();
        let (s, d) = p.cartesian_to_frenet(q).unwrap();
        assert!((s - 1.2).abs() < 1e-6 && (d + 0.3).abs() < 1e-6);
        for s in [0.0, 0.5, 1.7, 3.0] {
            assert!(p.curvature_at(s).unwrap().abs() < 1e-9);
        }
        assert!(matches!(
            p.frenet_to_cartesian(3.5, 0.0),
            Err(GeometryError::OutOfRangeS { .. })
        ));
    }

    #[test]
    fn circle_point_and_curvature() {
        let p = circle(2.0, 1.5 * PI, 200, true);
        let q = p.frenet_to_cartesian(PI, 0.5).unwrap();
        assert!((q.norm() - 1.5).abs() < 1e-4, "{q:?}");
        assert!((q.y.atan2(q.x) - PI / 2.0).abs() < 1e-4);
        for s in [1.0, 3.0, 6.0] {
            assert!((p.curvature_at(s).unwrap() - 0.5).abs() < 1e-3);
        }
        let cw = circle(2.0, 1.5 * PI, 200, false);
        assert!((cw.curvature_at(3.0).unwrap() + 0.5).abs() < 1e-3);
        assert!(matches!(
            p.frenet_to_cartesian(3.0, 2.5),
            Err(GeometryError::InvalidLateralOffset { .. })
        ));
    }

    #[test]
    fn circle_center_is_ambiguous() {
        let p = circle(2.0, 1.5 * PI, 200, true);
        assert!(matches!(
            p.cartesian_to_frenet(Vec2::ZERO),
            Err(GeometryError::ProjectionAmbiguous { .. })
        ));
    }

    #[test]
    fn point_past_the_end_is_outside() {
        let p = straight();
        assert!(matches!(
            p.cartesian_to_frenet(Vec2::new(4.0, 0.5)),
            Err(GeometryError::OutsideTube { .. })
        ));
    }

    #[test]
    fn tangent_is_unit_and_normal_orthogonal() {
        let p = circle(0.5, PI, 80, true);
        for i in 0..=100 {
            let f = p.frame(p.total_length() * i as f64 / 100.0).unwrap();
            assert!((f.tangent.norm() - 1.0).abs() < 1e-6);
            assert!(f.tangent.dot(f.normal).abs() < 1e-9);
        }
    }

    #[test]
    fn arc_length_knots_monotone() {
        let p = circle(2.0, PI, 30, true);
        let k = p.arc_length_knots();
        assert_eq!(k[0], 0.0);
        assert!(k.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(k.len(), p.waypoints().len());
    }
}
