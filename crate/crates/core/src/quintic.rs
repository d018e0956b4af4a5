//! Quintic boundary-value polynomials.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Condition-number ceiling above which a span is rejected.
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuinticError {
    #[error("polynomial span must be positive, got {0}")]
    NonPositiveSpan(f64),
    #[error("span {span} gives condition estimate {estimate:e}")]
    IllConditioned { span: f64, estimate: f64 },
    #[error("boundary data not finite")]
    NonFinite,
}

/// Value, first and second derivative at one end of a span.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Boundary {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Boundary {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }
}

/// `c[0] + c[1] x + ... + c[5] x^5`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuinticCoeffs {
    pub c: [f64; 6],
}

/// Value and first three derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticEval {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl QuinticCoeffs {
    /// Unique quintic with the given value/slope/curvature at `0` and `span`.
    pub fn solve(start: Boundary, end: Boundary, span: f64) -> Result<Self, QuinticError> {
        if !span.is_finite() || span <= 0.0 {
            return Err(QuinticError::NonPositiveSpan(span));
        }
        let estimate = span.max(1.0 / span).powi(5);
        if estimate > MAX_CONDITION {
            return Err(QuinticError::IllConditioned { span, estimate });
        }
        let data = [start.value, start.d1, start.d2, end.value, end.d1, end.d2];
        if data.iter().any(|v| !v.is_finite()) {
            return Err(QuinticError::NonFinite);
        }
        let t = span;
        let t2 = t * t;
        let (p0, v0, a0) = (start.value, start.d1, start.d2);
        let (p1, v1, a1) = (end.value, end.d1, end.d2);
        let dp = p1 - p0;
        let c3 = (20.0 * dp - (8.0 * v1 + 12.0 * v0) * t - (3.0 * a0 - a1) * t2) / (2.0 * t2 * t);
        let c4 =
            (-30.0 * dp + (14.0 * v1 + 16.0 * v0) * t + (3.0 * a0 - 2.0 * a1) * t2) / (2.0 * t2 * t2);
        let c5 = (12.0 * dp - 6.0 * (v1 + v0) * t + (a1 - a0) * t2) / (2.0 * t2 * t2 * t);
        Ok(Self {
            c: [p0, v0, 0.5 * a0, c3, c4, c5],
        })
    }

    /// Horner evaluation of the polynomial and its first three derivatives.
    pub fn eval(&self, x: f64) -> QuinticEval {
        let c = &self.c;
        let value = ((((c[5] * x + c[4]) * x + c[3]) * x + c[2]) * x + c[1]) * x + c[0];
        let d1 = (((5.0 * c[5] * x + 4.0 * c[4]) * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1];
        let d2 = ((20.0 * c[5] * x + 12.0 * c[4]) * x + 6.0 * c[3]) * x + 2.0 * c[2];
        let d3 = (60.0 * c[5] * x + 24.0 * c[4]) * x + 6.0 * c[3];
        QuinticEval { value, d1, d2, d3 }
    }

    /// Largest absolute mismatch against the six imposed conditions.
    pub fn residual(&self, start: Boundary, end: Boundary, span: f64) -> f64 {
        let a = self.eval(0.0);
        let b = self.eval(span);
        [
            a.value - start.value,
            a.d1 - start.d1,
            a.d2 - start.d2,
            b.value - end.value,
            b.d1 - end.d1,
            b.d2 - end.d2,
        ]
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.abs()))
    }
}

pub fn solve_quintic(start: Boundary, end: Boundary, span: f64) -> Result<QuinticCoeffs, QuinticError> {
    QuinticCoeffs::solve(start, end, span)
}

pub fn eval_quintic(coeffs: &QuinticCoeffs, x: f64) -> QuinticEval {
    coeffs.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn rest_to_rest_unit() {
        let q = solve_quintic(Boundary::new(0.0, 0.0, 0.0), Boundary::new(1.0, 0.0, 0.0), 1.0).unwrap();
        assert!(close(&q.c, &[0.0, 0.0, 0.0, 10.0, -15.0, 6.0], 1e-12));
    }

    #[test]
    fn zero_data_gives_zero_polynomial() {
        let q = solve_quintic(Boundary::default(), Boundary::default(), 1.0).unwrap();
        assert_eq!(q.c, [0.0; 6]);
    }

    #[test]
    fn constant_velocity_line() {
        let q = solve_quintic(Boundary::new(0.0, 1.0, 0.0), Boundary::new(1.0, 1.0, 0.0), 1.0).unwrap();
        assert!(close(&q.c, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0], 1e-12));
    }

    #[test]
    fn span_errors() {
        let b = Boundary::default();
        assert_eq!(solve_quintic(b, b, 0.0), Err(QuinticError::NonPositiveSpan(0.0)));
        assert!(matches!(solve_quintic(b, b, -2.0), Err(QuinticError::NonPositiveSpan(_))));
        assert!(matches!(solve_quintic(b, b, 1e-7), Err(QuinticError::IllConditioned { .. })));
    }

    #[test]
    fn evaluation_examples() {
        let q = QuinticCoeffs { c: [0.0, 0.0, 0.0, 10.0, -15.0, 6.0] };
        let e = q.eval(0.5);
        assert!(close(&[e.value, e.d1, e.d2, e.d3], &[0.5, 1.875, 0.0, -30.0], 1e-12));
        let e = q.eval(0.0);
        assert!(close(&[e.value, e.d1, e.d2, e.d3], &[0.0, 0.0, 0.0, 60.0], 1e-12));
        let lin = QuinticCoeffs { c: [0.0, 1.0, 0.0, 0.0, 0.0, 0.0] };
        let e = lin.eval(7.0);
        assert!(close(&[e.value, e.d1, e.d2, e.d3], &[7.0, 1.0, 0.0, 0.0], 1e-12));
    }
}
