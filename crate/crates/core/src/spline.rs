//! Natural cubic spline through scalar samples over a strictly increasing
//! abscissa. Second derivatives vanish at both ends.

#[derive(Debug, Clone)]
pub(crate) struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivative at each knot.
    moments: Vec<f64>,
}

impl CubicSpline {
    /// `knots` must be strictly increasing with at least two entries.
    pub(crate) fn natural(knots: &[f64], values: &[f64]) -> Self {
        let n = knots.len();
        debug_assert!(n >= 2 && values.len() == n);
        let mut moments = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior moments (Thomas algorithm).
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                let h0 = knots[i + 1] - knots[i];
                let h1 = knots[i + 2] - knots[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0
                    * ((values[i + 2] - values[i + 1]) / h1 - (values[i + 1] - values[i]) / h0);
            }
            for i in 1..m {
                let lower = knots[i + 1] - knots[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            let mut sol = vec![0.0; m];
            sol[m - 1] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
            }
            moments[1..n - 1].copy_from_slice(&sol);
        }
        Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            moments,
        }
    }

    #[cfg(test)]
    pub(crate) fn segment_of(&self, u: f64) -> usize {
        let n = self.knots.len();
        match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&u).expect("finite knot"))
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value and first three derivatives at `u` (cubic extrapolation outside
    /// the knot range).
    #[cfg(test)]
    pub(crate) fn eval(&self, u: f64) -> [f64; 4] {
        self.eval_in(self.segment_of(u), u)
    }

    pub(crate) fn eval_in(&self, i: usize, u: f64) -> [f64; 4] {
        let h = self.knots[i + 1] - self.knots[i];
        let a = self.knots[i + 1] - u;
        let b = u - self.knots[i];
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let value = m0 * a * a * a / (6.0 * h)
            + m1 * b * b * b / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * a
            + (y1 / h - m1 * h / 6.0) * b;
        let d1 = -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - (y0 / h - m0 * h / 6.0)
            + (y1 / h - m1 * h / 6.0);
        let d2 = m0 * a / h + m1 * b / h;
        let d3 = (m1 - m0) / h;
        [value, d1, d2, d3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots() {
        let knots = [0.0, 0.7, 1.5, 2.0, 3.1];
        let values = [1.0, -2.0, 0.5, 0.25, 4.0];
        let sp = CubicSpline::natural(&knots, &values);
        for (k, v) in knots.iter().zip(values) {
            assert!((sp.eval(*k)[0] - v).abs() < 1e-12);
        }
        assert!(sp.eval(0.0)[2].abs() < 1e-12);
        assert!(sp.eval(3.1)[2].abs() < 1e-12);
    }

    #[test]
    fn linear_data_is_reproduced() {
        let knots = [0.0, 1.0, 2.5, 4.0];
        let values: Vec<f64> = knots.iter().map(|u| 3.0 * u - 1.0).collect();
        let sp = CubicSpline::natural(&knots, &values);
        let [v, d1, d2, d3] = sp.eval(1.7);
        assert!((v - (3.0 * 1.7 - 1.0)).abs() < 1e-12);
        assert!((d1 - 3.0).abs() < 1e-12);
        assert!(d2.abs() < 1e-12 && d3.abs() < 1e-12);
    }

    #[test]
    fn second_derivative_continuous_at_interior_knots() {
        let knots = [0.0, 1.0, 2.0, 3.0, 4.0];
        let values = [0.0, 1.0, 0.0, -1.0, 0.0];
        let sp = CubicSpline::natural(&knots, &values);
        for i in 1..4 {
            let left = sp.eval_in(i - 1, knots[i]);
            let right = sp.eval_in(i, knots[i]);
            assert!((left[1] - right[1]).abs() < 1e-12);
            assert!((left[2] - right[2]).abs() < 1e-12);
        }
    }
}
