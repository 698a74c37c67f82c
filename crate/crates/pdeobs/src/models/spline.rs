//! Natural cubic spline interpolation on a strictly increasing knot grid;
//! used to lift grid states to functions of x and to read sensors between
//! grid nodes.

use crate::error::{Error, Result};

/// A natural cubic spline: C^2 interpolant with zero second derivative at
/// both end knots. Evaluation outside the knot range clamps to the nearest
/// end interval's polynomial.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Shape(format!(
                "spline needs matching x/y with at least 2 knots, got {} and {}",
                n,
                y.len()
            )));
        }
        for w in x.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config(
                    "spline knots must be strictly increasing".to_string(),
                ));
            }
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives, solved by
            // the Thomas algorithm. Natural ends: m[0] = m[n-1] = 0.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut lower = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                lower[i] = h0;
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let w = lower[i] / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn eval(&self, xq: f64) -> f64 {
        let n = self.x.len();
        // Binary search for the interval containing xq, clamped to the ends.
        let mut lo = 0usize;
        let mut hi = n - 1;
        if xq <= self.x[0] {
            hi = 1;
        } else if xq >= self.x[n - 1] {
            lo = n - 2;
        } else {
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if self.x[mid] <= xq {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let h = self.x[hi] - self.x[lo];
        let a = (self.x[hi] - xq) / h;
        let b = (xq - self.x[lo]) / h;
        a * self.y[lo]
            + b * self.y[hi]
            + ((a * a * a - a) * self.m[lo] + (b * b * b - b) * self.m[hi]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_straight_lines_exactly() {
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let s = CubicSpline::natural(x, y).unwrap();
        for k in 0..50 {
            let xq = k as f64 * 0.1;
            assert!((s.eval(xq) - (3.0 * xq - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_interpolates_knots_and_tracks_smooth_functions() {
        let n = 16;
        let x: Vec<f64> = (0..=n)
            .map(|i| i as f64 / n as f64 * std::f64::consts::PI)
            .collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = CubicSpline::natural(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((s.eval(*xi) - yi).abs() < 1e-13);
        }
        for k in 1..(4 * n) {
            let xq = k as f64 / (4 * n) as f64 * std::f64::consts::PI;
            assert!((s.eval(xq) - xq.sin()).abs() < 1e-3);
        }
    }

    #[test]
    fn unsorted_knots_are_rejected() {
        assert!(CubicSpline::natural(vec![0.0, 2.0, 1.0], vec![0.0, 0.0, 0.0]).is_err());
    }
}
