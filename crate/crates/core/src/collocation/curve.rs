//! Natural cubic spline and the one-parameter family of reachable inertias.

use crate::error::{Error, Result};
use crate::geometry::{Ellipse, InertiaTriple, RingParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    /// `x` must be strictly increasing.
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            let mut upper = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            // Thomas sweep over the interior rows
            for i in 2..n - 1 {
                let w = (x[i] - x[i - 1]) / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            for i in (1..n - 1).rev() {
                m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
            }
        }
        Self { x, y, m }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] || t >= self.x[n - 1] {
            let (i, j) = if t <= self.x[0] { (0, 1) } else { (n - 2, n - 1) };
            let h = self.x[j] - self.x[i];
            let slope = (self.y[j] - self.y[i]) / h - h * (2.0 * self.m[i] + self.m[j]) / 6.0;
            let end_slope = if i == 0 {
                slope
            } else {
                slope + h * (self.m[i] + self.m[j]) / 2.0
            };
            let (x0, y0) = if i == 0 { (self.x[0], self.y[0]) } else { (self.x[n - 1], self.y[n - 1]) };
            return y0 + end_slope * (t - x0);
        }
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Reachable `(y1, y3)` pairs and axes as functions of `y3` over a range of `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizableCurve {
    first: Spline,
    semi_a: Spline,
    semi_b: Spline,
    y3_range: (f64, f64),
    pub samples: Vec<(f64, f64, InertiaTriple)>,
}

impl RealizableCurve {
    pub fn new(ring: &RingParams, b_lo: f64, b_hi: f64, count: usize) -> Result<Self> {
        if !(b_lo > 0.0 && b_hi > b_lo) {
            return Err(Error::InvalidInput {
                name: "axis range",
                reason: format!("need 0 < lo < hi, got ({b_lo}, {b_hi})"),
            });
        }
        let e = Ellipse::new(ring.quad_points);
        let count = count.max(4);
        let mut samples = Vec::with_capacity(count);
        for k in 0..count {
            let b = b_lo + (b_hi - b_lo) * k as f64 / (count - 1) as f64;
            let a = e.solve_axis(ring.perimeter, b)?;
            samples.push((a, b, e.inertia(a, b, ring.mass, ring.inertia_labels)));
        }
        let mut by_y3 = samples.clone();
        by_y3.sort_by(|p, q| p.2.y3.total_cmp(&q.2.y3));
        let xs: Vec<f64> = by_y3.iter().map(|s| s.2.y3).collect();
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput {
                name: "axis range",
                reason: "third inertia slot is not monotone over the range".into(),
            });
        }
        let pick = |f: fn(&(f64, f64, InertiaTriple)) -> f64| by_y3.iter().map(f).collect::<Vec<_>>();
        Ok(Self {
            first: Spline::natural(xs.clone(), pick(|s| s.2.y1)),
            semi_a: Spline::natural(xs.clone(), pick(|s| s.0)),
            semi_b: Spline::natural(xs.clone(), pick(|s| s.1)),
            y3_range: (xs[0], xs[xs.len() - 1]),
            samples,
        })
    }

    pub fn y1_of_y3(&self, y3: f64) -> f64 {
        self.first.eval(y3)
    }

    pub fn axes_of_y3(&self, y3: f64) -> (f64, f64) {
        (self.semi_a.eval(y3), self.semi_b.eval(y3))
    }

    pub fn y3_range(&self) -> (f64, f64) {
        self.y3_range
    }

    /// Componentwise `[min, max]` over the sampled range.
    pub fn bounds(&self) -> [[f64; 2]; 3] {
        let mut out = [[f64::INFINITY, f64::NEG_INFINITY]; 3];
        for (_, _, y) in &self.samples {
            for (k, v) in y.to_array().into_iter().enumerate() {
                out[k][0] = out[k][0].min(v);
                out[k][1] = out[k][1].max(v);
            }
        }
        out
    }
}
