//! Gauss-Legendre rules on the quarter period of an ellipse.

use std::f64::consts::FRAC_PI_2;

/// Nodes and weights mapped onto `[0, pi/2]`.
///
/// Every integrand used by the ring geometry is symmetric under
/// `t -> -t` and `t -> pi - t`, so a full-period integral is four times the
/// quarter integral.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarterRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cos2: Vec<f64>,
    sin2: Vec<f64>,
    points: usize,
}

impl QuarterRule {
    /// Builds a rule equivalent to `points` nodes around the full period.
    pub fn new(points: usize) -> Self {
        let m = points.div_ceil(4).max(2);
        let (x, w) = gauss_legendre(m);
        let nodes: Vec<f64> = x.iter().map(|xi| FRAC_PI_2 * 0.5 * (xi + 1.0)).collect();
        let weights: Vec<f64> = w.iter().map(|wi| 4.0 * FRAC_PI_2 * 0.5 * wi).collect();
        let cos2 = nodes.iter().map(|t| t.cos().powi(2)).collect();
        let sin2 = nodes.iter().map(|t| t.sin().powi(2)).collect();
        Self {
            nodes,
            weights,
            cos2,
            sin2,
            points,
        }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights already include the factor four for the full period.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(cos^2 t, sin^2 t, w)` at each node.
    pub fn trig(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.cos2
            .iter()
            .zip(&self.sin2)
            .zip(&self.weights)
            .map(|((c, s), w)| (*c, *s, *w))
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [2, 5, 16, 128] {
            let (_, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let (x, w) = gauss_legendre(6);
        // degree 10 is within 2n - 1
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn quarter_rule_integrates_cos_squared() {
        let q = QuarterRule::new(64);
        let s: f64 = q.trig().map(|(c, _, w)| c * w).sum();
        assert!((s - std::f64::consts::PI).abs() < 1e-13);
    }
}
