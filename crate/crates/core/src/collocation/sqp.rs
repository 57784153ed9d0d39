//! Sequential quadratic programming with damped BFGS and an L1 merit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::qp::{self, QpProblem};
use crate::error::Result;
use crate::parallel::Execution;

/// Equality-constrained problem with simple bounds.
pub trait Nlp: Sync {
    fn num_vars(&self) -> usize;
    fn num_eq(&self) -> usize;
    /// `(lower, upper)`, possibly infinite.
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn objective(&self, z: &[f64]) -> Result<f64>;
    fn constraints(&self, z: &[f64]) -> Result<Vec<f64>>;

    fn evaluate(&self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.objective(z)?, self.constraints(z)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SqpOptions {
    pub max_iterations: usize,
    pub constraint_tol: f64,
    pub stationarity_tol: f64,
    pub execution: Execution,
}

impl Default for SqpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            constraint_tol: 1e-6,
            stationarity_tol: 1e-4,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqpStatus {
    Converged,
    IterationLimit,
    LineSearchFailure,
    /// The linearised constraints stayed inconsistent within the bounds.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqpReport {
    pub status: SqpStatus,
    pub iterations: usize,
    pub objective: f64,
    pub max_violation: f64,
    pub stationarity: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqpResult {
    pub z: Vec<f64>,
    pub report: SqpReport,
}

struct Point {
    z: DVector<f64>,
    f: f64,
    c: DVector<f64>,
    g: DVector<f64>,
    jac: DMatrix<f64>,
}

struct Reduced<'a, P: Nlp + ?Sized> {
    nlp: &'a P,
    full: Vec<f64>,
    free: Vec<usize>,
}

impl<P: Nlp + ?Sized> Reduced<'_, P> {
    fn expand(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut z = self.full.clone();
        for (k, &i) in self.free.iter().enumerate() {
            z[i] = x[k];
        }
        z
    }

    fn eval(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let (f, c) = self.nlp.evaluate(&self.expand(x))?;
        Ok((f, DVector::from_vec(c)))
    }

    /// Central-difference gradient and Jacobian, one column per work item.
    fn derivatives(&self, x: &DVector<f64>, exec: Execution) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let n = x.len();
        let m = self.nlp.num_eq();
        let cols = exec.map_range(n, |i| -> Result<(f64, Vec<f64>)> {
            let h = 1e-6 * (1.0 + x[i].abs());
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let (fp, cp) = self.eval(&xp)?;
            let (fm, cm) = self.eval(&xm)?;
            let dc = cp.iter().zip(cm.iter()).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            Ok(((fp - fm) / (2.0 * h), dc))
        });
        let mut g = DVector::zeros(n);
        let mut jac = DMatrix::zeros(m, n);
        for (i, col) in cols.into_iter().enumerate() {
            let (gi, ci) = col?;
            g[i] = gi;
            for (k, v) in ci.into_iter().enumerate() {
                jac[(k, i)] = v;
            }
        }
        Ok((g, jac))
    }

    fn point(&self, x: DVector<f64>, exec: Execution) -> Result<Point> {
        let (f, c) = self.eval(&x)?;
        let (g, jac) = self.derivatives(&x, exec)?;
        Ok(Point { z: x, f, c, g, jac })
    }
}

fn l1(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Solves `nlp` from `z0`; the returned iterate is the last accepted one.
pub fn solve<P: Nlp + ?Sized>(nlp: &P, z0: &[f64], opts: &SqpOptions) -> Result<SqpResult> {
    let (lo_full, hi_full) = nlp.bounds();
    let mut full = z0.to_vec();
    for i in 0..full.len() {
        full[i] = full[i].clamp(lo_full[i], hi_full[i].max(lo_full[i]));
    }
    if lo_full.iter().zip(&hi_full).any(|(l, h)| l > h) {
        let (f, c) = nlp.evaluate(&full)?;
        return Ok(SqpResult {
            z: full,
            report: SqpReport {
                status: SqpStatus::Infeasible,
                iterations: 0,
                objective: f,
                max_violation: c.iter().fold(0.0, |m, v| m.max(v.abs())),
                stationarity: f64::INFINITY,
                evaluations: 1,
            },
        });
    }
    let free: Vec<usize> = (0..full.len()).filter(|&i| lo_full[i] < hi_full[i]).collect();
    let red = Reduced { nlp, full, free };
    let lo = DVector::from_iterator(red.free.len(), red.free.iter().map(|&i| lo_full[i]));
    let hi = DVector::from_iterator(red.free.len(), red.free.iter().map(|&i| hi_full[i]));
    let n = red.free.len();
    let m = nlp.num_eq();

    let x0 = DVector::from_iterator(n, red.free.iter().map(|&i| red.full[i]));
    let mut pt = red.point(x0, opts.execution)?;
    let mut evaluations = 1 + 2 * n;
    let mut b = DMatrix::<f64>::identity(n, n);
    let mut lam = DVector::<f64>::zeros(m);
    let mut nu = DVector::<f64>::zeros(n);
    let mut penalty: f64 = 1.0;
    let mut last_elastic = 0.0;
    let mut status = SqpStatus::IterationLimit;
    let mut iterations = 0;

    let stationarity = |pt: &Point, lam: &DVector<f64>, nu: &DVector<f64>| {
        (&pt.g - pt.jac.transpose() * lam - nu).amax()
    };

    for k in 0..opts.max_iterations {
        iterations = k;
        let viol = pt.c.amax();
        let stat = stationarity(&pt, &lam, &nu);
        if k > 0 && viol < opts.constraint_tol && stat < opts.stationarity_tol {
            status = SqpStatus::Converged;
            break;
        }

        let dlo = &lo - &pt.z;
        let dhi = &hi - &pt.z;
        let rho_qp = 1e3 * (1.0 + lam.amax()).max(penalty);
        let sol = qp::solve(&QpProblem {
            h: &b,
            g: &pt.g,
            a: &pt.jac,
            c: &pt.c,
            lo: &dlo,
            hi: &dhi,
            rho: rho_qp,
        });
        let Some(sol) = sol else {
            status = SqpStatus::LineSearchFailure;
            break;
        };
        last_elastic = sol.elastic;
        let d = sol.d;
        let lam_new = sol.eq_multipliers;
        let nu_new = sol.bound_multipliers;

        if d.amax() < 1e-14 {
            lam = lam_new;
            nu = nu_new;
            status = if viol < opts.constraint_tol {
                if stationarity(&pt, &lam, &nu) < opts.stationarity_tol {
                    SqpStatus::Converged
                } else {
                    SqpStatus::LineSearchFailure
                }
            } else {
                SqpStatus::Infeasible
            };
            break;
        }

        penalty = penalty.max(1.1 * lam_new.amax());
        let merit0 = pt.f + penalty * l1(&pt.c);
        let lin = &pt.c + &pt.jac * &d;
        let slope = pt.g.dot(&d) + penalty * (l1(&lin) - l1(&pt.c));
        let slope = slope.min(-1e-12 * d.norm_squared());

        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-10 {
            let trial = &pt.z + alpha * &d;
            evaluations += 1;
            if let Ok((f, c)) = red.eval(&trial) {
                if f.is_finite() && c.iter().all(|v| v.is_finite()) {
                    let merit = f + penalty * l1(&c);
                    if merit <= merit0 + 1e-4 * alpha * slope {
                        accepted = Some(trial);
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        let Some(z_new) = accepted else {
            status = SqpStatus::LineSearchFailure;
            break;
        };
        let new_pt = red.point(z_new, opts.execution)?;
        evaluations += 2 * n;

        let s = &new_pt.z - &pt.z;
        let grad_l = |p: &Point| &p.g - p.jac.transpose() * &lam_new;
        let mut y = grad_l(&new_pt) - grad_l(&pt);
        let bs = &b * &s;
        let sbs = s.dot(&bs);
        let sy = s.dot(&y);
        if sbs > 1e-16 {
            if sy < 0.2 * sbs {
                let theta = 0.8 * sbs / (sbs - sy);
                y = theta * &y + (1.0 - theta) * &bs;
            }
            let sy = s.dot(&y);
            if sy > 1e-16 {
                b = &b - &bs * bs.transpose() / sbs + &y * y.transpose() / sy;
            }
        }
        pt = new_pt;
        lam = lam_new;
        nu = nu_new;
        iterations = k + 1;
    }

    let viol = pt.c.amax();
    if status == SqpStatus::Converged && viol >= opts.constraint_tol {
        status = SqpStatus::Infeasible;
    }
    if matches!(status, SqpStatus::IterationLimit | SqpStatus::LineSearchFailure)
        && viol >= opts.constraint_tol
        && last_elastic > 1e-6
    {
        status = SqpStatus::Infeasible;
    }
    let stat = stationarity(&pt, &lam, &nu);
    Ok(SqpResult {
        z: red.expand(&pt.z),
        report: SqpReport {
            status,
            iterations,
            objective: pt.f,
            max_violation: viol,
            stationarity: stat,
            evaluations,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosen;
    impl Nlp for Rosen {
        fn num_vars(&self) -> usize {
            2
        }
        fn num_eq(&self) -> usize {
            0
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![f64::NEG_INFINITY; 2], vec![f64::INFINITY; 2])
        }
        fn objective(&self, z: &[f64]) -> Result<f64> {
            Ok((1.0 - z[0]).powi(2) + 100.0 * (z[1] - z[0] * z[0]).powi(2))
        }
        fn constraints(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![])
        }
    }

    /// min x0 + x1 on the unit circle, with x0 fixed by bounds in one variant.
    struct Circle {
        lo: Vec<f64>,
        hi: Vec<f64>,
    }
    impl Nlp for Circle {
        fn num_vars(&self) -> usize {
            2
        }
        fn num_eq(&self) -> usize {
            1
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (self.lo.clone(), self.hi.clone())
        }
        fn objective(&self, z: &[f64]) -> Result<f64> {
            Ok(z[0] + z[1])
        }
        fn constraints(&self, z: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![z[0] * z[0] + z[1] * z[1] - 1.0])
        }
    }

    #[test]
    fn rosenbrock() {
        let r = solve(&Rosen, &[-1.2, 1.0], &SqpOptions::default()).unwrap();
        assert_eq!(r.report.status, SqpStatus::Converged, "{:?}", r.report);
        assert!((r.z[0] - 1.0).abs() < 1e-3 && (r.z[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn circle_minimum() {
        let nlp = Circle { lo: vec![-2.0; 2], hi: vec![2.0; 2] };
        let r = solve(&nlp, &[0.5, -0.2], &SqpOptions::default()).unwrap();
        assert_eq!(r.report.status, SqpStatus::Converged, "{:?}", r.report);
        let s = -std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.z[0] - s).abs() < 1e-4 && (r.z[1] - s).abs() < 1e-4, "{:?}", r.z);
    }

    #[test]
    fn fixed_variable_is_respected() {
        let nlp = Circle { lo: vec![0.6, -2.0], hi: vec![0.6, 2.0] };
        let r = solve(&nlp, &[0.6, 0.3], &SqpOptions::default()).unwrap();
        assert_eq!(r.report.status, SqpStatus::Converged, "{:?}", r.report);
        assert_eq!(r.z[0], 0.6);
        assert!((r.z[1].abs() - 0.8).abs() < 1e-6);
    }

    #[test]
    fn bounds_excluding_the_circle_are_infeasible() {
        let nlp = Circle { lo: vec![2.0, 2.0], hi: vec![3.0, 3.0] };
        let r = solve(&nlp, &[2.5, 2.5], &SqpOptions::default()).unwrap();
        assert_eq!(r.report.status, SqpStatus::Infeasible, "{:?}", r.report);
    }

    #[test]
    fn iteration_limit_reported() {
        let opts = SqpOptions { max_iterations: 2, ..Default::default() };
        let r = solve(&Rosen, &[-1.2, 1.0], &opts).unwrap();
        assert_eq!(r.report.status, SqpStatus::IterationLimit);
    }
}
