//! Dense convex QP with elastic equality constraints, solved by a
//! primal-dual interior-point method.
//!
//! ```text
//! min  1/2 d'Hd + g'd + rho * sum(p + q)
//! s.t. A d + c = p - q,   lo <= d <= hi,   p, q >= 0
//! ```

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub d: DVector<f64>,
    /// Multipliers of `A d + c = p - q`.
    pub eq_multipliers: DVector<f64>,
    /// Net bound multipliers, lower minus upper.
    pub bound_multipliers: DVector<f64>,
    /// `sum(p + q)`, the linearised infeasibility left over.
    pub elastic: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct QpProblem<'a> {
    pub h: &'a DMatrix<f64>,
    pub g: &'a DVector<f64>,
    pub a: &'a DMatrix<f64>,
    pub c: &'a DVector<f64>,
    pub lo: &'a DVector<f64>,
    pub hi: &'a DVector<f64>,
    pub rho: f64,
}

const MAX_ITER: usize = 120;
const TOL: f64 = 1e-10;
const STEP_TO_BOUNDARY: f64 = 0.995;

struct Iterate {
    d: DVector<f64>,
    lam: DVector<f64>,
    zl: DVector<f64>,
    zu: DVector<f64>,
    p: DVector<f64>,
    q: DVector<f64>,
    wp: DVector<f64>,
    wq: DVector<f64>,
}

struct Direction {
    d: DVector<f64>,
    lam: DVector<f64>,
    zl: DVector<f64>,
    zu: DVector<f64>,
    p: DVector<f64>,
    q: DVector<f64>,
    wp: DVector<f64>,
    wq: DVector<f64>,
}

pub fn solve(qp: &QpProblem<'_>) -> Option<QpSolution> {
    let n = qp.g.len();
    let m = qp.c.len();
    let has_lo: Vec<bool> = qp.lo.iter().map(|v| v.is_finite()).collect();
    let has_hi: Vec<bool> = qp.hi.iter().map(|v| v.is_finite()).collect();
    let rho = qp.rho;

    let mut d = DVector::zeros(n);
    for i in 0..n {
        let (lo, hi) = (qp.lo[i], qp.hi[i]);
        let margin = if has_lo[i] && has_hi[i] {
            (1e-2 * (hi - lo)).min(1e-2)
        } else {
            1e-2
        };
        if has_lo[i] && d[i] < lo + margin {
            d[i] = lo + margin;
        }
        if has_hi[i] && d[i] > hi - margin {
            d[i] = hi - margin;
        }
        if has_lo[i] && has_hi[i] && lo + margin > hi - margin {
            d[i] = 0.5 * (lo + hi);
        }
    }
    let r0 = qp.a * &d + qp.c;
    let mut it = Iterate {
        d,
        lam: DVector::zeros(m),
        zl: DVector::from_fn(n, |i, _| if has_lo[i] { 1.0 } else { 0.0 }),
        zu: DVector::from_fn(n, |i, _| if has_hi[i] { 1.0 } else { 0.0 }),
        p: r0.map(|v| v.max(0.0) + 1.0),
        q: r0.map(|v| (-v).max(0.0) + 1.0),
        wp: DVector::from_element(m, rho),
        wq: DVector::from_element(m, rho),
    };
    let pairs = (has_lo.iter().filter(|b| **b).count() + has_hi.iter().filter(|b| **b).count() + 2 * m).max(1);

    let scale = 1.0 + qp.g.amax().max(qp.c.amax()).max(rho);
    for iter in 0..MAX_ITER {
        let sl = DVector::from_fn(n, |i, _| if has_lo[i] { it.d[i] - qp.lo[i] } else { 1.0 });
        let su = DVector::from_fn(n, |i, _| if has_hi[i] { qp.hi[i] - it.d[i] } else { 1.0 });
        let r_d = qp.h * &it.d + qp.g - qp.a.transpose() * &it.lam - &it.zl + &it.zu;
        let r_c = qp.a * &it.d + qp.c - &it.p + &it.q;
        let r_p = it.lam.map(|l| rho + l) - &it.wp;
        let r_q = it.lam.map(|l| rho - l) - &it.wq;
        let mu = (sl.dot(&it.zl) + su.dot(&it.zu) + it.p.dot(&it.wp) + it.q.dot(&it.wq)) / pairs as f64;
        let dual_inf = r_d.amax().max(r_p.amax()).max(r_q.amax());
        if dual_inf < TOL * scale && r_c.amax() < TOL * scale && mu < TOL {
            return Some(finish(it, iter, true));
        }

        let sigma_d = DVector::from_fn(n, |i, _| {
            (if has_lo[i] { it.zl[i] / sl[i] } else { 0.0 })
                + (if has_hi[i] { it.zu[i] / su[i] } else { 0.0 })
        });
        let sig_p = it.wp.component_div(&it.p);
        let sig_q = it.wq.component_div(&it.q);
        let mut kkt = DMatrix::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(qp.h);
        for i in 0..n {
            kkt[(i, i)] += sigma_d[i];
        }
        kkt.view_mut((0, n), (n, m)).copy_from(&(-qp.a.transpose()));
        kkt.view_mut((n, 0), (m, n)).copy_from(qp.a);
        for k in 0..m {
            kkt[(n + k, n + k)] = 1.0 / sig_p[k] + 1.0 / sig_q[k];
        }
        let lu = kkt.lu();

        let solve_dir = |tl: &DVector<f64>, tu: &DVector<f64>, tp: &DVector<f64>, tq: &DVector<f64>| -> Option<Direction> {
            // tl, tu, tp, tq: complementarity targets per pair
            let mut rhs = DVector::zeros(n + m);
            for i in 0..n {
                let mut v = -r_d[i];
                if has_lo[i] {
                    v += (tl[i] - sl[i] * it.zl[i]) / sl[i];
                }
                if has_hi[i] {
                    v -= (tu[i] - su[i] * it.zu[i]) / su[i];
                }
                rhs[i] = v;
            }
            let ap = DVector::from_fn(m, |k, _| -r_p[k] + (tp[k] - it.p[k] * it.wp[k]) / it.p[k]);
            let aq = DVector::from_fn(m, |k, _| -r_q[k] + (tq[k] - it.q[k] * it.wq[k]) / it.q[k]);
            for k in 0..m {
                rhs[n + k] = -r_c[k] + ap[k] / sig_p[k] - aq[k] / sig_q[k];
            }
            let sol = lu.solve(&rhs)?;
            if sol.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let dd = sol.rows(0, n).into_owned();
            let dl = sol.rows(n, m).into_owned();
            let dzl = DVector::from_fn(n, |i, _| {
                if has_lo[i] {
                    (tl[i] - sl[i] * it.zl[i]) / sl[i] - it.zl[i] / sl[i] * dd[i]
                } else {
                    0.0
                }
            });
            let dzu = DVector::from_fn(n, |i, _| {
                if has_hi[i] {
                    (tu[i] - su[i] * it.zu[i]) / su[i] + it.zu[i] / su[i] * dd[i]
                } else {
                    0.0
                }
            });
            let dp = DVector::from_fn(m, |k, _| (ap[k] - dl[k]) / sig_p[k]);
            let dq = DVector::from_fn(m, |k, _| (aq[k] + dl[k]) / sig_q[k]);
            let dwp = DVector::from_fn(m, |k, _| (tp[k] - it.p[k] * it.wp[k]) / it.p[k] - sig_p[k] * dp[k]);
            let dwq = DVector::from_fn(m, |k, _| (tq[k] - it.q[k] * it.wq[k]) / it.q[k] - sig_q[k] * dq[k]);
            Some(Direction { d: dd, lam: dl, zl: dzl, zu: dzu, p: dp, q: dq, wp: dwp, wq: dwq })
        };

        let zero_n = DVector::zeros(n);
        let zero_m = DVector::zeros(m);
        let aff = solve_dir(&zero_n, &zero_n, &zero_m, &zero_m)?;
        let alpha_aff = step_length(&it, &aff, &sl, &su, &has_lo, &has_hi, 1.0);
        let mu_aff = {
            let mut s = 0.0;
            for i in 0..n {
                if has_lo[i] {
                    s += (sl[i] + alpha_aff * aff.d[i]) * (it.zl[i] + alpha_aff * aff.zl[i]);
                }
                if has_hi[i] {
                    s += (su[i] - alpha_aff * aff.d[i]) * (it.zu[i] + alpha_aff * aff.zu[i]);
                }
            }
            for k in 0..m {
                s += (it.p[k] + alpha_aff * aff.p[k]) * (it.wp[k] + alpha_aff * aff.wp[k]);
                s += (it.q[k] + alpha_aff * aff.q[k]) * (it.wq[k] + alpha_aff * aff.wq[k]);
            }
            s / pairs as f64
        };
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let target = sigma * mu;
        let tl = DVector::from_fn(n, |i, _| target - aff.d[i] * aff.zl[i]);
        let tu = DVector::from_fn(n, |i, _| target + aff.d[i] * aff.zu[i]);
        let tp = DVector::from_fn(m, |k, _| target - aff.p[k] * aff.wp[k]);
        let tq = DVector::from_fn(m, |k, _| target - aff.q[k] * aff.wq[k]);
        let dir = solve_dir(&tl, &tu, &tp, &tq)?;
        let alpha = step_length(&it, &dir, &sl, &su, &has_lo, &has_hi, STEP_TO_BOUNDARY);
        it.d += alpha * &dir.d;
        it.lam += alpha * &dir.lam;
        it.zl += alpha * &dir.zl;
        it.zu += alpha * &dir.zu;
        it.p += alpha * &dir.p;
        it.q += alpha * &dir.q;
        it.wp += alpha * &dir.wp;
        it.wq += alpha * &dir.wq;
    }
    Some(finish(it, MAX_ITER, false))
}

fn step_length(
    it: &Iterate,
    dir: &Direction,
    sl: &DVector<f64>,
    su: &DVector<f64>,
    has_lo: &[bool],
    has_hi: &[bool],
    frac: f64,
) -> f64 {
    let mut alpha: f64 = 1.0;
    let mut limit = |x: f64, dx: f64| {
        if dx < 0.0 {
            alpha = alpha.min(-frac * x / dx);
        }
    };
    for i in 0..it.d.len() {
        if has_lo[i] {
            limit(sl[i], dir.d[i]);
            limit(it.zl[i], dir.zl[i]);
        }
        if has_hi[i] {
            limit(su[i], -dir.d[i]);
            limit(it.zu[i], dir.zu[i]);
        }
    }
    for k in 0..it.p.len() {
        limit(it.p[k], dir.p[k]);
        limit(it.q[k], dir.q[k]);
        limit(it.wp[k], dir.wp[k]);
        limit(it.wq[k], dir.wq[k]);
    }
    alpha.clamp(0.0, 1.0)
}

fn finish(it: Iterate, iterations: usize, converged: bool) -> QpSolution {
    QpSolution {
        elastic: it.p.sum() + it.q.sum(),
        bound_multipliers: &it.zl - &it.zu,
        d: it.d,
        eq_multipliers: it.lam,
        iterations,
        converged,
    }
}
