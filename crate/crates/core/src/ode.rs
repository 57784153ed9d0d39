//! Dormand-Prince 5(4) integration with PI step control and dense output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step; non-finite means unbounded.
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    pub dense_output: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 0.05,
            min_step: 1e-12,
            max_steps: 1_000_000,
            dense_output: true,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerance(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(Error::InvalidInput {
                name: "rel_tol",
                reason: format!("must lie in (0, 1e-3], got {}", self.rel_tol),
            });
        }
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::InvalidInput {
                name: "abs_tol",
                reason: format!("must be positive, got {}", self.abs_tol),
            });
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidInput {
                name: "max_step",
                reason: format!("must be positive, got {}", self.max_step),
            });
        }
        if !(self.min_step > 0.0) {
            return Err(Error::InvalidInput {
                name: "min_step",
                reason: format!("must be positive, got {}", self.min_step),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    t0: f64,
    h: f64,
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
    /// Time at which the stop function changed sign, if it did.
    pub stopped_at: Option<f64>,
    segments: Vec<Segment>,
    dim: usize,
}

impl Solution {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("solution holds the initial state")
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("solution holds the initial time")
    }

    pub fn has_dense_output(&self) -> bool {
        !self.segments.is_empty() || self.times.len() == 1
    }

    /// State at `t`; stored step endpoints are returned unchanged.
    pub fn state_at(&self, t: f64) -> Option<Vec<f64>> {
        let (t0, t1) = (self.times[0], self.t_end());
        if !(t >= t0.min(t1) && t <= t0.max(t1)) {
            return None;
        }
        let forward = t1 >= t0;
        let idx = self.times.partition_point(|&s| if forward { s < t } else { s > t });
        if idx < self.times.len() && self.times[idx] == t {
            return Some(self.states[idx].clone());
        }
        let seg = self.segments.get(idx.checked_sub(1)?)?;
        let th = (t - seg.t0) / seg.h;
        let th1 = 1.0 - th;
        let n = self.dim;
        let c = &seg.coeffs;
        Some(
            (0..n)
                .map(|i| {
                    c[i] + th
                        * (c[n + i]
                            + th1 * (c[2 * n + i] + th * (c[3 * n + i] + th1 * c[4 * n + i])))
                })
                .collect(),
        )
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

type StepHook<'a> = dyn FnMut(f64, &[f64]) -> std::result::Result<(), String> + 'a;
type StopFn<'a> = dyn Fn(f64, &[f64]) -> f64 + 'a;

/// Integrator with optional per-step checks and a terminal stop function.
pub struct Integrator<'a> {
    cfg: IntegratorConfig,
    hook: Option<Box<StepHook<'a>>>,
    stop: Option<Box<StopFn<'a>>>,
}

impl<'a> Integrator<'a> {
    pub fn new(cfg: IntegratorConfig) -> Self {
        Self {
            cfg,
            hook: None,
            stop: None,
        }
    }

    /// Called after every accepted step; an `Err` aborts the integration.
    pub fn on_step(
        mut self,
        hook: impl FnMut(f64, &[f64]) -> std::result::Result<(), String> + 'a,
    ) -> Self {
        self.hook = Some(Box::new(hook));
        self
    }

    /// Stops at the first sign change of `g(t, x)`.
    pub fn stop_when(mut self, g: impl Fn(f64, &[f64]) -> f64 + 'a) -> Self {
        self.stop = Some(Box::new(g));
        self
    }

    pub fn run<F>(mut self, mut rhs: F, t_span: (f64, f64), x0: &[f64]) -> Result<Solution>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let cfg = self.cfg;
        cfg.validate()?;
        let (t0, t_end) = t_span;
        if !(t0.is_finite() && t_end.is_finite()) || t0 == t_end {
            return Err(Error::InvalidInput {
                name: "t_span",
                reason: format!("degenerate interval ({t0}, {t_end})"),
            });
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial state"));
        }
        let n = x0.len();
        let dir = (t_end - t0).signum();
        let span = (t_end - t0).abs();
        let max_step = cfg.max_step.min(span);

        let mut sol = Solution {
            times: vec![t0],
            states: vec![x0.to_vec()],
            stats: StepStats::default(),
            stopped_at: None,
            segments: Vec::new(),
            dim: n,
        };

        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut k5 = vec![0.0; n];
        let mut k6 = vec![0.0; n];
        let mut k7 = vec![0.0; n];
        let mut ys = vec![0.0; n];
        let mut y1 = vec![0.0; n];

        let mut t = t0;
        let mut y = x0.to_vec();
        rhs(t, &y, &mut k1)?;
        sol.stats.evaluations += 1;
        if k1.iter().any(|v| !v.is_finite()) {
            return Err(Error::Rhs {
                t,
                message: "non-finite derivative".into(),
            });
        }

        let mut h = initial_step(&mut rhs, t, &y, &k1, dir, max_step, &cfg, &mut sol.stats)?;
        let mut fac_old: f64 = 1e-4;
        let mut last_rejected = false;
        let mut g_prev = self.stop.as_ref().map(|g| g(t, &y));

        loop {
            if sol.stats.accepted + sol.stats.rejected >= cfg.max_steps {
                return Err(Error::StepUnderflow { t, step: h });
            }
            let remaining = (t_end - t).abs();
            let mut last = false;
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                last = true;
            }
            if h < cfg.min_step && !last {
                return Err(Error::StepUnderflow { t, step: h });
            }
            let hs = dir * h;

            for i in 0..n {
                ys[i] = y[i] + hs * A21 * k1[i];
            }
            rhs(t + C2 * hs, &ys, &mut k2)?;
            for i in 0..n {
                ys[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
            }
            rhs(t + C3 * hs, &ys, &mut k3)?;
            for i in 0..n {
                ys[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            rhs(t + C4 * hs, &ys, &mut k4)?;
            for i in 0..n {
                ys[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            rhs(t + C5 * hs, &ys, &mut k5)?;
            for i in 0..n {
                ys[i] = y[i]
                    + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_new = if last { t_end } else { t + hs };
            rhs(t_new, &ys, &mut k6)?;
            for i in 0..n {
                y1[i] = y[i]
                    + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            rhs(t_new, &y1, &mut k7)?;
            sol.stats.evaluations += 6;

            let mut err = 0.0;
            let mut finite = true;
            for i in 0..n {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y1[i].abs());
                err += (e / sc).powi(2);
                finite &= y1[i].is_finite() && k7[i].is_finite();
            }
            let err = if finite { (err / n.max(1) as f64).sqrt() } else { f64::INFINITY };

            if err <= 1.0 {
                let fac11 = err.powf(0.2 - BETA * 0.75);
                let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = (h / fac).min(max_step);
                if last_rejected {
                    h_new = h_new.min(h);
                }
                fac_old = err.max(1e-4);
                last_rejected = false;

                if cfg.dense_output || self.stop.is_some() {
                    let mut c = vec![0.0; 5 * n];
                    for i in 0..n {
                        let dy = y1[i] - y[i];
                        let bspl = hs * k1[i] - dy;
                        c[i] = y[i];
                        c[n + i] = dy;
                        c[2 * n + i] = bspl;
                        c[3 * n + i] = dy - hs * k7[i] - bspl;
                        c[4 * n + i] = hs
                            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                                + D7 * k7[i]);
                    }
                    sol.segments.push(Segment {
                        t0: t,
                        h: t_new - t,
                        coeffs: c,
                    });
                }
                t = t_new;
                std::mem::swap(&mut y, &mut y1);
                std::mem::swap(&mut k1, &mut k7);
                sol.stats.accepted += 1;
                sol.times.push(t);
                sol.states.push(y.clone());

                if let Some(hook) = self.hook.as_mut() {
                    hook(t, &y).map_err(|message| Error::Hook { t, message })?;
                }
                if let (Some(g), Some(gp)) = (self.stop.as_ref(), g_prev) {
                    let gn = g(t, &y);
                    if gp != 0.0 && gp.signum() != gn.signum() {
                        let tc = locate_root(&sol, g.as_ref(), gp);
                        truncate_at(&mut sol, tc);
                        sol.stopped_at = Some(tc);
                        break;
                    }
                    g_prev = Some(gn);
                }
                if last {
                    break;
                }
                h = h_new;
            } else {
                let fac11 = if err.is_finite() { err.powf(0.2 - BETA * 0.75) } else { FAC_MAX };
                h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
                last_rejected = true;
                sol.stats.rejected += 1;
            }
        }
        if !cfg.dense_output {
            sol.segments.clear();
        }
        Ok(sol)
    }
}

pub fn integrate<F>(rhs: F, x0: &[f64], t_span: (f64, f64), cfg: &IntegratorConfig) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    Integrator::new(*cfg).run(rhs, t_span, x0)
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    rhs: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    dir: f64,
    max_step: f64,
    cfg: &IntegratorConfig,
    stats: &mut StepStats,
) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len().max(1) as f64;
    let sc: Vec<f64> = y.iter().map(|v| cfg.abs_tol + cfg.rel_tol * v.abs()).collect();
    let norm = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n).sqrt();
    let d0 = norm(y);
    let d1 = norm(f0);
    if d1 <= 1e-15 {
        let f1 = {
            let mut f1 = vec![0.0; y.len()];
            let y1: Vec<f64> = y.to_vec();
            rhs(t + dir * max_step, &y1, &mut f1)?;
            stats.evaluations += 1;
            f1
        };
        if norm(&f1) <= 1e-15 {
            return Ok(max_step);
        }
    }
    let h0 = if d0 <= 1e-5 || d1 <= 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(max_step);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, f)| a + dir * h0 * f).collect();
    let mut f1 = vec![0.0; y.len()];
    rhs(t + dir * h0, &y1, &mut f1)?;
    stats.evaluations += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(max_step))
}

fn locate_root(sol: &Solution, g: &StopFn<'_>, g_before: f64) -> f64 {
    let k = sol.times.len();
    let (mut lo, mut hi) = (sol.times[k - 2], sol.times[k - 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let x = sol.state_at(mid).expect("inside last segment");
        if g(mid, &x).signum() == g_before.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn truncate_at(sol: &mut Solution, tc: f64) {
    let x = sol.state_at(tc).expect("inside last segment");
    let k = sol.times.len();
    sol.times[k - 1] = tc;
    sol.states[k - 1] = x;
}
