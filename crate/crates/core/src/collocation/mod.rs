//! Hermite-Simpson transcription of the heading steering problem.
//!
//! Decision vector layout: node states `x_1..x_n` (8 each), node inertias
//! `y_1..y_n` (3 each, divided by a reference inertia inside the NLP) and the
//! final time.

pub mod curve;
pub mod qp;
pub mod sqp;

use serde::{Deserialize, Serialize};

use crate::dynamics::{contact_radius, EquationForm, SlopeModel, TumbleModel, TumbleState};
use crate::error::{Error, Result};
use crate::geometry::{AxisPair, Ellipse, InertiaTriple, RadiusPolicy, RingParams};
use crate::ode::{integrate, IntegratorConfig};
use crate::quadrature::gauss_legendre;
use crate::scenario::{simulate, AxisProgram, RunResult, ScenarioConfig};

pub use curve::{RealizableCurve, Spline};
pub use sqp::{Nlp, SqpOptions, SqpReport, SqpStatus};

const STATE: usize = 8;
const CURVE_SAMPLES: usize = 401;

pub fn interpolate_output(
    yi: &InertiaTriple,
    yj: &InertiaTriple,
    ti: f64,
    tj: f64,
    t: f64,
) -> InertiaTriple {
    let w = (t - ti) / (tj - ti);
    InertiaTriple::new(
        yi.y1 + w * (yj.y1 - yi.y1),
        yi.y2 + w * (yj.y2 - yi.y2),
        yi.y3 + w * (yj.y3 - yi.y3),
    )
}

/// Cubic Hermite coefficients `c0..c3` in the normalised time `s`.
pub fn hermite_coefficients(xj: &[f64], xk: &[f64], fj: &[f64], fk: &[f64], h: f64) -> [Vec<f64>; 4] {
    let n = xj.len();
    let mut c = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        c[0][i] = xj[i];
        c[1][i] = h * fj[i];
        c[2][i] = -3.0 * xj[i] - 2.0 * h * fj[i] + 3.0 * xk[i] - h * fk[i];
        c[3][i] = 2.0 * xj[i] + h * fj[i] - 2.0 * xk[i] + h * fk[i];
    }
    c
}

pub fn interpolate_state(xj: &[f64], xk: &[f64], fj: &[f64], fk: &[f64], h: f64, s: f64) -> Vec<f64> {
    let c = hermite_coefficients(xj, xk, fj, fk, h);
    (0..xj.len())
        .map(|i| c[0][i] + s * (c[1][i] + s * (c[2][i] + s * c[3][i])))
        .collect()
}

/// Time derivative of the interpolant, `x'(s) / h`.
pub fn interpolate_state_rate(xj: &[f64], xk: &[f64], fj: &[f64], fk: &[f64], h: f64, s: f64) -> Vec<f64> {
    let c = hermite_coefficients(xj, xk, fj, fk, h);
    (0..xj.len())
        .map(|i| (c[1][i] + s * (2.0 * c[2][i] + 3.0 * s * c[3][i])) / h)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    pub states: Vec<TumbleState>,
    pub outputs: Vec<InertiaTriple>,
    pub final_time: f64,
}

impl DecisionVector {
    pub fn nodes(&self) -> usize {
        self.states.len()
    }

    pub fn node_times(&self) -> Vec<f64> {
        let n = self.nodes();
        (0..n)
            .map(|i| self.final_time * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn pack(&self, yref: f64) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.nodes() * 11 + 1);
        for s in &self.states {
            z.extend_from_slice(&s.to_array());
        }
        for y in &self.outputs {
            z.extend(y.to_array().iter().map(|v| v / yref));
        }
        z.push(self.final_time);
        z
    }

    fn unpack(z: &[f64], n: usize, yref: f64) -> Self {
        let states = (0..n)
            .map(|i| TumbleState::from_slice(&z[STATE * i..STATE * (i + 1)]))
            .collect();
        let off = STATE * n;
        let outputs = (0..n)
            .map(|i| {
                let k = off + 3 * i;
                InertiaTriple::new(z[k] * yref, z[k + 1] * yref, z[k + 2] * yref)
            })
            .collect();
        Self {
            states,
            outputs,
            final_time: z[off + 3 * n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// `|heading(t_f) - target|`.
    #[default]
    Terminal,
    /// Root-sum-square of the heading error at every node.
    Trajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSlot {
    Heading,
    Lean,
    Spin,
    HeadingRate,
    LeanRate,
    SpinRate,
    ContactX,
    ContactY,
}

impl StateSlot {
    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalCondition {
    pub slot: StateSlot,
    pub value: f64,
}

/// Which inertia slot fixes the shape when mapping inertias back to axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InertiaComponent {
    First,
    #[default]
    Third,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteeringProblem {
    pub nodes: usize,
    pub target_heading: f64,
    pub initial: TumbleState,
    /// Per-slot `[min, max]` for `y1, y2, y3`.
    pub y_bounds: [[f64; 3]; 2],
    pub ring: RingParams,
    pub slope_model: SlopeModel,
    pub equation_form: EquationForm,
    pub cost: CostMode,
    pub terminal: Vec<TerminalCondition>,
    pub final_time_bounds: [f64; 2],
    pub initial_final_time: f64,
    /// Semi-axis `b` range spanned by the reachable-inertia curve.
    pub axis_range: [f64; 2],
    /// Require node inertias to lie on the reachable curve.
    pub realizability: bool,
    pub match_component: InertiaComponent,
    pub nlp: SqpOptions,
}

impl Default for SteeringProblem {
    fn default() -> Self {
        let ring = RingParams {
            radius_policy: RadiusPolicy::MeanRadius,
            ..RingParams::default()
        };
        let axis_range = [0.2, 0.45];
        let bounds = RealizableCurve::new(&ring, axis_range[0], axis_range[1], 41)
            .map(|c| c.bounds())
            .unwrap_or([[0.0, f64::INFINITY]; 3]);
        let r = ring.mean_radius();
        let pad = 1e-3 * ring.mass * r * r;
        Self {
            nodes: 10,
            target_heading: 0.2,
            initial: ScenarioConfig::default().initial,
            y_bounds: [
                [bounds[0][0] - pad, bounds[1][0] - pad, bounds[2][0] - pad],
                [bounds[0][1] + pad, bounds[1][1] + pad, bounds[2][1] + pad],
            ],
            ring,
            slope_model: SlopeModel::Extended,
            equation_form: EquationForm::Corrected,
            cost: CostMode::Terminal,
            terminal: Vec::new(),
            final_time_bounds: [0.2, 2.0],
            initial_final_time: 1.0,
            axis_range,
            realizability: true,
            match_component: InertiaComponent::Third,
            nlp: SqpOptions {
                max_iterations: 1000,
                ..SqpOptions::default()
            },
        }
    }
}

impl SteeringProblem {
    pub fn model(&self) -> TumbleModel {
        TumbleModel {
            params: self.ring,
            slope_model: self.slope_model,
            equation_form: self.equation_form,
            ..TumbleModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ring.validate()?;
        if self.nodes < 3 {
            return Err(Error::Config(format!("need at least 3 nodes, got {}", self.nodes)));
        }
        let [lo, hi] = self.final_time_bounds;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::Config(format!("final time bounds [{lo}, {hi}] are invalid")));
        }
        if !self.target_heading.is_finite() || !self.initial.is_finite() {
            return Err(Error::Config("target and initial state must be finite".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let p: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn reference_inertia(&self) -> f64 {
        let r = self.ring.mean_radius();
        self.ring.mass * r * r
    }

    /// Circle inertia for the configured ring.
    pub fn circle_inertia(&self) -> InertiaTriple {
        InertiaTriple::circle(self.ring.mass, self.ring.mean_radius())
    }

    fn curve(&self) -> Result<RealizableCurve> {
        RealizableCurve::new(&self.ring, self.axis_range[0], self.axis_range[1], CURVE_SAMPLES)
    }
}

struct Transcription<'a> {
    problem: &'a SteeringProblem,
    model: TumbleModel,
    curve: RealizableCurve,
    yref: f64,
}

impl Transcription<'_> {
    fn new(problem: &SteeringProblem) -> Result<Transcription<'_>> {
        Ok(Transcription {
            problem,
            model: problem.model(),
            curve: problem.curve()?,
            yref: problem.reference_inertia(),
        })
    }

    fn radius(&self, y: &InertiaTriple, spin: f64) -> f64 {
        let ring = &self.problem.ring;
        match ring.radius_policy {
            RadiusPolicy::MeanRadius => ring.mean_radius(),
            RadiusPolicy::SupportFunction => {
                let (a, b) = self.curve.axes_of_y3(y.y3);
                contact_radius(a, b, spin, ring.radius_policy, ring.perimeter)
            }
        }
    }

    fn dynamics(&self, x: &[f64], y: &InertiaTriple) -> Result<[f64; 8]> {
        let s = TumbleState::from_slice(x);
        let r = self.radius(y, s.spin);
        Ok(self.model.rhs(&s, y, r)?.rates.to_array())
    }

    fn defects(&self, z: &DecisionVector) -> Result<Vec<f64>> {
        let n = z.nodes();
        let h = z.final_time / (n - 1) as f64;
        let xs: Vec<[f64; 8]> = z.states.iter().map(|s| s.to_array()).collect();
        let fs = (0..n)
            .map(|i| {
                self.dynamics(&xs[i], &z.outputs[i]).map_err(|e| Error::Defect {
                    interval: i.min(n - 2),
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(STATE * (n - 1));
        for j in 0..n - 1 {
            let xm = interpolate_state(&xs[j], &xs[j + 1], &fs[j], &fs[j + 1], h, 0.5);
            let dm = interpolate_state_rate(&xs[j], &xs[j + 1], &fs[j], &fs[j + 1], h, 0.5);
            let ym = interpolate_output(&z.outputs[j], &z.outputs[j + 1], 0.0, 1.0, 0.5);
            let fm = self.dynamics(&xm, &ym).map_err(|e| Error::Defect {
                interval: j,
                message: e.to_string(),
            })?;
            out.extend(dm.iter().zip(&fm).map(|(d, f)| d - f));
        }
        Ok(out)
    }

    /// Integral over `[0, t_f]` of the largest interpolant residual.
    fn residual_integral(&self, z: &DecisionVector) -> Result<f64> {
        let n = z.nodes();
        let h = z.final_time / (n - 1) as f64;
        let (gx, gw) = gauss_legendre(6);
        let xs: Vec<[f64; 8]> = z.states.iter().map(|s| s.to_array()).collect();
        let fs = xs
            .iter()
            .zip(&z.outputs)
            .map(|(x, y)| self.dynamics(x, y))
            .collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        for j in 0..n - 1 {
            for (g, w) in gx.iter().zip(&gw) {
                let s = 0.5 * (g + 1.0);
                let x = interpolate_state(&xs[j], &xs[j + 1], &fs[j], &fs[j + 1], h, s);
                let dx = interpolate_state_rate(&xs[j], &xs[j + 1], &fs[j], &fs[j + 1], h, s);
                let y = interpolate_output(&z.outputs[j], &z.outputs[j + 1], 0.0, 1.0, s);
                let f = self.dynamics(&x, &y)?;
                let r = dx.iter().zip(&f).fold(0.0_f64, |m, (d, f)| m.max((d - f).abs()));
                total += 0.5 * w * h * r;
            }
        }
        Ok(total)
    }

    fn realizability(&self, z: &DecisionVector) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * z.nodes());
        for y in &z.outputs {
            out.push(y.planar_defect() / self.yref);
            out.push((y.y1 - self.curve.y1_of_y3(y.y3)) / self.yref);
        }
        out
    }
}

impl Nlp for Transcription<'_> {
    fn num_vars(&self) -> usize {
        11 * self.problem.nodes + 1
    }

    fn num_eq(&self) -> usize {
        let n = self.problem.nodes;
        STATE * n + self.problem.terminal.len() + if self.problem.realizability { 2 * n } else { 0 }
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.problem.nodes;
        let mut lo = vec![f64::NEG_INFINITY; self.num_vars()];
        let mut hi = vec![f64::INFINITY; self.num_vars()];
        for i in 0..n {
            lo[STATE * i + 1] = 0.1;
            hi[STATE * i + 1] = std::f64::consts::PI - 0.1;
            for k in 0..3 {
                lo[STATE * n + 3 * i + k] = self.problem.y_bounds[0][k] / self.yref;
                hi[STATE * n + 3 * i + k] = self.problem.y_bounds[1][k] / self.yref;
            }
        }
        lo[11 * n] = self.problem.final_time_bounds[0];
        hi[11 * n] = self.problem.final_time_bounds[1];
        (lo, hi)
    }

    fn objective(&self, z: &[f64]) -> Result<f64> {
        let dv = DecisionVector::unpack(z, self.problem.nodes, self.yref);
        Ok(0.5 * steering_cost(&dv, self.problem).powi(2))
    }

    fn constraints(&self, z: &[f64]) -> Result<Vec<f64>> {
        let dv = DecisionVector::unpack(z, self.problem.nodes, self.yref);
        let mut c = self.defects(&dv)?;
        c.extend(boundary_residuals(&dv, self.problem));
        if self.problem.realizability {
            c.extend(self.realizability(&dv));
        }
        Ok(c)
    }
}

pub fn collocation_defects(z: &DecisionVector, problem: &SteeringProblem) -> Result<Vec<f64>> {
    Transcription::new(problem)?.defects(z)
}

/// A posteriori error estimate: `∫ max_i |x̃'_i - f_i| dt` over the whole grid.
pub fn collocation_error(z: &DecisionVector, problem: &SteeringProblem) -> Result<f64> {
    Transcription::new(problem)?.residual_integral(z)
}

/// Integrates the dynamics from `x_1` under the piecewise-linear inertia schedule.
pub fn reintegrate(problem: &SteeringProblem, z: &DecisionVector) -> Result<TumbleState> {
    let tr = Transcription::new(problem)?;
    let times = z.node_times();
    let n = z.nodes();
    let cfg = IntegratorConfig::with_tolerance(1e-11, 1e-13);
    let sol = integrate(
        |t, x, d| {
            let j = (((t / z.final_time) * (n - 1) as f64) as usize).min(n - 2);
            let y = interpolate_output(&z.outputs[j], &z.outputs[j + 1], times[j], times[j + 1], t);
            d.copy_from_slice(&tr.dynamics(x, &y)?);
            Ok(())
        },
        &z.states[0].to_array(),
        (0.0, z.final_time),
        &cfg,
    )?;
    Ok(TumbleState::from_slice(sol.last()))
}

/// Initial-state residuals followed by the configured terminal conditions.
pub fn boundary_residuals(z: &DecisionVector, problem: &SteeringProblem) -> Vec<f64> {
    let first = z.states[0].to_array();
    let init = problem.initial.to_array();
    let last = z.states[z.nodes() - 1].to_array();
    first
        .iter()
        .zip(&init)
        .map(|(a, b)| a - b)
        .chain(problem.terminal.iter().map(|c| last[c.slot.index()] - c.value))
        .collect()
}

/// Bound slacks `y - min, max - y` for every node and slot; negative means violated.
pub fn inequality_bounds(z: &DecisionVector, problem: &SteeringProblem) -> Vec<f64> {
    let mut out = Vec::with_capacity(6 * z.nodes());
    for y in &z.outputs {
        for (k, v) in y.to_array().into_iter().enumerate() {
            out.push(v - problem.y_bounds[0][k]);
            out.push(problem.y_bounds[1][k] - v);
        }
    }
    out
}

/// Relative perpendicular-axis defect `(y2 - y1 - y3) / y2` per node.
pub fn realizability_residuals(z: &DecisionVector) -> Vec<f64> {
    z.outputs.iter().map(|y| y.planar_defect() / y.y2.abs().max(f64::MIN_POSITIVE)).collect()
}

pub fn steering_cost(z: &DecisionVector, problem: &SteeringProblem) -> f64 {
    let target = problem.target_heading;
    match problem.cost {
        CostMode::Terminal => (z.states[z.nodes() - 1].heading - target).abs(),
        CostMode::Trajectory => z
            .states
            .iter()
            .map(|s| (s.heading - target).powi(2))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Semi-axes whose inertia matches `y` in the chosen slot.
pub fn inertia_to_axes_with(y: &InertiaTriple, params: &RingParams, component: InertiaComponent) -> Result<AxisPair> {
    params.validate()?;
    let e = Ellipse::new(params.quad_points);
    let p = params.perimeter;
    let target = match component {
        InertiaComponent::First => y.y1,
        InertiaComponent::Third => y.y3,
    };
    let value = |b: f64| -> Result<(f64, f64)> {
        let a = e.solve_axis(p, b)?;
        let t = e.inertia(a, b, params.mass, params.inertia_labels);
        let v = match component {
            InertiaComponent::First => t.y1,
            InertiaComponent::Third => t.y3,
        };
        Ok((a, v - target))
    };
    let mut lo = 1e-3 * p;
    let mut hi = 0.25 * p * (1.0 - 1e-4);
    let (_, flo) = value(lo)?;
    let (_, fhi) = value(hi)?;
    if flo.signum() == fhi.signum() {
        return Err(Error::Unrealizable {
            target,
            residual: flo.abs().min(fhi.abs()),
        });
    }
    let rising = fhi > flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (_, f) = value(mid)?;
        if (f > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let b = 0.5 * (lo + hi);
    let (a, res) = value(b)?;
    if res.abs() > 1e-8 {
        return Err(Error::Unrealizable { target, residual: res.abs() });
    }
    Ok(AxisPair { a, b })
}

pub fn inertia_to_axes(y: &InertiaTriple, params: &RingParams) -> Result<AxisPair> {
    inertia_to_axes_with(y, params, InertiaComponent::Third)
}

/// Integrates the unshaped ring and samples it at the nodes.
pub fn initial_guess(problem: &SteeringProblem) -> Result<DecisionVector> {
    problem.validate()?;
    let n = problem.nodes;
    let tf = problem
        .initial_final_time
        .clamp(problem.final_time_bounds[0], problem.final_time_bounds[1]);
    let y = problem.circle_inertia();
    let model = problem.model();
    let r = problem.ring.mean_radius();
    let cfg = IntegratorConfig::with_tolerance(1e-10, 1e-12);
    let sol = integrate(
        |_, x, d| {
            let s = TumbleState::from_slice(x);
            d.copy_from_slice(&model.rhs(&s, &y, r)?.rates.to_array());
            Ok(())
        },
        &problem.initial.to_array(),
        (0.0, tf),
        &cfg,
    )?;
    let states = (0..n)
        .map(|i| {
            let t = tf * i as f64 / (n - 1) as f64;
            sol.state_at(t).map(|x| TumbleState::from_slice(&x))
        })
        .collect::<Option<Vec<_>>>()
        .ok_or(Error::Rhs {
            t: tf,
            message: "dense output missing".into(),
        })?;
    Ok(DecisionVector {
        states,
        outputs: vec![y; n],
        final_time: tf,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringSolution {
    pub decision: DecisionVector,
    pub report: SqpReport,
    pub cost: f64,
    pub max_defect: f64,
    pub collocation_error: f64,
}

impl SteeringSolution {
    pub fn converged(&self) -> bool {
        self.report.status == SqpStatus::Converged
    }
}

pub fn solve_steering(problem: &SteeringProblem, guess: &DecisionVector) -> Result<SteeringSolution> {
    problem.validate()?;
    if guess.nodes() != problem.nodes {
        return Err(Error::Config(format!(
            "guess has {} nodes, problem has {}",
            guess.nodes(),
            problem.nodes
        )));
    }
    let tr = Transcription::new(problem)?;
    let z0 = guess.pack(tr.yref);
    if z0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial guess"));
    }
    let res = sqp::solve(&tr, &z0, &problem.nlp)?;
    let decision = DecisionVector::unpack(&res.z, problem.nodes, tr.yref);
    let max_defect = tr.defects(&decision)?.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let collocation_error = tr.residual_integral(&decision)?;
    Ok(SteeringSolution {
        collocation_error,
        cost: steering_cost(&decision, problem),
        decision,
        report: res.report,
        max_defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub terminal_heading: f64,
    pub heading_error: f64,
    pub axes: Vec<AxisPair>,
    #[serde(skip)]
    pub run: Option<RunResult>,
}

/// Maps node inertias to axis commands and re-runs the full cascade.
pub fn verify_steering(problem: &SteeringProblem, z: &DecisionVector) -> Result<Verification> {
    let axes = z
        .outputs
        .iter()
        .map(|y| inertia_to_axes_with(y, &problem.ring, problem.match_component))
        .collect::<Result<Vec<_>>>()?;
    let cfg = ScenarioConfig {
        ring: problem.ring,
        initial: problem.initial,
        impulse: None,
        duration: z.final_time,
        integrator: IntegratorConfig::with_tolerance(1e-10, 1e-12),
        slope_model: problem.slope_model,
        equation_form: problem.equation_form,
        ..ScenarioConfig::default()
    };
    let program = AxisProgram::Samples {
        times: z.node_times(),
        semi_b: axes.iter().map(|a| a.b).collect(),
    };
    let run = simulate(&cfg, &program)?;
    let terminal_heading = run.trajectory.last_state().heading;
    Ok(Verification {
        terminal_heading,
        heading_error: terminal_heading - problem.target_heading,
        axes,
        run: Some(run),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn output_blend() {
        let a = InertiaTriple::new(1.0, 2.0, 3.0);
        let b = InertiaTriple::new(3.0, 2.0, 1.0);
        assert_eq!(interpolate_output(&a, &b, 0.0, 1.0, 0.0), a);
        let q = interpolate_output(&a, &b, 2.0, 6.0, 3.0);
        assert_eq!(q.to_array(), [1.5, 2.0, 2.5]);
        assert_eq!(interpolate_output(&a, &b, 0.0, 2.0, 1.0).to_array(), [2.0, 2.0, 2.0]);
    }

    #[test]
    fn hermite_endpoint_identities() {
        let xj = [0.3, -1.2];
        let xk = [0.9, 0.4];
        let fj = [2.0, -0.5];
        let fk = [-1.0, 0.7];
        let h = 0.37;
        assert_eq!(interpolate_state(&xj, &xk, &fj, &fk, h, 0.0), xj.to_vec());
        let end = interpolate_state(&xj, &xk, &fj, &fk, h, 1.0);
        let d0 = interpolate_state_rate(&xj, &xk, &fj, &fk, h, 0.0);
        let d1 = interpolate_state_rate(&xj, &xk, &fj, &fk, h, 1.0);
        for i in 0..2 {
            assert_relative_eq!(end[i], xk[i], epsilon = 1e-15);
            assert_relative_eq!(d0[i], fj[i], epsilon = 1e-14);
            assert_relative_eq!(d1[i], fk[i], epsilon = 1e-14);
        }
        let mid = interpolate_state(&xj, &xk, &fj, &fk, h, 0.5);
        for i in 0..2 {
            let want = 0.5 * (xj[i] + xk[i]) + h * (fj[i] - fk[i]) / 8.0;
            assert_relative_eq!(mid[i], want, epsilon = 1e-15);
        }
    }

    #[test]
    fn cost_modes() {
        let mut p = SteeringProblem { target_heading: 0.2, ..Default::default() };
        let s = |h: f64| TumbleState { heading: h, ..TumbleState::upright(1.0) };
        let y = p.circle_inertia();
        let z = DecisionVector { states: vec![s(0.1), s(0.2)], outputs: vec![y; 2], final_time: 1.0 };
        assert_eq!(steering_cost(&z, &p), 0.0);
        let z2 = DecisionVector { states: vec![s(0.1), s(0.3)], ..z.clone() };
        assert_relative_eq!(steering_cost(&z2, &p), 0.1, epsilon = 1e-15);
        p.cost = CostMode::Trajectory;
        let z3 = DecisionVector { states: vec![s(0.5), s(0.6)], ..z };
        assert_relative_eq!(steering_cost(&z3, &p), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn boundary_residual_is_linear() {
        let p = SteeringProblem {
            terminal: vec![TerminalCondition { slot: StateSlot::HeadingRate, value: 0.0 }],
            ..Default::default()
        };
        let y = p.circle_inertia();
        let mut z = DecisionVector { states: vec![p.initial; 3], outputs: vec![y; 3], final_time: 1.0 };
        let r = boundary_residuals(&z, &p);
        assert_eq!(r.len(), 9);
        assert!(r[..8].iter().all(|v| *v == 0.0));
        z.states[0].lean += 1e-3;
        assert_relative_eq!(boundary_residuals(&z, &p)[1], 1e-3, epsilon = 1e-15);
    }

    #[test]
    fn bound_slacks() {
        let p = SteeringProblem::default();
        let y = p.circle_inertia();
        let mut z = DecisionVector { states: vec![p.initial; 3], outputs: vec![y; 3], final_time: 1.0 };
        assert!(inequality_bounds(&z, &p).iter().all(|s| *s > 0.0));
        z.outputs[1].y1 = p.y_bounds[0][0];
        assert_eq!(inequality_bounds(&z, &p)[6], 0.0);
        z.outputs[2].y2 *= 1.1;
        let r = realizability_residuals(&z);
        assert!(r[0].abs() < 1e-14 && r[2].abs() > 0.05);
    }

    #[test]
    fn equilibrium_has_zero_defects() {
        let p = SteeringProblem {
            ring: RingParams { incline: 0.0, ..SteeringProblem::default().ring },
            initial: TumbleState { lean: std::f64::consts::FRAC_PI_2, ..Default::default() },
            ..Default::default()
        };
        let y = p.circle_inertia();
        let z = DecisionVector { states: vec![p.initial; 5], outputs: vec![y; 5], final_time: 1.0 };
        assert!(collocation_defects(&z, &p).unwrap().iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn problem_round_trips() {
        let p = SteeringProblem {
            terminal: vec![TerminalCondition { slot: StateSlot::LeanRate, value: 0.0 }],
            cost: CostMode::Trajectory,
            ..Default::default()
        };
        let text = p.to_toml_string().unwrap();
        assert_eq!(SteeringProblem::from_toml_str(&text).unwrap(), p);
    }

    #[test]
    fn circle_inertia_maps_to_circle() {
        let ring = RingParams::default();
        let r = ring.mean_radius();
        let ax = inertia_to_axes(&InertiaTriple::circle(1.0, r), &ring).unwrap();
        assert_relative_eq!(ax.a, r, epsilon = 1e-8);
        assert_relative_eq!(ax.b, r, epsilon = 1e-8);
    }

    #[test]
    fn unreachable_inertia_rejected() {
        let ring = RingParams::default();
        let y = InertiaTriple::new(0.0, 0.2, 0.2);
        assert!(matches!(inertia_to_axes(&y, &ring), Err(Error::Unrealizable { .. })));
    }
}
