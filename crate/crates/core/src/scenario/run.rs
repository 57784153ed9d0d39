use serde::{Deserialize, Serialize};

use crate::dynamics::{contact_radius, TumbleModel, TumbleState};
use crate::error::{Error, Result};
use crate::geometry::{AxisPair, AxisRates, Ellipse, ImpulseInput, InertiaTriple, PostureState, posture_rhs};
use crate::ode::{Integrator, IntegratorConfig, Solution, StepStats};

use super::config::ScenarioConfig;

/// Prescribed semi-axis `b(t)`; `a` follows from the fixed perimeter.
#[derive(Debug, Clone, PartialEq)]
pub enum AxisProgram {
    Constant { semi_b: f64 },
    Impulse(ImpulseInput),
    /// Piecewise-linear semi-axis through `(times[i], semi_b[i])`, held flat outside.
    Samples { times: Vec<f64>, semi_b: Vec<f64> },
}

impl AxisProgram {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        match cfg.impulse {
            Some(imp) => Self::Impulse(imp),
            None => Self::Constant {
                semi_b: cfg.ring.mean_radius(),
            },
        }
    }

    /// `(b, db/dt)` for the semi-axis.
    pub fn semi_b(&self, t: f64) -> (f64, f64) {
        match self {
            Self::Constant { semi_b } => (*semi_b, 0.0),
            Self::Impulse(imp) => (0.5 * imp.axis_length(t), 0.5 * imp.axis_rate(t)),
            Self::Samples { times, semi_b } => {
                let n = times.len();
                if t <= times[0] {
                    return (semi_b[0], 0.0);
                }
                if t >= times[n - 1] {
                    return (semi_b[n - 1], 0.0);
                }
                let i = times.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
                let h = times[i + 1] - times[i];
                let slope = (semi_b[i + 1] - semi_b[i]) / h;
                (semi_b[i] + slope * (t - times[i]), slope)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TumbleState>,
    pub postures: Vec<PostureState>,
    pub inertias: Vec<InertiaTriple>,
    pub axes: Vec<AxisPair>,
    pub energy: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &TumbleState {
        self.states.last().expect("trajectory is nonempty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_time: f64,
    pub terminal_heading: f64,
    pub heading_change: f64,
    /// `pc_y(t_f) - pc_y(0)`.
    pub lateral_deviation: f64,
    pub downslope_distance: f64,
    pub max_energy_drift: f64,
    /// Relative perimeter error of the integrated posture semi-axes.
    pub max_perimeter_error: f64,
    pub max_ellipse_residual: f64,
    pub max_solve_residual: f64,
    pub steps: StepStats,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub trajectory: Trajectory,
    pub summary: RunSummary,
}

/// Evaluates the coupled posture and tumbling system.
struct Cascade<'a> {
    model: TumbleModel,
    program: &'a AxisProgram,
    ellipse: &'a Ellipse,
    last_a: f64,
    cached: Option<(f64, f64, InertiaTriple)>,
    max_residual: f64,
}

struct Coupling {
    axes: AxisPair,
    rates: AxisRates,
    inertia: InertiaTriple,
}

impl<'a> Cascade<'a> {
    fn new(model: TumbleModel, program: &'a AxisProgram, ellipse: &'a Ellipse) -> Self {
        Self {
            model,
            program,
            ellipse,
            last_a: f64::NAN,
            cached: None,
            max_residual: 0.0,
        }
    }

    fn coupling(&mut self, t: f64) -> Result<Coupling> {
        let p = self.model.params.perimeter;
        let (b, b_rate) = self.program.semi_b(t);
        let a = self.ellipse.solve_axis_near(p, b, self.last_a)?;
        self.last_a = a;
        let a_rate = self.ellipse.slaved_axis_rate(a, b, b_rate);
        let inertia = match self.cached {
            Some((ca, cb, y)) if (ca - a).abs() <= 1e-12 && (cb - b).abs() <= 1e-12 => y,
            _ => {
                let y = self
                    .ellipse
                    .inertia(a, b, self.model.params.mass, self.model.params.inertia_labels);
                self.cached = Some((a, b, y));
                y
            }
        };
        Ok(Coupling {
            axes: AxisPair { a, b },
            rates: AxisRates { a: a_rate, b: b_rate },
            inertia,
        })
    }

    fn radius(&self, axes: AxisPair, spin: f64) -> f64 {
        let p = &self.model.params;
        contact_radius(axes.a, axes.b, spin, p.radius_policy, p.perimeter)
    }

    fn eval(&mut self, t: f64, x: &[f64], d: &mut [f64]) -> Result<()> {
        let wrap = |e: Error| Error::Rhs {
            t,
            message: format!("{e}; state {:?}", &x[..8]),
        };
        let c = self.coupling(t).map_err(wrap)?;
        let s = TumbleState::from_slice(&x[..8]);
        let r = self.radius(c.axes, s.spin);
        let rates = self.model.rhs(&s, &c.inertia, r).map_err(wrap)?;
        self.max_residual = self.max_residual.max(rates.residual);
        d[..8].copy_from_slice(&rates.rates.to_array());
        let xi = PostureState::from_slice(&x[8..14]);
        let dxi = posture_rhs(&xi, c.rates).map_err(wrap)?;
        d[8..14].copy_from_slice(&dxi.to_array());
        Ok(())
    }
}

/// Runs one cascade simulation with the axis schedule taken from the config.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunResult> {
    cfg.validate()?;
    simulate(cfg, &AxisProgram::from_config(cfg))
}

/// Runs the cascade under an explicit axis schedule.
pub fn simulate(cfg: &ScenarioConfig, program: &AxisProgram) -> Result<RunResult> {
    let model = cfg.model();
    let ellipse = Ellipse::new(cfg.ring.quad_points);
    let p = cfg.ring.perimeter;
    let (b0, _) = program.semi_b(0.0);
    let a0 = ellipse.solve_axis(p, b0)?;
    let xi0 = PostureState::on_ellipse(a0, b0, cfg.tracked_angle);

    let mut x0 = cfg.initial.to_array().to_vec();
    x0.extend_from_slice(&xi0.to_array());

    let icfg = IntegratorConfig {
        dense_output: true,
        ..cfg.integrator
    };
    let mut cascade = Cascade::new(model, program, &ellipse);
    let sol = Integrator::new(icfg).run(|t, x, d| cascade.eval(t, x, d), (0.0, cfg.duration), &x0)?;
    let solve_residual = cascade.max_residual;
    sample(cfg, program, &ellipse, &sol, solve_residual)
}

fn sample_times(duration: f64, rate: f64) -> Vec<f64> {
    let n = (duration * rate).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 / rate).collect();
    if duration - times[n] > 1e-9 / rate {
        times.push(duration);
    } else {
        times[n] = duration;
    }
    times
}

fn sample(
    cfg: &ScenarioConfig,
    program: &AxisProgram,
    ellipse: &Ellipse,
    sol: &Solution,
    solve_residual: f64,
) -> Result<RunResult> {
    let model = cfg.model();
    let p = cfg.ring.perimeter;
    let mut cascade = Cascade::new(model, program, ellipse);
    let mut traj = Trajectory::default();
    let mut max_perimeter_error: f64 = 0.0;
    let mut max_ellipse_residual: f64 = 0.0;
    for t in sample_times(cfg.duration, cfg.sample_rate) {
        let x = sol.state_at(t).ok_or(Error::Rhs {
            t,
            message: "sample outside the integrated interval".into(),
        })?;
        let s = TumbleState::from_slice(&x[..8]);
        let xi = PostureState::from_slice(&x[8..14]);
        let c = cascade.coupling(t)?;
        let r = cascade.radius(c.axes, s.spin);
        let energy = model.energy(&s, &c.inertia, r);
        let pe = (ellipse.perimeter(xi.semi_a, xi.semi_b) - p).abs() / p;
        max_perimeter_error = max_perimeter_error.max(pe);
        max_ellipse_residual = max_ellipse_residual.max(xi.ellipse_residual().abs());
        traj.times.push(t);
        traj.states.push(s);
        traj.postures.push(xi);
        traj.inertias.push(c.inertia);
        traj.axes.push(c.axes);
        traj.energy.push(energy);
    }
    let first = traj.states[0];
    let last = *traj.last_state();
    let e0 = traj.energy[0];
    let scale = if e0.abs() > 0.0 { e0.abs() } else { 1.0 };
    let max_energy_drift = traj
        .energy
        .iter()
        .map(|e| (e - e0).abs() / scale)
        .fold(0.0, f64::max);
    let summary = RunSummary {
        final_time: cfg.duration,
        terminal_heading: last.heading,
        heading_change: last.heading - first.heading,
        lateral_deviation: last.contact_y - first.contact_y,
        downslope_distance: first.contact_x - last.contact_x,
        max_energy_drift,
        max_perimeter_error,
        max_ellipse_residual,
        max_solve_residual: solve_residual,
        steps: sol.stats,
        samples: traj.len(),
    };
    Ok(RunResult {
        trajectory: traj,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RingParams;

    #[test]
    fn sample_grid_hits_end() {
        let t = sample_times(1.0, 200.0);
        assert_eq!(t.len(), 201);
        assert_eq!(*t.last().unwrap(), 1.0);
        let t = sample_times(1.0025, 200.0);
        assert_eq!(*t.last().unwrap(), 1.0025);
    }

    #[test]
    fn piecewise_program_interpolates() {
        let prog = AxisProgram::Samples { times: vec![0.0, 1.0, 2.0], semi_b: vec![0.3, 0.4, 0.2] };
        let (b, rate) = prog.semi_b(0.5);
        assert!((b - 0.35).abs() < 1e-15 && (rate - 0.1).abs() < 1e-15);
        assert_eq!(prog.semi_b(3.0), (0.2, 0.0));
        assert_eq!(prog.semi_b(-1.0), (0.3, 0.0));
    }

    #[test]
    fn flat_straight_roll_keeps_heading() {
        let cfg = ScenarioConfig {
            ring: RingParams::flat(),
            initial: TumbleState::upright(std::f64::consts::TAU),
            duration: 1.0,
            ..ScenarioConfig::default()
        };
        let out = run_scenario(&cfg).unwrap();
        assert!(out.summary.heading_change.abs() < 1e-9);
        assert!(out.summary.lateral_deviation.abs() < 1e-9);
        assert_eq!(out.trajectory.len(), 201);
    }
}
