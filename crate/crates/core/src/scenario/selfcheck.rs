//! Invariant suite run by `--seed-check`.

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::run::{run_scenario, simulate, AxisProgram};
use crate::collocation::{interpolate_state, interpolate_state_rate};
use crate::dynamics::TumbleState;
use crate::error::Result;
use crate::geometry::{inertia_triple, InertiaTriple, RingParams};
use crate::ode::IntegratorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value.is_finite() && value < tolerance,
        }
    }
}

fn circle_inertia() -> Result<CheckOutcome> {
    let params = RingParams::default();
    let r = params.mean_radius();
    let got = inertia_triple(r, r, &params)?;
    let want = InertiaTriple::circle(params.mass, r);
    let err = got
        .to_array()
        .iter()
        .zip(want.to_array())
        .map(|(g, w)| ((g - w) / w).abs())
        .fold(0.0, f64::max);
    Ok(CheckOutcome::new("circle_inertia", err, 1e-8))
}

fn perimeter_conservation() -> Result<CheckOutcome> {
    let cfg = ScenarioConfig::with_impulse(0.35, 10.0);
    let run = run_scenario(&cfg)?;
    Ok(CheckOutcome::new(
        "perimeter_conservation",
        run.summary.max_perimeter_error,
        1e-6,
    ))
}

fn flat_roll(duration: f64) -> ScenarioConfig {
    let ring = RingParams::flat();
    ScenarioConfig {
        ring,
        initial: TumbleState::upright(std::f64::consts::TAU),
        duration,
        integrator: IntegratorConfig::with_tolerance(1e-10, 1e-12),
        ..ScenarioConfig::default()
    }
}

fn straight_rolling_and_energy() -> Result<[CheckOutcome; 2]> {
    let cfg = flat_roll(2.0);
    let run = simulate(&cfg, &AxisProgram::Constant { semi_b: cfg.ring.mean_radius() })?;
    let drift = run
        .trajectory
        .states
        .iter()
        .map(|s| s.heading.abs().max(s.contact_y.abs()))
        .fold(0.0, f64::max);
    Ok([
        CheckOutcome::new("straight_rolling", drift, 1e-9),
        CheckOutcome::new("energy_drift", run.summary.max_energy_drift, 1e-6),
    ])
}

fn hermite_identities() -> CheckOutcome {
    let xj = [0.4, -1.0, 2.5];
    let xk = [1.1, 0.3, -0.7];
    let fj = [0.9, 2.0, -1.5];
    let fk = [-0.2, 0.6, 3.0];
    let h = 0.125;
    let mut err = 0.0_f64;
    let pairs = [
        (interpolate_state(&xj, &xk, &fj, &fk, h, 0.0), xj),
        (interpolate_state(&xj, &xk, &fj, &fk, h, 1.0), xk),
        (interpolate_state_rate(&xj, &xk, &fj, &fk, h, 0.0), fj),
        (interpolate_state_rate(&xj, &xk, &fj, &fk, h, 1.0), fk),
    ];
    for (got, want) in &pairs {
        for (g, w) in got.iter().zip(want) {
            err = err.max((g - w).abs() / w.abs().max(1.0));
        }
    }
    CheckOutcome::new("hermite_identities", err, 1e-12)
}

/// Runs every invariant; errors from a check propagate.
pub fn seed_check() -> Result<Vec<CheckOutcome>> {
    let [roll, energy] = straight_rolling_and_energy()?;
    Ok(vec![
        circle_inertia()?,
        perimeter_conservation()?,
        roll,
        energy,
        hermite_identities(),
    ])
}
