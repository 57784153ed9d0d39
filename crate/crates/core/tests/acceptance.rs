mod common;

use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringtumble_core::collocation::*;
use ringtumble_core::dynamics::*;
use ringtumble_core::geometry::*;
use ringtumble_core::ode::IntegratorConfig;
use ringtumble_core::scenario::*;
use ringtumble_core::Execution;

type Outcome = (bool, String);

fn frozen_circle_roll(duration: f64) -> RunResult {
    let cfg = ScenarioConfig {
        ring: RingParams::flat(),
        initial: TumbleState::upright(std::f64::consts::TAU),
        duration,
        integrator: IntegratorConfig::with_tolerance(1e-10, 1e-12),
        ..ScenarioConfig::default()
    };
    let r = cfg.ring.mean_radius();
    simulate(&cfg, &AxisProgram::Constant { semi_b: r }).unwrap()
}

fn criterion_01_circle_inertia() -> Outcome {
    let mut worst = 0.0_f64;
    let mut slowest = Duration::ZERO;
    for (m, r) in [(1.0, 1.0 / std::f64::consts::PI), (0.3, 0.5), (7.5, 2.0)] {
        let params = RingParams {
            mass: m,
            perimeter: std::f64::consts::TAU * r,
            ..RingParams::default()
        };
        let start = Instant::now();
        let y = inertia_triple(r, r, &params).unwrap();
        slowest = slowest.max(start.elapsed());
        let want = [0.5 * m * r * r, m * r * r, 0.5 * m * r * r];
        for (g, w) in y.to_array().iter().zip(want) {
            worst = worst.max(((g - w) / w).abs());
        }
    }
    (
        worst < 1e-8 && slowest < Duration::from_millis(1),
        format!("max relative error {worst:.2e}, slowest evaluation {slowest:?}"),
    )
}

fn criterion_02_perimeter_conservation() -> Outcome {
    let run = run_scenario(&ScenarioConfig::with_impulse(0.35, 10.0)).unwrap();
    let err = run.summary.max_perimeter_error;
    (err < 1e-6, format!("max |P(t) - 2| / 2 = {err:.2e}"))
}

fn criterion_03_energy_conservation() -> Outcome {
    let start = Instant::now();
    let run = frozen_circle_roll(10.0);
    let elapsed = start.elapsed();
    let drift = run.summary.max_energy_drift;
    (
        drift < 1e-6 && elapsed < Duration::from_secs(10),
        format!("relative drift {drift:.2e} in {elapsed:?}"),
    )
}

fn criterion_04_straight_rolling() -> Outcome {
    let run = frozen_circle_roll(5.0);
    let h0 = run.trajectory.states[0].heading;
    let dh = run
        .trajectory
        .states
        .iter()
        .map(|s| (s.heading - h0).abs())
        .fold(0.0, f64::max);
    let dy = run
        .trajectory
        .states
        .iter()
        .map(|s| s.contact_y.abs())
        .fold(0.0, f64::max);
    (
        dh < 1e-9 && dy < 1e-9,
        format!("max |dheading| {dh:.2e}, max |pc_y| {dy:.2e}"),
    )
}

fn criterion_05_rolling_oracle() -> Outcome {
    let params = RingParams {
        radius_policy: RadiusPolicy::MeanRadius,
        ..RingParams::flat()
    };
    let model = TumbleModel {
        params,
        slope_model: SlopeModel::Verbatim,
        ..TumbleModel::default()
    };
    let r = params.mean_radius();
    let y = InertiaTriple::circle(params.mass, r);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let s = TumbleState {
            heading: rng.random_range(-3.0..3.0),
            lean: rng.random_range(0.3..2.84),
            spin: rng.random_range(-3.0..3.0),
            heading_rate: rng.random_range(-3.0..3.0),
            lean_rate: rng.random_range(-3.0..3.0),
            spin_rate: rng.random_range(-8.0..8.0),
            contact_x: rng.random_range(-2.0..2.0),
            contact_y: rng.random_range(-2.0..2.0),
        };
        let got = model.rhs(&s, &y, r).unwrap().rates.to_array();
        let want = common::newton_euler_rates(
            s.to_array(),
            y.y1,
            y.y2,
            params.mass,
            r,
            Vector3::new(0.0, 0.0, -params.gravity),
        );
        let scale = want.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs() / scale);
        }
    }
    (
        worst < 1e-8,
        format!("max relative mismatch {worst:.2e} over 1000 states"),
    )
}

fn criterion_06_sweep_trend() -> Outcome {
    let spec = SweepSpec::default();
    let start = Instant::now();
    let report = run_sweep(&spec, Execution::default()).unwrap();
    let elapsed = start.elapsed();
    let value = |b: f64, g: f64| {
        report
            .rows
            .iter()
            .find(|r| r.amplitude == b && r.sharpness == g)
            .and_then(|r| r.lateral_deviation)
            .map(f64::abs)
    };
    let mut broken = Vec::new();
    for &g in &spec.sharpness {
        for w in spec.amplitudes.windows(2) {
            match (value(w[0], g), value(w[1], g)) {
                (Some(lo), Some(hi)) if hi > lo => {}
                (lo, hi) => broken.push(format!(
                    "b' {}->{} at gamma {g}: {lo:?} -> {hi:?}",
                    w[0], w[1]
                )),
            }
        }
    }
    for &b in &spec.amplitudes {
        for w in spec.sharpness.windows(2) {
            match (value(b, w[0]), value(b, w[1])) {
                (Some(lo), Some(hi)) if hi > lo => {}
                (lo, hi) => broken.push(format!(
                    "gamma {}->{} at b' {b}: {lo:?} -> {hi:?}",
                    w[0], w[1]
                )),
            }
        }
    }
    for r in &report.rows {
        println!(
            "  b' {} gamma {}: lateral deviation {:?} {}",
            r.amplitude,
            r.sharpness,
            r.lateral_deviation,
            r.error.as_deref().unwrap_or("")
        );
    }
    (
        broken.is_empty() && elapsed < Duration::from_secs(120),
        format!(
            "{} monotonicity violations in {elapsed:?}; first: {:?}",
            broken.len(),
            broken.first()
        ),
    )
}

fn criterion_07_heading_response() -> Outcome {
    let cfg = ScenarioConfig::with_impulse(0.4, 10.0);
    let nominal = {
        let mut c = cfg.clone();
        c.impulse = None;
        run_scenario(&c).unwrap()
    };
    let run = match run_scenario(&cfg) {
        Ok(r) => r,
        Err(e) => return (false, format!("run rejected: {e}")),
    };
    let delta: Vec<f64> = run
        .trajectory
        .states
        .iter()
        .zip(&nominal.trajectory.states)
        .map(|(a, b)| a.heading - b.heading)
        .collect();
    let at = |t: f64| (t * cfg.sample_rate).round() as usize;
    let before = delta[at(1.9)].abs();
    let t0 = cfg.impulse.unwrap().center_time;
    let settle = (at(t0 + 1.0)..delta.len() - 1)
        .map(|i| ((delta[i + 1] - delta[i]) * cfg.sample_rate).abs())
        .fold(0.0, f64::max);
    (
        before < 1e-6 && settle < 1e-3,
        format!("|dheading(1.9)| {before:.2e}, max rate after t0 + 1 {settle:.2e}"),
    )
}

fn criterion_08_defect_order() -> Outcome {
    let defect = |n: usize| {
        let p = SteeringProblem {
            nodes: n,
            ..Default::default()
        };
        let z = initial_guess(&p).unwrap();
        collocation_defects(&z, &p)
            .unwrap()
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    };
    let d = [defect(10), defect(20), defect(40)];
    let ratios = [d[0] / d[1], d[1] / d[2]];
    (
        ratios.iter().all(|r| (12.0..=20.0).contains(r)),
        format!(
            "defects {:.2e} {:.2e} {:.2e}, ratios {ratios:.2?}",
            d[0], d[1], d[2]
        ),
    )
}

fn criterion_09_steering() -> Outcome {
    let problem = SteeringProblem::default();
    let start = Instant::now();
    let guess = initial_guess(&problem).unwrap();
    let sol = solve_steering(&problem, &guess).unwrap();
    let check = verify_steering(&problem, &sol.decision);
    let elapsed = start.elapsed();
    let violation = sol.report.max_violation;
    let (err, detail) = match &check {
        Ok(v) => (
            v.heading_error.abs(),
            format!("re-simulated heading {:.4}", v.terminal_heading),
        ),
        Err(e) => (f64::INFINITY, format!("re-simulation failed: {e}")),
    };
    (
        violation < 1e-6 && err < 0.05 && elapsed < Duration::from_secs(300),
        format!(
            "{:?}, violation {violation:.2e}, {detail}, error {err:.2e}, {elapsed:?}",
            sol.report.status
        ),
    )
}

fn criterion_10_impulse_law() -> Outcome {
    let imp = ImpulseInput {
        amplitude: 0.35,
        sharpness: 10.0,
        ..ImpulseInput::default()
    };
    let b0 = imp.baseline;
    let t0 = imp.center_time;
    let grid_peak = (0..=40_000)
        .map(|i| i as f64 * 1e-4)
        .map(|t| (impulse_b(t, &imp), t))
        .fold((f64::MIN, 0.0), |m, v| if v.0 > m.0 { v } else { m });
    let peak_err = (impulse_b(t0, &imp) - (b0 + imp.amplitude)).abs();
    let tails =
        [t0 - 5.0 / imp.sharpness, t0 + 5.0 / imp.sharpness].map(|t| impulse_b(t, &imp) - b0);
    let pass = peak_err < 1e-9
        && (grid_peak.1 - t0).abs() < 1e-9
        && tails.iter().all(|d| *d < 0.027 * imp.amplitude);
    (
        pass,
        format!(
            "peak error {peak_err:.2e} at t {:.4}, tail excess {:.4} b'",
            grid_peak.1,
            tails[0] / imp.amplitude
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [fn() -> Outcome; 10] = [
        criterion_01_circle_inertia,
        criterion_02_perimeter_conservation,
        criterion_03_energy_conservation,
        criterion_04_straight_rolling,
        criterion_05_rolling_oracle,
        criterion_06_sweep_trend,
        criterion_07_heading_response,
        criterion_08_defect_order,
        criterion_09_steering,
        criterion_10_impulse_law,
    ];
    let mut failed = Vec::new();
    for (i, check) in criteria.iter().enumerate() {
        let (pass, detail) =
            std::panic::catch_unwind(check).unwrap_or_else(|_| (false, "panicked".to_string()));
        println!(
            "criterion {}: {} ({detail})",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
