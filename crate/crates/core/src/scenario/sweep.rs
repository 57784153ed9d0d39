use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::ImpulseInput;
use crate::parallel::Execution;

use super::config::SweepSpec;
use super::run::{run_scenario, RunResult, RunSummary};

const PATH_STRIDE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub sharpness: f64,
    /// `pc_y(t_f)` minus the nominal run's `pc_y(t_f)`.
    pub lateral_deviation: Option<f64>,
    /// Terminal heading minus the nominal terminal heading.
    pub heading_change: Option<f64>,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
    /// Decimated centre-of-mass path `(x, y)`.
    pub path: Vec<(f64, f64)>,
    /// Lateral offset from the nominal path at the decimated samples.
    pub deflection: Vec<f64>,
    #[serde(skip)]
    pub run: Option<RunResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub nominal: RunSummary,
    pub nominal_path: Vec<(f64, f64)>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

fn decimate(run: &RunResult) -> Vec<(f64, f64)> {
    run.trajectory
        .states
        .iter()
        .step_by(PATH_STRIDE)
        .map(|s| (s.contact_x, s.contact_y))
        .collect()
}

/// Runs the nominal scenario and every grid point; rows are sorted by
/// `(amplitude, sharpness)` whatever the execution order.
pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<SweepReport> {
    spec.validate()?;
    let mut nominal_cfg = spec.base.clone();
    nominal_cfg.impulse = None;
    let baseline = spec
        .base
        .impulse
        .map(|i| i.baseline)
        .unwrap_or(spec.base.ring.perimeter / std::f64::consts::PI);
    let center_time = spec.base.impulse.map(|i| i.center_time).unwrap_or(2.0);

    let mut grid: Vec<(f64, f64)> = spec
        .amplitudes
        .iter()
        .flat_map(|&a| spec.sharpness.iter().map(move |&g| (a, g)))
        .collect();
    grid.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));

    let mut jobs: Vec<Option<(f64, f64)>> = vec![None];
    jobs.extend(grid.iter().copied().map(Some));
    let mut results = exec.map(&jobs, |job| match job {
        None => run_scenario(&nominal_cfg),
        Some((amplitude, sharpness)) => {
            let mut cfg = spec.base.clone();
            cfg.impulse = Some(ImpulseInput {
                amplitude: *amplitude,
                sharpness: *sharpness,
                baseline,
                center_time,
            });
            run_scenario(&cfg)
        }
    });
    let nominal = results.remove(0)?;
    let nominal_last = *nominal.trajectory.last_state();
    let nominal_path = decimate(&nominal);

    let rows = grid
        .iter()
        .zip(results)
        .map(|(&(amplitude, sharpness), res)| match res {
            Ok(run) => {
                let last = run.trajectory.last_state();
                let path = decimate(&run);
                let deflection = path
                    .iter()
                    .zip(&nominal_path)
                    .map(|(p, q)| p.1 - q.1)
                    .collect();
                SweepRow {
                    amplitude,
                    sharpness,
                    lateral_deviation: Some(last.contact_y - nominal_last.contact_y),
                    heading_change: Some(last.heading - nominal_last.heading),
                    summary: Some(run.summary.clone()),
                    error: None,
                    path,
                    deflection,
                    run: Some(run),
                }
            }
            Err(e) => {
                log::warn!("sweep point b'={amplitude}, gamma={sharpness} failed: {e}");
                SweepRow {
                    amplitude,
                    sharpness,
                    lateral_deviation: None,
                    heading_change: None,
                    summary: None,
                    error: Some(e.to_string()),
                    path: Vec::new(),
                    deflection: Vec::new(),
                    run: None,
                }
            }
        })
        .collect();
    Ok(SweepReport {
        nominal: nominal.summary,
        nominal_path,
        rows,
    })
}
