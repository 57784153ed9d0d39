use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::Serialize;

use crate::collocation::{SteeringProblem, SteeringSolution, Verification};
use crate::error::{Error, Result};
use crate::geometry::{Ellipse, RingParams};

use super::config::ScenarioConfig;
use super::run::{RunResult, RunSummary, Trajectory};
use super::sweep::SweepReport;

pub const CSV_HEADER: [&str; 15] = [
    "t", "heading", "lean", "spin", "heading_rate", "lean_rate", "spin_rate", "pc_x", "pc_y", "a",
    "b", "y1", "y2", "y3", "energy",
];

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn write_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| io_err(path, e))?;
    for i in 0..traj.len() {
        let s = &traj.states[i];
        let ax = &traj.axes[i];
        let y = &traj.inertias[i];
        let row = [
            traj.times[i],
            s.heading,
            s.lean,
            s.spin,
            s.heading_rate,
            s.lean_rate,
            s.spin_rate,
            s.contact_x,
            s.contact_y,
            ax.a,
            ax.b,
            y.y1,
            y.y2,
            y.y3,
            traj.energy[i],
        ];
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    toolkit: &'static str,
    version: &'static str,
    orientation_note: &'static str,
    config: &'a T,
    config_toml: String,
    summary: &'a RunSummary,
    files: Vec<String>,
}

const ORIENTATION_NOTE: &str = "initial heading 0 with lean pi/2 (upright ring); orientation Rz(heading) Rx(lean) Rz(spin)";

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

type Series<'a> = (&'a str, Vec<(f64, f64)>);

fn bounds(series: &[Series<'_>]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in series {
        for &(x, y) in pts {
            b.0 = b.0.min(x);
            b.1 = b.1.max(x);
            b.2 = b.2.min(y);
            b.3 = b.3.max(y);
        }
    }
    let pad = |lo: f64, hi: f64| {
        let span = (hi - lo).abs().max(1e-9);
        (lo - 0.05 * span, hi + 0.05 * span)
    };
    let (x0, x1) = pad(b.0, b.1);
    let (y0, y1) = pad(b.2, b.3);
    (x0, x1, y0, y1)
}

fn line_plot(path: &Path, title: &str, xlabel: &str, ylabel: &str, series: &[Series<'_>]) -> Result<()> {
    let (x0, x1, y0, y1) = bounds(series);
    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    let draw = |root: &DrawingArea<SVGBackend, plotters::coord::Shift>| -> std::result::Result<(), Box<dyn std::error::Error>> {
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(root)
            .caption(title, ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(64)
            .build_cartesian_2d(x0..x1, y0..y1)?;
        chart.configure_mesh().x_desc(xlabel).y_desc(ylabel).draw()?;
        for (i, (name, pts)) in series.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            chart
                .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))?
                .label(*name)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
        }
        if series.len() > 1 {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()?;
        }
        root.present()?;
        Ok(())
    };
    draw(&root).map_err(|e| io_err(path, e))
}

fn path_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.states.iter().map(|s| (s.contact_x, s.contact_y)).collect()
}

/// Inertia slots against the semi-axis `b` at fixed perimeter.
pub fn inertia_table(ring: &RingParams, rows: usize) -> Result<Vec<(f64, f64, [f64; 3])>> {
    ring.validate()?;
    let e = Ellipse::new(ring.quad_points);
    let p = ring.perimeter;
    let lo = 0.05 * p / 4.0;
    let hi = 0.95 * p / 4.0;
    let n = rows.max(2);
    (0..n)
        .map(|k| {
            let b = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let a = e.solve_axis(p, b)?;
            Ok((b, a, e.inertia(a, b, ring.mass, ring.inertia_labels).to_array()))
        })
        .collect()
}

fn inertia_plot(path: &Path, ring: &RingParams) -> Result<()> {
    let table = inertia_table(ring, 81)?;
    let pick = |k: usize| table.iter().map(|(b, _, y)| (*b, y[k])).collect::<Vec<_>>();
    line_plot(
        path,
        "inertia against b",
        "semi-axis b (m)",
        "inertia (kg m^2)",
        &[("y1", pick(0)), ("y2", pick(1)), ("y3", pick(2))],
    )
}

/// Writes the CSV, plots and manifest enabled in `cfg.outputs`; returns the paths.
pub fn emit_outputs(run: &RunResult, cfg: &ScenarioConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let stem = &cfg.outputs.stem;
    let mut files = Vec::new();
    if cfg.outputs.csv {
        let p = dir.join(format!("{stem}.csv"));
        write_csv(&p, &run.trajectory)?;
        files.push(p);
    }
    if cfg.outputs.plots {
        let traj = &run.trajectory;
        let p = dir.join(format!("{stem}_path.svg"));
        line_plot(&p, "centre of mass path", "x (m)", "y (m)", &[("path", path_series(traj))])?;
        files.push(p);
        let p = dir.join(format!("{stem}_heading.svg"));
        let h0 = traj.states[0].heading;
        let heading = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(t, s)| (*t, s.heading - h0))
            .collect();
        line_plot(&p, "heading change", "t (s)", "heading change (rad)", &[("heading", heading)])?;
        files.push(p);
        let p = dir.join(format!("{stem}_inertia.svg"));
        inertia_plot(&p, &cfg.ring)?;
        files.push(p);
    }
    if cfg.outputs.manifest {
        let p = dir.join(format!("{stem}_manifest.json"));
        let names = files
            .iter()
            .map(|f| f.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect();
        let manifest = Manifest {
            toolkit: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            orientation_note: ORIENTATION_NOTE,
            config: cfg,
            config_toml: cfg.to_toml_string()?,
            summary: &run.summary,
            files: names,
        };
        write_json(&p, &manifest)?;
        files.push(p);
    }
    Ok(files)
}

#[derive(Serialize)]
struct SweepManifest<'a> {
    toolkit: &'static str,
    version: &'static str,
    orientation_note: &'static str,
    spec_toml: String,
    report: &'a SweepReport,
}

/// Sweep summary CSV, overlay path plot, manifest and one artifact set per run.
pub fn emit_sweep(
    report: &SweepReport,
    spec: &super::config::SweepSpec,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut files = Vec::new();
    let p = dir.join("sweep_summary.csv");
    {
        let mut w = csv::Writer::from_path(&p).map_err(|e| io_err(&p, e))?;
        w.write_record([
            "amplitude",
            "sharpness",
            "lateral_deviation",
            "heading_change",
            "terminal_heading",
            "status",
        ])
        .map_err(|e| io_err(&p, e))?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &report.rows {
            w.write_record([
                r.amplitude.to_string(),
                r.sharpness.to_string(),
                opt(r.lateral_deviation),
                opt(r.heading_change),
                opt(r.summary.as_ref().map(|s| s.terminal_heading)),
                r.error.clone().unwrap_or_else(|| "ok".into()),
            ])
            .map_err(|e| io_err(&p, e))?;
        }
        w.flush().map_err(|e| io_err(&p, e))?;
    }
    files.push(p);

    for r in &report.rows {
        if let Some(run) = &r.run {
            let mut cfg = spec.base.clone();
            cfg.impulse = cfg.impulse.map(|mut i| {
                i.amplitude = r.amplitude;
                i.sharpness = r.sharpness;
                i
            });
            cfg.outputs.plots = false;
            cfg.outputs.stem = format!("run_b{}_g{}", r.amplitude, r.sharpness);
            files.extend(emit_outputs(run, &cfg, dir)?);
        }
    }

    if spec.base.outputs.plots {
        let p = dir.join("sweep_paths.svg");
        let labels: Vec<String> = report
            .rows
            .iter()
            .map(|r| format!("b'={} g={}", r.amplitude, r.sharpness))
            .collect();
        let mut series: Vec<Series<'_>> = vec![("nominal", report.nominal_path.clone())];
        for (r, l) in report.rows.iter().zip(&labels) {
            if !r.path.is_empty() {
                series.push((l.as_str(), r.path.clone()));
            }
        }
        line_plot(&p, "centre of mass paths", "x (m)", "y (m)", &series)?;
        files.push(p);
    }

    let p = dir.join("sweep_manifest.json");
    write_json(
        &p,
        &SweepManifest {
            toolkit: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            orientation_note: ORIENTATION_NOTE,
            spec_toml: spec.to_toml_string()?,
            report,
        },
    )?;
    files.push(p);
    Ok(files)
}


/// Writes `inertia_table.csv` with columns `b,a,y1,y2,y3`.
pub fn emit_inertia_table(ring: &RingParams, rows: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let p = dir.join("inertia_table.csv");
    let mut w = csv::Writer::from_path(&p).map_err(|e| io_err(&p, e))?;
    w.write_record(["b", "a", "y1", "y2", "y3"]).map_err(|e| io_err(&p, e))?;
    for (b, a, y) in inertia_table(ring, rows)? {
        w.write_record([b, a, y[0], y[1], y[2]].iter().map(|v| v.to_string()))
            .map_err(|e| io_err(&p, e))?;
    }
    w.flush().map_err(|e| io_err(&p, e))?;
    let svg = dir.join("inertia_table.svg");
    inertia_plot(&svg, ring)?;
    Ok(vec![p, svg])
}

#[derive(Serialize)]
struct SteeringManifest<'a> {
    toolkit: &'static str,
    version: &'static str,
    orientation_note: &'static str,
    problem_toml: String,
    report: &'a crate::collocation::SqpReport,
    cost: f64,
    max_defect: f64,
    collocation_error: f64,
    verification: Option<&'a Verification>,
    files: Vec<String>,
}

/// Node table, re-simulated trajectory, heading plot and manifest for a steering solve.
pub fn emit_steering(
    problem: &SteeringProblem,
    solution: &SteeringSolution,
    check: Option<&Verification>,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let z = &solution.decision;
    let mut files = Vec::new();
    let p = dir.join("steer_nodes.csv");
    {
        let mut w = csv::Writer::from_path(&p).map_err(|e| io_err(&p, e))?;
        let mut header: Vec<&str> = vec!["t"];
        header.extend(&CSV_HEADER[1..9]);
        header.extend(["y1", "y2", "y3", "a", "b"]);
        w.write_record(&header).map_err(|e| io_err(&p, e))?;
        for (i, t) in z.node_times().into_iter().enumerate() {
            let mut row = vec![t];
            row.extend(z.states[i].to_array());
            row.extend(z.outputs[i].to_array());
            match check {
                Some(v) => row.extend([v.axes[i].a, v.axes[i].b]),
                None => row.extend([f64::NAN, f64::NAN]),
            }
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(|e| io_err(&p, e))?;
        }
        w.flush().map_err(|e| io_err(&p, e))?;
    }
    files.push(p);
    let nodes: Vec<(f64, f64)> = z
        .node_times()
        .into_iter()
        .zip(&z.states)
        .map(|(t, s)| (t, s.heading))
        .collect();
    let mut series = vec![("collocation nodes", nodes)];
    if let Some(run) = check.and_then(|v| v.run.as_ref()) {
        let p = dir.join("steer.csv");
        write_csv(&p, &run.trajectory)?;
        files.push(p);
        let traj = &run.trajectory;
        series.push((
            "re-simulated",
            traj.times.iter().zip(&traj.states).map(|(t, s)| (*t, s.heading)).collect(),
        ));
    }
    let target = problem.target_heading;
    series.push(("target", vec![(0.0, target), (z.final_time, target)]));
    let p = dir.join("steer_heading.svg");
    line_plot(&p, "steered heading", "t (s)", "heading (rad)", &series)?;
    files.push(p);
    let p = dir.join("steer_manifest.json");
    let names = files
        .iter()
        .map(|f| f.file_name().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    let manifest = SteeringManifest {
        toolkit: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        orientation_note: ORIENTATION_NOTE,
        problem_toml: problem.to_toml_string()?,
        report: &solution.report,
        cost: solution.cost,
        max_defect: solution.max_defect,
        collocation_error: solution.collocation_error,
        verification: check,
        files: names,
    };
    write_json(&p, &manifest)?;
    files.push(p);
    Ok(files)
}
