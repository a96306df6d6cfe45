use std::collections::BTreeMap;

use nalgebra::DMatrix;
use qab_core::dynamics::{sweep_t, envelope_exponent, time_functional, PropagationOptions, Schedule, SweepPath};
use qab_core::geometry::{curvature_grid_with, AdiabaticMetric, FnMetric};
use qab_core::hamiltonians::{gap_projector_pair, EffectiveTwoLevel, ProjectorPairProblem};
use qab_core::observables::{path_average, series_along_path_with, SeriesKind, StateSource};
use qab_core::paths::{
    geodesic_1d_quadrature, grover_constrained_metric, linear_path, metric_speeds, path_length, pauli_embedding, pauli_geodesic,
    projector_pair_geodesic, rc_path, ShootingReport,
};
use qab_core::{ParametrizedHamiltonian, Path, PauliFamily, ProjectorPairFamily};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, PathKind};
use crate::output::{fmt_f64, fmt_opt, Csv, Run};
use crate::CliError;

pub struct BuiltPath {
    pub kind: PathKind,
    pub path: Path,
    pub report: Option<ShootingReport>,
}

pub fn build_path(kind: PathKind, problem: &ProjectorPairProblem, cfg: &ExperimentConfig) -> qab_core::Result<BuiltPath> {
    let (path, report) = match kind {
        PathKind::Rc => (rc_path(problem, cfg.samples)?, None),
        PathKind::Linear => (linear_path(cfg.samples)?, None),
        PathKind::Geo1 => {
            let p = geodesic_1d_quadrature(grover_constrained_metric(problem.alpha0()), 0.0, 1.0, cfg.samples)?;
            let x = p.points().iter().map(|x| vec![1.0 - x[0], x[0]]).collect();
            let v = p.velocities().iter().map(|v| vec![-v[0], v[0]]).collect();
            (Path::new(p.s_grid().to_vec(), x, v)?, None)
        }
        PathKind::Geo2 => {
            let (p, r) = projector_pair_geodesic(problem, &cfg.shooting)?;
            (p, Some(r))
        }
        PathKind::Geo4 => {
            let (p, r) = pauli_geodesic(problem, &cfg.shooting)?;
            (p, Some(r))
        }
    };
    Ok(BuiltPath { kind, path, report })
}

/// Family whose metric defines the schedule and `𝒯` of a path: the full
/// projector pair for 2-d paths, the effective qubit for `geo4`.
fn schedule_family(kind: PathKind, problem: &ProjectorPairProblem) -> Box<dyn ParametrizedHamiltonian> {
    match kind {
        PathKind::Geo4 => Box::new(PauliFamily::new()),
        _ => Box::new(ProjectorPairFamily::new(problem.clone())),
    }
}

/// Family used for propagation: the same dynamics restricted to the plane
/// spanned by the two ground states.
fn propagation_family(kind: PathKind, problem: &ProjectorPairProblem) -> qab_core::Result<Box<dyn ParametrizedHamiltonian>> {
    Ok(match kind {
        PathKind::Geo4 => Box::new(PauliFamily::new()),
        _ => Box::new(ProjectorPairFamily::new(EffectiveTwoLevel::new(problem)?.reduced().clone())),
    })
}

fn endpoints(kind: PathKind, problem: &ProjectorPairProblem) -> qab_core::Result<(Vec<f64>, Vec<f64>)> {
    if kind == PathKind::Geo4 {
        let e = pauli_embedding(problem)?;
        return Ok((e.column(0).iter().copied().collect(), e.column(1).iter().copied().collect()));
    }
    Ok((vec![1.0, 0.0], vec![0.0, 1.0]))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Serialize)]
struct PathSummary {
    label: &'static str,
    dim: usize,
    samples: usize,
    t_nat: f64,
    length: f64,
    endpoint_residual: f64,
    speed_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    shooting: Option<ShootingReport>,
}

fn summarize(built: &BuiltPath, problem: &ProjectorPairProblem) -> qab_core::Result<PathSummary> {
    let family = schedule_family(built.kind, problem);
    let t_nat = time_functional(family.as_ref(), &built.path)?;
    let metric = AdiabaticMetric::new(family.as_ref())?;
    let length = path_length(&metric, &built.path)?;
    let speeds = metric_speeds(&metric, &built.path)?;
    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
    let speed_deviation = speeds.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
    let (a, b) = endpoints(built.kind, problem)?;
    let endpoint_residual = distance(built.path.start(), &a).max(distance(built.path.end(), &b));
    Ok(PathSummary {
        label: built.kind.label(),
        dim: built.path.dim(),
        samples: built.path.len(),
        t_nat,
        length,
        endpoint_residual,
        speed_deviation,
        shooting: built.report,
    })
}

fn path_csv(path: &Path) -> String {
    let m = path.dim();
    let mut header = vec!["s".to_string()];
    header.extend((1..=m).map(|i| format!("x{i}")));
    header.extend((1..=m).map(|i| format!("xdot{i}")));
    let mut csv = Csv::new(&header);
    for ((s, x), v) in path.s_grid().iter().zip(path.points()).zip(path.velocities()) {
        let mut row = vec![*s];
        row.extend_from_slice(x);
        row.extend_from_slice(v);
        csv.floats(&row);
    }
    csv.into_string()
}

fn problem_of(cfg: &ExperimentConfig) -> Result<ProjectorPairProblem, CliError> {
    cfg.problem.build().map_err(|e| CliError::Config(e.to_string()))
}

/// Builds each requested path as its own task; failures are recorded.
fn build_all(run: &mut Run, problem: &ProjectorPairProblem, cfg: &ExperimentConfig, kinds: &[PathKind]) -> Vec<BuiltPath> {
    kinds
        .iter()
        .filter_map(|&kind| run.task(&format!("path:{}", kind.label()), || build_path(kind, problem, cfg).map_err(|e| e.to_string())))
        .collect()
}

pub fn geodesic(cfg: &ExperimentConfig) -> Result<Run, CliError> {
    let problem = problem_of(cfg)?;
    let mut run = Run::new("geodesic", cfg);
    let built = build_all(&mut run, &problem, cfg, &cfg.paths);
    let mut summaries = Vec::new();
    for b in &built {
        if let Some(s) = run.task(&format!("summary:{}", b.kind.label()), || summarize(b, &problem).map_err(|e| e.to_string())) {
            summaries.push(s);
        }
        run.file(format!("path_{}.csv", b.kind.label()), path_csv(&b.path));
    }
    let failed: Vec<&str> = cfg.paths.iter().filter(|k| !built.iter().any(|b| b.kind == **k)).map(|k| k.label()).collect();
    run.json(
        "geodesic_summary.json",
        &json!({
            "problem": problem.label(),
            "alpha0": problem.alpha0(),
            "hilbert_dim": problem.hilbert_dim(),
            "paths": summaries,
            "failed": failed,
        }),
    )?;
    Ok(run)
}

type Entry = (Box<dyn ParametrizedHamiltonian>, Schedule);

fn sweep_entry(b: &BuiltPath, problem: &ProjectorPairProblem) -> qab_core::Result<Entry> {
    let sched = Schedule::natural(schedule_family(b.kind, problem).as_ref(), &b.path)?;
    Ok((propagation_family(b.kind, problem)?, sched))
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<Run, CliError> {
    let problem = problem_of(cfg)?;
    let grid = cfg.t_grid.values()?;
    let mut run = Run::new("sweep", cfg);
    let built = build_all(&mut run, &problem, cfg, &cfg.paths);
    let opts = PropagationOptions { steps_per_unit: cfg.steps_per_unit, gap_floor: cfg.gap_floor, ..Default::default() };

    let mut families = Vec::new();
    let mut schedules = Vec::new();
    for b in &built {
        let made = run.task(&format!("schedule:{}", b.kind.label()), || sweep_entry(b, &problem).map_err(|e| e.to_string()));
        if let Some((fam, sched)) = made {
            families.push((b.kind, fam));
            schedules.push(sched);
        }
    }
    let entries: Vec<SweepPath<'_>> = families
        .iter()
        .zip(schedules)
        .map(|((kind, fam), schedule)| SweepPath { label: kind.label().to_string(), schedule, hamiltonian: fam.as_ref() })
        .collect();

    let qubits = problem.qubits();
    let result = run.task("sweep", || sweep_t(&entries, &grid, &opts, problem.label(), qubits).map_err(|e| e.to_string()));
    let mut cells: BTreeMap<(String, usize), Option<f64>> = BTreeMap::new();
    if let Some(result) = &result {
        let mut failed_cells = Vec::new();
        let mut envelopes = BTreeMap::new();
        for (i, row) in result.rows.iter().enumerate() {
            cells.insert((row.label.clone(), i % grid.len()), row.delta);
            if let Some(err) = &row.error {
                failed_cells.push(json!({"path": row.label, "T": row.total_time, "error": err}));
            }
        }
        for label in result.labels() {
            let (t, d) = result.series(&label);
            envelopes.insert(label, envelope_exponent(&t, &d).ok());
        }
        let any_failed = !failed_cells.is_empty();
        run.detail(json!({"failed_cells": failed_cells, "envelope_exponent": envelopes}));
        if any_failed {
            run.fail_last("some cells failed".into());
        }
    }

    if result.is_some() && !entries.is_empty() {
        let sentinels = vec![grid[0], grid[grid.len() / 2], grid[grid.len() - 1]];
        let fine = PropagationOptions { steps_per_unit: 2 * cfg.steps_per_unit, ..opts };
        let check = run.task("convergence", || sweep_t(&entries, &sentinels, &fine, problem.label(), qubits).map_err(|e| e.to_string()));
        if let (Some(check), Some(result)) = (check, &result) {
            let mut max_dev: f64 = 0.0;
            for row in &check.rows {
                let coarse = result.rows.iter().find(|r| r.label == row.label && r.total_time == row.total_time).and_then(|r| r.delta);
                if let (Some(a), Some(b)) = (coarse, row.delta) {
                    max_dev = max_dev.max((a - b).abs());
                }
            }
            run.detail(json!({"sentinels": sentinels, "steps_per_unit": fine.steps_per_unit, "max_deviation": max_dev}));
        }
    }

    let mut header = vec!["T".to_string()];
    header.extend(cfg.paths.iter().map(|k| k.label().to_string()));
    let mut csv = Csv::new(&header);
    for (i, t) in grid.iter().enumerate() {
        let mut row = vec![fmt_f64(*t)];
        row.extend(cfg.paths.iter().map(|k| fmt_opt(cells.get(&(k.label().to_string(), i)).copied().flatten())));
        csv.row(row);
    }
    run.file("sweep.csv", csv.into_string());
    Ok(run)
}

pub fn curvature_map(cfg: &ExperimentConfig) -> Result<Run, CliError> {
    let problem = problem_of(cfg)?;
    let mut run = Run::new("curvature-map", cfg);
    let alpha0 = problem.alpha0();
    let gap = |x: &[f64]| gap_projector_pair(x, alpha0).unwrap_or(0.0);
    let points = run.task("grid", || {
        if cfg.test_hooks.flat_metric {
            let flat = FnMetric::new(2, |_: &[f64]| DMatrix::<f64>::identity(2, 2));
            Ok(curvature_grid_with(&flat, gap, &cfg.grid, cfg.fd_steps, cfg.gap_floor))
        } else {
            let metric = AdiabaticMetric::new(ProjectorPairFamily::new(problem.clone())).map_err(|e| e.to_string())?;
            Ok(curvature_grid_with(&metric, gap, &cfg.grid, cfg.fd_steps, cfg.gap_floor))
        }
    });
    if let Some(points) = points {
        let masked = points.iter().filter(|p| p.masked()).count();
        run.detail(json!({"points": points.len(), "masked": masked}));
        let mut csv = Csv::new(&["x1", "x2", "r1212", "gaussian", "masked"]);
        for p in &points {
            let (r, k) = match &p.sample {
                Some(s) => (Some(s.r1212), s.gaussian),
                None => (None, None),
            };
            csv.row(vec![fmt_f64(p.x1), fmt_f64(p.x2), fmt_opt(r), fmt_opt(k), (p.masked() as u8).to_string()]);
        }
        run.file("curvature_grid.csv", csv.into_string());
    }

    let planar: Vec<PathKind> = cfg.paths.iter().copied().filter(|k| k.dim() == 2).collect();
    let built = build_all(&mut run, &problem, cfg, &planar);
    let n = cfg.overlay_samples;
    let s_grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    for b in &built {
        let mut csv = Csv::new(&["s", "x1", "x2"]);
        for &s in &s_grid {
            let (x, _) = b.path.sample(s).map_err(|e| CliError::Numerical(e.to_string()))?;
            csv.floats(&[s, x[0], x[1]]);
        }
        run.file(format!("overlay_{}.csv", b.kind.label()), csv.into_string());
    }
    let reach = cfg.grid.x1.max.min(cfg.grid.x2.max).max(0.0);
    let mut line = Csv::new(&["s", "x1", "x2"]);
    for &s in &s_grid {
        line.floats(&[s, s * reach, s * reach]);
    }
    run.file("overlay_critical_line.csv", line.into_string());
    Ok(run)
}

pub fn observables(cfg: &ExperimentConfig) -> Result<Run, CliError> {
    let problem = problem_of(cfg)?;
    let needs_register = cfg.observables.kinds.iter().any(|k| matches!(k, SeriesKind::Negativity12 | SeriesKind::BlockEntropy));
    let n = problem.qubits().unwrap_or(0);
    if needs_register && n < 2 {
        return Err(CliError::Config(format!(
            "negativity12 and block_entropy need a qubit register with n >= 2 (problem has n = {n}); drop them from observables.kinds"
        )));
    }
    if cfg.paths.iter().any(|k| k.dim() != 2) {
        return Err(CliError::Config("observables are defined for 2-d paths only; remove geo4".into()));
    }
    if let StateSource::Evolved { .. } = cfg.observables.state {
        if !cfg.steps_per_unit.is_multiple_of(cfg.observables.samples - 1) {
            return Err(CliError::Config("evolved-state observables need observables.samples - 1 to divide steps_per_unit".into()));
        }
    }
    let mut run = Run::new("observables", cfg);
    let built = build_all(&mut run, &problem, cfg, &cfg.paths);
    let m = cfg.observables.samples;
    let s: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let opts = PropagationOptions { steps_per_unit: cfg.steps_per_unit, gap_floor: cfg.gap_floor, ..Default::default() };
    let mut per_path = BTreeMap::new();
    for b in &built {
        let label = b.kind.label();
        let series = run.task(&format!("series:{label}"), || {
            cfg.observables
                .kinds
                .iter()
                .map(|&k| series_along_path_with(&problem, &b.path, label, k, &s, cfg.observables.state, &opts))
                .collect::<qab_core::Result<Vec<_>>>()
                .map_err(|e| e.to_string())
        });
        let Some(series) = series else { continue };
        let mut averages = BTreeMap::new();
        let mut errors = BTreeMap::new();
        for ser in &series {
            match path_average(ser) {
                Ok(v) => {
                    averages.insert(ser.kind.name(), Some(v));
                }
                Err(e) => {
                    averages.insert(ser.kind.name(), None);
                    errors.insert(ser.kind.name(), e.to_string());
                }
            }
        }
        let gap_half = b.path.sample(0.5).ok().and_then(|(x, _)| gap_projector_pair(&x, problem.alpha0()).ok());
        let mut entry = json!({"averages": averages, "gap_at_half": gap_half});
        if !errors.is_empty() {
            run.fail_last(errors.values().cloned().collect::<Vec<_>>().join("; "));
            entry["errors"] = json!(errors);
        }
        per_path.insert(label, entry);

        let mut header = vec!["s".to_string()];
        header.extend(series.iter().map(|x| x.kind.name().to_string()));
        let mut csv = Csv::new(&header);
        for (i, si) in s.iter().enumerate() {
            let mut row = vec![fmt_f64(*si)];
            row.extend(series.iter().map(|x| fmt_opt(x.values[i])));
            csv.row(row);
        }
        run.file(format!("observables_{label}.csv"), csv.into_string());
    }
    let summary: Value = json!({
        "problem": problem.label(),
        "alpha0": problem.alpha0(),
        "state": cfg.observables.state,
        "paths": per_path,
    });
    run.json("observables_averages.json", &summary)?;
    Ok(run)
}
