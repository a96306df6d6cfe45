//! Cross-module consistency checks at desk scale.

use qab_core::dynamics::time_functional;
use qab_core::geometry::{christoffel_closed, christoffel_fd, AdiabaticMetric, MetricField, H_GAMMA};
use qab_core::hamiltonians::{build_grover, build_toeplitz, overlap_by_trace};
use qab_core::numerics::hermitian_eig;
use qab_core::paths::{geodesic_1d_quadrature, grover_constrained_metric, path_length, qab_1d_analytic, rc_path, DEFAULT_SAMPLES};
use qab_core::{PauliFamily, ProjectorPairFamily};
use serde::Serialize;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub value: Option<f64>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    fn from(name: &'static str, tolerance: f64, value: qab_core::Result<f64>) -> Self {
        match value {
            Ok(v) => Check { name, passed: v <= tolerance, value: Some(v), tolerance, error: None },
            Err(e) => Check { name, passed: false, value: None, tolerance, error: Some(e.to_string()) },
        }
    }
}

/// Low-discrepancy points in `[lo, hi]^dim`.
fn points(count: usize, dim: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    const STEPS: [f64; 4] = [0.618_033_988_749_895, 0.414_213_562_373_095, 0.732_050_807_568_877, 0.236_067_977_499_79];
    (1..=count).map(|k| (0..dim).map(|d| lo + (hi - lo) * (k as f64 * STEPS[d]).fract()).collect()).collect()
}

fn grover_family(n: usize, offset: f64) -> qab_core::Result<ProjectorPairFamily> {
    Ok(ProjectorPairFamily::new(build_grover(n, (1 << n) - 1)?).with_gap_offset(offset))
}

/// Closed-form `C/Δ⁴` against traces of the dense derivatives over the
/// spectral gap of `H(x)`.
fn metric_vs_trace(offset: f64) -> qab_core::Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let family = grover_family(n, offset)?;
        let metric = AdiabaticMetric::new(&family)?;
        let traces = overlap_by_trace(&family);
        for x in points(20, 2, 0.05, 1.0) {
            let levels = hermitian_eig(&family.problem().hamiltonian(&x)?)?.values;
            let gap = levels[1] - levels[0];
            let direct = &traces / gap.powi(4);
            let closed = metric.eval(&x)?;
            worst = worst.max((closed - &direct).amax() / direct.amax());
        }
    }
    Ok(worst)
}

fn christoffel_agreement(offset: f64) -> qab_core::Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let family = grover_family(n, offset)?;
        let metric = AdiabaticMetric::new(&family)?;
        for x in points(50, 2, 0.05, 1.0) {
            let closed = christoffel_closed(&family, &x)?;
            let fd = christoffel_fd(&metric, &x, H_GAMMA)?;
            worst = worst.max(closed.max_abs_diff(&fd) / closed.max_abs().max(1.0));
        }
    }
    let pauli = PauliFamily::new();
    let metric = AdiabaticMetric::new(&pauli)?;
    for x in points(50, 4, -1.0, 1.0) {
        let closed = christoffel_closed(&pauli, &x)?;
        let fd = christoffel_fd(&metric, &x, H_GAMMA)?;
        worst = worst.max(closed.max_abs_diff(&fd) / closed.max_abs().max(1.0));
    }
    Ok(worst)
}

fn brachistochrone() -> qab_core::Result<f64> {
    let mut worst: f64 = 0.0;
    for alpha0 in [std::f64::consts::FRAC_1_SQRT_2, 0.125] {
        let path = geodesic_1d_quadrature(grover_constrained_metric(alpha0), 0.0, 1.0, 101)?;
        for (s, x) in path.s_grid().iter().zip(path.points()) {
            worst = worst.max((x[0] - qab_1d_analytic(alpha0, *s)).abs());
        }
    }
    Ok(worst)
}

fn time_is_length(offset: f64) -> qab_core::Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let family = grover_family(n, offset)?;
        let path = rc_path(family.problem(), DEFAULT_SAMPLES)?;
        let t = time_functional(&family, &path)?;
        let l = path_length(&AdiabaticMetric::new(&family)?, &path)?;
        worst = worst.max((t - l).abs() / l);
    }
    Ok(worst)
}

fn toeplitz_law() -> qab_core::Result<f64> {
    let mut worst: f64 = 0.0;
    let mut size = 4;
    while size <= 1024 {
        let p = build_toeplitz(size)?;
        worst = worst.max((p.alpha0() - (2.0 / size as f64).sqrt()).abs());
        size *= 2;
    }
    Ok(worst)
}

pub fn run_checks(cfg: &ExperimentConfig) -> Vec<Check> {
    let offset = cfg.test_hooks.gap_offset;
    vec![
        Check::from("metric_vs_trace", 1e-10, metric_vs_trace(offset)),
        Check::from("christoffel_closed_vs_fd", 1e-5, christoffel_agreement(offset)),
        Check::from("brachistochrone_quadrature", 1e-6, brachistochrone()),
        Check::from("time_equals_length", 1e-8, time_is_length(offset)),
        Check::from("toeplitz_alpha0", 1e-10, toeplitz_law()),
    ]
}
