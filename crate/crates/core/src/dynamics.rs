//! Adiabatic speed, schedules, Schrödinger propagation and `δ(T)` sweeps.
//!
//! Time is recovered from the natural parameter through the local adiabatic
//! speed `v_ad = Δ²/‖ẋⁱ∂ᵢH‖` (ε = 1). A schedule for total time `T` rescales
//! that profile globally, `v = (𝒯/T)·v_ad`, so every `T` shares its shape.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QabError, Result};
use crate::hamiltonians::ParametrizedHamiltonian;
use crate::numerics::{cumulative_simpson, hermitian_eig, ComplexVector};
use crate::paths::Path;
use crate::GAP_FLOOR;

/// Two lowest levels closer than this make the ground state ambiguous.
pub const DEGENERACY_SPLITTING: f64 = 1e-12;

/// `v_ad(s) = Δ²(x(s)) / ‖ẋⁱ(s) ∂ᵢH‖_HS`.
pub fn adiabatic_speed<H: ParametrizedHamiltonian + ?Sized>(h: &H, path: &Path, s: f64) -> Result<f64> {
    let (x, xdot) = path.sample(s)?;
    speed_at(h, &x, &xdot, s)
}

fn speed_at<H: ParametrizedHamiltonian + ?Sized>(h: &H, x: &[f64], xdot: &[f64], s: f64) -> Result<f64> {
    let gap = h.gap(x)?;
    let norm = h.velocity_norm(xdot);
    if !(norm > 0.0) {
        return Err(QabError::DegenerateParametrization { s });
    }
    Ok(gap * gap / norm)
}

fn inverse_speeds<H: ParametrizedHamiltonian + ?Sized>(h: &H, path: &Path) -> Result<Vec<f64>> {
    if h.param_dim() != path.dim() {
        return Err(QabError::invalid("family and path dimensions differ"));
    }
    path.points()
        .iter()
        .zip(path.velocities())
        .zip(path.s_grid())
        .map(|((x, v), &s)| speed_at(h, x, v, s).map(|u| 1.0 / u))
        .collect()
}

/// `𝒯 = ∫₀¹ ds / v_ad` by Simpson quadrature on the path samples.
pub fn time_functional<H: ParametrizedHamiltonian + ?Sized>(h: &H, path: &Path) -> Result<f64> {
    let inv = inverse_speeds(h, path)?;
    let cumulative = cumulative_simpson(path.s_grid(), &inv)?;
    Ok(*cumulative.last().unwrap())
}

/// A path together with its time map `t(s)`.
///
/// `t` and `dt/ds` are stored at the path samples and interpolated with
/// cubic Hermite polynomials in between.
#[derive(Debug, Clone)]
pub struct Schedule {
    path: Path,
    total_time: f64,
    t: Vec<f64>,
    dtds: Vec<f64>,
}

impl Schedule {
    /// The local-adiabatic schedule (`v = v_ad`, total time `𝒯`).
    pub fn natural<H: ParametrizedHamiltonian + ?Sized>(h: &H, path: &Path) -> Result<Self> {
        let inv = inverse_speeds(h, path)?;
        let t = cumulative_simpson(path.s_grid(), &inv)?;
        let total_time = *t.last().unwrap();
        Schedule::from_parts(path.clone(), t, inv, total_time)
    }

    /// Constant speed `v = 1/T`; used for paths where `v_ad` is undefined.
    pub fn uniform(path: &Path, total_time: f64) -> Result<Self> {
        check_time(total_time)?;
        let t = path.s_grid().iter().map(|s| s * total_time).collect();
        let dtds = vec![total_time; path.len()];
        Schedule::from_parts(path.clone(), t, dtds, total_time)
    }

    fn from_parts(path: Path, t: Vec<f64>, dtds: Vec<f64>, total_time: f64) -> Result<Self> {
        check_time(total_time)?;
        if dtds.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(QabError::NumericalFailure("schedule speed is not finite and positive".into()));
        }
        Ok(Schedule { path, total_time, t, dtds })
    }

    /// Same speed profile, total time `T`.
    pub fn rescaled(&self, total_time: f64) -> Result<Self> {
        check_time(total_time)?;
        let k = total_time / self.total_time;
        Ok(Schedule {
            path: self.path.clone(),
            total_time,
            t: self.t.iter().map(|t| t * k).collect(),
            dtds: self.dtds.iter().map(|d| d * k).collect(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// `t(s)`; `t(1) = T` exactly.
    pub fn t_of_s(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(QabError::invalid(format!("s = {s} outside [0, 1]")));
        }
        let grid = self.path.s_grid();
        let i = grid.partition_point(|&g| g <= s).clamp(1, grid.len() - 1) - 1;
        if s == grid[i] {
            return Ok(self.t[i]);
        }
        let h = grid[i + 1] - grid[i];
        let u = (s - grid[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(u);
        Ok(h00 * self.t[i] + h10 * h * self.dtds[i] + h01 * self.t[i + 1] + h11 * h * self.dtds[i + 1])
    }

    /// `v(s) = ds/dt`.
    pub fn speed(&self, s: f64) -> Result<f64> {
        let grid = self.path.s_grid();
        let i = grid.partition_point(|&g| g <= s).clamp(1, grid.len() - 1) - 1;
        let u = ((s - grid[i]) / (grid[i + 1] - grid[i])).clamp(0.0, 1.0);
        Ok(1.0 / ((1.0 - u) * self.dtds[i] + u * self.dtds[i + 1]))
    }

    /// `t` at every path sample.
    pub fn times(&self) -> &[f64] {
        &self.t
    }
}

fn hermite_basis(u: f64) -> (f64, f64, f64, f64) {
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0, u3 - 2.0 * u2 + u, -2.0 * u3 + 3.0 * u2, u3 - u2)
}

fn check_time(total_time: f64) -> Result<()> {
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(QabError::invalid(format!("total time {total_time} must be finite and positive")));
    }
    Ok(())
}

/// Local-adiabatic schedule rescaled to total time `T`.
pub fn schedule_for_total_time<H: ParametrizedHamiltonian + ?Sized>(h: &H, path: &Path, total_time: f64) -> Result<Schedule> {
    Schedule::natural(h, path)?.rescaled(total_time)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationOptions {
    /// Midpoint-exponential steps per unit `s`.
    pub steps_per_unit: usize,
    /// Keep every `k`-th state (and the last); `0` keeps none.
    pub record_every: usize,
    /// Steps whose midpoint gap falls below this are counted as warnings.
    pub gap_floor: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions { steps_per_unit: 20_000, record_every: 0, gap_floor: GAP_FLOOR }
    }
}

impl PropagationOptions {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_unit == 0 {
            return Err(QabError::invalid("steps_per_unit must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub state: ComplexVector,
    /// `(s, ψ(s))` for the recorded steps.
    pub intermediate: Vec<(f64, ComplexVector)>,
    /// Largest `|‖ψ‖ − 1|` seen over all steps.
    pub norm_defect: f64,
    /// Number of steps evaluated below the gap floor.
    pub gap_warnings: usize,
    pub min_gap: f64,
    pub steps: usize,
}

/// Ground state of `H(x)`, phase-fixed; errors if the two lowest levels are
/// degenerate.
pub fn ground_state<H: ParametrizedHamiltonian + ?Sized>(h: &H, x: &[f64]) -> Result<ComplexVector> {
    let eig = hermitian_eig(&h.evaluate(x)?)?;
    if eig.values.len() > 1 {
        let splitting = eig.values[1] - eig.values[0];
        if splitting < DEGENERACY_SPLITTING {
            return Err(QabError::AmbiguousTarget { splitting });
        }
    }
    Ok(eig.vector(0).fix_phase())
}

/// Integrates `i ∂ₜψ = H(x(s(t)))ψ` from the ground state at `x(0)`.
///
/// Each step applies `exp(−i H(x(s_mid)) δt)` with `δt = t(s+δs) − t(s)`.
pub fn propagate<H: ParametrizedHamiltonian + ?Sized>(h: &H, schedule: &Schedule, opts: &PropagationOptions) -> Result<Propagation> {
    opts.validate()?;
    let path = schedule.path();
    if h.param_dim() != path.dim() {
        return Err(QabError::invalid("family and path dimensions differ"));
    }
    let mut psi = ground_state(h, path.start())?;
    let steps = opts.steps_per_unit;
    let mut out = Propagation {
        state: psi.clone(),
        intermediate: Vec::new(),
        norm_defect: 0.0,
        gap_warnings: 0,
        min_gap: f64::INFINITY,
        steps,
    };
    if opts.record_every > 0 {
        out.intermediate.push((0.0, psi.clone()));
    }
    let mut t_prev = 0.0;
    for k in 0..steps {
        let s1 = if k + 1 == steps { 1.0 } else { (k + 1) as f64 / steps as f64 };
        let s_mid = (k as f64 + 0.5) / steps as f64;
        let t1 = if k + 1 == steps { schedule.total_time() } else { schedule.t_of_s(s1)? };
        let (x_mid, _) = path.sample(s_mid)?;
        let gap = h.gap(&x_mid).unwrap_or(0.0);
        out.min_gap = out.min_gap.min(gap);
        if gap < opts.gap_floor {
            out.gap_warnings += 1;
        }
        let u = h.evaluate(&x_mid)?.unitary_exp(t1 - t_prev)?;
        psi = u.apply(&psi);
        t_prev = t1;
        if !psi.is_finite() {
            return Err(QabError::Divergence { s: s1 });
        }
        out.norm_defect = out.norm_defect.max((psi.norm() - 1.0).abs());
        if opts.record_every > 0 && ((k + 1) % opts.record_every == 0 || k + 1 == steps) {
            out.intermediate.push((s1, psi.clone()));
        }
    }
    out.state = psi;
    Ok(out)
}

/// `F = |⟨Φ₀(x_end)|ψ⟩|`, `δ = √(1 − F²)`.
pub fn fidelity_error<H: ParametrizedHamiltonian + ?Sized>(psi: &ComplexVector, h: &H, x_end: &[f64]) -> Result<(f64, f64)> {
    let phi = ground_state(h, x_end)?;
    if phi.len() != psi.len() {
        return Err(QabError::invalid("state dimension does not match the family"));
    }
    let f = phi.dot(psi).norm();
    let delta = (1.0 - f * f).max(0.0).sqrt();
    Ok((f, delta))
}

/// One path of a sweep: its natural schedule and the family it is
/// propagated with (which may be a reduced representation of the one that
/// defined the schedule).
pub struct SweepPath<'a> {
    pub label: String,
    pub schedule: Schedule,
    pub hamiltonian: &'a dyn ParametrizedHamiltonian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub total_time: f64,
    pub delta: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub problem: String,
    pub n: Option<usize>,
    pub steps_per_unit: usize,
    /// Ordered by path (input order), then ascending `T`.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// `(T, δ)` pairs of one path, skipping failed cells.
    pub fn series(&self, label: &str) -> (Vec<f64>, Vec<f64>) {
        self.rows.iter().filter(|r| r.label == label).filter_map(|r| r.delta.map(|d| (r.total_time, d))).unzip()
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.label) {
                out.push(r.label.clone());
            }
        }
        out
    }
}

/// `n` points from `min` to `max`, equally spaced in `log T`.
pub fn log_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && count >= 2) {
        return Err(QabError::invalid("log grid needs 0 < min < max and at least two points"));
    }
    let (a, b) = (min.ln(), max.ln());
    Ok((0..count)
        .map(|i| match i {
            0 => min,
            _ if i + 1 == count => max,
            _ => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect())
}

/// `δ(T)` for every path and every `T`; cells run in parallel, failures are
/// recorded in their row.
pub fn sweep_t(paths: &[SweepPath<'_>], t_grid: &[f64], opts: &PropagationOptions, problem: &str, n: Option<usize>) -> Result<SweepResult> {
    opts.validate()?;
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) || !(t_grid[0] > 0.0) {
        return Err(QabError::invalid("T grid must be positive and strictly increasing"));
    }
    let cells: Vec<(usize, f64)> = (0..paths.len()).flat_map(|p| t_grid.iter().map(move |&t| (p, t))).collect();
    let rows = cells
        .par_iter()
        .map(|&(p, t)| {
            let entry = &paths[p];
            let outcome = entry.schedule.rescaled(t).and_then(|sched| {
                let prop = propagate(entry.hamiltonian, &sched, opts)?;
                fidelity_error(&prop.state, entry.hamiltonian, sched.path().end()).map(|(_, d)| d)
            });
            let (delta, error) = match outcome {
                Ok(d) => (Some(d), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SweepRow { label: entry.label.clone(), total_time: t, delta, error }
        })
        .collect();
    Ok(SweepResult { problem: problem.to_string(), n, steps_per_unit: opts.steps_per_unit, rows })
}

/// Indices of strict three-point local maxima.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1)).filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1]).collect()
}

/// Least-squares slope of `log δ` against `log T` over the local maxima of
/// the series.
pub fn envelope_exponent(t: &[f64], delta: &[f64]) -> Result<f64> {
    if t.len() != delta.len() {
        return Err(QabError::invalid("T and δ series differ in length"));
    }
    let peaks: Vec<usize> = local_maxima(delta).into_iter().filter(|&i| delta[i] > 0.0 && t[i] > 0.0).collect();
    if peaks.len() < 3 {
        return Err(QabError::InsufficientData(format!("{} local maxima, need at least 3", peaks.len())));
    }
    let xs: Vec<f64> = peaks.iter().map(|&i| t[i].ln()).collect();
    let ys: Vec<f64> = peaks.iter().map(|&i| delta[i].ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
