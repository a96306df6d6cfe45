//! Diagnostics along a control path: gap, curvature, entanglement, and
//! their path averages `Ave_γ[X] = ∫ X ds / ∫ ds`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{propagate, schedule_for_total_time, PropagationOptions};
use crate::error::{QabError, Result};
use crate::geometry::{riemann_tensor, AdiabaticMetric, FdSteps};
use crate::hamiltonians::{gap_projector_pair, EffectiveTwoLevel, ProjectorPairFamily, ProjectorPairProblem};
use crate::numerics::{hermitian_eig, partial_trace, partial_transpose, simpson, trace_norm, von_neumann_entropy, ComplexMatrix, ComplexVector, Subsystem};
use crate::paths::Path;
use crate::GAP_FLOOR;

/// Minimum unmasked fraction of `[0, 1]` for a path average.
pub const REQUIRED_COVERAGE: f64 = 0.95;

/// Ground state of `H(x(s))` for a projector pair, from the 2×2 block in the
/// `{a, b}` plane embedded back into the full space.
pub fn ground_state_along(problem: &ProjectorPairProblem, path: &Path, s: f64) -> Result<ComplexVector> {
    let (x, _) = path.sample(s)?;
    ground_state_at(problem, &EffectiveTwoLevel::new(problem)?, &x)
}

fn ground_state_at(problem: &ProjectorPairProblem, eff: &EffectiveTwoLevel, x: &[f64]) -> Result<ComplexVector> {
    let gap = gap_projector_pair(x, problem.alpha0()).unwrap_or(0.0);
    if gap < 1e-12 {
        return Err(QabError::AmbiguousTarget { splitting: gap });
    }
    let eig = hermitian_eig(&eff.block(x)?)?;
    Ok(eff.embed(&eig.vector(0)).fix_phase())
}

fn check_density(rho: &ComplexMatrix) -> Result<()> {
    if !rho.is_hermitian() && rho.hermiticity_defect() > 1e-10 {
        return Err(QabError::invalid("density matrix is not hermitian"));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(QabError::invalid(format!("density matrix trace {tr} is not 1")));
    }
    let rho_h = ComplexMatrix::hermitian(rho.data().clone())?;
    let lowest = hermitian_eig(&rho_h)?.values[0];
    if lowest < -1e-10 {
        return Err(QabError::invalid(format!("density matrix has negative eigenvalue {lowest}")));
    }
    Ok(())
}

/// `(‖ρ^{T_B}‖₁ − 1)/2` of a two-qubit state.
pub fn negativity(rho: &ComplexMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(QabError::invalid("negativity needs a two-qubit (4x4) density matrix"));
    }
    check_density(rho)?;
    let pt = partial_transpose(rho, Subsystem::B)?;
    // ‖ρ^{T_B}‖₁ ≥ 1; rounding can put it just below
    Ok(((trace_norm(&pt) - 1.0) / 2.0).max(0.0))
}

/// Base-2 entropy of the reduced state of qubits `0..⌊n/2⌋`.
pub fn block_entropy(psi: &ComplexVector) -> Result<f64> {
    let n = qubits_of(psi.len())?;
    if n < 2 {
        return Err(QabError::invalid("block entropy needs at least two qubits"));
    }
    let block: Vec<usize> = (0..n / 2).collect();
    von_neumann_entropy(&partial_trace(&ComplexMatrix::projector(psi), &block)?)
}

/// Negativity between qubits 0 and 1 of a pure state.
pub fn negativity_of_pair(psi: &ComplexVector) -> Result<f64> {
    let n = qubits_of(psi.len())?;
    if n < 2 {
        return Err(QabError::invalid("negativity needs at least two qubits"));
    }
    negativity(&partial_trace(&ComplexMatrix::projector(psi), &[0, 1])?)
}

fn qubits_of(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(QabError::invalid(format!("state of dimension {dim} is not a qubit register")));
    }
    Ok(dim.trailing_zeros() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Gap,
    R1212,
    Negativity12,
    BlockEntropy,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 4] = [SeriesKind::Gap, SeriesKind::R1212, SeriesKind::Negativity12, SeriesKind::BlockEntropy];

    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::Gap => "gap",
            SeriesKind::R1212 => "r1212",
            SeriesKind::Negativity12 => "negativity12",
            SeriesKind::BlockEntropy => "block_entropy",
        }
    }

    fn needs_state(self) -> bool {
        matches!(self, SeriesKind::Negativity12 | SeriesKind::BlockEntropy)
    }
}

/// Which state entanglement observables are evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum StateSource {
    /// Instantaneous ground state of `H(x(s))`.
    GroundState,
    /// State evolved under the local-adiabatic schedule of total time `T`.
    Evolved { total_time: f64 },
}

/// Values of one observable on an `s` grid; `None` marks masked points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSeries {
    pub path_label: String,
    pub kind: SeriesKind,
    pub s: Vec<f64>,
    pub values: Vec<Option<f64>>,
}

impl PathSeries {
    pub fn masked_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// `which` along `path` on the grid `s`, with ground-state entanglement.
pub fn series_along_path(problem: &ProjectorPairProblem, path: &Path, path_label: &str, which: SeriesKind, s: &[f64]) -> Result<PathSeries> {
    series_along_path_with(problem, path, path_label, which, s, StateSource::GroundState, &PropagationOptions::default())
}

/// As [`series_along_path`], choosing the state for entanglement
/// observables. Evolved states need a uniform `s` grid whose interval count
/// divides `opts.steps_per_unit`.
pub fn series_along_path_with(
    problem: &ProjectorPairProblem,
    path: &Path,
    path_label: &str,
    which: SeriesKind,
    s: &[f64],
    source: StateSource,
    opts: &PropagationOptions,
) -> Result<PathSeries> {
    if path.dim() != 2 {
        return Err(QabError::invalid("series need a 2-d projector-pair path"));
    }
    if s.is_empty() || s.windows(2).any(|w| !(w[1] > w[0])) || s[0] < 0.0 || s[s.len() - 1] > 1.0 {
        return Err(QabError::invalid("s grid must be strictly increasing inside [0, 1]"));
    }
    if which.needs_state() {
        let n = problem.qubits().unwrap_or(0);
        if n < 2 {
            return Err(QabError::invalid(format!("{} needs a qubit register with n >= 2 (problem has n = {n})", which.name())));
        }
    }
    let family = ProjectorPairFamily::new(problem.clone());
    let eff = EffectiveTwoLevel::new(problem)?;
    let evolved = match (which.needs_state(), source) {
        (true, StateSource::Evolved { total_time }) => Some(evolved_states(problem, &family, &eff, path, s, total_time, opts)?),
        _ => None,
    };
    let metric = AdiabaticMetric::new(&family)?;
    let alpha0 = problem.alpha0();
    let values = s
        .par_iter()
        .enumerate()
        .map(|(i, &si)| -> Result<Option<f64>> {
            let (x, _) = path.sample(si)?;
            let gap = gap_projector_pair(&x, alpha0).unwrap_or(0.0);
            match which {
                SeriesKind::Gap => Ok(Some(gap)),
                SeriesKind::R1212 => {
                    if gap < GAP_FLOOR {
                        return Ok(None);
                    }
                    Ok(riemann_tensor(&metric, &x, FdSteps::default()).ok().map(|c| c.r1212))
                }
                SeriesKind::Negativity12 | SeriesKind::BlockEntropy => {
                    let psi = match &evolved {
                        Some(states) => states[i].clone(),
                        None => match ground_state_at(problem, &eff, &x) {
                            Ok(psi) => psi,
                            Err(QabError::AmbiguousTarget { .. }) => return Ok(None),
                            Err(e) => return Err(e),
                        },
                    };
                    let v = if which == SeriesKind::Negativity12 { negativity_of_pair(&psi)? } else { block_entropy(&psi)? };
                    Ok(Some(v))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PathSeries { path_label: path_label.to_string(), kind: which, s: s.to_vec(), values })
}

fn evolved_states(
    problem: &ProjectorPairProblem,
    family: &ProjectorPairFamily,
    eff: &EffectiveTwoLevel,
    path: &Path,
    s: &[f64],
    total_time: f64,
    opts: &PropagationOptions,
) -> Result<Vec<ComplexVector>> {
    let intervals = s.len() - 1;
    let uniform = s[0] == 0.0 && s[intervals] == 1.0 && s.iter().enumerate().all(|(i, v)| (v - i as f64 / intervals as f64).abs() < 1e-12);
    if intervals == 0 || !uniform || !opts.steps_per_unit.is_multiple_of(intervals) {
        return Err(QabError::invalid("evolved-state series need a uniform s grid whose interval count divides the step count"));
    }
    let reduced = ProjectorPairFamily::new(eff.reduced().clone());
    let schedule = schedule_for_total_time(family, path, total_time)?;
    let prop = propagate(&reduced, &schedule, &PropagationOptions { record_every: opts.steps_per_unit / intervals, ..*opts })?;
    debug_assert_eq!(problem.hilbert_dim(), eff.basis().0.len());
    Ok(prop.intermediate.iter().map(|(_, psi)| eff.embed(psi)).collect())
}

/// `∫ X ds / ∫ ds` over the unmasked part of the series.
///
/// Contiguous unmasked runs are integrated separately (Simpson, trapezoid
/// for two-point runs); masked points drop out of both integrals.
pub fn path_average(series: &PathSeries) -> Result<f64> {
    let s = &series.s;
    if s.len() < 2 {
        return Err(QabError::InsufficientData("path average needs at least two samples".into()));
    }
    let span = s[s.len() - 1] - s[0];
    let mut integral = 0.0;
    let mut covered = 0.0;
    let mut i = 0;
    while i < s.len() {
        if series.values[i].is_none() {
            i += 1;
            continue;
        }
        let start = i;
        while i < s.len() && series.values[i].is_some() {
            i += 1;
        }
        if i - start < 2 {
            continue;
        }
        let xs = &s[start..i];
        let ys: Vec<f64> = series.values[start..i].iter().map(|v| v.unwrap()).collect();
        integral += simpson(xs, &ys)?;
        covered += xs[xs.len() - 1] - xs[0];
    }
    let fraction = covered / span;
    if fraction < REQUIRED_COVERAGE {
        return Err(QabError::Coverage { covered: fraction, required: REQUIRED_COVERAGE });
    }
    Ok(integral / covered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::build_grover;
    use crate::numerics::C64;
    use crate::paths::{rc_path, DEFAULT_SAMPLES};

    fn bell() -> ComplexVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexVector::from_real(&[h, 0.0, 0.0, h])
    }

    #[test]
    fn bell_and_product_negativity() {
        assert!((negativity(&ComplexMatrix::projector(&bell())).unwrap() - 0.5).abs() < 1e-12);
        let a = ComplexVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let b = ComplexVector::from_real(&[0.28, 0.96]);
        let prod = ComplexVector::from_vec(a.as_slice().iter().flat_map(|x| b.as_slice().iter().map(move |y| x * y)).collect());
        assert!(negativity(&ComplexMatrix::projector(&prod)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn werner_negativity_matches_brute_force() {
        let bell_proj = ComplexMatrix::projector(&bell());
        let rho = &bell_proj.scale(0.75) + &ComplexMatrix::identity(4).scale(0.25 / 4.0);
        // eigenvalues of the partial transpose: 3 × (p/2 + (1-p)/4) and -p/2 + (1-p)/4
        let p = 0.75;
        let expected = (p / 2.0 - (1.0 - p) / 4.0f64).max(0.0);
        assert!((negativity(&rho).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn invalid_density_rejected() {
        assert!(negativity(&ComplexMatrix::identity(4)).is_err());
        assert!(negativity(&ComplexMatrix::identity(2).scale(0.5)).is_err());
        let bad = ComplexMatrix::diagonal(&[1.5, -0.5, 0.0, 0.0]);
        assert!(negativity(&bad).is_err());
    }

    #[test]
    fn block_entropy_of_bell_and_product() {
        assert!((block_entropy(&bell()).unwrap() - 1.0).abs() < 1e-10);
        assert!(block_entropy(&ComplexVector::basis(8, 5)).unwrap().abs() < 1e-10);
    }

    #[test]
    fn ground_states_at_the_ends() {
        let p = build_grover(3, 7).unwrap();
        let rc = rc_path(&p, DEFAULT_SAMPLES).unwrap();
        let g0 = ground_state_along(&p, &rc, 0.0).unwrap();
        assert!((g0.dot(p.a()).norm() - 1.0).abs() < 1e-12);
        let g1 = ground_state_along(&p, &rc, 1.0).unwrap();
        assert!((g1.dot(p.b()).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_state_matches_full_eigensolver() {
        let p = build_grover(2, 3).unwrap();
        let rc = rc_path(&p, DEFAULT_SAMPLES).unwrap();
        let g = ground_state_along(&p, &rc, 0.5).unwrap();
        let full = hermitian_eig(&p.hamiltonian(&[0.5, 0.5]).unwrap()).unwrap().vector(0).fix_phase();
        let diff = (&g - &full).norm();
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn series_edge_values() {
        let p = build_grover(2, 3).unwrap();
        let rc = rc_path(&p, DEFAULT_SAMPLES).unwrap();
        let s = [0.0, 0.25, 0.5, 0.75, 1.0];
        let neg = series_along_path(&p, &rc, "rc", SeriesKind::Negativity12, &s).unwrap();
        assert!(neg.values[0].unwrap().abs() < 1e-12);
        let p1 = build_grover(1, 1).unwrap();
        let rc1 = rc_path(&p1, DEFAULT_SAMPLES).unwrap();
        let gap = series_along_path(&p1, &rc1, "rc", SeriesKind::Gap, &s).unwrap();
        let a = p1.alpha0();
        assert!((gap.values[2].unwrap() - (0.25 + 0.25 + 2.0 * (2.0 * a * a - 1.0) / 4.0f64).sqrt()).abs() < 1e-12);
        let err = series_along_path(&p1, &rc1, "rc", SeriesKind::Negativity12, &s).unwrap_err();
        assert!(err.to_string().contains("n >= 2"));
    }

    #[test]
    fn averages() {
        let s: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let constant = PathSeries { path_label: "x".into(), kind: SeriesKind::Gap, s: s.clone(), values: vec![Some(3.0); 101] };
        assert!((path_average(&constant).unwrap() - 3.0).abs() < 1e-12);
        let linear = PathSeries { values: s.iter().map(|&v| Some(v)).collect(), ..constant.clone() };
        assert!((path_average(&linear).unwrap() - 0.5).abs() < 1e-8);
        let mut holes = constant.clone();
        for v in holes.values.iter_mut().skip(40).take(10) {
            *v = None;
        }
        assert!(matches!(path_average(&holes), Err(QabError::Coverage { .. })));
        let mut one_hole = constant;
        one_hole.values[50] = None;
        assert!((path_average(&one_hole).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn evolved_source_approaches_ground_state() {
        let p = build_grover(2, 3).unwrap();
        let rc = rc_path(&p, DEFAULT_SAMPLES).unwrap();
        let s: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let opts = PropagationOptions { steps_per_unit: 4000, ..Default::default() };
        let ground = series_along_path(&p, &rc, "rc", SeriesKind::Negativity12, &s).unwrap();
        let slow = series_along_path_with(&p, &rc, "rc", SeriesKind::Negativity12, &s, StateSource::Evolved { total_time: 2000.0 }, &opts).unwrap();
        for (a, b) in ground.values.iter().zip(&slow.values) {
            assert!((a.unwrap() - b.unwrap()).abs() < 1e-2);
        }
        let ragged = [0.0, 0.3, 1.0];
        assert!(series_along_path_with(&p, &rc, "rc", SeriesKind::Negativity12, &ragged, StateSource::Evolved { total_time: 5.0 }, &opts).is_err());
    }
}
