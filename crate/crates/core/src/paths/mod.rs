//! Control curves on `[0, 1]` and the path synthesizers.

mod quadrature;
mod shooting;

use nalgebra::DMatrix;

use crate::error::{QabError, Result};
use crate::geometry::MetricField;
use crate::geometry::ClosedChristoffel;
use crate::hamiltonians::{gap_pauli, gap_projector_pair, pauli_components, EffectiveTwoLevel, PauliFamily, ProjectorPairFamily, ProjectorPairProblem};
use crate::GAP_FLOOR;
use crate::numerics::simpson;

pub use quadrature::{geodesic_1d_quadrature, grover_constrained_metric};
pub use shooting::{geodesic_shoot, GuessStrategy, Shooter, ShootingOptions, ShootingReport};

/// Default number of stored samples per path.
pub const DEFAULT_SAMPLES: usize = 2001;

/// A sampled control curve `x(s)` with velocities, `s ∈ [0, 1]`.
///
/// Queries between samples use cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    dim: usize,
    s: Vec<f64>,
    x: Vec<Vec<f64>>,
    xdot: Vec<Vec<f64>>,
}

impl Path {
    pub fn new(s: Vec<f64>, x: Vec<Vec<f64>>, xdot: Vec<Vec<f64>>) -> Result<Self> {
        if s.len() < 2 || x.len() != s.len() || xdot.len() != s.len() {
            return Err(QabError::invalid("path needs at least two samples with matching x and ẋ"));
        }
        if s[0] != 0.0 || *s.last().unwrap() != 1.0 {
            return Err(QabError::invalid("path parameter must run from exactly 0 to 1"));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(QabError::invalid("path parameter must be strictly increasing"));
        }
        let dim = x[0].len();
        if dim == 0 || x.iter().chain(&xdot).any(|v| v.len() != dim || v.iter().any(|c| !c.is_finite())) {
            return Err(QabError::invalid("path samples must be finite with a common dimension"));
        }
        Ok(Path { dim, s, x, xdot })
    }

    /// Samples `f(s) = (x, ẋ)` on `count` uniform points.
    pub fn from_fn<F>(count: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> (Vec<f64>, Vec<f64>),
    {
        if count < 2 {
            return Err(QabError::invalid("path needs at least two samples"));
        }
        let s = uniform_grid(count);
        let (x, xdot) = s.iter().map(|&si| f(si)).unzip();
        Path::new(s, x, xdot)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn velocities(&self) -> &[Vec<f64>] {
        &self.xdot
    }

    pub fn start(&self) -> &[f64] {
        &self.x[0]
    }

    pub fn end(&self) -> &[f64] {
        self.x.last().unwrap()
    }

    /// Position and velocity at any `s ∈ [0, 1]`.
    pub fn sample(&self, s: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(0.0..=1.0).contains(&s) {
            return Err(QabError::invalid(format!("path parameter {s} outside [0, 1]")));
        }
        let k = match self.s.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(k) => return Ok((self.x[k].clone(), self.xdot[k].clone())),
            Err(k) => k - 1,
        };
        let (s0, s1) = (self.s[k], self.s[k + 1]);
        let h = s1 - s0;
        let t = (s - s0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let (h00, h10, h01, h11) = (2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + t, -2.0 * t3 + 3.0 * t2, t3 - t2);
        let (d00, d10, d01, d11) = (6.0 * t2 - 6.0 * t, 3.0 * t2 - 4.0 * t + 1.0, -6.0 * t2 + 6.0 * t, 3.0 * t2 - 2.0 * t);
        let (x0, x1, v0, v1) = (&self.x[k], &self.x[k + 1], &self.xdot[k], &self.xdot[k + 1]);
        let x = (0..self.dim).map(|i| h00 * x0[i] + h10 * h * v0[i] + h01 * x1[i] + h11 * h * v1[i]).collect();
        let v = (0..self.dim)
            .map(|i| (d00 * x0[i] + d01 * x1[i]) / h + d10 * v0[i] + d11 * v1[i])
            .collect();
        Ok((x, v))
    }

    /// Reparametrizes by `σ ↦ s = φ(σ)` with `φ(0) = 0`, `φ(1) = 1`,
    /// sampled on `count` uniform `σ` points.
    pub fn reparametrize<F, D>(&self, count: usize, phi: F, dphi: D) -> Result<Path>
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let s = uniform_grid(count);
        let mut x = Vec::with_capacity(count);
        let mut xdot = Vec::with_capacity(count);
        for &sigma in &s {
            let (p, v) = self.sample(phi(sigma).clamp(0.0, 1.0))?;
            let d = dphi(sigma);
            x.push(p);
            xdot.push(v.into_iter().map(|c| c * d).collect());
        }
        Path::new(s, x, xdot)
    }

    /// Image under the linear map `y = L x`.
    pub fn map_linear(&self, l: &DMatrix<f64>) -> Result<Path> {
        if l.ncols() != self.dim {
            return Err(QabError::invalid("linear map does not match the path dimension"));
        }
        let apply = |v: &Vec<f64>| -> Vec<f64> { (0..l.nrows()).map(|r| (0..self.dim).map(|c| l[(r, c)] * v[c]).sum()).collect() };
        Path::new(self.s.clone(), self.x.iter().map(apply).collect(), self.xdot.iter().map(apply).collect())
    }
}

pub(crate) fn uniform_grid(count: usize) -> Vec<f64> {
    let last = (count - 1) as f64;
    (0..count).map(|i| if i + 1 == count { 1.0 } else { i as f64 / last }).collect()
}

/// Closed-form brachistochrone under the constraint `x² = 1 − x¹`:
/// `x(s) = ½ − α₀/(2√(1−α₀²)) · tan[(1 − 2s) arccos α₀]`.
pub fn qab_1d_analytic(alpha0: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if s == 1.0 {
        return 1.0;
    }
    let theta = alpha0.acos();
    0.5 - alpha0 / (2.0 * (1.0 - alpha0 * alpha0).sqrt()) * ((1.0 - 2.0 * s) * theta).tan()
}

/// `dx/ds` of [`qab_1d_analytic`].
pub fn qab_1d_velocity(alpha0: f64, s: f64) -> f64 {
    let theta = alpha0.acos();
    let c = ((1.0 - 2.0 * s) * theta).cos();
    alpha0 * theta / ((1.0 - alpha0 * alpha0).sqrt() * c * c)
}

fn check_alpha0(alpha0: f64) -> Result<()> {
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(QabError::invalid(format!("alpha0 = {alpha0} must lie in (0, 1)")));
    }
    Ok(())
}

/// The Roland–Cerf interpolation `x² = x_QAB(s)`, `x¹ = 1 − x²`.
pub fn rc_path(problem: &ProjectorPairProblem, samples: usize) -> Result<Path> {
    rc_path_for_alpha0(problem.alpha0(), samples)
}

pub fn rc_path_for_alpha0(alpha0: f64, samples: usize) -> Result<Path> {
    check_alpha0(alpha0)?;
    Path::from_fn(samples, |s| {
        let x = qab_1d_analytic(alpha0, s);
        let v = qab_1d_velocity(alpha0, s);
        (vec![1.0 - x, x], vec![-v, v])
    })
}

/// Straight interpolation `x = (1 − s, s)`.
pub fn linear_path(samples: usize) -> Result<Path> {
    Path::from_fn(samples, |s| (vec![1.0 - s, s], vec![-1.0, 1.0]))
}

/// Endpoint misses of converged shots may put boundary samples marginally
/// outside the quadrant.
const QUADRANT_SLACK: f64 = 1e-6;

/// Closed positive quadrant with the gap above `floor`.
///
/// Off the quadrant the bulk level `x¹ + x²` of a projector pair with `N > 2`
/// can undercut the upper level of the `{a, b}` plane, so the gap formula
/// stops being the spectral gap there.
pub fn projector_pair_region(alpha0: f64, floor: f64) -> impl Fn(&[f64]) -> bool + Sync {
    move |x: &[f64]| x[0] >= -QUADRANT_SLACK && x[1] >= -QUADRANT_SLACK && gap_projector_pair(x, alpha0).is_ok_and(|g| g >= floor)
}

/// 2-d geodesic from `(1, 0)` to `(0, 1)`, seeded by the Roland–Cerf path.
///
/// The RC guide is always used first; chord restarts follow.
pub fn projector_pair_geodesic(problem: &ProjectorPairProblem, opts: &ShootingOptions) -> Result<(Path, ShootingReport)> {
    let guide = rc_path(problem, opts.steps_per_unit + 1)?;
    let family = ProjectorPairFamily::new(problem.clone());
    let gamma = ClosedChristoffel::new(&family);
    let opts = ShootingOptions { initial_guess: GuessStrategy::Guide, ..opts.clone() };
    let shooter = Shooter::new(&gamma, opts).guide(&guide).region(projector_pair_region(problem.alpha0(), GAP_FLOOR));
    shooter.solve(&[1.0, 0.0], &[0.0, 1.0])
}

/// Linear map from `(x¹, x²)` to the Pauli coordinates of the effective
/// two-level block, and the 4-d endpoints (its two columns).
pub fn pauli_embedding(problem: &ProjectorPairProblem) -> Result<DMatrix<f64>> {
    let eff = EffectiveTwoLevel::new(problem)?;
    let reduced = eff.reduced();
    let pa = pauli_components(&reduced.hamiltonian(&[1.0, 0.0])?)?;
    let pb = pauli_components(&reduced.hamiltonian(&[0.0, 1.0])?)?;
    Ok(DMatrix::from_fn(4, 2, |r, c| if c == 0 { pa[r] } else { pb[r] }))
}

/// 4-d geodesic over [`PauliFamily`] between the Pauli components of
/// `P_a⊥` and `P_b⊥` in the effective basis, seeded by the embedded RC path.
pub fn pauli_geodesic(problem: &ProjectorPairProblem, opts: &ShootingOptions) -> Result<(Path, ShootingReport)> {
    let embed = pauli_embedding(problem)?;
    let guide = rc_path(problem, opts.steps_per_unit + 1)?.map_linear(&embed)?;
    let family = PauliFamily::new();
    let gamma = ClosedChristoffel::new(&family);
    let opts = ShootingOptions { initial_guess: GuessStrategy::Guide, ..opts.clone() };
    let start: Vec<f64> = embed.column(0).iter().copied().collect();
    let end: Vec<f64> = embed.column(1).iter().copied().collect();
    let shooter = Shooter::new(&gamma, opts).guide(&guide).region(|x: &[f64]| gap_pauli(x).is_ok_and(|g| g >= GAP_FLOOR));
    shooter.solve(&start, &end)
}

/// Length `∫ √(g_ij ẋⁱ ẋʲ) ds` by composite Simpson on the path samples.
pub fn path_length<G: MetricField + ?Sized>(g: &G, path: &Path) -> Result<f64> {
    let speeds = metric_speeds(g, path)?;
    simpson(path.s_grid(), &speeds)
}

/// `√(g_ij ẋⁱ ẋʲ)` at every sample.
pub fn metric_speeds<G: MetricField + ?Sized>(g: &G, path: &Path) -> Result<Vec<f64>> {
    if g.dim() != path.dim() {
        return Err(QabError::invalid("metric and path dimensions differ"));
    }
    path.points()
        .iter()
        .zip(path.velocities())
        .map(|(x, v)| {
            let gm = g.eval(x)?;
            let q = (gm * nalgebra::DVector::from_column_slice(v)).dot(&nalgebra::DVector::from_column_slice(v));
            Ok(q.max(0.0).sqrt())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AdiabaticMetric, FnMetric};
    use crate::hamiltonians::{build_grover, ProjectorPairFamily};

    #[test]
    fn analytic_boundary_identities() {
        for a in [0.1, 0.5, 1.0 / 2f64.sqrt(), 0.9] {
            assert_eq!(qab_1d_analytic(a, 0.0), 0.0);
            assert_eq!(qab_1d_analytic(a, 1.0), 1.0);
            assert!((qab_1d_analytic(a, 0.5) - 0.5).abs() < 1e-15);
            // the generic branch agrees with the pinned endpoints
            assert!(qab_1d_analytic(a, 1e-300).abs() < 1e-12);
            let mut prev = 0.0;
            for i in 1..=100 {
                let x = qab_1d_analytic(a, i as f64 / 100.0);
                assert!(x > prev);
                prev = x;
            }
        }
    }

    #[test]
    fn analytic_velocity_matches_difference() {
        let a = 0.125;
        let h = 1e-6;
        for s in [0.1, 0.37, 0.5, 0.8] {
            let fd = (qab_1d_analytic(a, s + h) - qab_1d_analytic(a, s - h)) / (2.0 * h);
            assert!((fd - qab_1d_velocity(a, s)).abs() < 1e-6 * fd.abs());
        }
    }

    #[test]
    fn rc_endpoints_and_symmetry() {
        let p = build_grover(1, 1).unwrap();
        let rc = rc_path(&p, DEFAULT_SAMPLES).unwrap();
        assert_eq!(rc.start(), &[1.0, 0.0]);
        assert_eq!(rc.end(), &[0.0, 1.0]);
        let (mid, _) = rc.sample(0.5).unwrap();
        assert!((mid[0] - 0.5).abs() < 1e-15 && (mid[1] - 0.5).abs() < 1e-15);
        let v = rc.velocities();
        let n = v.len();
        // the speed is smallest where the gap is
        let vmin = v.iter().map(|w| w[1]).fold(f64::MAX, f64::min);
        assert_eq!(v[n / 2][1], vmin);
        for i in 0..n {
            assert!((v[i][1] - v[n - 1 - i][1]).abs() < 1e-10);
        }
    }

    #[test]
    fn hermite_interpolation_is_exact_for_cubics() {
        let p = Path::from_fn(11, |s| (vec![s * s * s], vec![3.0 * s * s])).unwrap();
        for s in [0.03, 0.5, 0.77, 0.999] {
            let (x, v) = p.sample(s).unwrap();
            assert!((x[0] - s * s * s).abs() < 1e-14);
            assert!((v[0] - 3.0 * s * s).abs() < 1e-13);
        }
        assert!(p.sample(1.5).is_err());
    }

    #[test]
    fn invalid_paths_rejected() {
        assert!(Path::new(vec![0.0, 0.5], vec![vec![0.0]; 2], vec![vec![0.0]; 2]).is_err());
        assert!(Path::new(vec![0.0, 0.6, 0.6, 1.0], vec![vec![0.0]; 4], vec![vec![0.0]; 4]).is_err());
        assert!(Path::new(vec![0.0, 1.0], vec![vec![f64::NAN], vec![0.0]], vec![vec![0.0]; 2]).is_err());
    }

    #[test]
    fn flat_length_of_chord() {
        let g = FnMetric::new(2, |_: &[f64]| DMatrix::identity(2, 2));
        let len = path_length(&g, &linear_path(DEFAULT_SAMPLES).unwrap()).unwrap();
        assert!((len - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rc_length_is_parametrization_invariant() {
        let p = build_grover(3, 7).unwrap();
        let metric = AdiabaticMetric::new(ProjectorPairFamily::new(p.clone())).unwrap();
        let rc = rc_path(&p, DEFAULT_SAMPLES).unwrap();
        let direct = path_length(&metric, &rc).unwrap();
        let squared = rc.reparametrize(DEFAULT_SAMPLES, |u| u * u, |u| 2.0 * u).unwrap();
        let other = path_length(&metric, &squared).unwrap();
        assert!((direct - other).abs() < 1e-6, "{direct} vs {other}");
    }
}
