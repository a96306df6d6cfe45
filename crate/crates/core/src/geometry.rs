//! Riemannian structure of the control manifold.
//!
//! The adiabatic metric is `g_ij(x) = Tr[∂ᵢH ∂ⱼH] / Δ⁴(x)`; for linear
//! families this is `C / Δ⁴`. Christoffel symbols use the Levi-Civita
//! convention `Γᵏᵢⱼ = ½ g^{kl}(∂ᵢg_{jl} + ∂ⱼg_{il} − ∂ₗg_{ij})` and the
//! curvature `Rᵏ_{lij} = ∂ᵢΓᵏⱼₗ − ∂ⱼΓᵏᵢₗ + ΓᵏᵢₘΓᵐⱼₗ − ΓᵏⱼₘΓᵐᵢₗ`, lowered as
//! `R_{klij} = g_{kp} Rᵖ_{lij}`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QabError, Result};
use crate::hamiltonians::{check_point, overlap_by_trace, ParametrizedHamiltonian, ProjectorPairFamily, ProjectorPairProblem};
use crate::GAP_FLOOR;

/// Default step of the finite differences of `g` inside Christoffel symbols.
pub const H_GAMMA: f64 = 1e-4;
/// Default step of the finite differences of `Γ` inside the curvature.
pub const H_RIEMANN: f64 = 1e-3;

pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;

    /// Symmetric positive-definite `g(x)`.
    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>>;
}

impl<G: MetricField + ?Sized> MetricField for &G {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        (**self).eval(x)
    }
}

pub trait ChristoffelField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Result<Christoffel>;
}

impl<G: ChristoffelField + ?Sized> ChristoffelField for &G {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> Result<Christoffel> {
        (**self).eval(x)
    }
}

/// Connection coefficients `Γᵏᵢⱼ` at one point, symmetric in `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Christoffel { dim, data: vec![0.0; dim * dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.dim + i) * self.dim + j
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[self.idx(k, i, j)]
    }

    /// Sets both `Γᵏᵢⱼ` and `Γᵏⱼᵢ`.
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let a = self.idx(k, i, j);
        let b = self.idx(k, j, i);
        self.data[a] = v;
        self.data[b] = v;
    }

    /// Geodesic acceleration term `Γᵏᵢⱼ vⁱ vʲ`.
    pub fn contract(&self, v: &[f64], out: &mut [f64]) {
        let m = self.dim;
        for (k, o) in out.iter_mut().enumerate().take(m) {
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    acc += self.get(k, i, j) * v[i] * v[j];
                }
            }
            *o = acc;
        }
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

fn singular(x: &[f64]) -> QabError {
    QabError::SingularMetric { x: x.to_vec() }
}

fn checked_gap<H: ParametrizedHamiltonian>(h: &H, x: &[f64]) -> Result<f64> {
    match h.gap(x) {
        Ok(d) if d > 0.0 && d.is_finite() => Ok(d),
        Ok(_) | Err(QabError::ZeroGap { .. }) => Err(singular(x)),
        Err(e) => Err(e),
    }
}

/// `g_ij = Tr[∂ᵢH ∂ⱼH] / Δ⁴`, with the traces taken on the dense
/// derivative matrices.
pub fn metric_eval<H: ParametrizedHamiltonian>(h: &H, x: &[f64]) -> Result<DMatrix<f64>> {
    check_point(x, h.param_dim())?;
    let d = checked_gap(h, x)?;
    Ok(overlap_by_trace(h) / d.powi(4))
}

/// The adiabatic metric of a linear family in interaction coordinates,
/// `g(x) = C / Δ⁴(x)`.
#[derive(Debug, Clone)]
pub struct AdiabaticMetric<H> {
    family: H,
}

impl<H: ParametrizedHamiltonian> AdiabaticMetric<H> {
    /// Fails unless the stored overlap matrix is symmetric positive definite.
    pub fn new(family: H) -> Result<Self> {
        let c = family.overlap();
        if (c - c.transpose()).amax() > 1e-12 * c.amax().max(1.0) || c.clone().cholesky().is_none() {
            return Err(QabError::invalid("overlap matrix C is not symmetric positive definite"));
        }
        Ok(AdiabaticMetric { family })
    }

    pub fn family(&self) -> &H {
        &self.family
    }
}

impl<H: ParametrizedHamiltonian> MetricField for AdiabaticMetric<H> {
    fn dim(&self) -> usize {
        self.family.param_dim()
    }

    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_point(x, self.dim())?;
        let d = checked_gap(&self.family, x)?;
        Ok(self.family.overlap() / d.powi(4))
    }
}

/// Metric given by a closure; used for reference geometries.
pub struct FnMetric<F> {
    dim: usize,
    f: F,
}

impl<F> FnMetric<F>
where
    F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnMetric { dim, f }
    }
}

impl<F> MetricField for FnMetric<F>
where
    F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_point(x, self.dim)?;
        let g = (self.f)(x);
        if g.iter().any(|v| !v.is_finite()) || g.clone().cholesky().is_none() {
            return Err(singular(x));
        }
        Ok(g)
    }
}

/// Closed-form connection of `C/Δ⁴`:
/// `Γᵏᵢⱼ = 2(Cᵢⱼ C^{kl} ∂ₗΔ − δᵏᵢ ∂ⱼΔ − δᵏⱼ ∂ᵢΔ) / Δ`.
pub fn christoffel_closed<H: ParametrizedHamiltonian>(h: &H, x: &[f64]) -> Result<Christoffel> {
    check_point(x, h.param_dim())?;
    let m = h.param_dim();
    let d = checked_gap(h, x)?;
    let grad = h.gap_gradient(x)?;
    let c = h.overlap();
    let c_inv = c.clone().try_inverse().ok_or_else(|| singular(x))?;
    let raised: Vec<f64> = (0..m).map(|k| (0..m).map(|l| c_inv[(k, l)] * grad[l]).sum()).collect();
    let mut gamma = Christoffel::zeros(m);
    for k in 0..m {
        for i in 0..m {
            for j in i..m {
                let mut v = c[(i, j)] * raised[k];
                if k == i {
                    v -= grad[j];
                }
                if k == j {
                    v -= grad[i];
                }
                gamma.set(k, i, j, 2.0 * v / d);
            }
        }
    }
    Ok(gamma)
}

/// [`christoffel_closed`] as a field.
#[derive(Debug, Clone)]
pub struct ClosedChristoffel<H> {
    family: H,
}

impl<H: ParametrizedHamiltonian> ClosedChristoffel<H> {
    pub fn new(family: H) -> Self {
        ClosedChristoffel { family }
    }
}

impl<H: ParametrizedHamiltonian> ChristoffelField for ClosedChristoffel<H> {
    fn dim(&self) -> usize {
        self.family.param_dim()
    }

    fn eval(&self, x: &[f64]) -> Result<Christoffel> {
        christoffel_closed(&self.family, x)
    }
}

/// Metric derivatives `∂ₗ g_ij` by central differences.
fn metric_gradient<G: MetricField + ?Sized>(g: &G, x: &[f64], h: f64) -> Result<Vec<DMatrix<f64>>> {
    let m = g.dim();
    let mut xp = x.to_vec();
    (0..m)
        .map(|l| {
            xp[l] = x[l] + h;
            let plus = g.eval(&xp);
            xp[l] = x[l] - h;
            let minus = g.eval(&xp);
            xp[l] = x[l];
            match (plus, minus) {
                (Ok(p), Ok(mi)) => Ok((p - mi) / (2.0 * h)),
                _ => Err(singular(x)),
            }
        })
        .collect()
}

/// Levi-Civita connection by central differences of `g` with step `h`.
pub fn christoffel_fd<G: MetricField + ?Sized>(g: &G, x: &[f64], h: f64) -> Result<Christoffel> {
    check_point(x, g.dim())?;
    if !(h > 0.0) {
        return Err(QabError::invalid("finite-difference step must be positive"));
    }
    let m = g.dim();
    let g0 = g.eval(x)?;
    let g_inv = g0.try_inverse().ok_or_else(|| singular(x))?;
    let dg = metric_gradient(g, x, h)?;
    let mut gamma = Christoffel::zeros(m);
    for k in 0..m {
        for i in 0..m {
            for j in i..m {
                let mut acc = 0.0;
                for l in 0..m {
                    acc += g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gamma.set(k, i, j, 0.5 * acc);
            }
        }
    }
    Ok(gamma)
}

/// [`christoffel_fd`] as a field.
pub struct FdChristoffel<G> {
    metric: G,
    step: f64,
}

impl<G: MetricField> FdChristoffel<G> {
    pub fn new(metric: G, step: f64) -> Self {
        FdChristoffel { metric, step }
    }
}

impl<G: MetricField> ChristoffelField for FdChristoffel<G> {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<Christoffel> {
        christoffel_fd(&self.metric, x, self.step)
    }
}

/// Finite-difference steps for curvature evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdSteps {
    pub gamma: f64,
    pub riemann: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        FdSteps { gamma: H_GAMMA, riemann: H_RIEMANN }
    }
}

/// Fully covariant curvature at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSample {
    pub x: Vec<f64>,
    dim: usize,
    /// `R_{ijkl}` flattened row-major over `(i, j, k, l)`.
    pub riemann: Vec<f64>,
    pub r1212: f64,
    /// Gaussian curvature `R₁₂₁₂ / det g` (2-d only).
    pub gaussian: Option<f64>,
}

impl CurvatureSample {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let m = self.dim;
        self.riemann[((i * m + j) * m + k) * m + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.riemann.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Curvature from nested central differences: `Γ` from `g` with step
/// `steps.gamma`, then `∂Γ` with step `steps.riemann`.
pub fn riemann_tensor<G: MetricField + ?Sized>(g: &G, x: &[f64], steps: FdSteps) -> Result<CurvatureSample> {
    let gamma = FdChristoffel::new(g, steps.gamma);
    riemann_with(g, &gamma, x, steps.riemann)
}

/// Curvature using a supplied connection and central differences of it.
pub fn riemann_with<G, C>(g: &G, gamma: &C, x: &[f64], h: f64) -> Result<CurvatureSample>
where
    G: MetricField + ?Sized,
    C: ChristoffelField + ?Sized,
{
    check_point(x, g.dim())?;
    let m = g.dim();
    let g0 = g.eval(x)?;
    let c0 = gamma.eval(x)?;
    let mut xp = x.to_vec();
    // dgamma[i] = ∂ᵢΓ
    let mut dgamma = Vec::with_capacity(m);
    for i in 0..m {
        xp[i] = x[i] + h;
        let plus = gamma.eval(&xp)?;
        xp[i] = x[i] - h;
        let minus = gamma.eval(&xp)?;
        xp[i] = x[i];
        let d: Vec<f64> = plus.data.iter().zip(&minus.data).map(|(p, q)| (p - q) / (2.0 * h)).collect();
        dgamma.push(Christoffel { dim: m, data: d });
    }
    // upper[k][l][i][j] = Rᵏ_{lij}
    let mut upper = vec![0.0; m * m * m * m];
    let at = |a: usize, b: usize, c: usize, d: usize| ((a * m + b) * m + c) * m + d;
    for k in 0..m {
        for l in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let mut v = dgamma[i].get(k, j, l) - dgamma[j].get(k, i, l);
                    for p in 0..m {
                        v += c0.get(k, i, p) * c0.get(p, j, l) - c0.get(k, j, p) * c0.get(p, i, l);
                    }
                    upper[at(k, l, i, j)] = v;
                }
            }
        }
    }
    let mut lowered = vec![0.0; m * m * m * m];
    for a in 0..m {
        for l in 0..m {
            for i in 0..m {
                for j in 0..m {
                    lowered[at(a, l, i, j)] = (0..m).map(|p| g0[(a, p)] * upper[at(p, l, i, j)]).sum();
                }
            }
        }
    }
    // difference errors break R_abcd = -R_bacd = R_cdab; project them out so
    // the estimate transforms exactly under coordinate permutations
    let mut sym = vec![0.0; m * m * m * m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let first = lowered[at(a, b, c, d)] - lowered[at(b, a, c, d)];
                    let second = lowered[at(c, d, a, b)] - lowered[at(d, c, a, b)];
                    sym[at(a, b, c, d)] = 0.25 * (first + second);
                }
            }
        }
    }
    let lowered = sym;
    let r1212 = if m >= 2 { lowered[at(0, 1, 0, 1)] } else { 0.0 };
    let gaussian = (m == 2).then(|| r1212 / g0.determinant());
    Ok(CurvatureSample { x: x.to_vec(), dim: m, riemann: lowered, r1212, gaussian })
}

/// Axis of a rectangular grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x1: GridAxis,
    pub x2: GridAxis,
}

/// One grid cell: `sample` is `None` when the point is masked.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub x1: f64,
    pub x2: f64,
    pub gap: f64,
    pub sample: Option<CurvatureSample>,
}

impl GridPoint {
    pub fn masked(&self) -> bool {
        self.sample.is_none()
    }
}

/// Curvature of any 2-d metric over a grid, row-major with `x1` as the
/// slow index. Points whose gap is below `gap_floor`, or whose stencil fails,
/// are masked.
pub fn curvature_grid_with<G, F>(g: &G, gap: F, grid: &GridSpec, steps: FdSteps, gap_floor: f64) -> Vec<GridPoint>
where
    G: MetricField + ?Sized,
    F: Fn(&[f64]) -> f64 + Sync,
{
    let xs1 = grid.x1.values();
    let xs2 = grid.x2.values();
    let cells: Vec<(f64, f64)> = xs1.iter().flat_map(|&a| xs2.iter().map(move |&b| (a, b))).collect();
    cells
        .par_iter()
        .map(|&(x1, x2)| {
            let x = [x1, x2];
            let delta = gap(&x);
            let sample = if delta >= gap_floor && delta.is_finite() {
                riemann_tensor(g, &x, steps)
                    .ok()
                    .filter(|s| s.r1212.is_finite() && s.gaussian.is_some_and(f64::is_finite))
            } else {
                None
            };
            GridPoint { x1, x2, gap: delta, sample }
        })
        .collect()
}

/// Curvature surface `R₁₂₁₂(x¹, x²)` of a projector-pair problem.
pub fn curvature_grid(problem: &ProjectorPairProblem, grid: &GridSpec, steps: FdSteps, gap_floor: f64) -> Result<Vec<GridPoint>> {
    let family = ProjectorPairFamily::new(problem.clone());
    let alpha0 = family.alpha0();
    let metric = AdiabaticMetric::new(family)?;
    Ok(curvature_grid_with(
        &metric,
        |x| crate::hamiltonians::gap_projector_pair(x, alpha0).unwrap_or(0.0),
        grid,
        steps,
        gap_floor,
    ))
}

/// Grid with the default gap floor.
pub fn curvature_grid_default(problem: &ProjectorPairProblem, grid: &GridSpec) -> Result<Vec<GridPoint>> {
    curvature_grid(problem, grid, FdSteps::default(), GAP_FLOOR)
}
