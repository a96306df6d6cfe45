//! One-dimensional geodesics by inverting the cumulative length.

use super::{uniform_grid, Path};
use crate::error::{QabError, Result};
use crate::hamiltonians::gap_projector_pair;

const PANELS: usize = 4096;

// 8-point Gauss–Legendre nodes and weights on [-1, 1]
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

fn gauss<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64) -> Result<f64> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = 0.0;
    for (t, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        acc += w * f(mid + half * t)?;
    }
    Ok(acc * half)
}

/// Constant-speed solution of `√g(x) ẋ = const` from `x_start` to `x_end`:
/// `x(s) = ℓ⁻¹(s · ℓ(x_end))` with `ℓ(x) = ∫ √g`.
pub fn geodesic_1d_quadrature<F>(g: F, x_start: f64, x_end: f64, samples: usize) -> Result<Path>
where
    F: Fn(f64) -> f64,
{
    if samples < 2 || !(x_start.is_finite() && x_end.is_finite()) || x_start == x_end {
        return Err(QabError::invalid("need distinct finite endpoints and at least two samples"));
    }
    let span = x_end - x_start;
    // density of length in the unit coordinate u, x = x_start + u·span
    let density = |u: f64| -> Result<f64> {
        let x = x_start + u * span;
        let gx = g(x);
        if !(gx > 0.0) || !gx.is_finite() {
            return Err(QabError::SingularMetric { x: vec![x] });
        }
        Ok(gx.sqrt() * span.abs())
    };
    let mut cum = vec![0.0; PANELS + 1];
    for j in 0..PANELS {
        let (a, b) = (j as f64 / PANELS as f64, (j + 1) as f64 / PANELS as f64);
        cum[j + 1] = cum[j] + gauss(&density, a, b)?;
    }
    let total = cum[PANELS];
    let s_grid = uniform_grid(samples);
    let mut x = Vec::with_capacity(samples);
    let mut xdot = Vec::with_capacity(samples);
    for &s in &s_grid {
        let target = s * total;
        let u = if s == 0.0 {
            0.0
        } else if s == 1.0 {
            1.0
        } else {
            invert(&density, &cum, target)?
        };
        let pos = x_start + u * span;
        x.push(vec![pos]);
        // du/ds = L / density(u), dx/ds = span · du/ds
        xdot.push(vec![span * total / density(u)?]);
    }
    Path::new(s_grid, x, xdot)
}

fn invert<F: Fn(f64) -> Result<f64>>(density: &F, cum: &[f64], target: f64) -> Result<f64> {
    let j = cum.partition_point(|&c| c <= target).saturating_sub(1).min(PANELS - 1);
    let (mut lo, mut hi) = (j as f64 / PANELS as f64, (j + 1) as f64 / PANELS as f64);
    let base = lo;
    let residual = |u: f64| -> Result<f64> { Ok(cum[j] + gauss(density, base, u)? - target) };
    let mut u = lo + (hi - lo) * ((target - cum[j]) / (cum[j + 1] - cum[j])).clamp(0.0, 1.0);
    for _ in 0..60 {
        let r = residual(u)?;
        if r > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        if r.abs() <= 1e-15 * cum[PANELS].max(1.0) {
            break;
        }
        let newton = u - r / density(u)?;
        u = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(u)
}

/// Metric of the projector-pair problem restricted to `x¹ = 1 − x`, `x² = x`:
/// `g(x) = 2(1 − α₀²) / Δ⁴(1 − x, x)`.
pub fn grover_constrained_metric(alpha0: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        gap_projector_pair(&[1.0 - x, x], alpha0)
            .map(|d| 2.0 * (1.0 - alpha0 * alpha0) / d.powi(4))
            .unwrap_or(0.0)
    }
}
