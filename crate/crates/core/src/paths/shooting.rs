//! Geodesic boundary-value problems by (multiple) shooting.
//!
//! The geodesic equation `ẍᵏ + Γᵏᵢⱼ ẋⁱ ẋʲ = 0` is integrated with fixed-step
//! RK4 on `[0, 1]`. Unknown initial data are found by damped Newton on the
//! endpoint residual with a finite-difference Jacobian. A single segment is
//! tried first; if no restart converges, the interval is split into more
//! segments whose node states become additional unknowns, which tames the
//! exponential sensitivity of long shots near the small-gap region.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Path;
use crate::error::{QabError, Result};
use crate::geometry::{Christoffel, ChristoffelField};
use crate::numerics::{integrate_final, integrate_ode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuessStrategy {
    /// Velocity along the straight chord `x_end − x_start`, rotated by fixed
    /// angles on restart.
    Chord,
    /// Node states sampled from a supplied guide path, with chord restarts as
    /// fallback.
    Guide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootingOptions {
    /// Newton iterations per attempt.
    pub max_iterations: usize,
    /// Largest allowed endpoint miss and node mismatch.
    pub residual_tolerance: f64,
    /// RK4 steps per unit `s`; also fixes the output sampling.
    pub steps_per_unit: usize,
    pub initial_guess: GuessStrategy,
    /// Segment counts tried in order; `1` is single shooting.
    pub segments: Vec<usize>,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            max_iterations: 60,
            residual_tolerance: 1e-8,
            steps_per_unit: 2000,
            initial_guess: GuessStrategy::Chord,
            segments: vec![1, 4, 8, 16],
        }
    }
}

impl ShootingOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tolerance > 0.0) {
            return Err(QabError::invalid("residual tolerance must be positive"));
        }
        if self.steps_per_unit < 100 {
            return Err(QabError::invalid("at least 100 integration steps per unit s are required"));
        }
        if self.max_iterations == 0 {
            return Err(QabError::invalid("max_iterations must be positive"));
        }
        if self.segments.is_empty() || self.segments.iter().any(|&k| k == 0 || k > self.steps_per_unit) {
            return Err(QabError::invalid("segment counts must be between 1 and steps_per_unit"));
        }
        Ok(())
    }
}

/// Diagnostics of a converged shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingReport {
    /// Largest endpoint miss or node mismatch.
    pub residual: f64,
    pub iterations: usize,
    pub segments: usize,
    /// Index of the initial guess that converged (0 is the unrotated one).
    pub attempt: usize,
}

/// Restart rotations in degrees, in the order they are tried.
const RESTART_ANGLES: [f64; 9] = [0.0, 15.0, -15.0, 30.0, -30.0, 45.0, -45.0, 60.0, -60.0];

type RegionFn<'a> = Box<dyn Fn(&[f64]) -> bool + Sync + 'a>;

/// Configurable geodesic boundary-value solver.
pub struct Shooter<'a, C: ?Sized> {
    gamma: &'a C,
    opts: ShootingOptions,
    regular: Option<RegionFn<'a>>,
    guide: Option<&'a Path>,
}

/// Solves the geodesic BVP with default region handling.
pub fn geodesic_shoot<C: ChristoffelField + ?Sized>(gamma: &C, start: &[f64], end: &[f64], opts: &ShootingOptions) -> Result<Path> {
    Shooter::new(gamma, opts.clone()).solve(start, end).map(|(p, _)| p)
}

enum Guess {
    Chord(f64),
    Guide,
}

impl<'a, C: ChristoffelField + ?Sized> Shooter<'a, C> {
    pub fn new(gamma: &'a C, opts: ShootingOptions) -> Self {
        Shooter { gamma, opts, regular: None, guide: None }
    }

    /// Converged trajectories must stay where `regular(x)` holds. Newton
    /// iterates may leave the region; a converged shot that does is discarded
    /// and the next restart is tried. If every converged shot left the region
    /// the solve reports [`QabError::RegionExit`].
    pub fn region<F>(mut self, regular: F) -> Self
    where
        F: Fn(&[f64]) -> bool + Sync + 'a,
    {
        self.regular = Some(Box::new(regular));
        self
    }

    pub fn guide(mut self, path: &'a Path) -> Self {
        self.guide = Some(path);
        self
    }

    pub fn solve(&self, start: &[f64], end: &[f64]) -> Result<(Path, ShootingReport)> {
        self.opts.validate()?;
        let m = self.gamma.dim();
        if start.len() != m || end.len() != m {
            return Err(QabError::invalid(format!("endpoints must be {m}-dimensional")));
        }
        if self.opts.initial_guess == GuessStrategy::Guide && self.guide.is_none() {
            return Err(QabError::invalid("guide strategy selected but no guide path supplied"));
        }
        if let Some(g) = self.guide {
            if g.dim() != m {
                return Err(QabError::invalid("guide path dimension does not match"));
            }
        }
        let mut guesses = Vec::new();
        if self.opts.initial_guess == GuessStrategy::Guide {
            guesses.push(Guess::Guide);
        }
        guesses.extend(RESTART_ANGLES.iter().map(|&a| Guess::Chord(a.to_radians())));

        let mut best = f64::INFINITY;
        let mut total_iterations = 0;
        let mut first_exit = None;
        for &k in &self.opts.segments {
            for (attempt, guess) in guesses.iter().enumerate() {
                let z0 = match self.initial_unknowns(guess, start, end, k) {
                    Ok(z) => z,
                    Err(_) => continue,
                };
                match self.newton(z0, start, end, k) {
                    Ok(Outcome::Converged { z, residual, iterations }) => {
                        let path = self.assemble(&z, start, k)?;
                        if let Some(s) = self.first_irregular(&path) {
                            first_exit.get_or_insert(QabError::RegionExit { s });
                            total_iterations += iterations;
                            continue;
                        }
                        let report = ShootingReport { residual, iterations, segments: k, attempt };
                        return Ok((path, report));
                    }
                    Ok(Outcome::Stalled { residual, iterations }) => {
                        best = best.min(residual);
                        total_iterations += iterations;
                    }
                    Err(_) => {}
                }
            }
        }
        match first_exit {
            Some(e) => Err(e),
            None => Err(QabError::ShootingFailure { iterations: total_iterations, best_residual: best }),
        }
    }

    fn first_irregular(&self, path: &Path) -> Option<f64> {
        let reg = self.regular.as_ref()?;
        path.points().iter().zip(path.s_grid()).find(|(x, _)| !reg(x)).map(|(_, &s)| s)
    }

    fn steps_per_segment(&self, k: usize) -> usize {
        self.opts.steps_per_unit.div_ceil(k)
    }

    fn initial_unknowns(&self, guess: &Guess, start: &[f64], end: &[f64], k: usize) -> Result<Vec<f64>> {
        let m = start.len();
        let chord: Vec<f64> = start.iter().zip(end).map(|(a, b)| b - a).collect();
        let node_state = |s: f64| -> Result<Vec<f64>> {
            match guess {
                Guess::Guide => {
                    let (x, v) = self.guide.expect("checked").sample(s)?;
                    Ok([x, v].concat())
                }
                Guess::Chord(angle) => {
                    let x: Vec<f64> = start.iter().zip(&chord).map(|(a, d)| a + s * d).collect();
                    Ok([x, rotate(&chord, *angle)].concat())
                }
            }
        };
        let mut z = node_state(0.0)?[m..].to_vec();
        for i in 1..k {
            z.extend(node_state(i as f64 / k as f64)?);
        }
        Ok(z)
    }

    fn rhs(&self, s: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let m = y.len() / 2;
        let (x, v) = y.split_at(m);
        let gamma: Christoffel = self.gamma.eval(x).map_err(|e| match e {
            QabError::SingularMetric { .. } | QabError::ZeroGap { .. } => QabError::RegionExit { s },
            other => other,
        })?;
        dy[..m].copy_from_slice(v);
        gamma.contract(v, &mut dy[m..]);
        for a in &mut dy[m..] {
            *a = -*a;
        }
        Ok(())
    }

    fn flow(&self, y: &[f64], seg: usize, k: usize) -> Result<Vec<f64>> {
        let (s0, s1) = (seg as f64 / k as f64, (seg + 1) as f64 / k as f64);
        integrate_final(|s, y, dy| self.rhs(s, y, dy), y, (s0, s1), self.steps_per_segment(k))
    }

    fn segment_start(&self, z: &[f64], start: &[f64], seg: usize) -> Vec<f64> {
        let m = start.len();
        if seg == 0 {
            [start, &z[..m]].concat()
        } else {
            let off = m + 2 * m * (seg - 1);
            z[off..off + 2 * m].to_vec()
        }
    }

    fn residual(&self, z: &[f64], start: &[f64], end: &[f64], k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let m = start.len();
        let mut r = Vec::with_capacity(z.len());
        let mut finals = Vec::with_capacity(k);
        for seg in 0..k {
            let y = self.segment_start(z, start, seg);
            let out = self.flow(&y, seg, k)?;
            if seg + 1 < k {
                let next = self.segment_start(z, start, seg + 1);
                r.extend(out.iter().zip(&next).map(|(a, b)| a - b));
            } else {
                r.extend(out[..m].iter().zip(end).map(|(a, b)| a - b));
            }
            finals.push(out);
        }
        Ok((r, finals))
    }

    fn jacobian(&self, z: &[f64], start: &[f64], k: usize) -> Result<DMatrix<f64>> {
        let m = start.len();
        let n = z.len();
        let mut jac = DMatrix::zeros(n, n);
        for seg in 0..k {
            let y = self.segment_start(z, start, seg);
            // unknown columns belonging to this segment's start state
            let (first_var, col0) = if seg == 0 { (m, 0) } else { (0, m + 2 * m * (seg - 1)) };
            let rows = if seg + 1 < k { 2 * m } else { m };
            let row0 = 2 * m * seg;
            for var in first_var..2 * m {
                let h = 1e-7 * (1.0 + y[var].abs());
                let mut yp = y.clone();
                yp[var] += h;
                let plus = self.flow(&yp, seg, k)?;
                yp[var] = y[var] - h;
                let minus = self.flow(&yp, seg, k)?;
                let col = col0 + var - first_var;
                for r in 0..rows {
                    jac[(row0 + r, col)] = (plus[r] - minus[r]) / (2.0 * h);
                }
            }
            if seg + 1 < k {
                let next_col = m + 2 * m * seg;
                for r in 0..2 * m {
                    jac[(row0 + r, next_col + r)] = -1.0;
                }
            }
        }
        Ok(jac)
    }

    fn newton(&self, mut z: Vec<f64>, start: &[f64], end: &[f64], k: usize) -> Result<Outcome> {
        let (mut r, _) = self.residual(&z, start, end, k)?;
        let mut norm = l2(&r);
        for it in 0..self.opts.max_iterations {
            let maxabs = r.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if maxabs <= self.opts.residual_tolerance {
                return Ok(Outcome::Converged { z, residual: maxabs, iterations: it });
            }
            let jac = self.jacobian(&z, start, k)?;
            let Some(step) = jac.lu().solve(&DVector::from_iterator(r.len(), r.iter().map(|v| -v))) else {
                return Ok(Outcome::Stalled { residual: maxabs, iterations: it });
            };
            let mut lambda = 1.0;
            let mut accepted = None;
            while lambda >= 1.0 / 1024.0 {
                let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
                if let Ok((rt, _)) = self.residual(&trial, start, end, k) {
                    let nt = l2(&rt);
                    if nt.is_finite() && nt < (1.0 - 1e-4 * lambda) * norm {
                        accepted = Some((trial, rt, nt));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((zt, rt, nt)) => {
                    z = zt;
                    r = rt;
                    norm = nt;
                }
                None => return Ok(Outcome::Stalled { residual: maxabs, iterations: it }),
            }
        }
        let maxabs = r.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if maxabs <= self.opts.residual_tolerance {
            return Ok(Outcome::Converged { z, residual: maxabs, iterations: self.opts.max_iterations });
        }
        Ok(Outcome::Stalled { residual: maxabs, iterations: self.opts.max_iterations })
    }

    fn assemble(&self, z: &[f64], start: &[f64], k: usize) -> Result<Path> {
        let m = start.len();
        let per = self.steps_per_segment(k);
        let total = per * k;
        let mut s = Vec::with_capacity(total + 1);
        let mut x = Vec::with_capacity(total + 1);
        let mut v = Vec::with_capacity(total + 1);
        for seg in 0..k {
            let y = self.segment_start(z, start, seg);
            let (s0, s1) = (seg as f64 / k as f64, (seg + 1) as f64 / k as f64);
            let traj = integrate_ode(|s, y, dy| self.rhs(s, y, dy), &y, (s0, s1), per)?;
            let take = if seg + 1 == k { per + 1 } else { per };
            for state in traj.states.iter().take(take) {
                x.push(state[..m].to_vec());
                v.push(state[m..].to_vec());
            }
        }
        for i in 0..=total {
            s.push(if i == total { 1.0 } else { i as f64 / total as f64 });
        }
        Path::new(s, x, v)
    }
}

enum Outcome {
    Converged { z: Vec<f64>, residual: f64, iterations: usize },
    Stalled { residual: f64, iterations: usize },
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Rotates `d` by `angle` inside the plane spanned by `d` and the coordinate
/// axis least aligned with it.
fn rotate(d: &[f64], angle: f64) -> Vec<f64> {
    if angle == 0.0 {
        return d.to_vec();
    }
    let norm = l2(d);
    if norm == 0.0 || d.len() < 2 {
        return d.to_vec();
    }
    let u: Vec<f64> = d.iter().map(|c| c / norm).collect();
    let axis = (0..d.len()).min_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs())).unwrap();
    let mut w: Vec<f64> = u.iter().map(|c| -c * u[axis]).collect();
    w[axis] += 1.0;
    let wn = l2(&w);
    let (c, s) = (angle.cos(), angle.sin());
    u.iter().zip(&w).map(|(a, b)| norm * (c * a + s * b / wn)).collect()
}
