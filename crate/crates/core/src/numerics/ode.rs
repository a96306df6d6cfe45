//! Classical fixed-step fourth-order Runge–Kutta.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{QabError, Result};

/// Scalar entry of an ODE state vector.
pub trait OdeScalar: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> {
    fn is_finite(self) -> bool;
}

impl OdeScalar for f64 {
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl OdeScalar for Complex64 {
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// All intermediate samples of a fixed-step integration, including both ends.
#[derive(Debug, Clone)]
pub struct Trajectory<E> {
    pub s: Vec<f64>,
    pub states: Vec<Vec<E>>,
}

impl<E: Copy> Trajectory<E> {
    pub fn last(&self) -> &[E] {
        self.states.last().expect("trajectory always holds the initial state")
    }
}

struct Rk4<E> {
    k1: Vec<E>,
    k2: Vec<E>,
    k3: Vec<E>,
    k4: Vec<E>,
    tmp: Vec<E>,
}

impl<E: OdeScalar> Rk4<E> {
    fn new(n: usize) -> Self {
        Rk4 {
            k1: vec![E::default(); n],
            k2: vec![E::default(); n],
            k3: vec![E::default(); n],
            k4: vec![E::default(); n],
            tmp: vec![E::default(); n],
        }
    }

    fn step<F>(&mut self, f: &mut F, s: f64, h: f64, y: &mut [E]) -> Result<()>
    where
        F: FnMut(f64, &[E], &mut [E]) -> Result<()>,
    {
        f(s, y, &mut self.k1)?;
        check_finite(&self.k1, s)?;
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k1[i] * (0.5 * h);
        }
        f(s + 0.5 * h, &self.tmp, &mut self.k2)?;
        check_finite(&self.k2, s + 0.5 * h)?;
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k2[i] * (0.5 * h);
        }
        f(s + 0.5 * h, &self.tmp, &mut self.k3)?;
        check_finite(&self.k3, s + 0.5 * h)?;
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k3[i] * h;
        }
        f(s + h, &self.tmp, &mut self.k4)?;
        check_finite(&self.k4, s + h)?;
        for i in 0..y.len() {
            y[i] = y[i] + (self.k1[i] + self.k2[i] * 2.0 + self.k3[i] * 2.0 + self.k4[i]) * (h / 6.0);
        }
        Ok(())
    }
}

fn check_finite<E: OdeScalar>(v: &[E], s: f64) -> Result<()> {
    if v.iter().all(|e| e.is_finite()) {
        Ok(())
    } else {
        Err(QabError::Divergence { s })
    }
}

fn validate(s_range: (f64, f64), steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(QabError::invalid("integration needs at least one step"));
    }
    if !(s_range.0.is_finite() && s_range.1.is_finite()) {
        return Err(QabError::invalid("integration range must be finite"));
    }
    Ok(())
}

/// Integrates `y' = f(s, y)` over `s_range` with `steps` equal RK4 steps and
/// records every intermediate state.
///
/// The derivative callback writes into its output slice and may fail; any
/// non-finite derivative aborts with [`QabError::Divergence`] naming `s`.
pub fn integrate_ode<E, F>(mut f: F, y0: &[E], s_range: (f64, f64), steps: usize) -> Result<Trajectory<E>>
where
    E: OdeScalar,
    F: FnMut(f64, &[E], &mut [E]) -> Result<()>,
{
    validate(s_range, steps)?;
    let (s0, s1) = s_range;
    let h = (s1 - s0) / steps as f64;
    let mut rk = Rk4::new(y0.len());
    let mut y = y0.to_vec();
    let mut traj = Trajectory { s: Vec::with_capacity(steps + 1), states: Vec::with_capacity(steps + 1) };
    traj.s.push(s0);
    traj.states.push(y.clone());
    for k in 0..steps {
        let s = s0 + k as f64 * h;
        rk.step(&mut f, s, h, &mut y)?;
        traj.s.push(if k + 1 == steps { s1 } else { s0 + (k + 1) as f64 * h });
        traj.states.push(y.clone());
    }
    Ok(traj)
}

/// Same stepping as [`integrate_ode`] but only returns the final state.
pub fn integrate_final<E, F>(mut f: F, y0: &[E], s_range: (f64, f64), steps: usize) -> Result<Vec<E>>
where
    E: OdeScalar,
    F: FnMut(f64, &[E], &mut [E]) -> Result<()>,
{
    validate(s_range, steps)?;
    let (s0, s1) = s_range;
    let h = (s1 - s0) / steps as f64;
    let mut rk = Rk4::new(y0.len());
    let mut y = y0.to_vec();
    for k in 0..steps {
        rk.step(&mut f, s0 + k as f64 * h, h, &mut y)?;
    }
    Ok(y)
}
