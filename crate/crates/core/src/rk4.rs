//! Classical fixed-step RK4 over a flat state vector.

use crate::error::Result;

pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }

    /// Advances `y` from `t` to `t + dt` in place. On error `y` is untouched.
    pub fn step<F>(&mut self, rhs: &mut F, t: f64, y: &mut [f64], dt: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let half = 0.5 * dt;
        rhs(t, y, &mut self.k1)?;
        axpy(&mut self.stage, y, half, &self.k1);
        rhs(t + half, &self.stage, &mut self.k2)?;
        axpy(&mut self.stage, y, half, &self.k2);
        rhs(t + half, &self.stage, &mut self.k3)?;
        axpy(&mut self.stage, y, dt, &self.k3);
        rhs(t + dt, &self.stage, &mut self.k4)?;
        let sixth = dt / 6.0;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

fn axpy(out: &mut [f64], y: &[f64], h: f64, k: &[f64]) {
    for ((o, &yi), &ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + h * ki;
    }
}

/// Single RK4 step for small fixed-size systems.
#[inline]
pub(crate) fn step_array<const D: usize, F>(f: F, t: f64, y: [f64; D], dt: f64) -> [f64; D]
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let shift = |k: &[f64; D], h: f64| {
        let mut s = y;
        for (si, ki) in s.iter_mut().zip(k) {
            *si += h * ki;
        }
        s
    };
    let k1 = f(t, &y);
    let k2 = f(t + 0.5 * dt, &shift(&k1, 0.5 * dt));
    let k3 = f(t + 0.5 * dt, &shift(&k2, 0.5 * dt));
    let k4 = f(t + dt, &shift(&k3, dt));
    let mut out = y;
    for i in 0..D {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Splits `[0, t_end]` into equal steps no longer than `dt`.
pub(crate) fn step_plan(t_end: f64, dt: f64) -> (usize, f64) {
    if t_end <= 0.0 {
        return (0, dt);
    }
    let n = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    (n, t_end / n as f64)
}
