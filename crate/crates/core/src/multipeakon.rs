//! The N-peakon system `u = Σ m_j φ(x − x_j)`:
//!
//! ```text
//! dx_k/dt = Σ_j m_j φ(x_k − x_j)              = u(x_k)
//! dm_k/dt = −Σ_j m_k m_j φ′(x_k − x_j)
//! ```
//!
//! with `φ′(0) = 0` on the diagonal. The amplitude sum and
//! `H = ½ Σ m_i m_j φ(x_i − x_j)` are conserved.

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::Profile;
use crate::io;
use crate::kernel::{phi, phi_prime};
use crate::rk4;

/// Adjacent positions closer than this count as a collision.
pub const COLLISION_GAP: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct MultipeakonState {
    pub x: Vec<f64>,
    pub m: Vec<f64>,
}

impl MultipeakonState {
    pub fn new(x: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        if x.len() != m.len() || x.is_empty() {
            return Err(Error::Structural(format!(
                "{} positions for {} amplitudes",
                x.len(),
                m.len()
            )));
        }
        if x.iter().chain(&m).any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite position or amplitude".into()));
        }
        if let Some(i) = x.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Structural(format!(
                "positions not strictly increasing at index {i}"
            )));
        }
        Ok(Self { x, m })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `u(x) = Σ m_j φ(x − x_j)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.x.iter().zip(&self.m).map(|(&xj, &mj)| mj * phi(x - xj)).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.m.iter().sum()
    }

    fn smallest_gap(&self) -> Option<(usize, f64)> {
        self.x
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i, w[1] - w[0]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// `(dx/dt, dm/dt)`; pair terms are accumulated antisymmetrically so the
/// amplitude rates sum to zero up to round-off.
pub fn mp_rhs(state: &MultipeakonState) -> (Vec<f64>, Vec<f64>) {
    let n = state.len();
    let (x, m) = (&state.x, &state.m);
    let mut dx: Vec<f64> = m.to_vec();
    let mut dm = vec![0.0; n];
    for k in 0..n {
        for j in k + 1..n {
            let d = x[k] - x[j];
            let e = phi(d);
            dx[k] += m[j] * e;
            dx[j] += m[k] * e;
            let f = m[k] * m[j] * phi_prime(d);
            dm[k] -= f;
            dm[j] += f;
        }
    }
    (dx, dm)
}

/// `H = ½ Σ_{i,j} m_i m_j φ(x_i − x_j)`.
pub fn mp_hamiltonian(state: &MultipeakonState) -> f64 {
    let n = state.len();
    let (x, m) = (&state.x, &state.m);
    let mut h = 0.5 * m.iter().map(|mk| mk * mk).sum::<f64>();
    for k in 0..n {
        for j in k + 1..n {
            h += m[k] * m[j] * phi(x[k] - x[j]);
        }
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Collision {
    pub t: f64,
    /// The pair `(index, index + 1)` that met.
    pub index: usize,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultipeakonTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MultipeakonState>,
    pub collision: Option<Collision>,
}

impl MultipeakonTrajectory {
    pub fn last(&self) -> &MultipeakonState {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Writes `t, x_1..x_N, m_1..m_N, H, sum_m`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let n = self.states[0].len();
        let mut out = io::csv_writer(path)?;
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|k| format!("x_{k}")));
        header.extend((1..=n).map(|k| format!("m_{k}")));
        header.push("H".into());
        header.push("sum_m".into());
        out.write_record(&header)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![io::fmt17(*t)];
            row.extend(s.x.iter().map(|&v| io::fmt17(v)));
            row.extend(s.m.iter().map(|&v| io::fmt17(v)));
            row.push(io::fmt17(mp_hamiltonian(s)));
            row.push(io::fmt17(s.total_mass()));
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// RK4 with every step recorded; halts (without error) at the first
/// collision and reports it in the trajectory.
pub fn mp_integrate(state0: &MultipeakonState, t_end: f64, dt: f64) -> Result<MultipeakonTrajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Input(format!("time step {dt} must be positive")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Input(format!("end time {t_end} must be non-negative")));
    }
    let n = state0.len();
    let (steps, h) = rk4::step_plan(t_end, dt);
    let mut times = vec![0.0];
    let mut states = vec![state0.clone()];
    let mut y: Vec<f64> = state0.x.iter().chain(&state0.m).copied().collect();
    let mut stepper = rk4::Rk4::new(2 * n);
    let mut f = |_: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let s = MultipeakonState {
            x: y[..n].to_vec(),
            m: y[n..].to_vec(),
        };
        let (dx, dm) = mp_rhs(&s);
        dy[..n].copy_from_slice(&dx);
        dy[n..].copy_from_slice(&dm);
        Ok(())
    };
    let mut collision = None;
    for k in 0..steps {
        stepper.step(&mut f, k as f64 * h, &mut y, h)?;
        let t = (k + 1) as f64 * h;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                t,
                reason: "non-finite peakon state".into(),
            });
        }
        let s = MultipeakonState {
            x: y[..n].to_vec(),
            m: y[n..].to_vec(),
        };
        let gap = s.smallest_gap();
        times.push(t);
        states.push(s);
        if let Some((index, gap)) = gap {
            if gap < COLLISION_GAP {
                collision = Some(Collision { t, index, gap });
                break;
            }
        }
    }
    Ok(MultipeakonTrajectory {
        times,
        states,
        collision,
    })
}

/// Samples `u` on `grid` with the peak positions inserted as nodes, so the
/// corner of each peakon carries its own one-sided slopes.
pub fn reconstruct(state: &MultipeakonState, grid: &[f64]) -> Result<Profile> {
    let mut nodes: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|g| state.x.iter().all(|xk| (g - xk).abs() > 1e-12 * xk.abs().max(1.0)))
        .chain(state.x.iter().copied())
        .collect();
    nodes.sort_by(f64::total_cmp);
    let values = nodes.iter().map(|&x| state.eval(x)).collect();
    let slope = |x: f64, side: f64| -> f64 {
        state
            .x
            .iter()
            .zip(&state.m)
            .map(|(&xk, &mk)| {
                let d = x - xk;
                // At the crest take the limit from the requested side.
                let s = if d == 0.0 { -side } else { -d.signum() };
                mk * s * phi(d)
            })
            .sum()
    };
    let left = nodes.iter().map(|&x| slope(x, -1.0)).collect();
    let right = nodes.iter().map(|&x| slope(x, 1.0)).collect();
    Profile::new(nodes, values, left, right)
}
