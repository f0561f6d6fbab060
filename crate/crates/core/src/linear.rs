//! The flow linearized at the peakon, solved along characteristics.
//!
//! For data with `v0(0) = 0` every label `s` moves along `dX/dt = φ(X) − 1`
//! and the value, antiderivative and slope carried by it have closed forms
//! in terms of the single quantity
//!
//! ```text
//! B(t, s) = (e^t − 1) e^{-s}      s > 0
//! B(t, s) = (e^{-t} − 1) e^{s}    s < 0
//! ```
//!
//! namely `X_s = 1/(1+B)`, `W = w0 X_s`, `V = v0 + σ w0 B/(1+B)` and
//! `U = v0′(1+B) + σ v0 B − w0 B/(1+B)` with `σ = sign(s)`. The peak label is
//! fixed, `V` vanishes there, and the slope splits into `v0′(0−) e^{-t}` on
//! the left and `α e^t` on the right.

use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{PeakedField, Profile, Side, Span};
use crate::io;
use crate::kernel::{phi, phi_prime};
use crate::rk4;

/// Relative size of `v0(0)` tolerated as round-off before the data count as
/// leaving the admissible class.
const PEAK_VALUE_TOL: f64 = 1e-14;

/// `(e^t − 1) e^{-s}` for `s ≥ 0`, without overflow for large `t` or `s`.
fn growth(t: f64, s: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp_m1() * (t - s).exp()
    } else {
        t.exp_m1() * (-s).exp()
    }
}

/// `B(t, s)` for `s ≠ 0`; the sign of `s` selects the branch.
fn b_factor(t: f64, s: f64) -> f64 {
    if s > 0.0 {
        growth(t, s)
    } else {
        growth(-t, -s)
    }
}

/// `B/(1+B)`, evaluated as `1/(1+1/B)` once `B` dominates.
fn b_ratio(b: f64) -> f64 {
    if b.abs() > 1.0 {
        1.0 / (1.0 + 1.0 / b)
    } else {
        b / (1.0 + b)
    }
}

/// Position at time `t` of the characteristic with label `s`.
pub fn char_x(t: f64, s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else if s < 0.0 {
        -char_x(-t, -s)
    } else if s > t {
        // log(1 + (e^s − 1)e^{-t}) = (s − t) + log(1 + (e^t − 1)e^{-s})
        (s - t) + growth(t, s).ln_1p()
    } else {
        growth(s, t).ln_1p()
    }
}

/// `∂X/∂s` off the peak label.
pub fn jacobian_xs(t: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Err(Error::Input(
            "jacobian at the peak label is one-sided; use jacobian_xs_at_peak".into(),
        ));
    }
    Ok(1.0 / (1.0 + b_factor(t, s)))
}

/// One-sided limits `X_s(t, 0±) = e^{∓t}`.
pub fn jacobian_xs_at_peak(t: f64, side: Side) -> f64 {
    match side {
        Side::Negative => t.exp(),
        Side::Positive => (-t).exp(),
    }
}

/// Characteristic surfaces of the linearized flow at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearState {
    pub t: f64,
    pub labels: Vec<f64>,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    /// Slope seen from the left; differs from `u_right` only at the peak.
    pub u_left: Vec<f64>,
    pub u_right: Vec<f64>,
    /// `v0′(0+)`.
    pub alpha: f64,
    pub peak: usize,
}

impl LinearState {
    /// The solution `v(t, ·)` sampled at the current positions.
    pub fn to_field(&self) -> Result<PeakedField> {
        PeakedField::new(
            self.labels.clone(),
            self.x.clone(),
            self.v.clone(),
            self.u_left.clone(),
            self.u_right.clone(),
        )
    }

    /// Trapezoid `‖v(t)‖²_{H¹}` of one half-line, measured on the deformed grid.
    pub fn h1_norm_sq(&self, side: Side) -> Result<f64> {
        Ok(self.to_field()?.h1_norm_sq(side.into()))
    }

    /// `(U(t, 0−), U(t, 0+))`.
    pub fn peak_slopes(&self) -> (f64, f64) {
        (self.u_left[self.peak], self.u_right[self.peak])
    }

    /// Writes `t, s_label, X, V, U_left, U_right, W`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = io::csv_writer(path)?;
        out.write_record(["t", "s_label", "X", "V", "U_left", "U_right", "W"])?;
        let t = io::fmt17(self.t);
        for i in 0..self.labels.len() {
            out.write_record([
                t.clone(),
                io::fmt17(self.labels[i]),
                io::fmt17(self.x[i]),
                io::fmt17(self.v[i]),
                io::fmt17(self.u_left[i]),
                io::fmt17(self.u_right[i]),
                io::fmt17(self.w[i]),
            ])?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

fn check_peak_value(v0: &PeakedField) -> Result<()> {
    let value = v0.value_at_peak();
    let (sup, _) = v0.sup_norms();
    if value.abs() > PEAK_VALUE_TOL * sup.max(1.0) {
        return Err(Error::JumpGeneration { value });
    }
    Ok(())
}

pub fn solve_linear(v0: &PeakedField, t: f64) -> Result<LinearState> {
    solve_linear_with(v0, t, Exec::default())
}

/// Closed-form solution at time `t`; the data are read at their positions,
/// which become the labels.
pub fn solve_linear_with(v0: &PeakedField, t: f64, exec: Exec) -> Result<LinearState> {
    if !t.is_finite() {
        return Err(Error::Input(format!("time {t} is not finite")));
    }
    check_peak_value(v0)?;
    let labels = v0.positions().to_vec();
    let w0 = v0.cumulative_from_zero();
    let p = v0.peak_index();
    let (slope0_left, alpha) = v0.peak_slopes();

    let nodes = exec.map(labels.len(), |i| {
        if i == p {
            return [0.0, 0.0, 0.0, slope0_left * (-t).exp(), alpha * t.exp()];
        }
        let s = labels[i];
        let sigma = s.signum();
        let b = b_factor(t, s);
        let ratio = b_ratio(b);
        let (v, d, w) = (v0.values()[i], v0.slope_left()[i], w0[i]);
        let u = d * (1.0 + b) + sigma * v * b - w * ratio;
        [char_x(t, s), w / (1.0 + b), v + sigma * w * ratio, u, u]
    });

    let mut state = LinearState {
        t,
        labels,
        x: Vec::with_capacity(nodes.len()),
        w: Vec::with_capacity(nodes.len()),
        v: Vec::with_capacity(nodes.len()),
        u_left: Vec::with_capacity(nodes.len()),
        u_right: Vec::with_capacity(nodes.len()),
        alpha,
        peak: p,
    };
    for [x, w, v, ul, ur] in nodes {
        state.x.push(x);
        state.w.push(w);
        state.v.push(v);
        state.u_left.push(ul);
        state.u_right.push(ur);
    }
    Ok(state)
}

fn trapezoid_on_side(v0: &PeakedField, side: Side, f: impl Fn(usize, f64) -> f64) -> f64 {
    // `f(i, slope)` receives the one-sided slope belonging to the cell.
    let p = v0.peak_index();
    let cells = match side {
        Side::Negative => 0..p,
        Side::Positive => p..v0.len() - 1,
    };
    cells
        .map(|c| {
            0.5 * v0.width(c) * (f(c, v0.slope_right()[c]) + f(c + 1, v0.slope_left()[c + 1]))
        })
        .sum()
}

/// `∫_side φ (v0² + ½ v0′²)`.
fn weighted_density(v0: &PeakedField, side: Side) -> f64 {
    let x = v0.positions();
    let v = v0.values();
    trapezoid_on_side(v0, side, |i, d| phi(x[i]) * (v[i] * v[i] + 0.5 * d * d))
}

/// Predicted `‖v(t)‖²_{H¹}` on one half-line:
/// `‖v0‖² + 2(e^{±t} − 1) ∫ φ (v0² + ½ v0′²)` over that half-line.
pub fn h1_identity_rhs(v0: &PeakedField, t: f64, side: Side) -> Result<f64> {
    check_peak_value(v0)?;
    let factor = match side {
        Side::Positive => t.exp_m1(),
        Side::Negative => (-t).exp_m1(),
    };
    Ok(v0.h1_norm_sq(side.into()) + 2.0 * factor * weighted_density(v0, side))
}

/// `(‖v(t)‖²_{L²}, ‖v_x(t)‖²_{L²})` on one half-line from the label-space
/// integrals left after integrating by parts in the solved surfaces.
pub fn h1_norm_sq_by_parts(v0: &PeakedField, t: f64, side: Side) -> Result<(f64, f64)> {
    check_peak_value(v0)?;
    let x = v0.positions();
    let v = v0.values();
    let w0 = v0.cumulative_from_zero();
    let b_at = |i: usize| {
        if x[i] == 0.0 {
            match side {
                Side::Positive => t.exp_m1(),
                Side::Negative => (-t).exp_m1(),
            }
        } else {
            b_factor(t, x[i])
        }
    };
    let l2 = trapezoid_on_side(v0, side, |i, _| {
        let b = b_at(i);
        let q = 1.0 + b;
        v[i] * v[i] / q + w0[i] * w0[i] * b / (q * q * q)
    });
    let der = trapezoid_on_side(v0, side, |i, d| {
        let b = b_at(i);
        let q = 1.0 + b;
        d * d * q + 2.0 * v[i] * v[i] * b + v[i] * v[i] * b / q - w0[i] * w0[i] * b / (q * q * q)
    });
    Ok((l2, der))
}

/// `A v` sampled with both one-sided values at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSidedSample {
    pub positions: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub peak: usize,
}

impl TwoSidedSample {
    /// `(Av)(0−), (Av)(0+)`.
    pub fn peak_values(&self) -> (f64, f64) {
        (self.left[self.peak], self.right[self.peak])
    }
}

/// `(Av)(x) = [1 − φ(x)] v′(x) + φ(x) ∫_0^x v − v(0) φ′(x)`.
///
/// At the peak the two one-sided limits are `∓v(0)·φ′(0±) = ±v(0)`, so data
/// not vanishing there are torn apart instantly.
pub fn apply_a(v: &PeakedField) -> TwoSidedSample {
    let x = v.positions();
    let w = v.cumulative_from_zero();
    let v_peak = v.value_at_peak();
    let eval = |i: usize, slope: f64, dphi: f64| {
        (1.0 - phi(x[i])) * slope + phi(x[i]) * w[i] - v_peak * dphi
    };
    let mut left = Vec::with_capacity(x.len());
    let mut right = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        if i == v.peak_index() {
            left.push(eval(i, v.slope_left()[i], 1.0));
            right.push(eval(i, v.slope_right()[i], -1.0));
        } else {
            let dphi = phi_prime(x[i]);
            left.push(eval(i, v.slope_left()[i], dphi));
            right.push(eval(i, v.slope_right()[i], dphi));
        }
    }
    TwoSidedSample {
        positions: x.to_vec(),
        left,
        right,
        peak: v.peak_index(),
    }
}

/// Right-hand side of the characteristic system for `(X, W, V, U)`;
/// `dphi_at_peak` supplies `φ′(0±)` when `X = 0`.
fn characteristic_rhs(y: &[f64; 4], dphi_at_peak: f64) -> [f64; 4] {
    let [x, w, v, u] = *y;
    let f = phi(x);
    let df = if x == 0.0 { dphi_at_peak } else { phi_prime(x) };
    [f - 1.0, df * w, f * w, -df * u + f * v + df * w]
}

/// Independent oracle: RK4 on the characteristic ODEs for every label.
pub fn linear_ode_reference(v0: &PeakedField, t_end: f64, dt: f64) -> Result<LinearState> {
    linear_ode_reference_with(v0, t_end, dt, Exec::default())
}

pub fn linear_ode_reference_with(
    v0: &PeakedField,
    t_end: f64,
    dt: f64,
    exec: Exec,
) -> Result<LinearState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Input(format!("time step {dt} must be positive")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Input(format!("end time {t_end} must be non-negative")));
    }
    check_peak_value(v0)?;
    let labels = v0.positions().to_vec();
    let w0 = v0.cumulative_from_zero();
    let p = v0.peak_index();
    let (steps, h) = rk4::step_plan(t_end, dt);

    let run = |y0: [f64; 4], dphi_at_peak: f64| -> Result<[f64; 4]> {
        let mut y = y0;
        for k in 0..steps {
            let t = k as f64 * h;
            y = rk4::step_array(|_, y| characteristic_rhs(y, dphi_at_peak), t, y, h);
            if y.iter().any(|c| !c.is_finite()) {
                return Err(Error::Integration {
                    t: t + h,
                    reason: "non-finite characteristic state".into(),
                });
            }
        }
        Ok(y)
    };

    let nodes = exec.map(labels.len(), |i| -> Result<[f64; 5]> {
        let y0 = |slope: f64| [labels[i], w0[i], v0.values()[i], slope];
        if i == p {
            let l = run(y0(v0.slope_left()[i]), 1.0)?;
            let r = run(y0(v0.slope_right()[i]), -1.0)?;
            Ok([r[0], r[1], r[2], l[3], r[3]])
        } else {
            let y = run(y0(v0.slope_left()[i]), 0.0)?;
            Ok([y[0], y[1], y[2], y[3], y[3]])
        }
    });

    let n = labels.len();
    let mut state = LinearState {
        t: t_end,
        labels,
        x: Vec::with_capacity(n),
        w: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        u_left: Vec::with_capacity(n),
        u_right: Vec::with_capacity(n),
        alpha: v0.peak_slopes().1,
        peak: p,
    };
    for node in nodes {
        let [x, w, v, ul, ur] = node?;
        state.x.push(x);
        state.w.push(w);
        state.v.push(v);
        state.u_left.push(ul);
        state.u_right.push(ur);
    }
    Ok(state)
}

/// Converts a profile of `v0` into the solution profile `v(t, ·)`.
pub fn evolve_profile(v0: &PeakedField, t: f64) -> Result<Profile> {
    Ok(solve_linear(v0, t)?.to_field()?.into_profile())
}

/// Half-line bounds on the solution that hold for integrable data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupBounds {
    pub value_positive: f64,
    pub value_negative: f64,
    pub slope_negative: f64,
}

/// `sup|v0| + ‖v0‖_{L¹(0,∞)}`, `2 sup|v0|` on `x < 0`, and
/// `sup|v0′| + 2 sup|v0|` on `x < 0`.
pub fn sup_bounds(v0: &PeakedField) -> SupBounds {
    let (vp, _) = v0.sup_norms_on(Side::Positive);
    let (vn, dn) = v0.sup_norms_on(Side::Negative);
    SupBounds {
        value_positive: vp + v0.l1_norm(Span::Positive),
        value_negative: 2.0 * vn,
        slope_negative: dn + 2.0 * vn,
    }
}
