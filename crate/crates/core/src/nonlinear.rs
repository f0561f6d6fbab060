//! The full peaked-perturbation system along characteristics.
//!
//! In coordinates moving with the peak the perturbation obeys
//! `v_t = (1 − φ) v_x + φ w + (v(0) − v) v_x − Q[v]`, `w = ∫_0^x v`, and the
//! peak drifts by `da/dt = v(t, 0)`. Each label carries its position `X`,
//! value `V`, slope `U` and Jacobian `X_s`:
//!
//! ```text
//! dX/dt   = φ(X) − 1 + V − V0
//! dV/dt   = φ(X) w(X) − Q[v](X)
//! dU/dt   = −φ′(X) U + φ(X) V + φ′(X) w(X) − ½U² + V² − P[v](X)
//! dX_s/dt = (φ′(X) + U) X_s
//! ```
//!
//! The peak label never moves. Its value and the two one-sided slopes follow
//! the trace equations `dV0/dt = −Q[v](0)` and
//! `dU0±/dt = ±U0± + V0 − ½U0±² + V0² − P[v](0)`, so nothing is ever
//! differenced across the corner. `w`, `Q` and `P` are rebuilt on the deformed
//! grid at every Runge–Kutta stage.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{graded_grid, PeakedField, Profile, Span};
use crate::io;
use crate::kernel::{phi, phi_prime, quadratic_sweeps, Density};
use crate::rk4::{self, Rk4};

/// Parameters of the corner-exponential family `v0(x) = −2ε² x e^{-|x|/μ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialDataSpec {
    pub epsilon: f64,
    pub mu: f64,
}

impl InitialDataSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(Error::Config(format!(
                "epsilon = {} must lie in (0, 0.5]",
                self.epsilon
            )));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::Config(format!("mu = {} must lie in (0, 1]", self.mu)));
        }
        Ok(())
    }

    /// `‖v0‖_{H¹} = ε² √(2μ(1 + μ²))` on the whole line.
    pub fn h1_norm(&self) -> f64 {
        self.epsilon.powi(2) * (2.0 * self.mu * (1.0 + self.mu * self.mu)).sqrt()
    }

    /// `log 2 − 2 log ε`: the time by which `|V0 + U0⁺| ≥ ε² e^t` reaches 2.
    pub fn tau(&self) -> f64 {
        std::f64::consts::LN_2 - 2.0 * self.epsilon.ln()
    }
}

/// Samples `v0(x) = −2ε² x e^{-|x|/μ}`: zero at the peak with
/// `v0′(0±) = −2ε² = −sup|v0′|`.
pub fn build_initial_data(spec: InitialDataSpec, grid: &[f64]) -> Result<PeakedField> {
    spec.validate()?;
    let p = grid
        .iter()
        .position(|&x| x == 0.0)
        .ok_or_else(|| Error::Config("grid has no node at 0".into()))?;
    let h_peak = if p == 0 || p + 1 == grid.len() {
        return Err(Error::Config("the peak must be an interior node".into()));
    } else {
        (grid[p] - grid[p - 1]).max(grid[p + 1] - grid[p])
    };
    let limit = spec.mu / 10.0;
    if h_peak > limit * (1.0 + 1e-9) {
        return Err(Error::Config(format!(
            "grid spacing {h_peak:e} at the peak does not resolve mu = {} (need <= {limit:e})",
            spec.mu
        )));
    }
    let c = -2.0 * spec.epsilon * spec.epsilon;
    let mu = spec.mu;
    PeakedField::sample_smooth(
        |x| c * x * (-x.abs() / mu).exp(),
        |x| c * (-x.abs() / mu).exp() * (1.0 - x.abs() / mu),
        grid,
    )
}

/// Default grid for the experiments: graded on `[-30, 30]`, 8001 nodes,
/// spacing `μ/10` at the peak.
pub fn default_grid(mu: f64) -> Result<Vec<f64>> {
    graded_grid(30.0, 8001, mu / 10.0)
}

/// Offsets into the flat state vector
/// `[X(n), V(n), U(n), X_s(n), U0−, X_s0−, a, J]`; at the peak index the
/// generic slots hold `0`, `V0`, `U0⁺` and `X_s0⁺`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Layout {
    n: usize,
}

impl Layout {
    fn x(self) -> std::ops::Range<usize> {
        0..self.n
    }
    fn v(self) -> std::ops::Range<usize> {
        self.n..2 * self.n
    }
    fn u(self) -> std::ops::Range<usize> {
        2 * self.n..3 * self.n
    }
    fn xs(self) -> std::ops::Range<usize> {
        3 * self.n..4 * self.n
    }
    fn u0_minus(self) -> usize {
        4 * self.n
    }
    fn xs0_minus(self) -> usize {
        4 * self.n + 1
    }
    fn a(self) -> usize {
        4 * self.n + 2
    }
    fn j(self) -> usize {
        4 * self.n + 3
    }
    fn dim(self) -> usize {
        4 * self.n + 4
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearState {
    pub t: f64,
    labels: Vec<f64>,
    peak: usize,
    y: Vec<f64>,
}

impl NonlinearState {
    /// State at `t = 0`; labels are the node positions of `v0`.
    pub fn initial(v0: &PeakedField) -> Self {
        let n = v0.len();
        let lay = Layout { n };
        let p = v0.peak_index();
        let mut y = vec![0.0; lay.dim()];
        y[lay.x()].copy_from_slice(v0.positions());
        y[lay.v()].copy_from_slice(v0.values());
        y[lay.u()].copy_from_slice(v0.slope_right());
        y[lay.xs()].fill(1.0);
        y[lay.u0_minus()] = v0.slope_left()[p];
        y[lay.xs0_minus()] = 1.0;
        Self {
            t: 0.0,
            labels: v0.positions().to_vec(),
            peak: p,
            y,
        }
    }

    fn layout(&self) -> Layout {
        Layout {
            n: self.labels.len(),
        }
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }
    pub fn peak_index(&self) -> usize {
        self.peak
    }
    pub fn x(&self) -> &[f64] {
        &self.y[self.layout().x()]
    }
    pub fn v(&self) -> &[f64] {
        &self.y[self.layout().v()]
    }
    /// Slopes; the peak entry is `U0⁺`.
    pub fn u(&self) -> &[f64] {
        &self.y[self.layout().u()]
    }
    /// Jacobians; the peak entry is `X_s(t, 0+)`.
    pub fn xs(&self) -> &[f64] {
        &self.y[self.layout().xs()]
    }
    pub fn v0(&self) -> f64 {
        self.v()[self.peak]
    }
    pub fn u0_plus(&self) -> f64 {
        self.u()[self.peak]
    }
    pub fn u0_minus(&self) -> f64 {
        self.y[self.layout().u0_minus()]
    }
    pub fn xs0_minus(&self) -> f64 {
        self.y[self.layout().xs0_minus()]
    }
    /// Peak shift `a(t)`; the crest sits at `t + a(t)`.
    pub fn a(&self) -> f64 {
        self.y[self.layout().a()]
    }
    /// `∫_0^t e^{-τ} V0(τ)² dτ`.
    pub fn trace_integral(&self) -> f64 {
        self.y[self.layout().j()]
    }

    /// `v(t, ·)` at the current positions.
    pub fn to_field(&self) -> Result<PeakedField> {
        let (left, right) = split_slopes(self.u(), self.peak, self.u0_minus());
        PeakedField::new(
            self.labels.clone(),
            self.x().to_vec(),
            self.v().to_vec(),
            left,
            right,
        )
    }

    /// `u = φ + v` in peak-centred coordinates.
    pub fn full_profile(&self) -> Result<Profile> {
        let x = self.x();
        let values = x.iter().zip(self.v()).map(|(&x, &v)| phi(x) + v).collect();
        let (mut left, mut right) = split_slopes(self.u(), self.peak, self.u0_minus());
        for i in 0..x.len() {
            if i == self.peak {
                left[i] += 1.0;
                right[i] -= 1.0;
            } else {
                let d = phi_prime(x[i]);
                left[i] += d;
                right[i] += d;
            }
        }
        Profile::new(x.to_vec(), values, left, right)
    }

    /// Smallest slope, both peak traces included.
    pub fn min_slope(&self) -> f64 {
        self.u().iter().copied().fold(self.u0_minus(), f64::min)
    }

    /// Smallest Jacobian, both peak traces included.
    pub fn min_jacobian(&self) -> f64 {
        self.xs().iter().copied().fold(self.xs0_minus(), f64::min)
    }

    /// `sup |v_x|`, both peak traces included.
    pub fn sup_slope(&self) -> f64 {
        self.u()
            .iter()
            .fold(self.u0_minus().abs(), |m, u| m.max(u.abs()))
    }

    /// `max(|v|)` over the two outermost nodes: what truncation at the grid
    /// ends discards.
    pub fn tail_magnitude(&self) -> f64 {
        let v = self.v();
        v[0].abs().max(v[v.len() - 1].abs())
    }
}

fn split_slopes(u: &[f64], peak: usize, u0_minus: f64) -> (Vec<f64>, Vec<f64>) {
    let right = u.to_vec();
    let mut left = right.clone();
    left[peak] = u0_minus;
    (left, right)
}

/// `‖u(t) − φ(· − ξ(t))‖_{H¹}`, which in peak-centred coordinates is `‖v‖_{H¹}`.
pub fn orbital_stability_monitor(state: &NonlinearState) -> Result<f64> {
    Ok(state.to_field()?.h1_norm_sq(Span::Whole).sqrt())
}

/// `E(φ + v) = E(φ) + 4 v(0) + E(v)` with `E(φ) = 2`; the cross term
/// integrates by parts to the corner contribution.
pub fn energy_of_perturbed(field: &PeakedField) -> f64 {
    2.0 + 4.0 * field.value_at_peak() + field.h1_norm_sq(Span::Whole)
}

/// `F0 = −Q[v](0) − P[v](0)` two ways: from the operator sweeps, and as
/// `−∫_0^∞ e^{-y} (v² + ½ v_y²) dy` by a corrected trapezoid rule.
pub fn f0_forms(field: &PeakedField, exec: Exec) -> Result<(f64, f64)> {
    let sweeps = quadratic_sweeps(field, exec)?;
    let p = field.peak_index();
    let q = 0.5 * (sweeps.right[p] - sweeps.left[p]);
    let pp = 0.5 * (sweeps.right[p] + sweeps.left[p]);

    let d = Density::quadratic(field);
    let x = field.positions();
    // g = e^{-y} a, g′ = e^{-y}(a′ − a)
    let mut moment = 0.0;
    for c in p..field.len() - 1 {
        let h = x[c + 1] - x[c];
        let (e0, e1) = ((-x[c]).exp(), (-x[c + 1]).exp());
        let g0 = e0 * d.right[c];
        let g1 = e1 * d.left[c + 1];
        let dg0 = e0 * (d.d_right[c] - d.right[c]);
        let dg1 = e1 * (d.d_left[c + 1] - d.left[c + 1]);
        moment += 0.5 * h * (g0 + g1) + h * h / 12.0 * (dg0 - dg1);
    }
    Ok((-q - pp, -moment))
}

/// Evaluates the right-hand side for a fixed label set.
struct System {
    labels: Vec<f64>,
    peak: usize,
    lay: Layout,
    exec: Exec,
}

impl System {
    fn field(&self, t: f64, y: &[f64]) -> Result<PeakedField> {
        let x = &y[self.lay.x()];
        if let Some(i) = x.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::CharacteristicCrossing { t, index: i });
        }
        let (left, right) = split_slopes(&y[self.lay.u()], self.peak, y[self.lay.u0_minus()]);
        PeakedField::new(
            self.labels.clone(),
            x.to_vec(),
            y[self.lay.v()].to_vec(),
            left,
            right,
        )
        .map_err(|e| match e {
            Error::Input(reason) => Error::Integration { t, reason },
            other => other,
        })
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let lay = self.lay;
        let p = self.peak;
        let field = self.field(t, y)?;
        let w = field.cumulative_from_zero();
        let sweeps = quadratic_sweeps(&field, self.exec)?;

        let x = &y[lay.x()];
        let v = &y[lay.v()];
        let u = &y[lay.u()];
        let xs = &y[lay.xs()];
        let v0 = v[p];

        let rates = self.exec.map(lay.n, |i| {
            let q = 0.5 * (sweeps.right[i] - sweeps.left[i]);
            let pp = 0.5 * (sweeps.right[i] + sweeps.left[i]);
            if i == p {
                let up = u[p];
                let d_u = up + v0 - 0.5 * up * up + v0 * v0 - pp;
                return [0.0, -q, d_u, (-1.0 + up) * xs[p]];
            }
            let (f, df) = (phi(x[i]), phi_prime(x[i]));
            let (vi, ui) = (v[i], u[i]);
            [
                f - 1.0 + vi - v0,
                f * w[i] - q,
                -df * ui + f * vi + df * w[i] - 0.5 * ui * ui + vi * vi - pp,
                (df + ui) * xs[i],
            ]
        });
        for (i, r) in rates.iter().enumerate() {
            dy[lay.x().start + i] = r[0];
            dy[lay.v().start + i] = r[1];
            dy[lay.u().start + i] = r[2];
            dy[lay.xs().start + i] = r[3];
        }

        let pp = 0.5 * (sweeps.right[p] + sweeps.left[p]);
        let um = y[lay.u0_minus()];
        dy[lay.u0_minus()] = -um + v0 - 0.5 * um * um + v0 * v0 - pp;
        dy[lay.xs0_minus()] = (1.0 + um) * y[lay.xs0_minus()];
        dy[lay.a()] = v0;
        dy[lay.j()] = (-t).exp() * v0 * v0;
        Ok(())
    }
}

/// Time derivatives of every component of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateRates {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// Peak entry is `dU0⁺/dt`.
    pub u: Vec<f64>,
    pub xs: Vec<f64>,
    pub u0_minus: f64,
    pub xs0_minus: f64,
    pub a: f64,
}

impl StateRates {
    pub fn v0(&self, peak: usize) -> f64 {
        self.v[peak]
    }
}

pub fn rhs(state: &NonlinearState) -> Result<StateRates> {
    rhs_with(state, Exec::default())
}

pub fn rhs_with(state: &NonlinearState, exec: Exec) -> Result<StateRates> {
    let lay = state.layout();
    let sys = System {
        labels: state.labels.clone(),
        peak: state.peak,
        lay,
        exec,
    };
    let mut dy = vec![0.0; lay.dim()];
    sys.eval(state.t, &state.y, &mut dy)?;
    Ok(StateRates {
        x: dy[lay.x()].to_vec(),
        v: dy[lay.v()].to_vec(),
        u: dy[lay.u()].to_vec(),
        xs: dy[lay.xs()].to_vec(),
        u0_minus: dy[lay.u0_minus()],
        xs0_minus: dy[lay.xs0_minus()],
        a: dy[lay.a()],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    SlopeUnbounded,
    CharacteristicCompression,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::SlopeUnbounded => "slope_unbounded",
            Mechanism::CharacteristicCompression => "characteristic_compression",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupReport {
    pub triggered: bool,
    pub t_break: Option<f64>,
    pub mechanism: Option<Mechanism>,
    pub min_slope: f64,
    pub min_jacobian: f64,
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunRecord {
    pub t: f64,
    pub a: f64,
    pub energy: f64,
    pub momentum: f64,
    pub h1_v: f64,
    pub sup_vx: f64,
    pub v0: f64,
    pub u0_minus: f64,
    pub u0_plus: f64,
    pub min_xs: f64,
    /// `(|α|/2) e^t`, i.e. `ε² e^t` for the corner-exponential family.
    pub lower_bound: f64,
    /// `e^t [V0(0) + U0⁺(0) + ∫_0^t e^{-τ} V0² dτ]`, an upper bound for `V0 + U0⁺`.
    pub trace_bound: f64,
}

impl RunRecord {
    fn from_state(state: &NonlinearState, initial_trace: f64, alpha: f64) -> Result<Self> {
        let field = state.to_field()?;
        let et = state.t.exp();
        Ok(Self {
            t: state.t,
            a: state.a(),
            energy: energy_of_perturbed(&field),
            momentum: state.full_profile()?.momentum_f(),
            h1_v: field.h1_norm_sq(Span::Whole).sqrt(),
            sup_vx: state.sup_slope(),
            v0: state.v0(),
            u0_minus: state.u0_minus(),
            u0_plus: state.u0_plus(),
            min_xs: state.min_jacobian(),
            lower_bound: 0.5 * alpha.abs() * et,
            trace_bound: et * (initial_trace + state.trace_integral()),
        })
    }
}

/// Writes `t, a, E, F, h1_v, sup_vx, V0, U0_minus, U0_plus, min_Xs,
/// lower_bound_eps2_et`.
pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut out = io::csv_writer(path)?;
    out.write_record([
        "t",
        "a",
        "E",
        "F",
        "h1_v",
        "sup_vx",
        "V0",
        "U0_minus",
        "U0_plus",
        "min_Xs",
        "lower_bound_eps2_et",
    ])?;
    for r in records {
        out.write_record(
            [
                r.t, r.a, r.energy, r.momentum, r.h1_v, r.sup_vx, r.v0, r.u0_minus, r.u0_plus,
                r.min_xs, r.lower_bound,
            ]
            .map(io::fmt17),
        )?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub t_end: f64,
    pub slope_floor: f64,
    pub jacobian_floor: f64,
    /// Keep every k-th state in the trajectory besides the first and last.
    pub snapshot_every: Option<usize>,
    pub exec: Exec,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            slope_floor: -50.0,
            jacobian_floor: 1e-6,
            snapshot_every: None,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Integration {
    pub trajectory: Vec<NonlinearState>,
    pub report: BlowupReport,
    pub records: Vec<RunRecord>,
}

impl Integration {
    pub fn final_state(&self) -> &NonlinearState {
        self.trajectory.last().expect("trajectory holds the initial state")
    }
}

pub fn integrate(v0: &PeakedField, opts: &IntegrateOptions) -> Result<Integration> {
    integrate_until(v0, opts, |_| false)
}

/// Fixed-step RK4 until `t_end`, a breakdown, or `stop(record)` holds.
///
/// A nonzero `v0(0)` is admissible: it only sets the initial drift of the
/// peak through `da/dt = V0`.
pub fn integrate_until<S>(v0: &PeakedField, opts: &IntegrateOptions, mut stop: S) -> Result<Integration>
where
    S: FnMut(&RunRecord) -> bool,
{
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::Input(format!("time step {} must be positive", opts.dt)));
    }
    if !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(Error::Input(format!(
            "end time {} must be non-negative",
            opts.t_end
        )));
    }
    let mut state = NonlinearState::initial(v0);
    let lay = state.layout();
    let sys = System {
        labels: state.labels.clone(),
        peak: state.peak,
        lay,
        exec: opts.exec,
    };
    let alpha = state.u0_plus();
    let initial_trace = state.v0() + alpha;

    let mut records = vec![RunRecord::from_state(&state, initial_trace, alpha)?];
    let mut trajectory = vec![state.clone()];
    let mut report = BlowupReport {
        triggered: false,
        t_break: None,
        mechanism: None,
        min_slope: state.min_slope(),
        min_jacobian: state.min_jacobian(),
    };
    let check = |s: &NonlinearState, report: &mut BlowupReport| {
        report.min_slope = report.min_slope.min(s.min_slope());
        report.min_jacobian = report.min_jacobian.min(s.min_jacobian());
        let mechanism = if s.min_slope() <= opts.slope_floor {
            Some(Mechanism::SlopeUnbounded)
        } else if s.min_jacobian() <= opts.jacobian_floor {
            Some(Mechanism::CharacteristicCompression)
        } else {
            None
        };
        if let Some(m) = mechanism {
            report.triggered = true;
            report.t_break = Some(s.t);
            report.mechanism = Some(m);
        }
    };
    check(&state, &mut report);

    let (steps, h) = rk4::step_plan(opts.t_end, opts.dt);
    let mut stepper = Rk4::new(lay.dim());
    let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| sys.eval(t, y, dy);
    let mut stopped = report.triggered || stop(&records[0]);
    let mut k = 0;
    while !stopped && k < steps {
        let t = k as f64 * h;
        match stepper.step(&mut rhs, t, &mut state.y, h) {
            Ok(()) => {}
            Err(Error::CharacteristicCrossing { .. }) => {
                report.triggered = true;
                report.t_break = Some(t);
                report.mechanism = Some(Mechanism::CharacteristicCompression);
                report.min_jacobian = 0.0;
                break;
            }
            Err(e) => return Err(e),
        }
        k += 1;
        state.t = (k as f64) * h;
        if state.y.iter().any(|c| !c.is_finite()) {
            return Err(Error::Integration {
                t: state.t,
                reason: "non-finite state after step".into(),
            });
        }
        let record = RunRecord::from_state(&state, initial_trace, alpha)?;
        check(&state, &mut report);
        stopped = report.triggered || stop(&record);
        records.push(record);
        if let Some(every) = opts.snapshot_every {
            if every > 0 && k % every == 0 && !stopped && k < steps {
                trajectory.push(state.clone());
            }
        }
    }
    if trajectory.last() != Some(&state) {
        trajectory.push(state);
    }
    Ok(Integration {
        trajectory,
        report,
        records,
    })
}

#[derive(Clone, Debug)]
pub struct InstabilityOutcome {
    /// First recorded time with `sup |v_x| > 1`.
    pub t0: Option<f64>,
    pub tau: f64,
    pub spec: InitialDataSpec,
    pub records: Vec<RunRecord>,
    pub report: BlowupReport,
    pub final_state: NonlinearState,
    pub initial_h1: f64,
    /// Whether `‖v0‖_{H¹} < (ε/3)⁴`, the smallness under which orbital
    /// stability keeps `‖v‖_{H¹} < ε`.
    pub stability_hypothesis_holds: bool,
    pub tail_magnitude: f64,
}

/// Runs the corner-exponential data until `sup |v_x|` first exceeds 1.
pub fn instability_experiment(epsilon: f64, mu: f64, t_max: f64, dt: f64) -> Result<InstabilityOutcome> {
    let spec = InitialDataSpec { epsilon, mu };
    spec.validate()?;
    let opts = IntegrateOptions {
        dt,
        t_end: t_max,
        ..IntegrateOptions::default()
    };
    instability_experiment_on(spec, &default_grid(mu)?, &opts)
}

pub fn instability_experiment_on(
    spec: InitialDataSpec,
    grid: &[f64],
    opts: &IntegrateOptions,
) -> Result<InstabilityOutcome> {
    let v0 = build_initial_data(spec, grid)?;
    let initial_h1 = v0.h1_norm_sq(Span::Whole).sqrt();
    let mut t0 = None;
    let run = integrate_until(&v0, opts, |r| {
        if r.sup_vx > 1.0 {
            t0 = Some(r.t);
            true
        } else {
            false
        }
    })?;
    let final_state = run.final_state().clone();
    Ok(InstabilityOutcome {
        t0,
        tau: spec.tau(),
        spec,
        records: run.records,
        report: run.report,
        tail_magnitude: final_state.tail_magnitude(),
        final_state,
        initial_h1,
        stability_hypothesis_holds: initial_h1 < (spec.epsilon / 3.0).powi(4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::uniform_grid;
    use approx::assert_relative_eq;

    fn small_grid() -> Vec<f64> {
        uniform_grid(20.0, 801).unwrap()
    }

    #[test]
    fn initial_data_contract() {
        let spec = InitialDataSpec {
            epsilon: 0.25,
            mu: 0.01,
        };
        let grid = default_grid(0.01).unwrap();
        let v0 = build_initial_data(spec, &grid).unwrap();
        assert_eq!(v0.value_at_peak(), 0.0);
        let (l, r) = v0.peak_slopes();
        assert_relative_eq!(r, -0.125, epsilon = 1e-15);
        assert_relative_eq!(l, -0.125, epsilon = 1e-15);
        assert_relative_eq!(v0.sup_norms().1, 0.125, epsilon = 1e-15);
        assert_relative_eq!(spec.h1_norm(), 0.008_839, epsilon = 1e-6);
        // Trapezoid error scales as (h/μ)²: about 1% at h = μ/10, so the
        // closed form is checked on a grid ten times finer at the peak.
        let fine = graded_grid(30.0, 20001, 0.0001).unwrap();
        let v_fine = build_initial_data(spec, &fine).unwrap();
        assert_relative_eq!(
            v_fine.h1_norm_sq(Span::Whole).sqrt(),
            spec.h1_norm(),
            max_relative = 1e-4
        );
        assert_relative_eq!(
            v0.h1_norm_sq(Span::Whole).sqrt(),
            spec.h1_norm(),
            max_relative = 1e-2
        );
        assert_relative_eq!(spec.tau(), 3.465_735_9, epsilon = 1e-7);
    }

    #[test]
    fn initial_data_rejections() {
        let grid = uniform_grid(30.0, 8001).unwrap();
        let bad = |e, m| build_initial_data(InitialDataSpec { epsilon: e, mu: m }, &grid);
        assert!(matches!(bad(0.25, 0.01), Err(Error::Config(_))));
        assert!(matches!(bad(0.0, 0.5), Err(Error::Config(_))));
        assert!(matches!(bad(0.6, 0.5), Err(Error::Config(_))));
        assert!(matches!(bad(0.25, 1.5), Err(Error::Config(_))));
        assert!(bad(0.25, 0.5).is_ok());
    }

    #[test]
    fn zero_perturbation_rates() {
        let grid = small_grid();
        let st = NonlinearState::initial(&PeakedField::zeros(&grid).unwrap());
        let r = rhs(&st).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            assert_eq!(r.x[i], phi(x) - 1.0);
            assert_eq!(r.v[i], 0.0);
        }
        assert_eq!(r.a, 0.0);
        assert_eq!(r.x[st.peak_index()], 0.0);
    }

    #[test]
    fn peak_label_is_pinned() {
        let grid = small_grid();
        let v0 = PeakedField::sample_smooth(
            |x| 0.05 * (x + 0.3) * (-x * x).exp(),
            |x| 0.05 * (1.0 - 2.0 * x * (x + 0.3)) * (-x * x).exp(),
            &grid,
        )
        .unwrap();
        let opts = IntegrateOptions {
            dt: 1e-2,
            t_end: 0.5,
            ..Default::default()
        };
        let run = integrate(&v0, &opts).unwrap();
        let last = run.final_state();
        assert_eq!(last.x()[last.peak_index()], 0.0);
        assert!(last.a() != 0.0, "nonzero v(0) moves the peak");
    }

    #[test]
    fn zero_data_are_a_fixed_point() {
        let grid = small_grid();
        let v0 = PeakedField::zeros(&grid).unwrap();
        let opts = IntegrateOptions {
            dt: 1e-2,
            t_end: 1.0,
            ..Default::default()
        };
        let run = integrate(&v0, &opts).unwrap();
        assert!(!run.report.triggered);
        for r in &run.records {
            assert_eq!(r.a, 0.0);
            assert_eq!(r.v0, 0.0);
            assert_eq!(r.energy, 2.0);
        }
        assert!(run.final_state().v().iter().all(|&v| v == 0.0));
        assert_eq!(run.records.len(), 101);
    }

    #[test]
    fn energy_split_matches_direct_quadrature() {
        let grid = uniform_grid(30.0, 30001).unwrap();
        let v0 = PeakedField::sample_smooth(
            |x| 0.1 * (0.5 - x) * (-x * x).exp(),
            |x| 0.1 * (-1.0 - 2.0 * x * (0.5 - x)) * (-x * x).exp(),
            &grid,
        )
        .unwrap();
        let st = NonlinearState::initial(&v0);
        let direct = st.full_profile().unwrap().energy_e();
        // The direct trapezoid carries the O(h²) error of ∫ 2e^{-2|x|},
        // 2h²/3 ≈ 2.7e-6 at h = 0.002; the split form has E(φ) = 2 exactly.
        let h: f64 = 0.002;
        assert!((energy_of_perturbed(&v0) - direct).abs() <= h * h);
    }

    #[test]
    fn f0_forms_agree_and_are_nonpositive() {
        let grid = uniform_grid(30.0, 8001).unwrap();
        let v0 = PeakedField::sample_smooth(
            |x| x * (-x * x).exp(),
            |x| (1.0 - 2.0 * x * x) * (-x * x).exp(),
            &grid,
        )
        .unwrap();
        let (ops, moment) = f0_forms(&v0, Exec::Sequential).unwrap();
        assert!(ops < 0.0);
        assert_relative_eq!(ops, moment, epsilon = 1e-8);
    }

    #[test]
    fn exec_strategies_agree() {
        let grid = uniform_grid(20.0, 4001).unwrap();
        let v0 = PeakedField::sample_smooth(
            |x| 0.1 * x * (-x * x).exp(),
            |x| 0.1 * (1.0 - 2.0 * x * x) * (-x * x).exp(),
            &grid,
        )
        .unwrap();
        let st = NonlinearState::initial(&v0);
        assert_eq!(
            rhs_with(&st, Exec::Sequential).unwrap(),
            rhs_with(&st, Exec::Parallel).unwrap()
        );
    }

    #[test]
    fn crossing_is_reported_as_compression() {
        let grid = small_grid();
        // A steep negative slope just right of the peak drives U to −∞ quickly.
        let v0 = PeakedField::sample_smooth(
            |x| -3.0 * x * (-4.0 * x * x).exp(),
            |x| -3.0 * (1.0 - 8.0 * x * x) * (-4.0 * x * x).exp(),
            &grid,
        )
        .unwrap();
        let opts = IntegrateOptions {
            dt: 1e-3,
            t_end: 5.0,
            ..Default::default()
        };
        let run = integrate(&v0, &opts).unwrap();
        assert!(run.report.triggered);
        assert!(run.report.t_break.unwrap() < 5.0);
        assert!(run.report.mechanism.is_some());
        let times: Vec<f64> = run.records.iter().map(|r| r.t).collect();
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn record_csv_columns() {
        let grid = small_grid();
        let run = integrate(
            &PeakedField::zeros(&grid).unwrap(),
            &IntegrateOptions {
                dt: 0.1,
                t_end: 0.2,
                ..Default::default()
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        write_records(&path, &run.records).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with(
            "t,a,E,F,h1_v,sup_vx,V0,U0_minus,U0_plus,min_Xs,lower_bound_eps2_et\n"
        ));
        assert_eq!(text.lines().count(), 4);
    }
}
