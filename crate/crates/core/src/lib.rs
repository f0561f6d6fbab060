//! Peaked perturbations of the Camassa–Holm peakon.
//!
//! The crate evolves perturbations `v` of the peakon `φ(x) = e^{-|x|}` in
//! peak-centred coordinates, `u(t, x) = φ(x - t - a(t)) + v(t, x - t - a(t))`,
//! along characteristics:
//!
//! * [`kernel`]: the Green function, its derivative, and the nonlocal
//!   operators `Q[v] = ½ φ′ ∗ (v² + ½v_x²)` and `P[v] = ½ φ ∗ (v² + ½v_x²)`
//!   evaluated by O(N) exponential sweeps.
//! * [`field`]: sampled continuous functions with one-sided slopes, grids,
//!   norms and the conserved quantities `E` and `F`.
//! * [`linear`]: closed-form characteristic solution of the flow linearized
//!   at the peakon, its ODE oracle and the half-line H¹ growth identities.
//! * [`nonlinear`]: fixed-step RK4 integration of the full characteristic
//!   system with peak traces, breakdown detection and the instability run.
//! * [`multipeakon`]: the N-peakon Hamiltonian ODE system.
//! * [`cli`] / [`config`]: scenario orchestration behind the `peakon-lab`
//!   binary.

pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod field;
pub mod kernel;
pub mod linear;
pub mod multipeakon;
pub mod nonlinear;
mod io;
mod rk4;

pub use error::{Error, Result};
pub use exec::Exec;
pub use field::{PeakedField, Profile, Side, Span};
