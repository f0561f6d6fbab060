//! The self-verification suite: closed-form identities against independent
//! evaluations.

use serde::Serialize;

use crate::error::Result;
use crate::exec::Exec;
use crate::field::{uniform_grid, PeakedField, Side};
use crate::kernel::{lemma_tech_comp_rhs, phi, phi_prime, Density, ExpSweepAccumulators};
use crate::linear::{apply_a, h1_identity_rhs, linear_ode_reference, solve_linear};
use crate::multipeakon::{mp_integrate, MultipeakonState};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Self {
            name,
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }
}

pub fn run_all() -> Result<Vec<Check>> {
    Ok(vec![
        Check::new("peakon identity", peakon_identity_residual(8001)?, 1e-8),
        Check::new("tech-comp identity, v = phi", tech_comp_error(TechCompData::Phi)?, 1e-6),
        Check::new(
            "tech-comp identity, v = x exp(-x^2)",
            tech_comp_error(TechCompData::OddGauss)?,
            1e-6,
        ),
        Check::new("closed form vs characteristic ODEs", closed_form_vs_ode()?, 1e-6),
        Check::new("H1 growth identities (t = 5)", h1_identity_error(5.0, 20001)?, 1e-4),
        Check::new("right peak trace U(t,0+) = alpha e^t", trace_law_error()?, 1e-12),
        Check::new("jump of A phi at the peak", jump_error()?, 1e-6),
        Check::new("single peakon at unit speed", single_peakon_error()?, 1e-8),
    ])
}

pub fn phi_field(grid: &[f64]) -> Result<PeakedField> {
    PeakedField::sample(
        phi,
        |x| if x <= 0.0 { x.exp() } else { -(-x).exp() },
        |x| if x < 0.0 { x.exp() } else { -(-x).exp() },
        grid,
    )
}

pub fn odd_gauss_field(grid: &[f64]) -> Result<PeakedField> {
    PeakedField::sample_smooth(
        |x| x * (-x * x).exp(),
        |x| (1.0 - 2.0 * x * x) * (-x * x).exp(),
        grid,
    )
}

/// `sup |−φ + ½φ² + ¾ φ ∗ φ²|` over the nodes of `[-20, 20]`.
pub fn peakon_identity_residual(nodes: usize) -> Result<f64> {
    let grid = uniform_grid(20.0, nodes)?;
    let values: Vec<f64> = grid.iter().map(|&x| phi(x).powi(2)).collect();
    // d/dx φ² = 2φφ′, one-sided at the crest
    let slope = |x: f64, side: f64| {
        let d = if x == 0.0 { -side } else { phi_prime(x) };
        2.0 * phi(x) * d
    };
    let density = Density {
        left: values.clone(),
        right: values,
        d_left: grid.iter().map(|&x| slope(x, -1.0)).collect(),
        d_right: grid.iter().map(|&x| slope(x, 1.0)).collect(),
    };
    let conv = ExpSweepAccumulators::build(&grid, &density, Exec::default())?.conv_phi();
    Ok(grid
        .iter()
        .zip(&conv)
        .map(|(&x, &c)| (-phi(x) + 0.5 * phi(x).powi(2) + 0.75 * c).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug)]
pub enum TechCompData {
    Phi,
    OddGauss,
}

impl TechCompData {
    fn value(self, y: f64) -> f64 {
        match self {
            TechCompData::Phi => phi(y),
            TechCompData::OddGauss => y * (-y * y).exp(),
        }
    }

    fn slope(self, y: f64) -> f64 {
        match self {
            TechCompData::Phi => phi_prime(y),
            TechCompData::OddGauss => (1.0 - 2.0 * y * y) * (-y * y).exp(),
        }
    }
}

/// `(φ′ ∗ (φ v + ½ φ′ v′))(x)` by adaptive double-exponential quadrature,
/// split at the kinks `y = 0` and `y = x`.
pub fn tech_comp_lhs_quadrature(data: TechCompData, x: f64) -> f64 {
    let g = |y: f64| phi_prime(x - y) * (phi(y) * data.value(y) + 0.5 * phi_prime(y) * data.slope(y));
    let mut cuts = [-40.0, 0.0f64.min(x), 0.0f64.max(x), 40.0];
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| quadrature::double_exponential::integrate(g, w[0], w[1], 1e-14).integral)
        .sum()
}

/// The 20 sample points, symmetric about and excluding the peak.
pub fn tech_comp_points() -> Vec<f64> {
    (0..20).map(|k| -4.75 + 0.5 * k as f64).collect()
}

pub fn tech_comp_error(data: TechCompData) -> Result<f64> {
    let grid = uniform_grid(30.0, 6001)?;
    let field = match data {
        TechCompData::Phi => phi_field(&grid)?,
        TechCompData::OddGauss => odd_gauss_field(&grid)?,
    };
    let mut worst: f64 = 0.0;
    for x in tech_comp_points() {
        let rhs = lemma_tech_comp_rhs(&field, x)?;
        worst = worst.max((tech_comp_lhs_quadrature(data, x) - rhs).abs());
    }
    Ok(worst)
}

/// Max deviation over `X, V, U, W` between the closed forms and RK4 at
/// `t = 3`, `dt = 1e-3`, labels in `[-20, 20]`.
pub fn closed_form_vs_ode() -> Result<f64> {
    let grid = uniform_grid(20.0, 4001)?;
    let v0 = odd_gauss_field(&grid)?;
    let exact = solve_linear(&v0, 3.0)?;
    let ode = linear_ode_reference(&v0, 3.0, 1e-3)?;
    let pairs = [
        (&exact.x, &ode.x),
        (&exact.v, &ode.v),
        (&exact.w, &ode.w),
        (&exact.u_left, &ode.u_left),
        (&exact.u_right, &ode.u_right),
    ];
    Ok(pairs
        .iter()
        .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max))
}

/// Worst relative mismatch of measured vs predicted half-line `‖v(t)‖²_{H¹}`.
pub fn h1_identity_error(t: f64, nodes: usize) -> Result<f64> {
    let grid = uniform_grid(30.0, nodes)?;
    let v0 = odd_gauss_field(&grid)?;
    let state = solve_linear(&v0, t)?;
    let mut worst: f64 = 0.0;
    for side in [Side::Positive, Side::Negative] {
        let predicted = h1_identity_rhs(&v0, t, side)?;
        let measured = state.h1_norm_sq(side)?;
        worst = worst.max(((measured - predicted) / predicted).abs());
    }
    Ok(worst)
}

/// Relative error of `U(t, 0+)` against `α e^t` for `t ∈ {1, 3, 5}`.
pub fn trace_law_error() -> Result<f64> {
    let grid = uniform_grid(20.0, 801)?;
    let v0 = odd_gauss_field(&grid)?;
    let mut worst: f64 = 0.0;
    for t in [1.0, 3.0, 5.0] {
        let state = solve_linear(&v0, t)?;
        let expected = state.alpha * f64::exp(t);
        worst = worst.max(((state.peak_slopes().1 - expected) / expected).abs());
    }
    Ok(worst)
}

/// Distance of `(Aφ)(0∓)` from `∓1`.
pub fn jump_error() -> Result<f64> {
    let grid = uniform_grid(20.0, 4001)?;
    let (l, r) = apply_a(&phi_field(&grid)?).peak_values();
    Ok((l + 1.0).abs().max((r - 1.0).abs()))
}

pub fn single_peakon_error() -> Result<f64> {
    let state = MultipeakonState::new(vec![0.0], vec![1.0])?;
    let trajectory = mp_integrate(&state, 10.0, 1e-3)?;
    Ok((trajectory.last().x[0] - 10.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadrature_lhs_at_one_for_phi() {
        let e1 = (-1.0f64).exp();
        assert_relative_eq!(
            tech_comp_lhs_quadrature(TechCompData::Phi, 1.0),
            2.0 * e1 * e1 - 2.0 * e1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sample_points_avoid_the_peak() {
        let pts = tech_comp_points();
        assert_eq!(pts.len(), 20);
        assert!(pts.iter().all(|&x| x != 0.0));
        assert_relative_eq!(pts.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
    }
}
