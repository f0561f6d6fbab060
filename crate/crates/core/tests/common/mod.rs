//! Independent oracles: direct adaptive quadrature of the defining integrals,
//! sharing nothing with the sweep implementation.

#![allow(dead_code)]

use peakon_lab::field::uniform_grid;
use peakon_lab::kernel::{phi, phi_prime};
use peakon_lab::PeakedField;

/// A smooth-away-from-0 test function with its one-sided derivative.
#[derive(Clone, Copy)]
pub struct Analytic {
    pub value: fn(f64) -> f64,
    /// Derivative for `x ≠ 0`; at 0 the two limits are `slope_at_zero`.
    pub slope: fn(f64) -> f64,
    pub slope_at_zero: (f64, f64),
}

pub const PHI: Analytic = Analytic {
    value: phi,
    slope: phi_prime,
    slope_at_zero: (1.0, -1.0),
};

pub const ODD_GAUSS: Analytic = Analytic {
    value: |x| x * (-x * x).exp(),
    slope: |x| (1.0 - 2.0 * x * x) * (-x * x).exp(),
    slope_at_zero: (1.0, 1.0),
};

impl Analytic {
    pub fn sample(&self, grid: &[f64]) -> PeakedField {
        let (l0, r0) = self.slope_at_zero;
        let slope = self.slope;
        PeakedField::sample(
            self.value,
            move |x| if x == 0.0 { l0 } else { slope(x) },
            move |x| if x == 0.0 { r0 } else { slope(x) },
            grid,
        )
        .unwrap()
    }
}

pub fn odd_gauss_on(half_width: f64, nodes: usize) -> PeakedField {
    ODD_GAUSS.sample(&uniform_grid(half_width, nodes).unwrap())
}

/// `∫_a^b f` by double-exponential quadrature, splitting at `cuts`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, cuts: &[f64]) -> f64 {
    let mut pts = vec![a, b];
    pts.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2)
        .map(|w| quadrature::double_exponential::integrate(&f, w[0], w[1], 1e-14).integral)
        .sum()
}

/// `(φ′ ∗ (φ v + ½ φ′ v′))(x)` on `[-40, 40]`.
pub fn tech_comp_lhs(v: Analytic, x: f64) -> f64 {
    let g = |y: f64| {
        phi_prime(x - y) * (phi(y) * (v.value)(y) + 0.5 * phi_prime(y) * (v.slope)(y))
    };
    integrate(g, -40.0, 40.0, &[0.0, x])
}

/// `Q[v](x) = ½ ∫ φ′(x − y)(v² + ½ v′²) dy` over `[-l, l]`.
pub fn q_direct(v: Analytic, x: f64, l: f64) -> f64 {
    let g = |y: f64| {
        let (a, d) = ((v.value)(y), (v.slope)(y));
        0.5 * phi_prime(x - y) * (a * a + 0.5 * d * d)
    };
    integrate(g, -l, l, &[0.0, x])
}

/// `P[v](x) = ½ ∫ φ(x − y)(v² + ½ v′²) dy` over `[-l, l]`.
pub fn p_direct(v: Analytic, x: f64, l: f64) -> f64 {
    let g = |y: f64| {
        let (a, d) = ((v.value)(y), (v.slope)(y));
        0.5 * phi(x - y) * (a * a + 0.5 * d * d)
    };
    integrate(g, -l, l, &[0.0, x])
}

/// `(Av)(x)` straight from its definition, for `x ≠ 0`.
pub fn lin_op_direct(v: Analytic, x: f64) -> f64 {
    let w = integrate(v.value, 0.0f64.min(x), 0.0f64.max(x), &[]) * x.signum();
    (1.0 - phi(x)) * (v.slope)(x) + phi(x) * w - (v.value)(0.0) * phi_prime(x)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
