//! Structural invariants over randomized inputs.

mod common;

use peakon_lab::field::{graded_grid, uniform_grid};
use peakon_lab::kernel::{conv_p, conv_q, quadratic_sweeps, Density, ExpSweepAccumulators};
use peakon_lab::linear::{char_x, jacobian_xs, solve_linear, solve_linear_with, sup_bounds};
use peakon_lab::multipeakon::{mp_hamiltonian, mp_integrate, mp_rhs, MultipeakonState};
use peakon_lab::nonlinear::{rhs_with, NonlinearState};
use peakon_lab::{Exec, PeakedField, Side};
use proptest::prelude::*;

/// `v0(x) = x(a + b x) e^{-c x²}`: zero at the peak, smooth, decaying.
fn poly_gauss(a: f64, b: f64, c: f64, grid: &[f64]) -> PeakedField {
    PeakedField::sample_smooth(
        |x| x * (a + b * x) * (-c * x * x).exp(),
        |x| (a + 2.0 * b * x - 2.0 * c * x * x * (a + b * x)) * (-c * x * x).exp(),
        grid,
    )
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = (f64, f64, f64)> {
    (-1.0..1.0f64, -1.0..1.0f64, 0.3..2.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jacobian_positive_and_characteristics_ordered(t in 0.0..8.0f64, s in -15.0..15.0f64, ds in 1e-6..1.0f64) {
        prop_assume!(s != 0.0 && s + ds != 0.0);
        let j = jacobian_xs(t, s).unwrap();
        // Compression to the right of the peak, expansion to the left.
        prop_assert!(j > 0.0);
        let ordered = if s > 0.0 { j <= 1.0 + 1e-15 } else { j >= 1.0 - 1e-15 };
        prop_assert!(ordered);
        prop_assert!(char_x(t, s + ds) > char_x(t, s));
        // X_s agrees with a centred difference of X.
        let h = 1e-5 * s.abs().min(1.0);
        let fd = (char_x(t, s + h) - char_x(t, s - h)) / (2.0 * h);
        prop_assert!((fd - j).abs() <= 1e-5 * j.max(1.0));
    }

    #[test]
    fn characteristics_are_odd(t in 0.0..8.0f64, s in 0.0..15.0f64) {
        let x = char_x(t, s);
        let y = -char_x(-t, -s);
        prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn sweeps_are_linear_in_the_density(scale in 0.1..5.0f64, (a, b, c) in coeffs()) {
        let grid = uniform_grid(10.0, 401).unwrap();
        let g: Vec<f64> = grid.iter().map(|&x| (a + b * x).powi(2) * (-c * x * x).exp()).collect();
        let dg: Vec<f64> = grid.iter().map(|&x| {
            (2.0 * b * (a + b * x) - 2.0 * c * x * (a + b * x).powi(2)) * (-c * x * x).exp()
        }).collect();
        let one = ExpSweepAccumulators::build(&grid, &Density::smooth(g.clone(), dg.clone()), Exec::Sequential).unwrap();
        let many = ExpSweepAccumulators::build(
            &grid,
            &Density::smooth(g.iter().map(|v| scale * v).collect(), dg.iter().map(|v| scale * v).collect()),
            Exec::Sequential,
        ).unwrap();
        for (p, q) in one.conv_phi().iter().zip(many.conv_phi()) {
            prop_assert!((scale * p - q).abs() <= 1e-12 * q.abs().max(1e-300) + 1e-300);
        }
        // A non-negative density gives a non-negative φ-convolution.
        prop_assert!(one.conv_phi().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn p_dominates_q(( a, b, c) in coeffs()) {
        // |φ′| = φ, so |Q| ≤ P pointwise for a non-negative density.
        let grid = uniform_grid(12.0, 601).unwrap();
        let field = poly_gauss(a, b, c, &grid);
        let p = conv_p(field.profile()).unwrap();
        let q = conv_q(field.profile()).unwrap();
        for (pi, qi) in p.iter().zip(&q) {
            prop_assert!(qi.abs() <= pi + 1e-14);
        }
    }

    #[test]
    fn exec_modes_agree_bitwise((a, b, c) in coeffs(), t in 0.0..4.0f64) {
        let grid = graded_grid(20.0, 2001, 1e-3).unwrap();
        let v0 = poly_gauss(a, b, c, &grid);
        let seq = solve_linear_with(&v0, t, Exec::Sequential).unwrap();
        let par = solve_linear_with(&v0, t, Exec::Parallel).unwrap();
        prop_assert_eq!(&seq, &par);
        let s1 = quadratic_sweeps(v0.profile(), Exec::Sequential).unwrap();
        let s2 = quadratic_sweeps(v0.profile(), Exec::Parallel).unwrap();
        prop_assert_eq!(s1.conv_phi(), s2.conv_phi());
        let state = NonlinearState::initial(&v0);
        prop_assert_eq!(rhs_with(&state, Exec::Sequential).unwrap(), rhs_with(&state, Exec::Parallel).unwrap());
    }

    #[test]
    fn linear_flow_stays_bounded_left_of_the_peak((a, b, c) in coeffs(), t in 0.0..6.0f64) {
        // Values and slopes on the negative half-line never exceed the
        // bounds set by the data.
        let grid = uniform_grid(20.0, 2001).unwrap();
        let v0 = poly_gauss(a, b, c, &grid);
        let bounds = sup_bounds(&v0);
        let field = solve_linear(&v0, t).unwrap().to_field().unwrap();
        let (sup_v, sup_vx) = field.sup_norms_on(Side::Negative);
        prop_assert!(sup_v <= bounds.value_negative * (1.0 + 1e-9) + 1e-14);
        prop_assert!(sup_vx <= bounds.slope_negative * (1.0 + 1e-9) + 1e-14);
    }

    #[test]
    fn right_slope_grows_exponentially((a, b, c) in coeffs(), t in 0.0..6.0f64) {
        prop_assume!(a.abs() > 1e-3);
        let grid = uniform_grid(20.0, 801).unwrap();
        let state = solve_linear(&poly_gauss(a, b, c, &grid), t).unwrap();
        let (l, r) = state.peak_slopes();
        prop_assert!((r - a * t.exp()).abs() <= 1e-12 * (a * t.exp()).abs());
        prop_assert!((l - a * (-t).exp()).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn multipeakon_rates_balance(n in 1usize..6, seed in prop::collection::vec((-5.0..5.0f64, -2.0..2.0f64), 6)) {
        let mut x: Vec<f64> = seed.iter().take(n).enumerate().map(|(k, p)| p.0 + 12.0 * k as f64).collect();
        x.sort_by(f64::total_cmp);
        let m: Vec<f64> = seed.iter().take(n).map(|p| if p.1.abs() < 0.1 { 0.1 } else { p.1 }).collect();
        let state = MultipeakonState::new(x, m).unwrap();
        let (_, dm) = mp_rhs(&state);
        let total: f64 = dm.iter().sum();
        let scale: f64 = dm.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
        prop_assert!(total.abs() <= 1e-14 * scale + 1e-300);
    }

    #[test]
    fn same_sign_pair_conserves_h(m1 in 0.2..2.0f64, m2 in 0.2..2.0f64, gap in 0.5..4.0f64) {
        let state = MultipeakonState::new(vec![0.0, gap], vec![m1, m2]).unwrap();
        let run = mp_integrate(&state, 2.0, 1e-3).unwrap();
        prop_assert!(run.collision.is_none());
        let h0 = mp_hamiltonian(&state);
        let h1 = mp_hamiltonian(run.last());
        prop_assert!(((h1 - h0) / h0).abs() <= 1e-10);
        prop_assert!((run.last().total_mass() - state.total_mass()).abs() <= 1e-12);
    }
}
