//! Nonlocal operators against direct quadrature of their definitions.

mod common;

use common::{lin_op_direct, p_direct, q_direct, ODD_GAUSS, PHI};
use peakon_lab::field::uniform_grid;
use peakon_lab::kernel::{conv_p, conv_q};
use peakon_lab::linear::apply_a;

const PROBES: [f64; 7] = [-3.0, -1.25, -0.5, 0.0, 0.75, 1.5, 4.0];

#[test]
fn q_and_p_match_quadrature() {
    let grid = uniform_grid(30.0, 6001).unwrap();
    for data in [PHI, ODD_GAUSS] {
        let field = data.sample(&grid);
        let q = conv_q(field.profile()).unwrap();
        let p = conv_p(field.profile()).unwrap();
        for x in PROBES {
            let i = grid.iter().position(|&g| (g - x).abs() < 1e-9).unwrap();
            let (qd, pd) = (q_direct(data, grid[i], 30.0), p_direct(data, grid[i], 30.0));
            assert!((q[i] - qd).abs() < 1e-9, "Q at {x}: {} vs {qd}", q[i]);
            assert!((p[i] - pd).abs() < 1e-9, "P at {x}: {} vs {pd}", p[i]);
        }
    }
}

#[test]
fn p_of_peakon_closed_form() {
    // For v = φ the density is (3/2)e^{-2|y|}; at 0 this gives P = 1/2.
    let p0 = p_direct(PHI, 0.0, 40.0);
    assert!((p0 - 0.5).abs() < 1e-11, "{p0}");
    assert!(q_direct(PHI, 0.0, 40.0).abs() < 1e-11);
}

#[test]
fn linearized_operator_matches_definition() {
    let grid = uniform_grid(20.0, 4001).unwrap();
    for data in [PHI, ODD_GAUSS] {
        let a = apply_a(&data.sample(&grid));
        for x in PROBES.into_iter().filter(|&x| x != 0.0) {
            let i = a.positions.iter().position(|&g| (g - x).abs() < 1e-9).unwrap();
            let direct = lin_op_direct(data, a.positions[i]);
            assert!((a.left[i] - direct).abs() < 1e-7, "A at {x}: {} vs {direct}", a.left[i]);
            assert_eq!(a.left[i], a.right[i]);
        }
    }
}
