//! The Green function `φ(x) = e^{-|x|}` and the nonlocal operators built on it.
//!
//! Convolutions with `φ` and `φ′` of a density `g` split at the evaluation
//! point into two one-sided exponential integrals,
//!
//! ```text
//! (φ ∗ g)(x)  = e^{-x} ∫_{-L}^{x} e^{y} g(y) dy + e^{x} ∫_{x}^{L} e^{-y} g(y) dy
//! (φ′ ∗ g)(x) = e^{x} ∫_{x}^{L} e^{-y} g(y) dy − e^{-x} ∫_{-L}^{x} e^{y} g(y) dy
//! ```
//!
//! and both one-sided integrals obey first-order recurrences from node to
//! node. On every cell `g` is replaced by its cubic Hermite interpolant
//! (node values plus one-sided derivatives) and the cell integrals against
//! `e^{-z}` are taken in closed form, so one sweep in each direction gives
//! the convolution at all nodes in O(N). The density vanishes outside the
//! grid.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{PeakedField, Profile};

pub fn phi(x: f64) -> f64 {
    (-x.abs()).exp()
}

/// `φ′(x) = −sign(x) e^{-|x|}` with `φ′(0) = 0`.
pub fn phi_prime(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x.signum() * (-x.abs()).exp()
    }
}

/// Density sampled with one-sided values and derivatives at every node.
///
/// `left[i]`/`d_left[i]` are limits from `x < x_i` and feed the cell ending
/// at node `i`; `right[i]`/`d_right[i]` feed the cell starting there.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub d_left: Vec<f64>,
    pub d_right: Vec<f64>,
}

impl Density {
    /// Density without corners.
    pub fn smooth(values: Vec<f64>, derivatives: Vec<f64>) -> Self {
        Self {
            left: values.clone(),
            right: values,
            d_left: derivatives.clone(),
            d_right: derivatives,
        }
    }

    /// `a = v² + ½ v_x²` and `a′ = 2 v v_x + v_x v_xx`, one-sided.
    pub fn quadratic(profile: &Profile) -> Self {
        let (curv_left, curv_right) = profile.curvature();
        let v = profile.values();
        let one_side = |slopes: &[f64], curv: &[f64]| -> (Vec<f64>, Vec<f64>) {
            v.iter()
                .zip(slopes)
                .zip(curv)
                .map(|((&v, &s), &c)| (v * v + 0.5 * s * s, 2.0 * v * s + s * c))
                .unzip()
        };
        let (left, d_left) = one_side(profile.slope_left(), &curv_left);
        let (right, d_right) = one_side(profile.slope_right(), &curv_right);
        Self {
            left,
            right,
            d_left,
            d_right,
        }
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    fn validate(&self, nodes: usize) -> Result<()> {
        for (name, arr) in [
            ("left", &self.left),
            ("right", &self.right),
            ("d_left", &self.d_left),
            ("d_right", &self.d_right),
        ] {
            if arr.len() != nodes {
                return Err(Error::Structural(format!(
                    "density {name} has {} entries for {nodes} nodes",
                    arr.len()
                )));
            }
            if let Some(i) = arr.iter().position(|x| !x.is_finite()) {
                return Err(Error::Input(format!("density {name}[{i}] is not finite")));
            }
        }
        Ok(())
    }
}

/// Closed-form integrals of the Hermite basis against `e^{-z}` on `[0, h]`,
/// `z` measured from the cell end where the weight is one.
#[derive(Clone, Copy, Debug)]
struct CellWeights {
    decay: f64,
    near_value: f64,
    far_value: f64,
    near_slope: f64,
    far_slope: f64,
}

impl CellWeights {
    fn new(h: f64) -> Self {
        let [m0, m1, m2, m3] = exp_moments(h);
        Self {
            decay: (-h).exp(),
            near_value: h * (m0 - 3.0 * m2 + 2.0 * m3),
            far_value: h * (3.0 * m2 - 2.0 * m3),
            near_slope: h * h * (m1 - 2.0 * m2 + m3),
            far_slope: h * h * (m3 - m2),
        }
    }
}

/// `M_k = ∫_0^1 ζ^k e^{-hζ} dζ` for `k = 0..=3`.
fn exp_moments(h: f64) -> [f64; 4] {
    let mut m = [0.0; 4];
    if h <= 2.0 {
        // Alternating series; for h ≤ 2 the largest term is below e².
        for (k, mk) in m.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut sum = 0.0;
            for n in 0..64 {
                let t = term / (n + k + 1) as f64;
                sum += t;
                if t.abs() <= 1e-18 * sum.abs() {
                    break;
                }
                term *= -h / (n + 1) as f64;
            }
            *mk = sum;
        }
    } else {
        let e = (-h).exp();
        m[0] = -(-h).exp_m1() / h;
        for k in 1..4 {
            m[k] = (k as f64 * m[k - 1] - e) / h;
        }
    }
    m
}

/// One-sided exponential integrals of a density at every node.
///
/// `left[i] = ∫_{x_0}^{x_i} e^{-(x_i - y)} g(y) dy` and
/// `right[i] = ∫_{x_i}^{x_{n-1}} e^{-(y - x_i)} g(y) dy`, i.e. the raw
/// integrals `∫ e^{±y} g` rescaled by `e^{∓x_i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpSweepAccumulators {
    positions: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl ExpSweepAccumulators {
    pub fn build(positions: &[f64], density: &Density, exec: Exec) -> Result<Self> {
        let n = positions.len();
        if n < 2 {
            return Err(Error::Structural(format!("need at least 2 nodes, got {n}")));
        }
        if let Some(i) = positions.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Structural(format!(
                "positions not strictly increasing at index {i}"
            )));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("non-finite position".into()));
        }
        density.validate(n)?;

        // Per-cell contributions are independent; only the recurrences are serial.
        let cells = exec.map(n - 1, |c| {
            let w = CellWeights::new(positions[c + 1] - positions[c]);
            let (a0, d0) = (density.right[c], density.d_right[c]);
            let (a1, d1) = (density.left[c + 1], density.d_left[c + 1]);
            // Weight peaks at the right end (feeds `left`) / at the left end (feeds `right`).
            let into_left =
                a1 * w.near_value + a0 * w.far_value - d1 * w.near_slope - d0 * w.far_slope;
            let into_right =
                a0 * w.near_value + a1 * w.far_value + d0 * w.near_slope + d1 * w.far_slope;
            (w.decay, into_left, into_right)
        });

        let mut left = vec![0.0; n];
        for c in 0..n - 1 {
            let (decay, into_left, _) = cells[c];
            left[c + 1] = decay * left[c] + into_left;
        }
        let mut right = vec![0.0; n];
        for c in (0..n - 1).rev() {
            let (decay, _, into_right) = cells[c];
            right[c] = decay * right[c + 1] + into_right;
        }
        Ok(Self {
            positions: positions.to_vec(),
            left,
            right,
        })
    }

    /// `∫_{x_0}^{x_i} e^{y} g(y) dy`.
    pub fn unscaled_left(&self, i: usize) -> f64 {
        self.left[i] * self.positions[i].exp()
    }

    /// `∫_{x_i}^{x_{n-1}} e^{-y} g(y) dy`.
    pub fn unscaled_right(&self, i: usize) -> f64 {
        self.right[i] * (-self.positions[i]).exp()
    }

    /// `(φ ∗ g)(x_i)`.
    pub fn conv_phi(&self) -> Vec<f64> {
        self.left.iter().zip(&self.right).map(|(l, r)| l + r).collect()
    }

    /// `(φ′ ∗ g)(x_i)`.
    pub fn conv_phi_prime(&self) -> Vec<f64> {
        self.left.iter().zip(&self.right).map(|(l, r)| r - l).collect()
    }
}

/// Sweeps of the density `v² + ½ v_x²` of a sampled field.
pub fn quadratic_sweeps(profile: &Profile, exec: Exec) -> Result<ExpSweepAccumulators> {
    ExpSweepAccumulators::build(profile.positions(), &Density::quadratic(profile), exec)
}

/// `Q[v] = ½ φ′ ∗ (v² + ½ v_x²)` at every node.
pub fn conv_q(field: &Profile) -> Result<Vec<f64>> {
    let s = quadratic_sweeps(field, Exec::default())?;
    Ok(s.conv_phi_prime().into_iter().map(|x| 0.5 * x).collect())
}

/// `P[v] = ½ φ ∗ (v² + ½ v_x²)` at every node.
pub fn conv_p(field: &Profile) -> Result<Vec<f64>> {
    let s = quadratic_sweeps(field, Exec::default())?;
    Ok(s.conv_phi().into_iter().map(|x| 0.5 * x).collect())
}

/// Right-hand side of the identity
/// `φ′ ∗ (φ v + ½ φ′ v_x)(x) = −φ′(x) v(x) + φ′(x) v(0) − φ(x) ∫_0^x v`.
pub fn lemma_tech_comp_rhs(field: &PeakedField, x: f64) -> Result<f64> {
    let w = field.cumulative_at(x)?;
    let v = field.interpolate(x)?;
    let v0 = field.value_at_peak();
    Ok(-phi_prime(x) * v + phi_prime(x) * v0 - phi(x) * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::uniform_grid;
    use approx::assert_relative_eq;

    fn phi_field(grid: &[f64]) -> PeakedField {
        PeakedField::sample(
            phi,
            |x| if x <= 0.0 { x.exp() } else { -(-x).exp() },
            |x| if x < 0.0 { x.exp() } else { -(-x).exp() },
            grid,
        )
        .unwrap()
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.0), 1.0);
        assert_relative_eq!(phi(1.0), 0.367_879_4, epsilon = 1e-7);
        assert_eq!(phi(-2.0), phi(2.0));
    }

    #[test]
    fn phi_prime_values() {
        assert_eq!(phi_prime(0.0), 0.0);
        assert_eq!(phi_prime(1.0), -(-1.0f64).exp());
        assert_eq!(phi_prime(-1.0), (-1.0f64).exp());
    }

    #[test]
    fn moments_match_closed_forms_across_branch() {
        for h in [1e-6, 1e-3, 0.5, 1.9, 2.0, 2.1, 7.0] {
            let m = exp_moments(h);
            let e = (-h).exp();
            let m0 = (1.0 - e) / h;
            let m1 = (m0 - e) / h;
            assert_relative_eq!(m[0], m0, max_relative = 1e-9);
            if h > 0.1 {
                assert_relative_eq!(m[1], m1, max_relative = 1e-9);
            }
        }
        let m = exp_moments(0.0);
        assert_eq!(m, [1.0, 0.5, 1.0 / 3.0, 0.25]);
    }

    #[test]
    fn cell_weights_reduce_to_corrected_trapezoid() {
        let h = 1e-9;
        let w = CellWeights::new(h);
        assert_relative_eq!(w.near_value, h / 2.0, max_relative = 1e-8);
        assert_relative_eq!(w.far_value, h / 2.0, max_relative = 1e-8);
        assert_relative_eq!(w.near_slope, h * h / 12.0, max_relative = 1e-8);
        assert_relative_eq!(w.far_slope, -h * h / 12.0, max_relative = 1e-8);
    }

    #[test]
    fn sweeps_exact_for_cubic_density() {
        // g(y) = y^3 on [0, 1]; weight e^{-(1-y)} at the last node.
        let grid: Vec<f64> = (0..=7).map(|k| k as f64 / 7.0).collect();
        let d = Density::smooth(
            grid.iter().map(|y| y * y * y).collect(),
            grid.iter().map(|y| 3.0 * y * y).collect(),
        );
        let s = ExpSweepAccumulators::build(&grid, &d, Exec::Sequential).unwrap();
        // ∫_0^1 y^3 e^{y-1} dy = 6/e - 2
        let exact = 6.0 / std::f64::consts::E - 2.0;
        assert_relative_eq!(s.left[7], exact, epsilon = 1e-14);
        // ∫_0^1 y^3 e^{-y} dy = 6 - 16/e
        assert_relative_eq!(s.right[0], 6.0 - 16.0 / std::f64::consts::E, epsilon = 1e-14);
        assert_eq!(s.left[0], 0.0);
        assert_eq!(s.right[7], 0.0);
    }

    #[test]
    fn zero_field_gives_zero_operators() {
        let f = PeakedField::zeros(&uniform_grid(10.0, 101).unwrap()).unwrap();
        assert!(conv_q(&f).unwrap().iter().all(|&q| q == 0.0));
        assert!(conv_p(&f).unwrap().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn q_and_p_of_phi_closed_forms() {
        let grid = uniform_grid(30.0, 8001).unwrap();
        let f = phi_field(&grid);
        let q = conv_q(&f).unwrap();
        let p = conv_p(&f).unwrap();
        let mid = f.peak_index();
        assert!(q[mid].abs() < 1e-14);
        assert_relative_eq!(p[mid], 0.5, epsilon = 1e-9);
        for (i, &x) in grid.iter().enumerate().skip(800).step_by(97).take(60) {
            if x == 0.0 {
                continue;
            }
            assert_relative_eq!(q[i], phi_prime(x) * (1.0 - phi(x)), epsilon = 1e-9);
            assert_relative_eq!(p[i], phi(x) - 0.5 * phi(x).powi(2), epsilon = 1e-9);
        }
    }

    #[test]
    fn unscaled_accumulators_are_monotone_for_nonnegative_density() {
        let grid = uniform_grid(8.0, 801).unwrap();
        let f = phi_field(&grid);
        let s = quadratic_sweeps(&f, Exec::Sequential).unwrap();
        for i in 0..grid.len() - 1 {
            assert!(s.unscaled_left(i + 1) >= s.unscaled_left(i));
            assert!(s.unscaled_right(i + 1) <= s.unscaled_right(i));
        }
    }

    #[test]
    fn exec_strategies_agree() {
        let grid = uniform_grid(30.0, 8001).unwrap();
        let f = phi_field(&grid);
        let a = quadratic_sweeps(&f, Exec::Sequential).unwrap();
        let b = quadratic_sweeps(&f, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tech_comp_rhs_at_one() {
        let grid = uniform_grid(30.0, 6001).unwrap();
        let f = phi_field(&grid);
        let rhs = lemma_tech_comp_rhs(&f, 1.0).unwrap();
        let e1 = (-1.0f64).exp();
        // Hermite cumulative integral: O(h⁴) ≈ 1e-11 at h = 0.01.
        assert_relative_eq!(rhs, 2.0 * e1 * e1 - 2.0 * e1, epsilon = 1e-10);
        assert_relative_eq!(rhs, -0.465_088_3, epsilon = 1e-7);
        let zero = PeakedField::zeros(&grid).unwrap();
        assert_eq!(lemma_tech_comp_rhs(&zero, 0.7).unwrap(), 0.0);
        assert!(matches!(
            lemma_tech_comp_rhs(&f, 40.0),
            Err(Error::Extrapolation { .. })
        ));
    }
}
