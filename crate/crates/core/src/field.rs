//! Sampled continuous functions with one-sided slopes.
//!
//! A [`Profile`] stores node values of a continuous function together with
//! its left and right derivatives at every node, so corners are represented
//! exactly when they sit on a node. A [`PeakedField`] is a profile with a
//! single admissible corner at position 0 (the peak) plus the characteristic
//! labels the nodes carry.
//!
//! Two quadrature families are used:
//!
//! * cumulative integrals of `v` integrate the cubic Hermite interpolant built
//!   from values and one-sided slopes (fourth order);
//! * H¹-type norms and the conserved quantities use cellwise trapezoid sums
//!   with the one-sided slope belonging to each cell (second order).

use std::ops::Deref;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io;

/// One side of the peak.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Negative,
    Positive,
}

/// Integration range for norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Span {
    Negative,
    Positive,
    Whole,
}

impl From<Side> for Span {
    fn from(side: Side) -> Self {
        match side {
            Side::Negative => Span::Negative,
            Side::Positive => Span::Positive,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    positions: Vec<f64>,
    values: Vec<f64>,
    slope_left: Vec<f64>,
    slope_right: Vec<f64>,
}

impl Profile {
    pub fn new(
        positions: Vec<f64>,
        values: Vec<f64>,
        slope_left: Vec<f64>,
        slope_right: Vec<f64>,
    ) -> Result<Self> {
        let n = positions.len();
        if values.len() != n || slope_left.len() != n || slope_right.len() != n {
            return Err(Error::Structural(format!(
                "array lengths differ: positions {n}, values {}, slope_left {}, slope_right {}",
                values.len(),
                slope_left.len(),
                slope_right.len()
            )));
        }
        if n < 2 {
            return Err(Error::Structural(format!("need at least 2 nodes, got {n}")));
        }
        for (name, arr) in [
            ("position", &positions),
            ("value", &values),
            ("slope_left", &slope_left),
            ("slope_right", &slope_right),
        ] {
            if let Some(i) = arr.iter().position(|x| !x.is_finite()) {
                return Err(Error::Input(format!("{name}[{i}] = {} is not finite", arr[i])));
            }
        }
        check_increasing(&positions, "positions")?;
        Ok(Self {
            positions,
            values,
            slope_left,
            slope_right,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slope_left(&self) -> &[f64] {
        &self.slope_left
    }

    pub fn slope_right(&self) -> &[f64] {
        &self.slope_right
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.positions[cell + 1] - self.positions[cell]
    }

    /// Node indices where the one-sided slopes differ.
    pub fn corners(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.slope_left[i] != self.slope_right[i])
            .collect()
    }

    /// Exact integral of the cubic Hermite interpolant over `cell`.
    pub fn cell_integral(&self, cell: usize) -> f64 {
        let h = self.width(cell);
        0.5 * h * (self.values[cell] + self.values[cell + 1])
            + h * h / 12.0 * (self.slope_right[cell] - self.slope_left[cell + 1])
    }

    /// Cell index `c` with `x ∈ [x_c, x_{c+1}]`.
    pub fn locate(&self, x: f64) -> Result<usize> {
        let lo = self.positions[0];
        let hi = self.positions[self.len() - 1];
        if !(lo..=hi).contains(&x) {
            return Err(Error::Extrapolation { x, lo, hi });
        }
        let idx = self.positions.partition_point(|&p| p <= x);
        Ok(idx.saturating_sub(1).min(self.len() - 2))
    }

    /// Hermite interpolant at `x`.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        let c = self.locate(x)?;
        let h = self.width(c);
        let z = (x - self.positions[c]) / h;
        let z2 = z * z;
        let z3 = z2 * z;
        Ok(self.values[c] * (1.0 - 3.0 * z2 + 2.0 * z3)
            + h * self.slope_right[c] * (z - 2.0 * z2 + z3)
            + self.values[c + 1] * (3.0 * z2 - 2.0 * z3)
            + h * self.slope_left[c + 1] * (z3 - z2))
    }

    /// `∫_{x_c}^{x} v` for `x` inside cell `c`, Hermite interpolant.
    fn partial_integral(&self, c: usize, x: f64) -> f64 {
        let h = self.width(c);
        let z = (x - self.positions[c]) / h;
        let z2 = z * z;
        let z3 = z2 * z;
        let z4 = z3 * z;
        h * (self.values[c] * (z - z3 + 0.5 * z4)
            + h * self.slope_right[c] * (0.5 * z2 - 2.0 / 3.0 * z3 + 0.25 * z4)
            + self.values[c + 1] * (z3 - 0.5 * z4)
            + h * self.slope_left[c + 1] * (0.25 * z4 - z3 / 3.0))
    }

    /// `∫_{x_origin}^{x_i} v` at every node.
    pub fn cumulative_from(&self, origin: usize) -> Vec<f64> {
        let n = self.len();
        let mut w = vec![0.0; n];
        for i in origin + 1..n {
            w[i] = w[i - 1] + self.cell_integral(i - 1);
        }
        for i in (0..origin).rev() {
            w[i] = w[i + 1] - self.cell_integral(i);
        }
        w
    }

    /// One-sided second-derivative estimates `(v_xx(x_i−), v_xx(x_i+))`.
    ///
    /// The slope data are differentiated by second-order finite differences
    /// inside each smooth segment; segments end at corners and at the grid
    /// ends, where one-sided three-point stencils are used.
    pub fn curvature(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        let mut breaks = vec![0];
        breaks.extend(self.corners().into_iter().filter(|&i| i != 0 && i != n - 1));
        breaks.push(n - 1);
        for seg in breaks.windows(2) {
            let (b, e) = (seg[0], seg[1]);
            let slope = |j: usize| {
                if j == b {
                    self.slope_right[j]
                } else {
                    self.slope_left[j]
                }
            };
            let x = &self.positions;
            if e - b == 1 {
                let d = (slope(e) - slope(b)) / (x[e] - x[b]);
                right[b] = d;
                left[e] = d;
                continue;
            }
            {
                let (h1, h2) = (x[b + 1] - x[b], x[b + 2] - x[b + 1]);
                right[b] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * slope(b)
                    + (h1 + h2) / (h1 * h2) * slope(b + 1)
                    - h1 / (h2 * (h1 + h2)) * slope(b + 2);
            }
            for j in b + 1..e {
                let (h1, h2) = (x[j] - x[j - 1], x[j + 1] - x[j]);
                let d = -h2 / (h1 * (h1 + h2)) * slope(j - 1)
                    + (h2 - h1) / (h1 * h2) * slope(j)
                    + h1 / (h2 * (h1 + h2)) * slope(j + 1);
                left[j] = d;
                right[j] = d;
            }
            {
                let (h1, h2) = (x[e - 1] - x[e - 2], x[e] - x[e - 1]);
                left[e] = h2 / (h1 * (h1 + h2)) * slope(e - 2)
                    - (h1 + h2) / (h1 * h2) * slope(e - 1)
                    + (2.0 * h2 + h1) / (h2 * (h1 + h2)) * slope(e);
            }
        }
        // The grid ends have one side only; mirror it.
        left[0] = right[0];
        right[n - 1] = left[n - 1];
        (left, right)
    }

    /// Trapezoid `∫ (v² + v_x²)` over cells `[first, last)`.
    pub fn h1_norm_sq_cells(&self, first: usize, last: usize) -> f64 {
        (first..last)
            .map(|c| {
                let (a, b) = (c, c + 1);
                0.5 * self.width(c)
                    * (self.values[a].powi(2)
                        + self.slope_right[a].powi(2)
                        + self.values[b].powi(2)
                        + self.slope_left[b].powi(2))
            })
            .sum()
    }

    /// `E = ∫ (u² + u_x²)` over the whole grid.
    pub fn energy_e(&self) -> f64 {
        self.h1_norm_sq_cells(0, self.len() - 1)
    }

    /// `F = ∫ u (u² + u_x²)` over the whole grid.
    pub fn momentum_f(&self) -> f64 {
        (0..self.len() - 1)
            .map(|c| {
                let (a, b) = (c, c + 1);
                let fa = self.values[a] * (self.values[a].powi(2) + self.slope_right[a].powi(2));
                let fb = self.values[b] * (self.values[b].powi(2) + self.slope_left[b].powi(2));
                0.5 * self.width(c) * (fa + fb)
            })
            .sum()
    }

    /// `(max |v|, max |v_x|)` over node data, both one-sided slopes included.
    pub fn sup_norms(&self) -> (f64, f64) {
        let sup_v = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sup_vx = self
            .slope_left
            .iter()
            .chain(&self.slope_right)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        (sup_v, sup_vx)
    }
}

/// A sampled member of the piecewise-C¹ class with its corner at position 0.
#[derive(Clone, Debug, PartialEq)]
pub struct PeakedField {
    labels: Vec<f64>,
    profile: Profile,
    peak: usize,
}

impl Deref for PeakedField {
    type Target = Profile;

    fn deref(&self) -> &Profile {
        &self.profile
    }
}

impl PeakedField {
    pub fn new(
        labels: Vec<f64>,
        positions: Vec<f64>,
        values: Vec<f64>,
        slope_left: Vec<f64>,
        slope_right: Vec<f64>,
    ) -> Result<Self> {
        let profile = Profile::new(positions, values, slope_left, slope_right)?;
        Self::from_profile(labels, profile)
    }

    /// Wraps a profile whose position grid contains 0.
    pub fn from_profile(labels: Vec<f64>, profile: Profile) -> Result<Self> {
        if labels.len() != profile.len() {
            return Err(Error::Structural(format!(
                "{} labels for {} nodes",
                labels.len(),
                profile.len()
            )));
        }
        if let Some(i) = labels.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(format!("label[{i}] is not finite")));
        }
        check_increasing(&labels, "labels")?;
        let peak = profile
            .positions
            .iter()
            .position(|&x| x == 0.0)
            .ok_or_else(|| Error::Structural("no node at position 0".into()))?;
        if labels[peak] != 0.0 {
            return Err(Error::Structural(format!(
                "label at the peak node {peak} is {} (expected 0)",
                labels[peak]
            )));
        }
        if let Some(i) = profile.corners().into_iter().find(|&i| i != peak) {
            return Err(Error::Structural(format!(
                "one-sided slopes differ at node {i} (x = {}) away from the peak",
                profile.positions[i]
            )));
        }
        Ok(Self {
            labels,
            profile,
            peak,
        })
    }

    /// Samples `f` on `grid`; left derivatives are used for x < 0, right
    /// derivatives for x > 0, and both at the peak.
    pub fn sample<F, L, R>(f: F, f_prime_left: L, f_prime_right: R, grid: &[f64]) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        L: Fn(f64) -> f64,
        R: Fn(f64) -> f64,
    {
        if !grid.contains(&0.0) {
            return Err(Error::Structural("grid does not contain 0".into()));
        }
        let values = grid.iter().map(|&x| f(x)).collect();
        let mut left = Vec::with_capacity(grid.len());
        let mut right = Vec::with_capacity(grid.len());
        for &x in grid {
            if x == 0.0 {
                left.push(f_prime_left(x));
                right.push(f_prime_right(x));
            } else {
                let d = if x < 0.0 { f_prime_left(x) } else { f_prime_right(x) };
                left.push(d);
                right.push(d);
            }
        }
        Self::new(grid.to_vec(), grid.to_vec(), values, left, right)
    }

    /// Samples a C¹ function with derivative `f_prime`.
    pub fn sample_smooth<F, D>(f: F, f_prime: D, grid: &[f64]) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        Self::sample(f, &f_prime, &f_prime, grid)
    }

    pub fn zeros(grid: &[f64]) -> Result<Self> {
        Self::sample(|_| 0.0, |_| 0.0, |_| 0.0, grid)
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn into_profile(self) -> Profile {
        self.profile
    }

    pub fn peak_index(&self) -> usize {
        self.peak
    }

    pub fn value_at_peak(&self) -> f64 {
        self.profile.values[self.peak]
    }

    /// `(v_x(0−), v_x(0+))`.
    pub fn peak_slopes(&self) -> (f64, f64) {
        (
            self.profile.slope_left[self.peak],
            self.profile.slope_right[self.peak],
        )
    }

    /// `w(x_i) = ∫_0^{x_i} v` at every node (negative for x < 0 when v > 0).
    pub fn cumulative_from_zero(&self) -> Vec<f64> {
        self.profile.cumulative_from(self.peak)
    }

    /// `w(x) = ∫_0^x v` at an arbitrary point of the grid support.
    pub fn cumulative_at(&self, x: f64) -> Result<f64> {
        let c = self.profile.locate(x)?;
        let w = self.cumulative_from_zero();
        Ok(w[c] + self.profile.partial_integral(c, x))
    }

    fn span_cells(&self, span: Span) -> (usize, usize) {
        match span {
            Span::Negative => (0, self.peak),
            Span::Positive => (self.peak, self.len() - 1),
            Span::Whole => (0, self.len() - 1),
        }
    }

    /// Trapezoid `∫ (v² + v_x²)` over the requested half-line or the whole grid.
    pub fn h1_norm_sq(&self, span: Span) -> f64 {
        match span {
            Span::Whole => self.h1_norm_sq(Span::Negative) + self.h1_norm_sq(Span::Positive),
            _ => {
                let (a, b) = self.span_cells(span);
                self.profile.h1_norm_sq_cells(a, b)
            }
        }
    }

    /// Trapezoid `∫ |v|`.
    pub fn l1_norm(&self, span: Span) -> f64 {
        let (a, b) = self.span_cells(span);
        (a..b)
            .map(|c| 0.5 * self.width(c) * (self.values()[c].abs() + self.values()[c + 1].abs()))
            .sum()
    }

    /// `(max |v|, max |v_x|)` restricted to nodes of one half-line (peak included,
    /// with only the slope on that side).
    pub fn sup_norms_on(&self, side: Side) -> (f64, f64) {
        let p = self.peak;
        let (range, peak_slope) = match side {
            Side::Negative => (0..p, self.slope_left()[p]),
            Side::Positive => (p + 1..self.len(), self.slope_right()[p]),
        };
        let mut sup_v = self.values()[p].abs();
        let mut sup_vx = peak_slope.abs();
        for i in range {
            sup_v = sup_v.max(self.values()[i].abs());
            sup_vx = sup_vx.max(self.slope_left()[i].abs());
        }
        (sup_v, sup_vx)
    }

    /// `v_x(0+) − v_x(0−)`.
    pub fn derivative_jump_at_peak(&self) -> f64 {
        self.profile.slope_right[self.peak] - self.profile.slope_left[self.peak]
    }

    /// Writes `s_label, position, value, slope_left, slope_right`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = io::csv_writer(path)?;
        w.write_record(["s_label", "position", "value", "slope_left", "slope_right"])?;
        for i in 0..self.len() {
            w.write_record([
                io::fmt17(self.labels[i]),
                io::fmt17(self.positions()[i]),
                io::fmt17(self.values()[i]),
                io::fmt17(self.slope_left()[i]),
                io::fmt17(self.slope_right()[i]),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = io::csv_reader(path)?;
        let expected = ["s_label", "position", "value", "slope_left", "slope_right"];
        let headers = r.headers()?.clone();
        if headers.iter().ne(expected) {
            return Err(Error::Structural(format!(
                "{}: header {:?}, expected {:?}",
                path.display(),
                headers,
                expected
            )));
        }
        let mut cols: [Vec<f64>; 5] = Default::default();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            for (k, col) in cols.iter_mut().enumerate() {
                let field = rec.get(k).unwrap_or("");
                let x = field.trim().parse::<f64>().map_err(|_| {
                    Error::Input(format!(
                        "{}: row {}: column {} = {field:?} is not a number",
                        path.display(),
                        line + 2,
                        expected[k]
                    ))
                })?;
                col.push(x);
            }
        }
        let [labels, positions, values, left, right] = cols;
        Self::new(labels, positions, values, left, right)
    }
}

fn check_increasing(xs: &[f64], what: &str) -> Result<()> {
    match xs.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) => Err(Error::Structural(format!(
            "{what} not strictly increasing at index {i}: {} then {}",
            xs[i],
            xs[i + 1]
        ))),
        None => Ok(()),
    }
}

/// Symmetric uniform grid on `[-half_width, half_width]` with an odd node count.
pub fn uniform_grid(half_width: f64, nodes: usize) -> Result<Vec<f64>> {
    validate_grid_request(half_width, nodes)?;
    let m = (nodes - 1) / 2;
    let side: Vec<f64> = (0..=m).map(|k| half_width * k as f64 / m as f64).collect();
    Ok(mirror(&side))
}

/// Symmetric grid whose spacing grows geometrically from `h_min` at 0 to
/// its largest value at `|x| = half_width`.
///
/// Falls back to the uniform grid when `h_min` is at least the uniform
/// spacing.
pub fn graded_grid(half_width: f64, nodes: usize, h_min: f64) -> Result<Vec<f64>> {
    validate_grid_request(half_width, nodes)?;
    if !(h_min > 0.0 && h_min.is_finite()) {
        return Err(Error::Input(format!("h_min = {h_min} must be positive")));
    }
    let m = (nodes - 1) / 2;
    if h_min * m as f64 >= half_width {
        return uniform_grid(half_width, nodes);
    }
    let span = |ratio: f64| h_min * ((m as f64) * ratio.ln()).exp_m1() / (ratio - 1.0);
    let mut hi = 1.0 + 1.0 / m as f64;
    while span(hi) < half_width {
        hi = 1.0 + 2.0 * (hi - 1.0);
    }
    let mut lo = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if span(mid) < half_width {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let log_ratio = hi.ln();
    let total = ((m as f64) * log_ratio).exp_m1();
    let side: Vec<f64> = (0..=m)
        .map(|k| {
            if k == m {
                half_width
            } else {
                half_width * ((k as f64) * log_ratio).exp_m1() / total
            }
        })
        .collect();
    Ok(mirror(&side))
}

fn validate_grid_request(half_width: f64, nodes: usize) -> Result<()> {
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::Input(format!(
            "half width {half_width} must be positive"
        )));
    }
    if nodes < 3 || nodes % 2 == 0 {
        return Err(Error::Structural(format!(
            "node count {nodes} must be odd and at least 3"
        )));
    }
    Ok(())
}

fn mirror(side: &[f64]) -> Vec<f64> {
    side.iter()
        .rev()
        .map(|&x| -x)
        .chain(side.iter().skip(1).copied())
        .collect()
}
