//! Position grid, its FFT-conjugate momentum grid, and real fields on the
//! resulting phase-space lattice.
//!
//! Positions are `x_i = x_min + i·dx` for `i ∈ [0, n_x)` with
//! `dx = (x_max − x_min)/n_x`. Momenta are `p_j = −πħ/dx + j·dp` with
//! `dp = 2πħ/(n_x·dx)`, so the momentum grid is exactly the set of
//! frequencies resolved by a length-`n_x` DFT of the position samples.
//! Every field value is the sample at the cell centre `(x_i, p_j)` and
//! integrals are plain Riemann sums, which are spectrally accurate for
//! smooth fields that vanish at the edges.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 64;

/// Discretised phase-space rectangle together with the physical constants
/// (`ħ`, `m`) that every other module reads from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub n_p: usize,
    pub hbar: f64,
    pub mass: f64,
}

/// Builds a grid with `n_p = n_x`.
pub fn make_grid(x_min: f64, x_max: f64, n_x: usize, hbar: f64, mass: f64) -> Result<GridSpec> {
    GridSpec::new(x_min, x_max, n_x, hbar, mass)
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_x: usize, hbar: f64, mass: f64) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidGrid("non-finite range".into()));
        }
        if x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "empty range [{x_min}, {x_max}]"
            )));
        }
        if !n_x.is_power_of_two() || n_x < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n_x = {n_x} must be a power of two ≥ {MIN_POINTS}"
            )));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidGrid(format!("ħ = {hbar} must be positive")));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidGrid(format!("m = {mass} must be positive")));
        }
        Ok(Self {
            x_min,
            x_max,
            n_x,
            n_p: n_x,
            hbar,
            mass,
        })
    }

    /// The grid used throughout the test suite: `[−12, 12]`, 512 points, `ħ = m = 1`.
    pub fn standard() -> Self {
        Self::new(-12.0, 12.0, 512, 1.0, 1.0).expect("standard grid is valid")
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI * self.hbar / (self.n_x as f64 * self.dx())
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn p_max(&self) -> f64 {
        PI * self.hbar / self.dx()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        -self.p_max() + j as f64 * self.dp()
    }

    pub fn xs(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.n_x, |i| self.x(i))
    }

    pub fn ps(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.n_p, |j| self.p(j))
    }

    /// Phase-space area of one cell.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dp()
    }

    /// `2πħ`, the phase-space volume of one quantum state.
    pub fn planck_cell(&self) -> f64 {
        2.0 * PI * self.hbar
    }

    /// Same grid with `n_x` doubled over the same range.
    pub fn refined(&self) -> Self {
        Self {
            n_x: self.n_x * 2,
            n_p: self.n_p * 2,
            ..*self
        }
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec, what: &'static str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(what))
        }
    }
}

/// Real field sampled on the phase-space lattice, indexed `[x_i, p_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    grid: GridSpec,
    values: Array2<f64>,
}

impl PhaseField {
    pub fn new(grid: GridSpec, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.n_x, grid.n_p) {
            return Err(Error::GridMismatch("field shape differs from grid"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("phase field"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: Array2::zeros((grid.n_x, grid.n_p)),
        }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: Array2::from_elem((grid.n_x, grid.n_p), value),
        }
    }

    /// Samples `f(x, p)` at every cell centre.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let xs = grid.xs();
        let ps = grid.ps();
        let values = Array2::from_shape_fn((grid.n_x, grid.n_p), |(i, j)| f(xs[i], ps[j]));
        Self::new(grid, values)
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Array2<f64>) -> Self {
        debug_assert_eq!(values.dim(), (grid.n_x, grid.n_p));
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Value at the node nearest to `(x, p)`.
    pub fn nearest(&self, x: f64, p: f64) -> f64 {
        let i = ((x - self.grid.x_min) / self.grid.dx()).round();
        let j = ((p + self.grid.p_max()) / self.grid.dp()).round();
        let i = i.clamp(0.0, (self.grid.n_x - 1) as f64) as usize;
        let j = j.clamp(0.0, (self.grid.n_p - 1) as f64) as usize;
        self.values[[i, j]]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: f64, other: &PhaseField, beta: f64) -> Result<PhaseField> {
        self.grid.ensure_same(&other.grid, "linear combination")?;
        let mut values = self.values.clone();
        Zip::from(&mut values)
            .and(&other.values)
            .for_each(|a, &b| *a = alpha * *a + beta * b);
        Ok(PhaseField::from_raw(self.grid, values))
    }

    pub fn scaled(&self, alpha: f64) -> PhaseField {
        PhaseField::from_raw(self.grid, self.values.mapv(|v| alpha * v))
    }

    pub fn sub(&self, other: &PhaseField) -> Result<PhaseField> {
        self.combine(1.0, other, -1.0)
    }

    /// `∫ f dp` at every `x_i`.
    pub fn x_marginal(&self) -> Array1<f64> {
        let dp = self.grid.dp();
        self.values
            .rows()
            .into_iter()
            .map(|row| row.iter().sum::<f64>() * dp)
            .collect()
    }

    /// `∫ f dx` at every `p_j`.
    pub fn p_marginal(&self) -> Array1<f64> {
        let dx = self.grid.dx();
        self.values
            .columns()
            .into_iter()
            .map(|col| col.iter().sum::<f64>() * dx)
            .collect()
    }
}

/// Riemann sum `Σ f·dx·dp`.
pub fn integrate_2d(field: &PhaseField) -> f64 {
    // Row sums first keeps the reduction order fixed.
    let total: f64 = field
        .values
        .rows()
        .into_iter()
        .map(|row| row.iter().sum::<f64>())
        .sum();
    total * field.grid.cell_area()
}

/// `∬ a·b dx dp` by the same quadrature as [`integrate_2d`].
pub fn inner_product(a: &PhaseField, b: &PhaseField) -> Result<f64> {
    a.grid.ensure_same(&b.grid, "inner product")?;
    let total: f64 = a
        .values
        .rows()
        .into_iter()
        .zip(b.values.rows())
        .map(|(ra, rb)| ra.iter().zip(rb.iter()).map(|(x, y)| x * y).sum::<f64>())
        .sum();
    Ok(total * a.grid.cell_area())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_spacings() {
        let g = make_grid(-10.0, 10.0, 256, 1.0, 1.0).unwrap();
        assert_relative_eq!(g.dx(), 0.078125, epsilon = 1e-15);
        assert_relative_eq!(g.dp(), 2.0 * PI / 20.0, epsilon = 1e-15);
        assert_relative_eq!(g.p(0), -PI / g.dx(), epsilon = 1e-12);
        assert_relative_eq!(g.p(g.n_p / 2), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(make_grid(-10.0, 10.0, 63, 1.0, 1.0).is_err());
        assert!(make_grid(-10.0, 10.0, 32, 1.0, 1.0).is_err());
        assert!(make_grid(0.0, 0.0, 256, 1.0, 1.0).is_err());
        assert!(make_grid(-1.0, 1.0, 256, 0.0, 1.0).is_err());
        assert!(make_grid(-1.0, 1.0, 256, 1.0, -2.0).is_err());
    }

    #[test]
    fn constant_field_integrates_to_area() {
        // [-1,1] in x; choose ħ so the momentum window is also [-1,1).
        let n = 64;
        let dx = 2.0 / n as f64;
        let hbar = dx / PI;
        let g = make_grid(-1.0, 1.0, n, hbar, 1.0).unwrap();
        assert_relative_eq!(g.p_max(), 1.0, epsilon = 1e-14);
        let f = PhaseField::constant(g, 1.0);
        assert!((integrate_2d(&f) - 4.0).abs() < 1e-9);
        assert_eq!(integrate_2d(&PhaseField::zeros(g)), 0.0);
    }

    #[test]
    fn inner_product_rejects_mismatch() {
        let a = PhaseField::zeros(GridSpec::standard());
        let b = PhaseField::zeros(make_grid(-10.0, 10.0, 512, 1.0, 1.0).unwrap());
        assert!(matches!(inner_product(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn inner_product_with_zero() {
        let g = GridSpec::standard();
        let a = PhaseField::from_fn(g, |x, p| (-x * x - p * p).exp()).unwrap();
        assert_eq!(inner_product(&a, &PhaseField::zeros(g)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = GridSpec::standard();
        assert!(PhaseField::from_fn(g, |x, _| if x > 0.0 { f64::NAN } else { 0.0 }).is_err());
    }

    #[test]
    fn gaussian_integral_converges_under_refinement() {
        let gauss = |x: f64, p: f64| (-(x - 0.3) * (x - 0.3) - 0.5 * p * p).exp();
        let g = make_grid(-12.0, 12.0, 128, 1.0, 1.0).unwrap();
        let a = integrate_2d(&PhaseField::from_fn(g, gauss).unwrap());
        let b = integrate_2d(&PhaseField::from_fn(g.refined(), gauss).unwrap());
        assert!(((a - b) / b).abs() < 1e-8);
        assert_relative_eq!(b, PI * 2f64.sqrt(), max_relative = 1e-10);
    }
}
