use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::potential::Potential;
use super::tridiag::TridiagonalMatrix;
use crate::error::Result;
use crate::grid::GridSpec;

/// Discretization of `P̂²/2m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kinetic {
    /// Three-point stencil with hard walls just outside the grid.
    FiniteDifference,
    /// Exact `ħ²k²/2m` on the FFT wavenumbers of the periodic grid. Its
    /// eigenbasis diagonalizes the split-step kinetic propagator and the
    /// momentum grid exactly.
    #[default]
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

impl Kinetic {
    pub fn boundary(self) -> Boundary {
        match self {
            Kinetic::FiniteDifference => Boundary::Dirichlet,
            Kinetic::Fourier => Boundary::Periodic,
        }
    }
}

/// `Ĥ = P̂²/2m + V` with the three-point kinetic stencil and Dirichlet walls.
pub fn discretize_hamiltonian(grid: &GridSpec, potential: &Potential) -> Result<TridiagonalMatrix> {
    let v = potential.sample(grid)?;
    let t = grid.hbar * grid.hbar / (2.0 * grid.mass * grid.dx() * grid.dx());
    let diag = v.iter().map(|vi| 2.0 * t + vi).collect();
    TridiagonalMatrix::new(diag, vec![-t; grid.n_x - 1])
}

/// First column of the circulant Fourier kinetic matrix.
pub(crate) fn fourier_kinetic_column(grid: &GridSpec) -> Vec<f64> {
    let n = grid.n_x;
    let mut buf: Vec<Complex64> = kinetic_energies(grid)
        .iter()
        .map(|&t| Complex64::new(t, 0.0))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// `ħ²k_q²/2m` in FFT bin order.
pub(crate) fn kinetic_energies(grid: &GridSpec) -> Array1<f64> {
    let n = grid.n_x;
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * grid.dx());
    Array1::from_shape_fn(n, |q| {
        let m = if q < n / 2 { q as f64 } else { q as f64 - n as f64 };
        let k = m * dk;
        grid.hbar * grid.hbar * k * k / (2.0 * grid.mass)
    })
}

#[derive(Debug, Clone)]
pub(crate) enum Matrix {
    Tridiagonal(TridiagonalMatrix),
    Dense(DMatrix<f64>),
}

/// A discretized Hamiltonian on a position grid.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: GridSpec,
    kinetic: Kinetic,
    potential: Array1<f64>,
    pub(crate) matrix: Matrix,
}

impl Hamiltonian {
    pub fn new(grid: &GridSpec, potential: &Potential, kinetic: Kinetic) -> Result<Self> {
        let v = potential.sample(grid)?;
        let matrix = match kinetic {
            Kinetic::FiniteDifference => Matrix::Tridiagonal(discretize_hamiltonian(grid, potential)?),
            Kinetic::Fourier => {
                let n = grid.n_x;
                let col = fourier_kinetic_column(grid);
                Matrix::Dense(DMatrix::from_fn(n, n, |a, b| {
                    let t = col[(a + n - b) % n];
                    if a == b {
                        t + v[a]
                    } else {
                        t
                    }
                }))
            }
        };
        Ok(Self {
            grid: *grid,
            kinetic,
            potential: v,
            matrix,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kinetic(&self) -> Kinetic {
        self.kinetic
    }

    pub fn boundary(&self) -> Boundary {
        self.kinetic.boundary()
    }

    pub fn potential_values(&self) -> &Array1<f64> {
        &self.potential
    }

    pub fn tridiagonal(&self) -> Option<&TridiagonalMatrix> {
        match &self.matrix {
            Matrix::Tridiagonal(t) => Some(t),
            Matrix::Dense(_) => None,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.grid.n_x;
        match &self.matrix {
            Matrix::Tridiagonal(t) => Array2::from_shape_fn((n, n), |(i, j)| t.get(i, j)),
            Matrix::Dense(d) => Array2::from_shape_fn((n, n), |(i, j)| d[(i, j)]),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match &self.matrix {
            Matrix::Tridiagonal(t) => t.matvec(v),
            Matrix::Dense(d) => {
                let x = nalgebra::DVector::from_column_slice(v);
                (d * x).iter().copied().collect()
            }
        }
    }

    pub fn apply_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = v.iter().map(|c| c.re).collect();
        let im: Vec<f64> = v.iter().map(|c| c.im).collect();
        self.apply(&re)
            .into_iter()
            .zip(self.apply(&im))
            .map(|(a, b)| Complex64::new(a, b))
            .collect()
    }

    /// Infinity norm.
    pub fn norm(&self) -> f64 {
        match &self.matrix {
            Matrix::Tridiagonal(t) => t.norm(),
            Matrix::Dense(d) => d
                .row_iter()
                .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_matrix_is_symmetric() {
        let g = GridSpec::standard();
        let h = Hamiltonian::new(&g, &Potential::barrier(2.0, 1.0).unwrap(), Kinetic::FiniteDifference).unwrap();
        let d = h.to_dense();
        assert_eq!(d, d.t());
    }

    #[test]
    fn fourier_matrix_is_symmetric_and_matches_fft() {
        let g = GridSpec::new(-8.0, 8.0, 64, 1.0, 1.0).unwrap();
        let h = Hamiltonian::new(&g, &Potential::free(g), Kinetic::Fourier).unwrap();
        let d = h.to_dense();
        let asym = (&d - &d.t()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(asym < 1e-12);
        // A plane wave on the grid is an exact eigenvector with ħ²k²/2m.
        let k = 2.0 * std::f64::consts::PI * 3.0 / 16.0;
        let v: Vec<f64> = g.xs().iter().map(|x| (k * x).cos()).collect();
        let hv = h.apply(&v);
        for (a, b) in hv.iter().zip(&v) {
            assert!((a - 0.5 * k * k * b).abs() < 1e-10);
        }
    }
}
