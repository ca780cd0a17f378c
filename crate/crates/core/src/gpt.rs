//! Gaussian states beyond the quantum boundary: moment calculus, purity,
//! density-matrix reconstruction from a phase-space field, and the
//! orthogonality of Weyl symbols of eigenbasis operators.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::effects::{Effect, EffectLabel};
use crate::error::{invalid, Error, Result};
use crate::grid::{inner_product, GridSpec, PhaseField};
use crate::states::WaveFunction;
use crate::wigner::cross_field;

/// Mean `(x̄, p̄)` and covariance of a Gaussian phase-space distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMoments {
    pub mu: (f64, f64),
    pub gamma: [[f64; 2]; 2],
}

impl GaussianMoments {
    /// Requires `gamma` symmetric and positive definite.
    pub fn new(mu: (f64, f64), gamma: [[f64; 2]; 2]) -> Result<Self> {
        let m = Self { mu, gamma };
        m.validate()?;
        Ok(m)
    }

    pub fn diagonal(mu: (f64, f64), var_x: f64, var_p: f64) -> Result<Self> {
        Self::new(mu, [[var_x, 0.0], [0.0, var_p]])
    }

    pub fn validate(&self) -> Result<()> {
        let [[a, b], [c, d]] = self.gamma;
        if ![a, b, c, d, self.mu.0, self.mu.1].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("gaussian moments"));
        }
        if (b - c).abs() > 1e-12 * (a.abs() + d.abs()) {
            return Err(invalid("gamma", "must be symmetric"));
        }
        let det = self.det();
        if !(a > 0.0 && det > 0.0) {
            return Err(Error::NotPositiveDefinite { det });
        }
        Ok(())
    }

    pub fn det(&self) -> f64 {
        let [[a, b], [c, d]] = self.gamma;
        a * d - b * c
    }

    pub fn sigma_x(&self) -> f64 {
        self.gamma[0][0].sqrt()
    }

    pub fn sigma_p(&self) -> f64 {
        self.gamma[1][1].sqrt()
    }
}

/// `2πħ∬W_G² = ħ / (2√det γ)`.
pub fn gaussian_purity(m: &GaussianMoments, hbar: f64) -> Result<f64> {
    m.validate()?;
    Ok(hbar / (2.0 * m.det().sqrt()))
}

/// Purity above one, i.e. `√det γ < ħ/2`.
pub fn is_post_quantum(m: &GaussianMoments, hbar: f64) -> Result<bool> {
    Ok(gaussian_purity(m, hbar)? > 1.0 + 1e-12)
}

/// Smallest `σx·σp` allowed for purity `mu`: `ħ / (2μ)`.
pub fn uncertainty_bound(purity: f64, hbar: f64) -> f64 {
    hbar / (2.0 * purity)
}

/// The Gaussian `W_G` sampled on the grid, without renormalization.
pub fn gaussian_field(grid: &GridSpec, m: &GaussianMoments) -> Result<PhaseField> {
    m.validate()?;
    let [[a, b], [_, d]] = m.gamma;
    let det = m.det();
    let norm = 1.0 / (2.0 * PI * det.sqrt());
    PhaseField::from_fn(*grid, |x, p| {
        let (u, v) = (x - m.mu.0, p - m.mu.1);
        norm * (-0.5 * (d * u * u - 2.0 * b * u * v + a * v * v) / det).exp()
    })
}

/// A Gaussian field that is required to be post-quantum.
pub fn post_quantum_gaussian(grid: &GridSpec, m: &GaussianMoments) -> Result<PhaseField> {
    if !is_post_quantum(m, grid.hbar)? {
        return Err(invalid("gamma", "√det γ must be below ħ/2"));
    }
    gaussian_field(grid, m)
}

/// Hermitian matrix `ρ(x_a, x_b)` on every second grid point.
///
/// Pairs are taken on the even sublattice so that every midpoint is a grid
/// node; operator eigenvalues are matrix eigenvalues times `spacing`.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub matrix: DMatrix<Complex64>,
    pub spacing: f64,
    pub positions: Vec<f64>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum::<f64>() * self.spacing
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = &self.matrix - self.matrix.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn eigen(&self) -> SymmetricEigen<Complex64, nalgebra::Dyn> {
        SymmetricEigen::new(self.matrix.clone())
    }

    /// Operator eigenvalues, largest first.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.eigen().eigenvalues.iter().map(|l| l * self.spacing).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue and its eigenvector, normalized to `Σ|v|²·spacing = 1`.
    pub fn dominant(&self) -> (f64, Vec<Complex64>) {
        let e = self.eigen();
        let k = e.eigenvalues.imax();
        let scale = 1.0 / self.spacing.sqrt();
        let v = e.eigenvectors.column(k).iter().map(|z| z * scale).collect();
        (e.eigenvalues[k] * self.spacing, v)
    }

    /// `|⟨v|ψ⟩|²` between the dominant eigenvector and `psi` restricted to
    /// the sublattice.
    pub fn fidelity(&self, psi: &WaveFunction) -> Result<f64> {
        let amps = psi.amplitudes();
        if amps.len() != 2 * self.dim() {
            return Err(Error::GridMismatch("density matrix and state"));
        }
        let (_, v) = self.dominant();
        let sub: Vec<Complex64> = (0..self.dim()).map(|u| amps[2 * u]).collect();
        let norm: f64 = sub.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.spacing;
        let overlap: Complex64 = v.iter().zip(&sub).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.spacing;
        Ok(overlap.norm_sqr() / norm)
    }
}

/// `ρ(x, x′) = ∫ W((x+x′)/2, p) e^{ip(x−x′)/ħ} dp` on the even sublattice.
/// Separations beyond half the box are outside the transform's lag window
/// and are set to zero.
pub fn reconstruct_density_matrix(w: &PhaseField) -> DensityMatrix {
    let grid = w.grid();
    let n = grid.n_x;
    let half = n / 2;
    let dp = grid.dp();
    let ifft = FftPlanner::new().plan_fft_inverse(grid.n_p);
    // Row c holds Σ_j W(x_c, p_j) e^{2πi jk/n}; at even lags k the phase of
    // p_0 = −πħ/dx drops out.
    let rows: Vec<Vec<Complex64>> = (0..n)
        .map(|c| {
            let mut row: Vec<Complex64> = w.values().row(c).iter().map(|&v| Complex64::new(v * dp, 0.0)).collect();
            ifft.process(&mut row);
            row
        })
        .collect();
    let matrix = DMatrix::from_fn(half, half, |u, v| {
        let lag = 2 * (u as i64 - v as i64);
        if lag.unsigned_abs() as usize > n / 2 {
            return Complex64::default();
        }
        rows[u + v][lag.rem_euclid(n as i64) as usize]
    });
    DensityMatrix {
        matrix,
        spacing: 2.0 * grid.dx(),
        positions: (0..half).map(|u| grid.x(2 * u)).collect(),
    }
}

/// `2πħ ∬ F_{i1 j1} F*_{i2 j2}` with `F_{ij}` the Weyl symbol of
/// `|ω_i⟩⟨ω_j|`. For an orthonormal basis this is `δ_{i1 i2} δ_{j1 j2}`.
pub fn eigenbasis_overlap(
    i1: usize,
    j1: usize,
    i2: usize,
    j2: usize,
    eigenstates: &[WaveFunction],
) -> Result<f64> {
    let len = eigenstates.len();
    for index in [i1, j1, i2, j2] {
        if index >= len {
            return Err(Error::IndexOutOfRange { index, len });
        }
    }
    let grid = *eigenstates[0].grid();
    for e in eigenstates {
        grid.ensure_same(e.grid(), "eigenstates")?;
    }
    let field = |i: usize, j: usize| {
        cross_field(&grid, eigenstates[j].as_slice(), eigenstates[i].as_slice())
    };
    let a = field(i1, j1);
    let b = field(i2, j2);
    let sum: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum();
    Ok(grid.planck_cell() * sum.re * grid.cell_area())
}

/// An effect probability evaluated on a possibly post-quantum field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectFlag {
    pub label: EffectLabel,
    pub value: f64,
    pub in_unit_interval: bool,
}

/// Evaluates each effect against `w` and flags values outside `[0, 1]`
/// (beyond 1e-9); nothing is clipped.
pub fn flag_effect_probabilities(w: &PhaseField, effects: &[Effect]) -> Result<Vec<EffectFlag>> {
    effects
        .iter()
        .map(|e| {
            let value = inner_product(&e.field, w)?;
            Ok(EffectFlag {
                label: e.label,
                value,
                in_unit_interval: (-1e-9..=1.0 + 1e-9).contains(&value),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{gaussian_packet, ho_eigenstate, purity, wigner_of_pure};

    #[test]
    fn purity_closed_form() {
        let m = |v: f64| GaussianMoments::diagonal((0.0, 0.0), v, v).unwrap();
        assert!((gaussian_purity(&m(0.5), 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((gaussian_purity(&m(0.25), 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((gaussian_purity(&m(1.0), 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(!is_post_quantum(&m(0.5), 1.0).unwrap());
        assert!(is_post_quantum(&m(0.25), 1.0).unwrap());
        assert!(!is_post_quantum(&m(2.0), 1.0).unwrap());
        assert!(GaussianMoments::diagonal((0.0, 0.0), -1.0, 1.0).is_err());
    }

    #[test]
    fn grid_purity_matches() {
        let g = GridSpec::standard();
        let m = GaussianMoments::new((0.5, -0.3), [[0.6, 0.1], [0.1, 0.7]]).unwrap();
        let w = gaussian_field(&g, &m).unwrap();
        assert!((purity(&w) - gaussian_purity(&m, 1.0).unwrap()).abs() < 1e-3);
    }

    #[test]
    fn ground_state_reconstructs_to_rank_one() {
        let g = GridSpec::standard();
        let psi = ho_eigenstate(&g, 0, 1.0).unwrap();
        let rho = reconstruct_density_matrix(&wigner_of_pure(&psi).unwrap());
        assert!(rho.hermiticity_error() < 1e-10);
        assert!((rho.trace() - 1.0).abs() < 1e-6);
        let ev = rho.eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-3);
        assert!(ev[1..].iter().all(|l| l.abs() < 1e-3));
    }

    #[test]
    fn packet_round_trip() {
        let g = GridSpec::standard();
        let psi = gaussian_packet(&g, 1.0, 0.8, 0.9).unwrap();
        let rho = reconstruct_density_matrix(&wigner_of_pure(&psi).unwrap());
        assert!(rho.fidelity(&psi).unwrap() > 1.0 - 1e-4);
    }

    #[test]
    fn post_quantum_has_negative_eigenvalue() {
        let g = GridSpec::standard();
        let pq = GaussianMoments::diagonal((0.0, 0.0), 0.25, 0.25).unwrap();
        let rho = reconstruct_density_matrix(&post_quantum_gaussian(&g, &pq).unwrap());
        assert!(rho.min_eigenvalue() < -1e-3);
        let broad = GaussianMoments::diagonal((0.0, 0.0), 2.0, 2.0).unwrap();
        let rho = reconstruct_density_matrix(&gaussian_field(&g, &broad).unwrap());
        assert!(rho.min_eigenvalue() >= -1e-6);
        assert!(post_quantum_gaussian(&g, &broad).is_err());
    }

    #[test]
    fn orthogonality_relations() {
        let g = GridSpec::standard();
        let basis: Vec<_> = (0..3).map(|n| ho_eigenstate(&g, n, 1.0).unwrap()).collect();
        assert!((eigenbasis_overlap(0, 0, 0, 0, &basis).unwrap() - 1.0).abs() < 1e-4);
        assert!(eigenbasis_overlap(0, 0, 1, 1, &basis).unwrap().abs() < 1e-4);
        assert!((eigenbasis_overlap(0, 1, 0, 1, &basis).unwrap() - 1.0).abs() < 1e-4);
        assert!(eigenbasis_overlap(0, 1, 1, 0, &basis).unwrap().abs() < 1e-4);
        assert!(matches!(
            eigenbasis_overlap(0, 5, 0, 0, &basis),
            Err(Error::IndexOutOfRange { index: 5, .. })
        ));
    }
}
