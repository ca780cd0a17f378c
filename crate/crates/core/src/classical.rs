//! Classical phase-space ensembles and the certificate that they never
//! tunnel.
//!
//! Classically `V(x) > E*` forces `H(x, p) > E*`, so the position effect
//! lies below the energy effect everywhere and a non-negative distribution
//! can only give a non-positive functional.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::effects::{position_effect, tunnelling_rate_operator, EnergySource};
use crate::error::{invalid, Error, Result};
use crate::grid::{inner_product, integrate_2d, GridSpec, PhaseField};
use crate::spectral::Potential;

/// Largest functional value a certificate accepts.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-9;

/// A normalized, non-negative phase-space distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalState {
    field: PhaseField,
}

impl ClassicalState {
    /// Rejects negative values and fields whose integral is not 1 within 1e-8.
    pub fn new(field: PhaseField) -> Result<Self> {
        let min = field.min();
        if min < 0.0 {
            return Err(Error::NegativeDistribution { min });
        }
        let total = integrate_2d(&field);
        if (total - 1.0).abs() > 1e-8 {
            return Err(invalid("field", format!("integrates to {total}, expected 1")));
        }
        Ok(Self { field })
    }

    /// Rescales a non-negative field to unit integral.
    pub fn normalize(field: PhaseField) -> Result<Self> {
        let min = field.min();
        if min < 0.0 {
            return Err(Error::NegativeDistribution { min });
        }
        let total = integrate_2d(&field);
        if !(total > 0.0) {
            return Err(invalid("field", "has no weight"));
        }
        Ok(Self {
            field: field.scaled(1.0 / total),
        })
    }

    pub fn field(&self) -> &PhaseField {
        &self.field
    }

    pub fn grid(&self) -> &GridSpec {
        self.field.grid()
    }

    pub fn into_field(self) -> PhaseField {
        self.field
    }
}

/// Bivariate normal distribution with mean `mu = (x̄, p̄)` and covariance
/// `cov`, renormalized on the grid.
pub fn classical_gaussian(grid: &GridSpec, mu: (f64, f64), cov: [[f64; 2]; 2]) -> Result<ClassicalState> {
    let [[a, b], [c, d]] = cov;
    if (b - c).abs() > 1e-12 * (a.abs() + d.abs()) {
        return Err(invalid("cov", "must be symmetric"));
    }
    let det = a * d - b * c;
    if !(a > 0.0 && det > 0.0) {
        return Err(Error::NotPositiveDefinite { det });
    }
    let norm = 1.0 / (2.0 * PI * det.sqrt());
    let field = PhaseField::from_fn(*grid, |x, p| {
        let (u, v) = (x - mu.0, p - mu.1);
        let q = (d * u * u - 2.0 * b * u * v + a * v * v) / det;
        norm * (-0.5 * q).exp()
    })?;
    ClassicalState::normalize(field)
}

/// Energy shell `H(x, p) = E`, smoothed by a Gaussian of width `width` in
/// energy. Without an explicit width, the local width is five times the
/// change of `H` across one grid cell.
pub fn classical_microcanonical(
    grid: &GridSpec,
    potential: &Potential,
    energy: f64,
    width: Option<f64>,
) -> Result<ClassicalState> {
    if let Some(w) = width {
        if !(w > 0.0 && w.is_finite()) {
            return Err(invalid("width", "must be positive"));
        }
    }
    let v = potential.sample(grid)?;
    let dv = potential.cell_variation(grid)?;
    let (dp, m) = (grid.dp(), grid.mass);
    let floor = dp * dp / (2.0 * m);
    let ps = grid.ps();
    let values = ndarray::Array2::from_shape_fn((grid.n_x, grid.n_p), |(i, j)| {
        let p = ps[j];
        let w = width.unwrap_or_else(|| 5.0 * dv[i].max(dp * p.abs() / m).max(floor));
        let h = p * p / (2.0 * m) + v[i];
        let z = (h - energy) / w;
        (-0.5 * z * z).exp() / w
    });
    let field = PhaseField::new(*grid, values)?;
    let total = integrate_2d(&field);
    if !(total > 1e-12) {
        return Err(Error::EmptyShell {
            energy,
            width: width.unwrap_or(0.0),
        });
    }
    ClassicalState::normalize(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateEntry {
    pub e_star: f64,
    pub functional: f64,
    pub rate_operator_min: f64,
}

/// Outcome of [`classical_no_tunnel_certificate`]. `worst_margin` is the
/// smallest slack over both conditions; negative means failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub passed: bool,
    pub worst_margin: f64,
    pub entries: Vec<CertificateEntry>,
}

/// Checks at every `E*` that the classical rate operator is non-negative and
/// the functional does not exceed [`CERTIFICATE_TOLERANCE`]. A failure means
/// a quadrature or implementation fault, since the statement is exact.
pub fn classical_no_tunnel_certificate(
    state: &ClassicalState,
    potential: &Potential,
    e_star_grid: &[f64],
) -> Result<Certificate> {
    if e_star_grid.is_empty() {
        return Err(Error::EmptyScan);
    }
    let f = state.field();
    let grid = f.grid();
    let entries = e_star_grid
        .par_iter()
        .map(|&e| {
            let rate = tunnelling_rate_operator(grid, potential, EnergySource::Classical, e)?;
            // ⟨X − E, f⟩ = −⟨rate, f⟩.
            let functional = -inner_product(&rate.field, f)?;
            Ok(CertificateEntry {
                e_star: e,
                functional,
                rate_operator_min: rate.field.min(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_margin = entries
        .iter()
        .map(|c| c.rate_operator_min.min(CERTIFICATE_TOLERANCE - c.functional))
        .fold(f64::INFINITY, f64::min);
    Ok(Certificate {
        passed: worst_margin >= 0.0,
        worst_margin,
        entries,
    })
}

/// Region probability `∬ 𝓔_{x|V>E*} f` of a classical ensemble.
pub fn classical_region_prob(state: &ClassicalState, potential: &Potential, e_star: f64) -> Result<f64> {
    inner_product(&position_effect(state.grid(), potential, e_star)?.field, state.field())
}
