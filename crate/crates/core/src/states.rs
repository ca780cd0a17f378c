//! Wavefunctions, mixtures, and their Wigner fields.

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{inner_product, GridSpec, PhaseField};
use crate::wigner;

/// Fraction of the grid at each end treated as the boundary layer.
pub const EDGE_FRACTION: f64 = 0.05;

/// Largest probability a state may carry in the boundary layers (position or
/// momentum) before its transform is considered aliased.
pub const BOUNDARY_LIMIT: f64 = 1e-8;

/// Largest coherence across half the box that [`wigner_of_pure`] accepts;
/// the truncated lag integral then errs by about a tenth of this.
pub const COHERENCE_LIMIT: f64 = 1e-6;

/// Tolerance on `‖ψ‖² = 1` for a state to count as normalized.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Complex amplitudes `ψ(x_i)` on the position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: GridSpec,
    amplitudes: Array1<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: GridSpec, amplitudes: Array1<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_x {
            return Err(Error::GridMismatch("amplitude count differs from n_x"));
        }
        if amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NonFinite("wavefunction"));
        }
        Ok(Self { grid, amplitudes })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amps = Array1::from_shape_fn(grid.n_x, |i| f(grid.x(i)));
        Self::new(grid, amps)
    }

    pub fn from_real(grid: GridSpec, values: &[f64]) -> Result<Self> {
        let amps: Array1<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::new(grid, amps)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Array1<Complex64> {
        self.amplitudes
    }

    /// `|ψ(x_i)|²`.
    pub fn density(&self) -> Array1<f64> {
        self.amplitudes.mapv(|a| a.norm_sqr())
    }

    /// `Σ|ψ|²dx`.
    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Whether `‖ψ‖² = 1` within [`NORM_TOLERANCE`]; anything smaller is a
    /// sub-normalized state.
    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq();
        if n <= 0.0 {
            return Err(invalid("psi", "zero wavefunction cannot be normalized"));
        }
        Ok(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            amplitudes: self.amplitudes.mapv(|a| a * c),
        }
    }

    /// `⟨self|other⟩ = Σ ψ*φ dx`.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid, "wavefunction overlap")?;
        let s: Complex64 = self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.dx())
    }

    pub fn mean_position(&self) -> f64 {
        let num: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| self.grid.x(i) * a.norm_sqr())
            .sum();
        num * self.grid.dx() / self.norm_sq()
    }

    /// Probability in the outer [`EDGE_FRACTION`] of the position grid, both
    /// ends combined.
    pub fn edge_mass(&self) -> f64 {
        let n = self.grid.n_x;
        let w = edge_width(n);
        let dens = |i: usize| self.amplitudes[i].norm_sqr();
        ((0..w).map(dens).sum::<f64>() + (n - w..n).map(dens).sum::<f64>()) * self.grid.dx()
    }

    /// `max_x |ψ(x + L/4) ψ(x − L/4)|`, the integrand at the edge of the
    /// transform's lag window.
    pub fn window_coherence(&self) -> f64 {
        let a = &self.amplitudes;
        let q = self.grid.n_x / 4;
        (q..self.grid.n_x - q)
            .map(|i| (a[i + q] * a[i - q]).norm())
            .fold(0.0, f64::max)
    }

    /// `|φ(p_j)|²·dp` on the momentum grid; sums to `‖ψ‖²`.
    pub fn momentum_density(&self) -> Array1<f64> {
        let n = self.grid.n_x;
        let mut spec = self.amplitudes.to_vec();
        FftPlanner::new().plan_fft_forward(n).process(&mut spec);
        let scale = self.grid.dx() / n as f64;
        Array1::from_shape_fn(n, |j| spec[(j + n / 2) % n].norm_sqr() * scale)
    }

    /// Probability in the outer [`EDGE_FRACTION`] of the momentum window.
    pub fn momentum_edge_mass(&self) -> f64 {
        let n = self.grid.n_x;
        let mut spec = self.amplitudes.to_vec();
        FftPlanner::new().plan_fft_forward(n).process(&mut spec);
        // FFT bin q holds momentum q·dp (wrapped); the window edges sit
        // around q = n/2.
        let w = edge_width(n);
        let h = n / 2;
        let total: f64 = (h - w..h + w).map(|q| spec[q].norm_sqr()).sum();
        total * self.grid.dx() / n as f64
    }

    pub(crate) fn check_support(&self, limit: f64) -> Result<()> {
        let mass = self.edge_mass().max(self.momentum_edge_mass());
        if mass > limit {
            return Err(Error::BoundaryMass { mass, limit });
        }
        Ok(())
    }

    pub(crate) fn as_slice(&self) -> &[Complex64] {
        self.amplitudes
            .as_slice()
            .expect("amplitudes are contiguous")
    }
}

fn edge_width(n: usize) -> usize {
    ((n as f64 * EDGE_FRACTION).ceil() as usize).max(1)
}

/// Convex combination `Σ λ_i |ψ_i⟩⟨ψ_i|` with total weight `ν = Σλ_i ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    components: Vec<(f64, WaveFunction)>,
}

impl MixedState {
    pub fn new(components: Vec<(f64, WaveFunction)>) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return Err(invalid("components", "mixture needs at least one component"));
        };
        let grid = *first.grid();
        let mut total = 0.0;
        for (w, psi) in &components {
            if !(w.is_finite() && *w >= 0.0 && *w <= 1.0) {
                return Err(invalid("weight", format!("{w} is not in [0, 1]")));
            }
            grid.ensure_same(psi.grid(), "mixture component")?;
            total += w;
        }
        if total > 1.0 + 1e-12 {
            return Err(invalid("weight", format!("weights sum to {total} > 1")));
        }
        Ok(Self { components })
    }

    pub fn pure(psi: WaveFunction) -> Self {
        Self {
            components: vec![(1.0, psi)],
        }
    }

    pub fn components(&self) -> &[(f64, WaveFunction)] {
        &self.components
    }

    pub fn grid(&self) -> &GridSpec {
        self.components[0].1.grid()
    }

    /// `ν = Σλ_i`.
    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|(w, _)| w).sum()
    }

    /// `Σ λ_i |ψ_i(x)|²`.
    pub fn density(&self) -> Array1<f64> {
        let mut out = Array1::zeros(self.grid().n_x);
        for (w, psi) in &self.components {
            out.scaled_add(*w, &psi.density());
        }
        out
    }
}

/// Anything that is a weighted collection of wavefunctions on one grid.
pub trait QuantumState {
    fn grid(&self) -> &GridSpec;
    fn weighted(&self) -> Vec<(f64, &WaveFunction)>;

    /// `Σ λ_i ‖ψ_i‖²`.
    fn weight(&self) -> f64 {
        self.weighted().iter().map(|(w, psi)| w * psi.norm_sq()).sum()
    }
}

impl QuantumState for WaveFunction {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn weighted(&self) -> Vec<(f64, &WaveFunction)> {
        vec![(1.0, self)]
    }
}

impl QuantumState for MixedState {
    fn grid(&self) -> &GridSpec {
        MixedState::grid(self)
    }

    fn weighted(&self) -> Vec<(f64, &WaveFunction)> {
        self.components.iter().map(|(w, psi)| (*w, psi)).collect()
    }
}

/// `(2πσ²)^{-1/4} exp(−(x−x0)²/4σ²) e^{i p0 x/ħ}`, renormalized on the grid.
pub fn gaussian_packet(grid: &GridSpec, x0: f64, p0: f64, sigma_x: f64) -> Result<WaveFunction> {
    if !(sigma_x > 0.0 && sigma_x.is_finite()) {
        return Err(invalid("sigma_x", format!("{sigma_x} must be positive")));
    }
    if !(x0.is_finite() && p0.is_finite()) {
        return Err(invalid("x0/p0", "must be finite"));
    }
    let amp = (2.0 * PI * sigma_x * sigma_x).powf(-0.25);
    let hbar = grid.hbar;
    let psi = WaveFunction::from_fn(*grid, |x| {
        let d = x - x0;
        Complex64::from_polar(amp * (-d * d / (4.0 * sigma_x * sigma_x)).exp(), p0 * x / hbar)
    })?
    .normalized()?;
    psi.check_support(BOUNDARY_LIMIT)?;
    Ok(psi)
}

/// `n`-th eigenfunction of `½mω²x²`, built from normalized Hermite
/// functions by their three-term recurrence.
pub fn ho_eigenstate(grid: &GridSpec, n: usize, omega: f64) -> Result<WaveFunction> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(invalid("omega", format!("{omega} must be positive")));
    }
    let values = hermite_functions(grid, n, omega).pop().expect("n + 1 functions");
    let psi = WaveFunction::from_real(*grid, values.as_slice().expect("contiguous"))?;
    psi.check_support(BOUNDARY_LIMIT)?;
    Ok(psi)
}

/// Hermite functions `φ_0 … φ_n` sampled on the grid.
pub(crate) fn hermite_functions(grid: &GridSpec, n: usize, omega: f64) -> Vec<Array1<f64>> {
    let alpha = (grid.mass * omega / grid.hbar).sqrt();
    let xi = grid.xs().mapv(|x| alpha * x);
    let mut out = Vec::with_capacity(n + 1);
    out.push(xi.mapv(|s| (alpha / PI.sqrt()).sqrt() * (-0.5 * s * s).exp()));
    if n >= 1 {
        out.push(&xi * &out[0] * 2f64.sqrt());
    }
    for k in 2..=n {
        let kf = k as f64;
        let next = &xi * &out[k - 1] * (2.0 / kf).sqrt() - &out[k - 2] * ((kf - 1.0) / kf).sqrt();
        out.push(next);
    }
    out
}

/// `W(x,p) = (1/πħ)∫ e^{2ipy/ħ} ψ*(x+y) ψ(x−y) dy` on the phase-space grid.
///
/// The lag integral runs over `|y| ≤ L/4`; states with coherence
/// `|ψ(x+L/4) ψ(x−L/4)|` above [`COHERENCE_LIMIT`] are rejected.
pub fn wigner_of_pure(psi: &WaveFunction) -> Result<PhaseField> {
    psi.check_support(BOUNDARY_LIMIT)?;
    let amplitude = psi.window_coherence();
    if amplitude > COHERENCE_LIMIT {
        return Err(Error::CoherenceWidth {
            amplitude,
            limit: COHERENCE_LIMIT,
        });
    }
    let (values, _) = wigner::pure_field(psi.grid(), psi.as_slice());
    PhaseField::new(*psi.grid(), values)
}

/// Largest imaginary part left by the transform, relative to the largest
/// real value; zero up to rounding for any input.
pub fn wigner_residue(psi: &WaveFunction) -> f64 {
    wigner::pure_field(psi.grid(), psi.as_slice()).1
}

/// Wigner field without the boundary-layer check, for eigenvectors of a box
/// Hamiltonian and propagated states, which may reach the edges by
/// construction.
pub fn wigner_of_box_state(psi: &WaveFunction) -> PhaseField {
    PhaseField::from_raw(*psi.grid(), wigner::pure_field(psi.grid(), psi.as_slice()).0)
}

/// `Σ λ_i W_i`.
pub fn wigner_of_mixture(rho: &MixedState) -> Result<PhaseField> {
    let mut acc = PhaseField::zeros(*rho.grid());
    for (w, psi) in rho.components() {
        acc = acc.combine(1.0, &wigner_of_pure(psi)?, *w)?;
    }
    Ok(acc)
}

/// `2πħ ∬ W²`, which is `Tr ρ²` for quantum states.
pub fn purity(w: &PhaseField) -> f64 {
    let g = w.grid();
    g.planck_cell() * inner_product(w, w).expect("same grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Negativity {
    pub min_value: f64,
    pub negative_volume: f64,
}

/// Minimum value and `∬ max(−w, 0)`.
pub fn negativity_diagnostics(w: &PhaseField) -> Negativity {
    let neg: f64 = w.values().iter().map(|&v| (-v).max(0.0)).sum();
    Negativity {
        min_value: w.min(),
        negative_volume: neg * w.grid().cell_area(),
    }
}
