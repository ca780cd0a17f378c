//! Hamiltonians, their spectra, and the energy and position probabilities
//! built from them.
//!
//! Energy comparisons are strict (`E > E*`, `V(x) > E*`). Eigenvalues within
//! [`tie_tolerance`] of `E*` count as equal to it, so they are neither above
//! nor below.

mod hamiltonian;
mod potential;
mod tridiag;

use nalgebra::linalg::SymmetricTridiagonal;
use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use statrs::function::erf::erf;

pub use hamiltonian::{discretize_hamiltonian, Boundary, Hamiltonian, Kinetic};
pub use potential::{IndicatorRule, Potential, TabulatedPotential, DEFAULT_SUBSAMPLES};
pub use tridiag::TridiagonalMatrix;

pub(crate) use hamiltonian::kinetic_energies;

use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::states::{QuantumState, WaveFunction};
use hamiltonian::Matrix;

/// Minimum captured norm `Σ|c_n|²/‖ψ‖²` targeted by [`capture_spectrum`].
pub const CAPTURE_TARGET: f64 = 1.0 - 1e-6;

/// Width of the band around `E*` inside which an eigenvalue is a tie.
pub fn tie_tolerance(e: f64) -> f64 {
    1e-9 * e.abs().max(1.0)
}

/// Which eigenpairs to compute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    All,
    Lowest(usize),
    /// Every eigenvalue strictly below the bound.
    Below(f64),
}

/// Ascending eigenvalues with eigenvectors normalized to `Σ v² dx = 1`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: GridSpec,
    energies: Vec<f64>,
    vectors: Array2<f64>,
    boundary: Boundary,
    complete_below: f64,
}

impl Spectrum {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Every eigenvalue below this bound is present.
    pub fn complete_below(&self) -> f64 {
        self.complete_below
    }

    pub fn is_complete(&self) -> bool {
        self.complete_below == f64::INFINITY
    }

    pub fn vector(&self, n: usize) -> ArrayView1<'_, f64> {
        self.vectors.column(n)
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn eigenstate(&self, n: usize) -> Result<WaveFunction> {
        if n >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: self.len(),
            });
        }
        let amps = self.vector(n).mapv(|v| Complex64::new(v, 0.0));
        WaveFunction::new(self.grid, amps)
    }

    /// `c_n = ⟨v_n|ψ⟩`.
    pub fn coefficients(&self, psi: &WaveFunction) -> Result<Vec<Complex64>> {
        self.grid.ensure_same(psi.grid(), "spectrum and state")?;
        let dx = self.grid.dx();
        let amps = psi.amplitudes();
        Ok(self
            .vectors
            .columns()
            .into_iter()
            .map(|v| v.iter().zip(amps).map(|(a, b)| *b * *a).sum::<Complex64>() * dx)
            .collect())
    }

    /// Mixture-weighted `|c_n|²`.
    pub fn populations(&self, state: &impl QuantumState) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        for (w, psi) in state.weighted() {
            for (o, c) in out.iter_mut().zip(self.coefficients(psi)?) {
                *o += w * c.norm_sqr();
            }
        }
        Ok(out)
    }

    /// Number of eigenvalues `≤ E*` (ties included).
    pub fn count_at_most(&self, e_star: f64) -> usize {
        let cut = e_star + tie_tolerance(e_star);
        self.energies.partition_point(|&e| e <= cut)
    }

    /// Number of eigenvalues `< E*` (ties excluded).
    pub fn count_below(&self, e_star: f64) -> usize {
        let cut = e_star - tie_tolerance(e_star);
        self.energies.partition_point(|&e| e < cut)
    }

    /// Fails unless every eigenvalue up to `E*` (and its tie band) is known.
    pub fn ensure_covers(&self, e_star: f64) -> Result<()> {
        if e_star + tie_tolerance(e_star) < self.complete_below {
            Ok(())
        } else {
            Err(Error::TruncationBudget {
                e_star,
                e_max: self.complete_below,
            })
        }
    }

    /// Distinct eigenvalues, merging values within the tie tolerance.
    pub fn distinct_energies(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &e in &self.energies {
            match out.last() {
                Some(&last) if e - last <= tie_tolerance(last) => {}
                _ => out.push(e),
            }
        }
        out
    }

    /// Largest relative residual `‖Hv − Ev‖/(‖H‖‖v‖)` over all pairs.
    pub fn max_residual(&self, h: &Hamiltonian) -> f64 {
        let norm = h.norm();
        self.vectors
            .columns()
            .into_iter()
            .zip(&self.energies)
            .map(|(v, &e)| {
                let v = v.to_vec();
                let hv = h.apply(&v);
                let r: f64 = hv.iter().zip(&v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
                let len: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                r / (norm * len)
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `Σ v_m v_n dx` from `δ_mn`.
    pub fn gram_residual(&self) -> f64 {
        let dx = self.grid.dx();
        let g = self.vectors.t().dot(&self.vectors) * dx;
        g.indexed_iter()
            .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }
}

/// Householder-reduced form `H = Q T Qᵀ`.
struct Reduced {
    t: TridiagonalMatrix,
    q: Option<DMatrix<f64>>,
}

fn reduce(h: &Hamiltonian) -> Result<Reduced> {
    match &h.matrix {
        Matrix::Tridiagonal(t) => Ok(Reduced { t: t.clone(), q: None }),
        Matrix::Dense(d) => {
            let (q, diag, off) = SymmetricTridiagonal::new(d.clone()).unpack();
            let t = TridiagonalMatrix::new(diag.iter().copied().collect(), off.iter().copied().collect())?;
            Ok(Reduced { t, q: Some(q) })
        }
    }
}

fn solve(h: &Hamiltonian, reduced: &Reduced, count: usize, complete_below: f64) -> Result<Spectrum> {
    let grid = *h.grid();
    let n = grid.n_x;
    let energies = reduced.t.eigenvalues(0..count);
    let z = reduced.t.eigenvectors(&energies)?;
    let mut vectors = Array2::zeros((n, count));
    match &reduced.q {
        None => {
            for (k, v) in z.iter().enumerate() {
                vectors.column_mut(k).assign(&ArrayView1::from(v.as_slice()));
            }
        }
        Some(q) => {
            let zm = DMatrix::from_fn(n, count, |i, k| z[k][i]);
            let v = q * zm;
            for k in 0..count {
                let mut col: Vec<f64> = v.column(k).iter().copied().collect();
                tridiag::fix_sign(&mut col);
                vectors.column_mut(k).assign(&Array1::from(col));
            }
        }
    }
    vectors.mapv_inplace(|v| v / grid.dx().sqrt());
    Ok(Spectrum {
        grid,
        energies,
        vectors,
        boundary: h.boundary(),
        complete_below,
    })
}

/// Eigenpairs of `h` chosen by `selection`, ascending.
pub fn eigendecompose(h: &Hamiltonian, selection: Selection) -> Result<Spectrum> {
    let reduced = reduce(h)?;
    let n = h.grid().n_x;
    let (count, complete_below) = match selection {
        Selection::All => (n, f64::INFINITY),
        Selection::Lowest(k) => {
            let k = k.min(n);
            if k == n {
                (n, f64::INFINITY)
            } else {
                (k, reduced.t.eigenvalues(k..k + 1)[0])
            }
        }
        Selection::Below(e) => {
            if !e.is_finite() {
                return Err(invalid("selection", "energy bound must be finite"));
            }
            let c = reduced.t.count_below(e);
            (c, if c == n { f64::INFINITY } else { e })
        }
    };
    solve(h, &reduced, count, complete_below)
}

/// Smallest spectrum that reaches `e_floor` and captures at least
/// [`CAPTURE_TARGET`] of every component of `state`.
pub fn capture_spectrum(h: &Hamiltonian, state: &impl QuantumState, e_floor: f64) -> Result<Spectrum> {
    h.grid().ensure_same(state.grid(), "hamiltonian and state")?;
    let reduced = reduce(h)?;
    let n = h.grid().n_x;
    let mut count = reduced.t.count_below(e_floor).max(8).min(n);
    loop {
        let complete = if count == n {
            f64::INFINITY
        } else {
            // Stop short of the next eigenvalue so the bound is exact.
            reduced.t.eigenvalues(count..count + 1)[0]
        };
        let spec = solve(h, &reduced, count, complete)?;
        let captured = state
            .weighted()
            .into_iter()
            .map(|(_, psi)| {
                let total = psi.norm_sq();
                let c: f64 = spec.coefficients(psi).map(|c| c.iter().map(|v| v.norm_sqr()).sum())?;
                Ok(if total > 0.0 { c / total } else { 1.0 })
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(1.0, f64::min);
        if captured >= CAPTURE_TARGET || count == n {
            return Ok(spec);
        }
        count = (count * 2).min(n);
    }
}

/// `P(E > E*)`, mixture-weighted.
pub fn energy_cdf(state: &impl QuantumState, spectrum: &Spectrum, e_star: f64) -> Result<f64> {
    let pops = spectrum.populations(state)?;
    let above = spectrum.count_at_most(e_star);
    let weight = state.weight();
    if spectrum.is_complete() && pops.len() - above < above {
        return Ok(pops[above..].iter().sum::<f64>().clamp(0.0, weight));
    }
    spectrum.ensure_covers(e_star)?;
    Ok((weight - pops[..above].iter().sum::<f64>()).clamp(0.0, weight))
}

/// `P(E ≤ E*)`.
pub fn energy_at_most(state: &impl QuantumState, spectrum: &Spectrum, e_star: f64) -> Result<f64> {
    spectrum.ensure_covers(e_star)?;
    let pops = spectrum.populations(state)?;
    Ok(pops[..spectrum.count_at_most(e_star)].iter().sum())
}

/// `P(E < E*)`.
pub fn energy_below(state: &impl QuantumState, spectrum: &Spectrum, e_star: f64) -> Result<f64> {
    spectrum.ensure_covers(e_star)?;
    let pops = spectrum.populations(state)?;
    Ok(pops[..spectrum.count_below(e_star)].iter().sum())
}

/// `P(E > E*)` for a Gaussian packet treating energy eigenstates as free
/// momentum states: `P(|p| > √(2mE*))` under the packet's Gaussian momentum
/// density of width `ħ/2σx`. The centre `x0` does not enter.
pub fn free_momentum_energy_cdf(
    _x0: f64,
    p0: f64,
    sigma_x: f64,
    e_star: f64,
    mass: f64,
    hbar: f64,
) -> Result<f64> {
    if !(sigma_x > 0.0) {
        return Err(invalid("sigma_x", format!("{sigma_x} must be positive")));
    }
    if !(e_star >= 0.0) {
        return Err(invalid("E*", format!("{e_star} must be non-negative")));
    }
    if e_star.is_infinite() {
        return Ok(0.0);
    }
    let pstar = (2.0 * mass * e_star).sqrt();
    let s = 2f64.sqrt() * sigma_x / hbar;
    Ok(1.0 - 0.5 * (erf(s * (pstar - p0)) + erf(s * (pstar + p0))))
}

/// `∫_{V(x)>E*} ρ(x) dx` with the default cell-average indicator.
pub fn position_region_prob(state: &impl QuantumState, potential: &Potential, e_star: f64) -> Result<f64> {
    position_region_prob_with(state, potential, e_star, IndicatorRule::default())
}

pub fn position_region_prob_with(
    state: &impl QuantumState,
    potential: &Potential,
    e_star: f64,
    rule: IndicatorRule,
) -> Result<f64> {
    let grid = state.grid();
    let (w0, w1) = potential.forbidden_moments(grid, e_star, rule)?;
    let rho = mixture_density(state);
    let n = rho.len();
    let mut total = 0.0;
    for i in 0..n {
        let slope = match i {
            0 => rho[1] - rho[0],
            _ if i + 1 == n => rho[n - 1] - rho[n - 2],
            _ => 0.5 * (rho[i + 1] - rho[i - 1]),
        };
        total += w0[i] * rho[i] + w1[i] * slope;
    }
    Ok((total * grid.dx()).clamp(0.0, state.weight()))
}

pub(crate) fn mixture_density(state: &impl QuantumState) -> Array1<f64> {
    let mut rho = Array1::zeros(state.grid().n_x);
    for (lambda, psi) in state.weighted() {
        rho.scaled_add(lambda, &psi.density());
    }
    rho
}
