//! The tunnelling functional `∬[𝓔_{x|V>E*} − 𝓔_{E>E*}] f`, its scan over
//! `E*`, and the special cases built on it: stationary barrier states,
//! barrier probabilities of wave packets, and reflection over a barrier.
//!
//! A state tunnels when the functional is positive for some `E*`: it is
//! found in the region `V(x) > E*` more often than its energy exceeds `E*`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effects::{
    in_momentum_band, classical_energy_below_effect, classical_energy_effect, momentum_band_effect, position_effect,
    quantum_energy_below_effect, quantum_energy_effect, tunnelling_rate_operator, EnergySource,
    Flavor,
};
use crate::error::{invalid, Error, Result};
use crate::grid::{inner_product, integrate_2d, GridSpec, PhaseField};
use crate::spectral::{
    capture_spectrum, position_region_prob, tie_tolerance, Hamiltonian, IndicatorRule, Kinetic,
    Potential, Spectrum,
};
use crate::states::{negativity_diagnostics, wigner_of_box_state, Negativity, QuantumState, WaveFunction};

/// Functional values above this count as tunnelling.
pub const TAU_DET: f64 = 1e-6;

/// Relative residual above which a state is not accepted as an eigenstate.
pub const EIGEN_RESIDUAL_LIMIT: f64 = 1e-8;

/// How the `E*` grid of a scan is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanPolicy {
    pub tau_det: f64,
    /// Number of uniformly spaced `E*` values added to the spectral points.
    pub refine: usize,
    /// Offset of the points placed just below and above `sup V`.
    pub epsilon: f64,
    /// Energy range above `sup V` covered by reflection scans.
    pub reflection_span: f64,
    /// Additional `E*` values to include.
    pub extra: Vec<f64>,
}

impl Default for ScanPolicy {
    fn default() -> Self {
        Self {
            tau_det: TAU_DET,
            refine: 200,
            epsilon: 1e-6,
            reflection_span: 10.0,
            extra: Vec::new(),
        }
    }
}

impl ScanPolicy {
    fn validate(&self) -> Result<()> {
        if !(self.tau_det >= 0.0 && self.tau_det.is_finite()) {
            return Err(invalid("tau_det", "must be a non-negative number"));
        }
        if !(self.epsilon > 0.0 && self.reflection_span > 0.0) {
            return Err(invalid("epsilon", "epsilon and reflection_span must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TunnellingReport {
    pub flavor: Flavor,
    pub e_star_grid: Vec<f64>,
    pub functional_values: Vec<f64>,
    pub verdict: bool,
    pub witness_e_star: Option<f64>,
    pub max_violation: f64,
    pub tau_det: f64,
    pub state_negativity: Negativity,
    /// Negativity of the rate operator at the witness energy.
    pub rate_op_negativity: Option<Negativity>,
}

impl TunnellingReport {
    /// A tunnelling verdict must be backed by negativity in the state or in
    /// the rate operator at the witness.
    pub fn negativity_witnessed(&self) -> bool {
        !self.verdict
            || self.state_negativity.min_value < 0.0
            || self.rate_op_negativity.is_some_and(|n| n.min_value < 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionReport {
    pub flavor: Flavor,
    pub e_star_grid: Vec<f64>,
    pub functional_values: Vec<f64>,
    pub verdict: bool,
    pub witness_e_star: Option<f64>,
    pub max_violation: f64,
    pub tau_det: f64,
}

/// `∬[𝓔_{x|V(x)>E*} − 𝓔_{E>E*}] f dx dp`.
pub fn tunnelling_functional(
    f: &PhaseField,
    potential: &Potential,
    source: EnergySource<'_>,
    e_star: f64,
) -> Result<f64> {
    let grid = f.grid();
    let energy = match source {
        EnergySource::Quantum(s) => quantum_energy_effect(grid, s, e_star)?,
        EnergySource::Classical => classical_energy_effect(grid, potential, e_star)?,
    };
    let position = position_effect(grid, potential, e_star)?;
    inner_product(&position.field.sub(&energy.field)?, f)
}

fn finite_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.retain(|e| e.is_finite());
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |k| lo + k as f64 * step)
}

fn spectral_points(spectrum: &Spectrum) -> Vec<f64> {
    let levels = spectrum.distinct_energies();
    let mids = levels.windows(2).map(|w| 0.5 * (w[0] + w[1]));
    levels.iter().copied().chain(mids).collect()
}

/// `E*` grid for a tunnelling scan: 0, `sup V ± ε`, every captured level
/// and the midpoints between levels, a uniform refinement, and any extras.
fn tunnelling_grid(
    grid: &GridSpec,
    potential: &Potential,
    spectrum: Option<&Spectrum>,
    policy: &ScanPolicy,
) -> Result<Vec<f64>> {
    let sup = potential.sup(grid)?;
    let inf = potential.inf(grid)?;
    let lo = inf.min(0.0);
    let mut hi = sup + 0.05 * sup.abs().max(1.0);
    let mut pts = vec![0.0, sup - policy.epsilon, sup + policy.epsilon];
    pts.extend(&policy.extra);
    if let Some(s) = spectrum {
        pts.extend(spectral_points(s));
        hi = hi.min(s.complete_below());
    }
    pts.extend(linspace(lo, hi, policy.refine));
    let mut pts = finite_sorted(pts);
    if let Some(s) = spectrum {
        pts.retain(|&e| s.ensure_covers(e).is_ok());
    }
    if pts.is_empty() {
        return Err(Error::EmptyScan);
    }
    Ok(pts)
}

fn verdict(values: &[f64], e_grid: &[f64], tau: f64) -> (bool, Option<f64>, f64) {
    let (k, max) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    let verdict = max > tau;
    (verdict, verdict.then(|| e_grid[k]), max)
}

/// `2πħ⟨W_n, f⟩` for every eigenstate of `spectrum`.
fn eigen_overlaps(f: &PhaseField, spectrum: &Spectrum) -> Result<Vec<f64>> {
    let h = f.grid().planck_cell();
    (0..spectrum.len())
        .map(|n| {
            let w = wigner_of_box_state(&spectrum.eigenstate(n)?);
            Ok(h * inner_product(&w, f)?)
        })
        .collect()
}

fn prefix_sums(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 1);
    out.push(0.0);
    for x in v {
        out.push(out.last().unwrap() + x);
    }
    out
}

/// Region probabilities `∬ 𝓔_{x|V>E*} f` for each `E*`, via the position
/// marginal of `f`.
fn position_terms(f: &PhaseField, potential: &Potential, e_grid: &[f64]) -> Result<Vec<f64>> {
    let grid = f.grid();
    let marg = f.x_marginal();
    let dx = grid.dx();
    e_grid
        .par_iter()
        .map(|&e| {
            let w = potential.forbidden_weights(grid, e, IndicatorRule::default())?;
            Ok(w.iter().zip(marg.iter()).map(|(a, b)| a * b).sum::<f64>() * dx)
        })
        .collect()
}

/// Evaluates the functional over an `E*` grid and reports the verdict.
pub fn scan_tunnelling(
    f: &PhaseField,
    potential: &Potential,
    source: EnergySource<'_>,
    policy: &ScanPolicy,
) -> Result<TunnellingReport> {
    policy.validate()?;
    let grid = f.grid();
    let spectrum = match source {
        EnergySource::Quantum(s) => {
            grid.ensure_same(s.grid(), "state field and spectrum")?;
            Some(s)
        }
        EnergySource::Classical => None,
    };
    let e_grid = tunnelling_grid(grid, potential, spectrum, policy)?;
    let pos = position_terms(f, potential, &e_grid)?;
    let energy: Vec<f64> = match spectrum {
        Some(s) => {
            let total = integrate_2d(f);
            let cum = prefix_sums(&eigen_overlaps(f, s)?);
            e_grid.iter().map(|&e| total - cum[s.count_at_most(e)]).collect()
        }
        None => e_grid
            .par_iter()
            .map(|&e| inner_product(&classical_energy_effect(grid, potential, e)?.field, f))
            .collect::<Result<_>>()?,
    };
    let values: Vec<f64> = pos.iter().zip(&energy).map(|(a, b)| a - b).collect();
    tunnelling_report(f, potential, source, e_grid, values, policy.tau_det)
}

fn tunnelling_report(
    f: &PhaseField,
    potential: &Potential,
    source: EnergySource<'_>,
    e_grid: Vec<f64>,
    values: Vec<f64>,
    tau: f64,
) -> Result<TunnellingReport> {
    let (verdict, witness, max_violation) = verdict(&values, &e_grid, tau);
    let rate_op_negativity = match witness {
        Some(e) => Some(negativity_diagnostics(
            &tunnelling_rate_operator(f.grid(), potential, source, e)?.field,
        )),
        None => None,
    };
    Ok(TunnellingReport {
        flavor: source.flavor(),
        e_star_grid: e_grid,
        functional_values: values,
        verdict,
        witness_e_star: witness,
        max_violation,
        tau_det: tau,
        state_negativity: negativity_diagnostics(f),
        rate_op_negativity,
    })
}

/// The same scan evaluated in Hilbert space: region probabilities from the
/// density and energy probabilities from spectral populations. Exact for
/// states that fill the box, where the field route loses accuracy; the
/// negativity diagnostics still use the Wigner field of `state`.
pub fn scan_tunnelling_state(
    state: &(impl QuantumState + Sync),
    potential: &Potential,
    spectrum: &Spectrum,
    policy: &ScanPolicy,
) -> Result<TunnellingReport> {
    policy.validate()?;
    let grid = state.grid();
    grid.ensure_same(spectrum.grid(), "state and spectrum")?;
    let e_grid = tunnelling_grid(grid, potential, Some(spectrum), policy)?;
    let pos = e_grid
        .par_iter()
        .map(|&e| position_region_prob(state, potential, e))
        .collect::<Result<Vec<f64>>>()?;
    let cum = prefix_sums(&spectrum.populations(state)?);
    let weight = state.weight();
    let values = e_grid
        .iter()
        .zip(&pos)
        .map(|(&e, p)| p - (weight - cum[spectrum.count_at_most(e)]).max(0.0))
        .collect();
    let f = state_field(state)?;
    tunnelling_report(&f, potential, EnergySource::Quantum(spectrum), e_grid, values, policy.tau_det)
}

/// Wigner field of a (possibly mixed) state, without the boundary-layer
/// check so that box eigenstates are accepted.
pub fn state_field(state: &impl QuantumState) -> Result<PhaseField> {
    let mut acc = PhaseField::zeros(*state.grid());
    for (w, psi) in state.weighted() {
        acc = acc.combine(1.0, &wigner_of_box_state(psi), w)?;
    }
    Ok(acc)
}

/// Energy from which [`quantum_scan`] requires a complete spectrum.
pub fn scan_energy_floor(grid: &GridSpec, potential: &Potential) -> Result<f64> {
    let sup = potential.sup(grid)?;
    Ok(sup + 0.05 * sup.abs().max(1.0) + 1e-3)
}

/// Builds the Hamiltonian and a sufficient spectrum for `state`, then scans.
pub fn quantum_scan(
    state: &(impl QuantumState + Sync),
    potential: &Potential,
    kinetic: Kinetic,
    policy: &ScanPolicy,
) -> Result<(TunnellingReport, Spectrum)> {
    let grid = state.grid();
    let h = Hamiltonian::new(grid, potential, kinetic)?;
    let spectrum = capture_spectrum(&h, state, scan_energy_floor(grid, potential)?)?;
    let report = scan_tunnelling_state(state, potential, &spectrum, policy)?;
    Ok((report, spectrum))
}

/// Stationary-state criterion: `E0 < V0` and the state has weight inside the
/// barrier `[0, l)`. `psi` must be an eigenvector of the barrier Hamiltonian
/// (Fourier kinetic) with eigenvalue `E0`.
pub fn barrier_eigenstate_check(psi: &WaveFunction, e0: f64, v0: f64, l: f64) -> Result<bool> {
    barrier_eigenstate_check_with(psi, e0, v0, l, Kinetic::default(), TAU_DET)
}

pub fn barrier_eigenstate_check_with(
    psi: &WaveFunction,
    e0: f64,
    v0: f64,
    l: f64,
    kinetic: Kinetic,
    tau_det: f64,
) -> Result<bool> {
    let potential = Potential::barrier(v0, l)?;
    let h = Hamiltonian::new(psi.grid(), &potential, kinetic)?;
    let amps = psi.amplitudes().to_vec();
    let hv = h.apply_complex(&amps);
    let r: f64 = hv.iter().zip(&amps).map(|(a, b)| (a - b * e0).norm_sqr()).sum::<f64>().sqrt();
    let len: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let residual = r / (h.norm() * len);
    if !(residual <= EIGEN_RESIDUAL_LIMIT) {
        return Err(Error::NotEigenstate {
            residual,
            limit: EIGEN_RESIDUAL_LIMIT,
        });
    }
    // Any level strictly between 0 and V0 selects exactly the barrier cells.
    let inside = position_region_prob(psi, &potential, 0.5 * v0)?;
    Ok(e0 + tie_tolerance(e0) < v0 && inside > tau_det)
}

/// Wave-packet criterion at one instant: `P(0 ≤ x < l) > P(E > V0) + τ`.
pub fn packet_tunnelling_criterion(p_in_barrier: f64, p_energy_above: f64, tau_det: f64) -> bool {
    p_in_barrier > p_energy_above + tau_det
}

/// `P(|p| < √(2m(E* − sup V))) − P(E < E*)` on a phase-space field.
pub fn reflection_functional(
    f: &PhaseField,
    potential: &Potential,
    source: EnergySource<'_>,
    e_star: f64,
) -> Result<f64> {
    let grid = f.grid();
    let band = momentum_band_effect(grid, potential, e_star)?;
    let below = match source {
        EnergySource::Quantum(s) => quantum_energy_below_effect(grid, s, e_star)?,
        EnergySource::Classical => classical_energy_below_effect(grid, potential, e_star)?,
    };
    inner_product(&band.field.sub(&below.field)?, f)
}

fn reflection_grid(
    grid: &GridSpec,
    potential: &Potential,
    spectrum: Option<&Spectrum>,
    policy: &ScanPolicy,
) -> Result<Vec<f64>> {
    let sup = potential.sup(grid)?;
    let mut hi = sup + policy.reflection_span;
    let mut pts = vec![sup + policy.epsilon];
    pts.extend(&policy.extra);
    if let Some(s) = spectrum {
        pts.extend(spectral_points(s));
        hi = hi.min(s.complete_below());
    }
    pts.extend(linspace(sup, hi, policy.refine + 1).skip(1));
    let mut pts = finite_sorted(pts);
    pts.retain(|&e| e > sup && e <= sup + policy.reflection_span);
    if let Some(s) = spectrum {
        pts.retain(|&e| s.ensure_covers(e).is_ok());
    }
    if pts.is_empty() {
        return Err(Error::EmptyScan);
    }
    Ok(pts)
}

fn band_terms(f_p_marginal: &[f64], grid: &GridSpec, sup: f64, e_grid: &[f64]) -> Vec<f64> {
    let ps = grid.ps();
    e_grid
        .iter()
        .map(|&e| {
            ps.iter()
                .zip(f_p_marginal)
                .filter(|(&p, _)| in_momentum_band(p, grid.mass, sup, e))
                .map(|(_, m)| m)
                .sum()
        })
        .collect()
}

fn reflection_report(
    flavor: Flavor,
    e_grid: Vec<f64>,
    values: Vec<f64>,
    tau: f64,
) -> ReflectionReport {
    let (verdict, witness, max_violation) = verdict(&values, &e_grid, tau);
    ReflectionReport {
        flavor,
        e_star_grid: e_grid,
        functional_values: values,
        verdict,
        witness_e_star: witness,
        max_violation,
        tau_det: tau,
    }
}

/// Reflection functional over `E* > sup V` for a phase-space field.
pub fn scan_reflection(
    f: &PhaseField,
    potential: &Potential,
    source: EnergySource<'_>,
    policy: &ScanPolicy,
) -> Result<ReflectionReport> {
    policy.validate()?;
    let grid = f.grid();
    let spectrum = match source {
        EnergySource::Quantum(s) => {
            grid.ensure_same(s.grid(), "state field and spectrum")?;
            Some(s)
        }
        EnergySource::Classical => None,
    };
    let e_grid = reflection_grid(grid, potential, spectrum, policy)?;
    let sup = potential.sup(grid)?;
    let pm: Vec<f64> = f.p_marginal().iter().map(|m| m * grid.dp()).collect();
    let band = band_terms(&pm, grid, sup, &e_grid);
    let below: Vec<f64> = match spectrum {
        Some(s) => {
            let cum = prefix_sums(&eigen_overlaps(f, s)?);
            e_grid.iter().map(|&e| cum[s.count_below(e)]).collect()
        }
        None => e_grid
            .par_iter()
            .map(|&e| inner_product(&classical_energy_below_effect(grid, potential, e)?.field, f))
            .collect::<Result<_>>()?,
    };
    let values = band.iter().zip(&below).map(|(a, b)| a - b).collect();
    Ok(reflection_report(source.flavor(), e_grid, values, policy.tau_det))
}

/// Reflection scan evaluated in Hilbert space: momentum probabilities from
/// the Fourier transform, energy probabilities from spectral populations.
/// Agrees with [`scan_reflection`] on the Wigner field of the same state.
pub fn scan_reflection_state(
    state: &impl QuantumState,
    potential: &Potential,
    spectrum: &Spectrum,
    policy: &ScanPolicy,
) -> Result<ReflectionReport> {
    policy.validate()?;
    let grid = state.grid();
    let e_grid = reflection_grid(grid, potential, Some(spectrum), policy)?;
    let sup = potential.sup(grid)?;
    let mut pm = vec![0.0; grid.n_p];
    for (w, psi) in state.weighted() {
        for (o, v) in pm.iter_mut().zip(psi.momentum_density().iter()) {
            *o += w * v;
        }
    }
    let band = band_terms(&pm, grid, sup, &e_grid);
    let cum = prefix_sums(&spectrum.populations(state)?);
    let values = e_grid
        .iter()
        .zip(band)
        .map(|(&e, b)| b - cum[spectrum.count_below(e)])
        .collect();
    Ok(reflection_report(Flavor::Quantum, e_grid, values, policy.tau_det))
}
