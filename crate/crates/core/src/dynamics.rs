//! Time evolution by Strang splitting, with a Crank–Nicolson propagator as
//! an independent cross-check, and the barrier probability series of a
//! packet hitting a rectangular barrier.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::spectral::{
    capture_spectrum, discretize_hamiltonian, kinetic_energies, position_region_prob, Hamiltonian,
    Kinetic, Potential, Spectrum,
};
use crate::states::{gaussian_packet, negativity_diagnostics, wigner_of_box_state, WaveFunction};
use crate::tunnelling::{packet_tunnelling_criterion, scan_reflection_state, ScanPolicy, TAU_DET};

/// Probability allowed in the outer grid layer before a run is aborted.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

/// Largest accepted difference between one step and two half steps.
pub const STEP_HALVING_LIMIT: f64 = 1e-8;

/// One Strang step `e^{−iVdt/2ħ} e^{−iTdt/ħ} e^{−iVdt/2ħ}`, with the kinetic
/// factor applied in Fourier space.
pub struct SplitStep {
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl SplitStep {
    pub fn new(grid: &GridSpec, potential: &Potential, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", "must be positive"));
        }
        let hbar = grid.hbar;
        let v = potential.sample(grid)?;
        let half_potential = v
            .iter()
            .map(|&v| Complex64::from_polar(1.0, -v * dt / (2.0 * hbar)))
            .collect();
        let n = grid.n_x as f64;
        let kinetic = kinetic_energies(grid)
            .iter()
            .map(|&t| Complex64::from_polar(1.0 / n, -t * dt / hbar))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n_x);
        let inverse = planner.plan_fft_inverse(grid.n_x);
        let scratch = vec![Complex64::default(); forward.get_inplace_scratch_len()];
        Ok(Self {
            half_potential,
            kinetic,
            forward,
            inverse,
            scratch,
        })
    }

    pub fn step(&mut self, psi: &mut [Complex64]) {
        for (a, v) in psi.iter_mut().zip(&self.half_potential) {
            *a *= v;
        }
        self.forward.process_with_scratch(psi, &mut self.scratch);
        for (a, k) in psi.iter_mut().zip(&self.kinetic) {
            *a *= k;
        }
        self.inverse.process_with_scratch(psi, &mut self.scratch);
        for (a, v) in psi.iter_mut().zip(&self.half_potential) {
            *a *= v;
        }
    }
}

/// Snapshots of an evolution, taken at `t = 0` and every `stride` steps.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub stride: usize,
    pub n_steps: usize,
    pub times: Vec<f64>,
    pub states: Vec<WaveFunction>,
}

/// `‖one step of dt − two steps of dt/2‖` from `psi`.
pub fn step_halving_error(psi: &WaveFunction, potential: &Potential, dt: f64) -> Result<f64> {
    let grid = psi.grid();
    let mut full = psi.amplitudes().to_vec();
    SplitStep::new(grid, potential, dt)?.step(&mut full);
    let mut half = psi.amplitudes().to_vec();
    let mut stepper = SplitStep::new(grid, potential, 0.5 * dt)?;
    stepper.step(&mut half);
    stepper.step(&mut half);
    let diff: f64 = full.iter().zip(&half).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok((diff * grid.dx()).sqrt())
}

/// Propagates `psi` for `n_steps` steps of `dt`. Aborts when more than
/// [`BOUNDARY_MASS_LIMIT`] reaches the outer grid layer, where the periodic
/// transform would wrap it around.
pub fn split_step_evolve(
    psi: &WaveFunction,
    potential: &Potential,
    dt: f64,
    n_steps: usize,
    stride: usize,
) -> Result<Trajectory> {
    if stride == 0 {
        return Err(invalid("stride", "must be at least 1"));
    }
    let grid = *psi.grid();
    let halving = step_halving_error(psi, potential, dt)?;
    if halving > STEP_HALVING_LIMIT {
        return Err(invalid(
            "dt",
            format!("step-halving error {halving:.3e} exceeds {STEP_HALVING_LIMIT:e}"),
        ));
    }
    let mut stepper = SplitStep::new(&grid, potential, dt)?;
    let mut amps = psi.amplitudes().to_vec();
    let mut times = vec![0.0];
    let mut states = vec![psi.clone()];
    for s in 1..=n_steps {
        stepper.step(&mut amps);
        let current = WaveFunction::new(grid, amps.clone().into())?;
        let mass = current.edge_mass();
        let t = s as f64 * dt;
        if mass > BOUNDARY_MASS_LIMIT {
            return Err(Error::BoundaryReached { time: t, mass });
        }
        if s % stride == 0 || s == n_steps {
            times.push(t);
            states.push(current);
        }
    }
    Ok(Trajectory {
        dt,
        stride,
        n_steps,
        times,
        states,
    })
}

/// Crank–Nicolson propagation with the finite-difference Hamiltonian and
/// Dirichlet walls.
pub fn crank_nicolson_evolve(
    psi: &WaveFunction,
    potential: &Potential,
    dt: f64,
    n_steps: usize,
) -> Result<WaveFunction> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", "must be positive"));
    }
    let grid = *psi.grid();
    let h = discretize_hamiltonian(&grid, potential)?;
    let n = h.len();
    let a = Complex64::new(0.0, 0.5 * dt / grid.hbar);
    let diag: Vec<Complex64> = h.diag().iter().map(|&d| 1.0 + a * d).collect();
    let off: Vec<Complex64> = h.off_diag().iter().map(|&e| a * e).collect();
    // Thomas elimination is reused across steps.
    let mut c = vec![Complex64::default(); n];
    let mut denom = vec![Complex64::default(); n];
    denom[0] = diag[0];
    for i in 1..n {
        c[i - 1] = off[i - 1] / denom[i - 1];
        denom[i] = diag[i] - off[i - 1] * c[i - 1];
    }
    let mut cur = psi.amplitudes().to_vec();
    let mut rhs = vec![Complex64::default(); n];
    for _ in 0..n_steps {
        for i in 0..n {
            let mut r = (2.0 - diag[i]) * cur[i];
            if i > 0 {
                r -= off[i - 1] * cur[i - 1];
            }
            if i + 1 < n {
                r -= off[i] * cur[i + 1];
            }
            rhs[i] = r;
        }
        cur[0] = rhs[0] / denom[0];
        for i in 1..n {
            cur[i] = (rhs[i] - off[i - 1] * cur[i - 1]) / denom[i];
        }
        for i in (0..n - 1).rev() {
            let next = cur[i + 1];
            cur[i] -= c[i] * next;
        }
    }
    WaveFunction::new(grid, cur.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub p_in_barrier: f64,
    pub p_energy_above: f64,
    pub norm: f64,
    pub wigner_min: f64,
    pub negative_volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationRun {
    pub dt: f64,
    pub n_steps: usize,
    pub stride: usize,
    pub tau_det: f64,
    pub series: Vec<SeriesPoint>,
    /// Snapshots where `P(0 ≤ x < l) > P(E > V0) + τ`.
    pub tunnelling_mask: Vec<bool>,
}

impl PropagationRun {
    pub fn tunnelling_times(&self) -> Vec<f64> {
        self.series
            .iter()
            .zip(&self.tunnelling_mask)
            .filter(|(_, &m)| m)
            .map(|(p, _)| p.t)
            .collect()
    }

    pub fn norm_drift(&self) -> f64 {
        self.series.iter().map(|p| (p.norm - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn energy_drift(&self) -> f64 {
        let first = self.series.first().map_or(0.0, |p| p.p_energy_above);
        self.series
            .iter()
            .map(|p| (p.p_energy_above - first).abs())
            .fold(0.0, f64::max)
    }
}

/// Barrier and energy probabilities of every snapshot, from `|ψ|²` and the
/// spectral populations, with Wigner negativity diagnostics.
pub fn track_barrier_probabilities(
    run: &Trajectory,
    spectrum: &Spectrum,
    v0: f64,
    l: f64,
) -> Result<PropagationRun> {
    let barrier = Potential::barrier(v0, l)?;
    spectrum.ensure_covers(v0)?;
    let above = spectrum.count_at_most(v0);
    let series = run
        .times
        .iter()
        .zip(&run.states)
        .map(|(&t, psi)| {
            let norm = psi.norm_sq();
            let pops = spectrum.populations(psi)?;
            let below: f64 = pops[..above].iter().sum();
            let neg = negativity_diagnostics(&wigner_of_box_state(psi));
            Ok(SeriesPoint {
                t,
                p_in_barrier: position_region_prob(psi, &barrier, 0.5 * v0)?,
                p_energy_above: (norm - below).max(0.0),
                norm,
                wigner_min: neg.min_value,
                negative_volume: neg.negative_volume,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tunnelling_mask = series
        .iter()
        .map(|p| packet_tunnelling_criterion(p.p_in_barrier, p.p_energy_above, TAU_DET))
        .collect();
    Ok(PropagationRun {
        dt: run.dt,
        n_steps: run.n_steps,
        stride: run.stride,
        tau_det: TAU_DET,
        series,
        tunnelling_mask,
    })
}

/// Largest change of `P(E > E*)` along the trajectory over `e_star_grid`.
pub fn energy_cdf_drift(run: &Trajectory, spectrum: &Spectrum, e_star_grid: &[f64]) -> Result<f64> {
    for &e in e_star_grid {
        spectrum.ensure_covers(e)?;
    }
    let counts: Vec<usize> = e_star_grid.iter().map(|&e| spectrum.count_at_most(e)).collect();
    let profile = |psi: &WaveFunction| -> Result<Vec<f64>> {
        let pops = spectrum.populations(psi)?;
        let norm = psi.norm_sq();
        Ok(counts.iter().map(|&k| norm - pops[..k].iter().sum::<f64>()).collect())
    };
    let Some(first) = run.states.first() else {
        return Ok(0.0);
    };
    let base = profile(first)?;
    let mut drift: f64 = 0.0;
    for psi in &run.states[1..] {
        for (a, b) in profile(psi)?.iter().zip(&base) {
            drift = drift.max((a - b).abs());
        }
    }
    Ok(drift)
}

/// A Gaussian packet sent at a rectangular barrier `[0, l)` of height `v0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierScenario {
    pub grid: GridSpec,
    pub v0: f64,
    pub l: f64,
    pub x0: f64,
    pub p0: f64,
    pub sigma_x: f64,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
}

impl Default for BarrierScenario {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(-32.0, 32.0, 1024, 1.0, 1.0).expect("valid default grid"),
            v0: 2.0,
            l: 1.0,
            x0: -12.0,
            p0: 1.5,
            sigma_x: 2.0,
            dt: 5e-4,
            t_end: 14.0,
            stride: 40,
        }
    }
}

impl BarrierScenario {
    pub fn potential(&self) -> Result<Potential> {
        Potential::barrier(self.v0, self.l)
    }

    pub fn initial_state(&self) -> Result<WaveFunction> {
        gaussian_packet(&self.grid, self.x0, self.p0, self.sigma_x)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Spectrum of the barrier Hamiltonian, complete up to past `v0`.
    pub fn spectrum(&self, psi: &WaveFunction) -> Result<Spectrum> {
        let h = Hamiltonian::new(&self.grid, &self.potential()?, Kinetic::Fourier)?;
        capture_spectrum(&h, psi, self.v0 + 0.5)
    }

    pub fn run(&self) -> Result<(PropagationRun, Trajectory, Spectrum)> {
        let psi = self.initial_state()?;
        let spectrum = self.spectrum(&psi)?;
        let traj = split_step_evolve(&psi, &self.potential()?, self.dt, self.n_steps(), self.stride)?;
        let run = track_barrier_probabilities(&traj, &spectrum, self.v0, self.l)?;
        Ok((run, traj, spectrum))
    }
}

/// Reflection scan of every snapshot of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionRun {
    pub times: Vec<f64>,
    pub max_violation: Vec<f64>,
    pub witness_e_star: Vec<Option<f64>>,
    /// True when some snapshot reflects.
    pub verdict: bool,
    pub tau_det: f64,
}

pub fn reflection_series(
    run: &Trajectory,
    potential: &Potential,
    spectrum: &Spectrum,
    policy: &ScanPolicy,
) -> Result<ReflectionRun> {
    let reports = run
        .states
        .iter()
        .map(|psi| scan_reflection_state(psi, potential, spectrum, policy))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReflectionRun {
        times: run.times.clone(),
        max_violation: reports.iter().map(|r| r.max_violation).collect(),
        witness_e_star: reports.iter().map(|r| r.witness_e_star).collect(),
        verdict: reports.iter().any(|r| r.verdict),
        tau_det: policy.tau_det,
    })
}

/// A packet launched above a barrier (or at no barrier when `v0 = 0`),
/// scanned for reflection at every snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReflectionScenario {
    pub grid: GridSpec,
    pub v0: f64,
    pub l: f64,
    pub x0: f64,
    pub p0: f64,
    pub sigma_x: f64,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
}

impl Default for ReflectionScenario {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(-32.0, 32.0, 512, 1.0, 1.0).expect("valid default grid"),
            v0: 2.0,
            l: 1.0,
            x0: -13.0,
            p0: 3.0,
            sigma_x: 2.0,
            dt: 1e-3,
            t_end: 8.0,
            stride: 100,
        }
    }
}

impl ReflectionScenario {
    pub fn potential(&self) -> Result<Potential> {
        if self.v0 == 0.0 {
            Ok(Potential::free(self.grid))
        } else {
            Potential::barrier(self.v0, self.l)
        }
    }

    pub fn run(&self, policy: &ScanPolicy) -> Result<ReflectionRun> {
        let potential = self.potential()?;
        let psi = gaussian_packet(&self.grid, self.x0, self.p0, self.sigma_x)?;
        let h = Hamiltonian::new(&self.grid, &potential, Kinetic::Fourier)?;
        let sup = potential.sup(&self.grid)?;
        let spectrum = capture_spectrum(&h, &psi, sup + policy.reflection_span + 1e-3)?;
        let n_steps = (self.t_end / self.dt).round() as usize;
        let traj = split_step_evolve(&psi, &potential, self.dt, n_steps, self.stride)?;
        reflection_series(&traj, &potential, &spectrum, policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::ho_eigenstate;

    #[test]
    fn free_packet_at_rest_stays() {
        let g = GridSpec::standard();
        let psi = gaussian_packet(&g, 1.0, 0.0, 1.0).unwrap();
        let traj = split_step_evolve(&psi, &Potential::free(g), 1e-3, 2000, 500).unwrap();
        for s in &traj.states {
            assert!((s.mean_position() - 1.0).abs() < 1e-6);
            assert!((s.norm_sq() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn coherent_state_returns_after_period() {
        let g = GridSpec::standard();
        let ground = ho_eigenstate(&g, 0, 1.0).unwrap();
        let shifted = WaveFunction::from_real(
            g,
            &g.xs().iter().map(|&x| (-(x - 2.0) * (x - 2.0) / 2.0).exp()).collect::<Vec<_>>(),
        )
        .unwrap()
        .normalized()
        .unwrap();
        let n = 6283;
        let dt = 2.0 * std::f64::consts::PI / n as f64;
        let v = Potential::harmonic(1.0).unwrap();
        let traj = split_step_evolve(&shifted, &v, dt, n, n).unwrap();
        let end = traj.states.last().unwrap();
        assert!(shifted.inner(end).unwrap().norm_sqr() > 1.0 - 1e-4);
        let stay = split_step_evolve(&ground, &v, dt, 100, 100).unwrap();
        assert!(ground.inner(stay.states.last().unwrap()).unwrap().norm_sqr() > 1.0 - 1e-10);
    }

    #[test]
    fn boundary_abort() {
        let g = GridSpec::standard();
        let psi = gaussian_packet(&g, 4.0, 4.0, 1.0).unwrap();
        let r = split_step_evolve(&psi, &Potential::free(g), 1e-3, 3000, 100);
        assert!(matches!(r, Err(Error::BoundaryReached { .. })));
    }

    #[test]
    fn crank_nicolson_agrees_with_split_step() {
        let g = GridSpec::new(-24.0, 24.0, 1024, 1.0, 1.0).unwrap();
        let v = Potential::barrier(2.0, 1.0).unwrap();
        let psi = gaussian_packet(&g, -6.0, 1.5, 1.0).unwrap();
        let traj = split_step_evolve(&psi, &v, 1e-3, 6000, 6000).unwrap();
        let cn = crank_nicolson_evolve(&psi, &v, 1e-3, 6000).unwrap();
        let transmitted = |s: &WaveFunction| {
            let d = s.density();
            g.xs().iter().zip(d.iter()).filter(|(&x, _)| x >= 1.0).map(|(_, p)| p).sum::<f64>() * g.dx()
        };
        let a = transmitted(traj.states.last().unwrap());
        let b = transmitted(&cn);
        assert!(a > 0.01);
        assert!((a - b).abs() < 0.05 * b, "{a} vs {b}");
    }
}
