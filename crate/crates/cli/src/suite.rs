//! Verification batteries shared by `classical-check` and `appendix-suite`.

use phasetunnel::classical::{classical_gaussian, classical_microcanonical, classical_no_tunnel_certificate, ClassicalState};
use phasetunnel::effects::{tunnelling_rate_operator_with, EnergySource};
use phasetunnel::gpt::eigenbasis_overlap;
use phasetunnel::grid::GridSpec;
use phasetunnel::spectral::{
    eigendecompose, free_momentum_energy_cdf, Hamiltonian, IndicatorRule, Kinetic, Potential, Selection,
    TabulatedPotential,
};
use phasetunnel::states::{ho_eigenstate, WaveFunction};
use phasetunnel::tunnelling::{barrier_eigenstate_check, quantum_scan, scan_tunnelling_state, ScanPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// One check of a battery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The quantity compared against `tolerance` (an error, or a margin).
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn within(name: &str, error: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: error < tolerance,
            measured: error,
            tolerance,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalDraw {
    pub index: usize,
    pub potential: String,
    pub state: String,
    pub e_star: f64,
    pub functional: f64,
    pub rate_operator_min: f64,
    pub passed: bool,
}

fn draw_potential(rng: &mut ChaCha8Rng, grid: &GridSpec) -> phasetunnel::Result<(Potential, String)> {
    Ok(match rng.random_range(0..3) {
        0 => {
            let w = rng.random_range(0.5..1.5);
            (Potential::harmonic(w)?, format!("harmonic(omega={w:.4})"))
        }
        1 => {
            let (v0, l) = (rng.random_range(0.5..3.0), rng.random_range(0.3..2.0));
            (Potential::barrier(v0, l)?, format!("barrier(v0={v0:.4}, l={l:.4})"))
        }
        _ => {
            let (a, b) = (rng.random_range(0.05..0.3), rng.random_range(1.0..2.5));
            let samples: Vec<(f64, f64)> = grid
                .xs()
                .iter()
                .map(|&x| (x, a * (x * x - b * b).powi(2)))
                .collect();
            let v = Potential::Custom(TabulatedPotential::from_samples(*grid, &samples)?);
            (v, format!("double_well(a={a:.4}, b={b:.4})"))
        }
    })
}

fn draw_state(rng: &mut ChaCha8Rng, grid: &GridSpec, potential: &Potential) -> phasetunnel::Result<(ClassicalState, String)> {
    if rng.random_bool(0.5) {
        let (mx, mp) = (rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0));
        let (vx, vp): (f64, f64) = (rng.random_range(0.2..2.0), rng.random_range(0.2..2.0));
        let c = rng.random_range(-0.8..0.8) * (vx * vp).sqrt();
        let s = classical_gaussian(grid, (mx, mp), [[vx, c], [c, vp]])?;
        Ok((s, format!("gaussian(mu=({mx:.3},{mp:.3}), var=({vx:.3},{vp:.3}), cov={c:.3})")))
    } else {
        let e = potential.inf(grid)? + rng.random_range(0.3..3.0);
        Ok((classical_microcanonical(grid, potential, e, None)?, format!("microcanonical(E={e:.4})")))
    }
}

/// `n` seeded (classical state, potential, `E*`) draws, each certified at its
/// own `E*`. Draws are generated sequentially, so results do not depend on
/// the thread count.
pub fn classical_draws(seed: u64, n: usize, grid: &GridSpec) -> phasetunnel::Result<Vec<ClassicalDraw>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(n);
    for index in 0..n {
        let (potential, pname) = draw_potential(&mut rng, grid)?;
        let (state, sname) = draw_state(&mut rng, grid, &potential)?;
        let e_star = rng.random_range(-0.5..5.0);
        cases.push((index, potential, pname, state, sname, e_star));
    }
    cases
        .into_par_iter()
        .map(|(index, potential, pname, state, sname, e_star)| {
            let cert = classical_no_tunnel_certificate(&state, &potential, &[e_star])?;
            let entry = cert.entries[0];
            Ok(ClassicalDraw {
                index,
                potential: pname,
                state: sname,
                e_star,
                functional: entry.functional,
                rate_operator_min: entry.rate_operator_min,
                passed: cert.passed,
            })
        })
        .collect()
}

/// Stationary barrier states: the eigenstate criterion and the full scan
/// agree on each of the lowest `count` levels.
pub fn barrier_equivalence(count: usize) -> phasetunnel::Result<Vec<Check>> {
    let (v0, l) = (2.0, 1.0);
    let g = GridSpec::standard();
    let v = Potential::barrier(v0, l)?;
    let h = Hamiltonian::new(&g, &v, Kinetic::Fourier)?;
    let spectrum = eigendecompose(&h, Selection::Below(2.0 * v0))?;
    let policy = ScanPolicy::default();
    (0..count)
        .into_par_iter()
        .map(|n| {
            let psi = spectrum.eigenstate(n)?;
            let e0 = spectrum.energies()[n];
            let check = barrier_eigenstate_check(&psi, e0, v0, l)?;
            let scan = scan_tunnelling_state(&psi, &v, &spectrum, &policy)?.verdict;
            Ok(Check {
                name: format!("barrier_level_{n}"),
                passed: check == scan,
                measured: e0,
                tolerance: 0.0,
                detail: format!("E = {e0:.6}: eigenstate criterion {check}, scan verdict {scan}"),
            })
        })
        .collect()
}

/// Probability of `p²/2m > E*` for the Gaussian momentum density of a
/// packet, by composite Simpson quadrature over `|p| > √(2mE*)`.
pub fn momentum_quadrature(p0: f64, sigma_x: f64, e_star: f64, mass: f64, hbar: f64) -> f64 {
    let sp = hbar / (2.0 * sigma_x);
    let density = |p: f64| (-(p - p0).powi(2) / (2.0 * sp * sp)).exp() / (sp * (2.0 * std::f64::consts::PI).sqrt());
    let pstar = (2.0 * mass * e_star).sqrt();
    let reach = p0.abs() + 14.0 * sp;
    if pstar >= reach {
        return 0.0;
    }
    let simpson = |a: f64, b: f64| {
        let n = 20_000;
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n)
            .map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * density(a + k as f64 * h))
            .sum();
        (density(a) + inner + density(b)) * h / 3.0
    };
    simpson(pstar, reach) + simpson(-reach, -pstar)
}

/// Closed-form energy CDF of free packets against momentum quadrature.
pub fn free_cdf_checks(seed: u64, count: usize) -> phasetunnel::Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let (p0, sx, e) = (rng.random_range(-3.0..3.0), rng.random_range(0.3..3.0), rng.random_range(0.0..5.0));
        let closed = free_momentum_energy_cdf(0.0, p0, sx, e, 1.0, 1.0)?;
        worst = worst.max((closed - momentum_quadrature(p0, sx, e, 1.0, 1.0)).abs());
    }
    Ok(Check::within("free_energy_cdf", worst, 1e-6, format!("{count} (p0, sigma_x, E*) triples")))
}

/// Harmonic ground state: scan verdict, functional at `ħω/2` against the
/// position tail, and the rate operator against its piecewise closed form.
pub fn harmonic_ground_checks() -> phasetunnel::Result<Vec<Check>> {
    let g = GridSpec::standard();
    let v = Potential::harmonic(1.0)?;
    let psi = ho_eigenstate(&g, 0, 1.0)?;
    let policy = ScanPolicy {
        extra: vec![0.5],
        ..ScanPolicy::default()
    };
    let (report, spectrum) = quantum_scan(&psi, &v, Kinetic::Fourier, &policy)?;
    let k = report
        .e_star_grid
        .iter()
        .position(|&e| e == 0.5)
        .expect("extra E* is part of the grid");
    let tail = gaussian_tail();
    let mut checks = vec![
        Check {
            name: "harmonic_ground_verdict".into(),
            passed: report.verdict && report.witness_e_star.is_some_and(|w| (w - 0.5).abs() < 0.05),
            measured: report.witness_e_star.unwrap_or(f64::NAN),
            tolerance: 0.05,
            detail: format!("verdict {}, max violation {:.6}", report.verdict, report.max_violation),
        },
        Check::within(
            "harmonic_ground_functional",
            (report.functional_values[k] - tail).abs(),
            1e-3,
            format!("functional {:.6} vs tail {tail:.6}", report.functional_values[k]),
        ),
    ];
    let rate = tunnelling_rate_operator_with(&g, &v, EnergySource::Quantum(&spectrum), 0.5, IndicatorRule::CellCenter)?;
    let mut worst: f64 = 0.0;
    for i in 0..g.n_x {
        for j in 0..g.n_p {
            let (x, p) = (g.x(i), g.p(j));
            let gauss = 2.0 * (-x * x - p * p).exp();
            let closed = if x.abs() > 1.0 { -gauss } else { 1.0 - gauss };
            worst = worst.max((rate.field.at(i, j) - closed).abs());
        }
    }
    let min = rate.field.min();
    checks.push(Check::within(
        "harmonic_rate_operator",
        worst,
        1e-3,
        format!("max deviation from closed form over the grid; minimum {min:.6}"),
    ));
    checks.push(Check {
        name: "harmonic_rate_operator_negative".into(),
        passed: min < 0.0,
        measured: min,
        tolerance: 0.0,
        detail: "rate operator minimum".into(),
    });
    Ok(checks)
}

/// `∫_{|x|>1} e^{-x²}/√π dx` by Simpson quadrature.
fn gaussian_tail() -> f64 {
    let n = 200_000;
    let (a, b) = (1.0, 12.0);
    let h = (b - a) / n as f64;
    let f = |x: f64| (-x * x).exp() / std::f64::consts::PI.sqrt();
    let inner: f64 = (1..n).map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h)).sum();
    2.0 * (f(a) + inner + f(b)) * h / 3.0
}

/// Overlaps of the Weyl symbols of `|i⟩⟨j|` for the lowest `count`
/// oscillator states against `⟨j1|j2⟩⟨i2|i1⟩` from the wave functions.
pub fn eigenbasis_checks(count: usize) -> phasetunnel::Result<Check> {
    let g = GridSpec::standard();
    let basis = (0..count)
        .map(|n| ho_eigenstate(&g, n, 1.0))
        .collect::<phasetunnel::Result<Vec<WaveFunction>>>()?;
    let mut quads = Vec::new();
    for i1 in 0..count {
        for j1 in 0..count {
            for i2 in 0..count {
                for j2 in 0..count {
                    quads.push((i1, j1, i2, j2));
                }
            }
        }
    }
    let worst = quads
        .par_iter()
        .map(|&(i1, j1, i2, j2)| {
            let overlap = eigenbasis_overlap(i1, j1, i2, j2, &basis)?;
            let oracle = (basis[j1].inner(&basis[j2])? * basis[i2].inner(&basis[i1])?).re;
            Ok((overlap - oracle).abs())
        })
        .collect::<phasetunnel::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Check::within(
        "eigenbasis_overlaps",
        worst,
        1e-4,
        format!("{} index quadruples over the lowest {count} levels", quads.len()),
    ))
}

/// The full verification battery.
pub fn appendix_suite(seed: u64, draws: usize, grid: &GridSpec) -> phasetunnel::Result<Vec<Check>> {
    let mut checks = barrier_equivalence(5)?;
    let classical = classical_draws(seed, draws, grid)?;
    let failures = classical.iter().filter(|d| !d.passed).count();
    let worst = classical
        .iter()
        .map(|d| d.functional)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check {
        name: "classical_no_tunnelling".into(),
        passed: failures == 0,
        measured: worst,
        tolerance: 1e-9,
        detail: format!("{failures} of {draws} draws failed"),
    });
    checks.push(free_cdf_checks(seed, 20)?);
    checks.extend(harmonic_ground_checks()?);
    checks.push(eigenbasis_checks(5)?);
    Ok(checks)
}
