//! Acceptance battery. Every criterion runs, prints one PASS/FAIL line with
//! its evidence, and the test fails at the end if any criterion failed.
//!
//! Reference values come from oracles written here: Simpson quadratures of
//! closed-form densities and Hilbert-space inner products.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use phasetunnel::classical::{classical_gaussian, classical_microcanonical, classical_no_tunnel_certificate};
use phasetunnel::dynamics::{BarrierScenario, ReflectionScenario};
use phasetunnel::effects::{tunnelling_rate_operator, tunnelling_rate_operator_with, EnergySource};
use phasetunnel::gpt::{eigenbasis_overlap, gaussian_field, gaussian_purity, reconstruct_density_matrix, GaussianMoments};
use phasetunnel::grid::GridSpec;
use phasetunnel::spectral::{
    capture_spectrum, eigendecompose, energy_cdf, free_momentum_energy_cdf, position_region_prob, Hamiltonian,
    IndicatorRule, Kinetic, Potential, Selection,
};
use phasetunnel::states::{
    gaussian_packet, ho_eigenstate, negativity_diagnostics, purity, wigner_of_mixture, wigner_of_pure, MixedState,
};
use phasetunnel::tunnelling::{
    barrier_eigenstate_check, scan_tunnelling_state, tunnelling_functional, ScanPolicy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Verdict = Result<String, String>;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h)).sum();
    (f(a) + inner + f(b)) * h / 3.0
}

fn check(ok: bool, evidence: String) -> Verdict {
    if ok {
        Ok(evidence)
    } else {
        Err(evidence)
    }
}

/// Ground state of the unit oscillator through the binary.
fn harmonic_ground_scan() -> Verdict {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_phasetunnel"))
        .args(["tunnel-scan", "--expect", "true", "--config"])
        .arg(scenario("harmonic_ground.toml"))
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let r = &json["report"];
    let grid: Vec<f64> = serde_json::from_value(r["e_star_grid"].clone()).map_err(|e| e.to_string())?;
    let values: Vec<f64> = serde_json::from_value(r["functional_values"].clone()).map_err(|e| e.to_string())?;
    let witness = r["witness_e_star"].as_f64().ok_or("no witness")?;
    let k = grid.iter().position(|&e| e == 0.5).ok_or("E* = 1/2 missing from the scan")?;
    // One scan cell: the wider of the two grid gaps around 1/2.
    let cell = (grid[k] - grid[k.saturating_sub(1)]).max(grid[(k + 1).min(grid.len() - 1)] - grid[k]);
    let oracle = 2.0 * simpson(|x| (-x * x).exp() / PI.sqrt(), 1.0, 12.0, 200_000);
    let err = (values[k] - oracle).abs();
    check(
        r["verdict"] == true && (witness - 0.5).abs() <= cell && err < 1e-3 && elapsed < Duration::from_secs(30),
        format!(
            "witness {witness} (cell {cell:.3}), functional {:.6} vs tail {oracle:.6}, {:.1}s",
            values[k],
            elapsed.as_secs_f64()
        ),
    )
}

fn rate_operator_closed_form() -> Verdict {
    let g = GridSpec::standard();
    let v = Potential::harmonic(1.0).map_err(|e| e.to_string())?;
    let h = Hamiltonian::new(&g, &v, Kinetic::Fourier).map_err(|e| e.to_string())?;
    let s = eigendecompose(&h, Selection::Below(2.0)).map_err(|e| e.to_string())?;
    // Point-sampled indicators, matching the pointwise closed form.
    let rate = tunnelling_rate_operator_with(&g, &v, EnergySource::Quantum(&s), 0.5, IndicatorRule::CellCenter)
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        // Sample where the Gaussian is not negligible, plus the far field.
        let (i, j) = if rng.random_bool(0.8) {
            (rng.random_range(192..320), rng.random_range(192..320))
        } else {
            (rng.random_range(0..g.n_x), rng.random_range(0..g.n_p))
        };
        let (x, p) = (g.x(i), g.p(j));
        let gauss = 2.0 * (-x * x).exp() * (-p * p).exp();
        let expect = if 0.5 * x * x > 0.5 { -gauss } else { 1.0 - gauss };
        worst = worst.max((rate.field.at(i, j) - expect).abs());
    }
    let min = rate.field.min();
    check(worst < 1e-3 && min < 0.0, format!("max error {worst:.2e} at 1000 points, minimum {min:.4}"))
}

fn classical_impossibility() -> Verdict {
    let g = GridSpec::new(-12.0, 12.0, 256, 1.0, 1.0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut draws = Vec::new();
    for _ in 0..100 {
        let v = match rng.random_range(0..3) {
            0 => Potential::harmonic(rng.random_range(0.3..2.0)),
            1 => Potential::barrier(rng.random_range(0.2..5.0), rng.random_range(0.1..3.0)),
            _ => {
                let (a, b) = (rng.random_range(0.02..0.2), rng.random_range(0.5..3.0));
                let values = g.xs().mapv(|x| a * (x * x - b * b).powi(2) - 0.5);
                Potential::tabulated(g, values)
            }
        }
        .map_err(|e| e.to_string())?;
        let microcanonical = rng.random_bool(0.4);
        let (mx, mp, vx, vp, rho): (f64, f64, f64, f64, f64) = (
            rng.random_range(-4.0..4.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.1..3.0),
            rng.random_range(0.1..3.0),
            rng.random_range(-0.9..0.9),
        );
        let energy = rng.random_range(0.2..4.0);
        let e_star = rng.random_range(-1.0..6.0);
        draws.push((v, microcanonical, (mx, mp, vx, vp, rho), energy, e_star));
    }
    let results = draws
        .par_iter()
        .map(|(v, micro, (mx, mp, vx, vp, rho), energy, e_star)| {
            let state = if *micro {
                let e = v.inf(&g)? + energy;
                classical_microcanonical(&g, v, e, None)?
            } else {
                let c = rho * (vx * vp).sqrt();
                classical_gaussian(&g, (*mx, *mp), [[*vx, c], [c, *vp]])?
            };
            let cert = classical_no_tunnel_certificate(&state, v, &[*e_star])?;
            let rate = tunnelling_rate_operator(&g, v, EnergySource::Classical, *e_star)?;
            Ok((cert.entries[0].functional, rate.field.min()))
        })
        .collect::<phasetunnel::Result<Vec<(f64, f64)>>>()
        .map_err(|e| e.to_string())?;
    let failures = results.iter().filter(|(f, m)| *f > 1e-9 || *m < 0.0).count();
    let worst = results.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    check(failures == 0, format!("{failures} of 100 draws failed, largest functional {worst:.2e}"))
}

fn barrier_packet_run() -> Verdict {
    let start = Instant::now();
    let (run, _, _) = BarrierScenario::default().run().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let times = run.tunnelling_times();
    let drift = run.energy_drift();
    let first = run.series[0].negative_volume;
    let peak = run.series.iter().map(|p| p.negative_volume).fold(0.0, f64::max);
    check(
        !times.is_empty() && drift < 1e-6 && first <= 1e-6 && peak > 1e-3 && elapsed < Duration::from_secs(120),
        format!(
            "{} tunnelling snapshots from t = {:.2}, P(E>V0) drift {drift:.1e}, negative volume {first:.1e} -> {peak:.3}, {:.1}s",
            times.len(),
            times.first().copied().unwrap_or(f64::NAN),
            elapsed.as_secs_f64()
        ),
    )
}

fn barrier_eigenstates() -> Verdict {
    let g = GridSpec::standard();
    let v = Potential::barrier(2.0, 1.0).map_err(|e| e.to_string())?;
    let h = Hamiltonian::new(&g, &v, Kinetic::Fourier).map_err(|e| e.to_string())?;
    let s = eigendecompose(&h, Selection::Below(4.0)).map_err(|e| e.to_string())?;
    let mut agree = 0;
    let mut notes = Vec::new();
    for n in 0..5 {
        let psi = s.eigenstate(n).map_err(|e| e.to_string())?;
        let a = barrier_eigenstate_check(&psi, s.energies()[n], 2.0, 1.0).map_err(|e| e.to_string())?;
        let b = scan_tunnelling_state(&psi, &v, &s, &ScanPolicy::default())
            .map_err(|e| e.to_string())?
            .verdict;
        agree += usize::from(a == b);
        notes.push(format!("{a}/{b}"));
    }
    check(agree == 5, format!("criterion/scan per level: {}", notes.join(" ")))
}

fn dual_route_identity() -> Verdict {
    let g = GridSpec::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let triples: Vec<_> = (0..50)
        .map(|_| {
            let kind = rng.random_range(0..2);
            let (a, b) = (rng.random_range(0.5..3.0), rng.random_range(0.3..2.0));
            let packet = (rng.random_range(-3.0..3.0), rng.random_range(-1.5..1.5), rng.random_range(0.5..1.1));
            (kind, a, b, packet, rng.random_range(0.0..3.0))
        })
        .collect();
    let errors = triples
        .par_iter()
        .map(|&(kind, a, b, (x0, p0, sx), e_star)| {
            let v = if kind == 0 { Potential::barrier(a, b)? } else { Potential::harmonic(b)? };
            let psi = gaussian_packet(&g, x0, p0, sx)?;
            let h = Hamiltonian::new(&g, &v, Kinetic::Fourier)?;
            let s = capture_spectrum(&h, &psi, e_star + 1.0)?;
            let field = tunnelling_functional(&wigner_of_pure(&psi)?, &v, EnergySource::Quantum(&s), e_star)?;
            let hilbert = position_region_prob(&psi, &v, e_star)? - energy_cdf(&psi, &s, e_star)?;
            Ok((field - hilbert).abs())
        })
        .collect::<phasetunnel::Result<Vec<f64>>>()
        .map_err(|e| e.to_string())?;
    let worst = errors.iter().copied().fold(0.0, f64::max);
    check(worst < 1e-3, format!("max |field - (P_x - P_E)| = {worst:.2e} over 50 triples"))
}

fn hudson_and_purity() -> Verdict {
    let g = GridSpec::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_min, mut worst_purity) = (f64::INFINITY, 0.0f64);
    for _ in 0..20 {
        let psi = gaussian_packet(
            &g,
            rng.random_range(-3.0..3.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.4..1.15),
        )
        .map_err(|e| e.to_string())?;
        let w = wigner_of_pure(&psi).map_err(|e| e.to_string())?;
        worst_min = worst_min.min(negativity_diagnostics(&w).min_value);
        worst_purity = worst_purity.max((purity(&w) - 1.0).abs());
    }
    let parts = vec![
        (0.5, ho_eigenstate(&g, 0, 1.0).map_err(|e| e.to_string())?),
        (0.5, ho_eigenstate(&g, 1, 1.0).map_err(|e| e.to_string())?),
    ];
    let mixed = wigner_of_mixture(&MixedState::new(parts).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mixed_purity = purity(&mixed);
    check(
        worst_min >= -1e-6 && worst_purity < 1e-4 && (mixed_purity - 0.5).abs() < 1e-3,
        format!("min W {worst_min:.1e}, purity error {worst_purity:.1e}, mixture purity {mixed_purity:.6}"),
    )
}

fn post_quantum_battery() -> Verdict {
    let g = GridSpec::standard();
    let run = |v: f64| -> phasetunnel::Result<(f64, f64)> {
        let m = GaussianMoments::diagonal((0.0, 0.0), v, v)?;
        let rho = reconstruct_density_matrix(&gaussian_field(&g, &m)?);
        Ok((gaussian_purity(&m, 1.0)?, rho.min_eigenvalue()))
    };
    let (pq_purity, pq_min) = run(0.25).map_err(|e| e.to_string())?;
    let (q_purity, q_min) = run(0.5).map_err(|e| e.to_string())?;
    check(
        (pq_purity - 2.0).abs() < 1e-12 && pq_min < -1e-3 && (q_purity - 1.0).abs() < 1e-3 && q_min >= -1e-6,
        format!("diag(1/4): purity {pq_purity}, min eig {pq_min:.4}; diag(1/2): purity {q_purity}, min eig {q_min:.1e}"),
    )
}

fn eigenbasis_orthogonality() -> Verdict {
    let g = GridSpec::standard();
    let basis = (0..5)
        .map(|n| ho_eigenstate(&g, n, 1.0))
        .collect::<phasetunnel::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let quads: Vec<_> = (0..625).map(|k| (k / 125, (k / 25) % 5, (k / 5) % 5, k % 5)).collect();
    let worst = quads
        .par_iter()
        .map(|&(i1, j1, i2, j2)| {
            let overlap = eigenbasis_overlap(i1, j1, i2, j2, &basis)?;
            // Tr(|i1⟩⟨j1| |j2⟩⟨i2|) from the wave functions.
            let trace = (basis[j1].inner(&basis[j2])? * basis[i2].inner(&basis[i1])?).re;
            Ok((overlap - trace).abs())
        })
        .collect::<phasetunnel::Result<Vec<f64>>>()
        .map_err(|e| e.to_string())?
        .into_iter()
        .fold(0.0, f64::max);
    check(worst < 1e-4, format!("max error {worst:.1e} over 625 index quadruples"))
}

fn reflection_runs() -> Verdict {
    let policy = ScanPolicy::default();
    let barrier = ReflectionScenario::default().run(&policy).map_err(|e| e.to_string())?;
    let free = ReflectionScenario {
        v0: 0.0,
        ..ReflectionScenario::default()
    }
    .run(&policy)
    .map_err(|e| e.to_string())?;
    let peak = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    check(
        barrier.verdict && !free.verdict,
        format!(
            "barrier peak violation {:.4}, free peak {:.1e}",
            peak(&barrier.max_violation),
            peak(&free.max_violation)
        ),
    )
}

fn free_energy_cdf() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (p0, sx, e): (f64, f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(0.3..3.0), rng.random_range(0.0..5.0));
        let sp = 1.0 / (2.0 * sx);
        let density = |p: f64| (-(p - p0).powi(2) / (2.0 * sp * sp)).exp() / (sp * (2.0 * PI).sqrt());
        // P(p²/2 ≤ E*) over the band, then complemented.
        let pstar = (2.0 * e).sqrt();
        let inside = simpson(density, -pstar, pstar, 40_000);
        let closed = free_momentum_energy_cdf(0.0, p0, sx, e, 1.0, 1.0).map_err(|e| e.to_string())?;
        worst = worst.max((closed - (1.0 - inside)).abs());
    }
    check(worst < 1e-6, format!("max error {worst:.1e} over 20 (p0, sigma_x, E*) triples"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, &str, fn() -> Verdict); 11] = [
        ("1", "harmonic ground state tunnels (CLI)", harmonic_ground_scan),
        ("2", "rate operator closed form", rate_operator_closed_form),
        ("3", "classical ensembles never tunnel", classical_impossibility),
        ("4", "barrier packet run", barrier_packet_run),
        ("5", "barrier eigenstate equivalence", barrier_eigenstates),
        ("6", "dual-route identity", dual_route_identity),
        ("7", "Hudson and purity suite", hudson_and_purity),
        ("8", "post-quantum battery", post_quantum_battery),
        ("9", "eigenbasis orthogonality", eigenbasis_orthogonality),
        ("10", "reflection", reflection_runs),
        ("11", "free energy CDF", free_energy_cdf),
    ];
    let mut failed = Vec::new();
    for (id, title, run) in criteria {
        let start = Instant::now();
        let verdict = run();
        let secs = start.elapsed().as_secs_f64();
        match &verdict {
            Ok(ev) => println!("PASS [{id:>2}] {title} ({secs:.1}s): {ev}"),
            Err(ev) => {
                println!("FAIL [{id:>2}] {title} ({secs:.1}s): {ev}");
                failed.push(id);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

