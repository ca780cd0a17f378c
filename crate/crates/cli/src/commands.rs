//! Subcommand bodies. Each returns a JSON report plus whether the run met
//! the expectation it was asked to check.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use phasetunnel::effects::{position_effect, quantum_energy_effect};
use phasetunnel::gpt::{
    flag_effect_probabilities, gaussian_field, gaussian_purity, is_post_quantum, reconstruct_density_matrix,
    uncertainty_bound, GaussianMoments,
};
use phasetunnel::grid::{integrate_2d, PhaseField};
use phasetunnel::io::{write_field_csv, write_wigf};
use phasetunnel::spectral::{eigendecompose, Hamiltonian, Potential, Selection};
use phasetunnel::states::{negativity_diagnostics, purity, wigner_of_mixture, wigner_of_pure};
use phasetunnel::tunnelling::quantum_scan;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{BuiltState, ConfigError, ScenarioConfig};
use crate::suite;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Library(#[from] phasetunnel::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(context: impl AsRef<Path>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.as_ref().display().to_string();
    move |source| CliError::Io { context, source }
}

/// Settings shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub seed: u64,
    /// Artifact directory; overrides the config's `[output] dir`.
    pub out: Option<PathBuf>,
    /// Expected tunnelling or reflection verdict.
    pub expect: Option<bool>,
    /// Inline `[γxx, γxp, γpx, γpp]`.
    pub gamma: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub expectation_met: bool,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Self {
            report,
            expectation_met: true,
        }
    }
}

struct Artifacts(Option<PathBuf>);

impl Artifacts {
    fn new(config: &ScenarioConfig, opts: &Options) -> CliResult<Self> {
        let dir = opts.out.clone().or_else(|| config.output.dir.clone());
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(io_err(d))?;
        }
        Ok(Self(dir))
    }

    fn text(&self, name: &str, body: &str) -> CliResult<()> {
        if let Some(d) = &self.0 {
            let path = d.join(name);
            fs::write(&path, body).map_err(io_err(&path))?;
        }
        Ok(())
    }

    fn field(&self, stem: &str, field: &PhaseField) -> CliResult<()> {
        if let Some(d) = &self.0 {
            let path = d.join(format!("{stem}.wigf"));
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            write_wigf(field, BufWriter::new(file))?;
            let path = d.join(format!("{stem}.csv"));
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            write_field_csv(field, BufWriter::new(file))?;
        }
        Ok(())
    }

    fn report(&self, name: &str, report: &Value) -> CliResult<()> {
        self.text(name, &render(report))
    }
}

/// Pretty JSON with a trailing newline.
pub fn render(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn state_field(config: &ScenarioConfig) -> CliResult<PhaseField> {
    let spec = config.require_state().map_err(CliError::Invalid)?;
    Ok(match spec.build(&config.grid())? {
        BuiltState::Pure(psi) => wigner_of_pure(&psi)?,
        BuiltState::Mixed(rho) => wigner_of_mixture(&rho)?,
    })
}

pub fn wigner(config: &ScenarioConfig, opts: &Options) -> CliResult<Outcome> {
    let out = Artifacts::new(config, opts)?;
    let w = state_field(config)?;
    out.field("wigner", &w)?;
    let report = json!({
        "command": "wigner",
        "grid": config.grid(),
        "state": config.state,
        "integral": integrate_2d(&w),
        "purity": purity(&w),
        "negativity": negativity_diagnostics(&w),
    });
    out.report("wigner.json", &report)?;
    Ok(Outcome::ok(report))
}

pub fn tunnel_scan(config: &ScenarioConfig, opts: &Options) -> CliResult<Outcome> {
    let out = Artifacts::new(config, opts)?;
    let potential = config.require_potential().map_err(CliError::Invalid)?;
    let spec = config.require_state().map_err(CliError::Invalid)?;
    let (report, spectrum) = match spec.build(&config.grid())? {
        BuiltState::Pure(psi) => quantum_scan(&psi, &potential, config.kinetic, &config.scan)?,
        BuiltState::Mixed(rho) => quantum_scan(&rho, &potential, config.kinetic, &config.scan)?,
    };
    let mut csv = String::from("e_star,functional\n");
    for (e, f) in report.e_star_grid.iter().zip(&report.functional_values) {
        csv.push_str(&format!("{e},{f}\n"));
    }
    out.text("tunnel_scan.csv", &csv)?;
    let met = opts.expect.map_or(true, |e| e == report.verdict);
    let value = json!({
        "command": "tunnel-scan",
        "grid": config.grid(),
        "potential": config.potential,
        "state": config.state,
        "kinetic": config.kinetic,
        "scan": config.scan,
        "levels_captured": spectrum.len(),
        "complete_below": spectrum.complete_below(),
        "negativity_witnessed": report.negativity_witnessed(),
        "report": report,
    });
    out.report("tunnel_scan.json", &value)?;
    Ok(Outcome {
        report: value,
        expectation_met: met,
    })
}

pub fn reflect_scan(config: &ScenarioConfig, opts: &Options) -> CliResult<Outcome> {
    let out = Artifacts::new(config, opts)?;
    let scenario = config.reflection_scenario().map_err(CliError::Invalid)?;
    let run = scenario.run(&config.scan)?;
    let mut csv = String::from("t,max_violation,witness_e_star\n");
    for ((t, v), w) in run.times.iter().zip(&run.max_violation).zip(&run.witness_e_star) {
        let w = w.map_or(String::new(), |w| w.to_string());
        csv.push_str(&format!("{t},{v},{w}\n"));
    }
    out.text("reflect_scan.csv", &csv)?;
    let met = opts.expect.map_or(true, |e| e == run.verdict);
    let value = json!({
        "command": "reflect-scan",
        "scenario": scenario,
        "scan": config.scan,
        "run": run,
    });
    out.report("reflect_scan.json", &value)?;
    Ok(Outcome {
        report: value,
        expectation_met: met,
    })
}

pub fn evolve(config: &ScenarioConfig, opts: &Options) -> CliResult<Outcome> {
    let out = Artifacts::new(config, opts)?;
    let scenario = config.barrier_scenario().map_err(CliError::Invalid)?;
    let (run, _, spectrum) = scenario.run()?;
    let mut csv = String::from("t,P_in_barrier,P_E_above_V0,norm,wigner_min\n");
    for p in &run.series {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.t, p.p_in_barrier, p.p_energy_above, p.norm, p.wigner_min
        ));
    }
    out.text("evolve.csv", &csv)?;
    let times = run.tunnelling_times();
    let met = opts.expect.map_or(true, |e| e == !times.is_empty());
    let value = json!({
        "command": "evolve",
        "scenario": scenario,
        "levels_captured": spectrum.len(),
        "tunnelling_times": times,
        "norm_drift": run.norm_drift(),
        "energy_drift": run.energy_drift(),
        "initial_negative_volume": run.series.first().map(|p| p.negative_volume),
        "peak_negative_volume": run.series.iter().map(|p| p.negative_volume).fold(0.0, f64::max),
        "tau_det": run.tau_det,
    });
    out.report("evolve.json", &value)?;
    Ok(Outcome {
        report: value,
        expectation_met: met,
    })
}

pub fn classical_check(config: &ScenarioConfig, opts: &Options) -> CliResult<Outcome> {
    let out = Artifacts::new(config, opts)?;
    let block = config.classical.clone().unwrap_or_default();
    let grid = block.grid.build().expect("validated grid");
    let draws = suite::classical_draws(opts.seed, block.draws, &grid)?;
    let failures = draws.iter().filter(|d| !d.passed).count();
    let value = json!({
        "command": "classical-check",
        "seed": opts.seed,
        "grid": grid,
        "draws": draws.len(),
        "failures": failures,
        "passed": failures == 0,
        "worst_functional": draws.iter().map(|d| d.functional).fold(f64::NEG_INFINITY, f64::max),
        "worst_rate_operator_min": draws.iter().map(|d| d.rate_operator_min).fold(f64::INFINITY, f64::min),
        "cases": draws,
    });
    out.report("classical_check.json", &value)?;
    Ok(Outcome {
        report: value,
        expectation_met: failures == 0,
    })
}

fn moments(config: &ScenarioConfig, opts: &Options) -> CliResult<GaussianMoments> {
    if let Some([a, b, c, d]) = opts.gamma {
        let mu = config.gaussian.map_or((0.0, 0.0), |m| m.mu);
        return Ok(GaussianMoments::new(mu, [[a, b], [c, d]])?);
    }
    config
        .gaussian
        .ok_or_else(|| CliError::Invalid("no covariance: pass --gamma or add a [gaussian] block".into()))
}

pub fn purity_cmd(config: &ScenarioConfig, opts: &Options) -> CliResult<Outcome> {
    let out = Artifacts::new(config, opts)?;
    let m = moments(config, opts)?;
    let grid = config.grid();
    let mu = gaussian_purity(&m, grid.hbar)?;
    let w = gaussian_field(&grid, &m)?;
    let value = json!({
        "command": "purity",
        "moments": m,
        "purity": mu,
        "grid_purity": purity(&w),
        "post_quantum": is_post_quantum(&m, grid.hbar)?,
        "sigma_x_sigma_p": m.sigma_x() * m.sigma_p(),
        "uncertainty_bound": uncertainty_bound(mu, grid.hbar),
    });
    out.report("purity.json", &value)?;
    Ok(Outcome::ok(value))
}

pub fn postquantum(config: &ScenarioConfig, opts: &Options) -> CliResult<Outcome> {
    let out = Artifacts::new(config, opts)?;
    let m = moments(config, opts)?;
    let grid = config.grid();
    let w = gaussian_field(&grid, &m)?;
    out.field("gaussian", &w)?;
    let rho = reconstruct_density_matrix(&w);
    let eig = rho.eigenvalues();
    let potential = match &config.potential {
        Some(_) => config.require_potential().map_err(CliError::Invalid)?,
        None => Potential::harmonic(1.0)?,
    };
    let e_stars = [0.25, 0.5, 1.0, 2.0];
    let h = Hamiltonian::new(&grid, &potential, config.kinetic)?;
    let spectrum = eigendecompose(&h, Selection::Below(3.0))?;
    let mut effects = Vec::new();
    for &e in &e_stars {
        effects.push(position_effect(&grid, &potential, e)?);
        effects.push(quantum_energy_effect(&grid, &spectrum, e)?);
    }
    let flags = flag_effect_probabilities(&w, &effects)?;
    let value = json!({
        "command": "postquantum",
        "moments": m,
        "purity": gaussian_purity(&m, grid.hbar)?,
        "post_quantum": is_post_quantum(&m, grid.hbar)?,
        "trace": rho.trace(),
        "hermiticity_error": rho.hermiticity_error(),
        "min_eigenvalue": rho.min_eigenvalue(),
        "leading_eigenvalues": &eig[..eig.len().min(4)],
        "effects": to_value(&flags),
        "effects_outside_unit_interval": flags.iter().filter(|f| !f.in_unit_interval).count(),
    });
    out.report("postquantum.json", &value)?;
    Ok(Outcome::ok(value))
}

pub fn appendix_suite(config: &ScenarioConfig, opts: &Options) -> CliResult<Outcome> {
    let out = Artifacts::new(config, opts)?;
    let block = config.classical.clone().unwrap_or_default();
    let grid = block.grid.build().expect("validated grid");
    let checks = suite::appendix_suite(opts.seed, block.draws, &grid)?;
    let passed = checks.iter().all(|c| c.passed);
    let value = json!({
        "command": "appendix-suite",
        "seed": opts.seed,
        "passed": passed,
        "checks": checks,
    });
    out.report("appendix_suite.json", &value)?;
    Ok(Outcome {
        report: value,
        expectation_met: passed,
    })
}
