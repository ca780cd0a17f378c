//! Scenario files: TOML (or JSON, chosen by extension) with every block
//! validated before any computation starts.

use std::fmt;
use std::path::{Path, PathBuf};

use phasetunnel::dynamics::{BarrierScenario, ReflectionScenario};
use phasetunnel::gpt::GaussianMoments;
use phasetunnel::grid::GridSpec;
use phasetunnel::spectral::{Kinetic, Potential, TabulatedPotential};
use phasetunnel::states::{gaussian_packet, ho_eigenstate, MixedState, WaveFunction};
use phasetunnel::tunnelling::ScanPolicy;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub kinetic: Kinetic,
    pub potential: Option<PotentialConfig>,
    pub state: Option<StateConfig>,
    #[serde(default)]
    pub scan: ScanPolicy,
    pub evolve: Option<EvolveConfig>,
    pub classical: Option<ClassicalConfig>,
    pub gaussian: Option<GaussianMoments>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub hbar: f64,
    pub mass: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_min: -12.0,
            x_max: 12.0,
            n_x: 512,
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Free,
    Harmonic {
        #[serde(default = "one")]
        omega: f64,
    },
    Barrier {
        v0: f64,
        l: f64,
    },
    /// Piecewise-linear through `(x, V)` samples.
    Tabulated { samples: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    Gaussian {
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        p0: f64,
        sigma_x: f64,
    },
    HoEigenstate {
        n: usize,
        #[serde(default = "one")]
        omega: f64,
    },
    Mixture { components: Vec<Component> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub weight: f64,
    pub state: StateConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalConfig {
    /// Randomized (state, potential, `E*`) draws.
    pub draws: usize,
    /// Grid of the randomized draws.
    pub grid: GridConfig,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            draws: 100,
            grid: GridConfig {
                n_x: 256,
                ..GridConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

fn default_stride() -> usize {
    100
}

/// A config problem, with the line it refers to when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.path.display(), line, self.message),
            None => write!(f, "{}: {}", self.path.display(), self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Reads and validates a scenario file.
pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: None,
        message: e.to_string(),
    })?;
    parse(&text, path)
}

/// Parses `text`; `path` selects the encoding (`.json` or TOML) and labels
/// errors.
pub fn parse(text: &str, path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let err = |line, message: String| ConfigError {
        path: path.to_path_buf(),
        line,
        message,
    };
    let config: ScenarioConfig = if json {
        serde_json::from_str(text).map_err(|e| err(Some(e.line()), e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            err(line, e.message().to_string())
        })?
    };
    if let Err((table, key, message)) = config.validate() {
        return Err(err(locate(text, table, key, json), message));
    }
    Ok(config)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[table]` (TOML) or of `"key"` after `"table"`
/// (JSON); falls back to the table itself.
fn locate(text: &str, table: &str, key: &str, json: bool) -> Option<usize> {
    let lines: Vec<&str> = text.lines().collect();
    let is_key = |l: &str, k: &str| {
        let t = l.trim_start();
        if json {
            t.starts_with(&format!("\"{k}\""))
        } else {
            t.strip_prefix(k).is_some_and(|r| r.trim_start().starts_with('='))
        }
    };
    let start = if table.is_empty() {
        Some(0)
    } else {
        lines.iter().position(|l| {
            let t = l.trim();
            if json {
                t.starts_with(&format!("\"{table}\""))
            } else {
                t == format!("[{table}]") || is_key(l, table)
            }
        })
    }?;
    let found = lines[start..]
        .iter()
        .enumerate()
        .skip(usize::from(!table.is_empty()))
        .take_while(|(_, l)| json || !l.trim_start().starts_with('['))
        .find(|(_, l)| is_key(l, key))
        .map(|(k, _)| start + k + 1);
    found.or(Some(start + 1))
}

type Invalid = (&'static str, &'static str, String);

impl ScenarioConfig {
    fn validate(&self) -> Result<(), Invalid> {
        let grid = self.grid.build().map_err(|(k, m)| ("grid", k, m))?;
        if let Some(c) = &self.classical {
            c.grid.build().map_err(|(k, m)| ("classical", k, m))?;
        }
        if let Some(p) = &self.potential {
            p.build(&grid).map_err(|e| ("potential", "kind", e.to_string()))?;
        }
        if let Some(s) = &self.state {
            s.validate().map_err(|(k, m)| ("state", k, m))?;
        }
        let s = &self.scan;
        if !(s.tau_det >= 0.0 && s.tau_det.is_finite()) {
            return Err(("scan", "tau_det", format!("tau_det = {} must be non-negative", s.tau_det)));
        }
        if !(s.epsilon > 0.0) {
            return Err(("scan", "epsilon", format!("epsilon = {} must be positive", s.epsilon)));
        }
        if !(s.reflection_span > 0.0) {
            return Err(("scan", "reflection_span", "reflection_span must be positive".into()));
        }
        if let Some(e) = &self.evolve {
            if !(e.dt > 0.0 && e.dt.is_finite()) {
                return Err(("evolve", "dt", format!("dt = {} must be positive", e.dt)));
            }
            if e.steps == 0 {
                return Err(("evolve", "steps", "steps must be at least 1".into()));
            }
            if e.stride == 0 {
                return Err(("evolve", "stride", "stride must be at least 1".into()));
            }
        }
        if let Some(m) = &self.gaussian {
            m.validate().map_err(|e| ("gaussian", "gamma", e.to_string()))?;
        }
        Ok(())
    }

    pub fn grid(&self) -> GridSpec {
        self.grid.build().expect("validated grid")
    }

    pub fn require_potential(&self) -> Result<Potential, String> {
        let p = self.potential.as_ref().ok_or("config has no [potential] block")?;
        p.build(&self.grid()).map_err(|e| e.to_string())
    }

    pub fn require_state(&self) -> Result<&StateConfig, String> {
        self.state.as_ref().ok_or_else(|| "config has no [state] block".to_string())
    }

    /// The `[potential]`, `[state]` and `[evolve]` blocks read as a barrier
    /// scenario. Without `[evolve]` the library defaults apply.
    pub fn barrier_scenario(&self) -> Result<BarrierScenario, String> {
        let mut sc = match &self.evolve {
            Some(_) => BarrierScenario {
                grid: self.grid(),
                ..BarrierScenario::default()
            },
            None => BarrierScenario::default(),
        };
        match &self.potential {
            Some(PotentialConfig::Barrier { v0, l }) => (sc.v0, sc.l) = (*v0, *l),
            None => {}
            Some(_) => return Err("evolve needs a barrier potential".into()),
        }
        self.apply_packet(&mut sc.x0, &mut sc.p0, &mut sc.sigma_x)?;
        if let Some(e) = &self.evolve {
            sc.dt = e.dt;
            sc.t_end = e.dt * e.steps as f64;
            sc.stride = e.stride;
        }
        Ok(sc)
    }

    /// As [`Self::barrier_scenario`]; a free potential gives the no-barrier
    /// control.
    pub fn reflection_scenario(&self) -> Result<ReflectionScenario, String> {
        let mut sc = match &self.evolve {
            Some(_) => ReflectionScenario {
                grid: self.grid(),
                ..ReflectionScenario::default()
            },
            None => ReflectionScenario::default(),
        };
        match &self.potential {
            Some(PotentialConfig::Barrier { v0, l }) => (sc.v0, sc.l) = (*v0, *l),
            Some(PotentialConfig::Free) => sc.v0 = 0.0,
            None => {}
            Some(_) => return Err("reflect-scan needs a barrier or free potential".into()),
        }
        self.apply_packet(&mut sc.x0, &mut sc.p0, &mut sc.sigma_x)?;
        if let Some(e) = &self.evolve {
            sc.dt = e.dt;
            sc.t_end = e.dt * e.steps as f64;
            sc.stride = e.stride;
        }
        Ok(sc)
    }

    fn apply_packet(&self, x0: &mut f64, p0: &mut f64, sigma_x: &mut f64) -> Result<(), String> {
        match &self.state {
            Some(StateConfig::Gaussian { x0: a, p0: b, sigma_x: c }) => {
                (*x0, *p0, *sigma_x) = (*a, *b, *c);
                Ok(())
            }
            None => Ok(()),
            Some(_) => Err("propagation needs a gaussian initial state".into()),
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec, (&'static str, String)> {
        if !self.n_x.is_power_of_two() || self.n_x < 16 {
            return Err(("n_x", format!("n_x = {} must be a power of two >= 16", self.n_x)));
        }
        if !(self.x_max > self.x_min) {
            return Err(("x_max", format!("x_max = {} must exceed x_min = {}", self.x_max, self.x_min)));
        }
        if !(self.hbar > 0.0) {
            return Err(("hbar", format!("hbar = {} must be positive", self.hbar)));
        }
        if !(self.mass > 0.0) {
            return Err(("mass", format!("mass = {} must be positive", self.mass)));
        }
        GridSpec::new(self.x_min, self.x_max, self.n_x, self.hbar, self.mass).map_err(|e| ("x_min", e.to_string()))
    }
}

impl PotentialConfig {
    pub fn build(&self, grid: &GridSpec) -> phasetunnel::Result<Potential> {
        match self {
            PotentialConfig::Free => Ok(Potential::free(*grid)),
            PotentialConfig::Harmonic { omega } => Potential::harmonic(*omega),
            PotentialConfig::Barrier { v0, l } => Potential::barrier(*v0, *l),
            PotentialConfig::Tabulated { samples } => {
                Ok(Potential::Custom(TabulatedPotential::from_samples(*grid, samples)?))
            }
        }
    }
}

/// A state built from config: pure or mixed.
pub enum BuiltState {
    Pure(WaveFunction),
    Mixed(MixedState),
}

impl StateConfig {
    fn validate(&self) -> Result<(), (&'static str, String)> {
        match self {
            StateConfig::Gaussian { sigma_x, .. } if !(*sigma_x > 0.0) => {
                Err(("sigma_x", format!("sigma_x = {sigma_x} must be positive")))
            }
            StateConfig::HoEigenstate { omega, .. } if !(*omega > 0.0) => {
                Err(("omega", format!("omega = {omega} must be positive")))
            }
            StateConfig::Mixture { components } => {
                if components.is_empty() {
                    return Err(("components", "a mixture needs at least one component".into()));
                }
                for c in components {
                    if !(c.weight > 0.0) {
                        return Err(("weight", format!("weight = {} must be positive", c.weight)));
                    }
                    if matches!(c.state, StateConfig::Mixture { .. }) {
                        return Err(("components", "mixtures cannot be nested".into()));
                    }
                    c.state.validate()?;
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(("components", format!("weights sum to {total}, not 1")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self, grid: &GridSpec) -> phasetunnel::Result<BuiltState> {
        Ok(match self {
            StateConfig::Gaussian { x0, p0, sigma_x } => BuiltState::Pure(gaussian_packet(grid, *x0, *p0, *sigma_x)?),
            StateConfig::HoEigenstate { n, omega } => BuiltState::Pure(ho_eigenstate(grid, *n, *omega)?),
            StateConfig::Mixture { components } => {
                let parts = components
                    .iter()
                    .map(|c| match c.state.build(grid)? {
                        BuiltState::Pure(psi) => Ok((c.weight, psi)),
                        BuiltState::Mixed(_) => unreachable!("nested mixtures are rejected"),
                    })
                    .collect::<phasetunnel::Result<Vec<_>>>()?;
                BuiltState::Mixed(MixedState::new(parts)?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toml(text: &str) -> Result<ScenarioConfig, ConfigError> {
        parse(text, Path::new("s.toml"))
    }

    #[test]
    fn minimal_scenario() {
        let c = toml("[potential]\nkind = \"harmonic\"\n[state]\nkind = \"ho_eigenstate\"\nn = 0\n").unwrap();
        assert_eq!(c.grid(), GridSpec::standard());
        assert_eq!(c.potential, Some(PotentialConfig::Harmonic { omega: 1.0 }));
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let e = toml("[grid]\nn_x = 256\nspacing = 3\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("spacing"), "{e}");
    }

    #[test]
    fn unknown_state_kind() {
        let e = toml("[state]\nkind = \"squeezed\"\nr = 1\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("squeezed"), "{e}");
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let e = toml("[grid]\nx_min = -4\nn_x = 300\n\n[state]\nkind = \"gaussian\"\nsigma_x = 1\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = toml("[grid]\nn_x = 256\n\n[state]\nkind = \"gaussian\"\nsigma_x = -1\n").unwrap_err();
        assert_eq!(e.line, Some(6));
        assert_eq!(e.to_string(), "s.toml:6: sigma_x = -1 must be positive");
    }

    #[test]
    fn json_encoding() {
        let text = "{\n  \"grid\": {\"n_x\": 256},\n  \"potential\": {\"kind\": \"barrier\", \"v0\": 2, \"l\": 1}\n}\n";
        let c = parse(text, Path::new("s.json")).unwrap();
        assert_eq!(c.grid.n_x, 256);
        let e = parse("{\n \"grid\": {\"n_x\": 100}\n}", Path::new("s.json")).unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn mixture_weights_must_sum_to_one() {
        let text = "[state]\nkind = \"mixture\"\ncomponents = [\n  { weight = 0.5, state = { kind = \"ho_eigenstate\", n = 0 } },\n  { weight = 0.4, state = { kind = \"ho_eigenstate\", n = 1 } },\n]\n";
        assert!(toml(text).unwrap_err().message.contains("sum"));
        assert!(toml(&text.replace("0.4", "0.5")).is_ok());
    }
}
