use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phasetunnel_cli::commands::{self, CliError, CliResult, Options, Outcome};
use phasetunnel_cli::config::{self, ScenarioConfig};
use phasetunnel_cli::suite::DEFAULT_SEED;

/// Phase-space tunnelling scenarios: Wigner fields, tunnelling and
/// reflection scans, wave-packet runs and verification batteries.
#[derive(Debug, Parser)]
#[command(name = "phasetunnel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML, or JSON with a `.json` extension).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV, JSON and WIGF artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Worker threads; 1 gives bit-reproducible output.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Wigner field of the configured state.
    Wigner,
    /// Scan the tunnelling functional over E*.
    TunnelScan {
        /// Exit with status 2 unless the verdict matches.
        #[arg(long)]
        expect: Option<bool>,
    },
    /// Propagate a packet and scan each snapshot for reflection.
    ReflectScan {
        #[arg(long)]
        expect: Option<bool>,
    },
    /// Propagate a packet at a barrier and record the barrier series.
    Evolve {
        #[arg(long)]
        expect: Option<bool>,
    },
    /// Randomized classical no-tunnelling certificates.
    ClassicalCheck,
    /// Purity and uncertainty bound of a Gaussian covariance.
    Purity {
        /// Covariance entries `γxx,γxp,γpx,γpp`.
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
    },
    /// Density-matrix and effect diagnostics of a (post-quantum) Gaussian.
    Postquantum {
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
    },
    /// The full verification battery.
    AppendixSuite,
}

fn load(path: Option<&PathBuf>) -> CliResult<ScenarioConfig> {
    match path {
        Some(p) => Ok(config::load(p)?),
        None => Ok(config::parse("", std::path::Path::new("<defaults>"))?),
    }
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("--threads: {e}")))?;
    }
    let config = load(cli.config.as_ref())?;
    let mut opts = Options {
        seed: cli.seed,
        out: cli.out.clone(),
        ..Options::default()
    };
    let gamma = |g: &Option<Vec<f64>>| -> CliResult<Option<[f64; 4]>> {
        match g.as_deref() {
            None => Ok(None),
            Some(&[a, b, c, d]) => Ok(Some([a, b, c, d])),
            Some(v) => Err(CliError::Invalid(format!("--gamma takes 4 entries, got {}", v.len()))),
        }
    };
    match &cli.command {
        Command::Wigner => commands::wigner(&config, &opts),
        Command::TunnelScan { expect } => {
            opts.expect = *expect;
            commands::tunnel_scan(&config, &opts)
        }
        Command::ReflectScan { expect } => {
            opts.expect = *expect;
            commands::reflect_scan(&config, &opts)
        }
        Command::Evolve { expect } => {
            opts.expect = *expect;
            commands::evolve(&config, &opts)
        }
        Command::ClassicalCheck => commands::classical_check(&config, &opts),
        Command::Purity { gamma: g } => {
            opts.gamma = gamma(g)?;
            commands::purity_cmd(&config, &opts)
        }
        Command::Postquantum { gamma: g } => {
            opts.gamma = gamma(g)?;
            commands::postquantum(&config, &opts)
        }
        Command::AppendixSuite => commands::appendix_suite(&config, &opts),
    }
}

fn main() -> ExitCode {
    // Status 2 is reserved for unmet expectations, so usage errors exit 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", commands::render(&outcome.report));
            if outcome.expectation_met {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
