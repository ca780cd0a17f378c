//! Phase-space tunnelling analysis for one-dimensional quantum systems.
//!
//! A state is represented by its Wigner function on an `(x, p)` grid.
//! Measurements are effect fields, and probabilities are phase-space inner
//! products. A state *tunnels* when, for some energy `E*`, it is found in
//! the region `V(x) > E*` more often than its energy exceeds `E*`:
//!
//! ```
//! use phasetunnel::prelude::*;
//!
//! let grid = GridSpec::standard();
//! let ground = ho_eigenstate(&grid, 0, 1.0)?;
//! let potential = Potential::harmonic(1.0)?;
//! let (report, _) = quantum_scan(&ground, &potential, Kinetic::Fourier, &ScanPolicy::default())?;
//! assert!(report.verdict);
//! # Ok::<(), phasetunnel::Error>(())
//! ```
//!
//! Every quantum effect has a classical counterpart built from the same
//! grid, and a non-negative classical distribution never tunnels
//! ([`classical::classical_no_tunnel_certificate`]).

pub mod classical;
pub mod dynamics;
pub mod effects;
pub mod error;
pub mod gpt;
pub mod grid;
pub mod io;
pub mod spectral;
pub mod states;
pub mod tunnelling;
mod wigner;

pub use error::{Error, Result};

/// The types and functions most analyses need.
pub mod prelude {
    pub use crate::classical::{
        classical_gaussian, classical_microcanonical, classical_no_tunnel_certificate, ClassicalState,
    };
    pub use crate::dynamics::{split_step_evolve, track_barrier_probabilities, BarrierScenario};
    pub use crate::effects::{
        momentum_band_effect, position_effect, quantum_energy_effect, tunnelling_rate_operator, Effect,
        EnergySource, Flavor,
    };
    pub use crate::error::{Error, Result};
    pub use crate::gpt::{gaussian_purity, is_post_quantum, reconstruct_density_matrix, GaussianMoments};
    pub use crate::grid::{inner_product, integrate_2d, GridSpec, PhaseField};
    pub use crate::spectral::{
        capture_spectrum, eigendecompose, energy_cdf, position_region_prob, Hamiltonian, Kinetic,
        Potential, Selection, Spectrum,
    };
    pub use crate::states::{
        gaussian_packet, ho_eigenstate, negativity_diagnostics, purity, wigner_of_mixture, wigner_of_pure,
        MixedState, QuantumState, WaveFunction,
    };
    pub use crate::tunnelling::{
        quantum_scan, scan_reflection, scan_tunnelling, scan_tunnelling_state, ScanPolicy, TunnellingReport,
    };
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/phase_space.md")]
    mod phase_space {}
    #[doc = include_str!("../../../book/src/effects.md")]
    mod effects {}
    #[doc = include_str!("../../../book/src/tunnelling.md")]
    mod tunnelling {}
    #[doc = include_str!("../../../book/src/classical.md")]
    mod classical {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/post_quantum.md")]
    mod post_quantum {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
