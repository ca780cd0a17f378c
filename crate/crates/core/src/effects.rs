//! Effect fields: phase-space functions whose overlap with a state field is
//! an outcome probability.
//!
//! Position and momentum effects are the same in both theories. The quantum
//! energy effect is assembled from eigenstate Wigner fields,
//! `𝓔_{E>E*} = 2πħ Σ_{E_n>E*} W_n`; the classical one is the indicator of
//! `H(x,p) > E*`. Position-dependent indicators use the cell rule from
//! [`IndicatorRule`], with the same sub-samples for `V(x) > E*` and
//! `H(x,p) > E*`, so the classical set inclusion holds cell by cell.

use ndarray::Array2;
use serde::Serialize;

use crate::error::Result;
use crate::grid::{GridSpec, PhaseField};
use crate::spectral::{tie_tolerance, IndicatorRule, Potential, Spectrum};
use crate::states::wigner_of_box_state;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "e_star")]
pub enum EffectLabel {
    PositionRegion(f64),
    EnergyAbove(f64),
    EnergyBelow(f64),
    MomentumBand(f64),
    RateOperator(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    pub field: PhaseField,
    pub label: EffectLabel,
    pub flavor: Flavor,
}

impl Effect {
    pub fn with_flavor(mut self, flavor: Flavor) -> Self {
        self.flavor = flavor;
        self
    }
}

/// Where energy effects come from.
#[derive(Debug, Clone, Copy)]
pub enum EnergySource<'a> {
    Quantum(&'a Spectrum),
    Classical,
}

impl EnergySource<'_> {
    pub fn flavor(&self) -> Flavor {
        match self {
            EnergySource::Quantum(_) => Flavor::Quantum,
            EnergySource::Classical => Flavor::Classical,
        }
    }
}

/// Indicator of `V(x) > E*`, constant in `p`.
pub fn position_effect(grid: &GridSpec, potential: &Potential, e_star: f64) -> Result<Effect> {
    position_effect_with(grid, potential, e_star, IndicatorRule::default())
}

pub fn position_effect_with(
    grid: &GridSpec,
    potential: &Potential,
    e_star: f64,
    rule: IndicatorRule,
) -> Result<Effect> {
    let w = potential.forbidden_weights(grid, e_star, rule)?;
    let values = Array2::from_shape_fn((grid.n_x, grid.n_p), |(i, _)| w[i]);
    Ok(Effect {
        field: PhaseField::from_raw(*grid, values),
        label: EffectLabel::PositionRegion(e_star),
        flavor: Flavor::Quantum,
    })
}

/// `2πħ Σ W_n` over the eigenstates selected by `keep`.
fn eigen_sum(spectrum: &Spectrum, indices: std::ops::Range<usize>) -> Result<PhaseField> {
    let grid = *spectrum.grid();
    let mut acc = Array2::<f64>::zeros((grid.n_x, grid.n_p));
    for n in indices {
        let w = wigner_of_box_state(&spectrum.eigenstate(n)?);
        acc += w.values();
    }
    acc *= grid.planck_cell();
    Ok(PhaseField::from_raw(grid, acc))
}

/// `𝓔_{E>E*}` from the spectrum. Uses `1 − 2πħ Σ_{E_n≤E*} W_n`, or the
/// direct sum when the spectrum is complete and fewer levels lie above.
pub fn quantum_energy_effect(grid: &GridSpec, spectrum: &Spectrum, e_star: f64) -> Result<Effect> {
    grid.ensure_same(spectrum.grid(), "effect grid and spectrum")?;
    let below = spectrum.count_at_most(e_star);
    let field = if spectrum.is_complete() && spectrum.len() - below < below {
        eigen_sum(spectrum, below..spectrum.len())?
    } else {
        spectrum.ensure_covers(e_star)?;
        let sum = eigen_sum(spectrum, 0..below)?;
        PhaseField::constant(*grid, 1.0).sub(&sum)?
    };
    Ok(Effect {
        field,
        label: EffectLabel::EnergyAbove(e_star),
        flavor: Flavor::Quantum,
    })
}

/// `𝓔_{E<E*} = 2πħ Σ_{E_n<E*} W_n`.
pub fn quantum_energy_below_effect(grid: &GridSpec, spectrum: &Spectrum, e_star: f64) -> Result<Effect> {
    grid.ensure_same(spectrum.grid(), "effect grid and spectrum")?;
    spectrum.ensure_covers(e_star)?;
    Ok(Effect {
        field: eigen_sum(spectrum, 0..spectrum.count_below(e_star))?,
        label: EffectLabel::EnergyBelow(e_star),
        flavor: Flavor::Quantum,
    })
}

/// Per-cell sorted sub-sample values of `V`.
fn sorted_subsamples(grid: &GridSpec, potential: &Potential, rule: IndicatorRule) -> Result<Vec<Vec<f64>>> {
    let mut subs = potential.subsamples(grid, rule)?;
    for cell in &mut subs {
        cell.sort_by(f64::total_cmp);
    }
    Ok(subs)
}

fn classical_indicator(
    grid: &GridSpec,
    potential: &Potential,
    rule: IndicatorRule,
    count: impl Fn(&[f64], f64) -> usize,
) -> Result<PhaseField> {
    let subs = sorted_subsamples(grid, potential, rule)?;
    let ps = grid.ps();
    let m2 = 2.0 * grid.mass;
    let values = Array2::from_shape_fn((grid.n_x, grid.n_p), |(i, j)| {
        let cell = &subs[i];
        count(cell, ps[j] * ps[j] / m2) as f64 / cell.len() as f64
    });
    Ok(PhaseField::from_raw(*grid, values))
}

/// Indicator of `p²/2m + V(x) > E*`.
pub fn classical_energy_effect(grid: &GridSpec, potential: &Potential, e_star: f64) -> Result<Effect> {
    classical_energy_effect_with(grid, potential, e_star, IndicatorRule::default())
}

pub fn classical_energy_effect_with(
    grid: &GridSpec,
    potential: &Potential,
    e_star: f64,
    rule: IndicatorRule,
) -> Result<Effect> {
    let field = classical_indicator(grid, potential, rule, |cell, kin| {
        cell.len() - cell.partition_point(|&v| kin + v <= e_star)
    })?;
    Ok(Effect {
        field,
        label: EffectLabel::EnergyAbove(e_star),
        flavor: Flavor::Classical,
    })
}

/// Indicator of `p²/2m + V(x) < E*`.
pub fn classical_energy_below_effect(grid: &GridSpec, potential: &Potential, e_star: f64) -> Result<Effect> {
    let field = classical_indicator(grid, potential, IndicatorRule::default(), |cell, kin| {
        cell.partition_point(|&v| kin + v < e_star)
    })?;
    Ok(Effect {
        field,
        label: EffectLabel::EnergyBelow(e_star),
        flavor: Flavor::Classical,
    })
}

/// `𝓔_{E>E*} − 𝓔_{x|V(x)>E*}` in the flavor of `source`.
pub fn tunnelling_rate_operator(
    grid: &GridSpec,
    potential: &Potential,
    source: EnergySource<'_>,
    e_star: f64,
) -> Result<Effect> {
    tunnelling_rate_operator_with(grid, potential, source, e_star, IndicatorRule::default())
}

pub fn tunnelling_rate_operator_with(
    grid: &GridSpec,
    potential: &Potential,
    source: EnergySource<'_>,
    e_star: f64,
    rule: IndicatorRule,
) -> Result<Effect> {
    let energy = match source {
        EnergySource::Quantum(s) => quantum_energy_effect(grid, s, e_star)?,
        EnergySource::Classical => classical_energy_effect_with(grid, potential, e_star, rule)?,
    };
    let position = position_effect_with(grid, potential, e_star, rule)?;
    Ok(Effect {
        field: energy.field.sub(&position.field)?,
        label: EffectLabel::RateOperator(e_star),
        flavor: source.flavor(),
    })
}

/// `p²/2m + sup V < E*`, with the same tie tolerance as the energy levels
/// so that a free level sitting exactly at `E*` is excluded on both sides.
pub(crate) fn in_momentum_band(p: f64, mass: f64, sup: f64, e_star: f64) -> bool {
    p * p / (2.0 * mass) + sup < e_star - tie_tolerance(e_star)
}

/// Indicator of `|p| < √(2m(E* − sup V))`, constant in `x`; zero when
/// `E* ≤ sup V`.
pub fn momentum_band_effect(grid: &GridSpec, potential: &Potential, e_star: f64) -> Result<Effect> {
    let sup = potential.sup(grid)?;
    let ps = grid.ps();
    let values = Array2::from_shape_fn((grid.n_x, grid.n_p), |(_, j)| {
        if in_momentum_band(ps[j], grid.mass, sup, e_star) {
            1.0
        } else {
            0.0
        }
    });
    Ok(Effect {
        field: PhaseField::from_raw(*grid, values),
        label: EffectLabel::MomentumBand(e_star),
        flavor: Flavor::Quantum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::inner_product;
    use crate::spectral::{eigendecompose, energy_cdf, Hamiltonian, Kinetic, Selection};
    use crate::states::{gaussian_packet, ho_eigenstate, wigner_of_pure};

    fn setup() -> (GridSpec, Potential, Spectrum) {
        let g = GridSpec::standard();
        let v = Potential::harmonic(1.0).unwrap();
        let h = Hamiltonian::new(&g, &v, Kinetic::Fourier).unwrap();
        let s = eigendecompose(&h, Selection::Lowest(40)).unwrap();
        (g, v, s)
    }

    #[test]
    fn harmonic_position_effect() {
        let (g, v, _) = setup();
        let e = position_effect(&g, &v, 0.5).unwrap();
        let dx = g.dx();
        for i in 0..g.n_x {
            let x = g.x(i);
            let val = e.field.at(i, 7);
            if x.abs() > 1.0 + dx / 2.0 {
                assert_eq!(val, 1.0);
            } else if x.abs() < 1.0 - dx / 2.0 {
                assert_eq!(val, 0.0);
            }
        }
        assert_eq!(position_effect(&g, &v, 1e9).unwrap().field.max(), 0.0);
        assert_eq!(position_effect(&g, &v, -1.0).unwrap().field.min(), 1.0);
    }

    #[test]
    fn energy_effect_at_ground_level() {
        let (g, _, s) = setup();
        let e = quantum_energy_effect(&g, &s, 0.5).unwrap();
        assert!((e.field.nearest(0.0, 0.0) + 1.0).abs() < 1e-3);
        assert!(e.field.min() < 0.0);
    }

    #[test]
    fn energy_effect_below_ground_is_identity() {
        let (g, _, s) = setup();
        let e = quantum_energy_effect(&g, &s, 0.1).unwrap();
        assert!(e.field.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn energy_effect_duality() {
        let (g, _, s) = setup();
        let psi = gaussian_packet(&g, 0.7, -0.4, 0.9).unwrap();
        let w = wigner_of_pure(&psi).unwrap();
        for e_star in [0.3, 0.5, 1.7, 4.2] {
            let eff = quantum_energy_effect(&g, &s, e_star).unwrap();
            let a = inner_product(&eff.field, &w).unwrap();
            let b = energy_cdf(&psi, &s, e_star).unwrap();
            assert!((a - b).abs() < 1e-6, "{e_star}: {a} vs {b}");
        }
    }

    #[test]
    fn rate_operator_closed_form_points() {
        let (g, v, s) = setup();
        let r = tunnelling_rate_operator(&g, &v, EnergySource::Quantum(&s), 0.5).unwrap();
        assert!((r.field.nearest(0.0, 0.0) + 1.0).abs() < 1e-3);
        let i = ((2.0 - g.x_min) / g.dx()).round() as usize;
        let x = g.x(i);
        assert!((r.field.nearest(x, 0.0) + 2.0 * (-x * x).exp()).abs() < 1e-3);
    }

    #[test]
    fn classical_rate_operator_nonnegative() {
        let g = GridSpec::standard();
        for v in [Potential::harmonic(0.7).unwrap(), Potential::barrier(2.0, 1.3).unwrap()] {
            for e_star in [-0.5, 0.0, 0.4, 1.9, 2.0, 3.0] {
                let r = tunnelling_rate_operator(&g, &v, EnergySource::Classical, e_star).unwrap();
                assert!(r.field.min() >= 0.0);
            }
        }
    }

    #[test]
    fn classical_free_energy_effect() {
        let g = GridSpec::standard();
        let e = classical_energy_effect(&g, &Potential::free(g), 2.0).unwrap();
        for j in 0..g.n_p {
            let expect = if g.p(j).abs() > 2.0 { 1.0 } else { 0.0 };
            assert_eq!(e.field.at(100, j), expect);
        }
    }

    #[test]
    fn center_rule_classical_effects_are_binary() {
        let g = GridSpec::standard();
        let v = Potential::harmonic(1.0).unwrap();
        let e = classical_energy_effect_with(&g, &v, 1.3, IndicatorRule::CellCenter).unwrap();
        assert!(e.field.values().iter().all(|&x| x == 0.0 || x == 1.0));
        // Inside the ellipse H < E* the field is 0, outside 1.
        assert_eq!(e.field.nearest(0.0, 0.0), 0.0);
        assert_eq!(e.field.nearest(0.0, 2.0), 1.0);
        assert_eq!(e.field.nearest(2.0, 0.0), 1.0);
    }

    #[test]
    fn momentum_band() {
        let g = GridSpec::standard();
        let free = Potential::free(g);
        let b = momentum_band_effect(&g, &free, 0.5).unwrap();
        for j in 0..g.n_p {
            let expect = if g.p(j).abs() < 1.0 { 1.0 } else { 0.0 };
            assert_eq!(b.field.at(3, j), expect);
        }
        assert_eq!(momentum_band_effect(&g, &free, 0.0).unwrap().field.max(), 0.0);
        let psi = ho_eigenstate(&g, 0, 1.0).unwrap();
        let w = wigner_of_pure(&psi).unwrap();
        let p = inner_product(&b.field, &w).unwrap();
        // Momentum density of the ground state is a unit-variance-½ Gaussian.
        let exact = statrs::function::erf::erf(1.0);
        assert!((p - exact).abs() < 0.05);
    }
}
