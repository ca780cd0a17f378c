use phasetunnel::classical::{classical_gaussian, classical_no_tunnel_certificate};
use phasetunnel::effects::{position_effect, quantum_energy_effect, EnergySource};
use phasetunnel::grid::{inner_product, integrate_2d, GridSpec, PhaseField};
use phasetunnel::spectral::{capture_spectrum, energy_cdf, position_region_prob, Hamiltonian, Kinetic, Potential};
use phasetunnel::states::{
    gaussian_packet, negativity_diagnostics, purity, wigner_of_mixture, wigner_of_pure, MixedState,
};
use phasetunnel::tunnelling::tunnelling_functional;
use phasetunnel::Error;
use proptest::prelude::*;

fn small_grid() -> GridSpec {
    GridSpec::new(-4.0, 4.0, 64, 1.0, 1.0).unwrap()
}

fn field_from(seed: &[f64]) -> PhaseField {
    let g = small_grid();
    PhaseField::from_fn(g, |x, p| {
        seed[0] * (seed[1] * x).sin() + seed[2] * (seed[3] * p).cos() + seed[4] * x * p
    })
    .unwrap()
}

fn potential_strategy() -> impl Strategy<Value = Potential> {
    prop_oneof![
        (0.5f64..3.0, 0.3f64..2.0).prop_map(|(v0, l)| Potential::barrier(v0, l).unwrap()),
        (0.5f64..1.5).prop_map(|w| Potential::harmonic(w).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inner_product_symmetric_and_bilinear(
        a in prop::collection::vec(-2.0f64..2.0, 5),
        b in prop::collection::vec(-2.0f64..2.0, 5),
        c in prop::collection::vec(-2.0f64..2.0, 5),
        s in -3.0f64..3.0,
    ) {
        let (fa, fb, fc) = (field_from(&a), field_from(&b), field_from(&c));
        let ab = inner_product(&fa, &fb).unwrap();
        prop_assert!((ab - inner_product(&fb, &fa).unwrap()).abs() <= 1e-12 * (1.0 + ab.abs()));
        let lhs = inner_product(&fa.combine(s, &fb, 1.0).unwrap(), &fc).unwrap();
        let rhs = s * inner_product(&fa, &fc).unwrap() + inner_product(&fb, &fc).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        let sum = integrate_2d(&fa.combine(1.0, &fb, s).unwrap());
        prop_assert!((sum - integrate_2d(&fa) - s * integrate_2d(&fb)).abs() <= 1e-9 * (1.0 + sum.abs()));
    }

    #[test]
    fn gaussian_packets_are_positive_and_pure(
        x0 in -3.0f64..3.0, p0 in -2.0f64..2.0, sx in 0.4f64..1.15,
    ) {
        let g = GridSpec::standard();
        let w = wigner_of_pure(&gaussian_packet(&g, x0, p0, sx).unwrap()).unwrap();
        prop_assert!(negativity_diagnostics(&w).min_value >= -1e-6);
        prop_assert!((purity(&w) - 1.0).abs() < 1e-4);
        prop_assert!((integrate_2d(&w) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn packets_too_wide_for_the_window_are_rejected(sx in 1.3f64..1.8) {
        let g = GridSpec::standard();
        let r = wigner_of_pure(&gaussian_packet(&g, 0.0, 0.0, sx).unwrap());
        let rejected = matches!(r, Err(Error::CoherenceWidth { .. }));
        prop_assert!(rejected);
    }

    #[test]
    fn mixture_field_is_convex_combination(t in 0.05f64..0.95, x0 in -3.0f64..3.0) {
        let g = GridSpec::standard();
        let a = gaussian_packet(&g, x0, 0.5, 1.0).unwrap();
        let b = gaussian_packet(&g, -x0, -0.5, 0.8).unwrap();
        let mixed = wigner_of_mixture(&MixedState::new(vec![(t, a.clone()), (1.0 - t, b.clone())]).unwrap()).unwrap();
        let direct = wigner_of_pure(&a).unwrap().combine(t, &wigner_of_pure(&b).unwrap(), 1.0 - t).unwrap();
        let diff = mixed.sub(&direct).unwrap();
        prop_assert!(diff.min().abs().max(diff.max().abs()) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn classical_ensembles_never_tunnel(
        potential in potential_strategy(),
        mx in -3.0f64..3.0, mp in -2.0f64..2.0,
        vx in 0.2f64..2.0, vp in 0.2f64..2.0, rho in -0.8f64..0.8,
        e_star in -0.5f64..4.0,
    ) {
        let g = GridSpec::new(-12.0, 12.0, 256, 1.0, 1.0).unwrap();
        let cxp = rho * (vx * vp).sqrt();
        let state = classical_gaussian(&g, (mx, mp), [[vx, cxp], [cxp, vp]]).unwrap();
        let cert = classical_no_tunnel_certificate(&state, &potential, &[e_star]).unwrap();
        prop_assert!(cert.passed, "margin {}", cert.worst_margin);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn field_and_hilbert_routes_agree(
        potential in potential_strategy(),
        x0 in -3.0f64..3.0, p0 in -1.5f64..1.5, sx in 0.6f64..1.1,
        e_star in 0.0f64..3.0,
    ) {
        let g = GridSpec::standard();
        let psi = gaussian_packet(&g, x0, p0, sx).unwrap();
        let h = Hamiltonian::new(&g, &potential, Kinetic::Fourier).unwrap();
        let s = capture_spectrum(&h, &psi, e_star + 1.0).unwrap();
        let w = wigner_of_pure(&psi).unwrap();
        let field = tunnelling_functional(&w, &potential, EnergySource::Quantum(&s), e_star).unwrap();
        let hilbert = position_region_prob(&psi, &potential, e_star).unwrap() - energy_cdf(&psi, &s, e_star).unwrap();
        prop_assert!((field - hilbert).abs() < 1e-3, "{field} vs {hilbert}");

        let energy = inner_product(&quantum_energy_effect(&g, &s, e_star).unwrap().field, &w).unwrap();
        let region = inner_product(&position_effect(&g, &potential, e_star).unwrap().field, &w).unwrap();
        for v in [energy, region] {
            prop_assert!((-1e-6..=1.0 + 1e-6).contains(&v));
        }
    }
}
