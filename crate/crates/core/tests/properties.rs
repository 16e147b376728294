mod common;

use common::*;
use linopt_core::bounds::{self, CompareConfig, Verdict};
use linopt_core::catalog::{self, StateSpec};
use linopt_core::invariants::{self, Limits, MapKind};
use linopt_core::lie;
use linopt_core::report::{self, DecompositionCache, Family};
use proptest::prelude::*;

fn occupations() -> impl Strategy<Value = Vec<usize>> {
    (1usize..=4)
        .prop_flat_map(|m| prop::collection::vec(0usize..=6, m))
        .prop_filter("n <= 6", |v| v.iter().sum::<usize>() <= 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_distance_is_symmetric_and_pads_with_vacuum(
        a in prop::collection::vec(-5.0f64..5.0, 0..6),
        b in prop::collection::vec(-5.0f64..5.0, 0..6),
    ) {
        let (a, b) = (sorted(a), sorted(b));
        prop_assert_eq!(bounds::spectral_distance(&a, &a), 0.0);
        prop_assert!((bounds::spectral_distance(&a, &b) - bounds::spectral_distance(&b, &a)).abs() < 1e-12);
        // padding the shorter list by hand changes nothing
        let mut padded = a.clone();
        padded.resize(a.len().max(b.len()), 0.0);
        let padded = sorted(padded);
        prop_assert!((bounds::spectral_distance(&padded, &b) - bounds::spectral_distance(&a, &b)).abs() < 1e-12);
    }

    // Pairwise zero padding is a metric only among spectra of one common
    // length, which is the case for blocks of a single sector.
    #[test]
    fn spectral_distance_is_a_metric_on_a_sector(
        (a, b, c) in (0usize..7).prop_flat_map(|len| {
            let v = || prop::collection::vec(-5.0f64..5.0, len);
            (v(), v(), v())
        }),
    ) {
        let (a, b, c) = (sorted(a), sorted(b), sorted(c));
        let ac = bounds::spectral_distance(&a, &c);
        let ab = bounds::spectral_distance(&a, &b);
        let bc = bounds::spectral_distance(&b, &c);
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn fock_coherency_spectrum_is_the_sorted_occupation(occ in occupations()) {
        let state = catalog::fock(&occ).unwrap();
        let data = invariants::h_rho(&state).unwrap();
        let want = sorted(occ.iter().map(|&k| k as f64).collect());
        prop_assert!(max_diff(&data.spectrum, &want) < 1e-12);
        for (k, ik) in data.trace_invariants.iter().enumerate() {
            let expected: f64 = occ.iter().map(|&c| (c as f64).powi(k as i32 + 1)).sum();
            prop_assert!((ik - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn permuted_fock_states_are_never_ruled_out(occ in occupations(), shift in 0usize..4) {
        let mut permuted = occ.clone();
        let len = permuted.len();
        permuted.rotate_left(shift % len);
        let a = catalog::fock(&occ).unwrap();
        let b = catalog::fock(&permuted).unwrap();
        let r = bounds::compare(&a, &b, &CompareConfig::default()).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Undecided);
    }

    #[test]
    fn state_specs_round_trip(seed in 0u64..10_000, m in 1usize..=3) {
        let mut r = rng(seed);
        let state = random_state(m, &[0, 1, 2], &mut r);
        let json = serde_json::to_string(&StateSpec::from_state(&state)).unwrap();
        let back: StateSpec = serde_json::from_str(&json).unwrap();
        let rebuilt = back.build().unwrap();
        prop_assert_eq!(rebuilt.photon_numbers(), state.photon_numbers());
        for (x, y) in state.blocks().zip(rebuilt.blocks()) {
            prop_assert!(max_abs(&(x.matrix() - y.matrix())) < 1e-15);
        }
    }

    #[test]
    fn unitary_evolution_is_reversible(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let state = random_state(3, &[1, 2], &mut r);
        let s = lie::haar_unitary(3, seed).unwrap();
        let back = lie::evolve(&lie::evolve(&state, &s).unwrap(), &s.adjoint()).unwrap();
        for (x, y) in state.blocks().zip(back.blocks()) {
            prop_assert!(max_abs(&(x.matrix() - y.matrix())) < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Every family's reports are unchanged by a Haar-random interferometer.
    #[test]
    fn invariant_spectra_survive_haar_evolution(seed in 0u64..1_000_000, m in 2usize..=3, top in 1usize..=3) {
        let mut r = rng(seed);
        let photons: Vec<usize> = (1..=top).collect();
        let state = random_state(m, &photons, &mut r);
        let s = lie::haar_unitary(m, seed ^ 0x5eed).unwrap();
        let evolved = lie::evolve(&state, &s).unwrap();
        let limits = Limits::default();
        let mut cache = DecompositionCache::default();
        let families = [
            Family::Tangent,
            Family::Trace,
            Family::Covariance,
            Family::Higher(2),
            Family::Nested(2),
            Family::Subspaces(MapKind::Projection, 1),
            Family::Subspaces(MapKind::Nested, 2),
        ];
        for f in families {
            let a = report::evaluate_on(&state, f, &photons, &limits, &mut cache).unwrap();
            let b = report::evaluate_on(&evolved, f, &photons, &limits, &mut cache).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.label(), y.label());
                prop_assert!(max_diff(x.numbers(), y.numbers()) < 1e-8, "{} moved", x.label());
            }
        }
    }

    // The coefficient-form tangent projection and the coherency matrix agree
    // on whether two states are distinguishable.
    #[test]
    fn coefficient_projection_and_coherency_agree(seed in 0u64..1_000_000, n in 1usize..=3, related in any::<bool>()) {
        let mut r = rng(seed);
        let a = random_pure(2, n, &mut r);
        let b = if related {
            lie::evolve(&a, &lie::haar_unitary(2, seed).unwrap()).unwrap()
        } else {
            random_pure(2, n, &mut r)
        };
        let spec = |s: &linopt_core::fock::PhotonicState| {
            invariants::tangent_coefficient_projection(s.single_block().unwrap()).unwrap().spectrum()
        };
        let h = |s: &linopt_core::fock::PhotonicState| invariants::h_rho(s).unwrap().spectrum;
        let same_t = max_diff(&spec(&a), &spec(&b)) < 1e-8;
        let same_h = max_diff(&h(&a), &h(&b)) < 1e-8;
        prop_assert_eq!(same_t, same_h);
        if related {
            prop_assert!(same_t);
        }
    }
}
