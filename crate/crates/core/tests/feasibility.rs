mod common;

use common::*;
use linopt_core::bounds::{self, CompareConfig, Verdict, CHAIN_SLACK};
use linopt_core::catalog;
use linopt_core::fock::{FockSector, PhotonicState, SectorBlock};
use linopt_core::lie;
use linopt_core::report::Family;
use num_complex::Complex64;
use rand::Rng;

fn all_families() -> Vec<Family> {
    use linopt_core::invariants::MapKind;
    vec![
        Family::Tangent,
        Family::Trace,
        Family::Covariance,
        Family::Higher(2),
        Family::Nested(2),
        Family::Subspaces(MapKind::Nested, 2),
    ]
}

#[test]
fn compare_is_sound_on_unitarily_related_pairs() {
    let mut r = rng(400);
    let mut false_alarms = Vec::new();
    for trial in 0..200 {
        let m = r.random_range(2..=3);
        let photons: Vec<usize> = (0..=3).filter(|_| r.random_bool(0.6)).collect();
        let photons = if photons.is_empty() { vec![r.random_range(1..=3)] } else { photons };
        let state = if photons.len() == 1 && r.random_bool(0.5) {
            random_pure(m, photons[0], &mut r)
        } else {
            random_state(m, &photons, &mut r)
        };
        let s = lie::haar_unitary_with(m, &mut r).unwrap();
        let evolved = lie::evolve(&state, &s).unwrap();
        let families = if trial % 4 == 0 { all_families() } else { Family::defaults() };
        let cfg = CompareConfig { families, ..CompareConfig::default() };
        let report = bounds::compare(&state, &evolved, &cfg).unwrap();
        if report.verdict == Verdict::Impossible {
            false_alarms.push((trial, report.failed().map(|c| c.invariant.clone()).collect::<Vec<_>>()));
        }
    }
    assert!(false_alarms.is_empty(), "false impossible verdicts: {false_alarms:?}");
}

#[test]
fn heralded_bound_is_never_exceeded() {
    let mut r = rng(401);
    for trial in 0..100 {
        let (m, n) = [(2, 2), (2, 3), (3, 2), (3, 3)][trial % 4];
        let sector = FockSector::new(m, n).unwrap();
        let input_vec = random_vector(sector.dim(), &mut r);
        // targets near an evolved input make the overlap non-trivial
        let s0 = lie::haar_unitary_with(m, &mut r).unwrap();
        let u0 = lie::photonic_unitary(&s0, &sector).unwrap();
        let eps = r.random_range(0.0..1.5);
        let noise = random_vector(sector.dim(), &mut r);
        let mut target_vec = &u0 * &input_vec + noise * Complex64::new(eps, 0.0);
        let norm = target_vec.norm();
        target_vec /= Complex64::new(norm, 0.0);

        let input =
            PhotonicState::from_blocks(m, vec![SectorBlock::rank_one(sector.clone(), &input_vec).unwrap()], true, 0.0)
                .unwrap();
        let target =
            PhotonicState::from_blocks(m, vec![SectorBlock::rank_one(sector.clone(), &target_vec).unwrap()], true, 0.0)
                .unwrap();
        let bound = bounds::heralded_bound(&input, &target).unwrap();
        assert!((0.0..=1.0).contains(&bound.p_max));

        let mut candidates = vec![u0];
        for _ in 0..5 {
            let s = lie::haar_unitary_with(m, &mut r).unwrap();
            candidates.push(lie::photonic_unitary(&s, &sector).unwrap());
        }
        for u in candidates {
            let p = (target_vec.adjoint() * &u * &input_vec)[(0, 0)].norm_sqr();
            assert!(p <= bound.p_max + 1e-8, "trial {trial}: p={p} > p_max={}", bound.p_max);
        }
    }
}

#[test]
fn norm_chain_is_ordered() {
    let mut r = rng(402);
    for trial in 0..100 {
        let (m, n) = [(2, 2), (2, 3), (3, 2)][trial % 3];
        let sector = FockSector::new(m, n).unwrap();
        let a = random_block(&sector, r.random_range(1..=sector.dim()), 1.0, &mut r);
        let b = random_block(&sector, r.random_range(1..=sector.dim()), 1.0, &mut r);
        let c = bounds::norm_chain(&a, &b).unwrap();
        assert!(c.is_ordered(CHAIN_SLACK), "trial {trial}: {c:?}");
    }
    let a = catalog::fock(&[1, 1]).unwrap();
    let z = bounds::norm_chain(a.single_block().unwrap(), a.single_block().unwrap()).unwrap();
    assert!(z.hw < 1e-14 && z.frobenius < 1e-14 && z.trace_norm < 1e-14);
    let b = catalog::fock(&[1, 1, 0]).unwrap();
    assert!(bounds::norm_chain(a.single_block().unwrap(), b.single_block().unwrap()).is_err());
}

#[test]
fn bound_is_one_for_self_and_for_splitter_output() {
    let mut r = rng(403);
    for _ in 0..10 {
        let psi = random_pure(3, 2, &mut r);
        assert_eq!(bounds::heralded_bound(&psi, &psi).unwrap().p_max, 1.0);
    }
    let f11 = catalog::fock(&[1, 1]).unwrap();
    let bs = lie::beam_splitter(2, 1, 2, std::f64::consts::FRAC_PI_4, 0.0).unwrap();
    let hom = lie::evolve(&f11, &bs).unwrap();
    let b = bounds::heralded_bound(&f11, &hom).unwrap();
    assert!((b.p_max - 1.0).abs() < 1e-12);
    assert!(b.d_t < 1e-7 && b.d_perp < 1e-7);
}

#[test]
fn tangent_distances_over_different_sectors() {
    // a sector occupied by only one state is compared against a zero block
    let a = catalog::fock(&[1, 0]).unwrap();
    let b = catalog::fock(&[2, 0]).unwrap();
    let d = bounds::tangent_distances(&a, &b).unwrap();
    assert_eq!(d.sectors.iter().map(|s| s.n).collect::<Vec<_>>(), vec![1, 2]);
    let (t1, _) = linopt_core::invariants::tangent_orthogonal_projection(a.single_block().unwrap()).unwrap();
    let norm1: f64 = t1.spectrum().iter().map(|v| v * v).sum();
    assert!((d.sectors[0].d_t_sq - norm1).abs() < 1e-12);
}

#[test]
fn combined_invariants_rule_out_photon_added_targets() {
    // |α⟩|1⟩ against a†|β⟩|0⟩ with |α|² tuned so the mean photon number agrees
    for beta in [0.5, 0.8, 1.0, 1.5] {
        let g = catalog::gamma(Complex64::new(beta, 0.0));
        let alpha = (g - 1.0).sqrt();
        let input = catalog::coherent_with_fock(&[Complex64::new(alpha, 0.0)], &[1], None).unwrap();
        let target = catalog::photon_added_coherent(Complex64::new(beta, 0.0), 0, Some(30)).unwrap();
        let report = bounds::compare(&input, &target, &CompareConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Impossible, "beta={beta}");
        let trace = report.checks.iter().find(|c| c.invariant == "trace").unwrap();
        assert!(!trace.pass);
        assert!(report.failed().any(|c| c.invariant == "covariance"));
    }
}

#[test]
fn truncation_widens_tolerance_and_warns() {
    let a = catalog::coherent(&[Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)], Some(6)).unwrap();
    let s = lie::haar_unitary(2, 3).unwrap();
    let b = lie::evolve(&a, &s).unwrap();
    assert!(a.truncation_deficit() > 1e-6);
    let report = bounds::compare(&a, &b, &CompareConfig::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Undecided);
    assert!(report.warnings.iter().any(|w| w.contains("tolerances widened")));
    assert!(report.checks.iter().all(|c| c.tolerance > 2.0 * a.truncation_deficit()));
}

#[test]
fn report_serializes_with_stable_names() {
    let a = catalog::fock(&[1, 1]).unwrap();
    let b = catalog::noon(2).unwrap();
    let report = bounds::compare(&a, &b, &CompareConfig::default()).unwrap();
    let v = serde_json::to_value(&report).unwrap();
    assert!(v["verdict"].is_string());
    for c in v["checks"].as_array().unwrap() {
        for key in ["invariant", "deviation", "tolerance", "pass"] {
            assert!(c.get(key).is_some());
        }
    }
    let again = serde_json::to_string(&bounds::compare(&a, &b, &CompareConfig::default()).unwrap()).unwrap();
    assert_eq!(serde_json::to_string(&report).unwrap(), again);
}

#[test]
fn mixed_states_are_refused_by_the_bound() {
    let mut r = rng(404);
    let rho = random_state(2, &[2], &mut r);
    let psi = random_pure(2, 2, &mut r);
    assert!(bounds::heralded_bound(&rho, &psi).is_err());
    assert!(bounds::heralded_bound(&psi, &rho).is_err());
}
