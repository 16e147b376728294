//! Spectral distances, the heralded success-probability bound, and the
//! feasibility verdict engine.
//!
//! Every invariant here is a necessary condition for exact preparation, so a
//! comparison can prove a transformation impossible but never possible.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockSector, PhotonicState, SectorBlock};
use crate::invariants::{self, Limits};
use crate::lie::BASIS_ORDER;
use crate::linalg::{self, CMatrix};
use crate::report::{self, DecompositionCache, Family, InvariantReport};

/// Default comparison tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Slack allowed in the ordering of [`norm_chain`].
pub const CHAIN_SLACK: f64 = 1e-10;

/// Convention tag carried by every [`BoundReport`].
pub const BOUND_CONVENTION: &str = "p_max = clamp(1 - (d_T^2 + d_perp^2)/2, 0, 1); eigenvalues paired in ascending order \
within each photon-number sector, sectors combined in quadrature; ancilla and herald modes must already be part of both states";

/// `ℓ²` distance of two spectra after zero-padding the shorter and sorting both.
pub fn spectral_distance(a: &[f64], b: &[f64]) -> f64 {
    let (pa, pb) = linalg::pad_pair(a, b);
    pa.iter().zip(&pb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorDistance {
    pub n: usize,
    #[serde(rename = "d_T_sq")]
    pub d_t_sq: f64,
    pub d_perp_sq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentDistances {
    pub d_t: f64,
    pub d_perp: f64,
    pub sectors: Vec<SectorDistance>,
}

fn check_modes(a: &PhotonicState, b: &PhotonicState) -> Result<()> {
    if a.modes() != b.modes() {
        return Err(Error::ModeMismatch(a.modes(), b.modes()));
    }
    Ok(())
}

fn sector_union(a: &PhotonicState, b: &PhotonicState) -> Vec<usize> {
    let all: BTreeSet<usize> = a.photon_numbers().into_iter().chain(b.photon_numbers()).collect();
    all.into_iter().collect()
}

fn tangent_spectra(state: &PhotonicState, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    match state.block(n) {
        Some(block) => {
            let (t, perp) = invariants::tangent_orthogonal_projection(block)?;
            Ok((t.spectrum(), perp.spectrum()))
        }
        None => {
            let dim = FockSector::new(state.modes(), n)?.dim();
            Ok((vec![0.0; dim], vec![0.0; dim]))
        }
    }
}

/// `d_T` and `d_⊥` between two states, sector by sector.
pub fn tangent_distances(rho: &PhotonicState, sigma: &PhotonicState) -> Result<TangentDistances> {
    check_modes(rho, sigma)?;
    let mut sectors = Vec::new();
    for n in sector_union(rho, sigma) {
        let (rt, rp) = tangent_spectra(rho, n)?;
        let (st, sp) = tangent_spectra(sigma, n)?;
        sectors.push(SectorDistance {
            n,
            d_t_sq: spectral_distance(&rt, &st).powi(2),
            d_perp_sq: spectral_distance(&rp, &sp).powi(2),
        });
    }
    let d_t = sectors.iter().map(|s| s.d_t_sq).sum::<f64>().sqrt();
    let d_perp = sectors.iter().map(|s| s.d_perp_sq).sum::<f64>().sqrt();
    Ok(TangentDistances { d_t, d_perp, sectors })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub m: usize,
    #[serde(rename = "d_T")]
    pub d_t: f64,
    pub d_perp: f64,
    pub p_max: f64,
    pub sectors: Vec<SectorDistance>,
    pub basis_order: String,
    pub convention: String,
    pub warnings: Vec<String>,
}

/// Upper bound on the success probability of turning `input` into `target`
/// with passive optics and a herald.
///
/// For pure states `‖ρ′ − σ‖₂ = √2 √(1 − p)`, and the invariant distances
/// bound that norm from below, giving `p ≤ 1 − (d_T² + d_⊥²)/2`.
pub fn heralded_bound(input: &PhotonicState, target: &PhotonicState) -> Result<BoundReport> {
    check_modes(input, target)?;
    for (name, s) in [("input", input), ("target", target)] {
        if !s.is_pure() {
            return Err(Error::Precondition(format!(
                "heralded bound needs pure states; the {name} state is mixed or spans several photon numbers"
            )));
        }
    }
    let d = tangent_distances(input, target)?;
    let p_max = (1.0 - (d.d_t.powi(2) + d.d_perp.powi(2)) / 2.0).clamp(0.0, 1.0);
    let mut warnings = input.warnings();
    warnings.extend(target.warnings());
    Ok(BoundReport {
        m: input.modes(),
        d_t: d.d_t,
        d_perp: d.d_perp,
        p_max,
        sectors: d.sectors,
        basis_order: BASIS_ORDER.to_string(),
        convention: BOUND_CONVENTION.to_string(),
        warnings,
    })
}

/// The three sides of `d_T ≤ ‖A − B‖₂ ≤ ‖A − B‖₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormChain {
    pub hw: f64,
    pub frobenius: f64,
    pub trace_norm: f64,
}

impl NormChain {
    pub fn is_ordered(&self, slack: f64) -> bool {
        self.hw <= self.frobenius + slack && self.frobenius <= self.trace_norm + slack
    }
}

pub fn norm_chain(a: &SectorBlock, b: &SectorBlock) -> Result<NormChain> {
    a.sector().check_same(b.sector())?;
    let (at, _) = invariants::tangent_orthogonal_projection(a)?;
    let (bt, _) = invariants::tangent_orthogonal_projection(b)?;
    let diff: CMatrix = a.matrix() - b.matrix();
    Ok(NormChain {
        hw: spectral_distance(&at.spectrum(), &bt.spectrum()),
        frobenius: linalg::frobenius_norm(&diff),
        trace_norm: linalg::trace_norm_hermitian(&diff),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareConfig {
    pub families: Vec<Family>,
    pub tolerance: f64,
    pub limits: Limits,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { families: Family::defaults(), tolerance: DEFAULT_TOLERANCE, limits: Limits::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Impossible,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub invariant: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub families: Vec<String>,
    pub tolerance: f64,
    pub max_terms: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub config: ConfigEcho,
    pub basis_order: String,
    pub warnings: Vec<String>,
}

impl FeasibilityReport {
    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn deviation(a: &InvariantReport, b: &InvariantReport) -> f64 {
    if a.spectrum.is_some() {
        linalg::max_sorted_deviation(a.numbers(), b.numbers())
    } else {
        let (x, y) = (a.numbers(), b.numbers());
        let len = x.len().max(y.len());
        (0..len)
            .map(|i| (x.get(i).copied().unwrap_or(0.0) - y.get(i).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }
}

/// Compares the selected invariant families of two states.
///
/// A check passes when the deviation is at most
/// `(tol + δ_a + δ_b) · max(1, |largest value|)`, where `δ` are the truncation
/// deficits. The verdict is `impossible` as soon as one check fails.
pub fn compare(a: &PhotonicState, b: &PhotonicState, config: &CompareConfig) -> Result<FeasibilityReport> {
    check_modes(a, b)?;
    if config.tolerance.is_nan() || config.tolerance <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", config.tolerance)));
    }
    let sectors = sector_union(a, b);
    let mut cache = DecompositionCache::default();
    let widening = a.truncation_deficit() + b.truncation_deficit();

    let mut warnings = Vec::new();
    if widening > 0.0 {
        warnings.push(format!(
            "truncated inputs (deficits {:.3e} and {:.3e}); tolerances widened by the deficit bound",
            a.truncation_deficit(),
            b.truncation_deficit()
        ));
    }
    for (name, s) in [("a", a), ("b", b)] {
        warnings.extend(s.warnings().into_iter().map(|w| format!("{name}: {w}")));
    }

    let mut checks = Vec::new();
    for &family in &config.families {
        let ra = report::evaluate_on(a, family, &sectors, &config.limits, &mut cache)?;
        let rb = report::evaluate_on(b, family, &sectors, &config.limits, &mut cache)?;
        if ra.len() != rb.len() {
            return Err(Error::Precondition(format!("family {family} produced unmatched reports")));
        }
        for (x, y) in ra.iter().zip(&rb) {
            let scale = x.numbers().iter().chain(y.numbers()).fold(1.0f64, |m, v| m.max(v.abs()));
            let tolerance = (config.tolerance + widening) * scale;
            let dev = deviation(x, y);
            checks.push(Check { invariant: x.label(), deviation: dev, tolerance, pass: dev <= tolerance });
        }
    }

    let verdict = if checks.iter().all(|c| c.pass) { Verdict::Undecided } else { Verdict::Impossible };
    Ok(FeasibilityReport {
        verdict,
        checks,
        config: ConfigEcho {
            families: config.families.iter().map(Family::to_string).collect(),
            tolerance: config.tolerance,
            max_terms: config.limits.max_terms,
        },
        basis_order: BASIS_ORDER.to_string(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::lie;

    #[test]
    fn spectral_distance_pads_with_zeros() {
        assert_eq!(spectral_distance(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert!((spectral_distance(&[3.0], &[0.0, 4.0]) - 1.0).abs() < 1e-15);
        // [-1, 0] vs [0, 1] after padding
        assert!((spectral_distance(&[-1.0], &[0.0, 1.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fock_pair_bound_is_one_half() {
        let a = catalog::fock(&[1, 1]).unwrap();
        let b = catalog::fock(&[2, 0]).unwrap();
        let r = heralded_bound(&a, &b).unwrap();
        assert!((r.d_t.powi(2) - 0.5).abs() < 1e-12);
        assert!((r.d_perp.powi(2) - 0.5).abs() < 1e-12);
        assert!((r.p_max - 0.5).abs() < 1e-12);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["d_T", "d_perp", "p_max", "sectors"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn identical_states_bound_to_one() {
        let a = catalog::noon(3).unwrap();
        assert_eq!(heralded_bound(&a, &a).unwrap().p_max, 1.0);
        let d = tangent_distances(&catalog::fock(&[1, 0]).unwrap(), &catalog::fock(&[0, 1]).unwrap()).unwrap();
        assert!(d.d_t < 1e-12 && d.d_perp < 1e-12);
    }

    #[test]
    fn mixed_input_is_refused() {
        let coh =
            catalog::coherent(&[num_complex::Complex64::new(0.5, 0.0), num_complex::Complex64::new(0.0, 0.0)], None)
                .unwrap();
        let target = catalog::fock(&[1, 0]).unwrap();
        assert!(matches!(heralded_bound(&coh, &target), Err(Error::Precondition(_))));
    }

    #[test]
    fn orthogonal_fock_chain() {
        let a = catalog::fock(&[1, 1]).unwrap();
        let b = catalog::fock(&[2, 0]).unwrap();
        let c = norm_chain(a.single_block().unwrap(), b.single_block().unwrap()).unwrap();
        assert!((c.hw - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((c.frobenius - 2f64.sqrt()).abs() < 1e-12);
        assert!((c.trace_norm - 2.0).abs() < 1e-12);
        assert!(c.is_ordered(CHAIN_SLACK));
    }

    #[test]
    fn compare_examples() {
        let cfg = CompareConfig::default();
        let f11 = catalog::fock(&[1, 1]).unwrap();
        let bs = lie::beam_splitter(2, 1, 2, std::f64::consts::FRAC_PI_4, 0.0).unwrap();
        let hom = lie::evolve(&f11, &bs).unwrap();
        let r = compare(&f11, &hom, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Undecided);
        assert!(r.checks.iter().all(|c| c.deviation < 1e-10));

        let r = compare(&catalog::fock(&[2, 1]).unwrap(), &catalog::noon(3).unwrap(), &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Impossible);
        assert!(r.failed().any(|c| c.invariant == "covariance"));

        let r = compare(&catalog::fock(&[2, 0]).unwrap(), &catalog::fock(&[0, 2]).unwrap(), &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Undecided);

        let r = compare(&f11, &catalog::noon(3).unwrap(), &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Impossible);
        assert!(r.failed().any(|c| c.invariant == "trace"));
    }

    #[test]
    fn compare_rejects_mode_mismatch_and_bad_tolerance() {
        let a = catalog::fock(&[1, 1]).unwrap();
        let b = catalog::fock(&[1, 1, 0]).unwrap();
        assert!(matches!(compare(&a, &b, &CompareConfig::default()), Err(Error::ModeMismatch(2, 3))));
        let cfg = CompareConfig { tolerance: 0.0, ..CompareConfig::default() };
        assert!(compare(&a, &a, &cfg).is_err());
    }
}
