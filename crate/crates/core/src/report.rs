//! Invariant families and the serializable report produced for each one.
//!
//! A [`Family`] names a group of invariants (`tangent`, `trace`, `covariance`,
//! `higher:k`, `nested:k`, `subspaces:<kind>:k`). [`evaluate`] turns a state
//! into one [`InvariantReport`] per spectrum or value list of the family, in a
//! fixed order, so two states evaluated over the same sectors produce reports
//! that pair up one to one.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockSector, PhotonicState, SectorBlock};
use crate::invariants::{self, Limits, MapKind, SubspaceDecomposition};
use crate::lie::BASIS_ORDER;
use crate::linalg::{self, CMatrix};

/// A selectable group of invariants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Photon-number weights, the `h_ρ` spectrum and per-sector tangent / complement spectra.
    Tangent,
    /// `I_k = tr(h_ρ^k)` for `k = 1..=m`.
    Trace,
    Covariance,
    Higher(usize),
    Nested(usize),
    Subspaces(MapKind, usize),
}

impl Family {
    /// The families compared when none are selected.
    pub fn defaults() -> Vec<Family> {
        vec![Family::Tangent, Family::Trace, Family::Covariance]
    }

    /// Parses a comma-separated list, rejecting unknown names and duplicates.
    pub fn parse_list(csv: &str) -> Result<Vec<Family>> {
        let mut out: Vec<Family> = Vec::new();
        for item in csv.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let f: Family = item.parse()?;
            if !out.contains(&f) {
                out.push(f);
            }
        }
        if out.is_empty() {
            return Err(Error::Parse("empty invariant selection".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Tangent => write!(f, "tangent"),
            Family::Trace => write!(f, "trace"),
            Family::Covariance => write!(f, "covariance"),
            Family::Higher(k) => write!(f, "higher:{k}"),
            Family::Nested(k) => write!(f, "nested:{k}"),
            Family::Subspaces(kind, k) => write!(f, "subspaces:{}:{k}", kind.name()),
        }
    }
}

fn parse_order(s: &str, whole: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(Error::Parse(format!("invalid order in invariant name {whole:?}: expected an integer k >= 1"))),
    }
}

impl FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projection" | "P" => Ok(MapKind::Projection),
            "nested" | "N" => Ok(MapKind::Nested),
            other => Err(Error::Parse(format!("unknown map kind {other:?} (expected projection or nested)"))),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["tangent"] => Ok(Family::Tangent),
            ["trace"] => Ok(Family::Trace),
            ["covariance"] => Ok(Family::Covariance),
            ["higher", k] => Ok(Family::Higher(parse_order(k, s)?)),
            ["nested", k] => Ok(Family::Nested(parse_order(k, s)?)),
            ["subspaces", kind, k] => Ok(Family::Subspaces(kind.parse()?, parse_order(k, s)?)),
            _ => Err(Error::Parse(format!(
                "unknown invariant {s:?} (expected tangent, trace, covariance, higher:k, nested:k or subspaces:<projection|nested>:k)"
            ))),
        }
    }
}

/// One spectrum or list of values computed from one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub kind: String,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sectors: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Eigenvalue of the equivariant map labelling a subspace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalue: Option<f64>,
    pub basis_order: String,
    pub convention: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
    /// Basis-dependent matrix form, informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    pub truncation_deficit: f64,
    pub warnings: Vec<String>,
}

impl InvariantReport {
    fn new(state: &PhotonicState, kind: &str, convention: &str) -> Self {
        InvariantReport {
            kind: kind.to_string(),
            m: state.modes(),
            n: None,
            sectors: None,
            order: None,
            eigenvalue: None,
            basis_order: BASIS_ORDER.to_string(),
            convention: convention.to_string(),
            values: None,
            spectrum: None,
            matrix: None,
            truncation_deficit: state.truncation_deficit(),
            warnings: state.warnings(),
        }
    }

    /// Human-readable identity used to pair reports of two states.
    pub fn label(&self) -> String {
        let mut s = self.kind.clone();
        if let Some(k) = self.order {
            s.push_str(&format!(":{k}"));
        }
        if let Some(n) = self.n {
            s.push_str(&format!(" n={n}"));
        }
        if let Some(l) = self.eigenvalue {
            s.push_str(&format!(" lambda={l:.6}"));
        }
        s
    }

    /// The compared numbers: the spectrum if present, otherwise the values.
    pub fn numbers(&self) -> &[f64] {
        self.spectrum.as_deref().or(self.values.as_deref()).unwrap_or(&[])
    }
}

/// Memoized eigenspace decompositions keyed by `(m, n, kind, k)`.
#[derive(Default)]
pub struct DecompositionCache {
    entries: HashMap<(usize, usize, MapKind, usize), SubspaceDecomposition>,
}

impl DecompositionCache {
    pub fn get(
        &mut self,
        m: usize,
        n: usize,
        kind: MapKind,
        k: usize,
        limits: &Limits,
    ) -> Result<&SubspaceDecomposition> {
        let key = (m, n, kind, k);
        if let std::collections::hash_map::Entry::Vacant(e) = self.entries.entry(key) {
            let d = invariants::equivariant_eigenspaces(m, n, kind, k, limits)?;
            e.insert(d);
        }
        Ok(&self.entries[&key])
    }
}

/// The block of `state` in the `n`-photon sector, or a zero block if absent.
fn block_or_zero(state: &PhotonicState, n: usize) -> Result<SectorBlock> {
    if let Some(b) = state.block(n) {
        return Ok(b.clone());
    }
    let sector: Arc<FockSector> = FockSector::new(state.modes(), n)?;
    let d = sector.dim();
    SectorBlock::new(sector, CMatrix::zeros(d, d))
}

/// Evaluates one family on the state's own sectors.
pub fn evaluate(state: &PhotonicState, family: Family, limits: &Limits) -> Result<Vec<InvariantReport>> {
    evaluate_on(state, family, &state.photon_numbers(), limits, &mut DecompositionCache::default())
}

/// Evaluates one family with per-sector invariants taken over `sectors`;
/// sectors the state does not occupy contribute zero blocks.
pub fn evaluate_on(
    state: &PhotonicState,
    family: Family,
    sectors: &[usize],
    limits: &Limits,
    cache: &mut DecompositionCache,
) -> Result<Vec<InvariantReport>> {
    let m = state.modes();
    let mut out = Vec::new();
    match family {
        Family::Tangent => {
            let mut weights =
                InvariantReport::new(state, "photon_number_weights", "tr(rho_n) for each listed sector n");
            weights.sectors = Some(sectors.to_vec());
            weights.values = Some(sectors.iter().map(|&n| state.block(n).map_or(0.0, SectorBlock::weight)).collect());
            out.push(weights);

            let data = invariants::h_rho(state)?;
            let mut h = InvariantReport::new(state, "h_rho", "h_rho[j][k] = <a+_k a_j>, ascending spectrum");
            h.sectors = Some(state.photon_numbers());
            h.spectrum = Some(data.spectrum);
            out.push(h);

            for &n in sectors.iter().filter(|&&n| n > 0) {
                let (t, perp) = invariants::tangent_orthogonal_projection(&block_or_zero(state, n)?)?;
                let mut r = InvariantReport::new(state, "tangent", "orthogonal projection onto span{O_i} under tr(AB)");
                r.n = Some(n);
                r.spectrum = Some(t.spectrum());
                out.push(r);
                let mut r =
                    InvariantReport::new(state, "tangent_complement", "rho_n minus its orthogonal tangent projection");
                r.n = Some(n);
                r.spectrum = Some(perp.spectrum());
                out.push(r);
            }
        }
        Family::Trace => {
            let data = invariants::h_rho(state)?;
            let mut r = InvariantReport::new(state, "trace", "I_k = tr(h_rho^k) for k = 1..m");
            r.sectors = Some(state.photon_numbers());
            r.values = Some(data.trace_invariants);
            out.push(r);
        }
        Family::Covariance => {
            let cov = invariants::covariance(state)?;
            let mut r = InvariantReport::new(state, "covariance", invariants::COVARIANCE_CONVENTION);
            r.sectors = Some(state.photon_numbers());
            r.spectrum = Some(cov.spectrum.clone());
            r.matrix = Some((0..cov.matrix.nrows()).map(|i| cov.matrix.row(i).iter().copied().collect()).collect());
            out.push(r);
        }
        Family::Higher(k) => {
            let pre = invariants::higher_preimage(state, k, limits)?;
            let conv = "sums over k-tuples of the orthonormal basis";
            let mut r = InvariantReport::new(state, "higher_preimage", conv);
            r.sectors = Some(state.photon_numbers());
            r.order = Some(k);
            r.spectrum = Some(linalg::eigvalsh(&pre));
            out.push(r);
            let mut r = InvariantReport::new(state, "higher_trace", conv);
            r.sectors = Some(state.photon_numbers());
            r.order = Some(k);
            r.values = Some(vec![linalg::trace(&pre).re]);
            out.push(r);
            for &n in sectors.iter().filter(|&&n| n > 0) {
                let p = invariants::higher_projection(&block_or_zero(state, n)?, k, limits)?;
                let mut r = InvariantReport::new(state, "higher_projection", conv);
                r.n = Some(n);
                r.order = Some(k);
                r.spectrum = Some(p.spectrum());
                out.push(r);
            }
        }
        Family::Nested(k) => {
            for &n in sectors.iter().filter(|&&n| n > 0) {
                let p = invariants::nested_commutator(&block_or_zero(state, n)?, k, limits)?;
                let mut r = InvariantReport::new(state, "nested_commutator", invariants::NESTED_SIGN_CONVENTION);
                r.n = Some(n);
                r.order = Some(k);
                r.spectrum = Some(p.spectrum());
                out.push(r);
            }
        }
        Family::Subspaces(kind, k) => {
            let name = format!("subspace_{}", kind.name());
            for &n in sectors.iter().filter(|&&n| n > 0) {
                let block = block_or_zero(state, n)?;
                let decomposition = cache.get(m, n, kind, k, limits)?;
                for (eigenvalue, spectrum) in invariants::subspace_spectra(&block, decomposition)? {
                    let mut r =
                        InvariantReport::new(state, &name, "projection onto one eigenspace of the equivariant map");
                    r.n = Some(n);
                    r.order = Some(k);
                    r.eigenvalue = Some(eigenvalue);
                    r.spectrum = Some(spectrum);
                    out.push(r);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn family_names_round_trip() {
        for name in
            ["tangent", "trace", "covariance", "higher:2", "nested:3", "subspaces:projection:1", "subspaces:nested:2"]
        {
            let f: Family = name.parse().unwrap();
            assert_eq!(f.to_string(), name);
        }
        assert_eq!("subspaces:N:2".parse::<Family>().unwrap(), Family::Subspaces(MapKind::Nested, 2));
    }

    #[test]
    fn unknown_names_are_rejected() {
        for bad in ["", "tangents", "higher", "higher:0", "higher:x", "subspaces:foo:1", "nested:1:2"] {
            assert!(Family::parse_list(bad).is_err(), "{bad:?} accepted");
        }
        assert_eq!(Family::parse_list("trace, trace,covariance").unwrap(), vec![Family::Trace, Family::Covariance]);
    }

    #[test]
    fn fock_reports() {
        let s = catalog::fock(&[1, 1]).unwrap();
        let limits = Limits::default();
        let t = evaluate(&s, Family::Tangent, &limits).unwrap();
        let h = t.iter().find(|r| r.kind == "h_rho").unwrap();
        assert_eq!(h.spectrum.as_ref().unwrap().len(), 2);
        assert!(h.numbers().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let tr = evaluate(&s, Family::Trace, &limits).unwrap();
        let v = tr[0].values.as_ref().unwrap();
        assert!((v[0] - 2.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12);
        let json = serde_json::to_value(&tr[0]).unwrap();
        for key in ["kind", "m", "sectors", "basis_order", "convention", "values", "truncation_deficit", "warnings"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn missing_sectors_become_zero_blocks() {
        let s = catalog::fock(&[1, 0]).unwrap();
        let reports =
            evaluate_on(&s, Family::Tangent, &[1, 2], &Limits::default(), &mut DecompositionCache::default()).unwrap();
        let t2 = reports.iter().find(|r| r.kind == "tangent" && r.n == Some(2)).unwrap();
        assert!(t2.numbers().iter().all(|v| v.abs() < 1e-14));
        assert_eq!(reports[0].values.as_ref().unwrap(), &vec![1.0, 0.0]);
    }
}
