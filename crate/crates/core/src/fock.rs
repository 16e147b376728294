//! Fock sectors and photonic states.
//!
//! A sector is the span of all occupation vectors with `n` photons in `m`
//! modes. States are stored block-diagonally in total photon number: every
//! operator this crate works with conserves photon number, so cross-sector
//! coherences never influence a result and are dropped when a state is built
//! (the state is recorded as dephased in total photon number when that
//! happens).
//!
//! Basis order inside a sector is descending lexicographic on occupation
//! vectors, so `(n, 0, ..., 0)` comes first and `(0, ..., 0, n)` last.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, ZERO};

/// Hermiticity tolerance applied when a block or operator is constructed.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Hermiticity tolerance for results of long operator chains.
pub const CHAIN_TOL: f64 = 1e-10;
/// Most negative eigenvalue a density block may carry.
pub const PSD_TOL: f64 = 1e-10;
/// Allowed mismatch in `Σ weights + deficit = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Deficit above which invariant values are reported with a truncation warning.
pub const TRUNCATION_WARNING: f64 = 1e-8;

/// Photon counts per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Occupation(Vec<usize>);

impl Occupation {
    pub fn new(counts: Vec<usize>) -> Self {
        Occupation(counts)
    }

    pub fn vacuum(modes: usize) -> Self {
        Occupation(vec![0; modes])
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Occupation after `a†_to a_from`, or `None` if mode `from` is empty.
    pub fn hop(&self, from: usize, to: usize) -> Option<Occupation> {
        if self.0[from] == 0 {
            return None;
        }
        let mut next = self.0.clone();
        next[from] -= 1;
        next[to] += 1;
        Some(Occupation(next))
    }

    /// `∏ n_j!` as a float.
    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&c| factorial(c)).product()
    }
}

impl From<Vec<usize>> for Occupation {
    fn from(v: Vec<usize>) -> Self {
        Occupation(v)
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "⟩")
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `binomial(m + n - 1, n)`, the number of ways to place `n` photons in `m` modes.
pub fn sector_dimension(modes: usize, photons: usize) -> Result<usize> {
    if modes == 0 {
        return Err(Error::InvalidArgument("a sector needs at least one mode".into()));
    }
    let overflow = || Error::Capacity(format!("dimension of sector m={modes}, n={photons} overflows"));
    // r_i = binomial(m - 1 + i, i) stays integral at every step.
    let mut r: u128 = 1;
    for i in 1..=photons as u128 {
        let top = (modes as u128 - 1).checked_add(i).ok_or_else(overflow)?;
        r = r.checked_mul(top).ok_or_else(overflow)? / i;
    }
    usize::try_from(r).map_err(|_| overflow())
}

/// All occupation vectors of the sector in canonical (descending lexicographic) order.
pub fn enumerate_basis(modes: usize, photons: usize) -> Result<Vec<Occupation>> {
    let dim = sector_dimension(modes, photons)?;
    let mut out = Vec::with_capacity(dim);
    let mut current = vec![0; modes];
    fill_basis(0, photons, &mut current, &mut out);
    Ok(out)
}

fn fill_basis(mode: usize, remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Occupation>) {
    if mode + 1 == current.len() {
        current[mode] = remaining;
        out.push(Occupation(current.clone()));
        return;
    }
    for c in (0..=remaining).rev() {
        current[mode] = c;
        fill_basis(mode + 1, remaining - c, current, out);
    }
    current[mode] = 0;
}

/// The `n`-photon, `m`-mode subspace with its canonical basis and index lookup.
#[derive(Debug)]
pub struct FockSector {
    modes: usize,
    photons: usize,
    basis: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

impl FockSector {
    pub fn new(modes: usize, photons: usize) -> Result<Arc<Self>> {
        let basis = enumerate_basis(modes, photons)?;
        let index = basis.iter().cloned().enumerate().map(|(i, o)| (o, i)).collect();
        Ok(Arc::new(FockSector { modes, photons, basis, index }))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Occupation] {
        &self.basis
    }

    pub fn index_of(&self, occ: &Occupation) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn same_as(&self, other: &FockSector) -> bool {
        self.modes == other.modes && self.photons == other.photons
    }

    pub(crate) fn check_same(&self, other: &FockSector) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::SectorMismatch {
                expected_modes: self.modes,
                expected_photons: self.photons,
                modes: other.modes,
                photons: other.photons,
            })
        }
    }
}

/// A dense Hermitian matrix acting on one Fock sector.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    sector: Arc<FockSector>,
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Checks Hermiticity at the construction tolerance.
    pub fn new(sector: Arc<FockSector>, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(sector, matrix, CONSTRUCTION_TOL)
    }

    /// Checks Hermiticity at `tol` and stores the exact Hermitian part.
    pub fn with_tolerance(sector: Arc<FockSector>, matrix: CMatrix, tol: f64) -> Result<Self> {
        let dim = sector.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidArgument(format!(
                "operator is {}x{} but the sector has dimension {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = linalg::hermitian_deviation(&matrix);
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if deviation > tol * scale {
            return Err(Error::NotHermitian { deviation, tolerance: tol });
        }
        Ok(HermitianOperator { sector, matrix: linalg::hermitian_part(&matrix) })
    }

    pub(crate) fn from_hermitian_unchecked(sector: Arc<FockSector>, matrix: CMatrix) -> Self {
        HermitianOperator { sector, matrix }
    }

    pub fn zero(sector: Arc<FockSector>) -> Self {
        let d = sector.dim();
        HermitianOperator { sector, matrix: CMatrix::zeros(d, d) }
    }

    pub fn sector(&self) -> &Arc<FockSector> {
        &self.sector
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn spectrum(&self) -> Vec<f64> {
        hermitian_spectrum(self)
    }
}

/// Ascending eigenvalues of a Hermitian operator.
pub fn hermitian_spectrum(op: &HermitianOperator) -> Vec<f64> {
    linalg::eigvalsh(op.matrix())
}

/// One fixed-photon-number block of a state: a PSD matrix whose trace is the
/// probability of finding `n` photons.
#[derive(Clone, Debug)]
pub struct SectorBlock {
    sector: Arc<FockSector>,
    matrix: CMatrix,
    weight: f64,
}

impl SectorBlock {
    pub fn new(sector: Arc<FockSector>, matrix: CMatrix) -> Result<Self> {
        let op = HermitianOperator::new(sector, matrix)?;
        let min = linalg::eigvalsh(op.matrix()).first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        let weight = linalg::trace(op.matrix()).re;
        Ok(SectorBlock { sector: op.sector, matrix: op.matrix, weight })
    }

    /// Rank-one block `|v⟩⟨v|` (v not normalized; its squared norm becomes the weight).
    pub fn rank_one(sector: Arc<FockSector>, v: &CVector) -> Result<Self> {
        if v.len() != sector.dim() {
            return Err(Error::InvalidArgument(format!(
                "vector of length {} does not fit sector of dimension {}",
                v.len(),
                sector.dim()
            )));
        }
        let matrix = v * v.adjoint();
        let weight = v.norm_squared();
        Ok(SectorBlock { sector, matrix, weight })
    }

    pub fn sector(&self) -> &Arc<FockSector> {
        &self.sector
    }

    pub fn photons(&self) -> usize {
        self.sector.photons()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn as_operator(&self) -> HermitianOperator {
        HermitianOperator::from_hermitian_unchecked(self.sector.clone(), self.matrix.clone())
    }

    pub fn spectrum(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.matrix)
    }

    pub(crate) fn scaled(&self, w: f64) -> SectorBlock {
        SectorBlock { sector: self.sector.clone(), matrix: self.matrix.scale(w), weight: self.weight * w }
    }

    /// Replaces the matrix by `u ρ u†` (u unitary on the same sector).
    pub(crate) fn conjugated(&self, u: &CMatrix) -> SectorBlock {
        let matrix = linalg::hermitian_part(&(u * &self.matrix * u.adjoint()));
        SectorBlock { sector: self.sector.clone(), matrix, weight: self.weight }
    }
}

/// A photonic state as a direct sum of fixed-photon-number blocks.
#[derive(Clone, Debug)]
pub struct PhotonicState {
    modes: usize,
    blocks: BTreeMap<usize, SectorBlock>,
    pure: bool,
    dephased: bool,
    truncation_deficit: f64,
}

impl PhotonicState {
    /// Assembles a state from blocks, checking `Σ weights + deficit = 1`.
    pub fn from_blocks(modes: usize, blocks: Vec<SectorBlock>, pure: bool, truncation_deficit: f64) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument("a state needs at least one mode".into()));
        }
        if !(0.0..=1.0).contains(&truncation_deficit) {
            return Err(Error::InvalidArgument(format!("truncation deficit {truncation_deficit} outside [0,1]")));
        }
        let mut map = BTreeMap::new();
        for b in blocks {
            if b.sector.modes() != modes {
                return Err(Error::ModeMismatch(modes, b.sector.modes()));
            }
            let n = b.photons();
            if map.insert(n, b).is_some() {
                return Err(Error::InvalidArgument(format!("two blocks given for n={n}")));
            }
        }
        let total: f64 = map.values().map(|b| b.weight).sum::<f64>() + truncation_deficit;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "block weights plus truncation deficit sum to {total}, expected 1"
            )));
        }
        let dephased = map.len() > 1 && pure;
        let pure = pure && map.len() == 1;
        Ok(PhotonicState { modes, blocks: map, pure, dephased, truncation_deficit })
    }

    pub(crate) fn with_flags(mut self, pure: bool, dephased: bool) -> Self {
        self.pure = pure;
        self.dephased = dephased;
        self
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn blocks(&self) -> impl Iterator<Item = &SectorBlock> {
        self.blocks.values()
    }

    pub fn block(&self, photons: usize) -> Option<&SectorBlock> {
        self.blocks.get(&photons)
    }

    pub fn photon_numbers(&self) -> Vec<usize> {
        self.blocks.keys().copied().collect()
    }

    /// True for a rank-one state confined to a single photon-number sector.
    pub fn is_pure(&self) -> bool {
        self.pure
    }

    /// True when coherences between different photon numbers were discarded.
    pub fn is_dephased(&self) -> bool {
        self.dephased
    }

    pub fn truncation_deficit(&self) -> f64 {
        self.truncation_deficit
    }

    /// The single photon-number block of a state confined to one sector.
    pub fn single_block(&self) -> Result<&SectorBlock> {
        if self.blocks.len() == 1 {
            Ok(self.blocks.values().next().expect("one block"))
        } else {
            Err(Error::Precondition(format!(
                "expected a state confined to one photon-number sector, found {} sectors",
                self.blocks.len()
            )))
        }
    }

    /// Warnings attached to any invariant computed from this state.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.truncation_deficit > TRUNCATION_WARNING {
            w.push(format!(
                "state truncated: {:.3e} probability mass beyond the photon cutoff",
                self.truncation_deficit
            ));
        }
        if self.dephased {
            w.push("dephased in total photon number (cross-sector coherences dropped)".into());
        }
        w
    }

    pub(crate) fn map_blocks(&self, f: impl Fn(&SectorBlock) -> SectorBlock) -> PhotonicState {
        PhotonicState {
            modes: self.modes,
            blocks: self.blocks.iter().map(|(&n, b)| (n, f(b))).collect(),
            pure: self.pure,
            dephased: self.dephased,
            truncation_deficit: self.truncation_deficit,
        }
    }
}

/// Builds a normalized pure state from `(amplitude, occupation)` terms.
///
/// Terms may span several photon numbers. Each photon number becomes one
/// rank-one block; coherences between photon numbers are dropped, and the
/// purity flag is only set when a single photon number is present.
pub fn make_pure(terms: &[(Complex64, Occupation)], modes: usize) -> Result<PhotonicState> {
    if modes == 0 {
        return Err(Error::InvalidArgument("a state needs at least one mode".into()));
    }
    let mut by_sector: BTreeMap<usize, (Arc<FockSector>, CVector)> = BTreeMap::new();
    for (amp, occ) in terms {
        if occ.modes() != modes {
            return Err(Error::InvalidArgument(format!(
                "occupation {occ} has {} modes, expected {modes}",
                occ.modes()
            )));
        }
        let n = occ.total();
        if let std::collections::btree_map::Entry::Vacant(e) = by_sector.entry(n) {
            let sector = FockSector::new(modes, n)?;
            let dim = sector.dim();
            e.insert((sector, CVector::from_element(dim, ZERO)));
        }
        let (sector, v) = by_sector.get_mut(&n).expect("inserted above");
        let idx = sector.index_of(occ).expect("occupation belongs to its own sector");
        v[idx] += amp;
    }
    let norm_sq: f64 = by_sector.values().map(|(_, v)| v.norm_squared()).sum();
    if norm_sq == 0.0 || !norm_sq.is_finite() {
        return Err(Error::InvalidArgument("state vector has zero (or non-finite) norm".into()));
    }
    let scale = 1.0 / norm_sq.sqrt();
    let mut blocks = Vec::new();
    for (_, (sector, v)) in by_sector {
        let v = v.map(|z| z * scale);
        if v.norm_squared() > 0.0 {
            blocks.push(SectorBlock::rank_one(sector, &v)?);
        }
    }
    let total: f64 = blocks.iter().map(|b| b.weight).sum();
    // absorb the last ulp of rounding so the weights sum to one exactly
    let deficit = (1.0 - total).clamp(0.0, NORMALIZATION_TOL);
    PhotonicState::from_blocks(modes, blocks, true, deficit)
}

/// Convex combination of states; blocks are merged per photon number.
pub fn make_mixed(components: &[(f64, PhotonicState)]) -> Result<PhotonicState> {
    let Some((_, first)) = components.first() else {
        return Err(Error::InvalidArgument("a mixture needs at least one component".into()));
    };
    let modes = first.modes();
    let mut weight_sum = 0.0;
    for (w, s) in components {
        if *w < 0.0 || !w.is_finite() {
            return Err(Error::InvalidArgument(format!("mixture weight {w} is negative")));
        }
        if s.modes() != modes {
            return Err(Error::ModeMismatch(modes, s.modes()));
        }
        weight_sum += w;
    }
    if (weight_sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidArgument(format!("mixture weights sum to {weight_sum}, expected 1")));
    }

    let mut merged: BTreeMap<usize, SectorBlock> = BTreeMap::new();
    let mut deficit = 0.0;
    for (w, s) in components {
        deficit += w * s.truncation_deficit();
        for b in s.blocks() {
            let scaled = b.scaled(*w);
            match merged.get_mut(&b.photons()) {
                Some(acc) => {
                    acc.matrix += &scaled.matrix;
                    acc.weight += scaled.weight;
                }
                None => {
                    merged.insert(b.photons(), scaled);
                }
            }
        }
    }
    let active: Vec<&PhotonicState> = components.iter().filter(|(w, _)| *w > 0.0).map(|(_, s)| s).collect();
    let pure = active.len() == 1 && active[0].is_pure();
    let dephased = active.iter().any(|s| s.is_dephased());
    // weights that sum to 1 within tolerance are renormalized onto the exact simplex
    let total: f64 = merged.values().map(|b| b.weight).sum::<f64>() + deficit;
    let blocks: Vec<SectorBlock> = merged.into_values().map(|b| b.scaled(1.0 / total)).collect();
    Ok(PhotonicState::from_blocks(modes, blocks, false, deficit / total)?.with_flags(pure, dephased))
}

/// A photon-number-conserving observable, supplied one sector at a time.
pub trait SectorOperatorFamily {
    fn on_sector(&self, sector: &Arc<FockSector>) -> Option<HermitianOperator>;
}

impl<F> SectorOperatorFamily for F
where
    F: Fn(&Arc<FockSector>) -> Option<HermitianOperator>,
{
    fn on_sector(&self, sector: &Arc<FockSector>) -> Option<HermitianOperator> {
        self(sector)
    }
}

/// Expectation value together with the discarded imaginary part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expectation {
    pub value: f64,
    pub imaginary_residue: f64,
}

/// `Σ_n tr(op_n ρ_n)` over the blocks of the state.
pub fn expectation(family: &dyn SectorOperatorFamily, state: &PhotonicState) -> Result<Expectation> {
    let mut acc = ZERO;
    for block in state.blocks() {
        let op = family.on_sector(block.sector()).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no operator supplied for sector m={}, n={}",
                block.sector().modes(),
                block.photons()
            ))
        })?;
        block.sector().check_same(op.sector())?;
        acc += linalg::trace_product(op.matrix(), block.matrix());
    }
    Ok(Expectation { value: acc.re, imaginary_residue: acc.im.abs() })
}
