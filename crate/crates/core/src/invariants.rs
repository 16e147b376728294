//! Invariants of a state under passive linear-optical evolution.
//!
//! Every quantity here is built from the expectation values `tr(O_i ρ)` of
//! the image basis (and products of it), and is either a spectrum or a scalar
//! that is unchanged when `ρ ↦ φ(S) ρ φ(S)†`:
//!
//! * [`h_rho`]: the `m × m` coherency matrix `Σ tr(O_i ρ) b_i`, its spectrum
//!   and the trace invariants `I_k = tr(h_ρ^k)`;
//! * [`tangent_coefficient_projection`] / [`tangent_orthogonal_projection`]:
//!   the sector-level projection onto `span{O_i}` (coefficient form and
//!   Gram-corrected orthogonal form) and its orthogonal complement;
//! * [`higher_preimage`], [`higher_traces`], [`higher_projection`]: order-`k`
//!   generalizations over products `O_{i₁}⋯O_{i_k}`;
//! * [`nested_commutator`]: `(-1)^k Σ tr(b_{i₁}⋯b_{i_k}) [O_{i_k},[…[O_{i₁},ρ]…]]`;
//! * [`covariance`]: the symmetrized covariance of the `O_i`;
//! * [`equivariant_eigenspaces`] / [`subspace_spectra`]: eigenspaces of an
//!   Ad-equivariant self-adjoint map on the operator space of a sector, and
//!   the spectra of a state's projections onto them.
//!
//! Sums over index tuples grow as `(m²)^k`; they are guarded by [`Limits`].

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockSector, HermitianOperator, PhotonicState, SectorBlock, CHAIN_TOL};
use crate::lie::{self, AlgebraBasis, BasisLabel, ImageBasis};
use crate::linalg::{self, CMatrix, ZERO};

/// Covariance normalization tag carried by every covariance output.
pub const COVARIANCE_CONVENTION: &str =
    "M_ij = <O_i><O_j> - <(O_i O_j + O_j O_i)/2> with orthonormal O_i (1/sqrt(2) on x and y)";

/// Sign convention of the nested commutator.
pub const NESTED_SIGN_CONVENTION: &str = "(-1)^k prefactor";

/// Clustering tolerances for eigenspace decompositions.
pub const CLUSTER_RELATIVE_TOL: f64 = 1e-8;
pub const CLUSTER_ABSOLUTE_TOL: f64 = 1e-10;

/// Caps on the work an invariant may request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Maximum number of index tuples `(m²)^k` in a sum.
    pub max_terms: u128,
    /// Largest sector dimension `M` for eigenspace decompositions (the map is `M² × M²`).
    pub max_operator_dim: usize,
    /// Largest order accepted by [`trace_invariants_explicit`] once `m > 3`.
    pub max_explicit_order: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_terms: 1_000_000, max_operator_dim: 60, max_explicit_order: 4 }
    }
}

fn tuple_count(modes: usize, k: usize) -> u128 {
    let base = (modes * modes) as u128;
    (0..k).fold(1u128, |acc, _| acc.saturating_mul(base))
}

fn guard(modes: usize, k: usize, limits: &Limits, what: &str) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument(format!("{what}: order k must be at least 1")));
    }
    let terms = tuple_count(modes, k);
    if terms > limits.max_terms {
        return Err(Error::Complexity { terms, limit: limits.max_terms, what: what.to_string() });
    }
    Ok(())
}

/// Visits every `k`-tuple of indices into the families (all of equal length),
/// passing the ordered product of each family's matrices along the tuple.
fn walk_tuples(families: &[&[CMatrix]], k: usize, visit: &mut dyn FnMut(&[usize], &[CMatrix])) {
    let start: Vec<CMatrix> = families
        .iter()
        .map(|f| {
            let d = f.first().map(|x| x.nrows()).unwrap_or(0);
            CMatrix::identity(d, d)
        })
        .collect();
    let mut idx = Vec::with_capacity(k);
    walk_rec(families, k, &mut idx, &start, visit);
}

fn walk_rec(
    families: &[&[CMatrix]],
    k: usize,
    idx: &mut Vec<usize>,
    prefix: &[CMatrix],
    visit: &mut dyn FnMut(&[usize], &[CMatrix]),
) {
    if idx.len() == k {
        visit(idx, prefix);
        return;
    }
    let len = families[0].len();
    for i in 0..len {
        let next: Vec<CMatrix> = families.iter().zip(prefix).map(|(f, p)| p * &f[i]).collect();
        idx.push(i);
        walk_rec(families, k, idx, &next, visit);
        idx.pop();
    }
}

fn image_matrices(image: &ImageBasis) -> Vec<CMatrix> {
    image.matrices().cloned().collect()
}

/// Real Hermitian result from an accumulated sum, checked at the chain tolerance.
fn settle_hermitian(sector: &Arc<FockSector>, acc: CMatrix) -> Result<HermitianOperator> {
    HermitianOperator::with_tolerance(sector.clone(), acc, CHAIN_TOL)
}

fn settle_small(acc: CMatrix) -> Result<CMatrix> {
    let deviation = linalg::hermitian_deviation(&acc);
    let scale = acc.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if deviation > CHAIN_TOL * scale {
        return Err(Error::NotHermitian { deviation, tolerance: CHAIN_TOL });
    }
    Ok(linalg::hermitian_part(&acc))
}

/// The expectation values `r_i = tr(O_i ρ)` in basis order.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVector {
    pub modes: usize,
    pub labels: Vec<BasisLabel>,
    pub values: Vec<f64>,
    pub imaginary_residue: f64,
}

impl CoefficientVector {
    pub fn get(&self, label: BasisLabel) -> Option<f64> {
        self.labels.iter().position(|&l| l == label).map(|i| self.values[i])
    }
}

pub fn coefficient_vector(state: &PhotonicState) -> Result<CoefficientVector> {
    coefficient_vector_with(state, &lie::u_basis(state.modes())?)
}

/// [`coefficient_vector`] for an arbitrary orthonormal algebra basis.
pub fn coefficient_vector_with(state: &PhotonicState, basis: &AlgebraBasis) -> Result<CoefficientVector> {
    if basis.modes() != state.modes() {
        return Err(Error::ModeMismatch(basis.modes(), state.modes()));
    }
    let mut acc = vec![ZERO; basis.len()];
    for block in state.blocks() {
        let image = lie::image_basis_on(block.sector(), basis)?;
        for (a, o) in acc.iter_mut().zip(image.matrices()) {
            *a += linalg::trace_product(o, block.matrix());
        }
    }
    let residue = acc.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok(CoefficientVector {
        modes: state.modes(),
        labels: basis.labels().to_vec(),
        values: acc.iter().map(|z| z.re).collect(),
        imaginary_residue: residue,
    })
}

/// The coherency matrix with its spectrum and trace invariants.
#[derive(Clone, Debug)]
pub struct TangentData {
    pub h_rho: CMatrix,
    pub spectrum: Vec<f64>,
    /// `I_k = tr(h_ρ^k)` for `k = 1..=m`.
    pub trace_invariants: Vec<f64>,
}

/// `h_ρ = Σ tr(O_i ρ) b_i`. Its `(j, k)` entry is `⟨a†_k a_j⟩`.
pub fn h_rho(state: &PhotonicState) -> Result<TangentData> {
    let basis = lie::u_basis(state.modes())?;
    let r = coefficient_vector_with(state, &basis)?;
    let m = state.modes();
    let mut h = CMatrix::zeros(m, m);
    for (b, &v) in basis.elements().iter().zip(&r.values) {
        h += b.scale(v);
    }
    let h = linalg::hermitian_part(&h);
    let spectrum = linalg::eigvalsh(&h);
    let mut power = CMatrix::identity(m, m);
    let trace_invariants = (0..m)
        .map(|_| {
            power = &power * &h;
            linalg::trace(&power).re
        })
        .collect();
    Ok(TangentData { h_rho: h, spectrum, trace_invariants })
}

/// `I_k` from the explicit multi-index sum `Σ tr(b_{i₁}⋯b_{i_k}) ∏ r_{i_j}`.
pub fn trace_invariants_explicit(state: &PhotonicState, k: usize, limits: &Limits) -> Result<f64> {
    let m = state.modes();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("explicit trace invariant needs 1 <= k <= m (k={k}, m={m})")));
    }
    if m > 3 && k > limits.max_explicit_order {
        return Err(Error::Complexity {
            terms: tuple_count(m, k),
            limit: tuple_count(m, limits.max_explicit_order),
            what: format!("explicit trace invariant of order {k} with m={m}"),
        });
    }
    guard(m, k, limits, "explicit trace invariant")?;
    let basis = lie::u_basis(m)?;
    let r = coefficient_vector_with(state, &basis)?;
    let mut total = ZERO;
    walk_tuples(&[basis.elements()], k, &mut |idx, prods| {
        let weight: f64 = idx.iter().map(|&i| r.values[i]).product();
        if weight != 0.0 {
            total += linalg::trace(&prods[0]) * weight;
        }
    });
    Ok(total.re)
}

/// `Σ r_i O_i` on the block's sector with `r_i = tr(O_i ρ_n)`.
pub fn tangent_coefficient_projection(block: &SectorBlock) -> Result<HermitianOperator> {
    tangent_coefficient_projection_with(block, &lie::u_basis(block.sector().modes())?)
}

pub fn tangent_coefficient_projection_with(block: &SectorBlock, basis: &AlgebraBasis) -> Result<HermitianOperator> {
    let sector = block.sector();
    if sector.photons() == 0 {
        return Ok(HermitianOperator::zero(sector.clone()));
    }
    let image = lie::image_basis_on(sector, basis)?;
    let mut acc = CMatrix::zeros(sector.dim(), sector.dim());
    for o in image.matrices() {
        let r = linalg::trace_product(o, block.matrix()).re;
        acc += o.scale(r);
    }
    settle_hermitian(sector, acc)
}

/// Orthogonal projection of `x` onto `span{O_i}` under `tr(AB)`, by solving
/// the Gram system `G c = r`.
fn orthogonal_tangent_part(x: &CMatrix, image: &ImageBasis) -> CMatrix {
    let ops = image_matrices(image);
    let len = ops.len();
    let dim = image.sector().dim();
    let gram = DMatrix::from_fn(len, len, |i, j| linalg::trace_product(&ops[i], &ops[j]).re);
    let rhs = nalgebra::DVector::from_iterator(len, ops.iter().map(|o| linalg::trace_product(o, x).re));
    let coeffs = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram.pseudo_inverse(1e-12).map(|p| p * &rhs).unwrap_or_else(|_| rhs.map(|_| 0.0)),
    };
    let mut acc = CMatrix::zeros(dim, dim);
    for (o, c) in ops.iter().zip(coeffs.iter()) {
        acc += o.scale(*c);
    }
    acc
}

/// Split of a block into its orthogonal projection onto `span{O_i}` and the
/// complement; `tr(ρ_⊥ O_i) = 0` for every `i`. On the vacuum sector both
/// the projection and its complement are defined as zero.
pub fn tangent_orthogonal_projection(block: &SectorBlock) -> Result<(HermitianOperator, HermitianOperator)> {
    let sector = block.sector();
    if sector.photons() == 0 {
        return Ok((HermitianOperator::zero(sector.clone()), HermitianOperator::zero(sector.clone())));
    }
    let image = lie::image_basis_on(sector, &lie::u_basis(sector.modes())?)?;
    let tangent = orthogonal_tangent_part(block.matrix(), &image);
    let perp = block.matrix() - &tangent;
    Ok((settle_hermitian(sector, tangent)?, settle_hermitian(sector, perp)?))
}

/// `Σ tr(O_{i₁}⋯O_{i_k} ρ) b_{i₁}⋯b_{i_k}`, an `m × m` Hermitian matrix.
pub fn higher_preimage(state: &PhotonicState, k: usize, limits: &Limits) -> Result<CMatrix> {
    let m = state.modes();
    guard(m, k, limits, "higher-order preimage")?;
    let basis = lie::u_basis(m)?;
    let mut acc = CMatrix::zeros(m, m);
    for block in state.blocks() {
        let image = lie::image_basis_on(block.sector(), &basis)?;
        let ops = image_matrices(&image);
        walk_tuples(&[&ops, basis.elements()], k, &mut |_, prods| {
            let c = linalg::trace_product(&prods[0], block.matrix());
            if c != ZERO {
                acc += prods[1].map(|z| z * c);
            }
        });
    }
    settle_small(acc)
}

/// `Σ tr(b_{i₁}⋯b_{i_k}) tr(O_{i₁}⋯O_{i_k} ρ)`, the trace of [`higher_preimage`].
pub fn higher_traces(state: &PhotonicState, k: usize, limits: &Limits) -> Result<f64> {
    Ok(linalg::trace(&higher_preimage(state, k, limits)?).re)
}

/// `P_k(ρ) = Σ tr(O_{i₁}⋯O_{i_k} ρ) O_{i₁}⋯O_{i_k}` on the block's sector.
pub fn higher_projection(block: &SectorBlock, k: usize, limits: &Limits) -> Result<HermitianOperator> {
    apply_higher_projection(block.sector(), block.matrix(), k, limits)
}

fn apply_higher_projection(
    sector: &Arc<FockSector>,
    x: &CMatrix,
    k: usize,
    limits: &Limits,
) -> Result<HermitianOperator> {
    guard(sector.modes(), k, limits, "higher-order projection")?;
    let image = lie::image_basis(sector.modes(), sector.photons())?;
    let ops = image_matrices(&image);
    let dim = sector.dim();
    let mut acc = CMatrix::zeros(dim, dim);
    walk_tuples(&[&ops], k, &mut |_, prods| {
        let c = linalg::trace_product(&prods[0], x);
        if c != ZERO {
            acc += prods[0].map(|z| z * c);
        }
    });
    settle_hermitian(sector, acc)
}

/// `a†_q a_p` on the sector, for all `(p, q)`: `Σ_i (b_i)_{pq} O_i = a†_q a_p`
/// because the `b_i` form an orthonormal basis.
fn hopping_operators(sector: &FockSector) -> Vec<Vec<CMatrix>> {
    let m = sector.modes();
    (0..m).map(|p| (0..m).map(|q| lie::second_quantize(&linalg::matrix_unit(m, q, p), sector)).collect()).collect()
}

/// Applies the nested-commutator map to an arbitrary sector matrix.
///
/// Uses `tr(b_{i₁}⋯b_{i_k}) = Σ_p (b_{i₁})_{p₁p₂}⋯(b_{i_k})_{p_k p₁}` to fold
/// each sum over `i_t` into a single hopping operator, so the work is
/// `O(k m³)` commutators instead of `(m²)^k`.
fn apply_nested(hops: &[Vec<CMatrix>], x: &CMatrix, k: usize) -> CMatrix {
    let m = hops.len();
    let dim = x.nrows();
    let ad = |a: &CMatrix, y: &CMatrix| linalg::commutator(a, y);
    let mut total = CMatrix::zeros(dim, dim);
    for p1 in 0..m {
        if k == 1 {
            total += ad(&hops[p1][p1], x);
            continue;
        }
        // layer[p] holds the partial chain ending at index p
        let mut layer: Vec<CMatrix> = (0..m).map(|p2| ad(&hops[p1][p2], x)).collect();
        for _ in 2..k {
            layer = (0..m)
                .map(|next| {
                    let mut acc = CMatrix::zeros(dim, dim);
                    for (cur, y) in layer.iter().enumerate() {
                        acc += ad(&hops[cur][next], y);
                    }
                    acc
                })
                .collect();
        }
        for (pk, y) in layer.iter().enumerate() {
            total += ad(&hops[pk][p1], y);
        }
    }
    if k % 2 == 1 {
        total = -total;
    }
    total
}

/// `N_k(ρ) = (-1)^k Σ tr(b_{i₁}⋯b_{i_k}) [O_{i_k},[…[O_{i₁},ρ]…]]`.
pub fn nested_commutator(block: &SectorBlock, k: usize, limits: &Limits) -> Result<HermitianOperator> {
    let sector = block.sector();
    guard(sector.modes(), k, limits, "nested commutator")?;
    let hops = hopping_operators(sector);
    settle_hermitian(sector, apply_nested(&hops, block.matrix(), k))
}

/// Covariance of the image basis with its spectrum.
#[derive(Clone, Debug)]
pub struct Covariance {
    pub labels: Vec<BasisLabel>,
    pub matrix: DMatrix<f64>,
    pub spectrum: Vec<f64>,
}

impl Covariance {
    pub fn entry(&self, a: BasisLabel, b: BasisLabel) -> Option<f64> {
        let i = self.labels.iter().position(|&l| l == a)?;
        let j = self.labels.iter().position(|&l| l == b)?;
        Some(self.matrix[(i, j)])
    }
}

/// `M_ij = ⟨O_i⟩⟨O_j⟩ − ⟨(O_iO_j + O_jO_i)/2⟩`, moments summed over sectors.
pub fn covariance(state: &PhotonicState) -> Result<Covariance> {
    let basis = lie::u_basis(state.modes())?;
    let len = basis.len();
    let mut first = vec![0.0; len];
    let mut second = DMatrix::<f64>::zeros(len, len);
    for block in state.blocks() {
        let image = lie::image_basis_on(block.sector(), &basis)?;
        let ops = image_matrices(&image);
        let weighted: Vec<CMatrix> = ops.iter().map(|o| o * block.matrix()).collect();
        for i in 0..len {
            first[i] += linalg::trace(&weighted[i]).re;
            for j in 0..len {
                // Re tr(O_i O_j ρ) is the symmetrized moment
                second[(i, j)] += linalg::trace_product(&ops[i], &weighted[j]).re;
            }
        }
    }
    let matrix = DMatrix::from_fn(len, len, |i, j| first[i] * first[j] - 0.5 * (second[(i, j)] + second[(j, i)]));
    let (spectrum, _) = linalg::eigh_real(&matrix);
    Ok(Covariance { labels: basis.labels().to_vec(), matrix, spectrum })
}

/// Ad-equivariant self-adjoint maps on the operator space of a sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// `P_k`
    Projection,
    /// `N_k`
    Nested,
}

impl MapKind {
    pub fn name(&self) -> &'static str {
        match self {
            MapKind::Projection => "projection",
            MapKind::Nested => "nested",
        }
    }
}

/// One eigenspace of the map: its eigenvalue and a trace-orthonormal Hermitian basis.
#[derive(Clone, Debug)]
pub struct Cluster {
    pub eigenvalue: f64,
    pub basis: Vec<HermitianOperator>,
}

impl Cluster {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Clone, Debug)]
pub struct SubspaceDecomposition {
    pub sector: Arc<FockSector>,
    pub kind: MapKind,
    pub order: usize,
    /// Ascending in eigenvalue.
    pub clusters: Vec<Cluster>,
}

impl SubspaceDecomposition {
    pub fn dimensions(&self) -> Vec<usize> {
        self.clusters.iter().map(Cluster::dim).collect()
    }
}

/// The chosen map as a real symmetric `M² × M²` matrix in the orthonormal
/// Hermitian basis `{e_a}` of the sector's operator space: `T_ab = tr(e_a T(e_b))`.
pub fn equivariant_map_matrix(
    sector: &Arc<FockSector>,
    kind: MapKind,
    k: usize,
    limits: &Limits,
) -> Result<(Vec<CMatrix>, DMatrix<f64>)> {
    let dim = sector.dim();
    if dim > limits.max_operator_dim {
        return Err(Error::Complexity {
            terms: (dim * dim) as u128,
            limit: (limits.max_operator_dim * limits.max_operator_dim) as u128,
            what: format!("operator space of sector m={}, n={}", sector.modes(), sector.photons()),
        });
    }
    guard(sector.modes(), k, limits, kind.name())?;
    let op_basis: Vec<CMatrix> = lie::u_basis(dim)?.elements().to_vec();
    let len = op_basis.len();
    let mut t = DMatrix::<Complex64>::zeros(len, len);
    match kind {
        MapKind::Projection => {
            // T_ab = Σ_I tr(A_I e_a) tr(A_I e_b)
            let image = lie::image_basis_on(sector, &lie::u_basis(sector.modes())?)?;
            let ops = image_matrices(&image);
            walk_tuples(&[&ops], k, &mut |_, prods| {
                let w: Vec<Complex64> = op_basis.iter().map(|e| linalg::trace_product(&prods[0], e)).collect();
                for a in 0..len {
                    if w[a] == ZERO {
                        continue;
                    }
                    for b in 0..len {
                        t[(a, b)] += w[a] * w[b];
                    }
                }
            });
        }
        MapKind::Nested => {
            let hops = hopping_operators(sector);
            for b in 0..len {
                let image = apply_nested(&hops, &op_basis[b], k);
                for a in 0..len {
                    t[(a, b)] = linalg::trace_product(&op_basis[a], &image);
                }
            }
        }
    }
    Ok((op_basis, t.map(|z| z.re)))
}

/// Eigenspaces of `P_k` or `N_k` on the operator space of the `n`-photon sector.
pub fn equivariant_eigenspaces(
    modes: usize,
    photons: usize,
    kind: MapKind,
    k: usize,
    limits: &Limits,
) -> Result<SubspaceDecomposition> {
    let sector = FockSector::new(modes, photons)?;
    let (op_basis, t) = equivariant_map_matrix(&sector, kind, k, limits)?;
    let (vals, vecs) = linalg::eigh_real(&t);
    let dim = sector.dim();

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..vals.len() {
        let joins = i > 0 && {
            let prev = vals[i - 1];
            let tol = CLUSTER_ABSOLUTE_TOL.max(CLUSTER_RELATIVE_TOL * vals[i].abs().max(prev.abs()));
            (vals[i] - prev).abs() <= tol
        };
        if joins {
            groups.last_mut().expect("non-empty").push(i);
        } else {
            groups.push(vec![i]);
        }
    }

    let clusters = groups
        .into_iter()
        .map(|members| {
            let eigenvalue = members.iter().map(|&i| vals[i]).sum::<f64>() / members.len() as f64;
            let basis = members
                .iter()
                .map(|&col| {
                    let mut v = CMatrix::zeros(dim, dim);
                    for (a, e) in op_basis.iter().enumerate() {
                        let x = vecs[(a, col)];
                        if x != 0.0 {
                            v += e.scale(x);
                        }
                    }
                    HermitianOperator::with_tolerance(sector.clone(), v, CHAIN_TOL)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Cluster { eigenvalue, basis })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubspaceDecomposition { sector, kind, order: k, clusters })
}

/// The projection `ρ^λ = Σ_i tr(v_i^λ ρ) v_i^λ` onto one cluster.
pub fn cluster_projection(block: &SectorBlock, cluster: &Cluster) -> Result<HermitianOperator> {
    let dim = block.sector().dim();
    let mut acc = CMatrix::zeros(dim, dim);
    for v in &cluster.basis {
        let c = linalg::trace_product(v.matrix(), block.matrix()).re;
        acc += v.matrix().scale(c);
    }
    settle_hermitian(block.sector(), acc)
}

/// `(λ, ascending spectrum of ρ^λ)` for every cluster of the decomposition.
pub fn subspace_spectra(block: &SectorBlock, decomposition: &SubspaceDecomposition) -> Result<Vec<(f64, Vec<f64>)>> {
    decomposition.sector.check_same(block.sector())?;
    decomposition.clusters.iter().map(|c| Ok((c.eigenvalue, cluster_projection(block, c)?.spectrum()))).collect()
}
