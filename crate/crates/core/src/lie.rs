//! Single-photon algebra, its multi-photon image, and the photonic homomorphism.
//!
//! Conventions:
//! * The algebra basis is ordered x-block, y-block, z-block with `(j, k)`
//!   pairs in lexicographic order inside each block (see [`BASIS_ORDER`]).
//! * A scattering matrix acts on creation operators as
//!   `a†_k ↦ Σ_j S_jk a†_j`, so `φ(S₁S₂) = φ(S₁)φ(S₂)`.
//! * The beam splitter is `[[cosθ, -e^{iφ}sinθ], [e^{-iφ}sinθ, cosθ]]` on modes `(j, k)`.
//!
//! Amplitude phases depend on these choices; spectra and verdicts do not.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockSector, HermitianOperator, Occupation, PhotonicState};
use crate::linalg::{self, CMatrix, CVector, I, ONE, ZERO};

/// Tag recorded in every report that depends on the basis order.
pub const BASIS_ORDER: &str = "x(j<k) lexicographic, then y(j<k) lexicographic, then z(j); 1-based modes";

/// Tolerance on `S S† = 1` for scattering matrices.
pub const UNITARITY_TOL: f64 = 1e-10;

/// A passive linear-optical scattering matrix.
#[derive(Clone, Debug)]
pub struct ScatteringMatrix {
    matrix: CMatrix,
    hamiltonian: Option<CMatrix>,
}

impl ScatteringMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() == 0 || !matrix.is_square() {
            return Err(Error::InvalidArgument(format!(
                "scattering matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = linalg::unitarity_deviation(&matrix);
        if deviation > UNITARITY_TOL {
            return Err(Error::NotUnitary { deviation, tolerance: UNITARITY_TOL });
        }
        Ok(ScatteringMatrix { matrix, hamiltonian: None })
    }

    pub fn identity(modes: usize) -> Self {
        ScatteringMatrix { matrix: CMatrix::identity(modes, modes), hamiltonian: None }
    }

    /// `S = exp(i h)` for Hermitian `h`; the Hamiltonian is kept.
    pub fn from_hamiltonian(h: &CMatrix) -> Result<Self> {
        check_hermitian_input(h)?;
        let h = linalg::hermitian_part(h);
        let (vals, vecs) = eigh_complex(&h);
        let phases = CVector::from_iterator(vals.len(), vals.iter().map(|&v| Complex64::from_polar(1.0, v)));
        let matrix = &vecs * CMatrix::from_diagonal(&phases) * vecs.adjoint();
        let mut s = ScatteringMatrix::new(matrix)?;
        s.hamiltonian = Some(h);
        Ok(s)
    }

    /// Attaches `h = log(S)/i` (principal branch), checking `exp(i h) = S` to 1e-8.
    pub fn with_hamiltonian(mut self) -> Result<Self> {
        let schur = self.matrix.clone().schur();
        let (q, t) = schur.unpack();
        let m = self.modes();
        let phases = CVector::from_iterator(m, (0..m).map(|i| Complex64::new(t[(i, i)].arg(), 0.0)));
        let h = linalg::hermitian_part(&(&q * CMatrix::from_diagonal(&phases) * q.adjoint()));
        let back = (h.map(|z| z * I)).exp();
        let err = (&back - &self.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err > 1e-8 {
            return Err(Error::Precondition(format!("matrix logarithm failed to reproduce S (error {err:.3e})")));
        }
        self.hamiltonian = Some(h);
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn hamiltonian(&self) -> Option<&CMatrix> {
        self.hamiltonian.as_ref()
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &ScatteringMatrix) -> Result<ScatteringMatrix> {
        if self.modes() != other.modes() {
            return Err(Error::ModeMismatch(self.modes(), other.modes()));
        }
        Ok(ScatteringMatrix { matrix: &self.matrix * &other.matrix, hamiltonian: None })
    }

    pub fn adjoint(&self) -> ScatteringMatrix {
        ScatteringMatrix { matrix: self.matrix.adjoint(), hamiltonian: self.hamiltonian.as_ref().map(|h| -h) }
    }
}

fn eigh_complex(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = h.clone().symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn check_hermitian_input(h: &CMatrix) -> Result<()> {
    if !h.is_square() {
        return Err(Error::InvalidArgument("single-photon Hamiltonian must be square".into()));
    }
    let deviation = linalg::hermitian_deviation(h);
    if deviation > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "single-photon Hamiltonian is not Hermitian (deviation {deviation:.3e})"
        )));
    }
    Ok(())
}

/// Which element of the orthonormal algebra basis a slot holds (0-based modes).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisLabel {
    X(usize, usize),
    Y(usize, usize),
    Z(usize),
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BasisLabel::X(j, k) => write!(f, "x{}{}", j + 1, k + 1),
            BasisLabel::Y(j, k) => write!(f, "y{}{}", j + 1, k + 1),
            BasisLabel::Z(j) => write!(f, "z{}", j + 1),
        }
    }
}

/// Labels of the `m²` basis elements in canonical order.
pub fn basis_labels(modes: usize) -> Vec<BasisLabel> {
    let pairs: Vec<(usize, usize)> = (0..modes).flat_map(|j| (j + 1..modes).map(move |k| (j, k))).collect();
    let mut out: Vec<BasisLabel> = pairs.iter().map(|&(j, k)| BasisLabel::X(j, k)).collect();
    out.extend(pairs.iter().map(|&(j, k)| BasisLabel::Y(j, k)));
    out.extend((0..modes).map(BasisLabel::Z));
    out
}

/// The matrix of one labelled basis element in dimension `dim`.
pub fn basis_element(dim: usize, label: BasisLabel) -> CMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut b = CMatrix::zeros(dim, dim);
    match label {
        BasisLabel::X(j, k) => {
            b[(j, k)] = Complex64::new(r, 0.0);
            b[(k, j)] = Complex64::new(r, 0.0);
        }
        BasisLabel::Y(j, k) => {
            b[(j, k)] = Complex64::new(0.0, r);
            b[(k, j)] = Complex64::new(0.0, -r);
        }
        BasisLabel::Z(j) => b[(j, j)] = ONE,
    }
    b
}

/// Orthonormal (under `tr(AB)`) Hermitian basis of `u(m)`.
#[derive(Clone, Debug)]
pub struct AlgebraBasis {
    modes: usize,
    labels: Vec<BasisLabel>,
    elements: Vec<CMatrix>,
}

impl AlgebraBasis {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Replaces the elements by `b'_i = Σ_j R_ij b_j` for a real orthogonal `R`.
    /// Labels are kept only as positional names.
    pub fn recombined(&self, r: &DMatrix<f64>) -> Result<AlgebraBasis> {
        let len = self.len();
        if r.nrows() != len || r.ncols() != len {
            return Err(Error::InvalidArgument(format!("recombination must be {len}x{len}")));
        }
        let elements = (0..len)
            .map(|i| {
                let mut acc = CMatrix::zeros(self.modes, self.modes);
                for j in 0..len {
                    acc += self.elements[j].scale(r[(i, j)]);
                }
                acc
            })
            .collect();
        Ok(AlgebraBasis { modes: self.modes, labels: self.labels.clone(), elements })
    }

    pub fn label_names(&self) -> Vec<String> {
        self.labels.iter().map(|l| l.to_string()).collect()
    }
}

/// The generalized Gell-Mann basis `b^x_{jk}, b^y_{jk}, b^z_j` of `u(m)`.
pub fn u_basis(modes: usize) -> Result<AlgebraBasis> {
    if modes == 0 {
        return Err(Error::InvalidArgument("u(m) needs m >= 1".into()));
    }
    let labels = basis_labels(modes);
    let elements = labels.iter().map(|&l| basis_element(modes, l)).collect();
    Ok(AlgebraBasis { modes, labels, elements })
}

/// Matrix of `Σ_jk h_jk a†_j a_k` on `sector`, for any complex `m × m` matrix `h`.
pub(crate) fn second_quantize(h: &CMatrix, sector: &FockSector) -> CMatrix {
    let m = sector.modes();
    let dim = sector.dim();
    let mut out = CMatrix::zeros(dim, dim);
    for (col, inp) in sector.basis().iter().enumerate() {
        let counts = inp.counts();
        for k in 0..m {
            if counts[k] == 0 {
                continue;
            }
            for j in 0..m {
                let hjk = h[(j, k)];
                if hjk == ZERO {
                    continue;
                }
                // a_k lowers by √n_k, then a†_j raises by √(n_j' + 1)
                let after_lower = if j == k { counts[j] - 1 } else { counts[j] };
                let amp = ((counts[k] * (after_lower + 1)) as f64).sqrt();
                let outp = inp.hop(k, j).expect("mode k is occupied");
                let row = sector.index_of(&outp).expect("hop stays in the sector");
                out[(row, col)] += hjk * amp;
            }
        }
    }
    out
}

/// `dφ(h) = Σ_jk h_jk a†_j a_k` restricted to the `n`-photon sector.
pub fn dphi(h: &CMatrix, sector: &Arc<FockSector>) -> Result<HermitianOperator> {
    check_hermitian_input(h)?;
    if h.nrows() != sector.modes() {
        return Err(Error::ModeMismatch(h.nrows(), sector.modes()));
    }
    let matrix = second_quantize(&linalg::hermitian_part(h), sector);
    Ok(HermitianOperator::from_hermitian_unchecked(sector.clone(), linalg::hermitian_part(&matrix)))
}

/// Images `O_i = dφ(b_i)` of the algebra basis on one sector.
#[derive(Clone, Debug)]
pub struct ImageBasis {
    sector: Arc<FockSector>,
    labels: Vec<BasisLabel>,
    elements: Vec<HermitianOperator>,
}

impl ImageBasis {
    pub fn sector(&self) -> &Arc<FockSector> {
        &self.sector
    }

    pub fn modes(&self) -> usize {
        self.sector.modes()
    }

    pub fn photons(&self) -> usize {
        self.sector.photons()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn matrices(&self) -> impl Iterator<Item = &CMatrix> {
        self.elements.iter().map(|o| o.matrix())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

pub fn image_basis(modes: usize, photons: usize) -> Result<ImageBasis> {
    image_basis_on(&FockSector::new(modes, photons)?, &u_basis(modes)?)
}

/// Images of an arbitrary algebra basis on a given sector.
pub fn image_basis_on(sector: &Arc<FockSector>, basis: &AlgebraBasis) -> Result<ImageBasis> {
    if basis.modes() != sector.modes() {
        return Err(Error::ModeMismatch(basis.modes(), sector.modes()));
    }
    let elements = basis.elements().iter().map(|b| dphi(b, sector)).collect::<Result<Vec<_>>>()?;
    Ok(ImageBasis { sector: sector.clone(), labels: basis.labels().to_vec(), elements })
}

/// `φ(S)` on one sector, column by column from the creation-operator expansion
/// `U|n₁…n_m⟩ = ∏_k (Σ_j S_jk a†_j)^{n_k} / √(n_k!) |0⟩`.
pub fn photonic_unitary(s: &ScatteringMatrix, sector: &Arc<FockSector>) -> Result<CMatrix> {
    let m = s.modes();
    if m != sector.modes() {
        return Err(Error::ModeMismatch(m, sector.modes()));
    }
    let n = sector.photons();
    // intermediate sectors 0..=n with a table of `basis + e_j` indices
    let sectors: Vec<Arc<FockSector>> = (0..=n).map(|t| FockSector::new(m, t)).collect::<Result<_>>()?;
    let raise: Vec<Vec<Vec<usize>>> = (0..n)
        .map(|t| {
            sectors[t]
                .basis()
                .iter()
                .map(|o| {
                    (0..m)
                        .map(|j| {
                            let mut c = o.counts().to_vec();
                            c[j] += 1;
                            sectors[t + 1].index_of(&Occupation::new(c)).expect("raised occupation exists")
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    // √(∏ p_j!) turns a creation monomial into a normalized Fock state
    let monomial_norm: Vec<f64> = sector.basis().iter().map(|o| o.factorial_product().sqrt()).collect();

    let dim = sector.dim();
    let mut u = CMatrix::zeros(dim, dim);
    for (col, inp) in sector.basis().iter().enumerate() {
        let mut poly = vec![ONE];
        let mut t = 0;
        for (k, &nk) in inp.counts().iter().enumerate() {
            for _ in 0..nk {
                let mut next = vec![ZERO; sectors[t + 1].dim()];
                for (idx, &c) in poly.iter().enumerate() {
                    if c == ZERO {
                        continue;
                    }
                    for j in 0..m {
                        next[raise[t][idx][j]] += c * s.matrix[(j, k)];
                    }
                }
                poly = next;
                t += 1;
            }
        }
        let scale = 1.0 / inp.factorial_product().sqrt();
        for (row, c) in poly.into_iter().enumerate() {
            u[(row, col)] = c * scale * monomial_norm[row];
        }
    }
    Ok(u)
}

/// `⟨out|φ(S)|in⟩ = perm(S[out, in]) / √(∏ in_k! ∏ out_j!)`, evaluated with Ryser's formula.
///
/// Exponential in the photon number; used as an independent check of
/// [`photonic_unitary`].
pub fn amplitude_permanent(s: &ScatteringMatrix, inp: &Occupation, out: &Occupation) -> Result<Complex64> {
    let m = s.modes();
    if inp.modes() != m || out.modes() != m {
        return Err(Error::InvalidArgument(format!(
            "occupations must have {m} modes (got {} and {})",
            inp.modes(),
            out.modes()
        )));
    }
    if inp.total() != out.total() {
        return Err(Error::SectorMismatch {
            expected_modes: m,
            expected_photons: inp.total(),
            modes: m,
            photons: out.total(),
        });
    }
    let expand = |o: &Occupation| -> Vec<usize> {
        o.counts().iter().enumerate().flat_map(|(mode, &c)| std::iter::repeat_n(mode, c)).collect()
    };
    let rows = expand(out);
    let cols = expand(inp);
    let sub = CMatrix::from_fn(rows.len(), cols.len(), |r, c| s.matrix[(rows[r], cols[c])]);
    let norm = (inp.factorial_product() * out.factorial_product()).sqrt();
    Ok(permanent(&sub) / norm)
}

/// Ryser's inclusion–exclusion formula, `O(2ⁿ n²)`.
pub fn permanent(a: &CMatrix) -> Complex64 {
    let n = a.nrows();
    if n == 0 {
        return ONE;
    }
    assert!(n < 63, "permanent of a {n}x{n} matrix is out of reach");
    let mut total = ZERO;
    for mask in 1u64..(1u64 << n) {
        let mut prod = ONE;
        for i in 0..n {
            let mut row_sum = ZERO;
            for j in 0..n {
                if mask & (1 << j) != 0 {
                    row_sum += a[(i, j)];
                }
            }
            prod *= row_sum;
        }
        let sign = if (n - mask.count_ones() as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += prod * sign;
    }
    total
}

/// Matrix `C` of the adjoint action, `S† b_i S = Σ_j C_ij b_j`.
#[derive(Clone, Debug)]
pub struct AdjointMatrix {
    modes: usize,
    entries: DMatrix<f64>,
    imaginary_residue: f64,
}

impl AdjointMatrix {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn imaginary_residue(&self) -> f64 {
        self.imaginary_residue
    }

    pub fn basis_order(&self) -> &'static str {
        BASIS_ORDER
    }

    /// Largest entry of `|C Cᵀ - 1|`.
    pub fn orthogonality_deviation(&self) -> f64 {
        let p = &self.entries * self.entries.transpose();
        let n = p.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// `C_ij = tr(b_j S† b_i S)`, from the single-photon matrices only.
pub fn adjoint_matrix(s: &ScatteringMatrix) -> Result<AdjointMatrix> {
    let basis = u_basis(s.modes())?;
    let sd = s.matrix.adjoint();
    let len = basis.len();
    let mut entries = DMatrix::zeros(len, len);
    let mut residue = 0.0f64;
    for (i, bi) in basis.elements().iter().enumerate() {
        let rotated = &sd * bi * &s.matrix;
        for (j, bj) in basis.elements().iter().enumerate() {
            let c = linalg::trace_product(bj, &rotated);
            entries[(i, j)] = c.re;
            residue = residue.max(c.im.abs());
        }
    }
    Ok(AdjointMatrix { modes: s.modes(), entries, imaginary_residue: residue })
}

/// Two-mode mixer on modes `j < k` (1-based):
/// `[[cosθ, -e^{iφ} sinθ], [e^{-iφ} sinθ, cosθ]]`.
pub fn beam_splitter(modes: usize, j: usize, k: usize, theta: f64, phi: f64) -> Result<ScatteringMatrix> {
    if !(1 <= j && j < k && k <= modes) {
        return Err(Error::InvalidArgument(format!(
            "beam splitter modes must satisfy 1 <= j < k <= m (got j={j}, k={k}, m={modes})"
        )));
    }
    let (s, c) = theta.sin_cos();
    let mut u = CMatrix::identity(modes, modes);
    let (a, b) = (j - 1, k - 1);
    u[(a, a)] = Complex64::new(c, 0.0);
    u[(a, b)] = -Complex64::from_polar(s, phi);
    u[(b, a)] = Complex64::from_polar(s, -phi);
    u[(b, b)] = Complex64::new(c, 0.0);
    Ok(ScatteringMatrix { matrix: u, hamiltonian: None })
}

/// Phase `e^{iφ}` on mode `j` (1-based).
pub fn phase_shifter(modes: usize, j: usize, phi: f64) -> Result<ScatteringMatrix> {
    if !(1 <= j && j <= modes) {
        return Err(Error::InvalidArgument(format!("phase shifter mode {j} outside 1..={modes}")));
    }
    let mut u = CMatrix::identity(modes, modes);
    u[(j - 1, j - 1)] = Complex64::from_polar(1.0, phi);
    Ok(ScatteringMatrix { matrix: u, hamiltonian: None })
}

/// Haar-random unitary from a seeded generator.
pub fn haar_unitary(modes: usize, seed: u64) -> Result<ScatteringMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_unitary_with(modes, &mut rng)
}

/// Haar-random unitary: QR of a complex Ginibre matrix, with the phases of
/// `diag(R)` pushed into `Q` so the distribution is exactly Haar.
pub fn haar_unitary_with<R: Rng + ?Sized>(modes: usize, rng: &mut R) -> Result<ScatteringMatrix> {
    if modes == 0 {
        return Err(Error::InvalidArgument("a unitary needs m >= 1".into()));
    }
    let z = CMatrix::from_fn(modes, modes, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CVector::from_iterator(
        modes,
        (0..modes).map(|i| {
            let d = r[(i, i)];
            if d.norm() == 0.0 {
                ONE
            } else {
                d / d.norm()
            }
        }),
    );
    let u = q * CMatrix::from_diagonal(&phases);
    ScatteringMatrix::new(u)
}

/// Evolves every block of a state: `ρ_n ↦ φ(S) ρ_n φ(S)†`.
pub fn evolve(state: &PhotonicState, s: &ScatteringMatrix) -> Result<PhotonicState> {
    if state.modes() != s.modes() {
        return Err(Error::ModeMismatch(state.modes(), s.modes()));
    }
    let mut unitaries: HashMap<usize, CMatrix> = HashMap::new();
    for b in state.blocks() {
        unitaries.insert(b.photons(), photonic_unitary(s, b.sector())?);
    }
    Ok(state.map_blocks(|b| b.conjugated(&unitaries[&b.photons()])))
}

/// One element of a circuit description, applied in listed order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CircuitElement {
    Bs {
        j: usize,
        k: usize,
        theta: f64,
        #[serde(default)]
        phi: f64,
    },
    Ps {
        j: usize,
        phi: f64,
    },
}

/// JSON description of a scattering matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UnitarySpec {
    Matrix {
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    },
    Circuit {
        m: usize,
        elements: Vec<CircuitElement>,
    },
    Haar {
        m: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl UnitarySpec {
    /// Builds the matrix; `default_seed` is used when a Haar spec carries no seed.
    pub fn build(&self, default_seed: u64) -> Result<ScatteringMatrix> {
        match self {
            UnitarySpec::Matrix { re, im } => {
                let n = re.len();
                let shape_ok = n > 0 && im.len() == n && re.iter().chain(im).all(|row| row.len() == n);
                if !shape_ok {
                    return Err(Error::InvalidArgument("unitary \"re\" and \"im\" must be equal square arrays".into()));
                }
                ScatteringMatrix::new(CMatrix::from_fn(n, n, |i, j| Complex64::new(re[i][j], im[i][j])))
            }
            UnitarySpec::Circuit { m, elements } => {
                let mut s = ScatteringMatrix::identity(*m);
                if *m == 0 {
                    return Err(Error::InvalidArgument("circuit needs m >= 1".into()));
                }
                for e in elements {
                    let step = match *e {
                        CircuitElement::Bs { j, k, theta, phi } => beam_splitter(*m, j, k, theta, phi)?,
                        CircuitElement::Ps { j, phi } => phase_shifter(*m, j, phi)?,
                    };
                    s = step.compose(&s)?;
                }
                Ok(s)
            }
            UnitarySpec::Haar { m, seed } => haar_unitary(*m, seed.unwrap_or(default_seed)),
        }
    }
}
