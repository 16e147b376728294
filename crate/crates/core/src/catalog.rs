//! Named state families and the JSON state description shared with the CLI.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, FockSector, Occupation, PhotonicState, SectorBlock};
use crate::linalg::{self, CMatrix, CVector, ONE, ZERO};

/// Poisson tail targeted by the default photon cutoff.
pub const DEFAULT_TAIL: f64 = 1e-10;
/// Hard cap on the default photon cutoff.
pub const MAX_DEFAULT_CUTOFF: usize = 40;

pub fn fock(occupations: &[usize]) -> Result<PhotonicState> {
    fock::make_pure(&[(ONE, Occupation::new(occupations.to_vec()))], occupations.len())
}

/// `(|N0⟩ + |0N⟩)/√2`.
pub fn noon(n: usize) -> Result<PhotonicState> {
    if n == 0 {
        return Err(Error::InvalidArgument("NOON state needs N >= 1".into()));
    }
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    fock::make_pure(&[(amp, Occupation::new(vec![n, 0])), (amp, Occupation::new(vec![0, n]))], 2)
}

/// `P(N > n)` for `N ~ Poisson(mean)`.
pub fn poisson_tail(mean: f64, n: usize) -> f64 {
    let mut term = (-mean).exp();
    let mut cdf = term;
    for k in 1..=n {
        term *= mean / k as f64;
        cdf += term;
    }
    (1.0 - cdf).max(0.0)
}

/// Smallest cutoff whose Poisson tail is below [`DEFAULT_TAIL`], capped at
/// [`MAX_DEFAULT_CUTOFF`].
pub fn default_cutoff(mean_photons: f64) -> usize {
    (0..=MAX_DEFAULT_CUTOFF).find(|&n| poisson_tail(mean_photons, n) < DEFAULT_TAIL).unwrap_or(MAX_DEFAULT_CUTOFF)
}

/// Product of coherent states `|α₁⟩⋯|α_m⟩`, truncated at `cutoff` total photons.
pub fn coherent(alphas: &[Complex64], cutoff: Option<usize>) -> Result<PhotonicState> {
    coherent_with_fock(alphas, &[], cutoff)
}

/// `|α₁⟩⋯|α_a⟩ ⊗ |k₁⋯k_b⟩`: coherent states on the leading modes and a Fock
/// state on the trailing ones. `cutoff` bounds the total photon number.
pub fn coherent_with_fock(alphas: &[Complex64], fock_tail: &[usize], cutoff: Option<usize>) -> Result<PhotonicState> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("coherent state needs at least one amplitude".into()));
    }
    let fixed: usize = fock_tail.iter().sum();
    let mean: f64 = alphas.iter().map(|a| a.norm_sqr()).sum();
    let cutoff = cutoff.unwrap_or_else(|| fixed + default_cutoff(mean).max(1));
    if cutoff < fixed.max(1) {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff} must be at least 1 and cover the {fixed} Fock photons"
        )));
    }
    let modes = alphas.len() + fock_tail.len();
    let envelope = (-mean / 2.0).exp();
    let mut blocks = Vec::new();
    for extra in 0..=(cutoff - fixed) {
        let sector = FockSector::new(modes, extra + fixed)?;
        let v = CVector::from_iterator(
            sector.dim(),
            sector.basis().iter().map(|o| {
                let (lead, tail) = o.counts().split_at(alphas.len());
                if tail != fock_tail {
                    return ZERO;
                }
                lead.iter().zip(alphas).fold(Complex64::new(envelope, 0.0), |acc, (&c, a)| {
                    acc * a.powu(c as u32) / fock::factorial(c).sqrt()
                })
            }),
        );
        if v.norm_squared() > 0.0 {
            blocks.push(SectorBlock::rank_one(sector, &v)?);
        }
    }
    let deficit = poisson_tail(mean, cutoff - fixed);
    PhotonicState::from_blocks(modes, blocks, true, deficit.min(1.0))
}

/// Mean photon number of the photon-added coherent state `a†|β⟩/√(1+|β|²)`:
/// `γ = (|β|⁴ + 3|β|² + 1)/(1 + |β|²)`.
pub fn gamma(beta: Complex64) -> f64 {
    let b = beta.norm_sqr();
    (b * b + 3.0 * b + 1.0) / (1.0 + b)
}

/// `a†₁|β⟩ ⊗ |k₂⟩ / √(1+|β|²)`, truncated at `cutoff` total photons.
pub fn photon_added_coherent(beta: Complex64, k2: usize, cutoff: Option<usize>) -> Result<PhotonicState> {
    let b = beta.norm_sqr();
    let cutoff = match cutoff {
        Some(c) => c,
        // count in mode 1 is 1 + Poisson-like; one extra photon keeps the tail below target
        None => (k2 + 2 + default_cutoff(b)).min(k2 + 1 + MAX_DEFAULT_CUTOFF),
    };
    if cutoff < k2 + 1 {
        return Err(Error::InvalidArgument(format!("cutoff {cutoff} must be at least k2 + 1 = {}", k2 + 1)));
    }
    let norm = (-b / 2.0).exp() / (1.0 + b).sqrt();
    let mut blocks = Vec::new();
    let mut kept = 0.0;
    for c in 1..=(cutoff - k2) {
        // a†|c-1⟩ = √c |c⟩ with coherent amplitude β^{c-1}/√((c-1)!)
        let amp = beta.powu(c as u32 - 1) * norm * (c as f64).sqrt() / fock::factorial(c - 1).sqrt();
        let sector = FockSector::new(2, c + k2)?;
        let mut v = CVector::from_element(sector.dim(), ZERO);
        let idx = sector.index_of(&Occupation::new(vec![c, k2])).expect("occupation in sector");
        v[idx] = amp;
        kept += amp.norm_sqr();
        if amp.norm_sqr() > 0.0 {
            blocks.push(SectorBlock::rank_one(sector, &v)?);
        }
    }
    PhotonicState::from_blocks(2, blocks, true, (1.0 - kept).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<ComplexJson> for Complex64 {
    fn from(c: ComplexJson) -> Self {
        Complex64::new(c.re, c.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub occupations: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentJson {
    pub weight: f64,
    pub state: StateSpec,
}

/// One photon-number block written out explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// JSON description of a state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Fock {
        occupations: Vec<usize>,
    },
    Superposition {
        m: usize,
        terms: Vec<TermJson>,
    },
    Noon {
        #[serde(rename = "N")]
        n: usize,
    },
    Coherent {
        alphas: Vec<ComplexJson>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<usize>,
        /// Fock occupations of extra trailing modes.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        fock: Vec<usize>,
    },
    PhotonAddedCoherent {
        beta: ComplexJson,
        k2: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<usize>,
    },
    Mixed {
        components: Vec<ComponentJson>,
    },
    /// Explicit photon-number blocks in canonical basis order (used for evolved states).
    Blocks {
        m: usize,
        #[serde(default)]
        pure: bool,
        #[serde(default)]
        dephased: bool,
        #[serde(default)]
        truncation_deficit: f64,
        blocks: Vec<BlockJson>,
    },
}

impl StateSpec {
    pub fn build(&self) -> Result<PhotonicState> {
        match self {
            StateSpec::Fock { occupations } => {
                if occupations.is_empty() {
                    return Err(Error::InvalidArgument("fock state needs at least one mode".into()));
                }
                fock(occupations)
            }
            StateSpec::Superposition { m, terms } => {
                let terms: Vec<(Complex64, Occupation)> = terms
                    .iter()
                    .map(|t| (Complex64::new(t.re, t.im), Occupation::new(t.occupations.clone())))
                    .collect();
                fock::make_pure(&terms, *m)
            }
            StateSpec::Noon { n } => noon(*n),
            StateSpec::Coherent { alphas, cutoff, fock } => {
                let a: Vec<Complex64> = alphas.iter().map(|&c| c.into()).collect();
                coherent_with_fock(&a, fock, *cutoff)
            }
            StateSpec::PhotonAddedCoherent { beta, k2, cutoff } => photon_added_coherent((*beta).into(), *k2, *cutoff),
            StateSpec::Mixed { components } => {
                let built = components.iter().map(|c| Ok((c.weight, c.state.build()?))).collect::<Result<Vec<_>>>()?;
                fock::make_mixed(&built)
            }
            StateSpec::Blocks { m, pure, dephased, truncation_deficit, blocks } => {
                let mut seen = BTreeMap::new();
                for b in blocks {
                    let sector = FockSector::new(*m, b.n)?;
                    let d = sector.dim();
                    let shape_ok =
                        b.re.len() == d && b.im.len() == d && b.re.iter().chain(&b.im).all(|row| row.len() == d);
                    if !shape_ok {
                        return Err(Error::InvalidArgument(format!("block n={} must be {d}x{d}", b.n)));
                    }
                    let matrix = CMatrix::from_fn(d, d, |i, j| Complex64::new(b.re[i][j], b.im[i][j]));
                    seen.insert(b.n, SectorBlock::new(sector, matrix)?);
                }
                let state = PhotonicState::from_blocks(*m, seen.into_values().collect(), *pure, *truncation_deficit)?;
                let (pure, dephased) = (state.is_pure(), *dephased || state.is_dephased());
                Ok(state.with_flags(pure, dephased))
            }
        }
    }

    /// Explicit block description of any state.
    pub fn from_state(state: &PhotonicState) -> StateSpec {
        let blocks = state
            .blocks()
            .map(|b| {
                let (re, im) = linalg::split_parts(b.matrix());
                BlockJson { n: b.photons(), re, im }
            })
            .collect();
        StateSpec::Blocks {
            m: state.modes(),
            pure: state.is_pure(),
            dephased: state.is_dephased(),
            truncation_deficit: state.truncation_deficit(),
            blocks,
        }
    }
}
