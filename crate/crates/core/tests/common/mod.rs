#![allow(dead_code)]

use std::sync::Arc;

use linopt_core::fock::{FockSector, PhotonicState, SectorBlock};
use linopt_core::linalg::{CMatrix, CVector};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> CVector {
    let v = CVector::from_fn(dim, |_, _| gauss(rng));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| gauss(rng));
    (&a + a.adjoint()).scale(0.5)
}

/// Random density block of the given rank with trace `weight`.
pub fn random_block(sector: &Arc<FockSector>, rank: usize, weight: f64, rng: &mut ChaCha8Rng) -> SectorBlock {
    let d = sector.dim();
    let g = CMatrix::from_fn(d, rank.max(1), |_, _| gauss(rng));
    let mut rho = &g * g.adjoint();
    let tr: f64 = rho.diagonal().iter().map(|z| z.re).sum();
    rho = rho.scale(weight / tr);
    SectorBlock::new(sector.clone(), rho).unwrap()
}

pub fn random_pure(modes: usize, photons: usize, rng: &mut ChaCha8Rng) -> PhotonicState {
    let sector = FockSector::new(modes, photons).unwrap();
    let v = random_vector(sector.dim(), rng);
    let block = SectorBlock::rank_one(sector, &v).unwrap();
    PhotonicState::from_blocks(modes, vec![block], true, 0.0).unwrap()
}

/// Random mixed state spread over the given photon numbers.
pub fn random_state(modes: usize, photons: &[usize], rng: &mut ChaCha8Rng) -> PhotonicState {
    let raw: Vec<f64> = photons.iter().map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let blocks = photons
        .iter()
        .zip(&raw)
        .map(|(&n, &w)| {
            let sector = FockSector::new(modes, n).unwrap();
            let rank = rng.random_range(1..=sector.dim());
            random_block(&sector, rank, w / total, rng)
        })
        .collect();
    PhotonicState::from_blocks(modes, blocks, false, 0.0).unwrap()
}

/// Haar-random real orthogonal matrix.
pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = DMatrix::from_diagonal(&r.diagonal().map(|x| if x < 0.0 { -1.0 } else { 1.0 }));
    q * signs
}

/// The annihilation operator `a_j` as a map from the `n`-photon sector to the
/// `(n-1)`-photon sector, built directly from occupation vectors.
pub fn annihilation(modes: usize, photons: usize, j: usize) -> CMatrix {
    let from = FockSector::new(modes, photons).unwrap();
    let to = FockSector::new(modes, photons - 1).unwrap();
    let mut a = CMatrix::zeros(to.dim(), from.dim());
    for (col, occ) in from.basis().iter().enumerate() {
        let counts = occ.counts();
        if counts[j] == 0 {
            continue;
        }
        let mut lowered = counts.to_vec();
        lowered[j] -= 1;
        let row =
            to.basis().iter().position(|o| o.counts() == lowered.as_slice()).expect("lowered occupation in sector");
        a[(row, col)] = Complex64::new((counts[j] as f64).sqrt(), 0.0);
    }
    a
}

/// `a†_p a_q` on the `n`-photon sector, from the ladder operators.
pub fn hopping(modes: usize, photons: usize, p: usize, q: usize) -> CMatrix {
    if photons == 0 {
        return CMatrix::zeros(1, 1);
    }
    annihilation(modes, photons, p).adjoint() * annihilation(modes, photons, q)
}

/// `Σ h_jk a†_j a_k` on the sector, from ladder operators only.
pub fn second_quantized(h: &CMatrix, modes: usize, photons: usize) -> CMatrix {
    let d = FockSector::new(modes, photons).unwrap().dim();
    let mut acc = CMatrix::zeros(d, d);
    for j in 0..modes {
        for k in 0..modes {
            if h[(j, k)] != Complex64::new(0.0, 0.0) {
                acc += hopping(modes, photons, j, k) * h[(j, k)];
            }
        }
    }
    acc
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch: {a:?} vs {b:?}");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}
