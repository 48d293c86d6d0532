//! Seeded random sampling of vectors, matrices and maps.
//!
//! Every randomized routine in the crate takes an explicit seed; independent
//! sub-computations (see-saw restarts, spot-check trials) draw from separate
//! ChaCha streams derived from `(seed, index)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::chi_algebra::CElement;
use crate::factor::FactorRep;
use crate::linalg::{real, CMatrix, CVector, C64};
use crate::maps::PairSumMap;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` of the generator seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> SeededRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Ginibre matrix with unit-variance entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = random_matrix(rng, n, n);
    (&g + g.adjoint()) * real(0.5)
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    let v = CVector::from_fn(n, |_, _| gaussian(rng));
    let norm = v.norm();
    v / real(norm)
}

/// Positive semidefinite matrix `G G†` with `G` of shape `n × rank`,
/// normalized to unit trace.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    let g = random_matrix(rng, n, rank.max(1));
    let p = &g * g.adjoint();
    let tr = p.trace().re;
    p / real(tr)
}

/// `C ↦ Σⱼ Vⱼ† C Vⱼ` with `rank` Gaussian `Vⱼ`.
pub fn random_cp_map<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> PairSumMap {
    let ops: Vec<CMatrix> = (0..rank).map(|_| random_matrix(rng, n, n)).collect();
    PairSumMap::from_kraus(&ops)
}

/// `C ↦ Σⱼ sⱼ Vⱼ† C Vⱼ` with signs `sⱼ = ±1`, the first term positive and the
/// last negative. Preserves Hermiticity; generally neither CP nor positive.
pub fn random_signed_map<R: Rng + ?Sized>(rng: &mut R, n: usize, terms: usize) -> PairSumMap {
    let terms = terms.max(2);
    let mut out: Vec<(CMatrix, CMatrix)> = Vec::with_capacity(terms);
    for j in 0..terms {
        let v = random_matrix(rng, n, n);
        let sign = if j == 0 {
            1.0
        } else if j + 1 == terms {
            -1.0
        } else if rng.random_bool(0.5) {
            1.0
        } else {
            -1.0
        };
        out.push((v.adjoint() * real(sign), v));
    }
    PairSumMap::new(n, out).expect("square n×n terms")
}

/// A random self-adjoint element of `𝒞` with `k` terms: `k / 2` Gaussian
/// pairs together with their adjoints, plus one `c·(A, A†)` term when `k`
/// is odd.
pub fn random_self_adjoint_element<R: Rng + ?Sized>(
    rng: &mut R,
    rep: &FactorRep,
    k: usize,
) -> CElement {
    let n = rep.n();
    let mut terms = Vec::with_capacity(k);
    for _ in 0..k / 2 {
        let a = random_matrix(rng, n, n);
        let b = random_matrix(rng, n, n);
        terms.push((b.adjoint(), a.adjoint()));
        terms.push((a, b));
    }
    if k % 2 == 1 {
        let a = random_matrix(rng, n, n);
        let c: f64 = rng.sample(StandardNormal);
        terms.push((&a * real(c), a.adjoint()));
    }
    CElement::new(rep.clone(), terms).expect("square n×n terms")
}

/// `C ↦ Σᵢ Aᵢ C Bᵢ` with `terms` independent Gaussian pairs.
pub fn random_map<R: Rng + ?Sized>(rng: &mut R, n: usize, terms: usize) -> PairSumMap {
    let pairs = (0..terms)
        .map(|_| (random_matrix(rng, n, n), random_matrix(rng, n, n)))
        .collect();
    PairSumMap::new(n, pairs).expect("square n×n terms")
}

/// Random normalized weights bounded away from zero.
pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}
