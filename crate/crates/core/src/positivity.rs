//! Positivity of pair-sum maps through product-state pairings.
//!
//! A map is positive exactly when `Tr(D_φ · C D′) ≥ 0` for all positive
//! `C ∈ M` and `D′ ∈ M′`. By convexity it suffices to take rank-1 `C` and
//! `D′`, which turns the condition into block-positivity of `D_φ`:
//! `⟨u⊗v| D_φ |u⊗v⟩ ≥ 0` for all unit `u` (commutant leg) and `v` (factor
//! leg). The pairing equals `⟨z, φ(|v⟩⟨v|) z⟩` with `z = Λ^{1/2} ū`, which is
//! how a negative value is turned into a concrete witness.
//!
//! Deciding block-positivity is hard in general, so a "positive" verdict from
//! the see-saw search alone is heuristic. At `n = 2` a grid search over the
//! first leg (with the second leg solved exactly) serves as an oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::factor::FactorRep;
use crate::linalg::{
    basis_vector, c, hermitian_eig, hermiticity_defect, outer, real, tol_scale, CMatrix, CVector,
    C64, I, ZERO,
};
use crate::maps::PairSumMap;
use crate::random::{random_unit_vector, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Positive,
    NotPositive,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Seesaw,
    Brute,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityConfig {
    pub restarts: usize,
    pub iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Run the grid oracle (only at `n = 2`).
    pub oracle: bool,
    pub resolution: usize,
}

impl Default for PositivityConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            iters: 500,
            tol: 1e-9,
            seed: 42,
            oracle: false,
            resolution: 90,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityCertificate {
    pub verdict: Verdict,
    /// Best pairing value `⟨u⊗v|D|u⊗v⟩` found. For a map that does not
    /// preserve Hermiticity this is `-|Im ⟨u⊗v|D|u⊗v⟩|` instead.
    pub value: f64,
    #[serde(with = "crate::cli::vector_serde")]
    pub witness_u: CVector,
    #[serde(with = "crate::cli::vector_serde")]
    pub witness_v: CVector,
    pub method: Method,
    pub seed: u64,
    /// Whether a positive verdict rests on the see-saw search alone.
    pub heuristic: bool,
    /// Grid-oracle minimum, when the oracle ran.
    pub oracle_value: Option<f64>,
    /// Smallest eigenvalue (of the Hermitian part) of `φ(|v⟩⟨v|)`, when a map
    /// was checked.
    pub witness_output_min_eig: Option<f64>,
    /// Imaginary part of the pairing, for maps that do not preserve
    /// Hermiticity.
    pub imaginary_part: Option<f64>,
}

/// `⟨u⊗v| d |u⊗v⟩`
pub fn pairing(d: &CMatrix, u: &CVector, v: &CVector) -> C64 {
    let w: CVector = u.kronecker(v);
    w.dotc(&(d * &w))
}

fn leg_dim(d: &CMatrix) -> Result<usize> {
    let dim = d.nrows();
    let n = (dim as f64).sqrt().round() as usize;
    if n * n != dim || d.ncols() != dim {
        return Err(dim_mismatch(
            "n²xn² matrix",
            format!("{}x{}", d.nrows(), d.ncols()),
        ));
    }
    Ok(n)
}

/// `v ↦ ⟨u⊗v|d|u⊗v⟩` as an `n × n` form.
fn form_fixing_u(d: &CMatrix, u: &CVector, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |k, l| {
        let mut s = ZERO;
        for i in 0..n {
            for j in 0..n {
                s += u[i].conj() * u[j] * d[(i * n + k, j * n + l)];
            }
        }
        s
    })
}

/// `u ↦ ⟨u⊗v|d|u⊗v⟩` as an `n × n` form.
fn form_fixing_v(d: &CMatrix, v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        let mut s = ZERO;
        for k in 0..n {
            for l in 0..n {
                s += v[k].conj() * v[l] * d[(i * n + k, j * n + l)];
            }
        }
        s
    })
}

fn min_eigvec(form: &CMatrix) -> (f64, CVector) {
    let sym = (form + form.adjoint()) * real(0.5);
    let eig = hermitian_eig(&sym, f64::INFINITY).expect("symmetrized");
    let last = eig.values.len() - 1;
    (eig.values[last], eig.vector(last))
}

/// One see-saw descent from a starting `u`.
#[derive(Debug, Clone)]
pub struct SeesawRun {
    pub value: f64,
    pub u: CVector,
    pub v: CVector,
    /// Objective after every half-step.
    pub history: Vec<f64>,
}

/// Alternating minimization: optimize `v` with `u` fixed, then `u` with `v`
/// fixed, until an iteration improves by less than `tol` or `iters` is hit.
pub fn seesaw_descent(d: &CMatrix, u0: CVector, iters: usize, tol: f64) -> Result<SeesawRun> {
    let n = leg_dim(d)?;
    let mut u = u0;
    let (mut value, mut v) = min_eigvec(&form_fixing_u(d, &u, n));
    let mut history = vec![value];
    for _ in 0..iters {
        let before = value;
        let (_, nu) = min_eigvec(&form_fixing_v(d, &v, n));
        u = nu;
        history.push(pairing(d, &u, &v).re);
        let (val, nv) = min_eigvec(&form_fixing_u(d, &u, n));
        v = nv;
        value = val;
        history.push(value);
        if before - value < tol {
            break;
        }
    }
    Ok(SeesawRun {
        value,
        u,
        v,
        history,
    })
}

/// Minimum of `⟨u⊗v|d|u⊗v⟩` over unit product vectors, best of
/// `restarts` see-saw descents. Restart `r` starts from a complex Gaussian
/// `u` drawn from stream `r` of `seed`, so the result does not depend on
/// how restarts are scheduled across threads.
pub fn product_state_min_seesaw(
    d: &CMatrix,
    cfg: &PositivityConfig,
) -> Result<PositivityCertificate> {
    let n = leg_dim(d)?;
    let defect = hermiticity_defect(d);
    if defect > cfg.tol * tol_scale(d) {
        return Err(Error::NotHermitian { defect });
    }
    let runs: Vec<Result<SeesawRun>> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, r as u64);
            let u0 = random_unit_vector(&mut rng, n);
            seesaw_descent(d, u0, cfg.iters, cfg.tol)
        })
        .collect();
    let mut best: Option<SeesawRun> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let value = pairing(d, &best.u, &best.v).re;
    Ok(PositivityCertificate {
        verdict: if value < -cfg.tol {
            Verdict::NotPositive
        } else {
            Verdict::Positive
        },
        value,
        witness_u: best.u,
        witness_v: best.v,
        method: Method::Seesaw,
        seed: cfg.seed,
        heuristic: value >= -cfg.tol,
        oracle_value: None,
        witness_output_min_eig: None,
        imaginary_part: None,
    })
}

/// Grid minimum over product vectors on `C² ⊗ C²`.
#[derive(Debug, Clone)]
pub struct BruteMin {
    pub value: f64,
    pub u: CVector,
    pub v: CVector,
}

fn min_eig_2x2(f: &CMatrix) -> (f64, CVector) {
    let a = f[(0, 0)].re;
    let dd = f[(1, 1)].re;
    let b = (f[(0, 1)] + f[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + dd);
    let half = 0.5 * (a - dd);
    let lam = mean - (half * half + b.norm_sqr()).sqrt();
    let v1 = CVector::from_vec(vec![b, real(lam - a)]);
    let v2 = CVector::from_vec(vec![real(lam - dd), b.conj()]);
    let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
    let norm = v.norm();
    let v = if norm > 0.0 {
        v / real(norm)
    } else {
        basis_vector(2, 0)
    };
    (lam, v)
}

/// Desk-scale oracle for `n = 2`: `u = (cos θ/2, e^{iφ} sin θ/2)` on a
/// `resolution × resolution` grid of `(θ, φ)`, with the minimizing `v` for
/// each `u` computed exactly. Every grid value is attained, so the result is
/// an upper bound on the true minimum, within `O(1/resolution)` of it.
pub fn product_state_min_brute(d: &CMatrix, resolution: usize) -> Result<BruteMin> {
    if d.nrows() != 4 || d.ncols() != 4 {
        return Err(Error::UnsupportedDimension(leg_dim(d).unwrap_or(d.nrows())));
    }
    let res = resolution.max(2);
    let sym = (d + d.adjoint()) * real(0.5);
    let mut best = BruteMin {
        value: f64::INFINITY,
        u: basis_vector(2, 0),
        v: basis_vector(2, 0),
    };
    for a in 0..res {
        let theta = std::f64::consts::PI * a as f64 / (res - 1) as f64;
        for b in 0..res {
            let phi = std::f64::consts::TAU * b as f64 / res as f64;
            let u = CVector::from_vec(vec![
                real((theta / 2.0).cos()),
                C64::from_polar((theta / 2.0).sin(), phi),
            ]);
            let (val, v) = min_eig_2x2(&form_fixing_u(&sym, &u, 2));
            if val < best.value {
                best = BruteMin { value: val, u, v };
            }
        }
    }
    Ok(best)
}

/// Smallest eigenvalue of the Hermitian part of `φ(|v⟩⟨v|)`.
pub fn witness_output_min_eig(phi: &PairSumMap, v: &CVector) -> Result<f64> {
    let out = phi.apply(&outer(v, v))?;
    let herm = (&out + out.adjoint()) * real(0.5);
    Ok(hermitian_eig(&herm, f64::INFINITY)?.min())
}

/// Decides positivity of `φ` from block-positivity of `D_φ`.
///
/// A negative see-saw value is only reported as `not-positive` once
/// `φ(|v⟩⟨v|)` is confirmed to have an eigenvalue below `-tol/2`; otherwise
/// the verdict is `inconclusive`. Maps that do not preserve Hermiticity are
/// rejected directly with a rank-1 input whose image is not Hermitian.
pub fn is_positive_map(
    phi: &PairSumMap,
    rep: &FactorRep,
    cfg: &PositivityConfig,
) -> Result<PositivityCertificate> {
    let d = phi.dphi(rep)?;
    if hermiticity_defect(&d) > cfg.tol * tol_scale(&d) {
        return hermiticity_witness(phi, rep, &d, cfg);
    }
    let mut cert = product_state_min_seesaw(&d, cfg)?;

    if cert.verdict == Verdict::Positive && cfg.oracle && rep.n() == 2 {
        let brute = product_state_min_brute(&d, cfg.resolution)?;
        cert.oracle_value = Some(brute.value);
        if brute.value < -cfg.tol {
            cert.verdict = Verdict::NotPositive;
            cert.value = pairing(&d, &brute.u, &brute.v).re;
            cert.witness_u = brute.u;
            cert.witness_v = brute.v;
        }
        cert.method = Method::Brute;
        cert.heuristic = false;
    }

    if cert.verdict == Verdict::NotPositive {
        let min = witness_output_min_eig(phi, &cert.witness_v)?;
        cert.witness_output_min_eig = Some(min);
        if min >= -cfg.tol / 2.0 {
            cert.verdict = Verdict::Inconclusive;
        }
    }
    Ok(cert)
}

fn hermiticity_witness(
    phi: &PairSumMap,
    rep: &FactorRep,
    d: &CMatrix,
    cfg: &PositivityConfig,
) -> Result<PositivityCertificate> {
    let n = rep.n();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut candidates = Vec::new();
    for i in 0..n {
        candidates.push(basis_vector(n, i));
        for j in i + 1..n {
            candidates.push((basis_vector(n, i) + basis_vector(n, j)) * real(h));
            candidates.push((basis_vector(n, i) + basis_vector(n, j) * I) * real(h));
        }
    }
    let mut best: Option<(f64, CVector, CVector)> = None;
    for v in candidates {
        let out = phi.apply(&outer(&v, &v))?;
        // K = (F - F†) / 2i
        let k = (&out - out.adjoint()) * c(0.0, -0.5);
        let eig = hermitian_eig(&k, f64::INFINITY)?;
        let (top, bottom) = (eig.values[0], eig.min());
        let (mag, z) = if top.abs() >= bottom.abs() {
            (top.abs(), eig.vector(0))
        } else {
            (bottom.abs(), eig.vector(n - 1))
        };
        if best.as_ref().is_none_or(|b| mag > b.0) {
            best = Some((mag, v, z));
        }
    }
    let (_, v, z) = best.expect("n ≥ 2");
    let mut u = CVector::from_fn(n, |i, _| (z[i] / rep.weights()[i].sqrt()).conj());
    let norm = u.norm();
    u /= real(norm);
    let p = pairing(d, &u, &v);
    Ok(PositivityCertificate {
        verdict: Verdict::NotPositive,
        value: -p.im.abs(),
        witness_output_min_eig: Some(witness_output_min_eig(phi, &v)?),
        witness_u: u,
        witness_v: v,
        method: Method::Direct,
        seed: cfg.seed,
        heuristic: false,
        oracle_value: None,
        imaginary_part: Some(p.im),
    })
}
