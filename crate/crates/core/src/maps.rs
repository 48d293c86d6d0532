//! Maps `φ(C) = Σ Aᵢ C Bᵢ` on `Mₙ` and their matrix avatars.
//!
//! Three square matrices represent a map:
//! - the transfer matrix `T_φ = Σ Aᵢ ⊗ Bᵢᵀ`, acting on row-major `vec(C)`;
//! - the Choi matrix `C_φ = Σ e_ij ⊗ φ(e_ij)`;
//! - the operator `D_φ = Σ (1⊗Bᵢ) E (1⊗Aᵢ)` built from the state vector.
//!
//! `x` is a unit vector, so at the tracial state `D_φ = (1/n) C_{φ*}`.
//! Presentations as pair lists are not unique; two maps are equal when their
//! transfer matrices are.

use serde::{Deserialize, Serialize};

use crate::chi_algebra::CElement;
use crate::error::{dim_mismatch, Error, Result};
use crate::factor::{FactorRep, Side};
use crate::linalg::{
    fix_phase, hermitian_eig, hermiticity_defect, kron, max_abs, real, swap, tol_scale, trace,
    unit, CMatrix, C64,
};
use crate::random::{random_psd, random_unit_vector, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct PairSumMap {
    n: usize,
    terms: Vec<(CMatrix, CMatrix)>,
}

/// The `n² × n²` matrix of a map on row-major vectorized inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix(pub CMatrix);

impl TransferMatrix {
    pub fn n(&self) -> usize {
        (self.0.nrows() as f64).sqrt().round() as usize
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        max_abs(&(&self.0 - &other.0))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        max_abs(&self.0) <= tol
    }

    /// Applies the map to `c`.
    pub fn apply(&self, c: &CMatrix) -> Result<CMatrix> {
        let n = self.n();
        if c.nrows() != n || c.ncols() != n {
            return Err(dim_mismatch(
                format!("{n}x{n}"),
                format!("{}x{}", c.nrows(), c.ncols()),
            ));
        }
        let v = &self.0 * crate::linalg::vec_of(c);
        crate::linalg::mat_of(&v, n)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrausDecomposition {
    /// `Vⱼ` with `φ(C) = Σ Vⱼ† C Vⱼ`.
    #[serde(with = "crate::cli::matrix_list_serde")]
    pub ops: Vec<CMatrix>,
    /// Eigenvalues `cⱼ` of `D_φ` the ops were scaled by.
    pub weights: Vec<f64>,
    /// Max entrywise error of `Σ Vⱼ† e_kl Vⱼ` against `φ(e_kl)`.
    pub residual: f64,
}

impl KrausDecomposition {
    pub fn apply(&self, c: &CMatrix) -> CMatrix {
        self.ops
            .iter()
            .map(|v| v.adjoint() * c * v)
            .fold(CMatrix::zeros(c.nrows(), c.ncols()), |acc, m| acc + m)
    }
}

impl PairSumMap {
    pub fn new(n: usize, terms: Vec<(CMatrix, CMatrix)>) -> Result<Self> {
        for (a, b) in &terms {
            for m in [a, b] {
                if m.nrows() != n || m.ncols() != n {
                    return Err(dim_mismatch(
                        format!("{n}x{n}"),
                        format!("{}x{}", m.nrows(), m.ncols()),
                    ));
                }
            }
        }
        Ok(Self { n, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(CMatrix, CMatrix)] {
        &self.terms
    }

    pub fn identity(n: usize) -> Self {
        let id = CMatrix::identity(n, n);
        Self {
            n,
            terms: vec![(id.clone(), id)],
        }
    }

    /// `C ↦ Cᵀ` as `Σ e_ij C e_ij`.
    pub fn transpose(n: usize) -> Self {
        let terms = (0..n)
            .flat_map(|i| (0..n).map(move |j| (unit(n, i, j), unit(n, i, j))))
            .collect();
        Self { n, terms }
    }

    /// `C ↦ Tr(C)·1/n` as `(1/n) Σ e_ij C e_ji`.
    pub fn trace_map(n: usize) -> Self {
        let s = real(1.0 / n as f64);
        let terms = (0..n)
            .flat_map(|i| (0..n).map(move |j| (unit(n, i, j) * s, unit(n, j, i))))
            .collect();
        Self { n, terms }
    }

    /// `C ↦ V† C V`
    pub fn conjugation(v: &CMatrix) -> Self {
        Self {
            n: v.nrows(),
            terms: vec![(v.adjoint(), v.clone())],
        }
    }

    /// `C ↦ Σ Vⱼ† C Vⱼ`
    pub fn from_kraus(ops: &[CMatrix]) -> Self {
        let n = ops.first().map_or(0, |v| v.nrows());
        Self {
            n,
            terms: ops.iter().map(|v| (v.adjoint(), v.clone())).collect(),
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(a, b)| (a * z, b.clone())).collect(),
        }
    }

    /// Sum of maps by term-list concatenation.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(dim_mismatch(self.n, other.n));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self { n: self.n, terms })
    }

    /// A presentation of the map with the given transfer matrix:
    /// `φ(C) = Σ T[(a,b),(c,d)] e_ac C e_db`.
    pub fn from_transfer(t: &TransferMatrix) -> Self {
        let n = t.n();
        let mut terms = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let z = t.0[(a * n + b, c * n + d)];
                        if z.norm() > 0.0 {
                            terms.push((unit(n, a, c) * z, unit(n, d, b)));
                        }
                    }
                }
            }
        }
        Self { n, terms }
    }

    pub fn apply(&self, c: &CMatrix) -> Result<CMatrix> {
        if c.nrows() != self.n || c.ncols() != self.n {
            return Err(dim_mismatch(
                format!("{0}x{0}", self.n),
                format!("{}x{}", c.nrows(), c.ncols()),
            ));
        }
        let mut out = CMatrix::zeros(self.n, self.n);
        for (a, b) in &self.terms {
            out += a * c * b;
        }
        Ok(out)
    }

    /// The trace-dual `φ*(C) = Σ Bᵢ C Aᵢ`.
    pub fn adjoint(&self) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(a, b)| (b.clone(), a.clone()))
                .collect(),
        }
    }

    pub fn transfer(&self) -> TransferMatrix {
        let d = self.n * self.n;
        let mut t = CMatrix::zeros(d, d);
        for (a, b) in &self.terms {
            t += kron(a, &b.transpose());
        }
        TransferMatrix(t)
    }

    /// `C_φ = Σ e_ij ⊗ φ(e_ij)`; block `(i, j)` is `φ(e_ij)`.
    pub fn choi(&self) -> CMatrix {
        let n = self.n;
        let mut c = CMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let block = self.apply(&unit(n, i, j)).expect("square unit");
                c.view_mut((i * n, j * n), (n, n)).copy_from(&block);
            }
        }
        c
    }

    /// `D_φ = Σ (1⊗Bᵢ) E (1⊗Aᵢ)`.
    pub fn dphi(&self, rep: &FactorRep) -> Result<CMatrix> {
        Ok(self.dphi_element(rep)?.materialize())
    }

    /// `D_φ` as a symbolic element of `𝒞`.
    pub fn dphi_element(&self, rep: &FactorRep) -> Result<CElement> {
        if rep.n() != self.n {
            return Err(dim_mismatch(self.n, rep.n()));
        }
        let terms = self
            .terms
            .iter()
            .map(|(a, b)| (b.clone(), a.clone()))
            .collect();
        CElement::new(rep.clone(), terms)
    }

    /// Whether `φ(C†) = φ(C)†` for all `C`, i.e. `C_φ` is Hermitian.
    pub fn is_hermiticity_preserving(&self, tol: f64) -> bool {
        let c = self.choi();
        hermiticity_defect(&c) <= tol * tol_scale(&c)
    }
}

/// Inverse of `φ ↦ D_φ` at the tracial state: `n·D` is the Choi matrix of
/// `φ*`, whose transfer matrix is then dualized.
pub fn map_from_dphi(d: &CMatrix, rep: &FactorRep) -> Result<TransferMatrix> {
    let n = rep.n();
    let dim = n * n;
    if d.nrows() != dim || d.ncols() != dim {
        return Err(dim_mismatch(
            format!("{dim}x{dim}"),
            format!("{}x{}", d.nrows(), d.ncols()),
        ));
    }
    if !rep.is_tracial() {
        return Err(Error::NotTracial);
    }
    let scale = real(n as f64);
    let mut adj = CMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    adj[(a * n + b, i * n + j)] = d[(i * n + a, j * n + b)] * scale;
                }
            }
        }
    }
    Ok(TransferMatrix(dual_transfer(&adj)))
}

/// Transfer matrix of the trace-dual map: `T_{φ*} = P T_φᵀ P` with `P` the
/// transpose permutation on `vec`.
pub fn dual_transfer(t: &CMatrix) -> CMatrix {
    let n = (t.nrows() as f64).sqrt().round() as usize;
    let p = swap(n);
    &p * t.transpose() * &p
}

/// Kraus operators from the spectral decomposition of `D_φ`.
///
/// With `D_φ = Σ cⱼ |yⱼ⟩⟨yⱼ|` and `(1⊗Sⱼ)x = yⱼ`, the ops are `Vⱼ = √cⱼ Sⱼ`,
/// phase-fixed and ordered by descending `cⱼ` (lexicographic on entries
/// within a degenerate cluster).
pub fn kraus_from_dphi(phi: &PairSumMap, rep: &FactorRep, tol: f64) -> Result<KrausDecomposition> {
    let d = phi.dphi(rep)?;
    let scale = tol_scale(&d);
    let eig = hermitian_eig(&d, tol)?;
    let min = eig.min();
    if min < -tol * scale {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }

    let mut pairs: Vec<(f64, CMatrix)> = Vec::new();
    for (j, &c) in eig.values.iter().enumerate() {
        if c <= tol * scale {
            continue;
        }
        let s = rep.implementer_from_vector(&eig.vector(j))?;
        let mut v = s * real(c.sqrt());
        fix_phase(v.as_mut_slice(), tol);
        pairs.push((c, v));
    }
    sort_kraus(&mut pairs, scale);

    let (weights, ops): (Vec<f64>, Vec<CMatrix>) = pairs.into_iter().unzip();
    let mut kd = KrausDecomposition {
        ops,
        weights,
        residual: 0.0,
    };
    let n = phi.n();
    for k in 0..n {
        for l in 0..n {
            let e = unit(n, k, l);
            let diff = max_abs(&(kd.apply(&e) - phi.apply(&e)?));
            kd.residual = kd.residual.max(diff);
        }
    }
    if kd.residual > 10.0 * tol * scale {
        return Err(Error::InternalDisagreement(format!(
            "Kraus reconstruction residual {:e}",
            kd.residual
        )));
    }
    Ok(kd)
}

fn sort_kraus(pairs: &mut [(f64, CMatrix)], scale: f64) {
    let gap = crate::chi_algebra::CLUSTER_GAP * scale;
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[end - 1].0 - pairs[end].0).abs() <= gap {
            end += 1;
        }
        pairs[start..end].sort_by(|a, b| lex_cmp(&a.1, &b.1).reverse());
        start = end;
    }
}

fn lex_cmp(a: &CMatrix, b: &CMatrix) -> std::cmp::Ordering {
    let key =
        |m: &CMatrix| -> Vec<f64> { m.transpose().iter().flat_map(|z| [z.re, z.im]).collect() };
    key(a)
        .partial_cmp(&key(b))
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Smallest eigenvalue of a positivity test, or `None` if the matrix is not
/// Hermitian (which already rules out positivity).
fn psd_min(m: &CMatrix, tol: f64) -> Option<f64> {
    hermitian_eig(m, tol).ok().map(|e| e.min())
}

fn psd_ok(m: &CMatrix, tol: f64) -> bool {
    psd_min(m, tol).is_some_and(|min| min >= -tol * tol_scale(m))
}

/// Outcome of a randomized positivity spot-check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpotCheck {
    pub positive: bool,
    /// Smallest output eigenvalue seen over Hermitian outputs.
    pub min_eigenvalue: f64,
    /// Whether every output was Hermitian.
    pub hermitian: bool,
    pub inputs: usize,
}

impl SpotCheck {
    fn new() -> Self {
        Self {
            positive: true,
            min_eigenvalue: f64::INFINITY,
            hermitian: true,
            inputs: 0,
        }
    }

    fn record(&mut self, out: &CMatrix, tol: f64) {
        self.inputs += 1;
        match psd_min(out, tol) {
            Some(min) => {
                self.min_eigenvalue = self.min_eigenvalue.min(min);
                if min < -tol * tol_scale(out) {
                    self.positive = false;
                }
            }
            None => {
                self.hermitian = false;
                self.positive = false;
            }
        }
    }
}

fn random_psd_input(seed: u64, trial: usize, dim: usize) -> CMatrix {
    let mut r = stream(seed, trial as u64);
    if trial.is_multiple_of(2) {
        let v = random_unit_vector(&mut r, dim);
        crate::linalg::outer(&v, &v)
    } else {
        random_psd(&mut r, dim, 1 + trial % dim)
    }
}

/// Positivity of the extension `C ↦ Σ (1⊗Aᵢ) C (1⊗Bᵢ)` on all of `B(H)`,
/// tested at `E` and at `trials` random positive operators.
pub fn extend_to_bh_check(
    phi: &PairSumMap,
    rep: &FactorRep,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<SpotCheck> {
    if rep.n() != phi.n() {
        return Err(dim_mismatch(phi.n(), rep.n()));
    }
    let embedded: Vec<(CMatrix, CMatrix)> = phi
        .terms()
        .iter()
        .map(|(a, b)| Ok((rep.embed(a, Side::Factor)?, rep.embed(b, Side::Factor)?)))
        .collect::<Result<_>>()?;
    let extension = |c: &CMatrix| -> CMatrix {
        embedded
            .iter()
            .fold(CMatrix::zeros(c.nrows(), c.ncols()), |acc, (a, b)| {
                acc + a * c * b
            })
    };
    let mut check = SpotCheck::new();
    check.record(&extension(rep.e()), tol);
    for t in 0..trials {
        check.record(&extension(&random_psd_input(seed, t, rep.dim())), tol);
    }
    Ok(check)
}

/// Positivity of the amplification `ι_n ⊗ φ`, applied blockwise, at the
/// maximally entangled projector and at `trials` random positive inputs.
pub fn amplification_check(
    phi: &PairSumMap,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<SpotCheck> {
    let n = phi.n();
    let amplify = |x: &CMatrix| -> Result<CMatrix> {
        let mut out = CMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let block = x.view((i * n, j * n), (n, n)).into_owned();
                out.view_mut((i * n, j * n), (n, n))
                    .copy_from(&phi.apply(&block)?);
            }
        }
        Ok(out)
    };
    let mut check = SpotCheck::new();
    let mut omega = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            omega[(i * n + i, j * n + j)] = real(1.0 / n as f64);
        }
    }
    check.record(&amplify(&omega)?, tol);
    for t in 0..trials {
        // Offset streams so the two spot-checks see different inputs.
        check.record(
            &amplify(&random_psd_input(seed ^ 0x9e37_79b9, t, n * n))?,
            tol,
        );
    }
    Ok(check)
}

#[derive(Debug, Clone, Copy)]
pub struct CpConfig {
    pub tol: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for CpConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            trials: 64,
            seed: 42,
        }
    }
}

/// The five equivalent complete-positivity conditions, evaluated
/// independently.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpConditions {
    /// (i) `ι ⊗ φ` positive.
    pub completely_positive: bool,
    /// (ii) the extension to `B(H)` is positive.
    pub extension_positive: bool,
    /// (iii) a Kraus form `Σ Vⱼ† C Vⱼ` exists.
    pub kraus_form: bool,
    /// (iv) `D_φ ≥ 0`.
    pub dphi_positive: bool,
    /// (v) `C_φ ≥ 0`.
    pub choi_positive: bool,
}

impl CpConditions {
    fn as_array(&self) -> [bool; 5] {
        [
            self.completely_positive,
            self.extension_positive,
            self.kraus_form,
            self.dphi_positive,
            self.choi_positive,
        ]
    }

    pub fn agree(&self) -> bool {
        let a = self.as_array();
        a.iter().all(|&b| b == a[0])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpReport {
    pub cp: bool,
    pub conditions: CpConditions,
    /// `None` when the matrix is not Hermitian.
    pub min_eig_dphi: Option<f64>,
    pub min_eig_choi: Option<f64>,
    pub extension: SpotCheck,
    pub amplification: SpotCheck,
    pub kraus_rank: Option<usize>,
}

/// Evaluates the five complete-positivity conditions and requires them to
/// agree; disagreement means a tolerance problem, reported as
/// [`Error::InternalDisagreement`].
pub fn is_cp(phi: &PairSumMap, rep: &FactorRep, cfg: &CpConfig) -> Result<CpReport> {
    let tol = cfg.tol;
    let d = phi.dphi(rep)?;
    let c = phi.choi();
    let kraus = match kraus_from_dphi(phi, rep, tol) {
        Ok(k) => Some(k),
        Err(Error::NotPositive { .. }) | Err(Error::NotHermitian { .. }) => None,
        Err(e) => return Err(e),
    };
    let extension = extend_to_bh_check(phi, rep, cfg.trials, tol, cfg.seed)?;
    let amplification = amplification_check(phi, cfg.trials, tol, cfg.seed)?;
    let conditions = CpConditions {
        completely_positive: amplification.positive,
        extension_positive: extension.positive,
        kraus_form: kraus.is_some(),
        dphi_positive: psd_ok(&d, tol),
        choi_positive: psd_ok(&c, tol),
    };
    let report = CpReport {
        cp: conditions.completely_positive,
        min_eig_dphi: psd_min(&d, tol),
        min_eig_choi: psd_min(&c, tol),
        kraus_rank: kraus.map(|k| k.ops.len()),
        conditions,
        extension,
        amplification,
    };
    if !report.conditions.agree() {
        return Err(Error::InternalDisagreement(format!(
            "{:?}",
            report.conditions
        )));
    }
    Ok(report)
}

/// Checks relating the Choi matrices of `φ` and `φ*` at the tracial state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// `max |C_{φ*} - W C_φᵀ W|`
    pub swap_transpose_residual: f64,
    pub swap_transpose_holds: bool,
    pub choi_hermitian: bool,
    /// `max |C_{φ*} - J C_φ J|`; only evaluated for Hermitian `C_φ`.
    pub j_relation_residual: Option<f64>,
    pub j_relation_holds: Option<bool>,
    pub choi_positive: bool,
    pub adjoint_choi_positive: bool,
    pub positivity_equivalent: bool,
}

pub fn adjoint_choi_symmetry_check(phi: &PairSumMap, tol: f64) -> Result<SymmetryReport> {
    let n = phi.n();
    let rep = FactorRep::tracial(n)?;
    let c = phi.choi();
    let c_adj = phi.adjoint().choi();
    let scale = tol_scale(&c);

    let w = swap(n);
    let swapped = &w * c.transpose() * &w;
    let swap_transpose_residual = max_abs(&(&c_adj - swapped));

    let choi_hermitian = hermiticity_defect(&c) <= tol * scale;
    let j_relation_residual = if choi_hermitian {
        let dim = n * n;
        let mut jcj = CMatrix::zeros(dim, dim);
        for k in 0..dim {
            let jk = rep.modular_j_apply(&crate::linalg::basis_vector(dim, k))?;
            jcj.set_column(k, &rep.modular_j_apply(&(&c * jk))?);
        }
        Some(max_abs(&(&c_adj - jcj)))
    } else {
        None
    };

    let choi_positive = psd_ok(&c, tol);
    let adjoint_choi_positive = psd_ok(&c_adj, tol);
    Ok(SymmetryReport {
        swap_transpose_residual,
        swap_transpose_holds: swap_transpose_residual <= tol * scale,
        choi_hermitian,
        j_relation_residual,
        j_relation_holds: j_relation_residual.map(|r| r <= tol * scale),
        choi_positive,
        adjoint_choi_positive,
        positivity_equivalent: choi_positive == adjoint_choi_positive,
    })
}

/// `Tr(φ(a) b) - Tr(a φ*(b))`
pub fn pairing_defect(phi: &PairSumMap, a: &CMatrix, b: &CMatrix) -> Result<C64> {
    let lhs = trace(&(phi.apply(a)? * b));
    let rhs = trace(&(a * phi.adjoint().apply(b)?));
    Ok(lhs - rhs)
}

/// `C ↦ Tr(C)·1/2 − C` on `M₂`: positive on no rank-1 input.
pub fn trace_minus_identity() -> PairSumMap {
    PairSumMap::trace_map(2)
        .plus(&PairSumMap::identity(2).scale(real(-1.0)))
        .expect("same dimension")
}
