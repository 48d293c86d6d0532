//! The *-algebra `𝒞 = {Σ Aᵢ E Bᵢ : Aᵢ, Bᵢ ∈ M}`.
//!
//! Elements are kept symbolically as lists of `(Aᵢ, Bᵢ)` pairs. The product
//! never needs the `n² × n²` materialization: `(AEB)(CED) = ω(BC)·AED`, so
//! the product of two term lists is again a term list with scalar
//! coefficients taken from the state.
//!
//! Self-adjoint elements decompose as `T = Σ cⱼ SⱼESⱼ*` where the
//! `SⱼESⱼ*` are mutually orthogonal rank-1 projections and `Sⱼ ∈ M`.
//! [`CElement::spectral_decompose`] builds the rank-1 pieces from an
//! orthonormal eigenbasis; [`CElement::spectral_decompose_by_subprojection`]
//! follows the constructive route (extract a rank-1 subprojection of a
//! spectral projection, find its implementer, subtract, repeat).

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::factor::FactorRep;
use crate::linalg::{
    fix_phase, hermitian_eig, hermiticity_defect, max_abs, outer, real, subspace_coeffs, tol_scale,
    unit, vec_of, CMatrix, CVector, C64,
};

/// Residual bound for the span-membership check on spectral projections.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Relative gap under which eigenvalues are grouped into one spectral
/// projection.
pub const CLUSTER_GAP: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CElement {
    rep: FactorRep,
    terms: Vec<(CMatrix, CMatrix)>,
}

/// One rank-1 piece `c · S E S†` of a spectral decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralItem {
    pub c: f64,
    #[serde(rename = "S", with = "crate::cli::matrix_serde")]
    pub s: CMatrix,
}

/// A spectral projection (one eigenvalue cluster) and how well it was
/// expressed in the frame `{AᵢEBⱼ}` of the input's term matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralCluster {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub items: Vec<SpectralItem>,
    pub clusters: Vec<SpectralCluster>,
}

impl SpectralDecomposition {
    /// The rank-1 projections `(1⊗Sⱼ) E (1⊗Sⱼ†)`.
    pub fn projections(&self, rep: &FactorRep) -> Result<Vec<CMatrix>> {
        self.items
            .iter()
            .map(|it| {
                let y = rep.act_on_x(&it.s)?;
                Ok(outer(&y, &y))
            })
            .collect()
    }

    pub fn reconstruct(&self, rep: &FactorRep) -> Result<CMatrix> {
        let mut t = CMatrix::zeros(rep.dim(), rep.dim());
        for (it, p) in self.items.iter().zip(self.projections(rep)?) {
            t += p * real(it.c);
        }
        Ok(t)
    }
}

struct Cluster {
    value: f64,
    vectors: Vec<CVector>,
    coefficients: Vec<C64>,
    residual: f64,
}

impl CElement {
    pub fn new(rep: FactorRep, terms: Vec<(CMatrix, CMatrix)>) -> Result<Self> {
        let n = rep.n();
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
        Ok(Self { rep, terms })
    }

    pub fn zero(rep: FactorRep) -> Self {
        Self {
            rep,
            terms: Vec::new(),
        }
    }

    /// The element `E` itself, i.e. the single term `(1, 1)`.
    pub fn projection_e(rep: FactorRep) -> Self {
        let id = CMatrix::identity(rep.n(), rep.n());
        Self {
            rep,
            terms: vec![(id.clone(), id)],
        }
    }

    /// Expresses an arbitrary operator on `H` as an element of `𝒞` with the
    /// fewest terms: from `T = Σ σⱼ |uⱼ⟩⟨vⱼ|` take `Aⱼ` with `(1⊗Aⱼ)x = σⱼuⱼ`
    /// and `Bⱼ†` with `(1⊗Bⱼ†)x = vⱼ`. Singular values at or below
    /// `tol · max(1, σ_max)` are dropped.
    pub fn from_operator(rep: FactorRep, t: &CMatrix, tol: f64) -> Result<Self> {
        let d = rep.dim();
        if t.nrows() != d || t.ncols() != d {
            return Err(dim_mismatch(
                format!("{d}x{d}"),
                format!("{}x{}", t.nrows(), t.ncols()),
            ));
        }
        let svd = t.clone().svd(true, true);
        let u = svd.u.as_ref().expect("left vectors requested");
        let vt = svd.v_t.as_ref().expect("right vectors requested");
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let cutoff = tol * smax.max(1.0);
        let mut terms = Vec::new();
        for (j, &s) in svd.singular_values.iter().enumerate() {
            if s <= cutoff {
                continue;
            }
            let left = u.column(j) * real(s);
            let right = vt.row(j).adjoint();
            let a = rep.implementer_from_vector(&left)?;
            let b = rep.implementer_from_vector(&right)?.adjoint();
            terms.push((a, b));
        }
        Ok(Self { rep, terms })
    }

    pub fn rep(&self) -> &FactorRep {
        &self.rep
    }

    pub fn terms(&self) -> &[(CMatrix, CMatrix)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(AEB)* = B*EA*`
    pub fn adjoint(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(a, b)| (b.adjoint(), a.adjoint()))
            .collect();
        Self {
            rep: self.rep.clone(),
            terms,
        }
    }

    /// Symbolic product via `(AEB)(CED) = ω(BC)·AED`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.rep != other.rep {
            return Err(Error::RepMismatch);
        }
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for (a, b) in &self.terms {
            for (c2, d) in &other.terms {
                let w = self.rep.omega(&(b * c2))?;
                terms.push((a * w, d.clone()));
            }
        }
        Ok(Self {
            rep: self.rep.clone(),
            terms,
        })
    }

    pub fn scale(&self, z: C64) -> Self {
        let terms = self.terms.iter().map(|(a, b)| (a * z, b.clone())).collect();
        Self {
            rep: self.rep.clone(),
            terms,
        }
    }

    /// Sum by concatenation of term lists.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rep != other.rep {
            return Err(Error::RepMismatch);
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            rep: self.rep.clone(),
            terms,
        })
    }

    /// `Σ (1⊗Aᵢ) E (1⊗Bᵢ)` as an `n² × n²` matrix.
    pub fn materialize(&self) -> CMatrix {
        let d = self.rep.dim();
        let mut t = CMatrix::zeros(d, d);
        for (a, b) in &self.terms {
            let left = self.rep.act_on_x(a).expect("validated on construction");
            let right = self
                .rep
                .act_on_x(&b.adjoint())
                .expect("validated on construction");
            t += outer(&left, &right);
        }
        t
    }

    /// Rewrites the element with a rank-minimal term list. Never applied
    /// implicitly.
    pub fn compress(&self, tol: f64) -> Result<Self> {
        Self::from_operator(self.rep.clone(), &self.materialize(), tol)
    }

    /// `Gᵢⱼ = ω(Bᵢ Aⱼ)`: the structure constants of powers of the element in
    /// the frame `{AᵢEBⱼ}`.
    pub fn gram(&self) -> CMatrix {
        let k = self.len();
        CMatrix::from_fn(k, k, |i, j| {
            self.rep
                .omega(&(&self.terms[i].1 * &self.terms[j].0))
                .expect("validated on construction")
        })
    }

    /// The frame operators `AᵢEBⱼ`, vectorized, in row-major `(i, j)` order.
    pub fn frame(&self) -> Vec<CVector> {
        let lefts: Vec<CVector> = self
            .terms
            .iter()
            .map(|(a, _)| self.rep.act_on_x(a).expect("validated"))
            .collect();
        let rights: Vec<CVector> = self
            .terms
            .iter()
            .map(|(_, b)| self.rep.act_on_x(&b.adjoint()).expect("validated"))
            .collect();
        lefts
            .iter()
            .flat_map(|l| rights.iter().map(move |r| vec_of(&outer(l, r))))
            .collect()
    }

    /// `Σᵢⱼ coeffs[(i, j)] · AᵢEBⱼ` as an element.
    pub fn frame_combination(&self, coeffs: &CMatrix) -> Result<Self> {
        let k = self.len();
        if coeffs.nrows() != k || coeffs.ncols() != k {
            return Err(dim_mismatch(
                format!("{k}x{k}"),
                format!("{}x{}", coeffs.nrows(), coeffs.ncols()),
            ));
        }
        let mut terms = Vec::new();
        for i in 0..k {
            for j in 0..k {
                let z = coeffs[(i, j)];
                if z.norm() > 0.0 {
                    terms.push((&self.terms[i].0 * z, self.terms[j].1.clone()));
                }
            }
        }
        Ok(Self {
            rep: self.rep.clone(),
            terms,
        })
    }

    fn projection_defect(p: &CMatrix) -> f64 {
        max_abs(&(p * p - p)).max(hermiticity_defect(p))
    }

    /// A rank-1 projection `F ≤ P`, built as `P(1⊗a)E(1⊗a†)P / ‖P(1⊗a)x‖²`
    /// for the first matrix unit `a = e_kl` (row-major) with
    /// `‖P(1⊗e_kl)x‖ > tol`.
    pub fn rank1_subprojection(&self, tol: f64) -> Result<Self> {
        let p = self.materialize();
        let defect = Self::projection_defect(&p);
        if defect > tol * tol_scale(&p) {
            return Err(Error::NotAProjection { defect });
        }
        let n = self.rep.n();
        for k in 0..n {
            for l in 0..n {
                let a = unit(n, k, l);
                let w = &p * self.rep.act_on_x(&a)?;
                let norm2 = w.norm_squared();
                if norm2.sqrt() > tol {
                    let middle = Self {
                        rep: self.rep.clone(),
                        terms: vec![(a.clone(), a.adjoint())],
                    };
                    let f = self.multiply(&middle)?.multiply(self)?;
                    return Ok(f.scale(real(1.0 / norm2)));
                }
            }
        }
        Err(Error::ZeroProjection)
    }

    /// For a rank-1 projection `P`, the `S ∈ M` with `P = (1⊗S)E(1⊗S†)`,
    /// normalized so that `ω(S†S) = 1`. The unit vector spanning `P` is
    /// phase-fixed (first entry above `tol` made real positive).
    pub fn rank1_implementer(&self, tol: f64) -> Result<CMatrix> {
        let p = self.materialize();
        let scale = tol_scale(&p);
        if Self::projection_defect(&p) > tol * scale {
            return Err(Error::NotRankOneProjection);
        }
        let eig = hermitian_eig(&p, tol)?;
        let top = eig.values.first().copied().unwrap_or(0.0);
        let rest = eig.values.get(1).copied().unwrap_or(0.0);
        if (top - 1.0).abs() > tol * scale || rest.abs() > tol * scale {
            return Err(Error::NotRankOneProjection);
        }
        let mut y = eig.vector(0);
        fix_phase(y.as_mut_slice(), tol);
        self.normalized_implementer(&y)
    }

    fn normalized_implementer(&self, y: &CVector) -> Result<CMatrix> {
        let s0 = self.rep.implementer_from_vector(y)?;
        let lam = self.rep.omega(&(s0.adjoint() * &s0))?.re;
        Ok(s0 / real(lam.sqrt()))
    }

    fn self_adjoint_matrix(&self, tol: f64) -> Result<CMatrix> {
        let t = self.materialize();
        let defect = hermiticity_defect(&t);
        if defect > tol * tol_scale(&t) {
            return Err(Error::NotSelfAdjoint { defect });
        }
        Ok(t)
    }

    /// Groups the nonzero part of the spectrum into clusters and checks that
    /// each cluster's spectral projection lies in `span{AᵢEBⱼ}`.
    fn clusters(&self, t: &CMatrix, tol: f64) -> Result<Vec<Cluster>> {
        let eig = hermitian_eig(t, tol)?;
        let opnorm = eig.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let cutoff = tol * tol_scale(t);
        let gap = CLUSTER_GAP * opnorm.max(f64::MIN_POSITIVE);
        let frame = self.frame();

        let mut out: Vec<Cluster> = Vec::new();
        let mut j = 0;
        while j < eig.values.len() {
            let mut end = j + 1;
            while end < eig.values.len() && (eig.values[end - 1] - eig.values[end]).abs() <= gap {
                end += 1;
            }
            let members: Vec<usize> = (j..end).filter(|&m| eig.values[m].abs() > cutoff).collect();
            if !members.is_empty() {
                let value =
                    members.iter().map(|&m| eig.values[m]).sum::<f64>() / members.len() as f64;
                let vectors: Vec<CVector> = members
                    .iter()
                    .map(|&m| {
                        let mut y = eig.vector(m);
                        fix_phase(y.as_mut_slice(), tol);
                        y
                    })
                    .collect();
                let q: CMatrix = vectors.iter().map(|y| outer(y, y)).sum();
                let qv = vec_of(&q);
                let coefficients =
                    subspace_coeffs(&qv, &frame, MEMBERSHIP_TOL).map_err(|e| match e {
                        Error::NotInSpan { residual } => Error::MembershipFailed { residual },
                        other => other,
                    })?;
                let back: CVector = frame.iter().zip(&coefficients).map(|(f, z)| f * *z).sum();
                let residual = (back - qv).norm();
                out.push(Cluster {
                    value,
                    vectors,
                    coefficients,
                    residual,
                });
            }
            j = end;
        }
        Ok(out)
    }

    /// `T = Σ cⱼ SⱼESⱼ†` for self-adjoint `T`, zero eigenvalues omitted.
    ///
    /// The rank-1 pieces come from the orthonormal eigenbasis of the
    /// materialization. Each eigenvalue cluster's spectral projection is
    /// additionally verified to lie in `span{AᵢEBⱼ}` over the input's term
    /// matrices (residual at most [`MEMBERSHIP_TOL`]).
    pub fn spectral_decompose(&self, tol: f64) -> Result<SpectralDecomposition> {
        let t = self.self_adjoint_matrix(tol)?;
        let clusters = self.clusters(&t, tol)?;
        let mut items = Vec::new();
        for cl in &clusters {
            for y in &cl.vectors {
                items.push(SpectralItem {
                    c: cl.value,
                    s: self.normalized_implementer(y)?,
                });
            }
        }
        Ok(SpectralDecomposition {
            items,
            clusters: summarize(&clusters),
        })
    }

    /// Same decomposition, built constructively: each spectral projection is
    /// rebuilt as an element of `𝒞` from its frame coefficients, then rank-1
    /// subprojections are peeled off one at a time with
    /// [`rank1_subprojection`](Self::rank1_subprojection) and
    /// [`rank1_implementer`](Self::rank1_implementer).
    pub fn spectral_decompose_by_subprojection(&self, tol: f64) -> Result<SpectralDecomposition> {
        let t = self.self_adjoint_matrix(tol)?;
        let clusters = self.clusters(&t, tol)?;
        let k = self.len();
        let mut items = Vec::new();
        // The peeling loop accumulates rounding through repeated products.
        let work_tol = tol.max(1e-9);
        for cl in &clusters {
            let coeffs = CMatrix::from_row_slice(k, k, &cl.coefficients);
            let mut q = self.frame_combination(&coeffs)?.compress(work_tol)?;
            for step in 0..cl.vectors.len() {
                let f = q.rank1_subprojection(work_tol)?;
                items.push(SpectralItem {
                    c: cl.value,
                    s: f.rank1_implementer(work_tol)?,
                });
                if step + 1 < cl.vectors.len() {
                    q = q.add(&f.scale(real(-1.0)))?.compress(work_tol)?;
                }
            }
        }
        Ok(SpectralDecomposition {
            items,
            clusters: summarize(&clusters),
        })
    }
}

fn summarize(clusters: &[Cluster]) -> Vec<SpectralCluster> {
    clusters
        .iter()
        .map(|c| SpectralCluster {
            eigenvalue: c.value,
            multiplicity: c.vectors.len(),
            residual: c.residual,
        })
        .collect()
}
