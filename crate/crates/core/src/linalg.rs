//! Dense complex-matrix substrate.
//!
//! Matrices are [`nalgebra::DMatrix`] over binary64 complex scalars. Tensor
//! products use the standard basis order: `e_i ⊗ e_k` sits at index
//! `i * dim_b + k` (zero-based). Vectors on `Cⁿ ⊗ Cⁿ` are identified with
//! `n × n` matrices row-major, `v = Σ V_ik e_i ⊗ e_k`.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

use crate::error::{dim_mismatch, Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default relative tolerance for algebraic identities.
pub const TOL_ALG: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Matrix unit `e_ij` in `M_n` (zero-based indices).
pub fn unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

pub fn basis_vector(dim: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[i] = ONE;
    v
}

/// The swap unitary `W(e_i ⊗ e_k) = e_k ⊗ e_i` on `Cⁿ ⊗ Cⁿ`.
pub fn swap(n: usize) -> CMatrix {
    let mut w = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for k in 0..n {
            w[(k * n + i, i * n + k)] = ONE;
        }
    }
    w
}

/// `|u⟩⟨v|`
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// Row-major vectorization.
pub fn vec_of(m: &CMatrix) -> CVector {
    CVector::from_iterator(m.len(), m.transpose().iter().copied())
}

/// Inverse of [`vec_of`] for a square `n × n` matrix.
pub fn mat_of(v: &CVector, n: usize) -> Result<CMatrix> {
    if v.len() != n * n {
        return Err(dim_mismatch(n * n, v.len()));
    }
    Ok(CMatrix::from_row_slice(n, n, v.as_slice()))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |m - m†|`, or infinity for non-square input.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    d
}

/// Scale used for relative tolerances: `max(1, ‖m‖_F)`.
pub fn tol_scale(m: &CMatrix) -> f64 {
    m.norm().max(1.0)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    hermiticity_defect(m) <= tol * tol_scale(m)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Result of [`hermitian_eig`].
#[derive(Debug, Clone)]
pub struct Eigh {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn vector(&self, j: usize) -> CVector {
        self.vectors.column(j).into_owned()
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `Σ λ_j |v_j⟩⟨v_j|`
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.vectors.nrows();
        let mut m = CMatrix::zeros(n, n);
        for (j, &lam) in self.values.iter().enumerate() {
            let v = self.vector(j);
            m += outer(&v, &v) * real(lam);
        }
        m
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted descending. Eigenvectors belonging to eigenvalues
/// that agree within `tol · max(1, ‖m‖_F)` are re-orthonormalized by modified
/// Gram-Schmidt in column order, so degenerate subspaces come out in a
/// reproducible basis.
pub fn hermitian_eig(m: &CMatrix, tol: f64) -> Result<Eigh> {
    if !m.is_square() {
        return Err(dim_mismatch(
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    let defect = hermiticity_defect(m);
    if defect > tol * tol_scale(m) {
        return Err(Error::NotHermitian { defect });
    }
    let sym = (m + m.adjoint()) * real(0.5);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vectors = CMatrix::zeros(m.nrows(), m.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    let gap = tol * tol_scale(m);
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && (values[end - 1] - values[end]).abs() <= gap {
            end += 1;
        }
        if end - start > 1 {
            orthonormalize_columns(&mut vectors, start, end);
        }
        start = end;
    }
    Ok(Eigh { values, vectors })
}

fn orthonormalize_columns(m: &mut CMatrix, start: usize, end: usize) {
    for j in start..end {
        let mut v = m.column(j).into_owned();
        for i in start..j {
            let q = m.column(i);
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let norm = v.norm();
        if norm > 0.0 {
            v /= real(norm);
        }
        m.set_column(j, &v);
    }
}

/// Minimum eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix, tol: f64) -> Result<f64> {
    Ok(hermitian_eig(m, tol)?.min())
}

/// Least-squares coefficients of `v` in `span(basis)`.
///
/// Succeeds when the residual `‖v - Σ c_i basis_i‖` is at most
/// `tol · max(1, ‖v‖)`; otherwise returns [`Error::NotInSpan`] carrying the
/// residual. Linearly dependent frames are handled through a truncated SVD.
pub fn subspace_coeffs(v: &CVector, basis: &[CVector], tol: f64) -> Result<Vec<C64>> {
    if let Some(bad) = basis.iter().find(|b| b.len() != v.len()) {
        return Err(dim_mismatch(v.len(), bad.len()));
    }
    if basis.is_empty() {
        let residual = v.norm();
        return if residual <= tol * v.norm().max(1.0) {
            Ok(Vec::new())
        } else {
            Err(Error::NotInSpan { residual })
        };
    }
    let frame = CMatrix::from_columns(basis);
    let svd = frame.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let coeffs = if smax == 0.0 {
        CVector::zeros(basis.len())
    } else {
        let rhs = CMatrix::from_column_slice(v.len(), 1, v.as_slice());
        let sol = svd
            .solve(&rhs, smax * 1e-12)
            .expect("svd computed with both factors");
        sol.column(0).into_owned()
    };
    let residual = (v - &frame * &coeffs).norm();
    if residual <= tol * v.norm().max(1.0) {
        Ok(coeffs.iter().copied().collect())
    } else {
        Err(Error::NotInSpan { residual })
    }
}

/// Numerical rank of a set of vectors (singular values above `tol · σ_max`).
pub fn span_rank(vectors: &[CVector], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let frame = CMatrix::from_columns(vectors);
    let sv = frame.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Rotates `v` by a global phase so that its first entry with modulus above
/// `tol` is real and positive.
pub fn fix_phase(v: &mut [C64], tol: f64) {
    if let Some(z) = v.iter().find(|z| z.norm() > tol).copied() {
        let phase = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_matrix, rng};

    fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn kron_basis_order() {
        let e11 = unit(2, 0, 0);
        let k = kron(&e11, &e11);
        assert_eq!(k[(0, 0)], ONE);
        assert_eq!(k.iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert_eq!(
            kron(&CMatrix::identity(2, 2), &CMatrix::identity(2, 2)),
            CMatrix::identity(4, 4)
        );
        let xx = kron(&sigma_x(), &sigma_x());
        assert_eq!(xx * basis_vector(4, 0), basis_vector(4, 3));
    }

    #[test]
    fn kron_mixed_product() {
        let mut r = rng(1);
        let (a, b, c2, d) = (
            random_matrix(&mut r, 2, 3),
            random_matrix(&mut r, 3, 2),
            random_matrix(&mut r, 3, 2),
            random_matrix(&mut r, 2, 3),
        );
        let lhs = kron(&a, &b) * kron(&c2, &d);
        let rhs = kron(&(&a * &c2), &(&b * &d));
        assert!(max_abs(&(lhs - rhs)) <= 1e-12);
    }

    #[test]
    fn eig_small_cases() {
        let e = hermitian_eig(&CMatrix::identity(4, 4), TOL_ALG).unwrap();
        assert_eq!(e.values, vec![1.0; 4]);
        let e = hermitian_eig(&sigma_x(), TOL_ALG).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] + 1.0).abs() < 1e-14);
        let e = hermitian_eig(&swap(2), TOL_ALG).unwrap();
        let expect = [1.0, 1.0, 1.0, -1.0];
        for (got, want) in e.values.iter().zip(expect) {
            assert!((got - want).abs() < 1e-14);
        }
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!(max_abs(&(gram - CMatrix::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = unit(2, 0, 1);
        assert!(matches!(
            hermitian_eig(&m, TOL_ALG),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn eig_reconstruction_random() {
        let mut r = rng(7);
        for dim in [1, 2, 5, 16, 36] {
            let m = random_hermitian(&mut r, dim);
            let e = hermitian_eig(&m, TOL_ALG).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            let res = (e.reconstruct() - &m).norm();
            assert!(res <= 1e-10 * m.norm(), "dim {dim}: {res}");
        }
    }

    #[test]
    fn coeffs_cases() {
        let basis = vec![basis_vector(3, 0), basis_vector(3, 1)];
        let c1 = subspace_coeffs(&basis_vector(3, 0), &basis, 1e-10).unwrap();
        assert!((c1[0] - ONE).norm() < 1e-14 && c1[1].norm() < 1e-14);
        let c0 = subspace_coeffs(&CVector::zeros(3), &basis, 1e-10).unwrap();
        assert!(c0.iter().all(|z| z.norm() < 1e-14));
        match subspace_coeffs(&basis_vector(3, 2), &basis, 1e-10) {
            Err(Error::NotInSpan { residual }) => assert!((residual - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            subspace_coeffs(&CVector::zeros(2), &basis, 1e-10),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coeffs_dependent_frame() {
        let mut r = rng(3);
        let a = random_matrix(&mut r, 6, 1).column(0).into_owned();
        let b = random_matrix(&mut r, 6, 1).column(0).into_owned();
        let basis = vec![a.clone(), b.clone(), &a * real(2.0) - &b];
        let v = &a * c(0.3, -1.0) + &b * c(2.0, 0.5);
        let cs = subspace_coeffs(&v, &basis, 1e-10).unwrap();
        let back: CVector = basis.iter().zip(&cs).map(|(b, z)| b * *z).sum();
        assert!((back - v).norm() < 1e-10);
    }

    #[test]
    fn degenerate_cluster_is_orthonormal() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ONE, real(2.0), ONE]));
        let e = hermitian_eig(&m, TOL_ALG).unwrap();
        assert_eq!(e.values, vec![2.0, 1.0, 1.0, 1.0]);
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!(max_abs(&(gram - CMatrix::identity(4, 4))) < 1e-14);
    }
}
