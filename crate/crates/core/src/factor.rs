//! Finite-dimensional standard form: the factor `M = 1 ⊗ Mₙ` acting on
//! `H = Cⁿ ⊗ Cⁿ`, its commutant `M′ = Mₙ ⊗ 1`, the unit vector
//! `x = Σ √λᵢ eᵢ ⊗ eᵢ` (cyclic and separating exactly when every `λᵢ > 0`),
//! the rank-1 projection `E = |x⟩⟨x|` and the vector state `ω(a) = ⟨(1⊗a)x, x⟩`.

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{kron, mat_of, outer, real, CMatrix, CVector, C64};

/// How the state vector is specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weights {
    /// The literal string `"tracial"`.
    Tracial(TracialTag),
    /// `{"weights": [...]}`; normalized on construction.
    Explicit { weights: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TracialTag {
    Tracial,
}

impl Default for Weights {
    fn default() -> Self {
        Weights::Tracial(TracialTag::Tracial)
    }
}

impl Weights {
    pub fn tracial() -> Self {
        Self::default()
    }

    pub fn explicit(weights: Vec<f64>) -> Self {
        Weights::Explicit { weights }
    }
}

/// Which leg an `n × n` matrix is embedded into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `1 ⊗ a ∈ M`
    Factor,
    /// `a ⊗ 1 ∈ M′`
    Commutant,
}

#[derive(Debug, Clone)]
pub struct FactorRep {
    n: usize,
    weights: Vec<f64>,
    tracial: bool,
    x: CVector,
    e: CMatrix,
}

impl PartialEq for FactorRep {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.weights == other.weights
    }
}

/// Builds the standard-form representation for `Mₙ` with the given state.
pub fn make_factor(n: usize, weights: &Weights) -> Result<FactorRep> {
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    let raw = match weights {
        Weights::Tracial(_) => vec![1.0; n],
        Weights::Explicit { weights } => weights.clone(),
    };
    if raw.len() != n {
        return Err(Error::BadWeights(format!(
            "expected {n} weights, got {}",
            raw.len()
        )));
    }
    if let Some(w) = raw.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::BadWeights(format!(
            "weights must be finite and positive, got {w}"
        )));
    }
    let total: f64 = raw.iter().sum();
    let uniform = 1.0 / n as f64;
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let tracial = weights.iter().all(|w| (w - uniform).abs() <= 1e-14);
    if tracial {
        weights = vec![uniform; n];
    }

    let mut x = CVector::zeros(n * n);
    for (i, w) in weights.iter().enumerate() {
        x[i * n + i] = real(w.sqrt());
    }
    let e = outer(&x, &x);
    Ok(FactorRep {
        n,
        weights,
        tracial,
        x,
        e,
    })
}

impl FactorRep {
    pub fn tracial(n: usize) -> Result<Self> {
        make_factor(n, &Weights::tracial())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of `H`, i.e. `n²`.
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_tracial(&self) -> bool {
        self.tracial
    }

    /// The state descriptor that reproduces this representation.
    pub fn state(&self) -> Weights {
        if self.tracial {
            Weights::tracial()
        } else {
            Weights::explicit(self.weights.clone())
        }
    }

    /// The cyclic separating unit vector `x`.
    pub fn x(&self) -> &CVector {
        &self.x
    }

    /// The rank-1 projection `E` onto `Cx`.
    pub fn e(&self) -> &CMatrix {
        &self.e
    }

    pub fn projection_e(&self) -> (CVector, CMatrix) {
        (self.x.clone(), self.e.clone())
    }

    fn check_square(&self, a: &CMatrix) -> Result<()> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(dim_mismatch(
                format!("{0}x{0}", self.n),
                format!("{}x{}", a.nrows(), a.ncols()),
            ));
        }
        Ok(())
    }

    fn check_vector(&self, v: &CVector) -> Result<()> {
        if v.len() != self.dim() {
            return Err(dim_mismatch(self.dim(), v.len()));
        }
        Ok(())
    }

    pub fn embed(&self, a: &CMatrix, side: Side) -> Result<CMatrix> {
        self.check_square(a)?;
        let id = CMatrix::identity(self.n, self.n);
        Ok(match side {
            Side::Factor => kron(&id, a),
            Side::Commutant => kron(a, &id),
        })
    }

    /// `(1 ⊗ a) x`, computed without forming the `n² × n²` embedding.
    pub fn act_on_x(&self, a: &CMatrix) -> Result<CVector> {
        self.check_square(a)?;
        let n = self.n;
        let mut y = CVector::zeros(n * n);
        for i in 0..n {
            let s = real(self.weights[i].sqrt());
            for k in 0..n {
                y[i * n + k] = a[(k, i)] * s;
            }
        }
        Ok(y)
    }

    /// `ω(a) = Σ λᵢ aᵢᵢ`
    pub fn omega(&self, a: &CMatrix) -> Result<C64> {
        self.check_square(a)?;
        Ok(self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| a[(i, i)] * w)
            .sum())
    }

    /// The unique `S ∈ Mₙ` with `(1 ⊗ S) x = y`, namely `S = Yᵀ diag(λ)^{-1/2}`.
    pub fn implementer_from_vector(&self, y: &CVector) -> Result<CMatrix> {
        self.check_vector(y)?;
        let ymat = mat_of(y, self.n)?;
        let mut s = ymat.transpose();
        for (j, w) in self.weights.iter().enumerate() {
            let inv = real(1.0 / w.sqrt());
            for i in 0..self.n {
                s[(i, j)] *= inv;
            }
        }
        Ok(s)
    }

    /// Tracial modular conjugation: with `v ↔ V`, `Jv ↔ V†`.
    pub fn modular_j_apply(&self, v: &CVector) -> Result<CVector> {
        if !self.tracial {
            return Err(Error::NotTracial);
        }
        self.check_vector(v)?;
        let n = self.n;
        let mut out = CVector::zeros(n * n);
        for i in 0..n {
            for k in 0..n {
                out[i * n + k] = v[k * n + i].conj();
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, max_abs, span_rank, unit, ONE, ZERO};
    use crate::random::{gaussian, random_matrix, rng};

    fn weighted() -> FactorRep {
        make_factor(2, &Weights::explicit(vec![1.0, 3.0])).unwrap()
    }

    #[test]
    fn make_factor_normalizes() {
        let t = FactorRep::tracial(2).unwrap();
        assert_eq!(t.weights(), &[0.5, 0.5]);
        assert!(t.is_tracial());
        let w = weighted();
        assert_eq!(w.weights(), &[0.25, 0.75]);
        assert!(!w.is_tracial());
        let even = make_factor(3, &Weights::explicit(vec![2.0, 2.0, 2.0])).unwrap();
        assert!(even.is_tracial());
    }

    #[test]
    fn make_factor_rejects_bad_weights() {
        for bad in [
            vec![1.0, 0.0],
            vec![1.0, -1.0],
            vec![1.0],
            vec![1.0, f64::NAN],
        ] {
            assert!(matches!(
                make_factor(2, &Weights::explicit(bad)),
                Err(Error::BadWeights(_))
            ));
        }
        assert!(make_factor(1, &Weights::tracial()).is_err());
    }

    #[test]
    fn projection_e_cases() {
        let t = FactorRep::tracial(2).unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                expect += kron(&unit(2, i, j), &unit(2, i, j)) * real(0.5);
            }
        }
        assert!(max_abs(&(t.e() - expect)) < 1e-15);

        let w = weighted();
        let x = w.x();
        assert!((x[0] - real(0.5)).norm() < 1e-15);
        assert_eq!(x[1], ZERO);
        assert_eq!(x[2], ZERO);
        assert!((x[3] - real(0.75f64.sqrt())).norm() < 1e-15);

        for rep in [t, w] {
            let e = rep.e();
            assert!(max_abs(&(e * e - e)) < 1e-15);
            assert!(max_abs(&(e - e.adjoint())) < 1e-15);
            assert!((e * rep.x() - rep.x()).norm() < 1e-15);
            let cols: Vec<_> = e.column_iter().map(|c| c.into_owned()).collect();
            assert_eq!(span_rank(&cols, 1e-12), 1);
        }
    }

    #[test]
    fn embed_sides_commute() {
        let t = FactorRep::tracial(2).unwrap();
        let id = CMatrix::identity(2, 2);
        assert_eq!(t.embed(&id, Side::Factor).unwrap(), CMatrix::identity(4, 4));
        assert_eq!(
            t.embed(&id, Side::Commutant).unwrap(),
            CMatrix::identity(4, 4)
        );
        assert_eq!(
            t.embed(&unit(2, 0, 0), Side::Factor).unwrap(),
            kron(&id, &unit(2, 0, 0))
        );
        let mut r = rng(11);
        let a = t.embed(&random_matrix(&mut r, 2, 2), Side::Factor).unwrap();
        let b = t
            .embed(&random_matrix(&mut r, 2, 2), Side::Commutant)
            .unwrap();
        assert!(max_abs(&(&a * &b - &b * &a)) < 1e-12);
        assert!(t.embed(&CMatrix::identity(3, 3), Side::Factor).is_err());
    }

    #[test]
    fn omega_cases() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, real(3.0)]));
        assert!((FactorRep::tracial(2).unwrap().omega(&d).unwrap() - real(2.0)).norm() < 1e-15);
        assert!((weighted().omega(&d).unwrap() - real(2.5)).norm() < 1e-15);
        assert_eq!(
            FactorRep::tracial(2)
                .unwrap()
                .omega(&unit(2, 0, 1))
                .unwrap(),
            ZERO
        );
    }

    #[test]
    fn omega_is_vector_state_and_compresses_e() {
        let mut r = rng(5);
        for rep in [FactorRep::tracial(3).unwrap(), weighted()] {
            let a = random_matrix(&mut r, rep.n(), rep.n());
            let big = rep.embed(&a, Side::Factor).unwrap();
            let w = rep.omega(&a).unwrap();
            let direct = rep.x().dotc(&(&big * rep.x()));
            assert!((w - direct).norm() < 1e-12);
            let lhs = rep.e() * w;
            let rhs = rep.e() * &big * rep.e();
            assert!(max_abs(&(lhs - rhs)) <= 1e-12);
            assert!(
                (rep.omega(&CMatrix::identity(rep.n(), rep.n())).unwrap() - ONE).norm() < 1e-14
            );
        }
    }

    #[test]
    fn cyclic_and_separating() {
        let mut r = rng(9);
        for n in 2..=4 {
            let rep =
                make_factor(n, &Weights::explicit((1..=n).map(|i| i as f64).collect())).unwrap();
            let orbit: Vec<_> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| rep.act_on_x(&unit(n, i, j)).unwrap())
                .collect();
            assert_eq!(span_rank(&orbit, 1e-12), n * n);
            for _ in 0..10 {
                let a = random_matrix(&mut r, n, n);
                let a = &a / real(a.norm());
                assert!(rep.act_on_x(&a).unwrap().norm() > 1e-3);
            }
        }
    }

    #[test]
    fn act_on_x_matches_embedding() {
        let mut r = rng(2);
        let rep = weighted();
        let a = random_matrix(&mut r, 2, 2);
        let direct = rep.embed(&a, Side::Factor).unwrap() * rep.x();
        assert!((rep.act_on_x(&a).unwrap() - direct).norm() < 1e-14);
    }

    #[test]
    fn implementer_cases() {
        let t = FactorRep::tracial(2).unwrap();
        let s = t.implementer_from_vector(t.x()).unwrap();
        assert!(max_abs(&(s - CMatrix::identity(2, 2))) < 1e-14);
        let s0 = t.implementer_from_vector(&CVector::zeros(4)).unwrap();
        assert_eq!(s0, CMatrix::zeros(2, 2));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let y = (basis_vector(4, 1) - basis_vector(4, 2)) * real(h);
        let s = t.implementer_from_vector(&y).unwrap();
        let expect = CMatrix::from_row_slice(2, 2, &[ZERO, real(-1.0), ONE, ZERO]);
        assert!(max_abs(&(&s - expect)) < 1e-14);
        assert!((t.act_on_x(&s).unwrap() - y).norm() < 1e-14);
    }

    #[test]
    fn implementer_roundtrip_random() {
        let mut r = rng(13);
        for rep in [FactorRep::tracial(3).unwrap(), weighted()] {
            for _ in 0..20 {
                let y = CVector::from_fn(rep.dim(), |_, _| gaussian(&mut r));
                let s = rep.implementer_from_vector(&y).unwrap();
                assert!((rep.act_on_x(&s).unwrap() - &y).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn modular_conjugation() {
        let t = FactorRep::tracial(3).unwrap();
        assert!((t.modular_j_apply(t.x()).unwrap() - t.x()).norm() < 1e-15);
        let mut r = rng(17);
        let a = random_matrix(&mut r, 3, 3);
        let lhs = t.modular_j_apply(&t.act_on_x(&a).unwrap()).unwrap();
        let rhs = t.act_on_x(&a.adjoint()).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);

        let v = CVector::from_fn(9, |_, _| gaussian(&mut r));
        let jiv = t.modular_j_apply(&(&v * crate::linalg::I)).unwrap();
        let jv = t.modular_j_apply(&v).unwrap();
        assert!((jiv + jv.clone() * crate::linalg::I).norm() < 1e-14);
        assert!((t.modular_j_apply(&jv).unwrap() - v).norm() < 1e-15);

        assert_eq!(
            weighted().modular_j_apply(weighted().x()),
            Err(Error::NotTracial)
        );
    }

    #[test]
    fn j_conjugates_factor_into_commutant() {
        let t = FactorRep::tracial(2).unwrap();
        let mut r = rng(19);
        let a = random_matrix(&mut r, 2, 2);
        let big = t.embed(&a, Side::Factor).unwrap();
        let mut jaj = CMatrix::zeros(4, 4);
        for k in 0..4 {
            let col = t
                .modular_j_apply(&(&big * t.modular_j_apply(&basis_vector(4, k)).unwrap()))
                .unwrap();
            jaj.set_column(k, &col);
        }
        let expect = t.embed(&a.map(|z| z.conj()), Side::Commutant).unwrap();
        assert!(max_abs(&(jaj - expect)) <= 1e-12);
    }
}
