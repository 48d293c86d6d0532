//! Choi-matrix analogues for maps `φ(C) = Σ AᵢCBᵢ` on the factor `1 ⊗ Mₙ`
//! in standard form.
//!
//! The crate builds the algebra `𝒞 = {Σ Aᵢ E Bᵢ}` of finite-rank operators,
//! decomposes its self-adjoint elements into weighted rank-1 projections
//! `SⱼESⱼ*`, converts between a map and its operator `D_φ = Σ BᵢEAᵢ`, extracts
//! Kraus operators, and decides positivity and complete positivity.
//!
//! Module map:
//! - [`linalg`]: dense complex matrices, Hermitian eigensolver, span membership.
//! - [`factor`]: the standard-form representation, `x`, `E`, `ω`, modular `J`.
//! - [`chi_algebra`]: symbolic elements of `𝒞` and their spectral decomposition.
//! - [`maps`]: pair-sum maps, Choi matrix, `D_φ`, Kraus extraction, CP report.
//! - [`positivity`]: product-state minimization and positivity certificates.
//! - [`cli`]: the `choi` command-line front end.

pub mod chi_algebra;
pub mod cli;
pub mod error;
pub mod factor;
pub mod linalg;
pub mod maps;
pub mod positivity;
pub mod random;

pub use chi_algebra::{CElement, SpectralDecomposition, SpectralItem};
pub use error::{Error, Result};
pub use factor::{make_factor, FactorRep, Side, Weights};
pub use linalg::{CMatrix, CVector, C64};
pub use maps::{CpReport, KrausDecomposition, PairSumMap, TransferMatrix};
pub use positivity::{PositivityCertificate, PositivityConfig, Verdict};
