//! The `choi` command-line front end.
//!
//! Input files (map or element) are JSON:
//!
//! ```text
//! { "n": 2,
//!   "terms": [ { "A": [[[re, im], ...], ...], "B": [[[re, im], ...], ...] }, ... ],
//!   "state": "tracial" | { "weights": [w1, ..., wn] } }      // optional
//! ```
//!
//! Every command writes one JSON document to stdout. Floats are written with
//! 17 significant digits so output is bit-stable and round-trips exactly.
//!
//! Exit codes: 0 success, 2 input or parse error, 3 negative verdict (only
//! with `--assert`), 4 internal numerical disagreement.

use std::io;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::chi_algebra::{CElement, SpectralDecomposition};
use crate::error::Error;
use crate::factor::{make_factor, FactorRep, Weights};
use crate::linalg::{CMatrix, TOL_ALG};
use crate::maps::{is_cp, kraus_from_dphi, CpConfig, CpReport, KrausDecomposition, PairSumMap};
use crate::positivity::{is_positive_map, PositivityCertificate, PositivityConfig, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NEGATIVE: i32 = 3;
pub const EXIT_DISAGREEMENT: i32 = 4;

/// `[[ [re, im], ... ], ...]`, row-major.
pub mod matrix_serde {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
        m.row_iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix, String> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if nrows == 0 || ncols == 0 {
            return Err("matrix must have at least one row and column".into());
        }
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("ragged matrix rows".into());
        }
        let entries: Vec<_> = rows
            .iter()
            .flat_map(|r| r.iter().map(|[re, im]| crate::linalg::c(*re, *im)))
            .collect();
        Ok(CMatrix::from_row_slice(nrows, ncols, &entries))
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }
}

pub mod matrix_list_serde {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        ms.iter()
            .map(matrix_serde::to_rows)
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        let raw = Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
        raw.iter()
            .map(|rows| matrix_serde::from_rows(rows).map_err(D::Error::custom))
            .collect()
    }
}

/// `[[re, im], ...]`
pub mod vector_serde {
    use crate::linalg::{c, CVector};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|z| [z.re, z.im])
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVector, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(CVector::from_iterator(
            raw.len(),
            raw.iter().map(|[re, im]| c(*re, *im)),
        ))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermFile {
    #[serde(rename = "A", with = "matrix_serde")]
    pub a: CMatrix,
    #[serde(rename = "B", with = "matrix_serde")]
    pub b: CMatrix,
}

/// Shared schema of map files and element files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapFile {
    pub n: usize,
    pub terms: Vec<TermFile>,
    #[serde(default)]
    pub state: Weights,
}

pub type ElementFile = MapFile;

impl MapFile {
    pub fn from_map(phi: &PairSumMap, state: Weights) -> Self {
        Self {
            n: phi.n(),
            terms: phi
                .terms()
                .iter()
                .map(|(a, b)| TermFile {
                    a: a.clone(),
                    b: b.clone(),
                })
                .collect(),
            state,
        }
    }

    pub fn rep(&self) -> Result<FactorRep, Error> {
        make_factor(self.n, &self.state)
    }

    fn pairs(&self) -> Vec<(CMatrix, CMatrix)> {
        self.terms
            .iter()
            .map(|t| (t.a.clone(), t.b.clone()))
            .collect()
    }

    pub fn to_map(&self) -> Result<PairSumMap, Error> {
        PairSumMap::new(self.n, self.pairs())
    }

    pub fn to_element(&self) -> Result<CElement, Error> {
        CElement::new(self.rep()?, self.pairs())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub command: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub state: Option<Weights>,
    #[serde(with = "matrix_serde")]
    pub matrix: CMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdjointDoc {
    pub command: String,
    #[serde(flatten)]
    pub map: MapFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpDoc {
    pub command: String,
    #[serde(flatten)]
    pub report: CpReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KrausStatus {
    Ok,
    NotPositive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrausDoc {
    pub command: String,
    pub status: KrausStatus,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<KrausDecomposition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_eigenvalue: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositiveDoc {
    pub command: String,
    #[serde(flatten)]
    pub certificate: PositivityCertificate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralDoc {
    pub command: String,
    #[serde(flatten)]
    pub decomposition: SpectralDecomposition,
}

/// JSON formatter writing floats as `{:.16e}` (17 significant digits).
pub struct Sig17<F>(pub F);

fn write_sig17<W: ?Sized + io::Write>(w: &mut W, v: f64) -> io::Result<()> {
    if !v.is_finite() {
        return w.write_all(b"null");
    }
    // Normalize -0.0 so that zero always prints the same.
    let v = if v == 0.0 { 0.0 } else { v };
    write!(w, "{v:.16e}")
}

impl<F: Formatter> Formatter for Sig17<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write_sig17(w, v)
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write_sig17(w, v as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` with 17-significant-digit floats.
pub fn to_json<T: Serialize>(value: &T, pretty: bool) -> String {
    let mut buf = Vec::new();
    let result = if pretty {
        let mut ser =
            serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
        value.serialize(&mut ser)
    } else {
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(CompactFormatter));
        value.serialize(&mut ser)
    };
    result.expect("in-memory serialization of plain data");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[derive(Debug, Parser)]
#[command(
    name = "choi",
    version,
    about = "Choi matrices, D_φ operators and positivity of pair-sum maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Map or element file (JSON).
    pub file: std::path::PathBuf,
    /// Indented output.
    #[arg(long)]
    pub pretty: bool,
    /// Exit with status 3 when the verdict is negative.
    #[arg(long = "assert")]
    pub assert_verdict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Choi matrix Σ e_ij ⊗ φ(e_ij).
    Choi(Common),
    /// The operator D_φ = Σ (1⊗Bᵢ) E (1⊗Aᵢ).
    Dphi(Common),
    /// The trace-dual map φ*(C) = Σ Bᵢ C Aᵢ, as a map file.
    Adjoint(Common),
    /// Five-way complete-positivity report.
    Cp {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        trials: usize,
    },
    /// Kraus operators from D_φ.
    Kraus {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Positivity certificate from product-state pairings with D_φ.
    Positive {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Confirm with the grid oracle (n = 2 only).
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 90)]
        resolution: usize,
    },
    /// Spectral decomposition T = Σ cⱼ SⱼESⱼ† of a self-adjoint element.
    Spectral {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = TOL_ALG)]
        tol: f64,
    },
}

/// Result of one CLI invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String, negative: bool, assert_verdict: bool) -> Self {
        let code = if negative && assert_verdict {
            EXIT_NEGATIVE
        } else {
            EXIT_OK
        };
        Self {
            code,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(code: i32, msg: impl std::fmt::Display) -> Self {
        Self {
            code,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        }
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::InternalDisagreement(_) => EXIT_DISAGREEMENT,
        _ => EXIT_INPUT,
    }
}

fn load(path: &std::path::Path) -> Result<MapFile, Outcome> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Outcome::fail(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    let file: MapFile = serde_json::from_str(&text)
        .map_err(|e| Outcome::fail(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    file.rep().map_err(|e| Outcome::fail(EXIT_INPUT, e))?;
    file.to_map().map_err(|e| Outcome::fail(EXIT_INPUT, e))?;
    Ok(file)
}

/// Parses `args` (including the program name) and runs one command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match execute(cli.command) {
        Ok(o) | Err(o) => o,
    }
}

fn execute(command: Command) -> Result<Outcome, Outcome> {
    let fail = |e: Error| Outcome::fail(error_code(&e), e);
    match command {
        Command::Choi(common) => {
            let file = load(&common.file)?;
            let phi = file.to_map().map_err(fail)?;
            let doc = MatrixDoc {
                command: "choi".into(),
                n: phi.n(),
                state: None,
                matrix: phi.choi(),
            };
            Ok(Outcome::ok(
                to_json(&doc, common.pretty),
                false,
                common.assert_verdict,
            ))
        }
        Command::Dphi(common) => {
            let file = load(&common.file)?;
            let rep = file.rep().map_err(fail)?;
            let phi = file.to_map().map_err(fail)?;
            let doc = MatrixDoc {
                command: "dphi".into(),
                n: phi.n(),
                state: Some(rep.state()),
                matrix: phi.dphi(&rep).map_err(fail)?,
            };
            Ok(Outcome::ok(
                to_json(&doc, common.pretty),
                false,
                common.assert_verdict,
            ))
        }
        Command::Adjoint(common) => {
            let file = load(&common.file)?;
            let phi = file.to_map().map_err(fail)?;
            let doc = AdjointDoc {
                command: "adjoint".into(),
                map: MapFile::from_map(&phi.adjoint(), file.state.clone()),
            };
            Ok(Outcome::ok(
                to_json(&doc, common.pretty),
                false,
                common.assert_verdict,
            ))
        }
        Command::Cp {
            common,
            tol,
            seed,
            trials,
        } => {
            let file = load(&common.file)?;
            let rep = file.rep().map_err(fail)?;
            let phi = file.to_map().map_err(fail)?;
            let report = is_cp(&phi, &rep, &CpConfig { tol, trials, seed }).map_err(fail)?;
            let negative = !report.cp;
            let doc = CpDoc {
                command: "cp".into(),
                report,
            };
            Ok(Outcome::ok(
                to_json(&doc, common.pretty),
                negative,
                common.assert_verdict,
            ))
        }
        Command::Kraus { common, tol } => {
            let file = load(&common.file)?;
            let rep = file.rep().map_err(fail)?;
            let phi = file.to_map().map_err(fail)?;
            let doc = match kraus_from_dphi(&phi, &rep, tol) {
                Ok(k) => KrausDoc {
                    command: "kraus".into(),
                    status: KrausStatus::Ok,
                    decomposition: Some(k),
                    min_eigenvalue: None,
                    reason: None,
                },
                Err(Error::NotPositive { min_eigenvalue }) => KrausDoc {
                    command: "kraus".into(),
                    status: KrausStatus::NotPositive,
                    decomposition: None,
                    min_eigenvalue: Some(min_eigenvalue),
                    reason: Some("D_phi has a negative eigenvalue".into()),
                },
                Err(Error::NotHermitian { .. }) => KrausDoc {
                    command: "kraus".into(),
                    status: KrausStatus::NotPositive,
                    decomposition: None,
                    min_eigenvalue: None,
                    reason: Some("D_phi is not Hermitian".into()),
                },
                Err(e) => return Err(fail(e)),
            };
            let negative = matches!(doc.status, KrausStatus::NotPositive);
            Ok(Outcome::ok(
                to_json(&doc, common.pretty),
                negative,
                common.assert_verdict,
            ))
        }
        Command::Positive {
            common,
            restarts,
            iters,
            tol,
            seed,
            oracle,
            resolution,
        } => {
            let file = load(&common.file)?;
            let rep = file.rep().map_err(fail)?;
            let phi = file.to_map().map_err(fail)?;
            let cfg = PositivityConfig {
                restarts,
                iters,
                tol,
                seed,
                oracle,
                resolution,
            };
            let certificate = is_positive_map(&phi, &rep, &cfg).map_err(fail)?;
            let negative = certificate.verdict == Verdict::NotPositive;
            let doc = PositiveDoc {
                command: "positive".into(),
                certificate,
            };
            Ok(Outcome::ok(
                to_json(&doc, common.pretty),
                negative,
                common.assert_verdict,
            ))
        }
        Command::Spectral { common, tol } => {
            let file = load(&common.file)?;
            let element = file.to_element().map_err(fail)?;
            let decomposition = element.spectral_decompose(tol).map_err(fail)?;
            let doc = SpectralDoc {
                command: "spectral".into(),
                decomposition,
            };
            Ok(Outcome::ok(
                to_json(&doc, common.pretty),
                false,
                common.assert_verdict,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_format() {
        let s = to_json(&vec![0.25, -0.0, 1.0 / 3.0, f64::NAN], false);
        assert_eq!(
            s,
            "[2.5000000000000000e-1,0.0000000000000000e0,3.3333333333333331e-1,null]\n"
        );
        let back: Vec<f64> = serde_json::from_str("[3.3333333333333331e-1]").unwrap();
        assert_eq!(back[0].to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn map_file_state_forms() {
        let text = r#"{"n":2,"terms":[{"A":[[[1,0],[0,0]],[[0,0],[1,0]]],"B":[[[1,0],[0,0]],[[0,0],[1,0]]]}]}"#;
        let f: MapFile = serde_json::from_str(text).unwrap();
        assert!(f.rep().unwrap().is_tracial());
        let text = r#"{"n":2,"terms":[],"state":{"weights":[1,3]}}"#;
        let f: MapFile = serde_json::from_str(text).unwrap();
        assert_eq!(f.rep().unwrap().weights(), &[0.25, 0.75]);
        let text = r#"{"n":2,"terms":[],"state":"tracial"}"#;
        let f: MapFile = serde_json::from_str(text).unwrap();
        assert!(f.rep().unwrap().is_tracial());
        assert!(serde_json::from_str::<MapFile>(r#"{"n":2,"terms":[],"state":"bogus"}"#).is_err());
    }

    #[test]
    fn ragged_matrix_rejected() {
        let text =
            r#"{"n":2,"terms":[{"A":[[[1,0]],[[0,0],[1,0]]],"B":[[[1,0],[0,0]],[[0,0],[1,0]]]}]}"#;
        assert!(serde_json::from_str::<MapFile>(text).is_err());
    }
}
