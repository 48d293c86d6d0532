mod common;

use choi_core::cli::{AdjointDoc, CpDoc, KrausDoc, MapFile, MatrixDoc, PositiveDoc, SpectralDoc};
use choi_core::positivity::Verdict;
use common::{choi, fixture};

fn path(name: &str) -> String {
    fixture(name).to_str().unwrap().to_owned()
}

#[test]
fn golden_outputs_match() {
    let bad = common::golden_mismatches();
    assert!(bad.is_empty(), "golden mismatches:\n{}", bad.join("\n"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [["positive", "--seed", "7"], ["cp", "--seed", "3"]] {
        let f = path("signed_kraus");
        let run = |threads: &str| {
            let out = std::process::Command::new(env!("CARGO_BIN_EXE_choi"))
                .args([args[0], f.as_str(), args[1], args[2]])
                .env("THREADS", threads)
                .output()
                .unwrap();
            out.stdout
        };
        let one = run("1");
        assert_eq!(one, run("4"));
        assert_eq!(one, run("1"));
    }
}

#[test]
fn cp_on_identity_all_true() {
    let run = choi(&["cp", &path("identity")]);
    assert_eq!(run.code, 0);
    let doc: CpDoc = serde_json::from_str(&run.stdout).unwrap();
    let c = &doc.report.conditions;
    assert!(doc.report.cp);
    assert!(c.completely_positive && c.extension_positive && c.kraus_form);
    assert!(c.dphi_positive && c.choi_positive);
}

#[test]
fn transpose_positive_but_not_cp_with_assert() {
    let f = path("transpose");
    let run = choi(&["positive", "--assert", &f]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let doc: PositiveDoc = serde_json::from_str(&run.stdout).unwrap();
    assert_eq!(doc.certificate.verdict, Verdict::Positive);

    let run = choi(&["cp", "--assert", &f]);
    assert_eq!(run.code, 3);
    let doc: CpDoc = serde_json::from_str(&run.stdout).unwrap();
    assert!(!doc.report.cp);

    assert_eq!(choi(&["cp", &f]).code, 0);
}

#[test]
fn kraus_assert_on_non_cp_exits_3() {
    let run = choi(&["kraus", "--assert", &path("trace_minus_identity")]);
    assert_eq!(run.code, 3);
    let doc: KrausDoc = serde_json::from_str(&run.stdout).unwrap();
    assert!((doc.min_eigenvalue.unwrap() + 0.75).abs() < 1e-12);
}

#[test]
fn positive_with_oracle_upgrades_method() {
    let run = choi(&["positive", "--oracle", &path("transpose")]);
    assert_eq!(run.code, 0);
    let doc: PositiveDoc = serde_json::from_str(&run.stdout).unwrap();
    assert!(!doc.certificate.heuristic);
    assert!(doc.certificate.oracle_value.unwrap().abs() < 1e-3);
}

#[test]
fn spectral_of_conjugation_is_single_item() {
    // The conjugation fixture is the element {(A, A†)} with A = V†.
    let f = path("conjugation");
    let file: MapFile = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    let rep = file.rep().unwrap();
    let a = &file.terms[0].a;
    let expected = rep.omega(&(a.adjoint() * a)).unwrap().re;

    let run = choi(&["spectral", &f]);
    assert_eq!(run.code, 0);
    let doc: SpectralDoc = serde_json::from_str(&run.stdout).unwrap();
    assert_eq!(doc.decomposition.items.len(), 1);
    assert!((doc.decomposition.items[0].c - expected).abs() < 1e-12);
}

#[test]
fn matrix_commands_reparse() {
    let f = path("trace_minus_identity");
    for command in ["choi", "dphi"] {
        let run = choi(&[command, &f, "--pretty"]);
        assert_eq!(run.code, 0);
        let doc: MatrixDoc = serde_json::from_str(&run.stdout).unwrap();
        assert_eq!(doc.command, command);
        assert_eq!(doc.matrix.nrows(), 4);
    }
    let run = choi(&["adjoint", &f]);
    assert_eq!(run.code, 0);
    let doc: AdjointDoc = serde_json::from_str(&run.stdout).unwrap();
    assert_eq!(doc.map.terms.len(), 5);
}

#[test]
fn every_command_output_reparses_exactly() {
    // 17 significant digits round-trip: re-serializing the parsed document
    // reproduces the bytes.
    for name in common::CORPUS {
        let f = path(name);
        let run = choi(&["positive", &f]);
        let doc: PositiveDoc = serde_json::from_str(&run.stdout).unwrap();
        assert_eq!(choi_core::cli::to_json(&doc, false), run.stdout);
        let run = choi(&["cp", &f]);
        let doc: CpDoc = serde_json::from_str(&run.stdout).unwrap();
        assert_eq!(choi_core::cli::to_json(&doc, false), run.stdout);
        let run = choi(&["kraus", &f]);
        let doc: KrausDoc = serde_json::from_str(&run.stdout).unwrap();
        assert_eq!(choi_core::cli::to_json(&doc, false), run.stdout);
        let run = choi(&["spectral", &f]);
        let doc: SpectralDoc = serde_json::from_str(&run.stdout).unwrap();
        assert_eq!(choi_core::cli::to_json(&doc, false), run.stdout);
    }
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_owned()
    };
    let cases = [
        write("garbage.json", "not json"),
        write(
            "dims.json",
            r#"{"n":2,"terms":[{"A":[[[1,0]]],"B":[[[1,0]]]}]}"#,
        ),
        write(
            "weights.json",
            r#"{"n":2,"terms":[],"state":{"weights":[1,-1]}}"#,
        ),
        write("n1.json", r#"{"n":1,"terms":[]}"#),
        dir.path().join("missing.json").to_str().unwrap().to_owned(),
    ];
    for f in &cases {
        let run = choi(&["cp", f]);
        assert_eq!(run.code, 2, "{f}");
        assert!(run.stdout.is_empty());
        assert!(run.stderr.starts_with("error:"), "{}", run.stderr);
    }
    assert_eq!(choi(&["frobnicate"]).code, 2);
}

#[test]
fn non_self_adjoint_element_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("e.json");
    std::fs::write(&p, r#"{"n":2,"terms":[{"A":[[[0,0],[1,0]],[[0,0],[0,0]]],"B":[[[1,0],[0,0]],[[0,0],[1,0]]]}]}"#).unwrap();
    let run = choi(&["spectral", p.to_str().unwrap()]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("self-adjoint"), "{}", run.stderr);
}

#[test]
fn weighted_state_is_honoured() {
    let run = choi(&["dphi", &path("conjugation_weighted")]);
    assert_eq!(run.code, 0);
    let doc: MatrixDoc = serde_json::from_str(&run.stdout).unwrap();
    assert!(doc.state.is_some());
    let run = choi(&["cp", &path("conjugation_weighted")]);
    assert_eq!(run.code, 0);
}
