#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

/// Fixture files making up the golden corpus.
pub const CORPUS: [&str; 6] = [
    "identity",
    "transpose",
    "trace_map",
    "conjugation",
    "trace_minus_identity",
    "signed_kraus",
];

/// Commands (with flags) checked against golden output.
pub const GOLDEN_COMMANDS: [(&str, &[&str]); 4] = [
    ("cp", &[]),
    ("kraus", &[]),
    ("positive", &["--seed", "42"]),
    ("spectral", &[]),
];

/// Set to regenerate the golden files instead of comparing against them.
pub const UPDATE_ENV: &str = "CHOI_UPDATE_GOLDEN";

pub fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub fn fixture(name: &str) -> PathBuf {
    tests_dir().join("fixtures").join(format!("{name}.json"))
}

pub fn golden(name: &str, command: &str) -> PathBuf {
    tests_dir()
        .join("golden")
        .join(format!("{name}.{command}.json"))
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn choi(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_choi"))
        .args(args)
        .output()
        .expect("spawn choi");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

/// Runs every golden case; returns a description of each mismatch. With
/// `CHOI_UPDATE_GOLDEN` set, rewrites the files and reports nothing.
pub fn golden_mismatches() -> Vec<String> {
    let update = std::env::var_os(UPDATE_ENV).is_some();
    let mut bad = Vec::new();
    for name in CORPUS {
        let file = fixture(name);
        let file = file.to_str().expect("utf-8 path");
        for (command, flags) in GOLDEN_COMMANDS {
            let mut args = vec![command, file];
            args.extend_from_slice(flags);
            let run = choi(&args);
            if run.code != 0 {
                bad.push(format!(
                    "{name} {command}: exit {} ({})",
                    run.code,
                    run.stderr.trim()
                ));
                continue;
            }
            let path = golden(name, command);
            if update {
                std::fs::write(&path, &run.stdout).expect("write golden");
                continue;
            }
            match std::fs::read_to_string(&path) {
                Ok(expected) if expected == run.stdout => {}
                Ok(_) => bad.push(format!(
                    "{name} {command}: output differs from {}",
                    path.display()
                )),
                Err(e) => bad.push(format!("{name} {command}: {}: {e}", path.display())),
            }
        }
    }
    bad
}
