//! Benchmark harness for the proxcg solvers: config files, trace and summary
//! CSVs, time-to-target comparison and the self-test.

pub mod compare;
pub mod config;
pub mod run;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("traces: {0}")]
    Trace(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Trace(_) => 2,
            BenchError::Solver(_) | BenchError::Io(_) => 1,
        }
    }
}

/// Runs the built-in property checks, one line per check. Returns `true` iff all pass.
pub fn cmd_selftest(out: &mut impl std::io::Write) -> std::io::Result<bool> {
    let mut ok = true;
    for c in proxcg::selftest::run_all() {
        writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        ok &= c.passed;
    }
    Ok(ok)
}
