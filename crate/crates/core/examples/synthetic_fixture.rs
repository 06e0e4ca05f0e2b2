//! Writes a synthetic dataset (SPEB embeddings, PNG masks, manifest.json).
//!
//!     cargo run -p selfprompt --example synthetic_fixture -- <dir> [samples] [seed]

use std::process::ExitCode;

use selfprompt::synthetic::{write_fixture, FixtureSpec};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(dir) = args.first() else {
        eprintln!("usage: synthetic_fixture <dir> [samples] [seed]");
        return ExitCode::from(2);
    };
    let mut spec = FixtureSpec::default();
    if let Some(n) = args.get(1).and_then(|s| s.parse().ok()) {
        spec.samples = n;
    }
    if let Some(s) = args.get(2).and_then(|s| s.parse().ok()) {
        spec.seed = s;
    }
    match write_fixture(dir, &spec) {
        Ok(m) => {
            println!("wrote {} samples to {dir}/manifest.json", m.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
